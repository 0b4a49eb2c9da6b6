//! acknet: builds an academic support network from dissertation
//! acknowledgement texts — extraction, preprocessing, provider detection,
//! provider embeddings, backbone and community analysis, sentiment, and
//! the accompanying statistical toolkit.

pub mod corpus;
pub mod embed;
pub mod entities;
pub mod graph;
pub mod pipeline;
pub mod regress;
pub mod sentiment;
pub mod stats;
pub mod synth;
pub mod textprep;
