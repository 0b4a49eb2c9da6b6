//! Synthetic corpus generator. Plants provider mentions with per-community
//! frequencies, context vocabularies, positions, sentiment word choices,
//! demographics, and publication counts, and writes the ground truth that
//! the pipeline's recovery is scored against. Ground-truth sentiment values
//! are computed from the generator's own draws (`2.5 * (1 + mean valence)`),
//! not by calling the scoring code.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DocumentRecord, Gender};
use crate::regress::invgauss;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One community's generation plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommunityPlan {
    /// Community label; must match a lexicon community for scoring.
    pub name: String,
    /// Lexicon terms, conjoined form for multiword entries.
    pub providers: Vec<String>,
    /// Context vocabulary; must be normalization-stable non-lexicon words.
    pub context_words: Vec<String>,
    /// Sentiment-bearing words with the valences the bundled lexicon assigns.
    pub valence_words: Vec<(String, f64)>,
    /// Poisson mean of mention count per document.
    pub mentions_per_doc: f64,
    /// Beta(a, b) parameters for where in the text mentions land.
    pub position_beta: (f64, f64),
}

/// Planted regression structure for publication counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionPlan {
    pub intercept: f64,
    pub gender_male: f64,
    /// Log-mean shifts per discipline, bio_health as the zero reference.
    pub discipline_effects: BTreeMap<String, f64>,
    pub academic_count_effect: f64,
    /// Log-mean bonus for the best-ranked university, fading linearly to its
    /// negative for the worst.
    pub rank_bonus: f64,
    pub shape_lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_documents: usize,
    pub communities: Vec<CommunityPlan>,
    /// (female, male, unknown) shares; must sum to 1.
    pub gender_mix: (f64, f64, f64),
    pub female_names: Vec<String>,
    pub male_names: Vec<String>,
    pub ambiguous_names: Vec<String>,
    pub surnames: Vec<String>,
    pub disciplines: Vec<(String, f64, Vec<String>)>,
    pub universities: Vec<String>,
    pub year_range: (i32, i32),
    pub filler_words: Vec<String>,
    pub filler_sentences_per_doc: (usize, usize),
    pub regression: RegressionPlan,
    /// Split acknowledgement bodies longer than this many characters onto a
    /// second page (exercises the extractor's continuation rule).
    pub page_split_chars: usize,
}

/// What was actually planted, for scoring recovery.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GroundTruth {
    pub seed: u64,
    pub n_documents: usize,
    /// provider -> community name.
    pub provider_community: BTreeMap<String, String>,
    /// community -> Poisson mean parameter.
    pub planted_mention_means: BTreeMap<String, f64>,
    /// community -> realized mentions per document.
    pub realized_mention_means: BTreeMap<String, f64>,
    /// community -> mean of planted sentence scores over its mentions.
    pub realized_sentiment_means: BTreeMap<String, f64>,
    /// provider -> total planted mentions.
    pub provider_counts: BTreeMap<String, usize>,
    pub gender_counts: BTreeMap<String, usize>,
    pub regression: Option<RegressionPlan>,
    /// per-document planted mention counts by community, keyed by doc id.
    pub doc_mention_counts: BTreeMap<String, BTreeMap<String, u32>>,
}

struct SentencePlan {
    position: f64,
    tokens: Vec<String>,
}

const CONNECTIVES: [&str; 13] = [
    "my", "the", "for", "and", "with", "to", "of", "in", "a", "we", "i", "was", "so",
];

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let (f, m, u) = self.gender_mix;
        if (f + m + u - 1.0).abs() > 1e-9 || f < 0.0 || m < 0.0 || u < 0.0 {
            return Err(SynthError::InvalidSpec("gender mix must sum to 1".into()));
        }
        if self.communities.is_empty() {
            return Err(SynthError::InvalidSpec("no communities".into()));
        }
        for c in &self.communities {
            if c.providers.is_empty() || c.context_words.is_empty() {
                return Err(SynthError::InvalidSpec(format!(
                    "community {} needs providers and context words",
                    c.name
                )));
            }
            if c.mentions_per_doc < 0.0 {
                return Err(SynthError::InvalidSpec("negative mention mean".into()));
            }
        }
        if self.disciplines.is_empty() || self.universities.is_empty() {
            return Err(SynthError::InvalidSpec(
                "need disciplines and universities".into(),
            ));
        }
        Ok(())
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn raw_sentence(rng: &mut ChaCha8Rng, tokens: &[String]) -> String {
    let mut words: Vec<String> = Vec::with_capacity(tokens.len() * 2 + 2);
    words.push(pick(rng, &CONNECTIVES).to_string());
    for t in tokens {
        // multiword providers are written with spaces, as in real text
        words.push(t.replace('_', " "));
        if rng.random::<f64>() < 0.35 {
            words.push(pick(rng, &CONNECTIVES).to_string());
        }
    }
    let mut raw = words.join(" ");
    let mut chars = raw.chars();
    if let Some(first) = chars.next() {
        raw = first.to_uppercase().collect::<String>() + chars.as_str();
    }
    raw.push('.');
    raw
}

/// Generates the corpus and its ground truth. Deterministic in (spec, seed).
pub fn generate(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<(Vec<DocumentRecord>, GroundTruth), SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = GroundTruth {
        seed,
        n_documents: spec.n_documents,
        regression: Some(spec.regression.clone()),
        ..Default::default()
    };
    for c in &spec.communities {
        truth
            .planted_mention_means
            .insert(c.name.clone(), c.mentions_per_doc);
        for p in &c.providers {
            truth.provider_community.insert(p.clone(), c.name.clone());
        }
    }

    let mut mention_tally: BTreeMap<String, usize> = BTreeMap::new();
    let mut sentiment_sum: BTreeMap<String, f64> = BTreeMap::new();

    let disc_total: f64 = spec.disciplines.iter().map(|(_, w, _)| w).sum();
    let n_universities = spec.universities.len();

    let mut docs = Vec::with_capacity(spec.n_documents);
    for doc_index in 0..spec.n_documents {
        let doc_id = format!("doc{doc_index:05}");

        // demographics
        let (gender, first_name) = {
            let r: f64 = rng.random();
            let (f, m, _) = spec.gender_mix;
            if r < f {
                (Gender::Female, pick(&mut rng, &spec.female_names).clone())
            } else if r < f + m {
                (Gender::Male, pick(&mut rng, &spec.male_names).clone())
            } else {
                (Gender::Unknown, pick(&mut rng, &spec.ambiguous_names).clone())
            }
        };
        *truth.gender_counts.entry(gender.to_string()).or_insert(0) += 1;
        let author_name = format!(
            "{} {}",
            capitalize(&first_name),
            capitalize(pick(&mut rng, &spec.surnames))
        );

        let (discipline_name, subjects) = {
            let mut r: f64 = rng.random::<f64>() * disc_total;
            let mut chosen = &spec.disciplines[0];
            for d in &spec.disciplines {
                if r < d.1 {
                    chosen = d;
                    break;
                }
                r -= d.1;
            }
            let mut subjects = Vec::new();
            subjects.push(pick(&mut rng, &chosen.2).clone());
            let second = pick(&mut rng, &chosen.2).clone();
            if second != subjects[0] {
                subjects.push(second);
            }
            (chosen.0.clone(), subjects)
        };

        let uni_index = rng.random_range(0..n_universities);
        let university = spec.universities[uni_index].clone();
        let year = rng.random_range(spec.year_range.0..=spec.year_range.1);

        // sentence plans
        let mut plans: Vec<SentencePlan> = Vec::new();
        let mut doc_counts: BTreeMap<String, u32> = BTreeMap::new();
        for community in spec.communities.iter() {
            let n_mentions = if community.mentions_per_doc > 0.0 {
                Poisson::new(community.mentions_per_doc)
                    .map_err(|e| SynthError::InvalidSpec(e.to_string()))?
                    .sample(&mut rng) as usize
            } else {
                0
            };
            let beta = Beta::new(community.position_beta.0, community.position_beta.1)
                .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
            for _ in 0..n_mentions {
                let provider = pick(&mut rng, &community.providers).clone();
                let n_ctx = rng.random_range(4..=7);
                let mut tokens: Vec<String> = (0..n_ctx)
                    .map(|_| pick(&mut rng, &community.context_words).clone())
                    .collect();
                let mut score = None;
                if !community.valence_words.is_empty() {
                    let n_val = rng.random_range(1..=2usize);
                    let mut valence_sum = 0.0;
                    for _ in 0..n_val {
                        let (word, valence) = pick(&mut rng, &community.valence_words);
                        tokens.push(word.clone());
                        valence_sum += valence;
                    }
                    score = Some(2.5 * (1.0 + valence_sum / n_val as f64));
                }
                let slot = rng.random_range(0..=tokens.len());
                tokens.insert(slot, provider.clone());
                plans.push(SentencePlan {
                    position: beta.sample(&mut rng),
                    tokens,
                });
                *mention_tally.entry(community.name.clone()).or_insert(0) += 1;
                *truth.provider_counts.entry(provider).or_insert(0) += 1;
                *doc_counts.entry(community.name.clone()).or_insert(0) += 1;
                if let Some(s) = score {
                    *sentiment_sum.entry(community.name.clone()).or_insert(0.0) += s;
                }
            }
        }
        let n_filler = rng
            .random_range(spec.filler_sentences_per_doc.0..=spec.filler_sentences_per_doc.1);
        for _ in 0..n_filler {
            let n = rng.random_range(4..=8);
            let tokens = (0..n)
                .map(|_| pick(&mut rng, &spec.filler_words).clone())
                .collect();
            plans.push(SentencePlan {
                position: rng.random(),
                tokens,
            });
        }
        plans.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
        truth.doc_mention_counts.insert(doc_id.clone(), doc_counts);

        // assemble pages
        let sentences: Vec<String> = plans
            .iter()
            .map(|p| raw_sentence(&mut rng, &p.tokens))
            .collect();
        let body = sentences.join(" ");
        let mut pages = Vec::new();
        if rng.random::<f64>() < 0.5 {
            pages.push("Abstract\nThis dissertation studies a synthetic corpus.".to_string());
        }
        // Long bodies spill onto a second page. The first page must clearly
        // exceed the extractor's continuation threshold (1100 chars) or the
        // tail would be unreachable.
        const FIRST_PAGE_MIN: usize = 1200;
        let mut split_at = None;
        if body.chars().count() > spec.page_split_chars && sentences.len() > 4 {
            let mut acc = 0usize;
            for (i, s) in sentences.iter().enumerate() {
                acc += s.chars().count() + 1;
                if acc > FIRST_PAGE_MIN {
                    if i + 1 < sentences.len() {
                        split_at = Some(i + 1);
                    }
                    break;
                }
            }
        }
        match split_at {
            Some(k) => {
                let first = sentences[..k].join(" ");
                let second = sentences[k..].join(" ");
                pages.push(format!("Acknowledgements\n{first}"));
                pages.push(second);
            }
            None => pages.push(format!("Acknowledgements\n{body}")),
        }
        pages.push("Chapter 1\nIntroduction of the synthetic dissertation.".to_string());

        // planted publication counts
        let academic_mentions = truth.doc_mention_counts[&doc_id]
            .get("academic")
            .copied()
            .unwrap_or(0) as f64;
        let plan = &spec.regression;
        let rank_fraction = if n_universities > 1 {
            uni_index as f64 / (n_universities - 1) as f64
        } else {
            0.0
        };
        let mut eta = plan.intercept
            + if gender == Gender::Male { plan.gender_male } else { 0.0 }
            + plan
                .discipline_effects
                .get(&discipline_name)
                .copied()
                .unwrap_or(0.0)
            + plan.academic_count_effect * academic_mentions
            + plan.rank_bonus * (1.0 - 2.0 * rank_fraction);
        eta = eta.clamp(-3.0, 5.0);
        let latent = invgauss::sample(&mut rng, eta.exp(), plan.shape_lambda);
        let pub_count = latent.round().clamp(0.0, 60.0) as usize;
        let pub_years: Vec<i32> = (0..pub_count)
            .map(|_| year + rng.random_range(-4..=4))
            .collect();

        docs.push(DocumentRecord {
            id: doc_id,
            pages,
            author_name,
            university,
            year,
            subjects,
            advisor: None,
            pub_years,
        });
    }

    for c in &spec.communities {
        let tally = mention_tally.get(&c.name).copied().unwrap_or(0);
        if spec.n_documents > 0 {
            truth
                .realized_mention_means
                .insert(c.name.clone(), tally as f64 / spec.n_documents as f64);
        }
        if tally > 0 {
            if let Some(sum) = sentiment_sum.get(&c.name) {
                truth
                    .realized_sentiment_means
                    .insert(c.name.clone(), sum / tally as f64);
            }
        }
    }
    Ok((docs, truth))
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

pub fn write_ground_truth(path: &Path, truth: &GroundTruth) -> Result<(), SynthError> {
    let json = serde_json::to_string_pretty(truth).expect("ground truth serializes");
    std::fs::write(path, json).map_err(|source| SynthError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth, SynthError> {
    let raw = std::fs::read_to_string(path).map_err(|source| SynthError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&raw).map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

fn strs(words: &[&str]) -> Vec<String> {
    words.iter().map(|s| s.to_string()).collect()
}

/// The bundled five-community corpus plan. Providers come from the shipped
/// lexicon, context vocabularies are disjoint across communities, valence
/// words carry the valences in `data/valence.csv`, and planted mention means
/// follow the same ordering the study reports.
pub fn default_spec(n_documents: usize) -> SyntheticSpec {
    let communities = vec![
        CommunityPlan {
            name: "academic".into(),
            providers: strs(&["advisor", "mentor", "supervisor", "committee_member", "researcher"]),
            context_words: strs(&[
                "research",
                "guidance",
                "dissertation",
                "feedback",
                "manuscript",
                "insight",
                "expertise",
                "rigor",
                "seminar",
                "draft",
                "method",
                "analysis",
            ]),
            valence_words: vec![
                ("appreciate".into(), 0.7),
                ("insightful".into(), 0.65),
                ("invaluable".into(), 0.75),
            ],
            mentions_per_doc: 9.0,
            position_beta: (1.3, 2.6),
        },
        CommunityPlan {
            name: "administration".into(),
            providers: strs(&["dean", "staff", "university", "department", "librarian"]),
            context_words: strs(&[
                "office",
                "grant",
                "budget",
                "paperwork",
                "deadline",
                "policy",
                "procedure",
                "workspace",
                "permit",
                "desk",
                "archive",
                "protocol",
            ]),
            valence_words: vec![
                ("helpful".into(), 0.6),
                ("generous".into(), 0.7),
                ("appreciation".into(), 0.7),
            ],
            mentions_per_doc: 6.8,
            position_beta: (2.2, 2.2),
        },
        CommunityPlan {
            name: "family".into(),
            providers: strs(&["mother", "father", "sister", "brother", "husband"]),
            context_words: strs(&[
                "dinner",
                "weekend",
                "childhood",
                "kitchen",
                "holiday",
                "reunion",
                "garden",
                "visit",
                "phone",
                "bedtime",
                "meal",
                "hug",
            ]),
            valence_words: vec![
                ("love".into(), 0.9),
                ("unconditional".into(), 0.7),
                ("warmth".into(), 0.6),
            ],
            mentions_per_doc: 5.4,
            position_beta: (2.8, 1.3),
        },
        CommunityPlan {
            name: "friends_colleagues".into(),
            providers: strs(&["friend", "colleague", "labmate", "roommate"]),
            context_words: strs(&[
                "coffee",
                "lunch",
                "conference",
                "game",
                "movie",
                "trip",
                "adventure",
                "banter",
                "football",
                "beer",
                "pizza",
                "hangout",
            ]),
            valence_words: vec![
                ("friendship".into(), 0.7),
                ("joy".into(), 0.85),
                ("fun".into(), 0.6),
            ],
            mentions_per_doc: 4.2,
            position_beta: (2.4, 2.0),
        },
        CommunityPlan {
            name: "spiritual".into(),
            providers: strs(&["god", "church", "pastor"]),
            context_words: strs(&[
                "prayer",
                "worship",
                "sermon",
                "scripture",
                "hymn",
                "altar",
                "sanctuary",
                "gospel",
                "psalm",
                "verse",
                "chapel",
                "sabbath",
            ]),
            valence_words: vec![
                ("grace".into(), 0.75),
                ("faith".into(), 0.7),
                ("bless".into(), 0.8),
            ],
            mentions_per_doc: 2.0,
            position_beta: (0.7, 0.7),
        },
    ];

    SyntheticSpec {
        n_documents,
        communities,
        gender_mix: (0.42, 0.48, 0.10),
        female_names: strs(&[
            "maria", "sarah", "emily", "jennifer", "jessica", "elizabeth", "hannah", "rachel",
            "laura", "anna", "sofia", "olivia", "grace", "chloe", "priya", "fatima", "aisha",
        ]),
        male_names: strs(&[
            "james", "john", "michael", "david", "daniel", "matthew", "andrew", "joseph",
            "william", "carlos", "ahmed", "omar", "ivan", "pedro", "samuel", "thomas",
        ]),
        ambiguous_names: strs(&[
            "alex", "casey", "quinn", "rowan", "taylor", "riley", "sage", "robin", "skyler",
            "zhenya",
        ]),
        surnames: strs(&[
            "anders", "okafor", "tanaka", "mills", "rivera", "novak", "haddad", "lindgren",
            "castillo", "moreau", "banerjee", "kovacs",
        ]),
        disciplines: vec![
            (
                "bio_health".into(),
                0.22,
                strs(&[
                    "nursing",
                    "public health",
                    "genetics",
                    "neurosciences",
                    "immunology",
                    "epidemiology",
                ]),
            ),
            (
                "life_earth".into(),
                0.16,
                strs(&[
                    "ecology",
                    "geology",
                    "chemistry",
                    "forestry",
                    "meteorology",
                    "biochemistry",
                ]),
            ),
            (
                "math_comp".into(),
                0.14,
                strs(&[
                    "computer science",
                    "mathematics",
                    "statistics",
                    "artificial intelligence",
                    "bioinformatics",
                    "information science",
                ]),
            ),
            (
                "phys_eng".into(),
                0.18,
                strs(&[
                    "physics",
                    "electrical engineering",
                    "mechanical engineering",
                    "optics",
                    "astronomy",
                    "robotics",
                ]),
            ),
            (
                "soc_hum".into(),
                0.30,
                strs(&[
                    "psychology",
                    "sociology",
                    "economics",
                    "linguistics",
                    "philosophy",
                    "religion",
                ]),
            ),
        ],
        universities: strs(&[
            "Harborview University",
            "Grandstone Institute of Technology",
            "Lakeshore State University",
            "Northpine University",
            "University of Redcliff",
            "Midvale Polytechnic University",
            "Eastbrook University",
            "University of Southmoor",
            "Claywood State University",
            "Westfall College",
            "University of Brackenridge",
            "Halloran Valley University",
        ]),
        year_range: (2004, 2019),
        filler_words: strs(&[
            "journey",
            "milestone",
            "effort",
            "process",
            "experience",
            "moment",
            "memory",
            "path",
            "goal",
            "dream",
            "lesson",
            "growth",
        ]),
        filler_sentences_per_doc: (3, 6),
        regression: RegressionPlan {
            intercept: 1.5,
            gender_male: 0.15,
            discipline_effects: [
                ("bio_health".to_string(), 0.0),
                ("life_earth".to_string(), -0.1),
                ("math_comp".to_string(), 0.0),
                ("phys_eng".to_string(), 0.25),
                ("soc_hum".to_string(), -0.4),
            ]
            .into(),
            academic_count_effect: 0.01,
            rank_bonus: 0.2,
            shape_lambda: 30.0,
        },
        page_split_chars: 1400,
    }
}

/// A two-community plan used by the embedding separation checks: two
/// academic-style providers against two family-style providers, disjoint
/// context vocabularies, no valence words.
pub fn two_cluster_spec(n_documents: usize) -> SyntheticSpec {
    let mut spec = default_spec(n_documents);
    spec.communities = vec![
        CommunityPlan {
            name: "academic".into(),
            providers: strs(&["advisor", "mentor"]),
            context_words: spec.communities[0].context_words.clone(),
            valence_words: vec![],
            mentions_per_doc: 5.0,
            position_beta: (1.5, 2.0),
        },
        CommunityPlan {
            name: "family".into(),
            providers: strs(&["mother", "father"]),
            context_words: spec.communities[2].context_words.clone(),
            valence_words: vec![],
            mentions_per_doc: 5.0,
            position_beta: (2.0, 1.5),
        },
    ];
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::entities::{Community, ProviderLexicon};
    use crate::sentiment::ValenceLexicon;
    use crate::textprep::{Lemmatizer, StopwordSet};
    use std::path::PathBuf;

    fn data_path(name: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
    }

    #[test]
    fn deterministic_generation() {
        let spec = default_spec(20);
        let (a, _) = generate(&spec, 7).unwrap();
        let (b, _) = generate(&spec, 7).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn empty_corpus_is_valid() {
        let spec = default_spec(0);
        let (docs, truth) = generate(&spec, 1).unwrap();
        assert!(docs.is_empty());
        assert_eq!(truth.n_documents, 0);
        assert!(truth.realized_mention_means.is_empty());
        // ground truth still names every provider's community
        assert!(!truth.provider_community.is_empty());
    }

    #[test]
    fn every_provider_in_ground_truth_with_its_community() {
        let spec = default_spec(5);
        let (_, truth) = generate(&spec, 3).unwrap();
        for c in &spec.communities {
            for p in &c.providers {
                assert_eq!(truth.provider_community.get(p), Some(&c.name));
            }
        }
    }

    #[test]
    fn planted_means_match_realized_for_large_n() {
        let spec = default_spec(2000);
        let (_, truth) = generate(&spec, 11).unwrap();
        for c in &spec.communities {
            let realized = truth.realized_mention_means[&c.name];
            assert!(
                (realized - c.mentions_per_doc).abs() < 0.2,
                "{}: realized {realized} vs planted {}",
                c.name,
                c.mentions_per_doc
            );
        }
    }

    #[test]
    fn generator_vocabulary_is_pipeline_stable() {
        // every planted word must survive normalization unchanged, stay out
        // of the stopword list, and avoid colliding with lexicon terms or
        // unplanned valence entries
        let spec = default_spec(1);
        let stopwords = StopwordSet::from_file(&data_path("stopwords.txt")).unwrap();
        let lexicon = ProviderLexicon::from_csv(&data_path("lexicon.csv")).unwrap();
        let valence = ValenceLexicon::from_csv(&data_path("valence.csv")).unwrap();
        let lemmatizer = Lemmatizer::from_file(&data_path("lemma_rules.txt")).unwrap();

        let mut planted_words: Vec<(String, bool)> = Vec::new(); // (word, is_valence)
        for c in &spec.communities {
            for w in &c.context_words {
                planted_words.push((w.clone(), false));
            }
            for (w, _) in &c.valence_words {
                planted_words.push((w.clone(), true));
            }
        }
        for w in &spec.filler_words {
            planted_words.push((w.clone(), false));
        }
        for (w, is_valence) in &planted_words {
            assert_eq!(&lemmatizer.lemmatize(w), w, "{w} not lemma-stable");
            assert!(!stopwords.contains(w), "{w} is a stopword");
            assert!(lexicon.lookup(w).is_none(), "{w} collides with the lexicon");
            if *is_valence {
                assert!(valence.valence(w).is_some(), "{w} missing from valence.csv");
            } else {
                assert!(valence.valence(w).is_none(), "{w} is unexpectedly valenced");
            }
        }
        // planted valences must match the shipped file exactly
        for c in &spec.communities {
            for (w, v) in &c.valence_words {
                assert_eq!(valence.valence(w), Some(*v), "{w} valence drifted");
            }
        }
        // providers must be real lexicon terms in the planted community
        for c in &spec.communities {
            let community = Community::parse(&c.name).unwrap();
            for p in &c.providers {
                let (_, found) = lexicon.lookup(p).unwrap_or_else(|| panic!("{p} not in lexicon"));
                assert_eq!(found, community, "{p} planted in the wrong community");
            }
        }
    }

    #[test]
    fn documents_extract_and_have_metadata() {
        let spec = default_spec(30);
        let (docs, _) = generate(&spec, 13).unwrap();
        assert_eq!(docs.len(), 30);
        for doc in &docs {
            let ack = corpus::extract_acknowledgement(doc, 1100).unwrap();
            assert!(ack.text.to_lowercase().starts_with("acknowledgements"));
            assert!(!doc.subjects.is_empty());
            assert!((2004..=2019).contains(&doc.year));
            // publication years always inside the +-4 window
            for y in &doc.pub_years {
                assert!((doc.year - 4..=doc.year + 4).contains(y));
            }
        }
    }

    #[test]
    fn ground_truth_round_trips() {
        let spec = default_spec(8);
        let (_, truth) = generate(&spec, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.json");
        write_ground_truth(&path, &truth).unwrap();
        let back = read_ground_truth(&path).unwrap();
        assert_eq!(back.provider_community, truth.provider_community);
        assert_eq!(back.n_documents, truth.n_documents);
    }

    #[test]
    fn bad_mixture_rejected() {
        let mut spec = default_spec(2);
        spec.gender_mix = (0.9, 0.3, 0.1);
        assert!(matches!(
            generate(&spec, 1),
            Err(SynthError::InvalidSpec(_))
        ));
    }
}
