//! Productivity regression: design-matrix assembly, VIF-based covariate
//! elimination, the Inverse-Gaussian GLM, and response-distribution
//! screening.

mod glm;
pub mod invgauss;
mod screen;

pub use glm::{fit_inverse_gaussian_glm, fit_inverse_gaussian_glm_capped, GlmFit, Link};
pub use screen::{kolmogorov_distance, screen_distribution, DistributionFit, QqPoint, ScreenReport};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("response values must be positive")]
    NonPositiveResponse,
    #[error("design matrix is singular")]
    SingularDesign,
    #[error("design matrix needs at least {0} non-intercept columns")]
    TooFewColumns(usize),
    #[error("column {0} is constant")]
    ConstantColumn(String),
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
}

/// Columns-first regression design; the first column is the intercept.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    pub data: DMatrix<f64>,
}

impl DesignMatrix {
    /// Builds from named covariate columns, prepending the intercept.
    /// Constant covariates are rejected (the intercept covers them).
    pub fn from_columns(
        names: &[&str],
        columns: &[Vec<f64>],
        n_rows: usize,
    ) -> Result<Self, RegressError> {
        if names.len() != columns.len() {
            return Err(RegressError::Dimensions(
                "names and columns differ in length".into(),
            ));
        }
        for (name, col) in names.iter().zip(columns) {
            if col.len() != n_rows {
                return Err(RegressError::Dimensions(format!(
                    "column {name} has {} rows, expected {n_rows}",
                    col.len()
                )));
            }
            if n_rows > 0 && col.iter().all(|&x| x == col[0]) {
                return Err(RegressError::ConstantColumn(name.to_string()));
            }
        }
        let mut data = DMatrix::zeros(n_rows, columns.len() + 1);
        for i in 0..n_rows {
            data[(i, 0)] = 1.0;
        }
        for (j, col) in columns.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                data[(i, j + 1)] = x;
            }
        }
        let mut column_names = vec!["intercept".to_string()];
        column_names.extend(names.iter().map(|s| s.to_string()));
        Ok(Self { column_names, data })
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.data.column(j).into_owned()
    }

    /// A copy without the named column.
    pub fn drop_column(&self, name: &str) -> Self {
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&j| self.column_names[j] != name)
            .collect();
        let mut data = DMatrix::zeros(self.n_rows(), keep.len());
        for (new_j, &old_j) in keep.iter().enumerate() {
            data.set_column(new_j, &self.data.column(old_j));
        }
        Self {
            column_names: keep.iter().map(|&j| self.column_names[j].clone()).collect(),
            data,
        }
    }
}

/// Variance inflation factors and the order in which columns were removed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VifReport {
    pub threshold: f64,
    /// Final VIF of every retained non-intercept column.
    pub retained: Vec<(String, f64)>,
    /// (column, VIF at removal), in removal order. Unbounded VIFs are
    /// reported as infinity.
    pub removal_sequence: Vec<(String, f64)>,
}

/// VIF of one column against the others (with intercept), via least squares.
fn vif_of(design: &DesignMatrix, j: usize) -> f64 {
    let y = design.column(j);
    let keep: Vec<usize> = (0..design.n_cols()).filter(|&c| c != j).collect();
    let mut x = DMatrix::zeros(design.n_rows(), keep.len());
    for (new_c, &old_c) in keep.iter().enumerate() {
        x.set_column(new_c, &design.data.column(old_c));
    }
    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sst <= 0.0 {
        return f64::INFINITY;
    }
    let svd = x.clone().svd(true, true);
    let beta = match svd.solve(&y, 1e-12) {
        Ok(b) => b,
        Err(_) => return f64::INFINITY,
    };
    let residual = &y - &x * beta;
    let ssr: f64 = residual.iter().map(|r| r * r).sum();
    let r2 = (1.0 - ssr / sst).clamp(0.0, 1.0);
    if 1.0 - r2 < 1e-12 {
        f64::INFINITY
    } else {
        1.0 / (1.0 - r2)
    }
}

/// Iteratively removes the highest-VIF column exceeding `threshold` until
/// every retained covariate sits at or below it.
pub fn vif_prune(design: &DesignMatrix, threshold: f64) -> Result<(DesignMatrix, VifReport), RegressError> {
    if design.n_cols() < 3 {
        return Err(RegressError::TooFewColumns(2));
    }
    let mut current = design.clone();
    let mut removal_sequence = Vec::new();
    loop {
        let candidates: Vec<usize> = (1..current.n_cols()).collect();
        let vifs: Vec<(usize, f64)> = candidates.iter().map(|&j| (j, vif_of(&current, j))).collect();
        let worst = vifs
            .iter()
            .filter(|(_, v)| *v > threshold)
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .copied();
        match worst {
            Some((j, vif)) if current.n_cols() > 3 => {
                let name = current.column_names[j].clone();
                current = current.drop_column(&name);
                removal_sequence.push((name, vif));
            }
            Some((j, vif)) => {
                // removing would leave a single covariate; record and stop
                let name = current.column_names[j].clone();
                current = current.drop_column(&name);
                removal_sequence.push((name, vif));
                break;
            }
            None => break,
        }
    }
    let retained = (1..current.n_cols())
        .map(|j| (current.column_names[j].clone(), vif_of(&current, j)))
        .collect();
    Ok((
        current,
        VifReport {
            threshold,
            retained,
            removal_sequence,
        },
    ))
}
