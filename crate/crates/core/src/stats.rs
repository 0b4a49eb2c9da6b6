//! Statistical toolkit: seeded bootstrap estimates with percentile intervals,
//! Welch t-tests with starred significance, per-group min-max normalization,
//! Jensen-Shannon word shifts, Spearman rank correlation, Cohen's kappa, and
//! the adjusted Rand index used to score recovered partitions.

use std::collections::{BTreeMap, HashMap};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty group")]
    EmptyGroup,
    #[error("no word passes the frequency filter")]
    EmptyVocabulary,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// Bootstrap summary; `resample_means` is kept so downstream significance
/// tests can run on the resampled distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapEstimate {
    pub label: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_resamples: usize,
    pub sample_fraction: f64,
    pub resample_means: Vec<f64>,
}

/// Draws `n_resamples` with-replacement samples of size
/// `max(1, round(fraction * n))` and records each resample mean. Resample
/// RNGs are derived from `(seed, resample index)` so a parallel and a serial
/// run agree.
pub fn bootstrap_mean(
    label: &str,
    values: &[f64],
    n_resamples: usize,
    sample_fraction: f64,
    seed: u64,
) -> Result<BootstrapEstimate, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyGroup);
    }
    let resample_size = ((values.len() as f64 * sample_fraction).round() as usize).max(1);
    let mut resample_means = Vec::with_capacity(n_resamples);
    for i in 0..n_resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
        let mut sum = 0.0;
        for _ in 0..resample_size {
            sum += values[rng.random_range(0..values.len())];
        }
        resample_means.push(sum / resample_size as f64);
    }
    let mean = resample_means.iter().sum::<f64>() / n_resamples.max(1) as f64;
    let mut sorted = resample_means.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ci_low = percentile(&sorted, 0.025);
    let ci_high = percentile(&sorted, 0.975);
    Ok(BootstrapEstimate {
        label: label.to_string(),
        mean,
        ci_low,
        ci_high,
        n_resamples,
        sample_fraction,
        resample_means,
    })
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 over the pair
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Linear-interpolation percentile of pre-sorted values, q in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stars {
    #[serde(rename = "ns")]
    NotSignificant,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
}

impl Stars {
    pub fn from_p(p: f64) -> Stars {
        if p <= 0.001 {
            Stars::Three
        } else if p <= 0.01 {
            Stars::Two
        } else if p <= 0.05 {
            Stars::One
        } else {
            Stars::NotSignificant
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stars::NotSignificant => "ns",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

impl std::fmt::Display for Stars {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignificanceMark {
    pub p_value: f64,
    pub stars: Stars,
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
}

/// Two-tailed Welch t-test on two samples. Zero pooled variance degenerates
/// to p = 1 for equal means and p = 0 otherwise.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> SignificanceMark {
    let (ma, va, na) = mean_var(a);
    let (mb, vb, nb) = mean_var(b);
    let se2 = va / na + vb / nb;
    if se2 <= 0.0 || !se2.is_finite() {
        let p = if (ma - mb).abs() < f64::EPSILON { 1.0 } else { 0.0 };
        return SignificanceMark {
            p_value: p,
            stars: Stars::from_p(p),
            t_statistic: 0.0,
            degrees_of_freedom: (na + nb - 2.0).max(1.0),
        };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na) * (va / na) / (na - 1.0).max(1.0)
            + (vb / nb) * (vb / nb) / (nb - 1.0).max(1.0));
    let df = df.max(1.0);
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    let p = p.clamp(0.0, 1.0);
    SignificanceMark {
        p_value: p,
        stars: Stars::from_p(p),
        t_statistic: t,
        degrees_of_freedom: df,
    }
}

/// The comparison the paper runs: a Welch test over the two bootstrap
/// resample-mean vectors. Testing resampled means inflates significance;
/// callers wanting a plain test on raw values use `welch_t_test` directly.
pub fn compare_groups(a: &BootstrapEstimate, b: &BootstrapEstimate) -> SignificanceMark {
    welch_t_test(&a.resample_means, &b.resample_means)
}

fn mean_var(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() < 2 {
        0.0
    } else {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    };
    (mean, var, n)
}

/// Per-value result of group normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupNormalized {
    pub values: Vec<f64>,
    /// True where the value's group had fewer than two members or zero range.
    pub degenerate: Vec<bool>,
}

/// Min-max scales within each key group, then centers on the group mean.
/// Output lies in [-1, 1]; each non-degenerate group's mean is 0.
pub fn group_normalize<K: Ord + Clone>(values: &[f64], keys: &[K]) -> GroupNormalized {
    assert_eq!(values.len(), keys.len());
    let mut groups: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        groups.entry(k.clone()).or_default().push(i);
    }
    let mut out = vec![0.0; values.len()];
    let mut degenerate = vec![false; values.len()];
    for idxs in groups.values() {
        let lo = idxs.iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
        let hi = idxs
            .iter()
            .map(|&i| values[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if idxs.len() < 2 || hi - lo <= 0.0 {
            for &i in idxs {
                degenerate[i] = true;
            }
            continue;
        }
        let scaled: Vec<f64> = idxs.iter().map(|&i| (values[i] - lo) / (hi - lo)).collect();
        let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
        for (&i, s) in idxs.iter().zip(&scaled) {
            out[i] = s - mean;
        }
    }
    GroupNormalized {
        values: out,
        degenerate,
    }
}

/// One word's contribution to the Jensen-Shannon divergence between two
/// corpora.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordShift {
    pub word: String,
    pub jsd_contribution: f64,
    /// Which group uses the word more (by renormalized frequency).
    pub direction: ShiftDirection,
    pub p_a: f64,
    pub p_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftDirection {
    GroupA,
    GroupB,
}

/// Total JSD and the ranked per-word contributions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordShiftResult {
    pub total_jsd: f64,
    pub shifts: Vec<WordShift>,
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Base-2 Jensen-Shannon divergence between two distributions given as
/// aligned probability slices.
pub fn jsd(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut total = 0.0;
    for (&pw, &qw) in p.iter().zip(q) {
        let m = 0.5 * (pw + qw);
        total += -xlog2x(m) + 0.5 * (xlog2x(pw) + xlog2x(qw));
    }
    total.max(0.0)
}

/// Word-shift analysis between two token streams. Words qualifying for the
/// shared vocabulary need more than `min_count` occurrences in at least one
/// group; frequencies are renormalized over that vocabulary, so exclusive
/// words carry probability zero on the other side (0·log(1/0) := 0).
pub fn jsd_word_shift(
    tokens_a: &[String],
    tokens_b: &[String],
    min_count: usize,
) -> Result<WordShiftResult, StatsError> {
    fn count(tokens: &[String]) -> HashMap<&str, usize> {
        let mut c: HashMap<&str, usize> = HashMap::new();
        for t in tokens {
            *c.entry(t.as_str()).or_insert(0) += 1;
        }
        c
    }
    let ca = count(tokens_a);
    let cb = count(tokens_b);
    let mut vocab: Vec<&str> = ca
        .keys()
        .chain(cb.keys())
        .copied()
        .collect::<std::collections::BTreeSet<&str>>()
        .into_iter()
        .filter(|w| {
            ca.get(w).copied().unwrap_or(0) > min_count
                || cb.get(w).copied().unwrap_or(0) > min_count
        })
        .collect();
    vocab.sort_unstable();
    if vocab.is_empty() {
        return Err(StatsError::EmptyVocabulary);
    }
    let total_a: usize = vocab.iter().map(|w| ca.get(w).copied().unwrap_or(0)).sum();
    let total_b: usize = vocab.iter().map(|w| cb.get(w).copied().unwrap_or(0)).sum();
    if total_a == 0 || total_b == 0 {
        return Err(StatsError::EmptyVocabulary);
    }

    let mut shifts = Vec::with_capacity(vocab.len());
    let mut total = 0.0;
    for w in &vocab {
        let pa = ca.get(w).copied().unwrap_or(0) as f64 / total_a as f64;
        let pb = cb.get(w).copied().unwrap_or(0) as f64 / total_b as f64;
        let m = 0.5 * (pa + pb);
        let contribution = (-xlog2x(m) + 0.5 * (xlog2x(pa) + xlog2x(pb))).max(0.0);
        total += contribution;
        shifts.push(WordShift {
            word: w.to_string(),
            jsd_contribution: contribution,
            direction: if pa >= pb {
                ShiftDirection::GroupA
            } else {
                ShiftDirection::GroupB
            },
            p_a: pa,
            p_b: pb,
        });
    }
    shifts.sort_by(|a, b| {
        b.jsd_contribution
            .partial_cmp(&a.jsd_contribution)
            .unwrap()
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(WordShiftResult {
        total_jsd: total,
        shifts,
    })
}

/// Average ranks, with ties receiving the mean of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of average-rank vectors.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(StatsError::DegenerateInput(
            "need two equal-length samples".into(),
        ));
    }
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(xs) || constant(ys) {
        return Err(StatsError::DegenerateInput("constant input vector".into()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    Ok(pearson(&rx, &ry))
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Cohen's kappa for two equal-length categorical label vectors.
pub fn cohen_kappa<T: Eq + std::hash::Hash + Clone>(
    labels_a: &[T],
    labels_b: &[T],
) -> Result<f64, StatsError> {
    if labels_a.len() != labels_b.len() || labels_a.is_empty() {
        return Err(StatsError::DegenerateInput(
            "need two equal-length non-empty label vectors".into(),
        ));
    }
    let n = labels_a.len() as f64;
    let observed = labels_a
        .iter()
        .zip(labels_b)
        .filter(|(a, b)| a == b)
        .count() as f64
        / n;
    let mut ca: HashMap<&T, usize> = HashMap::new();
    let mut cb: HashMap<&T, usize> = HashMap::new();
    for (a, b) in labels_a.iter().zip(labels_b) {
        *ca.entry(a).or_insert(0) += 1;
        *cb.entry(b).or_insert(0) += 1;
    }
    let expected: f64 = ca
        .iter()
        .map(|(k, &na)| {
            let nb = cb.get(k).copied().unwrap_or(0);
            (na as f64 / n) * (nb as f64 / n)
        })
        .sum();
    if (1.0 - expected).abs() < 1e-15 {
        return Err(StatsError::DegenerateInput("chance agreement is 1".into()));
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Adjusted Rand index between two partitions given as aligned label vectors.
/// 1 means identical partitions; 0 is the chance level.
pub fn adjusted_rand_index<A, B>(labels_a: &[A], labels_b: &[B]) -> f64
where
    A: Eq + std::hash::Hash + Clone,
    B: Eq + std::hash::Hash + Clone,
{
    assert_eq!(labels_a.len(), labels_b.len());
    let n = labels_a.len();
    if n < 2 {
        return 1.0;
    }
    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    let mut index_a: HashMap<&A, usize> = HashMap::new();
    let mut index_b: HashMap<&B, usize> = HashMap::new();
    let mut rows: Vec<usize> = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    for (a, b) in labels_a.iter().zip(labels_b) {
        let next_a = index_a.len();
        let ia = *index_a.entry(a).or_insert(next_a);
        let next_b = index_b.len();
        let ib = *index_b.entry(b).or_insert(next_b);
        if ia >= rows.len() {
            rows.push(0);
        }
        if ib >= cols.len() {
            cols.push(0);
        }
        rows[ia] += 1;
        cols[ib] += 1;
        *table.entry((ia, ib)).or_insert(0) += 1;
    }
    let sum_cells: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = rows.iter().map(|&c| choose2(c)).sum();
    let sum_cols: f64 = cols.iter().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-15 {
        return 1.0;
    }
    (sum_cells - expected) / (max_index - expected)
}
