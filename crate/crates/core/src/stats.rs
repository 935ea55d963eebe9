//! Summary statistics, density histograms and empirical CDFs.
//!
//! All reductions run sequentially in input order so results are bit-for-bit
//! reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on automatically chosen bin counts.
const MAX_AUTO_BINS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "rule", content = "bins")]
pub enum Binning {
    #[default]
    FreedmanDiaconis,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `densities.len() + 1` ascending edges.
    pub edges: Vec<f64>,
    /// Probability density per bin; `Σ density · width = 1`.
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn integral(&self) -> f64 {
        self.densities.iter().zip(self.edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum()
    }

    /// Density histogram of `values` on fixed edges; values outside are dropped
    /// from the counts but still count in the normaliser.
    pub fn on_edges(values: &[f64], edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("histogram edges must be strictly increasing".into()));
        }
        if values.is_empty() {
            return Err(Error::EmptyRequest("histogram of no values"));
        }
        let mut counts = vec![0u64; edges.len() - 1];
        let lo = edges[0];
        let hi = *edges.last().unwrap();
        for &v in values {
            if v < lo || v > hi {
                continue;
            }
            // Last bin is closed on the right.
            let idx = edges.partition_point(|&e| e <= v).saturating_sub(1).min(counts.len() - 1);
            counts[idx] += 1;
        }
        let n = values.len() as f64;
        let densities = counts.iter().zip(edges.windows(2)).map(|(&c, e)| c as f64 / (n * (e[1] - e[0]))).collect();
        Ok(Self { edges, densities })
    }
}

/// Empirical CDF over the sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyRequest("ECDF of no values"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("NaN in sample".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Fraction of samples `≥ x`.
    pub fn survival(&self, x: f64) -> f64 {
        (self.sorted.len() - self.sorted.partition_point(|&v| v < x)) as f64 / self.sorted.len() as f64
    }

    /// Linear-interpolated quantile, `q ∈ [0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        quantile_sorted(&self.sorted, q)
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(&next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); zero for a single value.
    pub std: f64,
    /// Standard error of the mean, `std / sqrt(n)`.
    pub sem: f64,
    pub histogram: Histogram,
    #[serde(skip)]
    pub ecdf: Ecdf,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `(mean, sample std)` with a two-pass sum.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = mean(values);
    if values.len() < 2 {
        return (m, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (m, (ss / (values.len() - 1) as f64).sqrt())
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    summarize_with(values, Binning::FreedmanDiaconis)
}

pub fn summarize_with(values: &[f64], binning: Binning) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyRequest("summary of no samples"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample value".into()));
    }
    let (mean, std) = mean_std(values);
    let ecdf = Ecdf::new(values)?;
    let histogram = histogram_sorted(ecdf.sorted(), binning)?;
    Ok(Summary { n: values.len(), mean, std, sem: std / (values.len() as f64).sqrt(), histogram, ecdf })
}

pub fn histogram(values: &[f64], binning: Binning) -> Result<Histogram> {
    let ecdf = Ecdf::new(values)?;
    histogram_sorted(ecdf.sorted(), binning)
}

fn histogram_sorted(sorted: &[f64], binning: Binning) -> Result<Histogram> {
    let lo = sorted[0];
    let hi = *sorted.last().unwrap();
    let span = hi - lo;
    if span == 0.0 {
        let half = if lo == 0.0 { 0.5 } else { 0.5 * lo.abs() * 1e-6 };
        return Histogram::on_edges(sorted, vec![lo - half, lo + half]);
    }
    let bins = match binning {
        Binning::Fixed(0) => return Err(Error::InvalidParameter("bin count must be positive".into())),
        Binning::Fixed(b) => b,
        Binning::FreedmanDiaconis => {
            let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
            let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
            if width > 0.0 {
                ((span / width).ceil() as usize).clamp(1, MAX_AUTO_BINS)
            } else {
                // Degenerate IQR: fall back to Sturges.
                ((sorted.len() as f64).log2().ceil() as usize + 1).min(MAX_AUTO_BINS)
            }
        }
    };
    let step = span / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + step * i as f64).collect();
    edges.push(hi);
    Histogram::on_edges(sorted, edges)
}
