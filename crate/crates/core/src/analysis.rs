//! Regression, standardization and cross-method ranking of devices.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::{Error, Result};

/// Least-squares line `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub intercept_a: f64,
    pub slope_b: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept_a + self.slope_b * x
    }
}

/// Ordinary least squares.
///
/// Sums are taken about the means, so collinear input is recovered to
/// rounding. When the data have no spread in `y` and fit exactly, `r²` is 1.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<RegressionFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, available: points.len() });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Config("regression input must be finite".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRegression);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &(x, y) in points {
        let r = y - (a + b * x);
        ss_res += r * r;
        ss_tot += (y - my) * (y - my);
    }
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(RegressionFit { intercept_a: a, slope_b: b, r_squared, n_points: points.len() })
}

/// Standard scores using the population standard deviation.
pub fn zscores(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, available: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = sqrt(var);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::ZeroVariance);
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    HigherIsBetter,
    LowerIsBetter,
}

/// Raw per-device values of one assessment method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScores {
    pub method: String,
    pub orientation: Orientation,
    pub values: Vec<(String, f64)>,
}

impl MethodScores {
    pub fn new(method: impl Into<String>, orientation: Orientation, values: Vec<(String, f64)>) -> Result<Self> {
        let method = method.into();
        if values.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, available: values.len() });
        }
        let mut seen = BTreeSet::new();
        for (device, value) in &values {
            if !value.is_finite() {
                return Err(Error::Config(alloc::format!("{method}: value for {device} is not finite")));
            }
            if !seen.insert(device.as_str()) {
                return Err(Error::Config(alloc::format!("{method}: device {device} listed twice")));
            }
        }
        Ok(Self { method, orientation, values })
    }

    fn value_of(&self, device: &str) -> Option<f64> {
        self.values.iter().find(|(d, _)| d == device).map(|&(_, v)| v)
    }
}

/// Flips lower-is-better methods so that a higher value always means less
/// motion blur.
pub fn orient(scores: &MethodScores) -> MethodScores {
    match scores.orientation {
        Orientation::HigherIsBetter => scores.clone(),
        Orientation::LowerIsBetter => MethodScores {
            method: scores.method.clone(),
            orientation: Orientation::HigherIsBetter,
            values: scores.values.iter().map(|(d, v)| (d.clone(), -v)).collect(),
        },
    }
}

/// One method's standardized column, aligned with [`ComparisonTable::devices`].
#[derive(Debug, Clone, PartialEq)]
pub struct MethodColumn {
    pub method: String,
    pub z: Vec<f64>,
    /// 1 is best (highest oriented z).
    pub rank: Vec<usize>,
    /// Set where the rank was decided by device name because z-scores tied.
    pub tied: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankCorrelation {
    pub left: String,
    pub right: String,
    pub spearman: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    /// Sorted.
    pub devices: Vec<String>,
    /// Sorted by method name.
    pub columns: Vec<MethodColumn>,
    /// Every pair of methods, in column order.
    pub correlations: Vec<RankCorrelation>,
    /// Devices dropped because not every method scored them.
    pub excluded: Vec<String>,
}

/// Standardizes and ranks methods that all score the same devices.
pub fn compare(methods: &[MethodScores]) -> Result<ComparisonTable> {
    let first = methods.first().ok_or(Error::Empty("method list"))?;
    let reference = device_set(first);
    for m in &methods[1..] {
        let other = device_set(m);
        if other != reference {
            return Err(Error::DeviceMismatch {
                only_left: reference.difference(&other).map(|s| String::from(*s)).collect(),
                only_right: other.difference(&reference).map(|s| String::from(*s)).collect(),
            });
        }
    }
    build(methods, reference.into_iter().map(String::from).collect(), Vec::new())
}

/// Like [`compare`] but restricted to devices every method scored; the
/// others are listed in [`ComparisonTable::excluded`].
pub fn compare_overlap(methods: &[MethodScores]) -> Result<ComparisonTable> {
    let first = methods.first().ok_or(Error::Empty("method list"))?;
    let mut common = device_set(first);
    let mut all = common.clone();
    for m in &methods[1..] {
        let set = device_set(m);
        common = common.intersection(&set).copied().collect();
        all.extend(set);
    }
    let excluded = all.difference(&common).map(|s| String::from(*s)).collect();
    build(methods, common.into_iter().map(String::from).collect(), excluded)
}

fn device_set(m: &MethodScores) -> BTreeSet<&str> {
    m.values.iter().map(|(d, _)| d.as_str()).collect()
}

fn build(methods: &[MethodScores], devices: Vec<String>, excluded: Vec<String>) -> Result<ComparisonTable> {
    if devices.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, available: devices.len() });
    }
    let mut columns = Vec::with_capacity(methods.len());
    for m in methods {
        let oriented = orient(m);
        let raw: Vec<f64> = devices
            .iter()
            .map(|d| oriented.value_of(d).expect("device present in every method"))
            .collect();
        let z = zscores(&raw)?;
        let (rank, tied) = rank_desc(&z);
        columns.push(MethodColumn { method: m.method.clone(), z, rank, tied });
    }
    columns.sort_by(|a, b| a.method.cmp(&b.method));
    if columns.windows(2).any(|w| w[0].method == w[1].method) {
        return Err(Error::Config("method names must be unique".into()));
    }
    let mut correlations = Vec::new();
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            correlations.push(RankCorrelation {
                left: columns[i].method.clone(),
                right: columns[j].method.clone(),
                spearman: spearman(&columns[i].z, &columns[j].z),
            });
        }
    }
    Ok(ComparisonTable { devices, columns, correlations, excluded })
}

/// Ranks in descending order; `values` are indexed by sorted device, so a
/// stable sort breaks ties by device name.
fn rank_desc(values: &[f64]) -> (Vec<usize>, Vec<bool>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut rank = alloc::vec![0; values.len()];
    let mut tied = alloc::vec![false; values.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    for w in order.windows(2) {
        if values[w[0]] == values[w[1]] {
            tied[w[0]] = true;
            tied[w[1]] = true;
        }
    }
    (rank, tied)
}

/// Average ranks (ties share the mean of their positions), ascending.
fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average ranks. NaN when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman inputs must have equal length");
    let rx = fractional_ranks(x);
    let ry = fractional_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / sqrt(sxx * syy)
}
