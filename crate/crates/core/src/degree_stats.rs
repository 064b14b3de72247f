//! Cumulative degree distributions, multiplicative binning and
//! least-squares fits compared by their F statistic.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, Direction, EdgeKind};

/// `p` is the fraction of nodes (with degree >= 1) whose degree is at least `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativePoint {
    pub k: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `ln y = intercept + slope * x`
    Exponential,
    /// `ln y = intercept + slope * ln x`
    PowerLaw,
    /// `y = intercept + slope * x`
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `r²(n−2)/(1−r²)`; infinite for a perfect fit (serialised as `null`).
    pub f_stat: f64,
    pub df: (usize, usize),
    pub p_value: f64,
    pub n: usize,
}

/// Cumulative distribution of `kind`/`direction` degrees over nodes with
/// degree >= 1, one point per observed degree value.
pub fn cumulative_degree_distribution(
    graph: &DependencyGraph,
    kind: EdgeKind,
    direction: Direction,
) -> Result<Vec<CumulativePoint>> {
    let degrees: Vec<usize> = graph
        .nodes()
        .map(|n| graph.degree_of(n, kind, direction))
        .filter(|&d| d > 0)
        .collect();
    cumulative_from_degrees(&degrees)
}

/// Same as [`cumulative_degree_distribution`] for an explicit degree list;
/// zero entries are ignored.
pub fn cumulative_from_degrees(degrees: &[usize]) -> Result<Vec<CumulativePoint>> {
    let mut sorted: Vec<usize> = degrees.iter().copied().filter(|&d| d > 0).collect();
    if sorted.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    sorted.sort_unstable();
    let total = sorted.len() as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let k = sorted[i];
        points.push(CumulativePoint {
            k: k as f64,
            p: (sorted.len() - i) as f64 / total,
        });
        while i < sorted.len() && sorted[i] == k {
            i += 1;
        }
    }
    Ok(points)
}

/// A binned point together with its bin index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinnedPoint {
    pub bin: i32,
    pub k: f64,
    pub p: f64,
}

fn bin_index(k: f64, base: f64) -> i32 {
    let mut b = (k.ln() / base.ln()).floor() as i32;
    while base.powi(b) > k {
        b -= 1;
    }
    while base.powi(b + 1) <= k {
        b += 1;
    }
    b
}

/// Group points into bins `[base^b, base^(b+1))`. Each bin is represented by
/// the geometric mean of its bounds and the mean `p` of its members; empty
/// bins are omitted.
pub fn multiplicative_bin(points: &[CumulativePoint], base: f64) -> Result<Vec<BinnedPoint>> {
    if !(base > 1.0) || !base.is_finite() {
        return Err(Error::InvalidArgument(format!("bin base must be > 1, got {base}")));
    }
    if points.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.k.total_cmp(&b.k));
    let mut out: Vec<BinnedPoint> = Vec::new();
    let mut members = 0usize;
    for pt in &sorted {
        if !(pt.k > 0.0) {
            return Err(Error::InvalidArgument(format!("degree must be positive, got {}", pt.k)));
        }
        let b = bin_index(pt.k, base);
        match out.last_mut() {
            Some(last) if last.bin == b => {
                last.p += pt.p;
                members += 1;
            }
            _ => {
                if let Some(last) = out.last_mut() {
                    last.p /= members as f64;
                }
                out.push(BinnedPoint {
                    bin: b,
                    k: base.powf(f64::from(b) + 0.5),
                    p: pt.p,
                });
                members = 1;
            }
        }
    }
    if let Some(last) = out.last_mut() {
        last.p /= members as f64;
    }
    Ok(out)
}

/// Ordinary least squares of `ys` on `xs` with the slope F test.
pub(crate) fn ols(model: Model, xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= f64::EPSILON * xs.iter().map(|x| x * x).sum::<f64>() {
        return Err(Error::Degenerate("zero variance in x".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let df2 = n - 2;

    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let (r_squared, f_stat) = if syy == 0.0 {
        // constant response: no trend to explain
        (0.0, 0.0)
    } else {
        let r2 = (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0);
        let ss_reg = slope * sxy;
        let f = if ss_res <= 0.0 || r2 >= 1.0 {
            f64::INFINITY
        } else {
            ss_reg / (ss_res / df2 as f64)
        };
        (r2, f)
    };
    let p_value = if f_stat.is_infinite() {
        0.0
    } else if f_stat == 0.0 {
        1.0
    } else {
        FisherSnedecor::new(1.0, df2 as f64)
            .map(|d| d.sf(f_stat).clamp(0.0, 1.0))
            .map_err(|e| Error::Degenerate(e.to_string()))?
    };
    Ok(FitResult {
        model,
        slope,
        intercept,
        r_squared,
        f_stat,
        df: (1, df2),
        p_value,
        n,
    })
}

/// Regress `ln p` on `k` (exponential), `ln p` on `ln k` (power law) or `p`
/// on `k` (linear).
pub fn fit_model(points: &[CumulativePoint], model: Model) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    for pt in points {
        if !(pt.p > 0.0) {
            return Err(Error::Domain(format!("p must be positive, got {}", pt.p)));
        }
        if model == Model::PowerLaw && !(pt.k > 0.0) {
            return Err(Error::Domain(format!("k must be positive for a power law, got {}", pt.k)));
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .map(|pt| match model {
            Model::Exponential => (pt.k, pt.p.ln()),
            Model::PowerLaw => (pt.k.ln(), pt.p.ln()),
            Model::Linear => (pt.k, pt.p),
        })
        .unzip();
    ols(model, &xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestFit {
    pub best: FitResult,
    pub exponential: FitResult,
    pub power_law: FitResult,
}

/// Fit both an exponential and a power law; the larger F statistic wins.
/// Ties go to the larger r², then to the exponential.
pub fn best_fit(points: &[CumulativePoint]) -> Result<BestFit> {
    let exponential = fit_model(points, Model::Exponential)?;
    let power_law = fit_model(points, Model::PowerLaw)?;
    let power_wins = match power_law.f_stat.partial_cmp(&exponential.f_stat) {
        Some(std::cmp::Ordering::Greater) => true,
        Some(std::cmp::Ordering::Equal) => power_law.r_squared > exponential.r_squared,
        _ => false,
    };
    Ok(BestFit {
        best: if power_wins { power_law } else { exponential },
        exponential,
        power_law,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Fit the multiplicatively binned points.
    #[default]
    Binned,
    /// Fit every cumulative point.
    Raw,
}

/// Distribution, bins and fits for one kind/direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeReport {
    pub kind: EdgeKind,
    pub direction: Direction,
    pub mode: FitMode,
    pub base: f64,
    pub points: Vec<CumulativePoint>,
    pub bins: Vec<BinnedPoint>,
    /// `None` when too few points remain to fit.
    pub fit: Option<BestFit>,
    pub fit_error: Option<String>,
}

pub fn degree_report(
    graph: &DependencyGraph,
    kind: EdgeKind,
    direction: Direction,
    mode: FitMode,
    base: f64,
) -> Result<DegreeReport> {
    let points = cumulative_degree_distribution(graph, kind, direction)?;
    let bins = multiplicative_bin(&points, base)?;
    let fit_input: Vec<CumulativePoint> = match mode {
        FitMode::Binned => bins.iter().map(|b| CumulativePoint { k: b.k, p: b.p }).collect(),
        FitMode::Raw => points.clone(),
    };
    let (fit, fit_error) = match best_fit(&fit_input) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(DegreeReport {
        kind,
        direction,
        mode,
        base,
        points,
        bins,
        fit,
        fit_error,
    })
}
