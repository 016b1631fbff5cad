//! Distances and match predicates between conditional distributions.

use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::types::Distribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Two-sample chi-square test on raw counts; threshold is the
    /// significance level.
    ChiSquare,
    Bhattacharyya,
    JensenShannon,
    Variational,
    HarmonicMean,
    /// Bitwise equality of the distributions.
    Exact,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::ChiSquare => "chi-square",
            Metric::Bhattacharyya => "bhattacharyya",
            Metric::JensenShannon => "jensen-shannon",
            Metric::Variational => "variational",
            Metric::HarmonicMean => "harmonic-mean",
            Metric::Exact => "exact",
        }
    }
}

/// Metric plus threshold: significance level for [`Metric::ChiSquare`],
/// maximum distance otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchSpec {
    metric: Metric,
    threshold: f64,
}

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_DELTA: f64 = 0.05;

impl MatchSpec {
    pub fn new(metric: Metric, threshold: f64) -> Result<Self> {
        let ok = match metric {
            Metric::ChiSquare => threshold > 0.0 && threshold < 1.0,
            _ => threshold >= 0.0 && threshold.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidParams(format!(
                "threshold {threshold} is out of range for {}",
                metric.name()
            )));
        }
        Ok(MatchSpec { metric, threshold })
    }

    pub fn chi_square(alpha: f64) -> Result<Self> {
        MatchSpec::new(Metric::ChiSquare, alpha)
    }

    pub fn exact() -> Self {
        MatchSpec {
            metric: Metric::Exact,
            threshold: 0.0,
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn needs_counts(&self) -> bool {
        self.metric == Metric::ChiSquare
    }
}

/// Walks the union of both supports, yielding `(p_i, q_i)`.
fn paired<'a>(p: &'a Distribution, q: &'a Distribution) -> impl Iterator<Item = (f64, f64)> + 'a {
    let mut a = p.entries().peekable();
    let mut b = q.entries().peekable();
    std::iter::from_fn(move || match (a.peek().copied(), b.peek().copied()) {
        (Some((i, x)), Some((j, y))) => {
            if i == j {
                a.next();
                b.next();
                Some((x, y))
            } else if i < j {
                a.next();
                Some((x, 0.0))
            } else {
                b.next();
                Some((0.0, y))
            }
        }
        (Some((_, x)), None) => {
            a.next();
            Some((x, 0.0))
        }
        (None, Some((_, y))) => {
            b.next();
            Some((0.0, y))
        }
        (None, None) => None,
    })
}

fn xlogx_over(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / m).ln()
    }
}

/// Dissimilarity between two distributions over the same sample set.
///
/// Bhattacharyya and harmonic-mean distances are `+inf` for disjoint
/// supports. For [`Metric::ChiSquare`] this is the symmetric chi-square
/// divergence `1/2 sum (p-q)^2/(p+q)` on frequencies; the match predicate
/// uses the count-based test instead.
pub fn distance(p: &Distribution, q: &Distribution, metric: Metric) -> Result<f64> {
    if !p.same_samples(q) {
        return Err(Error::SampleSetMismatch);
    }
    if p == q {
        return Ok(0.0);
    }
    let d = match metric {
        Metric::Exact => f64::INFINITY,
        Metric::Bhattacharyya => {
            let bc: f64 = paired(p, q).map(|(x, y)| (x * y).sqrt()).sum();
            if bc > 0.0 {
                -bc.ln()
            } else {
                f64::INFINITY
            }
        }
        Metric::HarmonicMean => {
            let hm: f64 = paired(p, q)
                .map(|(x, y)| if x + y > 0.0 { 2.0 * x * y / (x + y) } else { 0.0 })
                .sum();
            if hm > 0.0 {
                -hm.ln()
            } else {
                f64::INFINITY
            }
        }
        Metric::JensenShannon => paired(p, q)
            .map(|(x, y)| {
                let m = 0.5 * (x + y);
                0.5 * (xlogx_over(x, m) + xlogx_over(y, m))
            })
            .sum(),
        Metric::Variational => 0.5 * paired(p, q).map(|(x, y)| (x - y).abs()).sum::<f64>(),
        Metric::ChiSquare => {
            0.5 * paired(p, q)
                .map(|(x, y)| (x - y) * (x - y) / (x + y))
                .sum::<f64>()
        }
    };
    Ok(d.max(0.0))
}

/// Two-sample chi-square statistic on sparse `(bin, count)` vectors.
///
/// Bins where both counts are zero are dropped; degrees of freedom are the
/// number of remaining bins minus one.
pub fn chi_square_statistic(r: &[(u32, u64)], s: &[(u32, u64)]) -> (f64, usize) {
    let rt: u64 = r.iter().map(|&(_, c)| c).sum();
    let st: u64 = s.iter().map(|&(_, c)| c).sum();
    if rt == 0 || st == 0 {
        return (0.0, 0);
    }
    let (rt, st) = (rt as f64, st as f64);
    let (mut i, mut j) = (0, 0);
    let mut stat = 0.0;
    let mut bins = 0usize;
    while i < r.len() || j < s.len() {
        let (ri, si) = match (r.get(i), s.get(j)) {
            (Some(&(a, x)), Some(&(b, y))) if a == b => {
                i += 1;
                j += 1;
                (x, y)
            }
            (Some(&(a, x)), Some(&(b, _))) if a < b => {
                i += 1;
                (x, 0)
            }
            (Some(_), Some(&(_, y))) => {
                j += 1;
                (0, y)
            }
            (Some(&(_, x)), None) => {
                i += 1;
                (x, 0)
            }
            (None, Some(&(_, y))) => {
                j += 1;
                (0, y)
            }
            (None, None) => unreachable!(),
        };
        if ri + si == 0 {
            continue;
        }
        bins += 1;
        let diff = ri as f64 * st - si as f64 * rt;
        stat += diff * diff / ((ri + si) as f64 * rt * st);
    }
    (stat, bins.saturating_sub(1))
}

/// Upper-tail probability of the chi-square distribution.
pub fn chi_square_p_value(stat: f64, dof: usize) -> f64 {
    if dof == 0 || stat <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, stat / 2.0)
}

/// Match predicate between two conditionals.
///
/// Chi-square matching requires the raw count vectors of both sides.
pub fn matches(
    p: &Distribution,
    q: &Distribution,
    spec: &MatchSpec,
    counts: Option<(&[(u32, u64)], &[(u32, u64)])>,
) -> Result<bool> {
    if !p.same_samples(q) {
        return Err(Error::SampleSetMismatch);
    }
    match spec.metric {
        Metric::ChiSquare => {
            let (r, s) = counts.ok_or(Error::MissingCounts)?;
            Ok(counts_match(r, s, spec.threshold))
        }
        Metric::Exact => Ok(p == q),
        metric => Ok(distance(p, q, metric)? <= spec.threshold),
    }
}

pub(crate) fn counts_match(r: &[(u32, u64)], s: &[(u32, u64)], alpha: f64) -> bool {
    if r == s {
        return true;
    }
    let (stat, dof) = chi_square_statistic(r, s);
    chi_square_p_value(stat, dof) >= alpha
}
