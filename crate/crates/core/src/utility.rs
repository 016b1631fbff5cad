//! Built-in two-argument utility functions `U(y, z)`: the gain of acting on
//! prediction `y` when outcome `z` occurs.

use crate::error::{Error, Result};
use crate::types::{check_dim, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityKind {
    Delta,
    NegSquaredError,
    ThresholdedAbsolute,
    ConeMatchCount,
    Table,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UtilitySpec {
    /// 1 when the prediction is exactly right, 0 otherwise.
    Delta,
    /// `-||z - y||^2`.
    NegSquaredError,
    /// `-max(0, |y - z| - tau)` on one-dimensional outcomes.
    ThresholdedAbsolute { tau: f64 },
    /// Number of coordinates predicted exactly.
    ConeMatchCount,
    /// Row-major `side x side` table indexed by `(y, z)`, where outcomes are
    /// one-dimensional integer codes `0..side` (the sample-set ordering).
    Table { side: usize, values: Vec<f64> },
}

/// Builds a utility of the given kind.
///
/// `params` holds `tau` for [`UtilityKind::ThresholdedAbsolute`] and the
/// row-major table for [`UtilityKind::Table`]; it is ignored otherwise.
pub fn make_utility(kind: UtilityKind, params: &[f64]) -> Result<UtilitySpec> {
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParams("utility parameters must be finite".into()));
    }
    match kind {
        UtilityKind::Delta => Ok(UtilitySpec::Delta),
        UtilityKind::NegSquaredError => Ok(UtilitySpec::NegSquaredError),
        UtilityKind::ConeMatchCount => Ok(UtilitySpec::ConeMatchCount),
        UtilityKind::ThresholdedAbsolute => match params {
            [tau] if *tau >= 0.0 => Ok(UtilitySpec::ThresholdedAbsolute { tau: *tau }),
            [tau] => Err(Error::InvalidParams(format!("tau must be >= 0, got {tau}"))),
            _ => Err(Error::InvalidParams("thresholded utility takes exactly one parameter".into())),
        },
        UtilityKind::Table => {
            let side = (params.len() as f64).sqrt().round() as usize;
            if side == 0 || side * side != params.len() {
                return Err(Error::InvalidParams(format!(
                    "utility table with {} entries is not square",
                    params.len()
                )));
            }
            Ok(UtilitySpec::Table {
                side,
                values: params.to_vec(),
            })
        }
    }
}

/// Convenience wrapper over [`UtilitySpec::eval`] for owned points.
pub fn eval_utility(u: &UtilitySpec, y: &Point, z: &Point) -> Result<f64> {
    u.eval(y.coords(), z.coords())
}

impl UtilitySpec {
    /// Builds a table utility from rows indexed by prediction.
    pub fn table(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(Error::InvalidParams("utility table must be square".into()));
        }
        make_utility(UtilityKind::Table, &rows.concat())
    }

    pub fn kind(&self) -> UtilityKind {
        match self {
            UtilitySpec::Delta => UtilityKind::Delta,
            UtilitySpec::NegSquaredError => UtilityKind::NegSquaredError,
            UtilitySpec::ThresholdedAbsolute { .. } => UtilityKind::ThresholdedAbsolute,
            UtilitySpec::ConeMatchCount => UtilityKind::ConeMatchCount,
            UtilitySpec::Table { .. } => UtilityKind::Table,
        }
    }

    /// Checks that `(y, z)` is a valid argument pair for this utility.
    pub fn check_args(&self, y: &[f64], z: &[f64]) -> Result<()> {
        check_dim(y.len(), z.len())?;
        match self {
            UtilitySpec::ThresholdedAbsolute { .. } => check_dim(1, y.len()),
            UtilitySpec::Table { side, .. } => {
                check_dim(1, y.len())?;
                table_index(*side, y[0])?;
                table_index(*side, z[0]).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, y: &[f64], z: &[f64]) -> Result<f64> {
        self.check_args(y, z)?;
        Ok(self.eval_unchecked(y, z))
    }

    /// Evaluates without argument validation; callers validate once per
    /// sample set.
    pub(crate) fn eval_unchecked(&self, y: &[f64], z: &[f64]) -> f64 {
        match self {
            UtilitySpec::Delta => {
                if y == z {
                    1.0
                } else {
                    0.0
                }
            }
            UtilitySpec::NegSquaredError => -crate::types::squared_distance(y, z),
            UtilitySpec::ThresholdedAbsolute { tau } => -((y[0] - z[0]).abs() - tau).max(0.0),
            UtilitySpec::ConeMatchCount => y.iter().zip(z).filter(|(a, b)| a == b).count() as f64,
            UtilitySpec::Table { side, values } => {
                values[y[0] as usize * side + z[0] as usize]
            }
        }
    }
}

fn table_index(side: usize, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && (v as usize) < side {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParams(format!(
            "table utility expects integer codes in 0..{side}, got {v}"
        )))
    }
}
