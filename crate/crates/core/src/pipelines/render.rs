//! Complexity fields and their rendering to grey levels.

use crate::error::{Error, Result};
use crate::pipelines::image::GreyImage;

/// Grey level used for cells without a value.
pub const MARGIN_GREY: u8 = 128;

/// Per-cell complexity in bits; `None` marks margins without a full
/// neighbourhood or cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityField {
    width: usize,
    height: usize,
    values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderMode {
    #[default]
    Raw,
    Rank,
}

impl ComplexityField {
    pub fn new(width: usize, height: usize) -> Self {
        ComplexityField {
            width,
            height,
            values: vec![None; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: values.len(),
            });
        }
        Ok(ComplexityField { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = Some(v);
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

/// White for the minimum, black for the maximum. `Raw` stretches values
/// linearly; `Rank` stretches dense ranks of the distinct values. Ties at
/// half a grey level round to even.
pub fn render_field(f: &ComplexityField, mode: RenderMode) -> Result<GreyImage> {
    let mut distinct: Vec<f64> = f.defined().collect();
    if distinct.is_empty() {
        return Err(Error::InvalidParams("field has no values".into()));
    }
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let level = |v: f64| -> f64 {
        match mode {
            RenderMode::Raw => {
                let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
                if hi > lo {
                    (v - lo) / (hi - lo)
                } else {
                    0.0
                }
            }
            RenderMode::Rank => {
                let r = distinct.binary_search_by(|d| d.total_cmp(&v)).unwrap();
                if distinct.len() > 1 {
                    r as f64 / (distinct.len() - 1) as f64
                } else {
                    0.0
                }
            }
        }
    };
    let pixels = f
        .values
        .iter()
        .map(|v| match v {
            Some(v) => (255.0 * (1.0 - level(*v))).round_ties_even() as u8,
            None => MARGIN_GREY,
        })
        .collect();
    GreyImage::new(f.width, f.height, pixels)
}
