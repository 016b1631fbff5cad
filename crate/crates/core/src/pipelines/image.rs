//! Grey-level images, neighbourhood observations and the decisional filter.

use crate::compare::{MatchSpec, Metric};
use crate::error::{Error, Result};
use crate::graph::local_complexities;
use crate::pipelines::render::ComplexityField;
use crate::reconstruct::{reconstruct, Estimator, ReconstructConfig, Reconstruction};
use crate::types::{ObservationSet, SampleSet};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreyImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GreyImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidParams(format!(
                "{} pixels do not form a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GreyImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Sub-image with top-left corner `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidParams("crop exceeds image bounds".into()));
        }
        let mut px = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            px.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x0 + width]);
        }
        Self::new(width, height, px)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preprocess {
    #[default]
    None,
    /// Subtract the minimum of the 21 involved values from all of them.
    SubtractMin,
}

/// 5x5 block minus its corners and center, raster order.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 20] = {
    let mut out = [(0isize, 0isize); 20];
    let mut n = 0;
    let mut dy = -2isize;
    while dy <= 2 {
        let mut dx = -2isize;
        while dx <= 2 {
            let corner = (dx == 2 || dx == -2) && (dy == 2 || dy == -2);
            if !corner && !(dx == 0 && dy == 0) {
                out[n] = (dx, dy);
                n += 1;
            }
            dx += 1;
        }
        dy += 1;
    }
    out
};

#[derive(Debug, Clone)]
pub struct ImageObservations {
    pub observations: ObservationSet,
    /// Pixel `(x, y)` of each pair.
    pub positions: Vec<(usize, usize)>,
    /// Value subtracted from each pair, 0 without preprocessing.
    pub shifts: Vec<u8>,
}

/// One pair per pixel at least 2 away from every border: the 20
/// neighbours and the center value.
pub fn image_to_observations(img: &GreyImage, preprocess: Preprocess) -> Result<ImageObservations> {
    if img.width < 5 || img.height < 5 {
        return Err(Error::ImageTooSmall {
            width: img.width,
            height: img.height,
        });
    }
    let n = (img.width - 4) * (img.height - 4);
    let mut out = ImageObservations {
        observations: ObservationSet::with_capacity(20, 1, n)?,
        positions: Vec::with_capacity(n),
        shifts: Vec::with_capacity(n),
    };
    let mut raw = [0u8; 20];
    let mut x = [0.0; 20];
    for py in 2..img.height - 2 {
        for px in 2..img.width - 2 {
            for (v, &(dx, dy)) in raw.iter_mut().zip(NEIGHBOR_OFFSETS.iter()) {
                *v = img.get((px as isize + dx) as usize, (py as isize + dy) as usize);
            }
            let center = img.get(px, py);
            let shift = match preprocess {
                Preprocess::None => 0,
                Preprocess::SubtractMin => raw.iter().copied().fold(center, u8::min),
            };
            for (xv, &r) in x.iter_mut().zip(raw.iter()) {
                *xv = (r - shift) as f64;
            }
            out.observations.push(&x, &[(center - shift) as f64])?;
            out.positions.push((px, py));
            out.shifts.push(shift);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageFilterConfig {
    pub bandwidth: f64,
    pub tau: f64,
    pub delta: f64,
    pub cutoff: f64,
    pub preprocess: Preprocess,
}

#[derive(Debug, Clone)]
pub struct ImageRun {
    pub pairs: ImageObservations,
    pub reconstruction: Reconstruction,
    pub decisional: ComplexityField,
}

/// Gaussian kernel estimator with all 256 grey levels as outcome samples,
/// Bhattacharyya matching and the thresholded absolute utility.
pub fn image_filter(img: &GreyImage, cfg: &ImageFilterConfig) -> Result<ImageRun> {
    let pairs = image_to_observations(img, cfg.preprocess)?;
    let mut rc = ReconstructConfig::new(
        Estimator::Kernel {
            bandwidth: Some(cfg.bandwidth),
            cutoff: cfg.cutoff,
        },
        MatchSpec::new(Metric::Bhattacharyya, cfg.delta)?,
    );
    rc.samples = Some(SampleSet::integer_range(256)?);
    rc.determinism = None;
    rc.utility = Some(UtilitySpec::ThresholdedAbsolute { tau: cfg.tau });
    let reconstruction = reconstruct(&pairs.observations, &rc)?;
    let layers = reconstruction.decision.as_ref().expect("utility is set");
    let mut decisional = ComplexityField::new(img.width, img.height);
    for (&(x, y), v) in pairs.positions.iter().zip(local_complexities(&layers.decisional)) {
        decisional.set(x, y, v);
    }
    Ok(ImageRun {
        pairs,
        reconstruction,
        decisional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn offsets_shape() {
        assert_eq!(NEIGHBOR_OFFSETS.len(), 20);
        assert!(!NEIGHBOR_OFFSETS.contains(&(0, 0)));
        assert!(!NEIGHBOR_OFFSETS.contains(&(2, 2)));
        assert!(NEIGHBOR_OFFSETS.contains(&(2, 1)));
        assert_eq!(NEIGHBOR_OFFSETS[0], (-1, -2));
    }

    #[test]
    fn margins() {
        let img = GreyImage::filled(5, 5, 9).unwrap();
        let p = image_to_observations(&img, Preprocess::None).unwrap();
        assert_eq!(p.observations.len(), 1);
        assert_eq!(p.positions, vec![(2, 2)]);
        let p = image_to_observations(&img, Preprocess::SubtractMin).unwrap();
        assert!(p.observations.x(0).iter().all(|&v| v == 0.0));
        assert_eq!(p.observations.z(0), &[0.0]);
        assert_eq!(p.shifts, vec![9]);
        let small = GreyImage::filled(4, 9, 0).unwrap();
        assert!(matches!(
            image_to_observations(&small, Preprocess::None),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn shift_restores_original(w in 5usize..12, h in 5usize..12, seed in proptest::collection::vec(any::<u8>(), 144)) {
            let img = GreyImage::new(w, h, seed[..w * h].to_vec()).unwrap();
            let plain = image_to_observations(&img, Preprocess::None).unwrap();
            let shifted = image_to_observations(&img, Preprocess::SubtractMin).unwrap();
            prop_assert_eq!(plain.observations.len(), (w - 4) * (h - 4));
            for i in 0..plain.observations.len() {
                let s = shifted.shifts[i] as f64;
                let x: Vec<f64> = shifted.observations.x(i).iter().map(|v| v + s).collect();
                prop_assert_eq!(&x[..], plain.observations.x(i));
                prop_assert_eq!(shifted.observations.z(i)[0] + s, plain.observations.z(i)[0]);
                prop_assert!(shifted.observations.x(i).iter().chain(shifted.observations.z(i)).any(|&v| v == 0.0));
            }
        }
    }
}
