//! Elementary cellular automata, light-cone observations and the
//! complexity-field filter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compare::MatchSpec;
use crate::error::{Error, Result};
use crate::graph::local_complexities;
use crate::pipelines::render::ComplexityField;
use crate::reconstruct::{reconstruct, Estimator, ReconstructConfig, Reconstruction};
use crate::types::{ObservationSet, StatePartition};
use crate::utility::UtilitySpec;

/// Binary space-time grid, row-major, one row per time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcaField {
    width: usize,
    steps: usize,
    cells: Vec<u8>,
}

impl EcaField {
    pub fn from_cells(width: usize, steps: usize, cells: Vec<u8>) -> Result<Self> {
        if width == 0 || steps == 0 || cells.len() != width * steps {
            return Err(Error::InvalidParams(format!(
                "{} cells do not form a {width}x{steps} field",
                cells.len()
            )));
        }
        if cells.iter().any(|&c| c > 1) {
            return Err(Error::InvalidParams("cells must be 0 or 1".into()));
        }
        Ok(EcaField { width, steps, cells })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn row(&self, t: usize) -> &[u8] {
        &self.cells[t * self.width..(t + 1) * self.width]
    }

    /// Cell at time `t`, column `i` taken cyclically.
    pub fn get(&self, t: usize, i: isize) -> u8 {
        let w = self.width as isize;
        self.cells[t * self.width + i.rem_euclid(w) as usize]
    }
}

/// Output of `rule` for the neighbourhood `(left, center, right)`.
pub fn rule_output(rule: u8, left: u8, center: u8, right: u8) -> u8 {
    (rule >> (4 * left + 2 * center + right)) & 1
}

pub fn step_row(rule: u8, row: &[u8], out: &mut [u8]) {
    let w = row.len();
    for i in 0..w {
        out[i] = rule_output(rule, row[(i + w - 1) % w], row[i], row[(i + 1) % w]);
    }
}

/// Random initial row (each cell 1 with probability 1/2), evolved for
/// `drop + steps` rows in total; the last `steps` rows are kept.
pub fn run_eca(rule: u8, width: usize, steps: usize, drop: usize, seed: u64) -> Result<EcaField> {
    if width < 3 {
        return Err(Error::InvalidParams(format!("width must be at least 3, got {width}")));
    }
    if steps == 0 {
        return Err(Error::InvalidParams("steps must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row: Vec<u8> = (0..width).map(|_| rng.random_bool(0.5) as u8).collect();
    let mut next = vec![0u8; width];
    let mut cells = Vec::with_capacity(width * steps);
    for t in 0..drop + steps {
        if t > 0 {
            step_row(rule, &row, &mut next);
            std::mem::swap(&mut row, &mut next);
        }
        if t >= drop {
            cells.extend_from_slice(&row);
        }
    }
    EcaField::from_cells(width, steps, cells)
}

/// Offsets `(dt, dj)` of a cone of the given depth: `k` in `0..depth`
/// (past, `dt = -k`) or `1..depth` (future, `dt = k`), `|dj| <= k`.
fn cone_offsets(depth: usize, past: bool) -> Vec<(isize, isize)> {
    let start = if past { 0 } else { 1 };
    let mut out = Vec::new();
    for k in start..depth as isize {
        for j in -k..=k {
            out.push((if past { -k } else { k }, j));
        }
    }
    out
}

/// Light-cone pairs with the cell positions `(t, i)` they belong to.
#[derive(Debug, Clone)]
pub struct LightCones {
    pub observations: ObservationSet,
    pub positions: Vec<(usize, usize)>,
}

/// Past cones (present cell included, `d_past^2` cells) paired with future
/// cones (present excluded, `d_future^2 - 1` cells) for every cell whose
/// cones fit in time; columns wrap.
pub fn extract_light_cones(field: &EcaField, d_past: usize, d_future: usize) -> Result<LightCones> {
    if d_past == 0 || d_future < 2 {
        return Err(Error::InvalidParams(format!(
            "cone depths must satisfy d_past >= 1 and d_future >= 2, got {d_past} and {d_future}"
        )));
    }
    if field.steps + 2 < d_past + d_future + 1 {
        return Err(Error::FieldTooSmall);
    }
    let past = cone_offsets(d_past, true);
    let future = cone_offsets(d_future, false);
    let first = d_past - 1;
    let last = field.steps - d_future;
    let n = (last + 1 - first) * field.width;
    let mut observations = ObservationSet::with_capacity(past.len(), future.len(), n)?;
    let mut positions = Vec::with_capacity(n);
    let mut x = vec![0.0; past.len()];
    let mut z = vec![0.0; future.len()];
    for t in first..=last {
        for i in 0..field.width {
            let fill = |buf: &mut [f64], offsets: &[(isize, isize)]| {
                for (v, &(dt, dj)) in buf.iter_mut().zip(offsets) {
                    *v = field.get((t as isize + dt) as usize, i as isize + dj) as f64;
                }
            };
            fill(&mut x, &past);
            fill(&mut z, &future);
            observations.push(&x, &z)?;
            positions.push((t, i));
        }
    }
    Ok(LightCones {
        observations,
        positions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaConfig {
    pub rule: u8,
    pub width: usize,
    pub steps: usize,
    pub drop: usize,
    pub d_past: usize,
    pub d_future: usize,
    pub seed: u64,
}

impl Default for CaConfig {
    fn default() -> Self {
        CaConfig {
            rule: 110,
            width: 400,
            steps: 300,
            drop: 100,
            d_past: 6,
            d_future: 4,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaRun {
    pub field: EcaField,
    pub cones: LightCones,
    pub reconstruction: Reconstruction,
    pub statistical: ComplexityField,
    pub iso_utility: ComplexityField,
    pub iso_prediction: ComplexityField,
    pub decisional: ComplexityField,
}

fn field_of(partition: &StatePartition, cones: &LightCones, width: usize, steps: usize) -> ComplexityField {
    let mut f = ComplexityField::new(width, steps);
    for (&(t, i), v) in cones.positions.iter().zip(local_complexities(partition)) {
        f.set(i, t, v);
    }
    f
}

/// Discrete estimator, exact-match clustering, exhaustive search over
/// observed future cones with the matched-cell-count utility.
pub fn ca_filter(cfg: &CaConfig) -> Result<CaRun> {
    let field = run_eca(cfg.rule, cfg.width, cfg.steps, cfg.drop, cfg.seed)?;
    let cones = extract_light_cones(&field, cfg.d_past, cfg.d_future)?;
    let mut rc = ReconstructConfig::new(Estimator::Discrete, MatchSpec::exact());
    rc.determinism = None;
    rc.utility = Some(UtilitySpec::ConeMatchCount);
    let reconstruction = reconstruct(&cones.observations, &rc)?;
    let layers = reconstruction.decision.as_ref().expect("utility is set");
    let (w, s) = (field.width(), field.steps());
    Ok(CaRun {
        statistical: field_of(reconstruction.causal.partition(), &cones, w, s),
        iso_utility: field_of(&layers.iso_utility, &cones, w, s),
        iso_prediction: field_of(&layers.iso_prediction, &cones, w, s),
        decisional: field_of(&layers.decisional, &cones, w, s),
        field,
        cones,
        reconstruction,
    })
}
