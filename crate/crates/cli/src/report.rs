//! Plain-text `key: value` reports.

use std::fmt::{Display, Write as _};

use dstates_core::graph::TransitionGraph;
use dstates_core::reconstruct::Reconstruction;

#[derive(Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn kv(&mut self, key: &str, value: impl Display) -> &mut Self {
        let _ = writeln!(self.text, "{key}: {value}");
        self
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn complexities(&mut self, rec: &Reconstruction) -> &mut Self {
        let c = &rec.complexities;
        self.kv("causal_states", rec.causal.num_states());
        self.kv("statistical_complexity_bits_estimated", c.statistical);
        if let Some(d) = &rec.decision {
            self.kv("iso_prediction_states", d.iso_prediction.num_states());
            self.kv("iso_utility_states", d.iso_utility.num_states());
            self.kv("decisional_states", d.decisional.num_states());
            self.kv("iso_prediction_complexity_bits_estimated", c.iso_prediction.unwrap_or(0.0));
            self.kv("iso_utility_complexity_bits_estimated", c.iso_utility.unwrap_or(0.0));
            self.kv("decisional_complexity_bits_estimated", c.decisional.unwrap_or(0.0));
            self.kv("delta_u", d.delta_u);
        }
        if let Some(det) = rec.causal.determinism() {
            self.kv("determinism_converged", det.converged);
            self.kv("determinism_iterations", det.iterations);
            self.kv("determinism_splits", det.splits);
            self.kv("determinism_merges", det.merges);
        }
        self.kv("invariants", "ok")
    }

    /// One `transition` line per labelled edge and symbol.
    pub fn transitions(&mut self, g: &TransitionGraph) -> &mut Self {
        for n in 0..g.num_nodes() {
            self.kv(&format!("state_{n}_mass"), format!("{:.6}", g.mass(n)));
        }
        for e in g.edges() {
            if e.symbols.is_empty() {
                self.kv("transition", format!("{} -> {} p={:.6}", e.from, e.to, e.probability));
            }
            for (a, p) in &e.symbols {
                self.kv("transition", format!("{} -{}-> {} p={p:.6}", e.from, a.0, e.to));
            }
        }
        self
    }
}
