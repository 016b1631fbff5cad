//! Experiment pipelines: the Even process, elementary cellular automata and
//! grey-level image filtering.

pub mod eca;
pub mod even;
pub mod image;
pub mod io;
pub mod render;

pub use eca::{ca_filter, extract_light_cones, run_eca, CaConfig, CaRun, EcaField};
pub use even::{gen_even_process, run_even, series_to_observations, EvenConfig, EvenRun};
pub use image::{image_filter, image_to_observations, GreyImage, ImageFilterConfig, ImageRun, Preprocess};
pub use render::{render_field, ComplexityField, RenderMode};
