//! Volumetric level-set fields: analytic phantoms with CSG composition,
//! regular grids, calibrated noise, and point sampling of φ, ∇φ, D²φ.
//!
//! Sign convention throughout: negative inside, zero on the boundary,
//! positive outside. The phantom fields are implicit level-set functions
//! (quadratic growth), not true distance functions — the reconstruction only
//! needs the zero set and smoothness, so no redistancing is done.

mod field;
mod grid;
mod noise;
mod sample;
mod sdf1;

pub use field::{
    csg_complement, csg_intersect, csg_subtract, csg_union, phantom_field, ImplicitField, Phantom,
};
pub use grid::{rasterize, GridError, GridSpec, ScalarGrid};
pub use noise::{add_noise, empirical_snr_db, NoiseError, NoiseModel, NoiseSpec};
pub use sample::{
    project_to_zero, AnalyticField, FieldError, FieldSample, FieldSource, GridField, EPS_GRAD,
};
pub use sdf1::{read_sdf1, write_sdf1, DataEncoding, Sdf1Error};
