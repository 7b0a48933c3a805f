//! Reconstruction of closed triangulated surfaces from volumetric level-set
//! data by gradient descent on a curvature-aware energy, plus a Marching
//! Cubes baseline.
//!
//! The pipeline: build or load a scalar field φ (negative inside, positive
//! outside), start from a triangulated sphere enclosing the target, and move
//! every vertex along its normal against the shape gradient of
//!
//! ```text
//! E(Γ) = ∫_Γ ( α φ² + β |∇_Γ φ|² ) dΓ
//! ```
//!
//! until the energy settles. The α term pulls the surface onto the zero level
//! set; the β term penalizes the tangential component of ∇φ, which smooths
//! the evolving mesh.
//!
//! Modules follow the data path: [`levelset`] (fields, grids, sampling),
//! [`mesh`] (triangulated surfaces and their file formats), [`curvature`]
//! (per-vertex mean/Gaussian curvature), [`flow`] (energy, shape gradient,
//! evolution loop), [`mcubes`] (Marching Cubes baseline), [`metrics`]
//! (mesh-vs-field reports).
//!
//! All numerics are generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! concrete aliases below fix `f64`, which is what the CLI and the file
//! formats use.

pub mod curvature;
pub mod flow;
pub mod levelset;
pub mod mcubes;
pub mod mesh;
pub mod metrics;
pub mod scalar;

pub use scalar::Scalar;

/// Default scalar type for the command-line tools and file formats.
pub type Real = f64;

pub type GridSpec = levelset::GridSpec<Real>;
pub type ScalarGrid = levelset::ScalarGrid<Real>;
pub type ImplicitField = levelset::ImplicitField<Real>;
pub type FieldSample = levelset::FieldSample<Real>;
pub type AnalyticField = levelset::AnalyticField<Real>;
pub type GridField = levelset::GridField<Real>;
pub type TriMesh = mesh::TriMesh<Real>;
pub type VertexNormals = mesh::VertexNormals<Real>;
pub type CurvatureSample = curvature::CurvatureSample<Real>;
pub type FlowConfig = flow::FlowConfig<Real>;
pub type FlowResult = flow::FlowResult<Real>;
pub type McSurface = mcubes::McSurface<Real>;
