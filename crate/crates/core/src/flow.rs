//! Energy evaluation, per-vertex shape gradient, and the gradient-descent
//! surface evolution loop.
//!
//! Energy: E(Γ) = ∫_Γ (α φ² + β |∇_Γφ|²) dΓ with
//! |∇_Γφ|² = |∇φ|² − (∇φ·n̂)², integrated by the lumped face rule
//! Σ_T area(T)·(e₀+e₁+e₂)/3.
//!
//! Gradient density (normal velocity) at a vertex:
//!
//! ```text
//! g = α·[ 2φ·(∇φ·n̂) + H·φ² ]
//!   + β·[ 2(D²φ·∇φ)·n̂ + H·( |∇φ|² − (∇φ·n̂)² ) − 2(∇φ·n̂)·(n̂ᵀD²φ n̂) ]
//! ```
//!
//! using ∇(φ²)·n̂ = 2φ(∇φ·n̂) and ∇|∇φ|²·n̂ = 2(D²φ∇φ)·n̂, so no third
//! derivatives are needed. The descent update is v ← v − δt·g·n̂ with all
//! quantities evaluated on a frozen snapshot (simultaneous update).

use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::curvature::{curvature_field, CurvatureFieldError, CurvatureSample};
use crate::levelset::{FieldError, FieldSample, FieldSource, EPS_GRAD};
use crate::mesh::{icosphere, vertex_normals, MeshError, TriMesh, VertexNormals};
use crate::scalar::{real, Scalar};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid flow config: {0}")]
    InvalidConfig(String),
    #[error("vertex {vertex}: {source}")]
    Sampling {
        vertex: usize,
        source: FieldError,
    },
    #[error(transparent)]
    Curvature(#[from] CurvatureFieldError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("non-finite update at vertex {vertex}")]
    NonFiniteUpdate { vertex: usize },
}

/// Run parameters. `alpha` weights the φ² attachment term, `beta` the
/// tangential-gradient smoothing term, `dt` is the descent step size.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlowConfig<S: Scalar> {
    pub alpha: S,
    pub beta: S,
    pub dt: S,
    pub max_iters: u32,
    /// Stop when |E_n − E_{n−1}| / max(E_{n−1}, ε) drops below this.
    pub rel_energy_tol: S,
    pub initial_radius: S,
    pub subdiv: u32,
    /// Snapshot cadence for observers; 0 disables snapshots.
    pub export_every: u32,
    /// Optional secondary absolute stop E < threshold, off by default.
    pub abs_energy_tol: Option<S>,
}

impl<S: Scalar> Default for FlowConfig<S> {
    fn default() -> Self {
        FlowConfig {
            alpha: real(5.0),
            beta: S::one(),
            dt: real(1e-3),
            max_iters: 100,
            rel_energy_tol: real(1e-6),
            initial_radius: real(2.0),
            subdiv: 4,
            export_every: 0,
            abs_energy_tol: None,
        }
    }
}

impl<S: Scalar> FlowConfig<S> {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |msg: &str| Err(FlowError::InvalidConfig(msg.into()));
        // `is_finite && > 0` rather than `<= 0` so NaN and infinities fail
        let positive = |x: S| x.is_finite() && x > S::zero();
        if self.alpha < S::zero() || self.beta < S::zero() {
            return bad("alpha and beta must be non-negative");
        }
        if !positive(self.alpha + self.beta) {
            return bad("alpha + beta must be positive");
        }
        if !positive(self.dt) {
            return bad("dt must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !positive(self.rel_energy_tol) {
            return bad("rel_energy_tol must be positive");
        }
        if !positive(self.initial_radius) {
            return bad("initial_radius must be positive");
        }
        if self.subdiv > 7 {
            return bad("subdiv must be in 0..=7");
        }
        Ok(())
    }
}

/// Energy and its two components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown<S: Scalar> {
    pub total: S,
    pub alpha_term: S,
    pub beta_term: S,
}

/// Per-vertex normal-velocity density g and the normals it pairs with.
#[derive(Debug, Clone)]
pub struct VertexGradient<S: Scalar> {
    pub values: Vec<S>,
    pub normals: VertexNormals<S>,
}

/// One row of the evolution trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<S: Scalar> {
    pub iter: u32,
    pub e_total: S,
    pub e_alpha: S,
    pub e_beta: S,
    pub rel_change: S,
    pub mean_abs_phi: S,
    pub max_abs_g: S,
    pub mean_h: S,
    /// Wall-clock duration of the iteration; excluded from determinism
    /// comparisons.
    pub runtime_ms: f64,
}

/// Per-iteration records, one per completed iteration.
#[derive(Debug, Clone)]
pub struct FlowTrace<S: Scalar> {
    pub records: Vec<TraceRecord<S>>,
}

impl<S: Scalar> Default for FlowTrace<S> {
    fn default() -> Self {
        FlowTrace {
            records: Vec::new(),
        }
    }
}

impl<S: Scalar> FlowTrace<S> {
    /// CSV with the pinned header; numeric fields at 10 significant digits.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(
            w,
            "iter,E_total,E_alpha,E_beta,rel_change,mean_abs_phi,max_abs_g,mean_H,runtime_ms"
        )?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
                r.iter,
                r.e_total.as_f64(),
                r.e_alpha.as_f64(),
                r.e_beta.as_f64(),
                r.rel_change.as_f64(),
                r.mean_abs_phi.as_f64(),
                r.max_abs_g.as_f64(),
                r.mean_h.as_f64(),
                r.runtime_ms,
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    /// Relative energy change reached `rel_energy_tol` (or the optional
    /// absolute threshold).
    Converged,
    MaxIters,
    Aborted { iteration: u32, message: String },
}

#[derive(Debug, Clone)]
pub struct FlowResult<S: Scalar> {
    pub mesh: TriMesh<S>,
    pub trace: FlowTrace<S>,
    pub termination: Termination,
}

/// Mean and max of the first-order distance estimate |φ|/max(|∇φ|, ε).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceStats<S: Scalar> {
    pub mean_dist: S,
    pub max_dist: S,
}

/// Frozen per-vertex state of one mesh against one field.
struct Snapshot<S: Scalar> {
    normals: VertexNormals<S>,
    curvatures: Vec<CurvatureSample<S>>,
    samples: Vec<FieldSample<S>>,
}

fn sample_vertices<S: Scalar, F: FieldSource<S>>(
    positions: &[Vector3<S>],
    src: &F,
) -> Result<Vec<FieldSample<S>>, FlowError> {
    positions
        .par_iter()
        .enumerate()
        .map(|(vertex, p)| {
            src.sample(p)
                .map_err(|source| FlowError::Sampling { vertex, source })
        })
        .collect()
}

fn analyze<S: Scalar, F: FieldSource<S>>(
    mesh: &TriMesh<S>,
    src: &F,
) -> Result<Snapshot<S>, FlowError> {
    let normals = vertex_normals(mesh)?;
    let curvatures = curvature_field(mesh, &normals)?;
    let samples = sample_vertices(mesh.vertices(), src)?;
    Ok(Snapshot {
        normals,
        curvatures,
        samples,
    })
}

/// Integrand e(v) = α·φ² + β·max(0, |∇φ|² − (∇φ·n̂)²). The β part is
/// analytically non-negative; the clamp removes the small negative values
/// discrete normals can produce.
fn vertex_integrands<S: Scalar>(
    normals: &VertexNormals<S>,
    samples: &[FieldSample<S>],
    alpha: S,
    beta: S,
) -> (Vec<S>, Vec<S>) {
    let n = samples.len();
    let mut e_alpha = Vec::with_capacity(n);
    let mut e_beta = Vec::with_capacity(n);
    for (v, s) in samples.iter().enumerate() {
        e_alpha.push(alpha * s.phi * s.phi);
        let gdotn = s.grad.dot(&normals[v]);
        let tangential = (s.grad.norm_squared() - gdotn * gdotn).max(S::zero());
        e_beta.push(beta * tangential);
    }
    (e_alpha, e_beta)
}

fn energy_from_snapshot<S: Scalar>(
    mesh: &TriMesh<S>,
    normals: &VertexNormals<S>,
    samples: &[FieldSample<S>],
    alpha: S,
    beta: S,
) -> EnergyBreakdown<S> {
    let (e_alpha, e_beta) = vertex_integrands(normals, samples, alpha, beta);
    let third = real::<S>(1.0 / 3.0);
    let mut total_alpha = S::zero();
    let mut total_beta = S::zero();
    for (i, f) in mesh.faces().iter().enumerate() {
        let w = mesh.face_area(i) * third;
        let [a, b, c] = [f[0] as usize, f[1] as usize, f[2] as usize];
        total_alpha += w * (e_alpha[a] + e_alpha[b] + e_alpha[c]);
        total_beta += w * (e_beta[a] + e_beta[b] + e_beta[c]);
    }
    EnergyBreakdown {
        total: total_alpha + total_beta,
        alpha_term: total_alpha,
        beta_term: total_beta,
    }
}

/// E(Γ) with its α and β components.
pub fn energy<S: Scalar, F: FieldSource<S>>(
    mesh: &TriMesh<S>,
    src: &F,
    alpha: S,
    beta: S,
) -> Result<EnergyBreakdown<S>, FlowError> {
    let normals = vertex_normals(mesh)?;
    let samples = sample_vertices(mesh.vertices(), src)?;
    Ok(energy_from_snapshot(mesh, &normals, &samples, alpha, beta))
}

fn gradient_values<S: Scalar>(
    snapshot: &Snapshot<S>,
    alpha: S,
    beta: S,
) -> Vec<S> {
    let two = real::<S>(2.0);
    snapshot
        .samples
        .iter()
        .zip(&snapshot.curvatures)
        .enumerate()
        .map(|(v, (s, c))| {
            let n = snapshot.normals[v];
            let gdotn = s.grad.dot(&n);
            let h = c.mean;
            let alpha_part = two * s.phi * gdotn + h * s.phi * s.phi;
            let hess_grad_n = (s.hess * s.grad).dot(&n);
            let hess_nn = (s.hess * n).dot(&n);
            let tangential = s.grad.norm_squared() - gdotn * gdotn;
            let beta_part = two * hess_grad_n + h * tangential - two * gdotn * hess_nn;
            alpha * alpha_part + beta * beta_part
        })
        .collect()
}

/// Riesz-representative normal velocity per vertex.
pub fn shape_gradient<S: Scalar, F: FieldSource<S>>(
    mesh: &TriMesh<S>,
    normals: &VertexNormals<S>,
    curvatures: &[CurvatureSample<S>],
    src: &F,
    alpha: S,
    beta: S,
) -> Result<VertexGradient<S>, FlowError> {
    let samples = sample_vertices(mesh.vertices(), src)?;
    let snapshot = Snapshot {
        normals: normals.clone(),
        curvatures: curvatures.to_vec(),
        samples,
    };
    let values = gradient_values(&snapshot, alpha, beta);
    Ok(VertexGradient {
        values,
        normals: snapshot.normals,
    })
}

fn displace<S: Scalar>(
    mesh: &TriMesh<S>,
    normals: &VertexNormals<S>,
    g: &[S],
    dt: S,
) -> Result<TriMesh<S>, FlowError> {
    let mut positions = Vec::with_capacity(mesh.vertex_count());
    for (v, p) in mesh.vertices().iter().enumerate() {
        let step = normals[v] * (dt * g[v]);
        let q = p - step;
        if !(q.x.is_finite() && q.y.is_finite() && q.z.is_finite()) {
            return Err(FlowError::NonFiniteUpdate { vertex: v });
        }
        positions.push(q);
    }
    Ok(mesh.with_vertices(positions)?)
}

/// Diagnostics of a single descent step.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics<S: Scalar> {
    pub max_abs_g: S,
    pub mean_h: S,
    pub mean_abs_phi: S,
}

/// One simultaneous descent step v ← v − δt·g·n̂ from a frozen snapshot of
/// the input mesh. Connectivity is unchanged.
pub fn evolve_step<S: Scalar, F: FieldSource<S>>(
    mesh: &TriMesh<S>,
    config: &FlowConfig<S>,
    src: &F,
) -> Result<(TriMesh<S>, StepDiagnostics<S>), FlowError> {
    config.validate()?;
    let snapshot = analyze(mesh, src)?;
    let g = gradient_values(&snapshot, config.alpha, config.beta);
    let next = displace(mesh, &snapshot.normals, &g, config.dt)?;
    let diag = StepDiagnostics {
        max_abs_g: g.iter().fold(S::zero(), |m, x| m.max(x.abs())),
        mean_h: mean(snapshot.curvatures.iter().map(|c| c.mean)),
        mean_abs_phi: mean(snapshot.samples.iter().map(|s| s.phi.abs())),
    };
    Ok((next, diag))
}

fn mean<S: Scalar>(values: impl Iterator<Item = S>) -> S {
    let mut sum = S::zero();
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        S::zero()
    } else {
        sum / S::from_usize(count).unwrap()
    }
}

/// Run the evolution from a fresh icosphere until the energy settles, the
/// iteration budget is reached, or a numerical failure aborts the run (the
/// partial trace is preserved in the result).
pub fn run<S: Scalar, F: FieldSource<S>>(
    config: &FlowConfig<S>,
    src: &F,
) -> Result<FlowResult<S>, FlowError> {
    run_with_observer(config, src, |_, _| {})
}

/// Same as [`run`], invoking `observer(iter, mesh)` with the initial mesh
/// (iter 0) and after every completed iteration.
pub fn run_with_observer<S: Scalar, F: FieldSource<S>>(
    config: &FlowConfig<S>,
    src: &F,
    mut observer: impl FnMut(u32, &TriMesh<S>),
) -> Result<FlowResult<S>, FlowError> {
    config.validate()?;
    let eps = real::<S>(1e-12);

    let mut mesh = icosphere(config.initial_radius, config.subdiv);
    observer(0, &mesh);

    let mut trace = FlowTrace::default();
    let abort = |iteration: u32, e: FlowError, mesh: TriMesh<S>, trace: FlowTrace<S>| FlowResult {
        mesh,
        trace,
        termination: Termination::Aborted {
            iteration,
            message: e.to_string(),
        },
    };

    let mut snapshot = match analyze(&mesh, src) {
        Ok(s) => s,
        Err(e) => return Ok(abort(0, e, mesh, trace)),
    };
    let mut e_prev =
        energy_from_snapshot(&mesh, &snapshot.normals, &snapshot.samples, config.alpha, config.beta);

    let mut termination = Termination::MaxIters;
    for iter in 1..=config.max_iters {
        let t0 = Instant::now();
        let g = gradient_values(&snapshot, config.alpha, config.beta);
        let max_abs_g = g.iter().fold(S::zero(), |m, x| m.max(x.abs()));

        mesh = match displace(&mesh, &snapshot.normals, &g, config.dt) {
            Ok(m) => m,
            Err(e) => return Ok(abort(iter, e, mesh, trace)),
        };
        snapshot = match analyze(&mesh, src) {
            Ok(s) => s,
            Err(e) => return Ok(abort(iter, e, mesh, trace)),
        };

        let e_now = energy_from_snapshot(
            &mesh,
            &snapshot.normals,
            &snapshot.samples,
            config.alpha,
            config.beta,
        );
        let rel_change = (e_now.total - e_prev.total).abs() / e_prev.total.max(eps);
        trace.records.push(TraceRecord {
            iter,
            e_total: e_now.total,
            e_alpha: e_now.alpha_term,
            e_beta: e_now.beta_term,
            rel_change,
            mean_abs_phi: mean(snapshot.samples.iter().map(|s| s.phi.abs())),
            max_abs_g,
            mean_h: mean(snapshot.curvatures.iter().map(|c| c.mean)),
            runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
        observer(iter, &mesh);
        e_prev = e_now;

        let absolute_hit = config
            .abs_energy_tol
            .map(|tol| e_now.total < tol)
            .unwrap_or(false);
        if rel_change <= config.rel_energy_tol || absolute_hit {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(FlowResult {
        mesh,
        trace,
        termination,
    })
}

/// First-order distance estimate |φ|/max(|∇φ|, ε) per vertex, aggregated.
pub fn distance_stats<S: Scalar, F: FieldSource<S>>(
    mesh: &TriMesh<S>,
    src: &F,
) -> Result<DistanceStats<S>, FlowError> {
    distance_stats_points(mesh.vertices(), src)
}

pub fn distance_stats_points<S: Scalar, F: FieldSource<S>>(
    points: &[Vector3<S>],
    src: &F,
) -> Result<DistanceStats<S>, FlowError> {
    let eps = real::<S>(EPS_GRAD);
    let samples = sample_vertices(points, src)?;
    let mut max_dist = S::zero();
    let mut sum = S::zero();
    for s in &samples {
        let d = s.phi.abs() / s.grad.norm().max(eps);
        sum += d;
        max_dist = max_dist.max(d);
    }
    Ok(DistanceStats {
        mean_dist: sum / S::from_usize(samples.len().max(1)).unwrap(),
        max_dist,
    })
}
