//! Point sampling of φ, ∇φ, D²φ: analytic backend (exact derivatives) and
//! grid backend (trilinear values, derivatives from node-wise central
//! differences), plus Newton projection onto the zero level set.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use super::field::ImplicitField;
use super::grid::{trilinear, GridSpec, ScalarGrid};
use crate::scalar::{real, Scalar};

/// Gradient magnitudes below this are treated as degenerate.
pub const EPS_GRAD: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("point ({x}, {y}, {z}) is outside the sampling domain")]
    OutOfDomain { x: f64, y: f64, z: f64 },
    #[error("gradient magnitude {magnitude:.3e} is below {limit:.1e}")]
    DegenerateGradient { magnitude: f64, limit: f64 },
    #[error("projection did not reach |phi| <= {tol:.3e} within {max_iter} iterations")]
    NoConvergence { tol: f64, max_iter: u32 },
}

/// Field value with first and second derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample<S: Scalar> {
    pub phi: S,
    pub grad: Vector3<S>,
    /// Symmetric 3×3 matrix D²φ.
    pub hess: Matrix3<S>,
}

/// Anything that answers φ, ∇φ, D²φ at a point. Immutable after
/// construction and safe for concurrent reads.
pub trait FieldSource<S: Scalar>: Sync {
    /// Full sample, or `OutOfDomain` when the point leaves the admissible
    /// region (grids enforce a 2-cell margin; analytic fields are global).
    fn sample(&self, p: &Vector3<S>) -> Result<FieldSample<S>, FieldError>;

    fn phi(&self, p: &Vector3<S>) -> Result<S, FieldError> {
        self.sample(p).map(|s| s.phi)
    }
}

/// Exact-derivative backend over an analytic field expression.
#[derive(Debug, Clone)]
pub struct AnalyticField<S: Scalar> {
    field: ImplicitField<S>,
}

impl<S: Scalar> AnalyticField<S> {
    pub fn new(field: ImplicitField<S>) -> Self {
        AnalyticField { field }
    }

    pub fn field(&self) -> &ImplicitField<S> {
        &self.field
    }
}

impl<S: Scalar> FieldSource<S> for AnalyticField<S> {
    fn sample(&self, p: &Vector3<S>) -> Result<FieldSample<S>, FieldError> {
        Ok(self.field.sample(p))
    }

    fn phi(&self, p: &Vector3<S>) -> Result<S, FieldError> {
        Ok(self.field.value(p))
    }
}

/// Grid backend: φ by trilinear interpolation; ∇φ and D²φ by trilinear
/// interpolation of node-wise second-order central differences (one-sided
/// second-order at boundary nodes). Differentiating node arrays instead of
/// the interpolant keeps the derivative fields continuous across cell faces.
#[derive(Debug, Clone)]
pub struct GridField<S: Scalar> {
    spec: GridSpec<S>,
    phi: Vec<S>,
    grad: [Vec<S>; 3],
    /// xx, yy, zz, xy, xz, yz — symmetrized mixed terms.
    hess: [Vec<S>; 6],
}

impl<S: Scalar> GridField<S> {
    pub fn new(grid: &ScalarGrid<S>) -> Self {
        let spec = grid.spec().clone();
        let gx = diff_axis(&spec, grid.values(), 0);
        let gy = diff_axis(&spec, grid.values(), 1);
        let gz = diff_axis(&spec, grid.values(), 2);

        let hxx = diff_axis(&spec, &gx, 0);
        let hyy = diff_axis(&spec, &gy, 1);
        let hzz = diff_axis(&spec, &gz, 2);
        let hxy = average(&diff_axis(&spec, &gx, 1), &diff_axis(&spec, &gy, 0));
        let hxz = average(&diff_axis(&spec, &gx, 2), &diff_axis(&spec, &gz, 0));
        let hyz = average(&diff_axis(&spec, &gy, 2), &diff_axis(&spec, &gz, 1));

        GridField {
            spec,
            phi: grid.values().to_vec(),
            grad: [gx, gy, gz],
            hess: [hxx, hyy, hzz, hxy, hxz, hyz],
        }
    }

    pub fn spec(&self) -> &GridSpec<S> {
        &self.spec
    }
}

impl<S: Scalar> FieldSource<S> for GridField<S> {
    fn sample(&self, p: &Vector3<S>) -> Result<FieldSample<S>, FieldError> {
        self.spec.check_in_bounds(p)?;
        let phi = trilinear(&self.spec, &self.phi, p);
        let grad = Vector3::new(
            trilinear(&self.spec, &self.grad[0], p),
            trilinear(&self.spec, &self.grad[1], p),
            trilinear(&self.spec, &self.grad[2], p),
        );
        let hxx = trilinear(&self.spec, &self.hess[0], p);
        let hyy = trilinear(&self.spec, &self.hess[1], p);
        let hzz = trilinear(&self.spec, &self.hess[2], p);
        let hxy = trilinear(&self.spec, &self.hess[3], p);
        let hxz = trilinear(&self.spec, &self.hess[4], p);
        let hyz = trilinear(&self.spec, &self.hess[5], p);
        let hess = Matrix3::new(hxx, hxy, hxz, hxy, hyy, hyz, hxz, hyz, hzz);
        Ok(FieldSample { phi, grad, hess })
    }

    fn phi(&self, p: &Vector3<S>) -> Result<S, FieldError> {
        self.spec.check_in_bounds(p)?;
        Ok(trilinear(&self.spec, &self.phi, p))
    }
}

/// Per-node derivative along one axis: central (f₊ − f₋)/2h inside,
/// one-sided second order (−3f₀ + 4f₁ − f₂)/2h at the two boundary planes.
fn diff_axis<S: Scalar>(spec: &GridSpec<S>, values: &[S], axis: usize) -> Vec<S> {
    let dims = spec.dims();
    let n = dims[axis];
    let h = spec.spacing()[axis];
    let inv2h = S::one() / (real::<S>(2.0) * h);
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let mut out = vec![S::zero(); values.len()];
    let three = real::<S>(3.0);
    let four = real::<S>(4.0);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let idx = spec.linear(i, j, k);
                let a = [i, j, k][axis];
                out[idx] = if a == 0 {
                    (-three * values[idx] + four * values[idx + stride]
                        - values[idx + 2 * stride])
                        * inv2h
                } else if a == n - 1 {
                    (three * values[idx] - four * values[idx - stride]
                        + values[idx - 2 * stride])
                        * inv2h
                } else {
                    (values[idx + stride] - values[idx - stride]) * inv2h
                };
            }
        }
    }
    out
}

fn average<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let half = real::<S>(0.5);
    a.iter().zip(b).map(|(&x, &y)| (x + y) * half).collect()
}

/// Project a point onto the zero level set by damped-Newton iteration on
/// φ: p ← p − φ·∇φ/|∇φ|². Returns once |φ(p)| ≤ tol.
pub fn project_to_zero<S: Scalar>(
    src: &impl FieldSource<S>,
    start: &Vector3<S>,
    tol: S,
    max_iter: u32,
) -> Result<Vector3<S>, FieldError> {
    let eps_grad = real::<S>(EPS_GRAD);
    let mut p = *start;
    let mut sample = src.sample(&p)?;
    if sample.phi.abs() <= tol {
        return Ok(p);
    }
    for _ in 0..max_iter {
        let g2 = sample.grad.norm_squared();
        if g2.sqrt() <= eps_grad {
            return Err(FieldError::DegenerateGradient {
                magnitude: g2.sqrt().as_f64(),
                limit: EPS_GRAD,
            });
        }
        p -= sample.grad * (sample.phi / g2);
        sample = src.sample(&p)?;
        if sample.phi.abs() <= tol {
            return Ok(p);
        }
    }
    Err(FieldError::NoConvergence {
        tol: tol.as_f64(),
        max_iter,
    })
}
