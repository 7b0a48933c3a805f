//! Regular grids of field values and trilinear point sampling.

use nalgebra::Vector3;
use thiserror::Error;

use super::field::{ImplicitField, Phantom};
use super::sample::FieldError;
use crate::scalar::{real, Scalar};

/// Cells of margin kept between any sample point and the grid boundary, so
/// the finite-difference stencils around the enclosing cell stay interior.
pub const SAMPLING_MARGIN_CELLS: usize = 2;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid dims ({0}, {1}, {2}) invalid: every dimension must be >= 2")]
    InvalidDims(usize, usize, usize),
    #[error("grid spacing must be positive in every axis")]
    InvalidSpacing,
    #[error("value count {got} does not match dims product {expected}")]
    ValueCountMismatch { expected: usize, got: usize },
    #[error("grid value at linear index {index} is not finite")]
    NonFiniteValue { index: usize },
}

/// Geometry of a regular grid: node (i,j,k) sits at origin + (i,j,k)·spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<S: Scalar> {
    dims: [usize; 3],
    origin: Vector3<S>,
    spacing: Vector3<S>,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(dims: [usize; 3], origin: Vector3<S>, spacing: Vector3<S>) -> Result<Self, GridError> {
        if dims.iter().any(|&d| d < 2) {
            return Err(GridError::InvalidDims(dims[0], dims[1], dims[2]));
        }
        if !(spacing.x > S::zero() && spacing.y > S::zero() && spacing.z > S::zero()) {
            return Err(GridError::InvalidSpacing);
        }
        Ok(GridSpec {
            dims,
            origin,
            spacing,
        })
    }

    /// Cubic grid over [lo, hi]³ with n nodes per axis.
    pub fn cube(lo: S, hi: S, n: usize) -> Result<Self, GridError> {
        if n < 2 || hi <= lo {
            return Err(GridError::InvalidDims(n, n, n));
        }
        let h = (hi - lo) / S::from_usize(n - 1).expect("grid size fits scalar");
        GridSpec::new([n; 3], Vector3::new(lo, lo, lo), Vector3::new(h, h, h))
    }

    /// Default experimental domain: [−2.5, 2.5]³ at 64³ nodes.
    pub fn default_domain() -> Self {
        GridSpec::cube(real(-2.5), real(2.5), 64).expect("default domain is valid")
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Vector3<S> {
        self.origin
    }

    pub fn spacing(&self) -> Vector3<S> {
        self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Linear index with x fastest, then y, then z.
    #[inline]
    pub fn linear(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vector3<S> {
        Vector3::new(
            self.origin.x + S::from_usize(i).unwrap() * self.spacing.x,
            self.origin.y + S::from_usize(j).unwrap() * self.spacing.y,
            self.origin.z + S::from_usize(k).unwrap() * self.spacing.z,
        )
    }

    /// Admissible sampling box: the bounding box shrunk by the margin.
    pub fn sampling_bounds(&self) -> (Vector3<S>, Vector3<S>) {
        let m = S::from_usize(SAMPLING_MARGIN_CELLS).unwrap();
        let lo = self.origin + self.spacing * m;
        let hi = Vector3::new(
            self.origin.x + self.spacing.x * S::from_usize(self.dims[0] - 1).unwrap(),
            self.origin.y + self.spacing.y * S::from_usize(self.dims[1] - 1).unwrap(),
            self.origin.z + self.spacing.z * S::from_usize(self.dims[2] - 1).unwrap(),
        ) - self.spacing * m;
        (lo, hi)
    }

    pub(super) fn check_in_bounds(&self, p: &Vector3<S>) -> Result<(), FieldError> {
        let (lo, hi) = self.sampling_bounds();
        let inside = p.x >= lo.x
            && p.x <= hi.x
            && p.y >= lo.y
            && p.y <= hi.y
            && p.z >= lo.z
            && p.z <= hi.z;
        if inside {
            Ok(())
        } else {
            Err(FieldError::OutOfDomain {
                x: p.x.as_f64(),
                y: p.y.as_f64(),
                z: p.z.as_f64(),
            })
        }
    }
}

/// Node values of a scalar field on a regular grid, x-fastest ordering.
#[derive(Debug, Clone)]
pub struct ScalarGrid<S: Scalar> {
    spec: GridSpec<S>,
    values: Vec<S>,
}

impl<S: Scalar> ScalarGrid<S> {
    pub fn new(spec: GridSpec<S>, values: Vec<S>) -> Result<Self, GridError> {
        if values.len() != spec.node_count() {
            return Err(GridError::ValueCountMismatch {
                expected: spec.node_count(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFiniteValue { index });
        }
        Ok(ScalarGrid { spec, values })
    }

    pub fn spec(&self) -> &GridSpec<S> {
        &self.spec
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> S {
        self.values[self.spec.linear(i, j, k)]
    }

    /// Trilinear blend of the 8 node values of the enclosing cell. The point
    /// must respect the sampling margin.
    pub fn sample_trilinear(&self, p: &Vector3<S>) -> Result<S, FieldError> {
        self.spec.check_in_bounds(p)?;
        Ok(trilinear(&self.spec, &self.values, p))
    }
}

/// Trilinear interpolation without the margin check (callers guarantee the
/// point is inside the node lattice).
pub(super) fn trilinear<S: Scalar>(spec: &GridSpec<S>, values: &[S], p: &Vector3<S>) -> S {
    let [nx, ny, nz] = spec.dims();
    let q = Vector3::new(
        (p.x - spec.origin.x) / spec.spacing.x,
        (p.y - spec.origin.y) / spec.spacing.y,
        (p.z - spec.origin.z) / spec.spacing.z,
    );
    let cell = |q: S, n: usize| -> (usize, S) {
        let max_cell = S::from_usize(n - 2).unwrap();
        let f = q.floor().max(S::zero()).min(max_cell);
        (f.to_usize().unwrap(), q - f)
    };
    let (i, tx) = cell(q.x, nx);
    let (j, ty) = cell(q.y, ny);
    let (k, tz) = cell(q.z, nz);

    let v = |di: usize, dj: usize, dk: usize| values[spec.linear(i + di, j + dj, k + dk)];
    let one = S::one();
    let c00 = v(0, 0, 0) * (one - tx) + v(1, 0, 0) * tx;
    let c10 = v(0, 1, 0) * (one - tx) + v(1, 1, 0) * tx;
    let c01 = v(0, 0, 1) * (one - tx) + v(1, 0, 1) * tx;
    let c11 = v(0, 1, 1) * (one - tx) + v(1, 1, 1) * tx;
    let c0 = c00 * (one - ty) + c10 * ty;
    let c1 = c01 * (one - ty) + c11 * ty;
    c0 * (one - tz) + c1 * tz
}

/// Evaluate a phantom at every node.
pub fn rasterize<S: Scalar>(phantom: Phantom, spec: &GridSpec<S>) -> ScalarGrid<S> {
    rasterize_field(&phantom.field(), spec)
}

pub fn rasterize_field<S: Scalar>(field: &ImplicitField<S>, spec: &GridSpec<S>) -> ScalarGrid<S> {
    let [nx, ny, nz] = spec.dims();
    let mut values = Vec::with_capacity(spec.node_count());
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                values.push(field.value(&spec.node_position(i, j, k)));
            }
        }
    }
    ScalarGrid {
        spec: spec.clone(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::<f64>::new(
            [1, 4, 4],
            Vector3::zeros(),
            Vector3::new(1.0, 1.0, 1.0)
        )
        .is_err());
        assert!(GridSpec::<f64>::new(
            [4, 4, 4],
            Vector3::zeros(),
            Vector3::new(1.0, 0.0, 1.0)
        )
        .is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let spec = GridSpec::cube(0.0f64, 1.0, 2).unwrap();
        let mut values = vec![0.0; 8];
        values[3] = f64::NAN;
        assert!(matches!(
            ScalarGrid::new(spec, values),
            Err(GridError::NonFiniteValue { index: 3 })
        ));
    }

    #[test]
    fn rasterize_sphere_node_values() {
        // 65 nodes over [-2.5, 2.5] puts a node exactly at the origin
        let spec = GridSpec::cube(-2.5f64, 2.5, 65).unwrap();
        let grid = rasterize(Phantom::Sphere, &spec);
        assert_eq!(grid.values().len(), 65 * 65 * 65);
        assert!((grid.at(32, 32, 32) - (-1.0)).abs() <= 1e-12);
    }

    #[test]
    fn trilinear_at_node_and_cell_center() {
        let spec = GridSpec::cube(-2.5f64, 2.5, 64).unwrap();
        let grid = rasterize(Phantom::Sphere, &spec);
        let p = spec.node_position(20, 31, 33);
        let v = grid.sample_trilinear(&p).unwrap();
        assert!((v - grid.at(20, 31, 33)).abs() <= 1e-12);

        let c = (spec.node_position(20, 31, 33) + spec.node_position(21, 32, 34)) * 0.5;
        let mut mean = 0.0;
        for di in 0..2 {
            for dj in 0..2 {
                for dk in 0..2 {
                    mean += grid.at(20 + di, 31 + dj, 33 + dk);
                }
            }
        }
        mean /= 8.0;
        assert!((grid.sample_trilinear(&c).unwrap() - mean).abs() <= 1e-12);
    }

    #[test]
    fn trilinear_reproduces_trilinear_fields() {
        // g(x,y,z) = 2x + 3y - z + xy is in the trilinear span
        let g = |p: &Vector3<f64>| 2.0 * p.x + 3.0 * p.y - p.z + p.x * p.y;
        let spec = GridSpec::cube(-1.0f64, 1.0, 9).unwrap();
        let mut values = Vec::new();
        for k in 0..9 {
            for j in 0..9 {
                for i in 0..9 {
                    values.push(g(&spec.node_position(i, j, k)));
                }
            }
        }
        let grid = ScalarGrid::new(spec, values).unwrap();
        let pts = [
            Vector3::new(0.123, -0.234, 0.311),
            Vector3::new(-0.4, 0.4, -0.2),
            Vector3::new(0.01, 0.02, 0.03),
        ];
        for p in pts {
            let v = grid.sample_trilinear(&p).unwrap();
            assert!((v - g(&p)).abs() <= 1e-10 * (1.0 + g(&p).abs()));
        }
    }

    #[test]
    fn margin_is_enforced() {
        let spec = GridSpec::cube(-2.5f64, 2.5, 64).unwrap();
        let grid = rasterize(Phantom::Sphere, &spec);
        let h = spec.spacing().x;
        assert!(grid
            .sample_trilinear(&Vector3::new(-2.5 + 2.0 * h, 0.0, 0.0))
            .is_ok());
        assert!(matches!(
            grid.sample_trilinear(&Vector3::new(-2.5 + 1.5 * h, 0.0, 0.0)),
            Err(FieldError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn sphere_sign_change_cells_form_one_shell() {
        let spec = GridSpec::<f64>::default_domain();
        let grid = rasterize(Phantom::Sphere, &spec);
        let [nx, ny, nz] = spec.dims();
        let mixed = |i: usize, j: usize, k: usize| {
            let mut neg = 0;
            for di in 0..2 {
                for dj in 0..2 {
                    for dk in 0..2 {
                        if grid.at(i + di, j + dj, k + dk) < 0.0 {
                            neg += 1;
                        }
                    }
                }
            }
            neg > 0 && neg < 8
        };
        let mut cells = std::collections::HashSet::new();
        for k in 0..nz - 1 {
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    if mixed(i, j, k) {
                        cells.insert((i as i32, j as i32, k as i32));
                    }
                }
            }
        }
        assert!(!cells.is_empty());
        // flood fill over face-adjacency
        let start = *cells.iter().min().unwrap();
        let mut seen = std::collections::HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some((i, j, k)) = queue.pop_front() {
            for d in [
                (1, 0, 0),
                (-1, 0, 0),
                (0, 1, 0),
                (0, -1, 0),
                (0, 0, 1),
                (0, 0, -1),
            ] {
                let nb = (i + d.0, j + d.1, k + d.2);
                if cells.contains(&nb) && seen.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
        assert_eq!(seen.len(), cells.len(), "shell is not connected");
    }
}
