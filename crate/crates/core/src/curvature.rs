//! Per-vertex curvature: rotate the one-ring into the tangent frame of the
//! vertex normal, least-squares fit the paraboloid
//! z(x, y) = (A/2)x² + Bxy + (C/2)y², and read curvatures off the Weingarten
//! matrix W = [[−A, B], [B, −C]]: H = ½·tr(W) = −(A+C)/2, G = det(W) = AC−B².
//!
//! With outward normals this sign convention gives H = +1/r and G = 1/r² on
//! a sphere of radius r.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::{TriMesh, VertexNormals};
use crate::scalar::{real, Scalar};

/// Condition-number estimate above which the normal equations get a
/// Tikhonov term λ = 1e−12·trace.
const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error("vertex {vertex} has {count} ring neighbors; need at least 3")]
    InsufficientNeighbors { vertex: usize, count: usize },
    #[error("vertex {vertex}: paraboloid fit is singular even on the two-ring")]
    SingularFit { vertex: usize },
}

/// Rank deficiency of one paraboloid fit, before vertex context is known.
#[derive(Debug, Error)]
#[error("regularized normal equations are rank-deficient")]
pub struct SingularFit;

/// Failures collected over a whole mesh, with the offending vertex ids.
#[derive(Debug, Error)]
#[error("curvature failed at {} vertices (first: {first})", .failures.len())]
pub struct CurvatureFieldError {
    pub failures: Vec<CurvatureError>,
    first: usize,
}

/// Rotation taking a unit vector onto +ẑ, built from Rodrigues' formula
/// R = I + sinθ·K + (1−cosθ)·K² about the axis (n̂ × ẑ)/|n̂ × ẑ|.
#[derive(Debug, Clone)]
pub struct RotationFrame<S: Scalar> {
    pub rotation: Matrix3<S>,
    pub theta: S,
    /// `None` when n̂ is parallel to ẑ and the axis is undefined.
    pub axis: Option<Vector3<S>>,
}

/// Paraboloid coefficients of one fitted patch.
#[derive(Debug, Clone, Copy)]
pub struct PatchFit<S: Scalar> {
    pub a: S,
    pub b: S,
    pub c: S,
    /// Root-mean-square residual of the fit (length units).
    pub residual: S,
    pub neighbor_count: usize,
}

/// Curvature state of one vertex.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureSample<S: Scalar> {
    pub mean: S,
    pub gaussian: S,
    pub normal: Vector3<S>,
}

/// Rotation mapping `n` (unit) onto +ẑ. Degenerate axis handling: identity
/// when n̂ ≈ +ẑ, the 180° rotation diag(1, −1, −1) when n̂ ≈ −ẑ.
pub fn rotation_to_z<S: Scalar>(n: &Vector3<S>) -> RotationFrame<S> {
    let z = Vector3::new(S::zero(), S::zero(), S::one());
    let cross = n.cross(&z);
    let sin_theta = cross.norm();
    let cos_theta = n.dot(&z);
    if sin_theta < real(1e-12) {
        let (rotation, theta) = if cos_theta > S::zero() {
            (Matrix3::identity(), S::zero())
        } else {
            (
                Matrix3::from_diagonal(&Vector3::new(S::one(), -S::one(), -S::one())),
                S::pi(),
            )
        };
        return RotationFrame {
            rotation,
            theta,
            axis: None,
        };
    }
    let axis = cross / sin_theta;
    let k = skew(&axis);
    let theta = cos_theta.min(S::one()).max(-S::one()).acos();
    let rotation = Matrix3::identity() + k * theta.sin() + k * k * (S::one() - theta.cos());
    RotationFrame {
        rotation,
        theta,
        axis: Some(axis),
    }
}

fn skew<S: Scalar>(a: &Vector3<S>) -> Matrix3<S> {
    Matrix3::new(
        S::zero(),
        -a.z,
        a.y,
        a.z,
        S::zero(),
        -a.x,
        -a.y,
        a.x,
        S::zero(),
    )
}

/// One-ring neighbors of `v`, shifted so `v` is at the origin and rotated so
/// its normal is +ẑ: q_i = R·(v_i − v).
pub fn local_patch<S: Scalar>(
    mesh: &TriMesh<S>,
    normals: &VertexNormals<S>,
    v: usize,
) -> Result<Vec<Vector3<S>>, CurvatureError> {
    let ring = mesh.one_ring(v);
    if ring.len() < 3 {
        return Err(CurvatureError::InsufficientNeighbors {
            vertex: v,
            count: ring.len(),
        });
    }
    let frame = rotation_to_z(&normals[v]);
    let center = mesh.vertices()[v];
    Ok(ring
        .iter()
        .map(|&i| frame.rotation * (mesh.vertices()[i as usize] - center))
        .collect())
}

/// Least-squares fit of z = (A/2)x² + Bxy + (C/2)y² through the patch,
/// via the 3×3 normal equations; adds a Tikhonov term when ill-conditioned.
/// Fewer than 3 points leave the system rank-deficient, hence singular.
pub fn fit_paraboloid<S: Scalar>(patch: &[Vector3<S>]) -> Result<PatchFit<S>, SingularFit> {
    let half = real::<S>(0.5);
    let mut ata = Matrix3::<S>::zeros();
    let mut atz = Vector3::<S>::zeros();
    for q in patch {
        let m = Vector3::new(half * q.x * q.x, q.x * q.y, half * q.y * q.y);
        ata += m * m.transpose();
        atz += m * q.z;
    }

    let coeffs = solve_normal_equations(&ata, &atz).ok_or(SingularFit)?;

    let mut sq_sum = S::zero();
    for q in patch {
        let model = half * coeffs.x * q.x * q.x + coeffs.y * q.x * q.y + half * coeffs.z * q.y * q.y;
        let r = q.z - model;
        sq_sum += r * r;
    }
    let residual = (sq_sum / S::from_usize(patch.len()).unwrap()).sqrt();

    Ok(PatchFit {
        a: coeffs.x,
        b: coeffs.y,
        c: coeffs.z,
        residual,
        neighbor_count: patch.len(),
    })
}

/// Solve AᵀA·c = Aᵀz. Above the condition limit the system is damped with
/// λ = 1e−12·trace, which resolves under-determined directions to the
/// minimum-norm answer (rank-deficient crease patches then report the
/// ill-conditioned curvature instead of failing, mirroring how crease
/// curvature is handled in the experiments). `None` only when even the
/// damped system is uninvertible — a zero-information patch.
fn solve_normal_equations<S: Scalar>(ata: &Matrix3<S>, atz: &Vector3<S>) -> Option<Vector3<S>> {
    if let Some(inv) = ata.try_inverse() {
        let cond = (ata.norm() * inv.norm()).as_f64();
        if cond <= COND_LIMIT {
            return Some(inv * atz);
        }
    }
    let lambda = real::<S>(1e-12) * ata.trace();
    let usable = lambda.is_finite() && lambda > S::zero();
    if !usable {
        return None;
    }
    let damped = ata + Matrix3::from_diagonal_element(lambda);
    damped.try_inverse().map(|inv| inv * atz)
}

/// Curvature of one vertex. A rank-deficient one-ring fit falls back to the
/// two-ring before reporting failure.
pub fn curvature<S: Scalar>(
    mesh: &TriMesh<S>,
    normals: &VertexNormals<S>,
    v: usize,
) -> Result<CurvatureSample<S>, CurvatureError> {
    let patch = local_patch(mesh, normals, v)?;
    let fit = match fit_paraboloid(&patch) {
        Ok(fit) => fit,
        Err(SingularFit) => {
            let patch2 = two_ring_patch(mesh, normals, v);
            fit_paraboloid(&patch2).map_err(|_| CurvatureError::SingularFit { vertex: v })?
        }
    };
    Ok(sample_from_fit(&fit, normals[v]))
}

pub(crate) fn sample_from_fit<S: Scalar>(fit: &PatchFit<S>, normal: Vector3<S>) -> CurvatureSample<S> {
    let half = real::<S>(0.5);
    CurvatureSample {
        mean: -(fit.a + fit.c) * half,
        gaussian: fit.a * fit.c - fit.b * fit.b,
        normal,
    }
}

fn two_ring_patch<S: Scalar>(
    mesh: &TriMesh<S>,
    normals: &VertexNormals<S>,
    v: usize,
) -> Vec<Vector3<S>> {
    let mut seen: Vec<u32> = Vec::new();
    for &n1 in mesh.one_ring(v) {
        if n1 as usize != v && !seen.contains(&n1) {
            seen.push(n1);
        }
        for &n2 in mesh.one_ring(n1 as usize) {
            if n2 as usize != v && !seen.contains(&n2) {
                seen.push(n2);
            }
        }
    }
    let frame = rotation_to_z(&normals[v]);
    let center = mesh.vertices()[v];
    seen.iter()
        .map(|&i| frame.rotation * (mesh.vertices()[i as usize] - center))
        .collect()
}

/// Curvature at every vertex; failures are aggregated with vertex ids.
pub fn curvature_field<S: Scalar>(
    mesh: &TriMesh<S>,
    normals: &VertexNormals<S>,
) -> Result<Vec<CurvatureSample<S>>, CurvatureFieldError> {
    let results: Vec<Result<CurvatureSample<S>, CurvatureError>> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| curvature(mesh, normals, v))
        .collect();

    let mut samples = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => failures.push(e),
        }
    }
    if failures.is_empty() {
        Ok(samples)
    } else {
        let first = match &failures[0] {
            CurvatureError::InsufficientNeighbors { vertex, .. } => *vertex,
            CurvatureError::SingularFit { vertex } => *vertex,
        };
        Err(CurvatureFieldError { failures, first })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{icosphere, vertex_normals};

    fn hex_ring(f: impl Fn(f64, f64) -> f64, radius: f64) -> Vec<Vector3<f64>> {
        (0..6)
            .map(|k| {
                let t = std::f64::consts::FRAC_PI_3 * k as f64 + 0.1;
                let (x, y) = (radius * t.cos(), radius * t.sin());
                Vector3::new(x, y, f(x, y))
            })
            .collect()
    }

    #[test]
    fn rotation_identity_and_flip() {
        let up = rotation_to_z(&Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(up.rotation, Matrix3::identity());
        assert!(up.axis.is_none());

        let down = rotation_to_z(&Vector3::new(0.0, 0.0, -1.0));
        assert_eq!(
            down.rotation,
            Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
        );
        assert!((down.theta - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn rotation_from_x_axis() {
        let f = rotation_to_z(&Vector3::new(1.0, 0.0, 0.0));
        let axis = f.axis.unwrap();
        assert!((axis - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
        assert!((f.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let mapped = f.rotation * Vector3::new(1.0, 0.0, 0.0);
        assert!((mapped - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn rotation_is_orthonormal_on_random_normals() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let v = Vector3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            );
            if v.norm() < 1e-3 {
                continue;
            }
            let n = v.normalize();
            let f = rotation_to_z(&n);
            let r = f.rotation;
            assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
            assert!((r * n - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn fit_recovers_exact_model_class() {
        let fit = fit_paraboloid(&hex_ring(|x, _| x * x / 2.0, 0.1)).unwrap();
        assert!((fit.a - 1.0).abs() < 1e-10);
        assert!(fit.b.abs() < 1e-10);
        assert!(fit.c.abs() < 1e-10);
        assert!(fit.residual < 1e-12);

        let flat = fit_paraboloid(&hex_ring(|_, _| 0.0, 0.3)).unwrap();
        assert_eq!((flat.a, flat.b, flat.c), (0.0, 0.0, 0.0));

        let saddle = fit_paraboloid(&hex_ring(|x, y| x * y, 0.2)).unwrap();
        assert!((saddle.b - 1.0).abs() < 1e-10);
        assert!(saddle.a.abs() < 1e-10 && saddle.c.abs() < 1e-10);
    }

    #[test]
    fn zero_information_patch_is_singular() {
        // every point at the origin: no scale, even the damped system fails
        let patch = vec![Vector3::new(0.0f64, 0.0, 0.0); 4];
        assert!(matches!(fit_paraboloid(&patch), Err(SingularFit)));
    }

    #[test]
    fn collinear_patch_resolves_to_minimum_norm() {
        // all points on the x-axis: xy and y² columns vanish; the damped
        // solve keeps the informative A coefficient and zeroes B and C
        let patch: Vec<Vector3<f64>> = (1..=4)
            .map(|k| {
                let x = k as f64 * 0.1;
                Vector3::new(x, 0.0, x * x) // z = x² means A = 2
            })
            .collect();
        let fit = fit_paraboloid(&patch).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-9);
        assert_eq!(fit.b, 0.0);
        assert_eq!(fit.c, 0.0);
    }

    #[test]
    fn sphere_curvatures_within_discretization_bands() {
        // oracle: subdiv-4 fit errors are below 2% for H and 4% for G
        for r in [0.5f64, 1.0, 2.0] {
            let mesh = icosphere(r, 4);
            let normals = vertex_normals(&mesh).unwrap();
            let field = curvature_field(&mesh, &normals).unwrap();
            for s in &field {
                let h = s.mean * r;
                let g = s.gaussian * r * r;
                assert!((0.95..=1.05).contains(&h), "H·r = {h} at r = {r}");
                assert!((0.90..=1.10).contains(&g), "G·r² = {g} at r = {r}");
            }
        }
    }

    #[test]
    fn flat_fan_curvature_is_exactly_zero() {
        let fit = fit_paraboloid(&hex_ring(|_, _| 0.0, 1.0)).unwrap();
        let s = sample_from_fit(&fit, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.gaussian, 0.0);
    }

    #[test]
    fn curvature_scales_inversely_with_size() {
        let mesh = icosphere(1.0f64, 3);
        let normals = vertex_normals(&mesh).unwrap();
        let base = curvature_field(&mesh, &normals).unwrap();

        let s = 2.5;
        let scaled = mesh
            .with_vertices(mesh.vertices().iter().map(|v| v * s).collect())
            .unwrap();
        let scaled_normals = vertex_normals(&scaled).unwrap();
        let scaled_field = curvature_field(&scaled, &scaled_normals).unwrap();

        for (a, b) in base.iter().zip(&scaled_field) {
            assert!((b.mean - a.mean / s).abs() <= 1e-9 * a.mean.abs().max(1.0));
            assert!((b.gaussian - a.gaussian / (s * s)).abs() <= 1e-9 * a.gaussian.abs().max(1.0));
        }
    }

    #[test]
    fn curvature_rotation_equivariance() {
        let mesh = icosphere(1.0f64, 3);
        let normals = vertex_normals(&mesh).unwrap();
        let base = curvature_field(&mesh, &normals).unwrap();

        // rotate by an arbitrary rotation
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.8, 1.7);
        let rotated = mesh
            .with_vertices(mesh.vertices().iter().map(|v| rot * v).collect())
            .unwrap();
        let rn = vertex_normals(&rotated).unwrap();
        let rf = curvature_field(&rotated, &rn).unwrap();

        for (a, b) in base.iter().zip(&rf) {
            assert!((a.mean - b.mean).abs() <= 1e-8);
            assert!((a.gaussian - b.gaussian).abs() <= 1e-8);
        }
    }

    #[test]
    fn curvature_field_is_deterministic() {
        let mesh = icosphere(1.0f64, 4);
        let normals = vertex_normals(&mesh).unwrap();
        let a = curvature_field(&mesh, &normals).unwrap();
        let b = curvature_field(&mesh, &normals).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean, y.mean);
            assert_eq!(x.gaussian, y.gaussian);
        }
    }

    #[test]
    fn principal_curvature_discriminant_holds() {
        let mesh = icosphere(1.0f64, 3);
        let scaled = mesh
            .with_vertices(
                mesh.vertices()
                    .iter()
                    .map(|v| Vector3::new(v.x, 2.0 * v.y, v.z))
                    .collect(),
            )
            .unwrap();
        let normals = vertex_normals(&scaled).unwrap();
        for s in curvature_field(&scaled, &normals).unwrap() {
            assert!(s.mean * s.mean >= s.gaussian - 1e-9);
        }
    }

    #[test]
    fn ellipsoid_gaussian_curvature_range() {
        // semi-axes (1,2,1): analytic G spans [1/4, 4]
        let mesh = icosphere(1.0f64, 4);
        let scaled = mesh
            .with_vertices(
                mesh.vertices()
                    .iter()
                    .map(|v| Vector3::new(v.x, 2.0 * v.y, v.z))
                    .collect(),
            )
            .unwrap();
        let normals = vertex_normals(&scaled).unwrap();
        for s in curvature_field(&scaled, &normals).unwrap() {
            assert!(
                (0.2..=4.4).contains(&s.gaussian),
                "G = {} outside widened analytic range",
                s.gaussian
            );
        }
    }

    #[test]
    fn local_patch_properties_on_icosphere() {
        let mesh = icosphere(1.0f64, 4);
        let normals = vertex_normals(&mesh).unwrap();
        for v in [0usize, 100, 2000] {
            let patch = local_patch(&mesh, &normals, v).unwrap();
            let ring = mesh.one_ring(v);
            for (q, &i) in patch.iter().zip(ring) {
                // rotation preserves distances to the center
                let d = (mesh.vertices()[i as usize] - mesh.vertices()[v]).norm();
                assert!((q.norm() - d).abs() <= 1e-12);
                // the sphere curves away from the outward normal
                assert!(q.z <= 0.0, "q.z = {} at vertex {v}", q.z);
            }
        }
    }
}
