//! Mesh-vs-field quality reports.

use serde::Serialize;

use crate::curvature::curvature_field;
use crate::flow::{distance_stats, FlowError};
use crate::levelset::FieldSource;
use crate::mesh::{vertex_normals, TriMesh};
use crate::scalar::Scalar;

/// Mean/std of H plus the 95th percentile of |H| (the smoothing metric).
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSummary {
    pub mean: f64,
    pub std: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianSummary {
    pub mean: f64,
    pub std: f64,
}

/// The metrics report; serialized with exactly these keys.
#[derive(Debug, Clone, Serialize)]
pub struct MeshMetrics {
    pub vertex_count: usize,
    pub face_count: usize,
    pub mean_dist: f64,
    pub max_dist: f64,
    #[serde(rename = "H")]
    pub h: CurvatureSummary,
    #[serde(rename = "G")]
    pub g: GaussianSummary,
    pub min_triangle_angle_deg: f64,
}

pub fn summarize<S: Scalar>(values: &[S]) -> CurvatureSummary {
    let (mean, std) = mean_std(values);
    CurvatureSummary {
        mean,
        std,
        p95: percentile_abs(values, 0.95),
    }
}

pub fn gaussian_summary<S: Scalar>(values: &[S]) -> GaussianSummary {
    let (mean, std) = mean_std(values);
    GaussianSummary { mean, std }
}

fn mean_std<S: Scalar>(values: &[S]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let var = values
        .iter()
        .map(|v| {
            let d = v.as_f64() - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

/// Nearest-rank percentile of |values| in [0, 1].
pub fn percentile_abs<S: Scalar>(values: &[S], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted: Vec<f64> = values.iter().map(|v| v.as_f64().abs()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Smallest interior angle over all triangles, in degrees.
pub fn min_triangle_angle_deg<S: Scalar>(mesh: &TriMesh<S>) -> f64 {
    let mut min_angle = f64::INFINITY;
    for f in mesh.faces() {
        let p = [
            mesh.vertices()[f[0] as usize],
            mesh.vertices()[f[1] as usize],
            mesh.vertices()[f[2] as usize],
        ];
        for k in 0..3 {
            let a = p[k];
            let u = (p[(k + 1) % 3] - a).normalize();
            let v = (p[(k + 2) % 3] - a).normalize();
            let cos = u.dot(&v).as_f64().clamp(-1.0, 1.0);
            min_angle = min_angle.min(cos.acos());
        }
    }
    min_angle.to_degrees()
}

/// Full metrics of a mesh against a field source.
pub fn compute_metrics<S: Scalar, F: FieldSource<S>>(
    mesh: &TriMesh<S>,
    src: &F,
) -> Result<MeshMetrics, FlowError> {
    let normals = vertex_normals(mesh)?;
    let curv = curvature_field(mesh, &normals)?;
    let h: Vec<S> = curv.iter().map(|c| c.mean).collect();
    let g: Vec<S> = curv.iter().map(|c| c.gaussian).collect();
    let dist = distance_stats(mesh, src)?;
    Ok(MeshMetrics {
        vertex_count: mesh.vertex_count(),
        face_count: mesh.face_count(),
        mean_dist: dist.mean_dist.as_f64(),
        max_dist: dist.max_dist.as_f64(),
        h: summarize(&h),
        g: gaussian_summary(&g),
        min_triangle_angle_deg: min_triangle_angle_deg(mesh),
    })
}
