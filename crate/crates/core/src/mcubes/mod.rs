//! Marching Cubes isosurface extraction: the non-deformable baseline.
//!
//! Every grid cell is classified by the signs of its 8 corners against the
//! iso level; the canonical 256-case table emits triangles whose vertices sit
//! on cell edges, placed by exact linear interpolation along the edge.
//! Vertices are welded by global edge identity (the pair of grid node
//! indices), never by position epsilon, and triangles are oriented so normals
//! point toward positive φ.

mod tables;

pub use tables::{EDGE_CORNERS, EDGE_TABLE, TRI_TABLE};

use std::collections::HashMap;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{fit_paraboloid, sample_from_fit};
use crate::flow::{distance_stats_points, DistanceStats, FlowError};
use crate::levelset::{FieldSource, ScalarGrid};
use crate::mesh::{ordered_one_ring, MeshError, TriMesh};
use crate::metrics::summarize;
use crate::scalar::{real, Scalar};

/// One entry of the case table: corner-sign mask, intersected-edge bits, and
/// the triangle list (edge-index triples).
#[derive(Debug, Clone, Copy)]
pub struct CellCase {
    pub mask: u8,
    pub edges: u16,
    pub triangles: &'static [i8],
}

pub fn cell_case(mask: u8) -> CellCase {
    let row = &TRI_TABLE[mask as usize];
    let len = row.iter().position(|&x| x < 0).unwrap_or(row.len());
    CellCase {
        mask,
        edges: EDGE_TABLE[mask as usize],
        triangles: &row[..len],
    }
}

/// Extracted isosurface: triangle soup with welded vertices. Not necessarily
/// a closed manifold (noisy grids can produce non-manifold junctions), hence
/// distinct from [`TriMesh`]; use [`McSurface::to_trimesh`] when validity is
/// expected.
#[derive(Debug, Clone)]
pub struct McSurface<S: Scalar> {
    pub vertices: Vec<Vector3<S>>,
    pub faces: Vec<[u32; 3]>,
}

impl<S: Scalar> McSurface<S> {
    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn to_trimesh(&self) -> Result<TriMesh<S>, MeshError> {
        TriMesh::new(self.vertices.clone(), self.faces.clone())
    }
}

/// Extract the iso-level surface of the grid.
pub fn marching_cubes<S: Scalar>(grid: &ScalarGrid<S>, iso: S) -> McSurface<S> {
    let spec = grid.spec();
    let [nx, ny, nz] = spec.dims();
    let mut vertices: Vec<Vector3<S>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    // weld map: global grid-edge id (node pair) -> vertex index
    let mut welded: HashMap<(u32, u32), u32> = HashMap::new();

    let corner_offsets = [
        (0usize, 0usize, 0usize),
        (1, 0, 0),
        (1, 1, 0),
        (0, 1, 0),
        (0, 0, 1),
        (1, 0, 1),
        (1, 1, 1),
        (0, 1, 1),
    ];

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut mask = 0u8;
                let mut values = [S::zero(); 8];
                let mut nodes = [0u32; 8];
                for (b, &(di, dj, dk)) in corner_offsets.iter().enumerate() {
                    let v = grid.at(i + di, j + dj, k + dk);
                    values[b] = v;
                    nodes[b] = spec.linear(i + di, j + dj, k + dk) as u32;
                    if v < iso {
                        mask |= 1 << b;
                    }
                }
                let case = cell_case(mask);
                if case.triangles.is_empty() {
                    continue;
                }

                let mut edge_vertex = [u32::MAX; 12];
                for e in 0..12 {
                    if case.edges & (1 << e) == 0 {
                        continue;
                    }
                    let (ca, cb) = EDGE_CORNERS[e];
                    let key = (nodes[ca].min(nodes[cb]), nodes[ca].max(nodes[cb]));
                    let idx = *welded.entry(key).or_insert_with(|| {
                        let (oa, ob) = (corner_offsets[ca], corner_offsets[cb]);
                        let pa = spec.node_position(i + oa.0, j + oa.1, k + oa.2);
                        let pb = spec.node_position(i + ob.0, j + ob.1, k + ob.2);
                        // sign change guarantees values differ
                        let t = (iso - values[ca]) / (values[cb] - values[ca]);
                        vertices.push(pa + (pb - pa) * t);
                        (vertices.len() - 1) as u32
                    });
                    edge_vertex[e] = idx;
                }

                for tri in case.triangles.chunks_exact(3) {
                    let a = edge_vertex[tri[0] as usize];
                    let b = edge_vertex[tri[1] as usize];
                    let c = edge_vertex[tri[2] as usize];
                    if a == b || b == c || a == c {
                        continue; // degenerate sliver from coincident edge vertices
                    }
                    // the canonical table winds toward lower values; flip so
                    // normals point toward positive φ (outward)
                    faces.push([a, c, b]);
                }
            }
        }
    }

    McSurface { vertices, faces }
}

/// Curvature statistics over the vertices where a well-formed one-ring
/// exists (non-manifold junctions are skipped, not errors).
#[derive(Debug, Clone, Serialize)]
pub struct McCurvatureStats {
    #[serde(rename = "H")]
    pub h: crate::metrics::CurvatureSummary,
    #[serde(rename = "G")]
    pub g: crate::metrics::GaussianSummary,
    /// Fraction of vertices with usable curvature.
    pub coverage: f64,
}

/// Comparison record for the baseline.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub vertex_count: usize,
    pub face_count: usize,
    pub mean_dist: f64,
    pub max_dist: f64,
    /// `None` when no vertex had a usable one-ring.
    pub curvature: Option<McCurvatureStats>,
}

/// Distances and curvature statistics of an extracted surface against a
/// field. Curvature is reported as unavailable on non-manifold vertices
/// rather than failing the report.
pub fn mc_report<S: Scalar, F: FieldSource<S>>(
    surface: &McSurface<S>,
    src: &F,
) -> Result<McReport, FlowError> {
    let DistanceStats {
        mean_dist,
        max_dist,
    } = distance_stats_points(&surface.vertices, src)?;

    let curvatures = lenient_curvatures(surface);
    let valid: Vec<(S, S)> = curvatures.iter().flatten().copied().collect();
    let coverage = valid.len() as f64 / surface.vertices.len().max(1) as f64;
    let curvature = if valid.is_empty() {
        None
    } else {
        let h: Vec<S> = valid.iter().map(|&(h, _)| h).collect();
        let g: Vec<S> = valid.iter().map(|&(_, g)| g).collect();
        Some(McCurvatureStats {
            h: summarize(&h),
            g: crate::metrics::gaussian_summary(&g),
            coverage,
        })
    };

    Ok(McReport {
        vertex_count: surface.vertices.len(),
        face_count: surface.faces.len(),
        mean_dist: mean_dist.as_f64(),
        max_dist: max_dist.as_f64(),
        curvature,
    })
}

/// Per-vertex (H, G) where the incident faces form a single closed fan;
/// `None` where they do not.
pub fn lenient_curvatures<S: Scalar>(surface: &McSurface<S>) -> Vec<Option<(S, S)>> {
    let nv = surface.vertices.len();
    let mut vertex_faces: Vec<Vec<u32>> = vec![Vec::new(); nv];
    for (i, f) in surface.faces.iter().enumerate() {
        for &ix in f {
            vertex_faces[ix as usize].push(i as u32);
        }
    }
    // area-weighted normals over whatever faces exist
    let mut normal_sums = vec![Vector3::<S>::zeros(); nv];
    for f in &surface.faces {
        let p0 = surface.vertices[f[0] as usize];
        let e1 = surface.vertices[f[1] as usize] - p0;
        let e2 = surface.vertices[f[2] as usize] - p0;
        let area_vec = e1.cross(&e2) * real::<S>(0.5);
        for &ix in f {
            normal_sums[ix as usize] += area_vec;
        }
    }

    let min_mag = real::<S>(1e-12);
    (0..nv)
        .into_par_iter()
        .map(|v| {
            let ring = ordered_one_ring(&surface.faces, &vertex_faces[v], v as u32)?;
            if ring.len() < 3 {
                return None;
            }
            let mag = normal_sums[v].norm();
            if mag < min_mag {
                return None;
            }
            let normal = normal_sums[v] / mag;
            let frame = crate::curvature::rotation_to_z(&normal);
            let center = surface.vertices[v];
            let patch: Vec<Vector3<S>> = ring
                .iter()
                .map(|&i| frame.rotation * (surface.vertices[i as usize] - center))
                .collect();
            let fit = fit_paraboloid(&patch).ok()?;
            let s = sample_from_fit(&fit, normal);
            Some((s.mean, s.gaussian))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::{rasterize, AnalyticField, GridSpec, Phantom};

    #[test]
    fn case_table_complement_uses_same_edges() {
        for m in 0..=255u8 {
            let a = cell_case(m);
            let b = cell_case(255 - m);
            assert_eq!(a.edges, b.edges, "edge sets differ for mask {m}");
            let ea: std::collections::BTreeSet<i8> = a.triangles.iter().copied().collect();
            let eb: std::collections::BTreeSet<i8> = b.triangles.iter().copied().collect();
            assert_eq!(ea, eb, "triangle edge usage differs for mask {m}");
            assert_eq!(a.triangles.len() % 3, 0);
        }
    }

    #[test]
    fn all_positive_grid_gives_empty_surface() {
        let spec = GridSpec::cube(2.0f64, 3.0, 8).unwrap();
        let grid = rasterize(Phantom::Sphere, &spec); // far outside: all positive
        let surf = marching_cubes(&grid, 0.0);
        assert!(surf.is_empty());
        assert_eq!(surf.vertices.len(), 0);
    }

    #[test]
    fn single_corner_yields_one_triangle() {
        // 2x2x2 grid: one cell; corner (0,0,0) below iso
        let spec = GridSpec::cube(0.0f64, 1.0, 2).unwrap();
        let mut values = vec![1.0f64; 8];
        values[0] = -1.0;
        let grid = ScalarGrid::new(spec, values).unwrap();
        let surf = marching_cubes(&grid, 0.0);
        assert_eq!(surf.faces.len(), 1);
        assert_eq!(surf.vertices.len(), 3);
    }

    #[test]
    fn sphere_surface_is_watertight_and_accurate() {
        let grid = rasterize(Phantom::Sphere, &GridSpec::<f64>::default_domain());
        let surf = marching_cubes(&grid, 0.0);
        assert!(!surf.is_empty());
        let mesh = surf.to_trimesh().expect("noiseless sphere MC mesh is closed");
        assert!(mesh.signed_volume() > 0.0);

        let h = grid.spec().spacing().x;
        let diag = h * 3f64.sqrt();
        for v in surf.vertices.iter() {
            assert!((v.norm() - 1.0).abs() <= diag, "vertex at radius {}", v.norm());
        }
    }

    #[test]
    fn all_phantom_surfaces_are_watertight() {
        for phantom in [
            Phantom::Sphere,
            Phantom::Ellipsoid,
            Phantom::FusedSpheres,
            Phantom::Cylinder,
        ] {
            let grid = rasterize(phantom, &GridSpec::<f64>::default_domain());
            let surf = marching_cubes(&grid, 0.0);
            // every edge shared by exactly two faces
            let mut edges: HashMap<(u32, u32), usize> = HashMap::new();
            for f in &surf.faces {
                for k in 0..3 {
                    let a = f[k];
                    let b = f[(k + 1) % 3];
                    *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                }
            }
            assert!(
                edges.values().all(|&c| c == 2),
                "{phantom:?}: open or non-manifold edges"
            );
        }
    }

    #[test]
    fn vertices_sit_on_the_trilinear_zero_set() {
        let grid = rasterize(Phantom::Sphere, &GridSpec::<f64>::default_domain());
        let surf = marching_cubes(&grid, 0.0);
        let range = grid
            .values()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        for v in surf.vertices.iter().step_by(7) {
            let phi = grid.sample_trilinear(v).unwrap();
            assert!(phi.abs() <= 1e-9 * range, "phi = {phi}");
        }
    }

    #[test]
    fn iso_three_extracts_radius_two() {
        let grid = rasterize(Phantom::Sphere, &GridSpec::<f64>::default_domain());
        let surf = marching_cubes(&grid, 3.0);
        assert!(!surf.is_empty());
        for v in &surf.vertices {
            assert!((v.norm() - 2.0).abs() <= 0.14);
        }
    }

    #[test]
    fn report_skips_non_manifold_vertices() {
        // two tetrahedra joined at a single apex: the shared vertex has two
        // disjoint fans, so its curvature is unavailable; the report still
        // succeeds with partial coverage
        let mut vertices = vec![Vector3::new(0.0f64, 0.0, 0.0)];
        let mut faces = Vec::new();
        for (dir, base) in [(1.0, 1u32), (-1.0, 4u32)] {
            vertices.push(Vector3::new(1.0, 0.0, dir));
            vertices.push(Vector3::new(-0.5, 0.8, dir));
            vertices.push(Vector3::new(-0.5, -0.8, dir));
            let [a, b, c] = [base, base + 1, base + 2];
            faces.push([0, a, b]);
            faces.push([0, b, c]);
            faces.push([0, c, a]);
            faces.push([a, c, b]);
        }
        let surf = McSurface { vertices, faces };
        let curv = lenient_curvatures(&surf);
        assert!(curv[0].is_none(), "bowtie apex must be skipped");
        assert!(curv[1..].iter().all(Option::is_some));

        let src = AnalyticField::new(Phantom::Sphere.field());
        let report = mc_report(&surf, &src).unwrap();
        let stats = report.curvature.unwrap();
        assert!((stats.coverage - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn report_on_clean_sphere() {
        let grid = rasterize(Phantom::Sphere, &GridSpec::<f64>::default_domain());
        let surf = marching_cubes(&grid, 0.0);
        let src = AnalyticField::new(Phantom::Sphere.field());
        let report = mc_report(&surf, &src).unwrap();
        assert_eq!(report.vertex_count, surf.vertices.len());
        assert!(report.vertex_count > 0);
        assert!(report.mean_dist <= 0.01, "mean_dist {}", report.mean_dist);
        let curv = report.curvature.expect("clean sphere mesh is manifold");
        assert!(curv.coverage > 0.9, "coverage {}", curv.coverage);
        // sliver rings make the mean/std outlier-dominated; the bulk of |H|
        // sits near the true value 1
        assert!(
            (0.8..=1.5).contains(&curv.h.p95),
            "p95|H| = {}",
            curv.h.p95
        );
    }
}
