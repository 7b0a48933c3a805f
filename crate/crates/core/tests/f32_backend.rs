//! The whole pipeline is generic over the scalar type; exercise the f32
//! instantiation end to end at f32-appropriate tolerances.

use nalgebra::Vector3;

use shapeflow_core::curvature::curvature_field;
use shapeflow_core::flow::{self, FlowConfig, Termination};
use shapeflow_core::levelset::{rasterize, AnalyticField, FieldSource, GridField, GridSpec, Phantom};
use shapeflow_core::mesh::{icosphere, vertex_normals};

#[test]
fn f32_curvature_on_unit_sphere() {
    let mesh = icosphere(1.0f32, 3);
    let normals = vertex_normals(&mesh).unwrap();
    let field = curvature_field(&mesh, &normals).unwrap();
    for c in &field {
        assert!((c.mean - 1.0).abs() <= 0.08, "H = {}", c.mean);
        assert!((c.gaussian - 1.0).abs() <= 0.15, "G = {}", c.gaussian);
    }
}

#[test]
fn f32_grid_sampling_tracks_analytic() {
    let spec = GridSpec::<f32>::cube(-2.5, 2.5, 32).unwrap();
    let grid = rasterize(Phantom::Sphere, &spec);
    let src = GridField::new(&grid);
    let exact = AnalyticField::new(Phantom::Sphere.field::<f32>());
    for p in [
        Vector3::new(1.0f32, 0.3, -0.7),
        Vector3::new(-1.5, 0.9, 0.4),
    ] {
        let a = src.sample(&p).unwrap();
        let b = exact.sample(&p).unwrap();
        assert!((a.phi - b.phi).abs() <= 0.02);
        assert!((a.grad - b.grad).norm() <= 0.02);
    }
}

#[test]
fn f32_short_evolution_descends() {
    let config = FlowConfig::<f32> {
        max_iters: 20,
        subdiv: 2,
        ..FlowConfig::default()
    };
    let src = AnalyticField::new(Phantom::Sphere.field::<f32>());
    let result = flow::run(&config, &src).unwrap();
    assert!(!matches!(result.termination, Termination::Aborted { .. }));
    let first = result.trace.records.first().unwrap().e_total;
    let last = result.trace.records.last().unwrap().e_total;
    assert!(last < first);
}
