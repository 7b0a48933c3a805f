//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (run with `--nocapture` to see them on success).
//!
//! Criteria:
//! 1. sphere reconstruction at the reference settings
//! 2. stationarity of the unit sphere
//! 3. closed-form gradient and energy checks at radius 2
//! 4. curvature estimator accuracy bands
//! 5. noise robustness at the reported SNRs
//! 6. β-smoothing on the fused spheres
//! 7. Marching Cubes baseline quality and noisy-data comparison
//! 8. numerical hygiene (interpolation, rotation frames, convergence order,
//!    CSG identities, file round trips, seeded reproducibility)

use std::time::Instant;

use nalgebra::{Matrix3, Vector3};

use shapeflow_core::curvature::{curvature_field, fit_paraboloid, rotation_to_z};
use shapeflow_core::flow::{
    self, distance_stats, energy, shape_gradient, FlowConfig, Termination,
};
use shapeflow_core::levelset::{
    add_noise, csg_complement, csg_intersect, csg_subtract, csg_union, empirical_snr_db,
    rasterize, AnalyticField, FieldSource, GridField, GridSpec, NoiseModel,
    NoiseSpec, Phantom, ScalarGrid,
};
use shapeflow_core::mcubes::{lenient_curvatures, marching_cubes, mc_report};
use shapeflow_core::mesh::{icosphere, vertex_normals, TriMesh};
use shapeflow_core::metrics::percentile_abs;

fn sphere_src() -> AnalyticField<f64> {
    AnalyticField::new(Phantom::Sphere.field())
}

fn mean_curvature_of(mesh: &TriMesh<f64>) -> Vec<f64> {
    let normals = vertex_normals(mesh).expect("normals");
    curvature_field(mesh, &normals)
        .expect("curvature")
        .iter()
        .map(|c| c.mean)
        .collect()
}

fn default_sphere_grid() -> ScalarGrid<f64> {
    rasterize(Phantom::Sphere, &GridSpec::default_domain())
}

#[test]
fn criterion_1_sphere_reconstruction() {
    let start = Instant::now();
    let config = FlowConfig::<f64>::default(); // alpha 5, beta 1, dt 1e-3, 100 iters, subdiv 4, radius 2
    let src = sphere_src();
    let e_initial = energy(&icosphere(2.0, 4), &src, config.alpha, config.beta)
        .unwrap()
        .total;
    let mut volume_ok = true;
    let result = flow::run_with_observer(&config, &src, |_, mesh| {
        volume_ok &= mesh.signed_volume() > 0.0;
    })
    .unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    assert!(
        !matches!(result.termination, Termination::Aborted { .. }),
        "aborted: {:?}",
        result.termination
    );
    assert!(volume_ok, "signed volume must stay positive at every iteration");
    let last = result.trace.records.last().unwrap();
    assert!(last.mean_abs_phi <= 0.05, "mean|phi| = {}", last.mean_abs_phi);

    let h = mean_curvature_of(&result.mesh);
    let mean_h = h.iter().sum::<f64>() / h.len() as f64;
    assert!((0.9..=1.1).contains(&mean_h), "mean H = {mean_h}");

    let e_final = last.e_total;
    assert!(
        e_final <= 0.01 * e_initial,
        "E_final/E_initial = {}",
        e_final / e_initial
    );
    let totals: Vec<f64> = result.trace.records.iter().map(|r| r.e_total).collect();
    for w in totals[4..].windows(2) {
        assert!(
            w[1] <= w[0] * (1.0 + 1e-9),
            "energy increased after iteration 5: {} -> {}",
            w[0],
            w[1]
        );
    }
    assert!(elapsed <= 60.0, "runtime {elapsed:.1} s exceeds 60 s");
    println!(
        "criterion 1 (sphere reconstruction): PASS — mean|phi|={:.4}, mean H={:.4}, E ratio={:.2e}, {:.1}s",
        last.mean_abs_phi,
        mean_h,
        e_final / e_initial,
        elapsed
    );
}

#[test]
fn criterion_2_stationarity_oracle() {
    let mesh = icosphere(1.0f64, 4);
    let normals = vertex_normals(&mesh).unwrap();
    let curv = curvature_field(&mesh, &normals).unwrap();
    let src = sphere_src();

    let mut max_g_alpha1 = 0.0f64;
    for (alpha, bound) in [(1.0, 1e-6), (5.0, 5e-6)] {
        let g = shape_gradient(&mesh, &normals, &curv, &src, alpha, 0.0).unwrap();
        let max = g.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max <= bound, "max|g| = {max:.3e} for alpha={alpha}");
        if alpha == 1.0 {
            max_g_alpha1 = max;
        }
    }

    // one evolution step moves no vertex more than 1e-9
    let config = FlowConfig {
        alpha: 1.0,
        beta: 0.0,
        dt: 1e-3,
        ..FlowConfig::default()
    };
    let (next, _) = flow::evolve_step(&mesh, &config, &src).unwrap();
    let max_move = mesh
        .vertices()
        .iter()
        .zip(next.vertices())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    assert!(max_move <= 1e-9, "max vertex movement {max_move:.3e}");

    // documented discrete-normal residual of the beta bracket
    let g = shape_gradient(&mesh, &normals, &curv, &src, 1.0, 1.0).unwrap();
    let beta_residual = g.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(beta_residual <= 5e-4, "beta residual {beta_residual:.3e}");

    println!(
        "criterion 2 (stationarity oracle): PASS — max|g|={max_g_alpha1:.2e} (alpha=1, beta=0), max step={max_move:.2e}, beta-bracket residual={beta_residual:.2e}"
    );
}

#[test]
fn criterion_3_closed_form_gradient_and_energy() {
    let mesh = icosphere(2.0f64, 4);
    let src = sphere_src();
    let normals = vertex_normals(&mesh).unwrap();
    let curv = curvature_field(&mesh, &normals).unwrap();

    // g = 4r(r²−1) + (r²−1)²/r = 24 + 4.5 = 28.5 at r=2 (alpha part; the
    // beta bracket vanishes on concentric spheres)
    let g = shape_gradient(&mesh, &normals, &curv, &src, 1.0, 1.0).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &g.values {
        lo = lo.min(v);
        hi = hi.max(v);
        assert!((v - 28.5).abs() <= 0.02 * 28.5, "g = {v}");
    }

    // E(alpha=5, beta=0) = 5 (r²−1)² 4π r² = 720π
    let e = energy(&mesh, &src, 5.0, 0.0).unwrap();
    let expected = 720.0 * std::f64::consts::PI;
    assert!(
        (e.total - expected).abs() <= 0.01 * expected,
        "E = {} vs 720π = {expected}",
        e.total
    );

    println!(
        "criterion 3 (closed-form checks): PASS — g in [{lo:.3}, {hi:.3}] vs 28.5, E={:.2} vs 720π={expected:.2}",
        e.total
    );
}

#[test]
fn criterion_4_curvature_estimator() {
    for r in [0.5f64, 1.0, 2.0] {
        let mesh = icosphere(r, 4);
        let normals = vertex_normals(&mesh).unwrap();
        let field = curvature_field(&mesh, &normals).unwrap();
        for c in &field {
            assert!(
                (c.mean * r - 1.0).abs() <= 0.05,
                "H = {} at r = {r}",
                c.mean
            );
            assert!(
                (c.gaussian * r * r - 1.0).abs() <= 0.10,
                "G = {} at r = {r}",
                c.gaussian
            );
        }
    }

    // flat fan: exactly (0, 0)
    let fan: Vec<Vector3<f64>> = (0..6)
        .map(|k| {
            let t = std::f64::consts::FRAC_PI_3 * k as f64;
            Vector3::new(t.cos(), t.sin(), 0.0)
        })
        .collect();
    let fit = fit_paraboloid(&fan).unwrap();
    assert_eq!(-(fit.a + fit.c) / 2.0, 0.0);
    assert_eq!(fit.a * fit.c - fit.b * fit.b, 0.0);

    // ellipsoid (1,2,1): all G within the widened analytic range [0.2, 4.4]
    let base = icosphere(1.0f64, 4);
    let ellipsoid = base
        .with_vertices(
            base.vertices()
                .iter()
                .map(|v| Vector3::new(v.x, 2.0 * v.y, v.z))
                .collect(),
        )
        .unwrap();
    let normals = vertex_normals(&ellipsoid).unwrap();
    let field = curvature_field(&ellipsoid, &normals).unwrap();
    let (mut gmin, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in &field {
        gmin = gmin.min(c.gaussian);
        gmax = gmax.max(c.gaussian);
        assert!((0.2..=4.4).contains(&c.gaussian), "G = {}", c.gaussian);
    }

    println!(
        "criterion 4 (curvature estimator): PASS — sphere bands held at r in {{0.5,1,2}}, flat fan exact, ellipsoid G in [{gmin:.3}, {gmax:.3}]"
    );
}

#[test]
fn criterion_5_noise_robustness() {
    let cases = [
        (Phantom::Sphere, 44.5),
        (Phantom::Ellipsoid, 42.0),
    ];
    let mut reported = Vec::new();
    for (phantom, snr_db) in cases {
        let grid = rasterize(phantom, &GridSpec::default_domain());
        let noisy = add_noise(
            &grid,
            &NoiseSpec {
                model: NoiseModel::Gaussian,
                snr_db,
                seed: 7,
            },
        )
        .unwrap();
        let src = GridField::new(&noisy);
        let config = FlowConfig {
            dt: 5e-4,
            max_iters: 150,
            ..FlowConfig::<f64>::default()
        };
        let mut volume_ok = true;
        let result = flow::run_with_observer(&config, &src, |_, mesh| {
            volume_ok &= mesh.signed_volume() > 0.0;
        })
        .unwrap();
        assert!(
            !matches!(result.termination, Termination::Aborted { .. }),
            "{phantom:?} aborted: {:?}",
            result.termination
        );
        assert!(volume_ok, "{phantom:?}: signed volume went non-positive");
        let last = result.trace.records.last().unwrap();
        assert!(
            last.mean_abs_phi <= 0.1,
            "{phantom:?}: mean|phi| = {}",
            last.mean_abs_phi
        );
        // closed/genus-0 throughout: connectivity is frozen (checked at
        // construction); geometric validity via the volume check above
        reported.push(format!("{phantom:?}@{snr_db}dB mean|phi|={:.4}", last.mean_abs_phi));
    }
    println!("criterion 5 (noise robustness): PASS — {}", reported.join(", "));
}

#[test]
fn criterion_6_beta_smoothing() {
    let src = AnalyticField::new(Phantom::FusedSpheres.field());
    let run_with_beta = |beta: f64| {
        let config = FlowConfig {
            beta,
            max_iters: 150,
            subdiv: 3,
            ..FlowConfig::<f64>::default()
        };
        let mut volume_ok = true;
        let result = flow::run_with_observer(&config, &src, |_, mesh| {
            volume_ok &= mesh.signed_volume() > 0.0;
        })
        .unwrap();
        assert!(
            !matches!(result.termination, Termination::Aborted { .. }),
            "beta={beta} aborted: {:?}",
            result.termination
        );
        assert!(volume_ok, "beta={beta}: volume must stay positive");
        let h = mean_curvature_of(&result.mesh);
        percentile_abs(&h, 0.95)
    };
    let p95_beta0 = run_with_beta(0.0);
    let p95_beta1 = run_with_beta(1.0);
    assert!(
        p95_beta1 < p95_beta0,
        "p95|H|: beta1 {p95_beta1} !< beta0 {p95_beta0}"
    );
    println!(
        "criterion 6 (beta smoothing): PASS — p95|H| beta=1: {p95_beta1:.3} < beta=0: {p95_beta0:.3}"
    );
}

#[test]
fn criterion_7_marching_cubes_baseline() {
    // noiseless: watertight, vertices within one cell diagonal, accurate
    let grid = default_sphere_grid();
    let surf = marching_cubes(&grid, 0.0);
    let mesh = surf.to_trimesh().expect("clean sphere MC mesh is closed");
    assert!(mesh.signed_volume() > 0.0);
    let diag = grid.spec().spacing().x * 3f64.sqrt();
    for v in &surf.vertices {
        assert!((v.norm() - 1.0).abs() <= diag);
    }
    let analytic = sphere_src();
    let report = mc_report(&surf, &analytic).unwrap();
    assert!(report.mean_dist <= 0.01, "mean_dist = {}", report.mean_dist);

    // noisy: curvature spread strictly larger than the shape-flow result
    let noisy = add_noise(
        &grid,
        &NoiseSpec {
            model: NoiseModel::Gaussian,
            snr_db: 44.5,
            seed: 7,
        },
    )
    .unwrap();
    let src = GridField::new(&noisy);

    let mc_noisy = marching_cubes(&noisy, 0.0);
    let mc_h: Vec<f64> = lenient_curvatures(&mc_noisy)
        .iter()
        .flatten()
        .map(|&(h, _)| h)
        .collect();
    let std = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
    };
    let mc_std = std(&mc_h);

    let config = FlowConfig {
        dt: 5e-4,
        max_iters: 150,
        ..FlowConfig::<f64>::default()
    };
    let flow_result = flow::run(&config, &src).unwrap();
    let flow_h = mean_curvature_of(&flow_result.mesh);
    let flow_std = std(&flow_h);

    assert!(
        mc_std > flow_std,
        "std(H): MC {mc_std} !> flow {flow_std}"
    );
    println!(
        "criterion 7 (marching cubes baseline): PASS — clean mean_dist={:.2e}, noisy std(H) MC={mc_std:.2} > flow={flow_std:.2}",
        report.mean_dist
    );
}

#[test]
fn criterion_8_numerical_hygiene() {
    // trilinear exactness on a trilinear field
    let g = |p: &Vector3<f64>| 1.5 - 2.0 * p.x + 3.0 * p.y - p.z + 0.5 * p.x * p.y
        - 1.25 * p.y * p.z + 0.75 * p.z * p.x + 2.5 * p.x * p.y * p.z;
    let spec = GridSpec::cube(-2.0f64, 2.0, 17).unwrap();
    let mut values = Vec::new();
    let [nx, ny, nz] = spec.dims();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                values.push(g(&spec.node_position(i, j, k)));
            }
        }
    }
    let grid = ScalarGrid::new(spec, values).unwrap();
    let mut state = 88172645463325252u64;
    let mut rand01 = move || {
        // xorshift, plenty for test point placement
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..100 {
        let p = Vector3::new(
            3.0 * rand01() - 1.5,
            3.0 * rand01() - 1.5,
            3.0 * rand01() - 1.5,
        );
        let v = grid.sample_trilinear(&p).unwrap();
        assert!(
            (v - g(&p)).abs() <= 1e-10 * (1.0 + g(&p).abs()),
            "trilinear reproduction failed at {p:?}"
        );
    }

    // Rodrigues frames: orthonormal and deterministic on 1000 normals
    for i in 0..1000 {
        let p = Vector3::new(rand01() - 0.5, rand01() - 0.5, rand01() - 0.5);
        if p.norm() < 1e-6 {
            continue;
        }
        let n = p.normalize();
        let f = rotation_to_z(&n);
        let r = f.rotation;
        assert!((r.transpose() * r - Matrix3::identity()).amax() <= 1e-10, "frame {i}");
        assert!((r.determinant() - 1.0).abs() <= 1e-10);
        assert!((r * n - Vector3::new(0.0, 0.0, 1.0)).norm() <= 1e-10);
        let again = rotation_to_z(&n);
        assert_eq!(r, again.rotation, "frame not deterministic");
    }

    // grid-vs-analytic second-order convergence on the sphere; enough
    // probes that the max error samples the worst cell offsets at both
    // resolutions
    let probes: Vec<Vector3<f64>> = (0..50)
        .map(|_| {
            Vector3::new(
                3.6 * rand01() - 1.8,
                3.6 * rand01() - 1.8,
                3.6 * rand01() - 1.8,
            )
        })
        .collect();
    let exact = sphere_src();
    let max_err = |n: usize| {
        let spec = GridSpec::cube(-2.5f64, 2.5, n).unwrap();
        let src = GridField::new(&rasterize(Phantom::Sphere, &spec));
        probes
            .iter()
            .map(|p| (src.sample(p).unwrap().phi - exact.sample(p).unwrap().phi).abs())
            .fold(0.0, f64::max)
    };
    let ratio = max_err(64) / max_err(127);
    assert!((3.0..=6.0).contains(&ratio), "convergence ratio {ratio}");

    // CSG pointwise identities
    let a = Phantom::FusedSpheres.field::<f64>();
    let b = Phantom::Cylinder.field::<f64>();
    for _ in 0..200 {
        let p = Vector3::new(
            5.0 * rand01() - 2.5,
            5.0 * rand01() - 2.5,
            5.0 * rand01() - 2.5,
        );
        let (va, vb) = (a.value(&p), b.value(&p));
        assert_eq!(csg_union(a.clone(), b.clone()).value(&p), va.min(vb));
        assert_eq!(csg_intersect(a.clone(), b.clone()).value(&p), va.max(vb));
        assert_eq!(csg_complement(a.clone()).value(&p), -va);
        assert_eq!(csg_subtract(a.clone(), b.clone()).value(&p), va.max(-vb));
    }

    // file round trips
    let dir = tempfile::tempdir().unwrap();
    let mesh = icosphere(1.3f64, 2);
    let obj = dir.path().join("m.obj");
    shapeflow_core::mesh::write_obj(&mesh, &obj).unwrap();
    let back: TriMesh<f64> = shapeflow_core::mesh::read_obj(&obj).unwrap();
    assert_eq!(back.faces(), mesh.faces());
    for (x, y) in mesh.vertices().iter().zip(back.vertices()) {
        assert!((x - y).norm() <= 1e-12);
    }
    let sdf = dir.path().join("g.sdf");
    let small = rasterize(Phantom::Sphere, &GridSpec::cube(-2.5f64, 2.5, 12).unwrap());
    shapeflow_core::levelset::write_sdf1(&small, shapeflow_core::levelset::DataEncoding::Le64, &sdf)
        .unwrap();
    let gback: ScalarGrid<f64> = shapeflow_core::levelset::read_sdf1(&sdf).unwrap();
    assert_eq!(gback.values(), small.values());
    let ply = dir.path().join("m.ply");
    let q = vec![0.5f64; mesh.vertex_count()];
    shapeflow_core::mesh::write_ply(&mesh, &q, &ply).unwrap();
    let text = std::fs::read_to_string(&ply).unwrap();
    assert!(text.contains(&format!("element vertex {}", mesh.vertex_count())));

    // seeded reproducibility: noise and full runs
    let noise_spec = NoiseSpec {
        model: NoiseModel::Uniform,
        snr_db: 42.0,
        seed: 123,
    };
    let base = default_sphere_grid();
    let n1 = add_noise(&base, &noise_spec).unwrap();
    let n2 = add_noise(&base, &noise_spec).unwrap();
    assert_eq!(n1.values(), n2.values());
    let snr = empirical_snr_db(&base, &n1);
    assert!((snr - 42.0).abs() <= 0.5, "uniform SNR {snr}");

    let config = FlowConfig {
        max_iters: 5,
        ..FlowConfig::<f64>::default()
    };
    let src = GridField::new(&n1);
    let r1 = flow::run(&config, &src).unwrap();
    let r2 = flow::run(&config, &src).unwrap();
    assert_eq!(r1.mesh.vertices(), r2.mesh.vertices());
    for (a, b) in r1.trace.records.iter().zip(&r2.trace.records) {
        assert_eq!(a.iter, b.iter);
        assert_eq!(a.e_total, b.e_total);
        assert_eq!(a.e_alpha, b.e_alpha);
        assert_eq!(a.e_beta, b.e_beta);
        assert_eq!(a.rel_change, b.rel_change);
        assert_eq!(a.mean_abs_phi, b.mean_abs_phi);
        assert_eq!(a.max_abs_g, b.max_abs_g);
        assert_eq!(a.mean_h, b.mean_h);
        // runtime_ms is wall time, deliberately not compared
    }

    // degenerate-axis rotation cases stay pinned
    assert_eq!(
        rotation_to_z(&Vector3::new(0.0, 0.0, 1.0)).rotation,
        Matrix3::identity()
    );
    assert_eq!(
        rotation_to_z(&Vector3::new(0.0, 0.0, -1.0)).rotation,
        Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
    );

    // distance sanity on the oracle mesh
    let unit = icosphere(1.0f64, 3);
    let d = distance_stats(&unit, &sphere_src()).unwrap();
    assert!(d.mean_dist <= 1e-12);

    println!(
        "criterion 8 (numerical hygiene): PASS — trilinear 1e-10, frames 1e-10, FD ratio {ratio:.2}, CSG exact, round trips exact, runs bit-reproducible"
    );
}
