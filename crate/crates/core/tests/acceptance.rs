//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr (uncaptured) before asserting, so `cargo test` output carries the
//! full scorecard even when a check fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use nalgebra::UnitQuaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use specpose::codebook::{depth_from_bbox, SymmetrySpec, ViewpointCodebook, BIN_COUNT, IN_PLANE_BINS};
use specpose::geometry::{
    geodesic_angle, rotation_exp, sample_surface_points, shapes, CameraIntrinsics, Mat3, Mesh, PointSet, Pose, Vec3,
};
use specpose::harness::{
    ablation_trials, codebook_round_trips, numeric_gradient, summarize_ablation, synthetic_dataset, trial_seed,
    BundledMesh, MeshLibrary, GRADIENT_STEP, GRADIENT_TOLERANCE,
};
use specpose::losses::{
    add_metric, adds_metric, adds_metric_brute_force, grad_l_3dpm, grad_l_cpm, l_3dpm, l_3dpm_smoothed, l_cpm,
    relative_error, success, LossKind, PoseGradient, ADDS_THRESHOLD, ADD_THRESHOLD,
};
use specpose::refine::{
    iterative_refine, perturb_pose, refine_pose, MatchOptions, NoiseConfig, PointModel, RefineOptions, TemplateLibrary,
};
use specpose::render::{extract_sharp_edges, render, DEFAULT_SHARP_THRESHOLD};

// timed checks must not share the core with each other
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration) {
    let line = format!(
        "[{}] criterion {id:>2} {name}: {detail} ({:.2} s)\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let q = nalgebra::Quaternion::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix()
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    let t = Vec3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(0.4..0.8));
    Pose::from_parts(random_rotation(rng), t)
}

#[test]
fn criterion_01_codebook_round_trip() {
    let _g = serial();
    let t0 = Instant::now();
    let cb = ViewpointCodebook::build();
    let ok = codebook_round_trips(&cb).unwrap();
    let elapsed = t0.elapsed();
    let pass = ok == BIN_COUNT && elapsed < Duration::from_secs(1);
    report(1, "codebook round-trip", pass, &format!("{ok}/{BIN_COUNT} bins"), elapsed);
    assert!(pass);
}

/// Worst per-coordinate relative error of `analytic` against central
/// differences of the mean of `terms` at step `h`.
fn gradient_error(
    analytic: &PoseGradient,
    pred: &Pose,
    h: f64,
    terms: impl Fn(&Pose) -> specpose::Result<Vec<f64>>,
) -> f64 {
    let numeric = numeric_gradient(pred, h, terms).unwrap();
    analytic
        .as_array()
        .iter()
        .zip(&numeric)
        .map(|(a, n)| relative_error(*a, *n))
        .fold(0.0, f64::max)
}

#[test]
fn criterion_02_gradient_correctness() {
    let _g = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise = NoiseConfig::default();
    let meshes: Vec<Mesh> = BundledMesh::ALL.iter().map(|m| m.mesh()).collect();
    let (mut l1_fail, mut cos_fail, mut worst_l1, mut worst_cos) = (0, 0, 0.0f64, 0.0f64);
    let (mut fine_worst, mut kink_worst) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let mesh = &meshes[i % meshes.len()];
        let pts = sample_surface_points(mesh, 100, rng.random()).unwrap();
        let center = mesh.centroid();
        let gt = random_pose(&mut rng);
        let pred = perturb_pose(&gt, &noise.with_seed(trial_seed(2, i))).unwrap();

        let l1_terms = |p: &Pose| pts.iter().map(|x| l_3dpm_smoothed(&gt, p, &PointSet::new(vec![*x]))).collect();
        let g = grad_l_3dpm(&gt, &pred, &pts).unwrap();
        let e = gradient_error(&g, &pred, GRADIENT_STEP, l1_terms);
        worst_l1 = worst_l1.max(e);
        if e >= GRADIENT_TOLERANCE {
            l1_fail += 1;
            // where the coarse step fails, a finer one shows whether the analytic side is at fault
            fine_worst = fine_worst.max(gradient_error(&g, &pred, 1e-9, l1_terms));
            let nearest = pts
                .iter()
                .map(|x| (gt.transform_point(x) - pred.transform_point(x)).abs().min())
                .fold(f64::INFINITY, f64::min);
            kink_worst = kink_worst.max(nearest);
        }

        let g = grad_l_cpm(&gt, &pred, &pts, &center).unwrap();
        let e = gradient_error(&g, &pred, GRADIENT_STEP, |p| {
            Ok(l_cpm(&gt, p, &pts, &center)?.per_point.unwrap_or_default())
        });
        worst_cos = worst_cos.max(e);
        cos_fail += (e >= GRADIENT_TOLERANCE) as usize;
    }
    let elapsed = t0.elapsed();
    let pass = l1_fail == 0 && cos_fail == 0 && elapsed < Duration::from_secs(10);
    let mut detail = format!(
        "L1 {l1_fail}/100 over tolerance (max {worst_l1:.2e}), cosine {cos_fail}/100 (max {worst_cos:.2e})"
    );
    if l1_fail > 0 {
        detail += &format!(
            "; failing L1 cases have a residual component within {kink_worst:.1e} m of the smoothing kink \
             and agree with step-1e-9 differences to {fine_worst:.1e}"
        );
    }
    report(2, "gradient correctness", pass, &detail, elapsed);
    assert!(pass);
}

#[test]
fn criterion_03_metric_identities() {
    let _g = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let clouds: Vec<(PointSet, Vec3)> = BundledMesh::ALL
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mesh = m.mesh();
            (sample_surface_points(&mesh, 200, i as u64).unwrap(), mesh.centroid())
        })
        .collect();
    let (mut order_bad, mut worst_add, mut worst_l1, mut worst_cos) = (0, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let (pts, center) = &clouds[i % clouds.len()];
        let gt = random_pose(&mut rng);
        let pred = if i % 2 == 0 {
            random_pose(&mut rng)
        } else {
            Pose::from_axis_angle(Vec3::new(rng.random(), rng.random(), rng.random()) * 0.5, gt.translation)
        };
        let add = add_metric(&gt, &pred, pts).unwrap();
        let adds = adds_metric(&gt, &pred, pts).unwrap();
        order_bad += (adds > add) as usize;

        let delta = Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        let moved = Pose::from_parts(gt.rotation, gt.translation + delta);
        worst_add = worst_add.max((add_metric(&gt, &moved, pts).unwrap() - delta.norm()).abs());
        worst_l1 = worst_l1.max((l_3dpm(&gt, &moved, pts).unwrap().value - delta.abs().sum()).abs());
        worst_cos = worst_cos.max((l_cpm(&gt, &gt, pts, center).unwrap().value + 1.0).abs());
    }
    let pass = order_bad == 0 && worst_add <= 1e-12 && worst_l1 <= 1e-12 && worst_cos <= 1e-12;
    report(
        3,
        "metric identities",
        pass,
        &format!(
            "ADD-S > ADD in {order_bad}/1000; translation ADD err {worst_add:.1e}, L1 err {worst_l1:.1e}, cosine(gt,gt)+1 {worst_cos:.1e}"
        ),
        t0.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_04_symmetry_behavior() {
    let _g = serial();
    let t0 = Instant::now();
    let shaft = BundledMesh::Shaft;
    let axis = match shaft.symmetry() {
        SymmetrySpec::Cylindrical { axis } => axis,
        other => panic!("shaft symmetry is {other:?}"),
    };
    let mesh = shaft.mesh();
    let d = mesh.diameter();
    let pts = sample_surface_points(&mesh, 20_000, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut adds_ok, mut wide, mut wide_add_fail, mut worst_adds) = (0, 0, 0, 0.0f64);
    for _ in 0..50 {
        let gt = random_pose(&mut rng);
        let angle = rng.random_range(-PI..PI);
        let pred = gt.compose(&Pose::from_parts(rotation_exp(&(axis * angle)), Vec3::zeros()));
        let adds = adds_metric(&gt, &pred, &pts).unwrap();
        let add = add_metric(&gt, &pred, &pts).unwrap();
        worst_adds = worst_adds.max(adds / d);
        adds_ok += success(adds, d, ADDS_THRESHOLD) as usize;
        if angle.abs() >= FRAC_PI_2 {
            wide += 1;
            wide_add_fail += (!success(add, d, ADD_THRESHOLD)) as usize;
        }
    }
    let pass = adds_ok == 50 && wide > 0 && wide_add_fail == wide;
    report(
        4,
        "symmetry behavior",
        pass,
        &format!(
            "ADD-S success {adds_ok}/50 (max {:.3}% of d); ADD fails on {wide_add_fail}/{wide} rotations of 90 deg or more",
            100.0 * worst_adds
        ),
        t0.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_05_sharp_edges() {
    let _g = serial();
    let t0 = Instant::now();
    let cube = extract_sharp_edges(&shapes::unit_cube(), FRAC_PI_4).unwrap().len();
    let sphere = extract_sharp_edges(&shapes::icosphere(3, 1.0), FRAC_PI_4).unwrap().len();
    let elapsed = t0.elapsed();
    let pass = cube == 12 && sphere == 0 && elapsed < Duration::from_secs(1);
    report(5, "sharp edges", pass, &format!("cube {cube} edges, icosphere {sphere} edges"), elapsed);
    assert!(pass);
}

#[test]
fn criterion_06_refinement_convergence() {
    let _g = serial();
    let t0 = Instant::now();
    let opts = RefineOptions::default().with_loss(LossKind::Cosine);
    let noise = NoiseConfig::default();
    let mut lines = Vec::new();
    let mut all = true;
    for m in BundledMesh::ALL {
        let mesh = m.mesh();
        let symmetric = !matches!(m.symmetry(), SymmetrySpec::None);
        let model = PointModel::from_mesh(&mesh, opts.point_count, opts.sample_seed).unwrap();
        let eval = sample_surface_points(&mesh, 1000, 6).unwrap();
        let mut ok = 0;
        for (i, e) in synthetic_dataset(&[m.name()], 200, 6).iter().enumerate() {
            let gt = e.gt_pose;
            let init = perturb_pose(&gt, &noise.with_seed(trial_seed(noise.seed, i))).unwrap();
            let r = refine_pose(&init, &model.observe(&gt), &model, &opts).unwrap();
            let add_ok = success(add_metric(&gt, &r.final_pose, &eval).unwrap(), model.diameter, ADD_THRESHOLD);
            let adds_ok = symmetric
                && !add_ok
                && success(adds_metric(&gt, &r.final_pose, &eval).unwrap(), model.diameter, ADDS_THRESHOLD);
            ok += (add_ok || adds_ok) as usize;
        }
        all &= ok * 100 >= 85 * 200;
        lines.push(format!("{m} {ok}/200"));
    }
    let elapsed = t0.elapsed();
    let pass = all && elapsed < Duration::from_secs(120);
    report(6, "refinement convergence", pass, &lines.join(", "), elapsed);
    assert!(pass);
}

#[test]
fn criterion_07_iterative_trend() {
    let _g = serial();
    let t0 = Instant::now();
    let intr = CameraIntrinsics::centered(300.0, 128);
    let opts = RefineOptions::default();
    assert_eq!(opts.outer_iterations, 4);
    let noise = NoiseConfig::default();
    let (mut monotone, mut total) = (0, 0);
    for m in BundledMesh::ALL {
        let mesh = m.mesh();
        for (i, e) in synthetic_dataset(&[m.name()], 20, 7).iter().enumerate() {
            let init = perturb_pose(&e.gt_pose, &noise.with_seed(trial_seed(7, total + i))).unwrap();
            let r = iterative_refine(&init, &mesh, &e.gt_pose, &intr, &opts).unwrap();
            assert_eq!(r.add_trace.len(), 5);
            monotone += r.add_trace.windows(2).all(|w| w[1] <= w[0]) as usize;
        }
        total += 20;
    }
    let pass = monotone * 100 >= 90 * total;
    report(7, "iterative trend", pass, &format!("non-increasing ADD in {monotone}/{total} runs"), t0.elapsed());
    assert!(pass);
}

#[test]
fn criterion_08_loss_ordering() {
    let _g = serial();
    let t0 = Instant::now();
    let meshes = MeshLibrary::bundled();
    let dataset = synthetic_dataset(&[BundledMesh::Shaft.name()], 200, 8);
    let noise = NoiseConfig {
        rot_sigma: 0.3,
        offset_sigma: 0.002,
        depth_sigma: 0.005,
        ..NoiseConfig::default()
    };
    let opts = RefineOptions::default();
    let trials = ablation_trials(&dataset, &meshes, &noise, &opts).unwrap();
    let row = summarize_ablation(&dataset, &trials, &noise, &opts).rows.remove(0);
    let pass = row.n_samples == 200 && row.mean_rotation_error_cosine <= row.mean_rotation_error_l1;
    report(
        8,
        "loss ordering",
        pass,
        &format!(
            "shaft mean rotation error cosine {:.3e} vs L1 {:.3e} rad; paired diff 95% CI [{:.2e}, {:.2e}]",
            row.mean_rotation_error_cosine,
            row.mean_rotation_error_l1,
            row.rotation_error_diff_ci95[0],
            row.rotation_error_diff_ci95[1]
        ),
        t0.elapsed(),
    );
    assert!(pass);
}

/// Box with two offset blocks; no rotation maps it onto itself.
fn asymmetric_block() -> Mesh {
    let body = shapes::cuboid(0.08, 0.05, 0.03);
    let a = shapes::cuboid(0.03, 0.02, 0.02).transformed(&Pose::from_translation(Vec3::new(0.02, 0.012, 0.025)));
    let b = shapes::cuboid(0.015, 0.015, 0.04).transformed(&Pose::from_translation(Vec3::new(-0.03, -0.02, -0.02)));
    body.merged(&a).unwrap().merged(&b).unwrap()
}

/// All 24 rotations of the cube, by closing quarter turns about x and y.
fn cube_group() -> Vec<Mat3> {
    let gens = [rotation_exp(&(Vec3::x() * FRAC_PI_2)), rotation_exp(&(Vec3::y() * FRAC_PI_2))];
    let mut group = vec![Mat3::identity()];
    let mut i = 0;
    while i < group.len() {
        for g in &gens {
            let r = (group[i] * g).map(f64::round);
            if !group.iter().any(|h| (h - r).abs().max() < 1e-9) {
                group.push(r);
            }
        }
        i += 1;
    }
    group
}

#[test]
fn criterion_09_coarse_matcher() {
    let _g = serial();
    let t0 = Instant::now();
    let cb = ViewpointCodebook::build();
    let intr = CameraIntrinsics::centered(200.0, 96);
    let opts = MatchOptions::default();

    let mesh = asymmetric_block();
    let edges = extract_sharp_edges(&mesh, DEFAULT_SHARP_THRESHOLD).unwrap();
    let depth = depth_from_bbox(60.0, mesh.diameter(), 200.0).unwrap();
    let lib = TemplateLibrary::build(&mesh, &edges, &cb, depth, &intr).unwrap();
    let mut self_ok = 0;
    for bin in 0..BIN_COUNT {
        let (k, m) = (bin / IN_PLANE_BINS, bin % IN_PLANE_BINS);
        let hit = lib.best_match(&lib.template_image(k, m, [0, 0]), &opts).unwrap();
        self_ok += ((hit.vp_idx, hit.ipr_idx) == (k, m) && hit.shift == [0, 0]) as usize;
    }

    let cube = shapes::cuboid(0.05, 0.05, 0.05);
    let group = cube_group();
    assert_eq!(group.len(), 24);
    let nut_group = match BundledMesh::Nut.symmetry() {
        SymmetrySpec::Discrete { rotations } => rotations,
        other => panic!("nut symmetry is {other:?}"),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut random_lines = Vec::new();
    let mut random_ok = true;
    for (name, mesh, group) in [("cube", cube, group), ("hex prism", BundledMesh::Nut.mesh(), nut_group)] {
        let edges = extract_sharp_edges(&mesh, DEFAULT_SHARP_THRESHOLD).unwrap();
        let depth = depth_from_bbox(60.0, mesh.diameter(), 200.0).unwrap();
        let lib = TemplateLibrary::build(&mesh, &edges, &cb, depth, &intr).unwrap();
        let mut hits = 0;
        for _ in 0..100 {
            let gt = Pose::from_parts(random_rotation(&mut rng), Vec3::new(0.0, 0.0, depth));
            let img = render(&mesh, &edges, &gt, &intr).unwrap().edge_image;
            let found = lib.best_match(&img, &opts).unwrap();
            let found = (found.vp_idx, found.ipr_idx);
            hits += group.iter().any(|g| cb.in_one_ring(cb.encode_rotation(&(gt.rotation * g)), found)) as usize;
        }
        random_ok &= hits >= 95;
        random_lines.push(format!("{name} {hits}/100"));
    }
    let elapsed = t0.elapsed();
    let pass = self_ok == BIN_COUNT && random_ok && elapsed < Duration::from_secs(300);
    report(
        9,
        "coarse matcher",
        pass,
        &format!("self-match {self_ok}/{BIN_COUNT}; random poses within 1-ring: {}", random_lines.join(", ")),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_10_adds_equivalence() {
    let _g = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let mesh = BundledMesh::ALL[i % BundledMesh::ALL.len()].mesh();
        let pts = sample_surface_points(&mesh, 500, i as u64).unwrap();
        let (gt, pred) = (random_pose(&mut rng), random_pose(&mut rng));
        let fast = adds_metric(&gt, &pred, &pts).unwrap();
        let slow = adds_metric_brute_force(&gt, &pred, &pts).unwrap();
        worst = worst.max((fast - slow).abs());
    }

    let pts = sample_surface_points(&BundledMesh::Housing.mesh(), 20_000, 10).unwrap();
    let gt = Pose::from_translation(Vec3::new(0.0, 0.0, 0.5));
    let pred = Pose::from_axis_angle(Vec3::new(0.2, -0.1, 0.3), Vec3::new(0.005, -0.003, 0.52));
    let timed = |f: &dyn Fn() -> f64| {
        let t = Instant::now();
        let v = f();
        (t.elapsed(), v)
    };
    let (brute, slow) = timed(&|| adds_metric_brute_force(&gt, &pred, &pts).unwrap());
    let (fast_time, fast) = (0..3)
        .map(|_| timed(&|| adds_metric(&gt, &pred, &pts).unwrap()))
        .min_by_key(|r| r.0)
        .unwrap();
    let speedup = brute.as_secs_f64() / fast_time.as_secs_f64();
    worst = worst.max((fast - slow).abs());
    let pass = worst <= 1e-12 && speedup >= 10.0;
    report(
        10,
        "ADD-S equivalence",
        pass,
        &format!(
            "max |kd-tree - brute force| {worst:.1e}; n=20000 kd-tree {:.1} ms vs brute force {:.1} ms ({speedup:.1}x)",
            1e3 * fast_time.as_secs_f64(),
            1e3 * brute.as_secs_f64()
        ),
        t0.elapsed(),
    );
    assert!(pass);
}

#[test]
fn test_rotations_are_proper() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let r = random_rotation(&mut rng);
        assert!((r.transpose() * r - Mat3::identity()).abs().max() < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }
    let group = cube_group();
    for (i, a) in group.iter().enumerate() {
        assert!(group[..i].iter().all(|b| geodesic_angle(a, b) > 1.0));
    }
}
