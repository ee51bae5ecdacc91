use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn specpose(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specpose"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const IDENTITY: &str = r#"{"rotation":[1,0,0,0,1,0,0,0,1],"translation":[0,0,0]}"#;
const AT_HALF_METER: &str = r#"{"rotation":[1,0,0,0,1,0,0,0,1],"translation":[0.01,0,0.5]}"#;
const CAMERA: &str = r#"{"fx":300,"fy":300,"cx":63.5,"cy":63.5,"width":128,"height":128}"#;

#[test]
fn encode_identity_gives_canonical_bin() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "id.json", IDENTITY);
    let out = specpose(&["encode-pose", "id.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let cb = specpose::codebook::ViewpointCodebook::build();
    let (vp, ipr) = cb.encode_rotation(&specpose::geometry::Mat3::identity());
    assert_eq!((v["vp"].as_u64(), v["ipr"].as_u64()), (Some(vp as u64), Some(ipr as u64)));
}

#[test]
fn encode_then_decode_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "k.json", CAMERA);
    let out = specpose(&["decode-pose", "17", "33", "-4.5,2", "0.7", "--intrinsics", "k.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(dir.path().join("p.json"), &out.stdout).unwrap();
    let v = json(&specpose(&["encode-pose", "p.json", "--intrinsics", "k.json"], dir.path()));
    assert_eq!((v["vp"].as_u64(), v["ipr"].as_u64()), (Some(17), Some(33)));
    let off = v["offset"].as_array().unwrap();
    assert!((off[0].as_f64().unwrap() + 4.5).abs() < 1e-9 && (off[1].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((v["depth"].as_f64().unwrap() - 0.7).abs() < 1e-12);
}

#[test]
fn selftest_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = specpose(&["--pretty", "selftest"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3840/3840 round-trips ok; gradient checks ok");
    let v = json(&specpose(&["selftest", "--configs", "5"], dir.path()));
    assert_eq!(v["summary"], "3840/3840 round-trips ok; gradient checks ok");
}

#[test]
fn evaluate_count_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let entry = format!(r#"{{"mesh_id":"nut","gt_pose":{AT_HALF_METER}}}"#);
    write(dir.path(), "m.json", &format!("[{entry},{entry}]"));
    write(dir.path(), "p.json", &format!("[{AT_HALF_METER}]"));
    let out = specpose(&["evaluate", "m.json", "p.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("count mismatch"));

    write(dir.path(), "p.json", &format!("[{AT_HALF_METER},{AT_HALF_METER}]"));
    let out = specpose(&["evaluate", "m.json", "p.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["rows"][0]["add_rate"], 100.0);
    assert_eq!(v["rows"][0]["n_samples"], 2);
    let table = specpose(&["evaluate", "m.json", "p.json", "--pretty"], dir.path());
    assert!(String::from_utf8_lossy(&table.stdout).starts_with("object"));
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = specpose(&["encode-pose", "x.json", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(specpose(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn invalid_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", r#"{"rotation":[2,0,0,0,1,0,0,0,1],"translation":[0,0,1]}"#);
    assert_eq!(specpose(&["encode-pose", "bad.json"], dir.path()).status.code(), Some(1));
    assert_eq!(specpose(&["encode-pose", "missing.json"], dir.path()).status.code(), Some(1));
    assert_eq!(specpose(&["decode-pose", "64", "0", "0,0", "0.5"], dir.path()).status.code(), Some(1));
    assert_eq!(specpose(&["extract-edges", "gear"], dir.path()).status.code(), Some(1));
}

#[test]
fn extract_edges_of_bundled_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&specpose(&["extract-edges", "housing"], dir.path()));
    assert_eq!(v["count"].as_u64().unwrap() as usize, v["edges"].as_array().unwrap().len());
    assert!(v["count"].as_u64().unwrap() > 0);
}

#[test]
fn render_writes_refiner_input() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", AT_HALF_METER);
    write(dir.path(), "k.json", CAMERA);
    let out = specpose(&["render", "nut", "p.json", "k.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["mask_pixels"].as_u64().unwrap() > 0);
    let input = specpose::render::RefinerInput::load(dir.path().join("o/input.spk5")).unwrap();
    assert_eq!(input.shape(), (5, 240, 240));
    let edges = specpose::render::load_binary_png(dir.path().join("o/edges.png")).unwrap();
    assert_eq!(edges.count() as u64, v["edge_pixels"].as_u64().unwrap());
}

#[test]
fn coarse_match_recovers_rendered_bin() {
    let dir = tempfile::tempdir().unwrap();
    let cb = specpose::codebook::ViewpointCodebook::build();
    let mesh = specpose::harness::BundledMesh::PulleyWithScrew.mesh();
    let edges = specpose::render::extract_sharp_edges(&mesh, specpose::render::DEFAULT_SHARP_THRESHOLD).unwrap();
    let intr = specpose::geometry::CameraIntrinsics::centered(200.0, 96);
    let pose = specpose::geometry::Pose::from_parts(
        cb.decode_rotation(30, 12).unwrap(),
        specpose::geometry::Vec3::new(0.0, 0.0, 0.45),
    );
    let img = specpose::render::render(&mesh, &edges, &pose, &intr).unwrap().edge_image;
    specpose::render::save_binary_png(&img, dir.path().join("e.png")).unwrap();
    let out = specpose(&["coarse-match", "e.png", "pulley_with_screw", "--depth", "0.45", "--focal", "200"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!((v["vp"].as_u64(), v["ipr"].as_u64()), (Some(30), Some(12)));
    assert_eq!(v["offset"], serde_json::json!([0.0, 0.0]));
    let blank = specpose::render::Grid::filled(96, 96, false);
    specpose::render::save_binary_png(&blank, dir.path().join("b.png")).unwrap();
    let out = specpose(&["coarse-match", "b.png", "nut", "--depth", "0.45"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no edges observed"));
}

#[test]
fn refine_and_ablate_run() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gt.json", AT_HALF_METER);
    write(dir.path(), "init.json", r#"{"rotation":[0.995004165,-0.099833417,0,0.099833417,0.995004165,0,0,0,1],"translation":[0.015,0,0.52]}"#);
    let out = specpose(&["refine", "housing", "init.json", "gt.json", "--loss", "l_3dpm", "--iters", "2", "--csv", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["config"]["loss_kind"], "l_3dpm");
    let trace = v["add_trace"].as_array().unwrap();
    assert_eq!(trace.len(), 3);
    assert!(trace[2].as_f64().unwrap() < trace[0].as_f64().unwrap());
    assert!(std::fs::read_to_string(dir.path().join("t.csv")).unwrap().starts_with("outer,inner,loss,add"));

    let entry = format!(r#"{{"mesh_id":"shaft","gt_pose":{AT_HALF_METER}}}"#);
    write(dir.path(), "m.json", &format!("[{entry},{entry},{entry}]"));
    let a = specpose(&["ablate", "m.json", "--seed", "3", "--max-steps", "50"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = specpose(&["ablate", "m.json", "--seed", "3", "--max-steps", "50"], dir.path());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["rows"][0]["n_samples"], 3);
    assert_eq!(v["noise"]["seed"], 3);
    let zero = json(&specpose(&["ablate", "m.json", "--noise", "0,0,0"], dir.path()));
    assert_eq!(zero["rows"][0]["add_rate_l1"], 100.0);
    assert_eq!(specpose(&["ablate", "m.json", "--noise", "1,2"], dir.path()).status.code(), Some(1));
}
