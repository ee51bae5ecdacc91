use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use specpose::codebook::{RoughPose, ViewpointCodebook};
use specpose::geometry::{load_intrinsics, load_pose, CameraIntrinsics, Pose};
use specpose::harness::{
    ablate_losses, evaluate, load_dataset, load_predictions, resolve_mesh, run_selftest, EvalConfig, MeshLibrary,
};
use specpose::losses::LossKind;
use specpose::refine::{coarse_match, iterative_refine, NoiseConfig, NoiseUnits, RefineOptions};
use specpose::render::{
    assemble_refiner_input, crop_and_resize, crop_and_resize_binary, extract_sharp_edges, load_binary_png,
    load_color_png, render, save_binary_png, ColorImage, CROP_SIZE, DEFAULT_SHARP_THRESHOLD,
};

/// 6D pose toolkit: codebook, sharp-edge rendering, point-matching
/// refinement and ADD/ADD-S evaluation.
#[derive(Parser)]
#[command(name = "specpose", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Aligned text instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Args)]
struct CameraArgs {
    /// Intrinsics JSON (fx, fy, cx, cy, width, height).
    #[arg(long)]
    intrinsics: Option<PathBuf>,
}

impl CameraArgs {
    /// The given intrinsics, else a 640x480 camera with 600 px focal length.
    fn resolve(&self) -> specpose::Result<CameraIntrinsics> {
        match &self.intrinsics {
            Some(p) => load_intrinsics(p),
            None => CameraIntrinsics::new(600.0, 600.0, 319.5, 239.5, 640, 480),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List mesh edges whose face normals differ by at least the threshold.
    ExtractEdges {
        /// Bundled mesh name or OBJ path.
        mesh: String,
        #[arg(long, default_value_t = DEFAULT_SHARP_THRESHOLD)]
        threshold: f64,
    },
    /// Render mask, depth and edges; optionally write images and the refiner input.
    Render {
        mesh: String,
        pose: PathBuf,
        intrinsics: PathBuf,
        /// Side of the square crop.
        #[arg(long, default_value_t = CROP_SIZE)]
        size: usize,
        /// Directory for mask.png, edges.png, crop PNGs and input.spk5.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Photograph for the color channels (default: gray rendering).
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// Codebook bin of a pose (plus offset and depth with --intrinsics).
    EncodePose {
        pose: PathBuf,
        #[command(flatten)]
        camera: CameraArgs,
    },
    /// Pose of a codebook bin, image offset "du,dv" and depth.
    DecodePose {
        vp: usize,
        ipr: usize,
        #[arg(allow_hyphen_values = true)]
        offset: String,
        depth: f64,
        #[command(flatten)]
        camera: CameraArgs,
    },
    /// Best codebook bin for a binary edge image.
    CoarseMatch {
        edge_image: PathBuf,
        mesh: String,
        /// Object depth used to render the templates, meters.
        #[arg(long)]
        depth: f64,
        /// Focal length when no intrinsics are given (principal point at the image center).
        #[arg(long, default_value_t = 600.0)]
        focal: f64,
        #[arg(long)]
        intrinsics: Option<PathBuf>,
    },
    /// Refine an initial pose against points observed at the label pose.
    Refine {
        mesh: String,
        init_pose: PathBuf,
        gt_pose: PathBuf,
        #[arg(long, default_value = "l_cpm")]
        loss: LossKind,
        /// Outer render-and-refine iterations.
        #[arg(long, default_value_t = 4)]
        iters: usize,
        #[arg(long, default_value_t = 200)]
        max_steps: usize,
        #[arg(long, default_value_t = 500)]
        points: usize,
        /// Also write the loss trace as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        camera: CameraArgs,
    },
    /// ADD / ADD-S success rates per object.
    Evaluate { manifest: PathBuf, predictions: PathBuf },
    /// Paired L1 versus cosine refinement from perturbed label poses.
    Ablate {
        manifest: PathBuf,
        /// Noise "rot,offset,depth".
        #[arg(long, default_value = "0.3,0.01,0.08")]
        noise: String,
        /// Read the noise values as variances in degrees² / m² instead of standard deviations.
        #[arg(long)]
        variance_degrees: bool,
        #[arg(long, default_value_t = 200)]
        max_steps: usize,
    },
    /// Codebook round-trip over every bin and finite-difference gradient checks.
    Selftest {
        #[arg(long, default_value_t = 100)]
        configs: usize,
    },
}

enum Failure {
    /// Bad input: exit 1.
    Invalid(String),
    /// Anything else: exit 2.
    Internal(String),
}

impl From<specpose::Error> for Failure {
    fn from(e: specpose::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<Output, Failure>;

struct Output {
    json: Value,
    table: String,
}

impl Output {
    fn new(value: impl Serialize, table: String) -> Result<Self, Failure> {
        let json = serde_json::to_value(value).map_err(|e| Failure::Internal(e.to_string()))?;
        Ok(Output { json, table })
    }

    /// Key/value lines for flat objects.
    fn flat(value: Value) -> Self {
        let table = match &value {
            Value::Object(map) => {
                let w = map.keys().map(String::len).max().unwrap_or(0);
                map.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
            }
            other => format!("{other}\n"),
        };
        Output { json: value, table }
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2], Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok([a, b]),
            _ => Err(Failure::Invalid(format!("offset {s:?} is not two numbers"))),
        },
        _ => Err(Failure::Invalid(format!("offset {s:?} must be \"du,dv\""))),
    }
}

fn parse_triple(s: &str) -> Result<[f64; 3], Failure> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
        _ => Err(Failure::Invalid(format!("noise {s:?} must be \"rot,offset,depth\""))),
    }
}

fn pose_value(p: &Pose) -> Value {
    serde_json::to_value(p).expect("pose serializes")
}

fn run(cli: Cli) -> Outcome {
    let seed = cli.global.seed;
    match cli.command {
        Command::ExtractEdges { mesh, threshold } => {
            let m = resolve_mesh(&mesh)?.mesh;
            let edges = extract_sharp_edges(&m, threshold)?;
            let table = format!("{} sharp edges at {:.4} rad\n", edges.len(), threshold)
                + &edges.edges.iter().map(|[a, b]| format!("{a} {b}\n")).collect::<String>();
            Output::new(json!({"count": edges.len(), "threshold": threshold, "edges": edges.edges}), table)
        }
        Command::Render {
            mesh,
            pose,
            intrinsics,
            size,
            out,
            image,
        } => {
            let m = resolve_mesh(&mesh)?.mesh;
            let pose = load_pose(&pose)?;
            let intr = load_intrinsics(&intrinsics)?;
            let edges = extract_sharp_edges(&m, DEFAULT_SHARP_THRESHOLD)?;
            let buffers = render(&m, &edges, &pose, &intr)?;
            let bbox = buffers.mask.bbox();
            let mut written = Vec::new();
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| Failure::Invalid(format!("{}: {e}", dir.display())))?;
                save_binary_png(&buffers.mask, dir.join("mask.png"))?;
                save_binary_png(&buffers.edge_image, dir.join("edges.png"))?;
                written.extend(["mask.png", "edges.png"]);
                if let Some(b) = bbox {
                    let photo = match &image {
                        Some(p) => load_color_png(p)?,
                        None => ColorImage::from_fn(buffers.mask.height(), buffers.mask.width(), |r, c| {
                            let v = if *buffers.edge_image.get(r, c) {
                                1.0
                            } else if *buffers.mask.get(r, c) {
                                0.5
                            } else {
                                0.0
                            };
                            [v; 3]
                        }),
                    };
                    let crop_mask = crop_and_resize_binary(&buffers.mask, b, size)?;
                    let crop_edges = crop_and_resize_binary(&buffers.edge_image, b, size)?;
                    save_binary_png(&crop_mask, dir.join("crop_mask.png"))?;
                    save_binary_png(&crop_edges, dir.join("crop_edges.png"))?;
                    written.extend(["crop_mask.png", "crop_edges.png"]);
                    if size == CROP_SIZE {
                        let color = crop_and_resize(&photo, b, size)?;
                        assemble_refiner_input(&color, &crop_edges, &crop_mask)?.save(dir.join("input.spk5"))?;
                        written.push("input.spk5");
                    }
                }
            }
            Ok(Output::flat(json!({
                "height": buffers.mask.height(),
                "width": buffers.mask.width(),
                "mask_pixels": buffers.mask.count(),
                "edge_pixels": buffers.edge_image.count(),
                "sharp_edges": edges.len(),
                "bbox": bbox,
                "written": written,
            })))
        }
        Command::EncodePose { pose, camera } => {
            let pose = load_pose(&pose)?;
            let cb = ViewpointCodebook::build();
            let (vp, ipr) = cb.encode_rotation(&pose.rotation);
            let mut v = json!({"vp": vp, "ipr": ipr});
            if camera.intrinsics.is_some() {
                let rough = cb.encode_pose(&pose, &camera.resolve()?)?;
                v["offset"] = json!(rough.offset2d);
                v["depth"] = json!(rough.depth);
            }
            Ok(Output::flat(v))
        }
        Command::DecodePose {
            vp,
            ipr,
            offset,
            depth,
            camera,
        } => {
            let rough = RoughPose {
                vp_idx: vp,
                ipr_idx: ipr,
                offset2d: parse_pair(&offset)?,
                depth,
            };
            let pose = ViewpointCodebook::build().decode_pose(&rough, &camera.resolve()?)?;
            let r = pose.rotation;
            let table = (0..3)
                .map(|i| {
                    format!(
                        "{:>10.6} {:>10.6} {:>10.6} | {:>10.6}\n",
                        r[(i, 0)],
                        r[(i, 1)],
                        r[(i, 2)],
                        pose.translation[i]
                    )
                })
                .collect();
            Output::new(pose, table)
        }
        Command::CoarseMatch {
            edge_image,
            mesh,
            depth,
            focal,
            intrinsics,
        } => {
            let observed = load_binary_png(&edge_image)?;
            let intr = match intrinsics {
                Some(p) => load_intrinsics(p)?,
                None => {
                    let (h, w) = observed.size();
                    CameraIntrinsics::new(focal, focal, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0, w as u32, h as u32)?
                }
            };
            let m = resolve_mesh(&mesh)?.mesh;
            let edges = extract_sharp_edges(&m, DEFAULT_SHARP_THRESHOLD)?;
            let rough = coarse_match(&observed, &m, &edges, &ViewpointCodebook::build(), depth, &intr)?;
            Ok(Output::flat(serde_json::to_value(rough).expect("rough pose serializes")))
        }
        Command::Refine {
            mesh,
            init_pose,
            gt_pose,
            loss,
            iters,
            max_steps,
            points,
            csv,
            camera,
        } => {
            let m = resolve_mesh(&mesh)?.mesh;
            let init = load_pose(&init_pose)?;
            let gt = load_pose(&gt_pose)?;
            let opts = RefineOptions {
                loss_kind: loss,
                outer_iterations: iters,
                max_inner_steps: max_steps,
                point_count: points,
                sample_seed: seed,
                ..Default::default()
            };
            let result = iterative_refine(&init, &m, &gt, &camera.resolve()?, &opts)?;
            if let Some(path) = csv {
                std::fs::write(&path, result.to_csv())
                    .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
            }
            let text = result.to_json(&opts)?;
            let json: Value = serde_json::from_str(&text).map_err(|e| Failure::Internal(e.to_string()))?;
            let mut table = format!("loss {loss}, converged {}\nouter  ADD (m)      mask IoU\n", result.converged);
            for (i, add) in result.add_trace.iter().enumerate() {
                let iou = if i == 0 {
                    String::new()
                } else {
                    result.iou_trace.get(i - 1).map_or(String::new(), |v| format!("{v:.4}"))
                };
                table.push_str(&format!("{i:>5}  {add:<11.4e}  {iou}\n"));
            }
            table.push_str(&format!("final pose {}\n", pose_value(&result.final_pose)));
            Ok(Output { json, table })
        }
        Command::Evaluate { manifest, predictions } => {
            let lib = MeshLibrary::bundled();
            let ds = load_dataset(&manifest, &lib)?;
            let preds = load_predictions(&predictions)?;
            let cfg = EvalConfig {
                sample_seed: seed,
                ..Default::default()
            };
            let report = evaluate(&ds, &preds, &lib, &cfg)?;
            let table = report.to_table();
            Output::new(report, table)
        }
        Command::Ablate {
            manifest,
            noise,
            variance_degrees,
            max_steps,
        } => {
            let lib = MeshLibrary::bundled();
            let ds = load_dataset(&manifest, &lib)?;
            let [rot, off, depth] = parse_triple(&noise)?;
            let noise = NoiseConfig {
                rot_sigma: rot,
                offset_sigma: off,
                depth_sigma: depth,
                seed,
                units: if variance_degrees {
                    NoiseUnits::VarianceDegrees
                } else {
                    NoiseUnits::StdRadians
                },
            };
            let opts = RefineOptions {
                max_inner_steps: max_steps,
                sample_seed: seed,
                ..Default::default()
            };
            let report = ablate_losses(&ds, &lib, &noise, &opts)?;
            let table = report.to_table();
            Output::new(report, table)
        }
        Command::Selftest { configs } => {
            let report = run_selftest(configs, seed)?;
            let summary = report.summary();
            if !report.passed() {
                return Err(Failure::Internal(summary));
            }
            let mut json = serde_json::to_value(&report).map_err(|e| Failure::Internal(e.to_string()))?;
            json["summary"] = json!(summary);
            Ok(Output {
                json,
                table: format!("{summary}\n"),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let pretty = cli.global.pretty;
    // library panics are internal errors
    std::panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    let outcome = std::panic::catch_unwind(|| run(cli)).unwrap_or_else(|_| Err(Failure::Internal("panic".into())));
    match outcome {
        Ok(out) => {
            if pretty {
                print!("{}", out.table);
            } else {
                println!("{}", out.json);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
