//! `fieldnav`: batch commands and the teleop server.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 the domain
//! rejected the request (for instance no certifiable scene).

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fieldnav_core::config::RunConfig;
use fieldnav_core::field::{build_field_with, HumanoidField};
use fieldnav_core::scene::{generate_scene, SceneError, SceneManifest};
use fieldnav_core::sim::{evaluate, run_rollout, write_trace, EvalSummary};
use fieldnav_core::voxel::vxf::{encode_occupancy, encode_scalar, encode_vector};
use rayon::prelude::*;

#[derive(Parser, Debug)]
#[command(name = "fieldnav", version, about = "Whole-body potential-field guidance on voxel worlds")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate certified scenes: manifest JSON plus occupancy grid per seed.
    GenScene {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        difficulty: f64,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Build the field for a scene and write its grids.
    BuildField {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Follow the field on one scene; with --trials > 1, resample start/goal pairs.
    Rollout {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 1)]
        trials: u32,
        /// Climb the potential instead of descending it.
        #[arg(long)]
        reverse_field: bool,
        /// Directory for the trace of the scene's own start/goal pair.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate scenes for consecutive seeds and report SR and DE.
    Evaluate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 0.0)]
        difficulty: f64,
        #[arg(long, default_value_t = 1)]
        trials: u32,
        #[arg(long)]
        reverse_field: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a horizontal slice of the potential, distance or guidance as CSV.
    ExportSlice {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_enum, default_value_t = SliceField::U)]
        field: SliceField,
        #[arg(long)]
        z: f64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the click-and-traverse server.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SliceField {
    U,
    Sdf,
    Grad,
}

/// The request was well formed but the domain refused it.
#[derive(Debug)]
struct Rejected(String);

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Rejected {}

fn scene_error(e: SceneError) -> anyhow::Error {
    match e {
        SceneError::Rejected(why) => Rejected(why).into(),
        other => other.into(),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else { return Ok(RunConfig::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    RunConfig::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
}

fn load_scene(path: &Path) -> Result<SceneManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read scene {}", path.display()))?;
    SceneManifest::from_json(&text).with_context(|| format!("in {}", path.display()))
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("FIELDNAV_THREADS") else { return Ok(()) };
    let n: usize = v.parse().ok().filter(|n| *n > 0).with_context(|| format!("FIELDNAV_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool already initialised")?;
    Ok(())
}

/// Echo the command line and every effective setting, so any run can be
/// repeated from its log.
fn print_header(cfg: &RunConfig) {
    let mut err = std::io::stderr().lock();
    let args: Vec<String> = std::env::args().collect();
    let _ = writeln!(err, "# {}", args.join(" "));
    for line in cfg.to_toml().lines() {
        let _ = writeln!(err, "# {line}");
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn check_difficulty(d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        bail!("--difficulty must lie in [0, 1], got {d}");
    }
    Ok(())
}

fn gen_scene(cfg: &RunConfig, seed: u64, difficulty: f64, count: u64, out: &Path) -> Result<()> {
    check_difficulty(difficulty)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write(&out.join("config.toml"), cfg.to_toml())?;
    let scenes: Vec<_> = (seed..seed + count).into_par_iter().map(|s| (s, generate_scene(s, difficulty, &cfg.scene))).collect();
    let mut rejected = Vec::new();
    for (s, scene) in scenes {
        match scene {
            Ok(scene) => {
                write(&out.join(format!("scene_{s:05}.json")), scene.manifest.to_json())?;
                write(&out.join(format!("scene_{s:05}.vxf")), encode_occupancy(&scene.grid))?;
                println!("seed {s}: {} boxes, attempt {}", scene.manifest.boxes.len(), scene.attempt);
            }
            Err(SceneError::Rejected(why)) => {
                eprintln!("seed {s}: {why}");
                rejected.push(s);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if !rejected.is_empty() {
        return Err(Rejected(format!("{} of {count} seeds rejected: {rejected:?}", rejected.len())).into());
    }
    Ok(())
}

fn field_for(cfg: &RunConfig, scene: &SceneManifest) -> Result<HumanoidField> {
    let grid = scene.build_grid(cfg.scene.voxel_budget).map_err(scene_error)?;
    build_field_with(&grid, &scene.goal(), &cfg.field, cfg.rollout.goal_region).map_err(|e| Rejected(e.to_string()).into())
}

fn build_field_cmd(cfg: &RunConfig, scene: &Path, out: &Path) -> Result<()> {
    let field = field_for(cfg, &load_scene(scene)?)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write(&out.join("geodesic.vxf"), encode_scalar(&field.geodesic))?;
    write(&out.join("sdf.vxf"), encode_scalar(&field.sdf))?;
    write(&out.join("u.vxf"), encode_scalar(&field.potential))?;
    write(&out.join("guidance.vxf"), encode_vector(&field.guidance))?;
    println!("{}", out.display());
    Ok(())
}

fn print_summary(s: &EvalSummary) {
    let v = serde_json::json!({
        "sr": s.sr,
        "de_mean": s.de_mean,
        "de_mean_success": s.de_mean_success,
        "trials": s.trials,
        "scenes": s.scenes.len(),
    });
    println!("{v}");
}

fn write_eval(out: &Path, s: &EvalSummary) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write(&out.join("evaluation.csv"), s.to_csv())?;
    write(&out.join("outcomes.json"), serde_json::to_string_pretty(&s.outcomes)?)
}

fn rollout_cmd(cfg: &RunConfig, scene: &Path, trials: u32, out: Option<&Path>) -> Result<()> {
    let manifest = load_scene(scene)?;
    let summary =
        evaluate(std::slice::from_ref(&manifest), &cfg.scene, &cfg.agent, &cfg.field, &cfg.rollout, trials)?;
    if let Some(out) = out {
        write_eval(out, &summary)?;
        let r = run_rollout(&manifest, &cfg.agent, &cfg.field, &cfg.rollout)?;
        write(&out.join("trace.jsonl"), write_trace(&r.records()))?;
    }
    print_summary(&summary);
    Ok(())
}

fn evaluate_cmd(cfg: &RunConfig, seed: u64, count: u64, difficulty: f64, trials: u32, out: Option<&Path>) -> Result<()> {
    check_difficulty(difficulty)?;
    let scenes = (seed..seed + count)
        .into_par_iter()
        .map(|s| generate_scene(s, difficulty, &cfg.scene).map(|g| g.manifest))
        .collect::<Result<Vec<_>, _>>()
        .map_err(scene_error)?;
    let summary = evaluate(&scenes, &cfg.scene, &cfg.agent, &cfg.field, &cfg.rollout, trials)?;
    if let Some(out) = out {
        write_eval(out, &summary)?;
        write(&out.join("config.toml"), cfg.to_toml())?;
    }
    print_summary(&summary);
    Ok(())
}

fn slice_csv(field: &HumanoidField, which: SliceField, z: f64) -> Result<String> {
    let spec = field.sdf.spec;
    let top = spec.max_corner().z;
    if !(z >= spec.origin.z && z < top) {
        bail!("--z {z} lies outside the grid height [{}, {top})", spec.origin.z);
    }
    let k = ((z - spec.origin.z) / spec.resolution).floor() as usize;
    let mut out = String::from(match which {
        SliceField::U => "x,y,u\n",
        SliceField::Sdf => "x,y,sdf\n",
        SliceField::Grad => "x,y,fx,fy,fz\n",
    });
    for j in 0..spec.dims[1] {
        for i in 0..spec.dims[0] {
            let c = spec.center([i, j, k]);
            let cell = [i, j, k];
            let values = match which {
                SliceField::U => format!("{}", field.potential.get(cell)),
                SliceField::Sdf => format!("{}", field.sdf.get(cell)),
                SliceField::Grad => {
                    let f = field.guidance.get(cell);
                    format!("{},{},{}", f.x, f.y, f.z)
                }
            };
            out.push_str(&format!("{},{},{values}\n", c.x, c.y));
        }
    }
    Ok(out)
}

fn export_slice(cfg: &RunConfig, scene: &Path, which: SliceField, z: f64, out: Option<&Path>) -> Result<()> {
    let manifest = load_scene(scene)?;
    if !(z >= 0.0 && z < manifest.room[2]) {
        bail!("--z {z} lies outside the room height [0, {})", manifest.room[2]);
    }
    let csv = slice_csv(&field_for(cfg, &manifest)?, which, z)?;
    match out {
        Some(p) => write(p, csv),
        None => {
            std::io::stdout().lock().write_all(csv.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Cmd::Rollout { reverse_field: true, .. } | Cmd::Evaluate { reverse_field: true, .. } = cli.cmd {
        cfg.rollout.reverse_field = true;
    }
    print_header(&cfg);
    match cli.cmd {
        Cmd::GenScene { seed, difficulty, count, out } => gen_scene(&cfg, seed, difficulty, count, &out),
        Cmd::BuildField { scene, out } => build_field_cmd(&cfg, &scene, &out),
        Cmd::Rollout { scene, trials, out, .. } => rollout_cmd(&cfg, &scene, trials, out.as_deref()),
        Cmd::Evaluate { seed, count, difficulty, trials, out, .. } => {
            evaluate_cmd(&cfg, seed, count, difficulty, trials, out.as_deref())
        }
        Cmd::ExportSlice { scene, field, z, out } => export_slice(&cfg, &scene, field, z, out.as_deref()),
        Cmd::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(fieldnav_teleop::serve(addr, cfg))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Rejected>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
