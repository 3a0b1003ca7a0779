//! `covtrack` command line: synthesize scenarios, track detection files,
//! evaluate results, score detection uncertainty, render frames, and replay
//! recorded runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use covtrack::io::{self, CovArity, Manifest};
use covtrack::motmetrics::{accumulate_events, evaluate, EvalReport};
use covtrack::scoring::{score_matched, ScoreReport};
use covtrack::sequence::{densify_detections, max_frame_of_detections};
use covtrack::svg::{detections_scene, render_svg, results_scene};
use covtrack::synth::{generate, named_scenario, ScenarioSpec};
use covtrack::tracker::{FrameResult, Tracker, TrackerConfig};
use covtrack::{assignment, geometry};

#[derive(Parser)]
#[command(name = "covtrack", version, about = "Uncertainty-aware multi-object tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario's ground truth and detection files.
    Synth(SynthArgs),
    /// Run the tracker over a detection file.
    Track(TrackArgs),
    /// Evaluate a results file against ground truth.
    Eval(EvalArgs),
    /// Score detection uncertainty against ground truth (NLL, ES, sample-IoU).
    Score(ScoreArgs),
    /// Render one frame as SVG with error ellipses and color-coded boxes.
    Viz(VizArgs),
    /// Re-run a recorded command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CovArityArg {
    None,
    Diag4,
    Full10,
}

impl From<CovArityArg> for CovArity {
    fn from(v: CovArityArg) -> Self {
        match v {
            CovArityArg::None => CovArity::None,
            CovArityArg::Diag4 => CovArity::Diag4,
            CovArityArg::Full10 => CovArity::Full10,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Named scenario: `crossing` or `noiseless`.
    #[arg(long, conflicts_with = "spec")]
    scenario: Option<String>,
    /// Scenario spec file (TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dets: PathBuf,
    #[arg(long)]
    out_gt: PathBuf,
    /// Covariance serialization of the detection file.
    #[arg(long, value_enum, default_value = "diag4")]
    cov: CovArityArg,
    /// Manifest path (defaults to `<out-dets>.manifest.json`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Extension {
    Kfcov,
    Ellipse,
    Relax,
    Greedy,
    All,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    dets: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Tracker configuration file (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    score_high: Option<f64>,
    #[arg(long)]
    score_low: Option<f64>,
    #[arg(long)]
    max_lost: Option<u32>,
    /// Turn extensions on: kfcov, ellipse, relax, greedy, all.
    #[arg(long, value_enum, value_delimiter = ',')]
    enable: Vec<Extension>,
    /// Turn extensions off: kfcov, ellipse, relax, greedy, all.
    #[arg(long, value_enum, value_delimiter = ',')]
    disable: Vec<Extension>,
    /// Recorded in the manifest; the tracker itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    iou_thr: f64,
    /// Metrics JSON output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    dets: PathBuf,
    /// Samples per matched pair for the sampled scores.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score report JSON output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct VizArgs {
    /// Detection file to render.
    #[arg(long, conflicts_with = "results")]
    dets: Option<PathBuf>,
    /// Results file to render (color-coded when --gt is given).
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    frame: u32,
    #[arg(long, default_value_t = 640.0)]
    width: f64,
    #[arg(long, default_value_t = 480.0)]
    height: f64,
    #[arg(long, default_value_t = 0.5)]
    iou_thr: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Manifest of the run to reproduce.
    manifest: PathBuf,
    /// Redirect every output into this directory (same file names).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Track(args) => run_track(args),
        Command::Eval(args) => run_eval(args),
        Command::Score(args) => run_score(args),
        Command::Viz(args) => run_viz(args),
        Command::Replay(args) => run_replay(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn default_manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

// ---- synth ----

#[derive(serde::Serialize, serde::Deserialize)]
struct SynthParams {
    spec: ScenarioSpec,
    cov: CovArity,
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let mut spec = match (&args.scenario, &args.spec) {
        (Some(name), None) => named_scenario(name)
            .ok_or_else(|| anyhow!("unknown scenario {name:?}; try `crossing` or `noiseless`"))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        _ => bail!("exactly one of --scenario or --spec is required"),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let params = SynthParams {
        spec,
        cov: args.cov.into(),
    };
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| default_manifest_path(&args.out_dets));
    synth_from_params(&params, &args.out_dets, &args.out_gt, &manifest_path)
}

fn synth_from_params(
    params: &SynthParams,
    out_dets: &Path,
    out_gt: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let (gt, dets) = generate(&params.spec)?;
    io::write_detections(out_dets, &dets, params.cov)?;
    io::write_gt(out_gt, &gt)?;

    let mut manifest = Manifest::new("synth");
    manifest.params = serde_json::to_value(params)?;
    manifest
        .outputs
        .insert("detections".into(), path_str(out_dets));
    manifest.outputs.insert("gt".into(), path_str(out_gt));
    manifest.stats.insert(
        "gt_boxes".into(),
        gt.iter().map(|f| f.boxes.len()).sum::<usize>().into(),
    );
    manifest.stats.insert(
        "detections".into(),
        dets.iter().map(|f| f.dets.len()).sum::<usize>().into(),
    );
    manifest.save(manifest_path)?;
    println!(
        "synth: {} frames, {} detections -> {}",
        params.spec.frame_count,
        dets.iter().map(|f| f.dets.len()).sum::<usize>(),
        out_dets.display()
    );
    Ok(())
}

// ---- track ----

#[derive(serde::Serialize, serde::Deserialize)]
struct TrackParams {
    config: TrackerConfig,
    seed: u64,
}

fn apply_extensions(cfg: &mut TrackerConfig, exts: &[Extension], value: bool) {
    for e in exts {
        match e {
            Extension::Kfcov => cfg.enable_kfcov = value,
            Extension::Ellipse => cfg.enable_ellipse = value,
            Extension::Relax => cfg.enable_relax = value,
            Extension::Greedy => cfg.enable_greedy = value,
            Extension::All => {
                cfg.enable_kfcov = value;
                cfg.enable_ellipse = value;
                cfg.enable_relax = value;
                cfg.enable_greedy = value;
            }
        }
    }
}

fn run_track(args: TrackArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => TrackerConfig::default(),
    };
    if let Some(v) = args.tau1 {
        config.tau1 = v;
    }
    if let Some(v) = args.tau2 {
        config.tau2 = v;
    }
    if let Some(v) = args.score_high {
        config.score_high = v;
    }
    if let Some(v) = args.score_low {
        config.score_low = v;
    }
    if let Some(v) = args.max_lost {
        config.max_lost = v;
    }
    apply_extensions(&mut config, &args.enable, true);
    apply_extensions(&mut config, &args.disable, false);

    let params = TrackParams {
        config,
        seed: args.seed,
    };
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| default_manifest_path(&args.out));
    track_from_params(&params, &args.dets, &args.out, &manifest_path)
}

fn track_from_params(
    params: &TrackParams,
    dets_path: &Path,
    out: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let sparse = io::load_detections(dets_path)?;
    let last = max_frame_of_detections(&sparse).unwrap_or(0);
    let frames = densify_detections(&sparse, last);

    let mut tracker = Tracker::new(params.config.clone())?;
    let mut results: Vec<FrameResult> = Vec::with_capacity(frames.len());
    for frame in &frames {
        results.push(tracker.step(frame)?);
    }
    io::write_results(out, &results)?;

    let mut manifest = Manifest::new("track");
    manifest.params = serde_json::to_value(params)?;
    manifest
        .inputs
        .insert("detections".into(), path_str(dets_path));
    manifest.outputs.insert("results".into(), path_str(out));
    manifest
        .stats
        .insert("stats".into(), serde_json::to_value(tracker.stats)?);
    manifest.save(manifest_path)?;
    println!(
        "track: {} frames -> {} ({} tracks spawned)",
        frames.len(),
        out.display(),
        tracker.stats.tracks_spawned
    );
    Ok(())
}

// ---- eval ----

#[derive(serde::Serialize, serde::Deserialize)]
struct EvalParams {
    iou_thr: f64,
}

fn format_table(report: &EvalReport) -> String {
    let mut rows = vec![[
        "class".to_string(),
        "MOTA".to_string(),
        "IDF1".to_string(),
        "FP".to_string(),
        "FN".to_string(),
        "IDs".to_string(),
        "GT".to_string(),
    ]];
    for c in &report.per_class {
        rows.push([
            c.label.to_string(),
            format!("{:.4}", c.mota),
            format!("{:.4}", c.idf1),
            c.fp.to_string(),
            c.misses.to_string(),
            c.switches.to_string(),
            c.gt_count.to_string(),
        ]);
    }
    let o = &report.overall;
    rows.push([
        "overall".to_string(),
        format!("{:.4}", o.mota),
        format!("{:.4}", o.idf1),
        o.fp.to_string(),
        o.misses.to_string(),
        o.switches.to_string(),
        o.gt_count.to_string(),
    ]);
    rows.push([
        "mean".to_string(),
        format!("{:.4}", report.m_mota),
        format!("{:.4}", report.m_idf1),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
    ]);

    let mut widths = [0usize; 7];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(cell, w)| format!("{cell:>w$}"))
            .collect();
        out.push_str(&line.join("  "));
        out.push('\n');
    }
    out
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let params = EvalParams {
        iou_thr: args.iou_thr,
    };
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| default_manifest_path(&args.out));
    eval_from_params(&params, &args.gt, &args.results, &args.out, &manifest_path)
}

fn eval_from_params(
    params: &EvalParams,
    gt_path: &Path,
    results_path: &Path,
    out: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let gt = io::load_gt(gt_path)?;
    let results = io::load_results(results_path)?;
    let report = evaluate(&gt, &results, params.iou_thr)?;

    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    io::atomic_write(out, &json)?;
    print!("{}", format_table(&report));

    let mut manifest = Manifest::new("eval");
    manifest.params = serde_json::to_value(params)?;
    manifest.inputs.insert("gt".into(), path_str(gt_path));
    manifest
        .inputs
        .insert("results".into(), path_str(results_path));
    manifest.outputs.insert("metrics".into(), path_str(out));
    manifest.save(manifest_path)?;
    Ok(())
}

// ---- score ----

#[derive(serde::Serialize, serde::Deserialize)]
struct ScoreParams {
    samples: usize,
    seed: u64,
    iou_thr: f64,
}

/// Match detections to ground truth per frame (optimal assignment on
/// 1 - IoU, same-label only, IoU >= `iou_thr`) and pool the pairs.
fn match_for_scoring(
    gt: &[covtrack::GtFrame],
    dets: &[covtrack::FrameDetections],
    iou_thr: f64,
) -> (Vec<geometry::BoxTlbr>, Vec<covtrack::GaussianBox>) {
    let det_by_frame: BTreeMap<u32, &covtrack::FrameDetections> =
        dets.iter().map(|f| (f.frame, f)).collect();
    let mut gts = Vec::new();
    let mut matched = Vec::new();
    for gt_frame in gt {
        let Some(frame_dets) = det_by_frame.get(&gt_frame.frame) else {
            continue;
        };
        let cost = assignment::CostMatrix::from_fn(
            gt_frame.boxes.len(),
            frame_dets.dets.len(),
            |r, c| {
                let g = &gt_frame.boxes[r];
                let d = &frame_dets.dets[c];
                let overlap = geometry::iou(&g.bbox, &d.mean);
                if g.label != d.label || overlap < iou_thr {
                    assignment::FORBIDDEN
                } else {
                    1.0 - overlap
                }
            },
        );
        for &(r, c) in &assignment::hungarian(&cost, 1.0 - iou_thr).pairs {
            gts.push(gt_frame.boxes[r].bbox);
            matched.push(frame_dets.dets[c].clone());
        }
    }
    (gts, matched)
}

fn run_score(args: ScoreArgs) -> Result<()> {
    let params = ScoreParams {
        samples: args.samples,
        seed: args.seed,
        iou_thr: 0.5,
    };
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| default_manifest_path(&args.out));
    score_from_params(&params, &args.gt, &args.dets, &args.out, &manifest_path)
}

fn score_from_params(
    params: &ScoreParams,
    gt_path: &Path,
    dets_path: &Path,
    out: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let gt = io::load_gt(gt_path)?;
    let dets = io::load_detections(dets_path)?;
    let (gts, matched) = match_for_scoring(&gt, &dets, params.iou_thr);
    if gts.is_empty() {
        bail!("no detection matched any ground-truth box at IoU >= {}", params.iou_thr);
    }
    let report: ScoreReport = score_matched(&gts, &matched, params.samples, params.seed)?;

    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    io::atomic_write(out, &json)?;
    println!(
        "score: {} pairs, M={}  NLL {:.4}  ES {:.4}  sample-IoU {:.4}",
        report.n_pairs, report.m_samples, report.nll, report.es, report.sample_iou
    );

    let mut manifest = Manifest::new("score");
    manifest.params = serde_json::to_value(params)?;
    manifest.inputs.insert("gt".into(), path_str(gt_path));
    manifest
        .inputs
        .insert("detections".into(), path_str(dets_path));
    manifest.outputs.insert("report".into(), path_str(out));
    manifest.save(manifest_path)?;
    Ok(())
}

// ---- viz ----

fn run_viz(args: VizArgs) -> Result<()> {
    let scene = match (&args.dets, &args.results) {
        (Some(dets_path), None) => {
            let dets = io::load_detections(dets_path)?;
            let frame = dets
                .iter()
                .find(|f| f.frame == args.frame)
                .cloned()
                .unwrap_or(covtrack::FrameDetections {
                    frame: args.frame,
                    dets: Vec::new(),
                });
            detections_scene(args.width, args.height, &frame.dets)
        }
        (None, Some(results_path)) => {
            let results = io::load_results(results_path)?;
            let frame_result = results
                .iter()
                .find(|f| f.frame == args.frame)
                .cloned()
                .unwrap_or(FrameResult {
                    frame: args.frame,
                    outputs: Vec::new(),
                });
            match &args.gt {
                Some(gt_path) => {
                    let gt = io::load_gt(gt_path)?;
                    let (_, events) = accumulate_events(&gt, &results, args.iou_thr)?;
                    // sparse ground truth may lack an entry for this frame;
                    // the events still classify the predictions on it
                    let empty_gt = covtrack::GtFrame {
                        frame: args.frame,
                        boxes: Vec::new(),
                    };
                    let gt_frame = gt
                        .iter()
                        .find(|f| f.frame == args.frame)
                        .unwrap_or(&empty_gt);
                    match events.iter().find(|e| e.frame == args.frame) {
                        Some(e) => {
                            results_scene(args.width, args.height, &frame_result, Some((gt_frame, e)))
                        }
                        None => results_scene(args.width, args.height, &frame_result, None),
                    }
                }
                None => results_scene(args.width, args.height, &frame_result, None),
            }
        }
        _ => bail!("exactly one of --dets or --results is required"),
    };
    render_svg(&args.out, &scene)?;
    println!("viz: frame {} -> {}", args.frame, args.out.display());
    Ok(())
}

// ---- replay ----

fn remap(path: &str, out_dir: Option<&Path>) -> PathBuf {
    match out_dir {
        Some(dir) => {
            let name = Path::new(path)
                .file_name()
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("output"));
            dir.join(name)
        }
        None => PathBuf::from(path),
    }
}

fn run_replay(args: ReplayArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    let out_dir = args.out_dir.as_deref();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let output = |key: &str| -> Result<PathBuf> {
        manifest
            .outputs
            .get(key)
            .map(|p| remap(p, out_dir))
            .ok_or_else(|| anyhow!("manifest lacks output {key:?}"))
    };
    let input = |key: &str| -> Result<PathBuf> {
        manifest
            .inputs
            .get(key)
            .map(PathBuf::from)
            .ok_or_else(|| anyhow!("manifest lacks input {key:?}"))
    };

    match manifest.command.as_str() {
        "synth" => {
            let params: SynthParams = serde_json::from_value(manifest.params.clone())?;
            let out_dets = output("detections")?;
            synth_from_params(
                &params,
                &out_dets,
                &output("gt")?,
                &default_manifest_path(&out_dets),
            )
        }
        "track" => {
            let params: TrackParams = serde_json::from_value(manifest.params.clone())?;
            let out = output("results")?;
            track_from_params(&params, &input("detections")?, &out, &default_manifest_path(&out))
        }
        "eval" => {
            let params: EvalParams = serde_json::from_value(manifest.params.clone())?;
            let out = output("metrics")?;
            eval_from_params(
                &params,
                &input("gt")?,
                &input("results")?,
                &out,
                &default_manifest_path(&out),
            )
        }
        "score" => {
            let params: ScoreParams = serde_json::from_value(manifest.params.clone())?;
            let out = output("report")?;
            score_from_params(
                &params,
                &input("gt")?,
                &input("detections")?,
                &out,
                &default_manifest_path(&out),
            )
        }
        other => bail!("manifest command {other:?} cannot be replayed"),
    }
}
