//! Command-line front end: dataset generation, staged training, inference,
//! evaluation, and gradient verification.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use skelift::diffcore::{grad_check, DifferentiableScalar, ParamStore, Tensor};
use skelift::error::{Error, Result};
use skelift::gcn::GcnHyper;
use skelift::io::{
    load_gcn_checkpoint, load_predictions, load_sequence, load_tcn_checkpoint, save_gcn_checkpoint,
    save_predictions, save_sequence, save_tcn_checkpoint, write_manifest, RunManifest,
    SequenceFile, SplitManifest,
};
use skelift::metrics::{evaluate, EvalConfig, EvalPair, SequenceEval};
use skelift::pipeline::{infer, FusionMode, PipelineConfig, PipelineModels, PoseSource};
use skelift::skeleton::{SkeletonMatrices, SkeletonTopology};
use skelift::synthgen::{generate_dataset, split, OcclusionModel, SceneConfig};
use skelift::tcn::{DepthBins, TcnHyper, TcnKind};
use skelift::train::{
    bins_from_sequences, build_gcn_samples, build_joint_tcn_samples, build_root_samples,
    build_velocity_samples, grad_check_threshold, run_grad_check, train_gcn, train_tcn, ModelKind,
    OptimizerConfig, TcnDataset,
};

#[derive(Parser)]
#[command(name = "skelift", version, about = "Camera-centric multi-person 3D pose lifting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (sequence JSONL files plus a split manifest).
    Gen(GenArgs),
    /// Train one model stage and write a checkpoint plus a history CSV.
    Train(TrainArgs),
    /// Run the full pipeline over sequence files and write prediction JSONL.
    Infer(InferArgs),
    /// Compare predictions against ground truth and write a metric report.
    Eval(EvalArgs),
    /// Verify analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of scenes.
    #[arg(long, default_value_t = 10)]
    scenes: usize,
    /// Persons per scene: a count ("2") or an inclusive range ("2-3").
    #[arg(long, default_value = "2")]
    persons: String,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    /// Occlusion model: none, crossing, or box.
    #[arg(long, default_value = "none")]
    occlusion: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = skelift::gcn::DEFAULT_NOISE_GAIN)]
    noise_gain: f64,
    #[arg(long, default_value_t = 1000.0)]
    focal: f64,
    /// Metric depth range "lo,hi" in meters.
    #[arg(long, default_value = "2,8")]
    depth: String,
    /// Train/val/test ratios "a,b,c" summing to 1.
    #[arg(long, default_value = "0.7,0.15,0.15")]
    ratios: String,
}

#[derive(Args)]
struct TrainArgs {
    /// gcn, tcn-joint, tcn-velocity, or tcn-root.
    #[arg(long)]
    model: String,
    /// Dataset directory produced by `gen`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// GCN checkpoint (required for tcn-joint).
    #[arg(long)]
    gcn: Option<PathBuf>,
    /// Layer width override.
    #[arg(long)]
    width: Option<usize>,
    /// GCN head width override.
    #[arg(long)]
    head: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Keep every k-th training sample.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Depth bins "lo,hi,count" (default: derived from the training split).
    #[arg(long)]
    bins: Option<String>,
}

#[derive(Args)]
struct InferArgs {
    /// A sequence file or a dataset directory.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    gcn: PathBuf,
    #[arg(long)]
    tcn_joint: PathBuf,
    #[arg(long)]
    tcn_velocity: PathBuf,
    #[arg(long)]
    tcn_root: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// gcn or passthrough-2d.
    #[arg(long, default_value = "gcn")]
    pose_source: String,
    /// full or depth-only.
    #[arg(long, default_value = "full")]
    fusion: String,
}

#[derive(Args)]
struct EvalArgs {
    /// Prediction file or directory of *_pred.jsonl files.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth sequence file or dataset directory.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = skelift::metrics::DEFAULT_PCK_MM)]
    pck_mm: f64,
    #[arg(long, default_value_t = skelift::metrics::DEFAULT_ABS_MM)]
    abs_mm: f64,
    /// Report output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// gcn, tcn-joint, tcn-velocity, tcn-root, or all.
    #[arg(long, default_value = "all")]
    model: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds to check.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Deliberately corrupt one analytic gradient (verifies the check fails).
    #[arg(long, hide = true)]
    corrupt_gradient: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Train(args) => cmd_train(args),
        Command::Infer(args) => cmd_infer(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Gradcheck(args) => return cmd_gradcheck(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("{what}: expected \"lo,hi\", got \"{s}\"")));
    }
    let lo = parts[0].trim().parse::<f64>().map_err(|e| Error::Config(format!("{what}: {e}")))?;
    let hi = parts[1].trim().parse::<f64>().map_err(|e| Error::Config(format!("{what}: {e}")))?;
    Ok((lo, hi))
}

fn parse_person_range(s: &str) -> Result<(usize, usize)> {
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|e| Error::Config(format!("invalid person count \"{v}\": {e}")))
    };
    match s.split_once('-') {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}

fn parse_occlusion(s: &str) -> Result<OcclusionModel> {
    match s {
        "none" => Ok(OcclusionModel::None),
        "crossing" => Ok(OcclusionModel::Crossing),
        "box" => Ok(OcclusionModel::Box),
        other => Err(Error::Config(format!("unknown occlusion model \"{other}\""))),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let t0 = Instant::now();
    let person_range = parse_person_range(&args.persons)?;
    if person_range.0 < 1 || person_range.1 > 6 || person_range.0 > person_range.1 {
        return Err(Error::Config(format!("person range {person_range:?} outside 1..=6")));
    }
    let depth = parse_pair(&args.depth, "--depth")?;
    let ratio_parts: Vec<f64> = args
        .ratios
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Config(format!("--ratios: {e}"))))
        .collect::<Result<_>>()?;
    if ratio_parts.len() != 3 {
        return Err(Error::Config("--ratios needs three values".into()));
    }
    let base = SceneConfig {
        person_count: person_range.0,
        frame_count: args.frames,
        focal: args.focal,
        depth_range: depth,
        occlusion: parse_occlusion(&args.occlusion)?,
        noise_gain: args.noise_gain,
        rng_seed: args.seed,
        ..SceneConfig::default()
    };
    let scenes = generate_dataset(&base, args.scenes, person_range, args.seed)?;
    let topology = skelift::skeleton::default_topology();
    std::fs::create_dir_all(&args.out)?;
    let names: Vec<String> = (0..scenes.len()).map(|i| format!("seq_{i:04}.jsonl")).collect();
    for (scene, name) in scenes.iter().zip(&names) {
        let file = SequenceFile::from_synthetic(scene, &topology);
        save_sequence(&file, &args.out.join(name))?;
    }
    let (train, val, test) =
        split(names, (ratio_parts[0], ratio_parts[1], ratio_parts[2]), args.seed)?;
    let split_manifest = SplitManifest { format_version: 1, seed: args.seed, train, val, test };
    split_manifest.save(&args.out.join("splits.json"))?;

    let mut manifest = RunManifest::new("gen", args.seed, serde_json::to_value(&base)?);
    manifest.outputs = vec![args.out.display().to_string()];
    manifest.wall_clock_seconds = t0.elapsed().as_secs_f64();
    write_manifest(&manifest, &args.out, "gen_manifest.json")?;
    println!("wrote {} scenes to {}", scenes.len(), args.out.display());
    Ok(())
}

type SplitData =
    (Vec<skelift::synthgen::SyntheticSequence>, Vec<skelift::synthgen::SyntheticSequence>, SkeletonTopology);

fn load_split(data: &Path) -> Result<SplitData> {
    let manifest = SplitManifest::load(&data.join("splits.json"))?;
    let mut topology = None;
    let mut load_all = |names: &[String]| -> Result<Vec<skelift::synthgen::SyntheticSequence>> {
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let file = load_sequence(&data.join(name))?;
            if topology.is_none() {
                topology = Some(SkeletonTopology::from_file(&file.header.topology)?);
            }
            out.push(file.to_synthetic()?);
        }
        Ok(out)
    };
    let train = load_all(&manifest.train)?;
    let val = load_all(&manifest.val)?;
    let topology = topology.ok_or_else(|| Error::Config("empty dataset".into()))?;
    Ok((train, val, topology))
}

fn subsample<T>(mut items: Vec<T>, stride: usize) -> Vec<T> {
    if stride <= 1 {
        return items;
    }
    let mut idx = 0;
    items.retain(|_| {
        let keep = idx % stride == 0;
        idx += 1;
        keep
    });
    items
}

fn parse_bins(s: &str) -> Result<DepthBins> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("--bins: expected \"lo,hi,count\", got \"{s}\"")));
    }
    let lo = parts[0].trim().parse::<f64>().map_err(|e| Error::Config(format!("--bins: {e}")))?;
    let hi = parts[1].trim().parse::<f64>().map_err(|e| Error::Config(format!("--bins: {e}")))?;
    let count =
        parts[2].trim().parse::<usize>().map_err(|e| Error::Config(format!("--bins: {e}")))?;
    DepthBins::new(count, lo, hi)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let t0 = Instant::now();
    let (train_seqs, val_seqs, topology) = load_split(&args.data)?;
    if train_seqs.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    let mats = SkeletonMatrices::from_topology(&topology)?;
    let mut opt = OptimizerConfig { seed: args.seed, ..OptimizerConfig::default() };
    if let Some(lr) = args.lr {
        opt.learning_rate = lr;
    }
    if let Some(b) = args.batch {
        opt.batch_size = b;
    }

    let bins = match &args.bins {
        Some(s) => parse_bins(s)?,
        None => bins_from_sequences(&train_seqs, topology.root_index(), 60)?,
    };

    let history;
    match args.model.as_str() {
        "gcn" => {
            opt.epochs = args.epochs.unwrap_or(50);
            let train_samples = subsample(build_gcn_samples(&train_seqs, &topology)?, args.stride);
            let val_samples = subsample(build_gcn_samples(&val_seqs, &topology)?, args.stride);
            let mut hyper = GcnHyper::defaults(&topology);
            if let Some(w) = args.width {
                hyper.gcn_widths = vec![w; hyper.gcn_widths.len()];
            }
            if let Some(h) = args.head {
                hyper.head_hidden = h;
            }
            let (model, hist) = train_gcn(
                &train_samples,
                &val_samples,
                &topology,
                hyper,
                &opt,
                skelift::gcn::DEFAULT_NOISE_GAIN,
            )?;
            save_gcn_checkpoint(&model, &args.out)?;
            history = hist;
        }
        "tcn-joint" => {
            opt.epochs = args.epochs.unwrap_or(30);
            let gcn_path = args
                .gcn
                .as_ref()
                .ok_or_else(|| Error::Config("tcn-joint training needs --gcn".into()))?;
            let gcn = load_gcn_checkpoint(gcn_path)?;
            let width = args.width.unwrap_or(128);
            let hyper =
                TcnHyper::joint_defaults(topology.joint_count(), topology.root_index(), width);
            let window = hyper.window;
            let train_samples =
                subsample(build_joint_tcn_samples(&train_seqs, &gcn, &mats, window)?, args.stride);
            let val_samples =
                subsample(build_joint_tcn_samples(&val_seqs, &gcn, &mats, window)?, args.stride);
            let dataset = TcnDataset::Joint { train: train_samples, val: val_samples };
            let (model, hist) = train_tcn(&dataset, hyper, &opt)?;
            save_tcn_checkpoint(&model, &args.out)?;
            history = hist;
        }
        "tcn-velocity" => {
            opt.epochs = args.epochs.unwrap_or(30);
            let width = args.width.unwrap_or(32);
            let hyper = TcnHyper::velocity_defaults(bins.clone(), width);
            let window = hyper.window;
            let train_samples = subsample(
                build_velocity_samples(&train_seqs, &bins, topology.root_index(), window)?,
                args.stride,
            );
            let val_samples = subsample(
                build_velocity_samples(&val_seqs, &bins, topology.root_index(), window)?,
                args.stride,
            );
            let dataset = TcnDataset::Velocity { train: train_samples, val: val_samples };
            let (model, hist) = train_tcn(&dataset, hyper, &opt)?;
            save_tcn_checkpoint(&model, &args.out)?;
            history = hist;
        }
        "tcn-root" => {
            opt.epochs = args.epochs.unwrap_or(30);
            let width = args.width.unwrap_or(128);
            let hyper = TcnHyper::root_defaults(topology.joint_count(), bins.clone(), width);
            let window = hyper.window;
            let train_samples = subsample(
                build_root_samples(&train_seqs, topology.root_index(), window)?,
                args.stride,
            );
            let val_samples = subsample(
                build_root_samples(&val_seqs, topology.root_index(), window)?,
                args.stride,
            );
            let dataset = TcnDataset::Root { train: train_samples, val: val_samples };
            let (model, hist) = train_tcn(&dataset, hyper, &opt)?;
            save_tcn_checkpoint(&model, &args.out)?;
            history = hist;
        }
        other => return Err(Error::Config(format!("unknown model \"{other}\""))),
    }

    let history_path = args.out.with_extension("history.csv");
    skelift::io::atomic_write(&history_path, history.to_csv().as_bytes())?;

    let out_dir = args.out.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let mut manifest = RunManifest::new("train", args.seed, serde_json::to_value(&opt)?);
    manifest.inputs = vec![args.data.display().to_string()];
    manifest.outputs = vec![args.out.display().to_string(), history_path.display().to_string()];
    manifest.wall_clock_seconds = t0.elapsed().as_secs_f64();
    let manifest_name = format!(
        "{}_train_manifest.json",
        args.out.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default()
    );
    write_manifest(&manifest, &out_dir, &manifest_name)?;
    println!(
        "trained {} for {} epochs (final train loss {:.6})",
        args.model,
        history.epochs_completed(),
        history.train_loss.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn sequence_paths(data: &Path) -> Result<Vec<PathBuf>> {
    if data.is_file() {
        return Ok(vec![data.to_path_buf()]);
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(data)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", data.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|ext| ext == "jsonl")
                && !p.file_name().is_some_and(|n| n.to_string_lossy().ends_with("_pred.jsonl"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no sequence files in {}", data.display())));
    }
    Ok(paths)
}

fn parse_pose_source(s: &str) -> Result<PoseSource> {
    match s {
        "gcn" => Ok(PoseSource::Gcn),
        "passthrough-2d" => Ok(PoseSource::Passthrough2d),
        other => Err(Error::Config(format!("unknown pose source \"{other}\""))),
    }
}

fn parse_fusion(s: &str) -> Result<FusionMode> {
    match s {
        "full" => Ok(FusionMode::Full),
        "depth-only" => Ok(FusionMode::DepthOnly),
        other => Err(Error::Config(format!("unknown fusion mode \"{other}\""))),
    }
}

fn cmd_infer(args: InferArgs) -> Result<()> {
    let t0 = Instant::now();
    let models = PipelineModels {
        gcn: load_gcn_checkpoint(&args.gcn)?,
        joint: load_tcn_checkpoint(&args.tcn_joint, TcnKind::Joint)?,
        velocity: load_tcn_checkpoint(&args.tcn_velocity, TcnKind::Velocity)?,
        root: load_tcn_checkpoint(&args.tcn_root, TcnKind::Root)?,
    };
    let config = PipelineConfig {
        pose_source: parse_pose_source(&args.pose_source)?,
        fusion: parse_fusion(&args.fusion)?,
        ..PipelineConfig::default()
    };
    let paths = sequence_paths(&args.data)?;
    std::fs::create_dir_all(&args.out)?;
    let mut outputs = Vec::new();
    for path in &paths {
        let file = load_sequence(path)?;
        let topology = SkeletonTopology::from_file(&file.header.topology)?;
        let mats = SkeletonMatrices::from_topology(&topology)?;
        let tracks = file.tracked_sequences()?;
        let output = infer(&tracks, &models, &mats, &file.header.camera, &config)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        let out_path = args.out.join(format!("{stem}_pred.jsonl"));
        save_predictions(&output, &topology, &file.header.camera, &out_path)?;
        outputs.push(out_path.display().to_string());
    }
    let mut manifest = RunManifest::new("infer", 0, serde_json::to_value(&config)?);
    manifest.inputs = paths.iter().map(|p| p.display().to_string()).collect();
    manifest.outputs = outputs;
    manifest.wall_clock_seconds = t0.elapsed().as_secs_f64();
    write_manifest(&manifest, &args.out, "infer_manifest.json")?;
    println!("inferred {} sequences into {}", paths.len(), args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let t0 = Instant::now();
    let gt_paths = sequence_paths(&args.gt)?;
    let pred_paths: Vec<PathBuf> = if args.pred.is_file() {
        vec![args.pred.clone()]
    } else {
        gt_paths
            .iter()
            .map(|gt| {
                let stem =
                    gt.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
                args.pred.join(format!("{stem}_pred.jsonl"))
            })
            .collect()
    };
    if pred_paths.len() != gt_paths.len() {
        return Err(Error::Config("prediction/ground-truth counts differ".into()));
    }
    let cfg = EvalConfig { pck_mm: args.pck_mm, abs_mm: args.abs_mm };
    let mut sequences = Vec::new();
    for (gt_path, pred_path) in gt_paths.iter().zip(&pred_paths) {
        let gt_file = load_sequence(gt_path)?;
        let topology = SkeletonTopology::from_file(&gt_file.header.topology)?;
        let (_, pred) = load_predictions(pred_path)?;
        let gt_tracks = gt_file.to_synthetic()?;
        let mut pairs = Vec::new();
        for track in &pred.tracks {
            let gt_track = gt_tracks
                .persons
                .iter()
                .find(|p| p.person_id == track.person_id)
                .ok_or_else(|| {
                    Error::Validation(format!(
                        "prediction person {} not in ground truth {}",
                        track.person_id,
                        gt_path.display()
                    ))
                })?;
            if gt_track.gt3d_cam.len() != track.frames.len() {
                return Err(Error::Validation(format!(
                    "frame counts differ for person {}: {} vs {}",
                    track.person_id,
                    track.frames.len(),
                    gt_track.gt3d_cam.len()
                )));
            }
            for (frame, gt_pose) in track.frames.iter().zip(&gt_track.gt3d_cam) {
                pairs.push(EvalPair {
                    pred_cam: frame.pose_cam.clone(),
                    gt_cam: gt_pose.clone(),
                    root_index: topology.root_index(),
                });
            }
        }
        let name =
            gt_path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        sequences.push(SequenceEval { name, pairs });
    }
    let report = evaluate(&sequences, &cfg)?;
    std::fs::create_dir_all(&args.out)?;
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    skelift::io::atomic_write(&args.out.join("report.json"), &json)?;

    let mut csv = String::from(
        "sequence,mpjpe_mm,pa_mpjpe_mm,pck_percent,pck_abs_percent,auc_rel_percent,ap_root_percent,samples\n",
    );
    for (name, m) in std::iter::once((&"overall".to_string(), &report.overall))
        .chain(report.per_sequence.iter().map(|(n, m)| (n, m)))
    {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            name,
            m.mpjpe_mm,
            m.pa_mpjpe_mm,
            m.pck_percent,
            m.pck_abs_percent,
            m.auc_rel_percent,
            m.ap_root_percent,
            m.sample_count
        ));
    }
    skelift::io::atomic_write(&args.out.join("report.csv"), csv.as_bytes())?;

    let mut manifest = RunManifest::new("eval", 0, serde_json::to_value(cfg)?);
    manifest.inputs = vec![args.pred.display().to_string(), args.gt.display().to_string()];
    manifest.outputs = vec![
        args.out.join("report.json").display().to_string(),
        args.out.join("report.csv").display().to_string(),
    ];
    manifest.wall_clock_seconds = t0.elapsed().as_secs_f64();
    write_manifest(&manifest, &args.out, "eval_manifest.json")?;
    println!(
        "mpjpe {:.2} mm, pa-mpjpe {:.2} mm, pck {:.1}%, pck_abs {:.1}%, ap_root {:.1}%",
        report.overall.mpjpe_mm,
        report.overall.pa_mpjpe_mm,
        report.overall.pck_percent,
        report.overall.pck_abs_percent,
        report.overall.ap_root_percent
    );
    Ok(())
}

/// Negative-control probe: a quadratic whose reported gradient is off by one.
struct CorruptedProbe;

impl DifferentiableScalar for CorruptedProbe {
    fn value(&self, params: &ParamStore) -> Result<f64> {
        let th = params.get("theta").expect("probe parameter").data()[0];
        Ok(th * th)
    }
    fn value_and_grad(&self, params: &ParamStore) -> Result<(f64, ParamStore)> {
        let th = params.get("theta").expect("probe parameter").data()[0];
        let mut g = ParamStore::new();
        g.insert("theta", Tensor::scalar(2.0 * th + 1.0))?;
        Ok((th * th, g))
    }
}

fn cmd_gradcheck(args: GradcheckArgs) -> ExitCode {
    if args.corrupt_gradient {
        let mut params = ParamStore::new();
        params.insert("theta", Tensor::scalar(0.7)).expect("fresh store");
        let report = match grad_check(&CorruptedProbe, &params, 1e-5) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        };
        println!(
            "corrupted probe: max relative error {:.3e} at {}",
            report.max_rel_error, report.worst_param
        );
        if report.passes(1e-4) {
            eprintln!("error: corrupted gradient was not detected");
        } else {
            println!("corrupted gradient detected as expected");
        }
        return ExitCode::from(1);
    }

    let kinds: Vec<ModelKind> = match args.model.as_str() {
        "all" => ModelKind::ALL.to_vec(),
        "gcn" => vec![ModelKind::Gcn],
        "tcn-joint" => vec![ModelKind::TcnJoint],
        "tcn-velocity" => vec![ModelKind::TcnVelocity],
        "tcn-root" => vec![ModelKind::TcnRoot],
        other => {
            eprintln!("error: unknown model \"{other}\"");
            return ExitCode::from(2);
        }
    };
    let mut all_ok = true;
    for kind in kinds {
        let threshold = grad_check_threshold(kind);
        for seed in args.seed..args.seed + args.seeds.max(1) {
            let report = match run_grad_check(kind, seed) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            for stat in &report.per_param {
                println!(
                    "{} seed {seed} {}: max rel err {:.3e} (analytic {:.6e}, numeric {:.6e})",
                    kind.name(),
                    stat.name,
                    stat.max_rel_error,
                    stat.analytic,
                    stat.numeric
                );
            }
            let ok = report.passes(threshold);
            println!(
                "{} seed {seed}: max {:.3e} threshold {:.0e} -> {}",
                kind.name(),
                report.max_rel_error,
                threshold,
                if ok { "ok" } else { "FAIL" }
            );
            if !ok {
                eprintln!(
                    "gradient check failed for {} (worst parameter {})",
                    kind.name(),
                    report.worst_param
                );
                all_ok = false;
            }
        }
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
