use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cew_core::dataset::{self, Dataset, Sampling, DESK_SIZES};
use cew_core::eval::{baseline_on_states, roc_curve, tpr_at_fpr, RocCurve, Witness};
use cew_core::measure::MeasurementPreset;
use cew_core::model::{self, Mlp, TrainConfig, TrainReport};
use cew_core::SystemKind;
use serde::Serialize;

use crate::manifest::{manifest_path, RunManifest};
use crate::CliError;

type CmdResult<T> = std::result::Result<T, CliError>;

fn usage(e: cew_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn io_context(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn load_dataset(path: &Path) -> CmdResult<Dataset> {
    Dataset::load(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write_out(out: &mut dyn Write, text: &str) -> CmdResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Runtime(format!("writing output: {e}")))
}

#[derive(Clone, Debug, Serialize)]
pub struct GenArgs {
    pub kind: SystemKind,
    pub preset: String,
    pub n: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub sampling: Sampling,
}

pub fn gen(args: &GenArgs, out: &mut dyn Write) -> CmdResult<()> {
    let started = Instant::now();
    let preset = MeasurementPreset::parse(args.kind, &args.preset).map_err(usage)?;
    if args.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    if args.sampling == Sampling::Balanced && !args.n.is_multiple_of(2) {
        return Err(CliError::Usage(format!(
            "--n {} must be even for a balanced dataset",
            args.n
        )));
    }
    let data = match args.sampling {
        Sampling::Balanced => dataset::generate_balanced(args.kind, &preset, args.n, args.seed)?,
        Sampling::Natural => dataset::generate_natural(args.kind, &preset, args.n, args.seed)?,
    };
    data.save(&args.out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;

    let mut m = RunManifest::new("gen", args).seed("data", args.seed);
    m.outputs = vec![args.out.clone(), dataset::meta_path(&args.out)];
    m.finish(started);
    let mpath = manifest_path(&args.out);
    m.write(&mpath).map_err(io_context(&mpath))?;
    write_out(
        out,
        &format!(
            "wrote {} records ({} columns, separable fraction {:.4}) to {}\n",
            data.len(),
            data.width(),
            data.separable_fraction(),
            args.out.display()
        ),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitArgs {
    pub input: PathBuf,
    pub sizes: [usize; 3],
    pub out_prefix: PathBuf,
}

/// `prefix` → `prefix.train.csv` etc.
pub fn split_paths(prefix: &Path) -> [PathBuf; 3] {
    ["train", "val", "test"].map(|part| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(format!(".{part}.csv"));
        PathBuf::from(s)
    })
}

fn fractions_for(sizes: [usize; 3]) -> CmdResult<[f64; 3]> {
    let total: usize = sizes.iter().sum();
    if sizes.contains(&0) {
        return Err(CliError::Usage("split sizes must all be positive".into()));
    }
    let t = total as f64;
    let f = [sizes[0] as f64 / t, sizes[1] as f64 / t];
    Ok([f[0], f[1], 1.0 - f[0] - f[1]])
}

pub fn split(args: &SplitArgs, out: &mut dyn Write) -> CmdResult<()> {
    let started = Instant::now();
    let fractions = fractions_for(args.sizes)?;
    let data = load_dataset(&args.input)?;
    let total: usize = args.sizes.iter().sum();
    if total != data.len() {
        return Err(CliError::Runtime(format!(
            "split sizes add up to {total}, dataset has {} records",
            data.len()
        )));
    }
    let parts = data.split(fractions)?;
    let paths = split_paths(&args.out_prefix);
    for (part, path) in parts.iter().zip(&paths) {
        part.save(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    let mut m = RunManifest::new("split", args).seed("data", data.meta.seed);
    m.inputs = vec![args.input.clone()];
    m.outputs = paths.to_vec();
    m.finish(started);
    let mut stem = args.out_prefix.as_os_str().to_owned();
    stem.push(".split");
    let mpath = manifest_path(Path::new(&stem));
    m.write(&mpath).map_err(io_context(&mpath))?;
    let mut s = String::new();
    for (part, path) in parts.iter().zip(&paths) {
        s += &format!("{}: {} records\n", path.display(), part.len());
    }
    write_out(out, &s)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainArgs {
    pub train: PathBuf,
    pub val: PathBuf,
    pub out: PathBuf,
    pub config: TrainConfig,
}

fn check_config(cfg: &TrainConfig) -> CmdResult<()> {
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(CliError::Usage(format!("--lr {} must be positive", cfg.learning_rate)));
    }
    if cfg.batch_size == 0 || cfg.max_epochs == 0 || cfg.patience == 0 {
        return Err(CliError::Usage(
            "--batch-size, --max-epochs and --patience must be positive".into(),
        ));
    }
    Ok(())
}

pub fn history_table(report: &TrainReport) -> String {
    let mut s = format!("{:>5}  {:>14}  {:>14}\n", "epoch", "train_mse", "validation_mse");
    for r in &report.history {
        let mark = if r.epoch == report.best_epoch { " *" } else { "" };
        s += &format!(
            "{:>5}  {:>14.6e}  {:>14.6e}{mark}\n",
            r.epoch, r.train_loss, r.validation_loss
        );
    }
    s
}

fn fit(train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> CmdResult<(Mlp, TrainReport)> {
    let init = Mlp::init(train.width(), cfg)?;
    Ok(model::train(&init, train, val, cfg)?)
}

pub fn train(args: &TrainArgs, out: &mut dyn Write) -> CmdResult<()> {
    let started = Instant::now();
    check_config(&args.config)?;
    let train = load_dataset(&args.train)?;
    let val = load_dataset(&args.val)?;
    let (model, report) = fit(&train, &val, &args.config)?;
    model
        .save(&args.out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;

    let mut m = RunManifest::new("train", args)
        .seed("training", args.config.seed)
        .seed("data", train.meta.seed);
    m.inputs = vec![args.train.clone(), args.val.clone()];
    m.outputs = vec![args.out.clone()];
    m.finish(started);
    let mpath = manifest_path(&args.out);
    m.write(&mpath).map_err(io_context(&mpath))?;

    let mut s = history_table(&report);
    s += &format!(
        "best epoch {} (validation MSE {:.6e}){}\n",
        report.best_epoch,
        report.best_validation_loss,
        if report.stopped_early { ", stopped early" } else { "" }
    );
    write_out(out, &s)
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalArgs {
    pub model: PathBuf,
    pub test: PathBuf,
    pub out: PathBuf,
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub auc: f64,
    pub tpr_at_fpr_010: f64,
    pub tpr_at_fpr_0: f64,
}

impl Summary {
    pub fn of(curve: &RocCurve) -> Self {
        Self {
            auc: curve.auc,
            tpr_at_fpr_010: tpr_at_fpr(curve, 0.10),
            tpr_at_fpr_0: tpr_at_fpr(curve, 0.0),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "AUC={:.6} TPR@FPR0.10={:.6} TPR@FPR0={:.6}",
            self.auc, self.tpr_at_fpr_010, self.tpr_at_fpr_0
        )
    }
}

fn score(model: &Mlp, test: &Dataset) -> CmdResult<RocCurve> {
    let scores = model.predict_dataset(test)?;
    if let Some(p) = &model.meta.preset {
        if p.pairs != test.preset.pairs {
            return Err(cew_core::Error::PresetMismatch {
                expected: p.name.clone(),
                found: test.preset.name.clone(),
            }
            .into());
        }
    }
    Ok(roc_curve(&scores, &test.labels())?)
}

fn write_roc(curve: &RocCurve, path: &Path, svg: Option<(&Path, &str)>) -> CmdResult<()> {
    fs::write(path, curve.to_table()).map_err(io_context(path))?;
    if let Some((svg_path, title)) = svg {
        fs::write(svg_path, curve.to_svg(title)).map_err(io_context(svg_path))?;
    }
    Ok(())
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> CmdResult<()> {
    let started = Instant::now();
    let model = Mlp::load(&args.model).map_err(|e| CliError::Runtime(format!("{}: {e}", args.model.display())))?;
    let test = load_dataset(&args.test)?;
    let curve = score(&model, &test)?;
    let title = test.preset.name.clone();
    write_roc(&curve, &args.out, args.svg.as_deref().map(|p| (p, title.as_str())))?;

    let mut m = RunManifest::new("eval", args).seed("data", test.meta.seed);
    if let Some(s) = model.meta.training_seed {
        m = m.seed("training", s);
    }
    m.inputs = vec![args.model.clone(), args.test.clone()];
    m.outputs = std::iter::once(args.out.clone()).chain(args.svg.clone()).collect();
    m.finish(started);
    let mpath = manifest_path(&args.out);
    m.write(&mpath).map_err(io_context(&mpath))?;
    write_out(out, &format!("{}\n", Summary::of(&curve).line()))
}

#[derive(Clone, Debug)]
pub struct BaselinesArgs {
    pub kind: SystemKind,
    pub n: usize,
    pub seed: u64,
    pub witness: Option<Witness>,
}

pub fn baselines(args: &BaselinesArgs, out: &mut dyn Write) -> CmdResult<()> {
    let witnesses: Vec<Witness> = match args.witness {
        Some(w) if !w.applies_to(args.kind) => {
            return Err(CliError::Usage(format!(
                "witness {w} is defined for two-qubit states only"
            )))
        }
        Some(w) => vec![w],
        None => Witness::ALL.into_iter().filter(|w| w.applies_to(args.kind)).collect(),
    };
    if args.n == 0 || !args.n.is_multiple_of(2) {
        return Err(CliError::Usage(format!("--n {} must be positive and even", args.n)));
    }
    let (states, _) = dataset::balanced_states(args.kind, args.n, args.seed)?;
    let mut s = format!("{:<10}  {:>11}  {:>8}\n", "witness", "sensitivity", "fpr");
    for w in witnesses {
        let r = baseline_on_states(&states, w)?;
        s += &format!("{:<10}  {:>11.6}  {:>8.6}\n", w.name(), r.sensitivity, r.fpr);
    }
    write_out(out, &s)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepArgs {
    pub kind: SystemKind,
    pub presets: Vec<String>,
    pub sizes: [usize; 3],
    pub seed: u64,
    pub out_dir: PathBuf,
    pub config: TrainConfig,
    pub svg: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub preset: String,
    pub width: usize,
    pub summary: Summary,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_validation_mse: f64,
}

pub fn summary_table(rows: &[SweepRow]) -> String {
    let mut s =
        String::from("preset,width,auc,tpr_at_fpr_0.10,tpr_at_fpr_0,epochs_run,best_epoch,best_validation_mse\n");
    for r in rows {
        s += &format!(
            "{},{},{:?},{:?},{:?},{},{},{:?}\n",
            r.preset.replace(',', ";"),
            r.width,
            r.summary.auc,
            r.summary.tpr_at_fpr_010,
            r.summary.tpr_at_fpr_0,
            r.epochs_run,
            r.best_epoch,
            r.best_validation_mse
        );
    }
    s
}

/// Directory name for a preset's artifacts.
pub fn preset_dir_name(preset: &MeasurementPreset) -> String {
    preset
        .name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// The smallest preset measuring every pair the sweep needs: one of the
/// listed presets when it already covers the rest, otherwise their union.
fn covering_preset(kind: SystemKind, presets: &[MeasurementPreset]) -> CmdResult<MeasurementPreset> {
    if let Some(p) = presets
        .iter()
        .filter(|p| presets.iter().all(|q| p.column_indices(q).is_ok()))
        .min_by_key(|p| p.width())
    {
        return Ok(p.clone());
    }
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::new();
    for &(x, y) in presets.iter().flat_map(|p| &p.pairs) {
        if seen.insert((x.min(y), x.max(y))) {
            pairs.push((x, y));
        }
    }
    MeasurementPreset::new(kind, "union", pairs).map_err(usage)
}

pub fn sweep(args: &SweepArgs, out: &mut dyn Write) -> CmdResult<Vec<SweepRow>> {
    let started = Instant::now();
    if args.presets.is_empty() {
        return Err(CliError::Usage("the preset list is empty".into()));
    }
    check_config(&args.config)?;
    let fractions = fractions_for(args.sizes)?;
    let total: usize = args.sizes.iter().sum();
    if !total.is_multiple_of(2) {
        return Err(CliError::Usage(format!("sizes add up to {total}, which must be even")));
    }
    let presets = args
        .presets
        .iter()
        .map(|p| MeasurementPreset::parse(args.kind, p))
        .collect::<cew_core::Result<Vec<_>>>()
        .map_err(usage)?;
    let cover = covering_preset(args.kind, &presets)?;

    let data_dir = args.out_dir.join("data");
    fs::create_dir_all(&data_dir).map_err(io_context(&data_dir))?;
    let mut manifest = RunManifest::new("sweep", args)
        .seed("data", args.seed)
        .seed("training", args.config.seed);

    let full = dataset::generate_balanced(args.kind, &cover, total, args.seed)?;
    let parts = full.split(fractions)?;
    for (part, name) in parts.iter().zip(["train", "val", "test"]) {
        let path = data_dir.join(format!("{name}.csv"));
        part.save(&path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        manifest.outputs.push(path);
    }
    write_out(
        out,
        &format!(
            "generated {total} {} states with {} ({} columns); split {}/{}/{}\n",
            args.kind,
            cover.name,
            cover.width(),
            parts[0].len(),
            parts[1].len(),
            parts[2].len()
        ),
    )?;

    let mut rows = Vec::new();
    let manifest_file = args.out_dir.join("manifest.json");
    for preset in &presets {
        match sweep_one(args, preset, &parts, out) {
            Ok((row, files)) => {
                manifest.outputs.extend(files);
                rows.push(row);
            }
            Err(e) => {
                manifest.error = Some(format!("{}: {e}", preset.name));
                manifest.finish(started);
                manifest.write(&manifest_file).map_err(io_context(&manifest_file))?;
                return Err(e);
            }
        }
    }

    let summary = args.out_dir.join("summary.csv");
    let table = summary_table(&rows);
    fs::write(&summary, &table).map_err(io_context(&summary))?;
    manifest.outputs.push(summary);
    manifest.finish(started);
    manifest.write(&manifest_file).map_err(io_context(&manifest_file))?;
    write_out(out, &table)?;
    Ok(rows)
}

fn sweep_one(
    args: &SweepArgs,
    preset: &MeasurementPreset,
    parts: &[Dataset; 3],
    out: &mut dyn Write,
) -> CmdResult<(SweepRow, Vec<PathBuf>)> {
    let started = Instant::now();
    let dir = args.out_dir.join(preset_dir_name(preset));
    fs::create_dir_all(&dir).map_err(io_context(&dir))?;
    let [train, val, test] = [0, 1, 2].map(|i| parts[i].project(preset));
    let (train, val, test) = (train?, val?, test?);
    let (model, report) = fit(&train, &val, &args.config)?;
    let curve = score(&model, &test)?;

    let model_path = dir.join("model.json");
    let roc_path = dir.join("roc.csv");
    let history_path = dir.join("training.txt");
    model
        .save(&model_path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", model_path.display())))?;
    fs::write(&history_path, history_table(&report)).map_err(io_context(&history_path))?;
    let svg_path = dir.join("roc.svg");
    write_roc(
        &curve,
        &roc_path,
        args.svg.then_some((svg_path.as_path(), preset.name.as_str())),
    )?;

    let mut files = vec![model_path, roc_path, history_path];
    if args.svg {
        files.push(svg_path);
    }
    let mut m = RunManifest::new("sweep", args)
        .seed("data", args.seed)
        .seed("training", args.config.seed);
    m.inputs = (["train", "val", "test"])
        .iter()
        .map(|n| args.out_dir.join("data").join(format!("{n}.csv")))
        .collect();
    m.outputs = files.clone();
    m.finish(started);
    let mpath = dir.join("manifest.json");
    m.write(&mpath).map_err(io_context(&mpath))?;

    let summary = Summary::of(&curve);
    write_out(
        out,
        &format!("{:<8} B={:<3} {}\n", preset.name, preset.width(), summary.line()),
    )?;
    Ok((
        SweepRow {
            preset: preset.name.clone(),
            width: preset.width(),
            summary,
            epochs_run: report.history.len(),
            best_epoch: report.best_epoch,
            best_validation_mse: report.best_validation_loss,
        },
        files,
    ))
}

pub fn default_sizes() -> [usize; 3] {
    DESK_SIZES
}
