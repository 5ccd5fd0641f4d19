//! Command-line front end: `generate`, `train`, `predict` and `bench`.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::classifier::default_gamma;
use crate::data::{
    fit_normalizer, generate_clusters, load_csv, order_classes_by_frequency, read_features_csv,
    write_csv, ClusterSpec,
};
use crate::error::{Error, Result};
use crate::eval::{accuracy, grid_search_c, DEFAULT_C_GRID, GRID_SEARCH_FOLDS};
use crate::experiments::{
    emit_report, run_experiment, DatasetSource, ExperimentConfig, ExperimentKind, ReportFormat,
};
use crate::model::{BaseKind, HyperParams, ModelFile, Paradigm, DEFAULT_LAMBDA_SIM};
use crate::paradigms::train;

/// Environment variable that replaces the default seed.
pub const SEED_ENV: &str = "OVPSC_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "ovpsc",
    version,
    about = "Multi-class learning with OvR, SCL, OvP and OvPSC paradigms"
)]
struct Cli {
    /// Key-value file (`key = value` per line) supplying default flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a 9-cluster dataset as CSV.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Train a model on a CSV dataset and save it as JSON.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Predict labels for a CSV file with a saved model.
    #[command(args_override_self = true)]
    Predict(PredictArgs),
    /// Run an experiment and print its result table.
    #[command(args_override_self = true)]
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = ClusterSpec::DEFAULT_POINTS)]
    points: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "OvPSC")]
    paradigm: Paradigm,
    #[arg(long, default_value = "SVM")]
    base: BaseKind,
    /// Regularization constant; selected by cross-validation when omitted.
    #[arg(long)]
    c: Option<f64>,
    /// RBF width; defaults to 1 / (dim * mean feature variance).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_SIM)]
    lambda_sim: f64,
    /// Comma-separated column indices excluded from standardization.
    #[arg(long, value_delimiter = ',')]
    onehot: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Column ignored as features; when present, accuracy is printed to stderr.
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// 1a, 1b, 1c or 2.
    #[arg(long)]
    experiment: ExperimentKind,
    /// clusters_veryFar, clusters_far, clusters_close, clusters_intersecting or csv:<path>.
    #[arg(long)]
    dataset: DatasetSource,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, value_delimiter = ',', default_value = "OvR,SCL,OvP,OvPSC")]
    paradigms: Vec<Paradigm>,
    #[arg(long, value_delimiter = ',', default_value = "LR,SVM")]
    bases: Vec<BaseKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Repetitions per timed step; the median is reported.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Points per cluster for generated datasets.
    #[arg(long, default_value_t = ClusterSpec::DEFAULT_POINTS)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_SIM)]
    lambda_sim: f64,
    #[arg(long, value_delimiter = ',')]
    c_grid: Vec<f64>,
    /// Run cells concurrently (timings become contended).
    #[arg(long)]
    parallel: bool,
    /// Also emit per-fold rows as JSON to stderr.
    #[arg(long)]
    per_fold: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

const SUBCOMMANDS: [&str; 4] = ["generate", "train", "predict", "bench"];

/// Turns `key = value` lines into flags. `true`/`false` toggle switches.
fn config_flags(text: &str) -> Result<Vec<OsString>> {
    let mut flags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ParseError {
            row: i + 1,
            column: "config".into(),
            message: format!("expected key=value, got {line:?}"),
        })?;
        let key = key.trim().replace('_', "-");
        match value.trim() {
            "true" => flags.push(format!("--{key}").into()),
            "false" => {}
            v => {
                flags.push(format!("--{key}").into());
                flags.push(v.into());
            }
        }
    }
    Ok(flags)
}

/// Splices config-file flags in right after the subcommand so that
/// command-line flags, which come later, take precedence.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let (Some(path), Some(pos)) = (
        path,
        args.iter()
            .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())),
    ) else {
        return Ok(args);
    };
    let flags = config_flags(&fs::read_to_string(&path)?)?;
    let mut out = args[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

/// Seed from the flag, else from the environment, else the default.
/// The second value says where it came from when not from the flag.
fn resolve_seed(flag: Option<u64>) -> Result<(u64, Option<String>)> {
    if let Some(s) = flag {
        return Ok((s, None));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            let s = v.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })?;
            Ok((s, Some(format!("seed {s} taken from {SEED_ENV}"))))
        }
        Err(_) => Ok((DEFAULT_SEED, Some(format!("default seed {DEFAULT_SEED}")))),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn generate(args: GenerateArgs) -> Result<()> {
    let (seed, _) = resolve_seed(args.seed)?;
    let data = generate_clusters(&ClusterSpec::new(args.radius, seed).with_points(args.points))?;
    write_csv(&data, output(args.out.as_deref())?)
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let raw = load_csv(&args.data, &args.label_column)?;
    let onehot: BTreeSet<usize> = args.onehot.into_iter().collect();
    let normalizer = fit_normalizer(&raw, &onehot)?;
    let data = normalizer.apply(&raw)?;
    let order = order_classes_by_frequency(&data);
    let gamma = match args.gamma {
        Some(g) => g,
        None => {
            let rows: Vec<&[f64]> = data
                .examples()
                .iter()
                .map(|e| e.features.as_slice())
                .collect();
            default_gamma(&rows)
        }
    };
    let template = HyperParams::new(args.base, args.c.unwrap_or(1.0), gamma, args.lambda_sim)?;
    let hp = match args.c {
        Some(_) => template,
        None => {
            let (seed, _) = resolve_seed(args.seed)?;
            let res = grid_search_c(
                &data,
                &order,
                args.paradigm,
                &template,
                &DEFAULT_C_GRID,
                GRID_SEARCH_FOLDS,
                seed,
            )?;
            log::info!("selected C = {}", res.best.c_reg);
            res.best
        }
    };
    let model = train(args.paradigm, &data.class_sets(&order), &hp)?;
    let file = ModelFile {
        normalizer: Some(normalizer),
        label_names: data.label_names().to_vec(),
        ..ModelFile::from_model(model)
    };
    file.save(&args.model_out)?;
    eprintln!(
        "trained {} {} on {} examples ({} classes, C = {}); saved to {}",
        args.paradigm,
        args.base,
        data.len(),
        order.len(),
        hp.c_reg,
        args.model_out.display()
    );
    Ok(())
}

fn predict_cmd(args: PredictArgs) -> Result<()> {
    let file = ModelFile::load(&args.model)?;
    let (rows, truths) =
        read_features_csv(File::open(&args.data)?, &args.label_column).map_err(|e| match e {
            Error::EmptyInput => Error::EmptyFile(args.data.clone()),
            other => other,
        })?;
    let rows = match &file.normalizer {
        Some(n) => rows
            .iter()
            .map(|r| n.transform_row(r))
            .collect::<Result<Vec<_>>>()?,
        None => rows,
    };
    let predicted: Vec<String> = file
        .model
        .predict_many(&rows)?
        .into_iter()
        .map(|c| {
            file.label_names
                .get(c.index())
                .cloned()
                .unwrap_or_else(|| c.to_string())
        })
        .collect();
    let mut wtr = csv::Writer::from_writer(output(args.out.as_deref())?);
    wtr.write_record(["prediction"])?;
    for p in &predicted {
        wtr.write_record([p])?;
    }
    wtr.flush()?;
    if let Some(truths) = truths {
        eprintln!(
            "accuracy {:.3} on {} rows",
            accuracy(&predicted, &truths)?,
            truths.len()
        );
    }
    Ok(())
}

fn bench_cmd(args: BenchArgs) -> Result<()> {
    let (seed, seed_note) = resolve_seed(args.seed)?;
    let dataset = match args.dataset {
        DatasetSource::Csv { path, .. } => DatasetSource::Csv {
            path,
            label_column: args.label_column,
        },
        other => other,
    };
    let cfg = ExperimentConfig {
        paradigms: args.paradigms,
        base_kinds: args.bases,
        folds: args.folds,
        lambda_sim: args.lambda_sim,
        c_grid: if args.c_grid.is_empty() {
            DEFAULT_C_GRID.to_vec()
        } else {
            args.c_grid
        },
        points_per_cluster: args.points,
        timing_runs: args.runs,
        parallel: args.parallel,
        per_fold: args.per_fold,
        ..ExperimentConfig::new(dataset, args.experiment, seed)
    };
    let report = run_experiment(&cfg)?;
    let text = emit_report(&report, args.format, seed_note.as_deref())?;
    output(args.out.as_deref())?.write_all(text.as_bytes())?;
    if cfg.per_fold {
        let folds: Vec<_> = report.rows.iter().filter(|r| r.fold.is_some()).collect();
        eprintln!("{}", serde_json::to_string_pretty(&folds)?);
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs the subcommand.
/// Returns the process exit code: 0 on success, 1 on a runtime error and
/// 2 on a usage error.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: reading config: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_lines_become_flags() {
        let flags =
            config_flags("# comment\nfolds = 3\nper_fold = true\nparallel=false\n").unwrap();
        assert_eq!(flags, os(&["--folds", "3", "--per-fold"]));
        assert!(config_flags("nonsense").is_err());
    }

    #[test]
    fn command_line_flags_follow_config_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.txt");
        fs::write(&path, "folds = 3\nexperiment = 2\ndataset = clusters_far\n").unwrap();
        let p = path.to_str().unwrap();
        let args = expand_config(os(&["ovpsc", "--config", p, "bench", "--folds", "4"])).unwrap();
        assert_eq!(&args[4..8], os(&["--folds", "3", "--experiment", "2"]).as_slice());
        let cli = Cli::try_parse_from(args).unwrap();
        let Command::Bench(b) = cli.command else {
            panic!("not bench")
        };
        assert_eq!(b.folds, 4);
        assert_eq!(b.experiment, ExperimentKind::Exp2);
    }

    #[test]
    fn later_flag_wins() {
        let cli = Cli::try_parse_from(os(&[
            "ovpsc",
            "bench",
            "--experiment",
            "1a",
            "--dataset",
            "clusters_far",
            "--folds",
            "3",
            "--folds",
            "4",
        ]))
        .unwrap();
        let Command::Bench(b) = cli.command else {
            panic!("not bench")
        };
        assert_eq!(b.folds, 4);
        assert_eq!(b.paradigms, Paradigm::ALL.to_vec());
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(cli_main(["ovpsc", "frobnicate"]), 2);
        assert_eq!(cli_main(["ovpsc"]), 2);
        assert_eq!(cli_main(["ovpsc", "generate"]), 2);
    }
}
