//! `occlusion-meter`: bicycle occlusion reports from detector output.

mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use occlusion_meter::classifier::calibrate_ratios;
use occlusion_meter::eval::{render_markdown, report_band_histogram, summarize};
use occlusion_meter::ingest::{
    parse_corner_detections, parse_detections, write_reports, ParseOptions, ReportFormat,
};
use occlusion_meter::synth::{run_experiment, ExperimentSpec};
use occlusion_meter::{classify_frame, ClassifierConfig, OcclusionBand, VisibilityReport};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "occlusion-meter",
    version,
    about = "Bicycle occlusion levels from parts-based detections"
)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON file with classifier settings.
    #[arg(long, global = true, env = "OCCLUSION_METER_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    confidence_threshold: Option<f64>,
    #[arg(long, global = true)]
    grouping_distance_factor: Option<f64>,
    #[arg(long, global = true)]
    detectability_floor: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify one detection document.
    Classify {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        input_opts: InputArgs,
    },
    /// Classify every *.json under a directory into one report.
    Batch {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = BatchFormat::Csv)]
        format: BatchFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        input_opts: InputArgs,
    },
    /// Score the classifier against exact synthetic ground truth.
    Synth {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        scenes: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        occluders: usize,
        /// Fixed coverage target in [0, 1]; random per scene when omitted.
        #[arg(long)]
        coverage: Option<f64>,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Fit wheel ratio thresholds to labeled wheels.
    Calibrate {
        /// CSV with `ratio,fraction` or `width,height,fraction` columns.
        labels: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Drop predictions with unknown labels instead of failing.
    #[arg(long)]
    permissive: bool,
    /// Predictions use `x_min`/`y_min`/`x_max`/`y_max` instead of center boxes.
    #[arg(long)]
    corners: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BatchFormat {
    Csv,
    Json,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

fn load_config(args: &ConfigArgs) -> Result<ClassifierConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            serde_json::from_slice(&bytes).map_err(|e| CliError::ConfigFile {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => ClassifierConfig::default(),
    };
    if let Some(v) = args.confidence_threshold {
        cfg.confidence_threshold = v;
    }
    if let Some(v) = args.grouping_distance_factor {
        cfg.grouping_distance_factor = v;
    }
    if let Some(v) = args.detectability_floor {
        cfg.detectability_floor = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn classify_file(
    path: &Path,
    opts: &InputArgs,
    cfg: &ClassifierConfig,
) -> Result<Vec<VisibilityReport>, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_opts = ParseOptions {
        permissive: opts.permissive,
    };
    let frame = if opts.corners {
        parse_corner_detections(&bytes, parse_opts)
    } else {
        parse_detections(&bytes, parse_opts)
    }
    .map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(classify_frame(&frame, cfg))
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Write(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir) {
        let entry = entry.map_err(|e| CliError::Read {
            path: e.path().unwrap_or(dir).to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "json") {
            files.push(entry.into_path());
        }
    }
    files.sort();
    Ok(files)
}

/// Classifies files on a few threads; results keep the input order.
fn classify_all(
    files: &[PathBuf],
    opts: &InputArgs,
    cfg: &ClassifierConfig,
) -> Result<Vec<VisibilityReport>, CliError> {
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(8);
    let chunk = files.len().div_ceil(threads).max(1);
    let parts: Vec<Result<Vec<VisibilityReport>, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .chunks(chunk)
            .map(|work| {
                s.spawn(move || {
                    let mut out = Vec::new();
                    for f in work {
                        out.extend(classify_file(f, opts, cfg)?);
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut reports = Vec::new();
    for p in parts {
        reports.extend(p?);
    }
    Ok(reports)
}

fn render(reports: &[VisibilityReport], format: BatchFormat) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        BatchFormat::Csv => write_reports(reports, ReportFormat::Csv, &mut buf)?,
        BatchFormat::Json => write_reports(reports, ReportFormat::Json, &mut buf)?,
        BatchFormat::Markdown => buf.extend(render_markdown(reports).into_bytes()),
    }
    Ok(buf)
}

fn classify(
    input: &Path,
    format: Format,
    out: Option<&Path>,
    opts: &InputArgs,
    cfg: &ClassifierConfig,
) -> Result<(), CliError> {
    let reports = classify_file(input, opts, cfg)?;
    if reports.is_empty() {
        warn!(
            "{}: no bicycle left after confidence filtering",
            input.display()
        );
    }
    let mut buf = Vec::new();
    write_reports(&reports, format.into(), &mut buf)?;
    emit(&buf, out)
}

fn batch(
    dir: &Path,
    format: BatchFormat,
    out: Option<&Path>,
    opts: &InputArgs,
    cfg: &ClassifierConfig,
) -> Result<(), CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "{}: not a directory",
            dir.display()
        )));
    }
    let files = json_files(dir)?;
    if files.is_empty() {
        warn!("{}: no *.json files", dir.display());
    }
    let reports = classify_all(&files, opts, cfg)?;
    emit(&render(&reports, format)?, out)?;
    match summarize(&reports) {
        Ok(s) => {
            let h = report_band_histogram(&reports);
            let bands: Vec<String> = OcclusionBand::ALL
                .iter()
                .map(|b| format!("{b}={}", h.count(*b)))
                .collect();
            eprintln!("files={} {}", files.len(), s.line());
            eprintln!("bands {}", bands.join(" "));
        }
        Err(_) if files.is_empty() => {}
        Err(_) => warn!(
            "{}: no bicycle left after confidence filtering",
            dir.display()
        ),
    }
    Ok(())
}

fn synth(spec: ExperimentSpec, json: bool, cfg: &ClassifierConfig) -> Result<(), CliError> {
    if let Some(c) = spec.coverage {
        if !(0.0..=1.0).contains(&c) {
            return Err(CliError::Usage(format!(
                "--coverage must be in [0, 1], got {c}"
            )));
        }
    }
    let result = run_experiment(spec, cfg);
    let mut buf = Vec::new();
    if json {
        serde_json::to_writer_pretty(&mut buf, &result)
            .map_err(|e| CliError::Write(e.to_string()))?;
        buf.push(b'\n');
    } else {
        let coverage = spec
            .coverage
            .map_or("random".to_string(), |c| c.to_string());
        writeln!(
            buf,
            "scenes {} seed {} occluders {} coverage {coverage}",
            spec.scenes, spec.seed, spec.occluders
        )?;
        writeln!(buf, "mean_abs_error {:.6}", result.mean_abs_error)?;
        writeln!(buf, "max_abs_error {:.6}", result.max_abs_error)?;
        writeln!(buf, "agreement {:.1}%", 100.0 * result.agreement_rate())?;
        buf.extend(result.confusion.render().into_bytes());
    }
    emit(&buf, None)
}

fn read_labels(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let bad = |line: u64, message: String| CliError::Labels {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(0, e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let fraction = col("fraction").ok_or_else(|| bad(1, "missing `fraction` column".into()))?;
    let ratio = col("ratio");
    let dims = col("width").zip(col("height"));
    if ratio.is_none() && dims.is_none() {
        return Err(bad(
            1,
            "need a `ratio` column or `width` and `height` columns".into(),
        ));
    }

    let mut labels = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, CliError> {
            let field = record.get(i).unwrap_or("");
            field
                .parse::<f64>()
                .map_err(|_| bad(line, format!("`{field}` is not a number")))
        };
        let r = match (ratio, dims) {
            (Some(i), _) => num(i)?,
            (None, Some((w, h))) => {
                let (w, h) = (num(w)?, num(h)?);
                if !(w > 0.0 && h > 0.0) {
                    return Err(bad(line, format!("non-positive box {w}x{h}")));
                }
                w.min(h) / w.max(h)
            }
            (None, None) => unreachable!(),
        };
        labels.push((r, num(fraction)?));
    }
    Ok(labels)
}

fn calibrate(path: &Path, grid_step: f64) -> Result<(), CliError> {
    let labels = read_labels(path)?;
    let cal = calibrate_ratios(&labels, grid_step)?;
    eprintln!(
        "thresholds {:.4} {:.4} {:.4} misclassified {}/{} margin {:.6}",
        cal.thresholds[0],
        cal.thresholds[1],
        cal.thresholds[2],
        cal.misclassified,
        labels.len(),
        cal.margin
    );
    let mut buf =
        serde_json::to_vec_pretty(&cal.config).map_err(|e| CliError::Write(e.to_string()))?;
    buf.push(b'\n');
    emit(&buf, None)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Classify {
            input,
            format,
            out,
            input_opts,
        } => classify(&input, format, out.as_deref(), &input_opts, &cfg),
        Command::Batch {
            dir,
            format,
            out,
            input_opts,
        } => batch(&dir, format, out.as_deref(), &input_opts, &cfg),
        Command::Synth {
            scenes,
            seed,
            occluders,
            coverage,
            json,
        } => synth(
            ExperimentSpec {
                scenes: scenes as usize,
                seed,
                occluders,
                coverage,
            },
            json,
            &cfg,
        ),
        Command::Calibrate { labels, grid_step } => calibrate(&labels, grid_step),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
