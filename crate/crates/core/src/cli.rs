//! The `codec-eval` command line.
//!
//! Exit codes: 0 on success, 2 for usage and input errors (missing files,
//! mismatched inputs, insufficient data), 3 for malformed file content.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::{
    self, content_features, ingest_external_scores, ExternalSchema, MetricError, MetricSelection,
    SequenceQuality,
};
use crate::profile::{
    self, aggregate_stages, merge_costs, parse_callgrind, read_timing_csv, speedup, time_factor,
    CallgrindProfile, ProfileError, StageMapping, StageProfile,
};
use crate::rd::{self, bd_quality, bd_rate, read_rd_csv, RdCurve, RdError};
use crate::report::{format_float, format_opt, EvalReport};
use crate::subjective::{
    self, anova_oneway, attach_metadata, mos_points, read_metadata_csv, read_scores_csv,
    screen_subjects, Factor, StatsError,
};
use crate::video::{open_raw, open_y4m, Chroma, FrameSource, Rational, SequenceInfo, VideoError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;

/// Environment variable naming the default stage-mapping file.
pub const STAGE_MAP_ENV: &str = "CODEC_EVAL_STAGE_MAP";

#[derive(Parser, Debug)]
#[command(name = "codec-eval", version, about = "Video codec evaluation toolkit")]
struct Cli {
    /// Write the report to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Report format: JSON document or the command's main table as CSV.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Do not print warnings on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Serialize floats at full precision instead of 6 significant digits.
    #[arg(long, global = true)]
    full_precision: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Objective quality of a test sequence against its reference.
    Metrics(MetricsArgs),
    /// Bjøntegaard deltas between two codecs from RD points.
    Bdrate(BdrateArgs),
    /// MOS, confidence intervals, subject screening and ANOVA.
    Mos(MosArgs),
    /// Stage repartition from Callgrind files and real-time factors.
    Profile(ProfileArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ChromaArg {
    #[value(name = "420")]
    C420,
    #[value(name = "444")]
    C444,
}

#[derive(Args, Debug)]
struct Geometry {
    /// Luma width of raw input.
    #[arg(long)]
    width: Option<u32>,
    /// Luma height of raw input.
    #[arg(long)]
    height: Option<u32>,
    /// Bit depth of raw input (8 or 10).
    #[arg(long, default_value_t = 8)]
    bit_depth: u8,
    /// Frame rate of raw input, as `num:den`, `num/den` or an integer.
    #[arg(long, default_value = "25")]
    fps: Rational,
    /// Chroma format of raw input.
    #[arg(long, value_enum, default_value_t = ChromaArg::C420)]
    chroma: ChromaArg,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Reference sequence (.y4m, or raw planar YUV with geometry flags).
    reference: PathBuf,
    /// Test sequence.
    test: PathBuf,
    #[command(flatten)]
    geometry: Geometry,
    /// Compute PSNR (Y, U, V) and weighted PSNR.
    #[arg(long)]
    psnr: bool,
    /// Compute luma SSIM.
    #[arg(long)]
    ssim: bool,
    /// Also compute SSIM on the chroma planes.
    #[arg(long)]
    ssim_chroma: bool,
    /// PSNR substituted for identical planes.
    #[arg(long, default_value_t = metrics::DEFAULT_CLAMP_DB)]
    clamp_db: f64,
    /// Write per-frame values to this CSV file.
    #[arg(long)]
    frames_csv: Option<PathBuf>,
    /// Also report spatial and temporal information of the reference.
    #[arg(long)]
    si_ti: bool,
    /// Per-frame scores from an external tool (CSV `frame,score` or JSON log).
    #[arg(long)]
    external_scores: Option<PathBuf>,
    /// Metric name of the external scores; selects the key in JSON logs.
    #[arg(long)]
    external_metric: Option<String>,
    /// Evaluate frames on the calling thread only.
    #[arg(long)]
    single_thread: bool,
}

#[derive(Args, Debug)]
struct BdrateArgs {
    /// RD points CSV: codec,sequence,metric,label,bitrate_kbps,quality[,ci95].
    points: PathBuf,
    /// Codec id of the anchor curves.
    #[arg(long)]
    anchor: String,
    /// Codec id of the test curves.
    #[arg(long)]
    test: String,
    /// Write curve plot data to this CSV file.
    #[arg(long)]
    plot_csv: Option<PathBuf>,
    /// Interpolated samples per curve in the plot data.
    #[arg(long, default_value_t = 32)]
    plot_samples: usize,
}

#[derive(Args, Debug)]
struct MosArgs {
    /// Scores CSV: a `subject` column then one column per PVS.
    scores: PathBuf,
    /// PVS metadata CSV: pvs,codec,resolution,bitrate_kbps,content.
    #[arg(long)]
    metadata: PathBuf,
    /// Minimum of Pearson and Spearman correlation a subject must reach.
    #[arg(long, default_value_t = subjective::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Session label echoed in the report.
    #[arg(long)]
    session: Option<String>,
    /// PVS ids to drop before any statistic (e.g. hidden references).
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    /// Multiplier of δ/√N in the confidence interval.
    #[arg(long, default_value_t = subjective::DEFAULT_CI_CONSTANT)]
    ci_constant: f64,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Callgrind output files.
    callgrind: Vec<PathBuf>,
    /// Stage mapping file (`pattern -> stage` lines).
    #[arg(long, env = STAGE_MAP_ENV)]
    mapping: Option<PathBuf>,
    /// Stages below this percentage are folded into Other.
    #[arg(long, default_value_t = profile::DEFAULT_BUCKET_THRESHOLD)]
    threshold: f64,
    /// Event column used as cost (default: first declared event).
    #[arg(long)]
    event: Option<String>,
    /// Also report a profile of all files merged by function name.
    #[arg(long)]
    merge: bool,
    /// Timing CSV: codec,sequence,qp,wall_seconds,frame_count,fps_num,fps_den.
    #[arg(long)]
    timing: Option<PathBuf>,
    /// Codec id used as denominator of speedups.
    #[arg(long)]
    baseline: Option<String>,
    /// Directory receiving one `stage,percent` CSV per profile.
    #[arg(long)]
    pie_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Format(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Format(_) => EXIT_FORMAT,
        }
    }

    fn video(path: &Path, e: VideoError) -> Self {
        let message = format!("{}: {e}", path.display());
        if e.is_format() {
            CliError::Format(message)
        } else {
            CliError::Input(message)
        }
    }

    fn metric(e: MetricError) -> Self {
        match e {
            MetricError::Video(v) if v.is_format() => CliError::Format(v.to_string()),
            MetricError::Parse(_) => CliError::Format(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }

    fn stats(path: &Path, e: StatsError) -> Self {
        let message = format!("{}: {e}", path.display());
        match e {
            StatsError::Parse(_) | StatsError::ScoreRange { .. } | StatsError::Dimension(_) => {
                CliError::Format(message)
            }
            _ => CliError::Input(message),
        }
    }

    fn profile(path: &Path, e: ProfileError) -> Self {
        let message = format!("{}: {e}", path.display());
        if e.is_format() {
            CliError::Format(message)
        } else {
            CliError::Input(message)
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("report serialization: {e}"))
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Outcome {
    report: EvalReport,
    table: Table,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn render(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let io_err = |e: csv::Error| CliError::Input(format!("CSV output: {e}"));
        writer.write_record(&self.header).map_err(io_err)?;
        for row in &self.rows {
            writer.write_record(row).map_err(io_err)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| CliError::Input(format!("CSV output: {e}")))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }

    fn write_to(&self, path: &Path) -> Result<()> {
        write_file(path, &self.render()?)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| CliError::Input(format!("cannot write `{}`: {e}", path.display())))
}

fn open_file(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot open `{}`: {e}", path.display())))
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let mut command: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    if let Some(first) = command.first_mut() {
        *first = "codec-eval".to_string();
    }
    let outcome = match &cli.command {
        Command::Metrics(a) => cmd_metrics(&cli, a, command),
        Command::Bdrate(a) => cmd_bdrate(&cli, a, command),
        Command::Mos(a) => cmd_mos(&cli, a, command),
        Command::Profile(a) => cmd_profile(&cli, a, command),
    };
    match outcome.and_then(|o| emit(&cli, o)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(cli: &Cli, outcome: Outcome) -> Result<()> {
    if !cli.quiet {
        for w in &outcome.report.warnings {
            eprintln!("warning: {w}");
        }
    }
    let text = match cli.format {
        OutputFormat::Json => outcome.report.to_json(cli.full_precision),
        OutputFormat::Csv => outcome.table.render()?,
    };
    match &cli.output {
        Some(path) => write_file(path, &text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
        }
    }
}

fn add_input(report: &mut EvalReport, path: &Path) -> Result<()> {
    report
        .add_input(path)
        .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", path.display())))
}

fn is_y4m(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("y4m"))
}

fn open_source(path: &Path, geometry: &Geometry) -> Result<Box<dyn FrameSource>> {
    if is_y4m(path) {
        return Ok(Box::new(open_y4m(path).map_err(|e| CliError::video(path, e))?));
    }
    let (Some(width), Some(height)) = (geometry.width, geometry.height) else {
        return Err(CliError::Input(format!(
            "`{}` is not a .y4m file: raw planar input requires --width and --height \
             (and --bit-depth, --chroma, --fps when they differ from 8, 420, 25)",
            path.display()
        )));
    };
    let chroma = match geometry.chroma {
        ChromaArg::C420 => Chroma::C420,
        ChromaArg::C444 => Chroma::C444,
    };
    let info = SequenceInfo::new(width, height, geometry.fps, geometry.bit_depth, chroma, None)
        .map_err(|e| CliError::Input(format!("raw geometry: {e}")))?;
    Ok(Box::new(open_raw(path, info).map_err(|e| CliError::video(path, e))?))
}

#[derive(Serialize)]
struct SequenceSummary {
    path: String,
    format: String,
    info: SequenceInfo,
}

#[derive(Serialize)]
struct MetricsResults {
    reference: SequenceSummary,
    test: SequenceSummary,
    frames: usize,
    clamp_db: f64,
    metrics: Vec<SequenceQuality>,
    #[serde(skip_serializing_if = "Option::is_none")]
    content: Option<metrics::ContentFeatures>,
}

fn cmd_metrics(cli: &Cli, args: &MetricsArgs, command: Vec<String>) -> Result<Outcome> {
    let mut report = EvalReport::new(command);
    add_input(&mut report, &args.reference)?;
    add_input(&mut report, &args.test)?;
    if !(args.clamp_db.is_finite() && args.clamp_db > 0.0) {
        return Err(CliError::Input(format!(
            "--clamp-db must be a positive number, got {}",
            args.clamp_db
        )));
    }
    let mut reference = open_source(&args.reference, &args.geometry)?;
    let mut test = open_source(&args.test, &args.geometry)?;
    let (ri, ti) = (*reference.info(), *test.info());
    if !ri.same_format(&ti) {
        return Err(CliError::Input(format!(
            "geometry mismatch: reference `{}` is {}, test `{}` is {}",
            args.reference.display(),
            ri.describe(),
            args.test.display(),
            ti.describe()
        )));
    }

    let any = args.psnr || args.ssim || args.ssim_chroma;
    let selection = MetricSelection {
        psnr: args.psnr || !any,
        ssim: args.ssim || args.ssim_chroma || !any,
        ssim_chroma: args.ssim_chroma,
        parallel: !args.single_thread,
        ..MetricSelection::default()
    };
    let evaluation = metrics::sequence_quality(&mut *reference, &mut *test, &selection, args.clamp_db)
        .map_err(CliError::metric)?;
    let mut sequence_metrics = evaluation.metrics.clone();

    if selection.psnr {
        report.note(
            "PSNR uses A = 2^bitdepth - 1; weighted PSNR = (6*Y + U + V) / 8 of per-frame plane PSNR",
        );
    }
    if selection.ssim {
        report.note("SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, valid windows only");
    }
    report.note("sequence values are arithmetic means of per-frame values in frame order");
    if sequence_metrics.iter().any(|m| m.clamp_applied) {
        report.note(format!(
            "identical planes give infinite PSNR; those frames were clamped to {} dB before averaging",
            args.clamp_db
        ));
        report.warn(format!("PSNR clamped to {} dB on at least one frame", args.clamp_db));
    }

    let content = if args.si_ti {
        let mut source = open_source(&args.reference, &args.geometry)?;
        let features = content_features(&mut *source).map_err(CliError::metric)?;
        report.note("SI/TI: maxima over frames of the population standard deviation of the Sobel magnitude (interior pixels) and of luma frame differences, on the reference");
        Some(features)
    } else {
        None
    };

    if let Some(path) = &args.external_scores {
        add_input(&mut report, path)?;
        let is_csv = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let schema = if is_csv {
            ExternalSchema::Csv
        } else {
            let key = args.external_metric.clone().ok_or_else(|| {
                CliError::Input("--external-metric is required to select a key in a JSON score log".into())
            })?;
            ExternalSchema::Json(key)
        };
        let name = args.external_metric.as_deref().unwrap_or("external");
        let scores = ingest_external_scores(
            open_file(path)?,
            &schema,
            name,
            Some(evaluation.frames.len() as u64),
        )
        .map_err(|e| match CliError::metric(e) {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            CliError::Format(m) => CliError::Format(format!("{}: {m}", path.display())),
        })?;
        for w in scores.warnings {
            report.warn(w);
        }
        report.note("external scores are ingested verbatim and pooled by arithmetic mean");
        sequence_metrics.push(scores.quality);
    }

    if let Some(path) = &args.frames_csv {
        frames_table(&evaluation.frames).write_to(path)?;
    }

    let mut table = Table::new(&["metric", "value", "clamp_applied"]);
    for m in &sequence_metrics {
        table.rows.push(vec![
            m.metric.to_string(),
            format_float(m.value, cli.full_precision),
            m.clamp_applied.to_string(),
        ]);
    }
    if let Some(c) = &content {
        table.rows.push(vec!["SI".into(), format_float(c.si, cli.full_precision), "false".into()]);
        table.rows.push(vec!["TI".into(), format_float(c.ti, cli.full_precision), "false".into()]);
    }

    let results = MetricsResults {
        reference: SequenceSummary {
            path: args.reference.display().to_string(),
            format: ri.describe(),
            info: ri,
        },
        test: SequenceSummary {
            path: args.test.display().to_string(),
            format: ti.describe(),
            info: ti,
        },
        frames: evaluation.frames.len(),
        clamp_db: args.clamp_db,
        metrics: sequence_metrics,
        content,
    };
    report.set_result("metrics", &results)?;
    Ok(Outcome { report, table })
}

fn frames_table(frames: &[metrics::FrameQuality]) -> Table {
    let mut table = Table::new(&[
        "frame", "psnr_y", "psnr_u", "psnr_v", "wpsnr", "ssim", "ssim_u", "ssim_v",
    ]);
    // Per-frame values are written at full precision; infinite PSNR is "inf".
    for f in frames {
        let plane = |i: usize| f.planes.map(|p| p[i].psnr);
        let cells = [plane(0), plane(1), plane(2), f.wpsnr, f.ssim, f.ssim_u, f.ssim_v];
        let mut row = vec![f.frame_index.to_string()];
        row.extend(cells.iter().map(|c| format_opt(*c, true)));
        table.rows.push(row);
    }
    table
}

#[derive(Serialize)]
struct BdRow {
    sequence: String,
    metric: String,
    bd_rate_percent: f64,
    bd_quality: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    quality_overlap: Option<rd::Overlap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_rate_overlap: Option<rd::Overlap>,
}

fn curve_id(c: &RdCurve) -> String {
    format!("{}/{}/{}", c.codec, c.sequence, c.metric)
}

fn cmd_bdrate(cli: &Cli, args: &BdrateArgs, command: Vec<String>) -> Result<Outcome> {
    let mut report = EvalReport::new(command);
    add_input(&mut report, &args.points)?;
    let curves = read_rd_csv(open_file(&args.points)?)
        .map_err(|e| CliError::Format(format!("{}: {e}", args.points.display())))?;
    if args.anchor == args.test {
        return Err(CliError::Input("--anchor and --test name the same codec".into()));
    }
    let anchors: Vec<&RdCurve> = curves.iter().filter(|c| c.codec == args.anchor).collect();
    let tests: Vec<&RdCurve> = curves.iter().filter(|c| c.codec == args.test).collect();
    let matches = |a: &RdCurve, t: &RdCurve| a.sequence == t.sequence && a.metric == t.metric;
    let mut orphans: Vec<String> = Vec::new();
    for a in &anchors {
        if !tests.iter().any(|t| matches(a, t)) {
            orphans.push(format!("anchor {}", curve_id(a)));
        }
    }
    for t in &tests {
        if !anchors.iter().any(|a| matches(a, t)) {
            orphans.push(format!("test {}", curve_id(t)));
        }
    }
    if !orphans.is_empty() {
        return Err(CliError::Input(format!("unmatched curves: {}", orphans.join(", "))));
    }
    if anchors.is_empty() {
        let mut codecs: Vec<&str> = curves.iter().map(|c| c.codec.as_str()).collect();
        codecs.dedup();
        return Err(CliError::Input(format!(
            "no curves for anchor `{}` and test `{}` (codecs present: {})",
            args.anchor,
            args.test,
            codecs.join(", ")
        )));
    }

    let bd_err = |a: &RdCurve, e: RdError| CliError::Input(format!("{}/{}: {e}", a.sequence, a.metric));
    let mut rows = Vec::new();
    for a in &anchors {
        let t = tests.iter().find(|t| matches(a, t)).expect("paired above");
        let rate = bd_rate(a, t).map_err(|e| bd_err(a, e))?;
        let quality = bd_quality(a, t).map_err(|e| bd_err(a, e))?;
        for w in rate.warnings.iter().chain(&quality.warnings) {
            let w = format!("{}/{}: {w}", a.sequence, a.metric);
            if !report.warnings.contains(&w) {
                report.warn(w);
            }
        }
        rows.push(BdRow {
            sequence: a.sequence.clone(),
            metric: a.metric.clone(),
            bd_rate_percent: rate.percent,
            bd_quality: quality.delta,
            quality_overlap: Some(rate.overlap),
            log_rate_overlap: Some(quality.overlap),
        });
    }
    let mut metric_order: Vec<String> = Vec::new();
    for r in &rows {
        if !metric_order.contains(&r.metric) {
            metric_order.push(r.metric.clone());
        }
    }
    let mut averages = Vec::new();
    for metric in &metric_order {
        let of: Vec<&BdRow> = rows.iter().filter(|r| &r.metric == metric).collect();
        let n = of.len() as f64;
        averages.push(BdRow {
            sequence: "Average".into(),
            metric: metric.clone(),
            bd_rate_percent: of.iter().map(|r| r.bd_rate_percent).sum::<f64>() / n,
            bd_quality: of.iter().map(|r| r.bd_quality).sum::<f64>() / n,
            quality_overlap: None,
            log_rate_overlap: None,
        });
    }

    if let Some(path) = &args.plot_csv {
        plot_table(&curves, &args.anchor, &args.test, args.plot_samples)?.write_to(path)?;
    }

    report.note("curves are interpolated with monotone piecewise cubic (PCHIP) segments and integrated exactly over the overlap of both curves");
    report.note("BD-rate interpolates log10(kbps) against quality; BD-quality interpolates quality against log10(kbps)");
    report.note("Average rows are arithmetic means of the per-sequence values");

    let mut table = Table::new(&["sequence", "metric", "bd_rate_percent", "bd_quality"]);
    for r in rows.iter().chain(&averages) {
        table.rows.push(vec![
            r.sequence.clone(),
            r.metric.clone(),
            format_float(r.bd_rate_percent, cli.full_precision),
            format_float(r.bd_quality, cli.full_precision),
        ]);
    }
    report.set_result("anchor", &args.anchor)?;
    report.set_result("test", &args.test)?;
    report.set_result("sequences", &rows)?;
    report.set_result("average", &averages)?;
    Ok(Outcome { report, table })
}

fn plot_table(curves: &[RdCurve], anchor: &str, test: &str, samples: usize) -> Result<Table> {
    let mut table = Table::new(&["codec", "sequence", "metric", "quality", "log10_rate", "interpolated"]);
    for c in curves.iter().filter(|c| c.codec == anchor || c.codec == test) {
        let f = c
            .rate_interpolant()
            .map_err(|e| CliError::Input(format!("{}: {e}", curve_id(c))))?;
        let mut push = |q: f64, r: f64, interpolated: bool| {
            table.rows.push(vec![
                c.codec.clone(),
                c.sequence.clone(),
                c.metric.clone(),
                format_float(q, true),
                format_float(r, true),
                interpolated.to_string(),
            ]);
        };
        for p in c.points() {
            push(p.quality, p.bitrate_kbps.log10(), false);
        }
        let (lo, hi) = f.domain();
        if samples >= 2 {
            for i in 0..samples {
                let q = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
                push(q, f.eval(q), true);
            }
        }
    }
    Ok(table)
}

#[derive(Serialize)]
struct MosResults<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    session: Option<&'a str>,
    subjects: usize,
    stimuli: usize,
    excluded: &'a [String],
    ci_constant: f64,
    screening: subjective::ScreeningResult,
    discarded: Vec<String>,
    mos: Vec<subjective::MosPoint>,
    anova: Vec<subjective::AnovaResult>,
}

fn cmd_mos(cli: &Cli, args: &MosArgs, command: Vec<String>) -> Result<Outcome> {
    let mut report = EvalReport::new(command);
    add_input(&mut report, &args.scores)?;
    add_input(&mut report, &args.metadata)?;
    if !(args.ci_constant.is_finite() && args.ci_constant > 0.0) {
        return Err(CliError::Input(format!("--ci-constant must be positive, got {}", args.ci_constant)));
    }
    if !args.threshold.is_finite() {
        return Err(CliError::Input("--threshold must be a number".into()));
    }
    let matrix = read_scores_csv(open_file(&args.scores)?).map_err(|e| CliError::stats(&args.scores, e))?;
    if matrix.subjects().len() < 3 {
        return Err(CliError::Input(format!(
            "{}: need at least 3 subjects, got {}",
            args.scores.display(),
            matrix.subjects().len()
        )));
    }
    let mut matrix = matrix
        .without_stimuli(&args.exclude)
        .map_err(|e| CliError::Input(format!("--exclude: {e}")))?;
    let metadata =
        read_metadata_csv(open_file(&args.metadata)?).map_err(|e| CliError::stats(&args.metadata, e))?;
    attach_metadata(&mut matrix, &metadata).map_err(|e| CliError::stats(&args.metadata, e))?;
    if matrix.missing_count() > 0 {
        report.warn(format!("{} missing score(s) ignored", matrix.missing_count()));
    }

    let (screening, filtered) =
        screen_subjects(&matrix, args.threshold).map_err(|e| CliError::stats(&args.scores, e))?;
    for s in &screening.subjects {
        if let Some(note) = &s.note {
            report.warn(format!("subject `{}`: {note}; correlation set to -1", s.subject));
        }
    }
    let points = mos_points(&filtered, args.ci_constant).map_err(|e| CliError::stats(&args.scores, e))?;
    let mut anova = Vec::new();
    for factor in Factor::ALL {
        match anova_oneway(&filtered, factor) {
            Ok(r) => anova.push(r),
            Err(e) => report.warn(format!("ANOVA on {factor} skipped: {e}")),
        }
    }

    report.note(format!(
        "screening: single pass; subjects with min(Pearson, Spearman) against the all-subject MOS below {} are discarded",
        args.threshold
    ));
    report.note(format!(
        "MOS is the mean of retained scores; CI95 = {} * delta / sqrt(N), delta the population standard deviation",
        args.ci_constant
    ));
    report.note("ANOVA: one-way on per-PVS MOS for each factor; p from the F distribution");
    if !args.exclude.is_empty() {
        report.note(format!("excluded PVS: {}", args.exclude.join(", ")));
    }

    let mut table = Table::new(&["stimulus", "mos", "ci95", "n"]);
    for p in &points {
        table.rows.push(vec![
            p.stimulus.clone(),
            format_float(p.mos, cli.full_precision),
            format_opt(p.ci95, cli.full_precision),
            p.n.to_string(),
        ]);
    }
    let results = MosResults {
        session: args.session.as_deref(),
        subjects: matrix.subjects().len(),
        stimuli: matrix.stimuli().len(),
        excluded: &args.exclude,
        ci_constant: args.ci_constant,
        discarded: screening.discarded_subjects().map(str::to_string).collect(),
        screening,
        mos: points,
        anova,
    };
    report.set_result("mos", &results)?;
    Ok(Outcome { report, table })
}

#[derive(Serialize)]
struct NamedProfile {
    input: String,
    event: String,
    profile: StageProfile,
}

#[derive(Serialize)]
struct TimingRow {
    codec: String,
    sequence: String,
    qp: i32,
    time_factor: f64,
}

#[derive(Serialize)]
struct SpeedupRow {
    sequence: String,
    qp: i32,
    codec: String,
    baseline: String,
    speedup: f64,
}

fn cmd_profile(cli: &Cli, args: &ProfileArgs, command: Vec<String>) -> Result<Outcome> {
    let mut report = EvalReport::new(command);
    if args.callgrind.is_empty() && args.timing.is_none() {
        return Err(CliError::Input("give at least one Callgrind file or --timing".into()));
    }
    if !(args.threshold.is_finite() && (0.0..=100.0).contains(&args.threshold)) {
        return Err(CliError::Input(format!("--threshold must lie in [0, 100], got {}", args.threshold)));
    }
    for path in &args.callgrind {
        add_input(&mut report, path)?;
    }
    let mapping = match &args.mapping {
        Some(path) => {
            add_input(&mut report, path)?;
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", path.display())))?;
            StageMapping::parse(&text).map_err(|e| CliError::profile(path, e))?
        }
        None => StageMapping::builtin(),
    };

    let parsed: Vec<Result<CallgrindProfile>> = args
        .callgrind
        .par_iter()
        .map(|path| {
            parse_callgrind(open_file(path)?, args.event.as_deref()).map_err(|e| CliError::profile(path, e))
        })
        .collect();
    let parsed = parsed.into_iter().collect::<Result<Vec<_>>>()?;

    let mut profiles = Vec::new();
    for (path, p) in args.callgrind.iter().zip(&parsed) {
        let stages = aggregate_stages(&p.functions, &mapping, args.threshold)
            .map_err(|e| CliError::profile(path, e))?;
        profiles.push(NamedProfile {
            input: path.display().to_string(),
            event: p.event.clone(),
            profile: stages,
        });
    }
    if args.merge && !parsed.is_empty() {
        let merged = merge_costs(parsed.iter().map(|p| p.functions.as_slice()));
        let stages = aggregate_stages(&merged, &mapping, args.threshold)
            .map_err(|e| CliError::Input(format!("merged profile: {e}")))?;
        let mut events: Vec<&str> = parsed.iter().map(|p| p.event.as_str()).collect();
        events.dedup();
        if events.len() > 1 {
            report.warn(format!("merged profiles use different events: {}", events.join(", ")));
        }
        profiles.push(NamedProfile {
            input: "merged".into(),
            event: events.join("+"),
            profile: stages,
        });
    }

    if let Some(dir) = &args.pie_dir {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create `{}`: {e}", dir.display())))?;
        for (i, p) in profiles.iter().enumerate() {
            let stem = Path::new(&p.input)
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("profile{i}"));
            let mut pie = Table::new(&["stage", "percent"]);
            for s in &p.profile.stages {
                pie.rows.push(vec![s.stage.clone(), format_float(s.percent, cli.full_precision)]);
            }
            pie.write_to(&dir.join(format!("{stem}.csv")))?;
        }
    }

    let mut timings = Vec::new();
    let mut speedups = Vec::new();
    if let Some(path) = &args.timing {
        add_input(&mut report, path)?;
        let records = read_timing_csv(open_file(path)?).map_err(|e| CliError::profile(path, e))?;
        for r in &records {
            timings.push(TimingRow {
                codec: r.codec.clone(),
                sequence: r.sequence.clone(),
                qp: r.qp,
                time_factor: time_factor(r).map_err(|e| CliError::profile(path, e))?,
            });
        }
        for (i, a) in records.iter().enumerate() {
            for b in &records[i + 1..] {
                if a.sequence != b.sequence || a.qp != b.qp || a.codec == b.codec {
                    continue;
                }
                let (num, den) = match args.baseline.as_deref() {
                    Some(base) if a.codec == base => (b, a),
                    Some(base) if b.codec == base => (a, b),
                    Some(_) => continue,
                    None => (a, b),
                };
                match speedup(num, den) {
                    Ok(s) => speedups.push(SpeedupRow {
                        sequence: a.sequence.clone(),
                        qp: a.qp,
                        codec: num.codec.clone(),
                        baseline: den.codec.clone(),
                        speedup: s,
                    }),
                    Err(e) => report.warn(format!("speedup {} vs {}: {e}", num.codec, den.codec)),
                }
            }
        }
        report.note("time factor = wall seconds / (frame_count * fps_den / fps_num); 1.0 is real time");
        report.note("speedup = time factor of codec / time factor of baseline, same sequence and QP");
    }
    if !profiles.is_empty() {
        report.note(format!(
            "stage shares use per-function self cost of the selected event (no inclusive propagation); stages below {}% are folded into Other",
            args.threshold
        ));
        report.note(if args.mapping.is_some() {
            "stage mapping: user file, first matching pattern wins"
        } else {
            "stage mapping: built-in default taxonomy, first matching pattern wins"
        });
    }

    let mut table = Table::new(&["input", "stage", "cost", "percent"]);
    for p in &profiles {
        for s in &p.profile.stages {
            table.rows.push(vec![
                p.input.clone(),
                s.stage.clone(),
                s.cost.to_string(),
                format_float(s.percent, cli.full_precision),
            ]);
        }
    }
    report.set_result("profiles", &profiles)?;
    report.set_result("time_factors", &timings)?;
    report.set_result("speedups", &speedups)?;
    Ok(Outcome { report, table })
}
