//! `aerokpi` command-line interface.
//!
//! Every subcommand writes its primary output plus `<output>.manifest.json`.
//! Exit status is 0 on success, 2 on invalid input and 1 otherwise.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::antenna::{load_pattern, AntennaPattern};
use crate::data::{
    generate_trajectory, partition_by_device, read_flight_csv, synthesize_measurements, write_flight_csv, ColumnMap,
    FlightLog, Kpi, RankPlane, SynthConfig, TrajectorySpec,
};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy_table, altitude_table, compare_altitudes, error_histogram, heatmap, metrics, AccuracyRow,
    AltitudeComparison, ErrorHistogram, EvalReport,
};
use crate::geo::BsSiteConfig;
use crate::linkbudget::{predict_trajectory, write_predictions_csv};
use crate::models::{
    confusion, data_hash, fit_lda, grid_search, lda_points_from_log, observations_from_log, Confusion, GridResult,
    HyperGrid, LdaModel, LeaderboardEntry, ModelDocument, ModelFamily, TrainingMetadata,
};

#[derive(Debug, Parser)]
#[command(name = "aerokpi", version, about = "UAV air-to-ground KPI modelling toolkit")]
pub struct Cli {
    /// JSON object renaming flight-log columns to canonical names.
    #[arg(long, global = true, value_name = "JSON")]
    pub column_map: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct PatternArgs {
    /// Horizontal pattern cut, `angle_deg,gain_db` rows over [-180, 180].
    #[arg(long, value_name = "CSV", requires = "elevation_pattern")]
    pub azimuth_pattern: Option<PathBuf>,
    /// Vertical pattern cut, `angle_deg,gain_db` rows.
    #[arg(long, value_name = "CSV", requires = "azimuth_pattern")]
    pub elevation_pattern: Option<PathBuf>,
    /// Use a 0 dBi isotropic antenna instead of a pattern.
    #[arg(long, conflicts_with_all = ["azimuth_pattern", "elevation_pattern"])]
    pub isotropic: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Free-space RSRP prediction along a flight log.
    PredictFspl {
        /// Base-station site JSON.
        #[arg(long)]
        site: PathBuf,
        #[command(flatten)]
        pattern: PatternArgs,
        /// Flight-log CSV.
        #[arg(long)]
        flight: PathBuf,
        /// Predictions CSV.
        #[arg(long, short)]
        output: PathBuf,
        /// Accuracy report JSON, written when the log carries RSRP
        /// [default: <output stem>.report.json].
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Grid-search one model family and save the best model.
    Fit {
        #[arg(long)]
        flight: PathBuf,
        /// Site JSON used to compute distance and angles.
        #[arg(long)]
        site: PathBuf,
        /// poly, forest, gbt or mlp.
        #[arg(long)]
        family: ModelFamily,
        /// Hyper-parameter grid JSON; omitted fields use the defaults.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Seed for the train/test split and model randomness.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fit only this device's rows.
        #[arg(long)]
        device: Option<String>,
        /// Model JSON. Multi-device logs write `<stem>.<device>.json` instead.
        #[arg(long, short)]
        output: PathBuf,
        /// Leaderboard JSON [default: <output stem>.leaderboard.json].
        #[arg(long)]
        leaderboard: Option<PathBuf>,
    },
    /// Score a saved model against a flight log.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        flight: PathBuf,
        #[arg(long)]
        site: PathBuf,
        #[arg(long)]
        device: Option<String>,
        /// Histogram bin width in dB.
        #[arg(long, default_value_t = 1.0)]
        bin_width: f64,
        /// Report JSON.
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Synthesize a flight log from a trajectory spec.
    Synth {
        /// Trajectory spec JSON.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        site: PathBuf,
        #[command(flatten)]
        pattern: PatternArgs,
        /// Standard deviation of the Gaussian RSRP noise, dB.
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rank plane JSON used to label rows with a channel rank.
        #[arg(long)]
        rank_plane: Option<PathBuf>,
        /// Flight-log CSV.
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Fit the two-class LDA rank plane.
    RankLda {
        #[arg(long)]
        flight: PathBuf,
        #[arg(long)]
        site: PathBuf,
        /// The two rank labels to separate.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1u8, 4u8])]
        classes: Vec<u8>,
        #[arg(long)]
        device: Option<String>,
        /// Plane and confusion JSON.
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Compare KPIs of two passes over the same area at different altitudes.
    CompareAltitudes {
        /// Lower-altitude flight CSV.
        low: PathBuf,
        /// Higher-altitude flight CSV.
        high: PathBuf,
        /// KPIs to compare, comma separated, or `all` for every KPI both logs carry.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        kpi: Vec<String>,
        #[arg(long)]
        device: Option<String>,
        /// Comparison JSON.
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Per-bin mean of a KPI over the local east/north plane.
    Heatmap {
        #[arg(long)]
        flight: PathBuf,
        #[arg(long)]
        kpi: Kpi,
        /// Bin size in meters.
        #[arg(long, default_value_t = 10.0)]
        bin_m: f64,
        /// Use the site position as grid origin instead of the first record.
        #[arg(long)]
        site: Option<PathBuf>,
        #[arg(long)]
        device: Option<String>,
        /// Heatmap CSV `east_m,north_m,value`.
        #[arg(long, short)]
        output: PathBuf,
    },
}

/// Provenance written beside each primary output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_paths: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 of every input file.
    pub input_hashes: BTreeMap<String, String>,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub created_unix_s: u64,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        RunManifest {
            command: command.into(),
            args: std::env::args().skip(1).collect(),
            config_paths: BTreeMap::new(),
            seeds: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            outputs: Vec::new(),
            created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Reads an input file, recording its hash. Missing or unreadable inputs are
/// validation errors.
fn read_input(path: &Path, manifest: &mut RunManifest) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    manifest
        .input_hashes
        .insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
    Ok(bytes)
}

fn read_text(path: &Path, manifest: &mut RunManifest) -> Result<String> {
    String::from_utf8(read_input(path, manifest)?)
        .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))
}

fn with_suffix(output: &Path, suffix: &str) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}{suffix}"))
}

struct Ctx {
    manifest: RunManifest,
    column_map: ColumnMap,
}

impl Ctx {
    fn site(&mut self, path: &Path) -> Result<BsSiteConfig> {
        self.manifest.config_paths.insert("site".into(), path.display().to_string());
        let text = read_text(path, &mut self.manifest)?;
        BsSiteConfig::from_json_str(&text).map_err(|e| Error::Config(format!("site {}: {e}", path.display())))
    }

    fn pattern(&mut self, args: &PatternArgs) -> Result<AntennaPattern> {
        if args.isotropic {
            return Ok(AntennaPattern::isotropic());
        }
        match (&args.azimuth_pattern, &args.elevation_pattern) {
            (Some(az), Some(el)) => {
                self.manifest.config_paths.insert("azimuth_pattern".into(), az.display().to_string());
                self.manifest.config_paths.insert("elevation_pattern".into(), el.display().to_string());
                let a = read_input(az, &mut self.manifest)?;
                let e = read_input(el, &mut self.manifest)?;
                load_pattern(a.as_slice(), e.as_slice())
            }
            _ => Ok(AntennaPattern::stand_in()),
        }
    }

    fn flight(&mut self, path: &Path, device: Option<&str>) -> Result<FlightLog> {
        let bytes = read_input(path, &mut self.manifest)?;
        let log = read_flight_csv(bytes.as_slice(), &self.column_map)?.log;
        match device {
            None => Ok(log),
            Some(d) => partition_by_device(&log)
                .remove(d)
                .ok_or_else(|| Error::Config(format!("device `{d}` not found in {}", path.display()))),
        }
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        fs::write(path, bytes)?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(path, s.as_bytes())
    }

    fn finish(self, primary: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(&self.manifest)?;
        s.push('\n');
        fs::write(manifest_path(primary), s)?;
        Ok(())
    }
}

/// JSON written by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub family: ModelFamily,
    pub report: EvalReport,
    pub error_histogram: ErrorHistogram,
    /// Rows skipped for missing RSRP or degenerate geometry.
    pub skipped_rows: usize,
}

/// JSON written by `rank-lda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaOutput {
    pub model: LdaModel,
    pub confusion: Confusion,
    pub accuracy: f64,
}

#[derive(Serialize)]
struct Leaderboard<'a> {
    family: ModelFamily,
    split_seed: u64,
    n_train: usize,
    n_test: usize,
    best_index: usize,
    entries: &'a [LeaderboardEntry],
}

fn predict_fspl(
    ctx: &mut Ctx,
    site: &Path,
    pattern: &PatternArgs,
    flight: &Path,
    output: &Path,
    report: Option<&Path>,
) -> Result<()> {
    let site = ctx.site(site)?;
    let pattern = ctx.pattern(pattern)?;
    let log = ctx.flight(flight, None)?;
    let pred = predict_trajectory(&site, &pattern, &log);
    for (row, e) in &pred.rejected {
        eprintln!("row {row}: {e}");
    }
    let mut csv = Vec::new();
    write_predictions_csv(&pred.samples, &mut csv)?;
    ctx.write(output, &csv)?;

    let (measured, predicted): (Vec<f64>, Vec<f64>) = pred
        .samples
        .iter()
        .filter_map(|s| log.records[s.row].rsrp_dbm.map(|m| (m, s.prediction.rsrp_dbm)))
        .unzip();
    if !measured.is_empty() {
        let r = metrics(&measured, &predicted)?;
        let path = report.map(Path::to_path_buf).unwrap_or_else(|| with_suffix(output, ".report.json"));
        ctx.write_json(&path, &r)?;
        let device = log.metadata.device.clone().unwrap_or_else(|| "all".into());
        print!("{}", accuracy_table(&[AccuracyRow { device, model: "FSPL".into(), report: r }]));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fit(
    ctx: &mut Ctx,
    flight: &Path,
    site: &Path,
    family: ModelFamily,
    grid: Option<&Path>,
    seed: u64,
    device: Option<&str>,
    output: &Path,
    leaderboard: Option<&Path>,
) -> Result<()> {
    let site = ctx.site(site)?;
    let grid = match grid {
        Some(p) => {
            ctx.manifest.config_paths.insert("grid".into(), p.display().to_string());
            HyperGrid::from_json_str(&read_text(p, &mut ctx.manifest)?)?
        }
        None => HyperGrid::default(),
    };
    ctx.manifest.seeds.insert("seed".into(), seed);
    let log = ctx.flight(flight, device)?;
    let parts = partition_by_device(&log);
    if parts.is_empty() {
        return Err(Error::domain("flight log has no rows"));
    }
    let split = parts.len() > 1;
    let mut rows = Vec::new();
    for (dev, part) in &parts {
        let data = observations_from_log(part, &site);
        if data.len() < 2 {
            return Err(Error::MissingColumn(format!("rsrp_dbm (device {dev})")));
        }
        let result: GridResult = grid_search(&data, &grid, family, seed)?;
        let doc = ModelDocument {
            model: result.best.clone(),
            training: TrainingMetadata {
                data_hash: data_hash(&data),
                split_seed: seed,
                n_train: result.n_train,
                n_test: result.n_test,
                device: Some(dev.clone()),
            },
        };
        let (model_path, board_path) = if split {
            let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (
                output.with_file_name(format!("{stem}.{dev}.json")),
                output.with_file_name(format!("{stem}.{dev}.leaderboard.json")),
            )
        } else {
            (
                output.to_path_buf(),
                leaderboard.map(Path::to_path_buf).unwrap_or_else(|| with_suffix(output, ".leaderboard.json")),
            )
        };
        let mut json = doc.to_json();
        json.push('\n');
        ctx.write(&model_path, json.as_bytes())?;
        ctx.write_json(
            &board_path,
            &Leaderboard {
                family,
                split_seed: seed,
                n_train: result.n_train,
                n_test: result.n_test,
                best_index: result.best_index,
                entries: &result.leaderboard,
            },
        )?;
        let best = result.leaderboard[result.best_index].report.clone().expect("best entry has a report");
        rows.push(AccuracyRow { device: dev.clone(), model: family.to_string(), report: best });
    }
    print!("{}", accuracy_table(&rows));
    Ok(())
}

fn evaluate(
    ctx: &mut Ctx,
    model: &Path,
    flight: &Path,
    site: &Path,
    device: Option<&str>,
    bin_width: f64,
    output: &Path,
) -> Result<()> {
    let doc = ModelDocument::from_json(&read_text(model, &mut ctx.manifest)?)
        .map_err(|e| Error::Config(format!("model {}: {e}", model.display())))?;
    let site = ctx.site(site)?;
    let log = ctx.flight(flight, device)?;
    let data = observations_from_log(&log, &site);
    if data.is_empty() {
        return Err(Error::MissingColumn("rsrp_dbm".into()));
    }
    let predicted = doc.model.predict_all(&data)?;
    let measured: Vec<f64> = data.iter().map(|o| o.rsrp_dbm).collect();
    let report = metrics(&measured, &predicted)?;
    let errors: Vec<f64> = measured.iter().zip(&predicted).map(|(m, p)| m - p).collect();
    let out = EvaluationOutput {
        family: doc.model.family(),
        report: report.clone(),
        error_histogram: error_histogram(&errors, bin_width)?,
        skipped_rows: log.len() - data.len(),
    };
    ctx.write_json(output, &out)?;
    let device = doc.training.device.unwrap_or_else(|| "all".into());
    print!("{}", accuracy_table(&[AccuracyRow { device, model: out.family.to_string(), report }]));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn synth(
    ctx: &mut Ctx,
    spec: &Path,
    site: &Path,
    pattern: &PatternArgs,
    noise_std: f64,
    seed: u64,
    rank_plane: Option<&Path>,
    output: &Path,
) -> Result<()> {
    ctx.manifest.config_paths.insert("spec".into(), spec.display().to_string());
    let spec: TrajectorySpec = serde_json::from_str(&read_text(spec, &mut ctx.manifest)?)
        .map_err(|e| Error::BadSpec(e.to_string()))?;
    let site = ctx.site(site)?;
    let pattern = ctx.pattern(pattern)?;
    let mut cfg = SynthConfig::new(noise_std, seed);
    if let Some(p) = rank_plane {
        ctx.manifest.config_paths.insert("rank_plane".into(), p.display().to_string());
        let plane: RankPlane = serde_json::from_str(&read_text(p, &mut ctx.manifest)?)
            .map_err(|e| Error::Config(format!("rank plane: {e}")))?;
        cfg.rank_plane = Some(plane);
    }
    ctx.manifest.seeds.insert("seed".into(), seed);
    let positions = generate_trajectory(&spec, &site)?;
    let log = synthesize_measurements(&positions, &site, &pattern, &cfg)?;
    let mut csv = Vec::new();
    write_flight_csv(&log, &mut csv)?;
    ctx.write(output, &csv)?;
    eprintln!("wrote {} rows", log.len());
    Ok(())
}

fn rank_lda(
    ctx: &mut Ctx,
    flight: &Path,
    site: &Path,
    classes: &[u8],
    device: Option<&str>,
    output: &Path,
) -> Result<()> {
    let site = ctx.site(site)?;
    let log = ctx.flight(flight, device)?;
    let points: Vec<_> = lda_points_from_log(&log, &site)
        .into_iter()
        .filter(|p| classes.contains(&p.rank))
        .collect();
    let model = fit_lda(&points)?;
    let confusion = confusion(&model, &points);
    let out = LdaOutput {
        accuracy: confusion.accuracy(),
        model,
        confusion,
    };
    ctx.write_json(output, &out)?;
    let [w_d, w_az, w_el] = out.model.weights;
    println!(
        "{w_d:.4} d {w_az:+.4} az {w_el:+.4} el {:+.4} = 0; misclassified {}/{}",
        out.model.bias, out.confusion.misclassified, out.confusion.total
    );
    Ok(())
}

fn compare(
    ctx: &mut Ctx,
    low: &Path,
    high: &Path,
    kpis: &[String],
    device: Option<&str>,
    output: &Path,
) -> Result<()> {
    let low = ctx.flight(low, device)?;
    let high = ctx.flight(high, device)?;
    let selected: Vec<Kpi> = if kpis.iter().any(|k| k == "all") {
        Kpi::ALL.into_iter().filter(|k| low.has_kpi(*k) && high.has_kpi(*k)).collect()
    } else {
        kpis.iter().map(|k| k.parse()).collect::<Result<_>>()?
    };
    if selected.is_empty() {
        return Err(Error::MissingColumn("no KPI present in both logs".into()));
    }
    let rows: Vec<AltitudeComparison> =
        selected.into_iter().map(|k| compare_altitudes(&low, &high, k)).collect::<Result<_>>()?;
    ctx.write_json(output, &rows)?;
    print!("{}", altitude_table(&rows));
    Ok(())
}

fn heatmap_cmd(
    ctx: &mut Ctx,
    flight: &Path,
    kpi: Kpi,
    bin_m: f64,
    site: Option<&Path>,
    device: Option<&str>,
    output: &Path,
) -> Result<()> {
    let origin = match site {
        Some(p) => Some(ctx.site(p)?.position),
        None => None,
    };
    let log = ctx.flight(flight, device)?;
    let grid = heatmap(&log, kpi, bin_m, origin)?;
    let mut csv = Vec::new();
    grid.write_csv(&mut csv)?;
    ctx.write(output, &csv)?;
    eprintln!("{} bins from {} samples", grid.cells.len(), grid.total_count());
    Ok(())
}

fn primary_output(cmd: &Command) -> &Path {
    match cmd {
        Command::PredictFspl { output, .. }
        | Command::Fit { output, .. }
        | Command::Evaluate { output, .. }
        | Command::Synth { output, .. }
        | Command::RankLda { output, .. }
        | Command::CompareAltitudes { output, .. }
        | Command::Heatmap { output, .. } => output,
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::PredictFspl { .. } => "predict-fspl",
        Command::Fit { .. } => "fit",
        Command::Evaluate { .. } => "evaluate",
        Command::Synth { .. } => "synth",
        Command::RankLda { .. } => "rank-lda",
        Command::CompareAltitudes { .. } => "compare-altitudes",
        Command::Heatmap { .. } => "heatmap",
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let mut manifest = RunManifest::new(command_name(&cli.command));
    let column_map = match &cli.column_map {
        Some(p) => {
            manifest.config_paths.insert("column_map".into(), p.display().to_string());
            ColumnMap::from_json_str(&read_text(p, &mut manifest)?)?
        }
        None => ColumnMap::default(),
    };
    let mut ctx = Ctx { manifest, column_map };
    match &cli.command {
        Command::PredictFspl { site, pattern, flight, output, report } => {
            predict_fspl(&mut ctx, site, pattern, flight, output, report.as_deref())?
        }
        Command::Fit { flight, site, family, grid, seed, device, output, leaderboard } => fit(
            &mut ctx,
            flight,
            site,
            *family,
            grid.as_deref(),
            *seed,
            device.as_deref(),
            output,
            leaderboard.as_deref(),
        )?,
        Command::Evaluate { model, flight, site, device, bin_width, output } => {
            evaluate(&mut ctx, model, flight, site, device.as_deref(), *bin_width, output)?
        }
        Command::Synth { spec, site, pattern, noise_std, seed, rank_plane, output } => {
            synth(&mut ctx, spec, site, pattern, *noise_std, *seed, rank_plane.as_deref(), output)?
        }
        Command::RankLda { flight, site, classes, device, output } => {
            rank_lda(&mut ctx, flight, site, classes, device.as_deref(), output)?
        }
        Command::CompareAltitudes { low, high, kpi, device, output } => {
            compare(&mut ctx, low, high, kpi, device.as_deref(), output)?
        }
        Command::Heatmap { flight, kpi, bin_m, site, device, output } => {
            heatmap_cmd(&mut ctx, flight, *kpi, *bin_m, site.as_deref(), device.as_deref(), output)?
        }
    }
    ctx.finish(primary_output(&cli.command))
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}
