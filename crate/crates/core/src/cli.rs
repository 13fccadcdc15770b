//! `clutchsim` command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! runtime failures.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::Config;
use crate::driveline::Configuration;
use crate::error::{Error, Result};
use crate::mlp::{self, MlpModel, TrainingData};
use crate::sim::{run_scenario, TRACE_HEADER};
use crate::sweep::{self, EngagementDataset, SURFACE_HEADER};

#[derive(Debug, Parser)]
#[command(name = "clutchsim", version, about = "Centrifugal clutch / two-speed gearbox simulator")]
struct Cli {
    /// Parameter file (TOML); the built-in defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Seed for dataset jitter and training; overrides `train.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Clutch pairing; overrides `driveline.configuration`.
    #[arg(long, global = true, value_name = "A|B")]
    configuration: Option<Configuration>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the shift scenario and write trace_<A|B>.csv.
    Simulate,
    /// Full-engagement speed over the shoe-mass × preload grid (surface_<A|B>.csv).
    Sweep,
    /// Simulator-labelled engagement dataset (dataset.csv).
    Dataset,
    /// Train the engagement classifier (model.json, metrics.json, decision_grid.csv).
    Train {
        /// Dataset to train on; defaults to <out>/dataset.csv.
        #[arg(long, value_name = "PATH")]
        dataset: Option<PathBuf>,
    },
    /// Predict engagement for one design point.
    Predict {
        #[arg(long, value_name = "KG")]
        mass: f64,
        #[arg(long, value_name = "N")]
        preload: f64,
        /// Model file; defaults to <out>/model.json.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Collect earlier outputs into plot-ready fig*.csv files.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Dataset => "dataset",
            Command::Train { .. } => "train",
            Command::Predict { .. } => "predict",
            Command::Report => "report",
        }
    }
}

/// Reproducibility record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub output_dir: String,
    pub seed: u64,
    pub configuration: String,
    /// Seconds since the Unix epoch; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
    pub outputs: Vec<String>,
    /// Effective parameters after command-line overrides.
    pub config: String,
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
    {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

struct Context {
    cfg: Config,
    config_path: String,
    out: PathBuf,
    command: &'static str,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        let p = self.path(name);
        File::create(&p).map(BufWriter::new).map_err(|e| Error::io(&p, e))
    }

    fn write_with(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let mut w = self.create(name)?;
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(self.path(name), e))?;
        println!("wrote {}", self.path(name).display());
        Ok(())
    }

    fn manifest(&self, stem: &str, outputs: &[&str]) -> Result<()> {
        let m = RunManifest {
            command: self.command.to_string(),
            config_path: self.config_path.clone(),
            output_dir: self.out.display().to_string(),
            seed: self.cfg.train.seed,
            configuration: self.cfg.driveline.configuration.to_string(),
            timestamp: timestamp(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            config: self.cfg.to_toml(),
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        self.write_with(&format!("{stem}.manifest.json"), |w| writeln!(w, "{text}"))
    }
}

fn simulate(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let trace = run_scenario(
        &cfg.shift_scenario(),
        &cfg.clutch_params(),
        &cfg.driveline_params(),
        &cfg.sim_config(),
    )?;
    let c = cfg.driveline.configuration;
    let name = format!("trace_{c}.csv");
    ctx.write_with(&name, |w| trace.write_csv(w, cfg.sim.trace_decimation))?;
    let modes: Vec<&str> = trace.mode_sequence().iter().map(|m| m.label()).collect();
    println!(
        "configuration {c}: modes {}; peak clutch torque {:.3} N·m",
        modes.join(" -> "),
        trace.peak_clutch_torque()
    );
    ctx.manifest(&format!("trace_{c}"), &[&name])
}

fn sweep_cmd(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let grid = cfg.grid_spec();
    let surface = sweep::sweep_engagement_speed(
        &grid,
        &cfg.clutch_params(),
        &cfg.driveline_params(),
        &cfg.engagement_scenario(),
        &cfg.sim_config(),
    )?;
    let name = format!("surface_{}.csv", grid.configuration);
    ctx.write_with(&name, |w| {
        sweep::write_surface_csv(w, &surface, grid.operating_speed_max)
    })?;
    ctx.manifest(&format!("surface_{}", grid.configuration), &[&name])
}

fn dataset_cmd(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let ds = sweep::generate_dataset(
        &cfg.grid_spec(),
        &cfg.clutch_params(),
        &cfg.driveline_params(),
        &cfg.engagement_scenario(),
        &cfg.sim_config(),
        cfg.train.seed,
    )?;
    let engaged = ds.samples.iter().filter(|s| s.engaged).count();
    ctx.write_with("dataset.csv", |w| ds.write_csv(w))?;
    println!("{} samples, {engaged} engaged", ds.samples.len());
    ctx.manifest("dataset", &["dataset.csv"])
}

fn read_dataset(path: &Path) -> Result<EngagementDataset> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    EngagementDataset::read_csv(BufReader::new(f), &path.display().to_string())
}

fn train_cmd(ctx: &Context, dataset: Option<&Path>) -> Result<()> {
    let cfg = &ctx.cfg;
    let path = dataset.map_or_else(|| ctx.path("dataset.csv"), Path::to_path_buf);
    let ds = read_dataset(&path)?;
    let data = TrainingData::from(&ds);
    let (model, metrics) = mlp::train(&data, &cfg.mlp_spec(2), &cfg.train_config())?;
    let grid = mlp::decision_grid(&model, &cfg.grid_spec())?;
    ctx.write_with("model.json", |w| w.write_all(model.to_json().as_bytes()))?;
    let metrics_text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    ctx.write_with("metrics.json", |w| writeln!(w, "{metrics_text}"))?;
    ctx.write_with("decision_grid.csv", |w| mlp::write_decision_grid_csv(w, &grid))?;
    println!(
        "validation accuracy {:.4}, precision {:.4}, recall {:.4}",
        metrics.validation_accuracy, metrics.validation_precision, metrics.validation_recall
    );
    ctx.manifest("model", &["model.json", "metrics.json", "decision_grid.csv"])
}

fn predict_cmd(ctx: &Context, mass: f64, preload: f64, model: Option<&Path>) -> Result<()> {
    let path = model.map_or_else(|| ctx.path("model.json"), Path::to_path_buf);
    let model = MlpModel::load(&path)?;
    let p = model.forward(&[mass, preload])?;
    println!(
        "shoe_mass={mass} preload={preload} probability={p} engaged={}",
        u8::from(p >= 0.5)
    );
    Ok(())
}

const REPORT_INPUTS: [&str; 6] = [
    "trace_A.csv",
    "trace_B.csv",
    "surface_A.csv",
    "surface_B.csv",
    "dataset.csv",
    "decision_grid.csv",
];

/// Reads a CSV with the expected header into rows of string fields.
fn read_table(path: &Path, header: &str) -> Result<Vec<Vec<String>>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let first = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .unwrap_or_default();
    if first.trim() != header {
        return Err(Error::Format {
            path: path.display().to_string(),
            message: format!("expected header {header:?}, found {first:?}"),
        });
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            rows.push(line.split(',').map(str::to_string).collect());
        }
    }
    Ok(rows)
}

fn report_cmd(ctx: &Context) -> Result<()> {
    let missing: Vec<&str> = REPORT_INPUTS
        .iter()
        .copied()
        .filter(|n| !ctx.path(n).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Format {
            path: ctx.out.display().to_string(),
            message: format!("missing report inputs: {}", missing.join(", ")),
        });
    }
    // Shift traces: speed, clutch torque and acceleration panels.
    for (src, dst) in [("trace_A.csv", "fig4.csv"), ("trace_B.csv", "fig5.csv")] {
        let rows = read_table(&ctx.path(src), TRACE_HEADER)?;
        ctx.write_with(dst, |w| {
            writeln!(w, "t,omega_input,omega_driven,T_centrifugal,alpha_input,alpha_driven,mode")?;
            for r in &rows {
                writeln!(w, "{},{},{},{},{},{},{}", r[0], r[1], r[2], r[5], r[3], r[4], r[7])?;
            }
            Ok(())
        })?;
    }
    // Engagement surfaces: engaged points only carry a speed.
    for (src, dst) in [("surface_A.csv", "fig6.csv"), ("surface_B.csv", "fig7.csv")] {
        let rows = read_table(&ctx.path(src), SURFACE_HEADER)?;
        ctx.write_with(dst, |w| {
            writeln!(w, "shoe_mass,preload,full_engagement_speed")?;
            for r in &rows {
                writeln!(w, "{},{},{}", r[0], r[1], r[2])?;
            }
            Ok(())
        })?;
    }
    let grid = read_table(&ctx.path("decision_grid.csv"), mlp::DECISION_GRID_HEADER)?;
    let samples = read_table(&ctx.path("dataset.csv"), SURFACE_HEADER)?;
    ctx.write_with("fig_prediction.csv", |w| {
        writeln!(w, "source,shoe_mass,preload,probability,engaged")?;
        for r in &grid {
            writeln!(w, "model,{},{},{},{}", r[0], r[1], r[2], r[3])?;
        }
        for r in &samples {
            writeln!(w, "simulation,{},{},,{}", r[0], r[1], r[3])?;
        }
        Ok(())
    })?;
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let loaded = match &cli.config {
        Some(p) => Config::load(p).map(|c| (c, p.display().to_string())),
        None => Ok((Config::default(), "<default>".to_string())),
    };
    let (mut cfg, config_path) = match loaded {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if let Some(c) = cli.configuration {
        cfg.set_configuration(c);
    }
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    let ctx = Context {
        cfg,
        config_path,
        out: cli.out.clone(),
        command: cli.command.name(),
    };
    let result = match &cli.command {
        Command::Simulate => simulate(&ctx),
        Command::Sweep => sweep_cmd(&ctx),
        Command::Dataset => dataset_cmd(&ctx),
        Command::Train { dataset } => train_cmd(&ctx, dataset.as_deref()),
        Command::Predict {
            mass,
            preload,
            model,
        } => predict_cmd(&ctx, *mass, *preload, model.as_deref()),
        Command::Report => report_cmd(&ctx),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
