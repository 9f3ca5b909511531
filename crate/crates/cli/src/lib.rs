//! `weakval` command-line front end.
//!
//! Every subcommand resolves the same [`config::ExperimentConfig`] from an
//! optional config file overlaid with flags, and every output starts with
//! `#` metadata lines: tool version, command, the effective config and its
//! SHA-256.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use weakval_core::{
    calibrate_shifts, pixel_probability_map, sequential_prediction, simulate_counts,
    sweep_postselection, validity_region, weak_value, write_sweep_csv, CountMap, Order, PixelGrid,
    PolarizationState, Projector,
};

use config::{hash_lines, ConfigError, ExperimentConfig, RawConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Caps the worker threads; 0 or unset lets the runtime decide.
pub const THREADS_ENV: &str = "WEAKVAL_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("error: {0}")]
    Runtime(#[from] weakval_core::Error),
    #[error("error: {0}")]
    Io(#[from] std::io::Error),
    #[error("error: {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: weakval_core::Error,
    },
    #[error("error: {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn file_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::File { path: path.to_path_buf(), source }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) | CliError::Io(_) | CliError::Input { .. } | CliError::File { .. } => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "weakval", version, about = "Weak-value polarization measurement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Meter centroids for one or more post-selections.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        selection: SelectionArgs,
    },
    /// Validity regions of the first- and third-order approximations.
    Regions {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        region: RegionArgs,
    },
    /// Sweep CSV over post-selection angles, with optional Monte Carlo columns.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        #[command(flatten)]
        detection: DetectionArgs,
    },
    /// Simulated SPAD count maps, one CSV per post-selection.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        #[command(flatten)]
        detection: DetectionArgs,
    },
    /// Shift estimates from |H> and |V> count maps.
    Calibrate {
        /// Count map acquired with |H> pre- and post-selection.
        counts_h: PathBuf,
        /// Count map acquired with |V> pre- and post-selection.
        counts_v: PathBuf,
        /// Also write the estimates to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (standard output if omitted).
    #[arg(long, allow_hyphen_values = true)]
    output: Option<String>,
}

#[derive(Debug, Args)]
struct CouplingArgs {
    /// `thin` (0.7, 0.7, 4.3) or `thick` (1.9, 1.7, 4.3).
    #[arg(long)]
    preset: Option<String>,
    /// Walk-off along x, in pixels.
    #[arg(long = "a-x", allow_hyphen_values = true)]
    a_x: Option<String>,
    /// Walk-off along y, in pixels.
    #[arg(long = "a-y", allow_hyphen_values = true)]
    a_y: Option<String>,
    /// Pointer width, in pixels.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
}

#[derive(Debug, Args)]
struct SelectionArgs {
    /// Pre-selection angle (radians, or e.g. `45deg`); default pi/4.
    #[arg(long = "theta-i", allow_hyphen_values = true)]
    theta_i: Option<String>,
    /// Comma-separated post-selection angles.
    #[arg(long = "theta-f", allow_hyphen_values = true)]
    theta_f: Option<String>,
    /// `lo:hi:n` target range of <Pi_H>_w.
    #[arg(long = "aw-range", allow_hyphen_values = true)]
    aw_range: Option<String>,
}

#[derive(Debug, Args)]
struct DetectionArgs {
    #[arg(long, allow_hyphen_values = true)]
    shots: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    efficiency: Option<String>,
    /// Dark count rate per pixel, in Hz.
    #[arg(long = "dark-rate", allow_hyphen_values = true)]
    dark_rate: Option<String>,
    /// Gate width, in seconds.
    #[arg(long, allow_hyphen_values = true)]
    gate: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
}

#[derive(Debug, Args)]
struct RegionArgs {
    /// Tolerance on the normalized deviation.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    /// `lo:hi` weak-value interval to classify.
    #[arg(long, allow_hyphen_values = true)]
    search: Option<String>,
}

fn load(common: &CommonArgs) -> Result<RawConfig, ConfigError> {
    let mut raw = match &common.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    if let Some(o) = &common.output {
        raw.set_flag("output", "--output", o);
    }
    Ok(raw)
}

fn overlay(raw: &mut RawConfig, flags: &[(&str, &str, &Option<String>)]) {
    for (key, flag, value) in flags {
        if let Some(v) = value {
            raw.set_flag(key, flag, v);
        }
    }
}

impl CouplingArgs {
    fn apply(&self, raw: &mut RawConfig) {
        overlay(raw, &[
            ("preset", "--preset", &self.preset),
            ("a_x", "--a-x", &self.a_x),
            ("a_y", "--a-y", &self.a_y),
            ("sigma", "--sigma", &self.sigma),
        ]);
    }
}

impl SelectionArgs {
    fn apply(&self, raw: &mut RawConfig) {
        overlay(raw, &[
            ("theta_i", "--theta-i", &self.theta_i),
            ("theta_f", "--theta-f", &self.theta_f),
            ("aw_range", "--aw-range", &self.aw_range),
        ]);
    }
}

impl DetectionArgs {
    fn apply(&self, raw: &mut RawConfig) {
        overlay(raw, &[
            ("shots", "--shots", &self.shots),
            ("efficiency", "--efficiency", &self.efficiency),
            ("dark_rate_hz", "--dark-rate", &self.dark_rate),
            ("gate_s", "--gate", &self.gate),
            ("seed", "--seed", &self.seed),
        ]);
    }
}

impl RegionArgs {
    fn apply(&self, raw: &mut RawConfig) {
        overlay(raw, &[("epsilon", "--epsilon", &self.epsilon), ("search", "--search", &self.search)]);
    }
}

/// Runs the tool on `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_CONFIG
                }
            };
        }
    };
    let mut text = String::new();
    let result = thread_pool().and_then(|pool| pool.install(|| execute(cli.command, &mut text)));
    let _ = stdout.write_all(text.as_bytes());
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| ConfigError::Other {
            key: THREADS_ENV.into(),
            message: format!("`{v}` is not a thread count"),
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))
}

fn execute(command: Command, stdout: &mut String) -> Result<(), CliError> {
    match command {
        Command::Predict { common, coupling, selection } => {
            let mut raw = load(&common)?;
            coupling.apply(&mut raw);
            selection.apply(&mut raw);
            predict(&raw.resolve()?, stdout)
        }
        Command::Regions { common, coupling, region } => {
            let mut raw = load(&common)?;
            coupling.apply(&mut raw);
            region.apply(&mut raw);
            regions(&raw.resolve()?, stdout)
        }
        Command::Sweep { common, coupling, selection, detection } => {
            let mut raw = load(&common)?;
            coupling.apply(&mut raw);
            selection.apply(&mut raw);
            detection.apply(&mut raw);
            sweep(&raw.resolve()?, stdout)
        }
        Command::Simulate { common, coupling, selection, detection } => {
            let mut raw = load(&common)?;
            coupling.apply(&mut raw);
            selection.apply(&mut raw);
            detection.apply(&mut raw);
            let mut cfg = raw.resolve()?;
            cfg.detection.get_or_insert_with(Default::default);
            simulate(&cfg, stdout)
        }
        Command::Calibrate { counts_h, counts_v, output } => calibrate(&counts_h, &counts_v, output.as_deref(), stdout),
    }
}

/// Metadata lines common to every output of `command`.
pub fn metadata(command: &str, config: &ExperimentConfig) -> Vec<(String, String)> {
    let echo = config.echo();
    let mut lines = vec![
        ("weakval_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("command".to_string(), command.to_string()),
    ];
    lines.extend(echo.iter().map(|(k, v)| (format!("config.{k}"), v.clone())));
    lines.push(("config_hash".to_string(), hash_lines(&echo)));
    lines
}

fn header(meta: &[(String, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
}

fn emit(text: &str, output: Option<&Path>, stdout: &mut String) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(file_error(path))?,
        None => stdout.push_str(text),
    }
    Ok(())
}

fn predict(cfg: &ExperimentConfig, stdout: &mut String) -> Result<(), CliError> {
    let coupling = cfg.require_coupling()?;
    let angles = cfg.require_postselection()?.angles(cfg.theta_i)?;
    let pre = PolarizationState::linear(cfg.theta_i)?;
    let mut text = header(&metadata("predict", cfg));
    for theta_f in angles {
        let post = PolarizationState::linear(theta_f)?;
        let aw_h = weak_value(Projector::H, &pre, &post)?.real(1e-12)?;
        let aw_v = weak_value(Projector::V, &pre, &post)?.real(1e-12)?;
        let exact = sequential_prediction(&pre, &post, &coupling, Order::Exact)?;
        let first = sequential_prediction(&pre, &post, &coupling, Order::First)?;
        let third = sequential_prediction(&pre, &post, &coupling, Order::Third)?;
        text += &format!("theta_f = {theta_f}\n");
        text += &format!("aw_h = {aw_h}\naw_v = {aw_v}\n");
        text += &format!("x = {}\ny = {}\np = {}\n", exact.x_centroid, exact.y_centroid, exact.postselection_probability);
        text += &format!("x_order1 = {}\ny_order1 = {}\n", first.x_centroid, first.y_centroid);
        text += &format!("x_order3 = {}\ny_order3 = {}\n", third.x_centroid, third.y_centroid);
    }
    text += &format!(
        "g_x = {}\ng_y = {}\nweak_regime_advisory = {}\n",
        coupling.g_x(),
        coupling.g_y(),
        coupling.weak_regime_advisory()
    );
    emit(&text, cfg.output.as_deref(), stdout)
}

const REGION_COLUMNS: [&str; 16] = [
    "axis", "a", "g", "epsilon", "region1_lo", "region1_hi", "order3_lo", "order3_hi",
    "region2_lower_lo", "region2_lower_hi", "region2_upper_lo", "region2_upper_hi",
    "region3_lower_lo", "region3_lower_hi", "region3_upper_lo", "region3_upper_hi",
];

fn regions(cfg: &ExperimentConfig, stdout: &mut String) -> Result<(), CliError> {
    let coupling = cfg.require_coupling()?;
    let mut text = header(&metadata("regions", cfg));
    text += &REGION_COLUMNS.join(",");
    text.push('\n');
    for (axis, a) in [("x", coupling.a_x()), ("y", coupling.a_y())] {
        if a == 0.0 {
            continue;
        }
        let r = validity_region(a, coupling.sigma(), cfg.epsilon, cfg.search)?;
        let pair = |i: Option<weakval_core::Interval>| match i {
            Some(i) => format!("{},{}", i.lo, i.hi),
            None => ",".to_string(),
        };
        text += &format!(
            "{axis},{a},{},{},{},{},{},{},{},{},{},{}\n",
            r.g,
            r.epsilon,
            r.region1.lo,
            r.region1.hi,
            r.order3_hull.lo,
            r.order3_hull.hi,
            pair(r.region2_lower),
            pair(r.region2_upper),
            pair(r.region3_lower),
            pair(r.region3_upper),
        );
    }
    emit(&text, cfg.output.as_deref(), stdout)
}

fn sweep(cfg: &ExperimentConfig, stdout: &mut String) -> Result<(), CliError> {
    let coupling = cfg.require_coupling()?;
    let angles = cfg.require_postselection()?.angles(cfg.theta_i)?;
    let rows = sweep_postselection(cfg.theta_i, &angles, &coupling, cfg.detection.as_ref())?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows, &metadata("sweep", cfg))?;
    emit(&String::from_utf8_lossy(&buf), cfg.output.as_deref(), stdout)
}

/// `path` with `_k` inserted before the extension.
fn indexed_path(path: &Path, k: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{k}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{k}"),
    };
    path.with_file_name(name)
}

fn simulate(cfg: &ExperimentConfig, stdout: &mut String) -> Result<(), CliError> {
    let coupling = cfg.require_coupling()?;
    let angles = cfg.require_postselection()?.angles(cfg.theta_i)?;
    let det = cfg.detection.unwrap_or_default();
    if angles.len() > 1 && cfg.output.is_none() {
        return Err(ConfigError::Missing {
            key: "output".into(),
            hint: "several count maps need a file name".into(),
        }
        .into());
    }
    let pre = PolarizationState::linear(cfg.theta_i)?;
    let meta = metadata("simulate", cfg);
    for (k, &theta_f) in angles.iter().enumerate() {
        let post = PolarizationState::linear(theta_f)?;
        let map = pixel_probability_map(&pre, &post, &coupling, &PixelGrid::default())?;
        let det_k = weakval_core::DetectionConfig { seed: det.seed ^ k as u64, ..det };
        let mut counts = simulate_counts(&map, &det_k)?;
        counts.metadata = meta.clone();
        counts.metadata.push(("map_index".into(), k.to_string()));
        counts.metadata.push(("theta_f".into(), theta_f.to_string()));
        counts.metadata.push(("truncation_mass".into(), map.truncation_mass.to_string()));
        match &cfg.output {
            None => stdout.push_str(&counts.to_csv()),
            Some(path) => {
                let path = if angles.len() == 1 { path.clone() } else { indexed_path(path, k) };
                fs::write(&path, counts.to_csv()).map_err(file_error(&path))?;
                stdout.push_str(&format!("{}: {} counts\n", path.display(), counts.total()));
            }
        }
    }
    Ok(())
}

fn calibrate(h: &Path, v: &Path, output: Option<&Path>, stdout: &mut String) -> Result<(), CliError> {
    let text_h = fs::read_to_string(h).map_err(file_error(h))?;
    let text_v = fs::read_to_string(v).map_err(file_error(v))?;
    let parse = |text: &str, path: &Path| {
        CountMap::from_csv(text).map_err(|source| CliError::Input { path: path.to_path_buf(), source })
    };
    let cal = calibrate_shifts(&parse(&text_h, h)?, &parse(&text_v, v)?)?;
    let inputs = vec![
        ("counts_h".to_string(), h.display().to_string()),
        ("counts_v".to_string(), v.display().to_string()),
    ];
    let mut meta = vec![
        ("weakval_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("command".to_string(), "calibrate".to_string()),
    ];
    meta.extend(inputs);
    meta.push((
        "input_hash".to_string(),
        hash_lines(&[("counts_h".into(), text_h), ("counts_v".into(), text_v)]),
    ));
    let mut text = header(&meta);
    text += &format!(
        "a_x = {}\na_x_err = {}\na_y = {}\na_y_err = {}\n",
        cal.a_x, cal.a_x_err, cal.a_y, cal.a_y_err
    );
    if let Some(path) = output {
        fs::write(path, &text).map_err(file_error(path))?;
    }
    stdout.push_str(&text);
    Ok(())
}
