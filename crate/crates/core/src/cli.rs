//! Command-line front end and the pipelines behind each command.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{read_json, DelayConfig, RunConfig, SampleConfig, SampleRef, SourceConfig};
use crate::error::{QoctError, Result};
use crate::extract::{
    alpha_from_null, attach_null, delta_from_ratio, find_dips, layer_report, null_at, null_residuals, ExtractionReport,
    NullResult, DEFAULT_MAX_WINDING, DEFAULT_PROMINENCE,
};
use crate::interferometer::{BeamSplitter, Interferogram, ReferenceArm, SampleResponse};
use crate::io::{self, Conventions, Sidecar, SpectrumInfo, SIDECAR_FORMAT};
use crate::presets;
use crate::sample::LayeredSample;

pub const THREADS_ENV: &str = "QOCT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "qoct",
    version,
    about = "Polarization-sensitive quantum OCT: simulate and analyse coincidence interferograms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate H and V scans and write the interferogram CSV and sidecar.
    Simulate(SimulateArgs),
    /// Analyse an interferogram: interfaces, retardance, and axis angle by nulling.
    Extract(ExtractArgs),
    /// Nulling search at one delay on a forward model.
    Null(NullArgs),
    /// List presets, or print one as a run configuration.
    Presets(PresetsArgs),
}

/// Where the forward model comes from.
#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    /// Built-in run (fig4, fig5).
    #[arg(long, conflicts_with_all = ["config", "sample"])]
    pub preset: Option<String>,
    /// Run configuration (JSON).
    #[arg(long, conflicts_with = "sample")]
    pub config: Option<PathBuf>,
    /// Sample description (JSON); used with the default source and delay grid.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    /// Source description (JSON), replacing the configured source.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Source spectral grid points.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Beam-splitter power reflectance |r|².
    #[arg(long)]
    pub bs_reflectance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// First delay on the c·τ/2 axis (μm).
    #[arg(long)]
    pub start_um: Option<f64>,
    /// Last delay (μm).
    #[arg(long)]
    pub stop_um: Option<f64>,
    /// Number of delay points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Seed recorded in the sidecar.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Interferogram CSV.
    #[arg(long, short, default_value = "interferogram.csv")]
    pub output: PathBuf,
    /// Sidecar JSON; defaults to the CSV path with a .json extension.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Interferogram CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Sidecar JSON; defaults to the CSV path with a .json extension.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Report JSON.
    #[arg(long, short, default_value = "report.json")]
    pub output: PathBuf,
    /// Minimum feature depth (normalized units).
    #[arg(long, default_value_t = DEFAULT_PROMINENCE)]
    pub prominence: f64,
    /// Highest winding number in the retardance branch list.
    #[arg(long, default_value_t = DEFAULT_MAX_WINDING)]
    pub max_winding: u32,
    /// Coarse nulling grid step (degrees).
    #[arg(long, default_value_t = 1.0)]
    pub step_deg: f64,
}

#[derive(Debug, Args)]
pub struct NullArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Delay on the c·τ/2 axis (μm) at which to null.
    #[arg(long)]
    pub ctau_um: f64,
    /// Coarse grid step (degrees).
    #[arg(long, default_value_t = 1.0)]
    pub step_deg: f64,
    /// Retardance (degrees); estimated from the H/V rates at the delay if absent.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_deg: Option<f64>,
    /// Report JSON.
    #[arg(long, short, default_value = "null.json")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PresetsArgs {
    pub name: Option<String>,
}

/// Forward run: rates, the model that produced them, and the sidecar.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub interferogram: Interferogram,
    pub sidecar: Sidecar,
    pub response: SampleResponse,
    pub sample: LayeredSample,
    pub beam_splitter: BeamSplitter,
}

/// Built forward model without a delay scan.
#[derive(Clone, Debug)]
pub struct Model {
    pub run: RunConfig,
    pub sample: LayeredSample,
    pub response: SampleResponse,
    pub beam_splitter: BeamSplitter,
    pub spectrum: SpectrumInfo,
    pub spectrum_data: crate::spdc::Spectrum,
}

/// Resolves the run configuration and inlines the sample.
pub fn resolve_run(args: &ModelArgs) -> Result<(RunConfig, Option<String>)> {
    let (mut run, preset) = match (&args.preset, &args.config, &args.sample) {
        (Some(name), _, _) => (presets::by_name(name)?, Some(name.clone())),
        (None, Some(path), _) => {
            let mut run: RunConfig = read_json(path)?;
            let sample = run.sample_config(path.parent())?;
            run.sample = SampleRef::Inline(sample);
            (run, None)
        }
        (None, None, Some(path)) => {
            let sample: SampleConfig = read_json(path)?;
            let mut run = presets::fig4();
            run.sample = SampleRef::Inline(sample);
            (run, None)
        }
        (None, None, None) => {
            return Err(QoctError::Argument(
                "one of --preset, --config or --sample is required".into(),
            ))
        }
    };
    if let Some(path) = &args.source {
        run.source = read_json::<SourceConfig>(path)?;
    }
    if let Some(points) = args.grid_points {
        run.source.set_grid_points(points);
    }
    if let Some(r) = args.bs_reflectance {
        run.beam_splitter_reflectance = r;
    }
    Ok((run, preset))
}

pub fn build_model(run: &RunConfig) -> Result<Model> {
    let spectrum = run.source.spectrum()?;
    let sample = run.sample_config(None)?.build(spectrum.omega0)?;
    let response = SampleResponse::new(&sample, &spectrum)?;
    Ok(Model {
        run: run.clone(),
        beam_splitter: run.beam_splitter()?,
        spectrum: SpectrumInfo::of(&spectrum),
        sample,
        response,
        spectrum_data: spectrum,
    })
}

/// H and V scans plus the sidecar describing them.
pub fn simulate(run: &RunConfig, preset: Option<&str>) -> Result<Simulation> {
    let model = build_model(run)?;
    let delays = run.delays.grid()?;
    let ig = model.response.interferogram(&model.beam_splitter, &delays)?;

    let symmetric = SampleResponse::new(&model.sample, &model.spectrum_data.symmetrized())?;
    let ig_sym = symmetric.interferogram(&model.beam_splitter, &delays)?;
    let symmetrized_rt_difference = ig
        .r_t
        .iter()
        .zip(&ig_sym.r_t)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let non_commuting_layers = model.sample.non_commuting_layers(model.spectrum.omega0)?;
    let mut diagnostics = Vec::new();
    if !non_commuting_layers.is_empty() {
        diagnostics.push(format!(
            "layers {non_commuting_layers:?} have non-commuting matrices; return pass uses the forward product order"
        ));
    }
    if ig.clipped > 0 {
        diagnostics.push(format!(
            "{} rate samples below -1e-9 of Lambda0 were clipped to zero",
            ig.clipped
        ));
    }
    if ig.vanishing {
        diagnostics.push("sample reflects nothing; all rates set to zero".into());
    }
    let sidecar = Sidecar {
        format: SIDECAR_FORMAT.into(),
        preset: preset.map(str::to_owned),
        seed: run.seed,
        config: run.clone(),
        lambda0_h: ig.lambda0_h,
        lambda0_v: ig.lambda0_v,
        visibility: ig.visibility,
        beam_splitter_reflectance: run.beam_splitter_reflectance,
        points: ig.len(),
        spectrum: model.spectrum.clone(),
        conventions: Conventions::default(),
        raw_ctau_um: ig.raw_delays().iter().map(|x| x * 1e6).collect(),
        clipped: ig.clipped,
        vanishing: ig.vanishing,
        non_commuting_layers,
        symmetrized_rt_difference,
        diagnostics,
    };
    Ok(Simulation {
        interferogram: ig,
        sidecar,
        response: model.response,
        sample: model.sample,
        beam_splitter: model.beam_splitter,
    })
}

/// Dip analysis of a stored interferogram, then a null at the deepest
/// interface on the model recorded in the sidecar.
pub fn extract_files(
    csv: &Path,
    sidecar: &Path,
    prominence: f64,
    max_winding: u32,
    coarse_step: f64,
) -> Result<ExtractionReport> {
    let (ig, meta) = io::load_interferogram(csv, sidecar)?;
    let features = find_dips(&ig, prominence);
    let mut report = layer_report(&ig, &features, max_winding)?;
    let model = build_model(&meta.config)?;
    let x_star = report.interfaces.last().expect("non-empty").position;
    let null = null_at(&model.response, &model.beam_splitter, x_star, coarse_step)?;
    attach_null(&mut report, &null)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullReport {
    pub ctau_um: f64,
    pub theta: f64,
    pub phi: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub rate: f64,
    pub coarse_rate: f64,
    pub evaluations: usize,
    pub delta: f64,
    pub delta_from_rates: bool,
    pub alpha: f64,
    pub alpha_deg: f64,
    pub residuals: [f64; 2],
}

/// Null at `x_star` (m). Without `delta`, the retardance comes from the H
/// and V rates at the same delay.
pub fn null_report(model: &Model, x_star: f64, coarse_step: f64, delta: Option<f64>) -> Result<NullReport> {
    let null: NullResult = null_at(&model.response, &model.beam_splitter, x_star, coarse_step)?;
    let (delta, from_rates) = match delta {
        Some(d) => (d, false),
        None => {
            let v = model.beam_splitter.visibility();
            let tau = crate::interferometer::rate_delay(x_star);
            let rate = |arm: ReferenceArm| model.response.coincidence_rate(&arm, &model.beam_splitter, tau, true);
            let lh = (1.0 - rate(ReferenceArm::horizontal())) / v;
            let lv = (1.0 - rate(ReferenceArm::vertical())) / v;
            (delta_from_ratio(lv, lh)?, true)
        }
    };
    let alpha = alpha_from_null(null.theta, null.phi, delta)?;
    Ok(NullReport {
        ctau_um: x_star * 1e6,
        theta: null.theta,
        phi: null.phi,
        theta_deg: null.theta.to_degrees(),
        phi_deg: null.phi.to_degrees(),
        rate: null.rate,
        coarse_rate: null.coarse_rate,
        evaluations: null.evaluations,
        delta,
        delta_from_rates: from_rates,
        alpha,
        alpha_deg: alpha.to_degrees(),
        residuals: null_residuals(null.theta, null.phi, alpha, delta),
    })
}

fn apply_delay_overrides(delays: &mut DelayConfig, args: &SimulateArgs) {
    if let Some(v) = args.start_um {
        delays.start_um = v;
    }
    if let Some(v) = args.stop_um {
        delays.stop_um = v;
    }
    if let Some(v) = args.points {
        delays.points = v;
    }
}

fn coarse_step(step_deg: f64) -> Result<f64> {
    if !(step_deg > 0.0 && step_deg < 90.0) {
        return Err(QoctError::Argument(format!(
            "--step-deg must lie in (0, 90), got {step_deg}"
        )));
    }
    Ok(step_deg.to_radians())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let (mut run, preset) = resolve_run(&args.model)?;
    apply_delay_overrides(&mut run.delays, args);
    if args.seed.is_some() {
        run.seed = args.seed;
    }
    let sim = simulate(&run, preset.as_deref())?;
    let sidecar = args
        .sidecar
        .clone()
        .unwrap_or_else(|| io::default_sidecar_path(&args.output));
    io::write_csv(&sim.interferogram, &args.output)?;
    io::write_json(&sim.sidecar, &sidecar)?;
    Ok(format!(
        "wrote {} ({} points) and {}",
        args.output.display(),
        sim.interferogram.len(),
        sidecar.display()
    ))
}

fn cmd_extract(args: &ExtractArgs) -> Result<String> {
    let sidecar = args
        .sidecar
        .clone()
        .unwrap_or_else(|| io::default_sidecar_path(&args.input));
    let report = extract_files(
        &args.input,
        &sidecar,
        args.prominence,
        args.max_winding,
        coarse_step(args.step_deg)?,
    )?;
    io::write_json(&report, &args.output)?;
    Ok(format!(
        "{} interface(s); delta = {:.6} rad; alpha = {:.6} rad; wrote {}",
        report.interfaces.len(),
        report.delta_est.unwrap_or(f64::NAN),
        report.alpha_est.unwrap_or(f64::NAN),
        args.output.display()
    ))
}

fn cmd_null(args: &NullArgs) -> Result<String> {
    let (run, _) = resolve_run(&args.model)?;
    let model = build_model(&run)?;
    let report = null_report(
        &model,
        args.ctau_um * 1e-6,
        coarse_step(args.step_deg)?,
        args.delta_deg.map(f64::to_radians),
    )?;
    io::write_json(&report, &args.output)?;
    Ok(format!(
        "theta = {:.6} deg, phi = {:.6} deg, alpha = {:.6} deg; wrote {}",
        report.theta_deg,
        report.phi_deg,
        report.alpha_deg,
        args.output.display()
    ))
}

fn cmd_presets(args: &PresetsArgs) -> Result<String> {
    match &args.name {
        None => Ok(presets::NAMES.join("\n")),
        Some(name) => Ok(io::to_json(&presets::by_name(name)?)?.trim_end().to_owned()),
    }
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Null(a) => cmd_null(a),
        Command::Presets(a) => cmd_presets(a),
    }
}

/// Sizes the global rayon pool from `QOCT_THREADS`, if set.
pub fn configure_threads(value: Option<&str>) -> Result<()> {
    let Some(text) = value else { return Ok(()) };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| QoctError::Argument(format!("{THREADS_ENV} must be a positive integer, got '{text}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| QoctError::Argument(format!("{THREADS_ENV}: {e}")))
}
