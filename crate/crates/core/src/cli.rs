//! Command-line front end.
//!
//! Every command writes plain CSV data files with a `#`-commented header
//! that embeds the run configuration, plus a JSON sidecar at
//! `<output>.json`. Nothing time- or host-dependent is written, so reruns
//! with the same configuration produce identical bytes.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::density::{
    default_grid, empirical_cdf, reflection_kde, root_transform, sheather_jones_bandwidth,
    untransform_density, volume_grid, Bandwidth, BandwidthMethod, DensityEstimate, Scale,
};
use crate::error::{Error, Result};
use crate::geometry::{builtin_body, io::read_body, BodyKind, BuiltinShape, ConvexBody, Dim};
use crate::oracles::{ball_section_cdf, square_chord_cdf};
use crate::rng::RngStream;
use crate::sampler::{acceptance_estimate, sample_iur_sections, with_workers, SectionSample};
use crate::stats::ks_one_sample;
use crate::stereology::{npmle_em, unbias, ReferenceDensity, SizeDistribution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

const WORKERS_ENV: &str = "SECTION_LAB_WORKERS";
const MEAN_WIDTH_NODES: usize = 200_000;
/// Two-sample KS threshold for the invariance trials at 10^5 draws per side.
const INVARIANCE_KS_AT_1E5: f64 = 0.0122;

#[derive(Parser, Debug)]
#[command(name = "section-lab", version, about = "Random plane sections of convex bodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw IUR section volumes and write them one per line.
    Sample(CommonArgs),
    /// Kernel estimate of the section-volume density.
    Density(CommonArgs),
    /// Empirical distribution function of the section volumes.
    Ecdf(CommonArgs),
    /// Estimate the length-biased size distribution from observed profile sizes.
    Unfold(UnfoldArgs),
    /// Compare sampler output against closed forms and invariances.
    Validate(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Built-in shape name or path to a JSON body file.
    #[arg(long)]
    pub shape: String,
    /// Rescale a built-in shape to unit volume.
    #[arg(long)]
    pub normalize_volume: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output data file; a JSON sidecar is written next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    pub grid_points: usize,
    /// Fixed bandwidth instead of Sheather–Jones.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value_t = ScaleArg::Root)]
    pub scale: ScaleArg,
    /// Worker threads. Results do not depend on this.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct UnfoldArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Observed root-scale profile sizes, one per line.
    #[arg(long)]
    pub observations: PathBuf,
    /// Also write the estimate with the length bias removed.
    #[arg(long)]
    pub unbiased: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleArg {
    Root,
    Volume,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Sample,
    Density,
    Ecdf,
    Unfold,
    Validate,
}

/// Full description of one run. Embedded in every output file.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub shape: String,
    pub normalize_volume: bool,
    pub n: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub grid_points: usize,
    pub bandwidth: Option<f64>,
    pub scale: ScaleArg,
    pub observations: Option<PathBuf>,
    pub unbiased_output: Option<PathBuf>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl RunConfig {
    fn from_common(command: CommandKind, a: CommonArgs) -> Self {
        RunConfig {
            command,
            shape: a.shape,
            normalize_volume: a.normalize_volume,
            n: a.n,
            seed: a.seed,
            output: a.output,
            grid_points: a.grid_points,
            bandwidth: a.bandwidth,
            scale: a.scale,
            observations: None,
            unbiased_output: None,
            tol: None,
            max_iter: None,
            workers: a.workers,
        }
    }

    pub fn from_command(command: Command) -> Self {
        match command {
            Command::Sample(a) => Self::from_common(CommandKind::Sample, a),
            Command::Density(a) => Self::from_common(CommandKind::Density, a),
            Command::Ecdf(a) => Self::from_common(CommandKind::Ecdf, a),
            Command::Validate(a) => Self::from_common(CommandKind::Validate, a),
            Command::Unfold(u) => {
                let mut c = Self::from_common(CommandKind::Unfold, u.common);
                c.observations = Some(u.observations);
                c.unbiased_output = u.unbiased;
                c.tol = Some(u.tol);
                c.max_iter = Some(u.max_iter);
                c
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidArgument("--n must be at least 1".into()));
        }
        if self.grid_points < 16 {
            return Err(Error::InvalidArgument("--grid-points must be at least 16".into()));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::NonPositiveBandwidth(h));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument("--workers must be at least 1".into()));
        }
        Ok(())
    }

    fn config_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// One line of `validate` output.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, statistic: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            statistic,
            threshold,
            passed: statistic <= threshold,
        }
    }

    fn at_least(name: &str, statistic: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            statistic,
            threshold,
            passed: statistic >= threshold,
        }
    }
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

enum ShapeSource {
    Builtin(BuiltinShape),
    File,
}

fn resolve_shape(name: &str, normalize: bool) -> Result<(ConvexBody, ShapeSource)> {
    if let Ok(shape) = BuiltinShape::from_str(name) {
        return Ok((builtin_body(shape, normalize), ShapeSource::Builtin(shape)));
    }
    let path = Path::new(name);
    if path.is_file() {
        let body = read_body(path)?;
        let body = if normalize {
            let v = body.volume();
            let exp = 1.0 / body.dim().value() as f64;
            body.scaled(v.powf(-exp))?
        } else {
            body
        };
        return Ok((body, ShapeSource::File));
    }
    Err(Error::InvalidArgument(format!(
        "'{name}' is neither a built-in shape nor a readable body file"
    )))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn output_path(config: &RunConfig, default: &str) -> PathBuf {
    config.output.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn sample_meta(s: &SectionSample) -> serde_json::Value {
    json!({
        "body_label": s.body_label,
        "dim": s.dim,
        "design": s.design,
        "seed": s.seed,
        "n_proposed": s.n_proposed,
        "n_accepted": s.n_accepted,
        "n_zero": s.n_zero,
    })
}

/// Reads one number per line. Blank lines, `#` comments, and a single
/// non-numeric header line are skipped; only the first comma-separated
/// field is used.
pub fn read_observations(path: &Path) -> Result<Vec<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if !header_seen && out.is_empty() => header_seen = true,
            Err(_) => {
                return Err(Error::InvalidArgument(format!(
                    "{}:{}: cannot parse '{field}' as a number",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(out)
}

fn bandwidth_for(x: &[f64], config: &RunConfig) -> Result<Bandwidth> {
    match config.bandwidth {
        Some(h) => Ok(Bandwidth {
            h,
            method: BandwidthMethod::UserSupplied,
        }),
        None => sheather_jones_bandwidth(x),
    }
}

fn run_sample(config: &RunConfig, body: &ConvexBody) -> Result<Outcome> {
    let sample = sample_iur_sections(body, config.n, RngStream::new(config.seed))?;
    let path = output_path(config, "sections.csv");
    let mut w = create(&path)?;
    sample.write_csv(&mut w, &[("config", config.config_json())])?;
    w.flush()?;
    let side = sidecar(&path);
    write_json(&side, &json!({ "config": config, "sample": sample_meta(&sample) }))?;
    Ok(Outcome {
        files: vec![path, side],
        checks: vec![],
    })
}

fn run_density(config: &RunConfig, body: &ConvexBody) -> Result<Outcome> {
    let sample = sample_iur_sections(body, config.n, RngStream::new(config.seed))?;
    let x = root_transform(&sample);
    let bw = bandwidth_for(&x, config)?;
    let root = reflection_kde(&x, bw.h, &default_grid(&x, bw.h, config.grid_points))?;
    let est: DensityEstimate = match config.scale {
        ScaleArg::Root => root,
        ScaleArg::Volume => {
            let grid = volume_grid(&root.grid, sample.dim, config.grid_points);
            untransform_density(&root, sample.dim, &grid)?
        }
    };
    let path = output_path(config, "density.csv");
    let mut w = create(&path)?;
    est.write_csv(
        &mut w,
        &[
            ("config", config.config_json()),
            ("bandwidth", bw.h.to_string()),
            ("bandwidth_method", serde_json::to_string(&bw.method)?),
        ],
    )?;
    w.flush()?;
    let side = sidecar(&path);
    write_json(
        &side,
        &json!({
            "config": config,
            "sample": sample_meta(&sample),
            "bandwidth_method": bw.method,
            "estimate": est,
        }),
    )?;
    Ok(Outcome {
        files: vec![path, side],
        checks: vec![],
    })
}

fn run_ecdf(config: &RunConfig, body: &ConvexBody) -> Result<Outcome> {
    let sample = sample_iur_sections(body, config.n, RngStream::new(config.seed))?;
    let values = match config.scale {
        ScaleArg::Root => root_transform(&sample),
        ScaleArg::Volume => sample.values.clone(),
    };
    let cdf = empirical_cdf(&values)?;
    let path = output_path(config, "ecdf.csv");
    let mut w = create(&path)?;
    cdf.write_csv(&mut w, &[("config", config.config_json())])?;
    w.flush()?;
    let side = sidecar(&path);
    write_json(
        &side,
        &json!({
            "config": config,
            "sample": sample_meta(&sample),
            "scale": if config.scale == ScaleArg::Root { Scale::RootScale } else { Scale::VolumeScale },
            "atoms": cdf.len(),
            "mean": cdf.mean(),
        }),
    )?;
    Ok(Outcome {
        files: vec![path, side],
        checks: vec![],
    })
}

fn run_unfold(config: &RunConfig, body: &ConvexBody) -> Result<Outcome> {
    let obs_path = config.observations.as_ref().expect("unfold has observations");
    let s_obs = read_observations(obs_path)?;
    let reference = sample_iur_sections(body, config.n, RngStream::new(config.seed))?;
    let g_s = match config.bandwidth {
        None => ReferenceDensity::from_sample(&reference, config.grid_points)?,
        Some(h) => {
            let x = root_transform(&reference);
            let est = reflection_kde(&x, h, &default_grid(&x, h, config.grid_points))?;
            let top = x.iter().copied().fold(0.0, f64::max);
            ReferenceDensity::from_estimate(&est, top)?
        }
    };
    let fit = npmle_em(
        &s_obs,
        &g_s,
        config.tol.unwrap_or(1e-8),
        config.max_iter.unwrap_or(5000),
    )?;

    let header = [
        ("config", config.config_json()),
        ("iterations", fit.iterations.to_string()),
        ("converged", fit.converged.to_string()),
        ("final_loglik", fit.final_loglik.to_string()),
    ];
    let path = output_path(config, "unfold.csv");
    let mut w = create(&path)?;
    fit.estimate.write_csv(&mut w, &header)?;
    w.flush()?;
    let mut files = vec![path.clone()];

    let mut unbiased_json = serde_json::Value::Null;
    if let Some(upath) = &config.unbiased_output {
        let SizeDistribution::Step(h) = unbias(&SizeDistribution::Step(fit.estimate.clone()))? else {
            unreachable!("unbiasing a step distribution gives a step distribution")
        };
        let mut w = create(upath)?;
        h.write_csv(&mut w, &header)?;
        w.flush()?;
        files.push(upath.clone());
        unbiased_json = serde_json::to_value(&h)?;
    }

    let side = sidecar(&path);
    write_json(
        &side,
        &json!({
            "config": config,
            "observations": s_obs.len(),
            "reference_sample": sample_meta(&reference),
            "reference_support_max": g_s.support_max(),
            "fit": fit,
            "unbiased": unbiased_json,
        }),
    )?;
    files.push(side);
    Ok(Outcome {
        files,
        checks: vec![],
    })
}

/// Uniform random rotation of the body's own dimension.
fn random_rotation(dim: Dim, rng: &mut rand_chacha::ChaCha8Rng) -> nalgebra::Matrix3<f64> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    match dim {
        Dim::Two => {
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::z_axis(), phi).into_inner()
        }
        Dim::Three => {
            let q = nalgebra::Quaternion::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            nalgebra::UnitQuaternion::from_quaternion(q)
                .to_rotation_matrix()
                .into_inner()
        }
    }
}

/// Number of seeded trials whose two-sample KS statistic between the body
/// and a transformed copy stays below `0.0122 sqrt(10^5 / n)`.
fn invariance_checks(body: &ConvexBody, n: usize, trials: u64, seed: u64) -> Result<Vec<Check>> {
    use crate::stats::ks_two_sample;
    let critical = INVARIANCE_KS_AT_1E5 * (1e5 / n as f64).sqrt();
    let mut counts = [0u64; 3];
    for t in 0..trials {
        let base = RngStream::with_stream(seed, 1000 + t);
        let mut g = base.child(0).generator();
        let reference = sample_iur_sections(body, n, base.child(1))?;

        let shift = nalgebra::Vector3::new(3.0, -2.0, if body.dim() == Dim::Three { 1.5 } else { 0.0 });
        let moved = sample_iur_sections(&body.translated(&shift)?, n, base.child(2))?;
        let rot = random_rotation(body.dim(), &mut g);
        let rotated = sample_iur_sections(
            &body.transformed(&rot, &nalgebra::Vector3::zeros())?,
            n,
            base.child(3),
        )?;
        let lambda = 1.7;
        let mut scaled = sample_iur_sections(&body.scaled(lambda)?, n, base.child(4))?;
        let factor = lambda.powi(body.dim().value() as i32 - 1);
        scaled.values.iter_mut().for_each(|v| *v /= factor);

        for (k, other) in [&moved, &rotated, &scaled].into_iter().enumerate() {
            if ks_two_sample(&reference.values, &other.values) < critical {
                counts[k] += 1;
            }
        }
    }
    let need = (trials as f64 * 0.9).ceil();
    Ok(["translation_invariance", "rotation_invariance", "scaling_invariance"]
        .iter()
        .zip(counts)
        .map(|(name, c)| Check::at_least(name, c as f64, need))
        .collect())
}

fn run_validate(config: &RunConfig, body: &ConvexBody, source: &ShapeSource) -> Result<Outcome> {
    let sample = sample_iur_sections(body, config.n, RngStream::new(config.seed))?;
    let n = sample.len() as f64;
    let ks_threshold = 5.0 / n.sqrt();
    let mut checks = Vec::new();

    let rate = acceptance_estimate(&sample)?;
    let center = body.centroid();
    let expected = body.mean_width(MEAN_WIDTH_NODES)?.value / (2.0 * body.enclosing_radius(&center));
    let sigma = (expected * (1.0 - expected) / sample.n_proposed as f64).sqrt();
    checks.push(Check::at_most(
        "acceptance_rate_deviation",
        (rate - expected).abs(),
        (5.0 * sigma).max(1e-12),
    ));

    if let (Dim::Three, BodyKind::Ball { radius, .. }) = (body.dim(), body.kind()) {
        let r = *radius;
        let d = ks_one_sample(&sample.values, |a| ball_section_cdf(a.clamp(0.0, std::f64::consts::PI * r * r), r).unwrap());
        checks.push(Check::at_most("ks_ball_section_law", d, ks_threshold));
    }
    if let ShapeSource::Builtin(BuiltinShape::Square) = source {
        if !config.normalize_volume {
            let d = ks_one_sample(&sample.values, square_chord_cdf);
            checks.push(Check::at_most("ks_square_chord_law", d, ks_threshold));
        }
    }
    let max = sample.values.iter().copied().fold(0.0, f64::max);
    let bound = match body.dim() {
        Dim::Two => body.diameter(),
        Dim::Three => std::f64::consts::PI * body.diameter().powi(2) / 4.0,
    };
    checks.push(Check::at_most("max_section_over_bound", max / bound, 1.0 + 1e-12));

    let trial_n = config.n.min(100_000);
    checks.extend(invariance_checks(body, trial_n, 20, config.seed)?);

    let mut outcome = Outcome {
        files: vec![],
        checks,
    };
    if let Some(path) = &config.output {
        write_json(path, &json!({ "config": config, "checks": outcome.checks }))?;
        outcome.files.push(path.clone());
    }
    Ok(outcome)
}

/// Executes one configured run.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.check()?;
    let go = || {
        let (body, source) = resolve_shape(&config.shape, config.normalize_volume)?;
        match config.command {
            CommandKind::Sample => run_sample(config, &body),
            CommandKind::Density => run_density(config, &body),
            CommandKind::Ecdf => run_ecdf(config, &body),
            CommandKind::Unfold => run_unfold(config, &body),
            CommandKind::Validate => run_validate(config, &body, &source),
        }
    };
    match config.workers {
        Some(w) => with_workers(w, go)?,
        None => go(),
    }
}

/// Exit code for an error: input problems are distinguished from
/// failures inside the pipeline.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_)
        | Error::InvalidBody(_)
        | Error::DegenerateInput(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::NonPositiveBandwidth(_) => EXIT_INPUT,
        _ => EXIT_FAILURE,
    }
}

fn report_error(kind: &str, message: &str, code: i32) {
    let body = json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{body}");
}

/// Parses arguments, runs, and reports. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            report_error("UsageError", e.to_string().trim(), EXIT_INPUT);
            return EXIT_INPUT;
        }
    };
    let config = RunConfig::from_command(cli.command);
    match run(&config) {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!(
                    "{} {} statistic={} threshold={}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.statistic,
                    c.threshold
                );
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed() {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            report_error(e.kind(), &e.to_string(), code);
            code
        }
    }
}
