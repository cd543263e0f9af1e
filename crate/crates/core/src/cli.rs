//! Command-line pipelines. Each subcommand writes one JSON report.
//!
//! Exit codes: 0 when every check passes, 1 when a certificate fails,
//! 2 on input errors.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::faithful::{faithful_representation, separation_certificate, FaithfulError, NeighborhoodSpec};
use crate::gns::{gns_build, GnsError, GnsOptions, DEFAULT_RANK_TOL};
use crate::isometry::{isometry_group, IsometryGroup};
use crate::kernel::{
    bochner_self_duality_check, gram_on_points, verify_gaussian_psd, KernelFunction, PsdReport, TrialFailure,
    DEFAULT_PSD_TOL,
};
use crate::metric::{load_space, FiniteMetricSpace, Format};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Validate a metric space file.
    Validate,
    /// List the isometry group.
    Isometries,
    /// Check positivity of a kernel's Gram matrix on the input space, or on
    /// random Euclidean clouds when no input is given.
    KernelCheck,
    /// Numerical Fourier transform of the Gaussian density.
    Bochner,
    /// GNS representation of the averaged orbit kernel.
    Gns,
    /// Separation certificate for one neighborhood.
    Separate,
    /// Faithful representation from the neighborhood family.
    Faithful,
    /// Every stage on one input.
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    Gaussian,
    Table(PathBuf),
}

impl std::str::FromStr for KernelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "gaussian" {
            Ok(Self::Gaussian)
        } else if let Some(path) = s.strip_prefix("table:") {
            Ok(Self::Table(PathBuf::from(path)))
        } else {
            Err(format!("unknown kernel {s:?}, expected gaussian or table:<path>"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Basepoints {
    All,
    List(Vec<usize>),
}

impl std::str::FromStr for Basepoints {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(Self::All);
        }
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad basepoint {t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::List)
    }
}

#[derive(Debug, Parser)]
#[command(name = "isorep", version, about = "Unitary representations of finite isometry groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Metric space file (.json or .csv).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// `gaussian` or `table:<path>`.
    #[arg(long, global = true, default_value = "gaussian")]
    pub kernel: KernelChoice,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// `i,j,k` or `all`.
    #[arg(long, global = true)]
    pub basepoints: Option<Basepoints>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_PSD_TOL)]
    pub psd_tol: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Report path; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Dimension of random clouds for `kernel-check` without input.
    #[arg(long, global = true, default_value_t = 8)]
    pub dim: usize,
    /// Points per random cloud.
    #[arg(long, global = true, default_value_t = 12)]
    pub points: usize,
    #[arg(long, global = true, default_value_t = 100)]
    pub trials: usize,
    /// Comma-separated evaluation grid for `bochner`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    #[arg(long, global = true, default_value_t = 6.0)]
    pub halfwidth: f64,
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub psd_tol: f64,
    pub rank_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub kernel: KernelChoice,
    pub epsilon: Option<f64>,
    pub basepoints: Option<Basepoints>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub output_path: Option<PathBuf>,
    pub random_clouds: (usize, usize, usize),
    pub bochner: (Vec<f64>, f64, f64),
}

pub const BOCHNER_GRID: [f64; 7] = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0];
pub const BOCHNER_TOL: f64 = 1e-6;

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input_path: None,
            kernel: KernelChoice::Gaussian,
            epsilon: None,
            basepoints: None,
            seed: 42,
            tolerances: Tolerances { psd_tol: DEFAULT_PSD_TOL, rank_tol: DEFAULT_RANK_TOL },
            output_path: None,
            random_clouds: (8, 12, 100),
            bochner: (BOCHNER_GRID.to_vec(), 6.0, 1e-3),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let Tolerances { psd_tol, rank_tol } = self.tolerances;
        if !(psd_tol > 0.0 && rank_tol > 0.0) {
            return Err(CliError::Input("tolerances must be positive".into()));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(CliError::Input(format!("epsilon must be positive, got {eps}")));
            }
        }
        let (k, n, trials) = self.random_clouds;
        if k == 0 || n == 0 || trials == 0 {
            return Err(CliError::Input("dim, points and trials must be at least 1".into()));
        }
        let (_, h, step) = self.bochner;
        if !(h > 0.0 && step > 0.0) {
            return Err(CliError::Input("halfwidth and step must be positive".into()));
        }
        Ok(())
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        Self {
            command: cli.command,
            input_path: cli.input,
            kernel: cli.kernel,
            epsilon: cli.epsilon,
            basepoints: cli.basepoints,
            seed: cli.seed,
            tolerances: Tolerances { psd_tol: cli.psd_tol, rank_tol: cli.rank_tol },
            output_path: cli.output,
            random_clouds: (cli.dim, cli.points, cli.trials),
            bochner: (cli.grid.unwrap_or_else(|| BOCHNER_GRID.to_vec()), cli.halfwidth, cli.step),
        }
    }
}

/// A finished pipeline: the report and whether every check in it passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

/// Run a pipeline, write its report and return the exit code.
pub fn run(config: &RunConfig) -> i32 {
    match execute(config).and_then(|out| write_report(config.output_path.as_deref(), &out.report).map(|_| out)) {
        Ok(out) if out.pass => EXIT_PASS,
        Ok(_) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn write_report(path: Option<&Path>, report: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(input_err),
    }
}

pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    match config.command {
        Command::Validate => validate(&load(config)?),
        Command::Isometries => isometries(&group(&load(config)?)?),
        Command::KernelCheck => match &config.input_path {
            Some(_) => kernel_check(config, &load(config)?),
            None => Ok(random_cloud_check(config)),
        },
        Command::Bochner => Ok(bochner(config)),
        Command::Gns => gns(config, &Arc::new(group(&load(config)?)?)),
        Command::Separate => separate(config, &group(&load(config)?)?),
        Command::Faithful => faithful(config, &Arc::new(group(&load(config)?)?)),
        Command::Report => report(config),
    }
}

fn load(config: &RunConfig) -> Result<FiniteMetricSpace, CliError> {
    let path = config
        .input_path
        .as_deref()
        .ok_or_else(|| CliError::Input("--input is required for this command".into()))?;
    load_space(path, Format::from_path(path)).map_err(input_err)
}

fn group(space: &FiniteMetricSpace) -> Result<IsometryGroup, CliError> {
    isometry_group(space).map_err(input_err)
}

fn kernel(config: &RunConfig) -> Result<KernelFunction, CliError> {
    match &config.kernel {
        KernelChoice::Gaussian => Ok(KernelFunction::gaussian()),
        KernelChoice::Table(path) => KernelFunction::load_table(path).map_err(input_err),
    }
}

fn spec(config: &RunConfig, space: &FiniteMetricSpace) -> Result<NeighborhoodSpec, CliError> {
    let default = NeighborhoodSpec::default_for(space);
    let basepoints = match &config.basepoints {
        None | Some(Basepoints::All) => default.basepoints().to_vec(),
        Some(Basepoints::List(list)) => list.clone(),
    };
    NeighborhoodSpec::new(space, basepoints, config.epsilon.unwrap_or(default.epsilon())).map_err(input_err)
}

fn gns_options(config: &RunConfig) -> GnsOptions {
    GnsOptions {
        rank_tol: config.tolerances.rank_tol,
        psd_tol: config.tolerances.psd_tol,
    }
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("reports serialize")
}

fn validate(space: &FiniteMetricSpace) -> Result<Outcome, CliError> {
    Ok(Outcome {
        report: json!({
            "command": "validate",
            "points": space.len(),
            "labels": space.labels(),
            "diameter": space.diameter(),
            "min_distance": space.min_distance(),
            "pass": true,
        }),
        pass: true,
    })
}

fn isometries(group: &IsometryGroup) -> Result<Outcome, CliError> {
    let elements: Vec<String> = group.elements().iter().map(ToString::to_string).collect();
    Ok(Outcome {
        report: json!({
            "command": "isometries",
            "points": group.space().len(),
            "order": group.order(),
            "elements": elements,
            "pass": true,
        }),
        pass: true,
    })
}

fn kernel_check(config: &RunConfig, space: &FiniteMetricSpace) -> Result<Outcome, CliError> {
    let p = kernel(config)?;
    let all: Vec<usize> = (0..space.len()).collect();
    let mut gram = gram_on_points(&p, space, &all).map_err(input_err)?;
    let tol = config.tolerances.psd_tol;
    let check = gram.check_psd(tol).map_err(input_err)?;
    let admissibility = p.admissibility();
    let samples: Vec<f64> = space.matrix().iter().flatten().copied().collect();
    let bounded = p.bounded_on(&samples);
    let psd = PsdReport {
        claim: format!("{} gram matrix on the input space is positive semidefinite", p.name()),
        trials: 1,
        failures: if check.is_psd {
            Vec::new()
        } else {
            vec![TrialFailure { trial: 0, min_eigenvalue: check.min_eigenvalue }]
        },
        min_eigenvalue_overall: check.min_eigenvalue,
        tolerance: tol,
    };
    let pass = check.is_psd && admissibility.p0_is_one && bounded;
    let mut report = to_value(&psd);
    report["command"] = json!("kernel-check");
    report["kernel"] = json!(p.name());
    report["admissibility"] = to_value(&admissibility);
    report["bounded"] = json!(bounded);
    report["gram"] = json!(gram.to_rows());
    report["pass"] = json!(pass);
    Ok(Outcome { report, pass })
}

fn random_cloud_check(config: &RunConfig) -> Outcome {
    let (k, n, trials) = config.random_clouds;
    let r = verify_gaussian_psd(k, n, trials, config.seed, config.tolerances.psd_tol);
    let pass = r.passed();
    let mut report = to_value(&r);
    report["command"] = json!("kernel-check");
    report["dim"] = json!(k);
    report["points"] = json!(n);
    report["seed"] = json!(config.seed);
    report["pass"] = json!(pass);
    Outcome { report, pass }
}

fn bochner(config: &RunConfig) -> Outcome {
    let (grid, halfwidth, step) = &config.bochner;
    let r = bochner_self_duality_check(grid, *halfwidth, *step, BOCHNER_TOL);
    let pass = r.pass;
    let mut report = to_value(&r);
    report["command"] = json!("bochner");
    Outcome { report, pass }
}

/// Certificate failures become failing reports; everything else is an input error.
fn failure(command: &str, e: impl std::fmt::Display) -> Outcome {
    Outcome {
        report: json!({ "command": command, "error": e.to_string(), "pass": false }),
        pass: false,
    }
}

fn gns(config: &RunConfig, group: &Arc<IsometryGroup>) -> Result<Outcome, CliError> {
    let p = kernel(config)?;
    let spec = spec(config, group.space())?;
    let t = crate::faithful::averaged_kernel(&p, group.space(), spec.basepoints()).map_err(input_err)?;
    match gns_build(group, &t, gns_options(config)) {
        Ok(rep) => {
            let pass = rep.verify();
            let mut report = to_value(&rep.to_json());
            report["command"] = json!("gns");
            report["basepoints"] = json!(spec.basepoints());
            report["reconstruction_tol"] = json!(rep.reconstruction_tol());
            report["pass"] = json!(pass);
            Ok(Outcome { report, pass })
        }
        Err(e @ (GnsError::NotPsd { .. } | GnsError::RankDeficientTranslation { .. })) => Ok(failure("gns", e)),
        Err(e) => Err(input_err(e)),
    }
}

fn separate(config: &RunConfig, group: &IsometryGroup) -> Result<Outcome, CliError> {
    let p = kernel(config)?;
    let spec = spec(config, group.space())?;
    match separation_certificate(group, &p, &spec) {
        Ok(c) => {
            let mut report = to_value(&c);
            report["command"] = json!("separate");
            Ok(Outcome { report, pass: c.pass })
        }
        Err(e @ FaithfulError::NoGapCertified { .. }) => Ok(failure("separate", e)),
        Err(e) => Err(input_err(e)),
    }
}

fn faithful(config: &RunConfig, group: &Arc<IsometryGroup>) -> Result<Outcome, CliError> {
    let p = kernel(config)?;
    let spec = spec(config, group.space())?;
    match faithful_representation(group, &p, &[spec], gns_options(config)) {
        Ok(out) => {
            let mut report = to_value(&out.report);
            report["command"] = json!("faithful");
            report["certificates"] = to_value(out.rep.certificates());
            Ok(Outcome { report, pass: out.report.pass })
        }
        Err(
            e @ (FaithfulError::NoGapCertified { .. }
            | FaithfulError::Gns(GnsError::NotPsd { .. } | GnsError::RankDeficientTranslation { .. })),
        ) => Ok(failure("faithful", e)),
        Err(e) => Err(input_err(e)),
    }
}

fn report(config: &RunConfig) -> Result<Outcome, CliError> {
    let space = load(config)?;
    let group = Arc::new(group(&space)?);
    let stages = [
        ("validate", validate(&space)?),
        ("isometries", isometries(&group)?),
        ("kernel_check", kernel_check(config, &space)?),
        ("gns", gns(config, &group)?),
        ("separate", separate(config, &group)?),
        ("faithful", faithful(config, &group)?),
    ];
    let pass = stages.iter().all(|(_, o)| o.pass);
    let mut report = serde_json::Map::new();
    report.insert("command".into(), json!("report"));
    for (name, outcome) in stages {
        report.insert(name.into(), outcome.report);
    }
    report.insert("pass".into(), json!(pass));
    Ok(Outcome { report: Value::Object(report), pass })
}
