//! Batch front end: criterion analysis, simulation with characteristic
//! tracing, and parameter sweeps, driven by a JSON configuration document.
//!
//! Outputs are plain CSV and JSON, written deterministically: re-running a
//! command with the same configuration reproduces byte-identical files.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::characteristics::{lyapunov_monotone, CharacteristicTrace, FlowSampler};
use crate::criteria::{battery, blowup_bound, brandolese, BlowupBound, CriterionVerdict, Witness};
use crate::error::RodError;
use crate::field::{fmt_g17, potential, sample_at, Grid, GridFunction};
use crate::params::{beta_of, RodParameters};
use crate::profiles;
use crate::solver::{run, RunStatus, SimulationConfig};

/// Errors of the command layer, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<RodError> for CliError {
    fn from(e: RodError) -> Self {
        match e {
            RodError::NonFinite(m) => CliError::Numerical(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gamma: Option<f64>,
    pub grid: GridConfig,
    pub profile: Option<ProfileConfig>,
    pub solver: Option<SolverSection>,
    pub characteristics: Option<CharacteristicsSection>,
    pub gamma_list: Option<Vec<f64>>,
    pub profile_list: Option<Vec<ProfileConfig>>,
    pub beta_table: Option<BetaTableConfig>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt_initial: Option<f64>,
    pub cfl_factor: Option<f64>,
    pub t_end: Option<f64>,
    pub frame_stride: Option<usize>,
    pub blowup_slope_threshold: Option<f64>,
    pub dealias: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsSection {
    pub seeds: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BetaTableConfig {
    List {
        gammas: Vec<f64>,
    },
    Range {
        min: f64,
        max: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Peakon {
        amplitude: f64,
        #[serde(default)]
        center: f64,
    },
    Gaussian {
        amplitude: f64,
        #[serde(default)]
        center: f64,
        width: f64,
    },
    OddSine {
        amplitude: f64,
        #[serde(default = "default_mode")]
        mode: u32,
    },
    Extremal {
        gamma: Option<f64>,
    },
    FromPotential {
        components: Vec<BumpComponent>,
    },
    SolitaryWave {
        speed: f64,
        gamma: Option<f64>,
    },
    Expression {
        formula: String,
    },
}

fn default_mode() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpComponent {
    pub amplitude: f64,
    #[serde(default)]
    pub center: f64,
    pub width: f64,
}

impl ProfileConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ProfileConfig::Peakon { .. } => "peakon",
            ProfileConfig::Gaussian { .. } => "gaussian",
            ProfileConfig::OddSine { .. } => "odd_sine",
            ProfileConfig::Extremal { .. } => "extremal",
            ProfileConfig::FromPotential { .. } => "from_potential",
            ProfileConfig::SolitaryWave { .. } => "solitary_wave",
            ProfileConfig::Expression { .. } => "expression",
        }
    }

    /// Builds the datum; `run_gamma` supplies the model parameter for the
    /// kinds that default to it.
    pub fn build(&self, run_gamma: Option<f64>, grid: Grid) -> Result<GridFunction, CliError> {
        let need_gamma = |explicit: Option<f64>| -> Result<f64, CliError> {
            explicit.or(run_gamma).ok_or_else(|| {
                CliError::Config("profile needs a gamma (none in profile or run config)".into())
            })
        };
        let f = match *self {
            ProfileConfig::Peakon { amplitude, center } => {
                profiles::peakon(amplitude, center, grid)?
            }
            ProfileConfig::Gaussian {
                amplitude,
                center,
                width,
            } => profiles::gaussian(amplitude, center, width, grid)?,
            ProfileConfig::OddSine { amplitude, mode } => {
                profiles::odd_sine(amplitude, mode, grid)?
            }
            ProfileConfig::Extremal { gamma } => {
                profiles::extremal_profile(need_gamma(gamma)?, grid)?
            }
            ProfileConfig::FromPotential { ref components } => {
                if components.is_empty() {
                    return Err(CliError::Config(
                        "from_potential needs at least one component".into(),
                    ));
                }
                let mut y = GridFunction::zeros(grid);
                for c in components {
                    let bump = profiles::gaussian(c.amplitude, c.center, c.width, grid)?;
                    y = crate::field::zip_map(&y, &bump, |a, b| a + b);
                }
                profiles::from_potential(&y)
            }
            ProfileConfig::SolitaryWave { speed, gamma } => {
                profiles::solitary_wave(need_gamma(gamma)?, speed, grid)?
            }
            ProfileConfig::Expression { ref formula } => {
                profiles::expression_profile(formula, grid)?
            }
        };
        Ok(f)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
}

fn build_grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    Ok(Grid::new(cfg.grid.l, cfg.grid.n)?)
}

fn build_solver_config(
    cfg: &RunConfig,
    gamma: f64,
    grid: Grid,
) -> Result<SimulationConfig, CliError> {
    let section = cfg.solver.as_ref().copied().unwrap_or(SolverSection {
        dt_initial: None,
        cfl_factor: None,
        t_end: None,
        frame_stride: None,
        blowup_slope_threshold: None,
        dealias: None,
    });
    let t_end = section
        .t_end
        .ok_or_else(|| CliError::Config("solver.t_end is required".into()))?;
    let mut sc = SimulationConfig::new(gamma, grid, t_end);
    if let Some(cfl) = section.cfl_factor {
        sc.cfl_factor = cfl;
        sc.dt_initial = cfl * grid.spacing();
    }
    if let Some(dt) = section.dt_initial {
        sc.dt_initial = dt;
    }
    if let Some(stride) = section.frame_stride {
        sc.frame_stride = stride;
    }
    if let Some(thr) = section.blowup_slope_threshold {
        sc.blowup_slope_threshold = thr;
    }
    if let Some(d) = section.dealias {
        sc.dealias = d;
    }
    sc.validate()?;
    Ok(sc)
}

fn out_dir(cfg: &RunConfig, cli_out: &Path) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| cli_out.to_path_buf())
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct AnalyzeReport {
    gamma: f64,
    criteria: Vec<CriterionVerdict>,
    blowup_bound: Option<BlowupBound>,
}

/// Runs the criterion battery on the configured datum and writes
/// `criteria.json`.
pub fn analyze(cfg: &RunConfig, cli_out: &Path, quiet: bool) -> Result<(), CliError> {
    let gamma = cfg
        .gamma
        .ok_or_else(|| CliError::Config("analyze needs a gamma".into()))?;
    let grid = build_grid(cfg)?;
    let profile = cfg
        .profile
        .as_ref()
        .ok_or_else(|| CliError::Config("analyze needs a profile".into()))?;
    let u0 = profile.build(Some(gamma), grid)?;

    let criteria = battery(&u0, gamma);
    let bound = criteria
        .iter()
        .find(|v| v.name == "brandolese" && v.triggered)
        .and_then(|v| match v.witness {
            Some(Witness::Point(x0)) => blowup_bound(&u0, gamma, x0).ok(),
            _ => None,
        });

    let dir = out_dir(cfg, cli_out);
    fs::create_dir_all(&dir)?;
    let report = AnalyzeReport {
        gamma,
        criteria,
        blowup_bound: bound,
    };
    write_json(&dir.join("criteria.json"), &report)?;
    if !quiet {
        let n = report.criteria.iter().filter(|v| v.triggered).count();
        println!(
            "analyze: {} criteria evaluated, {} triggered -> {}",
            report.criteria.len(),
            n,
            dir.join("criteria.json").display()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Summary {
    status: RunStatus,
    #[serde(rename = "estimated_T_star")]
    estimated_t_star: Option<f64>,
    #[serde(rename = "T_upper")]
    t_upper: Option<f64>,
    monotonicity_ok: Option<bool>,
    identity_residual_max: Option<f64>,
}

/// Runs the solver, traces the configured characteristics and writes frames,
/// `series.csv`, per-seed trace CSVs and `summary.json`.
pub fn simulate(
    cfg: &RunConfig,
    cli_out: &Path,
    seed_grid: Option<usize>,
    quiet: bool,
) -> Result<(), CliError> {
    let gamma = cfg
        .gamma
        .ok_or_else(|| CliError::Config("simulate needs a gamma".into()))?;
    let grid = build_grid(cfg)?;
    let profile = cfg
        .profile
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs a profile".into()))?;
    let u0 = profile.build(Some(gamma), grid)?;
    let sc = build_solver_config(cfg, gamma, grid)?;

    let result = run(&sc, &u0)?;
    let dir = out_dir(cfg, cli_out);
    result.write_outputs(&dir)?;

    let seeds: Vec<f64> = match seed_grid {
        Some(n) => uniform_seeds(grid, n),
        None => cfg
            .characteristics
            .as_ref()
            .map(|c| c.seeds.clone())
            .unwrap_or_default(),
    };

    let beta = beta_of(gamma).ok();
    let mut traces: Vec<CharacteristicTrace> = Vec::new();
    if !seeds.is_empty() && result.frames.len() >= 2 {
        let sampler = FlowSampler::new(&result)?;
        let y0 = potential(&result.frames[0].1)?;
        for (k, &seed) in seeds.iter().enumerate() {
            let mut trace = sampler.trace(gamma, seed);
            if let Some(beta) = beta {
                trace.lyapunov_ab(beta);
            }
            trace.flow_identity_residual(gamma, sample_at(&y0, seed));
            let mut w = io::BufWriter::new(fs::File::create(
                dir.join(format!("trace_{k:03}.csv")),
            )?);
            trace.write_csv(&mut w)?;
            traces.push(trace);
        }
    }

    let monotonicity_ok = if beta.is_some() && !traces.is_empty() {
        Some(
            traces
                .iter()
                .all(|t| lyapunov_monotone(t, &result.min_slope_series, 20.0)),
        )
    } else {
        None
    };
    let identity_residual_max = if traces.is_empty() {
        None
    } else {
        // residual over the pre-breakdown window min u_x > -20
        let mut worst = 0.0f64;
        for t in &traces {
            for (k, r) in t.identity_residual.iter().enumerate() {
                if result.min_slope_series[k].1 > -20.0 {
                    worst = worst.max(r.abs());
                }
            }
        }
        Some(worst)
    };
    let t_upper = brandolese(&u0, gamma).ok().and_then(|v| {
        if v.triggered {
            match v.witness {
                Some(Witness::Point(x0)) => blowup_bound(&u0, gamma, x0).ok().map(|b| b.t_upper),
                _ => None,
            }
        } else {
            None
        }
    });

    let summary = Summary {
        status: result.status,
        estimated_t_star: result.estimated_blowup_time,
        t_upper,
        monotonicity_ok,
        identity_residual_max,
    };
    write_json(&dir.join("summary.json"), &summary)?;

    if !quiet {
        println!(
            "simulate: status {:?}, {} frames, {} traces -> {}",
            result.status,
            result.frames.len(),
            traces.len(),
            dir.display()
        );
    }
    if result.status == RunStatus::NumericalFailure {
        return Err(CliError::Numerical(
            "run ended in numerical failure (see summary.json)".into(),
        ));
    }
    Ok(())
}

fn uniform_seeds(grid: Grid, n: usize) -> Vec<f64> {
    let l = grid.length();
    (0..n)
        .map(|k| -0.5 * l + (k as f64 + 0.5) * l / n as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Parameter sweep over `gamma_list x profile_list`, or the `gamma,beta`
/// table when `beta_table` is configured. Rows are written in sorted order.
pub fn sweep(cfg: &RunConfig, cli_out: &Path, quiet: bool) -> Result<(), CliError> {
    let dir = out_dir(cfg, cli_out);
    fs::create_dir_all(&dir)?;
    let path = dir.join("sweep.csv");

    if let Some(table) = &cfg.beta_table {
        let mut gammas = match table {
            BetaTableConfig::List { gammas } => gammas.clone(),
            BetaTableConfig::Range { min, max, count } => {
                if *count < 2 {
                    return Err(CliError::Config("beta_table.count must be >= 2".into()));
                }
                (0..*count)
                    .map(|i| min + (max - min) * i as f64 / (*count as f64 - 1.0))
                    .collect()
            }
        };
        if gammas.is_empty() {
            return Err(CliError::Config("beta_table needs at least one gamma".into()));
        }
        gammas.sort_by(f64::total_cmp);
        let mut w = io::BufWriter::new(fs::File::create(&path)?);
        writeln!(w, "gamma,beta")?;
        for g in gammas {
            let beta = beta_of(g).map_err(|e| CliError::Config(e.to_string()))?;
            writeln!(w, "{},{}", fmt_g17(g), fmt_g17(beta))?;
        }
        if !quiet {
            println!("sweep: beta table -> {}", path.display());
        }
        return Ok(());
    }

    let gamma_list = cfg
        .gamma_list
        .as_ref()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| CliError::Config("sweep needs a nonempty gamma_list".into()))?;
    let profile_list = cfg
        .profile_list
        .as_ref()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| CliError::Config("sweep needs a nonempty profile_list".into()))?;
    let grid = build_grid(cfg)?;

    let mut gammas: Vec<(usize, f64)> = gamma_list.iter().copied().enumerate().collect();
    gammas.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut w = io::BufWriter::new(fs::File::create(&path)?);
    writeln!(
        w,
        "gamma,profile_id,brandolese_margin,triggered,T_upper,estimated_T_star,status"
    )?;
    let mut rows = 0usize;
    for &(_, gamma) in &gammas {
        for (pi, profile) in profile_list.iter().enumerate() {
            let u0 = profile.build(Some(gamma), grid)?;
            let verdict = brandolese(&u0, gamma).ok();
            let bound = verdict.as_ref().and_then(|v| {
                if v.triggered {
                    match v.witness {
                        Some(Witness::Point(x0)) => blowup_bound(&u0, gamma, x0).ok(),
                        _ => None,
                    }
                } else {
                    None
                }
            });
            let sc = build_solver_config(cfg, gamma, grid)?;
            let (status, estimate) = match run(&sc, &u0) {
                Ok(result) => (
                    match result.status {
                        RunStatus::Completed => "completed",
                        RunStatus::BlowupDetected => "blowup_detected",
                        RunStatus::NumericalFailure => "numerical_failure",
                    },
                    result.estimated_blowup_time,
                ),
                Err(RodError::Precondition(_)) => ("not_run", None),
                Err(e) => return Err(e.into()),
            };
            let opt = |v: Option<f64>| v.map(fmt_g17).unwrap_or_default();
            writeln!(
                w,
                "{},{}_{},{},{},{},{},{}",
                fmt_g17(gamma),
                pi,
                profile.kind_name(),
                opt(verdict.as_ref().map(|v| v.margin)),
                verdict
                    .as_ref()
                    .map(|v| v.triggered.to_string())
                    .unwrap_or_default(),
                opt(bound.map(|b| b.t_upper)),
                opt(estimate),
                status
            )?;
            rows += 1;
        }
    }
    if !quiet {
        println!("sweep: {rows} rows -> {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// shared output helpers
// ---------------------------------------------------------------------------

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes the gamma-dependent constants of a parameter value; handy for
/// debugging configurations.
pub fn describe_parameters(gamma: f64) -> Result<String, CliError> {
    let p = RodParameters::new(gamma)?;
    Ok(format!(
        "gamma = {}, delta = {}, beta = {}, extremal root = {}",
        p.gamma,
        p.delta,
        p.beta.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
        p.extremal_root
    ))
}
