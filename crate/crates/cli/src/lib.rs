//! Batch front end: configuration, subcommands and artifact emission.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use debtgame_core::asymptotics::{self, SweepResult};
use debtgame_core::equilibrium::SolutionDocument;
use debtgame_core::simulator::{self, EquilibriumFeedback, Outcome, Simulator};
use debtgame_core::{
    BuildOptions, CostSpec, EquilibriumSolution, Error as CoreError, Model, ModelParams, ModelSpec,
    SimOptions, SolverOptions, ARTIFACT_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "debtgame",
    version,
    about = "Feedback equilibria of the debt-management game"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the equilibrium and write the solution files
    Solve(CommonArgs),
    /// Simulate equilibrium play and verify both equilibrium conditions
    Simulate(SimulateArgs),
    /// Sweep the bankruptcy threshold and classify the salvage regime
    Sweep(CommonArgs),
    /// Check the cost-function hypotheses
    ValidateCosts(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON configuration file
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir` in the config)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel stages
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated initial states (overrides the config)
    #[arg(long, value_delimiter = ',')]
    pub x0: Option<Vec<f64>>,
    /// Reuse a solution document written by `solve`
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub require_x_large: bool,
    pub allow_partial: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            require_x_large: true,
            allow_partial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Explicit initial states; when empty a uniform grid of `grid_points` on `[0, x*]` is used.
    pub x0: Vec<f64>,
    pub grid_points: usize,
    /// Largest accepted `|J - V*|` and `|Psi - p*|`.
    pub residual_tol: f64,
    /// Largest accepted amount by which a probe may beat `V*`.
    pub probe_tol: f64,
    pub options: SimOptions,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            x0: Vec::new(),
            grid_points: 50,
            residual_tol: 1e-4,
            probe_tol: 1e-6,
            options: SimOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub x_stars: Vec<f64>,
    /// Probe states; empty selects `2M` (bounded family) or `M_2` (Ponzi family).
    pub probes: Vec<f64>,
}

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub costs: CostSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub build: BuildConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate().map_err(CliError::from)?;
        self.solver.validate().map_err(CliError::from)?;
        self.simulation.options.validate().map_err(CliError::from)?;
        if !(self.simulation.residual_tol > 0.0 && self.simulation.probe_tol > 0.0) {
            return Err(CliError::config("simulation tolerances must be positive"));
        }
        let CostSpec::Reference { l0, c1, delta0 } = self.costs;
        if !(l0 > 0.0 && c1 > 0.0 && delta0 > 0.0) {
            return Err(CliError::config(
                "cost parameters l0, c1, delta0 must be positive",
            ));
        }
        Ok(())
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            params: self.model,
            costs: self.costs.clone(),
        }
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    fn build_options(&self) -> BuildOptions {
        BuildOptions {
            require_x_large: self.build.require_x_large,
            allow_partial: self.build.allow_partial,
            ..BuildOptions::default()
        }
    }
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            kind: "config",
            message: msg.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_CONFIG,
            kind: "io",
            message: format!("{}: {e}", path.display()),
        }
    }

    fn numerical(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            kind: "numerical",
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let (code, kind) = match e {
            CoreError::Config(_) => (EXIT_CONFIG, "config"),
            CoreError::HypothesisViolated(_) | CoreError::RegimeViolated(_) => {
                (EXIT_HYPOTHESIS, "hypothesis")
            }
            _ => (EXIT_NUMERICAL, "numerical"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

/// Writes artifacts under one directory, stamping each with version and config hash.
pub struct Emitter {
    pub dir: PathBuf,
    pub hash: String,
}

impl Emitter {
    fn new(dir: PathBuf, hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self { dir, hash })
    }

    fn header(&self) -> String {
        format!("# {ARTIFACT_VERSION} config_sha256={}\n", self.hash)
    }

    pub fn csv(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        self.text(name, &format!("{}{body}", self.header()))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// JSON object wrapped as `{version, config_hash, <key>: value}`.
    pub fn json<T: Serialize>(
        &self,
        name: &str,
        key: &str,
        value: &T,
    ) -> Result<PathBuf, CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("version".into(), ARTIFACT_VERSION.into());
        obj.insert("config_hash".into(), self.hash.clone().into());
        obj.insert(
            key.into(),
            serde_json::to_value(value).map_err(|e| CliError::numerical(e.to_string()))?,
        );
        let text = serde_json::to_string_pretty(&serde_json::Value::Object(obj))
            .expect("json value serializes");
        self.text(name, &(text + "\n"))
    }

    fn error(&self, e: &CliError) {
        #[derive(Serialize)]
        struct ErrorDoc<'a> {
            exit_code: i32,
            kind: &'a str,
            message: &'a str,
        }
        let doc = ErrorDoc {
            exit_code: e.code,
            kind: e.kind,
            message: &e.message,
        };
        let _ = self.json("error.json", "error", &doc);
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    RunConfig::from_json(&text)
}

fn output_dir(cfg: Option<&RunConfig>, args: &CommonArgs) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs one command and returns the process exit code. Errors go to stderr and `error.json`.
pub fn run(cli: Cli) -> i32 {
    let common = match &cli.command {
        Command::Solve(a) | Command::Sweep(a) | Command::ValidateCosts(a) => a.clone(),
        Command::Simulate(a) => a.common.clone(),
    };
    if let Some(n) = common.jobs {
        // ignore the error raised when a global pool already exists (repeated in-process runs)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let cfg = load_config(&common.config);
    let dir = output_dir(cfg.as_ref().ok(), &common);
    let hash = cfg.as_ref().map(|c| c.hash()).unwrap_or_default();
    let em = match Emitter::new(dir, hash) {
        Ok(em) => em,
        Err(e) => {
            eprintln!("{e}");
            return e.code;
        }
    };
    let result = cfg.and_then(|cfg| match &cli.command {
        Command::Solve(_) => run_solve(&cfg, &em),
        Command::Simulate(a) => run_simulate(&cfg, &em, a.x0.as_deref(), a.solution.as_deref()),
        Command::Sweep(_) => run_sweep(&cfg, &em),
        Command::ValidateCosts(_) => run_validate_costs(&cfg, &em),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            em.error(&e);
            e.code
        }
    }
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    status: debtgame_core::BuildStatus,
    x_star: f64,
    semi_equilibrium_point: f64,
    touch_points: Vec<f64>,
    n0: usize,
    n0_bound: f64,
    delta_flat: f64,
    x_flat: f64,
    x_c: f64,
    hypotheses: debtgame_core::equilibrium::HypothesisReport,
}

fn build(cfg: &RunConfig) -> Result<EquilibriumSolution, CliError> {
    let model = cfg.model_spec().build()?;
    Ok(EquilibriumSolution::build_with(
        &model,
        cfg.solver,
        cfg.build_options(),
    )?)
}

fn summary(sol: &EquilibriumSolution) -> SolveSummary {
    let xf = sol.solver.cs.x_flat();
    SolveSummary {
        status: sol.status.clone(),
        x_star: sol.x_star(),
        semi_equilibrium_point: sol.semi_equilibrium_point(),
        touch_points: sol.touch_points.clone(),
        n0: sol.n0(),
        n0_bound: 1.0 + (sol.x_star() - xf).max(0.0) / sol.delta_flat,
        delta_flat: sol.delta_flat,
        x_flat: xf,
        x_c: sol.solver.cs.x_c(),
        hypotheses: sol.hypotheses.clone(),
    }
}

fn summary_text(s: &SolveSummary) -> String {
    let h = &s.hypotheses;
    let mut t = String::new();
    t.push_str(&format!("status: {:?}\n", s.status));
    t.push_str(&format!("x* = {:.10}\n", s.x_star));
    t.push_str(&format!(
        "x1 (semi-equilibrium point) = {:.10}\n",
        s.semi_equilibrium_point
    ));
    for (k, x) in s.touch_points.iter().enumerate() {
        t.push_str(&format!("touch point x_{} = {:.10}\n", k + 1, x));
    }
    t.push_str(&format!("N0 = {} (bound {:.6})\n", s.n0, s.n0_bound));
    t.push_str(&format!(
        "x_flat = {:.10}, x_c = {:.10}, delta_flat = {:.6e}\n",
        s.x_flat, s.x_c, s.delta_flat
    ));
    t.push_str(&format!(
        "W(x*) > B: {} (W(x*) = {:.10}, B = {:.10})\n",
        h.w_exceeds_b, h.w_at_x_star, h.b
    ));
    t.push_str(&format!(
        "theta(x*) <= p_c(x*): {} (theta = {:.10}, p_c = {:.10})\n",
        h.theta_below_p_c, h.theta_star, h.p_c_at_x_star
    ));
    t
}

pub fn run_solve(cfg: &RunConfig, em: &Emitter) -> Result<(), CliError> {
    let sol = build(cfg)?;
    let doc = sol.to_document(&em.hash)?;
    em.text(
        "solution.json",
        &(serde_json::to_string(&doc).expect("document serializes") + "\n"),
    )?;
    em.csv("solution.csv", &sol.sample_csv(1000))?;
    em.csv("constant_strategy.csv", &sol.solver.curve.to_csv())?;
    for (k, arc) in sol.arcs.iter().enumerate() {
        em.csv(&format!("arc_{k:03}.csv"), &arc.to_csv())?;
    }
    let s = summary(&sol);
    em.json("summary.json", "summary", &s)?;
    let text = summary_text(&s);
    em.text("summary.txt", &format!("{}{text}", em.header()))?;
    print!("{text}");
    Ok(())
}

fn describe(outcome: &Outcome) -> String {
    match *outcome {
        Outcome::Bankrupt { t_b } => format!("bankruptcy at T_b = {t_b:.10}"),
        Outcome::Steady {
            x,
            touch_index: Some(k),
            t,
        } => format!("steady state at x_{} = {x:.10} (t = {t:.6})", k + 1),
        Outcome::Steady {
            x,
            touch_index: None,
            ..
        } => format!("steady state at x = {x:.10}"),
        Outcome::Horizon { t, tail_bound } => {
            format!("horizon T = {t:.3} reached (tail <= {tail_bound:.3e})")
        }
        Outcome::StepFailure { t, x } => format!("step failure at t = {t:.6}, x = {x:.10}"),
    }
}

pub fn run_simulate(
    cfg: &RunConfig,
    em: &Emitter,
    x0: Option<&[f64]>,
    solution: Option<&Path>,
) -> Result<(), CliError> {
    let sol = match solution {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let doc: SolutionDocument = serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("solution parse error: {e}")))?;
            EquilibriumSolution::from_document(doc)?
        }
        None => build(cfg)?,
    };
    let x_star = sol.x_star();
    let lo = sol.covered_from();
    let sim_cfg = &cfg.simulation;
    let x0s: Vec<f64> = match x0 {
        Some(v) if !v.is_empty() => v.to_vec(),
        _ if !sim_cfg.x0.is_empty() => sim_cfg.x0.clone(),
        _ => {
            let n = sim_cfg.grid_points.max(2);
            (0..n)
                .map(|i| lo + (x_star - lo) * i as f64 / (n - 1) as f64)
                .collect()
        }
    };
    if let Some(bad) = x0s.iter().find(|&&x| !(x >= lo && x <= x_star)) {
        return Err(CliError::config(format!(
            "x0 = {bad} outside the solved interval [{lo}, {x_star}]"
        )));
    }
    let report = simulator::verify_equilibrium(&sol, &x0s, sim_cfg.options)?;
    let sim = Simulator::new(sol.model(), &sol, sim_cfg.options)?;
    let policy = EquilibriumFeedback(&sol);
    for (i, &x) in x0s.iter().enumerate() {
        let traj = sim.simulate(x, &policy)?;
        em.csv(&format!("trajectory_{i:03}.csv"), &traj.to_csv())?;
    }
    em.csv("residuals.csv", &report.points_csv())?;
    em.json("verification.json", "report", &report)?;
    for p in &report.points {
        println!(
            "x0 = {:.10}: {}; |J - V*| = {:.3e}, |Psi - p*| = {:.3e}",
            p.x0,
            describe(&p.outcome),
            p.residual_i,
            p.residual_ii
        );
    }
    println!(
        "max residual_i = {:.3e}, max residual_ii = {:.3e}, min probe gap = {:.3e} over {} probes",
        report.max_residual_i,
        report.max_residual_ii,
        report.min_probe_gap,
        report.probes.len()
    );
    if !report.passed(
        sim_cfg.residual_tol,
        sim_cfg.residual_tol,
        sim_cfg.probe_tol,
    ) {
        return Err(CliError::numerical(format!(
            "verification failed: residual_i = {:.3e}, residual_ii = {:.3e} (tol {:.1e}), min probe gap = {:.3e} (tol {:.1e})",
            report.max_residual_i, report.max_residual_ii, sim_cfg.residual_tol, report.min_probe_gap, sim_cfg.probe_tol
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepSummary<'a> {
    regime: &'a str,
    bounded_bound_holds: Option<bool>,
    ponzi_bounds_hold: Option<bool>,
    monotone_decay: bool,
    failed_entries: Vec<f64>,
}

pub fn run_sweep(cfg: &RunConfig, em: &Emitter) -> Result<(), CliError> {
    if cfg.sweep.x_stars.is_empty() {
        eprintln!("warning: sweep.x_stars is empty; nothing to do");
        return Ok(());
    }
    if cfg
        .sweep
        .x_stars
        .iter()
        .any(|&x| !(x > 0.0 && x.is_finite()))
    {
        return Err(CliError::config("sweep.x_stars must be positive"));
    }
    let template: Model = cfg.model_spec().build()?;
    let salvage = cfg.model.salvage;
    let result: SweepResult = if asymptotics::limsup_theta_s(&salvage).is_some() {
        asymptotics::regime_bounded(&template, &cfg.sweep.x_stars, &cfg.sweep.probes, cfg.solver)?
    } else {
        asymptotics::regime_ponzi(&template, &cfg.sweep.x_stars, &cfg.sweep.probes, cfg.solver)?
    };
    let bounded = result.regime == asymptotics::TAG_BOUNDED;
    let s = SweepSummary {
        regime: &result.regime,
        bounded_bound_holds: bounded.then(|| result.bounded_bound_holds(1e-3)),
        ponzi_bounds_hold: (!bounded).then(|| result.ponzi_bounds_hold(1e-9)),
        monotone_decay: result.monotone_decay(),
        failed_entries: result
            .entries
            .iter()
            .filter(|e| e.error.is_some())
            .map(|e| e.x_star)
            .collect(),
    };
    em.csv("sweep.csv", &result.to_csv())?;
    em.json("sweep.json", "sweep", &result)?;
    em.json("sweep_summary.json", "summary", &s)?;
    println!("regime: {}", result.regime);
    for e in &result.entries {
        match &e.error {
            Some(msg) => println!("x* = {:.6e}: failed ({msg})", e.x_star),
            None => {
                for p in &e.probes {
                    println!(
                        "x* = {:.6e}, x = {:.6e}: V = {:.10}, p = {:.10}",
                        e.x_star, p.x, p.v, p.p
                    );
                }
            }
        }
    }
    Ok(())
}

pub fn run_validate_costs(cfg: &RunConfig, em: &Emitter) -> Result<(), CliError> {
    let costs = cfg.costs.build();
    let report = costs.validate();
    em.json("costs_validation.json", "report", &report)?;
    if report.passed() {
        println!("cost hypotheses hold");
        Ok(())
    } else {
        for v in &report.violations {
            println!("violation: {v}");
        }
        Err(CliError::config(format!(
            "cost hypotheses violated: {}",
            report.violations.join("; ")
        )))
    }
}
