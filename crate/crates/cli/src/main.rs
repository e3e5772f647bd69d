//! `cvqkd` — key-rate bounds for a binary-coherent-state CV-QKD protocol
//! with homodyne detection and postselection, over a symmetric Gaussian
//! channel.
//!
//! Subcommands: `keyrate`, `sweep`, `optimize`, `fidelity-bounds`,
//! `verify-operator`, `mc`. Every command validates its configuration
//! before computing and exits with 0 on success, 1 when a verification
//! tolerance is breached, and 2 on configuration errors. Set
//! `CVQKD_THREADS` to pin the worker count; results are identical for any
//! number of threads.

mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use cvqkd_core::channel::{ChannelParams, ProtocolParams};
use cvqkd_core::fidelity::bound_comparison_table;
use cvqkd_core::fock::{operator_inequality_check, theorem1_operator_check};
use cvqkd_core::keyrate::{key_rate, DualParams};
use cvqkd_core::montecarlo::{empirical_f0, par_sample_homodyne, McConfig};
use cvqkd_core::optimizer::{par_grid_optimize, par_sweep_loss, GridRange, GridSpec};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

type CmdResult = Result<(), Failure>;

fn config_err(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

fn verify_err(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_VERIFY,
        message: message.into(),
    }
}

/// Anything that goes wrong while emitting output.
fn io_err(e: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_VERIFY,
        message: format!("{e:#}"),
    }
}

#[derive(Parser)]
#[command(
    name = "cvqkd",
    version,
    about = "Key-rate lower bounds for binary-coherent-state CV QKD with homodyne detection and postselection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the key-rate pipeline at a single parameter point.
    Keyrate(KeyrateCmd),
    /// Optimize the rate over the parameter grids for a sweep of losses.
    Sweep(SweepCmd),
    /// Optimize the rate over the parameter grids at one channel point.
    Optimize(OptimizeCmd),
    /// Tabulate the fidelity bounds against excess noise.
    FidelityBounds(FidelityBoundsCmd),
    /// Verify the operator inequalities on a truncated Fock space.
    VerifyOperator(VerifyCmd),
    /// Sample homodyne outcomes and compare with the closed forms.
    Mc(McCmd),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = init_threads() {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    let outcome = match cli.command {
        Command::Keyrate(cmd) => cmd.run(),
        Command::Sweep(cmd) => cmd.run(),
        Command::Optimize(cmd) => cmd.run(),
        Command::FidelityBounds(cmd) => cmd.run(),
        Command::VerifyOperator(cmd) => cmd.run(),
        Command::Mc(cmd) => cmd.run(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Honors `CVQKD_THREADS`; the default pool otherwise.
fn init_threads() -> CmdResult {
    match std::env::var("CVQKD_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .map_err(|_| config_err(format!("CVQKD_THREADS must be a positive integer, got {raw:?}")))?;
            if n == 0 {
                return Err(config_err("CVQKD_THREADS must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| config_err(format!("cannot configure thread pool: {e}")))
        }
    }
}

/// Loads a JSON config file into the per-command parameter struct.
fn load_config<T: for<'d> Deserialize<'d> + Default>(path: &Option<PathBuf>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let raw = std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&raw)
                .map_err(|e| config_err(format!("invalid config {}: {e}", p.display())))
        }
    }
}

fn require(v: Option<f64>, flag: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| config_err(format!("missing required parameter --{flag} (flag or config file)")))
}

fn domain(e: cvqkd_core::Error) -> Failure {
    config_err(e.to_string())
}

/// Table output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Csv,
    Json,
}

/// "lo:hi:step" triplet.
fn parse_grid_range(raw: &str) -> Result<GridRange, String> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:step, got {raw:?}"));
    }
    let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
    let nums = nums.map_err(|e| format!("bad number in {raw:?}: {e}"))?;
    Ok(GridRange::new(nums[0], nums[1], nums[2]))
}

// ---------------------------------------------------------------------------
// keyrate

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct KeyrateParams {
    /// Channel transmission in [0, 1].
    #[arg(long)]
    eta: Option<f64>,
    /// Excess noise (vacuum-variance units), >= 0.
    #[arg(long)]
    xi: Option<f64>,
    /// Coherent amplitude, > 0.
    #[arg(long)]
    alpha: Option<f64>,
    /// Postselection threshold, >= 0 [default: 0].
    #[arg(long)]
    x_th: Option<f64>,
    /// Error-correction inefficiency, >= 1 [default: 1].
    #[arg(long)]
    f_ec: Option<f64>,
    /// Dual parameter kappa, >= 0.
    #[arg(long)]
    kappa: Option<f64>,
    /// Dual parameter gamma, >= 0.
    #[arg(long)]
    gamma: Option<f64>,
    /// Real part of the reference amplitude beta.
    #[arg(long)]
    beta_r: Option<f64>,
    /// Imaginary part of beta [default: 0].
    #[arg(long)]
    beta_i: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

impl KeyrateParams {
    fn overlay(self, file: Self) -> Self {
        KeyrateParams {
            eta: self.eta.or(file.eta),
            xi: self.xi.or(file.xi),
            alpha: self.alpha.or(file.alpha),
            x_th: self.x_th.or(file.x_th),
            f_ec: self.f_ec.or(file.f_ec),
            kappa: self.kappa.or(file.kappa),
            gamma: self.gamma.or(file.gamma),
            beta_r: self.beta_r.or(file.beta_r),
            beta_i: self.beta_i.or(file.beta_i),
            output: self.output.or(file.output),
        }
    }
}

#[derive(Args)]
struct KeyrateCmd {
    /// JSON config file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: KeyrateParams,
}

impl KeyrateCmd {
    fn run(self) -> CmdResult {
        let p = self.params.overlay(load_config(&self.config)?);
        let ch = ChannelParams::new(require(p.eta, "eta")?, require(p.xi, "xi")?).map_err(domain)?;
        let proto = ProtocolParams::new(
            require(p.alpha, "alpha")?,
            p.x_th.unwrap_or(0.0),
            p.f_ec.unwrap_or(1.0),
        )
        .map_err(domain)?;
        let dual = DualParams {
            kappa: require(p.kappa, "kappa")?,
            gamma: require(p.gamma, "gamma")?,
            beta_r: require(p.beta_r, "beta-r")?,
            beta_i: p.beta_i.unwrap_or(0.0),
        };
        dual.validate().map_err(domain)?;
        let breakdown = key_rate(&proto, &ch, &dual).map_err(|e| verify_err(e.to_string()))?;
        let body = emit::json_line(&breakdown).map_err(io_err)?;
        emit::deliver(p.output.as_deref(), &body).map_err(io_err)
    }
}

// ---------------------------------------------------------------------------
// grids shared by sweep/optimize

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields, default)]
struct GridParams {
    /// alpha^2 grid as lo:hi:step [default: 0.2:0.6:0.05].
    #[arg(long, value_parser = parse_grid_range)]
    alpha2_grid: Option<GridRange>,
    /// x_th grid as lo:hi:step [default: 0:1.2:0.05].
    #[arg(long, value_parser = parse_grid_range)]
    x_th_grid: Option<GridRange>,
    /// gamma grid as lo:hi:step [default: 0.02:2:0.02].
    #[arg(long, value_parser = parse_grid_range)]
    gamma_grid: Option<GridRange>,
    /// kappa grid as lo:hi:step [default: 0.1:30:0.1].
    #[arg(long, value_parser = parse_grid_range)]
    kappa_grid: Option<GridRange>,
}

impl GridParams {
    fn overlay(self, file: Self) -> Self {
        GridParams {
            alpha2_grid: self.alpha2_grid.or(file.alpha2_grid),
            x_th_grid: self.x_th_grid.or(file.x_th_grid),
            gamma_grid: self.gamma_grid.or(file.gamma_grid),
            kappa_grid: self.kappa_grid.or(file.kappa_grid),
        }
    }

    fn to_spec(&self) -> GridSpec {
        let mut g = GridSpec::default();
        if let Some(r) = self.alpha2_grid {
            g.alpha2 = r;
        }
        if let Some(r) = self.x_th_grid {
            g.x_th = r;
        }
        if let Some(r) = self.gamma_grid {
            g.gamma = r;
        }
        if let Some(r) = self.kappa_grid {
            g.kappa = r;
        }
        g
    }
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct SweepParams {
    /// Excess noise value; repeat the flag for several curves.
    #[arg(long = "xi")]
    xi: Vec<f64>,
    /// Explicit loss values; repeat the flag. Overrides --loss-grid.
    #[arg(long = "loss")]
    loss: Vec<f64>,
    /// Loss grid as lo:hi:step [default: 0:0.9:0.1].
    #[arg(long, value_parser = parse_grid_range)]
    loss_grid: Option<GridRange>,
    /// Error-correction inefficiency [default: 1].
    #[arg(long)]
    f_ec: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridParams,
    /// Table format [default: csv].
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCmd {
    /// JSON config file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: SweepParams,
}

impl SweepCmd {
    fn run(self) -> CmdResult {
        let file: SweepParams = load_config(&self.config)?;
        let cli = self.params;
        let xi_list = if cli.xi.is_empty() { file.xi } else { cli.xi };
        let losses = {
            let explicit = if cli.loss.is_empty() { file.loss } else { cli.loss };
            if explicit.is_empty() {
                cli.loss_grid
                    .or(file.loss_grid)
                    .unwrap_or(GridRange::new(0.0, 0.9, 0.1))
                    .values()
            } else {
                explicit
            }
        };
        let f_ec = cli.f_ec.or(file.f_ec).unwrap_or(1.0);
        let grid = cli.grid.overlay(file.grid).to_spec();
        let format = cli.format.or(file.format).unwrap_or_default();
        let output = cli.output.or(file.output);
        if xi_list.is_empty() {
            return Err(config_err("sweep needs at least one --xi value"));
        }
        let mut tables = Vec::with_capacity(xi_list.len());
        for &xi in &xi_list {
            let rows = par_sweep_loss(xi, &losses, &grid, f_ec)
                .map_err(|e| config_err(e.to_string()))?;
            tables.push((xi, rows));
        }
        let body = match format {
            Format::Json => emit::json_line(&tables).map_err(io_err)?,
            Format::Csv if tables.len() == 1 => emit::sweep_csv(&tables[0].1),
            Format::Csv => emit::sweep_csv_multi(&tables),
        };
        emit::deliver(output.as_deref(), &body).map_err(io_err)
    }
}

// ---------------------------------------------------------------------------
// optimize

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct OptimizeParams {
    /// Channel transmission in [0, 1].
    #[arg(long)]
    eta: Option<f64>,
    /// Excess noise, >= 0.
    #[arg(long)]
    xi: Option<f64>,
    /// Error-correction inefficiency [default: 1].
    #[arg(long)]
    f_ec: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridParams,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeCmd {
    /// JSON config file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: OptimizeParams,
}

impl OptimizeCmd {
    fn run(self) -> CmdResult {
        let file: OptimizeParams = load_config(&self.config)?;
        let cli = self.params;
        let ch = ChannelParams::new(
            require(cli.eta.or(file.eta), "eta")?,
            require(cli.xi.or(file.xi), "xi")?,
        )
        .map_err(domain)?;
        let f_ec = cli.f_ec.or(file.f_ec).unwrap_or(1.0);
        let grid = cli.grid.overlay(file.grid).to_spec();
        let output = cli.output.or(file.output);
        let result = par_grid_optimize(&ch, &grid, f_ec).map_err(|e| config_err(e.to_string()))?;
        let body = emit::json_line(&result).map_err(io_err)?;
        emit::deliver(output.as_deref(), &body).map_err(io_err)
    }
}

// ---------------------------------------------------------------------------
// fidelity-bounds

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct FidelityBoundsParams {
    /// Largest excess noise on the grid [default: 1].
    #[arg(long)]
    xi_max: Option<f64>,
    /// Grid step [default: 0.01].
    #[arg(long)]
    xi_step: Option<f64>,
    /// Table format [default: csv].
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FidelityBoundsCmd {
    /// JSON config file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: FidelityBoundsParams,
}

impl FidelityBoundsCmd {
    fn run(self) -> CmdResult {
        let file: FidelityBoundsParams = load_config(&self.config)?;
        let cli = self.params;
        let xi_max = cli.xi_max.or(file.xi_max).unwrap_or(1.0);
        let xi_step = cli.xi_step.or(file.xi_step).unwrap_or(0.01);
        let format = cli.format.or(file.format).unwrap_or_default();
        let output = cli.output.or(file.output);
        let range = GridRange::new(0.0, xi_max, xi_step);
        range.validate().map_err(domain)?;
        let rows = bound_comparison_table(&range.values()).map_err(domain)?;
        let body = match format {
            Format::Json => emit::json_line(&rows).map_err(io_err)?,
            Format::Csv => emit::bounds_csv(&rows),
        };
        emit::deliver(output.as_deref(), &body).map_err(io_err)
    }
}

// ---------------------------------------------------------------------------
// verify-operator

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct VerifyParams {
    /// Dual parameter kappa, >= 0.
    #[arg(long)]
    kappa: Option<f64>,
    /// Dual parameter gamma, >= 0.
    #[arg(long)]
    gamma: Option<f64>,
    /// Real reference amplitude beta.
    #[arg(long)]
    beta: Option<f64>,
    /// Postselection threshold [default: 0].
    #[arg(long)]
    x_th: Option<f64>,
    /// Fock-space truncation [default: 40].
    #[arg(long)]
    n_max: Option<usize>,
    /// Acceptance threshold on the minimum eigenvalue [default: 1e-6;
    /// 1e-8 for the moment-bound check].
    #[arg(long)]
    tolerance: Option<f64>,
    /// Check the moment-form fidelity bound instead of the dual-constant
    /// inequality.
    #[arg(long)]
    #[serde(default)]
    theorem1: bool,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

/// The report schema of `verify-operator`.
#[derive(serde::Serialize)]
struct VerifyReport {
    lambda_min: f64,
    n_max: usize,
    converged: bool,
    tolerance: f64,
}

#[derive(Args)]
struct VerifyCmd {
    /// JSON config file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: VerifyParams,
}

impl VerifyCmd {
    fn run(self) -> CmdResult {
        let file: VerifyParams = load_config(&self.config)?;
        let cli = self.params;
        let x_th = cli.x_th.or(file.x_th).unwrap_or(0.0);
        let n_max = cli.n_max.or(file.n_max).unwrap_or(40);
        let theorem1 = cli.theorem1 || file.theorem1;
        let output = cli.output.clone().or(file.output.clone());
        let beta = require(cli.beta.or(file.beta), "beta")?;

        // Doubling the truncation can only lower the minimum eigenvalue
        // (interlacing), so the check is converged when the verdict
        // persists at 2 n_max.
        let (report, confirm, tolerance) = if theorem1 {
            let tolerance = cli.tolerance.or(file.tolerance).unwrap_or(1e-8);
            let a = theorem1_operator_check(beta, n_max).map_err(domain)?;
            let b = theorem1_operator_check(beta, 2 * n_max).map_err(domain)?;
            (a, b, tolerance)
        } else {
            let tolerance = cli.tolerance.or(file.tolerance).unwrap_or(1e-6);
            let dual = DualParams {
                kappa: require(cli.kappa.or(file.kappa), "kappa")?,
                gamma: require(cli.gamma.or(file.gamma), "gamma")?,
                beta_r: beta,
                beta_i: 0.0,
            };
            dual.validate().map_err(domain)?;
            let a = operator_inequality_check(&dual, x_th, n_max).map_err(domain)?;
            let b = operator_inequality_check(&dual, x_th, 2 * n_max).map_err(domain)?;
            (a, b, tolerance)
        };
        let converged = confirm.lambda_min >= -tolerance;
        let out = VerifyReport {
            lambda_min: report.lambda_min,
            n_max,
            converged,
            tolerance,
        };
        let body = emit::json_line(&out).map_err(io_err)?;
        emit::deliver(output.as_deref(), &body).map_err(io_err)?;
        if out.lambda_min < -tolerance || !converged {
            return Err(verify_err(format!(
                "operator check breached: lambda_min = {:e}, converged = {}",
                out.lambda_min, converged
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// mc

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct McParams {
    /// Channel transmission in [0, 1].
    #[arg(long)]
    eta: Option<f64>,
    /// Excess noise, >= 0.
    #[arg(long)]
    xi: Option<f64>,
    /// Coherent amplitude, > 0.
    #[arg(long)]
    alpha: Option<f64>,
    /// Postselection threshold [default: 0].
    #[arg(long)]
    x_th: Option<f64>,
    /// Number of samples [default: 1000000].
    #[arg(long)]
    samples: Option<u64>,
    /// PRNG seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate the reported fidelity bound at this beta instead of
    /// sqrt(eta) alpha.
    #[arg(long)]
    beta: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct McCmd {
    /// JSON config file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: McParams,
}

impl McCmd {
    fn run(self) -> CmdResult {
        let file: McParams = load_config(&self.config)?;
        let cli = self.params;
        let ch = ChannelParams::new(
            require(cli.eta.or(file.eta), "eta")?,
            require(cli.xi.or(file.xi), "xi")?,
        )
        .map_err(domain)?;
        let proto = ProtocolParams::new(
            require(cli.alpha.or(file.alpha), "alpha")?,
            cli.x_th.or(file.x_th).unwrap_or(0.0),
            1.0,
        )
        .map_err(domain)?;
        let cfg = McConfig {
            n_samples: cli.samples.or(file.samples).unwrap_or(1_000_000),
            seed: cli.seed.or(file.seed).unwrap_or(0),
        };
        cfg.validate().map_err(domain)?;
        let output = cli.output.or(file.output);
        let mut report =
            par_sample_homodyne(&proto, &ch, &cfg).map_err(|e| verify_err(e.to_string()))?;
        if let Some(beta) = cli.beta.or(file.beta) {
            report.f0_hat = empirical_f0(&report, beta);
        }
        let body = emit::json_line(&report).map_err(io_err)?;
        emit::deliver(output.as_deref(), &body).map_err(io_err)
    }
}
