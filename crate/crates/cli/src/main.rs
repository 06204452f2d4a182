use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dglab::certify::cmd_certify;
use dglab::kernel_table::{cmd_kernels, KernelGrid};
use dglab::selftest::{cmd_selftest, Fault, DEFAULT_SEED};
use dglab::simulate::cmd_simulate;
use dglab_core::certifier::CertifyParams;

/// Exit code for configuration and runtime errors (0-2 carry verdicts).
const EXIT_ERROR: u8 = 3;
/// Exit code for malformed command lines.
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "dglab",
    version,
    about = "De Gregorio model laboratory: simulations, kernel tables, certificates and self-tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one configured run and write diagnostics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Rigorous positivity certificate; exit 0 verified, 1 falsified, 2 inconclusive.
    Certify {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Truncation point B of the log variable.
        #[arg(long = "trunc")]
        trunc: Option<f64>,
        /// Frequency grid spacing.
        #[arg(long = "grid-h")]
        grid_h: Option<f64>,
        /// Right end of the frequency window.
        #[arg(long = "grid-M")]
        grid_m: Option<f64>,
        /// Negative control: certify W - C instead of W.
        #[arg(long = "perturb-shift", allow_negative_numbers = true)]
        perturb_shift: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "seed-cells")]
        seed_cells: Option<usize>,
    },
    /// Tabulate the kernels on a midpoint grid in log s.
    Kernels {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long = "log-min", default_value_t = -5.0, allow_negative_numbers = true)]
        log_min: f64,
        #[arg(long = "log-max", default_value_t = 5.0, allow_negative_numbers = true)]
        log_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
    },
    /// Run the invariant suites and report per-suite pass counts.
    Selftest {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long = "inject-fault", value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    KernelSign,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::KernelSign => Fault::KernelSign,
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("DG_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("DG_LAB_THREADS={raw} is not a thread count"))?;
    if threads == 0 {
        return Err("DG_LAB_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn dispatch(command: Command) -> Result<i32, dglab::CliError> {
    match command {
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Certify {
            out,
            trunc,
            grid_h,
            grid_m,
            perturb_shift,
            tol,
            seed_cells,
        } => {
            let defaults = CertifyParams::default();
            let params = CertifyParams {
                b_trunc: trunc.unwrap_or(defaults.b_trunc),
                h: grid_h.unwrap_or(defaults.h),
                m: grid_m.unwrap_or(defaults.m),
                perturb_shift: perturb_shift.unwrap_or(defaults.perturb_shift),
                tol: tol.unwrap_or(defaults.tol),
                seed_cells: seed_cells.unwrap_or(defaults.seed_cells),
                ..defaults
            };
            cmd_certify(&params, &out).map(|(_, code)| code)
        }
        Command::Kernels {
            out,
            log_min,
            log_max,
            points,
            beta,
        } => cmd_kernels(
            &KernelGrid {
                log_min,
                log_max,
                points,
                beta,
            },
            &out,
        ),
        Command::Selftest { seed, inject_fault } => cmd_selftest(seed, inject_fault.map(Fault::from)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
