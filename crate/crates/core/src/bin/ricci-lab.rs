use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ricci_lab::analysis::Column;
use ricci_lab::cli::{
    cmd_aperture, cmd_conjecture, cmd_decay_report, cmd_mp_lab, cmd_run, cmd_verify_exact, ApertureArgs,
    ConjectureArgs, DecayArgs, ExitStatus, RunConfig, VerifyExactArgs,
};
use ricci_lab::exact::ExactSolution;

/// Conformal Ricci flow laboratory.
///
/// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
/// 3 numerical abort. Run outputs go to $RICCI_LAB_OUT/<output.name>
/// (default ./runs/run) unless --out is given.
#[derive(Parser)]
#[command(name = "ricci-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config with [grid], [flow], [checks], [output]; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set flow.t_end=20 (repeatable).
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Run directory, overriding $RICCI_LAB_OUT/<output.name>.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, ExitCode> {
        RunConfig::load(self.config.as_deref(), &self.overrides).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(ExitStatus::ConfigError.code() as u8)
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evolve, record the diagnostic series and run every applicable check.
    Run(ConfigArgs),
    /// Residual convergence of an exact solution across grids.
    VerifyExact {
        #[arg(long, default_value = "cigar")]
        solution: ExactSolution,
        /// Node counts per axis, coarse to fine.
        #[arg(long, value_delimiter = ',', default_value = "128,256")]
        grids: Vec<usize>,
        /// Domain is [-w, w]².
        #[arg(long, default_value_t = 8.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, default_value_t = 4)]
        margin: usize,
    },
    /// Curvature lower bound, heat-companion maximum principle and barrier.
    MpLab(ConfigArgs),
    /// Geodesic balls around the grid centre and the aperture fit.
    Aperture {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        radii: Vec<f64>,
        /// Evolve to flow.t_end before measuring.
        #[arg(long)]
        evolve: bool,
        /// Fail unless the estimate lies in [LO, HI].
        #[arg(long, value_name = "LO,HI", value_parser = parse_bounds)]
        bounds: Option<(f64, f64)>,
    },
    /// Decay envelopes and log-log slopes over a stored series CSV.
    DecayReport {
        #[arg(long)]
        series: PathBuf,
        /// COLUMN=P pairs for sup Q·(1+t)^P.
        #[arg(
            long = "exponent",
            value_delimiter = ',',
            default_value = "sup_gradf2=1,sup_H=1,sup_gradR2=3,sup_hess2R=4"
        )]
        exponents: Vec<String>,
        #[arg(long, default_value_t = 0.5)]
        tail_fraction: f64,
        /// Output CSV; defaults to decay_report.csv beside the series.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit v to 2/(β(|x|²+k)) along the flow (report only).
    Conjecture {
        #[command(flatten)]
        config: ConfigArgs,
        /// Defaults to the preset's β, else 2.
        #[arg(long)]
        beta: Option<f64>,
    },
}

fn parse_exponent(s: &str) -> Result<(Column, f64), String> {
    let (c, p) = s.split_once('=').ok_or_else(|| format!("expected COLUMN=P, got {s}"))?;
    let column = c.trim().parse::<Column>().map_err(|e| e.to_string())?;
    let p = p.trim().parse::<f64>().map_err(|e| format!("{s}: {e}"))?;
    Ok((column, p))
}

fn parse_bounds(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got {s}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let status = match cli.command {
        Command::Run(c) => match c.load() {
            Ok(config) => cmd_run(&config, c.out.as_deref(), &mut stdout),
            Err(code) => return code,
        },
        Command::MpLab(c) => match c.load() {
            Ok(config) => cmd_mp_lab(&config, c.out.as_deref(), &mut stdout),
            Err(code) => return code,
        },
        Command::VerifyExact { solution, grids, half_width, t, dt, margin } => {
            cmd_verify_exact(&VerifyExactArgs { solution, grids, half_width, t, dt, margin }, &mut stdout)
        }
        Command::Aperture { config, radii, evolve, bounds } => match config.load() {
            Ok(cfg) => cmd_aperture(&cfg, &ApertureArgs { radii, evolve, bounds }, config.out.as_deref(), &mut stdout),
            Err(code) => return code,
        },
        Command::DecayReport { series, exponents, tail_fraction, output } => {
            match exponents.iter().map(|s| parse_exponent(s)).collect::<Result<Vec<_>, _>>() {
                Ok(exponents) => cmd_decay_report(&DecayArgs { series, exponents, tail_fraction, output }, &mut stdout),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitStatus::ConfigError
                }
            }
        }
        Command::Conjecture { config, beta } => match config.load() {
            Ok(cfg) => cmd_conjecture(&cfg, &ConjectureArgs { beta }, config.out.as_deref(), &mut stdout),
            Err(code) => return code,
        },
    };
    ExitCode::from(status.code() as u8)
}
