use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flatsteer_cli::presets::{preset, PRESET_NAMES};
use flatsteer_cli::{
    cmd_relax, cmd_repro, cmd_solve, format_report, parse_lambda, write_atomic, CliError, Format,
    ModeName, Report, RunConfig,
};

#[derive(Parser)]
#[command(name = "flatsteer", version, about = "Bounds and minimizers of polynomials via moment relaxations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steer toward a flat moment matrix for each lambda.
    Solve(SolveArgs),
    /// Solve the relaxation and try to certify its bound.
    Relax(ProblemArgs),
    /// Re-run the lambda sweep of a published table (1-4).
    Repro {
        table: u8,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Polynomial in x1..xn, e.g. "x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1".
    #[arg(long, group = "problem")]
    poly: Option<String>,
    #[arg(long, group = "problem")]
    poly_file: Option<PathBuf>,
    #[arg(long, group = "problem", value_parser = PRESET_NAMES)]
    preset: Option<String>,
    #[arg(long, default_value = "moment", value_parser = ["moment", "nds"])]
    mode: String,
    /// Relaxation degree k (defaults to deg f rounded up to even).
    #[arg(long)]
    degree: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Repeatable or comma separated; fractions such as 1/60 are accepted.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    lambda: Vec<String>,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tol_flat: Option<f64>,
    #[arg(long)]
    tol_rank: Option<f64>,
    /// Outer iterations per lambda.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Wall-clock budget per lambda, in seconds.
    #[arg(long)]
    budget_s: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = ["json", "table"])]
    format: String,
}

impl CommonArgs {
    fn apply(&self, c: &mut RunConfig) {
        c.seed = self.seed;
        if let Some(v) = self.tol_flat {
            c.tolerances.tau_flat = v;
        }
        if let Some(v) = self.tol_rank {
            c.tolerances.tau_rank = v;
        }
        if let Some(v) = self.max_iters {
            c.max_outer_iters = v;
        }
        if let Some(v) = self.budget_s {
            c.budget_s = v;
        }
        c.out = self.out.clone();
        c.format = if self.format == "table" { Format::Table } else { Format::Json };
    }
}

impl ProblemArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let text = match (&self.poly, &self.poly_file, &self.preset) {
            (Some(p), _, _) => p.clone(),
            (_, Some(path), _) => std::fs::read_to_string(path)?.trim().to_string(),
            (_, _, Some(name)) => preset(name).expect("checked by clap").to_string(),
            _ => {
                return Err(CliError::Config(
                    "one of --poly, --poly-file or --preset is required".into(),
                ))
            }
        };
        let mut c = RunConfig::new(text, self.mode.parse::<ModeName>()?);
        c.degree = self.degree;
        self.common.apply(&mut c);
        Ok(c)
    }
}

fn execute(command: Command) -> Result<Report, CliError> {
    match command {
        Command::Solve(args) => {
            let mut c = args.problem.config()?;
            c.lambdas = args
                .lambda
                .iter()
                .map(|l| parse_lambda(l))
                .collect::<Result<_, _>>()?;
            cmd_solve(&c)
        }
        Command::Relax(args) => cmd_relax(&args.config()?),
        Command::Repro { table, common } => {
            let mut c = RunConfig::new(String::new(), ModeName::Moment);
            common.apply(&mut c);
            cmd_repro(table, &c)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(cli.command).and_then(|report| {
        let text = format_report(&report, report.config.format);
        match &report.config.out {
            Some(path) => write_atomic(path, &text)?,
            None => print!("{text}"),
        }
        Ok(report.exit_code())
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("flatsteer: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
