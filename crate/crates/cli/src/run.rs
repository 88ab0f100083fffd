use std::io::Write;
use std::path::Path;
use std::time::Instant;

use flatsteer::{relax_and_certify, run_algorithm};

use crate::config::{parse_lambda, Format, RunConfig};
use crate::presets::{preset, table};
use crate::report::{RelaxReport, Report, RunReport};
use crate::table::render;
use crate::CliError;

/// Steering run for every λ, with seed `config.seed + index`. A failing λ is
/// recorded and the sweep continues.
pub fn cmd_solve(config: &RunConfig) -> Result<Report, CliError> {
    let f = config.validate()?;
    let mode = config.mode.into();
    let mut report = Report::new(config.clone());
    for (i, &lambda) in config.lambdas.iter().enumerate() {
        let seed = config.seed.wrapping_add(i as u64);
        let start = Instant::now();
        let run = run_algorithm(&f, lambda, mode, &config.steer_config(seed));
        let elapsed = start.elapsed().as_secs_f64();
        report.runs.push(match run {
            Ok(run) => RunReport::from_run(&run, seed, elapsed),
            Err(e) => RunReport::failed(lambda, seed, e.to_string(), elapsed),
        });
    }
    Ok(report)
}

/// The relaxation alone, with its optimality certificate.
pub fn cmd_relax(config: &RunConfig) -> Result<Report, CliError> {
    let f = config.validate()?;
    let start = Instant::now();
    let out = relax_and_certify(&f, config.mode.into(), &config.steer_config(config.seed))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut report = Report::new(config.clone());
    report.relaxation = Some(RelaxReport::from_outcome(&out, start.elapsed().as_secs_f64()));
    Ok(report)
}

/// The λ sweep of a published table, next to the published values.
/// `base` supplies seed, budgets, tolerances and output settings.
pub fn cmd_repro(id: u8, base: &RunConfig) -> Result<Report, CliError> {
    let spec = table(id).ok_or_else(|| CliError::Config(format!("no table {id} (1-4)")))?;
    let mut config = base.clone();
    config.polynomial = preset(spec.preset).expect("table presets exist").into();
    config.mode = spec.mode;
    config.lambdas = spec
        .rows
        .iter()
        .map(|r| parse_lambda(r.0))
        .collect::<Result<_, _>>()?;
    let mut report = cmd_solve(&config)?;
    report.table = Some(id);
    report.reference = spec.reference();
    Ok(report)
}

pub fn format_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Table => render(report),
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}
