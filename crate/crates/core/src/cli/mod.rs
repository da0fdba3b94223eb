//! Command-line front end.
//!
//! ```text
//! cylnls <solve|certify|scan-sub|probe-bl|check-hyp|hydrogen> --config run.toml [--seed N] [--out DIR]
//! ```
//!
//! Exit codes: 0 success, 1 non-convergence (or no certificate), 2 invalid
//! configuration, 3 unparsable configuration or command line. Diagnostics go
//! to standard error; results go to files and a JSON summary to standard
//! output.

pub mod config;
pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    brezis_lieb_probe, certify_negative_infimum, compact_bump, subadditivity_scan, BrezisLiebRow, Certificate,
    SubadditivityReport, TrialEnergy,
};
use crate::energy::Functional;
use crate::error::Error;
use crate::grid::{build_grid, Field};
use crate::model::{check_v_hypotheses, check_w_hypotheses, hydrogen_potential_min, HypothesisReport};
use crate::solver::{solve, SolveResult};

pub use config::{command_violations, parse_config, Command, ConfigError, Format, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_PARSE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cylnls", version, about = "Constrained NLS minimizers on cylindrically symmetric grids")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides solve.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Minimize J on the sphere of radius solve.rho.
    Solve(Common),
    /// Find a trial field with negative energy.
    Certify(Common),
    /// Check I_rho < I_mu + I_sqrt(rho^2 - mu^2) for each analysis.mus.
    ScanSub(Common),
    /// Additivity defect of the power part for separating bumps.
    ProbeBl(Common),
    /// Sampled checks of the potential and nonlinearity hypotheses.
    CheckHyp(Common),
    /// Certify, solve and check positivity for the hydrogen model.
    Hydrogen(Common),
}

impl Cmd {
    fn split(self) -> (Command, Common) {
        match self {
            Cmd::Solve(c) => (Command::Solve, c),
            Cmd::Certify(c) => (Command::Certify, c),
            Cmd::ScanSub(c) => (Command::ScanSub, c),
            Cmd::ProbeBl(c) => (Command::ProbeBl, c),
            Cmd::CheckHyp(c) => (Command::CheckHyp, c),
            Cmd::Hydrogen(c) => (Command::Hydrogen, c),
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (cmd, common) = cli.command.split();
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return EXIT_PARSE;
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                ConfigError::Parse(_) => EXIT_PARSE,
                ConfigError::Validation(_) => EXIT_INVALID,
            };
        }
    };
    let v = command_violations(&cfg, cmd);
    if !v.is_empty() {
        eprintln!("error: {}", ConfigError::Validation(v));
        return EXIT_INVALID;
    }
    if let Some(seed) = common.seed {
        cfg.solve.seed = seed;
    }
    if let Some(out) = common.out {
        cfg.output_dir = out;
    }
    match execute(cmd, &cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Invalid(_) | Error::SupportOverflow(_) | Error::GridMismatch | Error::LengthMismatch { .. } => {
            EXIT_INVALID
        }
        _ => EXIT_NOT_CONVERGED,
    }
}

/// Runs a validated configuration; returns the exit code for a completed run.
pub fn execute(cmd: Command, cfg: &RunConfig) -> crate::Result<i32> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::Io {
        path: cfg.output_dir.display().to_string(),
        source: e,
    })?;
    let grid = build_grid(cfg.grid)?;
    let functional = Functional::new(grid, cfg.potential, cfg.nonlinearity)?;
    match cmd {
        Command::Solve => run_solve(cfg, &functional),
        Command::Certify => run_certify(cfg, &functional),
        Command::ScanSub => run_scan(cfg, &functional),
        Command::ProbeBl => run_probe(cfg, &functional),
        Command::CheckHyp => run_check(cfg, &functional),
        Command::Hydrogen => run_hydrogen(cfg, &functional),
    }
}

fn status(converged: bool) -> i32 {
    if converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn emit<T: Serialize>(cfg: &RunConfig, name: &str, value: &T) -> crate::Result<()> {
    let text = io::to_json(value);
    if cfg.wants(Format::Json) {
        io::write_text(&cfg.output_dir.join(name), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn export(cfg: &RunConfig, r: &SolveResult) -> crate::Result<()> {
    io::export_solution(r, &cfg.output_dir, cfg.wants(Format::Json), cfg.wants(Format::Csv))?;
    print!("{}", io::result_json(r));
    Ok(())
}

fn report_convergence(r: &SolveResult) {
    if !r.converged {
        eprintln!(
            "warning: not converged after {} iterations (residual {:e})",
            r.iters, r.residual
        );
    }
}

fn run_solve(cfg: &RunConfig, f: &Functional) -> crate::Result<i32> {
    let r = solve(&cfg.solve, None, f)?;
    report_convergence(&r);
    export(cfg, &r)?;
    Ok(status(r.converged))
}

#[derive(Serialize)]
struct CertificateJson<'a> {
    rho0_estimate: f64,
    #[serde(rename = "R_n")]
    r_n: f64,
    s0: f64,
    energy: &'a crate::energy::EnergyBreakdown,
    scanned: &'a [TrialEnergy],
}

fn certify(cfg: &RunConfig, f: &Functional) -> crate::Result<Certificate> {
    let s0 = cfg.analysis.s0.expect("checked by command_violations");
    let list = cfg.analysis.R_list.as_deref().expect("checked by command_violations");
    certify_negative_infimum(f, s0, list)
}

fn write_certificate(cfg: &RunConfig, c: &Certificate) -> crate::Result<()> {
    if cfg.wants(Format::Csv) {
        io::write_field_csv(&cfg.output_dir.join("witness.csv"), &c.witness)?;
    }
    emit(
        cfg,
        "certificate.json",
        &CertificateJson {
            rho0_estimate: c.rho0_estimate,
            r_n: c.r_n,
            s0: cfg.analysis.s0.unwrap_or_default(),
            energy: &c.energy,
            scanned: &c.scanned,
        },
    )
}

fn run_certify(cfg: &RunConfig, f: &Functional) -> crate::Result<i32> {
    match certify(cfg, f) {
        Ok(c) => {
            write_certificate(cfg, &c)?;
            Ok(EXIT_OK)
        }
        Err(e @ Error::NoWitness { .. }) => {
            eprintln!("error: {e}");
            Ok(EXIT_NOT_CONVERGED)
        }
        Err(e) => Err(e),
    }
}

fn write_scan_csv(path: &Path, rep: &SubadditivityReport) -> crate::Result<()> {
    let rows = rep.rows.iter().map(|r| {
        vec![
            io::fmt_real(r.mu),
            io::fmt_real(r.i_mu),
            io::fmt_real(r.i_sqrt),
            io::fmt_real(r.i_rho),
            io::fmt_real(r.margin),
            r.converged.to_string(),
        ]
    });
    io::write_csv(path, &["mu", "I_mu", "I_sqrt", "I_rho", "margin", "converged"], rows)
}

fn run_scan(cfg: &RunConfig, f: &Functional) -> crate::Result<i32> {
    let mus = cfg.analysis.mus.as_deref().expect("checked by command_violations");
    let rep = subadditivity_scan(f, &cfg.solve, cfg.solve.rho, mus, cfg.analysis.margin_floor)?;
    if cfg.wants(Format::Csv) {
        write_scan_csv(&cfg.output_dir.join("scan.csv"), &rep)?;
    }
    emit(cfg, "scan.json", &rep)?;
    let all = rep.rho_converged && rep.rows.iter().all(|r| r.converged);
    if !all {
        eprintln!("warning: some sub-solves did not converge; see the converged column");
    }
    Ok(status(all))
}

#[derive(Serialize)]
struct ProbeJson<'a> {
    rows: &'a [BrezisLiebRow],
}

fn run_probe(cfg: &RunConfig, f: &Functional) -> crate::Result<i32> {
    let a = &cfg.analysis;
    let g = &cfg.grid;
    let bump = compact_bump(
        f.grid(),
        a.bump_amplitude.unwrap_or(1.0),
        a.bump_r_width.unwrap_or(0.5 * g.r_max),
        a.bump_z_center.unwrap_or(-0.5 * g.z_max),
        a.bump_z_half_width.unwrap_or(0.125 * g.z_max),
    )?;
    let seps = a.separations.as_deref().expect("checked by command_violations");
    let rows = brezis_lieb_probe(&bump, seps, f.nonlinearity())?;
    if cfg.wants(Format::Csv) {
        let body = rows
            .iter()
            .map(|r| vec![io::fmt_real(r.separation), io::fmt_real(r.defect)]);
        io::write_csv(&cfg.output_dir.join("probe_bl.csv"), &["separation", "defect"], body)?;
    }
    emit(cfg, "probe_bl.json", &ProbeJson { rows: &rows })?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct HypothesesJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    potential: Option<HypothesisReport>,
    /// Minimum of V over the (r, z) grid nodes; reported for the coulomb potential.
    #[serde(skip_serializing_if = "Option::is_none")]
    potential_min: Option<f64>,
    nonlinearity: HypothesisReport,
}

fn potential_sample_min(f: &Functional) -> crate::Result<f64> {
    let g = f.grid();
    let zs: Vec<f64> = if g.has_z() { g.z().to_vec() } else { vec![0.0] };
    hydrogen_potential_min(f.potential(), g.r(), &zs)
}

fn run_check(cfg: &RunConfig, f: &Functional) -> crate::Result<i32> {
    let a = &cfg.analysis;
    let n = a.s_samples.unwrap_or(10_000);
    let s_max = a.s_max.unwrap_or(10.0);
    let s_grid: Vec<f64> = (1..=n).map(|i| s_max * i as f64 / n as f64).collect();
    let (potential, potential_min) = if f.potential().coulomb {
        (None, Some(potential_sample_min(f)?))
    } else {
        (Some(check_v_hypotheses(f.potential(), f.grid().r())?), None)
    };
    let report = HypothesesJson {
        potential,
        potential_min,
        nonlinearity: check_w_hypotheses(f.nonlinearity(), &s_grid),
    };
    emit(cfg, "hypotheses.json", &report)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct HydrogenJson {
    rho: f64,
    /// "certify" when ρ came from the trial certificate, "config" otherwise.
    rho_source: &'static str,
    potential_min: f64,
    energy_negative: bool,
    converged: bool,
}

fn run_hydrogen(cfg: &RunConfig, f: &Functional) -> crate::Result<i32> {
    let (rho, source) = if cfg.rho_given {
        (cfg.solve.rho, "config")
    } else {
        let c = match certify(cfg, f) {
            Ok(c) => c,
            Err(e @ Error::NoWitness { .. }) => {
                eprintln!("error: {e}");
                return Ok(EXIT_NOT_CONVERGED);
            }
            Err(e) => return Err(e),
        };
        write_certificate_quiet(cfg, &c)?;
        (c.rho0_estimate, "certify")
    };
    let r = solve(&cfg.solve.with_rho(rho), None, f)?;
    report_convergence(&r);
    io::export_solution(&r, &cfg.output_dir, cfg.wants(Format::Json), cfg.wants(Format::Csv))?;
    let summary = HydrogenJson {
        rho,
        rho_source: source,
        potential_min: potential_sample_min(f)?,
        energy_negative: r.breakdown.total < 0.0,
        converged: r.converged,
    };
    emit(cfg, "hydrogen.json", &summary)?;
    Ok(status(r.converged))
}

fn write_certificate_quiet(cfg: &RunConfig, c: &Certificate) -> crate::Result<()> {
    if cfg.wants(Format::Json) {
        io::write_json(
            &cfg.output_dir.join("certificate.json"),
            &CertificateJson {
                rho0_estimate: c.rho0_estimate,
                r_n: c.r_n,
                s0: cfg.analysis.s0.unwrap_or_default(),
                energy: &c.energy,
                scanned: &c.scanned,
            },
        )?;
    }
    Ok(())
}

/// Loads a `field.csv` written by a previous run onto `cfg`'s grid.
pub fn load_field(cfg: &RunConfig, path: &Path) -> crate::Result<Field> {
    io::read_field_csv(path, build_grid(cfg.grid)?)
}
