//! Run configuration: a TOML document with the sections `[grid]`,
//! `[potential]`, `[nonlinearity]`, `[solve]`, `[analysis]` and `[output]`.
//!
//! Syntax errors and schema/value errors are kept apart: the first is
//! [`ConfigError::Parse`], everything that parses but is wrong is
//! [`ConfigError::Validation`] with one `section.key` path per problem.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;

use crate::analysis::TRIAL_MAX_SPACING;
use crate::error::{join_violations, Violation};
use crate::grid::GridSpec;
use crate::model::{NonlinearitySpec, PotentialSpec, RKind};
use crate::solver::{Preconditioner, SolveConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {}", join_violations(.0))]
    Validation(Vec<Violation>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Certify,
    ScanSub,
    ProbeBl,
    CheckHyp,
    Hydrogen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNonlinearity {
    Omega: f64,
    R_kind: Option<RKind>,
    p: Option<f64>,
    b1: Option<f64>,
    b2: Option<f64>,
    gamma: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    q1: Option<f64>,
    q2: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolve {
    rho: Option<f64>,
    dt_init: Option<f64>,
    dt_min: Option<f64>,
    armijo_c: Option<f64>,
    tol_residual: Option<f64>,
    max_iters: Option<usize>,
    recenter_every: Option<usize>,
    seed: Option<u64>,
    preconditioner: Option<Preconditioner>,
    precond_shift: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Plateau height of the trial fields.
    pub s0: Option<f64>,
    /// Inner radii scanned by `certify`, ascending.
    pub R_list: Option<Vec<f64>>,
    /// Partial norms μ for `scan-sub`, each in (0, ρ).
    pub mus: Option<Vec<f64>>,
    pub margin_floor: Option<f64>,
    /// z-separations for `probe-bl`, ascending.
    pub separations: Option<Vec<f64>>,
    pub bump_amplitude: Option<f64>,
    pub bump_r_width: Option<f64>,
    pub bump_z_half_width: Option<f64>,
    pub bump_z_center: Option<f64>,
    /// Upper end of the s-samples for the nonlinearity checks.
    pub s_max: Option<f64>,
    pub s_samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    formats: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub nonlinearity: NonlinearitySpec,
    /// `solve.rho` is 1 when the document leaves it out; see `rho_given`.
    pub solve: SolveConfig,
    pub rho_given: bool,
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl RunConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn deserialize_section<T: DeserializeOwned>(value: &toml::Value, name: &str, out: &mut Vec<Violation>) -> Option<T> {
    match serde_path_to_error::deserialize::<_, T>(value.clone()) {
        Ok(v) => Some(v),
        Err(e) => {
            let path = e.path().to_string();
            let mut full = if path == "." || path.is_empty() {
                name.to_string()
            } else {
                format!("{name}.{path}")
            };
            // a missing key is reported against its parent
            let msg = e.inner().to_string();
            if let Some(key) = msg.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
                full = format!("{full}.{key}");
            }
            out.push(Violation::new(full, msg));
            None
        }
    }
}

fn required<T: DeserializeOwned>(table: &toml::Table, name: &str, out: &mut Vec<Violation>) -> Option<T> {
    match table.get(name) {
        Some(v) => deserialize_section(v, name, out),
        None => {
            out.push(Violation::new(name, "section is required"));
            None
        }
    }
}

fn optional<T: DeserializeOwned + Default>(table: &toml::Table, name: &str, out: &mut Vec<Violation>) -> Option<T> {
    match table.get(name) {
        Some(v) => deserialize_section(v, name, out),
        None => Some(T::default()),
    }
}

/// Parses and validates everything that does not depend on the command.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let mut bad = Vec::new();
    for key in table.keys() {
        if !["grid", "potential", "nonlinearity", "solve", "analysis", "output"].contains(&key.as_str()) {
            bad.push(Violation::new(key.clone(), "unknown section"));
        }
    }
    let grid: Option<GridSpec> = required(&table, "grid", &mut bad);
    let potential: Option<PotentialSpec> = optional(&table, "potential", &mut bad);
    let raw_w: Option<RawNonlinearity> = required(&table, "nonlinearity", &mut bad);
    let raw_solve: Option<RawSolve> = optional(&table, "solve", &mut bad);
    let analysis: Option<AnalysisConfig> = optional(&table, "analysis", &mut bad);
    let raw_out: Option<RawOutput> = optional(&table, "output", &mut bad);

    if let Some(g) = &grid {
        bad.extend(g.violations().into_iter().map(|v| v.in_section("grid")));
    }
    if let Some(p) = &potential {
        bad.extend(p.violations().into_iter().map(|v| v.in_section("potential")));
    }
    let nonlinearity = raw_w.map(build_nonlinearity);
    if let (Some(w), Some(g)) = (&nonlinearity, &grid) {
        bad.extend(w.violations(g.dim).into_iter().map(|v| v.in_section("nonlinearity")));
    }
    let solve = raw_solve.as_ref().map(build_solve);
    if let Some(s) = &solve {
        bad.extend(s.violations().into_iter().map(|v| v.in_section("solve")));
    }
    if let Some(a) = &analysis {
        bad.extend(analysis_violations(a));
    }
    let mut formats = vec![Format::Json, Format::Csv];
    let mut output_dir = PathBuf::from(".");
    if let Some(o) = raw_out {
        if let Some(d) = o.dir {
            output_dir = d;
        }
        if let Some(list) = o.formats {
            formats.clear();
            for f in list {
                match f.as_str() {
                    "json" => formats.push(Format::Json),
                    "csv" => formats.push(Format::Csv),
                    other => bad.push(Violation::new(
                        "output.formats",
                        format!("unknown format {other:?}; expected json or csv"),
                    )),
                }
            }
        }
    }

    if !bad.is_empty() {
        return Err(ConfigError::Validation(bad));
    }
    Ok(RunConfig {
        grid: grid.unwrap(),
        potential: potential.unwrap(),
        nonlinearity: nonlinearity.unwrap(),
        solve: solve.unwrap(),
        rho_given: raw_solve.and_then(|s| s.rho).is_some(),
        analysis: analysis.unwrap(),
        output_dir,
        formats,
    })
}

fn build_nonlinearity(raw: RawNonlinearity) -> NonlinearitySpec {
    let kind = raw.R_kind.unwrap_or(if raw.p.is_some() {
        RKind::PowerAttractive
    } else {
        RKind::None
    });
    let base = match kind {
        RKind::PowerAttractive => NonlinearitySpec::power(raw.Omega, raw.p.unwrap_or(0.0)),
        RKind::None => NonlinearitySpec {
            p: raw.p.unwrap_or(0.0),
            ..NonlinearitySpec::quadratic(raw.Omega)
        },
    };
    NonlinearitySpec {
        b1: raw.b1.unwrap_or(base.b1),
        b2: raw.b2.unwrap_or(base.b2),
        gamma: raw.gamma.unwrap_or(base.gamma),
        c1: raw.c1.unwrap_or(base.c1),
        c2: raw.c2.unwrap_or(base.c2),
        q1: raw.q1.unwrap_or(base.q1),
        q2: raw.q2.unwrap_or(base.q2),
        ..base
    }
}

fn build_solve(raw: &RawSolve) -> SolveConfig {
    let d = SolveConfig::new(raw.rho.unwrap_or(1.0));
    SolveConfig {
        dt_init: raw.dt_init.unwrap_or(d.dt_init),
        dt_min: raw.dt_min.unwrap_or(d.dt_min),
        armijo_c: raw.armijo_c.unwrap_or(d.armijo_c),
        tol_residual: raw.tol_residual.unwrap_or(d.tol_residual),
        max_iters: raw.max_iters.unwrap_or(d.max_iters),
        recenter_every: raw.recenter_every.unwrap_or(d.recenter_every),
        seed: raw.seed.unwrap_or(d.seed),
        preconditioner: raw.preconditioner.unwrap_or(d.preconditioner),
        precond_shift: raw.precond_shift.unwrap_or(d.precond_shift),
        ..d
    }
}

fn ascending(list: &[f64]) -> bool {
    list.windows(2).all(|w| w[1] > w[0])
}

fn analysis_violations(a: &AnalysisConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    let positive = [
        ("s0", a.s0),
        ("margin_floor", a.margin_floor),
        ("bump_amplitude", a.bump_amplitude),
        ("bump_r_width", a.bump_r_width),
        ("bump_z_half_width", a.bump_z_half_width),
        ("s_max", a.s_max),
    ];
    for (name, val) in positive {
        if let Some(x) = val {
            if !(x.is_finite() && x > 0.0) {
                v.push(Violation::new(format!("analysis.{name}"), format!("must be positive, got {x}")));
            }
        }
    }
    if let Some(r) = &a.R_list {
        if r.is_empty() || r.iter().any(|&x| !(x > 0.0)) || !ascending(r) {
            v.push(Violation::new("analysis.R_list", "must be non-empty, positive and strictly ascending"));
        }
    }
    if let Some(m) = &a.mus {
        if m.is_empty() || m.iter().any(|&x| !(x > 0.0)) {
            v.push(Violation::new("analysis.mus", "must be non-empty and positive"));
        }
    }
    if let Some(s) = &a.separations {
        if s.is_empty() || s.iter().any(|&x| !(x >= 0.0)) || s.windows(2).any(|w| w[1] < w[0]) {
            v.push(Violation::new("analysis.separations", "must be non-empty, non-negative and ascending"));
        }
    }
    if a.s_samples == Some(0) {
        v.push(Violation::new("analysis.s_samples", "must be at least 1"));
    }
    v
}

/// Checks that the blocks `cmd` reads are present and consistent.
pub fn command_violations(cfg: &RunConfig, cmd: Command) -> Vec<Violation> {
    let mut v = Vec::new();
    let a = &cfg.analysis;
    let g = &cfg.grid;
    let needs_trials = match cmd {
        Command::Certify => true,
        Command::Hydrogen => !cfg.rho_given,
        _ => false,
    };
    if matches!(cmd, Command::Solve | Command::ScanSub) && !cfg.rho_given {
        v.push(Violation::new("solve.rho", "required by this command"));
    }
    if needs_trials {
        if a.s0.is_none() {
            v.push(Violation::new("analysis.s0", "required to build trial fields"));
        }
        match &a.R_list {
            None => v.push(Violation::new("analysis.R_list", "required to build trial fields")),
            Some(list) => {
                if let Some(&r) = list.iter().find(|&&r| 2.0 * r + 1.0 >= g.r_max) {
                    v.push(Violation::new(
                        "analysis.R_list",
                        format!("trial support 2R+1 = {} must stay below grid.r_max = {}", 2.0 * r + 1.0, g.r_max),
                    ));
                }
            }
        }
        if g.r_max / g.n_r as f64 > TRIAL_MAX_SPACING {
            v.push(Violation::new("grid.n_r", "trial fields need radial spacing <= 0.25"));
        }
        if g.z_dims() == 1 {
            if 2.0 * g.z_max / g.n_z as f64 > TRIAL_MAX_SPACING {
                v.push(Violation::new("grid.n_z", "trial fields need axial spacing <= 0.25"));
            }
            if g.z_max <= 2.0 {
                v.push(Violation::new("grid.z_max", "trial fields need z_max > 2"));
            }
        }
    }
    if cmd == Command::ScanSub {
        match &a.mus {
            None => v.push(Violation::new("analysis.mus", "required by scan-sub")),
            Some(m) => {
                for (i, &mu) in m.iter().enumerate() {
                    if !(mu < cfg.solve.rho) {
                        v.push(Violation::new(
                            format!("analysis.mus[{i}]"),
                            format!("mu = {mu} must be below solve.rho = {}", cfg.solve.rho),
                        ));
                    }
                }
            }
        }
    }
    if cmd == Command::ProbeBl {
        if g.z_dims() != 1 {
            v.push(Violation::new("grid.k", "probe-bl needs an axial direction (k < N)"));
        }
        if a.separations.is_none() {
            v.push(Violation::new("analysis.separations", "required by probe-bl"));
        }
        if cfg.nonlinearity.R_kind == RKind::None {
            v.push(Violation::new("nonlinearity.R_kind", "probe-bl needs a power nonlinearity"));
        }
    }
    if cmd == Command::Hydrogen {
        if !cfg.potential.coulomb {
            v.push(Violation::new("potential.coulomb", "the hydrogen command needs coulomb = true"));
        }
        if g.k != 2 {
            v.push(Violation::new("grid.k", "the hydrogen model needs k = 2"));
        }
        let w = &cfg.nonlinearity;
        let p_max = 2.0 + 4.0 / g.dim as f64;
        if w.R_kind != RKind::PowerAttractive || !(w.p > 2.0 && w.p < p_max) {
            v.push(Violation::new(
                "nonlinearity.p",
                format!("the hydrogen model needs a power nonlinearity with 2 < p < 2 + 4/N = {p_max}"),
            ));
        }
        if w.Omega != 0.0 {
            v.push(Violation::new(
                "nonlinearity.Omega",
                "the hydrogen model carries Omega in the potential (potential.shift_Omega_V); set 0 here",
            ));
        }
    }
    v
}
