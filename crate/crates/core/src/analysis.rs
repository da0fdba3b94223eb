//! Numerical certificates for the structural properties of `J`: negative
//! trial energies, scaling exponents, strict subadditivity of the infimum,
//! asymptotic additivity of `∫R(u)` and the growth bound behind coercivity.

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{concentrate, dilate, lq_norm_pow, EnergyBreakdown, Functional};
use crate::error::{Error, Result, Violation};
use crate::grid::{build_grid, integrate, l2_norm_sq, translate_z, Field, GridSpec};
use crate::model::{NonlinearitySpec, PotentialSpec};
use crate::solver::{solve, SolveConfig, SolveResult};

/// Largest radial (and axial) spacing for which the unit ramps are resolved.
pub const TRIAL_MAX_SPACING: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialSpec {
    pub s0: f64,
    pub r_n: f64,
    pub grid: GridSpec,
}

impl TrialSpec {
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = self.grid.violations();
        if !(self.s0.is_finite() && self.s0 > 0.0) {
            v.push(Violation::new("s0", "must be positive"));
        }
        if !(self.r_n.is_finite() && self.r_n > 0.0) {
            v.push(Violation::new("R_n", "must be positive"));
        }
        if v.is_empty() {
            let g = &self.grid;
            if g.r_max / g.n_r as f64 > TRIAL_MAX_SPACING {
                v.push(Violation::new("grid.n_r", "radial spacing must be <= 0.25"));
            }
            if g.z_dims() == 1 && 2.0 * g.z_max / g.n_z as f64 > TRIAL_MAX_SPACING {
                v.push(Violation::new("grid.n_z", "axial spacing must be <= 0.25"));
            }
        }
        v
    }
}

/// Radial plateau: ramps up on [R−1, R], equals s₀ on [R, 2R], ramps down on
/// [2R, 2R+1].
pub fn trial_profile(s0: f64, r_n: f64, r: f64) -> f64 {
    let up = (r - r_n + 1.0).clamp(0.0, 1.0);
    let down = (2.0 * r_n + 1.0 - r).clamp(0.0, 1.0);
    s0 * up.min(down)
}

/// Axial cutoff: 1 on |z| ≤ 1, linear to 0 at |z| = 2.
pub fn trial_cutoff(z: f64) -> f64 {
    (2.0 - z.abs()).clamp(0.0, 1.0)
}

pub fn min0_trial(spec: &TrialSpec) -> Result<Field> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(Error::Invalid(v));
    }
    let g = &spec.grid;
    if 2.0 * spec.r_n + 1.0 >= g.r_max {
        return Err(Error::SupportOverflow(format!(
            "trial support reaches r = {} but r_max = {}",
            2.0 * spec.r_n + 1.0,
            g.r_max
        )));
    }
    let has_z = g.z_dims() == 1;
    if has_z && g.z_max <= 2.0 {
        return Err(Error::SupportOverflow(format!(
            "trial support reaches |z| = 2 but z_max = {}",
            g.z_max
        )));
    }
    let grid = build_grid(*g)?;
    Field::from_fn(grid, |r, z| {
        let f = if has_z { trial_cutoff(z) } else { 1.0 };
        f * trial_profile(spec.s0, spec.r_n, r)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialEnergy {
    pub r_n: f64,
    /// ‖u_n‖_{L²}.
    pub rho: f64,
    pub energy: EnergyBreakdown,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub rho0_estimate: f64,
    pub r_n: f64,
    pub witness: Field,
    pub energy: EnergyBreakdown,
    /// Every trial evaluated, in scan order, up to and including the witness.
    pub scanned: Vec<TrialEnergy>,
}

/// Returns the first trial of `r_list` (on the functional's grid) with
/// negative energy.
pub fn certify_negative_infimum(functional: &Functional, s0: f64, r_list: &[f64]) -> Result<Certificate> {
    if r_list.is_empty() || r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("R_list", "must be non-empty and strictly ascending"));
    }
    let mut scanned = Vec::new();
    for &r_n in r_list {
        let spec = TrialSpec {
            s0,
            r_n,
            grid: *functional.grid().spec(),
        };
        let u = min0_trial(&spec)?;
        // the trial grid equals the functional's grid; rebind to share it
        let u = Field::new(functional.grid().clone(), u.into_values())?;
        let energy = functional.energy(&u)?;
        let rho = l2_norm_sq(&u).sqrt();
        scanned.push(TrialEnergy { r_n, rho, energy });
        if energy.total < 0.0 {
            return Ok(Certificate {
                rho0_estimate: rho,
                r_n,
                witness: u,
                energy,
                scanned,
            });
        }
    }
    Err(Error::NoWitness {
        tried: r_list.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingSlopes {
    pub kinetic: f64,
    pub potential: f64,
    pub nonlinear: f64,
    pub mass: f64,
    /// Slope of R^k·V(R), the reference for `potential`.
    pub potential_reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialScaling {
    pub rows: Vec<TrialEnergy>,
    pub slopes: ScalingSlopes,
}

/// Least-squares slope of log|y| against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Evaluates the trial family over `r_list` at a fixed number of cells per
/// unit length, each on a grid just large enough for its support.
pub fn trial_scaling(
    dim: usize,
    k: usize,
    s0: f64,
    r_list: &[f64],
    cells_per_unit: usize,
    potential: &PotentialSpec,
    nonlinearity: &NonlinearitySpec,
) -> Result<TrialScaling> {
    if r_list.len() < 2 {
        return Err(Error::invalid("R_list", "needs at least two radii for a slope"));
    }
    let rows: Vec<TrialEnergy> = r_list
        .par_iter()
        .map(|&r_n| {
            let r_max = (2.0 * r_n + 3.0).ceil();
            let n_r = r_max as usize * cells_per_unit;
            let spec = if k == dim {
                GridSpec::radial(dim, r_max, n_r)
            } else {
                GridSpec::cylindrical(dim, r_max, 3.0, n_r, 6 * cells_per_unit)
            };
            let u = min0_trial(&TrialSpec { s0, r_n, grid: spec })?;
            let f = Functional::new(u.grid().clone(), *potential, *nonlinearity)?;
            let energy = f.energy(&u)?;
            Ok(TrialEnergy {
                r_n,
                rho: l2_norm_sq(&u).sqrt(),
                energy,
            })
        })
        .collect::<Result<_>>()?;
    let col = |f: &dyn Fn(&TrialEnergy) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let reference: Vec<f64> = r_list
        .iter()
        .map(|&r| r.powi(k as i32) * potential.cylindrical_part(r))
        .collect();
    let slopes = ScalingSlopes {
        kinetic: loglog_slope(r_list, &col(&|t| t.energy.kinetic)),
        potential: loglog_slope(r_list, &col(&|t| t.energy.potential)),
        nonlinear: loglog_slope(r_list, &col(&|t| t.energy.nonlinear)),
        mass: loglog_slope(r_list, &col(&|t| t.rho * t.rho)),
        potential_reference: loglog_slope(r_list, &reference),
    };
    Ok(TrialScaling { rows, slopes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubadditivityRow {
    pub mu: f64,
    /// √(ρ² − μ²).
    pub mu_complement: f64,
    #[serde(rename = "I_mu")]
    pub i_mu: f64,
    #[serde(rename = "I_sqrt")]
    pub i_sqrt: f64,
    #[serde(rename = "I_rho")]
    pub i_rho: f64,
    pub margin: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubadditivityReport {
    pub rho: f64,
    pub margin_floor: f64,
    pub rho_converged: bool,
    pub rows: Vec<SubadditivityRow>,
    /// Every converged row beats the floor and at least one row converged.
    pub all_strict: bool,
}

/// Default floor for a margin to count as strict: 10⁻⁴·|I_ρ|.
pub fn default_margin_floor(i_rho: f64) -> f64 {
    1e-4 * i_rho.abs()
}

// Converged runs beat non-converged ones, then lower energy wins.
fn better(a: SolveResult, b: SolveResult) -> SolveResult {
    match (a.converged, b.converged) {
        (true, false) => a,
        (false, true) => b,
        _ if b.breakdown.total < a.breakdown.total => b,
        _ => a,
    }
}

/// Minimizes at `rho` from a seeded bump and, if given, from `warm`, and
/// keeps the better run.
pub fn best_solve(functional: &Functional, cfg: &SolveConfig, warm: Option<&Field>) -> Result<SolveResult> {
    let cold = solve(cfg, None, functional)?;
    match warm {
        Some(w) => Ok(better(cold, solve(cfg, Some(w), functional)?)),
        None => Ok(cold),
    }
}

pub fn subadditivity_scan(
    functional: &Functional,
    cfg: &SolveConfig,
    rho: f64,
    mus: &[f64],
    margin_floor: Option<f64>,
) -> Result<SubadditivityReport> {
    let mut bad = Vec::new();
    if !(rho > 0.0 && rho.is_finite()) {
        bad.push(Violation::new("rho", "must be positive"));
    }
    for (i, &mu) in mus.iter().enumerate() {
        if !(mu > 0.0 && mu < rho) {
            bad.push(Violation::new(format!("mus[{i}]"), format!("mu = {mu} must lie in (0, rho = {rho})")));
        }
    }
    if mus.is_empty() {
        bad.push(Violation::new("mus", "must be non-empty"));
    }
    if !bad.is_empty() {
        return Err(Error::Invalid(bad));
    }
    let top = best_solve(functional, &cfg.with_rho(rho), None)?;
    let i_rho = top.breakdown.total;
    let floor = margin_floor.unwrap_or_else(|| default_margin_floor(i_rho));
    let rows: Vec<SubadditivityRow> = mus
        .par_iter()
        .map(|&mu| {
            let nu = (rho * rho - mu * mu).sqrt();
            let sub = |m: f64| -> Result<SolveResult> {
                let warm = top.field.normalized(m)?;
                best_solve(functional, &cfg.with_rho(m), Some(&warm))
            };
            let a = sub(mu)?;
            let b = sub(nu)?;
            let (i_mu, i_sqrt) = (a.breakdown.total, b.breakdown.total);
            Ok(SubadditivityRow {
                mu,
                mu_complement: nu,
                i_mu,
                i_sqrt,
                i_rho,
                margin: i_mu + i_sqrt - i_rho,
                converged: a.converged && b.converged && top.converged,
            })
        })
        .collect::<Result<_>>()?;
    let converged: Vec<&SubadditivityRow> = rows.iter().filter(|r| r.converged).collect();
    let all_strict = !converged.is_empty() && converged.iter().all(|r| r.margin > floor);
    Ok(SubadditivityReport {
        rho,
        margin_floor: floor,
        rho_converged: top.converged,
        rows,
        all_strict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrezisLiebRow {
    pub separation: f64,
    pub defect: f64,
}

/// `∫R(u)`, the non-quadratic part of the nonlinear energy.
pub fn t_tilde(u: &Field, w: &NonlinearitySpec) -> Result<f64> {
    Ok(integrate(&u.map(|s| w.r(s))?))
}

/// Defect `|T̃(u_s) − T̃(u_s − b) − T̃(b)|` for `u_s = b + b(· − s e_z)`.
pub fn brezis_lieb_probe(bump: &Field, separations: &[f64], w: &NonlinearitySpec) -> Result<Vec<BrezisLiebRow>> {
    if !bump.grid().has_z() {
        return Err(Error::invalid("bump", "needs an axial dimension (k < N)"));
    }
    if separations.iter().any(|&s| !(s >= 0.0)) || separations.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::invalid("separations", "must be non-negative and ascending"));
    }
    let t_b = t_tilde(bump, w)?;
    separations
        .iter()
        .map(|&s| {
            let moved = translate_z(bump, s)?;
            let u_s = bump.axpy(1.0, &moved)?;
            let defect = (t_tilde(&u_s, w)? - t_tilde(&moved, w)? - t_b).abs();
            Ok(BrezisLiebRow { separation: s, defect })
        })
        .collect()
}

/// `A·cos²` bump in both r (on r < r_width) and z (on |z − z_center| < z_half_width).
pub fn compact_bump(
    grid: &std::sync::Arc<crate::grid::Grid>,
    amplitude: f64,
    r_width: f64,
    z_center: f64,
    z_half_width: f64,
) -> Result<Field> {
    use std::f64::consts::FRAC_PI_2;
    Field::from_fn(grid.clone(), |r, z| {
        let dz = (z - z_center).abs();
        if r >= r_width || dz >= z_half_width {
            0.0
        } else {
            amplitude * (FRAC_PI_2 * r / r_width).cos().powi(2) * (FRAC_PI_2 * dz / z_half_width).cos().powi(2)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityRow {
    #[serde(rename = "J")]
    pub energy: f64,
    pub kinetic: f64,
    pub c_norm_sq: f64,
    /// ‖u‖_γ^γ.
    pub l_gamma: f64,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub rho: f64,
    /// Whether the declared growth constants satisfy the mass-subcritical gate.
    pub hypotheses_hold: bool,
    /// Calibrated surrogate for the Gagliardo–Nirenberg constant.
    pub constant: f64,
    /// γN/4 − N/2, the power of 2·kinetic in the bound.
    pub exponent: f64,
    pub rows: Vec<CoercivityRow>,
    pub min_slack: f64,
    /// Consecutive differences of J along the field list.
    pub increments: Vec<f64>,
    /// J rises over the last step.
    pub bounded_below: bool,
    /// J falls at every step, by growing amounts.
    pub diverging: bool,
}

pub fn coercivity_probe(functional: &Functional, rho: f64, fields: &[Field]) -> Result<CoercivityReport> {
    if fields.is_empty() {
        return Err(Error::invalid("fields", "must be non-empty"));
    }
    let w = functional.nonlinearity();
    let dim = functional.grid().dim() as f64;
    let gamma = w.gamma;
    let exponent = gamma * dim / 4.0 - dim / 2.0;
    let mut data = Vec::with_capacity(fields.len());
    for u in fields {
        let u = u.normalized(rho)?;
        let e = functional.energy(&u)?;
        data.push((e, lq_norm_pow(&u, gamma)));
    }
    let constant = data
        .iter()
        .map(|(e, lg)| lg / (2.0 * e.kinetic).powf(exponent))
        .fold(0.0, f64::max);
    let rows: Vec<CoercivityRow> = data
        .iter()
        .map(|&(e, lg)| {
            let bound = 0.5 * e.c_norm_sq - w.b2 * constant * (2.0 * e.kinetic).powf(exponent)
                + (0.5 * w.Omega - w.b1) * rho * rho;
            CoercivityRow {
                energy: e.total,
                kinetic: e.kinetic,
                c_norm_sq: e.c_norm_sq,
                l_gamma: lg,
                bound,
                slack: e.total - bound,
            }
        })
        .collect();
    let increments: Vec<f64> = rows.windows(2).map(|p| p[1].energy - p[0].energy).collect();
    let bounded_below = increments.last().is_some_and(|&d| d > 0.0);
    let diverging = !increments.is_empty()
        && increments.iter().all(|&d| d < 0.0)
        && increments.windows(2).all(|p| p[1] <= p[0]);
    Ok(CoercivityReport {
        rho,
        hypotheses_hold: w.violations(functional.grid().dim()).is_empty(),
        constant,
        exponent,
        min_slack: rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
        rows,
        increments,
        bounded_below,
        diverging,
    })
}

/// `λ^{N/2} u(λx)` for each λ; L² mass is preserved.
pub fn concentration_family(u: &Field, lambdas: &[f64]) -> Result<Vec<Field>> {
    lambdas.iter().map(|&l| concentrate(u, l)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilationCheck {
    pub theta: f64,
    /// |T(u_θ) − θ²T(u)| / |θ²T(u)| with T(u) = ∫W(u).
    pub t_rel_error: f64,
    /// |‖u_θ‖² − θ²‖u‖²| / θ²‖u‖².
    pub mass_rel_error: f64,
    /// (θ²‖u‖_c² − ‖u_θ‖_c²) / θ²‖u‖_c²; positive when the c-norm scales strictly sublinearly.
    pub c_norm_margin: f64,
}

pub fn dilation_check(functional: &Functional, u: &Field, theta: f64) -> Result<DilationCheck> {
    let ut = dilate(u, theta)?;
    let e = functional.energy(u)?;
    let et = functional.energy(&ut)?;
    let t2 = theta * theta;
    let m = l2_norm_sq(u);
    Ok(DilationCheck {
        theta,
        t_rel_error: (et.nonlinear - t2 * e.nonlinear).abs() / (t2 * e.nonlinear).abs(),
        mass_rel_error: (l2_norm_sq(&ut) - t2 * m).abs() / (t2 * m),
        c_norm_margin: (t2 * e.c_norm_sq - et.c_norm_sq) / (t2 * e.c_norm_sq),
    })
}
