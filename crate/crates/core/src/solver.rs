//! Normalized gradient flow on the sphere `B_ρ = {‖u‖_{L²} = ρ}`.
//!
//! Each step moves along the tangent direction `d` (the gradient with its
//! component along `u` removed), renormalizes back onto `B_ρ`, and accepts
//! the candidate under an Armijo condition
//!
//! ```text
//! J(u⁺) ≤ J(u) − c · dt · ⟨J′(u), d⟩
//! ```
//!
//! halving `dt` on rejection and growing it by 1.2 on acceptance. With
//! [`Preconditioner::Sobolev`] the direction is `M⁻¹J′(u)` projected in the
//! `M⁻¹` metric, `M = −Δ + V_cyl + σ`; with [`Preconditioner::None`] it is the
//! plain L²-projected gradient. Both keep the fixed points: `d = 0` exactly
//! when `J′(u) = λu`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{residual_norm, EnergyBreakdown, Functional};
use crate::error::{Error, Result, Violation};
use crate::grid::{l2_norm_sq, recenter_z, Field};
use crate::precond::SobolevPreconditioner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    #[default]
    Sobolev,
}

fn default_dt_init() -> f64 {
    0.5
}
fn default_dt_min() -> f64 {
    1e-12
}
fn default_armijo() -> f64 {
    1e-4
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    20_000
}
fn default_precond_shift() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// Target L² norm.
    pub rho: f64,
    #[serde(default = "default_dt_init")]
    pub dt_init: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_armijo")]
    pub armijo_c: f64,
    /// Convergence when ‖J′(u) − λu‖ ≤ tol_residual · ρ.
    #[serde(default = "default_tol")]
    pub tol_residual: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Recentre along z every this many iterations; 0 disables.
    #[serde(default)]
    pub recenter_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub preconditioner: Preconditioner,
    /// Lower bound for the preconditioner shift σ.
    #[serde(default = "default_precond_shift")]
    pub precond_shift: f64,
}

impl SolveConfig {
    pub fn new(rho: f64) -> Self {
        SolveConfig {
            rho,
            dt_init: default_dt_init(),
            dt_min: default_dt_min(),
            armijo_c: default_armijo(),
            tol_residual: default_tol(),
            max_iters: default_max_iters(),
            recenter_every: 0,
            seed: 0,
            preconditioner: Preconditioner::Sobolev,
            precond_shift: default_precond_shift(),
        }
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        SolveConfig { rho, ..*self }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let positive = [
            ("rho", self.rho),
            ("dt_init", self.dt_init),
            ("dt_min", self.dt_min),
            ("tol_residual", self.tol_residual),
            ("precond_shift", self.precond_shift),
        ];
        for (name, val) in positive {
            if !(val.is_finite() && val > 0.0) {
                v.push(Violation::new(name, format!("must be positive, got {val}")));
            }
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            v.push(Violation::new("armijo_c", format!("must lie in (0, 1), got {}", self.armijo_c)));
        }
        if self.max_iters == 0 {
            v.push(Violation::new("max_iters", "must be at least 1"));
        }
        if self.dt_min > self.dt_init {
            v.push(Violation::new("dt_min", "must not exceed dt_init"));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    /// J(u₀) plus the accepted increments, each evaluated from an exact
    /// expansion around the current iterate on B_ρ; agrees with a direct
    /// evaluation up to rounding in J itself.
    #[serde(rename = "J")]
    pub energy: f64,
    pub residual: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub rho: f64,
    pub field: Field,
    pub breakdown: EnergyBreakdown,
    pub lambda: f64,
    pub residual: f64,
    pub iters: usize,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    /// Largest |‖u‖² − ρ²|/ρ² seen on an accepted iterate.
    pub max_constraint_drift: f64,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub field: Field,
    pub accepted: bool,
    pub energy: EnergyBreakdown,
}

/// Gradient-flow machinery bound to one functional.
pub struct Solver<'a> {
    functional: &'a Functional,
    precond: Option<SobolevPreconditioner>,
    cfg: SolveConfig,
}

struct State {
    u: Vec<f64>,
    grad: Vec<f64>,
    energy: EnergyBreakdown,
    lambda: f64,
    residual: f64,
}

impl<'a> Solver<'a> {
    pub fn new(functional: &'a Functional, cfg: &SolveConfig) -> Result<Self> {
        cfg.validate()?;
        let precond = match cfg.preconditioner {
            Preconditioner::Sobolev => Some(SobolevPreconditioner::new(
                functional.grid().clone(),
                functional.potential(),
            )),
            Preconditioner::None => None,
        };
        Ok(Solver {
            functional,
            precond,
            cfg: *cfg,
        })
    }

    fn state(&self, u: Vec<f64>) -> Result<State> {
        let grid = self.functional.grid();
        let energy = self.functional.energy_of(&u)?;
        let mut grad = vec![0.0; u.len()];
        self.functional.gradient_into(&u, &mut grad);
        let n2 = grid.dot(&u, &u);
        let lambda = grid.dot(&grad, &u) / n2;
        let residual = residual_norm(grid, &grad, &u, lambda);
        Ok(State {
            u,
            grad,
            energy,
            lambda,
            residual,
        })
    }

    fn normalize(&self, mut u: Vec<f64>) -> Result<Vec<f64>> {
        let n2 = self.functional.grid().dot(&u, &u);
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::ZeroField("normalization"));
        }
        let s = self.cfg.rho / n2.sqrt();
        u.iter_mut().for_each(|x| *x *= s);
        Ok(u)
    }

    /// Tangent descent direction and its slope ⟨J′(u), d⟩ ≥ 0.
    ///
    /// Everything is built from r = J′(u) − λu rather than J′(u): near a
    /// critical point J′(u) ≈ λu and working with J′(u) directly would lose
    /// the slope to cancellation.
    fn direction(&self, st: &State) -> (Vec<f64>, f64) {
        let grid = self.functional.grid();
        let r: Vec<f64> = st
            .grad
            .iter()
            .zip(&st.u)
            .map(|(g, u)| g - st.lambda * u)
            .collect();
        match &self.precond {
            None => {
                let slope = grid.dot(&r, &r);
                (r, slope)
            }
            Some(pre) => {
                let shift = self
                    .cfg
                    .precond_shift
                    .max(self.functional.nonlinearity().Omega - st.lambda);
                let mut pr = vec![0.0; st.u.len()];
                let mut pu = vec![0.0; st.u.len()];
                pre.apply(&r, shift, &mut pr);
                pre.apply(&st.u, shift, &mut pu);
                let upu = grid.dot(&st.u, &pu);
                let beta = grid.dot(&st.u, &pr) / upu;
                let d: Vec<f64> = pr.iter().zip(&pu).map(|(a, b)| a - beta * b).collect();
                let slope = grid.dot(&r, &pr) - beta * beta * upu;
                (d, slope)
            }
        }
    }

    fn candidate(&self, st: &State, d: &[f64], dt: f64) -> Result<Vec<f64>> {
        let raw = st.u.iter().zip(d).map(|(u, d)| u - dt * d).collect();
        self.normalize(raw)
    }

    /// One Armijo-tested step of size `dt` from `u` (assumed on B_ρ).
    pub fn step(&self, u: &Field, dt: f64) -> Result<StepOutcome> {
        let st = self.state(u.values().to_vec())?;
        let (d, slope) = self.direction(&st);
        let cand = self.candidate(&st, &d, dt)?;
        let accepted = self.increment(&st, &cand) <= -self.cfg.armijo_c * dt * slope;
        if accepted {
            let energy = self.functional.energy_of(&cand)?;
            Ok(StepOutcome {
                field: Field::new(u.grid().clone(), cand)?,
                accepted,
                energy,
            })
        } else {
            Ok(StepOutcome {
                field: u.clone(),
                accepted,
                energy: st.energy,
            })
        }
    }

    fn increment(&self, st: &State, cand: &[f64]) -> f64 {
        let delta: Vec<f64> = cand.iter().zip(&st.u).map(|(a, b)| a - b).collect();
        self.functional.increment_of(&st.u, &st.grad, &delta, st.lambda)
    }

    pub fn solve(&self, u0: Option<&Field>) -> Result<SolveResult> {
        let grid = self.functional.grid();
        let rho = self.cfg.rho;
        let start = match u0 {
            Some(u) => {
                if u.grid().spec() != grid.spec() {
                    return Err(Error::GridMismatch);
                }
                if l2_norm_sq(u) <= 0.0 {
                    return Err(Error::ZeroField("initial guess"));
                }
                u.values().to_vec()
            }
            None => initial_guess(grid, self.functional.potential().vortex_ell, self.cfg.seed)?
                .into_values(),
        };
        let mut st = self.state(self.normalize(start)?)?;
        let tol = self.cfg.tol_residual * rho;
        let rho2 = rho * rho;
        let mut drift = (grid.dot(&st.u, &st.u) - rho2).abs() / rho2;
        let mut dt = self.cfg.dt_init;
        let mut trace = Vec::new();
        let mut iters = 0;
        // energy along the path, advanced by accurate increments
        let mut path_j = st.energy.total;

        while st.residual > tol && iters < self.cfg.max_iters {
            let (d, slope) = self.direction(&st);
            if !(slope > 0.0) {
                break;
            }
            let mut accepted = None;
            while dt >= self.cfg.dt_min {
                let cand = self.candidate(&st, &d, dt)?;
                let inc = self.increment(&st, &cand);
                if inc <= -self.cfg.armijo_c * dt * slope {
                    accepted = Some((cand, inc));
                    break;
                }
                dt *= 0.5;
            }
            let Some((cand, inc)) = accepted else {
                break;
            };
            iters += 1;
            let used_dt = dt;
            path_j += inc;
            st = self.state(cand)?;
            drift = drift.max((grid.dot(&st.u, &st.u) - rho2).abs() / rho2);
            dt *= 1.2;

            if self.cfg.recenter_every > 0 && grid.has_z() && iters % self.cfg.recenter_every == 0 {
                let f = Field::new(grid.clone(), st.u.clone())?;
                let moved = recenter_z(&f);
                if l2_norm_sq(&moved) > 0.0 {
                    let cand = self.normalize(moved.into_values())?;
                    let inc = self.increment(&st, &cand);
                    // no energy increase at all keeps the trace monotone
                    if inc <= 0.0 {
                        path_j += inc;
                        st = self.state(cand)?;
                    }
                }
            }
            trace.push(TraceRow {
                iter: iters,
                energy: path_j,
                residual: st.residual,
                dt: used_dt,
            });
        }

        Ok(SolveResult {
            rho,
            converged: st.residual <= tol,
            lambda: st.lambda,
            residual: st.residual,
            breakdown: st.energy,
            field: Field::new(grid.clone(), st.u)?,
            iters,
            trace,
            max_constraint_drift: drift,
        })
    }
}

/// Single step of the flow; see [`Solver::step`].
pub fn step(u: &Field, dt: f64, cfg: &SolveConfig, functional: &Functional) -> Result<StepOutcome> {
    Solver::new(functional, cfg)?.step(u, dt)
}

/// Minimizes J on B_ρ from `u0`, or from a seeded bump when `u0` is `None`.
pub fn solve(cfg: &SolveConfig, u0: Option<&Field>, functional: &Functional) -> Result<SolveResult> {
    Solver::new(functional, cfg)?.solve(u0)
}

/// Solves at each ρ in ascending order, warm-starting from the previous
/// minimizer rescaled to the next norm.
pub fn continuation(
    cfg: &SolveConfig,
    rhos: &[f64],
    functional: &Functional,
    u0: Option<&Field>,
) -> Result<Vec<SolveResult>> {
    if rhos.iter().any(|&r| !(r > 0.0)) || rhos.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("rhos", "must be positive and strictly ascending"));
    }
    let mut out: Vec<SolveResult> = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let warm = match out.last() {
            Some(prev) => Some(warm_start(&prev.field, rho)?),
            None => u0.cloned(),
        };
        out.push(solve(&cfg.with_rho(rho), warm.as_ref(), functional)?);
    }
    Ok(out)
}

/// `u` rescaled to L² norm `rho`.
pub fn warm_start(u: &Field, rho: f64) -> Result<Field> {
    u.normalized(rho)
}

/// Seeded smooth bump, even in z, vanishing like r^{|ℓ|} at the axis.
pub fn initial_guess(grid: &std::sync::Arc<crate::grid::Grid>, ell: i64, seed: u64) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_max = grid.spec().r_max;
    let z_max = grid.spec().z_max;
    let rc = rng.gen_range(0.0..0.3) * r_max;
    let sr = rng.gen_range(0.1..0.25) * r_max;
    let sz = rng.gen_range(0.1..0.25) * z_max.max(f64::MIN_POSITIVE);
    let m = ell.unsigned_abs() as i32;
    Field::from_fn(grid.clone(), |r, z| {
        let axial = if grid.has_z() { (z / sz).powi(2) } else { 0.0 };
        let g = (-0.5 * (((r - rc) / sr).powi(2) + axial)).exp();
        (r / sr).powi(m) * g
    })
}
