//! The constrained functional
//!
//! ```text
//! J(u) = ∫ ½|∇u|² + ½ V u² + W(u) dx
//! ```
//!
//! together with its discrete L² gradient `J′(u) = −Δu + V u + W′(u)`, the
//! Lagrange multiplier `λ = ⟨J′(u), u⟩ / ‖u‖²`, the Euler–Lagrange residual
//! `‖J′(u) − λu‖`, and the rescalings used by the scaling identities.
//!
//! The gradient is exact for the discrete energy: kinetic energy is the
//! face-based Dirichlet form and `−Δ` its derivative with respect to the
//! weighted inner product, so `⟨J′(u), v⟩` is the directional derivative of
//! `J` to rounding.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{kinetic_energy, l2_norm_sq, psum, Field, Grid};
use crate::model::{NonlinearitySpec, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// ½∫|∇u|²
    pub kinetic: f64,
    /// ½∫V u²
    pub potential: f64,
    /// ∫W(u)
    pub nonlinear: f64,
    pub total: f64,
    /// ∫|∇u|² + V u²
    pub c_norm_sq: f64,
}

impl EnergyBreakdown {
    pub fn zero() -> Self {
        EnergyBreakdown {
            kinetic: 0.0,
            potential: 0.0,
            nonlinear: 0.0,
            total: 0.0,
            c_norm_sq: 0.0,
        }
    }

    fn from_parts(kinetic: f64, potential: f64, nonlinear: f64) -> Result<Self> {
        let b = EnergyBreakdown {
            kinetic,
            potential,
            nonlinear,
            total: kinetic + potential + nonlinear,
            c_norm_sq: 2.0 * (kinetic + potential),
        };
        if [b.kinetic, b.potential, b.nonlinear, b.total]
            .iter()
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("energy"));
        }
        Ok(b)
    }
}

/// J evaluated on one grid, with V cached at the nodes.
#[derive(Debug, Clone)]
pub struct Functional {
    grid: Arc<Grid>,
    potential: PotentialSpec,
    nonlinearity: NonlinearitySpec,
    v: Vec<f64>,
}

impl Functional {
    pub fn new(grid: Arc<Grid>, potential: PotentialSpec, nonlinearity: NonlinearitySpec) -> Result<Self> {
        let v: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let (r, z) = grid.coords(idx);
                potential.eval_unchecked(r, z)
            })
            .collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("potential at grid nodes"));
        }
        Ok(Functional {
            grid,
            potential,
            nonlinearity,
            v,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }
    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nonlinearity
    }
    /// V at each node.
    pub fn potential_values(&self) -> &[f64] {
        &self.v
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.grid().spec() != self.grid.spec() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn energy(&self, u: &Field) -> Result<EnergyBreakdown> {
        self.check(u)?;
        Ok(self.energy_of(u.values())?)
    }

    pub(crate) fn energy_of(&self, u: &[f64]) -> Result<EnergyBreakdown> {
        let g = &*self.grid;
        let kinetic = 0.5 * g.dirichlet_form(u);
        let potential = 0.5 * psum(u.len(), &|i| self.v[i] * u[i] * u[i] * g.weight(i));
        let w = &self.nonlinearity;
        let nonlinear = psum(u.len(), &|i| w.w(u[i]) * g.weight(i));
        EnergyBreakdown::from_parts(kinetic, potential, nonlinear)
    }

    /// J′(u) = −Δu + V u + W′(u), the L² gradient on the grid.
    pub fn gradient(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let mut out = vec![0.0; u.values().len()];
        self.gradient_into(u.values(), &mut out);
        Field::new(self.grid.clone(), out)
    }

    pub(crate) fn gradient_into(&self, u: &[f64], out: &mut [f64]) {
        self.grid.neg_laplacian(u, out);
        let w = &self.nonlinearity;
        for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(&self.v) {
            *o += vi * ui + w.w_prime(ui);
        }
    }

    /// Increment of the Lagrangian `J − (λ/2)‖·‖²` from `u` to `u + δ`,
    /// given `grad = J′(u)`, from the exact expansion
    ///
    /// ```text
    /// ⟨J′(u) − λu, δ⟩ + ½‖∇δ‖² + ½⟨(V − λ)δ, δ⟩ + ∫ [W(u+δ) − W(u) − W′(u)δ]
    /// ```
    ///
    /// When both points lie on the same sphere this equals J(u + δ) − J(u),
    /// but its rounding error scales with δ instead of with J, and the
    /// λ-weighted norm drift of a renormalized iterate drops out.
    pub(crate) fn increment_of(&self, u: &[f64], grad: &[f64], delta: &[f64], lambda: f64) -> f64 {
        let g = &*self.grid;
        let w = &self.nonlinearity;
        let linear = psum(u.len(), &|i| (grad[i] - lambda * u[i]) * delta[i] * g.weight(i));
        let kinetic = 0.5 * g.dirichlet_form(delta);
        let rest = psum(u.len(), &|i| {
            let d = delta[i];
            (0.5 * (self.v[i] + w.Omega - lambda) * d * d + w.r_remainder(u[i], d)) * g.weight(i)
        });
        linear + kinetic + rest
    }

    /// Rayleigh quotient ⟨J′(u), u⟩ / ‖u‖².
    pub fn lambda(&self, u: &Field) -> Result<f64> {
        let g = self.gradient(u)?;
        let n2 = l2_norm_sq(u);
        if n2 <= 0.0 {
            return Err(Error::ZeroField("lambda estimate"));
        }
        Ok(self.grid.dot(g.values(), u.values()) / n2)
    }

    /// ‖J′(u) − λu‖ in the weighted L² norm.
    pub fn residual(&self, u: &Field, lambda: f64) -> Result<f64> {
        let g = self.gradient(u)?;
        Ok(residual_norm(&self.grid, g.values(), u.values(), lambda))
    }
}

pub(crate) fn residual_norm(grid: &Grid, g: &[f64], u: &[f64], lambda: f64) -> f64 {
    psum(u.len(), &|i| {
        let d = g[i] - lambda * u[i];
        d * d * grid.weight(i)
    })
    .sqrt()
}

pub fn energy(u: &Field, v: &PotentialSpec, w: &NonlinearitySpec) -> Result<EnergyBreakdown> {
    Functional::new(u.grid().clone(), *v, *w)?.energy(u)
}

pub fn gradient(u: &Field, v: &PotentialSpec, w: &NonlinearitySpec) -> Result<Field> {
    Functional::new(u.grid().clone(), *v, *w)?.gradient(u)
}

pub fn lambda_estimate(u: &Field, v: &PotentialSpec, w: &NonlinearitySpec) -> Result<f64> {
    Functional::new(u.grid().clone(), *v, *w)?.lambda(u)
}

pub fn el_residual(u: &Field, lambda: f64, v: &PotentialSpec, w: &NonlinearitySpec) -> Result<f64> {
    Functional::new(u.grid().clone(), *v, *w)?.residual(u, lambda)
}

/// Nodes whose magnitude exceeds this fraction of max|u| count as support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// `amplitude · u(x / scale)` by bilinear interpolation.
///
/// With `scale > 1` the profile is stretched; mass of `u` beyond
/// `r_max / scale` or `|z| > z_max / scale` would leave the box, which is
/// reported as a support overflow.
pub fn rescale(u: &Field, scale: f64, amplitude: f64) -> Result<Field> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("scale", format!("must be positive, got {scale}")));
    }
    let g = u.grid();
    if scale > 1.0 {
        let (r_lim, z_lim) = (g.spec().r_max / scale, g.spec().z_max / scale);
        let cutoff = SUPPORT_TOL * u.max_abs();
        let overflow = (0..g.len()).any(|idx| {
            let (r, z) = g.coords(idx);
            let outside = r + 0.5 * g.dr() > r_lim || (g.has_z() && z.abs() + 0.5 * g.dz() > z_lim);
            outside && u.values()[idx].abs() > cutoff
        });
        if overflow {
            return Err(Error::SupportOverflow(format!(
                "stretching by {scale} pushes the support past the grid; enlarge r_max/z_max"
            )));
        }
    }
    Field::from_fn(g.clone(), |r, z| amplitude * u.interpolate(r / scale, z / scale))
}

/// The volume dilation u_θ(x) = u(x / θ^{2/N}), θ ≥ 1, which multiplies the
/// L² mass and ∫W(u) by θ².
pub fn dilate(u: &Field, theta: f64) -> Result<Field> {
    if !(theta >= 1.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", format!("dilation needs theta >= 1, got {theta}")));
    }
    if theta == 1.0 {
        return Ok(u.clone());
    }
    let n = u.grid().dim() as f64;
    rescale(u, theta.powf(2.0 / n), 1.0)
}

/// The L²-preserving concentration λ^{N/2} u(λx).
pub fn concentrate(u: &Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let n = u.grid().dim() as f64;
    rescale(u, 1.0 / lambda, lambda.powf(n / 2.0))
}

/// ∫|u|^q dx.
pub fn lq_norm_pow(u: &Field, q: f64) -> f64 {
    let g = u.grid();
    let v = u.values();
    psum(v.len(), &|i| v[i].abs().powf(q) * g.weight(i))
}

/// ‖u‖_q^q / (‖u‖₂^{q−β} ‖∇u‖₂^β) with β = N(q − 2)/2; invariant under
/// u ↦ λ^{N/2} u(λx).
pub fn gn_ratio(u: &Field, q: f64) -> Result<f64> {
    let n = u.grid().dim() as f64;
    let beta = n * (q - 2.0) / 2.0;
    let l2 = l2_norm_sq(u).sqrt();
    let grad = (2.0 * kinetic_energy(u)).sqrt();
    if l2 == 0.0 || grad == 0.0 {
        return Err(Error::ZeroField("Gagliardo-Nirenberg ratio"));
    }
    Ok(lq_norm_pow(u, q) / (l2.powf(q - beta) * grad.powf(beta)))
}

/// G(u) for the nonlinear hydrogen model: V = ℓ²/r² + Ω − 1/|x| and
/// W(s) = −|s|^p / p, on a k = 2 grid.
pub fn hydrogen_energy(u: &Field, ell: i64, omega: f64, p: f64) -> Result<EnergyBreakdown> {
    let (v, w) = hydrogen_model(u.grid().spec().dim, u.grid().spec().k, ell, omega, p)?;
    Functional::new(u.grid().clone(), v, w)?.energy(u)
}

/// Validated (V, W) pair for the hydrogen model.
pub fn hydrogen_model(dim: usize, k: usize, ell: i64, omega: f64, p: f64) -> Result<(PotentialSpec, NonlinearitySpec)> {
    let mut violations = Vec::new();
    if k != 2 {
        violations.push(crate::error::Violation::new("k", "the hydrogen model needs k = 2"));
    }
    let p_max = 2.0 + 4.0 / dim as f64;
    if !(p > 2.0 && p < p_max) {
        violations.push(crate::error::Violation::new(
            "p",
            format!("hydrogen model needs 2 < p < 2 + 4/N = {p_max}, got {p}"),
        ));
    }
    let v = PotentialSpec {
        vortex_ell: ell,
        coulomb: true,
        shift_Omega_V: omega,
        ..Default::default()
    };
    violations.extend(v.violations());
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    Ok((v, NonlinearitySpec::power(0.0, p)))
}
