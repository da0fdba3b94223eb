//! Potential and nonlinearity families, and sampled checks of the structural
//! hypotheses they are meant to satisfy.
//!
//! The potential is
//!
//! ```text
//! V(r, z) = ℓ²/r² + c_α r^{−α} + Ω_V − [coulomb] / √(r² + z²)
//! ```
//!
//! and the nonlinearity `W(s) = (Ω/2) s² + R(s)` with either `R ≡ 0` or the
//! attractive power `R(s) = −|s|^p / p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSpec {
    /// Vortex charge ℓ; contributes ℓ²/r².
    pub vortex_ell: i64,
    pub power_alpha: f64,
    pub power_coeff: f64,
    /// Adds −1/|x|.
    pub coulomb: bool,
    /// Constant shift Ω_V, used by the hydrogen model.
    pub shift_Omega_V: f64,
}

impl PotentialSpec {
    /// V ≡ 0.
    pub fn free() -> Self {
        PotentialSpec::default()
    }

    /// V = ℓ²/r².
    pub fn vortex(ell: i64) -> Self {
        PotentialSpec {
            vortex_ell: ell,
            ..Default::default()
        }
    }

    /// V = c r^{−α}.
    pub fn power(alpha: f64, coeff: f64) -> Self {
        PotentialSpec {
            power_alpha: alpha,
            power_coeff: coeff,
            ..Default::default()
        }
    }

    /// V = ℓ²/r² + Ω − 1/|x|, gated on ℓ ≠ 0 and Ω > 1.
    pub fn hydrogen(ell: i64, omega: f64) -> Result<Self> {
        let spec = PotentialSpec {
            vortex_ell: ell,
            coulomb: true,
            shift_Omega_V: omega,
            ..Default::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Ω − 1/|x| without the vortex term. This is the linear hydrogen operator
    /// used as an eigenvalue reference; it is outside the positivity gate
    /// and does not pass [`PotentialSpec::validate`].
    pub fn coulomb_unchecked(omega: f64) -> Self {
        PotentialSpec {
            coulomb: true,
            shift_Omega_V: omega,
            ..Default::default()
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.power_alpha.is_finite() && self.power_alpha >= 0.0) {
            v.push(Violation::new("power_alpha", "must be finite and >= 0"));
        }
        if !(self.power_coeff.is_finite() && self.power_coeff >= 0.0) {
            v.push(Violation::new("power_coeff", "must be finite and >= 0"));
        }
        if !(self.shift_Omega_V.is_finite() && self.shift_Omega_V >= 0.0) {
            v.push(Violation::new("shift_Omega_V", "must be finite and >= 0"));
        }
        if self.coulomb {
            if self.vortex_ell == 0 {
                v.push(Violation::new(
                    "vortex_ell",
                    "the coulomb potential requires vortex_ell != 0 so that V >= 0",
                ));
            }
            if !(self.shift_Omega_V > 1.0) {
                v.push(Violation::new(
                    "shift_Omega_V",
                    format!(
                        "the coulomb potential requires Omega > 1 so that \
                         l^2/|y|^2 + Omega - 1/|x| >= 0 (got {})",
                        self.shift_Omega_V
                    ),
                ));
            }
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

    /// True when V depends on z (only the coulomb term does).
    pub fn depends_on_z(&self) -> bool {
        self.coulomb
    }

    /// The z-independent part ℓ²/r² + c r^{−α} + Ω_V.
    pub fn cylindrical_part(&self, r: f64) -> f64 {
        let ell2 = (self.vortex_ell * self.vortex_ell) as f64;
        let mut v = self.shift_Omega_V;
        if ell2 != 0.0 {
            v += ell2 / (r * r);
        }
        if self.power_coeff != 0.0 {
            v += self.power_coeff * r.powf(-self.power_alpha);
        }
        v
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, r: f64, z: f64) -> f64 {
        let mut v = self.cylindrical_part(r);
        if self.coulomb {
            v -= 1.0 / (r * r + z * z).sqrt();
        }
        v
    }
}

/// V(r, z). `z` is ignored when it is 0 on radial grids, where r = |x|.
pub fn eval_potential(spec: &PotentialSpec, r: f64, z: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("r", format!("potential needs r > 0, got {r}")));
    }
    let v = spec.eval_unchecked(r, z);
    if !v.is_finite() {
        return Err(Error::NonFinite("potential"));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// A witness value when the hypothesis is existential (W3's s₀).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    fn push(&mut self, name: &str, passed: bool, detail: String, witness: Option<f64>) {
        self.checks.push(HypothesisCheck {
            name: name.to_string(),
            passed,
            detail,
            witness,
        });
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Relative tail tolerance for V2, measured against V at the first sample.
pub const V2_REL_TOL: f64 = 1e-3;
pub const V2_ABS_FLOOR: f64 = 1e-6;

/// Checks V1 (V ≥ 0), V2 (V → 0) and V3 (V non-increasing) on sorted radial
/// samples at z = 0.
pub fn check_v_hypotheses(spec: &PotentialSpec, samples: &[f64]) -> Result<HypothesisReport> {
    if spec.coulomb {
        return Err(Error::invalid(
            "coulomb",
            "V1-V3 are not claimed for the coulomb potential; use hydrogen_potential_min",
        ));
    }
    if samples.is_empty() {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    if samples.iter().any(|&r| !(r > 0.0)) || samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("samples", "must be positive and sorted ascending"));
    }
    let values = samples
        .iter()
        .map(|&r| eval_potential(spec, r, 0.0))
        .collect::<Result<Vec<_>>>()?;

    let mut report = HypothesisReport::default();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    report.push("V1", min >= 0.0, format!("min sampled V = {min:e}"), None);

    let tail = *values.last().unwrap();
    let tol = (V2_REL_TOL * values[0].abs()).max(V2_ABS_FLOOR);
    report.push(
        "V2",
        tail.abs() <= tol,
        format!("V(r = {:e}) = {tail:e}, tolerance {tol:e}", samples.last().unwrap()),
        None,
    );

    let worst = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(
        "V3",
        values.len() < 2 || worst <= 1e-12,
        format!("largest increase between samples = {worst:e}"),
        None,
    );
    Ok(report)
}

/// Minimum of the hydrogen potential over a dense (r, z) sample.
pub fn hydrogen_potential_min(spec: &PotentialSpec, rs: &[f64], zs: &[f64]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for &r in rs {
        for &z in zs {
            min = min.min(eval_potential(spec, r, z)?);
        }
    }
    Ok(min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RKind {
    /// R(s) = −|s|^p / p.
    PowerAttractive,
    None,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub Omega: f64,
    pub R_kind: RKind,
    /// Exponent of the power nonlinearity; ignored when `R_kind = none`.
    #[serde(default)]
    pub p: f64,
    pub b1: f64,
    pub b2: f64,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub q1: f64,
    pub q2: f64,
}

impl NonlinearitySpec {
    /// W(s) = (Ω/2) s² − |s|^p / p, with growth constants that make the
    /// bounds hold: b₁ = b₂ = c₁ = c₂ = 1, γ = q₂ = p, q₁ = 2.
    pub fn power(omega: f64, p: f64) -> Self {
        NonlinearitySpec {
            Omega: omega,
            R_kind: RKind::PowerAttractive,
            p,
            b1: 1.0,
            b2: 1.0,
            gamma: p,
            c1: 1.0,
            c2: 1.0,
            q1: 2.0,
            q2: p.max(2.0),
        }
    }

    /// W(s) = (Ω/2) s².
    pub fn quadratic(omega: f64) -> Self {
        NonlinearitySpec {
            Omega: omega,
            R_kind: RKind::None,
            p: 0.0,
            b1: 1.0,
            b2: 1.0,
            gamma: 2.0,
            c1: 1.0,
            c2: 1.0,
            q1: 2.0,
            q2: 2.0,
        }
    }

    /// The power-only part R, as its own spec with Ω = 0.
    pub fn without_quadratic(&self) -> Self {
        NonlinearitySpec { Omega: 0.0, ..*self }
    }

    /// Violations of the growth conditions in dimension `dim`.
    pub fn violations(&self, dim: usize) -> Vec<Violation> {
        let mut v = Vec::new();
        let n = dim as f64;
        if !self.Omega.is_finite() {
            v.push(Violation::new("Omega", "must be finite"));
        }
        if self.R_kind == RKind::PowerAttractive && !(self.p.is_finite() && self.p > 2.0) {
            v.push(Violation::new("p", format!("power nonlinearity needs p > 2, got {}", self.p)));
        }
        for (name, val) in [("b1", self.b1), ("b2", self.b2), ("c1", self.c1), ("c2", self.c2)] {
            if !(val.is_finite() && val > 0.0) {
                v.push(Violation::new(name, format!("must be > 0, got {val}")));
            }
        }
        let gamma_max = 2.0 + 4.0 / n;
        if !(self.gamma < gamma_max) {
            v.push(Violation::new(
                "gamma",
                format!("gamma = {} but gamma < 2 + 4/N = {gamma_max} is required", self.gamma),
            ));
        }
        if !(self.q1 >= 2.0) {
            v.push(Violation::new("q1", format!("q1 = {} but q1 >= 2 is required", self.q1)));
        }
        if !(self.q1 <= self.q2) {
            v.push(Violation::new(
                "q2",
                format!("q1 = {} exceeds q2 = {}", self.q1, self.q2),
            ));
        }
        if dim > 2 {
            let crit = 2.0 * n / (n - 2.0);
            if !(self.q2 < crit) {
                v.push(Violation::new(
                    "q2",
                    format!("q2 = {} but q2 < 2N/(N-2) = {crit} is required", self.q2),
                ));
            }
        }
        v
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let v = self.violations(dim);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    #[inline]
    pub fn r(&self, s: f64) -> f64 {
        match self.R_kind {
            RKind::PowerAttractive => -s.abs().powf(self.p) / self.p,
            RKind::None => 0.0,
        }
    }

    #[inline]
    pub fn r_prime(&self, s: f64) -> f64 {
        match self.R_kind {
            RKind::PowerAttractive => -s.signum() * s.abs().powf(self.p - 1.0),
            RKind::None => 0.0,
        }
    }

    /// R(s + d) − R(s) − R′(s)d, accurate for |d| ≪ |s|.
    pub fn r_remainder(&self, s: f64, d: f64) -> f64 {
        match self.R_kind {
            RKind::None => 0.0,
            RKind::PowerAttractive => {
                let p = self.p;
                if s == 0.0 {
                    return -d.abs().powf(p) / p;
                }
                let t = d / s;
                if t.abs() < 1e-3 {
                    // (1+t)^p − 1 − pt by its binomial series; truncation is O(t⁷)
                    let mut coef = p * (p - 1.0) / 2.0;
                    let mut tn = t * t;
                    let mut sum = 0.0;
                    for n in 2..7 {
                        sum += coef * tn;
                        coef *= (p - n as f64) / (n + 1) as f64;
                        tn *= t;
                    }
                    -s.abs().powf(p) * sum / p
                } else {
                    self.r(s + d) - self.r(s) - self.r_prime(s) * d
                }
            }
        }
    }

    #[inline]
    pub fn w(&self, s: f64) -> f64 {
        0.5 * self.Omega * s * s + self.r(s)
    }

    #[inline]
    pub fn w_prime(&self, s: f64) -> f64 {
        self.Omega * s + self.r_prime(s)
    }
}

pub fn eval_w(spec: &NonlinearitySpec, s: f64) -> f64 {
    spec.w(s)
}

pub fn eval_w_prime(spec: &NonlinearitySpec, s: f64) -> f64 {
    spec.w_prime(s)
}

/// Checks W1 and W2 pointwise on the positive entries of `s_grid` with the
/// declared constants, and reports the first s₀ with W(s₀) < 0 for W3.
pub fn check_w_hypotheses(spec: &NonlinearitySpec, s_grid: &[f64]) -> HypothesisReport {
    let mut report = HypothesisReport::default();
    let pos: Vec<f64> = s_grid.iter().copied().filter(|&s| s > 0.0).collect();

    let w1_fail = pos
        .iter()
        .find(|&&s| !(spec.r(s) > -spec.b1 * s * s - spec.b2 * s.powf(spec.gamma)));
    report.push(
        "W1",
        w1_fail.is_none(),
        match w1_fail {
            Some(s) => format!("R(s) > -b1 s^2 - b2 s^gamma fails at s = {s:e}"),
            None => format!("holds on {} samples", pos.len()),
        },
        None,
    );

    let w2_fail = pos.iter().find(|&&s| {
        let bound = spec.c1 * s.powf(spec.q1 - 1.0) + spec.c2 * s.powf(spec.q2 - 1.0);
        spec.r_prime(s).abs() > bound * (1.0 + 1e-12)
    });
    report.push(
        "W2",
        w2_fail.is_none(),
        match w2_fail {
            Some(s) => format!("|R'(s)| <= c1 s^(q1-1) + c2 s^(q2-1) fails at s = {s:e}"),
            None => format!("holds on {} samples", pos.len()),
        },
        None,
    );

    let s0 = pos.iter().copied().find(|&s| spec.w(s) < 0.0);
    report.push(
        "W3",
        s0.is_some(),
        match s0 {
            Some(s) => format!("W({s:e}) = {:e} < 0", spec.w(s)),
            None => "W >= 0 on every sample".to_string(),
        },
        s0,
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_potential_is_zero() {
        let v = PotentialSpec::free();
        for (r, z) in [(0.1, 0.0), (3.0, -2.0), (100.0, 5.0)] {
            assert_eq!(eval_potential(&v, r, z).unwrap(), 0.0);
        }
    }

    #[test]
    fn remainder_matches_direct_difference() {
        let w = NonlinearitySpec::power(1.0, 2.5);
        for &(s, d) in &[(2.0, 1e-4), (-1.5, 3e-4), (0.7, 0.3), (0.0, 0.2), (1.0, -1e-2)] {
            let direct = w.r(s + d) - w.r(s) - w.r_prime(s) * d;
            let rem = w.r_remainder(s, d);
            assert!((rem - direct).abs() <= 1e-9 * direct.abs() + 1e-15, "{s} {d}: {rem} vs {direct}");
        }
        // second-order leading term at tiny d
        let (s, d) = (3.0_f64, 1e-9);
        let lead = -0.5 * (2.5 - 1.0) * s.powf(0.5) * d * d;
        assert!((w.r_remainder(s, d) - lead).abs() <= 1e-8 * lead.abs());
    }

    #[test]
    fn vortex_term() {
        assert_eq!(eval_potential(&PotentialSpec::vortex(1), 2.0, 0.0).unwrap(), 0.25);
    }

    #[test]
    fn hydrogen_arithmetic() {
        let v = PotentialSpec::hydrogen(1, 1.5).unwrap();
        let val = eval_potential(&v, 2.0, 0.0).unwrap();
        assert!((val - 1.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(eval_potential(&PotentialSpec::vortex(1), 0.0, 0.0).is_err());
        assert!(eval_potential(&PotentialSpec::vortex(1), -1.0, 0.0).is_err());
    }

    #[test]
    fn hydrogen_gate() {
        assert!(PotentialSpec::hydrogen(1, 0.9).is_err());
        assert!(PotentialSpec::hydrogen(0, 1.5).is_err());
        assert!(PotentialSpec::coulomb_unchecked(1.5).validate().is_err());
    }

    fn log_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn inverse_r_passes_v_hypotheses() {
        let rep = check_v_hypotheses(&PotentialSpec::power(1.0, 1.0), &log_samples(1.0, 1e4, 200)).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn vortex_passes_v_hypotheses() {
        let rep = check_v_hypotheses(&PotentialSpec::vortex(2), &log_samples(1.0, 1e4, 200)).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn shifted_potential_fails_v2() {
        let v = PotentialSpec {
            shift_Omega_V: 0.5,
            ..PotentialSpec::power(1.0, 1.0)
        };
        let rep = check_v_hypotheses(&v, &log_samples(1.0, 1e4, 200)).unwrap();
        assert!(rep.passed("V1"));
        assert!(!rep.passed("V2"));
        assert!(rep.passed("V3"));
    }

    #[test]
    fn v_check_rejects_coulomb() {
        let v = PotentialSpec::hydrogen(1, 1.5).unwrap();
        assert!(check_v_hypotheses(&v, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn w_arithmetic() {
        let w = NonlinearitySpec::quadratic(1.0);
        assert_eq!(eval_w(&w, 2.0), 2.0);
        assert_eq!(eval_w_prime(&w, 2.0), 2.0);
        let w = NonlinearitySpec::power(2.0, 3.0);
        assert!((eval_w(&w, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((eval_w_prime(&w, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn w_prime_matches_central_differences_at_second_order() {
        let w = NonlinearitySpec::power(2.0, 3.0);
        let s = 0.7;
        let err = |h: f64| (eval_w_prime(&w, s) - (eval_w(&w, s + h) - eval_w(&w, s - h)) / (2.0 * h)).abs();
        let (e1, e2) = (err(1e-2), err(1e-3));
        // R''' = -2 here, so the error is h²/3 exactly
        assert!((e1 - 1e-4 / 3.0).abs() < 1e-9, "{e1}");
        assert!((e1 / e2 - 100.0).abs() < 1e-2, "ratio {}", e1 / e2);
    }

    #[test]
    fn w1_and_w3_for_cubic() {
        let w = NonlinearitySpec {
            b1: 0.0,
            b2: 1.0,
            gamma: 3.0,
            ..NonlinearitySpec::power(2.0, 3.0)
        };
        let grid: Vec<f64> = (1..=10_000).map(|i| i as f64 * 1e-3).collect();
        let rep = check_w_hypotheses(&w, &grid);
        assert!(rep.passed("W1"));
        // root of s² − s³/3, by bisection
        let (mut lo, mut hi) = (1.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval_w(&w, mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((hi - 3.0).abs() < 1e-12);
        let s0 = rep.get("W3").unwrap().witness.unwrap();
        assert!(s0 > hi && s0 - hi <= 1e-3 + 1e-12, "s0 = {s0}");
    }

    #[test]
    fn w2_holds_with_equality() {
        let w = NonlinearitySpec {
            c1: 1e-300,
            c2: 1.0,
            q2: 3.0,
            ..NonlinearitySpec::power(1.0, 3.0)
        };
        let grid: Vec<f64> = (1..=1000).map(|i| i as f64 * 0.01).collect();
        assert!(check_w_hypotheses(&w, &grid).passed("W2"));
        let tight = NonlinearitySpec { c2: 0.99, ..w };
        assert!(!check_w_hypotheses(&tight, &grid).passed("W2"));
    }

    #[test]
    fn nonnegative_w_has_no_w3_witness() {
        let w = NonlinearitySpec::quadratic(1.0);
        let grid: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let rep = check_w_hypotheses(&w, &grid);
        assert!(!rep.passed("W3"));
        assert!(rep.get("W3").unwrap().witness.is_none());
    }

    #[test]
    fn growth_constant_gates() {
        let w = NonlinearitySpec { gamma: 4.0, ..NonlinearitySpec::power(1.0, 3.0) };
        let v = w.violations(3);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "gamma");
        let w = NonlinearitySpec { q1: 1.5, ..NonlinearitySpec::power(1.0, 3.0) };
        assert_eq!(w.violations(3)[0].path, "q1");
        let w = NonlinearitySpec { q2: 6.0, ..NonlinearitySpec::power(1.0, 3.0) };
        assert_eq!(w.violations(3)[0].path, "q2");
        let w = NonlinearitySpec { b1: 0.0, ..NonlinearitySpec::power(1.0, 3.0) };
        assert_eq!(w.violations(3)[0].path, "b1");
    }

    #[test]
    fn hydrogen_positivity_on_dense_sample() {
        let v = PotentialSpec::hydrogen(1, 1.0 + 1e-9).unwrap();
        let rs: Vec<f64> = (1..=400).map(|i| i as f64 * 0.02).collect();
        let zs: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.02).collect();
        assert!(hydrogen_potential_min(&v, &rs, &zs).unwrap() >= 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn w_is_even(omega in -3.0f64..3.0, p in 2.1f64..5.0, s in -20.0f64..20.0) {
                let w = NonlinearitySpec::power(omega, p);
                prop_assert_eq!(eval_w(&w, s), eval_w(&w, -s));
            }

            #[test]
            fn potential_nonnegative_and_nonincreasing(
                ell in 0i64..4, alpha in 0.1f64..3.0, c in 0.0f64..5.0,
                r in 1e-3f64..50.0, dr in 0.0f64..10.0, z in -5.0f64..5.0,
            ) {
                let spec = PotentialSpec { vortex_ell: ell, power_alpha: alpha, power_coeff: c, ..Default::default() };
                let a = eval_potential(&spec, r, z).unwrap();
                let b = eval_potential(&spec, r + dr, z).unwrap();
                prop_assert!(a >= 0.0);
                prop_assert!(b <= a + 1e-12 * a.abs());
            }
        }
    }
}
