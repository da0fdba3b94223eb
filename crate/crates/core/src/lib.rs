//! Constrained minimization of nonlinear Schrödinger energies with
//! cylindrical symmetry.
//!
//! Fields live on a cell-centred grid in `(r, z)` where `r = |x'|` for
//! `x' ∈ ℝᵏ` and `z ∈ ℝ^{N−k}` (at most one axial dimension). The energy is
//!
//! ```text
//! J(u) = ∫ ½|∇u|² + ½V u² + W(u)
//! ```
//!
//! and minimizers are sought on `{‖u‖_{L²} = ρ}`.
//!
//! ```
//! use cylnls::{build_grid, Functional, GridSpec, NonlinearitySpec, PotentialSpec, SolveConfig};
//!
//! let grid = build_grid(GridSpec::radial(3, 20.0, 200)).unwrap();
//! let j = Functional::new(
//!     grid,
//!     PotentialSpec::coulomb_unchecked(1.5),
//!     NonlinearitySpec::quadratic(0.0),
//! )
//! .unwrap();
//! let res = cylnls::solve(&SolveConfig::new(1.0), None, &j).unwrap();
//! assert!(res.converged);
//! assert!((res.lambda - 1.25).abs() < 1e-2);
//! ```

pub mod analysis;
pub mod cli;
pub mod energy;
pub mod error;
pub mod grid;
pub mod model;
pub mod precond;
pub mod solver;

/// The guide's snippets run as doc-tests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

pub use analysis::{
   brezis_lieb_probe, certify_negative_infimum, coercivity_probe, min0_trial, subadditivity_scan,
};
pub use energy::{
    concentrate, dilate, el_residual, energy, gradient, lambda_estimate, EnergyBreakdown,
    Functional,
};
pub use error::{Error, Result, Violation};
pub use grid::{build_grid, integrate, kinetic_energy, l2_norm_sq, translate_z, Field, Grid, GridSpec};
pub use model::{
    check_v_hypotheses, check_w_hypotheses, eval_potential, eval_w, eval_w_prime, NonlinearitySpec,
    PotentialSpec, RKind,
};
pub use solver::{continuation, solve, step, Preconditioner, SolveConfig, SolveResult};
