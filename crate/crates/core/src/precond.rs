//! Inverse of `M = −Δ + V_cyl(r) + σ` on a grid, used to precondition the
//! gradient flow.
//!
//! `V_cyl` is the non-negative part of the z-independent potential, so `M` is
//! separable: a sine transform diagonalizes the axial second difference
//! (Dirichlet ghosts on both ends) and each axial mode leaves a symmetric
//! tridiagonal radial system.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::grid::Grid;
use crate::model::PotentialSpec;

#[derive(Debug, Clone)]
pub struct SobolevPreconditioner {
    grid: Arc<Grid>,
    // orthogonal sine basis, row j, column m
    modes: Vec<f64>,
    mode_eig: Vec<f64>,
    v_cyl: Vec<f64>,
}

impl SobolevPreconditioner {
    pub fn new(grid: Arc<Grid>, potential: &PotentialSpec) -> Self {
        let n_z = grid.n_z();
        let (modes, mode_eig) = if grid.has_z() {
            let h = (n_z + 1) as f64;
            let norm = (2.0 / h).sqrt();
            let mut s = vec![0.0; n_z * n_z];
            for j in 0..n_z {
                for m in 0..n_z {
                    s[j * n_z + m] = norm * (PI * ((j + 1) * (m + 1)) as f64 / h).sin();
                }
            }
            let dz2 = grid.dz() * grid.dz();
            let eig = (0..n_z)
                .map(|m| (2.0 - 2.0 * (PI * (m + 1) as f64 / h).cos()) / dz2)
                .collect();
            (s, eig)
        } else {
            (vec![1.0], vec![0.0])
        };
        let v_cyl = grid
            .r()
            .iter()
            .map(|&r| {
                let v = if grid.has_z() {
                    potential.cylindrical_part(r)
                } else {
                    potential.eval_unchecked(r, 0.0)
                };
                v.max(0.0)
            })
            .collect();
        SobolevPreconditioner {
            grid,
            modes,
            mode_eig,
            v_cyl,
        }
    }

    /// `out = (−Δ + V_cyl + shift)⁻¹ rhs`; `shift` must be positive.
    pub fn apply(&self, rhs: &[f64], shift: f64, out: &mut [f64]) {
        debug_assert!(shift > 0.0);
        let g = &*self.grid;
        let (n_r, n_z) = (g.n_r(), g.n_z());
        let mut hat = if g.has_z() {
            self.transform(rhs)
        } else {
            rhs.to_vec()
        };
        let cell = g.radial_weights();
        let face = g.faces();
        let mut c_prime = vec![0.0; n_r];
        for m in 0..n_z {
            let col = &mut hat[m * n_r..(m + 1) * n_r];
            let diag_shift = shift + self.mode_eig[m];
            // Thomas on the symmetric form: row i scaled by cell_i
            let mut prev_c = 0.0;
            let mut prev_d = 0.0;
            for i in 0..n_r {
                let inner = if i > 0 { face[i - 1] } else { 0.0 };
                let a = -inner;
                let b = inner + face[i] + cell[i] * (self.v_cyl[i] + diag_shift);
                let c = if i + 1 < n_r { -face[i] } else { 0.0 };
                let denom = b - a * prev_c;
                let cp = c / denom;
                let dp = (cell[i] * col[i] - a * prev_d) / denom;
                c_prime[i] = cp;
                col[i] = dp;
                prev_c = cp;
                prev_d = dp;
            }
            for i in (0..n_r.saturating_sub(1)).rev() {
                col[i] -= c_prime[i] * col[i + 1];
            }
        }
        if g.has_z() {
            let back = self.transform(&hat);
            out.copy_from_slice(&back);
        } else {
            out.copy_from_slice(&hat);
        }
    }

    // The sine basis is symmetric and orthogonal, so one routine serves both
    // directions.
    fn transform(&self, x: &[f64]) -> Vec<f64> {
        let g = &*self.grid;
        let (n_r, n_z) = (g.n_r(), g.n_z());
        let mut out = vec![0.0; x.len()];
        for m in 0..n_z {
            let dst = &mut out[m * n_r..(m + 1) * n_r];
            for j in 0..n_z {
                let s = self.modes[j * n_z + m];
                let src = &x[j * n_r..(j + 1) * n_r];
                for (d, &v) in dst.iter_mut().zip(src) {
                    *d += s * v;
                }
            }
        }
        out
    }
}
