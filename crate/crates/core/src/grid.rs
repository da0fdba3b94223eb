//! Cylindrically symmetric grids on ℝᵏ × ℝᴺ⁻ᵏ.
//!
//! A function `u(|y|, z)` is sampled on cell-centred nodes
//! `r_i = (i + ½)·Δr` and `z_j = −z_max + (j + ½)·Δz`, so no node ever sits on
//! the axis `{y = 0}`. Integrals use the midpoint rule with the reduced
//! measure `ω_{k−1} r^{k−1} dr dz`; values outside the box are taken to be
//! zero (homogeneous Dirichlet ghosts one cell past each boundary).
//!
//! Storage is z-major: node `(i, j)` lives at `j * n_r + i`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

fn default_n_z() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Spatial dimension N.
    #[serde(rename = "N")]
    pub dim: usize,
    /// Dimension of the symmetric block y ∈ ℝᵏ.
    pub k: usize,
    pub r_max: f64,
    #[serde(default)]
    pub z_max: f64,
    pub n_r: usize,
    #[serde(default = "default_n_z")]
    pub n_z: usize,
}

impl GridSpec {
    /// Fully radial grid (k = N), no axial direction.
    pub fn radial(dim: usize, r_max: f64, n_r: usize) -> Self {
        GridSpec {
            dim,
            k: dim,
            r_max,
            z_max: 0.0,
            n_r,
            n_z: 1,
        }
    }

    /// Grid on ℝᵏ × ℝ with one axial direction (k = N − 1).
    pub fn cylindrical(dim: usize, r_max: f64, z_max: f64, n_r: usize, n_z: usize) -> Self {
        GridSpec {
            dim,
            k: dim.saturating_sub(1),
            r_max,
            z_max,
            n_r,
            n_z,
        }
    }

    /// N − k.
    pub fn z_dims(&self) -> usize {
        self.dim.saturating_sub(self.k)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.dim < 3 {
            v.push(Violation::new("N", format!("N = {} but N >= 3 is required", self.dim)));
        }
        if self.k < 2 {
            v.push(Violation::new("k", format!("k = {} but k >= 2 is required", self.k)));
        }
        if self.k > self.dim {
            v.push(Violation::new(
                "k",
                format!("k = {} exceeds N = {}", self.k, self.dim),
            ));
        } else if self.dim - self.k > 1 {
            v.push(Violation::new(
                "k",
                format!(
                    "N - k = {} axial dimensions; only 0 or 1 are supported",
                    self.dim - self.k
                ),
            ));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            v.push(Violation::new("r_max", "must be a positive finite number"));
        }
        if self.n_r == 0 {
            v.push(Violation::new("n_r", "must be at least 1"));
        }
        if self.n_z == 0 {
            v.push(Violation::new("n_z", "must be at least 1"));
        }
        if self.k < self.dim {
            if !(self.z_max.is_finite() && self.z_max > 0.0) {
                v.push(Violation::new(
                    "z_max",
                    "must be a positive finite number when k < N",
                ));
            }
        } else if self.n_z != 1 {
            v.push(Violation::new("n_z", "must be 1 when k = N"));
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

/// Area of the unit sphere S^{k−1} ⊂ ℝᵏ.
pub fn sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    // A(1) = 2, A(2) = 2π, A(k + 2) = 2π A(k) / k
    let (mut a, mut m) = if k % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while m < k {
        a *= 2.0 * PI / m as f64;
        m += 2;
    }
    a
}

/// Pairwise summation of `term(i)` for `i` in `0..n`.
pub(crate) fn psum(n: usize, term: &impl Fn(usize) -> f64) -> f64 {
    fn rec(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= 64 {
            let mut s = 0.0;
            for i in lo..hi {
                s += term(i);
            }
            s
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, term) + rec(mid, hi, term)
        }
    }
    rec(0, n, term)
}

#[derive(Debug, Clone)]
pub struct Grid {
    spec: GridSpec,
    dr: f64,
    dz: f64,
    r: Vec<f64>,
    z: Vec<f64>,
    // ω r_i^{k−1} Δr Δz, one per radial index
    cell: Vec<f64>,
    // ω r_{i+½}^{k−1} Δz / Δr for the face between r_i and r_{i+1}; the last
    // face sits on r_max and couples to the zero ghost
    face: Vec<f64>,
}

pub fn build_grid(spec: GridSpec) -> Result<Arc<Grid>> {
    Grid::new(spec).map(Arc::new)
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Grid> {
        spec.validate()?;
        let n_r = spec.n_r;
        let dr = spec.r_max / n_r as f64;
        let (n_z, dz, z) = if spec.z_dims() == 0 {
            (1, 1.0, vec![0.0])
        } else {
            let dz = 2.0 * spec.z_max / spec.n_z as f64;
            let z = (0..spec.n_z)
                .map(|j| -spec.z_max + (j as f64 + 0.5) * dz)
                .collect();
            (spec.n_z, dz, z)
        };
        debug_assert_eq!(n_z, spec.n_z);
        let omega = sphere_area(spec.k);
        let p = (spec.k - 1) as i32;
        let r: Vec<f64> = (0..n_r).map(|i| (i as f64 + 0.5) * dr).collect();
        let cell = r.iter().map(|&ri| omega * ri.powi(p) * dr * dz).collect();
        let face = (0..n_r)
            .map(|i| omega * ((i + 1) as f64 * dr).powi(p) * dz / dr)
            .collect();
        Ok(Grid {
            spec,
            dr,
            dz,
            r,
            z,
            cell,
            face,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn dim(&self) -> usize {
        self.spec.dim
    }
    pub fn k(&self) -> usize {
        self.spec.k
    }
    pub fn has_z(&self) -> bool {
        self.spec.z_dims() == 1
    }
    pub fn n_r(&self) -> usize {
        self.r.len()
    }
    pub fn n_z(&self) -> usize {
        self.z.len()
    }
    pub fn len(&self) -> usize {
        self.r.len() * self.z.len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    /// Axial spacing; 1 on radial grids so weights carry no z factor.
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn r(&self) -> &[f64] {
        &self.r
    }
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.r.len() + i
    }

    /// `(r, z)` coordinates of flat node `idx`.
    #[inline]
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let n_r = self.r.len();
        (self.r[idx % n_r], self.z[idx / n_r])
    }

    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        self.cell[idx % self.r.len()]
    }

    /// Radial weights `ω r_i^{k−1} Δr Δz`.
    pub fn radial_weights(&self) -> &[f64] {
        &self.cell
    }

    pub(crate) fn faces(&self) -> &[f64] {
        &self.face
    }

    /// Volume of the truncated domain, `|B_{r_max}^k| × 2 z_max`.
    pub fn domain_volume(&self) -> f64 {
        let k = self.spec.k as f64;
        let ball = sphere_area(self.spec.k) * self.spec.r_max.powf(k) / k;
        if self.has_z() {
            ball * 2.0 * self.spec.z_max
        } else {
            ball
        }
    }

    pub fn total_weight(&self) -> f64 {
        psum(self.len(), &|idx| self.weight(idx))
    }

    /// Σ w·f over all nodes.
    pub fn weighted_sum(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        psum(f.len(), &|idx| f[idx] * self.weight(idx))
    }

    /// Weighted inner product ⟨a, b⟩ = Σ w·a·b.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        psum(a.len(), &|idx| a[idx] * b[idx] * self.weight(idx))
    }

    /// Discrete Dirichlet form ∫|∇u|² as a sum over cell faces.
    pub fn dirichlet_form(&self, u: &[f64]) -> f64 {
        let n_r = self.n_r();
        let n_z = self.n_z();
        let radial = psum(n_z * n_r, &|idx| {
            let (i, j) = (idx % n_r, idx / n_r);
            let here = u[idx];
            let next = if i + 1 < n_r { u[self.index(i + 1, j)] } else { 0.0 };
            let d = next - here;
            self.face[i] * d * d
        });
        if !self.has_z() {
            return radial;
        }
        let inv_dz2 = 1.0 / (self.dz * self.dz);
        // n_z + 1 faces per column: j = 0 couples to the lower ghost
        let axial = psum((n_z + 1) * n_r, &|idx| {
            let (i, j) = (idx % n_r, idx / n_r);
            let below = if j > 0 { u[self.index(i, j - 1)] } else { 0.0 };
            let above = if j < n_z { u[self.index(i, j)] } else { 0.0 };
            let d = above - below;
            self.cell[i] * d * d * inv_dz2
        });
        radial + axial
    }

    /// Applies −Δ in divergence form; symmetric with respect to [`Grid::dot`].
    pub fn neg_laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n_r = self.n_r();
        let n_z = self.n_z();
        let inv_dz2 = 1.0 / (self.dz * self.dz);
        for j in 0..n_z {
            let row = j * n_r;
            for i in 0..n_r {
                let c = u[row + i];
                let inner = if i > 0 {
                    self.face[i - 1] * (c - u[row + i - 1])
                } else {
                    0.0
                };
                let outer = if i + 1 < n_r {
                    self.face[i] * (c - u[row + i + 1])
                } else {
                    self.face[i] * c
                };
                let mut v = (inner + outer) / self.cell[i];
                if self.has_z() {
                    let below = if j > 0 { u[row - n_r + i] } else { 0.0 };
                    let above = if j + 1 < n_z { u[row + n_r + i] } else { 0.0 };
                    v += (2.0 * c - below - above) * inv_dz2;
                }
                out[row + i] = v;
            }
        }
    }

    /// Bilinear interpolation of nodal values at `(r, z)`.
    ///
    /// Inside the first radial cell the profile is continued evenly across the
    /// axis; past the last node it decays linearly to the zero ghost.
    pub fn interpolate(&self, u: &[f64], r: f64, z: f64) -> f64 {
        let (i0, i1, tr) = match self.bracket_r(r) {
            Some(b) => b,
            None => return 0.0,
        };
        if !self.has_z() {
            return lerp(self.radial_value(u, i0, 0), self.radial_value(u, i1, 0), tr);
        }
        let (j0, j1, tz) = match self.bracket_z(z) {
            Some(b) => b,
            None => return 0.0,
        };
        let a = lerp(self.node_value(u, i0, j0), self.node_value(u, i1, j0), tr);
        let b = lerp(self.node_value(u, i0, j1), self.node_value(u, i1, j1), tr);
        lerp(a, b, tz)
    }

    // Radial bracket as signed node indices; index n_r is the ghost.
    fn bracket_r(&self, r: f64) -> Option<(isize, isize, f64)> {
        let r = r.abs();
        let s = r / self.dr - 0.5;
        let n = self.n_r() as f64;
        if s >= n {
            return None;
        }
        if s < 0.0 {
            return Some((0, 0, 0.0));
        }
        let i0 = s.floor();
        Some((i0 as isize, i0 as isize + 1, s - i0))
    }

    fn bracket_z(&self, z: f64) -> Option<(isize, isize, f64)> {
        let s = (z + self.spec.z_max) / self.dz - 0.5;
        let n = self.n_z() as f64;
        if s <= -1.0 || s >= n {
            return None;
        }
        let j0 = s.floor();
        Some((j0 as isize, j0 as isize + 1, s - j0))
    }

    fn radial_value(&self, u: &[f64], i: isize, j: usize) -> f64 {
        if i < 0 || i as usize >= self.n_r() {
            0.0
        } else {
            u[self.index(i as usize, j)]
        }
    }

    fn node_value(&self, u: &[f64], i: isize, j: isize) -> f64 {
        if j < 0 || j as usize >= self.n_z() {
            0.0
        } else {
            self.radial_value(u, i, j as usize)
        }
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Real cylindrically symmetric function sampled on a [`Grid`].
///
/// Values are always finite; every constructor checks.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Field {
        let n = grid.len();
        Field {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f(r, z)` at every node (z = 0 on radial grids).
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        let values = (0..grid.len())
            .map(|idx| {
                let (r, z) = grid.coords(idx);
                f(r, z)
            })
            .collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.spec == other.grid.spec
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Result<Field> {
        Field::new(self.grid.clone(), self.values.iter().map(|v| a * v).collect())
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Field::new(self.grid.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Weighted L² inner product.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self.grid.dot(&self.values, &other.values))
    }

    /// Rescales to L² norm `rho`.
    pub fn normalized(&self, rho: f64) -> Result<Field> {
        let n2 = l2_norm_sq(self);
        if n2 <= 0.0 {
            return Err(Error::ZeroField("normalization"));
        }
        self.scaled(rho / n2.sqrt())
    }

    pub fn interpolate(&self, r: f64, z: f64) -> f64 {
        self.grid.interpolate(&self.values, r, z)
    }
}

/// ∫ f dx.
pub fn integrate(f: &Field) -> f64 {
    f.grid.weighted_sum(&f.values)
}

/// ∫ u² dx.
pub fn l2_norm_sq(u: &Field) -> f64 {
    u.grid.dot(&u.values, &u.values)
}

/// ½ ∫ |∇u|² dx with |∇u|² = (∂_r u)² + (∂_z u)².
pub fn kinetic_energy(u: &Field) -> f64 {
    0.5 * u.grid.dirichlet_form(&u.values)
}

/// Axial mass centre ∫ z u² / ∫ u²; zero on radial grids or for u ≡ 0.
pub fn z_mass_center(u: &Field) -> f64 {
    let g = &u.grid;
    if !g.has_z() {
        return 0.0;
    }
    let m = l2_norm_sq(u);
    if m == 0.0 {
        return 0.0;
    }
    let zm = psum(g.len(), &|idx| {
        let v = u.values[idx];
        g.coords(idx).1 * v * v * g.weight(idx)
    });
    zm / m
}

/// Shifts every column by `cells` axial cells: output(z_j) = u(z_{j+cells}),
/// zero-filled where the source index leaves the box.
pub fn shift_z_cells(u: &Field, cells: isize) -> Field {
    let g = &u.grid;
    if cells == 0 || !g.has_z() {
        return u.clone();
    }
    let (n_r, n_z) = (g.n_r(), g.n_z() as isize);
    let mut out = vec![0.0; g.len()];
    for j in 0..n_z {
        let src = j + cells;
        if (0..n_z).contains(&src) {
            let (dst, src) = (j as usize * n_r, src as usize * n_r);
            out[dst..dst + n_r].copy_from_slice(&u.values[src..src + n_r]);
        }
    }
    Field {
        grid: g.clone(),
        values: out,
    }
}

/// Translates `u` by `shift` along z (rounded to whole cells), failing if any
/// nonzero value would leave the box.
pub fn translate_z(u: &Field, shift: f64) -> Result<Field> {
    let g = &u.grid;
    if !g.has_z() {
        return Err(Error::invalid("k", "axial translation needs k < N"));
    }
    let cells = (shift / g.dz).round() as isize;
    let out = shift_z_cells(u, -cells);
    let lost = l2_norm_sq(u) - l2_norm_sq(&out);
    if lost > 1e-14 * l2_norm_sq(u) {
        return Err(Error::SupportOverflow(format!(
            "translation by {shift} moves mass out of |z| <= {}",
            g.spec.z_max
        )));
    }
    Ok(out)
}

/// Recentres `u` along z so its axial mass centre lies within one cell of 0.
/// Identity on radial grids.
pub fn recenter_z(u: &Field) -> Field {
    let g = &u.grid;
    if !g.has_z() {
        return u.clone();
    }
    let zc = z_mass_center(u);
    let cells = (zc / g.dz).round() as isize;
    shift_z_cells(u, cells)
}
