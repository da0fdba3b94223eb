//! Oracles shared by the integration tests. Nothing here calls into the
//! library's quadrature or operators; each helper re-derives what it needs
//! from the grid parameters alone.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (p, dp) = legendre(n, t);
            let step = p / dp;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, t);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for m in 2..=n {
        let p2 = ((2 * m - 1) as f64 * t * p1 - (m - 1) as f64 * p0) / m as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

/// Composite Gauss–Legendre rule: `panels` equal panels of `order` points.
pub struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Rule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Rule {
        let (gx, gw) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut x = Vec::with_capacity(panels * order);
        let mut w = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (t, wt) in gx.iter().zip(&gw) {
                x.push(mid + 0.5 * h * t);
                w.push(0.5 * h * wt);
            }
        }
        Rule { x, w }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.w).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// ∫∫ f(r, z) 2π r dr dz over [0, r_max] × [−z_max, z_max].
pub fn cyl_integral(r_max: f64, z_max: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let rr = Rule::new(0.0, r_max, 64, 12);
    let rz = Rule::new(-z_max, z_max, 128, 12);
    rr.integrate(|r| 2.0 * PI * r * rz.integrate(|z| f(r, z)))
}

/// Surface area of the unit sphere in ℝᵏ, from the Gamma-function formula
/// at the four dimensions the grid supports.
pub fn omega(k: usize) -> f64 {
    match k {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => panic!("no oracle for k = {k}"),
    }
}

/// Cell-centred layout of a grid: radii, axial nodes, spacings.
pub struct Layout {
    pub k: usize,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub dr: f64,
    pub dz: f64,
}

impl Layout {
    pub fn radial(k: usize, r_max: f64, n_r: usize) -> Layout {
        let dr = r_max / n_r as f64;
        Layout {
            k,
            r: (0..n_r).map(|i| (i as f64 + 0.5) * dr).collect(),
            z: vec![0.0],
            dr,
            dz: 1.0,
        }
    }

    pub fn cylindrical(k: usize, r_max: f64, z_max: f64, n_r: usize, n_z: usize) -> Layout {
        let dr = r_max / n_r as f64;
        let dz = 2.0 * z_max / n_z as f64;
        Layout {
            k,
            r: (0..n_r).map(|i| (i as f64 + 0.5) * dr).collect(),
            z: (0..n_z).map(|j| -z_max + (j as f64 + 0.5) * dz).collect(),
            dr,
            dz,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len() * self.z.len()
    }

    fn cell(&self, i: usize) -> f64 {
        omega(self.k) * self.r[i].powi(self.k as i32 - 1) * self.dr * self.dz
    }

    // conductance of the face on the outer side of radial cell i
    fn face(&self, i: usize) -> f64 {
        let rf = (i + 1) as f64 * self.dr;
        omega(self.k) * rf.powi(self.k as i32 - 1) * self.dz / self.dr
    }

    /// Tridiagonal `W^{−1/2} K W^{−1/2} + diag(V)` on a radial layout, as
    /// (diagonal, off-diagonal).
    pub fn radial_tridiagonal(&self, v: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(self.z.len(), 1);
        let n = self.r.len();
        let diag = (0..n)
            .map(|i| {
                let inner = if i > 0 { self.face(i - 1) } else { 0.0 };
                (inner + self.face(i)) / self.cell(i) + v(self.r[i])
            })
            .collect();
        let off = (0..n - 1)
            .map(|i| -self.face(i) / (self.cell(i) * self.cell(i + 1)).sqrt())
            .collect();
        (diag, off)
    }

    /// Dense symmetric `W^{−1/2} K W^{−1/2} + diag(V)` with zero Dirichlet
    /// ghosts on the outer radial boundary and both axial ends.
    pub fn dense_operator(&self, v: impl Fn(f64, f64) -> f64) -> DMatrix<f64> {
        let (n_r, n_z) = (self.r.len(), self.z.len());
        let n = n_r * n_z;
        let mut k = DMatrix::<f64>::zeros(n, n);
        let idx = |i: usize, j: usize| j * n_r + i;
        let mut couple = |a: usize, b: Option<usize>, c: f64| {
            k[(a, a)] += c;
            if let Some(b) = b {
                k[(b, b)] += c;
                k[(a, b)] -= c;
                k[(b, a)] -= c;
            }
        };
        for j in 0..n_z {
            for i in 0..n_r {
                let outer = if i + 1 < n_r { Some(idx(i + 1, j)) } else { None };
                couple(idx(i, j), outer, self.face(i));
            }
        }
        if n_z > 1 {
            for i in 0..n_r {
                let c = self.cell(i) / (self.dz * self.dz);
                couple(idx(i, 0), None, c);
                for j in 0..n_z - 1 {
                    couple(idx(i, j), Some(idx(i, j + 1)), c);
                }
                couple(idx(i, n_z - 1), None, c);
            }
        }
        let s: Vec<f64> = (0..n).map(|a| self.cell(a % n_r).sqrt()).collect();
        DMatrix::from_fn(n, n, |a, b| {
            let diag = if a == b { v(self.r[a % n_r], self.z[a / n_r]) } else { 0.0 };
            k[(a, b)] / (s[a] * s[b]) + diag
        })
    }

    /// Maps an eigenvector of the symmetrized operator back to nodal values.
    pub fn unsymmetrize(&self, y: &[f64]) -> Vec<f64> {
        let n_r = self.r.len();
        y.iter()
            .enumerate()
            .map(|(a, &ya)| ya / self.cell(a % n_r).sqrt())
            .collect()
    }
}

/// Lowest eigenpair of a dense symmetric matrix.
pub fn lowest_eigenpair(m: DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(m);
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
    (lmin, eig.eigenvectors.column(imin).iter().copied().collect())
}

/// Number of eigenvalues below `x` of a symmetric tridiagonal matrix
/// (Sturm sequence via the LDLᵀ pivots).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let q_prev = if q == 0.0 { f64::EPSILON * (1.0 + diag[i - 1].abs()) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / q_prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by bisection
/// between Gershgorin bounds.
pub fn tridiagonal_min_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let radius = |i: usize| {
        let a = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let b = if i + 1 < n { off[i].abs() } else { 0.0 };
        a + b
    };
    let mut lo = (0..n).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}
