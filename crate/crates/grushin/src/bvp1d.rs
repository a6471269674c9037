//! `-u'' + V u - z u` on a uniform grid of `[a, b]`: Dirichlet and
//! Neumann realizations, the bordered Dirichlet problem whose effective
//! Hamiltonian is the Neumann-to-Dirichlet map, and the contour identity
//! relating the two spectra to that map.
//!
//! Grid nodes are `x_i = a + i step`, `i = 0..=m+1`, with `step = (b - a)/(m + 1)`.
//! Neumann data are outward normal derivatives: `-u'(a)` and `u'(b)`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grushin_core::{assemble, invert_system, BorderedSystem, GrushinInverse};
use crate::linops::{c, cr, rank_tolerance, try_contour_integrate, CMatrix, Contour, C64};
use crate::traces::CountReport;

/// Quadrature tolerance of the contour identity.
pub const DN_QUADRATURE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Discretization {
    a: f64,
    b: f64,
    m: usize,
    /// `V(x_i)` for all `m + 2` nodes.
    v: Vec<f64>,
}

impl Discretization {
    pub fn new(a: f64, b: f64, m: usize, v: impl Fn(f64) -> f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument("interval needs a < b"));
        }
        if m < 3 {
            return Err(Error::InvalidArgument("need at least 3 interior nodes"));
        }
        let step = (b - a) / (m + 1) as f64;
        Self::from_values(a, b, (0..m + 2).map(|i| v(a + i as f64 * step)).collect())
    }

    /// Potential tabulated at all `m + 2` nodes.
    pub fn from_values(a: f64, b: f64, v: Vec<f64>) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument("interval needs a < b"));
        }
        if v.len() < 5 {
            return Err(Error::InvalidArgument("need at least 3 interior nodes"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Discretization { a, b, m: v.len() - 2, v })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / (self.m + 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.step()
    }

    pub fn potential(&self) -> &[f64] {
        &self.v
    }
}

/// Builtin potentials on `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Potential {
    Zero,
    /// `(x - mid)^2`.
    Harmonic,
    /// `-10` on the middle third, `0` elsewhere.
    Well,
}

impl Potential {
    pub fn eval(self, a: f64, b: f64, x: f64) -> f64 {
        let mid = 0.5 * (a + b);
        match self {
            Potential::Zero => 0.0,
            Potential::Harmonic => (x - mid) * (x - mid),
            Potential::Well => {
                if (x - mid).abs() < (b - a) / 6.0 {
                    -10.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn discretize(self, a: f64, b: f64, m: usize) -> Result<Discretization> {
        Discretization::new(a, b, m, |x| self.eval(a, b, x))
    }
}

/// Tridiagonal matrix with `lower[i] = A[i+1][i]`, `upper[i] = A[i][i+1]`.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub lower: Vec<C64>,
    pub diag: Vec<C64>,
    pub upper: Vec<C64>,
}

/// Partial-pivoting LU of a tridiagonal matrix; `upper2` holds the fill-in.
#[derive(Clone, Debug)]
pub struct TridiagonalLu {
    l: Vec<C64>,
    d: Vec<C64>,
    u: Vec<C64>,
    u2: Vec<C64>,
    swapped: Vec<bool>,
}

impl Tridiagonal {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.lower.iter().chain(&self.diag).chain(&self.upper).map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.n();
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i == j + 1 {
                self.lower[j]
            } else if j == i + 1 {
                self.upper[i]
            } else {
                cr(0.0)
            }
        })
    }

    /// Fails with `SingularMatrix` when a pivot is below the rank tolerance
    /// of the largest entry.
    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.n();
        let mut l = self.lower.clone();
        let mut d = self.diag.clone();
        let mut u = self.upper.clone();
        let mut u2 = vec![cr(0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= l[i].norm() {
                let f = if d[i] == cr(0.0) { cr(0.0) } else { l[i] / d[i] };
                l[i] = f;
                d[i + 1] -= f * u[i];
            } else {
                let f = d[i] / l[i];
                d[i] = l[i];
                l[i] = f;
                let t = u[i];
                u[i] = d[i + 1];
                d[i + 1] = t - f * d[i + 1];
                if i + 2 < n {
                    u2[i] = u[i + 1];
                    u[i + 1] = -f * u[i + 1];
                }
                swapped[i] = true;
            }
        }
        let tol = rank_tolerance(n, n, 4.0 * self.max_abs());
        if let Some(p) = d.iter().map(|z| z.norm()).find(|&p| p <= tol) {
            return Err(Error::SingularMatrix { pivot: p, tolerance: tol });
        }
        Ok(TridiagonalLu { l, d, u, u2, swapped })
    }
}

impl TridiagonalLu {
    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let n = self.d.len();
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.l[i] * b[i];
            } else {
                let t = b[i];
                b[i + 1] -= self.l[i] * t;
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.u[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.u[i] * b[i + 1] - self.u2[i] * b[i + 2]) / self.d[i];
        }
        b
    }

    /// `tr A^-1` from `n` unit solves.
    pub fn inverse_trace(&self) -> C64 {
        let n = self.d.len();
        let mut e = vec![cr(0.0); n];
        let mut s = cr(0.0);
        for i in 0..n {
            e[i] = cr(1.0);
            s += self.solve(&e)[i];
            e[i] = cr(0.0);
        }
        s
    }
}

/// `-D^2 + V - z` on the interior nodes with zero boundary values eliminated.
pub fn dirichlet_tridiagonal(d: &Discretization, z: C64) -> Tridiagonal {
    let m = d.m;
    let s2 = 1.0 / (d.step() * d.step());
    Tridiagonal {
        lower: vec![cr(-s2); m - 1],
        diag: (1..=m).map(|i| cr(2.0 * s2 + d.v[i]) - z).collect(),
        upper: vec![cr(-s2); m - 1],
    }
}

/// `-D^2 + V - z` on all `m + 2` nodes; the zero Neumann condition enters
/// through the ghost values `u_{-1} = u_1`, `u_{m+2} = u_m`.
pub fn neumann_tridiagonal(d: &Discretization, z: C64) -> Tridiagonal {
    let n = d.m + 2;
    let s2 = 1.0 / (d.step() * d.step());
    let mut lower = vec![cr(-s2); n - 1];
    let mut upper = vec![cr(-s2); n - 1];
    upper[0] = cr(-2.0 * s2);
    lower[n - 2] = cr(-2.0 * s2);
    Tridiagonal { lower, diag: (0..n).map(|i| cr(2.0 * s2 + d.v[i]) - z).collect(), upper }
}

pub fn dirichlet_matrix(d: &Discretization, z: C64) -> CMatrix {
    dirichlet_tridiagonal(d, z).to_dense()
}

pub fn neumann_matrix(d: &Discretization, z: C64) -> CMatrix {
    neumann_tridiagonal(d, z).to_dense()
}

fn neumann_lu(d: &Discretization, z: C64) -> Result<TridiagonalLu> {
    neumann_tridiagonal(d, z).factor().map_err(|_| Error::NeumannEigenvalue { z: (z.re, z.im) })
}

/// Full-grid solutions of `P u = 0` with unit Neumann data at `a` (first)
/// and at `b` (second). Nonzero data `g` at `a` moves `2 g / step` into
/// the first row of the Neumann system.
fn poisson_columns(d: &Discretization, lu: &TridiagonalLu) -> [Vec<C64>; 2] {
    let n = d.m + 2;
    let w = 2.0 / d.step();
    let mut e = vec![cr(0.0); n];
    e[0] = cr(w);
    let left = lu.solve(&e);
    e[0] = cr(0.0);
    e[n - 1] = cr(w);
    [left, lu.solve(&e)]
}

/// Neumann-to-Dirichlet map: column `j` holds the boundary values of the
/// solution of `P u = 0` with unit Neumann datum at endpoint `j`.
pub fn n2d_map(d: &Discretization, z: C64) -> Result<CMatrix> {
    let lu = neumann_lu(d, z)?;
    Ok(n2d_from(d, &lu))
}

/// `N(z)` and `N'(z)`; since `d/dz P_N^-1 = P_N^-2`, the derivative is the
/// boundary trace of `P_N^-1` applied to the Poisson columns.
fn n2d_with_derivative(d: &Discretization, lu: &TridiagonalLu) -> (CMatrix, CMatrix) {
    let n = d.m + 2;
    let q = poisson_columns(d, lu);
    let dq = [lu.solve(&q[0]), lu.solve(&q[1])];
    let pick = |cols: &[Vec<C64>; 2]| CMatrix::from_fn(2, 2, |i, j| cols[j][if i == 0 { 0 } else { n - 1 }]);
    (pick(&q), pick(&dq))
}

pub fn n2d_derivative(d: &Discretization, z: C64) -> Result<CMatrix> {
    Ok(n2d_with_derivative(d, &neumann_lu(d, z)?).1)
}

fn n2d_from(d: &Discretization, lu: &TridiagonalLu) -> CMatrix {
    let n = d.m + 2;
    let [l, r] = poisson_columns(d, lu);
    CMatrix::from_fn(2, 2, |i, j| {
        let col = if j == 0 { &l } else { &r };
        col[if i == 0 { 0 } else { n - 1 }]
    })
}

/// Extension operator `T`: full-grid columns with boundary value 1 at one
/// endpoint, 0 at the other, and vanishing discrete Neumann datum.
///
/// Each column is the cubic bump `1 - 3 s^2 + 2 s^3`, `s = j / support`,
/// with the node next to the boundary adjusted so that the ghost-point
/// Neumann datum `(w_0 - w_1)/step + (step/2)(V_0 - z) w_0` is zero.
pub fn extension(d: &Discretization, z: C64, support: usize) -> CMatrix {
    let n = d.m + 2;
    let k = support.clamp(2, d.m);
    let s = d.step();
    let mut t = CMatrix::zeros(n, 2);
    for j in 0..=k {
        let x = j as f64 / k as f64;
        let val = cr(1.0 - 3.0 * x * x + 2.0 * x * x * x);
        t[(j, 0)] = val;
        t[(n - 1 - j, 1)] = val;
    }
    t[(1, 0)] = cr(1.0) + (cr(d.v[0]) - z) * (0.5 * s * s);
    t[(n - 2, 1)] = cr(1.0) + (cr(d.v[n - 1]) - z) * (0.5 * s * s);
    t
}

pub fn default_support(m: usize) -> usize {
    m.div_ceil(8)
}

#[derive(Clone, Debug)]
pub struct BvpReport {
    pub system: BorderedSystem,
    pub inverse: GrushinInverse,
    pub n2d: CMatrix,
    /// `max |E-+ - N|`.
    pub eminusplus_gap: f64,
    /// Largest entrywise gap of `E`, `E+`, `E-` to their Green-operator forms.
    pub block_gap: f64,
}

/// Largest admissible block gap, relative to `max(1, max |N|)`.
pub const BVP_BLOCK_TOL: f64 = 1e-9;

/// Bordered Dirichlet problem `[[P_D, R-], [R+, 0]]` with `R+ u` the
/// ghost-point Neumann data of `u` and `R- u- = (P T u-)` on the interior.
///
/// With `w = G_N v + Q_N v+` the inverse reads `u- = w|bd`,
/// `u = w - T(w|bd)`, hence `E-+ = N`, `E- = (G_N .)|bd`,
/// `E = G_N - T (G_N .)|bd` and `E+ = Q_N - T N`.
pub fn bvp_grushin(d: &Discretization, z: C64) -> Result<BvpReport> {
    bvp_grushin_with_support(d, z, default_support(d.m))
}

pub fn bvp_grushin_with_support(d: &Discretization, z: C64, support: usize) -> Result<BvpReport> {
    let m = d.m;
    let n = m + 2;
    let s = d.step();
    let lu = neumann_lu(d, z)?;
    let t = extension(d, z, support);
    let s2 = 1.0 / (s * s);

    let mut rplus = CMatrix::zeros(2, m);
    rplus[(0, 0)] = cr(-1.0 / s);
    rplus[(1, m - 1)] = cr(-1.0 / s);
    let rminus = CMatrix::from_fn(m, 2, |i, j| {
        let g = i + 1;
        (cr(2.0 * s2 + d.v[g]) - z) * t[(g, j)] - (t[(g - 1, j)] + t[(g + 1, j)]) * s2
    });
    let system = assemble(dirichlet_matrix(d, z), rminus, rplus, None)?;
    let inverse = invert_system(&system).map_err(|e| match e {
        Error::IllPosed { .. } => Error::NeumannEigenvalue { z: (z.re, z.im) },
        other => other,
    })?;

    let n2d = n2d_from(d, &lu);
    let scale = n2d.max_abs().max(1.0);
    let eminusplus_gap = (&inverse.eminusplus - &n2d).max_abs();

    // Green-operator forms of the remaining blocks.
    let mut e_ref = CMatrix::zeros(m, m);
    let mut em_ref = CMatrix::zeros(2, m);
    let mut unit = vec![cr(0.0); n];
    for col in 0..m {
        unit[col + 1] = cr(1.0);
        let w = lu.solve(&unit);
        unit[col + 1] = cr(0.0);
        let bd = [w[0], w[n - 1]];
        em_ref[(0, col)] = bd[0];
        em_ref[(1, col)] = bd[1];
        for i in 0..m {
            e_ref[(i, col)] = w[i + 1] - t[(i + 1, 0)] * bd[0] - t[(i + 1, 1)] * bd[1];
        }
    }
    let q = poisson_columns(d, &lu);
    let ep_ref = CMatrix::from_fn(m, 2, |i, j| q[j][i + 1] - t[(i + 1, 0)] * n2d[(0, j)] - t[(i + 1, 1)] * n2d[(1, j)]);
    let block_gap = (&inverse.e - &e_ref)
        .max_abs()
        .max((&inverse.eminus - &em_ref).max_abs())
        .max((&inverse.eplus - &ep_ref).max_abs());
    if eminusplus_gap > BVP_BLOCK_TOL * scale || block_gap > BVP_BLOCK_TOL * scale {
        return Err(Error::InvalidArgument("bordered inverse departs from its Green-operator form"));
    }
    Ok(BvpReport { system, inverse, n2d, eminusplus_gap, block_gap })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DnReport {
    /// `(1/2 pi i) \oint tr((z - A_N)^-1 - (z - A_D)^-1) dz`.
    pub lhs: CountReport,
    /// `-(1/2 pi i) \oint tr(N^-1 N') dz`.
    pub rhs: CountReport,
}

fn count(value: C64) -> Result<CountReport> {
    let nearest = value.re.round();
    let distance = (value - cr(nearest)).norm();
    if distance >= crate::traces::INTEGER_TOL {
        return Err(Error::NonInteger { value: (value.re, value.im) });
    }
    Ok(CountReport { count: nearest as i64, value, distance })
}

/// Both sides count `#(Neumann eigenvalues inside) - #(Dirichlet eigenvalues inside)`.
pub fn dn_trace_identity(d: &Discretization, contour: &Contour) -> Result<DnReport> {
    let two_pi_i = c(0.0, 2.0 * core::f64::consts::PI);
    let on = |z: C64| Error::OnContourSingular { node: (z.re, z.im) };
    let lhs = try_contour_integrate(
        |z| {
            let nl = neumann_tridiagonal(d, z).factor().map_err(|_| on(z))?;
            let dl = dirichlet_tridiagonal(d, z).factor().map_err(|_| on(z))?;
            // (z - A)^-1 = -(A - z)^-1.
            Ok(dl.inverse_trace() - nl.inverse_trace())
        },
        contour,
        DN_QUADRATURE_TOL,
    )? / two_pi_i;
    let rhs = try_contour_integrate(
        |z| {
            let lu = neumann_tridiagonal(d, z).factor().map_err(|_| on(z))?;
            let (nz, dn) = n2d_with_derivative(d, &lu);
            let nlu = crate::linops::Lu::factor(&nz).map_err(|_| on(z))?;
            Ok(-nlu.solve(&dn)?.trace())
        },
        contour,
        DN_QUADRATURE_TOL,
    )? / two_pi_i;
    Ok(DnReport { lhs: count(lhs)?, rhs: count(rhs)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::eigenvalues;
    use core::f64::consts::PI;

    fn zero(a: f64, b: f64, m: usize) -> Discretization {
        Potential::Zero.discretize(a, b, m).unwrap()
    }

    fn sorted_real(a: &CMatrix) -> Vec<f64> {
        let mut e: Vec<f64> = eigenvalues(a).unwrap().iter().map(|z| z.re).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn dirichlet_stencil() {
        let a = dirichlet_matrix(&zero(0.0, 4.0, 3), cr(0.0));
        let expect = CMatrix::from_real_rows(&[&[2.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 2.0]]);
        assert!((&a - &expect).max_abs() < 1e-15);
        let shifted = dirichlet_matrix(&zero(0.0, 4.0, 3), cr(5.0));
        assert!((&(&a - &shifted) - &CMatrix::identity(3).scale(cr(5.0))).max_abs() == 0.0);
    }

    #[test]
    fn lowest_eigenvalues_on_pi() {
        let d = zero(0.0, PI, 60);
        let dir = sorted_real(&dirichlet_matrix(&d, cr(0.0)));
        assert!((dir[0] - 1.0).abs() < 1e-3);
        let neu = sorted_real(&neumann_matrix(&d, cr(0.0)));
        assert!(neu[0].abs() < 1e-6);
        assert!((neu[1] - 1.0).abs() < 1e-3);
        let d1 = Discretization::new(0.0, PI, 60, |_| 1.0).unwrap();
        let shifted = sorted_real(&neumann_matrix(&d1, cr(0.0)));
        assert!(shifted.iter().zip(&neu).all(|(x, y)| (x - y - 1.0).abs() < 1e-9));
    }

    #[test]
    fn tridiagonal_solver_matches_dense() {
        let d = Potential::Harmonic.discretize(-1.0, 2.0, 9).unwrap();
        let t = neumann_tridiagonal(&d, c(0.3, 0.2));
        let rhs: Vec<C64> = (0..11).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let x = t.factor().unwrap().solve(&rhs);
        let back = t.to_dense().apply(&x);
        assert!(back.iter().zip(&rhs).all(|(a, b)| (a - b).norm() < 1e-10));
        let tr = t.factor().unwrap().inverse_trace();
        let dense = crate::linops::Lu::factor(&t.to_dense()).unwrap().inverse().trace();
        assert!((tr - dense).norm() < 1e-12);
    }

    #[test]
    fn n2d_closed_form() {
        let n = n2d_map(&zero(0.0, 1.0, 400), cr(-1.0)).unwrap();
        let coth = 1.0f64.cosh() / 1.0f64.sinh();
        assert!((n[(0, 0)] - cr(coth)).norm() < 1e-4);
        assert!((n[(0, 1)] - cr(1.0 / 1.0f64.sinh())).norm() < 1e-4);
        let sym = Potential::Harmonic.discretize(0.0, 1.0, 50).unwrap();
        let n = n2d_map(&sym, c(-0.5, 0.3)).unwrap();
        assert!((n[(0, 0)] - n[(1, 1)]).norm() < 1e-10 && (n[(0, 1)] - n[(1, 0)]).norm() < 1e-10);
        assert!(matches!(n2d_map(&zero(0.0, PI, 20), cr(0.0)), Err(Error::NeumannEigenvalue { .. })));
    }

    #[test]
    fn n2d_derivative_matches_central_difference() {
        let d = Potential::Well.discretize(0.0, 2.0, 30).unwrap();
        let z = c(0.7, 0.4);
        let h = 1e-5;
        let fd = (&n2d_map(&d, z + h).unwrap() - &n2d_map(&d, z - h).unwrap()).scale(cr(0.5 / h));
        let exact = n2d_derivative(&d, z).unwrap();
        assert!((&fd - &exact).max_abs() < 1e-7 * exact.max_abs());
    }

    #[test]
    fn grushin_blocks_and_support_invariance() {
        let d = zero(0.0, 1.0, 400);
        let r = bvp_grushin(&d, cr(-1.0)).unwrap();
        assert!(r.eminusplus_gap < 1e-9 && r.block_gap < 1e-9);
        let other = bvp_grushin_with_support(&d, cr(-1.0), 10).unwrap();
        assert!((&other.inverse.eminusplus - &r.inverse.eminusplus).max_abs() < 1e-8);
        let far = bvp_grushin(&Potential::Well.discretize(0.0, 1.0, 40).unwrap(), c(0.0, 50.0)).unwrap();
        assert!(far.inverse.condition < 1e8);
    }

    #[test]
    fn dn_identity_examples() {
        let d = zero(0.0, PI, 40);
        let r = dn_trace_identity(&d, &Contour::circle(cr(0.0), 0.5, 16).unwrap()).unwrap();
        assert_eq!((r.lhs.count, r.rhs.count), (1, 1));
        let r = dn_trace_identity(&d, &Contour::circle(cr(-3.0), 0.5, 16).unwrap()).unwrap();
        assert_eq!((r.lhs.count, r.rhs.count), (0, 0));
    }

    #[test]
    fn dn_identity_isolated_dirichlet_eigenvalue() {
        let d = Potential::Harmonic.discretize(0.0, PI, 40).unwrap();
        let dir = sorted_real(&dirichlet_matrix(&d, cr(0.0)));
        let neu = sorted_real(&neumann_matrix(&d, cr(0.0)));
        let target = dir[0];
        let gap = dir.iter().skip(1).chain(&neu).map(|x| (x - target).abs()).fold(f64::INFINITY, f64::min);
        let contour = Contour::circle(cr(target), 0.5 * gap, 16).unwrap();
        let r = dn_trace_identity(&d, &contour).unwrap();
        assert_eq!((r.lhs.count, r.rhs.count), (-1, -1));
    }

    #[test]
    fn flat_potential_pairs_neumann_and_dirichlet() {
        // Ghost-point Neumann and Dirichlet spectra share (4/step^2) sin^2(k step/2), k >= 1.
        let d = zero(0.0, PI, 30);
        let dir = sorted_real(&dirichlet_matrix(&d, cr(0.0)));
        let neu = sorted_real(&neumann_matrix(&d, cr(0.0)));
        assert!((dir[0] - neu[1]).abs() < 1e-10);
        let r = dn_trace_identity(&d, &Contour::circle(cr(dir[0]), 0.01, 16).unwrap()).unwrap();
        assert_eq!((r.lhs.count, r.rhs.count), (0, 0));
    }
}
