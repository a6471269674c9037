//! Dense complex linear algebra and contour quadrature.
//!
//! Matrices are row-major. Decompositions are written out by hand so the
//! crate stays `no_std`; every other module builds on these primitives.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const EPS: f64 = f64::EPSILON;

/// Largest condition estimate accepted as invertible: `1 / (100 eps)`.
pub const WELL_POSED_LIMIT: f64 = 1.0 / (100.0 * EPS);

const SVD_MAX_SWEEPS: usize = 100;
pub const QUADRATURE_CAP: usize = 1 << 18;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Rank tolerance `max(rows, cols) * sigma_max * 8 eps`.
pub fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    (rows.max(cols) as f64) * sigma_max * EPS * 8.0
}

/// Number of singular values above `tol`.
///
/// Any value in `[tol / 10, 10 tol]` makes the rank undecidable and raises
/// `RankAmbiguous`.
pub fn numerical_rank(sigma: &[f64], tol: f64) -> Result<usize> {
    let mut rank = 0;
    for &s in sigma {
        if s >= tol / 10.0 && s <= tol * 10.0 && s > 0.0 {
            return Err(Error::RankAmbiguous { sigma: s, tolerance: tol });
        }
        if s > tol {
            rank += 1;
        }
    }
    Ok(rank)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    /// Builds a matrix from row-major entries, rejecting NaN and infinities.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: (rows, cols),
                got: (data.len(), 1),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cc = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(r, cc, |i, j| cr(rows[i][j]))
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &z) in d.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn column(v: &[C64]) -> Self {
        CMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn row(v: &[C64]) -> Self {
        CMatrix { rows: 1, cols: v.len(), data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn col_vec(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row_vec(&self, i: usize) -> Vec<C64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Spectral norm (largest singular value).
    pub fn norm2(&self) -> Result<f64> {
        if self.data.is_empty() {
            return Ok(0.0);
        }
        Ok(singular_values(self)?[0])
    }

    /// A cheap upper bound `sqrt(|A|_1 |A|_inf)` on the spectral norm.
    pub fn norm2_bound(&self) -> f64 {
        (self.norm_one() * self.norm_inf()).sqrt()
    }

    pub fn sub_matrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "sub_matrix out of range");
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMatrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "set_block out of range");
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// `[[a, b], [c, d]]`; row and column counts must line up.
    pub fn block2(a: &CMatrix, b: &CMatrix, cm: &CMatrix, d: &CMatrix) -> Result<Self> {
        if a.rows != b.rows || cm.rows != d.rows || a.cols != cm.cols || b.cols != d.cols {
            return Err(Error::DimensionMismatch {
                expected: (a.rows + cm.rows, a.cols + b.cols),
                got: (b.rows + d.rows, cm.cols + d.cols),
            });
        }
        let mut m = Self::zeros(a.rows + cm.rows, a.cols + b.cols);
        m.set_block(0, 0, a);
        m.set_block(0, a.cols, b);
        m.set_block(a.rows, 0, cm);
        m.set_block(a.rows, a.cols, d);
        Ok(m)
    }

    pub fn hstack(a: &CMatrix, b: &CMatrix) -> Self {
        assert_eq!(a.rows, b.rows, "hstack row mismatch");
        let mut m = Self::zeros(a.rows, a.cols + b.cols);
        m.set_block(0, 0, a);
        m.set_block(0, a.cols, b);
        m
    }

    pub fn vstack(a: &CMatrix, b: &CMatrix) -> Self {
        assert_eq!(a.cols, b.cols, "vstack column mismatch");
        let mut m = Self::zeros(a.rows + b.rows, a.cols);
        m.set_block(0, 0, a);
        m.set_block(a.rows, 0, b);
        m
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn try_matmul(&self, other: &CMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: (self.cols, other.cols),
                got: other.shape(),
            });
        }
        Ok(self.matmul(other))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "apply dimension mismatch");
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self - s I`.
    pub fn shift(&self, s: C64) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] -= s;
        }
        m
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale(cr(-1.0))
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
    norm_one: f64,
}

impl Lu {
    /// Fails with `SingularMatrix` when a pivot falls below the rank
    /// tolerance built from the bound `sqrt(|A|_1 |A|_inf) >= sigma_max`.
    pub fn factor(a: &CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: (a.rows, a.rows), got: a.shape() });
        }
        let n = a.rows;
        let tol = rank_tolerance(n, n, a.norm2_bound());
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= tol || pmax == 0.0 {
                return Err(Error::SingularMatrix { pivot: pmax, tolerance: tol });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                if f != C64::new(0.0, 0.0) {
                    for j in k + 1..n {
                        let t = lu[k * n + j];
                        lu[i * n + j] -= f * t;
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm, sign, norm_one: a.norm_one() })
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.n;
        if b.rows != n {
            return Err(Error::DimensionMismatch { expected: (n, b.cols), got: b.shape() });
        }
        let m = b.cols;
        let mut x = CMatrix::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] = b[(self.perm[i], j)];
            }
        }
        for j in 0..m {
            for i in 0..n {
                let mut s = x[(i, j)];
                for k in 0..i {
                    s -= self.lu[i * n + k] * x[(k, j)];
                }
                x[(i, j)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, j)];
                for k in i + 1..n {
                    s -= self.lu[i * n + k] * x[(k, j)];
                }
                x[(i, j)] = s / self.lu[i * n + i];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&CMatrix::identity(self.n)).expect("square identity always fits")
    }

    pub fn determinant(&self) -> C64 {
        let mut d = cr(self.sign);
        for i in 0..self.n {
            d *= self.lu[i * self.n + i];
        }
        d
    }

    /// One-norm condition number `|A|_1 |A^-1|_1`, computed from the full inverse.
    pub fn condition(&self) -> f64 {
        self.norm_one * self.inverse().norm_one()
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: CMatrix,
    pub condition: f64,
}

/// Solves `A X = B` and reports the one-norm condition number of `A`.
pub fn solve_linear(a: &CMatrix, b: &CMatrix) -> Result<Solution> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: (a.rows, a.rows), got: a.shape() });
    }
    if b.rows != a.rows {
        return Err(Error::DimensionMismatch { expected: (a.rows, b.cols), got: b.shape() });
    }
    let lu = Lu::factor(a)?;
    let x = lu.solve(b)?;
    Ok(Solution { x, condition: lu.condition() })
}

/// Inverse together with its one-norm condition number.
pub fn inverse_with_condition(a: &CMatrix) -> Result<(CMatrix, f64)> {
    let lu = Lu::factor(a)?;
    let inv = lu.inverse();
    let cond = a.norm_one() * inv.norm_one();
    Ok((inv, cond))
}

/// Full singular value decomposition `A = U diag(sigma) V*` with square
/// unitary `U` and `V`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl SvdResult {
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.last().copied().unwrap_or(0.0)
    }

    /// `U Sigma V*` with the rectangular `Sigma`.
    pub fn reconstruct(&self) -> CMatrix {
        let (m, n) = (self.u.rows, self.v.rows);
        let mut us = CMatrix::zeros(m, n);
        for i in 0..m {
            for (k, &s) in self.sigma.iter().enumerate() {
                us[(i, k)] = self.u[(i, k)] * s;
            }
        }
        us.matmul(&self.v.adjoint())
    }
}

/// One-sided Jacobi SVD.
pub fn svd(a: &CMatrix) -> Result<SvdResult> {
    if a.rows >= a.cols {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.adjoint())?;
        Ok(SvdResult { u: t.v, sigma: t.sigma, v: t.u })
    }
}

pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.sigma)
}

fn svd_tall(a: &CMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    // Columns stored contiguously: w[j] is column j of the working matrix.
    let mut w: Vec<Vec<C64>> = (0..n).map(|j| a.col_vec(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![cr(0.0); n];
            e[j] = cr(1.0);
            e
        })
        .collect();
    // The computed inner product carries a rounding floor of about m eps.
    let jacobi_tol = EPS * (m as f64).max(4.0);
    // Columns below eps |A|_F are rounding noise; their direction cannot be
    // orthogonalized further.
    let noise = (EPS * a.norm_fro()).powi(2);
    let mut converged = n < 2;
    for _ in 0..SVD_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                if alpha <= noise || beta <= noise {
                    continue;
                }
                let gamma: C64 = w[p].iter().zip(&w[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= jacobi_tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let ph = phase.conj();
                for cols in [&mut w, &mut v] {
                    for i in 0..cols[p].len() {
                        let xp = cols[p][i];
                        let xq = cols[q][i] * ph;
                        cols[p][i] = xp * cs - xq * sn;
                        cols[q][i] = xp * sn + xq * cs;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure { iterations: SVD_MAX_SWEEPS });
    }
    let norms: Vec<f64> = w.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(core::cmp::Ordering::Equal));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let negligible = (m.max(n) as f64) * EPS * smax;

    let mut ucols: Vec<Vec<C64>> = Vec::with_capacity(m);
    for (k, &j) in order.iter().enumerate() {
        let s = sigma[k];
        let candidate: Vec<C64> = if s > 0.0 { w[j].iter().map(|z| z / s).collect() } else { vec![cr(0.0); m] };
        if s > negligible {
            ucols.push(candidate);
        } else {
            ucols.push(orthonormal_completion(&ucols, candidate, m));
        }
    }
    while ucols.len() < m {
        let zero = vec![cr(0.0); m];
        let next = orthonormal_completion(&ucols, zero, m);
        ucols.push(next);
    }
    let u = CMatrix::from_fn(m, m, |i, k| ucols[k][i]);
    let vm = CMatrix::from_fn(n, n, |i, k| v[order[k]][i]);
    Ok(SvdResult { u, sigma, v: vm })
}

/// Unit vector orthogonal to `basis`, preferring the direction of `seed`
/// and otherwise the standard basis vector with the largest residual.
fn orthonormal_completion(basis: &[Vec<C64>], seed: Vec<C64>, m: usize) -> Vec<C64> {
    let project_out = |mut x: Vec<C64>| -> (Vec<C64>, f64) {
        for _ in 0..2 {
            for b in basis {
                let d: C64 = b.iter().zip(&x).map(|(bi, xi)| bi.conj() * xi).sum();
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= d * bi;
                }
            }
        }
        let nrm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (x, nrm)
    };
    let (x, nrm) = project_out(seed);
    if nrm > 0.5 {
        return x.into_iter().map(|z| z / nrm).collect();
    }
    let mut best: Option<(Vec<C64>, f64)> = None;
    for e in 0..m {
        let mut ev = vec![cr(0.0); m];
        ev[e] = cr(1.0);
        let (y, ny) = project_out(ev);
        if best.as_ref().map_or(true, |b| ny > b.1) {
            best = Some((y, ny));
        }
    }
    let (y, ny) = best.expect("m > basis length");
    y.into_iter().map(|z| z / ny).collect()
}

/// Eigenvalues by balancing, Householder reduction to Hessenberg form and
/// shifted complex QR with deflation.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: (a.rows, a.rows), got: a.shape() });
    }
    let n = a.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hessenberg_qr(h)
}

fn balance(a: &mut CMatrix) {
    let n = a.rows;
    let mut changed = true;
    let mut passes = 0;
    while changed && passes < 100 {
        changed = false;
        passes += 1;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += a[(j, i)].norm();
                    row += a[(i, j)].norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let (mut cn, mut rn) = (col, row);
            while cn < rn / 2.0 {
                cn *= 2.0;
                rn /= 2.0;
                f *= 2.0;
            }
            while cn >= rn * 2.0 {
                cn /= 2.0;
                rn *= 2.0;
                f /= 2.0;
            }
            if cn + rn < 0.95 * total {
                changed = true;
                for j in 0..n {
                    a[(j, i)] *= f;
                    a[(i, j)] /= f;
                }
            }
        }
    }
}

fn hessenberg(a: &mut CMatrix) {
    let n = a.rows;
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { cr(1.0) };
        let mut v = x.clone();
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // A <- (I - 2 v v*) A on rows k+1..n.
        for j in k..n {
            let d: C64 = v.iter().enumerate().map(|(t, vt)| vt.conj() * a[(k + 1 + t, j)]).sum();
            for (t, vt) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= vt * d * 2.0;
            }
        }
        // A <- A (I - 2 v v*) on columns k+1..n.
        for i in 0..n {
            let d: C64 = v.iter().enumerate().map(|(t, vt)| a[(i, k + 1 + t)] * vt).sum();
            for (t, vt) in v.iter().enumerate() {
                a[(i, k + 1 + t)] -= d * vt.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = cr(0.0);
        }
    }
}

fn hessenberg_qr(mut h: CMatrix) -> Result<Vec<C64>> {
    let n = h.rows;
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let mut eig = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let cap = 100 * n.max(10);
    let mut rot: Vec<(C64, C64, C64, C64)> = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            eig.push(h[(0, 0)]);
            break;
        }
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if s == 0.0 {
                s = scale;
            }
            if h[(l, l - 1)].norm() <= EPS * s {
                h[(l, l - 1)] = cr(0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig.push(h[(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > cap {
            return Err(Error::ConvergenceFailure { iterations: total });
        }
        let mu = if iter % 11 == 0 {
            h[(hi, hi)] + cr(0.75 * h[(hi, hi - 1)].norm())
        } else if iter % 17 == 0 {
            h[(hi, hi)] + c(0.0, 0.75 * h[(hi, hi - 1)].norm())
        } else {
            let (a, b, cc, d) = (h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
            let half = (a - d) * 0.5;
            let disc = (half * half + b * cc).sqrt();
            let m = (a + d) * 0.5;
            let (r1, r2) = (m + disc, m - disc);
            if (r1 - d).norm() < (r2 - d).norm() {
                r1
            } else {
                r2
            }
        };
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        rot.clear();
        for k in l..hi {
            let a = h[(k, k)];
            let b = h[(k + 1, k)];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let g = if r == 0.0 {
                (cr(1.0), cr(0.0), cr(0.0), cr(1.0))
            } else {
                (a.conj() / r, b.conj() / r, -b / r, a / r)
            };
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = g.0 * x + g.1 * y;
                h[(k + 1, j)] = g.2 * x + g.3 * y;
            }
            rot.push(g);
        }
        for (idx, g) in rot.iter().enumerate() {
            let k = l + idx;
            for i in l..=(k + 2).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * g.0.conj() + y * g.1.conj();
                h[(i, k + 1)] = x * g.2.conj() + y * g.3.conj();
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(eig)
}

/// Closed curve used for contour integrals.
#[derive(Clone, Debug, PartialEq)]
pub enum Contour {
    /// Positively oriented circle.
    Circle { center: C64, radius: f64, nodes: usize },
    /// Closed polygon through the vertices in order; the last vertex joins
    /// the first.
    Polyline { vertices: Vec<C64>, nodes: usize },
}

impl Contour {
    pub fn circle(center: C64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument("contour radius must be positive"));
        }
        if nodes < 8 {
            return Err(Error::InvalidArgument("contour needs at least 8 nodes"));
        }
        Ok(Contour::Circle { center, radius, nodes })
    }

    pub fn polyline(vertices: Vec<C64>, nodes: usize) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument("polyline needs at least 3 vertices"));
        }
        if nodes < 8 {
            return Err(Error::InvalidArgument("contour needs at least 8 nodes"));
        }
        Ok(Contour::Polyline { vertices, nodes })
    }

    pub fn nodes(&self) -> usize {
        match self {
            Contour::Circle { nodes, .. } | Contour::Polyline { nodes, .. } => *nodes,
        }
    }

    /// Quadrature points `(z_j, w_j)` of the trapezoid rule with `n` nodes,
    /// so that the integral of `f dz` is approximated by the sum of `w_j f(z_j)`.
    pub fn quadrature(&self, n: usize) -> Vec<(C64, C64)> {
        match self {
            Contour::Circle { center, radius, .. } => (0..n)
                .map(|j| {
                    let th = 2.0 * core::f64::consts::PI * (j as f64) / (n as f64);
                    let e = c(th.cos(), th.sin());
                    (center + e * *radius, c(0.0, 1.0) * e * *radius * (2.0 * core::f64::consts::PI / n as f64))
                })
                .collect(),
            Contour::Polyline { vertices, .. } => {
                let m = vertices.len();
                let per = n.div_ceil(m).max(1);
                let mut out = Vec::with_capacity(m * per);
                for s in 0..m {
                    let a = vertices[s];
                    let b = vertices[(s + 1) % m];
                    let d = (b - a) / (per as f64);
                    for j in 0..per {
                        let w = if j == 0 { d * 0.5 } else { d };
                        out.push((a + d * (j as f64), w));
                    }
                    // The closing half weight of this segment sits on vertex b.
                    out.push((b, d * 0.5));
                }
                out
            }
        }
    }
}

/// Trapezoid estimate of the contour integral of `f`, doubling the node
/// count until two successive estimates differ by at most
/// `tol * max(1, |estimate|)`.
pub fn contour_integrate(mut f: impl FnMut(C64) -> C64, contour: &Contour, tol: f64) -> Result<C64> {
    try_contour_integrate(|z| Ok(f(z)), contour, tol)
}

/// Fallible form of [`contour_integrate`]; integrand errors abort the sweep.
pub fn try_contour_integrate<F>(mut f: F, contour: &Contour, tol: f64) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let mut n = contour.nodes();
    let mut prev = trapezoid(&mut f, contour, n)?;
    let mut before = prev;
    while n * 2 <= QUADRATURE_CAP {
        n *= 2;
        let next = trapezoid(&mut f, contour, n)?;
        if (next - prev).norm() <= tol * next.norm().max(1.0) {
            return Ok(next);
        }
        before = prev;
        prev = next;
    }
    Err(Error::NonConvergent { last: (prev.re, prev.im), previous: (before.re, before.im) })
}

fn trapezoid<F>(f: &mut F, contour: &Contour, n: usize) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let mut s = cr(0.0);
    for (z, w) in contour.quadrature(n) {
        s += f(z)? * w;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, seeded};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let b = CMatrix::from_fn(3, 2, |i, j| c(i as f64, j as f64 - 1.0));
        let s = solve_linear(&CMatrix::identity(3), &b).unwrap();
        assert_eq!(s.x, b);
        assert!((s.condition - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_diagonal() {
        let a = CMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 4.0]]);
        let b = CMatrix::from_real_rows(&[&[2.0], &[8.0]]);
        let s = solve_linear(&a, &b).unwrap();
        assert!(close(s.x[(0, 0)], cr(1.0), 1e-15));
        assert!(close(s.x[(1, 0)], cr(2.0), 1e-15));
    }

    #[test]
    fn solve_random_residual() {
        let mut rng = seeded(3);
        let a = &complex_gaussian_matrix(&mut rng, 20, 20) + &CMatrix::identity(20).scale(cr(8.0));
        let b = complex_gaussian_matrix(&mut rng, 20, 3);
        let s = solve_linear(&a, &b).unwrap();
        let r = &a.matmul(&s.x) - &b;
        assert!(r.norm_fro() <= 1e-12 * b.norm_fro());
    }

    #[test]
    fn solve_singular_is_reported() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(solve_linear(&a, &CMatrix::identity(2)), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn svd_zero_and_diagonal() {
        let z = svd(&CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(z.sigma, vec![0.0, 0.0]);
        let u_err = (&z.u.adjoint().matmul(&z.u) - &CMatrix::identity(2)).norm_fro();
        assert!(u_err < 1e-14);
        let d = svd(&CMatrix::from_real_rows(&[&[3.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(d.sigma, vec![3.0, 1.0]);
        assert!((&d.u - &CMatrix::identity(2)).max_abs() < 1e-15);
        assert!((&d.v - &CMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn svd_rectangular_reconstruction() {
        let mut rng = seeded(10);
        for (m, n) in [(10, 7), (7, 10), (5, 1), (1, 4)] {
            let a = complex_gaussian_matrix(&mut rng, m, n);
            let s = svd(&a).unwrap();
            let nrm = s.sigma_max();
            assert!((&s.reconstruct() - &a).norm_fro() <= 1e-12 * nrm);
            assert!((&s.u.adjoint().matmul(&s.u) - &CMatrix::identity(m)).norm_fro() < 1e-12);
            assert!((&s.v.adjoint().matmul(&s.v) - &CMatrix::identity(n)).norm_fro() < 1e-12);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigenvalues_diagonal_and_nilpotent() {
        let d = CMatrix::from_diag(&[cr(1.0), cr(2.0), cr(3.0)]);
        let mut e: Vec<f64> = eigenvalues(&d).unwrap().iter().map(|z| z.re).collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in e.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - y).abs() < 1e-14);
        }
        let j = CMatrix::from_fn(4, 4, |i, k| if k == i + 1 { cr(1.0) } else { cr(0.0) });
        assert!(eigenvalues(&j).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn eigenvalues_rank_one_jordan_perturbation() {
        let mut j = CMatrix::from_fn(4, 4, |i, k| if k == i + 1 { cr(1.0) } else { cr(0.0) });
        j[(3, 0)] = cr(1e-4);
        // Characteristic polynomial by cofactor expansion along the first
        // column: lambda^4 - 1e-4, so roots are 0.1 * i^k.
        for z in eigenvalues(&j).unwrap() {
            assert!((z.norm() - 0.1).abs() < 1e-12);
            let q = z.arg() / (core::f64::consts::PI / 2.0);
            assert!((q - q.round()).abs() < 1e-10);
        }
    }

    #[test]
    fn contour_examples() {
        let unit = Contour::circle(cr(0.0), 1.0, 16).unwrap();
        let v = contour_integrate(|z| z.inv(), &unit, 1e-13).unwrap();
        assert!(close(v, c(0.0, 2.0 * core::f64::consts::PI), 1e-10));
        let v = contour_integrate(|_| cr(1.0), &unit, 1e-13).unwrap();
        assert!(v.norm() < 1e-12);
        let v = contour_integrate(|z| (z - 0.3).inv() + (z - 5.0).inv(), &unit, 1e-12).unwrap();
        assert!(close(v, c(0.0, 2.0 * core::f64::consts::PI), 1e-8));
        let square = Contour::polyline(vec![c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0)], 8).unwrap();
        let v = contour_integrate(|z| z * z + 3.0 * z, &square, 1e-12).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn contour_rejects_degenerate() {
        assert!(Contour::circle(cr(0.0), 0.0, 16).is_err());
        assert!(Contour::circle(cr(0.0), 1.0, 4).is_err());
    }

    #[test]
    fn numerical_rank_band() {
        assert_eq!(numerical_rank(&[1.0, 0.5, 0.0], 1e-10).unwrap(), 2);
        assert!(matches!(numerical_rank(&[1.0, 5e-10], 1e-10), Err(Error::RankAmbiguous { .. })));
    }

    #[test]
    fn rejects_nonfinite() {
        assert_eq!(CMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]), Err(Error::NonFinite));
    }
}
