//! Bordered systems `[[P, R-], [R+, C]]` and the blocks of their inverses.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linops::{
    c, cr, inverse_with_condition, numerical_rank, rank_tolerance, svd, CMatrix, Lu, C64, WELL_POSED_LIMIT,
};

/// `P: H1 -> H2` bordered by `R-: H- -> H2`, `R+: H1 -> H+` and a corner
/// `H- -> H+`.
#[derive(Clone, Debug, PartialEq)]
pub struct BorderedSystem {
    pub p: CMatrix,
    pub rminus: CMatrix,
    pub rplus: CMatrix,
    pub corner: CMatrix,
}

impl BorderedSystem {
    pub fn n1(&self) -> usize {
        self.p.cols()
    }

    pub fn n2(&self) -> usize {
        self.p.rows()
    }

    pub fn k_minus(&self) -> usize {
        self.rminus.cols()
    }

    pub fn k_plus(&self) -> usize {
        self.rplus.rows()
    }

    /// The assembled `(n2 + k+) x (n1 + k-)` matrix.
    pub fn matrix(&self) -> CMatrix {
        CMatrix::block2(&self.p, &self.rminus, &self.rplus, &self.corner).expect("shapes checked at assembly")
    }

    pub fn with_p(&self, p: CMatrix) -> Result<Self> {
        assemble(p, self.rminus.clone(), self.rplus.clone(), Some(self.corner.clone()))
    }
}

/// The inverse `[[E, E+], [E-, E-+]]`; `E-+` is the effective Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct GrushinInverse {
    pub e: CMatrix,
    pub eplus: CMatrix,
    pub eminus: CMatrix,
    pub eminusplus: CMatrix,
    /// One-norm condition number of the bordered matrix.
    pub condition: f64,
}

impl GrushinInverse {
    pub fn matrix(&self) -> CMatrix {
        CMatrix::block2(&self.e, &self.eplus, &self.eminus, &self.eminusplus).expect("blocks are consistent")
    }

    fn from_inverse(inv: &CMatrix, n1: usize, n2: usize, condition: f64) -> Self {
        let (rows, cols) = inv.shape();
        let (km, kp) = (rows - n1, cols - n2);
        GrushinInverse {
            e: inv.sub_matrix(0, 0, n1, n2),
            eplus: inv.sub_matrix(0, n2, n1, kp),
            eminus: inv.sub_matrix(n1, 0, km, n2),
            eminusplus: inv.sub_matrix(n1, n2, km, kp),
            condition,
        }
    }
}

pub fn assemble(p: CMatrix, rminus: CMatrix, rplus: CMatrix, corner: Option<CMatrix>) -> Result<BorderedSystem> {
    let (n2, n1) = p.shape();
    if rminus.rows() != n2 {
        return Err(Error::DimensionMismatch { expected: (n2, rminus.cols()), got: rminus.shape() });
    }
    if rplus.cols() != n1 {
        return Err(Error::DimensionMismatch { expected: (rplus.rows(), n1), got: rplus.shape() });
    }
    let (kp, km) = (rplus.rows(), rminus.cols());
    let corner = corner.unwrap_or_else(|| CMatrix::zeros(kp, km));
    if corner.shape() != (kp, km) {
        return Err(Error::DimensionMismatch { expected: (kp, km), got: corner.shape() });
    }
    Ok(BorderedSystem { p, rminus, rplus, corner })
}

/// Inverts the bordered matrix; fails with `IllPosed` when it is singular
/// or its condition number reaches `1 / (100 eps)`.
pub fn invert_system(s: &BorderedSystem) -> Result<GrushinInverse> {
    let m = s.matrix();
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: (m.rows(), m.rows()), got: m.shape() });
    }
    let (inv, cond) = well_posed_inverse(&m).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::IllPosed { condition: f64::INFINITY },
        other => other,
    })?;
    if cond >= WELL_POSED_LIMIT {
        return Err(Error::IllPosed { condition: cond });
    }
    Ok(GrushinInverse::from_inverse(&inv, s.n1(), s.n2(), cond))
}

fn well_posed_inverse(m: &CMatrix) -> Result<(CMatrix, f64)> {
    if m.rows() == 0 {
        return Ok((CMatrix::zeros(0, 0), 1.0));
    }
    inverse_with_condition(m)
}

/// `max(|PE - I|, |EP - I|)` in the Frobenius norm for the assembled system.
pub fn two_sided_residual(s: &BorderedSystem, g: &GrushinInverse) -> f64 {
    let m = s.matrix();
    let e = g.matrix();
    let left = (&m.matmul(&e) - &CMatrix::identity(m.rows())).norm_fro();
    let right = (&e.matmul(&m) - &CMatrix::identity(m.cols())).norm_fro();
    left.max(right)
}

/// Rank tolerance of `P`.
pub fn p_tolerance(s: &BorderedSystem) -> Result<f64> {
    let (n2, n1) = s.p.shape();
    let smax = if n1 * n2 == 0 { 0.0 } else { svd(&s.p)?.sigma_max() };
    Ok(rank_tolerance(n2, n1, smax))
}

/// Tolerance on the singular values of `E-+` that corresponds to the rank
/// tolerance of `P`.
///
/// A perturbation `dP` moves `E-+` by `-E- dP E+` to first order, so the
/// threshold is `tol(P) |E-| |E+|`.
pub fn effective_tolerance(s: &BorderedSystem, g: &GrushinInverse) -> Result<f64> {
    let em = g.eminus.norm2()?;
    let ep = g.eplus.norm2()?;
    Ok(p_tolerance(s)? * em * ep)
}

#[derive(Clone, Debug)]
pub struct Resolvent {
    pub inverse: CMatrix,
    /// `|P P^-1 - I|` in the Frobenius norm.
    pub residual: f64,
}

/// `P^-1 = E - E+ E-+^-1 E-`, or `EffectiveSingular` when `E-+` fails the
/// effective rank tolerance.
pub fn recover_resolvent(s: &BorderedSystem, g: &GrushinInverse) -> Result<Resolvent> {
    let k = g.eminusplus.rows();
    if !g.eminusplus.is_square() || !s.p.is_square() {
        return Err(Error::DimensionMismatch { expected: (k, k), got: g.eminusplus.shape() });
    }
    let inverse = if k == 0 {
        g.e.clone()
    } else {
        let tol = effective_tolerance(s, g)?;
        let sig = svd(&g.eminusplus)?.sigma_min();
        if sig <= tol {
            return Err(Error::EffectiveSingular { sigma_min: sig, tolerance: tol });
        }
        let lu = Lu::factor(&g.eminusplus).map_err(|_| Error::EffectiveSingular { sigma_min: sig, tolerance: tol })?;
        let x = lu.solve(&g.eminus)?;
        &g.e - &g.eplus.matmul(&x)
    };
    let n = s.p.rows();
    let residual = (&s.p.matmul(&inverse) - &CMatrix::identity(n)).norm_fro();
    Ok(Resolvent { inverse, residual })
}

/// `|B11^-1 - (A11 - A12 A22^-1 A21)|` for the leading `k x k` block.
pub fn schur_check(a: &CMatrix, b: &CMatrix, k: usize) -> Result<f64> {
    let n = a.rows();
    if !a.is_square() || b.shape() != (n, n) || k == 0 || k > n {
        return Err(Error::DimensionMismatch { expected: (n, n), got: b.shape() });
    }
    let a11 = a.sub_matrix(0, 0, k, k);
    let b11 = b.sub_matrix(0, 0, k, k);
    let complement = if k == n {
        a11
    } else {
        let a12 = a.sub_matrix(0, k, k, n - k);
        let a21 = a.sub_matrix(k, 0, n - k, k);
        let a22 = a.sub_matrix(k, k, n - k, n - k);
        let sv = svd(&a22)?;
        let tol = rank_tolerance(n - k, n - k, sv.sigma_max());
        if sv.sigma_min() <= tol {
            return Err(Error::CornerSingular { sigma_min: sv.sigma_min(), tolerance: tol });
        }
        let x = Lu::factor(&a22)?.solve(&a21)?;
        &a11 - &a12.matmul(&x)
    };
    let b11_inv = Lu::factor(&b11)?.inverse();
    Ok((&b11_inv - &complement).norm_fro())
}

/// Central-difference residual of
/// `tr B11^-1 dB11 - tr A22^-1 dA22 + tr(dA B)` for the family `a(t)`
/// split after the leading `k` rows and columns.
pub fn schur_trace_residual(a: impl Fn(f64) -> CMatrix, t: f64, step: f64, k: usize) -> Result<C64> {
    let a0 = a(t);
    let n = a0.rows();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument("split must leave both blocks nonempty"));
    }
    let da = (&a(t + step) - &a(t - step)).scale(cr(0.5 / step));
    let b_of = |m: &CMatrix| -> Result<CMatrix> { Ok(Lu::factor(m)?.inverse()) };
    let b0 = b_of(&a0)?;
    let db = (&b_of(&a(t + step))? - &b_of(&a(t - step))?).scale(cr(0.5 / step));
    let b11 = b0.sub_matrix(0, 0, k, k);
    let db11 = db.sub_matrix(0, 0, k, k);
    let a22 = a0.sub_matrix(k, k, n - k, n - k);
    let da22 = da.sub_matrix(k, k, n - k, n - k);
    let t1 = Lu::factor(&b11)?.solve(&db11)?.trace();
    let t2 = Lu::factor(&a22)?.solve(&da22)?.trace();
    let t3 = da.matmul(&b0).trace();
    Ok(t1 - t2 + t3)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexReport {
    pub ker_p: usize,
    pub coker_p: usize,
    pub ker_eff: usize,
    pub coker_eff: usize,
    /// `dim ker P - dim coker P`, which equals `k+ - k-`.
    pub index: i64,
}

impl IndexReport {
    pub fn consistent(&self) -> bool {
        self.ker_p == self.ker_eff && self.coker_p == self.coker_eff
    }
}

/// Kernel and cokernel dimensions of `P` and of `E-+ : H+ -> H-`, each
/// decided at its own rank tolerance.
pub fn effective_index(s: &BorderedSystem, g: &GrushinInverse) -> Result<IndexReport> {
    let (n2, n1) = s.p.shape();
    let rank_p = if n1 * n2 == 0 { 0 } else { numerical_rank(&svd(&s.p)?.sigma, p_tolerance(s)?)? };
    let (km, kp) = g.eminusplus.shape();
    let rank_e = if km * kp == 0 {
        0
    } else {
        numerical_rank(&svd(&g.eminusplus)?.sigma, effective_tolerance(s, g)?)?
    };
    Ok(IndexReport {
        ker_p: n1 - rank_p,
        coker_p: n2 - rank_p,
        ker_eff: kp - rank_e,
        coker_eff: km - rank_e,
        index: n1 as i64 - n2 as i64,
    })
}

/// Inverse of the problem with `P` and new borders (zero corner), built
/// from the old inverse through the reduced system
/// `G = [[-R+' E R-', R+' E+], [-E- R-', E-+]]`.
///
/// `G^-1 = [[E-+', X12], [X21, X22]]` recovers the new effective
/// Hamiltonian directly; the remaining blocks follow by back substitution.
pub fn transfer(
    s: &BorderedSystem,
    g: &GrushinInverse,
    rminus_new: &CMatrix,
    rplus_new: &CMatrix,
) -> Result<GrushinInverse> {
    let new = assemble(s.p.clone(), rminus_new.clone(), rplus_new.clone(), None)?;
    let (kmt, kpt) = (rminus_new.cols(), rplus_new.rows());
    let (km, kp) = g.eminusplus.shape();
    if kpt + km != kmt + kp {
        return Err(Error::DimensionMismatch { expected: (kpt + km, kpt + km), got: (kpt + km, kmt + kp) });
    }
    let e_rm = g.e.matmul(rminus_new);
    let rp_e = rplus_new.matmul(&g.e);
    let gm = CMatrix::block2(
        &-&rplus_new.matmul(&e_rm),
        &rplus_new.matmul(&g.eplus),
        &-&g.eminus.matmul(rminus_new),
        &g.eminusplus,
    )?;
    let (gi, gcond) = well_posed_inverse(&gm).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::TransferSingular { condition: f64::INFINITY },
        other => other,
    })?;
    if gcond >= WELL_POSED_LIMIT {
        return Err(Error::TransferSingular { condition: gcond });
    }
    let x11 = gi.sub_matrix(0, 0, kmt, kpt);
    let x12 = gi.sub_matrix(0, kpt, kmt, km);
    let x21 = gi.sub_matrix(kmt, 0, kp, kpt);
    let x22 = gi.sub_matrix(kmt, kpt, kp, km);
    let eminus = &-&x11.matmul(&rp_e) - &x12.matmul(&g.eminus);
    let eplus = &g.eplus.matmul(&x21) - &e_rm.matmul(&x11);
    let v_part = &-&x21.matmul(&rp_e) - &x22.matmul(&g.eminus);
    let e = &(&g.e - &e_rm.matmul(&eminus)) + &g.eplus.matmul(&v_part);
    let out = GrushinInverse { e, eplus, eminus, eminusplus: x11, condition: 0.0 };
    let condition = new.matrix().norm_one() * out.matrix().norm_one();
    Ok(GrushinInverse { condition, ..out })
}

/// Inverse of the problem bordered by `R- N-` and `N+ R+`, from the
/// inverse `F` of the inner system `[[E-+, N-], [N+, 0]]`.
pub fn iterate(s: &BorderedSystem, g: &GrushinInverse, nminus: &CMatrix, nplus: &CMatrix) -> Result<GrushinInverse> {
    let (km, kp) = g.eminusplus.shape();
    if nminus.rows() != km || nplus.cols() != kp {
        return Err(Error::DimensionMismatch { expected: (km, kp), got: (nminus.rows(), nplus.cols()) });
    }
    let inner_sys = assemble(g.eminusplus.clone(), nminus.clone(), nplus.clone(), None)?;
    let inner = invert_system(&inner_sys).map_err(|e| match e {
        Error::IllPosed { condition } => Error::InnerSingular { condition },
        other => other,
    })?;
    let fe = inner.e.matmul(&g.eminus);
    let out = GrushinInverse {
        e: &g.e - &g.eplus.matmul(&fe),
        eplus: g.eplus.matmul(&inner.eplus),
        eminus: inner.eminus.matmul(&g.eminus),
        eminusplus: -&inner.eminusplus,
        condition: 0.0,
    };
    let new = assemble(s.p.clone(), s.rminus.matmul(nminus), nplus.matmul(&s.rplus), None)?;
    let condition = new.matrix().norm_one() * out.matrix().norm_one();
    Ok(GrushinInverse { condition, ..out })
}

/// Index set of the distinguished block, 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    v: Vec<usize>,
    n: usize,
}

impl Split {
    pub fn new(mut v: Vec<usize>, n: usize) -> Result<Self> {
        v.sort_unstable();
        v.dedup();
        if v.is_empty() || v.len() >= n || v.iter().any(|&i| i >= n) {
            return Err(Error::InvalidSplit);
        }
        Ok(Split { v, n })
    }

    pub fn v(&self) -> &[usize] {
        &self.v
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.n).filter(|i| self.v.binary_search(i).is_err()).collect()
    }
}

fn pick(h: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| h[(rows[i], cols[j])])
}

#[derive(Clone, Debug)]
pub struct FeshbachReport {
    /// `G_v(z) = z - H^vv - H^vw (z - H^ww)^-1 H^wv` with `w` the complement.
    pub g_v: CMatrix,
    /// `E-+` of `[[z - H, R-], [R+, 0]]` with `R+` the restriction to `v`.
    pub eminusplus: CMatrix,
    /// `|E-+ + G_v|` in the Frobenius norm.
    pub agreement: f64,
}

pub fn feshbach_effective(h: &CMatrix, split: &Split, z: C64) -> Result<FeshbachReport> {
    let n = h.rows();
    if !h.is_square() || split.n != n {
        return Err(Error::DimensionMismatch { expected: (split.n, split.n), got: h.shape() });
    }
    let v = split.v();
    let w = split.complement();
    let zw = CMatrix::identity(w.len()).scale(z);
    let comp = &zw - &pick(h, &w, &w);
    let sv = svd(&comp)?;
    let tol = rank_tolerance(w.len(), w.len(), sv.sigma_max().max(h.norm2()?));
    if sv.sigma_min() <= tol {
        return Err(Error::ComplementSingular { sigma_min: sv.sigma_min(), tolerance: tol });
    }
    let x = Lu::factor(&comp)?.solve(&pick(h, &w, v))?;
    let g_v = &(&CMatrix::identity(v.len()).scale(z) - &pick(h, v, v)) - &pick(h, v, &w).matmul(&x);

    let mut rplus = CMatrix::zeros(v.len(), n);
    for (i, &vi) in v.iter().enumerate() {
        rplus[(i, vi)] = cr(1.0);
    }
    let rminus = rplus.transpose();
    let p = &CMatrix::identity(n).scale(z) - h;
    let g = invert_system(&assemble(p, rminus, rplus, None)?)?;
    let agreement = (&g.eminusplus + &g_v).norm_fro();
    Ok(FeshbachReport { g_v, eminusplus: g.eminusplus, agreement })
}

/// Unnormalized DFT matrix `F[k][x] = exp(-2 pi i k x / N)`.
pub fn dft_matrix(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |k, x| {
        let th = -2.0 * core::f64::consts::PI * ((k * x) % n) as f64 / n as f64;
        c(th.cos(), th.sin())
    })
}

/// Circular convolution `(K * u)(x) = sum_y K(x - y) u(y)` on `Z_N`.
pub fn circulant(kernel: &[C64]) -> CMatrix {
    let n = kernel.len();
    CMatrix::from_fn(n, n, |x, y| kernel[(x + n - y) % n])
}

#[derive(Clone, Debug)]
pub struct CirculantReport {
    pub system: BorderedSystem,
    pub inverse: GrushinInverse,
}

/// Convolution by `K` bordered by `R+ = F` and `R- = -F^-1`, whose inverse
/// is `[[0, F^-1], [-F, diag(F K)]]` for every kernel.
pub fn circulant_effective(kernel: &[C64]) -> Result<CirculantReport> {
    let n = kernel.len();
    if n < 2 {
        return Err(Error::InvalidArgument("circulant kernel needs length at least 2"));
    }
    let f = dft_matrix(n);
    // F^-1 = F* / N.
    let finv = f.adjoint().scale(cr(1.0 / n as f64));
    let system = assemble(circulant(kernel), -&finv, f, None)?;
    let inverse = invert_system(&system)?;
    Ok(CirculantReport { system, inverse })
}

/// Jordan block `J_n` with ones on the superdiagonal.
pub fn jordan_block(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if j == i + 1 { cr(1.0) } else { cr(0.0) })
}

/// Borders `R- u = u e_n`, `R+ u = <u, e_1>` for a Jordan block.
pub fn jordan_borders(n: usize) -> (CMatrix, CMatrix) {
    let mut rm = CMatrix::zeros(n, 1);
    rm[(n - 1, 0)] = cr(1.0);
    let mut rp = CMatrix::zeros(1, n);
    rp[(0, 0)] = cr(1.0);
    (rm, rp)
}

/// Bordered system for `J_n - lambda` with the Jordan borders.
pub fn jordan_system(n: usize, lambda: C64) -> BorderedSystem {
    let (rm, rp) = jordan_borders(n);
    assemble(jordan_block(n).shift(lambda), rm, rp, None).expect("Jordan shapes agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::solve_linear;
    use alloc::vec;
    use crate::rng::{complex_gaussian_matrix, seeded};

    #[test]
    fn assemble_examples() {
        let s = jordan_system(3, cr(0.0));
        assert_eq!(s.matrix().shape(), (4, 4));
        let one = CMatrix::identity(1);
        let s = assemble(CMatrix::zeros(1, 1), one.clone(), one.clone(), None).unwrap();
        assert_eq!(s.matrix(), CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]));
        let bad = assemble(CMatrix::zeros(2, 2), CMatrix::zeros(3, 1), CMatrix::zeros(1, 2), None);
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn jordan_two_at_half() {
        let g = invert_system(&jordan_system(2, cr(0.5))).unwrap();
        assert!((g.eminusplus[(0, 0)] - cr(0.25)).norm() < 1e-15);
    }

    #[test]
    fn involution_inverse() {
        let one = CMatrix::identity(1);
        let s = assemble(CMatrix::zeros(1, 1), one.clone(), one, None).unwrap();
        let g = invert_system(&s).unwrap();
        assert_eq!(g.matrix(), s.matrix());
        assert_eq!(g.eminusplus[(0, 0)], cr(0.0));
    }

    #[test]
    fn resolvent_examples() {
        let p = CMatrix::from_diag(&[cr(2.0), cr(3.0)]);
        let s = assemble(p, CMatrix::zeros(2, 0), CMatrix::zeros(0, 2), None).unwrap();
        let r = recover_resolvent(&s, &invert_system(&s).unwrap()).unwrap();
        assert!((&r.inverse - &CMatrix::from_diag(&[cr(0.5), cr(1.0 / 3.0)])).max_abs() < 1e-15);

        let s = jordan_system(3, cr(0.5));
        let r = recover_resolvent(&s, &invert_system(&s).unwrap()).unwrap();
        assert!(r.residual <= 1e-12);
        let direct = solve_linear(&s.p, &CMatrix::identity(3)).unwrap().x;
        assert!((&r.inverse - &direct).max_abs() < 1e-12);

        let s = jordan_system(3, cr(0.0));
        let g = invert_system(&s).unwrap();
        assert!(matches!(recover_resolvent(&s, &g), Err(Error::EffectiveSingular { .. })));
    }

    #[test]
    fn schur_examples() {
        assert_eq!(schur_check(&CMatrix::identity(4), &CMatrix::identity(4), 2).unwrap(), 0.0);
        let a = CMatrix::from_diag(&[cr(2.0), cr(3.0)]);
        let b = CMatrix::from_diag(&[cr(0.5), cr(1.0 / 3.0)]);
        assert_eq!(schur_check(&a, &b, 1).unwrap(), 0.0);
        let mut rng = seeded(21);
        let a = &complex_gaussian_matrix(&mut rng, 6, 6) + &CMatrix::identity(6).scale(cr(3.0));
        let b = solve_linear(&a, &CMatrix::identity(6)).unwrap().x;
        assert!(schur_check(&a, &b, 3).unwrap() <= 1e-11);
        let sing = CMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 0.0]]);
        assert!(matches!(schur_check(&sing, &sing, 1), Err(Error::CornerSingular { .. })));
    }

    #[test]
    fn schur_trace_residual_is_second_order() {
        let mut rng = seeded(4);
        let a0 = &complex_gaussian_matrix(&mut rng, 5, 5) + &CMatrix::identity(5).scale(cr(4.0));
        let a1 = complex_gaussian_matrix(&mut rng, 5, 5);
        let a2 = complex_gaussian_matrix(&mut rng, 5, 5);
        let fam = |t: f64| &(&a0 + &a1.scale(cr(t))) + &a2.scale(cr(t * t * t));
        let r1 = schur_trace_residual(fam, 0.3, 1e-2, 2).unwrap().norm();
        let r2 = schur_trace_residual(fam, 0.3, 5e-3, 2).unwrap().norm();
        assert!(r1 < 1e-3);
        let ratio = r1 / r2;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn index_examples() {
        let s = jordan_system(3, cr(0.0));
        let r = effective_index(&s, &invert_system(&s).unwrap()).unwrap();
        assert_eq!((r.ker_p, r.coker_p, r.index), (1, 1, 0));
        assert!(r.consistent());

        let s = jordan_system(3, cr(0.4));
        let r = effective_index(&s, &invert_system(&s).unwrap()).unwrap();
        assert_eq!((r.ker_p, r.coker_p, r.index), (0, 0, 0));

        // Full-rank 2x3: kernel spanned by (2, -1, 0)/sqrt(5), no cokernel.
        let p = CMatrix::from_real_rows(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 1.0]]);
        let rp = CMatrix::from_real_rows(&[&[2.0 / 5f64.sqrt(), -1.0 / 5f64.sqrt(), 0.0]]);
        let s = assemble(p, CMatrix::zeros(2, 0), rp, None).unwrap();
        let r = effective_index(&s, &invert_system(&s).unwrap()).unwrap();
        assert_eq!((r.ker_p, r.coker_p, r.index), (1, 0, 1));
        assert!(r.consistent());
        assert_eq!(r.index, s.k_plus() as i64 - s.k_minus() as i64);
    }

    #[test]
    fn transfer_to_same_borders_is_identity() {
        let mut rng = seeded(8);
        let p = complex_gaussian_matrix(&mut rng, 6, 6);
        let rm = complex_gaussian_matrix(&mut rng, 6, 2);
        let rp = complex_gaussian_matrix(&mut rng, 2, 6);
        let s = assemble(p, rm.clone(), rp.clone(), None).unwrap();
        let g = invert_system(&s).unwrap();
        let t = transfer(&s, &g, &rm, &rp).unwrap();
        assert!((&t.matrix() - &g.matrix()).max_abs() < 1e-10);
    }

    #[test]
    fn transfer_to_empty_borders_gives_inverse() {
        let mut rng = seeded(9);
        let p = &complex_gaussian_matrix(&mut rng, 5, 5) + &CMatrix::identity(5).scale(cr(3.0));
        let s = assemble(p.clone(), complex_gaussian_matrix(&mut rng, 5, 1), complex_gaussian_matrix(&mut rng, 1, 5), None)
            .unwrap();
        let g = invert_system(&s).unwrap();
        let t = transfer(&s, &g, &CMatrix::zeros(5, 0), &CMatrix::zeros(0, 5)).unwrap();
        let direct = solve_linear(&p, &CMatrix::identity(5)).unwrap().x;
        assert!((&t.e - &direct).max_abs() < 1e-10);
        assert_eq!(t.eminusplus.shape(), (0, 0));
    }

    #[test]
    fn iterate_matches_direct() {
        let mut rng = seeded(12);
        let p = complex_gaussian_matrix(&mut rng, 6, 6);
        let rm = complex_gaussian_matrix(&mut rng, 6, 3);
        let rp = complex_gaussian_matrix(&mut rng, 3, 6);
        let s = assemble(p.clone(), rm.clone(), rp.clone(), None).unwrap();
        let g = invert_system(&s).unwrap();
        let nm = complex_gaussian_matrix(&mut rng, 3, 2);
        let np = complex_gaussian_matrix(&mut rng, 2, 3);
        let it = iterate(&s, &g, &nm, &np).unwrap();
        let direct = invert_system(&assemble(p, rm.matmul(&nm), np.matmul(&rp), None).unwrap()).unwrap();
        assert!((&it.matrix() - &direct.matrix()).max_abs() < 1e-9);
    }

    #[test]
    fn iterate_scalar_and_singular() {
        let one = CMatrix::identity(1);
        let p = CMatrix::from_real_rows(&[&[1.0, 2.0], &[0.5, 3.0]]);
        let rm = CMatrix::from_real_rows(&[&[1.0], &[0.0]]);
        let rp = CMatrix::from_real_rows(&[&[0.0, 1.0]]);
        let s = assemble(p.clone(), rm.clone(), rp.clone(), None).unwrap();
        let g = invert_system(&s).unwrap();
        let it = iterate(&s, &g, &one, &one).unwrap();
        let direct = invert_system(&s).unwrap();
        assert!((&it.matrix() - &direct.matrix()).max_abs() < 1e-12);

        let s = assemble(CMatrix::zeros(1, 1), one.clone(), one.clone(), None).unwrap();
        let g = invert_system(&s).unwrap();
        let z = CMatrix::zeros(1, 1);
        assert!(matches!(iterate(&s, &g, &z, &z), Err(Error::InnerSingular { .. })));
    }

    #[test]
    fn feshbach_examples() {
        let h = CMatrix::from_diag(&[cr(1.0), cr(3.0)]);
        let split = Split::new(vec![0], 2).unwrap();
        let r = feshbach_effective(&h, &split, cr(2.0)).unwrap();
        assert!((r.g_v[(0, 0)] - cr(1.0)).norm() < 1e-15);
        assert!(r.agreement < 1e-12);

        let d = 0.1;
        let h = CMatrix::from_real_rows(&[&[1.0, d], &[d, 3.0]]);
        let z = 1.01;
        let r = feshbach_effective(&h, &split, cr(z)).unwrap();
        let expect = z - 1.0 - d * d / (z - 3.0);
        assert!((r.g_v[(0, 0)] - cr(expect)).norm() < 1e-14);
        assert!(r.agreement < 1e-10);

        assert!(matches!(feshbach_effective(&h, &split, cr(3.0)), Err(Error::ComplementSingular { .. })));
        assert!(Split::new(vec![0, 1], 2).is_err());
        assert!(Split::new(vec![], 2).is_err());
    }

    #[test]
    fn circulant_shift_on_z4() {
        let k = [cr(0.0), cr(1.0), cr(0.0), cr(0.0)];
        let r = circulant_effective(&k).unwrap();
        let expect = [cr(1.0), c(0.0, -1.0), cr(-1.0), c(0.0, 1.0)];
        for (i, e) in expect.iter().enumerate() {
            assert!((r.inverse.eminusplus[(i, i)] - e).norm() < 1e-12);
        }
        let off = &r.inverse.eminusplus - &CMatrix::from_diag(&expect);
        assert!(off.max_abs() < 1e-12);
        assert!(r.inverse.e.max_abs() < 1e-12);
    }

    #[test]
    fn circulant_identity_kernel() {
        let r = circulant_effective(&[cr(1.0), cr(0.0), cr(0.0)]).unwrap();
        assert!((&r.inverse.eminusplus - &CMatrix::identity(3)).max_abs() < 1e-12);
    }
}
