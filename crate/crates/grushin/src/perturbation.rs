//! Effective Hamiltonians of perturbed Jordan blocks, projected problems
//! and their Neumann series, Grammian regularization and the leading
//! eigenvalue asymptotics of `J_n + J_n + J_k` under perturbation.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grushin_core::{assemble, invert_system, jordan_block, jordan_borders, GrushinInverse};
use crate::linops::{c, cr, eigenvalues, svd, CMatrix, C64};
use crate::rng::{complex_gaussian_matrix, seeded};

/// Largest `|lambda|` accepted by the series.
pub const SERIES_THETA: f64 = 0.9;
/// Largest `eps |E(lambda) Q|` accepted by the series.
pub const SERIES_CONTRACTION: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub enum QGenerator {
    /// Independent standard normal real and imaginary parts.
    Gaussian { seed: u64 },
    /// `e- (x) e+`: a single one in the bottom-left corner.
    RankOne,
    Given(CMatrix),
}

impl QGenerator {
    pub fn build(&self, n: usize) -> Result<CMatrix> {
        match self {
            QGenerator::Gaussian { seed } => Ok(complex_gaussian_matrix(&mut seeded(*seed), n, n)),
            QGenerator::RankOne => {
                let mut q = CMatrix::zeros(n, n);
                q[(n - 1, 0)] = cr(1.0);
                Ok(q)
            }
            QGenerator::Given(q) => {
                if q.shape() != (n, n) {
                    return Err(Error::DimensionMismatch { expected: (n, n), got: q.shape() });
                }
                Ok(q.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JordanSpec {
    pub n: usize,
    pub lambda: C64,
    pub epsilon: f64,
    pub q: CMatrix,
}

impl JordanSpec {
    pub fn new(n: usize, lambda: C64, epsilon: f64, q: &QGenerator) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("Jordan block size must be at least 1"));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidArgument("epsilon must be nonnegative"));
        }
        Ok(JordanSpec { n, lambda, epsilon, q: q.build(n)? })
    }

    fn perturbed(&self) -> CMatrix {
        &jordan_block(self.n).shift(self.lambda) + &self.q.scale(cr(self.epsilon))
    }
}

/// `e+(lambda) = (1, lambda, ..., lambda^(n-1))` and its reversal `e-(lambda)`.
pub fn jordan_vectors(n: usize, lambda: C64) -> (Vec<C64>, Vec<C64>) {
    let mut ep = Vec::with_capacity(n);
    let mut z = cr(1.0);
    for _ in 0..n {
        ep.push(z);
        z *= lambda;
    }
    let mut em = ep.clone();
    em.reverse();
    (ep, em)
}

/// `E-+` of `J + eps Q - lambda` by direct inversion of the bordered system.
pub fn jordan_effective_exact(spec: &JordanSpec) -> Result<C64> {
    let (rm, rp) = jordan_borders(spec.n);
    let g = invert_system(&assemble(spec.perturbed(), rm, rp, None)?)?;
    Ok(g.eminusplus[(0, 0)])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesReport {
    pub value: C64,
    /// `eps |E(lambda) Q|`.
    pub contraction: f64,
    /// `E-(lambda) Q E+(lambda)`, the pairing that drives the first-order shift.
    pub first_order_pairing: C64,
}

/// Partial sum through order `order` of
/// `E-+(lambda) + sum_k (-eps)^k E- Q (E Q)^(k-1) E+`.
pub fn jordan_effective_series(spec: &JordanSpec, order: usize) -> Result<SeriesReport> {
    let g0 = invert_system(&crate::grushin_core::jordan_system(spec.n, spec.lambda))?;
    let eq = g0.e.matmul(&spec.q);
    let contraction = spec.epsilon * eq.norm2()?;
    if spec.lambda.norm() > SERIES_THETA || contraction > SERIES_CONTRACTION {
        return Err(Error::OutsideConvergenceRegime { lambda_abs: spec.lambda.norm(), contraction });
    }
    let em = g0.eminus.row_vec(0);
    let pair = |w: &[C64]| -> C64 { em.iter().zip(spec.q.apply(w)).map(|(a, b)| a * b).sum() };
    let mut w = g0.eplus.col_vec(0);
    let first_order_pairing = pair(&w);
    let mut value = g0.eminusplus[(0, 0)];
    let mut coeff = cr(1.0);
    for k in 1..=order {
        coeff *= -spec.epsilon;
        if k > 1 {
            w = eq.apply(&w);
        }
        value += coeff * pair(&w);
    }
    Ok(SeriesReport { value, contraction, first_order_pairing })
}

#[derive(Clone, Debug)]
pub struct CloudReport {
    pub eigenvalues: Vec<C64>,
    /// `(eps |Q|_2)^(1/n)`.
    pub radius: f64,
    /// Share of eigenvalues with modulus in `[0.5 r, 1.5 r]`.
    pub annulus_fraction: f64,
    /// `<Q e+, e->` at `lambda = 0`, i.e. the bottom-left entry of `Q`.
    pub corner_pairing: C64,
}

/// Eigenvalues of `J + eps Q`.
pub fn jordan_cloud(n: usize, epsilon: f64, q: &QGenerator) -> Result<CloudReport> {
    if n < 2 {
        return Err(Error::InvalidArgument("cloud needs n >= 2"));
    }
    let qm = q.build(n)?;
    let a = &jordan_block(n) + &qm.scale(cr(epsilon));
    let eigenvalues = eigenvalues(&a)?;
    let radius = (epsilon * qm.norm2()?).powf(1.0 / n as f64);
    let inside = eigenvalues
        .iter()
        .filter(|z| z.norm() >= 0.5 * radius && z.norm() <= 1.5 * radius)
        .count();
    Ok(CloudReport {
        annulus_fraction: inside as f64 / n as f64,
        radius,
        corner_pairing: qm[(n - 1, 0)],
        eigenvalues,
    })
}

fn orthonormality_deviation(basis: &CMatrix) -> f64 {
    (&basis.adjoint().matmul(basis) - &CMatrix::identity(basis.cols())).max_abs()
}

/// Closed-form inverse `[[1 - pi, R-], [R+ (I + T (1 - pi)), R+ T R- - 1]]`
/// of the problem for `I - pi T` with `R- = basis`, `R+ = basis*` and
/// `pi = R- R+`.
pub fn projected_inverse_blocks(t: &CMatrix, basis: &CMatrix) -> Result<GrushinInverse> {
    let n = t.rows();
    if !t.is_square() || basis.rows() != n {
        return Err(Error::DimensionMismatch { expected: (n, basis.cols()), got: basis.shape() });
    }
    let dev = orthonormality_deviation(basis);
    if dev > 1e-12 {
        return Err(Error::BasisNotOrthonormal { deviation: dev });
    }
    let rm = basis.clone();
    let rp = basis.adjoint();
    let pi = rm.matmul(&rp);
    let id = CMatrix::identity(n);
    let comp = &id - &pi;
    let out = GrushinInverse {
        e: comp.clone(),
        eplus: rm.clone(),
        eminus: rp.matmul(&(&id + &t.matmul(&comp))),
        eminusplus: &rp.matmul(t).matmul(&rm) - &CMatrix::identity(basis.cols()),
        condition: 0.0,
    };
    let system = assemble(&id - &pi.matmul(t), rm, rp, None)?;
    let condition = system.matrix().norm_one() * out.matrix().norm_one();
    Ok(GrushinInverse { condition, ..out })
}

#[derive(Clone, Debug)]
pub struct NeumannReport {
    pub value: CMatrix,
    /// `|(1 - pi) T|_2`.
    pub delta: f64,
    /// `delta^(K+1) |T|_2 / (1 - delta)`.
    pub tail_bound: f64,
}

/// Partial sum through `k = order` of
/// `E-+ = R+ T R- - 1 + sum_k R+ T ((1 - pi) T)^k R-` for `I - T`.
pub fn neumann_effective(t: &CMatrix, basis: &CMatrix, order: usize) -> Result<NeumannReport> {
    let blocks = projected_inverse_blocks(t, basis)?;
    let rp = basis.adjoint();
    let comp_t = &t.clone() - &basis.matmul(&rp).matmul(t);
    let delta = comp_t.norm2()?;
    if delta >= 1.0 {
        return Err(Error::ContractionViolated { delta });
    }
    let rpt = rp.matmul(t);
    let mut value = blocks.eminusplus;
    let mut w = basis.clone();
    for _ in 0..order {
        w = comp_t.matmul(&w);
        value = &value + &rpt.matmul(&w);
    }
    let tail_bound = delta.powi(order as i32 + 1) * t.norm2()? / (1.0 - delta);
    Ok(NeumannReport { value, delta, tail_bound })
}

#[derive(Clone, Debug)]
pub struct GrammianReport {
    /// Orthonormal columns `f_j = V u_j / sqrt(lambda_j)`.
    pub family: CMatrix,
    pub projector: CMatrix,
    /// Grammian eigenvalues in decreasing order, kept or not.
    pub eigenvalues: Vec<f64>,
    pub kept: usize,
    /// `C^2 max(lambda) / eps_cut^2`.
    pub condition_bound: f64,
}

impl GrammianReport {
    /// `|(1 - pi) T| <= delta + eps_cut |T|` for data with residual `delta`.
    pub fn projection_bound(delta: f64, eps_cut: f64, t_norm: f64) -> f64 {
        delta + eps_cut * t_norm
    }
}

/// Keeps the eigendirections of the Grammian `G_ij = <e_j, e_i>` with
/// eigenvalue above `(eps_cut / c)^2`.
pub fn grammian_reduce(vectors: &[Vec<C64>], eps_cut: f64, c_const: f64) -> Result<GrammianReport> {
    let m = vectors.len();
    let dim = vectors.first().map_or(0, Vec::len);
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::InvalidArgument("Grammian vectors must share a dimension"));
    }
    if !(eps_cut > 0.0) || !(c_const > 0.0) {
        return Err(Error::InvalidArgument("eps_cut and C must be positive"));
    }
    let v = CMatrix::from_fn(dim, m, |i, j| vectors[j][i]);
    if m == 0 || dim == 0 {
        return Ok(GrammianReport {
            family: CMatrix::zeros(dim, 0),
            projector: CMatrix::zeros(dim, dim),
            eigenvalues: vec![],
            kept: 0,
            condition_bound: 0.0,
        });
    }
    let gram = v.adjoint().matmul(&v);
    // The Grammian is Hermitian positive semidefinite, so its singular
    // vectors are eigenvectors.
    let s = svd(&gram)?;
    let cut = (eps_cut / c_const).powi(2);
    let kept = s.sigma.iter().filter(|&&l| l > cut).count();
    let family = CMatrix::from_fn(dim, kept, |i, j| {
        (0..m).map(|r| v[(i, r)] * s.u[(r, j)]).sum::<C64>() / s.sigma[j].sqrt()
    });
    let projector = family.matmul(&family.adjoint());
    let condition_bound = c_const * c_const * s.sigma_max() / (eps_cut * eps_cut);
    Ok(GrammianReport { family, projector, eigenvalues: s.sigma, kept, condition_bound })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockJordanSpec {
    pub n: usize,
    pub k: usize,
    pub q: CMatrix,
    pub epsilon: f64,
}

impl BlockJordanSpec {
    pub fn new(n: usize, k: usize, q: CMatrix, epsilon: f64) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::InvalidArgument("block sizes need 0 < k < n"));
        }
        let d = 2 * n + k;
        if q.shape() != (d, d) {
            return Err(Error::DimensionMismatch { expected: (d, d), got: q.shape() });
        }
        Ok(BlockJordanSpec { n, k, q, epsilon })
    }

    /// `J_n + J_n + J_k` as a block diagonal matrix.
    pub fn unperturbed(&self) -> CMatrix {
        let d = 2 * self.n + self.k;
        let mut a = CMatrix::zeros(d, d);
        for (off, size) in [(0, self.n), (self.n, self.n), (2 * self.n, self.k)] {
            a.set_block(off, off, &jordan_block(size));
        }
        a
    }

    pub fn perturbed(&self, epsilon: f64) -> CMatrix {
        &self.unperturbed() + &self.q.scale(cr(epsilon))
    }

    /// `(Q^{ij}_{n1})` for the two large blocks: bottom-left entries of the
    /// four leading blocks of `Q`.
    pub fn leading_matrix(&self) -> [[C64; 2]; 2] {
        let n = self.n;
        let e = |bi: usize, bj: usize| self.q[(bi * n + n - 1, bj * n)];
        [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
    }

    /// Eigenvalues of the leading matrix.
    pub fn leading_eigenvalues(&self) -> Result<(C64, C64)> {
        let [[a, b], [cc, d]] = self.leading_matrix();
        let half = (a - d) * 0.5;
        let disc = (half * half + b * cc).sqrt();
        let m = (a + d) * 0.5;
        let (q1, q2) = (m + disc, m - disc);
        let scale = a.norm() + b.norm() + cc.norm() + d.norm();
        let gap = (q1 - q2).norm();
        if gap <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateLeadingMatrix { gap });
        }
        Ok((q1, q2))
    }
}

/// `eps^(1/n) |q_j|^(1/n) exp(i (2 pi l + arg q_j) / n)` for `l = 1..n`,
/// `j = 1, 2`.
pub fn lidskii_predict(spec: &BlockJordanSpec) -> Result<Vec<C64>> {
    let (q1, q2) = spec.leading_eigenvalues()?;
    let n = spec.n as f64;
    let mut out = Vec::with_capacity(2 * spec.n);
    for q in [q1, q2] {
        let r = (spec.epsilon * q.norm()).powf(1.0 / n);
        for l in 1..=spec.n {
            let th = (2.0 * core::f64::consts::PI * l as f64 + q.arg()) / n;
            out.push(c(r * th.cos(), r * th.sin()));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LidskiiRow {
    pub epsilon: f64,
    /// Largest `||computed| - |predicted|| / |predicted|` over matched pairs.
    pub max_modulus_error: f64,
    /// Largest `|computed - predicted| / |predicted|` over matched pairs.
    pub max_location_error: f64,
    /// Mean modulus of the `2n` largest computed eigenvalues.
    pub mean_modulus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LidskiiReport {
    pub rows: Vec<LidskiiRow>,
    /// Least-squares slope of `log mean_modulus` against `log eps`.
    pub fitted_exponent: f64,
}

/// Greedy matching in order of decreasing predicted modulus: each
/// prediction takes the nearest unclaimed eigenvalue.
pub fn greedy_match(predicted: &[C64], computed: &[C64]) -> Vec<(C64, C64)> {
    let mut pred = predicted.to_vec();
    pred.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(core::cmp::Ordering::Equal));
    let mut comp = computed.to_vec();
    comp.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(core::cmp::Ordering::Equal));
    let mut used = vec![false; comp.len()];
    let mut out = Vec::with_capacity(pred.len());
    for p in pred {
        let best = (0..comp.len())
            .filter(|&i| !used[i])
            .min_by(|&i, &j| (comp[i] - p).norm().partial_cmp(&(comp[j] - p).norm()).unwrap_or(core::cmp::Ordering::Equal));
        if let Some(i) = best {
            used[i] = true;
            out.push((p, comp[i]));
        }
    }
    out
}

pub fn lidskii_compare(spec: &BlockJordanSpec, epsilons: &[f64]) -> Result<LidskiiReport> {
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let local = BlockJordanSpec { epsilon: eps, ..spec.clone() };
        let pred = lidskii_predict(&local)?;
        let mut eig = eigenvalues(&local.perturbed(eps))?;
        eig.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(core::cmp::Ordering::Equal));
        eig.truncate(2 * spec.n);
        let pairs = greedy_match(&pred, &eig);
        let mut max_mod = 0.0f64;
        let mut max_loc = 0.0f64;
        for (p, z) in &pairs {
            let pn = p.norm();
            if pn > 0.0 {
                max_mod = max_mod.max((z.norm() - pn).abs() / pn);
                max_loc = max_loc.max((z - p).norm() / pn);
            } else {
                max_mod = max_mod.max(z.norm());
                max_loc = max_loc.max(z.norm());
            }
        }
        let mean_modulus = eig.iter().map(|z| z.norm()).sum::<f64>() / eig.len().max(1) as f64;
        rows.push(LidskiiRow { epsilon: eps, max_modulus_error: max_mod, max_location_error: max_loc, mean_modulus });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.epsilon > 0.0 && r.mean_modulus > 0.0)
        .map(|r| (r.epsilon.ln(), r.mean_modulus.ln()))
        .collect();
    let fitted_exponent = least_squares_slope(&pts);
    Ok(LidskiiReport { rows, fitted_exponent })
}

/// Slope of the least-squares line through `pts`; NaN with fewer than two points.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
