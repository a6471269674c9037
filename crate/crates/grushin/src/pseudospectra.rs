//! Bordered problems built from the small singular subspaces of `A - lambda`
//! and the resolvent estimates they give.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grushin_core::{assemble, invert_system, BorderedSystem, GrushinInverse};
use crate::linops::{c, rank_tolerance, svd, CMatrix, C64};
use crate::rng::{complex_gaussian, seeded};

/// Singular values closer than this to `h` make the captured dimension
/// undecidable.
pub const THRESHOLD_GAP: f64 = 1e-8;

/// `pi- = 1(P P* <= h^2)` and `pi+ = 1(P* P <= h^2)` for `P = A - lambda`,
/// with orthonormal bases `rminus` (columns) and `rplus` (rows) of their ranges.
#[derive(Clone, Debug)]
pub struct ProjectorPair {
    pub pi_minus: CMatrix,
    pub pi_plus: CMatrix,
    pub rminus: CMatrix,
    pub rplus: CMatrix,
    pub h: f64,
    pub n_captured: usize,
    /// Singular values of `P`, decreasing.
    pub sigma: Vec<f64>,
}

pub fn threshold_projectors(a: &CMatrix, lambda: C64, h: f64) -> Result<ProjectorPair> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: (a.rows(), a.rows()), got: a.shape() });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("threshold h must be positive"));
    }
    let n = a.rows();
    let p = a.shift(lambda);
    let s = svd(&p)?;
    if let Some(&sig) = s.sigma.iter().find(|&&sig| (sig - h).abs() < THRESHOLD_GAP) {
        return Err(Error::ThresholdOnSingularValue { sigma: sig, h });
    }
    let first = s.sigma.iter().position(|&sig| sig <= h).unwrap_or(n);
    let k = n - first;
    let rminus = s.u.sub_matrix(0, first, n, k);
    let rplus = s.v.sub_matrix(0, first, n, k).adjoint();
    Ok(ProjectorPair {
        pi_minus: rminus.matmul(&rminus.adjoint()),
        pi_plus: rplus.adjoint().matmul(&rplus),
        rminus,
        rplus,
        h,
        n_captured: k,
        sigma: s.sigma,
    })
}

/// Frobenius residuals of the structural identities
/// `pi- P (1 - pi+)`, `pi+ P* (1 - pi-)`, `R-* R- - 1`, `R- R-* - pi-`,
/// `R+ R+* - 1`, `R+* R+ - pi+`, `pi-^2 - pi-`, `pi+^2 - pi+`.
pub fn projector_identities(a: &CMatrix, lambda: C64, pair: &ProjectorPair) -> [f64; 8] {
    let n = a.rows();
    let p = a.shift(lambda);
    let id = CMatrix::identity(n);
    let k = pair.n_captured;
    let idk = CMatrix::identity(k);
    let cm = &id - &pair.pi_minus;
    let cp = &id - &pair.pi_plus;
    [
        pair.pi_minus.matmul(&p).matmul(&cp).norm_fro(),
        pair.pi_plus.matmul(&p.adjoint()).matmul(&cm).norm_fro(),
        (&pair.rminus.adjoint().matmul(&pair.rminus) - &idk).norm_fro(),
        (&pair.rminus.matmul(&pair.rminus.adjoint()) - &pair.pi_minus).norm_fro(),
        (&pair.rplus.matmul(&pair.rplus.adjoint()) - &idk).norm_fro(),
        (&pair.rplus.adjoint().matmul(&pair.rplus) - &pair.pi_plus).norm_fro(),
        (&pair.pi_minus.matmul(&pair.pi_minus) - &pair.pi_minus).norm_fro(),
        (&pair.pi_plus.matmul(&pair.pi_plus) - &pair.pi_plus).norm_fro(),
    ]
}

/// Measured constants of the hypotheses of the typical estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypotheses {
    /// `max(|P pi+|, |P* pi-|) / h`, at most 1.
    pub upper_ratio: f64,
    /// `max(|pi- P (1 - pi+)|, |pi+ P* (1 - pi-)|) / h`, zero up to rounding.
    pub cross_ratio: f64,
    /// Smallest singular value of `P` off the captured subspace, over `h`; at least 1.
    pub lower_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockNorms {
    pub e: f64,
    pub eplus: f64,
    pub eminus: f64,
    pub eminusplus: f64,
}

#[derive(Clone, Debug)]
pub struct ProjectorGrushin {
    pub pair: ProjectorPair,
    pub system: BorderedSystem,
    pub inverse: GrushinInverse,
    pub norms: BlockNorms,
    pub hypotheses: Hypotheses,
}

pub fn projector_grushin(a: &CMatrix, lambda: C64, h: f64) -> Result<ProjectorGrushin> {
    let pair = threshold_projectors(a, lambda, h)?;
    let p = a.shift(lambda);
    let n = a.rows();
    let id = CMatrix::identity(n);
    let upper = p.matmul(&pair.pi_plus).norm2()?.max(p.adjoint().matmul(&pair.pi_minus).norm2()?);
    let cross = pair
        .pi_minus
        .matmul(&p)
        .matmul(&(&id - &pair.pi_plus))
        .norm2()?
        .max(pair.pi_plus.matmul(&p.adjoint()).matmul(&(&id - &pair.pi_minus)).norm2()?);
    let lower = pair.sigma[..n - pair.n_captured].last().copied().unwrap_or(f64::INFINITY);
    let hypotheses = Hypotheses { upper_ratio: upper / h, cross_ratio: cross / h, lower_ratio: lower / h };
    let slack = rank_tolerance(n, n, pair.sigma.first().copied().unwrap_or(0.0));
    if upper > h + slack || lower < h - slack || cross > 1e3 * slack.max(f64::MIN_POSITIVE) {
        return Err(Error::IllPosed { condition: f64::INFINITY });
    }
    let system = assemble(p, pair.rminus.clone(), pair.rplus.clone(), None)?;
    let inverse = invert_system(&system)?;
    let norms = BlockNorms {
        e: inverse.e.norm2()?,
        eplus: inverse.eplus.norm2()?,
        eminus: inverse.eminus.norm2()?,
        eminusplus: inverse.eminusplus.norm2()?,
    };
    Ok(ProjectorGrushin { pair, system, inverse, norms, hypotheses })
}

fn random_vector(rng: &mut crate::rng::Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(rng)).collect()
}

fn vnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest observed `(h |u| + |u-|) / (|v| + h |v+|)` over `trials` random
/// right-hand sides, where `(u, u-)` solves the projector problem.
pub fn estimate_check(a: &CMatrix, lambda: C64, h: f64, trials: usize, seed: u64) -> Result<f64> {
    let pg = projector_grushin(a, lambda, h)?;
    let g = &pg.inverse;
    let n = a.rows();
    let k = pg.pair.n_captured;
    let mut rng = seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let v = random_vector(&mut rng, n);
        let vp = random_vector(&mut rng, k);
        let u: Vec<C64> = g.e.apply(&v).iter().zip(g.eplus.apply(&vp)).map(|(x, y)| x + y).collect();
        let um: Vec<C64> = g.eminus.apply(&v).iter().zip(g.eminusplus.apply(&vp)).map(|(x, y)| x + y).collect();
        let den = vnorm(&v) + h * vnorm(&vp);
        if den > 0.0 {
            worst = worst.max((h * vnorm(&u) + vnorm(&um)) / den);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudospectrumCell {
    pub lambda: C64,
    pub h: f64,
    pub n_captured: usize,
    /// `|E-+^-1|`, zero when nothing is captured.
    pub norm_eff_inv: f64,
    pub sigma_min: f64,
    /// Two-sided constant `C` in `1/sigma_min ~ |E-+^-1| + 1/h`:
    /// `max(a / b, b / a)` with `a = 1/sigma_min`, `b = |E-+^-1| + 1/h`.
    pub c_emp: f64,
}

impl PseudospectrumCell {
    /// `|1/sigma_min - |E-+^-1|| <= c_emp / h`.
    pub fn additive_bound_holds(&self) -> bool {
        (1.0 / self.sigma_min - self.norm_eff_inv).abs() <= self.c_emp / self.h * (1.0 + 1e-12)
    }
}

pub fn resolvent_bound(a: &CMatrix, lambda: C64, h: f64) -> Result<PseudospectrumCell> {
    let p = a.shift(lambda);
    let s = svd(&p)?;
    let n = a.rows();
    let sigma_min = s.sigma_min();
    let tol = rank_tolerance(n, n, s.sigma_max());
    if sigma_min <= tol {
        return Err(Error::OnSpectrum { sigma_min });
    }
    let pg = projector_grushin(a, lambda, h)?;
    let norm_eff_inv = if pg.pair.n_captured == 0 {
        0.0
    } else {
        1.0 / svd(&pg.inverse.eminusplus)?.sigma_min()
    };
    let ra = 1.0 / sigma_min;
    let rb = norm_eff_inv + 1.0 / h;
    Ok(PseudospectrumCell {
        lambda,
        h,
        n_captured: pg.pair.n_captured,
        norm_eff_inv,
        sigma_min,
        c_emp: (ra / rb).max(rb / ra),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HRule {
    Fixed(f64),
    /// `h = c sigma_min(A - lambda)`; a grid heuristic.
    SigmaScaled(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub lambda: C64,
    pub outcome: core::result::Result<PseudospectrumCell, Error>,
}

/// Cells in row-major order: row `i` has imaginary part
/// `im_min + i (im_max - im_min) / (ny - 1)`, column `j` real part likewise.
pub fn pseudospectrum_grid(a: &CMatrix, rect: Rect, nx: usize, ny: usize, rule: HRule) -> Result<Vec<GridCell>> {
    if !(rect.re_max > rect.re_min) || !(rect.im_max > rect.im_min) || nx < 2 || ny < 2 {
        return Err(Error::DimensionMismatch { expected: (2, 2), got: (nx, ny) });
    }
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..ny {
        let im = rect.im_min + (rect.im_max - rect.im_min) * i as f64 / (ny - 1) as f64;
        for j in 0..nx {
            let re = rect.re_min + (rect.re_max - rect.re_min) * j as f64 / (nx - 1) as f64;
            let lambda = c(re, im);
            let outcome = match rule {
                HRule::Fixed(h) => resolvent_bound(a, lambda, h),
                HRule::SigmaScaled(factor) => svd(&a.shift(lambda))
                    .and_then(|s| resolvent_bound(a, lambda, factor * s.sigma_min())),
            };
            out.push(GridCell { lambda, outcome });
        }
    }
    Ok(out)
}
