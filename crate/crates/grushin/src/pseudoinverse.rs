//! Moore-Penrose inverse as the `E` block of the bordered system whose
//! borders are the cokernel inclusion and the kernel projection.

use crate::error::{Error, Result};
use crate::grushin_core::{assemble, invert_system, BorderedSystem, GrushinInverse};
use crate::linops::{numerical_rank, rank_tolerance, svd, CMatrix, SvdResult};

/// `rminus` has orthonormal columns spanning `range(P)^perp`; `rplus` has
/// orthonormal rows spanning `ker P`.
#[derive(Clone, Debug)]
pub struct CanonicalBorders {
    pub rminus: CMatrix,
    pub rplus: CMatrix,
    pub rank: usize,
}

fn rank_of(p: &CMatrix, s: &SvdResult, tol: Option<f64>) -> Result<usize> {
    let tol = tol.unwrap_or_else(|| rank_tolerance(p.rows(), p.cols(), s.sigma_max()));
    numerical_rank(&s.sigma, tol)
}

/// Borders read off the singular vectors of `P`; `tol` defaults to the
/// rank tolerance.
pub fn canonical_borders(p: &CMatrix, tol: Option<f64>) -> Result<CanonicalBorders> {
    let (n2, n1) = p.shape();
    let s = svd(p)?;
    let r = rank_of(p, &s, tol)?;
    let rminus = s.u.sub_matrix(0, r, n2, n2 - r);
    let rplus = s.v.sub_matrix(0, r, n1, n1 - r).adjoint();
    Ok(CanonicalBorders { rminus, rplus, rank: r })
}

pub fn canonical_system(p: &CMatrix, tol: Option<f64>) -> Result<(BorderedSystem, GrushinInverse)> {
    let b = canonical_borders(p, tol)?;
    let s = assemble(p.clone(), b.rminus, b.rplus, None)?;
    let g = invert_system(&s)?;
    Ok((s, g))
}

pub fn pseudo_inverse(p: &CMatrix, tol: Option<f64>) -> Result<CMatrix> {
    Ok(canonical_system(p, tol)?.1.e)
}

/// `V Sigma^+ U*`, inverting the singular values above the rank tolerance.
pub fn svd_pseudo_inverse(p: &CMatrix, tol: Option<f64>) -> Result<CMatrix> {
    let (n2, n1) = p.shape();
    let s = svd(p)?;
    let r = rank_of(p, &s, tol)?;
    Ok(CMatrix::from_fn(n1, n2, |i, j| {
        (0..r).map(|k| s.v[(i, k)] * s.u[(j, k)].conj() / s.sigma[k]).sum()
    }))
}

/// Frobenius norms of `P P+ P - P`, `P+ P P+ - P+`, `(P P+)* - P P+` and
/// `(P+ P)* - P+ P`.
pub fn mp_residuals(p: &CMatrix, pplus: &CMatrix) -> Result<[f64; 4]> {
    if pplus.shape() != (p.cols(), p.rows()) {
        return Err(Error::DimensionMismatch { expected: (p.cols(), p.rows()), got: pplus.shape() });
    }
    let ppp = p.matmul(pplus);
    let pp = pplus.matmul(p);
    Ok([
        (&ppp.matmul(p) - p).norm_fro(),
        (&pp.matmul(pplus) - pplus).norm_fro(),
        (&ppp.adjoint() - &ppp).norm_fro(),
        (&pp.adjoint() - &pp).norm_fro(),
    ])
}

/// `|EPE - E|`, `|E- P|`, `|(R- E-)* - R- E-|`, `|(E+ R+)* - E+ R+|`.
///
/// The first vanishes for every well-posed problem; the other three vanish
/// exactly when `E` satisfies the remaining Moore-Penrose equations.
pub fn side_conditions(s: &BorderedSystem, g: &GrushinInverse) -> [f64; 4] {
    let epe = g.e.matmul(&s.p).matmul(&g.e);
    let rme = s.rminus.matmul(&g.eminus);
    let epr = g.eplus.matmul(&s.rplus);
    [
        (&epe - &g.e).norm_fro(),
        g.eminus.matmul(&s.p).norm_fro(),
        (&rme.adjoint() - &rme).norm_fro(),
        (&epr.adjoint() - &epr).norm_fro(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::cr;
    use crate::rng::{complex_gaussian_matrix, seeded};

    #[test]
    fn borders_of_invertible_and_zero() {
        let b = canonical_borders(&CMatrix::from_diag(&[cr(2.0), cr(1.0)]), None).unwrap();
        assert_eq!((b.rminus.cols(), b.rplus.rows()), (0, 0));
        let b = canonical_borders(&CMatrix::zeros(2, 2), None).unwrap();
        assert_eq!((b.rminus.cols(), b.rplus.rows()), (2, 2));
    }

    #[test]
    fn borders_of_rank_one_diagonal() {
        let b = canonical_borders(&CMatrix::from_diag(&[cr(1.0), cr(0.0)]), None).unwrap();
        assert_eq!(b.rminus.shape(), (2, 1));
        assert!(b.rminus[(0, 0)].norm() < 1e-15 && (b.rminus[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(b.rplus[(0, 0)].norm() < 1e-15 && (b.rplus[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_examples() {
        let p = CMatrix::from_diag(&[cr(2.0), cr(0.0)]);
        let pp = pseudo_inverse(&p, None).unwrap();
        assert!((&pp - &CMatrix::from_diag(&[cr(0.5), cr(0.0)])).max_abs() < 1e-15);

        // Full row rank: P* (P P*)^-1 = [1; 2] / 5.
        let p = CMatrix::from_real_rows(&[&[1.0, 2.0]]);
        let pp = pseudo_inverse(&p, None).unwrap();
        assert!((&pp - &CMatrix::from_real_rows(&[&[0.2], &[0.4]])).max_abs() < 1e-15);
    }

    #[test]
    fn random_rank_three_matches_svd() {
        let mut rng = seeded(17);
        let p = complex_gaussian_matrix(&mut rng, 7, 3).matmul(&complex_gaussian_matrix(&mut rng, 3, 4));
        let a = pseudo_inverse(&p, None).unwrap();
        let b = svd_pseudo_inverse(&p, None).unwrap();
        assert!((&a - &b).max_abs() <= 1e-10);
        assert!(mp_residuals(&p, &b).unwrap().iter().all(|&r| r <= 1e-12 * p.norm_fro().max(1.0)));
    }

    #[test]
    fn identity_residuals_vanish() {
        assert_eq!(mp_residuals(&CMatrix::identity(3), &CMatrix::identity(3)).unwrap(), [0.0; 4]);
    }

    #[test]
    fn wrong_transpose_is_detected() {
        let mut rng = seeded(3);
        let p = complex_gaussian_matrix(&mut rng, 3, 3);
        let wrong = svd_pseudo_inverse(&p, None).unwrap().transpose();
        assert!(mp_residuals(&p, &wrong).unwrap().iter().any(|&r| r > 0.1));
        assert!(matches!(
            mp_residuals(&p, &CMatrix::zeros(2, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
