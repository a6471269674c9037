//! Seeded matrix families used by the experiments and the acceptance suite.

use std::f64::consts::PI;

use grushin::linops::{c, cr, svd};
use grushin::rng::{complex_gaussian, complex_gaussian_matrix, seeded, uniform, Rng};
use grushin::traces::TrigLoop;
use grushin::{CMatrix, Result};

/// Left singular vectors of a Gaussian matrix.
pub fn unitary(rng: &mut Rng, n: usize) -> Result<CMatrix> {
    Ok(svd(&complex_gaussian_matrix(rng, n, n))?.u)
}

/// Gaussian matrix scaled by `1/sqrt(n)`; its spectrum fills roughly the unit disc.
pub fn shifted(n: usize, seed: u64) -> CMatrix {
    complex_gaussian_matrix(&mut seeded(seed), n, n).scale(cr(1.0 / (n as f64).sqrt()))
}

/// `D + U` with `D` diagonal of modulus about `1/2` and `U` strictly upper
/// triangular with entries of size `1/sqrt(n)`.
pub fn nonnormal(n: usize, seed: u64) -> CMatrix {
    let mut rng = seeded(seed);
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |i, j| {
        let z = complex_gaussian(&mut rng);
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => z * 0.5,
            std::cmp::Ordering::Less => z * s,
            std::cmp::Ordering::Greater => cr(0.0),
        }
    })
}

/// `X diag(sigma) Y*` with orthonormal `X`, `Y` and `sigma` uniform in `[0.5, 2]`.
pub fn low_rank(rng: &mut Rng, rows: usize, cols: usize, rank: usize) -> Result<CMatrix> {
    let x = unitary(rng, rows)?;
    let y = unitary(rng, cols)?;
    let sigma: Vec<f64> = (0..rank).map(|_| 0.5 + 1.5 * uniform(rng)).collect();
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        (0..rank).map(|k| x[(i, k)] * y[(j, k)].conj() * sigma[k]).sum()
    }))
}

/// A certified trigonometric loop of `(n + k)`-square bordered matrices
/// and the winding number of `det P` along it.
///
/// `P(t) = X (D(t) + delta N(t)) Y` with unitary `X`, `Y`. The first `k`
/// diagonal entries of `D` are `e^{i w t}` with `w` in `{-1, 0, 1}`, the rest
/// constants of modulus at least one. The borders are the first `k` columns
/// of `X` and rows of `Y`, so each bordered `2 x 2` pair `[[d, 1], [1, 0]]`
/// has determinant `-1` along the whole radial disc.
pub fn trig_loop(n: usize, k: usize, seed: u64) -> Result<(TrigLoop, i64)> {
    let mut rng = seeded(seed);
    let x = unitary(&mut rng, n)?;
    let y = unitary(&mut rng, n)?;
    let delta = 0.02 / n as f64;
    let windings: Vec<i32> = (0..k).map(|_| (3.0 * uniform(&mut rng)).floor() as i32 - 1).collect();
    let mut diag = [vec![cr(0.0); n], vec![cr(0.0); n], vec![cr(0.0); n]];
    for (j, &w) in windings.iter().enumerate() {
        diag[(w + 1) as usize][j] = cr(1.0);
    }
    for j in k..n {
        let th = 2.0 * PI * uniform(&mut rng);
        diag[1][j] = c(th.cos(), th.sin()) * (1.0 + uniform(&mut rng));
    }
    let mut terms = Vec::new();
    for (slot, freq) in [(0usize, -1i32), (1, 0), (2, 1)] {
        let noise = complex_gaussian_matrix(&mut rng, n, n).scale(cr(delta));
        let inner = &CMatrix::from_diag(&diag[slot]) + &noise;
        let p = x.matmul(&inner).matmul(&y);
        let mut full = CMatrix::zeros(n + k, n + k);
        full.set_block(0, 0, &p);
        if freq == 0 {
            full.set_block(0, n, &x.sub_matrix(0, 0, n, k));
            full.set_block(n, 0, &y.sub_matrix(0, 0, k, n));
        }
        terms.push((freq, full));
    }
    let winding = windings.iter().map(|&w| i64::from(w)).sum();
    Ok((TrigLoop::new(n, k, terms)?, winding))
}
