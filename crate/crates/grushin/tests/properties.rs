//! Seeded invariants of the bordered-system core, checked over random
//! instances.

use proptest::prelude::*;

use grushin::bvp1d::{bvp_grushin, Discretization};
use grushin::grushin_core::{
    assemble, circulant_effective, effective_index, feshbach_effective, invert_system, recover_resolvent, schur_check,
    two_sided_residual, Split,
};
use grushin::linops::{c, cr, eigenvalues, inverse_with_condition, svd};
use grushin::pseudoinverse::{mp_residuals, pseudo_inverse};
use grushin::pseudospectra::{projector_identities, threshold_projectors};
use grushin::rng::{child_seed, complex_gaussian_matrix, seeded};
use grushin::traces::{count_direct, count_effective, Borders, HolomorphicFamily};
use grushin::{CMatrix, Contour, C64};

fn gaussian(seed: u64, rows: usize, cols: usize) -> CMatrix {
    complex_gaussian_matrix(&mut seeded(seed), rows, cols)
}

/// `X Y` with `X` of size `n x r`: rank exactly `r` almost surely.
fn rank_r(seed: u64, n: usize, r: usize) -> CMatrix {
    gaussian(seed, n, r).matmul(&gaussian(seed ^ 1, r, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schur_complement_inverts_leading_block(seed in any::<u64>(), n in 2usize..10, k in 1usize..4) {
        let k = k.min(n - 1);
        let a = &gaussian(seed, n, n) + &CMatrix::identity(n).scale(cr(3.0));
        let (b, _) = inverse_with_condition(&a).unwrap();
        prop_assert!(schur_check(&a, &b, k).unwrap() < 1e-10);
    }

    #[test]
    fn resolvent_recovered_from_effective_hamiltonian(seed in any::<u64>(), n in 1usize..12, k in 1usize..4) {
        let k = k.min(n);
        let p = gaussian(seed, n, n);
        let s = assemble(p, gaussian(seed ^ 2, n, k), gaussian(seed ^ 3, k, n), None).unwrap();
        let g = invert_system(&s).unwrap();
        prop_assert!(two_sided_residual(&s, &g) <= 1e-10 * g.condition);
        let r = recover_resolvent(&s, &g).unwrap();
        prop_assert!(r.residual < 1e-8 * g.condition);
    }

    #[test]
    fn kernel_dimensions_pass_to_effective_hamiltonian(seed in any::<u64>(), n in 2usize..10, k in 1usize..4) {
        let k = k.min(n);
        let r = n - k + (seed % (k as u64 + 1)) as usize;
        let p = rank_r(seed, n, r);
        let s = assemble(p, gaussian(seed ^ 2, n, k), gaussian(seed ^ 3, k, n), None).unwrap();
        let g = invert_system(&s).unwrap();
        let idx = effective_index(&s, &g).unwrap();
        prop_assert!(idx.consistent(), "{idx:?}");
        prop_assert_eq!(idx.ker_p, n - r);
        prop_assert_eq!(idx.index, 0);
    }

    #[test]
    fn moore_penrose_equations(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9, r in 0usize..9) {
        let r = r.min(rows.min(cols));
        let p = gaussian(seed, rows, r).matmul(&gaussian(seed ^ 5, r, cols));
        let pplus = pseudo_inverse(&p, None).unwrap();
        let scale = 1.0 + p.norm_fro() * pplus.norm_fro();
        for e in mp_residuals(&p, &pplus).unwrap() {
            prop_assert!(e < 1e-10 * scale * scale);
        }
    }

    #[test]
    fn feshbach_function_is_minus_effective_hamiltonian(seed in any::<u64>(), n in 2usize..9, im in 0.1f64..2.0) {
        let h = gaussian(seed, n, n);
        let h = &h + &h.adjoint();
        let split = Split::new(vec![0], n).unwrap();
        let r = feshbach_effective(&h, &split, c(0.3, im)).unwrap();
        prop_assert!(r.agreement < 1e-10 * (1.0 + r.g_v.norm_fro()));
    }

    #[test]
    fn projector_identities_hold(seed in any::<u64>(), n in 2usize..12, h in 0.05f64..1.0) {
        let a = gaussian(seed, n, n).scale(cr(1.0 / (n as f64).sqrt()));
        let lambda = c(0.1, -0.2);
        if let Ok(pair) = threshold_projectors(&a, lambda, h) {
            for e in projector_identities(&a, lambda, &pair) {
                prop_assert!(e < 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every `P` within `spread` of the centre keeps the adapted problem
    /// well posed.
    #[test]
    fn adapted_borders_cover_the_spread(seed in any::<u64>(), n in 2usize..10, spread in 0.01f64..1.5, t in 0.0f64..1.0) {
        let p = gaussian(seed, n, n).scale(cr(1.0 / (n as f64).sqrt()));
        let b = Borders::adapted(&p, spread).unwrap();
        let dir = gaussian(seed ^ 7, n, n);
        let dir = dir.scale(cr(t * spread / dir.norm2().unwrap()));
        let s = assemble(&p + &dir, b.rminus, b.rplus, None).unwrap();
        prop_assert!(invert_system(&s).is_ok());
    }

    #[test]
    fn circulant_effective_hamiltonian_is_the_fft(seed in any::<u64>(), n in 2usize..17) {
        let kernel: Vec<C64> = gaussian(seed, 1, n).data().to_vec();
        let r = circulant_effective(&kernel).unwrap();
        let mut spectrum = kernel.clone();
        rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);
        let scale = kernel.iter().map(|z| z.norm()).sum::<f64>().max(1.0);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { spectrum[i] } else { cr(0.0) };
                prop_assert!((r.inverse.eminusplus[(i, j)] - want).norm() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn neumann_to_dirichlet_map_is_symmetric(seed in any::<u64>(), m in 20usize..80, z_re in -5.0f64..-0.5, z_im in -1.0f64..1.0) {
        let amp = (seed % 1000) as f64 / 100.0;
        let d = Discretization::new(0.0, 1.0, m, |x| amp * (3.0 * x).sin()).unwrap();
        let r = bvp_grushin(&d, c(z_re, z_im)).unwrap();
        let scale = r.n2d.max_abs().max(1.0);
        prop_assert!(r.eminusplus_gap < 1e-9 * scale);
        prop_assert!((r.n2d[(0, 1)] - r.n2d[(1, 0)]).norm() < 1e-9 * scale);
        prop_assert_eq!(svd(&r.n2d).unwrap().sigma.iter().filter(|&&s| s > 1e-12 * scale).count(), 2);
    }
}

#[test]
fn counts_agree_with_eigenvalue_tally() {
    for i in 0..8 {
        let n = 3 + i % 5;
        let a = gaussian(child_seed(0, "properties-count", i as u64), n, n).scale(cr(1.0 / (n as f64).sqrt()));
        let eig = eigenvalues(&a).unwrap();
        let center = c(0.1, 0.05);
        let radius = (0..40)
            .map(|j| 0.3 + 0.02 * j as f64)
            .find(|r| eig.iter().all(|z| ((z - center).norm() - r).abs() > 0.03))
            .unwrap();
        let inside = eig.iter().filter(|z| (*z - center).norm() < radius).count() as i64;
        let contour = Contour::circle(center, radius, 64).unwrap();
        let f = HolomorphicFamily::pencil(a);
        let b = Borders::adapted(&f.value(center), radius).unwrap();
        assert_eq!(count_direct(&f, &contour).unwrap().count, inside);
        assert_eq!(count_effective(&f, &b, &contour).unwrap().count, inside);
    }
}
