//! Matrix experiments: Jordan clouds and series, Lidskii asymptotics,
//! pseudospectra, Moore-Penrose, Feshbach reduction and convolutions.

use std::f64::consts::PI;

use grushin::grushin_core::{circulant_effective, feshbach_effective, invert_system, jordan_block, jordan_system, Split};
use grushin::linops::{c, cr};
use grushin::perturbation::{
    jordan_cloud, jordan_effective_exact, jordan_effective_series, least_squares_slope, lidskii_compare,
    BlockJordanSpec, JordanSpec, QGenerator,
};
use grushin::pseudoinverse::{canonical_system, mp_residuals, pseudo_inverse, side_conditions, svd_pseudo_inverse};
use grushin::pseudospectra::{
    estimate_check, projector_identities, pseudospectrum_grid, resolvent_bound, threshold_projectors, HRule, Rect,
};
use grushin::rng::{complex_gaussian_matrix, seeded, uniform};
use grushin::{CMatrix, C64};

use super::{drift, max_of, task_seed, Command};
use crate::families;
use crate::params::{param, ParamKind::*, Params};
use crate::report::{Field, Gate, Kind, Outcome};
use crate::CliError;

const Q_CHOICES: &[&str] = &["random", "rank-one"];
const MATRIX_CHOICES: &[&str] = &["jordan", "nonnormal"];

fn q_generator(p: &Params, root: u64, name: &str) -> QGenerator {
    match p.text("q") {
        "rank-one" => QGenerator::RankOne,
        _ => QGenerator::Gaussian { seed: task_seed(root, name, 0) },
    }
}

fn test_matrix(p: &Params, root: u64, name: &str) -> Result<CMatrix, CliError> {
    let n = p.count("n")?;
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    Ok(match p.text("matrix") {
        "jordan" => jordan_block(n),
        _ => families::nonnormal(n, task_seed(root, name, 0)),
    })
}

pub const JORDAN_CLOUD: Command = Command {
    name: "jordan-cloud",
    about: "Eigenvalues of a perturbed Jordan block",
    params: &[
        param("n", Int, "50", "block size"),
        param("epsilon", Float, "1e-10", "perturbation size"),
        param("q", Choice(Q_CHOICES), "random", "perturbation matrix"),
    ],
    run: jordan_cloud_run,
};

fn jordan_cloud_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let n = p.count("n")?;
    let q = q_generator(p, seed, "jordan-cloud");
    let r = jordan_cloud(n, p.float("epsilon"), &q)?;
    let mut eig = r.eigenvalues.clone();
    eig.sort_by(|a, b| a.arg().total_cmp(&b.arg()).then(a.norm().total_cmp(&b.norm())));
    let mut out =
        Outcome::new(&[("index", Kind::Int), ("re", Kind::Real), ("im", Kind::Real), ("modulus", Kind::Real), ("radius", Kind::Real)]);
    for (i, z) in eig.iter().enumerate() {
        out.push(vec![Field::int(i), Field::real(z.re), Field::real(z.im), Field::real(z.norm()), Field::real(r.radius)]);
    }
    let rad = r.radius;
    if p.text("q") == "rank-one" {
        let err = max_of(eig.iter().map(|z| (z.norm() - rad).abs() / rad));
        out.gate(Gate::at_most("modulus_relative_error", err, 1e-6));
    } else {
        let inside = eig.iter().filter(|z| z.norm() >= 0.5 * rad && z.norm() <= 1.5 * rad).count();
        out.gate(Gate::at_least("annulus_fraction", inside as f64 / n as f64, 0.9));
    }
    Ok(out)
}

pub const JORDAN_SERIES: Command = Command {
    name: "jordan-series",
    about: "Partial sums of the perturbation series for the Jordan effective Hamiltonian",
    params: &[
        param("n", Int, "6", "block size"),
        param("lambda-re", Float, "0.2", "real part of the spectral parameter"),
        param("lambda-im", Float, "0", "imaginary part of the spectral parameter"),
        param("epsilon", Float, "1e-6", "perturbation size"),
        param("q", Choice(Q_CHOICES), "random", "perturbation matrix"),
        param("orders", Int, "6", "highest order of the partial sums"),
    ],
    run: jordan_series_run,
};

/// Rounding allowance of the bordered inversion used as the oracle.
const SERIES_FLOOR: f64 = 1e-13;

fn jordan_series_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let n = p.count("n")?;
    let lambda = c(p.float("lambda-re"), p.float("lambda-im"));
    let eps = p.float("epsilon");
    let spec = JordanSpec::new(n, lambda, eps, &q_generator(p, seed, "jordan-series"))?;
    let exact = jordan_effective_exact(&spec)?;
    let g0 = invert_system(&jordan_system(n, lambda))?;
    let head = eps * g0.eminus.norm2()? * spec.q.norm2()? * g0.eplus.norm2()?;
    let mut out = Outcome::new(&[
        ("order", Kind::Int),
        ("value", Kind::Complex),
        ("exact", Kind::Complex),
        ("error", Kind::Real),
        ("contraction", Kind::Real),
        ("bound", Kind::Real),
    ]);
    let mut excess = f64::NEG_INFINITY;
    for k in 0..=p.count("orders")? {
        let s = jordan_effective_series(&spec, k)?;
        let delta = s.contraction;
        let bound = head * delta.powi(k as i32) / (1.0 - delta);
        let error = (s.value - exact).norm();
        excess = excess.max(error - bound);
        out.push(vec![
            Field::int(k),
            Field::complex(s.value),
            Field::complex(exact),
            Field::real(error),
            Field::real(delta),
            Field::real(bound),
        ]);
    }
    out.gate(Gate::at_most("error_minus_bound", excess, SERIES_FLOOR));
    Ok(out)
}

pub const LIDSKII: Command = Command {
    name: "lidskii",
    about: "Leading eigenvalue asymptotics of perturbed Jordan blocks J_n + J_n + J_k",
    params: &[
        param("n", Int, "3", "size of the two leading blocks"),
        param("k", Int, "1", "size of the trailing block"),
        param("eps-min", Float, "1e-8", "smallest perturbation size"),
        param("eps-max", Float, "1e-5", "largest perturbation size"),
        param("points", Int, "7", "number of log-spaced perturbation sizes"),
    ],
    run: lidskii_run,
};

pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    (0..points)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn lidskii_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let n = p.count("n")?;
    let k = p.count("k")?;
    let (lo, hi) = (p.float("eps-min"), p.float("eps-max"));
    if !(lo > 0.0 && hi > lo) || p.count("points")? < 2 {
        return Err(CliError::Usage("need 0 < eps-min < eps-max and at least 2 points".into()));
    }
    let d = 2 * n + k;
    let q = complex_gaussian_matrix(&mut seeded(task_seed(seed, "lidskii", 0)), d, d);
    let spec = BlockJordanSpec::new(n, k, q, lo)?;
    let eps = log_spaced(lo, hi, p.count("points")?);
    let r = lidskii_compare(&spec, &eps)?;
    let mut out = Outcome::new(&[
        ("epsilon", Kind::Real),
        ("mean_modulus", Kind::Real),
        ("max_modulus_error", Kind::Real),
        ("max_location_error", Kind::Real),
    ]);
    for row in &r.rows {
        out.push(vec![
            Field::real(row.epsilon),
            Field::real(row.mean_modulus),
            Field::real(row.max_modulus_error),
            Field::real(row.max_location_error),
        ]);
    }
    let pts: Vec<(f64, f64)> = r.rows.iter().map(|x| (x.epsilon.ln(), x.mean_modulus.ln())).collect();
    let target = 1.0 / n as f64;
    let slope = least_squares_slope(&pts);
    out.gate(Gate::at_most("exponent_relative_error", (slope - target).abs() / target, 0.02));
    out.gate(Gate::at_most("modulus_error_at_eps_min", r.rows[0].max_modulus_error, 0.05));
    Ok(out)
}

pub const PSEUDOSPECTRUM: Command = Command {
    name: "pseudospectrum",
    about: "Resolvent norm against the effective Hamiltonian on a grid of spectral parameters",
    params: &[
        param("matrix", Choice(MATRIX_CHOICES), "jordan", "test matrix"),
        param("n", Int, "10", "matrix size"),
        param("re-min", Float, "-1", "grid bounds"),
        param("re-max", Float, "1", "grid bounds"),
        param("im-min", Float, "-1", "grid bounds"),
        param("im-max", Float, "1", "grid bounds"),
        param("nx", Int, "9", "grid points along the real axis"),
        param("ny", Int, "9", "grid points along the imaginary axis"),
        param("rule", Choice(&["fixed", "sigma-scaled"]), "fixed", "how h is chosen per cell"),
        param("h", Float, "1e-2", "threshold, or its multiple of sigma_min for sigma-scaled"),
    ],
    run: pseudospectrum_run,
};

fn pseudospectrum_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let a = test_matrix(p, seed, "pseudospectrum")?;
    let rect = Rect { re_min: p.float("re-min"), re_max: p.float("re-max"), im_min: p.float("im-min"), im_max: p.float("im-max") };
    let rule = match p.text("rule") {
        "sigma-scaled" => HRule::SigmaScaled(p.float("h")),
        _ => HRule::Fixed(p.float("h")),
    };
    let cells = pseudospectrum_grid(&a, rect, p.count("nx")?, p.count("ny")?, rule)?;
    let mut out = Outcome::new(&[
        ("lambda", Kind::Complex),
        ("status", Kind::Text),
        ("h", Kind::Real),
        ("n_captured", Kind::Int),
        ("sigma_min", Kind::Real),
        ("norm_eff_inv", Kind::Real),
        ("c_emp", Kind::Real),
    ]);
    let mut violations = 0usize;
    let mut ok = 0usize;
    for cell in &cells {
        match &cell.outcome {
            Ok(x) => {
                if !x.additive_bound_holds() {
                    violations += 1;
                }
                ok += 1;
                out.push(vec![
                    Field::complex(cell.lambda),
                    Field::text("ok"),
                    Field::real(x.h),
                    Field::int(x.n_captured),
                    Field::real(x.sigma_min),
                    Field::real(x.norm_eff_inv),
                    Field::real(x.c_emp),
                ]);
            }
            Err(e) => out.push(vec![
                Field::complex(cell.lambda),
                Field::text(e.to_string()),
                Field::Null,
                Field::Null,
                Field::Null,
                Field::Null,
                Field::Null,
            ]),
        }
    }
    out.gate(Gate::at_most("additive_bound_violations", violations as f64, 0.0));
    out.gate(Gate::at_least("cells_ok", ok as f64, 1.0));
    Ok(out)
}

pub const ESTIMATE_CHECK: Command = Command {
    name: "estimate-check",
    about: "Empirical constants of the projector estimate across thresholds",
    params: &[
        param("matrix", Choice(MATRIX_CHOICES), "nonnormal", "test matrix"),
        param("n", Int, "40", "matrix size"),
        param("lambda-re", Float, "0.5", "real part of the spectral parameter"),
        param("lambda-im", Float, "0", "imaginary part of the spectral parameter"),
        param("h-list", FloatList, "1e-1,1e-2,1e-3", "thresholds"),
        param("trials", Int, "200", "random right-hand sides per threshold"),
    ],
    run: estimate_check_run,
};

fn estimate_check_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let a = test_matrix(p, seed, "estimate-check")?;
    let lambda = c(p.float("lambda-re"), p.float("lambda-im"));
    let trials = p.count("trials")?;
    let mut out = Outcome::new(&[
        ("h", Kind::Real),
        ("status", Kind::Text),
        ("n_captured", Kind::Int),
        ("c_estimate", Kind::Real),
        ("c_emp", Kind::Real),
        ("identity_max", Kind::Real),
        ("sigma_min", Kind::Real),
        ("norm_eff_inv", Kind::Real),
    ]);
    let (mut ce, mut cp, mut ids, mut failures) = (Vec::new(), Vec::new(), Vec::new(), 0usize);
    for (i, &h) in p.floats("h-list").iter().enumerate() {
        let run = || -> grushin::Result<_> {
            let est = estimate_check(&a, lambda, h, trials, task_seed(seed, "estimate-check", i as u64))?;
            let pair = threshold_projectors(&a, lambda, h)?;
            let id = projector_identities(&a, lambda, &pair).iter().copied().fold(0.0, f64::max);
            let cell = resolvent_bound(&a, lambda, h)?;
            Ok((est, id, cell))
        };
        match run() {
            Ok((est, id, cell)) => {
                ce.push(est);
                cp.push(cell.c_emp);
                ids.push(id);
                out.push(vec![
                    Field::real(h),
                    Field::text("ok"),
                    Field::int(cell.n_captured),
                    Field::real(est),
                    Field::real(cell.c_emp),
                    Field::real(id),
                    Field::real(cell.sigma_min),
                    Field::real(cell.norm_eff_inv),
                ]);
            }
            Err(e) => {
                failures += 1;
                let mut row = vec![Field::real(h), Field::text(e.to_string())];
                row.resize(8, Field::Null);
                out.push(row);
            }
        }
    }
    out.gate(Gate::at_most("failed_thresholds", failures as f64, 0.0));
    out.gate(Gate::at_most("c_estimate_drift", drift(&ce), 10.0));
    out.gate(Gate::at_most("c_emp_drift", drift(&cp), 10.0));
    out.gate(Gate::at_most("identity_max", max_of(ids), 1e-10));
    Ok(out)
}

pub const MP_CHECK: Command = Command {
    name: "mp-check",
    about: "Bordered Moore-Penrose inverses against the SVD construction",
    params: &[
        param("instances", Int, "200", "number of random matrices"),
        param("max-size", Int, "12", "largest row or column count"),
    ],
    run: mp_check_run,
};

fn mp_check_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let max = p.count("max-size")?;
    if max == 0 {
        return Err(CliError::Usage("--max-size must be positive".into()));
    }
    let mut out = Outcome::new(&[
        ("index", Kind::Int),
        ("rows", Kind::Int),
        ("cols", Kind::Int),
        ("rank", Kind::Int),
        ("gap", Kind::Real),
        ("mp_max", Kind::Real),
        ("side_max", Kind::Real),
    ]);
    let mut worst = [0.0f64; 3];
    for i in 0..p.count("instances")? {
        let mut rng = seeded(task_seed(seed, "mp-check", i as u64));
        let pick = |rng: &mut grushin::rng::Rng, hi: usize| 1 + ((uniform(rng) * hi as f64) as usize).min(hi - 1);
        let rows = pick(&mut rng, max);
        let cols = pick(&mut rng, max);
        let rank = pick(&mut rng, rows.min(cols));
        let m = families::low_rank(&mut rng, rows, cols, rank)?;
        let pg = pseudo_inverse(&m, None)?;
        let ps = svd_pseudo_inverse(&m, None)?;
        let gap = (&pg - &ps).max_abs();
        let mp = mp_residuals(&m, &pg)?.iter().copied().fold(0.0, f64::max);
        let (s, g) = canonical_system(&m, None)?;
        let side = side_conditions(&s, &g).iter().copied().fold(0.0, f64::max);
        for (w, v) in worst.iter_mut().zip([gap, mp, side]) {
            *w = max_of([*w, v]);
        }
        out.push(vec![
            Field::int(i),
            Field::int(rows),
            Field::int(cols),
            Field::int(rank),
            Field::real(gap),
            Field::real(mp),
            Field::real(side),
        ]);
    }
    out.gate(Gate::at_most("svd_gap", worst[0], 1e-10));
    out.gate(Gate::at_most("mp_residual", worst[1], 1e-10));
    out.gate(Gate::at_most("side_conditions", worst[2], 1e-10));
    Ok(out)
}

pub const FESHBACH: Command = Command {
    name: "feshbach",
    about: "Feshbach reduction against the bordered effective Hamiltonian",
    params: &[
        param("matrix", Choice(&["pair", "random"]), "pair", "two-level [[1, d], [d, 3]] or a random Hermitian matrix"),
        param("delta", Float, "0.1", "coupling of the two-level matrix"),
        param("n", Int, "6", "size of the random matrix"),
        param("split", IntList, "0", "retained coordinates, 0-based"),
        param("z-re", Float, "1.01", "real part of z"),
        param("z-im", Float, "0", "imaginary part of z"),
    ],
    run: feshbach_run,
};

fn feshbach_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let delta = p.float("delta");
    let pair = p.text("matrix") == "pair";
    let h = if pair {
        CMatrix::from_real_rows(&[&[1.0, delta], &[delta, 3.0]])
    } else {
        let a = families::shifted(p.count("n")?, task_seed(seed, "feshbach", 0));
        (&a + &a.adjoint()).scale(cr(0.5))
    };
    let z = c(p.float("z-re"), p.float("z-im"));
    let split = Split::new(p.counts("split"), h.rows())?;
    let r = feshbach_effective(&h, &split, z)?;
    let formula = |i: usize, j: usize| -> Option<C64> {
        (pair && split.v() == [0] && i == 0 && j == 0).then(|| z - 1.0 - delta * delta / (z - 3.0))
    };
    let mut out = Outcome::new(&[
        ("i", Kind::Int),
        ("j", Kind::Int),
        ("g_v", Kind::Complex),
        ("minus_eminusplus", Kind::Complex),
        ("scalar_formula", Kind::Complex),
    ]);
    let k = r.g_v.rows();
    let scale = r.g_v.max_abs().max(1.0);
    let (mut agree, mut formula_err) = (0.0f64, 0.0f64);
    for i in 0..k {
        for j in 0..k {
            let g = r.g_v[(i, j)];
            let e = -r.eminusplus[(i, j)];
            agree = agree.max((g - e).norm() / scale);
            let f = formula(i, j);
            if let Some(f) = f {
                formula_err = formula_err.max((g - f).norm() / scale);
            }
            out.push(vec![Field::int(i), Field::int(j), Field::complex(g), Field::complex(e), f.map_or(Field::Null, Field::complex)]);
        }
    }
    out.gate(Gate::at_most("bordered_agreement", agree, 1e-10));
    if pair && split.v() == [0] {
        out.gate(Gate::at_most("scalar_formula_error", formula_err, 1e-12));
    }
    Ok(out)
}

pub const CIRCULANT: Command = Command {
    name: "circulant",
    about: "Effective Hamiltonian of a circular convolution with Fourier borders",
    params: &[
        param("kernel", Choice(&["delta0", "delta1", "random"]), "delta1", "convolution kernel"),
        param("n", Int, "4", "length of the cyclic group"),
    ],
    run: circulant_run,
};

/// `sum_x K(x) exp(-2 pi i k x / N)` summed directly.
pub fn direct_dft(kernel: &[C64], k: usize) -> C64 {
    let n = kernel.len();
    kernel
        .iter()
        .enumerate()
        .map(|(x, &v)| {
            let th = -2.0 * PI * ((k * x) % n) as f64 / n as f64;
            v * c(th.cos(), th.sin())
        })
        .sum()
}

fn circulant_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let n = p.count("n")?;
    if n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    let kernel: Vec<C64> = match p.text("kernel") {
        "delta0" => (0..n).map(|x| cr(if x == 0 { 1.0 } else { 0.0 })).collect(),
        "delta1" => (0..n).map(|x| cr(if x == 1 { 1.0 } else { 0.0 })).collect(),
        _ => complex_gaussian_matrix(&mut seeded(task_seed(seed, "circulant", 0)), n, 1).data().to_vec(),
    };
    let r = circulant_effective(&kernel)?;
    let emp = &r.inverse.eminusplus;
    let scale = kernel.iter().map(|z| z.norm()).sum::<f64>().max(1.0);
    let mut out = Outcome::new(&[
        ("k", Kind::Int),
        ("eminusplus", Kind::Complex),
        ("dft", Kind::Complex),
        ("off_diagonal", Kind::Real),
    ]);
    let (mut diag_err, mut off) = (0.0f64, 0.0f64);
    for k in 0..n {
        let d = direct_dft(&kernel, k);
        let row_off = (0..n).filter(|&j| j != k).map(|j| emp[(k, j)].norm()).fold(0.0, f64::max);
        diag_err = diag_err.max((emp[(k, k)] - d).norm() / scale);
        off = off.max(row_off / scale);
        out.push(vec![Field::int(k), Field::complex(emp[(k, k)]), Field::complex(d), Field::real(row_off)]);
    }
    out.gate(Gate::at_most("diagonal_error", diag_err, 1e-10));
    out.gate(Gate::at_most("off_diagonal", off, 1e-10));
    Ok(out)
}
