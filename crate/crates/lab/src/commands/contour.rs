//! Contour and loop integrals: eigenvalue counts, loop traces, Poisson
//! summation and the self-adjoint obstruction.

use std::f64::consts::PI;

use grushin::linops::{c, cr, eigenvalues};
use grushin::perturbation::QGenerator;
use grushin::traces::{
    count_direct, count_effective, loop_trace_identity, poisson_verify, selfadjoint_obstruction, weighted_trace,
    Borders, HolomorphicFamily, TestFunction,
};
use grushin::{CMatrix, Contour, C64};

use super::{max_of, task_seed, Command};
use crate::families;
use crate::params::{param, ParamKind::*, Params};
use crate::report::{Field, Gate, Kind, Outcome};
use crate::CliError;

/// `sum_n exp(-pi n^2) = pi^{1/4} / Gamma(3/4)`.
pub const THETA_AT_ONE: f64 = 1.086_434_811_213_308_1;

pub const TRACE_COUNT: Command = Command {
    name: "trace-count",
    about: "Eigenvalue counts inside a circle by direct and effective contour traces",
    params: &[
        param("family", Choice(&["shifted", "jordan"]), "shifted", "matrix family of the pencil z - A"),
        param("n", Int, "12", "matrix size"),
        param("center", Float, "0", "real part of the circle center"),
        param("center-im", Float, "0", "imaginary part of the circle center"),
        param("radius", Float, "0.7", "circle radius"),
        param("epsilon", Float, "1e-6", "perturbation size of the jordan family"),
        param("nodes", Int, "64", "initial quadrature nodes"),
    ],
    run: trace_count_run,
};

/// The matrix `A` of trace-count family `family` at task seed `seed`.
pub fn trace_family(family: &str, n: usize, epsilon: f64, seed: u64) -> Result<CMatrix, CliError> {
    Ok(match family {
        "jordan" => {
            let q = QGenerator::Gaussian { seed }.build(n)?;
            &grushin::grushin_core::jordan_block(n) + &q.scale(cr(epsilon))
        }
        _ => families::shifted(n, seed),
    })
}

fn trace_count_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let n = p.count("n")?;
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let a = trace_family(p.text("family"), n, p.float("epsilon"), task_seed(seed, "trace-count", 0))?;
    let center = c(p.float("center"), p.float("center-im"));
    let radius = p.float("radius");
    let contour = Contour::circle(center, radius, p.count("nodes")?)?;
    let eig = eigenvalues(&a)?;
    let inside: Vec<C64> = eig.iter().copied().filter(|z| (z - center).norm() < radius).collect();
    let margin = eig.iter().map(|z| ((z - center).norm() - radius).abs()).fold(f64::INFINITY, f64::min);
    let f = HolomorphicFamily::pencil(a);
    let borders = Borders::adapted(&f.value(center), radius)?;
    let direct = count_direct(&f, &contour)?;
    let effective = count_effective(&f, &borders, &contour)?;
    let w = weighted_trace(&f, &borders, &contour, |z| z)?;
    let oracle = inside.len() as i64;
    let eig_sum: C64 = inside.iter().sum();
    let mut out = Outcome::new(&[
        ("family", Kind::Text),
        ("border_rank", Kind::Int),
        ("margin", Kind::Real),
        ("direct", Kind::Int),
        ("effective", Kind::Int),
        ("oracle", Kind::Int),
        ("direct_value", Kind::Complex),
        ("effective_value", Kind::Complex),
        ("weighted_direct", Kind::Complex),
        ("weighted_effective", Kind::Complex),
        ("eigenvalue_sum", Kind::Complex),
    ]);
    out.push(vec![
        Field::text(p.text("family")),
        Field::int(borders.rminus.cols()),
        Field::real(margin),
        Field::int(direct.count),
        Field::int(effective.count),
        Field::int(oracle),
        Field::complex(direct.value),
        Field::complex(effective.value),
        Field::complex(w.direct),
        Field::complex(w.effective),
        Field::complex(eig_sum),
    ]);
    let mismatch = (direct.count - oracle).abs().max((effective.count - oracle).abs());
    out.gate(Gate::at_most("count_mismatch", mismatch as f64, 0.0));
    out.gate(Gate::at_most("weighted_error", (w.direct - eig_sum).norm().max((w.effective - eig_sum).norm()), 1e-7));
    Ok(out)
}

pub const LOOP_IDENTITY: Command = Command {
    name: "loop-identity",
    about: "Trace of the logarithmic derivative along certified loops, direct and effective",
    params: &[
        param("families", Int, "50", "number of random loops"),
        param("n", Int, "6", "size of P"),
        param("k", Int, "2", "border rank"),
    ],
    run: loop_identity_run,
};

/// `|v - 2 pi i round(v / 2 pi i)|`.
pub fn integer_defect(v: C64) -> f64 {
    let w = v / c(0.0, 2.0 * PI);
    (v - c(0.0, 2.0 * PI * w.re.round())).norm()
}

fn loop_identity_run(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let (n, k) = (p.count("n")?, p.count("k")?);
    if k == 0 || k > n {
        return Err(CliError::Usage("need 0 < k <= n".into()));
    }
    let mut out = Outcome::new(&[
        ("index", Kind::Int),
        ("winding", Kind::Int),
        ("trace_p", Kind::Complex),
        ("trace_eff", Kind::Complex),
        ("difference", Kind::Real),
        ("nodes", Kind::Int),
    ]);
    let (mut diff, mut defect, mut wrong) = (0.0f64, 0.0f64, 0usize);
    for i in 0..p.count("families")? {
        let (l, winding) = families::trig_loop(n, k, task_seed(seed, "loop-identity", i as u64))?;
        let r = loop_trace_identity(&l, &|t, s| l.radial(t, s))?;
        diff = max_of([diff, r.difference]);
        defect = max_of([defect, integer_defect(r.trace_p), integer_defect(r.trace_eff)]);
        if (r.trace_p.im / (2.0 * PI)).round() as i64 != winding {
            wrong += 1;
        }
        out.push(vec![
            Field::int(i),
            Field::int(winding),
            Field::complex(r.trace_p),
            Field::complex(r.trace_eff),
            Field::real(r.difference),
            Field::int(r.nodes),
        ]);
    }
    out.gate(Gate::at_most("difference", diff, 1e-8));
    out.gate(Gate::at_most("integer_defect", defect, 1e-8));
    out.gate(Gate::at_most("winding_mismatch", wrong as f64, 0.0));
    Ok(out)
}

pub const POISSON: Command = Command {
    name: "poisson",
    about: "Poisson summation by lattice sums and by the monodromy trace",
    params: &[
        param("f", Choice(&["sinc2", "gaussian"]), "sinc2", "test function"),
        param("N", Int, "2", "monodromy power cutoff"),
        param("truncation", Int, "20000", "lattice sums run over |n| <= truncation"),
    ],
    run: poisson_run,
};

fn poisson_run(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let sinc = p.text("f") == "sinc2";
    let f = if sinc { TestFunction::sinc2() } else { TestFunction::gaussian() };
    let r = poisson_verify(&f, p.count("N")?, p.count("truncation")?)?;
    let mono = r.rhs_monodromy.as_ref().ok().copied();
    let mut out = Outcome::new(&[
        ("f", Kind::Text),
        ("lhs", Kind::Real),
        ("rhs_pois", Kind::Complex),
        ("rhs_monodromy", Kind::Complex),
        ("monodromy_status", Kind::Text),
        ("lhs_tail", Kind::Real),
        ("rhs_tail", Kind::Real),
        ("integral_drift", Kind::Real),
    ]);
    out.push(vec![
        Field::text(p.text("f")),
        Field::real(r.lhs),
        Field::complex(r.rhs_pois),
        mono.map_or(Field::Null, Field::complex),
        Field::text(match &r.rhs_monodromy {
            Ok(_) => "ok".to_string(),
            Err(e) => e.to_string(),
        }),
        Field::real(r.lhs_tail),
        Field::real(r.rhs_tail),
        Field::real(r.integral_drift),
    ]);
    if sinc {
        let one = cr(1.0);
        out.gate(Gate::at_most("lhs_error", (r.lhs - 1.0).abs(), 1e-8));
        out.gate(Gate::at_most("rhs_pois_error", (r.rhs_pois - one).norm(), 1e-8));
        out.gate(match mono {
            Some(m) => Gate::at_most("rhs_monodromy_error", (m - one).norm(), 1e-8),
            None => Gate::failed("rhs_monodromy_error", "monodromy trace not applicable"),
        });
    } else {
        out.gate(Gate::at_most("pois_discrepancy", (cr(r.lhs) - r.rhs_pois).norm(), 1e-10));
        out.gate(Gate::at_most("theta_error", (r.lhs - THETA_AT_ONE).abs(), 1e-10));
    }
    Ok(out)
}

pub const OBSTRUCTION: Command = Command {
    name: "obstruction",
    about: "Self-adjoint obstruction integrals and the zeros of the transfer determinant",
    params: &[
        param("profile", Choice(&["constant", "sine", "half"]), "constant", "f = 1, sin x, or the indicator of [0, pi]"),
        param("h", Float, "0.5", "semiclassical parameter"),
        param("z-min", Float, "0", "scan range"),
        param("z-max", Float, "4", "scan range"),
        param("z-points", Int, "401", "scan points"),
    ],
    run: obstruction_run,
};

fn obstruction_run(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let profile: fn(f64) -> C64 = match p.text("profile") {
        "sine" => |x| cr(x.sin()),
        "half" => |x| cr(if x <= PI { 1.0 } else { 0.0 }),
        _ => |_| cr(1.0),
    };
    let h = p.float("h");
    let (z0, z1, m) = (p.float("z-min"), p.float("z-max"), p.count("z-points")?);
    if !(z1 > z0) || m < 2 {
        return Err(CliError::Usage("need z-max > z-min and at least 2 points".into()));
    }
    let grid: Vec<f64> = (0..m).map(|j| z0 + (z1 - z0) * j as f64 / (m - 1) as f64).collect();
    let r = selfadjoint_obstruction(&profile, h, &grid)?;
    let phase = |z: f64| (r.a * c((-PI * z / h).cos(), (-PI * z / h).sin())).re;
    let det = |z: f64| {
        let th = 2.0 * PI * z / h;
        let mz = c(th.cos(), th.sin());
        (-r.a * (cr(1.0) - mz) - r.b.conj() * mz * r.b).norm()
    };
    let mut out = Outcome::new(&[
        ("kind", Kind::Text),
        ("z", Kind::Real),
        ("phase_re", Kind::Real),
        ("det_abs", Kind::Real),
        ("a", Kind::Complex),
        ("b", Kind::Complex),
        ("identity_residual", Kind::Real),
    ]);
    let row = |kind: &str, z: f64| {
        vec![
            Field::text(kind),
            Field::real(z),
            Field::real(phase(z)),
            Field::real(det(z)),
            Field::complex(r.a),
            Field::complex(r.b),
            Field::real(r.identity_residual),
        ]
    };
    let rows: Vec<_> = grid.iter().map(|&z| row("grid", z)).chain(r.crossings.iter().map(|&z| row("crossing", z))).collect();
    for x in rows {
        out.push(x);
    }
    let scale = r.b.norm_sqr().max(r.a.norm()).max(1.0);
    out.gate(Gate::at_most("identity_residual", r.identity_residual / scale, 1e-10));
    out.gate(Gate::at_most("det_at_crossings", r.det_at_crossings / scale, 1e-8));
    if r.a.norm() > 1e-8 * scale && z1 - z0 >= 2.0 * h {
        out.gate(Gate::at_least("crossings", r.crossings.len() as f64, 1.0));
    }
    Ok(out)
}

