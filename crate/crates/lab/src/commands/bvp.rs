//! One-dimensional boundary value problems: the Neumann-to-Dirichlet map as
//! an effective Hamiltonian, and the Dirichlet/Neumann eigenvalue count.

use grushin::bvp1d::{bvp_grushin, dirichlet_matrix, dn_trace_identity, neumann_matrix, Discretization};
use grushin::linops::{c, cr, eigenvalues};
use grushin::perturbation::least_squares_slope;
use grushin::{CMatrix, Contour, C64};

use super::Command;
use crate::params::{param, ParamKind::*, Params};
use crate::potential::{self, BUILTIN};
use crate::report::{Field, Gate, Kind, Outcome};
use crate::CliError;

pub const BVP_N2D: Command = Command {
    name: "bvp-n2d",
    about: "Effective Hamiltonian of the bordered boundary problem against the Neumann-to-Dirichlet map",
    params: &[
        param("potential", Choice(BUILTIN), "zero", "builtin potential"),
        param("potential-file", Text, "", "tabulated potential, one value per grid node (overrides --potential and --m)"),
        param("a", Float, "0", "left endpoint"),
        param("b", Float, "1", "right endpoint"),
        param("m", IntList, "100,200,400", "interior node counts"),
        param("z-re", Float, "-1", "real part of z"),
        param("z-im", Float, "0", "imaginary part of z"),
    ],
    run: bvp_n2d_run,
};

/// The map of `-u'' - z u = 0` on an interval of length `len`:
/// `(1/k) [[coth kL, 1/sinh kL], [1/sinh kL, coth kL]]` with `k = sqrt(-z)`;
/// `None` at the poles.
pub fn free_n2d(len: f64, z: C64) -> Option<CMatrix> {
    let k = (-z).sqrt();
    let kl = k * len;
    let diag = kl.cosh() / kl.sinh() / k;
    let off = cr(1.0) / (kl.sinh() * k);
    CMatrix::new(2, 2, vec![diag, off, off, diag]).ok()
}

fn endpoints(p: &Params) -> Result<(f64, f64), CliError> {
    let (a, b) = (p.float("a"), p.float("b"));
    if !(b > a) {
        return Err(CliError::Usage("need b > a".into()));
    }
    Ok((a, b))
}

fn bvp_n2d_run(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let (a, b) = endpoints(p)?;
    let z = c(p.float("z-re"), p.float("z-im"));
    let file = p.text("potential-file");
    let grids: Vec<Discretization> = if file.is_empty() {
        p.counts("m").into_iter().map(|m| potential::discretize(p.text("potential"), "", a, b, m)).collect::<Result<_, _>>()?
    } else {
        vec![potential::discretize("", file, a, b, 0)?]
    };
    let closed = (file.is_empty() && p.text("potential") == "zero").then(|| free_n2d(b - a, z)).flatten();
    let mut out = Outcome::new(&[
        ("m", Kind::Int),
        ("step", Kind::Real),
        ("n_aa", Kind::Complex),
        ("n_ab", Kind::Complex),
        ("n_ba", Kind::Complex),
        ("n_bb", Kind::Complex),
        ("eminusplus_gap", Kind::Real),
        ("block_gap", Kind::Real),
        ("closed_form_error", Kind::Real),
    ]);
    let mut worst = 0.0f64;
    let mut pts = Vec::new();
    for d in &grids {
        let r = bvp_grushin(d, z)?;
        let n = &r.n2d;
        let scale = n.max_abs().max(1.0);
        worst = worst.max(r.eminusplus_gap.max(r.block_gap) / scale);
        let err = closed.as_ref().map(|f| (n - f).max_abs());
        if let Some(e) = err {
            pts.push((d.step().ln(), e.ln()));
        }
        out.push(vec![
            Field::int(d.m()),
            Field::real(d.step()),
            Field::complex(n[(0, 0)]),
            Field::complex(n[(0, 1)]),
            Field::complex(n[(1, 0)]),
            Field::complex(n[(1, 1)]),
            Field::real(r.eminusplus_gap),
            Field::real(r.block_gap),
            err.map_or(Field::Null, Field::real),
        ]);
    }
    out.gate(Gate::at_most("relative_gap", worst, 1e-9));
    if pts.len() >= 2 {
        out.gate(Gate::at_most("slope_deviation", (least_squares_slope(&pts) - 2.0).abs(), 0.1));
    }
    Ok(out)
}

pub const BVP_TRACE: Command = Command {
    name: "bvp-trace",
    about: "Neumann minus Dirichlet eigenvalue count by two contour traces",
    params: &[
        param("potential", Choice(BUILTIN), "zero", "builtin potential"),
        param("potential-file", Text, "", "tabulated potential, one value per grid node (overrides --potential and --m)"),
        param("a", Float, "0", "left endpoint"),
        param("b", Float, "3.141592653589793", "right endpoint"),
        param("m", Int, "40", "interior node count"),
        param("center-re", Float, "0", "real part of the circle center"),
        param("center-im", Float, "0", "imaginary part of the circle center"),
        param("radius", Float, "0.5", "circle radius"),
        param("nodes", Int, "64", "initial quadrature nodes"),
    ],
    run: bvp_trace_run,
};

fn tally(m: &CMatrix, center: C64, radius: f64) -> Result<i64, CliError> {
    Ok(eigenvalues(m)?.iter().filter(|z| (*z - center).norm() < radius).count() as i64)
}

fn bvp_trace_run(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let (a, b) = endpoints(p)?;
    let d = potential::discretize(p.text("potential"), p.text("potential-file"), a, b, p.count("m")?)?;
    let center = c(p.float("center-re"), p.float("center-im"));
    let radius = p.float("radius");
    let contour = Contour::circle(center, radius, p.count("nodes")?)?;
    let neumann = tally(&neumann_matrix(&d, cr(0.0)), center, radius)?;
    let dirichlet = tally(&dirichlet_matrix(&d, cr(0.0)), center, radius)?;
    let r = dn_trace_identity(&d, &contour)?;
    let oracle = neumann - dirichlet;
    let mut out = Outcome::new(&[
        ("lhs", Kind::Int),
        ("rhs", Kind::Int),
        ("neumann_inside", Kind::Int),
        ("dirichlet_inside", Kind::Int),
        ("lhs_value", Kind::Complex),
        ("rhs_value", Kind::Complex),
    ]);
    out.push(vec![
        Field::int(r.lhs.count),
        Field::int(r.rhs.count),
        Field::int(neumann),
        Field::int(dirichlet),
        Field::complex(r.lhs.value),
        Field::complex(r.rhs.value),
    ]);
    let mismatch = (r.lhs.count - oracle).abs().max((r.rhs.count - oracle).abs());
    out.gate(Gate::at_most("count_mismatch", mismatch as f64, 0.0));
    Ok(out)
}
