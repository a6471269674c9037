//! Contour trace formulas: eigenvalue counts taken directly and through the
//! effective Hamiltonian, the loop identity for closed curves of bordered
//! systems, Poisson summation through the monodromy effective Hamiltonian,
//! and the obstruction to self-adjoint borders on the circle.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grushin_core::{assemble, invert_system, BorderedSystem, Split};
use crate::linops::{c, cr, svd, try_contour_integrate, CMatrix, Contour, Lu, C64, EPS, WELL_POSED_LIMIT};

/// Relative quadrature tolerance for every contour and loop integral.
pub const TRACE_QUADRATURE_TOL: f64 = 1e-11;
/// Largest admissible distance of a count to the nearest integer.
pub const INTEGER_TOL: f64 = 1e-6;

type MatrixFn = Box<dyn Fn(C64) -> CMatrix>;

fn two_pi_i() -> C64 {
    c(0.0, 2.0 * PI)
}

fn node(z: C64) -> (f64, f64) {
    (z.re, z.im)
}

/// `z -> P(z)` together with `z -> P'(z)`; the derivative falls back to a
/// Richardson-extrapolated central difference when no formula is given.
pub struct HolomorphicFamily {
    value: MatrixFn,
    derivative: Option<MatrixFn>,
}

impl HolomorphicFamily {
    pub fn new(value: impl Fn(C64) -> CMatrix + 'static) -> Self {
        HolomorphicFamily { value: Box::new(value), derivative: None }
    }

    pub fn with_derivative(
        value: impl Fn(C64) -> CMatrix + 'static,
        derivative: impl Fn(C64) -> CMatrix + 'static,
    ) -> Self {
        HolomorphicFamily { value: Box::new(value), derivative: Some(Box::new(derivative)) }
    }

    /// `z I - A`.
    pub fn pencil(a: CMatrix) -> Self {
        let n = a.rows();
        Self::with_derivative(move |z| -&a.shift(z), move |_| CMatrix::identity(n))
    }

    pub fn value(&self, z: C64) -> CMatrix {
        (self.value)(z)
    }

    pub fn derivative(&self, z: C64) -> CMatrix {
        match &self.derivative {
            Some(d) => d(z),
            None => self.central_difference(z),
        }
    }

    /// Step `EPS^(1/3) max(1, |z|)`, one Richardson step.
    pub fn central_difference(&self, z: C64) -> CMatrix {
        let h = EPS.cbrt() * z.norm().max(1.0);
        let d = |h: f64| (&self.value(z + h) - &self.value(z - h)).scale(cr(0.5 / h));
        let coarse = d(h);
        let fine = d(0.5 * h);
        &fine.scale(cr(4.0 / 3.0)) - &coarse.scale(cr(1.0 / 3.0))
    }

    /// Largest relative gap between the derivative and the central
    /// difference over `probes`; at most `1e-6` for a consistent family.
    pub fn consistency(&self, probes: &[C64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &z in probes {
            let d = self.derivative(z);
            let fd = self.central_difference(z);
            worst = worst.max((&d - &fd).max_abs() / d.max_abs().max(1.0));
        }
        if worst > 1e-6 {
            return Err(Error::InvalidArgument("family derivative disagrees with central difference"));
        }
        Ok(worst)
    }
}

/// Constant borders of the bordered problem along a contour.
#[derive(Clone, Debug)]
pub struct Borders {
    pub rminus: CMatrix,
    pub rplus: CMatrix,
    pub corner: Option<CMatrix>,
}

impl Borders {
    pub fn new(rminus: CMatrix, rplus: CMatrix) -> Self {
        Borders { rminus, rplus, corner: None }
    }

    /// The `k` smallest singular directions of `p`: `R-` the last left
    /// singular vectors as columns, `R+` the last right ones as rows.
    pub fn singular_directions(p: &CMatrix, k: usize) -> Result<Self> {
        if k == 0 || k > p.rows().min(p.cols()) {
            return Err(Error::InvalidArgument("border rank out of range"));
        }
        let s = svd(p)?;
        let (n2, n1) = p.shape();
        Ok(Borders::new(
            s.u.sub_matrix(0, n2 - k, n2, k),
            s.v.sub_matrix(0, n1 - k, n1, k).adjoint(),
        ))
    }

    /// Singular directions of `p` with singular value at most `2 spread`,
    /// scaled by `max(1, 2 spread)`; at least one direction is kept.
    ///
    /// The problem stays well posed for every `P` with `|P - p| <= spread`,
    /// since the inverse at `p` maps `[u; 0]` with norm at most
    /// `1 / min(sigma_{k+1}, scale) < 1 / (2 spread)`.
    pub fn adapted(p: &CMatrix, spread: f64) -> Result<Self> {
        if !(spread > 0.0) {
            return Err(Error::InvalidArgument("spread must be positive"));
        }
        let s = svd(p)?;
        let k = s.sigma.iter().filter(|&&x| x <= 2.0 * spread).count().max(1);
        let mut b = Borders::singular_directions(p, k.min(p.rows().min(p.cols())))?;
        let scale = cr((2.0 * spread).max(1.0));
        b.rminus = b.rminus.scale(scale);
        b.rplus = b.rplus.scale(scale);
        Ok(b)
    }

    /// `R+` restricts to the split coordinates and `R-` includes them.
    pub fn coordinate(split: &Split, n: usize) -> Self {
        let v = split.v();
        let rplus = CMatrix::from_fn(v.len(), n, |i, j| if v[i] == j { cr(1.0) } else { cr(0.0) });
        Borders::new(rplus.transpose(), rplus)
    }

    fn system(&self, p: CMatrix) -> Result<BorderedSystem> {
        assemble(p, self.rminus.clone(), self.rplus.clone(), self.corner.clone())
    }
}

/// Sum of a contour integral divided by `2 pi i`, with the distance of
/// that value to the nearest integer.
#[derive(Clone, Debug, PartialEq)]
pub struct CountReport {
    pub count: i64,
    pub value: C64,
    pub distance: f64,
}

fn to_count(value: C64) -> Result<CountReport> {
    let nearest = value.re.round();
    let distance = (value - cr(nearest)).norm();
    if distance >= INTEGER_TOL {
        return Err(Error::NonInteger { value: (value.re, value.im) });
    }
    Ok(CountReport { count: nearest as i64, value, distance })
}

fn direct_integrand(f: &HolomorphicFamily, z: C64) -> Result<C64> {
    let lu = Lu::factor(&f.value(z)).map_err(|_| Error::OnContourSingular { node: node(z) })?;
    Ok(lu.solve(&f.derivative(z))?.trace())
}

/// `tr(E-+^-1 E-+')` with `E-+' = -E- P' E+` for constant borders.
fn effective_integrand(f: &HolomorphicFamily, b: &Borders, z: C64) -> Result<C64> {
    let s = b.system(f.value(z))?;
    let g = invert_system(&s).map_err(|e| match e {
        Error::IllPosed { condition } => Error::IllPosedOnContour { node: node(z), condition },
        other => other,
    })?;
    let de = -&g.eminus.matmul(&f.derivative(z)).matmul(&g.eplus);
    if g.eminusplus.rows() == 0 {
        return Ok(cr(0.0));
    }
    let lu = Lu::factor(&g.eminusplus).map_err(|_| Error::OnContourSingular { node: node(z) })?;
    Ok(lu.solve(&de)?.trace())
}

/// `(1/2 pi i) \oint tr(P' P^-1) dz`, the number of zeros of `det P` inside.
pub fn count_direct(f: &HolomorphicFamily, contour: &Contour) -> Result<CountReport> {
    let v = try_contour_integrate(|z| direct_integrand(f, z), contour, TRACE_QUADRATURE_TOL)?;
    to_count(v / two_pi_i())
}

/// `(1/2 pi i) \oint tr(E-+' E-+^-1) dz` for the problem bordered by `b`.
pub fn count_effective(f: &HolomorphicFamily, b: &Borders, contour: &Contour) -> Result<CountReport> {
    let v = try_contour_integrate(|z| effective_integrand(f, b, z), contour, TRACE_QUADRATURE_TOL)?;
    to_count(v / two_pi_i())
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedTrace {
    /// `(1/2 pi i) \oint tr(P' P^-1) g dz`.
    pub direct: C64,
    /// `(1/2 pi i) \oint tr(E-+' E-+^-1) g dz`.
    pub effective: C64,
    pub difference: f64,
}

pub fn weighted_trace(
    f: &HolomorphicFamily,
    b: &Borders,
    contour: &Contour,
    g: impl Fn(C64) -> C64,
) -> Result<WeightedTrace> {
    let direct = try_contour_integrate(|z| Ok(direct_integrand(f, z)? * g(z)), contour, TRACE_QUADRATURE_TOL)?
        / two_pi_i();
    let effective =
        try_contour_integrate(|z| Ok(effective_integrand(f, b, z)? * g(z)), contour, TRACE_QUADRATURE_TOL)?
            / two_pi_i();
    Ok(WeightedTrace { direct, effective, difference: (direct - effective).norm() })
}

/// Closed curve `t -> sum_k C_k e^{ikt}` of `(n + k) x (n + k)` bordered
/// matrices; the lower-right `k x k` corner may be nonzero.
#[derive(Clone, Debug)]
pub struct TrigLoop {
    n: usize,
    k: usize,
    terms: Vec<(i32, CMatrix)>,
}

impl TrigLoop {
    pub fn new(n: usize, k: usize, terms: Vec<(i32, CMatrix)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("loop needs at least one term"));
        }
        for (_, m) in &terms {
            if m.shape() != (n + k, n + k) {
                return Err(Error::DimensionMismatch { expected: (n + k, n + k), got: m.shape() });
            }
        }
        let out = TrigLoop { n, k, terms };
        let defect = (&out.matrix(0.0) - &out.matrix(2.0 * PI)).max_abs();
        if defect > 1e-12 * out.scale() {
            return Err(Error::InvalidArgument("loop does not close"));
        }
        Ok(out)
    }

    /// `P(t) = A0 + A1 e^{it} + A1* e^{-it}` with constant borders and zero corner.
    pub fn hermitian_pair(a0: &CMatrix, a1: &CMatrix, rminus: &CMatrix, rplus: &CMatrix) -> Result<Self> {
        let n = a0.rows();
        let k = rminus.cols();
        let zero = CMatrix::zeros(k, k);
        let c0 = CMatrix::block2(a0, rminus, rplus, &zero)?;
        let pad = |m: &CMatrix| {
            let mut out = CMatrix::zeros(n + k, n + k);
            out.set_block(0, 0, m);
            out
        };
        TrigLoop::new(n, k, alloc::vec![(0, c0), (1, pad(a1)), (-1, pad(&a1.adjoint()))])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn scale(&self) -> f64 {
        self.terms.iter().map(|(_, m)| m.max_abs()).fold(1.0, f64::max)
    }

    fn sum(&self, t: f64, weight: impl Fn(i32) -> C64) -> CMatrix {
        let mut out = CMatrix::zeros(self.n + self.k, self.n + self.k);
        for (freq, m) in &self.terms {
            let th = *freq as f64 * t;
            out = &out + &m.scale(weight(*freq) * c(th.cos(), th.sin()));
        }
        out
    }

    pub fn matrix(&self, t: f64) -> CMatrix {
        self.sum(t, |_| cr(1.0))
    }

    pub fn derivative(&self, t: f64) -> CMatrix {
        self.sum(t, |f| c(0.0, f as f64))
    }

    /// Disc extension `sum_k s^|k| C_k e^{ikt}`, constant at `s = 0`.
    pub fn radial(&self, t: f64, s: f64) -> CMatrix {
        self.sum(t, |f| cr(s.powi(f.abs())))
    }
}

/// Sampled homotopy `(t, s) -> H(t, s)` with `H(t, 1)` the loop and
/// `H(t, 0)` independent of `t`.
pub type Homotopy<'a> = &'a dyn Fn(f64, f64) -> CMatrix;

pub const CERTIFICATE_TIMES: usize = 17;
pub const CERTIFICATE_RADII: usize = 9;

/// Checks the homotopy on a `17 x 9` grid: every sample invertible with
/// condition below the well-posedness limit, matching the loop at `s = 1`
/// and constant at `s = 0`.
pub fn check_contraction(l: &TrigLoop, h: Homotopy<'_>) -> Result<()> {
    let scale = l.scale();
    let base = h(0.0, 0.0);
    for i in 0..CERTIFICATE_TIMES {
        let t = 2.0 * PI * i as f64 / CERTIFICATE_TIMES as f64;
        for j in 0..CERTIFICATE_RADII {
            let s = j as f64 / (CERTIFICATE_RADII - 1) as f64;
            let m = h(t, s);
            if j == 0 {
                let gap = (&m - &base).max_abs();
                if gap > 1e-12 * scale {
                    return Err(Error::ContractionCertificateFails { t, s, norm: gap });
                }
            }
            if j == CERTIFICATE_RADII - 1 {
                let gap = (&m - &l.matrix(t)).max_abs();
                if gap > 1e-12 * scale {
                    return Err(Error::ContractionCertificateFails { t, s, norm: gap });
                }
            }
            let cond = Lu::factor(&m).map(|lu| lu.condition()).unwrap_or(f64::INFINITY);
            if !(cond < WELL_POSED_LIMIT) {
                return Err(Error::ContractionCertificateFails { t, s, norm: cond });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopReport {
    /// `tr \int P^-1 dP`.
    pub trace_p: C64,
    /// `tr \int E-+^-1 dE-+`.
    pub trace_eff: C64,
    pub difference: f64,
    pub nodes: usize,
}

fn loop_integrands(l: &TrigLoop, t: f64) -> Result<(C64, C64)> {
    let (n, k) = (l.n, l.k);
    let full = l.matrix(t);
    let dfull = l.derivative(t);
    let p = full.sub_matrix(0, 0, n, n);
    let dp = dfull.sub_matrix(0, 0, n, n);
    let lp = Lu::factor(&p).map_err(|_| Error::SingularAtNode { t, s: 1.0 })?;
    let trace_p = lp.solve(&dp)?.trace();
    let (inv, cond) = crate::linops::inverse_with_condition(&full).map_err(|_| Error::SingularAtNode { t, s: 1.0 })?;
    if !(cond < WELL_POSED_LIMIT) {
        return Err(Error::SingularAtNode { t, s: 1.0 });
    }
    // d(inverse) = -inverse d(full) inverse; keep the lower-right block.
    let dinv = -&inv.matmul(&dfull).matmul(&inv);
    let emp = inv.sub_matrix(n, n, k, k);
    let demp = dinv.sub_matrix(n, n, k, k);
    let trace_eff = if k == 0 {
        cr(0.0)
    } else {
        Lu::factor(&emp).map_err(|_| Error::SingularAtNode { t, s: 1.0 })?.solve(&demp)?.trace()
    };
    Ok((trace_p, trace_eff))
}

/// Both sides of `tr \int P^-1 dP = tr \int E-+^-1 dE-+` over `[0, 2 pi)`
/// by the periodic trapezoid rule with node doubling, after checking the
/// contraction certificate.
pub fn loop_trace_identity(l: &TrigLoop, h: Homotopy<'_>) -> Result<LoopReport> {
    check_contraction(l, h)?;
    let eval = |n: usize| -> Result<(C64, C64)> {
        let mut sp = cr(0.0);
        let mut se = cr(0.0);
        for j in 0..n {
            let (a, b) = loop_integrands(l, 2.0 * PI * j as f64 / n as f64)?;
            sp += a;
            se += b;
        }
        let w = 2.0 * PI / n as f64;
        Ok((sp * w, se * w))
    };
    let mut n = 16;
    let mut prev = eval(n)?;
    loop {
        n *= 2;
        let next = eval(n)?;
        let dp = (next.0 - prev.0).norm();
        let de = (next.1 - prev.1).norm();
        let tol = TRACE_QUADRATURE_TOL * next.0.norm().max(next.1.norm()).max(1.0);
        if dp <= tol && de <= tol {
            return Ok(LoopReport { trace_p: next.0, trace_eff: next.1, difference: (next.0 - next.1).norm(), nodes: n });
        }
        if n >= crate::linops::QUADRATURE_CAP {
            return Err(Error::NonConvergent { last: (next.0.re, next.0.im), previous: (prev.0.re, prev.0.im) });
        }
        prev = next;
    }
}

/// Decay certificate of a function sampled on a lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// `|g(x)| <= constant exp(-rate x^2)`.
    Gaussian { constant: f64, rate: f64 },
    /// `|g(x)| <= constant |x|^-rate` for `|x| >= 1`, `rate > 1`.
    Power { constant: f64, rate: f64 },
    /// `g(x) = 0` for `|x| >= radius`.
    Support { radius: f64 },
    /// `g(n) = 0` at every nonzero integer `n`.
    IntegerZeros,
}

impl Decay {
    /// Bound on `sum_{|j| > t} |g(j spacing)|`.
    pub fn lattice_tail(&self, spacing: f64, t: usize) -> f64 {
        let t = t as f64;
        match *self {
            Decay::Gaussian { constant, rate } => {
                let a = rate * spacing * spacing;
                let first = (-a * (t + 1.0) * (t + 1.0)).exp();
                2.0 * constant * first / (1.0 - (-a * (2.0 * t + 3.0)).exp())
            }
            Decay::Power { constant, rate } if rate > 1.0 && t * spacing >= 1.0 => {
                2.0 * constant * spacing.powf(-rate) * t.powf(1.0 - rate) / (rate - 1.0)
            }
            Decay::Power { .. } => f64::INFINITY,
            Decay::Support { radius } => {
                if (t + 1.0) * spacing >= radius {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Decay::IntegerZeros => {
                if spacing.fract() == 0.0 && spacing > 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Real test function `f` with `fhat(xi) = \int f(x) e^{-ix xi} dx`.
pub struct TestFunction {
    f: Box<dyn Fn(f64) -> f64>,
    fhat: Box<dyn Fn(f64) -> C64>,
    pub f_decay: Decay,
    pub fhat_decay: Decay,
}

impl TestFunction {
    pub fn new(
        f: impl Fn(f64) -> f64 + 'static,
        fhat: impl Fn(f64) -> C64 + 'static,
        f_decay: Decay,
        fhat_decay: Decay,
    ) -> Self {
        TestFunction { f: Box::new(f), fhat: Box::new(fhat), f_decay, fhat_decay }
    }

    /// `(sin(pi x) / (pi x))^2`, whose transform is the triangle on `[-2 pi, 2 pi]`.
    pub fn sinc2() -> Self {
        Self::new(
            |x| {
                if x == 0.0 {
                    1.0
                } else {
                    let s = (PI * x).sin() / (PI * x);
                    s * s
                }
            },
            |xi| cr((1.0 - xi.abs() / (2.0 * PI)).max(0.0)),
            Decay::IntegerZeros,
            Decay::Support { radius: 2.0 * PI },
        )
    }

    /// `exp(-pi x^2)`, its own transform up to `xi = 2 pi x`.
    pub fn gaussian() -> Self {
        Self::new(
            |x| (-PI * x * x).exp(),
            |xi| cr((-xi * xi / (4.0 * PI)).exp()),
            Decay::Gaussian { constant: 1.0, rate: PI },
            Decay::Gaussian { constant: 1.0, rate: 1.0 / (4.0 * PI) },
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn transform(&self, xi: f64) -> C64 {
        (self.fhat)(xi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonReport {
    /// `sum_{|n| <= T} f(n)`.
    pub lhs: f64,
    /// `sum_{|m| <= T} fhat(2 pi m)`.
    pub rhs_pois: C64,
    /// `(1/2 pi i) sum_{|k| <= N} \int f(x) M^k M'(x) dx` with
    /// `M(x) = exp(2 pi i x)`, or why it was skipped.
    pub rhs_monodromy: core::result::Result<C64, Error>,
    pub lhs_tail: f64,
    pub rhs_tail: f64,
    /// `|I(W) - I(W/2)|` for the real-line integral on `[-W, W]`.
    pub integral_drift: f64,
    pub pois_discrepancy: f64,
    pub monodromy_discrepancy: Option<f64>,
}

/// Node spacing of the monodromy integral; keeps every frequency of the
/// integrand below the aliasing limit of the trapezoid rule.
fn monodromy_step(n: usize) -> f64 {
    1.0 / (4.0 * n as f64 + 4.0)
}

fn monodromy_integral(f: &TestFunction, n: usize, w: f64) -> C64 {
    let delta = monodromy_step(n);
    let half = (w / delta).floor() as i64;
    let ni = n as i64;
    let mut sum = cr(0.0);
    for j in -half..=half {
        let x = j as f64 * delta;
        let fx = f.eval(x);
        if fx == 0.0 {
            continue;
        }
        // M^k M' / (2 pi i) = exp(2 pi i (k + 1) x).
        let mut phase = cr(0.0);
        for k in -ni..=ni {
            let th = 2.0 * PI * (((k + 1) as f64 * x) % 1.0);
            phase += c(th.cos(), th.sin());
        }
        let wgt = if j.abs() == half { 0.5 } else { 1.0 };
        sum += phase * (fx * wgt);
    }
    sum * delta
}

pub fn poisson_verify(f: &TestFunction, n: usize, truncation: usize) -> Result<PoissonReport> {
    if n == 0 || truncation == 0 {
        return Err(Error::InvalidArgument("N and the truncation must be positive"));
    }
    let lhs_tail = f.f_decay.lattice_tail(1.0, truncation);
    let rhs_tail = f.fhat_decay.lattice_tail(2.0 * PI, truncation);
    if lhs_tail + rhs_tail > 1e-10 {
        return Err(Error::TruncationTooShort { tail_bound: lhs_tail + rhs_tail });
    }
    let t = truncation as i64;
    let lhs: f64 = (-t..=t).map(|k| f.eval(k as f64)).sum();
    let rhs_pois: C64 = (-t..=t).map(|m| f.transform(2.0 * PI * m as f64)).sum();
    let limit = 2.0 * PI * n as f64;
    let support = match f.fhat_decay {
        Decay::Support { radius } => radius,
        _ => f64::INFINITY,
    };
    let sampled_ok = (0..=8).all(|j| {
        let xi = limit * (1.0 + j as f64 / 8.0);
        f.transform(xi).norm() <= 1e-14 && f.transform(-xi).norm() <= 1e-14
    });
    let (rhs_monodromy, integral_drift) = if support < limit && sampled_ok {
        let w = truncation as f64;
        let full = monodromy_integral(f, n, w);
        let half = monodromy_integral(f, n, 0.5 * w);
        (Ok(full), (full - half).norm())
    } else {
        (Err(Error::SupportViolation { support, limit }), 0.0)
    };
    let monodromy_discrepancy = rhs_monodromy
        .as_ref()
        .ok()
        .map(|m| (m - cr(lhs)).norm().max((m - rhs_pois).norm()));
    Ok(PoissonReport {
        lhs,
        rhs_pois,
        pois_discrepancy: (rhs_pois - cr(lhs)).norm(),
        rhs_monodromy,
        lhs_tail,
        rhs_tail,
        integral_drift,
        monodromy_discrepancy,
    })
}

const GL_NODES: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] =
    [0.236_926_885_056_189_1, 0.478_628_670_499_366_5, 0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1];

fn gauss(f: &dyn Fn(f64) -> C64, a: f64, b: f64) -> C64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GL_NODES.iter().zip(GL_WEIGHTS).map(|(&x, w)| f(mid + half * x) * (w * half)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionReport {
    /// `\int_0^{2pi} \int_0^x conj(f(x)) f(y) dy dx`.
    pub a: C64,
    /// `\int_0^{2pi} f`.
    pub b: C64,
    /// `||B|^2 - 2 Re A|`.
    pub identity_residual: f64,
    /// Real `z` where `Re(A e^{-i pi z / h})` changes sign.
    pub crossings: Vec<f64>,
    /// Largest `|det G(z)|` over the crossings, `G` the 2x2 transfer matrix
    /// `[[-A, conj B], [e^{2 pi i z/h} B, 1 - e^{2 pi i z/h}]]`.
    pub det_at_crossings: f64,
}

/// Cells used for the double integral; discontinuities of `f` at multiples
/// of `2 pi / OBSTRUCTION_CELLS` are resolved exactly.
pub const OBSTRUCTION_CELLS: usize = 512;

fn transfer_det(a: C64, b: C64, z: f64, h: f64) -> C64 {
    let th = 2.0 * PI * z / h;
    let m = c(th.cos(), th.sin());
    -a * (cr(1.0) - m) - b.conj() * m * b
}

pub fn selfadjoint_obstruction(f: &dyn Fn(f64) -> C64, h: f64, z_grid: &[f64]) -> Result<ObstructionReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("h must be positive"));
    }
    let cells = OBSTRUCTION_CELLS;
    let dx = 2.0 * PI / cells as f64;
    let mut cumulative = cr(0.0);
    let mut a = cr(0.0);
    for j in 0..cells {
        let x0 = j as f64 * dx;
        let x1 = x0 + dx;
        let start = cumulative;
        let inner = |x: f64| f(x).conj() * (start + gauss(f, x0, x));
        a += gauss(&inner, x0, x1);
        cumulative += gauss(f, x0, x1);
    }
    let b = cumulative;
    let scale = b.norm_sqr().max(a.norm()).max(1.0);
    let identity_residual = (b.norm_sqr() - 2.0 * a.re).abs();
    if identity_residual > 1e-8 * scale {
        return Err(Error::InvalidArgument("quadrature too coarse for the profile"));
    }
    let phi = |z: f64| {
        let th = -PI * z / h;
        (a * c(th.cos(), th.sin())).re
    };
    let mut crossings = Vec::new();
    for pair in z_grid.windows(2) {
        let (mut lo, mut hi) = (pair[0], pair[1]);
        let (flo, fhi) = (phi(lo), phi(hi));
        if flo == 0.0 {
            crossings.push(lo);
            continue;
        }
        if flo * fhi < 0.0 {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if phi(mid) * flo > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            crossings.push(0.5 * (lo + hi));
        }
    }
    let det_at_crossings = crossings.iter().map(|&z| transfer_det(a, b, z, h).norm()).fold(0.0, f64::max);
    Ok(ObstructionReport { a, b, identity_residual, crossings, det_at_crossings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grushin_core::{jordan_block, jordan_borders};
    use crate::linops::eigenvalues;
    use crate::rng::{complex_gaussian_matrix, seeded};
    use alloc::vec;

    #[test]
    fn scalar_counts() {
        let f = HolomorphicFamily::pencil(CMatrix::zeros(1, 1));
        let c1 = Contour::circle(cr(0.0), 1.0, 16).unwrap();
        assert_eq!(count_direct(&f, &c1).unwrap().count, 1);
        let g = HolomorphicFamily::new(|z| CMatrix::from_diag(&[(z - cr(0.2)) * (z - c(0.0, 0.3))]));
        assert_eq!(count_direct(&g, &c1).unwrap().count, 2);
        let far = Contour::circle(cr(5.0), 1.0, 16).unwrap();
        assert_eq!(count_direct(&g, &far).unwrap().count, 0);
    }

    #[test]
    fn random_pencil_matches_eigensolver() {
        let mut rng = seeded(12);
        let a = complex_gaussian_matrix(&mut rng, 12, 12);
        let eig = eigenvalues(&a).unwrap();
        let contour = Contour::circle(c(0.3, -0.2), 2.1, 32).unwrap();
        let inside = eig.iter().filter(|z| (*z - c(0.3, -0.2)).norm() < 2.1).count() as i64;
        let f = HolomorphicFamily::pencil(a);
        assert_eq!(count_direct(&f, &contour).unwrap().count, inside);
    }

    #[test]
    fn jordan_effective_count() {
        let (rm, rp) = jordan_borders(5);
        let f = HolomorphicFamily::pencil(jordan_block(5));
        let contour = Contour::circle(cr(0.0), 0.5, 16).unwrap();
        let b = Borders::new(rm, rp);
        assert_eq!(count_effective(&f, &b, &contour).unwrap().count, 5);
        assert_eq!(count_direct(&f, &contour).unwrap().count, 5);
        let empty = Contour::circle(cr(3.0), 0.5, 16).unwrap();
        assert_eq!(count_effective(&f, &b, &empty).unwrap().count, 0);
    }

    #[test]
    fn feshbach_effective_count() {
        let h = CMatrix::from_real_rows(&[&[1.0, 0.1], &[0.1, 3.0]]);
        let inside = eigenvalues(&h).unwrap().iter().filter(|z| (*z - cr(1.0)).norm() < 0.5).count() as i64;
        let split = Split::new(vec![0], 2).unwrap();
        let f = HolomorphicFamily::pencil(h);
        let contour = Contour::circle(cr(1.0), 0.5, 16).unwrap();
        let r = count_effective(&f, &Borders::coordinate(&split, 2), &contour).unwrap();
        assert_eq!((r.count, inside), (1, 1));
    }

    #[test]
    fn weighted_sum_of_eigenvalues() {
        let f = HolomorphicFamily::pencil(CMatrix::from_diag(&[cr(0.2), cr(0.7)]));
        let b = Borders::singular_directions(&CMatrix::from_diag(&[cr(0.2), cr(0.7)]), 2).unwrap();
        let w = weighted_trace(&f, &b, &Contour::circle(cr(0.0), 1.0, 16).unwrap(), |z| z).unwrap();
        assert!((w.direct - cr(0.9)).norm() < 1e-10);
        assert!(w.difference < 1e-8);
    }

    #[test]
    fn perturbed_jordan_cloud_sum() {
        let mut a = jordan_block(3);
        a[(2, 0)] = cr(1e-3);
        let (rm, rp) = jordan_borders(3);
        let f = HolomorphicFamily::pencil(a);
        let w = weighted_trace(&f, &Borders::new(rm, rp), &Contour::circle(cr(0.0), 0.5, 16).unwrap(), |z| z).unwrap();
        assert!(w.direct.norm() < 1e-8 && w.effective.norm() < 1e-8, "{w:?}");
    }

    #[test]
    fn finite_difference_fallback() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, -1.0]]);
        let aa = a.clone();
        let f = HolomorphicFamily::new(move |z| &aa.scale(z * z) - &CMatrix::identity(2));
        let d = f.derivative(c(0.5, 0.25));
        assert!((&d - &a.scale(c(1.0, 0.5))).max_abs() < 1e-9);
        let exact = HolomorphicFamily::pencil(a);
        assert!(exact.consistency(&[cr(0.0), c(1.0, 1.0), c(-2.0, 0.5)]).unwrap() < 1e-6);
    }

    fn zero_radial(l: &TrigLoop) -> impl Fn(f64, f64) -> CMatrix + '_ {
        move |t, s| l.radial(t, s)
    }

    #[test]
    fn constant_and_scalar_loops() {
        let c0 = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 0.0]]);
        let l = TrigLoop::new(1, 1, vec![(0, c0)]).unwrap();
        let r = loop_trace_identity(&l, &zero_radial(&l)).unwrap();
        assert!(r.trace_p.norm() < 1e-14 && r.trace_eff.norm() < 1e-14);

        let c0 = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let c1 = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let l = TrigLoop::new(1, 1, vec![(0, c0), (1, c1)]).unwrap();
        let r = loop_trace_identity(&l, &zero_radial(&l)).unwrap();
        assert!((r.trace_p - two_pi_i()).norm() < 1e-12);
        assert!((r.trace_eff - two_pi_i()).norm() < 1e-12);
    }

    #[test]
    fn broken_certificate_is_reported() {
        let c0 = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let c1 = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let l = TrigLoop::new(1, 1, vec![(0, c0), (1, c1)]).unwrap();
        let wrong = |t: f64, s: f64| l.radial(t, s).scale(cr(s));
        assert!(matches!(loop_trace_identity(&l, &wrong), Err(Error::ContractionCertificateFails { .. })));
    }

    #[test]
    fn poisson_sinc2_and_gaussian() {
        let r = poisson_verify(&TestFunction::sinc2(), 2, 20_000).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12);
        assert!((r.rhs_pois - cr(1.0)).norm() < 1e-12);
        let m = r.rhs_monodromy.unwrap();
        assert!((m - cr(1.0)).norm() < 1e-8, "{m}");
        assert!(m.im.abs() < 1e-12);

        let r = poisson_verify(&TestFunction::gaussian(), 2, 10).unwrap();
        assert!((r.lhs - 1.086_434_811_213_308).abs() < 1e-12, "{}", r.lhs);
        assert!(r.pois_discrepancy < 1e-10);
        assert!(matches!(r.rhs_monodromy, Err(Error::SupportViolation { .. })));
        assert!(matches!(
            poisson_verify(&TestFunction::sinc2(), 1, 100),
            Ok(PoissonReport { rhs_monodromy: Err(Error::SupportViolation { .. }), .. })
        ));
    }

    #[test]
    fn obstruction_examples() {
        let grid: Vec<f64> = (0..=400).map(|j| j as f64 * 0.01).collect();
        let r = selfadjoint_obstruction(&|_| cr(1.0), 0.5, &grid).unwrap();
        assert!((r.b - cr(2.0 * PI)).norm() < 1e-12);
        assert!((r.a - cr(2.0 * PI * PI)).norm() < 1e-11);
        assert!(!r.crossings.is_empty() && r.det_at_crossings < 1e-9);

        let r = selfadjoint_obstruction(&|x| cr(x.sin()), 0.5, &grid).unwrap();
        assert!(r.b.norm() < 1e-12 && r.a.re.abs() < 1e-12);

        let r = selfadjoint_obstruction(&|x| cr(if x <= PI { 1.0 } else { 0.0 }), 0.5, &grid).unwrap();
        assert!((r.a - cr(PI * PI / 2.0)).norm() < 1e-12, "{}", r.a);
    }
}
