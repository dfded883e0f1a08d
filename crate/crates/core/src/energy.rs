//! Non-local energies
//! `Lambda_delta(phi, u, (a,b)) = int int phi(|u(y) - u(x)| / delta) * delta / (y - x)^2`
//! and their relatives: total k-hostility, the strip functional over
//! `(c,d) x R`, quadrature for smooth profiles, and the geometric constant
//! `G_d`.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::interaction::InteractionLaw;
use crate::quad::{self, QuadConfig};
use crate::stepfn::{Interval, Piece, StepFunction};

/// How an energy value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyMethod {
    Exact,
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for EnergyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnergyMethod::Exact => "exact",
            EnergyMethod::Quadrature => "quadrature",
            EnergyMethod::MonteCarlo => "montecarlo",
        })
    }
}

/// An energy value, possibly `+inf`, with its method and error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyResult {
    #[serde(serialize_with = "serialize_value")]
    pub value: f64,
    pub method: EnergyMethod,
    pub error_estimate: f64,
}

fn serialize_value<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

impl EnergyResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            method: EnergyMethod::Exact,
            error_estimate: 0.0,
        }
    }

    pub fn infinite() -> Self {
        Self::exact(f64::INFINITY)
    }

    pub fn is_infinite(&self) -> bool {
        self.value == f64::INFINITY
    }

    /// `value` as CSV text: `inf` for the divergent state.
    pub fn value_text(&self) -> String {
        format_value(self.value)
    }
}

/// Formats a float for CSV output with the shortest representation that
/// round-trips: plain decimals for moderate magnitudes, scientific notation
/// otherwise, and `inf` / `-inf` for infinities.
pub fn format_value(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `delta * int_I int_J (y - x)^{-2} dy dx` for intervals with disjoint
/// interiors, `+inf` when they touch.
pub fn rect_interaction(i: Interval, j: Interval, delta: f64) -> Result<EnergyResult> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let (i, j) = if i.lo <= j.lo { (i, j) } else { (j, i) };
    if i.hi > j.lo {
        return Err(Error::OverlappingIntervals {
            a1: i.lo,
            a2: i.hi,
            b1: j.lo,
            b2: j.hi,
        });
    }
    Ok(EnergyResult::exact(delta * log_pair_factor(i.lo, i.hi, j.lo, j.hi)))
}

/// `log[(b1-a1)(b2-a2) / ((b1-a2)(b2-a1))]` for `a1 < a2 <= b1 < b2`,
/// written as `log1p(|I||J| / ((b1-a2)(b2-a1)))`.
fn log_pair_factor(a1: f64, a2: f64, b1: f64, b2: f64) -> f64 {
    let gap = b1 - a2;
    if gap <= 0.0 {
        return f64::INFINITY;
    }
    ((a2 - a1) * (b2 - b1) / (gap * (b2 - a1))).ln_1p()
}

/// Snaps `t` to the nearest integer when within relative `1e-9`, so that
/// lattice-valued jumps hit the thresholds of step laws exactly.
fn snap_to_integer(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        t
    }
}

/// Exact `Lambda_delta(phi, u, (x_0, x_n))` for a step function. The
/// integrand is constant on every rectangle of pieces, so the energy is
/// `2 sum_{i<j} phi(|v_i - v_j| / delta) * rect_interaction(I_i, I_j)`;
/// touching pieces with a positive weight make it diverge.
pub fn lambda_step(law: &InteractionLaw, u: &StepFunction, delta: f64) -> Result<EnergyResult> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let u = u.canonicalize();
    let step_law = law.pca_weights().is_some();
    let pieces: Vec<Piece> = u.pieces().collect();
    let mut terms = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        for (j, q) in pieces.iter().enumerate().skip(i + 1) {
            let mut t = (q.value - p.value).abs() / delta;
            if step_law {
                t = snap_to_integer(t);
            }
            let w = law.evaluate(t);
            if w == 0.0 {
                continue;
            }
            if j == i + 1 {
                return Ok(EnergyResult::infinite());
            }
            terms.push(w * delta * log_pair_factor(p.lo, p.hi, q.lo, q.hi));
        }
    }
    Ok(EnergyResult::exact(2.0 * quad::pairwise_sum(&terms)))
}

/// A nonincreasing kernel `c(sigma)` weighting pairs at distance `sigma`.
#[derive(Clone)]
pub struct HostilityKernel {
    kind: KernelKind,
}

#[derive(Clone)]
enum KernelKind {
    InverseSquare { scale: f64 },
    Custom {
        c: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        singular_at_contact: bool,
    },
}

impl fmt::Debug for HostilityKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            KernelKind::InverseSquare { scale } => write!(f, "HostilityKernel({scale}/sigma^2)"),
            KernelKind::Custom {
                singular_at_contact, ..
            } => write!(f, "HostilityKernel(custom, singular_at_contact={singular_at_contact})"),
        }
    }
}

impl HostilityKernel {
    /// `c(sigma) = scale / sigma^2`.
    pub fn inverse_square(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel scale must be positive, got {scale}")));
        }
        Ok(Self {
            kind: KernelKind::InverseSquare { scale },
        })
    }

    /// A user kernel, checked to be nonnegative and nonincreasing on `probe`.
    /// `singular_at_contact` declares that `int_0 c` diverges, so touching
    /// pieces give an infinite pair energy.
    pub fn custom<F>(c: F, singular_at_contact: bool, probe: &[f64]) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let vals: Vec<f64> = probe.iter().map(|&s| c(s)).collect();
        if let Some(i) = vals.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "kernel is negative or undefined at sigma = {}",
                probe[i]
            )));
        }
        if let Some(i) = vals.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(format!(
                "kernel increases between sigma = {} and {}",
                probe[i],
                probe[i + 1]
            )));
        }
        Ok(Self {
            kind: KernelKind::Custom {
                c: Arc::new(c),
                singular_at_contact,
            },
        })
    }

    pub fn evaluate(&self, sigma: f64) -> f64 {
        match &self.kind {
            KernelKind::InverseSquare { scale } => scale / (sigma * sigma),
            KernelKind::Custom { c, .. } => c(sigma),
        }
    }

    /// `int_I int_J c(y - x) dy dx` for `I` left of `J`.
    fn pair_integral(&self, i: &Piece, j: &Piece) -> (f64, EnergyMethod, f64) {
        match &self.kind {
            KernelKind::InverseSquare { scale } => {
                (scale * log_pair_factor(i.lo, i.hi, j.lo, j.hi), EnergyMethod::Exact, 0.0)
            }
            KernelKind::Custom {
                c,
                singular_at_contact,
            } => {
                let lo = j.lo - i.hi;
                if lo <= 0.0 && *singular_at_contact {
                    return (f64::INFINITY, EnergyMethod::Exact, 0.0);
                }
                // Measure of {x in I : x + sigma in J}: a trapezoid in sigma.
                let (li, lj) = (i.length(), j.length());
                let weight = |s: f64| {
                    let a = i.lo.max(j.lo - s);
                    let b = i.hi.min(j.hi - s);
                    (b - a).max(0.0).min(li.min(lj))
                };
                let hi = j.hi - i.lo;
                let breaks = [j.lo - i.lo, j.hi - i.hi];
                let out = quad::integrate(|s| c(s) * weight(s), lo.max(0.0), hi, &breaks, &QuadConfig::default());
                (out.value, EnergyMethod::Quadrature, out.error)
            }
        }
    }
}

/// Total k-hostility `F_k(c, u) = int int phi_k(|u(y) - u(x)|) c(|y - x|)`
/// of an integer-valued step function.
pub fn hostility(c: &HostilityKernel, u: &StepFunction, k: u32) -> Result<EnergyResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("hostility needs k >= 1".into()));
    }
    let levels = u.lattice_levels(1.0)?;
    let pieces: Vec<Piece> = u.pieces().collect();
    let mut terms = Vec::new();
    let mut err = 0.0;
    let mut method = EnergyMethod::Exact;
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            if (levels[j] - levels[i]).unsigned_abs() <= k as u64 {
                continue;
            }
            let (v, m, e) = c.pair_integral(&pieces[i], &pieces[j]);
            if v.is_infinite() {
                return Ok(EnergyResult::infinite());
            }
            if m == EnergyMethod::Quadrature {
                method = m;
            }
            terms.push(v);
            err += e;
        }
    }
    Ok(EnergyResult {
        value: 2.0 * quad::pairwise_sum(&terms),
        method,
        error_estimate: 2.0 * err,
    })
}

/// Strip functional
/// `int_c^d dx int_R phi(|u(y) - u(x)| / delta) delta / (y - x)^2 dy`
/// for a nondecreasing lattice-valued step function whose first and last
/// pieces are extended as constants to `-inf` and `+inf`.
///
/// On a piece `(lo, hi)` at level `z`, the inner integral toward `+inf`
/// only sees the first piece with level above `z + k`, starting at `X`,
/// and integrates to `delta / (X - x)`; the integral over the piece is
/// `delta * log((X - lo) / (X - hi))`. The leftward half is symmetric.
pub fn lambda_strip(
    law: &InteractionLaw,
    u: &StepFunction,
    window: Interval,
    delta: f64,
) -> Result<EnergyResult> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let weights = law
        .pca_weights()
        .ok_or_else(|| Error::NotPiecewiseConstant(law.label()))?;
    let u = u.canonicalize();
    let levels = u.lattice_levels(delta)?;
    if let Some(i) = levels.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::NotMonotone {
            at: u.breakpoints()[i + 1],
            prev: u.values()[i],
            next: u.values()[i + 1],
        });
    }
    let mut total = Vec::new();
    for (k_idx, &lambda) in weights.iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        let s = strip_single(&u, &levels, (k_idx + 1) as i64, window, delta);
        if s.is_infinite() {
            return Ok(EnergyResult::infinite());
        }
        total.push(lambda * s);
    }
    Ok(EnergyResult::exact(quad::pairwise_sum(&total)))
}

fn strip_single(u: &StepFunction, levels: &[i64], k: i64, window: Interval, delta: f64) -> f64 {
    let bps = u.breakpoints();
    let n = levels.len();
    let mut terms = Vec::new();
    for p in 0..n {
        let lo = if p == 0 { f64::NEG_INFINITY } else { bps[p] };
        let hi = if p + 1 == n { f64::INFINITY } else { bps[p + 1] };
        let lo = lo.max(window.lo);
        let hi = hi.min(window.hi);
        if !(lo < hi) {
            continue;
        }
        let width = hi - lo;
        // First piece strictly above level z_p + k; it starts at bps[q].
        let q = levels.partition_point(|&z| z <= levels[p] + k);
        if q < n {
            let x_plus = bps[q];
            if x_plus <= hi {
                return f64::INFINITY;
            }
            terms.push(delta * (width / (x_plus - hi)).ln_1p());
        }
        // Last piece strictly below level z_p - k; it ends at bps[r + 1].
        let r = levels.partition_point(|&z| z < levels[p] - k);
        if r > 0 {
            let x_minus = bps[r];
            if x_minus >= lo {
                return f64::INFINITY;
            }
            terms.push(delta * (width / (lo - x_minus)).ln_1p());
        }
    }
    quad::pairwise_sum(&terms)
}

/// Upper bound on the part of the strip functional over `window x R`
/// that lies outside `domain`: with `domain = (a,b)` and `window = (c,d)`,
/// `delta * sup(phi) * [log((b-c)/(b-d)) + log((d-a)/(c-a))]`.
pub fn strip_tail_bound(law: &InteractionLaw, domain: Interval, window: Interval, delta: f64) -> Result<f64> {
    let (a, b, c, d) = (domain.lo, domain.hi, window.lo, window.hi);
    if !(a < c && d < b) {
        return Err(Error::InvalidParameter(format!(
            "window ({c}, {d}) must lie strictly inside the domain ({a}, {b})"
        )));
    }
    let sup = law
        .supremum()
        .ok_or_else(|| Error::InvalidLaw(format!("{} is unbounded", law.label())))?;
    Ok(delta * sup * (((b - c) / (b - d)).ln() + ((d - a) / (c - a)).ln()))
}

/// A Lipschitz profile `u` with its derivative.
pub trait Profile: Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// A Lipschitz constant on `domain`.
    fn lipschitz(&self, domain: Interval) -> f64;
    /// Abscissae where `|u'|` has kinks, used to split quadrature.
    fn kinks(&self, _domain: Interval) -> Vec<f64> {
        Vec::new()
    }
}

/// `u(x) = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub slope: f64,
    pub intercept: f64,
}

impl Profile for Linear {
    fn value(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
    fn derivative(&self, _x: f64) -> f64 {
        self.slope
    }
    fn lipschitz(&self, _domain: Interval) -> f64 {
        self.slope.abs()
    }
}

/// `u(x) = height * sin^2(pi (x - a) / (b - a))` on `(a, b)`: rises from 0
/// to `height` and back, so its total variation is `2 * height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineBump {
    pub support: Interval,
    pub height: f64,
}

impl SineBump {
    pub fn unit() -> Self {
        Self {
            support: Interval { lo: 0.0, hi: 1.0 },
            height: 1.0,
        }
    }

    fn phase(&self, x: f64) -> f64 {
        std::f64::consts::PI * (x - self.support.lo) / self.support.length()
    }
}

impl Profile for SineBump {
    fn value(&self, x: f64) -> f64 {
        let s = self.phase(x).sin();
        self.height * s * s
    }
    fn derivative(&self, x: f64) -> f64 {
        // d/dx sin^2 = sin(2 phase) * pi / L
        self.height * (2.0 * self.phase(x)).sin() * std::f64::consts::PI / self.support.length()
    }
    fn lipschitz(&self, _domain: Interval) -> f64 {
        self.height.abs() * std::f64::consts::PI / self.support.length()
    }
    fn kinks(&self, _domain: Interval) -> Vec<f64> {
        vec![0.5 * (self.support.lo + self.support.hi)]
    }
}

/// `int_a^b |u'|` by adaptive quadrature.
pub fn profile_total_variation(u: &dyn Profile, domain: Interval) -> f64 {
    quad::integrate(
        |x| u.derivative(x).abs(),
        domain.lo,
        domain.hi,
        &u.kinks(domain),
        &QuadConfig::default(),
    )
    .value
}

/// Settings for [`lambda_quad`].
#[derive(Debug, Clone, Copy)]
pub struct LambdaQuadConfig {
    /// Requested absolute error.
    pub tol: f64,
    /// Budget of integrand evaluations.
    pub max_evals: usize,
}

impl Default for LambdaQuadConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_evals: 50_000_000,
        }
    }
}

/// `Lambda_delta(phi, u, (a,b))` for a Lipschitz profile by nested adaptive
/// quadrature. By symmetry the energy is
/// `2 int_a^b dx int_0^{b-x} phi(|u(x+h) - u(x)| / delta) delta / h^2 dh`.
/// For `h < delta / Lip(u)` the argument of `phi` is at most one, where
/// `phi(t) <= a t^2` keeps the integrand bounded; that band uses a fixed
/// composite rule. Beyond the band, the substitution `s = 1/h` turns the
/// kernel into a bounded integrand on a finite range.
pub fn lambda_quad(
    law: &InteractionLaw,
    u: &dyn Profile,
    domain: Interval,
    delta: f64,
    cfg: &LambdaQuadConfig,
) -> Result<EnergyResult> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    let lip = u.lipschitz(domain);
    if !(lip.is_finite()) {
        return Err(Error::InvalidParameter("profile has no finite Lipschitz constant".into()));
    }
    if lip == 0.0 {
        return Ok(EnergyResult::exact(0.0));
    }
    let (a, b) = (domain.lo, domain.hi);
    let band = delta / lip;
    // Reported error is 2 (outer + (b - a) inner); split tol as 0.4 + 0.05.
    let inner_tol = 0.05 * cfg.tol / (b - a);
    let integrand = |x: f64, h: f64| law.evaluate((u.value(x + h) - u.value(x)).abs() / delta);

    let evals = std::sync::atomic::AtomicUsize::new(0);
    let failed = std::sync::atomic::AtomicBool::new(false);
    let inner_err = std::sync::Mutex::new(0.0f64);
    let budget_left = |used: usize| used < cfg.max_evals;

    let inner = |x: f64| -> f64 {
        let span = b - x;
        if span <= 0.0 {
            return 0.0;
        }
        let h0 = band.min(span);
        let (near, near_err) = quad::fixed_composite(|h| integrand(x, h) * delta / (h * h), 0.0, h0, 4);
        let mut total = near;
        let mut err = near_err;
        if h0 < span {
            let used = evals.load(std::sync::atomic::Ordering::Relaxed);
            let icfg = QuadConfig {
                abs_tol: inner_tol,
                rel_tol: 0.0,
                max_evals: cfg.max_evals.saturating_sub(used).clamp(1, 2_000_000),
            };
            // int_{h0}^{span} g(h) delta / h^2 dh = delta int_{1/span}^{1/h0} g(1/s) ds
            let out = quad::integrate(|s| integrand(x, 1.0 / s), 1.0 / span, 1.0 / h0, &[], &icfg);
            evals.fetch_add(out.evals, std::sync::atomic::Ordering::Relaxed);
            if !out.converged {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
            }
            total += delta * out.value;
            err += delta * out.error;
        }
        evals.fetch_add(60, std::sync::atomic::Ordering::Relaxed);
        let mut e = inner_err.lock().expect("not poisoned");
        *e = e.max(err);
        total
    };

    let ocfg = QuadConfig {
        abs_tol: 0.4 * cfg.tol,
        rel_tol: 0.0,
        max_evals: 200_000,
    };
    let mut breaks = u.kinks(domain);
    // The band edge b - band is where the inner range stops containing a far part.
    breaks.push(b - band);
    let out = quad::integrate(
        |x| {
            if failed.load(std::sync::atomic::Ordering::Relaxed)
                || !budget_left(evals.load(std::sync::atomic::Ordering::Relaxed))
            {
                return 0.0;
            }
            inner(x)
        },
        a,
        b,
        &breaks,
        &ocfg,
    );
    let used = evals.load(std::sync::atomic::Ordering::Relaxed);
    let inner_max = *inner_err.lock().expect("not poisoned");
    let error = 2.0 * (out.error + (b - a) * inner_max);
    if failed.load(std::sync::atomic::Ordering::Relaxed) || !budget_left(used) || !out.converged || error > cfg.tol {
        return Err(Error::QuadratureBudget { evals: used, error });
    }
    Ok(EnergyResult {
        value: 2.0 * out.value,
        method: EnergyMethod::Quadrature,
        error_estimate: error,
    })
}

/// Surface area of the unit sphere `S^{d-1}` in `R^d`.
pub fn sphere_area(d: u32) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 2.0) * sphere_area(d - 2),
    }
}

/// `G_d = int_{S^{d-1}} |<v, sigma>| dsigma` for a unit vector `v`.
/// Closed forms for `d <= 3`; Monte Carlo with `samples` Gaussian-normalized
/// directions for `d >= 4`, reporting the standard error.
pub fn geometric_constant(d: u32, samples: usize, seed: u64) -> Result<EnergyResult> {
    match d {
        0 => Err(Error::InvalidParameter("dimension must be at least 1".into())),
        1 => Ok(EnergyResult::exact(2.0)),
        2 => Ok(EnergyResult::exact(4.0)),
        3 => Ok(EnergyResult::exact(2.0 * std::f64::consts::PI)),
        _ => {
            if samples < 2 {
                return Err(Error::InvalidParameter("Monte Carlo needs at least 2 samples".into()));
            }
            const CHUNK: usize = 1 << 14;
            let chunks = samples.div_ceil(CHUNK);
            let partial: Vec<(f64, f64)> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(c as u64);
                    let count = CHUNK.min(samples - c * CHUNK);
                    let mut s1 = 0.0;
                    let mut s2 = 0.0;
                    let mut v = vec![0.0f64; d as usize];
                    for _ in 0..count {
                        for x in v.iter_mut() {
                            *x = StandardNormal.sample(&mut rng);
                        }
                        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        let y = (v[0] / norm).abs();
                        s1 += y;
                        s2 += y * y;
                    }
                    (s1, s2)
                })
                .collect();
            let n = samples as f64;
            let s1 = quad::pairwise_sum(&partial.iter().map(|p| p.0).collect::<Vec<_>>());
            let s2 = quad::pairwise_sum(&partial.iter().map(|p| p.1).collect::<Vec<_>>());
            let mean = s1 / n;
            let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
            let area = sphere_area(d);
            Ok(EnergyResult {
                value: area * mean,
                method: EnergyMethod::MonteCarlo,
                error_estimate: area * (var / n).sqrt(),
            })
        }
    }
}

/// One row of a delta sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub result: EnergyResult,
    /// `value / reference`, when a reference value is known.
    pub ratio: Option<f64>,
}

/// Writes `delta,value,method,error_estimate[,ratio]` rows.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let with_ratio = rows.iter().any(|r| r.ratio.is_some());
    let mut header = vec!["delta", "value", "method", "error_estimate"];
    if with_ratio {
        header.push("ratio");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            format_value(r.delta),
            r.result.value_text(),
            r.result.method.to_string(),
            format_value(r.result.error_estimate),
        ];
        if with_ratio {
            rec.push(r.ratio.map(format_value).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}
