//! Log-sum minimum problems over length tuples.
//!
//! For a tuple `l = (l_1, ..., l_n)` the window sums are
//! `S_{i,k} = l_i + ... + l_{i+k-1}`, and
//! `L_k(l) = sum_{i=1}^{n-k} log(S_{i,k+1}^2 / (S_{i,k} S_{i+1,k}))`.
//! A step-law combination `phi = sum lambda_k phi_k` gives the objective
//! `P_{n,phi} = sum_k lambda_k L_k`, homogeneous of degree zero; its
//! infimum `I_n(phi)` is estimated by [`minimize`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::InteractionLaw;
use crate::quad::pairwise_sum;
use crate::stepfn::LengthTuple;

/// `S_{i,k}` for `i = 1..n-k+1`. Each window is summed left to right, so
/// `S_{i,k+1} = S_{i,k} + l_{i+k}` holds bit for bit.
pub fn window_sums(l: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = l.len();
    if k == 0 {
        return Err(Error::InvalidParameter("window length must be positive".into()));
    }
    if k > n {
        return Err(Error::WindowTooLong { n, k });
    }
    Ok((0..=n - k).map(|i| window(l, i, k)).collect())
}

#[inline]
fn window(l: &[f64], start: usize, len: usize) -> f64 {
    l[start..start + len].iter().fold(0.0, |acc, &x| acc + x)
}

/// Whether `l` has no `k` consecutive zero entries (every `S_{i,k} > 0`).
/// Tuples shorter than `k` contain no full window and are accepted.
pub fn in_domain(l: &[f64], k: usize) -> bool {
    if k == 0 {
        return false;
    }
    let mut run = 0usize;
    for &x in l {
        if x > 0.0 {
            run = 0;
        } else {
            run += 1;
            if run >= k {
                return false;
            }
        }
    }
    true
}

fn check_domain(l: &[f64], k: usize) -> Result<()> {
    let n = l.len();
    if k == 0 {
        return Err(Error::InvalidParameter("window length must be positive".into()));
    }
    if n < k + 1 {
        return Err(Error::WindowTooLong { n, k: k + 1 });
    }
    if let Some(x) = l.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidParameter(format!("length {x} is not a finite nonnegative number")));
    }
    let mut run = 0usize;
    for (i, &x) in l.iter().enumerate() {
        if x > 0.0 {
            run = 0;
        } else {
            run += 1;
            if run >= k {
                return Err(Error::OutsideDomain { n, k, index: i + 2 - k });
            }
        }
    }
    Ok(())
}

/// The summands of `L_k`, each written as
/// `log1p(l_{i+k} / S_{i,k}) + log1p(l_i / S_{i+1,k})`.
pub fn log_sum_terms(l: &[f64], k: usize) -> Result<Vec<f64>> {
    check_domain(l, k)?;
    let n = l.len();
    let s = window_sums(l, k)?;
    Ok((0..n - k)
        .map(|i| (l[i + k] / s[i]).ln_1p() + (l[i] / s[i + 1]).ln_1p())
        .collect())
}

/// `L_k(l)`.
pub fn log_sum(l: &[f64], k: usize) -> Result<f64> {
    Ok(pairwise_sum(&log_sum_terms(l, k)?))
}

/// Summands of `L_{k,p}`:
/// `(-2 S_{i,k+1}^{1-p} + S_{i,k}^{1-p} + S_{i+1,k}^{1-p}) / (p - 1)`,
/// evaluated through `expm1` so the `p -> 1` limit stays accurate.
pub fn power_sum_terms(l: &[f64], k: usize, p: f64) -> Result<Vec<f64>> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p must exceed 1, got {p}")));
    }
    check_domain(l, k)?;
    let n = l.len();
    let s = window_sums(l, k)?;
    let q = p - 1.0;
    let f = |x: f64| (-q * x.ln()).exp_m1();
    Ok((0..n - k)
        .map(|i| {
            let big = s[i] + l[i + k];
            (-2.0 * f(big) + f(s[i]) + f(s[i + 1])) / q
        })
        .collect())
}

/// `L_{k,p}(l)`.
pub fn power_sum(l: &[f64], k: usize, p: f64) -> Result<f64> {
    Ok(pairwise_sum(&power_sum_terms(l, k, p)?))
}

/// Both sides of the telescopic inequality
/// `sum_{j=a}^b L_j >= sum_{i=1}^{n-b} log(S_{i,b+1}^2 / (S_{i,a} S_{i+b-a+1,a}))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelescopicReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Evaluates the telescopic inequality for `a <= b <= n - 1`. When `b = a`
/// both sides are computed with identical operations, so the margin is 0.
pub fn verify_telescopic(l: &[f64], a: usize, b: usize) -> Result<TelescopicReport> {
    let n = l.len();
    if a == 0 || a > b || b + 1 > n {
        return Err(Error::InvalidParameter(format!(
            "telescopic check needs 1 <= a <= b <= n-1 (a={a}, b={b}, n={n})"
        )));
    }
    check_domain(l, a)?;
    let lhs_parts: Vec<f64> = (a..=b).map(|j| log_sum(l, j)).collect::<Result<_>>()?;
    let lhs = pairwise_sum(&lhs_parts);
    let w = b - a + 1;
    let terms: Vec<f64> = (0..n - b)
        .map(|i| {
            let s_ia = window(l, i, a);
            let s_tail = window(l, i + w, a);
            (window(l, i + a, w) / s_ia).ln_1p() + (window(l, i, w) / s_tail).ln_1p()
        })
        .collect();
    let rhs = pairwise_sum(&terms);
    Ok(TelescopicReport {
        lhs,
        rhs,
        margin: lhs - rhs,
    })
}

/// `(n - 2^j + 1) * 2 log 2`: lower bound on the sum of `L_k` over the
/// dyadic block `2^{j-1} <= k <= 2^j - 1`, valid for `n >= 2^j`.
pub fn block_lower_bound(n: usize, j: u32) -> f64 {
    let width = 1usize << j;
    (n as f64 - width as f64 + 1.0) * 2.0 * std::f64::consts::LN_2
}

/// `sum_j a_j (n - 2^j + 1) 2 log 2`, a lower bound on `P_{n,phi}` for a
/// packaged dyadic law, valid for `n >= 2^m`.
pub fn package_lower_bound(n: usize, packages: &[f64]) -> f64 {
    pairwise_sum(
        &packages
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, a)| a * block_lower_bound(n, j as u32 + 1))
            .collect::<Vec<_>>(),
    )
}

/// `P_{n,phi}` for a fixed `n` and step-law weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinProblem {
    n: usize,
    weights: Vec<f64>,
    mu: usize,
}

impl MinProblem {
    pub fn new(law: &InteractionLaw, n: usize) -> Result<Self> {
        let weights = law
            .pca_weights()
            .ok_or_else(|| Error::NotPiecewiseConstant(law.label()))?;
        Self::from_weights(weights, n)
    }

    pub fn from_weights(mut weights: Vec<f64>, n: usize) -> Result<Self> {
        while weights.last() == Some(&0.0) {
            weights.pop();
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let mu = crate::interaction::min_support_index(&weights)?;
        let m = weights.len();
        if n < m + 1 {
            return Err(Error::InvalidParameter(format!("need n >= m + 1 = {} (got n = {n})", m + 1)));
        }
        Ok(Self { n, weights, mu })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Smallest index with a positive weight.
    pub fn mu(&self) -> usize {
        self.mu
    }

    /// Largest index with a positive weight.
    pub fn m(&self) -> usize {
        self.weights.len()
    }

    fn active(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, &w)| (i + 1, w))
    }

    /// `P_{n,phi}(l) = sum_k lambda_k L_k(l)` on `D_{n,mu}`.
    pub fn objective(&self, l: &[f64]) -> Result<f64> {
        if l.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "tuple has {} entries, problem has n = {}",
                l.len(),
                self.n
            )));
        }
        check_domain(l, self.mu)?;
        let parts: Vec<f64> = self
            .active()
            .map(|(k, w)| log_sum(l, k).map(|v| w * v))
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&parts))
    }

    /// Objective and its gradient with respect to `s_i = log l_i`.
    fn value_and_log_gradient(&self, s: &[f64], grad: &mut [f64]) -> Option<f64> {
        let n = self.n;
        let l: Vec<f64> = s.iter().map(|x| x.exp()).collect();
        let value = self.objective(&l).ok()?;
        let mut diff = vec![0.0; n + 1];
        let mut add = |start: usize, len: usize, c: f64| {
            diff[start] += c;
            diff[start + len] -= c;
        };
        for (k, w) in self.active() {
            for i in 0..n - k {
                let s_k = window(&l, i, k);
                let s_next = window(&l, i + 1, k);
                let s_big = s_k + l[i + k];
                add(i, k + 1, 2.0 * w / s_big);
                add(i, k, -w / s_k);
                add(i + 1, k, -w / s_next);
            }
        }
        let mut acc = 0.0;
        for i in 0..n {
            acc += diff[i];
            grad[i] = acc * l[i];
        }
        Some(value)
    }
}

/// Settings for [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizeConfig {
    /// Number of random smooth starts.
    pub starts: usize,
    pub seed: u64,
    /// Iteration cap per smooth start.
    pub max_iters: usize,
    /// Periodic 0/1 seeds are tried for every period up to
    /// `min(m + 1, pattern_period_cap)`.
    pub pattern_period_cap: usize,
    pub polish: bool,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            seed: DEFAULT_SEED,
            max_iters: 400,
            pattern_period_cap: 12,
            polish: true,
        }
    }
}

/// Default seed for every randomized routine.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Summary of one smooth start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartTrace {
    pub tag: String,
    pub iterations: usize,
    pub initial: f64,
    pub final_value: f64,
    /// Whether the accepted objective values never increased.
    pub monotone: bool,
    /// Accepted objective values, truncated to the first 16 and the last one.
    pub values: Vec<f64>,
}

/// Best certificate found by [`minimize`]: an upper bound on `I_n(phi)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinResult {
    pub n: usize,
    pub value: f64,
    /// Minimizer normalized to unit sum.
    pub minimizer: LengthTuple,
    /// Tag of the winning seed: `period-p` or `start-i`.
    pub winner: String,
    /// Set when a periodic seed won.
    pub pattern: Option<String>,
    pub starts: usize,
    pub patterns_evaluated: usize,
    pub traces: Vec<StartTrace>,
}

fn minimal_period(bits: &[bool]) -> usize {
    let p = bits.len();
    (1..=p)
        .find(|&d| p % d == 0 && (0..p).all(|i| bits[i] == bits[i % d]))
        .unwrap_or(p)
}

struct Candidate {
    tag: String,
    pattern: bool,
    value: f64,
    l: Vec<f64>,
}

/// Estimates `I_n(phi)`: periodic 0/1 seeds (evaluated exactly, zeros
/// included), multi-start L-BFGS in log coordinates, then coordinate
/// polishing on the support of the best seeds. Ties go to the seed found
/// first, and periodic seeds come first.
pub fn minimize(pb: &MinProblem, cfg: &MinimizeConfig) -> MinResult {
    let n = pb.n;
    let mut candidates: Vec<Candidate> = Vec::new();

    // Periodic patterns.
    let cap = (pb.m() + 1).min(cfg.pattern_period_cap).min(n).max(1);
    let mut patterns_evaluated = 0;
    for p in 1..=cap {
        let found: Vec<Candidate> = (1u32..(1u32 << p))
            .into_par_iter()
            .filter_map(|mask| {
                let bits: Vec<bool> = (0..p).map(|i| mask >> i & 1 == 1).collect();
                if minimal_period(&bits) != p {
                    return None;
                }
                let l: Vec<f64> = (0..n).map(|i| if bits[i % p] { 1.0 } else { 0.0 }).collect();
                let value = pb.objective(&l).ok()?;
                Some(Candidate {
                    tag: format!("period-{p}"),
                    pattern: true,
                    value,
                    l,
                })
            })
            .collect();
        patterns_evaluated += found.len();
        candidates.extend(found);
    }

    // Smooth random starts.
    let runs: Vec<(Candidate, StartTrace)> = (0..cfg.starts)
        .into_par_iter()
        .filter_map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(idx as u64);
            let s0: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let tag = format!("start-{idx}");
            let (s, trace) = lbfgs(pb, s0, cfg.max_iters)?;
            let l: Vec<f64> = s.iter().map(|x| x.exp()).collect();
            let value = *trace.last()?;
            let monotone = trace.windows(2).all(|w| w[1] <= w[0]);
            let mut values: Vec<f64> = trace.iter().take(16).copied().collect();
            if trace.len() > 16 {
                values.push(value);
            }
            Some((
                Candidate {
                    tag: tag.clone(),
                    pattern: false,
                    value,
                    l,
                },
                StartTrace {
                    tag,
                    iterations: trace.len() - 1,
                    initial: trace[0],
                    final_value: value,
                    monotone,
                    values,
                },
            ))
        })
        .collect();
    let mut traces = Vec::with_capacity(runs.len());
    for (c, t) in runs {
        candidates.push(c);
        traces.push(t);
    }

    let better = |a: f64, b: f64| a < b - 1e-12 * b.abs().max(1.0);
    let pick = |cands: &[Candidate], want_pattern: bool| -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, c) in cands.iter().enumerate() {
            if c.pattern != want_pattern {
                continue;
            }
            if best.is_none_or(|b| better(c.value, cands[b].value)) {
                best = Some(i);
            }
        }
        best
    };

    let mut finalists: Vec<usize> = [pick(&candidates, true), pick(&candidates, false)]
        .into_iter()
        .flatten()
        .collect();
    finalists.sort();
    if cfg.polish {
        for &i in &finalists {
            let (l, v) = polish(pb, &candidates[i].l, candidates[i].value);
            candidates[i].l = l;
            candidates[i].value = v;
        }
    }
    let mut best = finalists[0];
    for &i in &finalists[1..] {
        if better(candidates[i].value, candidates[best].value) {
            best = i;
        }
    }
    let winner = &candidates[best];
    let minimizer = LengthTuple::new(winner.l.clone())
        .expect("optimizer keeps lengths nonnegative")
        .normalized();
    let value = pb.objective(&minimizer).unwrap_or(winner.value);
    MinResult {
        n,
        value,
        minimizer,
        winner: winner.tag.clone(),
        pattern: winner.pattern.then(|| winner.tag.clone()),
        starts: cfg.starts,
        patterns_evaluated,
        traces,
    }
}

const S_FLOOR: f64 = -600.0;

/// L-BFGS with Armijo backtracking in log coordinates. Returns the final
/// point and the accepted objective values.
fn lbfgs(pb: &MinProblem, mut s: Vec<f64>, max_iters: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    const HISTORY: usize = 8;
    let n = s.len();
    let mut g = vec![0.0; n];
    let mut f = pb.value_and_log_gradient(&s, &mut g)?;
    let mut trace = vec![f];
    let mut hist: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = std::collections::VecDeque::new();
    let mut g_new = vec![0.0; n];
    let mut stall = 0;
    for _ in 0..max_iters {
        let gnorm = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if gnorm < 1e-12 {
            break;
        }
        // Two-loop recursion.
        let mut d: Vec<f64> = g.iter().map(|x| -x).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (sk, yk, rho) in hist.iter().rev() {
            let a = rho * dot(sk, &d);
            for (di, yi) in d.iter_mut().zip(yk) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((sk, yk, _)) = hist.back() {
            let gamma = dot(sk, yk) / dot(yk, yk);
            for di in d.iter_mut() {
                *di *= gamma;
            }
        } else {
            let scale = 1.0 / gnorm;
            for di in d.iter_mut() {
                *di *= scale.min(1.0);
            }
        }
        for ((sk, yk, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yk, &d);
            for (di, si) in d.iter_mut().zip(sk) {
                *di += (a - b) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            d = g.iter().map(|x| -x / gnorm).collect();
            slope = dot(&g, &d);
            hist.clear();
        }
        let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut t = if dmax > 4.0 { 4.0 / dmax } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = s.iter().zip(&d).map(|(a, b)| (a + t * b).max(S_FLOOR)).collect();
            if let Some(fv) = pb.value_and_log_gradient(&trial, &mut g_new) {
                if fv <= f + 1e-4 * t * slope {
                    accepted = Some((trial, fv));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((mut trial, fv)) = accepted else {
            break;
        };
        let sk: Vec<f64> = trial.iter().zip(&s).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sk, &yk);
        if sy > 1e-16 {
            if hist.len() == HISTORY {
                hist.pop_front();
            }
            hist.push_back((sk, yk, 1.0 / sy));
        }
        // Degree-zero homogeneity: shift so the largest coordinate is 0.
        let top = trial.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        for x in trial.iter_mut() {
            *x = (*x - top).max(S_FLOOR);
        }
        let decrease = f - fv;
        s = trial;
        f = fv;
        std::mem::swap(&mut g, &mut g_new);
        trace.push(f);
        if decrease <= 1e-15 * f.abs().max(1.0) {
            stall += 1;
            if stall >= 3 {
                break;
            }
        } else {
            stall = 0;
        }
    }
    Some((s, trace))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coordinate descent by golden-section search on `log l_j` over the
/// support, followed by an attempt to zero out negligible entries.
fn polish(pb: &MinProblem, l0: &[f64], v0: f64) -> (Vec<f64>, f64) {
    let mut l = l0.to_vec();
    let mut v = v0;
    let eval = |l: &[f64]| pb.objective(l).unwrap_or(f64::INFINITY);
    for _sweep in 0..30 {
        let start = v;
        for j in 0..l.len() {
            if l[j] <= 0.0 {
                continue;
            }
            let base = l[j].ln();
            let mut trial = l.clone();
            let mut f_at = |x: f64| {
                trial[j] = (base + x).exp();
                eval(&trial)
            };
            let (x, fx) = golden_section(&mut f_at, -4.0, 4.0, 40);
            if fx < v {
                l[j] = (base + x).exp();
                v = fx;
            }
        }
        if start - v <= 1e-14 * v.abs().max(1.0) {
            break;
        }
    }
    let top = l.iter().fold(0.0f64, |m, &x| m.max(x));
    for j in 0..l.len() {
        if l[j] > 0.0 && l[j] < 1e-8 * top {
            let mut trial = l.clone();
            trial[j] = 0.0;
            let fv = eval(&trial);
            if fv <= v {
                l = trial;
                v = fv;
            }
        }
    }
    (l, v)
}

fn golden_section(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
