//! Interaction laws: the weight functions that decide how much a pair of
//! points contributes to the non-local energy.
//!
//! A law is a nondecreasing, bounded map `[0, inf) -> [0, inf)` with
//! `phi(t) <= a t^2` near the origin. The variants below cover the step
//! laws `phi_k`, their nonnegative combinations (optionally constrained to be
//! constant on dyadic packages `[2^{j-1}, 2^j - 1]`), the affine ramp
//! `theta`, dyadic piecewise-affine laws built from a sequence, rescalings
//! `alpha * phi(beta t)`, and piecewise-polynomial tabulated laws.
//!
//! Scale factors `N(phi) = int_0^inf phi(t) / t^2 dt` are exact (as
//! rationals) for the step-based variants, closed-form for the ramp, a
//! series for the dyadic laws, and adaptive quadrature for tabulated laws.

mod dyadic;
mod spec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use dyadic::{DyadicSequence, LeftFill, RightFill};
pub use spec::parse_law_spec;

use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};

/// An admissible interaction law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", try_from = "LawRepr")]
pub enum InteractionLaw {
    /// `phi_k`: zero on `[0, k]`, one on `(k, inf)`.
    Model { k: u32 },
    /// `sum_k weights[k-1] * phi_k`.
    PiecewiseConstant { weights: Vec<f64> },
    /// `sum_j packages[j-1] * sum_{k=2^{j-1}}^{2^j-1} phi_k`.
    PackagedDyadic { packages: Vec<f64> },
    /// Zero on `[0,1]`, `t - 1` on `[1,2]`, one on `[2, inf)`.
    AffineTheta,
    /// Piecewise affine between the nodes `(2^z, f(z))`, zero at the origin.
    DyadicAffine { sequence: DyadicSequence },
    /// `t -> alpha * inner(beta * t)`.
    Scaled {
        inner: Box<InteractionLaw>,
        alpha: f64,
        beta: f64,
    },
    /// Piecewise polynomial in `t`; see [`Tabulated`].
    Tabulated(Tabulated),
}

/// Piecewise-polynomial law. Piece `0` covers `[0, breaks[0]]`, piece `i`
/// covers `(breaks[i-1], breaks[i]]`, and the last piece covers
/// `(breaks[last], inf)`. Coefficients are in ascending powers of `t`.
///
/// Intervals are closed on the right so that a jump at a break point is
/// lower semicontinuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub breaks: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(tag = "variant")]
enum LawRepr {
    Model { k: u32 },
    PiecewiseConstant { weights: Vec<f64> },
    PackagedDyadic { packages: Vec<f64> },
    AffineTheta,
    DyadicAffine { sequence: DyadicSequence },
    Scaled { inner: Box<InteractionLaw>, alpha: f64, beta: f64 },
    Tabulated(Tabulated),
}

impl TryFrom<LawRepr> for InteractionLaw {
    type Error = Error;
    fn try_from(r: LawRepr) -> Result<Self> {
        let law = match r {
            LawRepr::Model { k } => InteractionLaw::Model { k },
            LawRepr::PiecewiseConstant { weights } => InteractionLaw::PiecewiseConstant { weights },
            LawRepr::PackagedDyadic { packages } => InteractionLaw::PackagedDyadic { packages },
            LawRepr::AffineTheta => InteractionLaw::AffineTheta,
            LawRepr::DyadicAffine { sequence } => InteractionLaw::DyadicAffine { sequence },
            LawRepr::Scaled { inner, alpha, beta } => InteractionLaw::Scaled { inner, alpha, beta },
            LawRepr::Tabulated(t) => InteractionLaw::Tabulated(t),
        };
        law.validate()?;
        Ok(law)
    }
}

fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    if let Some((i, x)) = w.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidLaw(format!(
            "{name} entry {} = {x} is not a finite nonnegative number",
            i + 1
        )));
    }
    if !w.iter().any(|&x| x > 0.0) {
        return Err(Error::InvalidLaw(format!("{name} has no positive entry")));
    }
    Ok(())
}

/// Number of integers `k >= 1` with `k < t`.
fn count_below(t: f64) -> u64 {
    if !(t > 1.0) {
        return 0;
    }
    if t >= 9.0e15 {
        return u64::MAX / 2;
    }
    (t.ceil() as u64) - 1
}

fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn rational(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// `H_n = sum_{k=1}^n 1/k` as an exact rational, by binary splitting.
pub fn harmonic_exact(n: u64) -> BigRational {
    if n == 0 {
        return BigRational::zero();
    }
    let (p, q) = harmonic_split(1, n + 1);
    BigRational::new(p, q)
}

/// `sum_{k=a}^{b-1} 1/k = p / q` with `q = a (a+1) ... (b-1)`.
fn harmonic_split(a: u64, b: u64) -> (BigInt, BigInt) {
    if b - a == 1 {
        return (BigInt::one(), BigInt::from(a));
    }
    let mid = a + (b - a) / 2;
    let (p1, q1) = harmonic_split(a, mid);
    let (p2, q2) = harmonic_split(mid, b);
    (p1 * &q2 + p2 * &q1, q1 * q2)
}

/// `H_n` in floating point with compensated summation.
pub fn harmonic_f64(n: u64) -> f64 {
    quad::compensated_sum((1..=n).rev().map(|k| 1.0 / k as f64))
}

/// How a scale factor was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMethod {
    Exact,
    Series,
    Quadrature,
}

/// `N(phi)` with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFactor {
    pub value: f64,
    /// Exact rational value of the stored (binary) weights, when available.
    pub exact: Option<BigRational>,
    pub method: ScaleMethod,
    pub error_estimate: f64,
}

impl ScaleFactor {
    pub fn exact_string(&self) -> Option<String> {
        self.exact.as_ref().map(|r| r.to_string())
    }
}

/// Pass/fail of one admissibility condition with the grid point that
/// witnesses a failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub pass: bool,
    pub witness: Option<f64>,
    pub detail: String,
}

impl Condition {
    fn ok(detail: String) -> Self {
        Self {
            pass: true,
            witness: None,
            detail,
        }
    }
    fn fail(witness: f64, detail: String) -> Self {
        Self {
            pass: false,
            witness: Some(witness),
            detail,
        }
    }
}

/// Grid-certified admissibility report. `a` is the smallest constant with
/// `phi(t) <= a t^2` at every grid point of `(0, 1]`; `b` is the largest
/// value seen (or the structural supremum when larger).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub grid: Vec<f64>,
    pub monotone: Condition,
    pub quadratic_at_origin: Condition,
    pub bounded: Condition,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.monotone.pass && self.quadratic_at_origin.pass && self.bounded.pass
    }

    /// Turns a failing report into an error naming the first failed condition.
    pub fn into_result(self) -> Result<Self> {
        for (name, c) in [
            ("monotonicity", &self.monotone),
            ("quadratic bound at the origin", &self.quadratic_at_origin),
            ("boundedness", &self.bounded),
        ] {
            if !c.pass {
                return Err(Error::CheckFailed(format!(
                    "{name} fails at t = {}: {}",
                    c.witness.unwrap_or(f64::NAN),
                    c.detail
                )));
            }
        }
        Ok(self)
    }
}

impl InteractionLaw {
    pub fn model(k: u32) -> Result<Self> {
        let law = InteractionLaw::Model { k };
        law.validate()?;
        Ok(law)
    }

    pub fn piecewise_constant(weights: Vec<f64>) -> Result<Self> {
        let law = InteractionLaw::PiecewiseConstant { weights };
        law.validate()?;
        Ok(law)
    }

    pub fn packaged_dyadic(packages: Vec<f64>) -> Result<Self> {
        let law = InteractionLaw::PackagedDyadic { packages };
        law.validate()?;
        Ok(law)
    }

    /// `psi_m = sum_{k=1}^{2^m - 1} phi_k`.
    pub fn psi(m: u32) -> Result<Self> {
        if m == 0 || m > 40 {
            return Err(Error::InvalidParameter(format!("psi needs 1 <= m <= 40, got {m}")));
        }
        Self::packaged_dyadic(vec![1.0; m as usize])
    }

    /// `theta_m = sum_{k=2^{m-1}}^{2^m - 1} phi_k`, a single dyadic package.
    pub fn theta_package(m: u32) -> Result<Self> {
        if m == 0 || m > 40 {
            return Err(Error::InvalidParameter(format!("theta_m needs 1 <= m <= 40, got {m}")));
        }
        let mut packages = vec![0.0; m as usize];
        packages[m as usize - 1] = 1.0;
        Self::packaged_dyadic(packages)
    }

    pub fn dyadic_affine(sequence: DyadicSequence) -> Self {
        InteractionLaw::DyadicAffine { sequence }
    }

    pub fn tabulated(breaks: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        let law = InteractionLaw::Tabulated(Tabulated { breaks, pieces });
        law.validate()?;
        Ok(law)
    }

    /// Linear interpolation through `(t_i, v_i)` samples starting at `t_0 = 0`,
    /// constant after the last sample.
    pub fn from_samples(ts: &[f64], vs: &[f64]) -> Result<Self> {
        if ts.len() != vs.len() || ts.len() < 2 || ts[0] != 0.0 {
            return Err(Error::InvalidLaw(
                "samples need matching lengths, at least two points, and t_0 = 0".into(),
            ));
        }
        let mut pieces = Vec::with_capacity(ts.len());
        for i in 0..ts.len() - 1 {
            let slope = (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i]);
            pieces.push(vec![vs[i] - slope * ts[i], slope]);
        }
        pieces.push(vec![vs[vs.len() - 1]]);
        Self::tabulated(ts[1..].to_vec(), pieces)
    }

    /// `phi_eps`: `c eps t^2` on `[0,1]`, `c` on `(1, inf)`, with
    /// `c = 1 / (1 + eps)` so that the scale factor is one.
    pub fn phi_eps(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("phi_eps needs 0 < eps <= 1, got {eps}")));
        }
        let c = phi_eps_normalization(eps);
        Self::tabulated(vec![1.0], vec![vec![0.0, 0.0, c * eps], vec![c]])
    }

    /// `alpha * self(beta t)`.
    pub fn rescale(&self, alpha: f64, beta: f64) -> Result<Self> {
        let law = InteractionLaw::Scaled {
            inner: Box::new(self.clone()),
            alpha,
            beta,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InteractionLaw::Model { k } => {
                if *k == 0 {
                    return Err(Error::InvalidLaw("model law needs k >= 1".into()));
                }
            }
            InteractionLaw::PiecewiseConstant { weights } => check_weights("weights", weights)?,
            InteractionLaw::PackagedDyadic { packages } => {
                check_weights("packages", packages)?;
                if packages.len() > 40 {
                    return Err(Error::InvalidLaw("at most 40 dyadic packages are supported".into()));
                }
            }
            InteractionLaw::AffineTheta | InteractionLaw::DyadicAffine { .. } => {}
            InteractionLaw::Scaled { inner, alpha, beta } => {
                if !(alpha.is_finite() && *alpha > 0.0 && beta.is_finite() && *beta > 0.0) {
                    return Err(Error::InvalidLaw(format!(
                        "rescaling needs alpha > 0 and beta > 0 (got {alpha}, {beta})"
                    )));
                }
                inner.validate()?;
            }
            InteractionLaw::Tabulated(t) => {
                if t.pieces.len() != t.breaks.len() + 1 {
                    return Err(Error::InvalidLaw(format!(
                        "tabulated law needs breaks + 1 pieces ({} breaks, {} pieces)",
                        t.breaks.len(),
                        t.pieces.len()
                    )));
                }
                let mut prev = 0.0;
                for &b in &t.breaks {
                    if !(b.is_finite() && b > prev) {
                        return Err(Error::InvalidLaw(
                            "tabulated breaks must be positive and strictly increasing".into(),
                        ));
                    }
                    prev = b;
                }
                if t.pieces.iter().flatten().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidLaw("non-finite polynomial coefficient".into()));
                }
                if t.pieces.iter().flatten().all(|&c| c == 0.0) {
                    return Err(Error::InvalidLaw("tabulated law is identically zero".into()));
                }
            }
        }
        Ok(())
    }

    /// `phi(t)`. Defined for `t >= 0`; negative arguments are treated as 0.
    pub fn evaluate(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            InteractionLaw::Model { k } => {
                if t > *k as f64 {
                    1.0
                } else {
                    0.0
                }
            }
            InteractionLaw::PiecewiseConstant { weights } => {
                let j = (count_below(t) as usize).min(weights.len());
                weights[..j].iter().sum()
            }
            InteractionLaw::PackagedDyadic { packages } => {
                let below = count_below(t);
                packages
                    .iter()
                    .enumerate()
                    .map(|(j, &a)| {
                        let lo = 1u64 << j; // 2^{j} for package j+1
                        let size = lo;
                        let inside = below.saturating_sub(lo - 1).min(size);
                        a * inside as f64
                    })
                    .sum()
            }
            InteractionLaw::AffineTheta => (t - 1.0).clamp(0.0, 1.0),
            InteractionLaw::DyadicAffine { sequence } => dyadic_eval(sequence, t),
            InteractionLaw::Scaled { inner, alpha, beta } => alpha * inner.evaluate(beta * t),
            InteractionLaw::Tabulated(tab) => {
                let idx = tab.breaks.partition_point(|&b| b < t);
                eval_poly(&tab.pieces[idx], t)
            }
        }
    }

    /// Weights `lambda_1..lambda_m` when the law is a nonnegative
    /// combination of step laws `phi_k` (trailing zeros trimmed).
    pub fn pca_weights(&self) -> Option<Vec<f64>> {
        let mut w = match self {
            InteractionLaw::Model { k } => {
                let mut w = vec![0.0; *k as usize];
                w[*k as usize - 1] = 1.0;
                w
            }
            InteractionLaw::PiecewiseConstant { weights } => weights.clone(),
            InteractionLaw::PackagedDyadic { packages } => expand_packages(packages),
            _ => return None,
        };
        while w.last() == Some(&0.0) {
            w.pop();
        }
        Some(w)
    }

    /// Package weights when the step-law weights are constant on every
    /// dyadic block `[2^{j-1}, 2^j - 1]`.
    pub fn packaged_weights(&self) -> Option<Vec<f64>> {
        if let InteractionLaw::PackagedDyadic { packages } = self {
            return Some(packages.clone());
        }
        let w = self.pca_weights()?;
        let mut packages = Vec::new();
        let mut j = 0usize;
        while (1usize << j) <= w.len() {
            let lo = (1usize << j) - 1;
            let hi = (1usize << (j + 1)) - 1;
            let block: Vec<f64> = (lo..hi).map(|i| w.get(i).copied().unwrap_or(0.0)).collect();
            if block.iter().any(|&x| x != block[0]) {
                return None;
            }
            packages.push(block[0]);
            j += 1;
        }
        Some(packages)
    }

    /// Smallest index `k` with a positive step-law weight.
    pub fn min_support_index(&self) -> Result<usize> {
        let w = self
            .pca_weights()
            .ok_or_else(|| Error::NotPiecewiseConstant(self.label()))?;
        min_support_index(&w)
    }

    /// Expands a packaged law into explicit step-law weights.
    pub fn expand_packaged(&self) -> Result<Self> {
        match self {
            InteractionLaw::PackagedDyadic { packages } => Self::piecewise_constant(expand_packages(packages)),
            other => Err(Error::InvalidParameter(format!(
                "expand_packaged needs a packaged dyadic law, got {}",
                other.label()
            ))),
        }
    }

    /// `sup_t phi(t)`, or `None` when the law is unbounded.
    pub fn supremum(&self) -> Option<f64> {
        match self {
            InteractionLaw::Model { .. } | InteractionLaw::AffineTheta => Some(1.0),
            InteractionLaw::PiecewiseConstant { weights } => Some(weights.iter().sum()),
            InteractionLaw::PackagedDyadic { packages } => Some(
                packages
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * (1u64 << j) as f64)
                    .sum(),
            ),
            InteractionLaw::DyadicAffine { sequence } => Some(sequence.supremum()),
            InteractionLaw::Scaled { inner, alpha, .. } => inner.supremum().map(|s| alpha * s),
            InteractionLaw::Tabulated(t) => {
                let last = t.pieces.last().expect("validated");
                if last.iter().skip(1).all(|&c| c == 0.0) {
                    Some(last.first().copied().unwrap_or(0.0))
                } else {
                    None
                }
            }
        }
    }

    /// Whether `phi(t) / t^2` stays bounded as `t -> 0`, decided from the
    /// variant's structure.
    pub fn quadratic_at_origin(&self) -> bool {
        match self {
            InteractionLaw::Tabulated(t) => {
                let first = &t.pieces[0];
                first.iter().take(2).all(|&c| c == 0.0)
            }
            InteractionLaw::Scaled { inner, .. } => inner.quadratic_at_origin(),
            _ => true,
        }
    }

    /// Points where the law may fail to be smooth, in increasing order.
    /// For dyadic laws the list stops where `f` becomes negligible.
    pub fn nodes(&self) -> Vec<f64> {
        match self {
            InteractionLaw::Model { k } => vec![*k as f64],
            InteractionLaw::PiecewiseConstant { weights } => (1..=weights.len()).map(|k| k as f64).collect(),
            InteractionLaw::PackagedDyadic { packages } => {
                let m = (1usize << packages.len()) - 1;
                (1..=m).map(|k| k as f64).collect()
            }
            InteractionLaw::AffineTheta => vec![1.0, 2.0],
            InteractionLaw::DyadicAffine { sequence } => {
                let lo = sequence.effective_first_z().max(-1000);
                let hi = sequence.last_z() as i64;
                (lo..=hi).map(|z| 2f64.powi(z as i32)).collect()
            }
            InteractionLaw::Scaled { inner, beta, .. } => inner.nodes().into_iter().map(|x| x / beta).collect(),
            InteractionLaw::Tabulated(t) => t.breaks.clone(),
        }
    }

    /// `N(phi) = int_0^inf phi(t) / t^2 dt`.
    pub fn scale_factor(&self) -> Result<ScaleFactor> {
        match self {
            InteractionLaw::Model { k } => Ok(ScaleFactor {
                value: 1.0 / *k as f64,
                exact: Some(BigRational::new(BigInt::one(), BigInt::from(*k))),
                method: ScaleMethod::Exact,
                error_estimate: 0.0,
            }),
            InteractionLaw::PiecewiseConstant { weights } => {
                let value = quad::compensated_sum(
                    weights
                        .iter()
                        .enumerate()
                        .rev()
                        .map(|(i, w)| w / (i + 1) as f64),
                );
                Ok(ScaleFactor {
                    value,
                    exact: None,
                    method: ScaleMethod::Exact,
                    error_estimate: 0.0,
                })
            }
            InteractionLaw::PackagedDyadic { packages } => {
                let value = quad::compensated_sum(packages.iter().enumerate().rev().map(|(j, a)| {
                    let lo = 1u64 << j;
                    let hi = (1u64 << (j + 1)) - 1;
                    a * quad::compensated_sum((lo..=hi).rev().map(|k| 1.0 / k as f64))
                }));
                Ok(ScaleFactor {
                    value,
                    exact: None,
                    method: ScaleMethod::Exact,
                    error_estimate: 0.0,
                })
            }
            InteractionLaw::AffineTheta => Ok(ScaleFactor {
                value: std::f64::consts::LN_2,
                exact: None,
                method: ScaleMethod::Exact,
                error_estimate: 0.0,
            }),
            InteractionLaw::DyadicAffine { sequence } => Ok(ScaleFactor {
                value: std::f64::consts::LN_2 * sequence.weighted_increment_series(),
                exact: None,
                method: ScaleMethod::Series,
                error_estimate: 0.0,
            }),
            InteractionLaw::Scaled { inner, alpha, beta } => {
                let n = inner.scale_factor()?;
                let exact = match (&n.exact, rational(*alpha), rational(*beta)) {
                    (Some(e), Some(a), Some(b)) => Some(e * a * b),
                    _ => None,
                };
                Ok(ScaleFactor {
                    value: alpha * beta * n.value,
                    exact,
                    method: n.method,
                    error_estimate: alpha * beta * n.error_estimate,
                })
            }
            InteractionLaw::Tabulated(_) => self.scale_factor_quadrature(&QuadConfig::default()),
        }
    }

    /// Exact rational scale factor of the stored weights, for the step-based
    /// variants (and rescalings of them).
    pub fn scale_factor_exact(&self) -> Option<BigRational> {
        match self {
            InteractionLaw::Model { k } => Some(BigRational::new(BigInt::one(), BigInt::from(*k))),
            InteractionLaw::PiecewiseConstant { weights } => {
                let mut acc = BigRational::zero();
                for (i, w) in weights.iter().enumerate() {
                    if *w != 0.0 {
                        acc += rational(*w)? / BigRational::from_integer(BigInt::from(i + 1));
                    }
                }
                Some(acc)
            }
            InteractionLaw::PackagedDyadic { packages } => {
                let mut acc = BigRational::zero();
                let mut prev = BigRational::zero();
                for (j, a) in packages.iter().enumerate() {
                    let h = harmonic_exact((1u64 << (j + 1)) - 1);
                    if *a != 0.0 {
                        acc += rational(*a)? * (&h - &prev);
                    }
                    prev = h;
                }
                Some(acc)
            }
            InteractionLaw::Scaled { inner, alpha, beta } => {
                Some(inner.scale_factor_exact()? * rational(*alpha)? * rational(*beta)?)
            }
            _ => None,
        }
    }

    /// `N(phi)` by adaptive quadrature, split at the law's nodes. Works for
    /// every bounded variant; the tail beyond the last node is added in
    /// closed form since every variant is constant there.
    pub fn scale_factor_quadrature(&self, cfg: &QuadConfig) -> Result<ScaleFactor> {
        if !self.quadratic_at_origin() {
            return Err(Error::DivergentScaleFactor(format!(
                "{}: phi(t)/t^2 is unbounded at the origin",
                self.label()
            )));
        }
        let sup = self.supremum().ok_or_else(|| {
            Error::DivergentScaleFactor(format!("{}: law grows without bound", self.label()))
        })?;
        let mut nodes = self.nodes();
        nodes.retain(|x| x.is_finite() && *x > 0.0);
        let top = nodes.last().copied().unwrap_or(1.0).max(1e-300);
        // Below the first node the integrand is bounded; include 0 as the start.
        let out = quad::integrate(|t| self.evaluate(t) / (t * t), 0.0, top, &nodes, cfg);
        if !out.converged {
            return Err(Error::QuadratureBudget {
                evals: out.evals,
                error: out.error,
            });
        }
        let tail = self.evaluate(top * 2.0).max(self.evaluate(f64::MAX / 4.0));
        debug_assert!(tail <= sup + 1e-12 * sup.abs().max(1.0));
        Ok(ScaleFactor {
            value: out.value + tail / top,
            exact: None,
            method: ScaleMethod::Quadrature,
            error_estimate: out.error,
        })
    }

    /// Grid-certified admissibility check.
    pub fn check_admissible(&self, grid: &[f64]) -> Result<AdmissibilityReport> {
        if grid.is_empty() {
            return Err(Error::InvalidParameter("probe grid is empty".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
            return Err(Error::InvalidParameter(
                "probe grid must be nonnegative and strictly increasing".into(),
            ));
        }
        let values: Vec<f64> = grid.iter().map(|&t| self.evaluate(t)).collect();

        let monotone = match values.windows(2).position(|w| w[1] < w[0]) {
            Some(i) => Condition::fail(
                grid[i + 1],
                format!("phi({}) = {} < phi({}) = {}", grid[i + 1], values[i + 1], grid[i], values[i]),
            ),
            None => Condition::ok(format!("nondecreasing on {} points", grid.len())),
        };

        let mut a = 0.0f64;
        let mut quad_fail = None;
        for (&t, &v) in grid.iter().zip(&values) {
            if t > 1.0 {
                break;
            }
            if t == 0.0 {
                if v != 0.0 {
                    quad_fail = Some((t, format!("phi(0) = {v} is not zero")));
                    break;
                }
                continue;
            }
            a = a.max(v / (t * t));
        }
        if quad_fail.is_none() && !self.quadratic_at_origin() {
            let t = grid.iter().copied().find(|&t| t > 0.0).unwrap_or(grid[0]);
            quad_fail = Some((t, "phi(t)/t^2 is unbounded as t -> 0".into()));
        }
        let (quadratic_at_origin, a) = match quad_fail {
            Some((t, why)) => (Condition::fail(t, why), None),
            None => (Condition::ok(format!("phi(t) <= {a} t^2 on grid points of (0,1]")), Some(a)),
        };

        let grid_max = values.iter().copied().fold(0.0, f64::max);
        let (bounded, b) = match self.supremum() {
            Some(s) => {
                let b = s.max(grid_max);
                (Condition::ok(format!("phi <= {b}")), Some(b))
            }
            None => (
                Condition::fail(grid[grid.len() - 1], "law grows without bound".into()),
                None,
            ),
        };

        Ok(AdmissibilityReport {
            grid: grid.to_vec(),
            monotone,
            quadratic_at_origin,
            bounded,
            a,
            b,
        })
    }

    /// Short identifier in the law-spec mini-language where possible.
    pub fn label(&self) -> String {
        fn list(xs: &[f64]) -> String {
            let inner: Vec<String> = xs.iter().map(|x| format!("{x}")).collect();
            format!("[{}]", inner.join(","))
        }
        match self {
            InteractionLaw::Model { k } => format!("phi:{k}"),
            InteractionLaw::PiecewiseConstant { weights } => format!("pca:{}", list(weights)),
            InteractionLaw::PackagedDyadic { packages } => {
                if packages.iter().all(|&a| a == 1.0) {
                    format!("psi:{}", packages.len())
                } else {
                    format!("pca2:{}", list(packages))
                }
            }
            InteractionLaw::AffineTheta => "theta".into(),
            InteractionLaw::DyadicAffine { sequence } => {
                format!("zeta[{}..{}]", sequence.first_z(), sequence.last_z())
            }
            InteractionLaw::Scaled { inner, alpha, beta } => format!("{alpha}*({})(t*{beta})", inner.label()),
            InteractionLaw::Tabulated(t) => format!("tabulated[{} pieces]", t.pieces.len()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("laws always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn dyadic_eval(seq: &DyadicSequence, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let mut z = t.log2().floor();
    // Guard against log2 rounding at exact powers of two.
    if 2f64.powf(z) > t {
        z -= 1.0;
    } else if 2f64.powf(z + 1.0) <= t {
        z += 1.0;
    }
    let z = z as i64;
    let base = 2f64.powi(z as i32);
    let lo = seq.value(z);
    let hi = seq.value(z + 1);
    if lo == hi {
        return lo;
    }
    lo + (hi - lo) * (t / base - 1.0)
}

/// Weights `lambda_k = a_j` for `2^{j-1} <= k <= 2^j - 1`.
pub fn expand_packages(packages: &[f64]) -> Vec<f64> {
    let mut w = Vec::with_capacity((1usize << packages.len()).saturating_sub(1));
    for (j, &a) in packages.iter().enumerate() {
        w.extend(std::iter::repeat_n(a, 1usize << j));
    }
    w
}

/// Smallest 1-based index with a positive weight.
pub fn min_support_index(weights: &[f64]) -> Result<usize> {
    weights
        .iter()
        .position(|&w| w > 0.0)
        .map(|i| i + 1)
        .ok_or_else(|| Error::InvalidLaw("all weights are zero".into()))
}

/// `c = 1 / (1 + eps)`.
pub fn phi_eps_normalization(eps: f64) -> f64 {
    1.0 / (1.0 + eps)
}

/// Exact value of `H_n` as a float, via the rational.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A default probe grid: dense on `[0, 1]`, then geometric up to `t_max`.
pub fn default_probe_grid(t_max: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let mut t = 1.0;
    while t < t_max {
        t *= 1.01;
        g.push(t.min(t_max));
    }
    g.dedup();
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson_oracle(law: &InteractionLaw, upper: f64, n: usize) -> f64 {
        // Substitution t = 1/s on [upper, inf): int phi(t)/t^2 dt = int_0^{1/upper} phi(1/s) ds.
        let h1 = upper / n as f64;
        let mut s1 = 0.0;
        for i in 0..n {
            let m = (i as f64 + 0.5) * h1;
            s1 += law.evaluate(m) / (m * m);
        }
        let top = 1.0 / upper;
        let h2 = top / n as f64;
        let mut s2 = 0.0;
        for i in 0..n {
            let s = (i as f64 + 0.5) * h2;
            s2 += law.evaluate(1.0 / s);
        }
        s1 * h1 + s2 * h2
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(InteractionLaw::model(1).unwrap().evaluate(0.5), 0.0);
        assert_eq!(InteractionLaw::model(1).unwrap().evaluate(1.0), 0.0);
        assert_eq!(InteractionLaw::AffineTheta.evaluate(1.5), 0.5);
        let psi2 = InteractionLaw::piecewise_constant(vec![1.0, 1.0, 1.0]).unwrap();
        // phi_1(2.5) + phi_2(2.5) + phi_3(2.5) = 1 + 1 + 0
        let oracle: f64 = (1..=3).map(|k| if 2.5 > k as f64 { 1.0 } else { 0.0 }).sum();
        assert_eq!(psi2.evaluate(2.5), oracle);
        assert_eq!(oracle, 2.0);
    }

    #[test]
    fn zeta_with_unit_step_is_theta() {
        let zeta = InteractionLaw::dyadic_affine(DyadicSequence::unit_step());
        for i in 0..1000 {
            let t = i as f64 * 0.004;
            assert_eq!(zeta.evaluate(t), InteractionLaw::AffineTheta.evaluate(t), "t = {t}");
        }
    }

    #[test]
    fn admissibility_examples() {
        let grid = default_probe_grid(10.0);
        let r = InteractionLaw::model(1).unwrap().check_admissible(&grid).unwrap();
        assert!(r.is_admissible());
        assert_eq!(r.b, Some(1.0));
        // phi_1 vanishes on [0,1], so the smallest certified a is 0 (a = 1 also works).
        assert_eq!(r.a, Some(0.0));

        let identity = InteractionLaw::tabulated(vec![], vec![vec![0.0, 1.0]]).unwrap();
        let r = identity.check_admissible(&grid).unwrap();
        assert!(!r.bounded.pass);
        assert_eq!(r.bounded.witness, Some(*grid.last().unwrap()));
        assert!(r.clone().into_result().is_err());

        let eps = InteractionLaw::phi_eps(0.1).unwrap();
        let r = eps.check_admissible(&grid).unwrap();
        assert!(r.is_admissible(), "{r:?}");
        let a = r.a.unwrap();
        assert!((a - 0.1 / 1.1).abs() < 1e-12);
    }

    #[test]
    fn admissibility_flags_decreasing_law() {
        let bad = InteractionLaw::tabulated(vec![1.0], vec![vec![0.0, 0.0, 1.0], vec![0.5]]).unwrap();
        let r = bad.check_admissible(&default_probe_grid(4.0)).unwrap();
        assert!(!r.monotone.pass);
        assert!(r.monotone.witness.unwrap() > 1.0);
    }

    #[test]
    fn grid_validation() {
        let law = InteractionLaw::AffineTheta;
        assert!(law.check_admissible(&[]).is_err());
        assert!(law.check_admissible(&[1.0, 0.5]).is_err());
    }

    #[test]
    fn scale_factor_examples() {
        let n1 = InteractionLaw::model(1).unwrap().scale_factor().unwrap();
        assert_eq!(n1.value, 1.0);
        let psi2 = InteractionLaw::piecewise_constant(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            psi2.scale_factor_exact().unwrap(),
            BigRational::new(BigInt::from(11), BigInt::from(6))
        );
        assert!((psi2.scale_factor().unwrap().value - 11.0 / 6.0).abs() < 1e-15);
        assert_eq!(
            InteractionLaw::AffineTheta.scale_factor().unwrap().value,
            std::f64::consts::LN_2
        );
        let law = InteractionLaw::AffineTheta.rescale(2.5, 0.75).unwrap();
        assert!((law.scale_factor().unwrap().value - 2.5 * 0.75 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn rescale_examples() {
        let phi1 = InteractionLaw::model(1).unwrap();
        for k in 1..6u32 {
            let r = phi1.rescale(1.0, 1.0 / k as f64).unwrap();
            assert_eq!(r.evaluate(k as f64 + 0.5), 1.0);
            assert_eq!(r.evaluate(k as f64 - 0.5), 0.0);
        }
        let id = InteractionLaw::AffineTheta.rescale(1.0, 1.0).unwrap();
        for i in 0..100 {
            let t = i as f64 * 0.037;
            assert_eq!(id.evaluate(t), InteractionLaw::AffineTheta.evaluate(t));
        }
        // Oracle: midpoint rule with the t = 1/s substitution for the tail.
        let scaled = phi1.rescale(2.0, 3.0).unwrap();
        let oracle = simpson_oracle(&scaled, 1.0, 400_000);
        assert!((oracle - 6.0).abs() < 1e-4, "oracle {oracle}");
        assert!((scaled.scale_factor().unwrap().value - 6.0).abs() < 1e-15);
        assert_eq!(
            scaled.scale_factor_exact().unwrap(),
            BigRational::from_integer(BigInt::from(6))
        );
    }

    #[test]
    fn min_support_examples() {
        assert_eq!(min_support_index(&[1.0, 0.0, 2.0]).unwrap(), 1);
        assert_eq!(min_support_index(&[0.0, 0.0, 0.0, 5.0]).unwrap(), 4);
        assert!(min_support_index(&[0.0, 0.0]).is_err());
        let packed = InteractionLaw::packaged_dyadic(vec![0.0, 1.0]).unwrap();
        assert_eq!(packed.pca_weights().unwrap(), vec![0.0, 1.0, 1.0]);
        assert_eq!(packed.min_support_index().unwrap(), 2);
    }

    #[test]
    fn expand_packaged_examples() {
        let e = |a: Vec<f64>| match InteractionLaw::packaged_dyadic(a).unwrap().expand_packaged().unwrap() {
            InteractionLaw::PiecewiseConstant { weights } => weights,
            _ => unreachable!(),
        };
        assert_eq!(e(vec![1.0]), vec![1.0]);
        assert_eq!(e(vec![1.0, 1.0]), vec![1.0; 3]);
        assert_eq!(e(vec![0.0, 0.0, 1.0]), vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let packaged = InteractionLaw::packaged_dyadic(vec![0.5, 2.0, 1.0]).unwrap();
        let flat = packaged.expand_packaged().unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.05;
            assert_eq!(packaged.evaluate(t), flat.evaluate(t));
        }
        assert_eq!(flat.packaged_weights().unwrap(), vec![0.5, 2.0, 1.0]);
        assert!(InteractionLaw::model(3).unwrap().packaged_weights().is_none());
        assert_eq!(InteractionLaw::model(1).unwrap().packaged_weights().unwrap(), vec![1.0]);
    }

    #[test]
    fn phi_eps_examples() {
        for &eps in &[0.01, 0.1, 0.5, 1.0] {
            // Oracle: c (eps * int_0^1 dt + int_1^inf t^-2 dt) = 1 solved for c.
            let oracle_c = 1.0 / (eps * 1.0 + 1.0);
            assert!((phi_eps_normalization(eps) - oracle_c).abs() < 1e-15);
            let law = InteractionLaw::phi_eps(eps).unwrap();
            assert_eq!(law.evaluate(2.0), oracle_c);
            let n = law.scale_factor().unwrap();
            assert_eq!(n.method, ScaleMethod::Quadrature);
            assert!((n.value - 1.0).abs() < 1e-12, "eps {eps}: N = {}", n.value);
        }
        assert!(InteractionLaw::phi_eps(0.0).is_err());
        assert!(InteractionLaw::phi_eps(1.5).is_err());
    }

    #[test]
    fn divergent_scale_factor_is_signalled() {
        let linear_origin = InteractionLaw::tabulated(vec![1.0], vec![vec![0.0, 1.0], vec![1.0]]).unwrap();
        assert!(matches!(
            linear_origin.scale_factor(),
            Err(Error::DivergentScaleFactor(_))
        ));
        let unbounded = InteractionLaw::tabulated(vec![], vec![vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(unbounded.scale_factor(), Err(Error::DivergentScaleFactor(_))));
    }

    #[test]
    fn quadrature_agrees_with_exact_variants() {
        let cfg = QuadConfig::default();
        for law in [
            InteractionLaw::model(3).unwrap(),
            InteractionLaw::psi(3).unwrap(),
            InteractionLaw::AffineTheta,
            InteractionLaw::piecewise_constant(vec![0.2, 0.0, 1.5]).unwrap(),
        ] {
            let q = law.scale_factor_quadrature(&cfg).unwrap().value;
            let e = law.scale_factor().unwrap().value;
            assert!((q - e).abs() < 1e-11 * e, "{}: {q} vs {e}", law.label());
        }
    }

    #[test]
    fn harmonic_exact_small_values() {
        assert_eq!(harmonic_exact(1), BigRational::one());
        assert_eq!(harmonic_exact(3), BigRational::new(BigInt::from(11), BigInt::from(6)));
        assert_eq!(harmonic_exact(7), BigRational::new(BigInt::from(363), BigInt::from(140)));
        let h = harmonic_exact(4095);
        assert!((rational_to_f64(&h) - harmonic_f64(4095)).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let laws = vec![
            InteractionLaw::model(2).unwrap(),
            InteractionLaw::psi(2).unwrap(),
            InteractionLaw::AffineTheta,
            InteractionLaw::dyadic_affine(DyadicSequence::unit_step()),
            InteractionLaw::phi_eps(0.3).unwrap().rescale(2.0, 0.5).unwrap(),
        ];
        for law in laws {
            let back = InteractionLaw::from_json(&law.to_json()).unwrap();
            assert_eq!(back, law);
        }
        let j = r#"{"variant":"DyadicAffine","sequence":{"points":[[0,0.0],[1,1.0]],"left":"zero-left","right":"constant-right"}}"#;
        assert_eq!(
            InteractionLaw::from_json(j).unwrap(),
            InteractionLaw::dyadic_affine(DyadicSequence::unit_step())
        );
        assert!(InteractionLaw::from_json(r#"{"variant":"PiecewiseConstant","weights":[0,-1]}"#).is_err());
        assert!(InteractionLaw::from_json(r#"{"variant":"Model","k":0}"#).is_err());
    }
}
