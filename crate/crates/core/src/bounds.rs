//! Lower bounds on the shape factor `K_d(phi)`.
//!
//! Every bound has the form `K_lower = gamma / N(phi)`, where `gamma` is a
//! lower bound on the coefficient of `G_d * Lambda_0(u)` in the Gamma-liminf
//! and `N(phi)` is the scale factor. Both sides carry the same `G_d`, so the
//! bounds hold in every dimension.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::{harmonic_exact, harmonic_f64, rational_to_f64, DyadicSequence, InteractionLaw};
use crate::minprob::{minimize, MinProblem, MinimizeConfig};
use crate::quad::{pairwise_sum, QuadConfig};

/// How the Gamma coefficient in a report was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    /// Closed-form package bound.
    Analytic,
    /// Optimizer values of `I_n`; these are upper bounds on `I_n`, so the
    /// resulting `K_lower` is an estimate, not a certificate.
    Empirical,
    /// A chain of exact identities.
    Identity,
}

/// One provenance step of a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStep {
    pub step: String,
    pub constant: f64,
    pub detail: String,
}

impl ChainStep {
    fn new(step: &str, constant: f64, detail: impl Into<String>) -> Self {
        Self {
            step: step.to_string(),
            constant,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub law: String,
    pub scale_factor: f64,
    /// Exact rational `N(phi)` when available.
    pub scale_factor_exact: Option<String>,
    /// Coefficient of `G_d * Lambda_0(u)` in the Gamma-liminf.
    pub gamma_factor: f64,
    pub k_lower: f64,
    pub method: BoundMethod,
    pub chain: Vec<ChainStep>,
    pub dimension_uniform: bool,
}

impl BoundReport {
    fn build(
        law: String,
        scale_factor: f64,
        scale_factor_exact: Option<String>,
        gamma_factor: f64,
        method: BoundMethod,
        mut chain: Vec<ChainStep>,
    ) -> Result<Self> {
        let k_lower = gamma_factor / scale_factor;
        chain.push(ChainStep::new("shape-factor", k_lower, "K_lower = gamma / N"));
        if !(k_lower > 0.0 && k_lower <= 1.0 + 1e-12) {
            return Err(Error::CheckFailed(format!(
                "{law}: K_lower = {k_lower} lies outside (0, 1]; the {method:?} Gamma coefficient {gamma_factor} is inconsistent with N = {scale_factor}"
            )));
        }
        Ok(Self {
            law,
            scale_factor,
            scale_factor_exact,
            gamma_factor,
            k_lower,
            method,
            chain,
            dimension_uniform: true,
        })
    }
}

/// Per-`n` data behind an empirical Gamma coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaProxy {
    pub n: usize,
    /// Best value found for `I_n`.
    pub value: f64,
    /// `I_n / (n - mu)`.
    pub proxy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaFactor {
    /// The coefficient used: the larger of the two estimates below.
    pub value: f64,
    pub method: BoundMethod,
    /// `log 2 * sum_j a_j` for packaged laws.
    pub analytic: Option<f64>,
    /// Half the largest `I_n / (n - mu)` over the computed `n`.
    pub empirical: Option<f64>,
    pub proxies: Vec<GammaProxy>,
}

/// Estimates `(1/2) liminf I_n(phi) / n` for a step-law combination.
///
/// `I_{a+b+mu} >= I_{a+mu} + I_{b+mu}`, because for `k >= mu` the `L_k`
/// terms of the two overlapping blocks are disjoint and all terms are
/// nonnegative. Hence `lim I_n / n = sup_n I_n / (n - mu)`, and each
/// `I_n / (n - mu)` is a lower estimate of the limit. The empirical
/// coefficient takes the largest one over `m + 1 <= n <= n_max`.
///
/// For packaged dyadic laws the closed-form bound `2 log 2 sum_j a_j` on
/// the liminf is also available; the larger of the two is used.
pub fn gamma_liminf_factor(law: &InteractionLaw, n_max: usize, cfg: &MinimizeConfig) -> Result<GammaFactor> {
    let weights = law
        .pca_weights()
        .ok_or_else(|| Error::NotPiecewiseConstant(law.label()))?;
    let m = weights.len();
    let analytic = law
        .packaged_weights()
        .map(|a| LN_2 * pairwise_sum(&a))
        .filter(|v| *v > 0.0);
    let mut proxies = Vec::new();
    for n in m + 1..=n_max {
        let pb = MinProblem::from_weights(weights.clone(), n)?;
        let r = minimize(&pb, cfg);
        proxies.push(GammaProxy {
            n,
            value: r.value,
            proxy: r.value / (n - pb.mu()) as f64,
        });
    }
    let empirical = proxies
        .iter()
        .map(|p| p.proxy)
        .reduce(f64::max)
        .map(|v| 0.5 * v);
    let (value, method) = match (analytic, empirical) {
        (Some(a), Some(e)) if e > a => (e, BoundMethod::Empirical),
        (Some(a), _) => (a, BoundMethod::Analytic),
        (None, Some(e)) => (e, BoundMethod::Empirical),
        (None, None) => {
            return Err(Error::InvalidParameter(format!(
                "n_max = {n_max} leaves no admissible n (need n >= {})",
                m + 1
            )))
        }
    };
    Ok(GammaFactor {
        value,
        method,
        analytic,
        empirical,
        proxies,
    })
}

/// Largest `m` for which [`psi_bound`] also reports `N(psi_m)` as an exact
/// rational; the numerator of `H_{2^m - 1}` grows like `2^m` digits.
pub const PSI_EXACT_MAX_M: u32 = 12;

/// `K_lower(psi_m) = m log 2 / H_{2^m - 1}`, from the package bound with
/// `a_1 = ... = a_m = 1`.
pub fn psi_bound(m: u32) -> Result<BoundReport> {
    let law = InteractionLaw::psi(m)?;
    let top = (1u64 << m) - 1;
    let exact = (m <= PSI_EXACT_MAX_M).then(|| harmonic_exact(top).to_string());
    let n = harmonic_f64(top);
    let gamma = m as f64 * LN_2;
    let chain = vec![
        ChainStep::new(
            "package-bound",
            2.0 * gamma,
            format!("liminf I_n / n >= 2 log 2 * sum a_j = {m} * 2 log 2"),
        ),
        ChainStep::new("gamma-coefficient", gamma, "half the liminf of I_n / n"),
        ChainStep::new("scale-factor", n, format!("N = H_{top}")),
    ];
    BoundReport::build(law.label(), n, exact, gamma, BoundMethod::Analytic, chain)
}

/// `theta(t) - 2^{1-m} theta_m((2^{m-1} - 1) t)`, nonnegative for every
/// `t >= 0` and `m >= 1`.
pub fn domination_margin(m: u32, t: f64) -> Result<f64> {
    let tm = InteractionLaw::theta_package(m)?;
    let half = (1u64 << (m - 1)) as f64;
    Ok(InteractionLaw::AffineTheta.evaluate(t) - tm.evaluate((half - 1.0) * t) / half)
}

/// Smallest domination margin over `m` and the probe points `ts`, with the
/// `(m, t)` where it occurs.
pub fn domination_check(ms: impl IntoIterator<Item = u32>, ts: &[f64]) -> Result<(f64, u32, f64)> {
    let mut worst = (f64::INFINITY, 0, 0.0);
    for m in ms {
        for &t in ts {
            let g = domination_margin(m, t)?;
            if g < worst.0 {
                worst = (g, m, t);
            }
        }
    }
    Ok(worst)
}

/// Probe points for the domination check: a uniform grid on `[0, t_max]`
/// plus both sides of the case boundaries `t = 1` and `t = 2`, and of the
/// points `t = k / (2^{m-1} - 1)` where `theta_m` jumps.
pub fn domination_probes(m_cap: u32, grid: usize, t_max: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..grid).map(|i| t_max * i as f64 / (grid - 1).max(1) as f64).collect();
    let mut edges = vec![0.0, 1.0, 2.0];
    for m in 2..=m_cap {
        let c = (1u64 << (m - 1)) as f64 - 1.0;
        for k in (1u64 << (m - 1))..(1u64 << m) {
            edges.push(k as f64 / c);
        }
    }
    for e in edges {
        for x in [e, e * (1.0 - 1e-12), e * (1.0 + 1e-12), e + 1e-9] {
            if (0.0..=t_max).contains(&x) {
                ts.push(x);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// `K_lower(theta) = 1`.
///
/// `theta >= 2^{1-m} theta_m((2^{m-1} - 1) t)` is checked on probes for
/// every `m <= m_cap`. Rescaling multiplies the Gamma coefficient of
/// `theta_m`, at least `log 2` by the package bound, by
/// `(2^{m-1} - 1) / 2^{m-1}`; letting `m` grow gives `log 2 = N(theta)`.
pub fn theta_bound(m_cap: u32) -> Result<BoundReport> {
    if !(2..=40).contains(&m_cap) {
        return Err(Error::InvalidParameter(format!("m_cap must lie in 2..=40, got {m_cap}")));
    }
    let probes = domination_probes(m_cap, 10_000, 4.0);
    let (worst, wm, wt) = domination_check(2..=m_cap, &probes)?;
    if worst < -1e-12 {
        return Err(Error::CheckFailed(format!(
            "domination fails for m = {wm} at t = {wt:e} (margin {worst:e})"
        )));
    }
    let law = InteractionLaw::AffineTheta;
    let n = law.scale_factor()?.value;
    let half = (1u64 << (m_cap - 1)) as f64;
    let chain = vec![
        ChainStep::new(
            "domination",
            worst,
            format!("min margin over m = 2..={m_cap} on {} probes", probes.len()),
        ),
        ChainStep::new("package-bound", LN_2, "theta_m is a single package: gamma(theta_m) >= log 2"),
        ChainStep::new(
            "rescaling",
            (half - 1.0) / half * LN_2,
            format!("gamma(theta) >= (2^(m-1) - 1) / 2^(m-1) * log 2 at m = {m_cap}"),
        ),
        ChainStep::new("limit", LN_2, "supremum over m"),
        ChainStep::new("scale-factor", n, "N(theta) = log 2"),
    ];
    BoundReport::build(law.label(), n, None, LN_2, BoundMethod::Identity, chain)
}

/// `sum_z (f(z+1) - f(z)) theta(2^{-z} t)`.
pub fn zeta_from_theta(seq: &DyadicSequence, t: f64) -> f64 {
    let lo = seq.effective_first_z() - 1;
    let hi = seq.last_z() as i64;
    let terms: Vec<f64> = (lo..hi)
        .map(|z| {
            let inc = seq.value(z + 1) - seq.value(z);
            if inc == 0.0 {
                0.0
            } else {
                inc * InteractionLaw::AffineTheta.evaluate(t * 2f64.powf(-(z as f64)))
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// `K_lower(zeta) = 1`.
///
/// Checks `zeta(t) = sum_z (f(z+1) - f(z)) theta(2^{-z} t)` at `probes` and
/// `N(zeta)` from the series against quadrature. With `S` the series,
/// the Gamma coefficient is `S N(theta)` and `N(zeta) = N(theta) S`.
pub fn zeta_bound(seq: &DyadicSequence, probes: &[f64]) -> Result<BoundReport> {
    let law = InteractionLaw::dyadic_affine(seq.clone());
    law.validate()?;
    let sup = seq.supremum();
    let mut worst: f64 = 0.0;
    for &t in probes {
        let direct = law.evaluate(t);
        let series = zeta_from_theta(seq, t);
        let diff = (direct - series).abs();
        if diff > 1e-12 * sup.max(1.0) {
            return Err(Error::CheckFailed(format!(
                "theta representation mismatch at t = {t:e}: zeta = {direct}, series = {series}"
            )));
        }
        worst = worst.max(diff);
    }
    let s = seq.weighted_increment_series();
    let n_series = law.scale_factor()?.value;
    let n_quad = law.scale_factor_quadrature(&QuadConfig::default())?.value;
    let rel = ((n_series - n_quad) / n_series).abs();
    if rel > 1e-8 {
        return Err(Error::CheckFailed(format!(
            "N(zeta): series {n_series} vs quadrature {n_quad} (relative difference {rel:e})"
        )));
    }
    let gamma = s * LN_2;
    let chain = vec![
        ChainStep::new("representation", worst, format!("max deviation over {} probes", probes.len())),
        ChainStep::new("increment-series", s, "sum_z (f(z+1) - f(z)) 2^-z"),
        ChainStep::new("scale-factor-check", rel, format!("series {n_series} vs quadrature {n_quad}")),
        ChainStep::new("gamma-coefficient", gamma, "series * N(theta), using K(theta) = 1"),
        ChainStep::new("scale-factor", n_series, "N(theta) * series"),
    ];
    BoundReport::build(law.label(), n_series, None, gamma, BoundMethod::Identity, chain)
}

/// Shape-factor lower bound for any law that has a chain: packaged and
/// general step-law combinations, `theta`, `zeta` and rescalings of them.
/// Rescaling by `(alpha, beta)` multiplies both `gamma` and `N` by
/// `alpha * beta`, so `K_lower` is that of the inner law.
pub fn shape_bound(law: &InteractionLaw, n_max: usize, cfg: &MinimizeConfig) -> Result<BoundReport> {
    match law {
        InteractionLaw::AffineTheta => theta_bound(8),
        InteractionLaw::DyadicAffine { sequence } => zeta_bound(sequence, &crate::interaction::default_probe_grid(64.0)),
        InteractionLaw::Scaled { inner, alpha, beta } => {
            let mut r = shape_bound(inner, n_max, cfg)?;
            let ab = alpha * beta;
            r.law = law.label();
            r.scale_factor *= ab;
            r.scale_factor_exact = law.scale_factor_exact().map(|e| e.to_string());
            r.gamma_factor *= ab;
            r.chain.push(ChainStep::new("rescaling", ab, "gamma and N both scale by alpha * beta"));
            Ok(r)
        }
        InteractionLaw::Tabulated(_) => Err(Error::InvalidParameter(format!(
            "{}: no lower-bound chain is known for general tabulated laws",
            law.label()
        ))),
        _ => {
            let g = gamma_liminf_factor(law, n_max, cfg)?;
            let sf = law.scale_factor()?;
            let exact = law.scale_factor_exact().map(|e| e.to_string());
            let mut chain = Vec::new();
            if let Some(a) = g.analytic {
                chain.push(ChainStep::new("package-bound", 2.0 * a, "liminf I_n / n >= 2 log 2 * sum a_j"));
            }
            if let Some(e) = g.empirical {
                let best = g.proxies.iter().max_by(|a, b| a.proxy.total_cmp(&b.proxy)).expect("nonempty");
                chain.push(ChainStep::new(
                    "optimizer-proxy",
                    2.0 * e,
                    format!("max I_n / (n - mu) at n = {} over n <= {n_max}", best.n),
                ));
            }
            chain.push(ChainStep::new("gamma-coefficient", g.value, "half the liminf of I_n / n"));
            chain.push(ChainStep::new("scale-factor", sf.value, "N(phi)"));
            BoundReport::build(law.label(), sf.value, exact, g.value, g.method, chain)
        }
    }
}

/// Data of the short-range counterexample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    /// Normalizing constant `c` with `N(c psi_2) = 1`.
    pub c2: String,
    pub c2_value: f64,
    pub psi_k_lower: f64,
    pub eps: f64,
    pub phi_eps_scale_factor: f64,
    /// Smallest `phi_eps(t) - c psi_2(t)` over probes in `(0, 1]`.
    pub min_gap_on_unit: f64,
    /// Limit of `K(phi_eps)` as `eps -> 0`, asserted externally and not
    /// computed here.
    pub claimed_phi_eps_limit: f64,
    pub strict_gap: f64,
}

/// Normalized `psi_2` against `phi_eps`: both have `N = 1`, `phi_eps`
/// dominates on `(0, 1]`, yet the bound for `psi_2` exceeds the claimed
/// limit `log 2` of `K(phi_eps)`.
pub fn counterexample_table(eps: f64) -> Result<CounterexampleReport> {
    let psi = InteractionLaw::psi(2)?;
    let n_exact = psi.scale_factor_exact().expect("rational");
    let c2 = num_rational::BigRational::from_integer(1.into()) / n_exact;
    let c2_value = rational_to_f64(&c2);
    let scaled = psi.rescale(c2_value, 1.0)?;
    let phi_eps = InteractionLaw::phi_eps(eps)?;
    let probes: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
    let min_gap = probes
        .iter()
        .map(|&t| phi_eps.evaluate(t) - scaled.evaluate(t))
        .fold(f64::INFINITY, f64::min);
    let k = psi_bound(2)?.k_lower;
    Ok(CounterexampleReport {
        c2: c2.to_string(),
        c2_value,
        psi_k_lower: k,
        eps,
        phi_eps_scale_factor: phi_eps.scale_factor()?.value,
        min_gap_on_unit: min_gap,
        claimed_phi_eps_limit: LN_2,
        strict_gap: k - LN_2,
    })
}

/// Row of the `psi_m` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiRow {
    pub m: u32,
    pub scale_factor_exact: String,
    pub scale_factor: f64,
    pub k_lower: f64,
}

pub fn psi_table(ms: impl IntoIterator<Item = u32>) -> Result<Vec<PsiRow>> {
    ms.into_iter()
        .map(|m| {
            let r = psi_bound(m)?;
            Ok(PsiRow {
                m,
                scale_factor_exact: r.scale_factor_exact.unwrap_or_default(),
                scale_factor: r.scale_factor,
                k_lower: r.k_lower,
            })
        })
        .collect()
}

/// CSV with header `m,N_exact,N,K_lower`.
pub fn write_psi_csv<W: std::io::Write>(rows: &[PsiRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "N_exact", "N", "K_lower"])?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.scale_factor_exact.clone(),
            crate::energy::format_value(r.scale_factor),
            crate::energy::format_value(r.k_lower),
        ])?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{LeftFill, RightFill};

    fn quick() -> MinimizeConfig {
        MinimizeConfig {
            starts: 4,
            max_iters: 200,
            ..Default::default()
        }
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi_bound(1).unwrap().k_lower, LN_2);
        let k2 = psi_bound(2).unwrap();
        assert!((k2.k_lower - 12.0 / 11.0 * LN_2).abs() < 1e-15);
        assert_eq!(k2.scale_factor_exact.as_deref(), Some("11/6"));
        let ks: Vec<f64> = (1..=20).map(|m| psi_bound(m).unwrap().k_lower).collect();
        assert!(ks.windows(2).all(|w| w[1] > w[0]));
        assert!(ks[19] > 0.95 && ks[19] < 1.0);
    }

    #[test]
    fn theta_is_one() {
        let r = theta_bound(4).unwrap();
        assert_eq!(r.k_lower, 1.0);
        for t in [1.01, 1.5, 1.99] {
            assert!(domination_margin(4, t).unwrap() >= 0.0);
        }
    }

    #[test]
    fn zeta_is_one() {
        let r = zeta_bound(&DyadicSequence::unit_step(), &[0.1, 0.7, 1.0, 1.5, 2.0, 3.0, 9.0]).unwrap();
        assert_eq!(r.k_lower, 1.0);
        assert!((r.scale_factor - LN_2).abs() < 1e-15);
        let seq = DyadicSequence::new(vec![(0, 1.0)], LeftFill::Geometric { ratio: 4.0 }, RightFill::Constant).unwrap();
        let r = zeta_bound(&seq, &[0.01, 0.3, 1.0, 5.0]).unwrap();
        assert_eq!(r.k_lower, 1.0);
    }

    #[test]
    fn model_law_gamma() {
        let g = gamma_liminf_factor(&InteractionLaw::model(1).unwrap(), 6, &quick()).unwrap();
        assert_eq!(g.method, BoundMethod::Analytic);
        for p in &g.proxies {
            assert!((p.proxy - 4f64.ln()).abs() < 1e-9);
        }
        assert!((g.value - LN_2).abs() < 1e-9);
        let r = shape_bound(&InteractionLaw::model(1).unwrap(), 6, &quick()).unwrap();
        assert!((r.k_lower - LN_2).abs() < 1e-9);
    }

    #[test]
    fn phi3_uses_the_empirical_route() {
        let law = InteractionLaw::model(3).unwrap();
        let g = gamma_liminf_factor(&law, 8, &quick()).unwrap();
        assert_eq!(g.method, BoundMethod::Empirical);
        assert!(g.analytic.is_none());
        let r = shape_bound(&law, 8, &quick()).unwrap();
        assert!(r.k_lower > 0.0 && r.k_lower <= 1.0);
    }

    #[test]
    fn rescaling_leaves_k_unchanged() {
        let law = InteractionLaw::psi(2).unwrap();
        let a = shape_bound(&law, 4, &quick()).unwrap();
        let b = shape_bound(&law.rescale(0.3, 5.0).unwrap(), 4, &quick()).unwrap();
        assert!((a.k_lower - b.k_lower).abs() < 1e-14);
    }

    #[test]
    fn counterexample_data() {
        let c = counterexample_table(0.01).unwrap();
        assert_eq!(c.c2, "6/11");
        assert!(c.min_gap_on_unit > 0.0);
        assert!(c.strict_gap > 0.0);
        assert!((c.phi_eps_scale_factor - 1.0).abs() < 1e-10);
    }

    #[test]
    fn psi_csv() {
        let rows = psi_table(1..=3).unwrap();
        let mut buf = Vec::new();
        write_psi_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("m,N_exact,N,K_lower\n1,1,"));
        assert_eq!(text.lines().count(), 4);
    }
}
