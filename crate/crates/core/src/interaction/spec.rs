//! Parser for the compact law notation used on the command line:
//! `phi1`, `phi:k`, `pca:[l1,l2,..]`, `pca2:[a1,a2,..]`, `psi:m`, `theta`,
//! `theta:m` (a single dyadic package), `zeta:@file.json`, `phieps:eps`.
//! A leading `{` is read as an inline JSON law, `@path` as a JSON law file.

use std::path::Path;

use super::{DyadicSequence, InteractionLaw};
use crate::error::{Error, Result};

fn err(spec: &str, reason: impl Into<String>) -> Error {
    Error::LawSpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn parse_list(spec: &str, body: &str) -> Result<Vec<f64>> {
    let inner = body
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err(spec, "expected a bracketed list like [1,0,2]"))?;
    if inner.trim().is_empty() {
        return Err(err(spec, "empty weight list"));
    }
    inner
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| err(spec, format!("bad number `{}`: {e}", x.trim())))
        })
        .collect()
}

fn parse_u32(spec: &str, body: &str) -> Result<u32> {
    body.trim()
        .parse::<u32>()
        .map_err(|e| err(spec, format!("expected a positive integer: {e}")))
}

fn read_file(spec: &str, path: &str) -> Result<String> {
    std::fs::read_to_string(Path::new(path)).map_err(|e| err(spec, format!("cannot read `{path}`: {e}")))
}

/// Parses a law specification string.
pub fn parse_law_spec(spec: &str) -> Result<InteractionLaw> {
    let s = spec.trim();
    let wrap = |e: Error| match e {
        Error::LawSpec { .. } => e,
        other => err(spec, other.to_string()),
    };
    if s.starts_with('{') {
        return InteractionLaw::from_json(s).map_err(wrap);
    }
    if let Some(path) = s.strip_prefix('@') {
        return InteractionLaw::from_json(&read_file(spec, path)?).map_err(wrap);
    }
    let (head, body) = match s.split_once(':') {
        Some((h, b)) => (h, Some(b)),
        None => (s, None),
    };
    let law = match (head, body) {
        ("phi1", None) => InteractionLaw::model(1),
        ("phi", Some(b)) => InteractionLaw::model(parse_u32(spec, b)?),
        ("pca", Some(b)) => InteractionLaw::piecewise_constant(parse_list(spec, b)?),
        ("pca2", Some(b)) => InteractionLaw::packaged_dyadic(parse_list(spec, b)?),
        ("psi", Some(b)) => InteractionLaw::psi(parse_u32(spec, b)?),
        ("theta", None) => Ok(InteractionLaw::AffineTheta),
        ("theta", Some(b)) => InteractionLaw::theta_package(parse_u32(spec, b)?),
        ("zeta", Some(b)) => {
            let path = b
                .strip_prefix('@')
                .ok_or_else(|| err(spec, "expected zeta:@file.json"))?;
            let text = read_file(spec, path)?;
            // Accept either a full law document or a bare sequence.
            match InteractionLaw::from_json(&text) {
                Ok(law @ InteractionLaw::DyadicAffine { .. }) => Ok(law),
                Ok(other) => Err(err(spec, format!("file holds a {} law, not zeta", other.label()))),
                Err(_) => serde_json::from_str::<DyadicSequence>(&text)
                    .map(InteractionLaw::dyadic_affine)
                    .map_err(|e| err(spec, e.to_string())),
            }
        }
        ("phieps", Some(b)) => {
            let eps = b
                .trim()
                .parse::<f64>()
                .map_err(|e| err(spec, format!("bad epsilon: {e}")))?;
            InteractionLaw::phi_eps(eps)
        }
        _ => Err(err(spec, "unknown law; expected phi1, phi:k, pca:[..], pca2:[..], psi:m, theta, zeta:@file, phieps:e")),
    };
    law.map_err(wrap)
}
