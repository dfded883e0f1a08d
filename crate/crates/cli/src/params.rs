//! Merged experiment parameters: command-line flags over a JSON config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Deserializer};

/// A string-valued parameter that a config file may also give as a number,
/// such as `"n": 8` or `"n": "16,32,64"`.
#[derive(Debug, Clone, PartialEq)]
pub struct Text(pub String);

impl<'de> Deserialize<'de> for Text {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(Text(s)),
            serde_json::Value::Number(n) => Ok(Text(n.to_string())),
            other => Err(serde::de::Error::custom(format!("expected a string or number, got {other}"))),
        }
    }
}

impl From<String> for Text {
    fn from(s: String) -> Self {
        Text(s)
    }
}

macro_rules! params {
    ($($field:ident : $ty:ty),* $(,)?) => {
        /// Every experiment parameter. Unset fields fall back to the config
        /// file and then to per-command defaults.
        #[derive(Debug, Default, Clone, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct Params {
            $(pub $field: Option<$ty>,)*
        }

        impl Params {
            /// Fields set in `self` win over those in `base`.
            pub fn overlay(self, base: Params) -> Params {
                Params { $($field: self.$field.or(base.$field),)* }
            }
        }
    };
}

params! {
    command: String,
    // Positional selectors: verify suite, bounds target, energy mode.
    suite: String,
    target: String,
    mode: String,
    law: String,
    report: String,
    probe: Text,
    t_max: f64,
    n: Text,
    starts: usize,
    max_iters: usize,
    pattern_period_cap: usize,
    dump_minimizer: bool,
    count: usize,
    tolerance: f64,
    m: Text,
    m_cap: u32,
    n_max: usize,
    eps: f64,
    sequence: PathBuf,
    u: String,
    deltas: Text,
    delta: f64,
    d: Text,
    samples: usize,
    seed: u64,
    json: bool,
    output: PathBuf,
}

pub fn load_config(path: &Path) -> Result<Params> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config `{}`", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config `{}`", path.display()))
}

/// Integer list: `8`, `16,32,64`, `2..16` (inclusive) or mixtures.
pub fn int_list<T: TryFrom<u64>>(s: &str) -> Result<Vec<T>> {
    let parse = |x: &str| -> Result<u64> { x.trim().parse().with_context(|| format!("bad integer `{}`", x.trim())) };
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = match part.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let x = parse(part)?;
                (x, x)
            }
        };
        if a > b {
            bail!("empty range `{part}`");
        }
        for x in a..=b {
            out.push(T::try_from(x).map_err(|_| anyhow::anyhow!("value {x} out of range"))?);
        }
    }
    if out.is_empty() {
        bail!("empty list `{s}`");
    }
    Ok(out)
}

fn decade_exponent(x: f64) -> Option<i32> {
    let e = x.log10().round();
    let back: f64 = format!("1e{e}").parse().ok()?;
    (x > 0.0 && (back - x).abs() <= 1e-12 * x).then_some(e as i32)
}

/// Real list: `0.1,0.05`, or a decade range `1e-1..1e-3` that steps through
/// `1` and `3` times each power of ten, in the order given.
pub fn real_list(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: f64 = a.trim().parse().with_context(|| format!("bad range start `{a}`"))?;
            let b: f64 = b.trim().parse().with_context(|| format!("bad range end `{b}`"))?;
            let (Some(ea), Some(eb)) = (decade_exponent(a), decade_exponent(b)) else {
                bail!("decade range `{part}` needs powers of ten at both ends");
            };
            let parse = |m: u32, e: i32| -> f64 { format!("{m}e{e}").parse().expect("valid literal") };
            if ea >= eb {
                for e in (eb..=ea).rev() {
                    out.push(parse(1, e));
                    if e > eb {
                        out.push(parse(3, e - 1));
                    }
                }
            } else {
                for e in ea..=eb {
                    out.push(parse(1, e));
                    if e < eb {
                        out.push(parse(3, e));
                    }
                }
            }
        } else {
            out.push(part.parse().with_context(|| format!("bad number `{part}`"))?);
        }
    }
    if out.is_empty() {
        bail!("empty list `{s}`");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_lists() {
        assert_eq!(int_list::<usize>("8").unwrap(), vec![8]);
        assert_eq!(int_list::<usize>("16,32, 64").unwrap(), vec![16, 32, 64]);
        assert_eq!(int_list::<u32>("2..4,9").unwrap(), vec![2, 3, 4, 9]);
        assert!(int_list::<usize>("4..2").is_err());
        assert!(int_list::<usize>("x").is_err());
    }

    #[test]
    fn decade_ranges() {
        assert_eq!(real_list("1e-1..1e-3").unwrap(), vec![0.1, 0.03, 0.01, 0.003, 0.001]);
        assert_eq!(real_list("1e-2..1e-1").unwrap(), vec![0.01, 0.03, 0.1]);
        assert_eq!(real_list("0.5,0.25").unwrap(), vec![0.5, 0.25]);
        assert!(real_list("2e-1..1e-3").is_err());
    }

    #[test]
    fn overlay_prefers_flags() {
        let file: Params = serde_json::from_str(r#"{"law":"phi1","n":8,"seed":3}"#).unwrap();
        let flags = Params {
            n: Some(Text("16".into())),
            ..Default::default()
        };
        let p = flags.overlay(file);
        assert_eq!(p.n, Some(Text("16".into())));
        assert_eq!(p.law.as_deref(), Some("phi1"));
        assert_eq!(p.seed, Some(3));
        assert!(serde_json::from_str::<Params>(r#"{"bogus":1}"#).is_err());
    }
}
