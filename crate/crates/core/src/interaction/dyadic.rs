//! Nondecreasing bounded sequences on the integers, used as node values of
//! dyadic piecewise-affine interaction laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the sequence continues to the left of the explicit points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LeftFill {
    /// `f(z) = 0` below the first explicit point.
    #[serde(rename = "zero-left")]
    Zero,
    /// `f(z0 - j) = f(z0) / ratio^j`; `ratio >= 4` keeps `f(-n) 4^n` bounded.
    #[serde(rename = "geometric-left")]
    Geometric { ratio: f64 },
}

/// How the sequence continues to the right of the explicit points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RightFill {
    #[serde(rename = "constant-right")]
    Constant,
}

/// A map `f: Z -> [0, inf)` given by contiguous explicit values plus fill
/// rules on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DyadicRepr")]
pub struct DyadicSequence {
    points: Vec<(i32, f64)>,
    left: LeftFill,
    right: RightFill,
}

#[derive(Deserialize)]
struct DyadicRepr {
    points: Vec<(i32, f64)>,
    left: LeftFill,
    #[serde(default = "default_right")]
    right: RightFill,
}

fn default_right() -> RightFill {
    RightFill::Constant
}

impl TryFrom<DyadicRepr> for DyadicSequence {
    type Error = Error;
    fn try_from(r: DyadicRepr) -> Result<Self> {
        DyadicSequence::new(r.points, r.left, r.right)
    }
}

impl DyadicSequence {
    pub fn new(mut points: Vec<(i32, f64)>, left: LeftFill, right: RightFill) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidLaw("dyadic sequence needs at least one point".into()));
        }
        points.sort_by_key(|p| p.0);
        for w in points.windows(2) {
            if w[1].0 != w[0].0 + 1 {
                return Err(Error::InvalidLaw(format!(
                    "dyadic points must be contiguous in z (gap between {} and {})",
                    w[0].0, w[1].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidLaw(format!(
                    "f must be nondecreasing: f({})={} > f({})={}",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        if let Some(&(z, v)) = points.iter().find(|p| !(p.1.is_finite() && p.1 >= 0.0)) {
            return Err(Error::InvalidLaw(format!("f({z}) = {v} is not a finite nonnegative value")));
        }
        if points.iter().all(|p| p.1 == 0.0) {
            return Err(Error::InvalidLaw("f is identically zero".into()));
        }
        if let LeftFill::Geometric { ratio } = left {
            if !(ratio >= 4.0 && ratio.is_finite()) {
                return Err(Error::InvalidLaw(format!(
                    "geometric-left ratio {ratio} < 4 violates the quadratic decay condition"
                )));
            }
        }
        Ok(Self { points, left, right })
    }

    /// `f(z) = 0` for `z < 1` and `f(z) = 1` for `z >= 1`.
    pub fn unit_step() -> Self {
        Self::new(vec![(0, 0.0), (1, 1.0)], LeftFill::Zero, RightFill::Constant)
            .expect("valid by construction")
    }

    pub fn points(&self) -> &[(i32, f64)] {
        &self.points
    }

    pub fn left(&self) -> LeftFill {
        self.left
    }

    pub fn right(&self) -> RightFill {
        self.right
    }

    pub fn first_z(&self) -> i32 {
        self.points[0].0
    }

    pub fn last_z(&self) -> i32 {
        self.points[self.points.len() - 1].0
    }

    pub fn value(&self, z: i64) -> f64 {
        let z0 = self.first_z() as i64;
        let z1 = self.last_z() as i64;
        if z < z0 {
            match self.left {
                LeftFill::Zero => 0.0,
                LeftFill::Geometric { ratio } => {
                    let steps = (z0 - z) as f64;
                    self.points[0].1 * ratio.powf(-steps)
                }
            }
        } else if z > z1 {
            match self.right {
                RightFill::Constant => self.points[self.points.len() - 1].1,
            }
        } else {
            self.points[(z - z0) as usize].1
        }
    }

    pub fn supremum(&self) -> f64 {
        self.points[self.points.len() - 1].1
    }

    /// `sup_{n >= 0} f(-n) 4^n`, finite for every valid sequence.
    pub fn decay_witness(&self) -> f64 {
        let mut w = 0.0f64;
        for &(z, v) in &self.points {
            if z <= 0 {
                w = w.max(v * 4f64.powi(-z));
            }
        }
        if let LeftFill::Geometric { ratio } = self.left {
            // f(z0 - j) 4^{-(z0 - j)} = f(z0) 4^{-z0} (4/ratio)^j is maximal at j = 0
            // (or at the first j reaching z <= 0).
            let z0 = self.first_z();
            let f0 = self.points[0].1;
            let j0 = z0.max(0);
            let z = z0 - j0;
            w = w.max(f0 * ratio.powi(-j0) * 4f64.powi(-z));
        }
        w
    }

    /// Lowest `z` that matters numerically: below it `f` is under
    /// `1e-300` relative to its supremum.
    pub(crate) fn effective_first_z(&self) -> i64 {
        match self.left {
            LeftFill::Zero => self.first_z() as i64 - 1,
            LeftFill::Geometric { ratio } => {
                let f0 = self.points[0].1;
                if f0 == 0.0 {
                    return self.first_z() as i64;
                }
                let target = self.supremum() * 1e-300;
                let steps = ((f0 / target).ln() / ratio.ln()).ceil().max(0.0) as i64;
                self.first_z() as i64 - steps
            }
        }
    }

    /// `sum_z (f(z+1) - f(z)) 2^{-z}`, extended left until the partial sum
    /// changes by less than `1e-12` relative.
    pub fn weighted_increment_series(&self) -> f64 {
        let z0 = self.first_z() as i64;
        let z1 = self.last_z() as i64;
        let mut terms: Vec<f64> = (z0..z1)
            .map(|z| (self.value(z + 1) - self.value(z)) * 2f64.powi(-(z as i32)))
            .collect();
        let mut sum = crate::quad::pairwise_sum(&terms);
        let mut z = z0 - 1;
        loop {
            let term = (self.value(z + 1) - self.value(z)) * 2f64.powf(-(z as f64));
            if !term.is_finite() {
                break;
            }
            terms.push(term);
            let prev = sum;
            sum += term;
            if term == 0.0 || (sum - prev).abs() < 1e-12 * sum.abs().max(f64::MIN_POSITIVE) {
                break;
            }
            z -= 1;
        }
        // Summing small-to-large once more reduces rounding.
        terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        crate::quad::compensated_sum(terms)
    }
}
