//! Step functions on an interval, length tuples, and the three simplifying
//! operators: truncation `T_{A,B}`, vertical segmentation `S_delta`, and the
//! nondecreasing rearrangement `M`.
//!
//! A step function holds value `v_i` on the open piece `(x_{i-1}, x_i)`.
//! Values at the breakpoints themselves are never used.

use std::io::Read;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for lattice membership of deserialized values.
pub const LATTICE_TOL: f64 = 1e-12;

/// An open interval `(lo, hi)` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A nonnegative tuple `(l_1, ..., l_n)` of step lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LengthTuple(Vec<f64>);

impl LengthTuple {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if let Some((i, x)) = lengths
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x >= 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "length l_{} = {x} is not a finite nonnegative number",
                i + 1
            )));
        }
        Ok(Self(lengths))
    }

    /// Rescales so the entries sum to one. Leaves an all-zero tuple alone.
    pub fn normalized(&self) -> Self {
        let s: f64 = crate::quad::pairwise_sum(&self.0);
        if s > 0.0 {
            Self(self.0.iter().map(|x| x / s).collect())
        } else {
            self.clone()
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|x| x * c).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LengthTuple {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for LengthTuple {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LengthTuple> for Vec<f64> {
    fn from(t: LengthTuple) -> Self {
        t.0
    }
}

/// A piecewise-constant function on `(x_0, x_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepRepr")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct StepRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<StepRepr> for StepFunction {
    type Error = Error;
    fn try_from(r: StepRepr) -> Result<Self> {
        StepFunction::new(r.breakpoints, r.values)
    }
}

/// One constant piece of a step function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

impl Piece {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidStepFunction(format!(
                "need n >= 1 values and n + 1 breakpoints (got {} values, {} breakpoints)",
                values.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStepFunction("non-finite breakpoint or value".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidStepFunction(format!(
                "breakpoints must increase strictly ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(domain: Interval, value: f64) -> Result<Self> {
        Self::new(vec![domain.lo, domain.hi], vec![value])
    }

    /// Builds pieces of the given lengths starting at `start`, with piece `i`
    /// at level `base + i * delta`. Zero lengths produce no piece, so the
    /// function jumps over that level.
    pub fn staircase(lengths: &[f64], start: f64, delta: f64, base: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let mut bps = vec![start];
        let mut vals = Vec::new();
        let mut x = start;
        for (i, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidParameter(format!("length {l} is not a finite nonnegative number")));
            }
            if l > 0.0 {
                x += l;
                bps.push(x);
                vals.push(base + i as f64 * delta);
            }
        }
        Self::new(bps, vals)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn domain(&self) -> Interval {
        Interval {
            lo: self.breakpoints[0],
            hi: self.breakpoints[self.breakpoints.len() - 1],
        }
    }

    pub fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &value)| Piece { lo: w[0], hi: w[1], value })
    }

    /// Value on the piece `(x_{i-1}, x_i]` containing `x`; the first piece
    /// also owns `x_0`. Returns `None` outside the domain.
    pub fn evaluate(&self, x: f64) -> Option<f64> {
        let d = self.domain();
        if !(x >= d.lo && x <= d.hi) {
            return None;
        }
        let i = self.breakpoints[1..].partition_point(|&b| b < x);
        Some(self.values[i.min(self.values.len() - 1)])
    }

    /// Applies `f` to every value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.breakpoints.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Merges adjacent pieces with equal values.
    pub fn canonicalize(&self) -> Self {
        let mut bps = vec![self.breakpoints[0]];
        let mut vals: Vec<f64> = Vec::with_capacity(self.values.len());
        for p in self.pieces() {
            if vals.last() == Some(&p.value) {
                *bps.last_mut().expect("nonempty") = p.hi;
            } else {
                vals.push(p.value);
                bps.push(p.hi);
            }
        }
        Self {
            breakpoints: bps,
            values: vals,
        }
    }

    /// Restriction to `window` intersected with the domain.
    pub fn restrict(&self, window: Interval) -> Result<Self> {
        let lo = window.lo.max(self.breakpoints[0]);
        let hi = window.hi.min(self.breakpoints[self.breakpoints.len() - 1]);
        if !(lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        let mut bps = vec![lo];
        let mut vals = Vec::new();
        for p in self.pieces() {
            let a = p.lo.max(lo);
            let b = p.hi.min(hi);
            if a < b {
                vals.push(p.value);
                bps.push(b);
            }
        }
        Self::new(bps, vals)
    }

    /// `T_{A,B} u = min(max(u, A), B)`.
    pub fn truncate(&self, lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(Error::InvalidTruncation { lower, upper });
        }
        self.map_values(|v| v.clamp(lower, upper))
    }

    /// `S_delta u = delta * floor(u / delta)`.
    pub fn segment(&self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        self.map_values(|v| segment_value(v, delta))
    }

    /// Nondecreasing rearrangement: levels sorted upward, each occupying the
    /// same total measure as before, ties merged.
    pub fn rearrange(&self) -> Self {
        let levels = self.level_measures();
        let x0 = self.breakpoints[0];
        let xn = self.breakpoints[self.breakpoints.len() - 1];
        let mut bps = Vec::with_capacity(levels.len() + 1);
        bps.push(x0);
        let mut acc = 0.0;
        for (i, &(_, m)) in levels.iter().enumerate() {
            acc += m;
            let x = if i + 1 == levels.len() { xn } else { x0 + acc };
            bps.push(x);
        }
        // Rounding can only produce ties when a level has negligible measure;
        // nudge to keep breakpoints strictly increasing.
        for i in 1..bps.len() {
            if bps[i] <= bps[i - 1] {
                bps[i] = next_up(bps[i - 1]);
            }
        }
        Self {
            breakpoints: bps,
            values: levels.into_iter().map(|(v, _)| v).collect(),
        }
    }

    /// Distinct values in increasing order with the measure of each level set.
    pub fn level_measures(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.pieces().map(|p| (p.value, p.length())).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
        for (v, m) in pairs {
            match out.last_mut() {
                Some((w, ms)) if *w == v => ms.push(m),
                _ => out.push((v, vec![m])),
            }
        }
        out.into_iter()
            .map(|(v, ms)| (v, crate::quad::pairwise_sum(&ms)))
            .collect()
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    /// `max u - min u`.
    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo
    }

    /// Sum of absolute jumps between consecutive pieces.
    pub fn total_variation(&self) -> f64 {
        let jumps: Vec<f64> = self.values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        crate::quad::pairwise_sum(&jumps)
    }

    /// Integer lattice level `v / delta` of every value, checked against
    /// [`LATTICE_TOL`].
    pub fn lattice_levels(&self, delta: f64) -> Result<Vec<i64>> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        self.values.iter().map(|&v| lattice_level(v, delta)).collect()
    }

    /// Measures of the consecutive lattice levels of a nondecreasing
    /// function with values in `delta Z`, from its lowest level to its
    /// highest. A level the function jumps over contributes a zero entry.
    pub fn gaps(&self, delta: f64) -> Result<LengthTuple> {
        let levels = self.lattice_levels(delta)?;
        for (i, w) in levels.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::NotMonotone {
                    at: self.breakpoints[i + 1],
                    prev: self.values[i],
                    next: self.values[i + 1],
                });
            }
        }
        let mut out = Vec::new();
        let mut current = levels[0];
        let mut measure = 0.0;
        for (p, &z) in self.pieces().zip(&levels) {
            if z != current {
                out.push(measure);
                out.extend(std::iter::repeat_n(0.0, (z - current - 1) as usize));
                current = z;
                measure = 0.0;
            }
            measure += p.length();
        }
        out.push(measure);
        LengthTuple::new(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("step functions always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Reads `x,v` rows: each row gives a breakpoint and the value on the
    /// piece that starts there; the final row carries only the right end
    /// (its value field empty or absent). A non-numeric first row is
    /// treated as a header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut bps = Vec::new();
        let mut vals = Vec::new();
        let mut ended = false;
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let x_field = rec.get(0).unwrap_or("");
            let x = match x_field.parse::<f64>() {
                Ok(x) => x,
                Err(_) if row == 0 => continue,
                Err(_) => {
                    return Err(Error::Format(format!("row {}: bad abscissa `{x_field}`", row + 1)));
                }
            };
            if ended {
                return Err(Error::Format(format!("row {}: data after the closing breakpoint", row + 1)));
            }
            bps.push(x);
            match rec.get(1).filter(|s| !s.is_empty()) {
                Some(v) => vals.push(
                    v.parse::<f64>()
                        .map_err(|_| Error::Format(format!("row {}: bad value `{v}`", row + 1)))?,
                ),
                None => ended = true,
            }
        }
        if !ended {
            return Err(Error::Format(
                "missing closing breakpoint row (an x with an empty value)".into(),
            ));
        }
        Self::new(bps, vals)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,v\n");
        for (x, v) in self.breakpoints.iter().zip(&self.values) {
            s.push_str(&format!("{x},{v}\n"));
        }
        s.push_str(&format!("{},\n", self.breakpoints[self.breakpoints.len() - 1]));
        s
    }
}

/// `delta * floor(v / delta)`, with the floor corrected so that the
/// computed products satisfy `k * delta <= v < (k + 1) * delta`.
pub fn segment_value(v: f64, delta: f64) -> f64 {
    let mut z = (v / delta).floor();
    if (z + 1.0) * delta <= v {
        z += 1.0;
    } else if z * delta > v {
        z -= 1.0;
    }
    z * delta
}

/// The integer `z` with `v = z * delta`, within [`LATTICE_TOL`].
pub fn lattice_level(v: f64, delta: f64) -> Result<i64> {
    let q = v / delta;
    let r = q.round();
    if (q - r).abs() <= LATTICE_TOL * r.abs().max(1.0) {
        Ok(r as i64)
    } else {
        Err(Error::OffLattice { value: v, delta })
    }
}

fn next_up(x: f64) -> f64 {
    let bits = x.to_bits();
    if x >= 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}
