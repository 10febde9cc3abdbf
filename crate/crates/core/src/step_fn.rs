//! Right-continuous-from-the-left step functions over nonnegative weight
//! levels.
//!
//! A [`StepFunction`] takes the value `values[t]` on the half-open interval
//! `(breakpoints[t-1], breakpoints[t]]` (with `breakpoints[-1] = 0`) and the
//! `tail` value on `(breakpoints[last], ∞)`. Every per-offline-vertex quantity
//! of the matcher (the CCDF lower bound, the candidate counts, the offline
//! duals) is one of these, and every mutation keeps the representation
//! canonical: adjacent pieces never carry equal values, so two functions that
//! agree pointwise also compare equal as data.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("unbounded integral: tail value is nonzero")]
    UnboundedIntegral,
    #[error("non-numeric function: a piece carries an infinite level")]
    NonNumeric,
    #[error("invalid range ({lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("invalid breakpoints: {0}")]
    InvalidBreakpoints(String),
}

/// Values a step function may carry.
pub trait StepValue: Copy + PartialEq + fmt::Debug {
    /// Real value of the piece, `None` for non-numeric sentinels.
    fn as_real(&self) -> Option<f64>;
}

impl StepValue for f64 {
    fn as_real(&self) -> Option<f64> {
        Some(*self)
    }
}

/// A candidate count `k_i(w)`: a nonnegative integer, or infinite once the
/// vertex has been matched deterministically at weight at least `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Finite(u32),
    Infinite,
}

impl Level {
    pub const ZERO: Level = Level::Finite(0);

    pub fn is_zero(self) -> bool {
        self == Level::ZERO
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Level::Finite(k) => Some(k),
            Level::Infinite => None,
        }
    }

    /// Saturating increment; infinity stays infinite.
    pub fn incremented(self) -> Level {
        match self {
            Level::Finite(k) => Level::Finite(k + 1),
            Level::Infinite => Level::Infinite,
        }
    }
}

impl StepValue for Level {
    fn as_real(&self) -> Option<f64> {
        self.finite().map(f64::from)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(k) => write!(f, "{k}"),
            Level::Infinite => f.write_str("inf"),
        }
    }
}

/// One maximal interval `(lo, hi]` of a step function; `hi = None` is the
/// unbounded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece<V> {
    pub lo: f64,
    pub hi: Option<f64>,
    pub value: V,
}

impl<V> Piece<V> {
    pub fn len(&self) -> f64 {
        match self.hi {
            Some(hi) => hi - self.lo,
            None => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction<V> {
    breakpoints: Vec<f64>,
    values: Vec<V>,
    tail: V,
}

impl<V: StepValue> StepFunction<V> {
    pub fn constant(value: V) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: Vec::new(),
            tail: value,
        }
    }

    /// Builds a function from `(breakpoint, value)` pairs and the tail value.
    /// Breakpoints must be strictly increasing and positive.
    pub fn from_pieces(pieces: &[(f64, V)], tail: V) -> Result<Self, StepError> {
        let mut prev = 0.0;
        for (i, &(bp, _)) in pieces.iter().enumerate() {
            if !bp.is_finite() || bp < 0.0 || (i > 0 && bp <= prev) || (i == 0 && bp == 0.0) {
                return Err(StepError::InvalidBreakpoints(format!(
                    "breakpoint {bp} at position {i} after {prev}"
                )));
            }
            prev = bp;
        }
        let mut f = Self {
            breakpoints: pieces.iter().map(|p| p.0).collect(),
            values: pieces.iter().map(|p| p.1).collect(),
            tail,
        };
        f.canonicalize();
        Ok(f)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn tail(&self) -> V {
        self.tail
    }

    /// Number of pieces including the tail.
    pub fn piece_count(&self) -> usize {
        self.values.len() + 1
    }

    pub fn pieces(&self) -> impl Iterator<Item = Piece<V>> + '_ {
        let bounded = self.breakpoints.iter().enumerate().map(move |(t, &hi)| Piece {
            lo: if t == 0 { 0.0 } else { self.breakpoints[t - 1] },
            hi: Some(hi),
            value: self.values[t],
        });
        let tail = std::iter::once(Piece {
            lo: self.breakpoints.last().copied().unwrap_or(0.0),
            hi: None,
            value: self.tail,
        });
        bounded.chain(tail)
    }

    /// Value at weight level `w > 0`.
    pub fn value_at(&self, w: f64) -> V {
        // first breakpoint >= w
        let t = self.breakpoints.partition_point(|&bp| bp < w);
        if t < self.values.len() {
            self.values[t]
        } else {
            self.tail
        }
    }

    /// Integral over `(0, ∞)`.
    pub fn integrate(&self) -> Result<f64, StepError> {
        self.integrate_range(0.0, f64::INFINITY)
    }

    /// Integral over `(lo, hi]`; `hi` may be `f64::INFINITY`.
    pub fn integrate_range(&self, lo: f64, hi: f64) -> Result<f64, StepError> {
        self.integrate_map(lo, hi, |v| v.as_real())
    }

    /// Integral of `g ∘ f` over `(lo, hi]`. `g` returning `None` marks a
    /// non-numeric piece; it is an error only when the piece overlaps the
    /// range with positive length.
    pub fn integrate_map<G>(&self, lo: f64, hi: f64, g: G) -> Result<f64, StepError>
    where
        G: Fn(V) -> Option<f64>,
    {
        if !(lo >= 0.0 && hi >= lo) || lo.is_nan() || hi.is_nan() || lo == f64::INFINITY {
            return Err(StepError::InvalidRange { lo, hi });
        }
        let mut total = 0.0;
        for piece in self.pieces() {
            let a = piece.lo.max(lo);
            let b = piece.hi.unwrap_or(f64::INFINITY).min(hi);
            if b <= a {
                continue;
            }
            let v = g(piece.value).ok_or(StepError::NonNumeric)?;
            if v == 0.0 {
                continue;
            }
            if b == f64::INFINITY {
                return Err(StepError::UnboundedIntegral);
            }
            total += v * (b - a);
        }
        Ok(total)
    }

    /// Returns `g ∘ f` on `(0, w]` and `f` above `w`.
    pub fn transform_below<G>(&self, w: f64, g: G) -> Self
    where
        G: Fn(V) -> V,
    {
        let mut out = self.split_at(w);
        for (bp, v) in out.breakpoints.iter().zip(out.values.iter_mut()) {
            if *bp <= w {
                *v = g(*v);
            }
        }
        out.canonicalize();
        out
    }

    /// Maps every piece through `g(piece)`. Pieces are first split at each of
    /// `cuts`, so `g` can classify a piece by comparing its bounds with them.
    pub fn map_pieces<W, G>(&self, cuts: &[f64], g: G) -> StepFunction<W>
    where
        W: StepValue,
        G: Fn(Piece<V>) -> W,
    {
        let mut split = self.clone();
        for &c in cuts {
            split = split.split_at(c);
        }
        let values = split.pieces().map(&g).collect::<Vec<_>>();
        let (tail, values) = values.split_last().expect("at least the tail piece");
        let mut out = StepFunction {
            breakpoints: split.breakpoints,
            values: values.to_vec(),
            tail: *tail,
        };
        out.canonicalize();
        out
    }

    /// Pointwise combination over the union of both breakpoint sets.
    pub fn zip_with<U, W, G>(&self, other: &StepFunction<U>, g: G) -> StepFunction<W>
    where
        U: StepValue,
        W: StepValue,
        G: Fn(V, U) -> W,
    {
        let mut breakpoints = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect::<Vec<_>>();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let values = breakpoints
            .iter()
            .map(|&bp| g(self.value_at(bp), other.value_at(bp)))
            .collect();
        let mut out = StepFunction {
            breakpoints,
            values,
            tail: g(self.tail, other.tail),
        };
        out.canonicalize();
        out
    }

    /// Inserts a breakpoint at `w` without changing the function. The result
    /// is not canonical until the next `canonicalize`.
    fn split_at(&self, w: f64) -> Self {
        let mut out = self.clone();
        if w <= 0.0 || !w.is_finite() {
            return out;
        }
        let t = out.breakpoints.partition_point(|&bp| bp < w);
        if out.breakpoints.get(t) == Some(&w) {
            return out;
        }
        let v = if t < out.values.len() { out.values[t] } else { out.tail };
        out.breakpoints.insert(t, w);
        out.values.insert(t, v);
        out
    }

    fn canonicalize(&mut self) {
        let mut bps = Vec::with_capacity(self.breakpoints.len());
        let mut vals: Vec<V> = Vec::with_capacity(self.values.len());
        for (&bp, &v) in self.breakpoints.iter().zip(self.values.iter()) {
            match vals.last() {
                // extend the previous piece
                Some(last) if *last == v => *bps.last_mut().unwrap() = bp,
                _ => {
                    bps.push(bp);
                    vals.push(v);
                }
            }
        }
        while vals.last() == Some(&self.tail) {
            vals.pop();
            bps.pop();
        }
        self.breakpoints = bps;
        self.values = vals;
    }
}

impl StepFunction<f64> {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn add(&self, other: &StepFunction<f64>) -> StepFunction<f64> {
        self.zip_with(other, |a, b| a + b)
    }
}

impl StepFunction<Level> {
    pub fn zero_level() -> Self {
        Self::constant(Level::ZERO)
    }
}
