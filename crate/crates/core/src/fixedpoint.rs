//! Q-format fixed-point arithmetic and the [`Arithmetic`] abstraction that
//! lets every solver kernel run on either `f64` or saturating scaled integers.
//!
//! A value in format `qI.F` is a signed integer `raw` interpreted as
//! `raw · 2^−F`; the raw range is `[−2^(I+F), 2^(I+F) − 1]`. Conversions and
//! products round to nearest, ties to even. Overflow saturates to the range
//! limit and raises a sticky flag on the [`FixedContext`] that performed the
//! operation; nothing ever wraps.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use crate::error::{MgError, Result};

/// Split of a fixed-point word into integer and fractional bits (plus one sign bit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QFormat {
    int_bits: u32,
    frac_bits: u32,
}

impl QFormat {
    /// The default 32-bit format, `q15.16`.
    pub const Q15_16: QFormat = QFormat { int_bits: 15, frac_bits: 16 };

    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self> {
        if int_bits < 1 || 1 + int_bits + frac_bits > 64 {
            return Err(MgError::InvalidConfig(format!(
                "q{int_bits}.{frac_bits}: need int_bits >= 1 and 1 + int_bits + frac_bits <= 64"
            )));
        }
        Ok(QFormat { int_bits, frac_bits })
    }

    pub fn int_bits(&self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn width(&self) -> u32 {
        1 + self.int_bits + self.frac_bits
    }

    pub fn raw_max(&self) -> i64 {
        ((1i128 << (self.int_bits + self.frac_bits)) - 1) as i64
    }

    pub fn raw_min(&self) -> i64 {
        (-(1i128 << (self.int_bits + self.frac_bits))) as i64
    }

    /// Smallest representable step, `2^−frac_bits`.
    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_value(&self) -> f64 {
        self.raw_max() as f64 * self.resolution()
    }

    pub fn min_value(&self) -> f64 {
        self.raw_min() as f64 * self.resolution()
    }

    fn clamp(&self, raw: i128) -> (i64, bool) {
        if raw > self.raw_max() as i128 {
            (self.raw_max(), true)
        } else if raw < self.raw_min() as i128 {
            (self.raw_min(), true)
        } else {
            (raw as i64, false)
        }
    }
}

impl Default for QFormat {
    fn default() -> Self {
        QFormat::Q15_16
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}.{}", self.int_bits, self.frac_bits)
    }
}

impl FromStr for QFormat {
    type Err = MgError;

    /// Parses `qI.F`, e.g. `q15.16`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| MgError::Parse { pos: 0, msg: format!("{msg} in Q-format {s:?}") };
        let body = s
            .strip_prefix('q')
            .or_else(|| s.strip_prefix('Q'))
            .ok_or_else(|| bad("missing 'q' prefix"))?;
        let (i, f) = body.split_once('.').ok_or_else(|| bad("missing '.'"))?;
        let int_bits = i.parse().map_err(|_| bad("bad integer bits"))?;
        let frac_bits = f.parse().map_err(|_| bad("bad fractional bits"))?;
        QFormat::new(int_bits, frac_bits)
    }
}

/// A fixed-point number: `raw · 2^−frac_bits` in a given [`QFormat`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    raw: i64,
    format: QFormat,
}

impl Default for FixedPoint {
    fn default() -> Self {
        FixedPoint { raw: 0, format: QFormat::Q15_16 }
    }
}

impl FixedPoint {
    /// Builds a value from its raw integer, saturating into range.
    pub fn from_raw(raw: i64, format: QFormat) -> (Self, bool) {
        let (raw, sat) = format.clamp(raw as i128);
        (FixedPoint { raw, format }, sat)
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> QFormat {
        self.format
    }

    /// Exact real value.
    pub fn to_f64(&self) -> f64 {
        self.raw as f64 * self.format.resolution()
    }
}

/// Divides `num` by `den > 0` rounding to nearest, ties to even.
fn div_round_even(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

/// Per-solve arithmetic context: owns the format and the sticky saturation flag.
#[derive(Debug)]
pub struct FixedContext {
    format: QFormat,
    saturated: Cell<bool>,
    divided_by_zero: Cell<bool>,
}

impl FixedContext {
    pub fn new(format: QFormat) -> Self {
        FixedContext {
            format,
            saturated: Cell::new(false),
            divided_by_zero: Cell::new(false),
        }
    }

    pub fn format(&self) -> QFormat {
        self.format
    }

    /// True once any operation in this context has saturated.
    pub fn saturated(&self) -> bool {
        self.saturated.get()
    }

    pub fn divided_by_zero(&self) -> bool {
        self.divided_by_zero.get()
    }

    pub fn clear_flags(&self) {
        self.saturated.set(false);
        self.divided_by_zero.set(false);
    }

    fn finish(&self, raw: i128) -> FixedPoint {
        let (raw, sat) = self.format.clamp(raw);
        if sat {
            self.saturated.set(true);
        }
        FixedPoint { raw, format: self.format }
    }

    fn check(&self, a: FixedPoint, b: FixedPoint) -> Result<()> {
        if a.format != self.format || b.format != self.format {
            let other = if a.format != self.format { a.format } else { b.format };
            return Err(MgError::FormatMismatch(self.format.to_string(), other.to_string()));
        }
        Ok(())
    }

    /// Converts with round-to-nearest-even; out-of-range (and NaN) input saturates.
    pub fn to_fixed(&self, x: f64) -> FixedPoint {
        if x.is_nan() {
            self.saturated.set(true);
            return FixedPoint { raw: 0, format: self.format };
        }
        let scaled = x * (self.format.frac_bits as f64).exp2();
        let rounded = scaled.round_ties_even();
        if rounded >= self.format.raw_max() as f64 + 1.0 || rounded < self.format.raw_min() as f64 {
            self.saturated.set(true);
            let raw = if rounded > 0.0 { self.format.raw_max() } else { self.format.raw_min() };
            return FixedPoint { raw, format: self.format };
        }
        self.finish(rounded as i128)
    }

    pub fn add(&self, a: FixedPoint, b: FixedPoint) -> Result<FixedPoint> {
        self.check(a, b)?;
        Ok(self.finish(a.raw as i128 + b.raw as i128))
    }

    pub fn sub(&self, a: FixedPoint, b: FixedPoint) -> Result<FixedPoint> {
        self.check(a, b)?;
        Ok(self.finish(a.raw as i128 - b.raw as i128))
    }

    /// Double-width product rounded back to `frac_bits`.
    pub fn mul(&self, a: FixedPoint, b: FixedPoint) -> Result<FixedPoint> {
        self.check(a, b)?;
        Ok(self.mul_raw(a.raw, b.raw))
    }

    /// Dividend pre-shifted by `frac_bits`, quotient rounded to nearest even.
    pub fn div(&self, a: FixedPoint, b: FixedPoint) -> Result<FixedPoint> {
        self.check(a, b)?;
        if b.raw == 0 {
            self.divided_by_zero.set(true);
            return Err(MgError::DivisionByZero);
        }
        Ok(self.div_raw(a.raw, b.raw))
    }

    #[inline]
    fn mul_raw(&self, a: i64, b: i64) -> FixedPoint {
        let prod = a as i128 * b as i128;
        self.finish(div_round_even(prod, 1i128 << self.format.frac_bits))
    }

    #[inline]
    fn div_raw(&self, a: i64, b: i64) -> FixedPoint {
        let (num, den) = ((a as i128) << self.format.frac_bits, b as i128);
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        self.finish(div_round_even(num, den))
    }
}

/// Converts `x` into `fmt`. The saturation flag is returned alongside.
pub fn to_fixed(x: f64, fmt: QFormat) -> (FixedPoint, bool) {
    let ctx = FixedContext::new(fmt);
    let v = ctx.to_fixed(x);
    (v, ctx.saturated())
}

pub fn from_fixed(v: FixedPoint) -> f64 {
    v.to_f64()
}

/// Number system a solve runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArithmeticMode {
    #[default]
    Real,
    Fixed(QFormat),
}

impl fmt::Display for ArithmeticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithmeticMode::Real => f.write_str("real"),
            ArithmeticMode::Fixed(q) => write!(f, "{q}"),
        }
    }
}

/// Number system the solver kernels are written against.
///
/// Implementations are cheap handles; any mutable state (overflow flags)
/// lives behind interior mutability in the implementor.
pub trait Arithmetic {
    type Value: Copy + Default + PartialEq + fmt::Debug;

    fn from_f64(&self, x: f64) -> Self::Value;
    fn to_f64(&self, v: Self::Value) -> f64;
    fn add(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn sub(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn mul(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    /// Division; implementations must not panic on a zero divisor.
    fn div(&self, a: Self::Value, b: Self::Value) -> Self::Value;
}

/// Plain `f64` arithmetic.
#[derive(Debug, Clone, Copy, Default)]
pub struct RealArithmetic;

impl Arithmetic for RealArithmetic {
    type Value = f64;

    #[inline(always)]
    fn from_f64(&self, x: f64) -> f64 {
        x
    }
    #[inline(always)]
    fn to_f64(&self, v: f64) -> f64 {
        v
    }
    #[inline(always)]
    fn add(&self, a: f64, b: f64) -> f64 {
        a + b
    }
    #[inline(always)]
    fn sub(&self, a: f64, b: f64) -> f64 {
        a - b
    }
    #[inline(always)]
    fn mul(&self, a: f64, b: f64) -> f64 {
        a * b
    }
    #[inline(always)]
    fn div(&self, a: f64, b: f64) -> f64 {
        a / b
    }
}

// Kernels only ever combine values produced by the same context, so the
// format checks of the public API are skipped here.
impl Arithmetic for FixedContext {
    type Value = FixedPoint;

    fn from_f64(&self, x: f64) -> FixedPoint {
        self.to_fixed(x)
    }
    fn to_f64(&self, v: FixedPoint) -> f64 {
        v.to_f64()
    }
    #[inline]
    fn add(&self, a: FixedPoint, b: FixedPoint) -> FixedPoint {
        self.finish(a.raw as i128 + b.raw as i128)
    }
    #[inline]
    fn sub(&self, a: FixedPoint, b: FixedPoint) -> FixedPoint {
        self.finish(a.raw as i128 - b.raw as i128)
    }
    #[inline]
    fn mul(&self, a: FixedPoint, b: FixedPoint) -> FixedPoint {
        self.mul_raw(a.raw, b.raw)
    }
    #[inline]
    fn div(&self, a: FixedPoint, b: FixedPoint) -> FixedPoint {
        if b.raw == 0 {
            self.divided_by_zero.set(true);
            self.saturated.set(true);
            let raw = if a.raw >= 0 { self.format.raw_max() } else { self.format.raw_min() };
            return FixedPoint { raw, format: self.format };
        }
        self.div_raw(a.raw, b.raw)
    }
}
