//! LLR arithmetic: saturating fixed-point words and a floating-point
//! reference.
//!
//! The SC component decoder and the LLR generator are generic over
//! [`LlrArithmetic`], so the same code runs in both modes. Fixed-point words
//! live on the integer grid `round(x · 2^f)` clipped symmetrically to
//! `[-M, M]` with `M = 2^(Q-1) - 1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Word format used by a decoder run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantSpec {
    /// Floating-point reference; `exact` selects the exact box-plus check
    /// node instead of min-sum.
    Float { exact: bool },
    /// `total_bits` in 4..=8, `frac_bits` in `0..=total_bits-2`.
    Fixed { total_bits: u8, frac_bits: u8 },
}

impl QuantSpec {
    pub fn fixed(total_bits: u8, frac_bits: u8) -> Result<Self> {
        if !(4..=8).contains(&total_bits) {
            return Err(Error::invalid(format!("total bits must be in 4..=8, got {total_bits}")));
        }
        if frac_bits > total_bits - 2 {
            return Err(Error::invalid(format!(
                "fraction bits must be in 0..={}, got {frac_bits}",
                total_bits - 2
            )));
        }
        Ok(QuantSpec::Fixed {
            total_bits,
            frac_bits,
        })
    }

    /// Default fraction bits for a word width: the largest allowed, `Q-2`.
    /// Min-sum SC decisions barely react to saturation but do react to
    /// resolution (see the `frac_sweep` example).
    pub fn default_frac_bits(total_bits: u8) -> u8 {
        total_bits.saturating_sub(2)
    }

    pub fn float() -> Self {
        QuantSpec::Float { exact: false }
    }

    /// Largest representable magnitude on the integer grid.
    pub fn clip(self) -> Option<i32> {
        match self {
            QuantSpec::Float { .. } => None,
            QuantSpec::Fixed { total_bits, .. } => Some((1 << (total_bits - 1)) - 1),
        }
    }
}

impl fmt::Display for QuantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantSpec::Float { exact: false } => write!(f, "float"),
            QuantSpec::Float { exact: true } => write!(f, "float-exact"),
            QuantSpec::Fixed {
                total_bits,
                frac_bits,
            } => write!(f, "Q{total_bits}F{frac_bits}"),
        }
    }
}

impl FromStr for QuantSpec {
    type Err = Error;

    /// Accepts `float`, `float-exact`, `Q<bits>` and `Q<bits>F<frac>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "float" => return Ok(QuantSpec::float()),
            "float-exact" => return Ok(QuantSpec::Float { exact: true }),
            _ => {}
        }
        let bad = || Error::parse("quantization", format!("`{s}` is not float, float-exact or Q<bits>[F<frac>]"));
        let rest = lower.strip_prefix('q').ok_or_else(bad)?;
        let (q, f) = match rest.split_once('f') {
            Some((q, f)) => (q, Some(f)),
            None => (rest, None),
        };
        let q: u8 = q.parse().map_err(|_| bad())?;
        let f = match f {
            Some(f) => f.parse().map_err(|_| bad())?,
            None => QuantSpec::default_frac_bits(q),
        };
        QuantSpec::fixed(q, f).map_err(|e| Error::parse("quantization", e.to_string()))
    }
}

/// Saturating fixed-point word arithmetic for one [`QuantSpec::Fixed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    clip: i32,
    scale: f64,
}

impl FixedPoint {
    pub fn new(total_bits: u8, frac_bits: u8) -> Result<Self> {
        let spec = QuantSpec::fixed(total_bits, frac_bits)?;
        Ok(Self {
            clip: spec.clip().expect("fixed spec has a clip"),
            scale: f64::from(1u32 << frac_bits),
        })
    }

    pub fn clip(&self) -> i32 {
        self.clip
    }

    /// Round to nearest (ties away from zero), then saturate.
    pub fn quantize(&self, x: f64) -> i32 {
        let v = (x * self.scale).round();
        v.clamp(-f64::from(self.clip), f64::from(self.clip)) as i32
    }

    /// Real value represented by a word.
    pub fn dequantize(&self, w: i32) -> f64 {
        f64::from(w) / self.scale
    }

    #[inline]
    pub fn saturate(&self, v: i32) -> i32 {
        v.clamp(-self.clip, self.clip)
    }

    #[inline]
    pub fn sat_add(&self, a: i32, b: i32) -> i32 {
        self.saturate(a + b)
    }

    /// Min-sum check-node update.
    #[inline]
    pub fn f_min(&self, a: i32, b: i32) -> i32 {
        let m = a.abs().min(b.abs());
        if (a < 0) != (b < 0) {
            -m
        } else {
            m
        }
    }

    /// Bit-node update `b + (1 - 2·bit)·a`, saturated.
    #[inline]
    pub fn g_comb(&self, a: i32, b: i32, bit: u8) -> i32 {
        if bit == 0 {
            self.sat_add(b, a)
        } else {
            self.sat_add(b, -a)
        }
    }
}

/// How floating-point channel values are turned into LLRs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseScaling {
    /// `L = 2y/σ²`, damping coefficients scaled by `2/σ²`.
    Channel,
    /// `L = y`: the `σ²/2` factor is cancelled out of every term.
    Cancelled,
}

/// Floating-point LLR arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatLlr {
    pub exact: bool,
    pub scaling: NoiseScaling,
}

impl Default for FloatLlr {
    fn default() -> Self {
        Self {
            exact: false,
            scaling: NoiseScaling::Channel,
        }
    }
}

/// Exact box-plus `2·atanh(tanh(a/2)·tanh(b/2))` in its numerically stable form.
pub fn boxplus(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    let s = if (a < 0.0) != (b < 0.0) { -m } else { m };
    s + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Arithmetic contract shared by the SC decoder and the LLR generator.
pub trait LlrArithmetic: Copy + Send + Sync + fmt::Debug + 'static {
    type Llr: Copy + Default + PartialOrd + Send + Sync + fmt::Debug + 'static;

    /// Channel sample `y` with per-dimension noise variance `sigma2`.
    fn channel_llr(&self, y: f64, sigma2: f64) -> Self::Llr;
    /// A damping coefficient on the same scale as [`Self::channel_llr`].
    fn coefficient(&self, c: f64, sigma2: f64) -> Self::Llr;
    fn add(&self, a: Self::Llr, b: Self::Llr) -> Self::Llr;
    fn neg(&self, a: Self::Llr) -> Self::Llr;
    fn f(&self, a: Self::Llr, b: Self::Llr) -> Self::Llr;
    fn g(&self, a: Self::Llr, b: Self::Llr, bit: u8) -> Self::Llr;
    fn magnitude(&self, a: Self::Llr) -> Self::Llr;
    /// Exact real value, used for correlation metrics.
    fn to_f64(&self, a: Self::Llr) -> f64;

    /// `L < 0 → 1`, ties to 0.
    #[inline]
    fn hard(&self, a: Self::Llr) -> u8 {
        u8::from(a < Self::Llr::default())
    }
}

impl LlrArithmetic for FixedPoint {
    type Llr = i32;

    fn channel_llr(&self, y: f64, _sigma2: f64) -> i32 {
        self.quantize(y)
    }

    fn coefficient(&self, c: f64, _sigma2: f64) -> i32 {
        self.quantize(c)
    }

    #[inline]
    fn add(&self, a: i32, b: i32) -> i32 {
        self.sat_add(a, b)
    }

    #[inline]
    fn neg(&self, a: i32) -> i32 {
        -a
    }

    #[inline]
    fn f(&self, a: i32, b: i32) -> i32 {
        self.f_min(a, b)
    }

    #[inline]
    fn g(&self, a: i32, b: i32, bit: u8) -> i32 {
        self.g_comb(a, b, bit)
    }

    #[inline]
    fn magnitude(&self, a: i32) -> i32 {
        a.abs()
    }

    #[inline]
    fn to_f64(&self, a: i32) -> f64 {
        f64::from(a)
    }
}

impl LlrArithmetic for FloatLlr {
    type Llr = f64;

    fn channel_llr(&self, y: f64, sigma2: f64) -> f64 {
        match self.scaling {
            NoiseScaling::Channel => 2.0 * y / sigma2,
            NoiseScaling::Cancelled => y,
        }
    }

    fn coefficient(&self, c: f64, sigma2: f64) -> f64 {
        match self.scaling {
            NoiseScaling::Channel => 2.0 * c / sigma2,
            NoiseScaling::Cancelled => c,
        }
    }

    #[inline]
    fn add(&self, a: f64, b: f64) -> f64 {
        a + b
    }

    #[inline]
    fn neg(&self, a: f64) -> f64 {
        -a
    }

    #[inline]
    fn f(&self, a: f64, b: f64) -> f64 {
        if self.exact {
            boxplus(a, b)
        } else {
            let m = a.abs().min(b.abs());
            if (a < 0.0) != (b < 0.0) {
                -m
            } else {
                m
            }
        }
    }

    #[inline]
    fn g(&self, a: f64, b: f64, bit: u8) -> f64 {
        if bit == 0 {
            b + a
        } else {
            b - a
        }
    }

    #[inline]
    fn magnitude(&self, a: f64) -> f64 {
        a.abs()
    }

    #[inline]
    fn to_f64(&self, a: f64) -> f64 {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q6f2() -> FixedPoint {
        FixedPoint::new(6, 2).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let q = q6f2();
        assert_eq!(q.quantize(0.0), 0);
        assert_eq!(q.quantize(100.0), 31);
        assert_eq!(q.quantize(-100.0), -31);
        assert_eq!(q.quantize(-1.3), -5);
        // ties away from zero
        assert_eq!(q.quantize(0.125), 1);
        assert_eq!(q.quantize(-0.125), -1);
    }

    #[test]
    fn word_ops() {
        let q = q6f2();
        assert_eq!(q.f_min(5, -3), -3);
        assert_eq!(q.f_min(-5, -3), 3);
        assert_eq!(q.g_comb(4, 2, 1), -2);
        assert_eq!(q.g_comb(4, 2, 0), 6);
        assert_eq!(q.sat_add(30, 30), 31);
        assert_eq!(q.sat_add(-30, -30), -31);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("Q6F2".parse::<QuantSpec>().unwrap(), QuantSpec::fixed(6, 2).unwrap());
        assert_eq!("q5".parse::<QuantSpec>().unwrap(), QuantSpec::fixed(5, 3).unwrap());
        assert_eq!("float".parse::<QuantSpec>().unwrap(), QuantSpec::float());
        assert_eq!("float-exact".parse::<QuantSpec>().unwrap(), QuantSpec::Float { exact: true });
        for bad in ["Q9F2", "Q6F5", "Q3", "fixed", "Q6Fx", ""] {
            assert!(bad.parse::<QuantSpec>().is_err(), "{bad}");
        }
        let q: QuantSpec = "Q6F2".parse().unwrap();
        assert_eq!(q.to_string(), "Q6F2");
        assert_eq!(q.clip(), Some(31));
    }

    #[test]
    fn boxplus_matches_definition() {
        for &(a, b) in &[(1.0, 2.0), (-0.5, 3.0), (4.0, -4.0), (0.1, 0.2), (6.0, 7.5)] {
            let exact = 2.0 * ((a / 2.0f64).tanh() * (b / 2.0f64).tanh()).atanh();
            assert!((boxplus(a, b) - exact).abs() < 1e-9, "{a} {b}");
        }
    }

    proptest! {
        #[test]
        fn ops_stay_on_grid(a in -31i32..=31, b in -31i32..=31, bit in 0u8..=1, x in -1e3f64..1e3) {
            let q = q6f2();
            for v in [q.sat_add(a, b), q.f_min(a, b), q.g_comb(a, b, bit), q.quantize(x)] {
                prop_assert!(v.abs() <= 31);
            }
        }

        #[test]
        fn quantize_is_monotone(x in -20.0f64..20.0, d in 0.0f64..5.0, bits in 4u8..=8) {
            let q = FixedPoint::new(bits, QuantSpec::default_frac_bits(bits)).unwrap();
            prop_assert!(q.quantize(x) <= q.quantize(x + d));
        }
    }
}
