//! 16-bit two's-complement fixed point with 32-bit accumulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 16-bit Q-format. `int_bits` counts the sign bit, so `Q4.12` spans [-8, 8).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FxFormat {
    frac_bits: u8,
}

impl FxFormat {
    pub const TOTAL_BITS: u8 = 16;
    /// Feature / accumulator format, also the LUT input format.
    pub const Q4_12: FxFormat = FxFormat { frac_bits: 12 };
    /// Weight format.
    pub const Q2_14: FxFormat = FxFormat { frac_bits: 14 };

    pub fn new(int_bits: u8, frac_bits: u8) -> Result<Self> {
        if int_bits == 0 || int_bits as u16 + frac_bits as u16 != Self::TOTAL_BITS as u16 {
            return Err(Error::param(format!("Q{int_bits}.{frac_bits} is not a 16-bit format")));
        }
        Ok(FxFormat { frac_bits })
    }

    pub fn from_frac_bits(frac_bits: u8) -> Result<Self> {
        if frac_bits >= Self::TOTAL_BITS {
            return Err(Error::param(format!("{frac_bits} fractional bits leave no sign bit")));
        }
        Ok(FxFormat { frac_bits })
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits as u32
    }

    pub fn int_bits(self) -> u32 {
        Self::TOTAL_BITS as u32 - self.frac_bits as u32
    }

    /// One unit in the last place.
    pub fn ulp(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_value(self) -> f64 {
        i16::MAX as f64 * self.ulp()
    }

    pub fn min_value(self) -> f64 {
        i16::MIN as f64 * self.ulp()
    }

    /// Byte used for this format in binary files.
    pub fn to_byte(self) -> u8 {
        self.frac_bits
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        Self::from_frac_bits(b)
    }

    /// Round-to-nearest-even, saturating.
    pub fn quantize(self, x: f64) -> i16 {
        if x.is_nan() {
            return 0;
        }
        let scaled = (x * (self.frac_bits as f64).exp2()).round_ties_even();
        scaled.clamp(i16::MIN as f64, i16::MAX as f64) as i16
    }

    pub fn dequantize(self, raw: i16) -> f64 {
        raw as f64 * self.ulp()
    }
}

impl Default for FxFormat {
    fn default() -> Self {
        FxFormat::Q4_12
    }
}

impl std::fmt::Display for FxFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Q{}.{}", self.int_bits(), self.frac_bits)
    }
}

/// Saturating narrow of an i32 to i16.
#[inline]
pub fn saturate_i16(v: i64) -> i16 {
    v.clamp(i16::MIN as i64, i16::MAX as i64) as i16
}

/// Arithmetic right shift with round-half-to-even.
#[inline]
pub fn round_shift(v: i64, shift: u32) -> i64 {
    if shift == 0 {
        return v;
    }
    let floor = v >> shift;
    let rem = v - (floor << shift);
    let half = 1i64 << (shift - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Rescales a raw value between fractional widths, rounding to nearest even.
#[inline]
pub fn rescale(v: i64, from_frac: u32, to_frac: u32) -> i64 {
    if from_frac >= to_frac {
        round_shift(v, from_frac - to_frac)
    } else {
        v << (to_frac - from_frac)
    }
}

/// A scalar with its format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FxScalar {
    pub raw: i16,
    pub fmt: FxFormat,
}

impl FxScalar {
    pub fn from_f64(x: f64, fmt: FxFormat) -> Self {
        FxScalar { raw: fmt.quantize(x), fmt }
    }

    pub fn to_f64(self) -> f64 {
        self.fmt.dequantize(self.raw)
    }
}

/// A contiguous fixed-point vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedVec {
    pub fmt: FxFormat,
    pub data: Vec<i16>,
}

impl FixedVec {
    pub fn zeros(len: usize, fmt: FxFormat) -> Self {
        FixedVec { fmt, data: vec![0; len] }
    }

    pub fn from_raw(data: Vec<i16>, fmt: FxFormat) -> Self {
        FixedVec { fmt, data }
    }

    pub fn quantize(xs: &[f64], fmt: FxFormat) -> Self {
        FixedVec { fmt, data: xs.iter().map(|&x| fmt.quantize(x)).collect() }
    }

    pub fn dequantize(&self) -> Vec<f64> {
        self.data.iter().map(|&r| self.fmt.dequantize(r)).collect()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_round_trip() {
        let f = FxFormat::Q4_12;
        assert_eq!(f.quantize(0.0), 0);
        assert_eq!(f.dequantize(0), 0.0);
    }

    #[test]
    fn one_is_4096_in_q4_12() {
        assert_eq!(FxFormat::Q4_12.quantize(1.0), 4096);
        assert_eq!(FxFormat::Q2_14.quantize(1.0), 16384);
    }

    #[test]
    fn saturates_instead_of_wrapping() {
        let f = FxFormat::Q4_12;
        assert_eq!(f.quantize(100.0), i16::MAX);
        assert_eq!(f.quantize(-100.0), i16::MIN);
        assert_eq!(f.quantize(f64::INFINITY), i16::MAX);
    }

    #[test]
    fn ties_go_to_even() {
        let f = FxFormat::Q4_12;
        let half = f.ulp() / 2.0;
        assert_eq!(f.quantize(half), 0);
        assert_eq!(f.quantize(3.0 * half), 2);
        assert_eq!(round_shift(3, 1), 2);
        assert_eq!(round_shift(5, 1), 2);
        assert_eq!(round_shift(-3, 1), -2);
        assert_eq!(round_shift(-5, 1), -2);
        assert_eq!(round_shift(7, 2), 2);
    }

    #[test]
    fn every_raw_value_round_trips() {
        for fmt in [FxFormat::Q4_12, FxFormat::Q2_14, FxFormat::from_frac_bits(0).unwrap()] {
            for raw in i16::MIN..=i16::MAX {
                assert_eq!(fmt.quantize(fmt.dequantize(raw)), raw);
            }
        }
    }

    #[test]
    fn format_validation() {
        assert!(FxFormat::new(4, 12).is_ok());
        assert!(FxFormat::new(4, 11).is_err());
        assert!(FxFormat::from_frac_bits(16).is_err());
        assert_eq!(FxFormat::Q4_12.to_string(), "Q4.12");
    }
}
