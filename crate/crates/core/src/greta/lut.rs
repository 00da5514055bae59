//! Two-level piecewise-linear lookup table over Q4.12 inputs.

use serde::{Deserialize, Serialize};

use super::fixed::{round_shift, saturate_i16, FixedVec, FxFormat};
use crate::error::{Error, Result};

pub const LEVEL1_ENTRIES: usize = 33;
pub const LEVEL2_ENTRIES: usize = 9;
pub const LUT_INPUT_FORMAT: FxFormat = FxFormat::Q4_12;
pub const MIN_EXPONENT: i32 = -8;
pub const MAX_EXPONENT: i32 = 3;

/// Behaviour beyond the outer table, chosen separately per sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overflow {
    /// Hold the outermost level-2 entry.
    Clamp,
    /// `slope * x + intercept`.
    Linear { slope: f64, intercept: f64 },
}

/// log2 of the node spacing in raw input units.
fn step_log(e: i32, entries: usize) -> u32 {
    (e + 1 + LUT_INPUT_FORMAT.frac_bits() as i32) as u32 - (entries - 1).trailing_zeros()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lut {
    pub a: i32,
    pub b: i32,
    pub fmt: FxFormat,
    pub level1: Vec<i16>,
    pub level2: Vec<i16>,
    pub negative: Overflow,
    pub positive: Overflow,
}

impl Lut {
    /// Tabulates `f` at the uniform nodes of both levels.
    pub fn build(f: impl Fn(f64) -> f64, a: i32, b: i32, negative: Overflow, positive: Overflow) -> Result<Self> {
        if b <= a {
            return Err(Error::param(format!("lut needs b > a, got a={a} b={b}")));
        }
        if !(MIN_EXPONENT..=MAX_EXPONENT).contains(&a) || !(MIN_EXPONENT..=MAX_EXPONENT).contains(&b) {
            return Err(Error::param(format!("lut exponents must lie in [{MIN_EXPONENT}, {MAX_EXPONENT}]")));
        }
        let fmt = LUT_INPUT_FORMAT;
        let table = |e: i32, n: usize| -> Vec<i16> {
            let lo = -(e as f64).exp2();
            let step = (e as f64 + 1.0).exp2() / (n - 1) as f64;
            (0..n).map(|i| fmt.quantize(f(lo + i as f64 * step))).collect()
        };
        Ok(Lut { a, b, fmt, level1: table(a, LEVEL1_ENTRIES), level2: table(b, LEVEL2_ENTRIES), negative, positive })
    }

    pub fn sigmoid(a: i32, b: i32) -> Result<Self> {
        Lut::build(|x| 1.0 / (1.0 + (-x).exp()), a, b, Overflow::Clamp, Overflow::Clamp)
    }

    /// Input position of node `i` of a level with exponent `e`, in raw units.
    pub fn node(e: i32, entries: usize, i: usize) -> i64 {
        let step_log = step_log(e, entries);
        -(1i64 << (e + LUT_INPUT_FORMAT.frac_bits() as i32)) + ((i as i64) << step_log)
    }

    fn interp(table: &[i16], e: i32, x: i64) -> i16 {
        let step_log = step_log(e, table.len());
        let off = x + (1i64 << (e + LUT_INPUT_FORMAT.frac_bits() as i32));
        let idx = (off >> step_log) as usize;
        if idx >= table.len() - 1 {
            return table[table.len() - 1];
        }
        let frac = off - ((idx as i64) << step_log);
        let (y0, y1) = (table[idx] as i64, table[idx + 1] as i64);
        saturate_i16(y0 + round_shift((y1 - y0) * frac, step_log))
    }

    /// Evaluates one Q4.12 raw input.
    pub fn eval_raw(&self, x: i16) -> i16 {
        let x = x as i64;
        let frac = LUT_INPUT_FORMAT.frac_bits() as i32;
        if x.abs() <= 1i64 << (self.a + frac) {
            return Self::interp(&self.level1, self.a, x);
        }
        if x.abs() <= 1i64 << (self.b + frac) {
            return Self::interp(&self.level2, self.b, x);
        }
        let (policy, edge) = if x < 0 {
            (self.negative, self.level2[0])
        } else {
            (self.positive, self.level2[LEVEL2_ENTRIES - 1])
        };
        match policy {
            Overflow::Clamp => edge,
            Overflow::Linear { slope, intercept } => {
                let s = self.fmt.quantize(slope) as i64;
                let c = self.fmt.quantize(intercept) as i64;
                saturate_i16(round_shift(s * x, frac as u32) + c)
            }
        }
    }

    pub fn eval_vec(&self, v: &FixedVec) -> Result<FixedVec> {
        if v.fmt != LUT_INPUT_FORMAT {
            return Err(Error::param(format!("lut input must be {LUT_INPUT_FORMAT}, got {}", v.fmt)));
        }
        Ok(FixedVec::from_raw(v.data.iter().map(|&x| self.eval_raw(x)).collect(), self.fmt))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.fmt.dequantize(self.eval_raw(LUT_INPUT_FORMAT.quantize(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIGMOID_A1_B3_MAX_ERR: f64 = 0.021635946812387945;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn center_node_is_half() {
        let l = Lut::sigmoid(1, 3).unwrap();
        assert_eq!(l.level1[16], FxFormat::Q4_12.quantize(0.5));
        assert_eq!(l.level1[0], FxFormat::Q4_12.quantize(sig(-2.0)));
        assert_eq!(l.level2[0], FxFormat::Q4_12.quantize(sig(-8.0)));
    }

    #[test]
    fn nodes_return_entries_verbatim() {
        let l = Lut::sigmoid(1, 3).unwrap();
        for i in 0..LEVEL1_ENTRIES {
            let x = Lut::node(1, LEVEL1_ENTRIES, i);
            assert_eq!(l.eval_raw(x as i16), l.level1[i], "node {i}");
        }
        // Level-2 nodes outside level 1.
        for i in [0usize, 1, 2, 6, 7] {
            let x = Lut::node(3, LEVEL2_ENTRIES, i);
            if x.abs() > 1 << 13 && x <= i16::MAX as i64 {
                assert_eq!(l.eval_raw(x as i16), l.level2[i], "node {i}");
            }
        }
    }

    #[test]
    fn node_spacing() {
        assert_eq!(Lut::node(1, 33, 1) - Lut::node(1, 33, 0), 4096 * 4 / 32);
        assert_eq!(Lut::node(2, 9, 1) - Lut::node(2, 9, 0), 4096 * 8 / 8);
    }

    #[test]
    fn rejects_b_not_above_a() {
        assert!(Lut::sigmoid(2, 2).is_err());
        assert!(Lut::sigmoid(3, 1).is_err());
        assert!(Lut::sigmoid(-9, 1).is_err());
    }

    #[test]
    fn clamp_above_outer_range() {
        let l = Lut::sigmoid(0, 2).unwrap();
        let just_above = (4 << 12) + 1;
        assert_eq!(l.eval_raw(just_above), l.level2[8]);
        assert_eq!(l.eval_raw(-just_above), l.level2[0]);
    }

    #[test]
    fn linear_overflow() {
        let l = Lut::build(|x| x, 0, 1, Overflow::Linear { slope: 1.0, intercept: 0.0 }, Overflow::Linear { slope: 0.5, intercept: 1.0 })
            .unwrap();
        assert_eq!(l.eval_f64(-3.0), -3.0);
        assert_eq!(l.eval_f64(4.0), 3.0);
    }

    #[test]
    fn sigmoid_error_bound() {
        let l = Lut::sigmoid(1, 3).unwrap();
        let worst = (i16::MIN..=i16::MAX)
            .map(|r| (l.fmt.dequantize(l.eval_raw(r)) - sig(LUT_INPUT_FORMAT.dequantize(r))).abs())
            .fold(0.0, f64::max);
        // Measured once over every input; dominated by the coarse outer level.
        assert!((worst - SIGMOID_A1_B3_MAX_ERR).abs() < 1e-12, "{worst}");
    }
}
