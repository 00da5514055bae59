//! The four stateless UDF families over 16-bit vectors.

use serde::{Deserialize, Serialize};

use super::fixed::{round_shift, saturate_i16, FixedVec, FxFormat, FxScalar};
use super::lut::Lut;
use crate::error::{Error, Result};

/// Index of a per-layer vertex feature table. Slot 0 is the layer input.
pub type Slot = usize;
pub const INPUT_SLOT: Slot = 0;

/// One gather operand: a source- or destination-vertex feature table, or edge data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operand {
    Src(Slot),
    Dst(Slot),
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GatherKind {
    IdentitySrc(Slot),
    IdentityDst(Slot),
    ElementwiseSum(Operand, Operand),
    ElementwiseProduct(Operand, Operand),
    ScaleByConstant(Operand, FxScalar),
}

impl GatherKind {
    pub fn operands(&self) -> Vec<Operand> {
        match *self {
            GatherKind::IdentitySrc(s) => vec![Operand::Src(s)],
            GatherKind::IdentityDst(s) => vec![Operand::Dst(s)],
            GatherKind::ElementwiseSum(a, b) | GatherKind::ElementwiseProduct(a, b) => vec![a, b],
            GatherKind::ScaleByConstant(a, _) => vec![a],
        }
    }
}

/// Operand values visible to one edge.
pub trait GatherInputs {
    fn src(&self, slot: Slot) -> Option<&FixedVec>;
    fn dst(&self, slot: Slot) -> Option<&FixedVec>;
    fn edge(&self) -> Option<&FixedVec>;
}

/// Single-table inputs: every slot resolves to the same vectors.
pub struct EdgeValues<'a> {
    pub src: &'a FixedVec,
    pub dst: &'a FixedVec,
    pub edge: Option<&'a FixedVec>,
}

impl GatherInputs for EdgeValues<'_> {
    fn src(&self, _: Slot) -> Option<&FixedVec> {
        Some(self.src)
    }
    fn dst(&self, _: Slot) -> Option<&FixedVec> {
        Some(self.dst)
    }
    fn edge(&self) -> Option<&FixedVec> {
        self.edge
    }
}

fn operand(op: Operand, inp: &impl GatherInputs) -> Result<&FixedVec> {
    let v = match op {
        Operand::Src(s) => inp.src(s),
        Operand::Dst(s) => inp.dst(s),
        Operand::Edge => inp.edge(),
    };
    v.ok_or_else(|| Error::Program(format!("gather operand {op:?} unavailable")))
}

fn same_len(a: &FixedVec, b: &FixedVec) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("gather operands of length {} and {}", a.len(), b.len())));
    }
    Ok(())
}

/// Saturating `a + b`, `b` rescaled to `a`'s format.
pub fn add_sat(a: &FixedVec, b: &FixedVec) -> Result<FixedVec> {
    same_len(a, b)?;
    let (fa, fb) = (a.fmt.frac_bits(), b.fmt.frac_bits());
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| saturate_i16(x as i64 + super::fixed::rescale(y as i64, fb, fa)))
        .collect();
    Ok(FixedVec::from_raw(data, a.fmt))
}

/// Elementwise product, result in `a`'s format.
pub fn mul_sat(a: &FixedVec, b: &FixedVec) -> Result<FixedVec> {
    same_len(a, b)?;
    let shift = b.fmt.frac_bits();
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| saturate_i16(round_shift(x as i64 * y as i64, shift)))
        .collect();
    Ok(FixedVec::from_raw(data, a.fmt))
}

pub fn scale_sat(a: &FixedVec, c: FxScalar) -> FixedVec {
    let shift = c.fmt.frac_bits();
    let data = a.data.iter().map(|&x| saturate_i16(round_shift(x as i64 * c.raw as i64, shift))).collect();
    FixedVec::from_raw(data, a.fmt)
}

pub fn gather_apply(kind: &GatherKind, inp: &impl GatherInputs) -> Result<FixedVec> {
    match *kind {
        GatherKind::IdentitySrc(s) => operand(Operand::Src(s), inp).cloned(),
        GatherKind::IdentityDst(s) => operand(Operand::Dst(s), inp).cloned(),
        GatherKind::ElementwiseSum(a, b) => add_sat(operand(a, inp)?, operand(b, inp)?),
        GatherKind::ElementwiseProduct(a, b) => mul_sat(operand(a, inp)?, operand(b, inp)?),
        GatherKind::ScaleByConstant(a, c) => Ok(scale_sat(operand(a, inp)?, c)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReduceKind {
    Sum,
    Max,
    Mean,
}

/// Running edge accumulator: 32-bit lanes plus a message count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReduceState {
    pub kind: ReduceKind,
    pub fmt: FxFormat,
    pub acc: Vec<i32>,
    pub count: u32,
}

impl ReduceState {
    pub fn new(kind: ReduceKind, len: usize, fmt: FxFormat) -> Self {
        let init = if kind == ReduceKind::Max { i16::MIN as i32 } else { 0 };
        ReduceState { kind, fmt, acc: vec![init; len], count: 0 }
    }

    /// A state that already holds `seed` as its first message.
    pub fn seeded(kind: ReduceKind, seed: &FixedVec) -> Self {
        let mut s = ReduceState::new(kind, seed.len(), seed.fmt);
        s.fold(seed).expect("lengths match by construction");
        s
    }

    pub fn len(&self) -> usize {
        self.acc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acc.is_empty()
    }

    pub fn fold(&mut self, msg: &FixedVec) -> Result<()> {
        if msg.len() != self.acc.len() {
            return Err(Error::shape(format!("message length {} into accumulator {}", msg.len(), self.acc.len())));
        }
        match self.kind {
            ReduceKind::Sum | ReduceKind::Mean => {
                for (a, &m) in self.acc.iter_mut().zip(&msg.data) {
                    *a = a.saturating_add(m as i32);
                }
            }
            ReduceKind::Max => {
                for (a, &m) in self.acc.iter_mut().zip(&msg.data) {
                    *a = (*a).max(m as i32);
                }
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Narrows to 16 bits. Mean multiplies by a 16-fraction-bit reciprocal
    /// of the count. An empty state finalizes to zeros.
    pub fn finalize(&self) -> FixedVec {
        if self.count == 0 {
            return FixedVec::zeros(self.acc.len(), self.fmt);
        }
        let data = match self.kind {
            ReduceKind::Sum | ReduceKind::Max => self.acc.iter().map(|&a| saturate_i16(a as i64)).collect(),
            ReduceKind::Mean => {
                let recip = mean_reciprocal(self.count);
                self.acc.iter().map(|&a| saturate_i16(round_shift(a as i64 * recip, 16))).collect()
            }
        };
        FixedVec::from_raw(data, self.fmt)
    }
}

/// `round(2^16 / count)`.
pub fn mean_reciprocal(count: u32) -> i64 {
    let c = count as i64;
    ((1i64 << 17) + c) / (2 * c)
}

pub fn reduce_apply(state: &mut ReduceState, msg: &FixedVec) -> Result<()> {
    state.fold(msg)
}

/// Identifier of a matrix inside a [`super::WeightSet`].
pub type WeightId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    /// `a_v + e_v`.
    None,
    /// `a_v + bias + W e_v`.
    Matmul { weight: WeightId, bias: Option<WeightId> },
}

/// A 16-bit row-major matrix, `rows x cols`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub rows: usize,
    pub cols: usize,
    pub fmt: FxFormat,
    pub data: Vec<i16>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, fmt: FxFormat, data: Vec<i16>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!("{rows}x{cols} matrix with {} values", data.len())));
        }
        Ok(WeightMatrix { rows, cols, fmt, data })
    }

    pub fn zeros(rows: usize, cols: usize, fmt: FxFormat) -> Self {
        WeightMatrix { rows, cols, fmt, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize, fmt: FxFormat) -> Self {
        let mut m = Self::zeros(n, n, fmt);
        let one = fmt.quantize(1.0);
        for i in 0..n {
            m.data[i * n + i] = one;
        }
        m
    }

    pub fn row(&self, r: usize) -> &[i16] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&x| self.fmt.dequantize(x)).collect()
    }

    /// The bias row as a vector.
    pub fn as_vector(&self) -> FixedVec {
        FixedVec::from_raw(self.data.clone(), self.fmt)
    }
}

/// 32-bit accumulators in `2^-(w.frac + e.frac)` units, initialised
/// from `a_v`. Split out so callers can feed `e_v` in column slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatvecAcc {
    pub acc: Vec<i32>,
    pub frac: u32,
    pub out_fmt: FxFormat,
}

impl MatvecAcc {
    pub fn new(a_v: &FixedVec, w: &WeightMatrix, e_fmt: FxFormat) -> Result<Self> {
        if a_v.len() != w.rows {
            return Err(Error::shape(format!("a_v length {} for {}x{} weights", a_v.len(), w.rows, w.cols)));
        }
        let frac = w.fmt.frac_bits() + e_fmt.frac_bits();
        let up = frac - a_v.fmt.frac_bits();
        let acc = a_v.data.iter().map(|&x| ((x as i64) << up).clamp(i32::MIN as i64, i32::MAX as i64) as i32).collect();
        Ok(MatvecAcc { acc, frac, out_fmt: a_v.fmt })
    }

    /// Adds `W[:, lo..lo+slice.len()] * slice`, in column order.
    pub fn accumulate(&mut self, w: &WeightMatrix, lo: usize, slice: &[i16]) {
        for (r, a) in self.acc.iter_mut().enumerate() {
            let row = &w.row(r)[lo..lo + slice.len()];
            for (&wi, &ei) in row.iter().zip(slice) {
                *a = a.saturating_add(wi as i32 * ei as i32);
            }
        }
    }

    pub fn finish(&self) -> FixedVec {
        let shift = self.frac - self.out_fmt.frac_bits();
        let data = self.acc.iter().map(|&a| saturate_i16(round_shift(a as i64, shift))).collect();
        FixedVec::from_raw(data, self.out_fmt)
    }
}

/// `a_v + W e_v` with a single rounding per output element.
pub fn transform_apply(w: &WeightMatrix, a_v: &FixedVec, e_v: &FixedVec) -> Result<FixedVec> {
    if e_v.len() != w.cols {
        return Err(Error::shape(format!("e_v length {} for {}x{} weights", e_v.len(), w.rows, w.cols)));
    }
    let mut acc = MatvecAcc::new(a_v, w, e_v.fmt)?;
    acc.accumulate(w, 0, &e_v.data);
    Ok(acc.finish())
}

/// Identifier of a LUT inside a plan.
pub type LutId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivateKind {
    Identity,
    Relu,
    Lut(LutId),
}

pub fn activate_apply(kind: ActivateKind, v: &FixedVec, luts: &[Lut]) -> Result<FixedVec> {
    match kind {
        ActivateKind::Identity => Ok(v.clone()),
        ActivateKind::Relu => Ok(FixedVec::from_raw(v.data.iter().map(|&x| x.max(0)).collect(), v.fmt)),
        ActivateKind::Lut(id) => {
            let lut = luts.get(id).ok_or_else(|| Error::unknown("lut", id.to_string()))?;
            lut.eval_vec(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: FxFormat = FxFormat::Q4_12;

    fn fv(xs: &[f64]) -> FixedVec {
        FixedVec::quantize(xs, Q)
    }

    #[test]
    fn identity_src_picks_source() {
        let (u, v) = (fv(&[1.0, 2.0]), fv(&[9.0 - Q.ulp(), 7.0]));
        let inp = EdgeValues { src: &u, dst: &v, edge: None };
        assert_eq!(gather_apply(&GatherKind::IdentitySrc(0), &inp).unwrap(), u);
        assert_eq!(gather_apply(&GatherKind::IdentityDst(0), &inp).unwrap(), v);
        assert!(gather_apply(&GatherKind::ElementwiseSum(Operand::Src(0), Operand::Edge), &inp).is_err());
    }

    #[test]
    fn product_with_ones_is_identity() {
        let x = fv(&[0.5, -1.25, 3.0, -7.9]);
        assert_eq!(mul_sat(&x, &fv(&[1.0; 4])).unwrap(), x);
    }

    #[test]
    fn sum_saturates_at_format_max() {
        let big = FixedVec::from_raw(vec![i16::MAX - 1, i16::MIN + 1], Q);
        let r = add_sat(&big, &big).unwrap();
        assert_eq!(r.data, vec![i16::MAX, i16::MIN]);
        assert!(add_sat(&big, &fv(&[1.0])).is_err());
    }

    #[test]
    fn scale_by_half() {
        let c = FxScalar::from_f64(0.5, Q);
        assert_eq!(scale_sat(&fv(&[2.0, -3.0]), c), fv(&[1.0, -1.5]));
    }

    #[test]
    fn max_fold() {
        let mut s = ReduceState::new(ReduceKind::Max, 2, Q);
        s.fold(&fv(&[1.0, 5.0])).unwrap();
        s.fold(&fv(&[3.0, 2.0])).unwrap();
        assert_eq!(s.finalize(), fv(&[3.0, 5.0]));
    }

    #[test]
    fn mean_of_single_message() {
        let m = FixedVec::from_raw(vec![i16::MAX, i16::MIN, 1, -1, 12345], Q);
        let mut s = ReduceState::new(ReduceKind::Mean, 5, Q);
        s.fold(&m).unwrap();
        assert_eq!(s.finalize(), m);
    }

    #[test]
    fn mean_reciprocal_rounds() {
        assert_eq!(mean_reciprocal(1), 65536);
        assert_eq!(mean_reciprocal(3), 21845);
        assert_eq!(mean_reciprocal(2), 32768);
        assert_eq!(mean_reciprocal(7), 9362);
    }

    #[test]
    fn mean_of_two() {
        let mut s = ReduceState::new(ReduceKind::Mean, 1, Q);
        s.fold(&FixedVec::from_raw(vec![3], Q)).unwrap();
        s.fold(&FixedVec::from_raw(vec![2], Q)).unwrap();
        // 5/2 = 2.5 rounds to even.
        assert_eq!(s.finalize().data, vec![2]);
    }

    #[test]
    fn empty_reduce_is_zero() {
        assert_eq!(ReduceState::new(ReduceKind::Max, 3, Q).finalize(), FixedVec::zeros(3, Q));
    }

    #[test]
    fn identity_weights_pass_through() {
        let e = fv(&[0.25, -1.0, 7.5]);
        let w = WeightMatrix::identity(3, FxFormat::Q2_14);
        assert_eq!(transform_apply(&w, &FixedVec::zeros(3, Q), &e).unwrap(), e);
        let a = fv(&[1.0, 2.0]);
        assert_eq!(transform_apply(&WeightMatrix::zeros(2, 3, FxFormat::Q2_14), &a, &e).unwrap(), a);
        assert!(transform_apply(&w, &a, &e).is_err());
    }

    #[test]
    fn sliced_accumulation_matches_whole() {
        let w = WeightMatrix::new(2, 4, FxFormat::Q2_14, vec![100, -200, 300, -400, 5, 6, 7, 8]).unwrap();
        let e = FixedVec::from_raw(vec![1000, 2000, -3000, 4000], Q);
        let a = FixedVec::from_raw(vec![7, -7], Q);
        let whole = transform_apply(&w, &a, &e).unwrap();
        let mut acc = MatvecAcc::new(&a, &w, Q).unwrap();
        acc.accumulate(&w, 0, &e.data[..3]);
        acc.accumulate(&w, 3, &e.data[3..]);
        assert_eq!(acc.finish(), whole);
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(activate_apply(ActivateKind::Relu, &fv(&[-1.0, 2.0]), &[]).unwrap(), fv(&[0.0, 2.0]));
        assert!(activate_apply(ActivateKind::Lut(0), &fv(&[0.0]), &[]).is_err());
    }
}
