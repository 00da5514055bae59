use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fixed::FxFormat;
use super::udf::WeightMatrix;
use crate::error::{Error, Result};
use crate::graph::{read_u32, read_u8};

const WGT_MAGIC: &[u8; 8] = b"GRIPWGT1";

/// Declared shape of one plan matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub fmt: FxFormat,
    /// Input width used to scale random initialisation.
    pub fan_in: usize,
}

/// Matrices indexed by [`super::WeightId`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WeightSet {
    pub matrices: Vec<WeightMatrix>,
}

impl WeightSet {
    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in))`, one stream per matrix.
    pub fn seeded(specs: &[WeightSpec], seed: u64) -> Self {
        let matrices = specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5747_5400_0000_0000 ^ (i as u64).wrapping_mul(0x9E37_79B9));
                let r = 1.0 / (s.fan_in.max(1) as f64).sqrt();
                let data = (0..s.rows * s.cols).map(|_| s.fmt.quantize(rng.gen_range(-r..r))).collect();
                WeightMatrix { rows: s.rows, cols: s.cols, fmt: s.fmt, data }
            })
            .collect();
        WeightSet { matrices }
    }

    pub fn get(&self, id: usize) -> Result<&WeightMatrix> {
        self.matrices.get(id).ok_or_else(|| Error::unknown("weight", id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Each matrix must match its spec in shape and format.
    pub fn check(&self, specs: &[WeightSpec]) -> Result<()> {
        if self.matrices.len() != specs.len() {
            return Err(Error::shape(format!("{} matrices for {} declared weights", self.matrices.len(), specs.len())));
        }
        for (m, s) in self.matrices.iter().zip(specs) {
            if (m.rows, m.cols, m.fmt) != (s.rows, s.cols, s.fmt) {
                return Err(Error::shape(format!(
                    "weight {} is {}x{} {}, expected {}x{} {}",
                    s.name, m.rows, m.cols, m.fmt, s.rows, s.cols, s.fmt
                )));
            }
        }
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(WGT_MAGIC)?;
        w.write_all(&(self.matrices.len() as u32).to_le_bytes())?;
        for m in &self.matrices {
            w.write_all(&(m.rows as u32).to_le_bytes())?;
            w.write_all(&(m.cols as u32).to_le_bytes())?;
            w.write_all(&[m.fmt.to_byte()])?;
            let bytes: Vec<u8> = m.data.iter().flat_map(|x| x.to_le_bytes()).collect();
            w.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != WGT_MAGIC {
            return Err(Error::Format("missing GRIPWGT1 magic".into()));
        }
        let n = read_u32(r)?;
        let mut matrices = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let rows = read_u32(r)? as usize;
            let cols = read_u32(r)? as usize;
            let fmt = FxFormat::from_byte(read_u8(r)?)?;
            let mut bytes = vec![0u8; rows * cols * 2];
            r.read_exact(&mut bytes)?;
            let data = bytes.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
            matrices.push(WeightMatrix { rows, cols, fmt, data });
        }
        Ok(WeightSet { matrices })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs() -> Vec<WeightSpec> {
        vec![
            WeightSpec { name: "w".into(), rows: 3, cols: 4, fmt: FxFormat::Q2_14, fan_in: 4 },
            WeightSpec { name: "b".into(), rows: 1, cols: 3, fmt: FxFormat::Q4_12, fan_in: 4 },
        ]
    }

    #[test]
    fn seeded_in_range_and_deterministic() {
        let w = WeightSet::seeded(&specs(), 5);
        assert_eq!(w, WeightSet::seeded(&specs(), 5));
        w.check(&specs()).unwrap();
        let m = &w.matrices[0];
        assert!(m.to_f64().iter().all(|x| x.abs() <= 0.5));
    }

    #[test]
    fn file_round_trip() {
        let w = WeightSet::seeded(&specs(), 1);
        let mut buf = Vec::new();
        w.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"GRIPWGT1");
        assert_eq!(buf[8..12], 2u32.to_le_bytes());
        assert_eq!(buf[20], 14);
        assert_eq!(WeightSet::read_from(&mut buf.as_slice()).unwrap(), w);
    }

    #[test]
    fn check_rejects_wrong_shape() {
        let mut w = WeightSet::seeded(&specs(), 1);
        w.matrices[0] = WeightMatrix::zeros(4, 3, FxFormat::Q2_14);
        assert!(w.check(&specs()).is_err());
    }
}
