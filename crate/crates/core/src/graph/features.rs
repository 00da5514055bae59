use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::io::{read_u32, read_u64, read_u8};
use super::Graph;
use crate::error::{Error, Result};
use crate::greta::{FixedVec, FxFormat};

const FEATURE_MAGIC: &[u8; 8] = b"GRIPFEA1";
const TAG_F64: u8 = 0x00;
const TAG_FIXED: u8 = 0x80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Float64,
    Fixed16(FxFormat),
}

impl Precision {
    fn tag(self) -> u8 {
        match self {
            Precision::Float64 => TAG_F64,
            Precision::Fixed16(f) => TAG_FIXED | f.to_byte(),
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            TAG_F64 => Ok(Precision::Float64),
            t if t & TAG_FIXED != 0 => Ok(Precision::Fixed16(FxFormat::from_byte(t & !TAG_FIXED)?)),
            t => Err(Error::Format(format!("unknown precision tag {t:#04x}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    F64(Vec<f64>),
    Fixed(FxFormat, Vec<i16>),
}

/// Row-major per-vertex feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    rows: usize,
    dim: usize,
    storage: Storage,
}

#[derive(Debug, Clone)]
pub enum FeatureSource {
    SeededRandom(u64),
    File(PathBuf),
}

impl FeatureStore {
    pub fn from_f64(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::shape(format!("{} values for {rows}x{dim} store", data.len())));
        }
        Ok(FeatureStore { rows, dim, storage: Storage::F64(data) })
    }

    pub fn from_fixed(rows: usize, dim: usize, fmt: FxFormat, data: Vec<i16>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::shape(format!("{} values for {rows}x{dim} store", data.len())));
        }
        Ok(FeatureStore { rows, dim, storage: Storage::Fixed(fmt, data) })
    }

    /// Uniform [-1, 1) values, a pure function of `seed`.
    pub fn seeded_random(rows: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xFEA7_0000_0000_0001);
        let data = (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FeatureStore { rows, dim, storage: Storage::F64(data) }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn precision(&self) -> Precision {
        match &self.storage {
            Storage::F64(_) => Precision::Float64,
            Storage::Fixed(f, _) => Precision::Fixed16(*f),
        }
    }

    pub fn row_f64(&self, r: usize) -> Vec<f64> {
        let range = r * self.dim..(r + 1) * self.dim;
        match &self.storage {
            Storage::F64(d) => d[range].to_vec(),
            Storage::Fixed(f, d) => d[range].iter().map(|&x| f.dequantize(x)).collect(),
        }
    }

    /// Row in fixed point; float stores are quantized to `fmt` on the fly.
    pub fn row_fixed(&self, r: usize, fmt: FxFormat) -> FixedVec {
        let range = r * self.dim..(r + 1) * self.dim;
        match &self.storage {
            Storage::Fixed(f, d) if *f == fmt => FixedVec::from_raw(d[range].to_vec(), fmt),
            _ => FixedVec::quantize(&self.row_f64(r), fmt),
        }
    }

    pub fn quantize(&self, fmt: FxFormat) -> FeatureStore {
        let data = match &self.storage {
            Storage::F64(d) => d.iter().map(|&x| fmt.quantize(x)).collect(),
            Storage::Fixed(f, d) => d.iter().map(|&x| fmt.quantize(f.dequantize(x))).collect(),
        };
        FeatureStore { rows: self.rows, dim: self.dim, storage: Storage::Fixed(fmt, data) }
    }

    pub fn dequantize(&self) -> FeatureStore {
        let data = match &self.storage {
            Storage::F64(d) => d.clone(),
            Storage::Fixed(f, d) => d.iter().map(|&x| f.dequantize(x)).collect(),
        };
        FeatureStore { rows: self.rows, dim: self.dim, storage: Storage::F64(data) }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::F64(d) => Some(d),
            Storage::Fixed(..) => None,
        }
    }

    pub fn as_fixed(&self) -> Option<(FxFormat, &[i16])> {
        match &self.storage {
            Storage::Fixed(f, d) => Some((*f, d)),
            Storage::F64(_) => None,
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        self.write_with_magic(w, FEATURE_MAGIC)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        Self::read_with_magic(r, FEATURE_MAGIC)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    /// Shared by the feature and embedding formats, which differ only in magic.
    pub(crate) fn write_with_magic(&self, w: &mut impl Write, magic: &[u8; 8]) -> Result<()> {
        w.write_all(magic)?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&[self.precision().tag()])?;
        match &self.storage {
            Storage::F64(d) => d.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
            Storage::Fixed(_, d) => d.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
        }
        Ok(())
    }

    pub(crate) fn read_with_magic(r: &mut impl Read, magic: &[u8; 8]) -> Result<Self> {
        let mut m = [0u8; 8];
        r.read_exact(&mut m)?;
        if &m != magic {
            return Err(Error::Format(format!("missing {} magic", String::from_utf8_lossy(magic))));
        }
        let rows = read_u64(r)? as usize;
        let dim = read_u32(r)? as usize;
        let precision = Precision::from_tag(read_u8(r)?)?;
        let n = rows * dim;
        match precision {
            Precision::Float64 => {
                let mut data = Vec::with_capacity(n);
                let mut buf = [0u8; 8];
                for _ in 0..n {
                    r.read_exact(&mut buf)?;
                    data.push(f64::from_le_bytes(buf));
                }
                FeatureStore::from_f64(rows, dim, data)
            }
            Precision::Fixed16(fmt) => {
                let mut data = Vec::with_capacity(n);
                let mut buf = [0u8; 2];
                for _ in 0..n {
                    r.read_exact(&mut buf)?;
                    data.push(i16::from_le_bytes(buf));
                }
                FeatureStore::from_fixed(rows, dim, fmt, data)
            }
        }
    }
}

/// Attaches a `dim`-wide feature row to every vertex of `g`.
pub fn attach_features(g: &Graph, dim: usize, source: &FeatureSource) -> Result<FeatureStore> {
    if dim == 0 {
        return Err(Error::param("feature dim must be >= 1"));
    }
    match source {
        FeatureSource::SeededRandom(seed) => Ok(FeatureStore::seeded_random(g.num_vertices(), dim, *seed)),
        FeatureSource::File(path) => {
            let store = FeatureStore::load(path)?;
            if store.rows() != g.num_vertices() || store.dim() != dim {
                return Err(Error::shape(format!(
                    "feature file is {}x{}, graph needs {}x{dim}",
                    store.rows(),
                    store.dim(),
                    g.num_vertices()
                )));
            }
            Ok(store)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn default_feature_width() {
        let s = attach_features(&chain(), 602, &FeatureSource::SeededRandom(1)).unwrap();
        assert_eq!((s.rows(), s.dim()), (3, 602));
        assert!(s.as_f64().unwrap().iter().all(|&x| (-1.0..1.0).contains(&x)));
    }

    #[test]
    fn seeded_is_deterministic() {
        let a = attach_features(&chain(), 16, &FeatureSource::SeededRandom(9)).unwrap();
        let b = attach_features(&chain(), 16, &FeatureSource::SeededRandom(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_dim_rejected() {
        assert!(attach_features(&chain(), 0, &FeatureSource::SeededRandom(0)).is_err());
    }

    #[test]
    fn fixed_rows_survive_dequantize_quantize() {
        let q = FeatureStore::seeded_random(4, 32, 5).quantize(FxFormat::Q4_12);
        assert_eq!(q.dequantize().quantize(FxFormat::Q4_12), q);
    }

    #[test]
    fn file_shape_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        FeatureStore::seeded_random(2, 8, 0).save(&path).unwrap();
        let err = attach_features(&chain(), 8, &FeatureSource::File(path.clone())).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
        let ok = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(attach_features(&ok, 8, &FeatureSource::File(path)).unwrap().rows(), 2);
    }

    #[test]
    fn binary_header_layout() {
        let s = FeatureStore::seeded_random(2, 3, 0).quantize(FxFormat::Q4_12);
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"GRIPFEA1");
        assert_eq!(buf[20], 0x80 | 12);
        assert_eq!(buf.len(), 8 + 8 + 4 + 1 + 2 * 6);
        assert_eq!(FeatureStore::read_from(&mut buf.as_slice()).unwrap(), s);
    }
}
