//! Double-precision reference, written directly from each model's equations.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::FeatureStore;
use crate::greta::{ModelKind, WeightSet, WeightSpec};
use crate::nodeflow::LayerNodeflow;

/// Dense matrices by name, row-major.
#[derive(Debug, Clone, Default)]
pub struct OracleWeights {
    mats: HashMap<String, (usize, usize, Vec<f64>)>,
}

impl OracleWeights {
    pub fn from_fixed(specs: &[WeightSpec], set: &WeightSet) -> Result<Self> {
        set.check(specs)?;
        let mats = specs
            .iter()
            .zip(&set.matrices)
            .map(|(s, m)| (s.name.clone(), (m.rows, m.cols, m.to_f64())))
            .collect();
        Ok(OracleWeights { mats })
    }

    pub fn insert(&mut self, name: &str, rows: usize, cols: usize, data: Vec<f64>) {
        self.mats.insert(name.to_string(), (rows, cols, data));
    }

    fn get(&self, name: &str) -> Result<&(usize, usize, Vec<f64>)> {
        self.mats.get(name).ok_or_else(|| Error::unknown("weight", name))
    }

    /// `W x`.
    fn apply(&self, name: &str, x: &[f64]) -> Result<Vec<f64>> {
        let (r, c, w) = self.get(name)?;
        if x.len() != *c {
            return Err(Error::shape(format!("{name} is {r}x{c}, vector has {}", x.len())));
        }
        Ok((0..*r).map(|i| w[i * c..(i + 1) * c].iter().zip(x).map(|(a, b)| a * b).sum()).collect())
    }

    /// `W x + b`.
    fn affine(&self, name: &str, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.apply(&format!("{name}.w"), x)?;
        let (_, _, b) = self.get(&format!("{name}.b"))?;
        y.iter_mut().zip(b).for_each(|(y, b)| *y += b);
        Ok(y)
    }
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Incoming source positions of every output.
fn in_lists(nf: &LayerNodeflow) -> Vec<Vec<usize>> {
    let mut lists = vec![Vec::new(); nf.num_outputs()];
    for e in &nf.edges {
        lists[e.v as usize].push(e.u as usize);
    }
    lists
}

/// Embeddings of the last layer's outputs, one row per target.
pub fn float_oracle(model: ModelKind, nfs: &[LayerNodeflow], feats: &FeatureStore, w: &OracleWeights) -> Result<Vec<Vec<f64>>> {
    let first = nfs.first().ok_or_else(|| Error::param("no nodeflow layers"))?;
    let mut h: Vec<Vec<f64>> = first.inputs.iter().map(|&v| feats.row_f64(v as usize)).collect();
    for (l, nf) in nfs.iter().enumerate() {
        let ins = in_lists(nf);
        let name = |s: &str| format!("l{l}.{s}");
        let mut next = Vec::with_capacity(nf.num_outputs());
        match model {
            ModelKind::Gcn => {
                for srcs in &ins {
                    let mut m = vec![0.0; h[0].len()];
                    for &u in srcs {
                        m = add(&m, &h[u]);
                    }
                    let k = srcs.len().max(1) as f64;
                    m.iter_mut().for_each(|x| *x /= k);
                    next.push(relu(w.apply(&name("w.w"), &m)?));
                }
            }
            ModelKind::GraphsageMax => {
                let pooled: Vec<Vec<f64>> = h.iter().map(|x| w.affine(&name("pool"), x).map(relu)).collect::<Result<_>>()?;
                for (v, srcs) in ins.iter().enumerate() {
                    let mut m = vec![f64::NEG_INFINITY; pooled[0].len()];
                    for &u in srcs {
                        m.iter_mut().zip(&pooled[u]).for_each(|(a, &b)| *a = a.max(b));
                    }
                    if srcs.is_empty() {
                        m.fill(0.0);
                    }
                    let s = w.apply(&name("self.w"), &h[v])?;
                    next.push(relu(add(&s, &w.apply(&name("neigh.w"), &m)?)));
                }
            }
            ModelKind::Gin => {
                for srcs in &ins {
                    let mut s = vec![0.0; h[0].len()];
                    for &u in srcs {
                        s = add(&s, &h[u]);
                    }
                    let hidden = relu(w.affine(&name("mlp1"), &s)?);
                    next.push(relu(w.affine(&name("mlp2"), &hidden)?));
                }
            }
            ModelKind::Ggcn => {
                for (v, srcs) in ins.iter().enumerate() {
                    let mut acc = w.affine(&name("self"), &h[v])?;
                    for &u in srcs {
                        let gate = w.affine(&name("gate"), &h[u])?;
                        let msg = w.apply(&name("msg.w"), &h[u])?;
                        acc.iter_mut().zip(gate.iter().zip(&msg)).for_each(|(a, (&g, &m))| *a += sigmoid(g) * m);
                    }
                    next.push(relu(acc));
                }
            }
        }
        h = next;
    }
    Ok(h)
}

/// GCN as `relu(A (H W^T))` with a row-normalised sparse `A` per layer.
pub fn gcn_spmm(nfs: &[LayerNodeflow], feats: &FeatureStore, w: &OracleWeights) -> Result<Vec<Vec<f64>>> {
    let first = nfs.first().ok_or_else(|| Error::param("no nodeflow layers"))?;
    let mut h: Vec<Vec<f64>> = first.inputs.iter().map(|&v| feats.row_f64(v as usize)).collect();
    for (l, nf) in nfs.iter().enumerate() {
        let hw: Vec<Vec<f64>> = h.iter().map(|x| w.apply(&format!("l{l}.w.w"), x)).collect::<Result<_>>()?;
        let deg = nf.in_degree();
        let width = hw.first().map_or(0, Vec::len);
        let mut z = vec![vec![0.0; width]; nf.num_outputs()];
        for e in &nf.edges {
            let a = 1.0 / deg[e.v as usize] as f64;
            z[e.v as usize].iter_mut().zip(&hw[e.u as usize]).for_each(|(z, x)| *z += a * x);
        }
        h = z.into_iter().map(relu).collect();
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodeflow::NfEdge;

    fn eye(w: &mut OracleWeights, name: &str, n: usize) {
        let data = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect();
        w.insert(name, n, n, data);
    }

    #[test]
    fn identity_gcn_returns_features() {
        let mut w = OracleWeights::default();
        eye(&mut w, "l0.w.w", 3);
        let feats = FeatureStore::from_f64(2, 3, vec![0.1, 0.2, 0.3, 1.0, 2.0, 3.0]).unwrap();
        let nfs = vec![LayerNodeflow::identity(vec![0, 1])];
        let z = float_oracle(ModelKind::Gcn, &nfs, &feats, &w).unwrap();
        assert_eq!(z, vec![vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 3.0]]);
        assert_eq!(gcn_spmm(&nfs, &feats, &w).unwrap(), z);
    }

    #[test]
    fn single_edge_mean_is_source() {
        let mut w = OracleWeights::default();
        eye(&mut w, "l0.w.w", 2);
        let feats = FeatureStore::from_f64(2, 2, vec![5.0, 5.0, 0.5, 0.25]).unwrap();
        let nf = LayerNodeflow::new(vec![0, 1], vec![0], vec![NfEdge { u: 1, v: 0, data: 0 }]).unwrap();
        assert_eq!(float_oracle(ModelKind::Gcn, &[nf], &feats, &w).unwrap(), vec![vec![0.5, 0.25]]);
    }
}
