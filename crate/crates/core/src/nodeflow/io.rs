use std::io::{Read, Write};

use super::{LayerNodeflow, NfEdge};
use crate::error::{Error, Result};
use crate::graph::VertexId;

const NF_MAGIC: &[u8; 8] = b"GRIPNF01";

/// `GRIPNF01`, u32 layer count, then per layer: u32 |U|, u32 |V|, u32 |E|,
/// U and V as u32 arrays, edges as (u, v, data) u32 triples. Little-endian.
pub fn write_nodeflows(layers: &[LayerNodeflow], w: &mut impl Write) -> Result<()> {
    w.write_all(NF_MAGIC)?;
    put(w, layers.len() as u32)?;
    for l in layers {
        put(w, l.inputs.len() as u32)?;
        put(w, l.outputs.len() as u32)?;
        put(w, l.edges.len() as u32)?;
        l.inputs.iter().chain(&l.outputs).try_for_each(|&x| put(w, x))?;
        for e in &l.edges {
            put(w, e.u)?;
            put(w, e.v)?;
            put(w, e.data)?;
        }
    }
    Ok(())
}

pub fn read_nodeflows(r: &mut impl Read) -> Result<Vec<LayerNodeflow>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != NF_MAGIC {
        return Err(Error::Format("missing GRIPNF01 magic".into()));
    }
    let n = get(r)?;
    let mut layers = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let (nu, nv, ne) = (get(r)?, get(r)?, get(r)?);
        let inputs: Vec<VertexId> = (0..nu).map(|_| get(r)).collect::<Result<_>>()?;
        let outputs: Vec<VertexId> = (0..nv).map(|_| get(r)).collect::<Result<_>>()?;
        let edges = (0..ne)
            .map(|_| Ok(NfEdge { u: get(r)?, v: get(r)?, data: get(r)? }))
            .collect::<Result<Vec<_>>>()?;
        let mut nf = LayerNodeflow::new(inputs, outputs, edges)?;
        let ident = LayerNodeflow::identity(nf.inputs.clone());
        nf.identity = nf.inputs == nf.outputs && nf.edges == ident.edges;
        layers.push(nf);
    }
    Ok(layers)
}

fn put(w: &mut impl Write, x: u32) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn get(r: &mut impl Read) -> Result<u32> {
    crate::graph::read_u32(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let a = LayerNodeflow::new(vec![5, 6, 7], vec![5], vec![NfEdge { u: 1, v: 0, data: 0 }, NfEdge { u: 2, v: 0, data: 1 }])
            .unwrap();
        let layers = vec![a, LayerNodeflow::identity(vec![5])];
        let mut buf = Vec::new();
        write_nodeflows(&layers, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"GRIPNF01");
        assert_eq!(read_nodeflows(&mut buf.as_slice()).unwrap(), layers);
    }
}
