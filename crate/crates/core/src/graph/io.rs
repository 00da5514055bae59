use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::num::IntErrorKind;
use std::path::Path;

use super::{Graph, VertexId};
use crate::error::{Error, Result};

const CSR_MAGIC: &[u8; 8] = b"GRIPCSR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    BinaryCsr,
}

impl std::str::FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-list" | "edgelist" | "txt" => Ok(GraphFormat::EdgeList),
            "binary-csr" | "csr" | "bin" => Ok(GraphFormat::BinaryCsr),
            other => Err(Error::unknown("graph format", other)),
        }
    }
}

pub fn load_graph(path: impl AsRef<Path>, format: GraphFormat) -> Result<Graph> {
    let file = File::open(path.as_ref())?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(BufReader::new(file)),
        GraphFormat::BinaryCsr => read_csr(BufReader::new(file)),
    }
}

/// Parses "src dst" lines. Ids are remapped to dense `0..n` in ascending
/// order of the original id; the original ids are kept on the graph.
pub fn parse_edge_list(reader: impl BufRead) -> Result<Graph> {
    let mut raw = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse { line: lineno, msg: format!("expected `src dst`, got `{trimmed}`") });
        };
        raw.push((parse_id(a, lineno)?, parse_id(b, lineno)?));
    }

    let mut ids: Vec<u64> = raw.iter().flat_map(|&(a, b)| [a, b]).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() > VertexId::MAX as usize {
        return Err(Error::Capacity(format!("{} distinct vertices exceed 32-bit ids", ids.len())));
    }
    let dense = |id: u64| ids.binary_search(&id).expect("id collected above") as VertexId;
    let edges: Vec<(VertexId, VertexId)> = raw.iter().map(|&(a, b)| (dense(a), dense(b))).collect();
    Ok(Graph::from_edges(ids.len(), &edges)?.with_original_ids(ids))
}

fn parse_id(field: &str, line: usize) -> Result<u64> {
    field.parse::<u64>().map_err(|e| match e.kind() {
        IntErrorKind::PosOverflow => Error::Capacity(format!("vertex id `{field}` on line {line} overflows 64 bits")),
        _ => Error::Parse { line, msg: format!("invalid vertex id `{field}`") },
    })
}

pub fn save_csr(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csr(g, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_csr(g: &Graph, w: &mut impl Write) -> Result<()> {
    w.write_all(CSR_MAGIC)?;
    w.write_all(&(g.num_vertices() as u64).to_le_bytes())?;
    w.write_all(&(g.num_edges() as u64).to_le_bytes())?;
    for &o in g.out_offsets() {
        w.write_all(&o.to_le_bytes())?;
    }
    for &t in g.out_targets() {
        w.write_all(&t.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_csr(mut r: impl Read) -> Result<Graph> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CSR_MAGIC {
        return Err(Error::Format("missing GRIPCSR1 magic".into()));
    }
    let n = read_u64(&mut r)?;
    let m = read_u64(&mut r)?;
    if n > VertexId::MAX as u64 {
        return Err(Error::Capacity(format!("{n} vertices exceed 32-bit ids")));
    }
    let mut offsets = Vec::with_capacity(n as usize + 1);
    for _ in 0..=n {
        offsets.push(read_u64(&mut r)?);
    }
    let mut targets = Vec::with_capacity(m as usize);
    let mut buf = [0u8; 4];
    for _ in 0..m {
        r.read_exact(&mut buf)?;
        targets.push(u32::from_le_bytes(buf));
    }
    Graph::from_csr(n as usize, offsets, targets)
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf)?;
    Ok(buf[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Graph> {
        parse_edge_list(s.as_bytes())
    }

    #[test]
    fn smallest_chain() {
        let g = parse("0 1\n1 2").unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (3, 2));
    }

    #[test]
    fn empty_file() {
        let g = parse("").unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (0, 0));
        assert_eq!(g.out_offsets(), &[0]);
    }

    #[test]
    fn comments_and_remap() {
        let g = parse("# header\n10 30\n\n30 10\n30 30\n").unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.original_ids().unwrap(), &[10, 30]);
        assert_eq!(g.neighbors(1), &[0, 1]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("0 1\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("0 1 2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn id_overflow_is_capacity_error() {
        assert!(matches!(parse("0 99999999999999999999999\n"), Err(Error::Capacity(_))));
    }

    #[test]
    fn csr_round_trip_bytes() {
        let g = parse("0 1\n1 2\n2 0\n2 2\n").unwrap();
        let mut a = Vec::new();
        write_csr(&g, &mut a).unwrap();
        let back = read_csr(a.as_slice()).unwrap();
        let mut b = Vec::new();
        write_csr(&back, &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(&a[..8], b"GRIPCSR1");
        assert_eq!(a.len(), 8 + 16 + 8 * 4 + 4 * 4);
    }

    #[test]
    fn csr_rejects_bad_magic() {
        assert!(matches!(read_csr(&b"NOTACSR!xxxxxxxxxxxxxxxx"[..]), Err(Error::Format(_))));
    }
}
