use super::{LayerNodeflow, NfEdge};
use crate::error::{Error, Result};

/// Edges connecting input chunk `row` to output chunk `col`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub row: usize,
    pub col: usize,
    pub edges: Vec<NfEdge>,
}

impl Block {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// A nodeflow split into `ceil(|U|/Nc) x ceil(|V|/Mc)` blocks, stored
/// column-major: all rows of column 0, then column 1, ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedNodeflow {
    pub input_chunk: usize,
    pub output_chunk: usize,
    pub num_rows: usize,
    pub num_cols: usize,
    pub num_inputs: usize,
    pub num_outputs: usize,
    blocks: Vec<Block>,
}

impl PartitionedNodeflow {
    pub fn block(&self, row: usize, col: usize) -> &Block {
        &self.blocks[col * self.num_rows + row]
    }

    pub fn edge_count(&self, row: usize, col: usize) -> usize {
        self.block(row, col).edges.len()
    }

    /// Blocks in execution order, empties included.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Non-empty blocks of one column, top to bottom.
    pub fn column(&self, col: usize) -> impl Iterator<Item = &Block> {
        self.blocks[col * self.num_rows..(col + 1) * self.num_rows].iter().filter(|b| !b.is_empty())
    }

    pub fn input_range(&self, row: usize) -> std::ops::Range<usize> {
        row * self.input_chunk..((row + 1) * self.input_chunk).min(self.num_inputs)
    }

    pub fn output_range(&self, col: usize) -> std::ops::Range<usize> {
        col * self.output_chunk..((col + 1) * self.output_chunk).min(self.num_outputs)
    }

    pub fn total_edges(&self) -> usize {
        self.blocks.iter().map(|b| b.edges.len()).sum()
    }
}

/// Splits inputs into chunks of `nc` and outputs into chunks of `mc`.
/// Within a block, edges keep their nodeflow order.
pub fn partition_nodeflow(nf: &LayerNodeflow, nc: usize, mc: usize) -> Result<PartitionedNodeflow> {
    if nc == 0 || mc == 0 {
        return Err(Error::param("chunk sizes must be >= 1"));
    }
    let num_rows = nf.num_inputs().div_ceil(nc).max(1);
    let num_cols = nf.num_outputs().div_ceil(mc).max(1);
    let mut blocks: Vec<Block> = (0..num_cols)
        .flat_map(|col| (0..num_rows).map(move |row| Block { row, col, edges: Vec::new() }))
        .collect();
    for &e in &nf.edges {
        let (row, col) = (e.u as usize / nc, e.v as usize / mc);
        blocks[col * num_rows + row].edges.push(e);
    }
    Ok(PartitionedNodeflow {
        input_chunk: nc,
        output_chunk: mc,
        num_rows,
        num_cols,
        num_inputs: nf.num_inputs(),
        num_outputs: nf.num_outputs(),
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_single_block() {
        let nf = LayerNodeflow::identity(vec![0, 1, 2]);
        let p = partition_nodeflow(&nf, 10, 10).unwrap();
        assert_eq!((p.num_rows, p.num_cols), (1, 1));
        assert_eq!(p.block(0, 0).edges, nf.edges);
    }

    #[test]
    fn identity_only_diagonal() {
        let p = partition_nodeflow(&LayerNodeflow::identity(vec![0, 1, 2, 3]), 2, 2).unwrap();
        assert_eq!(p.edge_count(0, 0), 2);
        assert_eq!(p.edge_count(1, 1), 2);
        assert!(p.block(1, 0).is_empty() && p.block(0, 1).is_empty());
        assert_eq!(p.column(0).count(), 1);
    }

    #[test]
    fn column_major_storage() {
        let p = partition_nodeflow(&LayerNodeflow::identity(vec![0, 1, 2, 3]), 2, 2).unwrap();
        let order: Vec<_> = p.blocks().iter().map(|b| (b.row, b.col)).collect();
        assert_eq!(order, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert_eq!(p.input_range(1), 2..4);
    }

    #[test]
    fn zero_chunk_rejected() {
        assert!(partition_nodeflow(&LayerNodeflow::identity(vec![0]), 0, 1).is_err());
    }
}
