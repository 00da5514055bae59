use std::io::{Read, Write};

use crate::error::Result;
use crate::graph::FeatureStore;

const EMB_MAGIC: &[u8; 8] = b"GRIPEMB1";

/// Embedding golden files share the feature layout under their own magic.
pub fn write_embeddings(store: &FeatureStore, w: &mut impl Write) -> Result<()> {
    store.write_with_magic(w, EMB_MAGIC)
}

pub fn read_embeddings(r: &mut impl Read) -> Result<FeatureStore> {
    FeatureStore::read_with_magic(r, EMB_MAGIC)
}
