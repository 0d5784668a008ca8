//! Loop-state records, the chunked binary feature format, dataset manifests
//! and the pooling helpers shared by probes and evaluators.

mod chunk;
mod dataset;
mod manifest;
mod pooling;
mod record;

pub use chunk::{
    read_chunk, read_chunk_file, read_chunk_header, write_chunk, write_chunk_file, ChunkHeader, FeatureChunk,
    DTYPE_F16, FORMAT_VERSION, MAGIC,
};
pub use dataset::{write_dataset, Dataset, InMemorySource, PairSource, DEFAULT_CHUNK_SIZE};
pub use manifest::{chunk_file_name, DatasetManifest, EarlyExitEntry, Provenance, MANIFEST_FILE};
pub use pooling::{concat_pooled, mean_pool, mean_pool_step};
pub use record::{fill_early_exit, validate_mask, LabelSource, LoopStateRecord, PreferencePair, Role};

/// Loop steps stored per record unless configured otherwise.
pub const DEFAULT_STEPS: usize = 4;
