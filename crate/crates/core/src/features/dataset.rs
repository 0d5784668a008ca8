use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::chunk::{read_chunk_file, write_chunk_file, FeatureChunk, FORMAT_VERSION};
use super::manifest::{chunk_file_name, ChunkEntry, DatasetManifest, EarlyExitEntry, Provenance, MANIFEST_FILE};
use super::record::PreferencePair;
use crate::{Error, Result};

pub const DEFAULT_CHUNK_SIZE: usize = 100;

/// Chunk-granular access to preference pairs, so training can stream one
/// chunk at a time.
pub trait PairSource {
    fn num_chunks(&self) -> usize;
    fn chunk_len(&self, index: usize) -> usize;
    fn load_chunk(&self, index: usize) -> Result<Arc<Vec<PreferencePair>>>;
    /// `(steps, dim, max_len)`.
    fn geometry(&self) -> (usize, usize, usize);

    fn total_pairs(&self) -> usize {
        (0..self.num_chunks()).map(|i| self.chunk_len(i)).sum()
    }

    fn load_all(&self) -> Result<Vec<PreferencePair>> {
        let mut out = Vec::with_capacity(self.total_pairs());
        for i in 0..self.num_chunks() {
            out.extend(self.load_chunk(i)?.iter().cloned());
        }
        Ok(out)
    }
}

/// Pairs held in memory, split into fixed-size chunks.
#[derive(Clone, Debug)]
pub struct InMemorySource {
    chunks: Vec<Arc<Vec<PreferencePair>>>,
    geometry: (usize, usize, usize),
}

impl InMemorySource {
    pub fn new(pairs: Vec<PreferencePair>, chunk_size: usize) -> Result<Self> {
        if chunk_size == 0 {
            return Err(Error::Config("chunk_size must be positive".into()));
        }
        let first = pairs.first().ok_or_else(|| Error::Empty("pair source".into()))?;
        let geometry = (first.steps(), first.dim(), first.seq_len());
        if let Some(p) = pairs.iter().find(|p| (p.steps(), p.dim(), p.seq_len()) != geometry) {
            return Err(Error::InvalidRecord(format!("pair {} differs in geometry", p.prompt_id)));
        }
        let mut chunks = Vec::new();
        let mut it = pairs.into_iter().peekable();
        while it.peek().is_some() {
            chunks.push(Arc::new(it.by_ref().take(chunk_size).collect()));
        }
        Ok(Self { chunks, geometry })
    }
}

impl PairSource for InMemorySource {
    fn num_chunks(&self) -> usize {
        self.chunks.len()
    }

    fn chunk_len(&self, index: usize) -> usize {
        self.chunks[index].len()
    }

    fn load_chunk(&self, index: usize) -> Result<Arc<Vec<PreferencePair>>> {
        Ok(Arc::clone(&self.chunks[index]))
    }

    fn geometry(&self) -> (usize, usize, usize) {
        self.geometry
    }
}

/// A manifest plus its chunk files on disk.
#[derive(Clone, Debug)]
pub struct Dataset {
    root: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    /// Opens either a dataset directory or its manifest file.
    pub fn open(path: &Path) -> Result<Self> {
        let manifest_path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        if !manifest_path.exists() {
            return Err(Error::at(&manifest_path, Error::MissingArtifact("dataset manifest".into())));
        }
        let manifest = DatasetManifest::load(&manifest_path)?;
        let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { root, manifest })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn chunk_path(&self, index: usize) -> PathBuf {
        self.root.join(&self.manifest.chunks[index].file)
    }

    /// Reads every chunk and checks it against the manifest.
    pub fn validate(&self) -> Result<usize> {
        for i in 0..self.num_chunks() {
            self.load_chunk(i)?;
        }
        Ok(self.manifest.total_pairs)
    }
}

impl PairSource for Dataset {
    fn num_chunks(&self) -> usize {
        self.manifest.chunks.len()
    }

    fn chunk_len(&self, index: usize) -> usize {
        self.manifest.chunks[index].pairs
    }

    fn load_chunk(&self, index: usize) -> Result<Arc<Vec<PreferencePair>>> {
        let path = self.chunk_path(index);
        let chunk = read_chunk_file(&path)?;
        let m = &self.manifest;
        let geometry = (chunk.steps, chunk.dim, chunk.max_len);
        if geometry != (m.steps, m.dim, m.max_len) {
            return Err(Error::at(
                &path,
                Error::InvalidRecord(format!(
                    "chunk geometry {geometry:?} disagrees with manifest {:?}",
                    (m.steps, m.dim, m.max_len)
                )),
            ));
        }
        if chunk.len() != m.chunks[index].pairs {
            return Err(Error::at(
                &path,
                Error::InvalidRecord(format!(
                    "chunk holds {} pairs, manifest says {}",
                    chunk.len(),
                    m.chunks[index].pairs
                )),
            ));
        }
        Ok(Arc::new(chunk.pairs))
    }

    fn geometry(&self) -> (usize, usize, usize) {
        (self.manifest.steps, self.manifest.dim, self.manifest.max_len)
    }
}

/// Splits `pairs` into chunk files under `dir` and writes the manifest.
#[allow(clippy::too_many_arguments)]
pub fn write_dataset(
    dir: &Path,
    split: &str,
    geometry: (usize, usize, usize),
    pairs: &[PreferencePair],
    chunk_size: usize,
    provenance: Provenance,
    early_exit: Vec<EarlyExitEntry>,
) -> Result<DatasetManifest> {
    if chunk_size == 0 {
        return Err(Error::Config("chunk_size must be positive".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::at(dir, e.into()))?;
    let (steps, dim, max_len) = geometry;
    let mut chunks = Vec::new();
    for (i, block) in pairs.chunks(chunk_size).enumerate() {
        let chunk = FeatureChunk::new(steps, dim, max_len, block.to_vec())?;
        let file = chunk_file_name(i);
        write_chunk_file(&chunk, &dir.join(&file))?;
        chunks.push(ChunkEntry { file, pairs: block.len() });
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        split: split.to_string(),
        steps,
        dim,
        max_len,
        chunk_size,
        total_pairs: pairs.len(),
        chunks,
        provenance,
        early_exit,
    };
    manifest.check_counts()?;
    manifest.save(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
