use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};
use half::f16;

use super::record::{LabelSource, LoopStateRecord, PreferencePair, Role};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"LSF1";
pub const FORMAT_VERSION: u16 = 1;
pub const DTYPE_F16: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChunkHeader {
    pub version: u16,
    pub steps: u16,
    pub dim: u32,
    pub max_len: u32,
    pub dtype: u8,
    pub pair_count: u32,
}

/// A block of preference pairs sharing `[T, L_max, d]` geometry.
#[derive(Clone, Debug)]
pub struct FeatureChunk {
    pub steps: usize,
    pub dim: usize,
    pub max_len: usize,
    pub pairs: Vec<PreferencePair>,
}

impl FeatureChunk {
    pub fn new(steps: usize, dim: usize, max_len: usize, pairs: Vec<PreferencePair>) -> Result<Self> {
        let chunk = Self { steps, dim, max_len, pairs };
        chunk.validate()?;
        Ok(chunk)
    }

    /// Takes the geometry from the first pair; fails on an empty list.
    pub fn from_pairs(pairs: Vec<PreferencePair>) -> Result<Self> {
        let first = pairs.first().ok_or_else(|| Error::Empty("chunk pairs".into()))?;
        let (t, d, l) = (first.steps(), first.dim(), first.seq_len());
        Self::new(t, d, l, pairs)
    }

    pub fn header(&self) -> ChunkHeader {
        ChunkHeader {
            version: FORMAT_VERSION,
            steps: self.steps as u16,
            dim: self.dim as u32,
            max_len: self.max_len as u32,
            dtype: DTYPE_F16,
            pair_count: self.pairs.len() as u32,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.steps > u16::MAX as usize {
            return Err(Error::InvalidRecord(format!("loop steps {} out of range", self.steps)));
        }
        if self.dim == 0 || self.dim > u32::MAX as usize || self.max_len > u32::MAX as usize {
            return Err(Error::InvalidRecord("chunk dimensions out of range".into()));
        }
        for p in &self.pairs {
            if (p.steps(), p.dim(), p.seq_len()) != (self.steps, self.dim, self.max_len) {
                return Err(Error::InvalidRecord(format!(
                    "pair {} has geometry [{}, {}, {}], chunk expects [{}, {}, {}]",
                    p.prompt_id,
                    p.steps(),
                    p.seq_len(),
                    p.dim(),
                    self.steps,
                    self.max_len,
                    self.dim
                )));
            }
            if p.prompt_id.len() > u16::MAX as usize {
                return Err(Error::InvalidRecord(format!("prompt id too long ({} bytes)", p.prompt_id.len())));
            }
        }
        Ok(())
    }

    pub fn bits_eq(&self, other: &Self) -> bool {
        (self.steps, self.dim, self.max_len) == (other.steps, other.dim, other.max_len)
            && self.pairs.len() == other.pairs.len()
            && self.pairs.iter().zip(&other.pairs).all(|(a, b)| a.bits_eq(b))
    }
}

fn write_record<W: Write>(w: &mut W, r: &LoopStateRecord, buf: &mut Vec<u8>) -> io::Result<()> {
    w.write_u32::<LittleEndian>(r.token_count() as u32)?;
    w.write_all(r.mask())?;
    let bits: Vec<u16> = r.states().iter().map(|v| v.to_bits()).collect();
    buf.resize(bits.len() * 2, 0);
    LittleEndian::write_u16_into(&bits, buf);
    w.write_all(buf)
}

/// Serializes `chunk` in the little-endian `LSF1` layout.
pub fn write_chunk<W: Write>(chunk: &FeatureChunk, w: &mut W) -> Result<()> {
    chunk.validate()?;
    let h = chunk.header();
    w.write_all(&MAGIC)?;
    w.write_u16::<LittleEndian>(h.version)?;
    w.write_u16::<LittleEndian>(h.steps)?;
    w.write_u32::<LittleEndian>(h.dim)?;
    w.write_u32::<LittleEndian>(h.max_len)?;
    w.write_u8(h.dtype)?;
    w.write_u32::<LittleEndian>(h.pair_count)?;
    let mut buf = Vec::new();
    for p in &chunk.pairs {
        w.write_u16::<LittleEndian>(p.prompt_id.len() as u16)?;
        w.write_all(p.prompt_id.as_bytes())?;
        w.write_u8(p.label_source.code())?;
        write_record(w, &p.chosen, &mut buf)?;
        write_record(w, &p.rejected, &mut buf)?;
    }
    Ok(())
}

pub fn write_chunk_file(chunk: &FeatureChunk, path: &Path) -> Result<()> {
    let run = || -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_chunk(chunk, &mut w)?;
        w.flush()?;
        Ok(())
    };
    run().map_err(|e| Error::at(path, e))
}

fn truncated(what: &str) -> impl Fn(io::Error) -> Error + '_ {
    move |e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Truncated(format!("ended while reading {what}"))
        } else {
            Error::Io(e)
        }
    }
}

/// Reads and checks the fixed-size header.
pub fn read_chunk_header<R: Read>(r: &mut R) -> Result<ChunkHeader> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated("magic"))?;
    if magic != MAGIC {
        return Err(Error::BadMagic { expected: MAGIC, found: magic });
    }
    let t = truncated("header");
    let version = r.read_u16::<LittleEndian>().map_err(&t)?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let steps = r.read_u16::<LittleEndian>().map_err(&t)?;
    let dim = r.read_u32::<LittleEndian>().map_err(&t)?;
    let max_len = r.read_u32::<LittleEndian>().map_err(&t)?;
    let dtype = r.read_u8().map_err(&t)?;
    if dtype != DTYPE_F16 {
        return Err(Error::UnsupportedDtype(dtype));
    }
    let pair_count = r.read_u32::<LittleEndian>().map_err(&t)?;
    Ok(ChunkHeader { version, steps, dim, max_len, dtype, pair_count })
}

fn read_record<R: Read>(
    r: &mut R,
    h: &ChunkHeader,
    id: &str,
    role: Role,
    buf: &mut Vec<u8>,
) -> Result<LoopStateRecord> {
    let what = match role {
        Role::Chosen => "chosen record",
        Role::Rejected => "rejected record",
    };
    let token_count = r.read_u32::<LittleEndian>().map_err(truncated(what))? as usize;
    let mut mask = vec![0u8; h.max_len as usize];
    r.read_exact(&mut mask).map_err(truncated(what))?;
    let n = h.steps as usize * h.max_len as usize * h.dim as usize;
    buf.resize(n * 2, 0);
    r.read_exact(buf).map_err(truncated(what))?;
    let mut bits = vec![0u16; n];
    LittleEndian::read_u16_into(buf, &mut bits);
    let states = bits.into_iter().map(f16::from_bits).collect();
    let rec = LoopStateRecord::new(id, role, h.steps as usize, h.dim as usize, states, mask)?;
    if rec.token_count() != token_count {
        return Err(Error::InvalidRecord(format!(
            "pair {id}: stored token_count {token_count} disagrees with mask ({})",
            rec.token_count()
        )));
    }
    Ok(rec)
}

/// Inverse of [`write_chunk`].
pub fn read_chunk<R: Read>(r: &mut R) -> Result<FeatureChunk> {
    let h = read_chunk_header(r)?;
    let mut pairs = Vec::with_capacity(h.pair_count.min(1 << 16) as usize);
    let mut buf = Vec::new();
    for _ in 0..h.pair_count {
        let id_len = r.read_u16::<LittleEndian>().map_err(truncated("prompt id"))? as usize;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id).map_err(truncated("prompt id"))?;
        let id = String::from_utf8(id).map_err(|_| Error::InvalidRecord("prompt id is not UTF-8".into()))?;
        let source = LabelSource::from_code(r.read_u8().map_err(truncated("label source"))?)?;
        let chosen = read_record(r, &h, &id, Role::Chosen, &mut buf)?;
        let rejected = read_record(r, &h, &id, Role::Rejected, &mut buf)?;
        pairs.push(PreferencePair::new(id, chosen, rejected, source)?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::InvalidRecord("trailing bytes after last pair".into()));
    }
    FeatureChunk::new(h.steps as usize, h.dim as usize, h.max_len as usize, pairs)
}

pub fn read_chunk_file(path: &Path) -> Result<FeatureChunk> {
    let run = || -> Result<FeatureChunk> {
        let mut r = BufReader::new(File::open(path)?);
        read_chunk(&mut r)
    };
    run().map_err(|e| Error::at(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_pair() -> PreferencePair {
        let vals: Vec<f32> = (0..2 * 3 * 4).map(|i| i as f32 * 0.25 - 1.0).collect();
        let c = LoopStateRecord::from_f32("p0", Role::Chosen, 2, 4, &vals, vec![0, 1, 1]).unwrap();
        let neg: Vec<f32> = vals.iter().map(|v| -v).collect();
        let r = LoopStateRecord::from_f32("p0", Role::Rejected, 2, 4, &neg, vec![1, 1, 1]).unwrap();
        PreferencePair::new("p0", c, r, LabelSource::Synthetic).unwrap()
    }

    fn bytes(chunk: &FeatureChunk) -> Vec<u8> {
        let mut out = Vec::new();
        write_chunk(chunk, &mut out).unwrap();
        out
    }

    #[test]
    fn empty_chunk_is_header_only() {
        let c = FeatureChunk::new(4, 8, 16, vec![]).unwrap();
        let b = bytes(&c);
        assert_eq!(b.len(), 4 + 2 + 2 + 4 + 4 + 1 + 4);
        let back = read_chunk(&mut b.as_slice()).unwrap();
        assert!(back.is_empty());
        assert_eq!((back.steps, back.dim, back.max_len), (4, 8, 16));
    }

    #[test]
    fn single_pair_round_trip() {
        let c = FeatureChunk::from_pairs(vec![tiny_pair()]).unwrap();
        let b = bytes(&c);
        let expected_len = 21 + 2 + 2 + 1 + 2 * (4 + 3 + 2 * 3 * 4 * 2);
        assert_eq!(b.len(), expected_len);
        let back = read_chunk(&mut b.as_slice()).unwrap();
        assert!(back.bits_eq(&c));
    }

    #[test]
    fn header_layout_is_little_endian() {
        let c = FeatureChunk::from_pairs(vec![tiny_pair()]).unwrap();
        let b = bytes(&c);
        assert_eq!(&b[0..4], b"LSF1");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..8], &[2, 0]);
        assert_eq!(&b[8..12], &[4, 0, 0, 0]);
        assert_eq!(&b[12..16], &[3, 0, 0, 0]);
        assert_eq!(b[16], DTYPE_F16);
        assert_eq!(&b[17..21], &[1, 0, 0, 0]);
    }

    #[test]
    fn error_taxonomy() {
        let c = FeatureChunk::from_pairs(vec![tiny_pair()]).unwrap();
        let good = bytes(&c);

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(read_chunk(&mut bad.as_slice()), Err(Error::BadMagic { .. })));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(read_chunk(&mut bad.as_slice()), Err(Error::UnsupportedVersion(9))));

        let mut bad = good.clone();
        bad[16] = 7;
        assert!(matches!(read_chunk(&mut bad.as_slice()), Err(Error::UnsupportedDtype(7))));

        for cut in [2, 10, 30, good.len() - 1] {
            let short = &good[..cut];
            assert!(matches!(read_chunk(&mut &short[..]), Err(Error::Truncated(_))), "cut at {cut}");
        }
    }

    #[test]
    fn corrupted_mask_is_invalid() {
        let c = FeatureChunk::from_pairs(vec![tiny_pair()]).unwrap();
        let mut b = bytes(&c);
        // chosen mask starts after header(21) + id len(2) + id(2) + source(1) + token_count(4)
        b[30] = 1;
        b[31] = 0;
        assert!(matches!(read_chunk(&mut b.as_slice()), Err(Error::InvalidRecord(_))));
    }
}
