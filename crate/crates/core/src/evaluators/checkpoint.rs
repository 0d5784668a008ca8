use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::config::ArchitectureConfig;
use super::model::Evaluator;
use crate::nn::{ParamTensor, Parameterized};
use crate::{Error, Result};

pub const PARAMS_MAGIC: [u8; 4] = *b"LSW1";
const PARAMS_VERSION: u16 = 1;
const DTYPE_F32: u8 = 2;

/// The JSON half of a checkpoint; parameter values live in `params_file`
/// next to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub architecture: String,
    pub config: ArchitectureConfig,
    pub epoch: usize,
    pub seed: u64,
    pub num_parameters: usize,
    pub params_file: String,
    #[serde(default)]
    pub metrics: Option<serde_json::Value>,
}

fn eof(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Truncated("parameter file ended early".into())
    } else {
        Error::Io(e)
    }
}

pub fn write_params<W: Write>(params: &[&ParamTensor<f32>], w: &mut W) -> Result<()> {
    w.write_all(&PARAMS_MAGIC)?;
    w.write_u16::<LittleEndian>(PARAMS_VERSION)?;
    w.write_u8(DTYPE_F32)?;
    w.write_u32::<LittleEndian>(params.len() as u32)?;
    for p in params {
        w.write_u16::<LittleEndian>(p.name().len() as u16)?;
        w.write_all(p.name().as_bytes())?;
        w.write_u8(p.shape().len() as u8)?;
        for &d in p.shape() {
            w.write_u32::<LittleEndian>(d as u32)?;
        }
        let mut buf = vec![0u8; p.len() * 4];
        LittleEndian::write_f32_into(p.values(), &mut buf);
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_params<R: Read>(r: &mut R) -> Result<Vec<ParamTensor<f32>>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(eof)?;
    if magic != PARAMS_MAGIC {
        return Err(Error::BadMagic { expected: PARAMS_MAGIC, found: magic });
    }
    let version = r.read_u16::<LittleEndian>().map_err(eof)?;
    if version != PARAMS_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = r.read_u8().map_err(eof)?;
    if dtype != DTYPE_F32 {
        return Err(Error::UnsupportedDtype(dtype));
    }
    let count = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
    let mut out = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = r.read_u16::<LittleEndian>().map_err(eof)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(eof)?;
        let name = String::from_utf8(name).map_err(|_| Error::InvalidRecord("tensor name is not UTF-8".into()))?;
        let ndim = r.read_u8().map_err(eof)? as usize;
        let shape = (0..ndim)
            .map(|_| r.read_u32::<LittleEndian>().map(|d| d as usize))
            .collect::<io::Result<Vec<_>>>()
            .map_err(eof)?;
        let n: usize = shape.iter().product();
        let mut buf = vec![0u8; n * 4];
        r.read_exact(&mut buf).map_err(eof)?;
        let mut values = vec![0f32; n];
        LittleEndian::read_f32_into(&buf, &mut values);
        out.push(ParamTensor::from_values(name, &shape, values)?);
    }
    Ok(out)
}

/// Writes `<stem>.json` and `<stem>.params`.
pub fn save_checkpoint(
    json_path: &Path,
    model: &Evaluator<f32>,
    epoch: usize,
    seed: u64,
    metrics: Option<serde_json::Value>,
) -> Result<CheckpointMeta> {
    let params_path = json_path.with_extension("params");
    let params_file = params_path
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Config(format!("bad checkpoint path {}", json_path.display())))?
        .to_string();
    let meta = CheckpointMeta {
        architecture: model.config().tag().to_string(),
        config: model.config(),
        epoch,
        seed,
        num_parameters: model.num_parameters(),
        params_file,
        metrics,
    };
    let write = || -> Result<()> {
        let mut w = BufWriter::new(File::create(&params_path)?);
        write_params(&model.params(), &mut w)?;
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| Error::at(&params_path, e))?;
    fs::write(json_path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::at(json_path, e.into()))?;
    Ok(meta)
}

/// Loads a checkpoint and checks every tensor against its configuration.
pub fn load_checkpoint(json_path: &Path) -> Result<(Evaluator<f32>, CheckpointMeta)> {
    if !json_path.exists() {
        return Err(Error::at(json_path, Error::MissingArtifact("checkpoint".into())));
    }
    let meta: CheckpointMeta =
        serde_json::from_str(&fs::read_to_string(json_path).map_err(|e| Error::at(json_path, e.into()))?)
            .map_err(|e| Error::at(json_path, e.into()))?;
    let params_path = json_path.with_file_name(&meta.params_file);
    let tensors = File::open(&params_path)
        .map_err(Error::from)
        .and_then(|f| read_params(&mut BufReader::new(f)))
        .map_err(|e| Error::at(&params_path, e))?;
    let mut model = Evaluator::<f32>::zeros(&meta.config).map_err(|e| Error::at(json_path, e))?;
    model.load_values(&tensors).map_err(|e| Error::at(&params_path, e))?;
    Ok((model, meta))
}
