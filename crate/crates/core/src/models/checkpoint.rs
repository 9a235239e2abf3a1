//! Parameter checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic        b"STGLCKPT"
//! version      u32                 (currently 1)
//! header_len   u32
//! header       JSON, header_len bytes: {config, seed, layout, frozen_layout}
//! theta        f64 * layout length        (flattening order of the layout)
//! frozen       f64 * frozen layout length
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::layout::ParamLayout;
use super::model::Model;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"STGLCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    seed: u64,
    layout: ParamLayout,
    frozen_layout: ParamLayout,
}

pub fn write_checkpoint_to<W: Write>(model: &Model, seed: u64, w: &mut W) -> Result<()> {
    let header = Header {
        config: model.config().clone(),
        seed,
        layout: model.layout().clone(),
        frozen_layout: model.frozen_layout().clone(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_u32::<LE>(CHECKPOINT_VERSION)?;
    w.write_u32::<LE>(json.len() as u32)?;
    w.write_all(&json)?;
    for &x in model.theta().iter().chain(model.frozen()) {
        w.write_f64::<LE>(x)?;
    }
    Ok(())
}

/// Returns the model and the seed it was initialized with.
pub fn read_checkpoint_from<R: Read>(r: &mut R) -> Result<(Model, u64)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Snapshot("not a checkpoint file".into()));
    }
    let version = r.read_u32::<LE>()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Snapshot(format!("unsupported checkpoint version {version}")));
    }
    let len = r.read_u32::<LE>()? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    let mut theta = vec![0.0; header.layout.len()];
    r.read_f64_into::<LE>(&mut theta)?;
    let mut frozen = vec![0.0; header.frozen_layout.len()];
    r.read_f64_into::<LE>(&mut frozen)?;
    let model = Model::from_parts(header.config, theta, frozen)?;
    if model.layout() != &header.layout || model.frozen_layout() != &header.frozen_layout {
        return Err(Error::Snapshot("checkpoint layout disagrees with its config".into()));
    }
    Ok((model, header.seed))
}

pub fn write_checkpoint(model: &Model, seed: u64, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint_to(model, seed, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(Model, u64)> {
    read_checkpoint_from(&mut BufReader::new(File::open(path)?))
}
