//! On-disk model container: a short text header (versioned metadata as one
//! JSON line) followed by a binary little-endian f64 payload holding the
//! flattened weight sets. Weights round-trip bit for bit; everything else
//! round-trips exactly through JSON's shortest-representation floats.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::SplineBasis;
use crate::error::{Error, Result};
use crate::model::{FittedModel, Method, Normalization, TrainingLog};
use crate::network::{NetworkShape, WeightSet};
use crate::priors::PriorConfig;

const MAGIC: &str = "splinemix-model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    shape: NetworkShape,
    k: usize,
    knots: Vec<f64>,
    method: Method,
    prior: Option<PriorConfig>,
    normalization: Normalization,
    log: TrainingLog,
    seed: u64,
    n_samples: usize,
    n_params: usize,
}

/// Write `bytes` to `path` atomically (temp file + rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serialize a fitted model to bytes.
pub fn to_bytes(model: &FittedModel) -> Result<Vec<u8>> {
    let header = Header {
        shape: model.shape.clone(),
        k: model.basis.size(),
        knots: model.basis.knots().to_vec(),
        method: model.method,
        prior: model.prior,
        normalization: model.normalization.clone(),
        log: model.log.clone(),
        seed: model.seed,
        n_samples: model.weights.len(),
        n_params: model.shape.n_params(),
    };
    let header_json = serde_json::to_string(&header)
        .map_err(|e| Error::Format(format!("header serialization failed: {e}")))?;
    let mut out = Vec::new();
    out.extend_from_slice(format!("{MAGIC} {VERSION}\n").as_bytes());
    out.extend_from_slice(header_json.as_bytes());
    out.push(b'\n');
    for w in &model.weights {
        for v in w.to_flat() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Save a fitted model atomically.
pub fn save(model: &FittedModel, path: &Path) -> Result<()> {
    atomic_write(path, &to_bytes(model)?)
}

/// Deserialize a fitted model from bytes; version mismatch is a hard error.
pub fn from_bytes(bytes: &[u8]) -> Result<FittedModel> {
    let first_nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing magic line".into()))?;
    let magic_line = std::str::from_utf8(&bytes[..first_nl])
        .map_err(|_| Error::Format("magic line is not UTF-8".into()))?;
    let mut parts = magic_line.split_whitespace();
    let (name, ver) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    if name != MAGIC {
        return Err(Error::Format(format!("not a model file (magic '{magic_line}')")));
    }
    let ver: u32 = ver
        .parse()
        .map_err(|_| Error::Format(format!("unreadable version '{ver}'")))?;
    if ver != VERSION {
        return Err(Error::Format(format!(
            "model file version {ver} is not supported (expected {VERSION})"
        )));
    }
    let rest = &bytes[first_nl + 1..];
    let second_nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&rest[..second_nl])
        .map_err(|e| Error::Format(format!("malformed header: {e}")))?;
    let payload = &rest[second_nl + 1..];

    let basis = SplineBasis::new(header.k)?;
    if basis.knots() != header.knots.as_slice() {
        return Err(Error::Format("stored knot vector does not match its basis size".into()));
    }
    if header.n_params != header.shape.n_params() {
        return Err(Error::Format("stored parameter count does not match the architecture".into()));
    }
    let expected = header.n_samples * header.n_params * 8;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let mut weights = Vec::with_capacity(header.n_samples);
    for s in 0..header.n_samples {
        let mut flat = Vec::with_capacity(header.n_params);
        for i in 0..header.n_params {
            let off = (s * header.n_params + i) * 8;
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&payload[off..off + 8]);
            flat.push(f64::from_le_bytes(buf));
        }
        weights.push(WeightSet::from_flat(&header.shape, &flat)?);
    }
    header.normalization.validate()?;
    Ok(FittedModel {
        shape: header.shape,
        basis,
        method: header.method,
        weights,
        normalization: header.normalization,
        prior: header.prior,
        log: header.log,
        seed: header.seed,
    })
}

/// Load a fitted model from disk.
pub fn load(path: &Path) -> Result<FittedModel> {
    let bytes = std::fs::read(path)?;
    from_bytes(&bytes)
}
