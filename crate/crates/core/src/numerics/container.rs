//! Checksummed tensor files: magic, version, a JSON header, 32-bit
//! little-endian tensor data, and a trailing SHA-256 of everything before it.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ParamStore, Tensor};
use crate::error::{Error, Result};

const DIGEST_LEN: usize = 32;
const PREFIX_LEN: usize = 8 + 4 + 8;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize)]
struct HeaderOut<'a, M> {
    meta: &'a M,
    tensor_count: usize,
    tensors: Vec<TensorEntry>,
}

#[derive(Deserialize)]
struct HeaderIn<M> {
    meta: M,
    tensor_count: usize,
    tensors: Vec<TensorEntry>,
}

/// Serializes `meta` and every tensor of `store`.
pub fn write_container<M: Serialize>(magic: &[u8; 8], version: u32, meta: &M, store: &ParamStore) -> Result<Vec<u8>> {
    let tensors: Vec<TensorEntry> = store
        .iter()
        .map(|(_, name, t)| TensorEntry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
        })
        .collect();
    let header = HeaderOut {
        meta,
        tensor_count: tensors.len(),
        tensors,
    };
    let header =
        serde_json::to_vec_pretty(&header).map_err(|e| Error::Data(format!("cannot serialize header: {e}")))?;
    let mut out = Vec::with_capacity(PREFIX_LEN + header.len() + 4 * store.num_scalars() + DIGEST_LEN);
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, _, t) in store.iter() {
        for &v in t.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

/// Inverse of [`write_container`]. A bad checksum, magic, header or payload
/// size is `Corrupt`; another version or an inconsistent tensor count is
/// `Version`. `path` only labels errors.
pub fn read_container<M: DeserializeOwned>(
    bytes: &[u8],
    magic: &[u8; 8],
    version: u32,
    path: &Path,
) -> Result<(M, ParamStore)> {
    let corrupt = |m: String| Error::Corrupt(path.to_path_buf(), m);
    if bytes.len() < PREFIX_LEN + DIGEST_LEN {
        return Err(corrupt("file too short".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch".into()));
    }
    if &body[..8] != magic {
        return Err(corrupt("unexpected file type".into()));
    }
    let found = u32::from_le_bytes(body[8..12].try_into().unwrap());
    if found != version {
        return Err(Error::Version(
            path.to_path_buf(),
            format!("format version {found}, expected {version}"),
        ));
    }
    let header_len = u64::from_le_bytes(body[12..20].try_into().unwrap()) as usize;
    let rest = &body[PREFIX_LEN..];
    if header_len > rest.len() {
        return Err(corrupt("header length exceeds file".into()));
    }
    let (header, payload) = rest.split_at(header_len);
    let header: HeaderIn<M> = serde_json::from_slice(header).map_err(|e| corrupt(format!("bad header: {e}")))?;
    if header.tensor_count != header.tensors.len() {
        return Err(Error::Version(
            path.to_path_buf(),
            format!(
                "header declares {} tensors but lists {}",
                header.tensor_count,
                header.tensors.len()
            ),
        ));
    }
    let total: usize = header.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
    if payload.len() != 4 * total {
        return Err(corrupt(format!(
            "payload has {} bytes, header needs {}",
            payload.len(),
            4 * total
        )));
    }
    let mut store = ParamStore::new();
    let mut floats = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
    for entry in header.tensors {
        let n = entry.shape.iter().product();
        let data: Vec<f64> = floats.by_ref().take(n).collect();
        store.add(entry.name, Tensor::new(entry.shape, data)?);
    }
    Ok((header.meta, store))
}

/// Rounds every parameter to the nearest 32-bit value, as stored on disk.
pub fn round_to_f32(store: &mut ParamStore) {
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for v in store.get_mut(id).data_mut() {
            *v = *v as f32 as f64;
        }
    }
}
