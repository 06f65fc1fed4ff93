//! Versioned on-disk snapshot of a [`VectorStore`].
//!
//! ```text
//! manifest.json            version, dim, counts, ANN params
//! image.vec / text.vec     little-endian f32 rows
//! image.payload.jsonl      one {entry_id, record_id, payload} per row,
//! text.payload.jsonl       in the same order as the .vec rows
//! ```
//!
//! The HNSW graph is not serialised; it is rebuilt on load, which is
//! deterministic in row order.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AnnParams, Collection, CollectionKind, Payload, StoreCounts, StoreError, VectorStore};

pub const SNAPSHOT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    dim: usize,
    counts: StoreCounts,
    ann: AnnParams,
    index_built: bool,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct PayloadLine {
    entry_id: String,
    record_id: String,
    payload: Payload,
}

struct Encoded {
    files: Vec<(String, Vec<u8>)>,
}

fn vec_file(kind: CollectionKind) -> String {
    format!("{kind}.vec")
}

fn payload_file(kind: CollectionKind) -> String {
    format!("{kind}.payload.jsonl")
}

const KINDS: [CollectionKind; 2] = [CollectionKind::Image, CollectionKind::Text];

fn hash_files(files: &[(String, Vec<u8>)]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in files {
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

impl VectorStore {
    fn encode(&self) -> Result<Encoded, StoreError> {
        let manifest = Manifest {
            format_version: SNAPSHOT_VERSION,
            dim: self.dim,
            counts: self.counts(),
            ann: self.ann,
            index_built: KINDS.iter().all(|&k| self.index_ready(k)),
            meta: self.meta.clone(),
        };
        let mut files = vec![(
            MANIFEST.to_string(),
            serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::from)?,
        )];
        for kind in KINDS {
            let c = self.coll(kind);
            let mut vecs = Vec::with_capacity(c.data.len() * 4);
            for x in &c.data {
                vecs.extend_from_slice(&x.to_le_bytes());
            }
            let mut lines = Vec::new();
            for i in 0..c.len() {
                let line = PayloadLine {
                    entry_id: c.entry_ids[i].clone(),
                    record_id: c.record_ids[i].clone(),
                    payload: c.payloads[i].clone(),
                };
                serde_json::to_writer(&mut lines, &line).map_err(std::io::Error::from)?;
                lines.push(b'\n');
            }
            files.push((vec_file(kind), vecs));
            files.push((payload_file(kind), lines));
        }
        Ok(Encoded { files })
    }

    /// Content hash of the snapshot this store would write.
    pub fn snapshot_id(&self) -> Result<String, StoreError> {
        Ok(hash_files(&self.encode()?.files))
    }

    /// Writes a snapshot into `dir` (created if needed). Returns its id.
    pub fn persist(&self, dir: impl AsRef<Path>) -> Result<String, StoreError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let enc = self.encode()?;
        for (name, bytes) in &enc.files {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(hash_files(&enc.files))
    }

    /// Loads a snapshot, rebuilding the ANN index when one was recorded.
    pub fn load(dir: impl AsRef<Path>) -> Result<VectorStore, StoreError> {
        Ok(Self::load_with_id(dir)?.0)
    }

    pub fn load_with_id(dir: impl AsRef<Path>) -> Result<(VectorStore, String), StoreError> {
        let dir = dir.as_ref();
        let manifest_bytes =
            fs::read(dir.join(MANIFEST)).map_err(|e| StoreError::corrupt(None, format!("cannot read {MANIFEST}: {e}")))?;
        let raw: serde_json::Value = serde_json::from_slice(&manifest_bytes)
            .map_err(|e| StoreError::corrupt(None, format!("manifest is not JSON: {e}")))?;
        let version = raw
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| StoreError::corrupt(None, "manifest lacks format_version"))? as u32;
        if version != SNAPSHOT_VERSION {
            return Err(StoreError::corrupt(
                Some(version),
                format!("unsupported snapshot version (this build reads {SNAPSHOT_VERSION})"),
            ));
        }
        let manifest: Manifest =
            serde_json::from_value(raw).map_err(|e| StoreError::corrupt(Some(version), e.to_string()))?;
        if manifest.dim == 0 {
            return Err(StoreError::corrupt(Some(version), "dim must be positive"));
        }

        let mut files = vec![(MANIFEST.to_string(), manifest_bytes)];
        let mut store = VectorStore::with_params(manifest.dim, manifest.ann);
        store.meta = manifest.meta.clone();
        for kind in KINDS {
            let expected = match kind {
                CollectionKind::Image => manifest.counts.image,
                CollectionKind::Text => manifest.counts.text,
            };
            let vec_bytes = fs::read(dir.join(vec_file(kind)))
                .map_err(|e| StoreError::corrupt(Some(version), format!("{}: {e}", vec_file(kind))))?;
            let payload_bytes = fs::read(dir.join(payload_file(kind)))
                .map_err(|e| StoreError::corrupt(Some(version), format!("{}: {e}", payload_file(kind))))?;
            let coll = decode_collection(manifest.dim, expected, &vec_bytes, &payload_bytes)
                .map_err(|reason| StoreError::corrupt(Some(version), format!("{kind}: {reason}")))?;
            *store.coll_mut(kind) = coll;
            files.push((vec_file(kind), vec_bytes));
            files.push((payload_file(kind), payload_bytes));
        }
        if manifest.index_built {
            store.build_index();
        }
        Ok((store, hash_files(&files)))
    }
}

fn decode_collection(dim: usize, expected: usize, vecs: &[u8], payloads: &[u8]) -> Result<Collection, String> {
    if vecs.len() != expected * dim * 4 {
        return Err(format!(
            "vector file has {} bytes, expected {} rows of dim {dim}",
            vecs.len(),
            expected
        ));
    }
    let text = std::str::from_utf8(payloads).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    if lines.len() != expected {
        return Err(format!("{} payload lines, expected {expected}", lines.len()));
    }
    let mut coll = Collection::new(dim);
    let mut seen = HashSet::with_capacity(expected);
    let mut row = vec![0f32; dim];
    for (i, line) in lines.iter().enumerate() {
        let p: PayloadLine = serde_json::from_str(line).map_err(|e| format!("payload line {}: {e}", i + 1))?;
        if !seen.insert(p.entry_id.clone()) {
            return Err(format!("duplicate entry id {}", p.entry_id));
        }
        for (j, x) in row.iter_mut().enumerate() {
            let o = (i * dim + j) * 4;
            *x = f32::from_le_bytes([vecs[o], vecs[o + 1], vecs[o + 2], vecs[o + 3]]);
            if !x.is_finite() {
                return Err(format!("non-finite value in row {i}"));
            }
        }
        coll.push_row(p.entry_id, p.record_id, &row, p.payload);
    }
    Ok(coll)
}
