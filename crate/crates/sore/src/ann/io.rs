//! Versioned binary dump of an [`AnnIndex`].
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "SOREANN1"
//! u32 dim | u32 M | u32 ef_construction | u64 seed
//! u64 count | u64 entry (u64::MAX = none) | u32 max_level
//! per node:
//!   u32 n_layers
//!   u8  kind (0 outlier, 1 core, 2 metadata)
//!   [kind 0 only] u16 group_name_len + utf8 bytes
//!   u64 ref_id
//!   dim x f32 vector
//!   n_layers x { u32 len, len x u32 neighbor ids }
//! u32 crc32 over everything above
//! ```
//!
//! Deserialization re-validates graph invariants so a corrupt or truncated
//! file can never produce an index that panics later.

use super::{AnnError, AnnIndex, AnnParams, Node, PointKind, PointLabel};

pub const MAGIC: &[u8; 8] = b"SOREANN1";

pub fn serialize(index: &AnnIndex) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + index.nodes.len() * (index.dim * 4 + 64));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(index.dim as u32).to_le_bytes());
    buf.extend_from_slice(&(index.params.m as u32).to_le_bytes());
    buf.extend_from_slice(&(index.params.ef_construction as u32).to_le_bytes());
    buf.extend_from_slice(&index.params.seed.to_le_bytes());
    buf.extend_from_slice(&(index.nodes.len() as u64).to_le_bytes());
    buf.extend_from_slice(&index.entry.map_or(u64::MAX, u64::from).to_le_bytes());
    buf.extend_from_slice(&(index.max_level as u32).to_le_bytes());

    for node in &index.nodes {
        buf.extend_from_slice(&(node.neighbors.len() as u32).to_le_bytes());
        match node.label.kind {
            PointKind::OutlierPhrase => {
                buf.push(0);
                let name = node.label.group_name.as_deref().unwrap_or_default();
                buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
                buf.extend_from_slice(name.as_bytes());
            }
            PointKind::CoreSegment => buf.push(1),
            PointKind::Metadata => buf.push(2),
        }
        buf.extend_from_slice(&node.label.ref_id.to_le_bytes());
        for &v in &node.vector {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for layer in &node.neighbors {
            buf.extend_from_slice(&(layer.len() as u32).to_le_bytes());
            for &nb in layer {
                buf.extend_from_slice(&nb.to_le_bytes());
            }
        }
    }

    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], AnnError> {
        if self.pos + n > self.bytes.len() {
            return Err(AnnError::CorruptIndex(format!(
                "truncated at byte {} (wanted {} more)",
                self.pos, n
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, AnnError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, AnnError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, AnnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, AnnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, AnnError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<AnnIndex, AnnError> {
    if bytes.len() < MAGIC.len() + 4 {
        return Err(AnnError::CorruptIndex("too short for header".into()));
    }
    let (payload, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored_crc != computed {
        return Err(AnnError::CorruptIndex(format!(
            "crc mismatch: stored {stored_crc:#010x}, computed {computed:#010x}"
        )));
    }

    let mut r = Reader {
        bytes: payload,
        pos: 0,
    };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(AnnError::CorruptIndex("bad magic".into()));
    }
    let dim = r.u32()? as usize;
    let m = r.u32()? as usize;
    let ef_construction = r.u32()? as usize;
    let seed = r.u64()?;
    let count = r.u64()? as usize;
    let entry_raw = r.u64()?;
    let max_level = r.u32()? as usize;

    if dim == 0 || m == 0 {
        return Err(AnnError::CorruptIndex("zero dim or M".into()));
    }
    let entry = if entry_raw == u64::MAX {
        None
    } else if entry_raw < count as u64 {
        Some(entry_raw as u32)
    } else {
        return Err(AnnError::CorruptIndex("entry point out of range".into()));
    };
    if entry.is_none() && count > 0 {
        return Err(AnnError::CorruptIndex("missing entry point".into()));
    }

    let mut nodes = Vec::with_capacity(count.min(1 << 20));
    for i in 0..count {
        let n_layers = r.u32()? as usize;
        if n_layers == 0 || n_layers > max_level + 1 {
            return Err(AnnError::CorruptIndex(format!(
                "node {i}: bad layer count {n_layers}"
            )));
        }
        let kind = r.u8()?;
        let label = match kind {
            0 => {
                let len = r.u16()? as usize;
                let name = std::str::from_utf8(r.take(len)?)
                    .map_err(|_| AnnError::CorruptIndex(format!("node {i}: bad group name")))?
                    .to_string();
                let ref_id = r.u64()?;
                PointLabel::outlier(name, ref_id)
            }
            1 => PointLabel::core_segment(r.u64()?),
            2 => PointLabel {
                kind: PointKind::Metadata,
                group_name: None,
                ref_id: r.u64()?,
            },
            other => {
                return Err(AnnError::CorruptIndex(format!(
                    "node {i}: unknown point kind {other}"
                )))
            }
        };
        let mut vector = Vec::with_capacity(dim);
        let mut sumsq = 0.0f64;
        for _ in 0..dim {
            let v = r.f32()?;
            if !v.is_finite() {
                return Err(AnnError::CorruptIndex(format!(
                    "node {i}: non-finite component"
                )));
            }
            sumsq += f64::from(v) * f64::from(v);
            vector.push(v);
        }
        if (sumsq.sqrt() - 1.0).abs() > 1e-3 {
            return Err(AnnError::CorruptIndex(format!(
                "node {i}: vector is not unit-norm"
            )));
        }
        let mut neighbors = Vec::with_capacity(n_layers);
        for layer in 0..n_layers {
            let len = r.u32()? as usize;
            let cap = if layer == 0 { m * 2 } else { m };
            if len > cap {
                return Err(AnnError::CorruptIndex(format!(
                    "node {i}: layer {layer} has {len} neighbors (cap {cap})"
                )));
            }
            let mut ids = Vec::with_capacity(len);
            for _ in 0..len {
                let nb = r.u32()?;
                if nb as usize >= count || nb as usize == i {
                    return Err(AnnError::CorruptIndex(format!(
                        "node {i}: neighbor id {nb} out of range"
                    )));
                }
                ids.push(nb);
            }
            neighbors.push(ids);
        }
        nodes.push(Node {
            vector,
            label,
            neighbors,
        });
    }
    if r.pos != payload.len() {
        return Err(AnnError::CorruptIndex(format!(
            "{} trailing bytes",
            payload.len() - r.pos
        )));
    }
    if let Some(e) = entry {
        if nodes[e as usize].level() != max_level {
            return Err(AnnError::CorruptIndex(
                "entry point does not reach max level".into(),
            ));
        }
    }

    Ok(AnnIndex {
        dim,
        params: AnnParams {
            m,
            ef_construction,
            seed,
        },
        nodes,
        entry,
        max_level,
    })
}
