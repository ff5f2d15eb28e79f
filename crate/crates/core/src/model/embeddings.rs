use std::collections::HashMap;
use std::path::Path;

use super::error::IngestError;
use crate::vectors::Vectors;

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";

/// Id-indexed dense vectors produced outside the toolkit (or by the mapel
/// feature extractor).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, ids: Vec<String>, vectors: Vec<f32>) -> Result<Self, IngestError> {
        if dim == 0 {
            return Err(IngestError::CountMismatch {
                expected: 1,
                found: 0,
            });
        }
        if vectors.len() != ids.len() * dim {
            return Err(IngestError::CountMismatch {
                expected: ids.len() * dim,
                found: vectors.len(),
            });
        }
        if let Some(index) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::NonFiniteValue { index });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() || id.contains('\n') {
                return Err(IngestError::InvalidId(id.clone()));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(IngestError::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            dim,
            ids,
            vectors,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|i| self.row(i))
    }

    pub fn raw(&self) -> &[f32] {
        &self.vectors
    }

    /// Widen to `f64` sample rows.
    pub fn to_vectors(&self) -> Vectors {
        Vectors::new(self.dim, self.vectors.iter().map(|&v| v as f64).collect())
    }

    /// Build from `f64` rows, narrowing to `f32`.
    pub fn from_vectors(ids: Vec<String>, v: &Vectors) -> Result<Self, IngestError> {
        Self::new(v.dim(), ids, v.as_slice().iter().map(|&x| x as f32).collect())
    }
}

/// Parse an `EMB1` byte buffer.
pub fn read_embeddings(bytes: &[u8]) -> Result<EmbeddingTable, IngestError> {
    if bytes.len() < 12 || &bytes[..4] != EMB_MAGIC {
        return Err(IngestError::BadMagic);
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload_len = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or(IngestError::CountMismatch {
            expected: usize::MAX,
            found: bytes.len() - 12,
        })?;
    let payload = bytes.get(12..12 + payload_len).ok_or(IngestError::CountMismatch {
        expected: count * dim,
        found: (bytes.len() - 12) / 4,
    })?;
    let vectors: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(index) = vectors.iter().position(|v| !v.is_finite()) {
        return Err(IngestError::NonFiniteValue { index });
    }
    let tail = std::str::from_utf8(&bytes[12 + payload_len..])
        .map_err(|_| IngestError::InvalidId("<non-utf8 id list>".into()))?;
    let tail = tail.strip_suffix('\n').unwrap_or(tail);
    let ids: Vec<String> = if tail.is_empty() {
        Vec::new()
    } else {
        tail.split('\n').map(str::to_string).collect()
    };
    if ids.len() != count {
        return Err(IngestError::CountMismatch {
            expected: count,
            found: ids.len(),
        });
    }
    EmbeddingTable::new(dim, ids, vectors)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable, IngestError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| IngestError::io(path, e))?;
    read_embeddings(&bytes)
}

/// Serialize a table: magic, `u32` dim, `u32` count, `f32` payload (all
/// little-endian), then one id per line.
pub fn encode_embeddings(table: &EmbeddingTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + table.vectors.len() * 4 + table.ids.len() * 8);
    out.extend_from_slice(EMB_MAGIC);
    out.extend_from_slice(&(table.dim as u32).to_le_bytes());
    out.extend_from_slice(&(table.ids.len() as u32).to_le_bytes());
    for v in &table.vectors {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for id in &table.ids {
        out.extend_from_slice(id.as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn write_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    std::fs::write(path, encode_embeddings(table)).map_err(|e| IngestError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_of_one() {
        let t = EmbeddingTable::new(2, vec!["a".into()], vec![1.0, 0.0]).unwrap();
        let back = read_embeddings(&encode_embeddings(&t)).unwrap();
        assert_eq!(back.get("a"), Some(&[1.0f32, 0.0][..]));
    }

    #[test]
    fn short_payload_is_count_mismatch() {
        let mut bytes = b"EMB1".to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        assert!(matches!(
            read_embeddings(&bytes),
            Err(IngestError::CountMismatch { .. })
        ));
    }

    #[test]
    fn nan_payload_is_rejected() {
        let mut bytes = b"EMB1".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        bytes.extend_from_slice(b"a\n");
        assert!(matches!(
            read_embeddings(&bytes),
            Err(IngestError::NonFiniteValue { index: 0 })
        ));
    }

    #[test]
    fn bad_magic_and_duplicates() {
        assert!(matches!(read_embeddings(b"EMB2\0\0\0\0\0\0\0\0"), Err(IngestError::BadMagic)));
        assert!(matches!(
            EmbeddingTable::new(1, vec!["a".into(), "a".into()], vec![0.0, 1.0]),
            Err(IngestError::DuplicateId(_))
        ));
    }

    proptest! {
        #[test]
        fn encode_decode_is_bit_exact(
            dim in 1usize..6,
            raw in proptest::collection::vec(-1e6f32..1e6f32, 0..40),
        ) {
            let n = raw.len() / dim;
            let vectors = raw[..n * dim].to_vec();
            let ids = (0..n).map(|i| format!("map{}:{}", i / 3, i)).collect();
            let t = EmbeddingTable::new(dim, ids, vectors).unwrap();
            let bytes = encode_embeddings(&t);
            let back = read_embeddings(&bytes).unwrap();
            prop_assert_eq!(encode_embeddings(&back), bytes);
            prop_assert!(back.raw().iter().zip(t.raw()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
