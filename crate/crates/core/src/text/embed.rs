//! Word-vector providers and document vectors.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{TextError, TokenDoc};

/// Dimension of the default hashed provider.
pub const DEFAULT_EMBEDDING_DIM: usize = 64;

/// Source of fixed-dimension word vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn vector(&self, token: &str) -> Arc<[f64]>;
}

fn token_seed(token: &str) -> u64 {
    let digest = Sha256::digest(token.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 8 bytes"))
}

/// Deterministic pseudo-random unit vector for `token`.
pub fn hashed_unit_vector(token: &str, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(token_seed(token));
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Maps every token to a unit vector seeded by a hash of the token. Tokens
/// that share a lemma share a vector, so topical overlap raises cosine.
#[derive(Debug)]
pub struct HashedEmbedding {
    dim: usize,
    cache: RwLock<HashMap<String, Arc<[f64]>>>,
}

impl HashedEmbedding {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedEmbedding {
            dim,
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl Default for HashedEmbedding {
    fn default() -> Self {
        HashedEmbedding::new(DEFAULT_EMBEDDING_DIM)
    }
}

impl EmbeddingProvider for HashedEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, token: &str) -> Arc<[f64]> {
        if let Some(v) = self
            .cache
            .read()
            .expect("embedding cache poisoned")
            .get(token)
        {
            return v.clone();
        }
        let v: Arc<[f64]> = hashed_unit_vector(token, self.dim).into();
        self.cache
            .write()
            .expect("embedding cache poisoned")
            .entry(token.to_string())
            .or_insert(v)
            .clone()
    }
}

/// Explicit vectors for known tokens; out-of-vocabulary tokens fall back to
/// hashed unit vectors.
#[derive(Debug)]
pub struct TableEmbedding {
    table: HashMap<String, Arc<[f64]>>,
    fallback: HashedEmbedding,
}

impl TableEmbedding {
    pub fn new(dim: usize, table: impl IntoIterator<Item = (String, Vec<f64>)>) -> Self {
        TableEmbedding {
            table: table.into_iter().map(|(k, v)| (k, v.into())).collect(),
            fallback: HashedEmbedding::new(dim),
        }
    }
}

impl EmbeddingProvider for TableEmbedding {
    fn dim(&self) -> usize {
        self.fallback.dim
    }

    fn vector(&self, token: &str) -> Arc<[f64]> {
        match self.table.get(token) {
            Some(v) => v.clone(),
            None => self.fallback.vector(token),
        }
    }
}

/// A document vector and its cached Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    values: Vec<f64>,
    norm: f64,
}

impl DocVector {
    pub fn new(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        DocVector { values, norm }
    }

    pub fn zeros(dim: usize) -> Self {
        DocVector::new(vec![0.0; dim])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }
}

/// Mean of the provider's vectors over the document's tokens. An empty
/// document embeds to the zero vector.
pub fn embed(doc: &TokenDoc, provider: &dyn EmbeddingProvider) -> Result<DocVector, TextError> {
    let dim = provider.dim();
    let mut sum = vec![0.0; dim];
    for token in &doc.tokens {
        let v = provider.vector(token);
        if v.len() != dim {
            return Err(TextError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(v.iter()) {
            *s += x;
        }
    }
    if !doc.tokens.is_empty() {
        let n = doc.tokens.len() as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    Ok(DocVector::new(sum))
}

/// Cosine similarity, defined as 0 when either vector is zero.
pub fn docsim(a: &DocVector, b: &DocVector) -> Result<f64, TextError> {
    if a.dim() != b.dim() {
        return Err(TextError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if a.is_zero() || b.is_zero() {
        return Ok(0.0);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (a.norm * b.norm)).clamp(-1.0, 1.0))
}
