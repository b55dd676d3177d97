//! Text preprocessing and document-vector similarity for the semantic
//! characteristic.
//!
//! The pipeline runs in a fixed order: lowercase, tokenize on non-alphanumeric
//! boundaries, drop URLs, drop stop-words, drop tokens present in more than
//! half of the corpus, lemmatize.

mod embed;
mod lemma;

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

pub use embed::{
    docsim, embed, hashed_unit_vector, DocVector, EmbeddingProvider, HashedEmbedding,
    TableEmbedding, DEFAULT_EMBEDDING_DIM,
};
pub use lemma::{exception_table, lemmatize};

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Tokens in more than this fraction of corpus documents are dropped.
pub const MAX_DOC_FREQ: f64 = 0.5;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TextError {
    #[error("corpus statistics need at least one document")]
    EmptyCorpus,
    #[error("vector dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| lemma::data_lines(STOPWORDS).collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Byte offset where a URL starts inside a whitespace-delimited chunk.
fn url_start(chunk: &str) -> Option<usize> {
    let trimmed = chunk.trim_start_matches(|c: char| !c.is_alphanumeric());
    if trimmed.starts_with("www.") {
        return Some(chunk.len() - trimmed.len());
    }
    let sep = chunk.find("://")?;
    let scheme_len = chunk[..sep]
        .bytes()
        .rev()
        .take_while(u8::is_ascii_alphabetic)
        .count();
    (scheme_len > 0).then(|| sep - scheme_len)
}

/// Lowercases and splits `text` into alphanumeric tokens, skipping URLs
/// (anything with a `scheme://` or a `www.` prefix).
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for chunk in lower.split_whitespace() {
        let kept = match url_start(chunk) {
            Some(at) => &chunk[..at],
            None => chunk,
        };
        out.extend(
            kept.split(|c: char| !c.is_alphanumeric())
                .filter(|t| !t.is_empty())
                .map(str::to_string),
        );
    }
    out
}

/// Document frequencies over an experiment's text corpus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub doc_freq: BTreeMap<String, usize>,
}

impl CorpusStats {
    /// Fraction of documents containing `token`; 0 for unseen tokens.
    pub fn frequency(&self, token: &str) -> f64 {
        match (self.doc_freq.get(token), self.doc_count) {
            (Some(&n), d) if d > 0 => n as f64 / d as f64,
            _ => 0.0,
        }
    }
}

/// Counts, for each raw lowercase token, the documents that contain it.
pub fn build_corpus_stats<S: AsRef<str>>(docs: &[S]) -> Result<CorpusStats, TextError> {
    if docs.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    let mut doc_freq = BTreeMap::new();
    for doc in docs {
        let unique: HashSet<String> = tokenize(doc.as_ref()).into_iter().collect();
        for token in unique {
            *doc_freq.entry(token).or_insert(0) += 1;
        }
    }
    Ok(CorpusStats {
        doc_count: docs.len(),
        doc_freq,
    })
}

/// Ordered lemmas of a processed text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenDoc {
    pub tokens: Vec<String>,
}

impl TokenDoc {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn preprocess(text: &str, stats: &CorpusStats) -> TokenDoc {
    let tokens = tokenize(text)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .filter(|t| stats.frequency(t) <= MAX_DOC_FREQ)
        .map(|t| lemmatize(&t))
        .collect();
    TokenDoc { tokens }
}
