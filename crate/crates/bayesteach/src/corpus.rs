//! Raw text ingestion: tokenizing, stopword removal and frequency filtering.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use bayesteach_core::{Corpus, DocMeta, Document, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of a raw corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessConfig {
    pub stopwords: BTreeSet<String>,
    /// Words seen fewer times than this across the corpus are dropped.
    pub min_count: usize,
    pub lowercase: bool,
    /// Split on every non-alphanumeric character rather than on whitespace.
    pub strip_punct: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            stopwords: BTreeSet::new(),
            min_count: 1,
            lowercase: true,
            strip_punct: true,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_count == 0 {
            return Err(Error::Invalid("min_count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tokenize<'t>(&self, text: &'t str) -> Vec<String> {
        let pieces: Box<dyn Iterator<Item = &'t str>> = if self.strip_punct {
            Box::new(text.split(|c: char| !c.is_alphanumeric()))
        } else {
            Box::new(text.split_whitespace())
        };
        pieces
            .filter(|p| !p.is_empty())
            .map(|p| if self.lowercase { p.to_lowercase() } else { p.to_string() })
            .filter(|p| !self.stopwords.contains(p))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessSummary {
    pub vocab_size: usize,
    pub total_words: usize,
    pub num_documents: usize,
    /// Ids of documents left with no tokens.
    pub empty_documents: Vec<String>,
}

/// Build a corpus from raw documents. The vocabulary is sorted
/// alphabetically; empty documents are kept and listed in the summary.
pub fn preprocess(raw: &[RawDocument], config: &PreprocessConfig) -> Result<(Corpus, PreprocessSummary)> {
    config.validate()?;
    if raw.is_empty() {
        return Err(Error::Invalid("no documents to preprocess".into()));
    }
    let tokenized: Vec<Vec<String>> = raw.iter().map(|d| config.tokenize(&d.text)).collect();
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for tok in tokenized.iter().flatten() {
        *freq.entry(tok.as_str()).or_default() += 1;
    }
    let vocabulary = Vocabulary::from_words(freq.iter().filter(|(_, &c)| c >= config.min_count).map(|(w, _)| *w))?;
    let documents: Vec<Document> = tokenized
        .iter()
        .map(|toks| Document::new(toks.iter().filter_map(|t| vocabulary.index_of(t)).collect()))
        .collect();
    let empty_documents = raw
        .iter()
        .zip(&documents)
        .filter(|(_, d)| d.is_empty())
        .map(|(r, _)| r.id.clone())
        .collect();
    let meta = raw
        .iter()
        .map(|r| DocMeta {
            id: r.id.clone(),
            title: r.title.clone(),
        })
        .collect();
    let corpus = Corpus::new(documents, vocabulary, meta)?;
    let summary = PreprocessSummary {
        vocab_size: corpus.vocab_size(),
        total_words: corpus.total_words(),
        num_documents: corpus.num_documents(),
        empty_documents,
    };
    Ok((corpus, summary))
}

/// Read a line-delimited JSON corpus of `{id, title, text}` records.
pub fn read_raw_jsonl(path: &Path) -> Result<Vec<RawDocument>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(doc);
    }
    Ok(out)
}

/// One stopword per line; blank lines and `#` comments ignored.
pub fn read_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}
