//! On-disk formats: preprocessed corpora, topic models, result tables,
//! chain traces and run manifests.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use bayesteach_core::exact::ExactTeachingTable;
use bayesteach_core::learner::ErrorRecord;
use bayesteach_core::ranking::RankingRecord;
use bayesteach_core::teaching::ChainState;
use bayesteach_core::{Corpus, DocMeta, Document, Hyperparams, TopicModel, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CORPUS_VERSION: u32 = 1;
pub const MODEL_VERSION: u32 = 1;
pub const TABLE_SCHEMA_VERSION: u32 = 1;

fn check_version(found: u32, expected: u32) -> Result<()> {
    if found != expected {
        return Err(Error::Version { found, expected });
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredDocument {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub tokens: Vec<usize>,
}

/// A preprocessed corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub version: u32,
    pub vocabulary: Vec<String>,
    pub documents: Vec<StoredDocument>,
}

impl CorpusFile {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self {
            version: CORPUS_VERSION,
            vocabulary: corpus.vocabulary().words().to_vec(),
            documents: corpus
                .documents()
                .iter()
                .zip(corpus.meta())
                .map(|(d, m)| StoredDocument {
                    id: m.id.clone(),
                    title: m.title.clone(),
                    tokens: d.tokens.clone(),
                })
                .collect(),
        }
    }

    pub fn into_corpus(self) -> Result<Corpus> {
        check_version(self.version, CORPUS_VERSION)?;
        let vocabulary = Vocabulary::from_words(&self.vocabulary)?;
        let (docs, meta) = self
            .documents
            .into_iter()
            .map(|d| (Document::new(d.tokens), DocMeta { id: d.id, title: d.title }))
            .unzip();
        Ok(Corpus::new(docs, vocabulary, meta)?)
    }
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    write_json(path, &CorpusFile::from_corpus(corpus))
}

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    read_json::<CorpusFile>(path)?.into_corpus()
}

/// A topic matrix with optional vocabulary, topic labels and the
/// hyperparameters it was fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub topics: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn new(model: &TopicModel) -> Self {
        Self {
            version: MODEL_VERSION,
            topics: model.to_rows(),
            vocabulary: None,
            labels: None,
            alpha: None,
            beta: None,
        }
    }

    pub fn with_hyper(mut self, hyper: &Hyperparams) -> Self {
        self.alpha = Some(hyper.alpha().to_vec());
        self.beta = Some(hyper.beta().to_vec());
        self
    }

    pub fn with_vocabulary(mut self, vocab: &Vocabulary) -> Self {
        self.vocabulary = Some(vocab.words().to_vec());
        self
    }

    pub fn model(&self) -> Result<TopicModel> {
        check_version(self.version, MODEL_VERSION)?;
        let model = TopicModel::from_rows(self.topics.clone())?;
        if let Some(v) = &self.vocabulary {
            if v.len() != model.vocab_size() {
                return Err(Error::Invalid(format!(
                    "model has {} columns but {} vocabulary words",
                    model.vocab_size(),
                    v.len()
                )));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != model.num_topics() {
                return Err(Error::Invalid(format!(
                    "model has {} topics but {} labels",
                    model.num_topics(),
                    l.len()
                )));
            }
        }
        Ok(model)
    }

    /// Stored hyperparameters, if both are present.
    pub fn hyper(&self) -> Result<Option<Hyperparams>> {
        match (&self.alpha, &self.beta) {
            (Some(a), Some(b)) => Ok(Some(Hyperparams::new(a.clone(), b.clone())?)),
            _ => Ok(None),
        }
    }

    /// Resolve a topic given by label or by index.
    pub fn topic_index(&self, name: &str) -> Result<usize> {
        if let Some(i) = self.labels.as_ref().and_then(|l| l.iter().position(|x| x == name)) {
            return Ok(i);
        }
        match name.parse::<usize>() {
            Ok(i) if i < self.topics.len() => Ok(i),
            _ => Err(Error::Invalid(format!("unknown topic {name:?}"))),
        }
    }
}

pub fn write_model(path: &Path, file: &ModelFile) -> Result<()> {
    write_json(path, file)
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let file: ModelFile = read_json(path)?;
    file.model()?;
    Ok(file)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Invalid(format!("unknown output format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(x) => write!(f, "{x}"),
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A rectangular result table, written as CSV or as a JSON array of objects.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(ToString::to_string))?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let objects: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(|c| serde_json::to_value(c).expect("cell serializes")))
                    .collect()
            })
            .collect();
        let doc = serde_json::json!({ "schema_version": TABLE_SCHEMA_VERSION, "rows": objects });
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w).map_err(|e| Error::Io {
            path: "<table>".into(),
            source: e,
        })
    }

    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let w = BufWriter::new(file);
        match format {
            OutputFormat::Csv => self.write_csv(w),
            OutputFormat::Json => self.write_json(w),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8")
    }
}

/// Read a CSV file back as header plus string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

/// One row per document-set count vector.
pub fn exact_table(table: &ExactTeachingTable, vocab_size: usize) -> Table {
    let num_docs = table.entries.first().map_or(0, |e| e.counts.len());
    let mut cols = Vec::new();
    for d in 0..num_docs {
        cols.extend((0..vocab_size).map(|w| format!("d{d}_c{w}")));
    }
    cols.extend((0..vocab_size).map(|w| format!("b{w}")));
    cols.extend(["teaching", "likelihood", "difference", "log_teaching", "log_likelihood"].map(String::from));
    let mut out = Table::new(cols);
    for e in &table.entries {
        let mut row: Vec<Cell> = e.counts.iter().flatten().map(|&c| c.into()).collect();
        row.extend(e.barycenter().into_iter().map(Cell::from));
        row.extend([e.teaching, e.likelihood, e.difference(), e.log_teaching, e.log_likelihood].map(Cell::from));
        out.push(row);
    }
    out
}

pub fn error_records_table(records: &[ErrorRecord]) -> Table {
    let mut out = Table::new(["condition", "num_docs", "replication", "sse"]);
    for r in records {
        out.push(vec![r.condition.to_string().into(), r.num_docs.into(), r.replication.into(), r.sse.into()]);
    }
    out
}

pub fn ranking_table(records: &[RankingRecord]) -> Table {
    let mut out = Table::new([
        "rank",
        "id",
        "title",
        "mean_log_teaching",
        "stderr",
        "per_word_log_likelihood",
        "cosine_score",
    ]);
    for (i, r) in records.iter().enumerate() {
        out.push(vec![
            (i + 1).into(),
            r.id.as_str().into(),
            r.title.as_str().into(),
            r.mean_log_teaching.into(),
            r.stderr.into(),
            r.per_word_log_likelihood.into(),
            r.cosine_score.into(),
        ]);
    }
    out
}

/// One line of a chain trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub accepted: bool,
    pub log_score: f64,
    pub docs: Vec<Vec<usize>>,
}

impl From<&ChainState> for TraceRecord {
    fn from(s: &ChainState) -> Self {
        Self {
            step: s.step,
            accepted: s.accepted,
            log_score: s.retained_log_score,
            docs: s.docs.iter().map(|d| d.tokens.clone()).collect(),
        }
    }
}

/// Streams chain states as JSON lines.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, state: &ChainState) -> Result<()> {
        serde_json::to_writer(&mut self.out, &TraceRecord::from(state))?;
        self.out.write_all(b"\n").map_err(|e| Error::io("<trace>", e))
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(self.out)
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, parameters: serde_json::Value) -> Self {
        Self {
            schema_version: TABLE_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            parameters,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_round_trip() {
        let docs = vec![Document::new(vec![0, 2, 1]), Document::new(vec![])];
        let c = Corpus::from_documents(docs, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        write_corpus(&p, &c).unwrap();
        assert_eq!(read_corpus(&p).unwrap(), c);
    }

    #[test]
    fn corpus_version_checked() {
        let mut f = CorpusFile::from_corpus(&Corpus::from_documents(vec![], 2).unwrap());
        f.version = 99;
        assert!(matches!(f.into_corpus(), Err(Error::Version { found: 99, .. })));
    }

    #[test]
    fn model_round_trip_and_labels() {
        let m = TopicModel::from_rows(vec![vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
        let h = Hyperparams::symmetric(2, 2, 0.1, 0.2).unwrap();
        let mut f = ModelFile::new(&m).with_hyper(&h);
        f.labels = Some(vec!["war".into(), "love".into()]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        write_model(&p, &f).unwrap();
        let back = read_model(&p).unwrap();
        assert_eq!(back.model().unwrap(), m);
        assert_eq!(back.hyper().unwrap(), Some(h));
        assert_eq!(back.topic_index("love").unwrap(), 1);
        assert_eq!(back.topic_index("0").unwrap(), 0);
        assert!(back.topic_index("peace").is_err());
        assert!(back.topic_index("2").is_err());
    }

    #[test]
    fn table_csv_and_json() {
        let mut t = Table::new(["a", "b", "c"]);
        t.push(vec![1usize.into(), 0.25.into(), "x,y".into()]);
        assert_eq!(t.to_csv_string(), "a,b,c\n1,0.25,\"x,y\"\n");
        let mut buf = Vec::new();
        t.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["rows"][0]["b"], 0.25);
        assert_eq!(v["rows"][0]["c"], "x,y");
    }

    #[test]
    fn trace_lines() {
        let s = ChainState {
            docs: vec![Document::new(vec![1, 0])],
            retained_log_score: -1.5,
            step: 3,
            accepted: true,
        };
        let mut w = TraceWriter::new(Vec::new());
        w.write(&s).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        assert_eq!(text, "{\"step\":3,\"accepted\":true,\"log_score\":-1.5,\"docs\":[[1,0]]}\n");
    }
}
