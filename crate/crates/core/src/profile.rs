//! Attribution profiles, human annotations and corpus ingestion.
//!
//! A corpus file is UTF-8 JSON Lines, one instance per line:
//!
//! ```text
//! {"id":"a1","tokens":["a","man","."],"attributions":{"lime":[0.1,0.7,0.0]},"human":[[0,1,0]]}
//! ```
//!
//! Records are validated as they stream in. [`IngestMode::Strict`] aborts on
//! the first bad record; [`IngestMode::Lenient`] skips it and keeps a count.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Why a single instance failed validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("instance has no tokens")]
    EmptyTokens,
    #[error("empty method name in attributions")]
    EmptyMethodName,
    #[error("{field} has {actual} values, expected {expected} (one per token)")]
    LengthMismatch {
        field: String,
        expected: usize,
        actual: usize,
    },
    #[error("{field}[{index}] is not a finite number")]
    NonFinite { field: String, index: usize },
    #[error("{field}[{index}] is {value}, expected 0 or 1")]
    NonBinary {
        field: String,
        index: usize,
        value: u8,
    },
    #[error("methods {found:?} differ from the corpus method set {expected:?}")]
    MethodSetMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("duplicate instance id")]
    DuplicateId,
}

/// Corpus-level validation failure for an instance at `position` (0-based).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("instance #{position} ('{id}'): {error}")]
pub struct CorpusError {
    pub position: usize,
    pub id: String,
    pub error: ValidationError,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot open {}: {source}", path.display())]
    Open { path: PathBuf, source: io::Error },
    #[error("read failed: {0}")]
    Read(#[from] io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: instance '{id}': {error}")]
    Invalid {
        line: usize,
        id: String,
        error: ValidationError,
    },
}

impl LoadError {
    /// True for failures caused by the data rather than the filesystem.
    pub fn is_data_error(&self) -> bool {
        matches!(self, Self::Malformed { .. } | Self::Invalid { .. })
    }
}

/// Wire form of one corpus line. Field names are part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(deserialize_with = "unique_method_map")]
    pub attributions: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_label: Option<String>,
}

// serde_json silently keeps the last value for a repeated key; method names
// must be unique, so repeated keys are rejected here.
fn unique_method_map<'de, D>(deserializer: D) -> Result<BTreeMap<String, Vec<f64>>, D::Error>
where
    D: Deserializer<'de>,
{
    struct MethodMapVisitor;

    impl<'de> Visitor<'de> for MethodMapVisitor {
        type Value = BTreeMap<String, Vec<f64>>;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("an object mapping method names to score arrays")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut map = BTreeMap::new();
            while let Some((name, scores)) = access.next_entry::<String, Vec<f64>>()? {
                if map.contains_key(&name) {
                    return Err(serde::de::Error::custom(format!(
                        "duplicate method name '{name}'"
                    )));
                }
                map.insert(name, scores);
            }
            Ok(map)
        }
    }

    deserializer.deserialize_map(MethodMapVisitor)
}

/// One sentence with per-method attribution profiles and optional human
/// token selections. Always valid once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionInstance {
    id: String,
    tokens: Vec<String>,
    attributions: BTreeMap<String, Vec<f64>>,
    human: Option<Vec<Vec<u8>>>,
    gold_label: Option<String>,
    predicted_label: Option<String>,
}

impl AttributionInstance {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Sentence length `n`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn attributions(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.attributions
    }

    pub fn scores(&self, method: &str) -> Option<&[f64]> {
        self.attributions.get(method).map(Vec::as_slice)
    }

    pub fn method_names(&self) -> impl Iterator<Item = &str> {
        self.attributions.keys().map(String::as_str)
    }

    /// Per-annotator binary selections, if the instance was annotated.
    pub fn human(&self) -> Option<&[Vec<u8>]> {
        self.human.as_deref()
    }

    pub fn gold_label(&self) -> Option<&str> {
        self.gold_label.as_deref()
    }

    pub fn predicted_label(&self) -> Option<&str> {
        self.predicted_label.as_deref()
    }

    pub fn to_record(&self) -> InstanceRecord {
        InstanceRecord {
            id: self.id.clone(),
            tokens: self.tokens.clone(),
            attributions: self.attributions.clone(),
            human: self.human.clone(),
            gold_label: self.gold_label.clone(),
            predicted_label: self.predicted_label.clone(),
        }
    }
}

impl TryFrom<InstanceRecord> for AttributionInstance {
    type Error = ValidationError;

    fn try_from(record: InstanceRecord) -> Result<Self, Self::Error> {
        let n = record.tokens.len();
        if n == 0 {
            return Err(ValidationError::EmptyTokens);
        }
        for (name, scores) in &record.attributions {
            if name.is_empty() {
                return Err(ValidationError::EmptyMethodName);
            }
            let field = || format!("attributions[\"{name}\"]");
            if scores.len() != n {
                return Err(ValidationError::LengthMismatch {
                    field: field(),
                    expected: n,
                    actual: scores.len(),
                });
            }
            if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
                return Err(ValidationError::NonFinite {
                    field: field(),
                    index,
                });
            }
        }
        if let Some(human) = &record.human {
            for (annotator, selection) in human.iter().enumerate() {
                let field = || format!("human[{annotator}]");
                if selection.len() != n {
                    return Err(ValidationError::LengthMismatch {
                        field: field(),
                        expected: n,
                        actual: selection.len(),
                    });
                }
                if let Some((index, &value)) = selection.iter().enumerate().find(|(_, &v)| v > 1) {
                    return Err(ValidationError::NonBinary {
                        field: field(),
                        index,
                        value,
                    });
                }
            }
        }
        Ok(Self {
            id: record.id,
            tokens: record.tokens,
            attributions: record.attributions,
            human: record.human,
            gold_label: record.gold_label,
            predicted_label: record.predicted_label,
        })
    }
}

/// Ordered, validated collection of instances sharing one method set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    instances: Vec<AttributionInstance>,
    method_names: Vec<String>,
}

impl Corpus {
    /// Builds a corpus; the first instance fixes the method set.
    pub fn new(instances: Vec<AttributionInstance>) -> Result<Self, CorpusError> {
        let mut builder = CorpusBuilder::default();
        for (position, instance) in instances.into_iter().enumerate() {
            builder.push(instance).map_err(|(id, error)| CorpusError {
                position,
                id,
                error,
            })?;
        }
        Ok(builder.finish())
    }

    pub fn instances(&self) -> &[AttributionInstance] {
        &self.instances
    }

    /// Method names in sorted order. This order is canonical everywhere a
    /// method index is used.
    pub fn method_names(&self) -> &[String] {
        &self.method_names
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.method_names
            .binary_search_by(|m| m.as_str().cmp(name))
            .ok()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Longest sentence, 0 for an empty corpus.
    pub fn max_len(&self) -> usize {
        self.instances.iter().map(|i| i.len()).max().unwrap_or(0)
    }

    pub fn annotated_count(&self) -> usize {
        self.instances.iter().filter(|i| i.human.is_some()).count()
    }

    /// Applies [`zero_punctuation`] to every instance.
    pub fn zero_punctuation(&self, punctuation: &PunctuationSet) -> Corpus {
        Corpus {
            instances: self
                .instances
                .iter()
                .map(|i| zero_punctuation(i, punctuation))
                .collect(),
            method_names: self.method_names.clone(),
        }
    }

    /// Writes the corpus in the line-delimited record format.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for instance in &self.instances {
            serde_json::to_writer(&mut out, &instance.to_record())?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

#[derive(Default)]
struct CorpusBuilder {
    instances: Vec<AttributionInstance>,
    ids: HashSet<String>,
    methods: Option<Vec<String>>,
}

impl CorpusBuilder {
    fn check(&self, instance: &AttributionInstance) -> Result<(), ValidationError> {
        if self.ids.contains(&instance.id) {
            return Err(ValidationError::DuplicateId);
        }
        if let Some(expected) = &self.methods {
            if !instance
                .method_names()
                .eq(expected.iter().map(String::as_str))
            {
                return Err(ValidationError::MethodSetMismatch {
                    expected: expected.clone(),
                    found: instance.method_names().map(str::to_owned).collect(),
                });
            }
        }
        Ok(())
    }

    fn push(&mut self, instance: AttributionInstance) -> Result<(), (String, ValidationError)> {
        if let Err(error) = self.check(&instance) {
            return Err((instance.id, error));
        }
        if self.methods.is_none() {
            self.methods = Some(instance.method_names().map(str::to_owned).collect());
        }
        self.ids.insert(instance.id.clone());
        self.instances.push(instance);
        Ok(())
    }

    fn finish(self) -> Corpus {
        Corpus {
            instances: self.instances,
            method_names: self.methods.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IngestMode {
    #[default]
    Strict,
    Lenient,
}

/// A record dropped in lenient mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub skipped: Vec<SkippedRecord>,
    /// Hex SHA-256 of the raw input bytes.
    pub checksum: String,
}

impl LoadedCorpus {
    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }
}

pub fn load_corpus(path: impl AsRef<Path>, mode: IngestMode) -> Result<LoadedCorpus, LoadError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| LoadError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus(file, mode)
}

/// Streams records from `reader`, hashing the bytes as they pass.
pub fn read_corpus<R: Read>(reader: R, mode: IngestMode) -> Result<LoadedCorpus, LoadError> {
    let mut hashing = HashingReader {
        inner: reader,
        hasher: Sha256::new(),
    };
    let mut builder = CorpusBuilder::default();
    let mut skipped = Vec::new();
    {
        let mut input = BufReader::new(&mut hashing);
        let mut buf = Vec::new();
        let mut line = 0usize;
        loop {
            buf.clear();
            if input.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            line += 1;
            match parse_line(&buf, line).and_then(|instance| {
                instance.map_or(Ok(()), |instance| {
                    builder
                        .push(instance)
                        .map_err(|(id, error)| LoadError::Invalid { line, id, error })
                })
            }) {
                Ok(()) => {}
                Err(err) if mode == IngestMode::Lenient => skipped.push(SkippedRecord {
                    line,
                    reason: err.to_string(),
                }),
                Err(err) => return Err(err),
            }
        }
    }
    Ok(LoadedCorpus {
        corpus: builder.finish(),
        skipped,
        checksum: hex::encode(hashing.hasher.finalize()),
    })
}

fn parse_line(raw: &[u8], line: usize) -> Result<Option<AttributionInstance>, LoadError> {
    let text = std::str::from_utf8(raw).map_err(|e| LoadError::Malformed {
        line,
        message: format!("invalid UTF-8: {e}"),
    })?;
    let text = text.trim();
    if text.is_empty() {
        return Ok(None);
    }
    let record: InstanceRecord = serde_json::from_str(text).map_err(|e| LoadError::Malformed {
        line,
        message: e.to_string(),
    })?;
    let id = record.id.clone();
    AttributionInstance::try_from(record)
        .map(Some)
        .map_err(|error| LoadError::Invalid { line, id, error })
}

struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

/// Tokens whose human annotation is forced to 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PunctuationSet(BTreeSet<String>);

impl PunctuationSet {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(tokens.into_iter().map(Into::into).collect())
    }

    /// One single-character token per char of `chars`.
    pub fn from_chars(chars: &str) -> Self {
        Self(chars.chars().map(String::from).collect())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for PunctuationSet {
    /// ASCII punctuation characters as single-character tokens.
    fn default() -> Self {
        Self(
            (0u8..128)
                .map(char::from)
                .filter(char::is_ascii_punctuation)
                .map(String::from)
                .collect(),
        )
    }
}

/// Copy of `instance` where every annotator mark on a punctuation token is 0.
/// Attribution scores are left alone.
pub fn zero_punctuation(
    instance: &AttributionInstance,
    punctuation: &PunctuationSet,
) -> AttributionInstance {
    let mut out = instance.clone();
    if let Some(human) = out.human.as_mut() {
        let mask: Vec<bool> = instance
            .tokens
            .iter()
            .map(|t| punctuation.contains(t))
            .collect();
        for selection in human.iter_mut() {
            for (mark, &is_punct) in selection.iter_mut().zip(&mask) {
                if is_punct {
                    *mark = 0;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KSpecError {
    #[error("fixed k must be at least 1")]
    ZeroK,
    #[error("invalid k specification '{0}', expected 'fixed:N' or 'dynamic'")]
    Syntax(String),
}

/// How many tokens a selector keeps: a fixed count or peak-derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KSpec {
    Fixed(NonZeroUsize),
    Dynamic,
}

impl KSpec {
    pub fn fixed(k: usize) -> Result<Self, KSpecError> {
        NonZeroUsize::new(k)
            .map(Self::Fixed)
            .ok_or(KSpecError::ZeroK)
    }

    pub fn fixed_k(&self) -> Option<usize> {
        match self {
            Self::Fixed(k) => Some(k.get()),
            Self::Dynamic => None,
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, Self::Dynamic)
    }
}

impl fmt::Display for KSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(k) => write!(f, "fixed:{k}"),
            Self::Dynamic => f.write_str("dynamic"),
        }
    }
}

impl FromStr for KSpec {
    type Err = KSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "dynamic" {
            return Ok(Self::Dynamic);
        }
        let k = s
            .strip_prefix("fixed:")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| KSpecError::Syntax(s.to_owned()))?;
        Self::fixed(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, tokens: &[&str], scores: &[(&str, Vec<f64>)]) -> String {
        let record = InstanceRecord {
            id: id.into(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            attributions: scores
                .iter()
                .map(|(m, s)| (m.to_string(), s.clone()))
                .collect(),
            human: None,
            gold_label: None,
            predicted_label: None,
        };
        serde_json::to_string(&record).unwrap()
    }

    #[test]
    fn loads_two_valid_records() {
        let text = format!(
            "{}\n{}\n",
            line("a", &["x", "y"], &[("m", vec![0.1, 0.2])]),
            line("b", &["z"], &[("m", vec![1.0])])
        );
        let loaded = read_corpus(text.as_bytes(), IngestMode::Strict).unwrap();
        assert_eq!(loaded.corpus.len(), 2);
        assert_eq!(loaded.corpus.method_names(), ["m"]);
        assert_eq!(loaded.skip_count(), 0);
        assert_eq!(loaded.checksum.len(), 64);
    }

    #[test]
    fn short_score_vector_names_instance_and_field() {
        let text = line("s1", &["a", "b", "c"], &[("lime", vec![0.1, 0.2])]);
        let err = read_corpus(text.as_bytes(), IngestMode::Strict).unwrap_err();
        match &err {
            LoadError::Invalid { line, id, error } => {
                assert_eq!(*line, 1);
                assert_eq!(id, "s1");
                assert_eq!(
                    *error,
                    ValidationError::LengthMismatch {
                        field: "attributions[\"lime\"]".into(),
                        expected: 3,
                        actual: 2
                    }
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("s1"));
        assert!(err.to_string().contains("lime"));
    }

    #[test]
    fn lenient_skips_and_counts() {
        let text = format!(
            "{}\n{{not json\n{}\n",
            line("a", &["x"], &[("m", vec![0.1])]),
            line("b", &["z"], &[("m", vec![1.0])])
        );
        assert!(matches!(
            read_corpus(text.as_bytes(), IngestMode::Strict),
            Err(LoadError::Malformed { line: 2, .. })
        ));
        let loaded = read_corpus(text.as_bytes(), IngestMode::Lenient).unwrap();
        assert_eq!(loaded.corpus.len(), 2);
        assert_eq!(loaded.skip_count(), 1);
        assert_eq!(loaded.skipped[0].line, 2);
    }

    #[test]
    fn rejects_duplicate_ids_and_methods() {
        let text = format!(
            "{}\n{}\n",
            line("a", &["x"], &[("m", vec![0.1])]),
            line("a", &["z"], &[("m", vec![1.0])])
        );
        assert!(matches!(
            read_corpus(text.as_bytes(), IngestMode::Strict),
            Err(LoadError::Invalid {
                line: 2,
                error: ValidationError::DuplicateId,
                ..
            })
        ));

        let dup = r#"{"id":"a","tokens":["x"],"attributions":{"m":[1],"m":[2]}}"#;
        let err = read_corpus(dup.as_bytes(), IngestMode::Strict).unwrap_err();
        assert!(err.to_string().contains("duplicate method name"), "{err}");
    }

    #[test]
    fn rejects_ragged_method_sets() {
        let text = format!(
            "{}\n{}\n",
            line("a", &["x"], &[("m", vec![0.1])]),
            line("b", &["z"], &[("m", vec![1.0]), ("n", vec![1.0])])
        );
        assert!(matches!(
            read_corpus(text.as_bytes(), IngestMode::Strict),
            Err(LoadError::Invalid {
                error: ValidationError::MethodSetMismatch { .. },
                ..
            })
        ));
    }

    #[test]
    fn rejects_bad_annotations_and_unknown_fields() {
        let bad = r#"{"id":"a","tokens":["x","y"],"attributions":{"m":[1,2]},"human":[[0,2]]}"#;
        assert!(matches!(
            read_corpus(bad.as_bytes(), IngestMode::Strict),
            Err(LoadError::Invalid {
                error: ValidationError::NonBinary {
                    index: 1,
                    value: 2,
                    ..
                },
                ..
            })
        ));
        let short = r#"{"id":"a","tokens":["x","y"],"attributions":{"m":[1,2]},"human":[[0]]}"#;
        assert!(matches!(
            read_corpus(short.as_bytes(), IngestMode::Strict),
            Err(LoadError::Invalid {
                error: ValidationError::LengthMismatch { .. },
                ..
            })
        ));
        let extra = r#"{"id":"a","tokens":["x"],"attributions":{"m":[1]},"extra":1}"#;
        assert!(matches!(
            read_corpus(extra.as_bytes(), IngestMode::Strict),
            Err(LoadError::Malformed { .. })
        ));
        let empty = r#"{"id":"a","tokens":[],"attributions":{}}"#;
        assert!(matches!(
            read_corpus(empty.as_bytes(), IngestMode::Strict),
            Err(LoadError::Invalid {
                error: ValidationError::EmptyTokens,
                ..
            })
        ));
    }

    #[test]
    fn non_finite_scores_are_rejected() {
        let record = InstanceRecord {
            id: "a".into(),
            tokens: vec!["x".into(), "y".into()],
            attributions: [("m".to_string(), vec![0.0, f64::NAN])].into(),
            human: None,
            gold_label: None,
            predicted_label: None,
        };
        assert_eq!(
            AttributionInstance::try_from(record),
            Err(ValidationError::NonFinite {
                field: "attributions[\"m\"]".into(),
                index: 1
            })
        );
        let overflow = r#"{"id":"a","tokens":["x"],"attributions":{"m":[1e999]}}"#;
        assert!(read_corpus(overflow.as_bytes(), IngestMode::Strict).is_err());
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_corpus("/nonexistent/corpus.jsonl", IngestMode::Strict).unwrap_err();
        assert!(matches!(err, LoadError::Open { .. }));
        assert!(!err.is_data_error());
    }

    fn annotated(tokens: &[&str], human: Option<Vec<Vec<u8>>>) -> AttributionInstance {
        AttributionInstance::try_from(InstanceRecord {
            id: "i".into(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            attributions: [("m".to_string(), vec![0.5; tokens.len()])].into(),
            human,
            gold_label: None,
            predicted_label: None,
        })
        .unwrap()
    }

    #[test]
    fn zero_punctuation_clears_marks_on_punctuation() {
        let instance = annotated(&["a", "man", "."], Some(vec![vec![0, 1, 1]]));
        let zeroed = zero_punctuation(&instance, &PunctuationSet::default());
        assert_eq!(zeroed.human().unwrap(), &[vec![0, 1, 0]]);
        assert_eq!(zeroed.scores("m"), instance.scores("m"));
        assert_eq!(
            zero_punctuation(&zeroed, &PunctuationSet::default()),
            zeroed
        );
    }

    #[test]
    fn zero_punctuation_identity_cases() {
        let bare = annotated(&["a", "."], None);
        assert_eq!(zero_punctuation(&bare, &PunctuationSet::default()), bare);
        let marked = annotated(&["a", "."], Some(vec![vec![1, 1]]));
        assert_eq!(
            zero_punctuation(&marked, &PunctuationSet::new(Vec::<String>::new())),
            marked
        );
    }

    #[test]
    fn default_punctuation_is_ascii() {
        let set = PunctuationSet::default();
        for p in [".", ",", "!", "?", ";", ":", "'", "\"", "-", "(", ")"] {
            assert!(set.contains(p), "{p}");
        }
        assert!(!set.contains("a"));
        assert!(!set.contains("..."));
    }

    #[test]
    fn kspec_parsing() {
        assert_eq!("dynamic".parse::<KSpec>(), Ok(KSpec::Dynamic));
        assert_eq!("fixed:4".parse::<KSpec>(), Ok(KSpec::fixed(4).unwrap()));
        assert_eq!("fixed:0".parse::<KSpec>(), Err(KSpecError::ZeroK));
        assert!(matches!(
            "top3".parse::<KSpec>(),
            Err(KSpecError::Syntax(_))
        ));
        assert_eq!(KSpec::fixed(7).unwrap().to_string(), "fixed:7");
    }
}
