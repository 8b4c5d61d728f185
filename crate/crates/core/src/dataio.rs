//! Readers for CoNLL-2000, CoNLL-2003 and CoNLL-U tagged corpora.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::index::{TagSet, Vocabulary};
use crate::sentence::{LabeledSentence, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorpusFormat {
    /// `word POS chunk`, space separated.
    Conll2000,
    /// `word POS chunk NER`, space separated, `-DOCSTART-` blocks dropped.
    Conll2003,
    /// Ten tab-separated columns; FORM and UPOS are used.
    Conllu,
}

impl CorpusFormat {
    pub fn name(self) -> &'static str {
        match self {
            CorpusFormat::Conll2000 => "conll2000",
            CorpusFormat::Conll2003 => "conll2003",
            CorpusFormat::Conllu => "conllu",
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conll2000" => Ok(CorpusFormat::Conll2000),
            "conll2003" => Ok(CorpusFormat::Conll2003),
            "conllu" => Ok(CorpusFormat::Conllu),
            other => Err(Error::invalid(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// Source-tag → target-tag mapping, e.g. to the universal tagset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TagMap {
    map: HashMap<String, String>,
}

impl TagMap {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// One `source<TAB>target` pair per line; `#` starts a comment line.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = HashMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(src), Some(dst), None) if !src.is_empty() && !dst.is_empty() => {
                    map.insert(src.to_owned(), dst.to_owned());
                }
                _ => {
                    return Err(Error::Parse {
                        path: origin.to_owned(),
                        line: no + 1,
                        message: "expected `source<TAB>target`".into(),
                    })
                }
            }
        }
        Ok(TagMap { map })
    }

    pub fn get(&self, tag: &str) -> Option<&str> {
        self.map.get(tag).map(String::as_str)
    }
}

/// Tokens with gold tag strings, before any indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl RawSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn read_sentences(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    tagmap: Option<&TagMap>,
) -> Result<Vec<RawSentence>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: 0,
        message: format!("not valid UTF-8: {e}"),
    })?;
    parse_sentences(&text, path, format, tagmap)
}

/// Parse corpus text; `origin` is only used in error messages.
pub fn parse_sentences(
    text: &str,
    origin: &Path,
    format: CorpusFormat,
    tagmap: Option<&TagMap>,
) -> Result<Vec<RawSentence>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        message,
    };
    let mut sentences = Vec::new();
    let mut current = RawSentence {
        tokens: Vec::new(),
        tags: Vec::new(),
    };
    let flush = |current: &mut RawSentence, sentences: &mut Vec<RawSentence>| {
        let done = std::mem::replace(
            current,
            RawSentence {
                tokens: Vec::new(),
                tags: Vec::new(),
            },
        );
        let docstart = format == CorpusFormat::Conll2003 && done.tokens.first().is_some_and(|t| t == "-DOCSTART-");
        if !done.is_empty() && !docstart {
            sentences.push(done);
        }
    };

    for (no, line) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut current, &mut sentences);
            continue;
        }
        let (word, tag) = match format {
            CorpusFormat::Conll2000 | CorpusFormat::Conll2003 => {
                let expected = if format == CorpusFormat::Conll2000 { 3 } else { 4 };
                let cols: Vec<&str> = line.split_whitespace().collect();
                if cols.len() != expected {
                    return Err(parse_err(
                        line_no,
                        format!("expected {expected} columns, found {}", cols.len()),
                    ));
                }
                (cols[0], cols[1])
            }
            CorpusFormat::Conllu => {
                if line.starts_with('#') {
                    continue;
                }
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() != 10 {
                    return Err(parse_err(line_no, format!("expected 10 tab-separated columns, found {}", cols.len())));
                }
                if cols[0].contains(['-', '.']) {
                    continue;
                }
                if cols[0].parse::<u32>().is_err() {
                    return Err(parse_err(line_no, format!("bad token id {:?}", cols[0])));
                }
                (cols[1], cols[3])
            }
        };
        if word.is_empty() || tag.is_empty() {
            return Err(parse_err(line_no, "empty word or tag".into()));
        }
        current.tokens.push(word.to_owned());
        current.tags.push(tag.to_owned());
    }
    flush(&mut current, &mut sentences);

    if let Some(map) = tagmap {
        let missing: BTreeSet<&str> = sentences
            .iter()
            .flat_map(|s| s.tags.iter())
            .filter(|t| map.get(t).is_none())
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            return Err(Error::UnmappedTags(missing.into_iter().map(str::to_owned).collect()));
        }
        for s in &mut sentences {
            for t in &mut s.tags {
                *t = map.get(t).expect("checked").to_owned();
            }
        }
    }
    Ok(sentences)
}

/// Indexed training corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub sentences: Vec<LabeledSentence>,
    pub tags: TagSet,
    pub vocab: Vocabulary,
}

impl Corpus {
    /// Tag set is the sorted set of observed tags; vocabulary is in first-seen order.
    pub fn from_raw(raw: &[RawSentence]) -> Result<Self> {
        let tags = TagSet::from_observed(raw.iter().flat_map(|s| s.tags.iter().map(String::as_str)));
        let vocab = Vocabulary::from_words(raw.iter().flat_map(|s| s.tokens.iter()));
        let sentences = raw
            .iter()
            .map(|s| {
                let labels = s.tags.iter().map(|t| tags.lookup(t).expect("observed")).collect();
                LabeledSentence::new(Sentence::new(s.tokens.iter().cloned())?, labels, &tags)
            })
            .collect::<Result<_>>()?;
        Ok(Corpus { sentences, tags, vocab })
    }

    pub fn n_tokens(&self) -> usize {
        self.sentences.iter().map(LabeledSentence::len).sum()
    }
}

pub fn read_corpus(path: impl AsRef<Path>, format: CorpusFormat, tagmap: Option<&TagMap>) -> Result<Corpus> {
    Corpus::from_raw(&read_sentences(path, format, tagmap)?)
}

/// Whether a test token's surface form occurs in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordKind {
    Known,
    Unknown,
}

pub fn split_known_unknown(sentences: &[RawSentence], vocab: &Vocabulary) -> Vec<Vec<WordKind>> {
    sentences
        .iter()
        .map(|s| {
            s.tokens
                .iter()
                .map(|t| if vocab.contains(t) { WordKind::Known } else { WordKind::Unknown })
                .collect()
        })
        .collect()
}
