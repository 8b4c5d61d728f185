//! Dense string ↔ id tables for labels and words.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Ordered set of label strings with dense ids `0..N`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TagSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl TagSet {
    /// Build from labels in id order. Duplicates are rejected.
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = TagSet::default();
        for label in labels {
            let label = label.into();
            if set.index.contains_key(&label) {
                return Err(Error::invalid(format!("duplicate label {label:?}")));
            }
            set.index.insert(label.clone(), set.labels.len());
            set.labels.push(label);
        }
        Ok(set)
    }

    /// Sorted, deduplicated tag set over every label yielded.
    pub fn from_observed<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let mut all: Vec<&str> = labels.into_iter().collect();
        all.sort_unstable();
        all.dedup();
        TagSet::new(all).expect("deduplicated")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn lookup(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label_of(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Word table. Trained words get ids `0..M`; id `M` is reserved for unknown words.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Words are assigned ids in first-seen order.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary::default();
        for word in words {
            let word = word.as_ref();
            if !vocab.index.contains_key(word) {
                vocab.index.insert(word.to_owned(), vocab.words.len());
                vocab.words.push(word.to_owned());
            }
        }
        vocab
    }

    /// Number of trained words, excluding the unknown slot.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn unknown_id(&self) -> usize {
        self.words.len()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Trained id, or the unknown id for unseen surface forms.
    pub fn id_or_unknown(&self, word: &str) -> usize {
        self.get(word).unwrap_or_else(|| self.unknown_id())
    }

    pub fn word_of(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}
