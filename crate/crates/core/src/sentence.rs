use crate::error::{Error, Result};
use crate::index::TagSet;

/// Observed token sequence, `T >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::invalid("sentence has no tokens"));
        }
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.contains(['\t', '\n', '\r']))
        {
            return Err(Error::invalid(format!("malformed token {bad:?}")));
        }
        Ok(Sentence { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Sentence with one gold label id per token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    sentence: Sentence,
    labels: Vec<usize>,
}

impl LabeledSentence {
    pub fn new(sentence: Sentence, labels: Vec<usize>, tags: &TagSet) -> Result<Self> {
        if sentence.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} tokens but {} labels",
                sentence.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= tags.len()) {
            return Err(Error::invalid(format!(
                "label id {bad} outside tag set of size {}",
                tags.len()
            )));
        }
        Ok(LabeledSentence { sentence, labels })
    }

    pub fn sentence(&self) -> &Sentence {
        &self.sentence
    }

    pub fn tokens(&self) -> &[String] {
        self.sentence.tokens()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
