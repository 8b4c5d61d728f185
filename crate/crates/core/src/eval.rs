//! Token-level error rates split into known and unknown words.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::dataio::{split_known_unknown, RawSentence, WordKind};
use crate::error::Result;
use crate::index::Vocabulary;
use crate::tagger::Tagger;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EvalReport {
    pub dataset: String,
    pub decoder: String,
    pub template: String,
    pub kw_tokens: u64,
    pub uw_tokens: u64,
    pub kw_errors: u64,
    pub uw_errors: u64,
    /// `(gold, predicted) → count`, including correct pairs.
    pub confusion: BTreeMap<(String, String), u64>,
}

fn percent(errors: u64, tokens: u64) -> Option<f64> {
    (tokens > 0).then(|| 100.0 * errors as f64 / tokens as f64)
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.4}"))
}

impl EvalReport {
    pub fn tokens(&self) -> u64 {
        self.kw_tokens + self.uw_tokens
    }

    pub fn errors(&self) -> u64 {
        self.kw_errors + self.uw_errors
    }

    /// Percent errors among known words; `None` when there are none.
    pub fn kw_rate(&self) -> Option<f64> {
        percent(self.kw_errors, self.kw_tokens)
    }

    pub fn uw_rate(&self) -> Option<f64> {
        percent(self.uw_errors, self.uw_tokens)
    }

    pub fn global_rate(&self) -> Option<f64> {
        percent(self.errors(), self.tokens())
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset={}", self.dataset);
        let _ = writeln!(s, "decoder={}", self.decoder);
        let _ = writeln!(s, "template={}", self.template);
        let _ = writeln!(s, "kw_err={}", fmt_rate(self.kw_rate()));
        let _ = writeln!(s, "uw_err={}", fmt_rate(self.uw_rate()));
        let _ = writeln!(s, "global_err={}", fmt_rate(self.global_rate()));
        let _ = writeln!(s, "kw_tokens={}", self.kw_tokens);
        let _ = writeln!(s, "uw_tokens={}", self.uw_tokens);
        let _ = writeln!(s, "tokens={}", self.tokens());
        let _ = writeln!(s, "kw_errors={}", self.kw_errors);
        let _ = writeln!(s, "uw_errors={}", self.uw_errors);
        let _ = writeln!(s, "errors={}", self.errors());
        s
    }

    /// `KW% / UW% / Global%` cell.
    pub fn cell(&self) -> String {
        let p = |r: Option<f64>| r.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.2}%"));
        format!("{}/{}/{}", p(self.kw_rate()), p(self.uw_rate()), p(self.global_rate()))
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.dataset, self.decoder, self.template)?;
        writeln!(f, "  {:<15}{:>10}{:>10}{:>10}", "", "tokens", "errors", "error%")?;
        for (name, tok, err, rate) in [
            ("known words", self.kw_tokens, self.kw_errors, self.kw_rate()),
            ("unknown words", self.uw_tokens, self.uw_errors, self.uw_rate()),
            ("global", self.tokens(), self.errors(), self.global_rate()),
        ] {
            writeln!(f, "  {name:<15}{tok:>10}{err:>10}{:>10}", fmt_rate(rate).chars().take(7).collect::<String>())?;
        }
        Ok(())
    }
}

/// Decode every test sentence and bucket tokens by training-vocabulary membership.
pub fn evaluate(tagger: &Tagger, test: &[RawSentence], train_vocab: &Vocabulary, dataset: &str) -> Result<EvalReport> {
    let kinds = split_known_unknown(test, train_vocab);
    let predictions: Vec<Vec<&str>> = test
        .par_iter()
        .map(|s| tagger.tag(&s.tokens))
        .collect::<Result<_>>()?;
    let mut report = EvalReport {
        dataset: dataset.to_owned(),
        decoder: tagger.kind().name().to_owned(),
        template: tagger.template().name().to_owned(),
        ..EvalReport::default()
    };
    for ((sentence, predicted), kinds) in test.iter().zip(&predictions).zip(&kinds) {
        for ((gold, pred), kind) in sentence.tags.iter().zip(predicted).zip(kinds) {
            let wrong = u64::from(gold != pred);
            match kind {
                WordKind::Known => {
                    report.kw_tokens += 1;
                    report.kw_errors += wrong;
                }
                WordKind::Unknown => {
                    report.uw_tokens += 1;
                    report.uw_errors += wrong;
                }
            }
            *report.confusion.entry((gold.clone(), (*pred).to_owned())).or_default() += 1;
        }
    }
    Ok(report)
}
