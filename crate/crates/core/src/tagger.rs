//! Trainable taggers wiring corpora, features and the four decoders together.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};

use crate::dataio::Corpus;
use crate::discrim::{average_loss, train, Example, LogisticModel, SgdConfig};
use crate::efb::{decode_efb, EfbParams};
use crate::error::{Error, Result};
use crate::features::{FeaturePipeline, FeatureTemplate, FeatureVector};
use crate::hmc::{self, estimate_chain, estimate_params, HmcParams, NaiveFeatureEmission};
use crate::index::{TagSet, Vocabulary};
use crate::lattice::mpm_from_lattice;
use crate::memm::{decode_memm, MemmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoderKind {
    HmcFb,
    HmcEfb,
    Memm,
    HmcNaiveFeatures,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [
        DecoderKind::HmcFb,
        DecoderKind::HmcEfb,
        DecoderKind::Memm,
        DecoderKind::HmcNaiveFeatures,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::HmcFb => "hmc-fb",
            DecoderKind::HmcEfb => "hmc-efb",
            DecoderKind::Memm => "memm",
            DecoderKind::HmcNaiveFeatures => "hmc-naive-features",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        DecoderKind::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecoderKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown decoder {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub sgd: SgdConfig,
    /// Additive smoothing for all frequency tables.
    pub delta: f64,
    /// Fit the MEMM's first-position model on sentence-initial tokens only,
    /// instead of sharing the all-positions `L`.
    pub memm_initial_only: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sgd: SgdConfig::default(),
            delta: hmc::DEFAULT_DELTA,
            memm_initial_only: false,
        }
    }
}

/// Decoder-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TaggerParams {
    HmcFb(HmcParams<f64>),
    HmcEfb {
        chain: EfbParams<f64>,
        l: LogisticModel<f64>,
    },
    Memm(MemmModel<f64>),
    HmcNaiveFeatures {
        pi: Array1<f64>,
        trans: Array2<f64>,
        emission: NaiveFeatureEmission<f64>,
    },
}

impl TaggerParams {
    pub fn kind(&self) -> DecoderKind {
        match self {
            TaggerParams::HmcFb(_) => DecoderKind::HmcFb,
            TaggerParams::HmcEfb { .. } => DecoderKind::HmcEfb,
            TaggerParams::Memm(_) => DecoderKind::Memm,
            TaggerParams::HmcNaiveFeatures { .. } => DecoderKind::HmcNaiveFeatures,
        }
    }
}

/// A trained tagger: label/word tables, feature pipeline and decoder parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagger {
    pub tags: TagSet,
    pub vocab: Vocabulary,
    pub pipeline: FeaturePipeline,
    pub params: TaggerParams,
}

/// What training saw and how well the discriminative parts fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub sentences: usize,
    pub tokens: usize,
    pub labels: usize,
    pub vocabulary: usize,
    pub feature_ids: usize,
    /// `(model name, mean training NLL)` for each logistic model fitted.
    pub losses: Vec<(String, f64)>,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sentences={}", self.sentences)?;
        writeln!(f, "tokens={}", self.tokens)?;
        writeln!(f, "labels={}", self.labels)?;
        writeln!(f, "vocabulary={}", self.vocabulary)?;
        writeln!(f, "feature_ids={}", self.feature_ids)?;
        for (name, loss) in &self.losses {
            writeln!(f, "train_loss_{name}={loss:.6}")?;
        }
        Ok(())
    }
}

fn encode_corpus(corpus: &Corpus, pipeline: &FeaturePipeline) -> Result<Vec<Vec<FeatureVector>>> {
    corpus.sentences.iter().map(|s| pipeline.encode(s.tokens())).collect()
}

/// Examples for `P(X_t | y_t)`: every position, or only sentence-initial ones.
pub fn label_examples(corpus: &Corpus, encoded: &[Vec<FeatureVector>], initial_only: bool) -> Vec<Example> {
    let mut out = Vec::new();
    for (s, fvs) in corpus.sentences.iter().zip(encoded) {
        let take = if initial_only { 1 } else { s.len() };
        for (fv, &label) in fvs.iter().zip(s.labels()).take(take) {
            out.push(Example {
                features: fv.clone(),
                prev: None,
                target: label,
            });
        }
    }
    out
}

/// Examples for `P(X_t | X_t-1, y_t)` with gold previous labels, `t >= 2`.
pub fn transition_examples(corpus: &Corpus, encoded: &[Vec<FeatureVector>]) -> Vec<Example> {
    let mut out = Vec::new();
    for (s, fvs) in corpus.sentences.iter().zip(encoded) {
        for (fv, pair) in fvs.iter().skip(1).zip(s.labels().windows(2)) {
            out.push(Example {
                features: fv.clone(),
                prev: Some(pair[0]),
                target: pair[1],
            });
        }
    }
    out
}

fn fit_logistic(
    examples: &[Example],
    pipeline: &FeaturePipeline,
    n_labels: usize,
    prev: bool,
    sgd: &SgdConfig,
) -> Result<(LogisticModel<f64>, f64)> {
    let model = train(examples, pipeline.index().len(), n_labels, prev, sgd)?;
    let loss = average_loss(&model, examples)?;
    Ok((model, loss))
}

impl Tagger {
    /// Train one decoder on `corpus`.
    pub fn train(
        kind: DecoderKind,
        template: FeatureTemplate,
        corpus: &Corpus,
        config: &TrainConfig,
    ) -> Result<(Tagger, TrainSummary)> {
        Self::train_sharing(kind, template, corpus, config, None)
    }

    /// Train an HMC-EFB and an MEMM tagger sharing one `L` model, pipeline and
    /// hyperparameters.
    pub fn train_pair(
        template: FeatureTemplate,
        corpus: &Corpus,
        config: &TrainConfig,
    ) -> Result<((Tagger, TrainSummary), (Tagger, TrainSummary))> {
        let (efb, efb_summary) = Self::train(DecoderKind::HmcEfb, template, corpus, config)?;
        let shared = match &efb.params {
            TaggerParams::HmcEfb { l, .. } => Some((l.clone(), efb_summary.losses[0].1)),
            _ => unreachable!(),
        };
        let memm = Self::train_sharing(DecoderKind::Memm, template, corpus, config, shared)?;
        Ok(((efb, efb_summary), memm))
    }

    fn train_sharing(
        kind: DecoderKind,
        template: FeatureTemplate,
        corpus: &Corpus,
        config: &TrainConfig,
        shared_l: Option<(LogisticModel<f64>, f64)>,
    ) -> Result<(Tagger, TrainSummary)> {
        if corpus.sentences.is_empty() {
            return Err(Error::invalid("empty training corpus"));
        }
        config.sgd.validate()?;
        let pipeline = FeaturePipeline::fit(corpus.sentences.iter().map(|s| s.tokens()), template);
        let n = corpus.tags.len();
        let mut losses = Vec::new();
        let params = match kind {
            DecoderKind::HmcFb => {
                TaggerParams::HmcFb(estimate_params(&corpus.sentences, &corpus.tags, &corpus.vocab, config.delta)?)
            }
            DecoderKind::HmcEfb => {
                let (pi, trans) = estimate_chain(corpus.sentences.iter().map(|s| s.labels()), n, config.delta)?;
                let encoded = encode_corpus(corpus, &pipeline)?;
                let (l, loss) = fit_logistic(&label_examples(corpus, &encoded, false), &pipeline, n, false, &config.sgd)?;
                losses.push(("l".to_owned(), loss));
                TaggerParams::HmcEfb {
                    chain: EfbParams::new(pi, trans)?,
                    l,
                }
            }
            DecoderKind::Memm => {
                let encoded = encode_corpus(corpus, &pipeline)?;
                let (l0, loss0) = match shared_l {
                    Some(shared) if !config.memm_initial_only => shared,
                    _ => fit_logistic(
                        &label_examples(corpus, &encoded, config.memm_initial_only),
                        &pipeline,
                        n,
                        false,
                        &config.sgd,
                    )?,
                };
                losses.push(("l0".to_owned(), loss0));
                let l1_data = transition_examples(corpus, &encoded);
                let (l1, loss1) = if l1_data.is_empty() {
                    (LogisticModel::zeros(pipeline.index().len(), n, true)?, f64::NAN)
                } else {
                    fit_logistic(&l1_data, &pipeline, n, true, &config.sgd)?
                };
                losses.push(("l1".to_owned(), loss1));
                TaggerParams::Memm(MemmModel::new(l0, l1)?)
            }
            DecoderKind::HmcNaiveFeatures => {
                let (pi, trans) = estimate_chain(corpus.sentences.iter().map(|s| s.labels()), n, config.delta)?;
                let encoded = encode_corpus(corpus, &pipeline)?;
                let examples: Vec<(FeatureVector, usize)> = label_examples(corpus, &encoded, false)
                    .into_iter()
                    .map(|e| (e.features, e.target))
                    .collect();
                let emission = NaiveFeatureEmission::estimate(pipeline.index(), &examples, n, config.delta)?;
                TaggerParams::HmcNaiveFeatures { pi, trans, emission }
            }
        };
        let summary = TrainSummary {
            sentences: corpus.sentences.len(),
            tokens: corpus.n_tokens(),
            labels: n,
            vocabulary: corpus.vocab.len(),
            feature_ids: pipeline.index().len(),
            losses,
        };
        Ok((
            Tagger {
                tags: corpus.tags.clone(),
                vocab: corpus.vocab.clone(),
                pipeline,
                params,
            },
            summary,
        ))
    }

    pub fn kind(&self) -> DecoderKind {
        self.params.kind()
    }

    pub fn template(&self) -> FeatureTemplate {
        self.pipeline.template()
    }

    /// MPM label ids for one sentence.
    pub fn tag_ids<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<usize>> {
        if tokens.is_empty() {
            return Err(Error::invalid("empty sentence"));
        }
        match &self.params {
            TaggerParams::HmcFb(p) => {
                let obs: Vec<usize> = tokens.iter().map(|t| self.vocab.id_or_unknown(t.as_ref())).collect();
                mpm_from_lattice(&hmc::posterior_fb(p, &obs)?)
            }
            TaggerParams::HmcEfb { chain, l } => decode_efb(chain, l, tokens, &self.pipeline),
            TaggerParams::Memm(m) => decode_memm(m, tokens, &self.pipeline),
            TaggerParams::HmcNaiveFeatures { pi, trans, emission } => {
                let e = emission.emissions(&self.pipeline.encode(tokens)?)?;
                mpm_from_lattice(&hmc::posterior_with_emissions(pi, trans, e.view())?)
            }
        }
    }

    /// MPM label strings for one sentence.
    pub fn tag<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<&str>> {
        Ok(self
            .tag_ids(tokens)?
            .into_iter()
            .map(|id| self.tags.label_of(id).expect("decoder ids within tag set"))
            .collect())
    }
}
