//! Versioned binary model file.
//!
//! All integers and floats are little-endian. Layout:
//!
//! ```text
//! magic "HEFB" | u16 version | u8 decoder kind | u8 feature template
//! tag set        u32 count, then strings
//! vocabulary     u32 count, then strings
//! feature index  u32 families, then per family: u8 code, u32 count, strings
//! parameter block (by kind)
//!   hmc-fb              vec pi, mat trans, mat emit
//!   hmc-efb             vec pi, mat trans, logistic L
//!   memm                logistic l0, logistic l1
//!   hmc-naive-features  vec pi, mat trans, u32 tables, per table: u8 family, u32 offset, mat
//! ```
//!
//! A string is `u32 byte length` + UTF-8; `vec` is `u32 len` + f64s; `mat` is
//! `u32 rows, u32 cols` + row-major f64s; `logistic` is `u32 features,
//! u32 labels, u8 conditions-on-previous, mat weights`.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::discrim::LogisticModel;
use crate::efb::EfbParams;
use crate::error::{Error, Result};
use crate::features::{Family, FeatureIndex, FeaturePipeline, FeatureTemplate};
use crate::hmc::{check_chain, HmcParams, NaiveFeatureEmission};
use crate::index::{TagSet, Vocabulary};
use crate::memm::MemmModel;
use crate::tagger::{DecoderKind, Tagger, TaggerParams};

pub const MAGIC: &[u8; 4] = b"HEFB";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("model dimension fits in u32");
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn strings(&mut self, items: &[String]) {
        self.u32(items.len());
        for s in items {
            self.str(s);
        }
    }

    fn f64s<'a>(&mut self, values: impl Iterator<Item = &'a f64>) {
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn vec(&mut self, v: &Array1<f64>) {
        self.u32(v.len());
        self.f64s(v.iter());
    }

    fn mat(&mut self, m: &Array2<f64>) {
        self.u32(m.nrows());
        self.u32(m.ncols());
        self.f64s(m.iter());
    }

    fn logistic(&mut self, m: &LogisticModel<f64>) {
        self.u32(m.n_features());
        self.u32(m.n_labels());
        self.u8(u8::from(m.conditions_on_prev()));
        self.mat(m.weights());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("string is not UTF-8"))
    }

    fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.u32()?;
        (0..n).map(|_| self.str()).collect()
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| corrupt("array too large"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn vec(&mut self) -> Result<Array1<f64>> {
        let n = self.u32()?;
        Ok(Array1::from(self.f64s(n)?))
    }

    fn mat(&mut self) -> Result<Array2<f64>> {
        let rows = self.u32()?;
        let cols = self.u32()?;
        let data = self.f64s(rows.checked_mul(cols).ok_or_else(|| corrupt("matrix too large"))?)?;
        Ok(Array2::from_shape_vec((rows, cols), data).expect("length matches shape"))
    }

    fn logistic(&mut self) -> Result<LogisticModel<f64>> {
        let nf = self.u32()?;
        let nl = self.u32()?;
        let prev = match self.u8()? {
            0 => false,
            1 => true,
            b => return Err(corrupt(format!("bad conditioning flag {b}"))),
        };
        LogisticModel::from_weights(nf, nl, prev, self.mat()?)
    }
}

/// Serialize a tagger.
pub fn encode(tagger: &Tagger) -> Vec<u8> {
    let mut w = Writer::default();
    w.buf.extend_from_slice(MAGIC);
    w.buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    w.u8(tagger.kind().code());
    w.u8(tagger.template().code());
    w.strings(tagger.tags.labels());
    w.strings(tagger.vocab.words());
    let parts: Vec<_> = tagger.pipeline.index().parts().collect();
    w.u32(parts.len());
    for (family, values) in parts {
        w.u8(family.code());
        w.strings(values);
    }
    match &tagger.params {
        TaggerParams::HmcFb(p) => {
            w.vec(p.pi());
            w.mat(p.trans());
            w.mat(p.emit());
        }
        TaggerParams::HmcEfb { chain, l } => {
            w.vec(chain.pi());
            w.mat(chain.trans());
            w.logistic(l);
        }
        TaggerParams::Memm(m) => {
            w.logistic(m.l0());
            w.logistic(m.l1());
        }
        TaggerParams::HmcNaiveFeatures { pi, trans, emission } => {
            w.vec(pi);
            w.mat(trans);
            w.u32(emission.tables().len());
            for (family, offset, table) in emission.tables() {
                w.u8(family.code());
                w.u32(*offset as usize);
                w.mat(table);
            }
        }
    }
    w.buf
}

/// Decoder kind recorded in a model file header.
pub fn peek_kind(bytes: &[u8]) -> Result<DecoderKind> {
    let mut r = Reader { buf: bytes, pos: 0 };
    header(&mut r).map(|(k, _)| k)
}

fn header(r: &mut Reader<'_>) -> Result<(DecoderKind, FeatureTemplate)> {
    if r.take(4).map_err(|_| corrupt("not a model file"))? != MAGIC {
        return Err(corrupt("not a model file (bad magic)"));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {version}")));
    }
    let kind = r.u8()?;
    let kind = DecoderKind::from_code(kind).ok_or_else(|| corrupt(format!("unknown decoder code {kind}")))?;
    let template = r.u8()?;
    let template =
        FeatureTemplate::from_code(template).ok_or_else(|| corrupt(format!("unknown template code {template}")))?;
    Ok((kind, template))
}

/// Parse a model file; `expected`, when given, must match the stored kind.
pub fn decode(bytes: &[u8], expected: Option<DecoderKind>) -> Result<Tagger> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let (kind, template) = header(&mut r)?;
    if let Some(want) = expected {
        if want != kind {
            return Err(Error::invalid(format!("model file holds a {kind} decoder, not {want}")));
        }
    }
    let tags = TagSet::new(r.strings()?)?;
    let vocab = Vocabulary::from_words(r.strings()?);
    let n_families = r.u32()?;
    let mut parts = Vec::with_capacity(n_families.min(16));
    for _ in 0..n_families {
        let code = r.u8()?;
        let family = Family::from_code(code).ok_or_else(|| corrupt(format!("unknown family code {code}")))?;
        parts.push((family, r.strings()?));
    }
    let pipeline = FeaturePipeline::new(template, FeatureIndex::from_parts(parts)?)?;
    let params = match kind {
        DecoderKind::HmcFb => {
            let (pi, trans, emit) = (r.vec()?, r.mat()?, r.mat()?);
            TaggerParams::HmcFb(HmcParams::new(pi, trans, emit)?)
        }
        DecoderKind::HmcEfb => {
            let (pi, trans) = (r.vec()?, r.mat()?);
            TaggerParams::HmcEfb {
                chain: EfbParams::new(pi, trans)?,
                l: r.logistic()?,
            }
        }
        DecoderKind::Memm => {
            let l0 = r.logistic()?;
            TaggerParams::Memm(MemmModel::new(l0, r.logistic()?)?)
        }
        DecoderKind::HmcNaiveFeatures => {
            let (pi, trans) = (r.vec()?, r.mat()?);
            check_chain(&pi, &trans)?;
            let n = r.u32()?;
            let mut tables = Vec::with_capacity(n.min(16));
            for _ in 0..n {
                let code = r.u8()?;
                let family = Family::from_code(code).ok_or_else(|| corrupt(format!("unknown family code {code}")))?;
                let offset = r.u32()? as u32;
                tables.push((family, offset, r.mat()?));
            }
            TaggerParams::HmcNaiveFeatures {
                pi,
                trans,
                emission: NaiveFeatureEmission::new(tables)?,
            }
        }
    };
    if r.pos != bytes.len() {
        return Err(corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    if tags.is_empty() {
        return Err(corrupt("empty tag set"));
    }
    Ok(Tagger {
        tags,
        vocab,
        pipeline,
        params,
    })
}

pub fn save(tagger: &Tagger, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(tagger)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>, expected: Option<DecoderKind>) -> Result<Tagger> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, expected)
}
