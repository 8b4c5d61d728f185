//! Per-token feature templates (NF, LF1, LF2) and their sparse encoding.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One feature family; a token carries at most one value per family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Word,
    Suffix3,
    Suffix2,
    Prefix3,
    Prefix2,
    FirstPosition,
    FirstLetterUp,
    Suffix5,
    Suffix4,
    Prefix5,
    Prefix4,
    HasDigit,
    HasHyphen,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::Word,
        Family::Suffix3,
        Family::Suffix2,
        Family::Prefix3,
        Family::Prefix2,
        Family::FirstPosition,
        Family::FirstLetterUp,
        Family::Suffix5,
        Family::Suffix4,
        Family::Prefix5,
        Family::Prefix4,
        Family::HasDigit,
        Family::HasHyphen,
    ];

    /// Stable code used in the model file.
    pub fn code(self) -> u8 {
        Family::ALL.iter().position(|&f| f == self).unwrap() as u8
    }

    pub fn from_code(code: u8) -> Option<Family> {
        Family::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Word => "word",
            Family::Suffix3 => "suffix-3",
            Family::Suffix2 => "suffix-2",
            Family::Prefix3 => "prefix-3",
            Family::Prefix2 => "prefix-2",
            Family::FirstPosition => "first-position",
            Family::FirstLetterUp => "first-letter-up",
            Family::Suffix5 => "suffix-5",
            Family::Suffix4 => "suffix-4",
            Family::Prefix5 => "prefix-5",
            Family::Prefix4 => "prefix-4",
            Family::HasDigit => "has-digit",
            Family::HasHyphen => "has-hyphen",
        }
    }

    fn value(self, token: &str, position: usize) -> String {
        match self {
            Family::Word => token.to_owned(),
            Family::Suffix2 => suffix(token, 2),
            Family::Suffix3 => suffix(token, 3),
            Family::Suffix4 => suffix(token, 4),
            Family::Suffix5 => suffix(token, 5),
            Family::Prefix2 => prefix(token, 2),
            Family::Prefix3 => prefix(token, 3),
            Family::Prefix4 => prefix(token, 4),
            Family::Prefix5 => prefix(token, 5),
            Family::FirstPosition => flag(position == 0),
            Family::FirstLetterUp => flag(token.chars().next().is_some_and(char::is_uppercase)),
            Family::HasDigit => flag(token.chars().any(|c| c.is_ascii_digit())),
            Family::HasHyphen => flag(token.contains('-')),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_owned()
}

// Affixes count characters, not bytes; shorter tokens yield the whole token.
fn suffix(token: &str, n: usize) -> String {
    let len = token.chars().count();
    token.chars().skip(len.saturating_sub(n)).collect()
}

fn prefix(token: &str, n: usize) -> String {
    token.chars().take(n).collect()
}

/// The three feature lots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureTemplate {
    /// The word only.
    Nf,
    /// Word, size-3/2 affixes, first position, first letter uppercase.
    Lf1,
    /// LF1 plus size-5/4 affixes, has-digit, has-hyphen.
    Lf2,
}

impl FeatureTemplate {
    pub const ALL: [FeatureTemplate; 3] = [FeatureTemplate::Nf, FeatureTemplate::Lf1, FeatureTemplate::Lf2];

    pub fn families(self) -> &'static [Family] {
        match self {
            FeatureTemplate::Nf => &Family::ALL[..1],
            FeatureTemplate::Lf1 => &Family::ALL[..7],
            FeatureTemplate::Lf2 => &Family::ALL[..],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureTemplate::Nf => "nf",
            FeatureTemplate::Lf1 => "lf1",
            FeatureTemplate::Lf2 => "lf2",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        FeatureTemplate::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nf" => Ok(FeatureTemplate::Nf),
            "lf1" => Ok(FeatureTemplate::Lf1),
            "lf2" => Ok(FeatureTemplate::Lf2),
            other => Err(Error::invalid(format!("unknown feature template {other:?}"))),
        }
    }
}

/// String-valued features of one token, in template family order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFeatures {
    pub values: Vec<(Family, String)>,
}

impl RawFeatures {
    pub fn get(&self, family: Family) -> Option<&str> {
        self.values
            .iter()
            .find(|(f, _)| *f == family)
            .map(|(_, v)| v.as_str())
    }
}

/// Features of `token` at 0-based `position` under `template`.
pub fn extract(token: &str, position: usize, template: FeatureTemplate) -> Result<RawFeatures> {
    if token.is_empty() {
        return Err(Error::invalid("cannot extract features from an empty token"));
    }
    Ok(RawFeatures {
        values: template
            .families()
            .iter()
            .map(|&f| (f, f.value(token, position)))
            .collect(),
    })
}

/// Id-valued features of one token.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector {
    pub active: Vec<(Family, u32)>,
}

impl FeatureVector {
    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.active.iter().map(|&(_, id)| id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct FamilyTable {
    family: Family,
    offset: u32,
    values: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl FamilyTable {
    fn new(family: Family, offset: u32, values: Vec<String>) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(values.len());
        for (k, v) in values.iter().enumerate() {
            if lookup.insert(v.clone(), offset + 1 + k as u32).is_some() {
                return Err(Error::invalid(format!("duplicate value {v:?} in family {family}")));
            }
        }
        Ok(FamilyTable {
            family,
            offset,
            values,
            lookup,
        })
    }

    fn size(&self) -> u32 {
        self.values.len() as u32 + 1
    }
}

/// Frozen `(family, value) → id` table.
///
/// Each family owns a contiguous id range: its unknown id first, then the
/// training values in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureIndex {
    tables: Vec<FamilyTable>,
}

impl FeatureIndex {
    /// Rebuild from per-family value lists (as stored in a model file).
    pub fn from_parts(parts: Vec<(Family, Vec<String>)>) -> Result<Self> {
        let mut tables = Vec::with_capacity(parts.len());
        let mut offset = 0u32;
        for (family, values) in parts {
            if tables.iter().any(|t: &FamilyTable| t.family == family) {
                return Err(Error::invalid(format!("family {family} listed twice")));
            }
            let table = FamilyTable::new(family, offset, values)?;
            offset += table.size();
            tables.push(table);
        }
        Ok(FeatureIndex { tables })
    }

    /// Total number of ids across families, unknown ids included.
    pub fn len(&self) -> usize {
        self.tables.iter().map(|t| t.size() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn families(&self) -> impl Iterator<Item = Family> + '_ {
        self.tables.iter().map(|t| t.family)
    }

    /// `(family, values in id order)` for every family.
    pub fn parts(&self) -> impl Iterator<Item = (Family, &[String])> + '_ {
        self.tables.iter().map(|t| (t.family, t.values.as_slice()))
    }

    /// Id range `[start, end)` of a family; `start` is its unknown id.
    pub fn family_range(&self, family: Family) -> Option<(u32, u32)> {
        self.table(family).map(|t| (t.offset, t.offset + t.size()))
    }

    pub fn unknown_id(&self, family: Family) -> Option<u32> {
        self.table(family).map(|t| t.offset)
    }

    pub fn id(&self, family: Family, value: &str) -> Option<u32> {
        self.table(family)?.lookup.get(value).copied()
    }

    fn table(&self, family: Family) -> Option<&FamilyTable> {
        self.tables.iter().find(|t| t.family == family)
    }
}

/// Index every `(family, value)` seen in `sentences` under `template`.
pub fn build_index<'a, I, S>(sentences: I, template: FeatureTemplate) -> FeatureIndex
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    let families = template.families();
    let mut seen: Vec<(Vec<String>, std::collections::HashSet<String>)> =
        families.iter().map(|_| Default::default()).collect();
    for tokens in sentences {
        for (pos, token) in tokens.iter().enumerate() {
            let token = token.as_ref();
            if token.is_empty() {
                continue;
            }
            for (slot, &family) in families.iter().enumerate() {
                let value = family.value(token, pos);
                let (order, set) = &mut seen[slot];
                if !set.contains(&value) {
                    set.insert(value.clone());
                    order.push(value);
                }
            }
        }
    }
    FeatureIndex::from_parts(
        families
            .iter()
            .zip(seen)
            .map(|(&f, (order, _))| (f, order))
            .collect(),
    )
    .expect("values deduplicated")
}

/// Map string values to ids; unseen values go to the family's unknown id.
pub fn vectorize(features: &RawFeatures, index: &FeatureIndex) -> Result<FeatureVector> {
    let active = features
        .values
        .iter()
        .map(|(family, value)| {
            let table = index
                .table(*family)
                .ok_or_else(|| Error::invalid(format!("family {family} absent from feature index")))?;
            Ok((*family, table.lookup.get(value).copied().unwrap_or(table.offset)))
        })
        .collect::<Result<_>>()?;
    Ok(FeatureVector { active })
}

/// Template plus its frozen index: turns token sequences into id features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeaturePipeline {
    template: FeatureTemplate,
    index: FeatureIndex,
}

impl FeaturePipeline {
    pub fn new(template: FeatureTemplate, index: FeatureIndex) -> Result<Self> {
        for &family in template.families() {
            if index.table(family).is_none() {
                return Err(Error::invalid(format!("feature index lacks family {family}")));
            }
        }
        Ok(FeaturePipeline { template, index })
    }

    pub fn fit<'a, I, S>(sentences: I, template: FeatureTemplate) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        FeaturePipeline {
            template,
            index: build_index(sentences, template),
        }
    }

    pub fn template(&self) -> FeatureTemplate {
        self.template
    }

    pub fn index(&self) -> &FeatureIndex {
        &self.index
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<FeatureVector>> {
        tokens
            .iter()
            .enumerate()
            .map(|(pos, tok)| vectorize(&extract(tok.as_ref(), pos, self.template)?, &self.index))
            .collect()
    }
}
