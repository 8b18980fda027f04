//! Phone inventory, articulatory feature vectors, and the pronunciation
//! lexicon used to phonemize context words.
//!
//! Three TSV formats live here:
//!
//! * `phones.tsv` — one phone symbol per line, `#` comments ignored.
//! * `features.tsv` — header `phone<TAB>f1<TAB>...<TAB>fD`, one row per
//!   phone, values in `[0,1]`.
//! * `lexicon.tsv` — `word<TAB>space-separated phone symbols`, one
//!   pronunciation per line.
//!
//! Everything in this module is immutable after load and safe to share
//! across threads.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Dense phone index into a [`PhoneSet`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PhoneId(pub u16);

impl PhoneId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// A phone symbol together with its dense index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phone {
    pub symbol: String,
    pub index: PhoneId,
}

/// An ordered sequence of phone indices.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct PhoneSeq(Vec<PhoneId>);

impl PhoneSeq {
    pub fn new(phones: Vec<PhoneId>) -> Self {
        PhoneSeq(phones)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[PhoneId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = PhoneId> + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, id: PhoneId) {
        self.0.push(id);
    }

    pub fn extend_from(&mut self, other: &PhoneSeq) {
        self.0.extend_from_slice(&other.0);
    }
}

impl From<Vec<PhoneId>> for PhoneSeq {
    fn from(v: Vec<PhoneId>) -> Self {
        PhoneSeq(v)
    }
}

/// The phone inventory plus per-phone articulatory feature vectors.
///
/// Feature vectors all share one dimension `D` and contain values in
/// `[0,1]` with at least one nonzero entry (cosine distance needs a
/// nonzero norm).
#[derive(Clone, Debug)]
pub struct PhoneSet {
    phones: Vec<Phone>,
    index: HashMap<String, PhoneId>,
    features: Vec<Vec<f64>>,
    feature_names: Vec<String>,
}

impl PhoneSet {
    /// Build a set from parallel symbol/feature-vector lists, validating
    /// every invariant the loaders rely on.
    pub fn new(
        symbols: Vec<String>,
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let dim = feature_names.len();
        if symbols.len() != features.len() {
            return Err(Error::InvalidConfig(format!(
                "{} phones but {} feature rows",
                symbols.len(),
                features.len()
            )));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        let mut phones = Vec::with_capacity(symbols.len());
        for (i, symbol) in symbols.into_iter().enumerate() {
            if symbol.is_empty() || symbol.chars().any(|c| c.is_whitespace()) {
                return Err(Error::InvalidConfig(format!(
                    "phone symbol {symbol:?} is empty or contains whitespace"
                )));
            }
            let id = PhoneId(i as u16);
            if index.insert(symbol.clone(), id).is_some() {
                return Err(Error::DuplicatePhone(symbol));
            }
            phones.push(Phone { symbol, index: id });
        }
        for (i, row) in features.iter().enumerate() {
            let symbol = &phones[i].symbol;
            if row.len() != dim {
                return Err(Error::InvalidConfig(format!(
                    "feature row for {symbol:?} has {} values, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroFeatureVector(symbol.clone()));
            }
            if row.iter().any(|&v| !v.is_finite() || !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidConfig(format!(
                    "feature value out of [0,1] for phone {symbol:?}"
                )));
            }
        }
        Ok(PhoneSet {
            phones,
            index,
            features,
            feature_names,
        })
    }

    /// Inventory with unit feature vectors, for workflows that only need
    /// the symbol table (hard matrices, lexicon parsing, recovery).
    pub fn inventory_only(symbols: Vec<String>) -> Result<Self> {
        let n = symbols.len();
        PhoneSet::new(symbols, vec!["present".into()], vec![vec![1.0]; n])
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    /// Feature-vector dimension `D`.
    pub fn dimension(&self) -> usize {
        self.feature_names.len()
    }

    pub fn phones(&self) -> &[Phone] {
        &self.phones
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn symbol(&self, id: PhoneId) -> &str {
        &self.phones[id.idx()].symbol
    }

    pub fn id(&self, symbol: &str) -> Option<PhoneId> {
        self.index.get(symbol).copied()
    }

    pub fn features(&self, id: PhoneId) -> &[f64] {
        &self.features[id.idx()]
    }

    /// Parse a whitespace-separated symbol string into a sequence.
    pub fn parse_seq(&self, text: &str) -> Result<PhoneSeq> {
        let mut seq = Vec::new();
        for sym in text.split_whitespace() {
            let id = self
                .id(sym)
                .ok_or_else(|| Error::UnknownPhone(sym.to_string()))?;
            seq.push(id);
        }
        Ok(PhoneSeq(seq))
    }

    /// Render a sequence back to space-separated symbols.
    pub fn format_seq(&self, seq: &PhoneSeq) -> String {
        let mut out = String::new();
        for (i, id) in seq.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", self.symbol(id));
        }
        out
    }
}

/// Read the phone inventory file: one symbol per line, `#` comments and
/// blank lines ignored.
pub fn load_phone_symbols(phone_file: &Path) -> Result<Vec<String>> {
    let phone_text =
        std::fs::read_to_string(phone_file).map_err(|e| Error::io(phone_file, e))?;
    let mut symbols = Vec::new();
    for (lineno, raw) in phone_text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.split_whitespace().nth(1).is_some() {
            return Err(Error::parse(
                phone_file.display().to_string(),
                lineno + 1,
                format!("expected a single phone symbol, got {line:?}"),
            ));
        }
        symbols.push(line.to_string());
    }
    Ok(symbols)
}

/// Load the phone inventory and feature table from their TSV files.
///
/// The feature dimension is inferred from the `features.tsv` header; every
/// phone listed in `phones.tsv` must have exactly one feature row.
pub fn load_phoneset(phone_file: &Path, feature_file: &Path) -> Result<PhoneSet> {
    let symbols = load_phone_symbols(phone_file)?;

    let feat_file_name = feature_file.display().to_string();
    let feat_text =
        std::fs::read_to_string(feature_file).map_err(|e| Error::io(feature_file, e))?;
    let mut lines = feat_text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(&feat_file_name, 1, "empty feature file"))?;
    let mut cols = header.split('\t');
    match cols.next() {
        Some("phone") => {}
        other => {
            return Err(Error::parse(
                &feat_file_name,
                1,
                format!("header must start with 'phone', got {other:?}"),
            ))
        }
    }
    let feature_names: Vec<String> = cols.map(str::to_string).collect();
    if feature_names.is_empty() {
        return Err(Error::parse(&feat_file_name, 1, "header names no features"));
    }
    let dim = feature_names.len();

    let mut rows: HashMap<String, Vec<f64>> = HashMap::new();
    for (lineno, raw) in lines {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let symbol = fields.next().unwrap_or("").trim().to_string();
        let values: Vec<f64> = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::parse(&feat_file_name, lineno + 1, format!("bad number {f:?}"))
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                &feat_file_name,
                lineno + 1,
                format!("row has {} values, header names {dim}", values.len()),
            ));
        }
        if rows.insert(symbol.clone(), values).is_some() {
            return Err(Error::parse(
                &feat_file_name,
                lineno + 1,
                format!("duplicate feature row for {symbol:?}"),
            ));
        }
    }

    let mut features = Vec::with_capacity(symbols.len());
    for symbol in &symbols {
        let row = rows
            .remove(symbol)
            .ok_or_else(|| Error::MissingFeatures(symbol.clone()))?;
        features.push(row);
    }
    PhoneSet::new(symbols, feature_names, features)
}

/// One lexicon word with its pronunciations in file order.
#[derive(Clone, Debug)]
pub struct LexEntry {
    pub word: String,
    pub prons: Vec<PhoneSeq>,
}

/// Map from case-folded surface word to one or more pronunciations.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    index: HashMap<String, usize>,
    warnings: Vec<String>,
}

impl Lexicon {
    /// Look up pronunciations for `word` (query is case-folded).
    pub fn lookup(&self, word: &str) -> Option<&[PhoneSeq]> {
        let key = fold_case(word);
        self.index
            .get(&key)
            .map(|&i| self.entries[i].prons.as_slice())
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Duplicate `(word, pronunciation)` lines noticed during load.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn insert(&mut self, word: String, pron: PhoneSeq) -> bool {
        match self.index.get(&word) {
            Some(&i) => {
                let entry = &mut self.entries[i];
                if entry.prons.contains(&pron) {
                    return false;
                }
                entry.prons.push(pron);
            }
            None => {
                self.index.insert(word.clone(), self.entries.len());
                self.entries.push(LexEntry {
                    word,
                    prons: vec![pron],
                });
            }
        }
        true
    }

    /// Write the lexicon back out in TSV form, one pronunciation per line,
    /// entries in first-occurrence order. Loading a grouped, case-folded
    /// file and saving it reproduces the input bytes.
    pub fn save(&self, out: &mut impl std::io::Write, phoneset: &PhoneSet) -> std::io::Result<()> {
        for entry in &self.entries {
            for pron in &entry.prons {
                writeln!(out, "{}\t{}", entry.word, phoneset.format_seq(pron))?;
            }
        }
        Ok(())
    }
}

pub(crate) fn fold_case(s: &str) -> String {
    s.to_ascii_lowercase()
}

/// Load a pronunciation lexicon, case-folding keys and keeping multiple
/// pronunciations in file order. Duplicate identical `(word, pron)` pairs
/// are recorded as warnings, not errors.
pub fn load_lexicon(path: &Path, phoneset: &PhoneSet) -> Result<Lexicon> {
    let file_name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lexicon = Lexicon::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, pron_text) = line.split_once('\t').ok_or_else(|| {
            Error::parse(&file_name, lineno + 1, "expected word<TAB>phones")
        })?;
        let word = fold_case(word.trim());
        if word.is_empty() {
            return Err(Error::parse(&file_name, lineno + 1, "empty word"));
        }
        let pron = phoneset.parse_seq(pron_text)?;
        if pron.is_empty() {
            return Err(Error::EmptyPronunciation(word));
        }
        if !lexicon.insert(word.clone(), pron) {
            lexicon.warnings.push(format!(
                "{file_name}:{}: duplicate pronunciation for {word:?}",
                lineno + 1
            ));
        }
    }
    Ok(lexicon)
}

/// Default cap on the pronunciation cross-product in [`phonemize`].
pub const DEFAULT_MAX_VARIANTS: usize = 16;

/// Phonemize a word or whitespace-separated phrase via lexicon lookup.
///
/// Each token contributes its pronunciations; the result is the ordered
/// cross-product of per-token choices, concatenated. The product is capped
/// at `max_variants`, keeping file-order-first combinations.
pub fn phonemize_capped(
    word_or_phrase: &str,
    lexicon: &Lexicon,
    max_variants: usize,
) -> Result<Vec<PhoneSeq>> {
    let tokens: Vec<&str> = word_or_phrase.split_whitespace().collect();
    let mut per_token: Vec<&[PhoneSeq]> = Vec::with_capacity(tokens.len());
    for token in &tokens {
        let prons = lexicon
            .lookup(token)
            .ok_or_else(|| Error::OovToken((*token).to_string()))?;
        per_token.push(prons);
    }
    if per_token.is_empty() {
        return Ok(Vec::new());
    }

    // Odometer over per-token pronunciation indices, last token fastest,
    // so file-order-first combinations come out first.
    let mut variants = Vec::new();
    let mut choice = vec![0usize; per_token.len()];
    'outer: loop {
        let mut seq = PhoneSeq::default();
        for (t, &c) in choice.iter().enumerate() {
            seq.extend_from(&per_token[t][c]);
        }
        variants.push(seq);
        if variants.len() >= max_variants {
            break;
        }
        let mut pos = choice.len();
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < per_token[pos].len() {
                break;
            }
            choice[pos] = 0;
        }
    }
    Ok(variants)
}

/// [`phonemize_capped`] with the default variant cap.
pub fn phonemize(word_or_phrase: &str, lexicon: &Lexicon) -> Result<Vec<PhoneSeq>> {
    phonemize_capped(word_or_phrase, lexicon, DEFAULT_MAX_VARIANTS)
}
