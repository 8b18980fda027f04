//! Seeded synthetic corpora for exercising the pipeline without a
//! recognizer.
//!
//! Ground-truth utterances embed one context entry, either alone
//! (word-level corpora) or among filler words drawn from the lexicon
//! (sentence-level corpora, 4-10 fillers, roughly 300 ms per word). The
//! OOV-side hypothesis replaces the entry with a `!SIL` segment carrying a
//! corrupted copy of its phones; the primary hypothesis either drops the
//! word or decodes the nearest-sounding filler instead, the way a
//! closed-vocabulary decoder does.
//!
//! Corruption applies independent per-phone substitution/deletion events
//! and per-gap insertions. With a bias matrix, substitution partners are
//! drawn by softmax over negative cost, so cheap confusions under that
//! matrix are exactly the ones the corpus exhibits. Everything is driven
//! by a ChaCha8 generator seeded explicitly; given one seed the output is
//! identical across runs and platforms (the softmax avoids libm by using
//! its own exp evaluation).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::align::{make_hard_matrix, weighted_edit_distance, CostMatrix};
use crate::evaluate::Label;
use crate::phoneset::{Lexicon, PhoneId, PhoneSeq, PhoneSet};
use crate::recovery::{ContextEntry, Hypothesis, TimedWord, SIL_MARKER};
use crate::{Error, Result};

/// Softmax temperature used when no explicit value is configured.
pub const DEFAULT_TEMPERATURE: f64 = 0.2;

/// Per-phone corruption probabilities plus the optional cost geometry
/// substitutions should follow.
#[derive(Clone, Debug)]
pub struct CorruptionModel {
    pub p_sub: f64,
    pub p_del: f64,
    /// Applied once per gap (before, between, and after phones).
    pub p_ins: f64,
    /// When present, substitution partners are sampled with weight
    /// `exp(-cost / temperature)`; otherwise uniformly.
    pub bias: Option<CostMatrix>,
    pub temperature: f64,
    pub seed: u64,
}

impl CorruptionModel {
    pub fn new(p_sub: f64, p_del: f64, p_ins: f64, seed: u64) -> Self {
        CorruptionModel {
            p_sub,
            p_del,
            p_ins,
            bias: None,
            temperature: DEFAULT_TEMPERATURE,
            seed,
        }
    }

    pub fn with_bias(mut self, bias: CostMatrix) -> Self {
        self.bias = Some(bias);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_sub", self.p_sub),
            ("p_del", self.p_del),
            ("p_ins", self.p_ins),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {p} must lie in [0,1]"
                )));
            }
        }
        if self.p_sub + self.p_del > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "p_sub + p_del = {} exceeds 1",
                self.p_sub + self.p_del
            )));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "temperature {} must be positive",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// `exp(x)` for `x <= 0` built from IEEE basic operations only, so
/// sampling weights do not depend on the platform's libm. Accurate to a
/// few ulps over the range used here.
fn portable_exp(x: f64) -> f64 {
    debug_assert!(x <= 0.0);
    if x < -700.0 {
        return 0.0;
    }
    let ln2 = std::f64::consts::LN_2;
    let n = (x / ln2).floor();
    let r = x - n * ln2; // r in [0, ln 2)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=14 {
        term *= r / k as f64;
        sum += term;
    }
    // 2^n assembled directly from the exponent bits; n is in [-1011, 0].
    let pow2 = f64::from_bits(((n as i64 + 1023) as u64) << 52);
    sum * pow2
}

fn sample_partner(
    original: PhoneId,
    model: &CorruptionModel,
    phoneset: &PhoneSet,
    rng: &mut ChaCha8Rng,
) -> PhoneId {
    let n = phoneset.len();
    if n < 2 {
        return original;
    }
    match &model.bias {
        None => {
            let mut pick = rng.random_range(0..n - 1);
            if pick >= original.idx() {
                pick += 1;
            }
            PhoneId(pick as u16)
        }
        Some(bias) => {
            let weights: Vec<f64> = (0..n)
                .map(|q| {
                    if q == original.idx() {
                        0.0
                    } else {
                        portable_exp(
                            -bias.sub_cost(original, PhoneId(q as u16)) / model.temperature,
                        )
                    }
                })
                .collect();
            let total: f64 = weights.iter().sum();
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut last = original;
            for (q, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                acc += w;
                last = PhoneId(q as u16);
                if target < acc {
                    break;
                }
            }
            last
        }
    }
}

fn corrupt_with_rng(
    truth: &PhoneSeq,
    model: &CorruptionModel,
    phoneset: &PhoneSet,
    rng: &mut ChaCha8Rng,
) -> PhoneSeq {
    let mut out = PhoneSeq::default();
    let maybe_insert = |out: &mut PhoneSeq, rng: &mut ChaCha8Rng| {
        if rng.random::<f64>() < model.p_ins {
            out.push(PhoneId(rng.random_range(0..phoneset.len()) as u16));
        }
    };
    maybe_insert(&mut out, rng);
    for phone in truth.iter() {
        let u: f64 = rng.random();
        if u < model.p_del {
            // deleted
        } else if u < model.p_del + model.p_sub {
            out.push(sample_partner(phone, model, phoneset, rng));
        } else {
            out.push(phone);
        }
        maybe_insert(&mut out, rng);
    }
    out
}

/// Corrupt one phone sequence. The generator is seeded from the model, so
/// repeated calls with the same arguments produce identical output.
pub fn corrupt_phones(truth: &PhoneSeq, model: &CorruptionModel, phoneset: &PhoneSet) -> PhoneSeq {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    corrupt_with_rng(truth, model, phoneset, &mut rng)
}

/// Word-level corpora hold one context entry per utterance; sentence-level
/// corpora embed the entry among filler words.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CorpusMode {
    Word,
    Sentence,
}

impl CorpusMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusMode::Word => "word",
            CorpusMode::Sentence => "sentence",
        }
    }
}

/// One simulated utterance: the truth transcript, both decoder
/// hypotheses, and the labeled context-word occurrences.
#[derive(Clone, Debug)]
pub struct SimUtterance {
    pub utt_id: String,
    pub truth_words: Vec<TimedWord>,
    pub normal: Hypothesis,
    pub oov: Hypothesis,
    pub labels: Vec<Label>,
}

/// A generated corpus plus the context list it was built from.
#[derive(Clone, Debug)]
pub struct SimCorpus {
    pub context: Vec<ContextEntry>,
    pub utterances: Vec<SimUtterance>,
}

impl SimCorpus {
    pub fn normal_hypotheses(&self) -> Vec<Hypothesis> {
        self.utterances.iter().map(|u| u.normal.clone()).collect()
    }

    pub fn oov_hypotheses(&self) -> Vec<Hypothesis> {
        self.utterances.iter().map(|u| u.oov.clone()).collect()
    }
}

const DROP_INSTEAD_OF_FILLER: f64 = 0.2;
const BASE_WORD_MS: u64 = 300;
const JITTER_MS: i64 = 60;

struct Filler<'a> {
    word: &'a str,
    phones: &'a PhoneSeq,
}

/// Generate `n_utts` utterances. Filler words come from lexicon entries
/// whose word is not part of any context surface; the primary hypothesis
/// replaces each context word with the filler closest to the uncorrupted
/// phones under unit costs (or drops it outright one time in five).
pub fn generate_corpus(
    context: &[ContextEntry],
    n_utts: usize,
    model: &CorruptionModel,
    lexicon: &Lexicon,
    phoneset: &PhoneSet,
    mode: CorpusMode,
) -> Result<SimCorpus> {
    model.validate()?;
    if let Some(bias) = &model.bias {
        if bias.dim() != phoneset.len() {
            return Err(Error::DimensionMismatch(bias.dim(), phoneset.len()));
        }
    }
    if n_utts > 0 && context.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot generate utterances from an empty context list".into(),
        ));
    }

    let context_tokens: std::collections::HashSet<&str> = context
        .iter()
        .flat_map(|e| e.surface.split_whitespace())
        .collect();
    let fillers: Vec<Filler> = lexicon
        .entries()
        .iter()
        .filter(|e| !context_tokens.contains(e.word.as_str()))
        .map(|e| Filler {
            word: &e.word,
            phones: &e.prons[0],
        })
        .collect();
    if n_utts > 0 && fillers.is_empty() {
        return Err(Error::InvalidConfig(
            "lexicon provides no filler words outside the context list".into(),
        ));
    }

    // The filler a closed-vocabulary decoder would emit for each entry:
    // nearest first pronunciation by unit-cost distance, first wins ties.
    let hard = make_hard_matrix(phoneset);
    let mut nearest: Vec<&str> = Vec::with_capacity(context.len());
    for entry in context {
        let mut best: Option<(f64, &str)> = None;
        for filler in &fillers {
            let d = weighted_edit_distance(&entry.variants[0], filler.phones, &hard)?;
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, filler.word));
            }
        }
        nearest.push(best.map(|(_, w)| w).unwrap_or(""));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let mut utterances = Vec::with_capacity(n_utts);
    for i in 0..n_utts {
        let utt_id = format!("sim{i:05}");
        let entry_idx = rng.random_range(0..context.len());
        let entry = &context[entry_idx];

        let (n_fillers, entry_pos) = match mode {
            CorpusMode::Word => (0, 0),
            CorpusMode::Sentence => {
                let n = rng.random_range(4..=10usize);
                (n, rng.random_range(0..=n))
            }
        };
        let filler_words: Vec<&Filler> = (0..n_fillers)
            .map(|_| &fillers[rng.random_range(0..fillers.len())])
            .collect();

        // Shared timeline: every slot gets its own jittered duration.
        let total_words = n_fillers + 1;
        let mut spans = Vec::with_capacity(total_words);
        let mut clock = 0u64;
        for _ in 0..total_words {
            let jitter = rng.random_range(-JITTER_MS..=JITTER_MS);
            let duration = (BASE_WORD_MS as i64 + jitter) as u64;
            spans.push((clock, clock + duration));
            clock += duration;
        }

        let corrupted = corrupt_with_rng(&entry.variants[0], model, phoneset, &mut rng);
        let drop_in_normal = rng.random::<f64>() < DROP_INSTEAD_OF_FILLER;

        let mut truth_words = Vec::with_capacity(total_words);
        let mut normal_words = Vec::with_capacity(total_words);
        let mut oov_words = Vec::with_capacity(total_words);
        let mut labels = Vec::new();
        let mut filler_iter = filler_words.iter();
        for (slot, &(start_ms, end_ms)) in spans.iter().enumerate() {
            if slot == entry_pos {
                truth_words.push(TimedWord {
                    surface: entry.surface.clone(),
                    start_ms,
                    end_ms,
                    phones: Some(entry.variants[0].clone()),
                });
                labels.push(Label {
                    surface: entry.surface.clone(),
                    start_ms,
                    end_ms,
                });
                if !drop_in_normal {
                    normal_words.push(TimedWord {
                        surface: nearest[entry_idx].to_string(),
                        start_ms,
                        end_ms,
                        phones: None,
                    });
                }
                if !corrupted.is_empty() {
                    oov_words.push(TimedWord {
                        surface: SIL_MARKER.into(),
                        start_ms,
                        end_ms,
                        phones: Some(corrupted.clone()),
                    });
                }
            } else {
                let filler = filler_iter.next().expect("one filler per non-entry slot");
                let word = TimedWord {
                    surface: filler.word.to_string(),
                    start_ms,
                    end_ms,
                    phones: None,
                };
                truth_words.push(word.clone());
                normal_words.push(word.clone());
                oov_words.push(word);
            }
        }

        utterances.push(SimUtterance {
            utt_id: utt_id.clone(),
            truth_words,
            normal: Hypothesis {
                utt_id: utt_id.clone(),
                words: normal_words,
            },
            oov: Hypothesis {
                utt_id,
                words: oov_words,
            },
            labels,
        });
    }

    Ok(SimCorpus {
        context: context.to_vec(),
        utterances,
    })
}
