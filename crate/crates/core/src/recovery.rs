//! Two-pass context-word recovery and transcript merging.
//!
//! The OOV-side decode marks phone-only stretches with the reserved `!SIL`
//! surface and attaches the raw phone sequence. Pass 1 recovers context
//! entries whose phones match a `!SIL` segment exactly. Pass 2 slides
//! variable-width word windows over the whole decoded sentence, scores
//! every (entry, window) pair with the weighted edit distance, and accepts
//! the cheapest non-overlapping matches under a cost threshold. Recovered
//! words are then spliced into the primary transcript by time: primary
//! words whose midpoint falls inside a recovered span are replaced,
//! partially overlapping words are kept alongside the recovered word.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::align::{weighted_edit_distance, CostMatrix};
use crate::phoneset::{fold_case, phonemize_capped, Lexicon, PhoneSeq, PhoneSet};
use crate::{Error, Result};

/// Reserved surface marking a phone-only decoder segment.
pub const SIL_MARKER: &str = "!SIL";

/// One decoded word with millisecond timing. `phones` is mandatory for
/// `!SIL` segments and optional otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedWord {
    pub surface: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub phones: Option<PhoneSeq>,
}

impl TimedWord {
    pub fn is_sil(&self) -> bool {
        self.surface == SIL_MARKER
    }

    pub fn midpoint_ms(&self) -> u64 {
        (self.start_ms + self.end_ms) / 2
    }

    fn validate(&self) -> Result<()> {
        if self.end_ms <= self.start_ms {
            return Err(Error::InvalidConfig(format!(
                "word {:?} has end {} <= start {}",
                self.surface, self.end_ms, self.start_ms
            )));
        }
        if self.is_sil() && self.phones.as_ref().is_none_or(PhoneSeq::is_empty) {
            return Err(Error::InvalidConfig(
                "!SIL segment without attached phones".into(),
            ));
        }
        Ok(())
    }
}

/// A time-stamped word sequence from one decoder, sorted by start time.
/// Overlapping words are permitted (decoders produce them).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypothesis {
    pub utt_id: String,
    pub words: Vec<TimedWord>,
}

impl Hypothesis {
    pub fn validate(&self) -> Result<()> {
        for word in &self.words {
            word.validate()?;
        }
        if self.words.windows(2).any(|w| w[0].start_ms > w[1].start_ms) {
            return Err(Error::InvalidConfig(format!(
                "utterance {:?}: words are not sorted by start time",
                self.utt_id
            )));
        }
        Ok(())
    }
}

/// A context word or phrase with its pronunciation variants.
#[derive(Clone, Debug)]
pub struct ContextEntry {
    pub id: usize,
    pub surface: String,
    pub variants: Vec<PhoneSeq>,
}

/// Matching and merging parameters. Defaults follow the best
/// sentence-level operating point: threshold 10, window 500 ms.
#[derive(Clone, Copy, Debug)]
pub struct RecoveryConfig {
    /// Reject pass-2 matches costing more than this.
    pub cost_threshold: f64,
    /// Longest window, in words, considered by pass 2.
    pub max_span_words: usize,
    /// Timing slack used by sentence-level evaluation, not by matching.
    pub window_ms: u64,
    /// Compare `cost / variant length` against the threshold instead of
    /// the raw cost.
    pub length_normalize: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            cost_threshold: 10.0,
            max_span_words: 5,
            window_ms: 500,
            length_normalize: false,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.cost_threshold.is_finite() || self.cost_threshold < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "cost threshold {} must be finite and nonnegative",
                self.cost_threshold
            )));
        }
        if self.max_span_words < 1 {
            return Err(Error::InvalidConfig(
                "max span must be at least one word".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted recovery. `word_range` is the half-open window of word
/// indices it replaces in the OOV hypothesis.
#[derive(Clone, Debug)]
pub struct Recovered {
    pub entry_id: usize,
    pub surface: String,
    pub pass: u8,
    pub cost: f64,
    pub start_ms: u64,
    pub end_ms: u64,
    pub word_range: (usize, usize),
}

/// A scored (entry, window) pair that met the threshold, before greedy
/// span assignment.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub entry_id: usize,
    pub cost: f64,
    pub word_range: (usize, usize),
    pub start_ms: u64,
    pub end_ms: u64,
}

fn ranges_overlap(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Recover context entries whose phones equal a `!SIL` segment exactly.
/// Ties between entries sharing a variant go to the lowest entry id.
pub fn pass1_exact(oov: &Hypothesis, context: &[ContextEntry]) -> Vec<Recovered> {
    let mut by_phones: HashMap<&PhoneSeq, &ContextEntry> = HashMap::new();
    for entry in context {
        for variant in &entry.variants {
            by_phones
                .entry(variant)
                .and_modify(|e| {
                    if entry.id < e.id {
                        *e = entry;
                    }
                })
                .or_insert(entry);
        }
    }
    let mut out = Vec::new();
    for (idx, word) in oov.words.iter().enumerate() {
        if !word.is_sil() {
            continue;
        }
        let Some(phones) = &word.phones else { continue };
        if let Some(entry) = by_phones.get(phones) {
            out.push(Recovered {
                entry_id: entry.id,
                surface: entry.surface.clone(),
                pass: 1,
                cost: 0.0,
                start_ms: word.start_ms,
                end_ms: word.end_ms,
                word_range: (idx, idx + 1),
            });
        }
    }
    out
}

/// Phones for one hypothesis word: attached phones for `!SIL`, lexicon
/// lookup (first pronunciation) for ordinary words, falling back to
/// attached phones when the lexicon misses.
fn word_phones<'a>(word: &'a TimedWord, lexicon: &'a Lexicon) -> Option<&'a PhoneSeq> {
    if word.is_sil() {
        return word.phones.as_ref();
    }
    lexicon
        .lookup(&word.surface)
        .and_then(|prons| prons.first())
        .or(word.phones.as_ref())
}

/// Score every window of 1..=`max_span_words` contiguous words (outside
/// `excluded`) against every context entry and keep the pairs within the
/// cost threshold, sorted by ascending cost, then longer window, then
/// lower entry id. Windows containing a word with no resolvable phones
/// are skipped with a diagnostic.
pub fn pass2_candidates(
    oov: &Hypothesis,
    context: &[ContextEntry],
    costs: &CostMatrix,
    cfg: &RecoveryConfig,
    lexicon: &Lexicon,
    excluded: &[(usize, usize)],
) -> Result<(Vec<Candidate>, Vec<String>)> {
    let mut diagnostics = Vec::new();
    let resolved: Vec<Option<&PhoneSeq>> = oov
        .words
        .iter()
        .map(|w| word_phones(w, lexicon))
        .collect();

    let mut candidates = Vec::new();
    for lo in 0..oov.words.len() {
        for hi in (lo + 1)..=(lo + cfg.max_span_words).min(oov.words.len()) {
            let range = (lo, hi);
            if excluded.iter().any(|&e| ranges_overlap(e, range)) {
                continue;
            }
            if let Some(missing) = (lo..hi).find(|&k| resolved[k].is_none()) {
                diagnostics.push(format!(
                    "{}: window [{lo}..{hi}) skipped: no phones for {:?}",
                    oov.utt_id, oov.words[missing].surface
                ));
                continue;
            }
            let mut window = PhoneSeq::default();
            for phones in &resolved[lo..hi] {
                window.extend_from(phones.expect("checked above"));
            }
            for entry in context {
                let mut best: Option<f64> = None;
                for variant in &entry.variants {
                    let mut cost = weighted_edit_distance(variant, &window, costs)?;
                    if cfg.length_normalize {
                        cost /= variant.len() as f64;
                    }
                    if best.is_none_or(|b| cost < b) {
                        best = Some(cost);
                    }
                }
                let Some(cost) = best else { continue };
                if cost <= cfg.cost_threshold {
                    candidates.push(Candidate {
                        entry_id: entry.id,
                        cost,
                        word_range: range,
                        start_ms: oov.words[lo].start_ms,
                        end_ms: oov.words[hi - 1].end_ms,
                    });
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then_with(|| {
                let alen = a.word_range.1 - a.word_range.0;
                let blen = b.word_range.1 - b.word_range.0;
                blen.cmp(&alen)
            })
            .then_with(|| a.entry_id.cmp(&b.entry_id))
            .then_with(|| a.word_range.0.cmp(&b.word_range.0))
    });
    Ok((candidates, diagnostics))
}

/// Fuzzy windowed matching over the whole decoded sentence. Candidates
/// are accepted greedily by ascending cost, skipping windows that overlap
/// an already accepted one; pass-1 spans are excluded up front.
pub fn pass2_fuzzy(
    oov: &Hypothesis,
    context: &[ContextEntry],
    costs: &CostMatrix,
    cfg: &RecoveryConfig,
    lexicon: &Lexicon,
    already: &[Recovered],
) -> Result<(Vec<Recovered>, Vec<String>)> {
    let excluded: Vec<(usize, usize)> = already.iter().map(|r| r.word_range).collect();
    let (candidates, diagnostics) =
        pass2_candidates(oov, context, costs, cfg, lexicon, &excluded)?;
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::new();
    for cand in candidates {
        if taken.iter().any(|&t| ranges_overlap(t, cand.word_range)) {
            continue;
        }
        taken.push(cand.word_range);
        out.push(Recovered {
            entry_id: cand.entry_id,
            surface: context[cand.entry_id].surface.clone(),
            pass: 2,
            cost: cand.cost,
            start_ms: cand.start_ms,
            end_ms: cand.end_ms,
            word_range: cand.word_range,
        });
    }
    Ok((out, diagnostics))
}

/// Splice recovered context words into the primary transcript. A primary
/// word is dropped when its midpoint lies inside a recovered time span;
/// words that merely poke into a span stay, so overlaps keep both words.
pub fn merge_transcripts(normal: &Hypothesis, recovered: &[Recovered]) -> Hypothesis {
    let mut words: Vec<TimedWord> = normal
        .words
        .iter()
        .filter(|w| {
            let mid = w.midpoint_ms();
            !recovered
                .iter()
                .any(|r| r.start_ms <= mid && mid <= r.end_ms)
        })
        .cloned()
        .collect();
    for rec in recovered {
        words.push(TimedWord {
            surface: rec.surface.clone(),
            start_ms: rec.start_ms,
            end_ms: rec.end_ms,
            phones: None,
        });
    }
    words.sort_by(|a, b| {
        a.start_ms
            .cmp(&b.start_ms)
            .then_with(|| a.end_ms.cmp(&b.end_ms))
            .then_with(|| a.surface.cmp(&b.surface))
    });
    Hypothesis {
        utt_id: normal.utt_id.clone(),
        words,
    }
}

/// Everything recovered from one utterance plus the merged transcript.
#[derive(Clone, Debug)]
pub struct RecoveryReport {
    pub utt_id: String,
    pub recovered: Vec<Recovered>,
    pub diagnostics: Vec<String>,
    pub merged: Hypothesis,
}

/// Run both passes over the OOV-side decode and merge the recoveries into
/// the primary transcript. The two hypotheses must describe the same
/// utterance.
pub fn recover_utterance(
    normal: &Hypothesis,
    oov: &Hypothesis,
    context: &[ContextEntry],
    costs: &CostMatrix,
    cfg: &RecoveryConfig,
    lexicon: &Lexicon,
) -> Result<RecoveryReport> {
    if normal.utt_id != oov.utt_id {
        return Err(Error::UttIdMismatch {
            normal: normal.utt_id.clone(),
            oov: oov.utt_id.clone(),
        });
    }
    cfg.validate()?;
    let first = pass1_exact(oov, context);
    let (second, diagnostics) = pass2_fuzzy(oov, context, costs, cfg, lexicon, &first)?;
    let mut recovered = first;
    recovered.extend(second);
    recovered.sort_by(|a, b| {
        a.start_ms
            .cmp(&b.start_ms)
            .then_with(|| a.pass.cmp(&b.pass))
            .then_with(|| a.entry_id.cmp(&b.entry_id))
    });
    let merged = merge_transcripts(normal, &recovered);
    Ok(RecoveryReport {
        utt_id: normal.utt_id.clone(),
        recovered,
        diagnostics,
        merged,
    })
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireWord {
    w: String,
    start_ms: u64,
    end_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    phones: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct WireHypothesis {
    utt_id: String,
    words: Vec<WireWord>,
}

/// Read a `hypotheses.jsonl` file: one utterance per line, words carrying
/// millisecond timings and optional phone symbols.
pub fn read_hypotheses(path: &Path, phoneset: &PhoneSet) -> Result<Vec<Hypothesis>> {
    let file_name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireHypothesis = serde_json::from_str(line)
            .map_err(|e| Error::parse(&file_name, lineno + 1, e.to_string()))?;
        let mut words = Vec::with_capacity(wire.words.len());
        for w in wire.words {
            let phones = match w.phones {
                Some(symbols) => Some(phoneset.parse_seq(&symbols.join(" "))?),
                None => None,
            };
            words.push(TimedWord {
                surface: w.w,
                start_ms: w.start_ms,
                end_ms: w.end_ms,
                phones,
            });
        }
        let hyp = Hypothesis {
            utt_id: wire.utt_id,
            words,
        };
        hyp.validate()
            .map_err(|e| Error::parse(&file_name, lineno + 1, e.to_string()))?;
        out.push(hyp);
    }
    Ok(out)
}

/// Write hypotheses in the same JSONL form `read_hypotheses` accepts.
pub fn write_hypotheses(
    out: &mut impl std::io::Write,
    hypotheses: &[Hypothesis],
    phoneset: &PhoneSet,
) -> std::io::Result<()> {
    for hyp in hypotheses {
        let wire = WireHypothesis {
            utt_id: hyp.utt_id.clone(),
            words: hyp
                .words
                .iter()
                .map(|w| WireWord {
                    w: w.surface.clone(),
                    start_ms: w.start_ms,
                    end_ms: w.end_ms,
                    phones: w.phones.as_ref().map(|p| {
                        p.iter().map(|id| phoneset.symbol(id).to_string()).collect()
                    }),
                })
                .collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&wire).expect("serializable"))?;
    }
    Ok(())
}

/// Load `context.tsv`: one `surface<TAB>optional phones` entry per line.
/// An explicit phone column overrides lexicon lookup; otherwise the
/// surface is phonemized, phrases included.
pub fn load_context(
    path: &Path,
    lexicon: &Lexicon,
    phoneset: &PhoneSet,
    max_variants: usize,
) -> Result<Vec<ContextEntry>> {
    let file_name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (surface, phones) = match line.split_once('\t') {
            Some((s, p)) => (s.trim(), Some(p)),
            None => (line.trim(), None),
        };
        let surface = fold_case(surface);
        if surface.is_empty() {
            return Err(Error::parse(&file_name, lineno + 1, "empty surface"));
        }
        let variants = match phones {
            Some(p) if !p.trim().is_empty() => vec![phoneset.parse_seq(p)?],
            _ => phonemize_capped(&surface, lexicon, max_variants)?,
        };
        if variants.iter().any(PhoneSeq::is_empty) || variants.is_empty() {
            return Err(Error::EmptyPronunciation(surface));
        }
        out.push(ContextEntry {
            id: out.len(),
            surface,
            variants,
        });
    }
    Ok(out)
}

/// Write a context list with explicit phones, one line per variant, so
/// the file stands alone without the lexicon.
pub fn write_context(
    out: &mut impl std::io::Write,
    context: &[ContextEntry],
    phoneset: &PhoneSet,
) -> std::io::Result<()> {
    for entry in context {
        for variant in &entry.variants {
            writeln!(out, "{}\t{}", entry.surface, phoneset.format_seq(variant))?;
        }
    }
    Ok(())
}

/// One recovery as serialized into `report.jsonl`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveredOut {
    pub surface: String,
    pub pass: u8,
    pub cost: f64,
    pub start_ms: u64,
    pub end_ms: u64,
}

/// One merged-transcript word as serialized into `report.jsonl`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MergedWord {
    pub w: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

/// One `report.jsonl` record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportLine {
    pub utt_id: String,
    pub recoveries: Vec<RecoveredOut>,
    pub merged: Vec<MergedWord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl From<&RecoveryReport> for ReportLine {
    fn from(report: &RecoveryReport) -> Self {
        ReportLine {
            utt_id: report.utt_id.clone(),
            recoveries: report
                .recovered
                .iter()
                .map(|r| RecoveredOut {
                    surface: r.surface.clone(),
                    pass: r.pass,
                    cost: r.cost,
                    start_ms: r.start_ms,
                    end_ms: r.end_ms,
                })
                .collect(),
            merged: report
                .merged
                .words
                .iter()
                .map(|w| MergedWord {
                    w: w.surface.clone(),
                    start_ms: w.start_ms,
                    end_ms: w.end_ms,
                })
                .collect(),
            diagnostics: report.diagnostics.clone(),
        }
    }
}

/// Write one report record per utterance.
pub fn write_reports(
    out: &mut impl std::io::Write,
    reports: &[RecoveryReport],
) -> std::io::Result<()> {
    for report in reports {
        let line = ReportLine::from(report);
        writeln!(out, "{}", serde_json::to_string(&line).expect("serializable"))?;
    }
    Ok(())
}

/// Read a `report.jsonl` file back for evaluation.
pub fn read_reports(path: &Path) -> Result<Vec<ReportLine>> {
    let file_name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ReportLine = serde_json::from_str(line)
            .map_err(|e| Error::parse(&file_name, lineno + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}
