//! Score recovery reports against ground-truth labels.
//!
//! Three regimes: word-level recovery (multi-candidate context list),
//! verification (single-candidate context list), and sentence-level
//! recovery where a hit must also land within a timing window of the
//! ground-truth span. The `Pass 2 (%)` figure is cumulative (pass-1 hits
//! included); the JSON summary carries the incremental rate as well.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::phoneset::fold_case;
use crate::recovery::ReportLine;
use crate::{Error, Result};

/// One expected context-word occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub surface: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

/// Ground-truth labels per utterance.
#[derive(Clone, Debug, Default)]
pub struct GroundTruth {
    utterances: Vec<(String, Vec<Label>)>,
    index: HashMap<String, usize>,
}

impl GroundTruth {
    pub fn new(utterances: Vec<(String, Vec<Label>)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(utterances.len());
        for (i, (utt_id, labels)) in utterances.iter().enumerate() {
            if index.insert(utt_id.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "duplicate utterance {utt_id:?} in ground truth"
                )));
            }
            for label in labels {
                if label.end_ms <= label.start_ms {
                    return Err(Error::InvalidConfig(format!(
                        "label {:?} in {utt_id:?} has end {} <= start {}",
                        label.surface, label.end_ms, label.start_ms
                    )));
                }
            }
        }
        Ok(GroundTruth { utterances, index })
    }

    pub fn get(&self, utt_id: &str) -> Option<&[Label]> {
        self.index
            .get(utt_id)
            .map(|&i| self.utterances[i].1.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Label])> {
        self.utterances
            .iter()
            .map(|(id, labels)| (id.as_str(), labels.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct WireTruth {
    utt_id: String,
    labels: Vec<Label>,
}

/// Read `truth.jsonl`: one `{"utt_id", "labels": [...]}` record per line.
pub fn load_truth(path: &Path) -> Result<GroundTruth> {
    let file_name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut utterances = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireTruth = serde_json::from_str(line)
            .map_err(|e| Error::parse(&file_name, lineno + 1, e.to_string()))?;
        utterances.push((wire.utt_id, wire.labels));
    }
    GroundTruth::new(utterances)
}

/// Write ground truth in the form `load_truth` accepts.
pub fn write_truth<'a>(
    out: &mut impl std::io::Write,
    utterances: impl Iterator<Item = (&'a str, &'a [Label])>,
) -> std::io::Result<()> {
    for (utt_id, labels) in utterances {
        let wire = WireTruth {
            utt_id: utt_id.to_string(),
            labels: labels.to_vec(),
        };
        writeln!(out, "{}", serde_json::to_string(&wire).expect("serializable"))?;
    }
    Ok(())
}

/// Evaluation regime.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EvalMode {
    Word,
    Verify,
    Sentence,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Word => "word",
            EvalMode::Verify => "verify",
            EvalMode::Sentence => "sentence",
        }
    }
}

/// Per-surface tallies.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SurfaceBreakdown {
    pub surface: String,
    pub total: u64,
    pub pass1: u64,
    pub pass2: u64,
    pub missed: u64,
}

/// Per-label outcome, reported in verification mode.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Verdict {
    pub utt_id: String,
    pub surface: String,
    pub outcome: &'static str,
}

/// Aggregated scores. Pass-1 and pass-2 counts are disjoint; the
/// cumulative rate covers their union.
#[derive(Clone, Debug, Serialize)]
pub struct EvalResult {
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_ms: Option<u64>,
    pub total: u64,
    pub recovered_pass1: u64,
    pub recovered_pass2: u64,
    pub missed: u64,
    pub spurious: u64,
    pub pass1_rate: f64,
    pub pass2_cumulative_rate: f64,
    pub pass2_incremental_rate: f64,
    pub per_surface: Vec<SurfaceBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<Vec<Verdict>>,
}

fn rate(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

fn score(
    reports: &[ReportLine],
    truth: &GroundTruth,
    mode: EvalMode,
    window_ms: Option<u64>,
) -> Result<EvalResult> {
    let mut by_utt: HashMap<&str, &ReportLine> = HashMap::with_capacity(reports.len());
    for report in reports {
        if truth.get(&report.utt_id).is_none() {
            return Err(Error::UnknownUtterance(report.utt_id.clone()));
        }
        if by_utt.insert(report.utt_id.as_str(), report).is_some() {
            return Err(Error::InvalidConfig(format!(
                "duplicate utterance {:?} in report",
                report.utt_id
            )));
        }
    }

    let single_label = matches!(mode, EvalMode::Word | EvalMode::Verify);
    let mut totals = (0u64, 0u64, 0u64, 0u64); // total, pass1, pass2, missed
    let mut spurious = 0u64;
    let mut per_surface: BTreeMap<String, SurfaceBreakdown> = BTreeMap::new();
    let mut verdicts = Vec::new();

    for (utt_id, labels) in truth.iter() {
        if single_label && labels.len() != 1 {
            return Err(Error::InvalidConfig(format!(
                "{} mode expects exactly one label per utterance, {utt_id:?} has {}",
                mode.as_str(),
                labels.len()
            )));
        }
        let report = by_utt.get(utt_id);
        let recoveries = report.map(|r| r.recoveries.as_slice()).unwrap_or(&[]);
        let mut used = vec![false; recoveries.len()];
        for label in labels {
            let surface = fold_case(&label.surface);
            let breakdown = per_surface
                .entry(surface.clone())
                .or_insert_with(|| SurfaceBreakdown {
                    surface: surface.clone(),
                    total: 0,
                    pass1: 0,
                    pass2: 0,
                    missed: 0,
                });
            totals.0 += 1;
            breakdown.total += 1;

            let mut best: Option<usize> = None;
            for (k, rec) in recoveries.iter().enumerate() {
                if used[k] || fold_case(&rec.surface) != surface {
                    continue;
                }
                if let Some(w) = window_ms {
                    if rec.start_ms.abs_diff(label.start_ms) > w
                        || rec.end_ms.abs_diff(label.end_ms) > w
                    {
                        continue;
                    }
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        let cur = &recoveries[b];
                        (rec.pass, rec.cost) < (cur.pass, cur.cost)
                    }
                };
                if better {
                    best = Some(k);
                }
            }
            let outcome = match best {
                Some(k) => {
                    used[k] = true;
                    if recoveries[k].pass == 1 {
                        totals.1 += 1;
                        breakdown.pass1 += 1;
                        "pass1"
                    } else {
                        totals.2 += 1;
                        breakdown.pass2 += 1;
                        "pass2"
                    }
                }
                None => {
                    totals.3 += 1;
                    breakdown.missed += 1;
                    "miss"
                }
            };
            verdicts.push(Verdict {
                utt_id: utt_id.to_string(),
                surface,
                outcome,
            });
        }
        spurious += used.iter().filter(|&&u| !u).count() as u64;
    }

    let (total, pass1, pass2, missed) = totals;
    Ok(EvalResult {
        mode: mode.as_str(),
        window_ms,
        total,
        recovered_pass1: pass1,
        recovered_pass2: pass2,
        missed,
        spurious,
        pass1_rate: rate(pass1, total),
        pass2_cumulative_rate: rate(pass1 + pass2, total),
        pass2_incremental_rate: rate(pass2, total),
        per_surface: per_surface.into_values().collect(),
        verdicts: matches!(mode, EvalMode::Verify).then_some(verdicts),
    })
}

/// Word-level scoring: an utterance's label counts as recovered when the
/// report contains it by surface, regardless of timing.
pub fn eval_word_level(reports: &[ReportLine], truth: &GroundTruth) -> Result<EvalResult> {
    score(reports, truth, EvalMode::Word, None)
}

/// Verification scoring: same counting as word level over reports that
/// were produced with a single-candidate context list; per-label verdicts
/// are included.
pub fn eval_verification(reports: &[ReportLine], truth: &GroundTruth) -> Result<EvalResult> {
    score(reports, truth, EvalMode::Verify, None)
}

/// Sentence-level scoring: a recovery must match the label's surface and
/// land within `window_ms` of both span endpoints. Recoveries matching no
/// label count as spurious.
pub fn eval_sentence_level(
    reports: &[ReportLine],
    truth: &GroundTruth,
    window_ms: u64,
) -> Result<EvalResult> {
    score(reports, truth, EvalMode::Sentence, Some(window_ms))
}

/// Render the summary as a Markdown table, rates at one decimal place.
pub fn to_markdown(result: &EvalResult) -> String {
    let window = result
        .window_ms
        .map(|w| w.to_string())
        .unwrap_or_else(|| "-".into());
    let mut out = String::new();
    out.push_str(
        "| Mode | Window (ms) | Total | Pass 1 (%) | Pass 2 (%) | Missed | Spurious |\n",
    );
    out.push_str(
        "|------|-------------|-------|------------|------------|--------|----------|\n",
    );
    out.push_str(&format!(
        "| {} | {} | {} | {:.1} | {:.1} | {} | {} |\n",
        result.mode,
        window,
        result.total,
        result.pass1_rate,
        result.pass2_cumulative_rate,
        result.missed,
        result.spurious
    ));
    out
}
