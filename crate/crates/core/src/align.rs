//! Confusion-cost-aware edit distance and alignment traceback.
//!
//! The distance between a reference phone sequence and a decoded hypothesis
//! is the minimum total cost over all edit scripts, where insertions and
//! deletions have fixed costs and substitutions are priced per ordered
//! phone pair by a [`CostMatrix`]. Matching a phone with itself is free.
//!
//! Substitution costs are kept strictly below `insert + delete` so the
//! dynamic program can always take a substitution over a delete+insert
//! detour; candidate costs at or above that bound are clamped to
//! `insert + delete - COST_CLAMP_EPSILON` at construction.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::phoneset::{PhoneId, PhoneSeq, PhoneSet};
use crate::{Error, Result};

/// Slack used when clamping substitution costs below `insert + delete`.
pub const COST_CLAMP_EPSILON: f64 = 1e-6;

/// Which construction produced a cost matrix.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MatrixLabel {
    Hard,
    Phonetic,
    Acoustic,
    Append,
    Weighted,
}

impl MatrixLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixLabel::Hard => "hard",
            MatrixLabel::Phonetic => "phonetic",
            MatrixLabel::Acoustic => "acoustic",
            MatrixLabel::Append => "append",
            MatrixLabel::Weighted => "weighted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hard" => Some(MatrixLabel::Hard),
            "phonetic" => Some(MatrixLabel::Phonetic),
            "acoustic" => Some(MatrixLabel::Acoustic),
            "append" => Some(MatrixLabel::Append),
            "weighted" => Some(MatrixLabel::Weighted),
            _ => None,
        }
    }
}

/// Insertion/deletion costs plus a dense substitution-cost table over
/// ordered phone-index pairs (row = reference phone, column = hypothesis
/// phone). The diagonal is zero and every off-diagonal entry is finite,
/// nonnegative, and strictly below `insert + delete`.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    dim: usize,
    insert_cost: f64,
    delete_cost: f64,
    sub: Vec<f64>,
    label: MatrixLabel,
}

impl CostMatrix {
    /// Build a matrix from a per-pair cost function. `f` is only consulted
    /// for off-diagonal pairs; the diagonal is fixed at zero and candidate
    /// costs `>= insert + delete` are clamped.
    pub fn from_fn(
        dim: usize,
        insert_cost: f64,
        delete_cost: f64,
        label: MatrixLabel,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        if !insert_cost.is_finite() || insert_cost < 0.0 {
            return Err(Error::InvalidCosts(format!(
                "insert cost {insert_cost} must be finite and nonnegative"
            )));
        }
        if !delete_cost.is_finite() || delete_cost < 0.0 {
            return Err(Error::InvalidCosts(format!(
                "delete cost {delete_cost} must be finite and nonnegative"
            )));
        }
        if insert_cost + delete_cost <= COST_CLAMP_EPSILON {
            return Err(Error::InvalidCosts(format!(
                "insert + delete = {} leaves no room for substitutions",
                insert_cost + delete_cost
            )));
        }
        let mut sub = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                if i == j {
                    continue;
                }
                let c = f(i, j);
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::InvalidCosts(format!(
                        "substitution cost {c} for pair ({i},{j}) must be finite and nonnegative"
                    )));
                }
                sub[i * dim + j] = clamp_sub_cost(c, insert_cost, delete_cost);
            }
        }
        Ok(CostMatrix {
            dim,
            insert_cost,
            delete_cost,
            sub,
            label,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert_cost(&self) -> f64 {
        self.insert_cost
    }

    pub fn delete_cost(&self) -> f64 {
        self.delete_cost
    }

    pub fn label(&self) -> MatrixLabel {
        self.label
    }

    /// Substitution cost for replacing reference phone `r` with hypothesis
    /// phone `h`.
    #[inline]
    pub fn sub_cost(&self, r: PhoneId, h: PhoneId) -> f64 {
        self.sub[r.idx() * self.dim + h.idx()]
    }

    /// The value unset off-diagonal pairs carry: the hard cost 1.0, run
    /// through the same clamp as everything else.
    pub fn default_cost(&self) -> f64 {
        clamp_sub_cost(1.0, self.insert_cost, self.delete_cost)
    }

    /// Whether an off-diagonal pair still carries the default cost.
    pub fn is_default(&self, r: usize, h: usize) -> bool {
        r != h && self.sub[r * self.dim + h] == self.default_cost()
    }

    /// Off-diagonal entries that differ from the default, in row-major
    /// order.
    pub fn non_default_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let default = self.default_cost();
        (0..self.dim).flat_map(move |i| {
            (0..self.dim).filter_map(move |j| {
                let c = self.sub[i * self.dim + j];
                (i != j && c != default).then_some((i, j, c))
            })
        })
    }

    pub fn non_default_count(&self) -> usize {
        self.non_default_entries().count()
    }

    fn check_seq(&self, seq: &PhoneSeq) -> Result<()> {
        for id in seq.iter() {
            if id.idx() >= self.dim {
                return Err(Error::IndexOutOfRange {
                    index: id.idx(),
                    dim: self.dim,
                });
            }
        }
        Ok(())
    }

    /// Serialize as TSV: a header carrying the insert/delete costs and the
    /// label, then one row per non-default off-diagonal entry.
    pub fn to_tsv(&self, phoneset: &PhoneSet) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#I={}\t#D={}\t#label={}",
            self.insert_cost,
            self.delete_cost,
            self.label.as_str()
        );
        for (i, j, c) in self.non_default_entries() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                phoneset.symbol(PhoneId(i as u16)),
                phoneset.symbol(PhoneId(j as u16)),
                c
            );
        }
        out
    }

    pub fn write_tsv(&self, path: &Path, phoneset: &PhoneSet) -> Result<()> {
        std::fs::write(path, self.to_tsv(phoneset)).map_err(|e| Error::io(path, e))
    }
}

#[inline]
fn clamp_sub_cost(cost: f64, insert_cost: f64, delete_cost: f64) -> f64 {
    let bound = insert_cost + delete_cost;
    if cost >= bound {
        bound - COST_CLAMP_EPSILON
    } else {
        cost
    }
}

/// Load a cost matrix from TSV. Unlisted off-diagonal pairs default to
/// 1.0; rows naming the same phone twice are rejected (the diagonal is
/// implicitly zero).
pub fn load_cost_matrix(path: &Path, phoneset: &PhoneSet) -> Result<CostMatrix> {
    let file_name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(&file_name, 1, "empty cost matrix file"))?;

    let mut insert_cost = None;
    let mut delete_cost = None;
    let mut label = None;
    for field in header.split('\t') {
        if let Some(v) = field.strip_prefix("#I=") {
            insert_cost = v.parse::<f64>().ok();
        } else if let Some(v) = field.strip_prefix("#D=") {
            delete_cost = v.parse::<f64>().ok();
        } else if let Some(v) = field.strip_prefix("#label=") {
            label = MatrixLabel::parse(v);
        }
    }
    let insert_cost = insert_cost
        .ok_or_else(|| Error::parse(&file_name, 1, "header is missing #I=<value>"))?;
    let delete_cost = delete_cost
        .ok_or_else(|| Error::parse(&file_name, 1, "header is missing #D=<value>"))?;
    let label =
        label.ok_or_else(|| Error::parse(&file_name, 1, "header is missing a valid #label"))?;

    let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                &file_name,
                lineno + 1,
                "expected phone_a<TAB>phone_b<TAB>cost",
            ));
        }
        let a = phoneset
            .id(fields[0])
            .ok_or_else(|| Error::UnknownPhone(fields[0].to_string()))?;
        let b = phoneset
            .id(fields[1])
            .ok_or_else(|| Error::UnknownPhone(fields[1].to_string()))?;
        if a == b {
            return Err(Error::parse(
                &file_name,
                lineno + 1,
                format!("diagonal entry for {:?} is implicit and cannot be set", fields[0]),
            ));
        }
        let cost = fields[2].parse::<f64>().map_err(|_| {
            Error::parse(&file_name, lineno + 1, format!("bad cost {:?}", fields[2]))
        })?;
        if entries.insert((a.idx(), b.idx()), cost).is_some() {
            return Err(Error::parse(
                &file_name,
                lineno + 1,
                format!("duplicate entry for pair ({}, {})", fields[0], fields[1]),
            ));
        }
    }

    CostMatrix::from_fn(phoneset.len(), insert_cost, delete_cost, label, |i, j| {
        entries.get(&(i, j)).copied().unwrap_or(1.0)
    })
}

/// Unit-cost matrix: insert = delete = 1 and every off-diagonal
/// substitution costs 1 (classic Levenshtein on phone symbols).
pub fn make_hard_matrix(phoneset: &PhoneSet) -> CostMatrix {
    make_hard_matrix_with(phoneset, 1.0, 1.0)
}

/// Hard matrix with custom insert/delete costs; substitutions stay at the
/// clamped default.
pub fn make_hard_matrix_with(phoneset: &PhoneSet, insert_cost: f64, delete_cost: f64) -> CostMatrix {
    CostMatrix::from_fn(
        phoneset.len(),
        insert_cost,
        delete_cost,
        MatrixLabel::Hard,
        |_, _| 1.0,
    )
    .expect("hard matrix construction cannot fail for nonnegative costs")
}

/// One step of an edit script. Indices refer to positions in the
/// reference and hypothesis sequences.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EditOp {
    Match(usize, usize),
    Substitute(usize, usize),
    Delete(usize),
    Insert(usize),
}

/// A full edit script with its total cost under the matrix that produced
/// it. Replaying `ops` reconstructs both sequences exactly.
#[derive(Clone, Debug)]
pub struct Alignment {
    pub ops: Vec<EditOp>,
    pub total_cost: f64,
}

/// Minimum edit cost between `reference` and `hypothesis` under `costs`.
///
/// Runs the recurrence with two rolling rows; use [`align_sequences`] when
/// the traceback is needed.
pub fn weighted_edit_distance(
    reference: &PhoneSeq,
    hypothesis: &PhoneSeq,
    costs: &CostMatrix,
) -> Result<f64> {
    costs.check_seq(reference)?;
    costs.check_seq(hypothesis)?;
    let r = reference.as_slice();
    let h = hypothesis.as_slice();
    let insert_cost = costs.insert_cost();
    let delete_cost = costs.delete_cost();

    let mut prev = Vec::with_capacity(h.len() + 1);
    prev.push(0.0);
    for j in 1..=h.len() {
        prev.push(prev[j - 1] + insert_cost);
    }
    let mut curr = vec![0.0; h.len() + 1];
    for &rp in r {
        curr[0] = prev[0] + delete_cost;
        for (j, &hp) in h.iter().enumerate() {
            let diag = prev[j] + costs.sub_cost(rp, hp);
            let dele = prev[j + 1] + delete_cost;
            let inse = curr[j] + insert_cost;
            curr[j + 1] = diag.min(dele).min(inse);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[h.len()])
}

/// Full alignment with traceback. Ties prefer the diagonal move
/// (Match/Substitute) over Delete over Insert, making the result
/// deterministic.
pub fn align_sequences(
    reference: &PhoneSeq,
    hypothesis: &PhoneSeq,
    costs: &CostMatrix,
) -> Result<Alignment> {
    costs.check_seq(reference)?;
    costs.check_seq(hypothesis)?;
    let r = reference.as_slice();
    let h = hypothesis.as_slice();
    let insert_cost = costs.insert_cost();
    let delete_cost = costs.delete_cost();
    let (n, m) = (r.len(), h.len());
    let w = m + 1;

    const DIAG: u8 = 1;
    const DEL: u8 = 2;
    const INS: u8 = 3;
    let mut cost = vec![0.0f64; (n + 1) * w];
    let mut moves = vec![0u8; (n + 1) * w];
    for j in 1..=m {
        cost[j] = cost[j - 1] + insert_cost;
        moves[j] = INS;
    }
    for i in 1..=n {
        cost[i * w] = cost[(i - 1) * w] + delete_cost;
        moves[i * w] = DEL;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = cost[(i - 1) * w + j - 1] + costs.sub_cost(r[i - 1], h[j - 1]);
            let dele = cost[(i - 1) * w + j] + delete_cost;
            let inse = cost[i * w + j - 1] + insert_cost;
            let (best, mv) = if diag <= dele && diag <= inse {
                (diag, DIAG)
            } else if dele <= inse {
                (dele, DEL)
            } else {
                (inse, INS)
            };
            cost[i * w + j] = best;
            moves[i * w + j] = mv;
        }
    }

    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match moves[i * w + j] {
            DIAG => {
                i -= 1;
                j -= 1;
                if r[i] == h[j] {
                    ops.push(EditOp::Match(i, j));
                } else {
                    ops.push(EditOp::Substitute(i, j));
                }
            }
            DEL => {
                i -= 1;
                ops.push(EditOp::Delete(i));
            }
            INS => {
                j -= 1;
                ops.push(EditOp::Insert(j));
            }
            _ => unreachable!("every non-origin cell has a move"),
        }
    }
    ops.reverse();
    Ok(Alignment {
        ops,
        total_cost: cost[n * w + m],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symbols(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    fn plain_set(n: usize) -> PhoneSet {
        PhoneSet::new(symbols(n), vec!["f".into()], vec![vec![1.0]; n]).unwrap()
    }

    fn seq(ids: &[u16]) -> PhoneSeq {
        PhoneSeq::new(ids.iter().map(|&i| PhoneId(i)).collect())
    }

    /// Exhaustive minimum over all edit scripts, recursing without
    /// memoization so it stays independent of the DP recurrence.
    fn oracle(r: &[PhoneId], h: &[PhoneId], costs: &CostMatrix) -> f64 {
        fn go(r: &[PhoneId], h: &[PhoneId], costs: &CostMatrix, so_far: f64, best: &mut f64) {
            if so_far >= *best {
                return;
            }
            match (r.first(), h.first()) {
                (None, None) => *best = so_far,
                (Some(_), None) => go(
                    &r[1..],
                    h,
                    costs,
                    so_far + costs.delete_cost(),
                    best,
                ),
                (None, Some(_)) => go(
                    r,
                    &h[1..],
                    costs,
                    so_far + costs.insert_cost(),
                    best,
                ),
                (Some(&rp), Some(&hp)) => {
                    go(&r[1..], &h[1..], costs, so_far + costs.sub_cost(rp, hp), best);
                    go(&r[1..], h, costs, so_far + costs.delete_cost(), best);
                    go(r, &h[1..], costs, so_far + costs.insert_cost(), best);
                }
            }
        }
        let mut best = f64::INFINITY;
        go(r, h, costs, 0.0, &mut best);
        best
    }

    fn replay_ok(alignment: &Alignment, r: &PhoneSeq, h: &PhoneSeq) -> bool {
        let (mut i, mut j) = (0, 0);
        for op in &alignment.ops {
            match *op {
                EditOp::Match(a, b) => {
                    if a != i || b != j || r.as_slice()[a] != h.as_slice()[b] {
                        return false;
                    }
                    i += 1;
                    j += 1;
                }
                EditOp::Substitute(a, b) => {
                    if a != i || b != j || r.as_slice()[a] == h.as_slice()[b] {
                        return false;
                    }
                    i += 1;
                    j += 1;
                }
                EditOp::Delete(a) => {
                    if a != i {
                        return false;
                    }
                    i += 1;
                }
                EditOp::Insert(b) => {
                    if b != j {
                        return false;
                    }
                    j += 1;
                }
            }
        }
        i == r.len() && j == h.len()
    }

    fn op_cost(op: EditOp, r: &PhoneSeq, h: &PhoneSeq, costs: &CostMatrix) -> f64 {
        match op {
            EditOp::Match(_, _) => 0.0,
            EditOp::Substitute(a, b) => costs.sub_cost(r.as_slice()[a], h.as_slice()[b]),
            EditOp::Delete(_) => costs.delete_cost(),
            EditOp::Insert(_) => costs.insert_cost(),
        }
    }

    #[test]
    fn identity_is_free() {
        let set = plain_set(4);
        let hard = make_hard_matrix(&set);
        let s = seq(&[0, 1]);
        assert_eq!(weighted_edit_distance(&s, &s, &hard).unwrap(), 0.0);
    }

    #[test]
    fn boundary_rows() {
        let set = plain_set(4);
        let hard = make_hard_matrix(&set);
        assert_eq!(
            weighted_edit_distance(&seq(&[0]), &seq(&[]), &hard).unwrap(),
            1.0
        );
        assert_eq!(
            weighted_edit_distance(&seq(&[]), &seq(&[0]), &hard).unwrap(),
            1.0
        );
    }

    #[test]
    fn kitten_sitting_is_three() {
        // k i t e n vs s i t i n g over symbols 0..=5.
        let set = plain_set(6);
        let hard = make_hard_matrix(&set);
        let kitten = seq(&[0, 1, 2, 3, 4]);
        let sitting = seq(&[5, 1, 2, 1, 4, 3]);
        assert_eq!(
            weighted_edit_distance(&kitten, &sitting, &hard).unwrap(),
            3.0
        );
    }

    #[test]
    fn cheap_substitution_beats_indel() {
        let m = CostMatrix::from_fn(2, 1.0, 1.0, MatrixLabel::Acoustic, |i, j| {
            if (i, j) == (0, 1) {
                0.3
            } else {
                1.0
            }
        })
        .unwrap();
        assert_eq!(
            weighted_edit_distance(&seq(&[0]), &seq(&[1]), &m).unwrap(),
            0.3
        );
    }

    #[test]
    fn index_out_of_range_is_an_error() {
        let set = plain_set(2);
        let hard = make_hard_matrix(&set);
        assert!(matches!(
            weighted_edit_distance(&seq(&[5]), &seq(&[]), &hard),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn clamp_applies_at_and_above_the_bound() {
        let m = CostMatrix::from_fn(3, 0.4, 0.4, MatrixLabel::Phonetic, |i, j| match (i, j) {
            (0, 1) => 1.0,  // above I+D = 0.8
            (0, 2) => 0.8,  // exactly at the bound
            (1, 2) => 0.5,  // below: untouched
            _ => 0.0,
        })
        .unwrap();
        assert_eq!(m.sub_cost(PhoneId(0), PhoneId(1)), 0.8 - COST_CLAMP_EPSILON);
        assert_eq!(m.sub_cost(PhoneId(0), PhoneId(2)), 0.8 - COST_CLAMP_EPSILON);
        assert_eq!(m.sub_cost(PhoneId(1), PhoneId(2)), 0.5);
        assert_eq!(m.sub_cost(PhoneId(1), PhoneId(1)), 0.0);
    }

    #[test]
    fn default_tracking_respects_clamp() {
        // With I + D < 1 the 1.0 default itself gets clamped; entries that
        // land on the clamped default still read as default.
        let m = CostMatrix::from_fn(3, 0.4, 0.4, MatrixLabel::Acoustic, |i, j| {
            if (i, j) == (0, 1) {
                0.2
            } else {
                1.0
            }
        })
        .unwrap();
        assert_eq!(m.default_cost(), 0.8 - COST_CLAMP_EPSILON);
        assert!(!m.is_default(0, 1));
        assert!(m.is_default(1, 0));
        assert_eq!(m.non_default_count(), 1);
    }

    #[test]
    fn hard_matrix_shape() {
        let set = plain_set(65);
        let hard = make_hard_matrix(&set);
        assert_eq!(hard.dim() * hard.dim(), 4225);
        assert_eq!(hard.sub_cost(PhoneId(3), PhoneId(3)), 0.0);
        assert_eq!(hard.sub_cost(PhoneId(3), PhoneId(4)), 1.0);
        assert_eq!(hard.non_default_count(), 0);
    }

    #[test]
    fn traceback_all_matches() {
        let set = plain_set(4);
        let hard = make_hard_matrix(&set);
        let s = seq(&[0, 1, 2]);
        let a = align_sequences(&s, &s, &hard).unwrap();
        assert_eq!(a.total_cost, 0.0);
        assert_eq!(
            a.ops,
            vec![EditOp::Match(0, 0), EditOp::Match(1, 1), EditOp::Match(2, 2)]
        );
    }

    #[test]
    fn traceback_match_then_delete() {
        let set = plain_set(4);
        let hard = make_hard_matrix(&set);
        let a = align_sequences(&seq(&[0, 1]), &seq(&[0]), &hard).unwrap();
        assert_eq!(a.total_cost, 1.0);
        assert_eq!(a.ops, vec![EditOp::Match(0, 0), EditOp::Delete(1)]);
    }

    #[test]
    fn tsv_round_trip() {
        let set = plain_set(4);
        let m = CostMatrix::from_fn(4, 1.0, 1.0, MatrixLabel::Weighted, |i, j| {
            if (i + j) % 2 == 0 {
                0.25
            } else {
                1.0
            }
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        m.write_tsv(&path, &set).unwrap();
        let back = load_cost_matrix(&path, &set).unwrap();
        assert_eq!(back.insert_cost(), 1.0);
        assert_eq!(back.delete_cost(), 1.0);
        assert_eq!(back.label(), MatrixLabel::Weighted);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(
                    back.sub_cost(PhoneId(i), PhoneId(j)),
                    m.sub_cost(PhoneId(i), PhoneId(j))
                );
            }
        }
    }

    #[test]
    fn tsv_rejects_diagonal_rows() {
        let set = plain_set(2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        std::fs::write(&path, "#I=1\t#D=1\t#label=hard\np0\tp0\t0.5\n").unwrap();
        assert!(matches!(
            load_cost_matrix(&path, &set),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn tsv_unknown_phone_is_an_error() {
        let set = plain_set(2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        std::fs::write(&path, "#I=1\t#D=1\t#label=hard\np0\tzz\t0.5\n").unwrap();
        assert!(matches!(
            load_cost_matrix(&path, &set),
            Err(Error::UnknownPhone(_))
        ));
    }

    fn test_matrices() -> Vec<CostMatrix> {
        let asymmetric = CostMatrix::from_fn(4, 0.9, 1.1, MatrixLabel::Acoustic, |i, j| {
            0.1 + 0.17 * ((3 * i + j) % 7) as f64
        })
        .unwrap();
        let graded = CostMatrix::from_fn(4, 1.0, 1.0, MatrixLabel::Phonetic, |i, j| {
            0.25 * ((i + 2 * j) % 5) as f64
        })
        .unwrap();
        let set = plain_set(4);
        vec![make_hard_matrix(&set), graded, asymmetric]
    }

    #[test]
    fn matches_oracle_exhaustively_on_short_sequences() {
        let matrices = test_matrices();
        let mut sequences: Vec<Vec<PhoneId>> = vec![vec![]];
        for len in 1..=3 {
            let count = 4usize.pow(len);
            for code in 0..count {
                let mut s = Vec::with_capacity(len as usize);
                let mut c = code;
                for _ in 0..len {
                    s.push(PhoneId((c % 4) as u16));
                    c /= 4;
                }
                sequences.push(s);
            }
        }
        for m in &matrices {
            for a in &sequences {
                for b in &sequences {
                    let ra = PhoneSeq::new(a.clone());
                    let rb = PhoneSeq::new(b.clone());
                    let dp = weighted_edit_distance(&ra, &rb, m).unwrap();
                    let brute = oracle(a, b, m);
                    assert_eq!(dp, brute, "mismatch for {a:?} vs {b:?}");
                    let alignment = align_sequences(&ra, &rb, m).unwrap();
                    assert_eq!(alignment.total_cost, dp);
                    assert!(replay_ok(&alignment, &ra, &rb));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn oracle_agreement_on_random_pairs(
            a in proptest::collection::vec(0u16..4, 0..=6),
            b in proptest::collection::vec(0u16..4, 0..=6),
            which in 0usize..3,
        ) {
            let m = &test_matrices()[which];
            let ra = PhoneSeq::new(a.iter().map(|&i| PhoneId(i)).collect());
            let rb = PhoneSeq::new(b.iter().map(|&i| PhoneId(i)).collect());
            let dp = weighted_edit_distance(&ra, &rb, m).unwrap();
            prop_assert_eq!(dp, oracle(ra.as_slice(), rb.as_slice(), m));
        }

        #[test]
        fn distance_is_nonnegative_and_bounded(
            a in proptest::collection::vec(0u16..4, 0..=8),
            b in proptest::collection::vec(0u16..4, 0..=8),
            which in 0usize..3,
        ) {
            let m = &test_matrices()[which];
            let ra = PhoneSeq::new(a.iter().map(|&i| PhoneId(i)).collect());
            let rb = PhoneSeq::new(b.iter().map(|&i| PhoneId(i)).collect());
            let d = weighted_edit_distance(&ra, &rb, m).unwrap();
            prop_assert!(d >= 0.0);
            let bound = ra.len() as f64 * m.delete_cost() + rb.len() as f64 * m.insert_cost();
            prop_assert!(d <= bound + 1e-12);
            prop_assert_eq!(weighted_edit_distance(&ra, &ra, m).unwrap(), 0.0);
        }

        #[test]
        fn alignment_cost_equals_op_sum(
            a in proptest::collection::vec(0u16..4, 0..=8),
            b in proptest::collection::vec(0u16..4, 0..=8),
            which in 0usize..3,
        ) {
            let m = &test_matrices()[which];
            let ra = PhoneSeq::new(a.iter().map(|&i| PhoneId(i)).collect());
            let rb = PhoneSeq::new(b.iter().map(|&i| PhoneId(i)).collect());
            let alignment = align_sequences(&ra, &rb, m).unwrap();
            prop_assert!(replay_ok(&alignment, &ra, &rb));
            let mut sum = 0.0;
            for &op in &alignment.ops {
                sum += op_cost(op, &ra, &rb, m);
            }
            prop_assert_eq!(alignment.total_cost, sum);
            prop_assert_eq!(
                alignment.total_cost,
                weighted_edit_distance(&ra, &rb, m).unwrap()
            );
        }
    }
}
