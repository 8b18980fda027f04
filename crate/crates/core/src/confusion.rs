//! Substitution-cost matrix construction.
//!
//! Four non-trivial matrices share the [`CostMatrix`] representation:
//!
//! * phonetic — cosine distance between articulatory feature vectors;
//! * acoustic — decoder error statistics per reference phone,
//!   `(1 - N_C/(N_C+N_S))^4`, applied to each observed substitution
//!   partner of phones with more than `min_substitutions` substitutions;
//! * append — acoustic entries where present, phonetic everywhere else;
//! * weighted — a convex blend of the two on acoustic-covered pairs.
//!
//! The statistics come from aligning reference/hypothesis phone pairs
//! under the hard matrix and tallying per-phone match, substitution,
//! deletion, and insertion counts.

use std::path::Path;

use crate::align::{align_sequences, make_hard_matrix, CostMatrix, EditOp, MatrixLabel};
use crate::phoneset::{PhoneId, PhoneSeq, PhoneSet};
use crate::{Error, Result};

/// Per-phone decoder statistics harvested from aligned phone sequences.
///
/// Pair counts are ordered `(reference, hypothesis)`. Insertions are
/// tracked per hypothesis phone but play no part in the acoustic cost;
/// only correct hypotheses and substitutions feed the formula.
#[derive(Clone, Debug)]
pub struct PhoneStats {
    dim: usize,
    correct: Vec<u64>,
    substituted: Vec<u64>,
    deleted: Vec<u64>,
    inserted: Vec<u64>,
    pairs: Vec<u64>,
}

impl PhoneStats {
    pub fn new(dim: usize) -> Self {
        PhoneStats {
            dim,
            correct: vec![0; dim],
            substituted: vec![0; dim],
            deleted: vec![0; dim],
            inserted: vec![0; dim],
            pairs: vec![0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N_C`: times the reference phone was recognized correctly.
    pub fn correct(&self, p: PhoneId) -> u64 {
        self.correct[p.idx()]
    }

    /// `N_S`: times the reference phone was substituted.
    pub fn substituted(&self, p: PhoneId) -> u64 {
        self.substituted[p.idx()]
    }

    pub fn deleted(&self, p: PhoneId) -> u64 {
        self.deleted[p.idx()]
    }

    pub fn inserted(&self, p: PhoneId) -> u64 {
        self.inserted[p.idx()]
    }

    /// Count of the ordered substitution `(reference, hypothesis)`.
    pub fn pair(&self, r: PhoneId, h: PhoneId) -> u64 {
        self.pairs[r.idx() * self.dim + h.idx()]
    }

    /// Associative merge, so harvesting can fan out and combine.
    pub fn merge(&mut self, other: &PhoneStats) {
        assert_eq!(self.dim, other.dim, "stats dimensions must match");
        for (a, b) in self.correct.iter_mut().zip(&other.correct) {
            *a += b;
        }
        for (a, b) in self.substituted.iter_mut().zip(&other.substituted) {
            *a += b;
        }
        for (a, b) in self.deleted.iter_mut().zip(&other.deleted) {
            *a += b;
        }
        for (a, b) in self.inserted.iter_mut().zip(&other.inserted) {
            *a += b;
        }
        for (a, b) in self.pairs.iter_mut().zip(&other.pairs) {
            *a += b;
        }
    }
}

/// Knobs for the acoustic cost and the ensembles.
#[derive(Clone, Copy, Debug)]
pub struct SimilarityConfig {
    /// A reference phone qualifies only with strictly more substitutions
    /// than this.
    pub min_substitutions: u64,
    /// Exponent applied to the error ratio to spread values over `[0,1]`.
    pub exponent: u32,
    /// Acoustic share in the weighted ensemble.
    pub ensemble_weight: f64,
    /// Price each pair by its own substitution mass instead of the
    /// reference phone's total. Off by default; the per-phone form is the
    /// primary definition.
    pub per_pair: bool,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            min_substitutions: 100,
            exponent: 4,
            ensemble_weight: 0.5,
            per_pair: false,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.exponent < 1 {
            return Err(Error::InvalidConfig("exponent must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.ensemble_weight) {
            return Err(Error::InvalidConfig(format!(
                "ensemble weight {} must lie in [0,1]",
                self.ensemble_weight
            )));
        }
        Ok(())
    }
}

/// Cosine-distance matrix over the phone set's feature vectors:
/// `1 - (f_i . f_j) / (|f_i| |f_j|)` off the diagonal. Symmetric by
/// construction.
pub fn build_phonetic_matrix(
    phoneset: &PhoneSet,
    insert_cost: f64,
    delete_cost: f64,
) -> Result<CostMatrix> {
    let n = phoneset.len();
    let norms: Vec<f64> = (0..n)
        .map(|i| {
            phoneset
                .features(PhoneId(i as u16))
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    CostMatrix::from_fn(n, insert_cost, delete_cost, MatrixLabel::Phonetic, |i, j| {
        let fi = phoneset.features(PhoneId(i as u16));
        let fj = phoneset.features(PhoneId(j as u16));
        if fi == fj {
            // Equal vectors have cosine 1 by definition; skip the rounding.
            return 0.0;
        }
        let dot: f64 = fi.iter().zip(fj).map(|(a, b)| a * b).sum();
        (1.0 - dot / (norms[i] * norms[j])).max(0.0)
    })
}

/// Align each `(reference, hypothesis)` pair under the hard matrix and
/// tally per-phone statistics. An empty input yields empty stats.
pub fn harvest_phone_stats(
    pairs: &[(PhoneSeq, PhoneSeq)],
    phoneset: &PhoneSet,
) -> Result<PhoneStats> {
    let hard = make_hard_matrix(phoneset);
    let mut stats = PhoneStats::new(phoneset.len());
    for (reference, hypothesis) in pairs {
        let alignment = align_sequences(reference, hypothesis, &hard)?;
        for op in &alignment.ops {
            match *op {
                EditOp::Match(i, _) => {
                    stats.correct[reference.as_slice()[i].idx()] += 1;
                }
                EditOp::Substitute(i, j) => {
                    let r = reference.as_slice()[i].idx();
                    let h = hypothesis.as_slice()[j].idx();
                    stats.substituted[r] += 1;
                    stats.pairs[r * stats.dim + h] += 1;
                }
                EditOp::Delete(i) => {
                    stats.deleted[reference.as_slice()[i].idx()] += 1;
                }
                EditOp::Insert(j) => {
                    stats.inserted[hypothesis.as_slice()[j].idx()] += 1;
                }
            }
        }
    }
    Ok(stats)
}

/// Error-statistics matrix. For each qualifying reference phone the base
/// cost `(1 - N_C/(N_C+N_S))^exponent` is assigned to every observed
/// substitution partner; all other pairs keep the hard default of 1.
pub fn build_acoustic_matrix(
    stats: &PhoneStats,
    cfg: &SimilarityConfig,
    phoneset: &PhoneSet,
    insert_cost: f64,
    delete_cost: f64,
) -> Result<CostMatrix> {
    cfg.validate()?;
    if stats.dim() != phoneset.len() {
        return Err(Error::DimensionMismatch(stats.dim(), phoneset.len()));
    }
    let n = phoneset.len();
    CostMatrix::from_fn(n, insert_cost, delete_cost, MatrixLabel::Acoustic, |i, j| {
        let p = PhoneId(i as u16);
        let q = PhoneId(j as u16);
        if stats.substituted(p) <= cfg.min_substitutions || stats.pair(p, q) == 0 {
            return 1.0;
        }
        let n_c = stats.correct(p) as f64;
        let n_s = if cfg.per_pair {
            stats.pair(p, q) as f64
        } else {
            stats.substituted(p) as f64
        };
        (1.0 - n_c / (n_c + n_s)).powi(cfg.exponent as i32)
    })
}

fn check_ensemble_inputs(acoustic: &CostMatrix, phonetic: &CostMatrix) -> Result<()> {
    if acoustic.dim() != phonetic.dim() {
        return Err(Error::DimensionMismatch(acoustic.dim(), phonetic.dim()));
    }
    if acoustic.insert_cost() != phonetic.insert_cost()
        || acoustic.delete_cost() != phonetic.delete_cost()
    {
        return Err(Error::InvalidCosts(
            "ensemble inputs must share insert and delete costs".into(),
        ));
    }
    Ok(())
}

/// Keep acoustic entries where the acoustic pass produced one; fill every
/// remaining off-diagonal pair from the phonetic matrix.
pub fn build_append_matrix(acoustic: &CostMatrix, phonetic: &CostMatrix) -> Result<CostMatrix> {
    check_ensemble_inputs(acoustic, phonetic)?;
    CostMatrix::from_fn(
        acoustic.dim(),
        acoustic.insert_cost(),
        acoustic.delete_cost(),
        MatrixLabel::Append,
        |i, j| {
            if acoustic.is_default(i, j) {
                phonetic.sub_cost(PhoneId(i as u16), PhoneId(j as u16))
            } else {
                acoustic.sub_cost(PhoneId(i as u16), PhoneId(j as u16))
            }
        },
    )
}

/// Blend the two matrices on acoustic-covered pairs,
/// `w * acoustic + (1-w) * phonetic`, and fall back to phonetic elsewhere.
pub fn build_weighted_matrix(
    acoustic: &CostMatrix,
    phonetic: &CostMatrix,
    w: f64,
) -> Result<CostMatrix> {
    check_ensemble_inputs(acoustic, phonetic)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidConfig(format!(
            "ensemble weight {w} must lie in [0,1]"
        )));
    }
    CostMatrix::from_fn(
        acoustic.dim(),
        acoustic.insert_cost(),
        acoustic.delete_cost(),
        MatrixLabel::Weighted,
        |i, j| {
            let p = phonetic.sub_cost(PhoneId(i as u16), PhoneId(j as u16));
            if acoustic.is_default(i, j) {
                p
            } else {
                w * acoustic.sub_cost(PhoneId(i as u16), PhoneId(j as u16)) + (1.0 - w) * p
            }
        },
    )
}

/// Read `utt_id<TAB>ref phones<TAB>hyp phones` records for harvesting.
pub fn load_phone_pairs(
    path: &Path,
    phoneset: &PhoneSet,
) -> Result<Vec<(String, PhoneSeq, PhoneSeq)>> {
    let file_name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                &file_name,
                lineno + 1,
                "expected utt_id<TAB>ref phones<TAB>hyp phones",
            ));
        }
        let reference = phoneset.parse_seq(fields[1])?;
        let hypothesis = phoneset.parse_seq(fields[2])?;
        out.push((fields[0].to_string(), reference, hypothesis));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn feature_set(features: Vec<Vec<f64>>) -> PhoneSet {
        let dim = features[0].len();
        let symbols = (0..features.len()).map(|i| format!("p{i}")).collect();
        let names = (0..dim).map(|i| format!("f{i}")).collect();
        PhoneSet::new(symbols, names, features).unwrap()
    }

    fn abcd_set() -> PhoneSet {
        PhoneSet::new(
            ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect(),
            vec!["f".into()],
            vec![vec![1.0]; 4],
        )
        .unwrap()
    }

    #[allow(clippy::type_complexity)]
    fn stats_with(dim: usize, entries: &[(u16, u64, u64, Vec<(u16, u64)>)]) -> PhoneStats {
        let mut stats = PhoneStats::new(dim);
        for (p, n_c, n_s, pairs) in entries {
            stats.correct[*p as usize] = *n_c;
            stats.substituted[*p as usize] = *n_s;
            for (q, count) in pairs {
                stats.pairs[*p as usize * dim + *q as usize] = *count;
            }
        }
        stats
    }

    #[test]
    fn phonetic_identical_vectors_cost_zero() {
        let set = feature_set(vec![vec![1.0, 0.5], vec![1.0, 0.5]]);
        let m = build_phonetic_matrix(&set, 1.0, 1.0).unwrap();
        assert_eq!(m.sub_cost(PhoneId(0), PhoneId(1)), 0.0);
    }

    #[test]
    fn phonetic_orthogonal_vectors_cost_one() {
        let set = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let m = build_phonetic_matrix(&set, 1.0, 1.0).unwrap();
        assert_eq!(m.sub_cost(PhoneId(0), PhoneId(1)), 1.0);
    }

    #[test]
    fn phonetic_cosine_spot_value() {
        let set = feature_set(vec![vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]);
        let m = build_phonetic_matrix(&set, 1.0, 1.0).unwrap();
        let expected = 1.0 - 1.0 / 2.0_f64.sqrt();
        assert!((m.sub_cost(PhoneId(0), PhoneId(1)) - expected).abs() < 1e-15);
    }

    #[test]
    fn acoustic_spot_values() {
        let set = abcd_set();
        let cfg = SimilarityConfig::default();
        let stats = stats_with(
            4,
            &[
                (0, 101, 101, vec![(1, 101)]), // (1 - 0.5)^4
                (2, 0, 200, vec![(3, 200)]),   // fully confusable
            ],
        );
        let m = build_acoustic_matrix(&stats, &cfg, &set, 1.0, 1.0).unwrap();
        assert_eq!(m.sub_cost(PhoneId(0), PhoneId(1)), 0.0625);
        assert_eq!(m.sub_cost(PhoneId(2), PhoneId(3)), 1.0);
        // Unobserved partner of a qualified phone stays at the default.
        assert_eq!(m.sub_cost(PhoneId(0), PhoneId(2)), 1.0);
    }

    #[test]
    fn acoustic_threshold_is_strict() {
        let set = abcd_set();
        let cfg = SimilarityConfig::default();
        // Exactly 100 substitutions: not qualified (needs > 100).
        let at_threshold = stats_with(4, &[(0, 50, 100, vec![(1, 100)])]);
        let m = build_acoustic_matrix(&at_threshold, &cfg, &set, 1.0, 1.0).unwrap();
        assert_eq!(m.sub_cost(PhoneId(0), PhoneId(1)), 1.0);
        assert_eq!(m.non_default_count(), 0);

        let above = stats_with(4, &[(0, 50, 101, vec![(1, 101)])]);
        let m = build_acoustic_matrix(&above, &cfg, &set, 1.0, 1.0).unwrap();
        assert!(m.sub_cost(PhoneId(0), PhoneId(1)) < 1.0);
    }

    #[test]
    fn acoustic_never_substituted_phone_stays_default() {
        let set = abcd_set();
        let cfg = SimilarityConfig::default();
        let stats = stats_with(4, &[(0, 300, 0, vec![])]);
        let m = build_acoustic_matrix(&stats, &cfg, &set, 1.0, 1.0).unwrap();
        assert_eq!(m.non_default_count(), 0);
    }

    #[test]
    fn acoustic_base_is_monotone_in_accuracy() {
        let set = abcd_set();
        let cfg = SimilarityConfig::default();
        let mut last = f64::INFINITY;
        for n_c in [0u64, 50, 101, 500, 5000] {
            let stats = stats_with(4, &[(0, n_c, 101, vec![(1, 101)])]);
            let m = build_acoustic_matrix(&stats, &cfg, &set, 1.0, 1.0).unwrap();
            let cost = m.sub_cost(PhoneId(0), PhoneId(1));
            assert!((0.0..=1.0).contains(&cost));
            assert!(cost < last);
            last = cost;
        }
    }

    #[test]
    fn per_pair_mode_prices_pairs_individually() {
        let set = abcd_set();
        let cfg = SimilarityConfig {
            per_pair: true,
            ..SimilarityConfig::default()
        };
        let stats = stats_with(4, &[(0, 101, 202, vec![(1, 101), (2, 101)])]);
        let m = build_acoustic_matrix(&stats, &cfg, &set, 1.0, 1.0).unwrap();
        // Each pair carries 101 of the 202 substitutions.
        assert_eq!(m.sub_cost(PhoneId(0), PhoneId(1)), 0.0625);
        assert_eq!(m.sub_cost(PhoneId(0), PhoneId(2)), 0.0625);
    }

    #[test]
    fn hand_tallied_harvest_fixture() {
        let set = abcd_set();
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/fixtures/phonepairs_hand.tsv");
        let records = load_phone_pairs(&path, &set).unwrap();
        assert_eq!(records.len(), 10);
        let pairs: Vec<(PhoneSeq, PhoneSeq)> =
            records.into_iter().map(|(_, r, h)| (r, h)).collect();
        let stats = harvest_phone_stats(&pairs, &set).unwrap();

        let [a, b, c, d] = [PhoneId(0), PhoneId(1), PhoneId(2), PhoneId(3)];
        assert_eq!(
            [stats.correct(a), stats.correct(b), stats.correct(c), stats.correct(d)],
            [5, 2, 2, 2]
        );
        assert_eq!(
            [
                stats.substituted(a),
                stats.substituted(b),
                stats.substituted(c),
                stats.substituted(d)
            ],
            [1, 2, 1, 0]
        );
        assert_eq!(
            [stats.deleted(a), stats.deleted(b), stats.deleted(c), stats.deleted(d)],
            [0, 1, 0, 1]
        );
        assert_eq!(
            [stats.inserted(a), stats.inserted(b), stats.inserted(c), stats.inserted(d)],
            [1, 0, 1, 0]
        );
        assert_eq!(stats.pair(a, b), 1);
        assert_eq!(stats.pair(c, d), 1);
        assert_eq!(stats.pair(b, d), 1);
        assert_eq!(stats.pair(b, a), 1);
    }

    #[test]
    fn merged_halves_equal_a_single_harvest() {
        let set = abcd_set();
        let pairs: Vec<(PhoneSeq, PhoneSeq)> = [
            ("a a b", "a b b"),
            ("c d", "c"),
            ("b", "b c d"),
            ("d a", "a a"),
        ]
        .iter()
        .map(|(r, h)| (set.parse_seq(r).unwrap(), set.parse_seq(h).unwrap()))
        .collect();
        let whole = harvest_phone_stats(&pairs, &set).unwrap();
        let mut merged = harvest_phone_stats(&pairs[..2], &set).unwrap();
        merged.merge(&harvest_phone_stats(&pairs[2..], &set).unwrap());
        for p in (0..4).map(PhoneId) {
            assert_eq!(merged.correct(p), whole.correct(p));
            assert_eq!(merged.substituted(p), whole.substituted(p));
            assert_eq!(merged.deleted(p), whole.deleted(p));
            assert_eq!(merged.inserted(p), whole.inserted(p));
            for q in (0..4).map(PhoneId) {
                assert_eq!(merged.pair(p, q), whole.pair(p, q));
            }
        }
    }

    #[test]
    fn harvest_trivial_cases() {
        let set = abcd_set();
        let same = set.parse_seq("a a b").unwrap();
        let stats = harvest_phone_stats(&[(same.clone(), same)], &set).unwrap();
        assert_eq!(stats.correct(PhoneId(0)), 2);
        assert_eq!(stats.correct(PhoneId(1)), 1);
        assert_eq!(stats.substituted(PhoneId(0)), 0);

        let stats = harvest_phone_stats(
            &[(set.parse_seq("a").unwrap(), set.parse_seq("b").unwrap())],
            &set,
        )
        .unwrap();
        assert_eq!(stats.substituted(PhoneId(0)), 1);
        assert_eq!(stats.pair(PhoneId(0), PhoneId(1)), 1);

        let empty = harvest_phone_stats(&[], &set).unwrap();
        assert_eq!(empty.correct(PhoneId(0)), 0);
    }

    #[test]
    fn append_prefers_acoustic_where_defined() {
        let set = feature_set(vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let phonetic = build_phonetic_matrix(&set, 1.0, 1.0).unwrap();
        let stats = stats_with(3, &[(0, 101, 101, vec![(1, 101)])]);
        let acoustic =
            build_acoustic_matrix(&stats, &SimilarityConfig::default(), &set, 1.0, 1.0).unwrap();
        let append = build_append_matrix(&acoustic, &phonetic).unwrap();
        assert_eq!(append.sub_cost(PhoneId(0), PhoneId(1)), 0.0625);
        // Everything the acoustic pass left alone comes from phonetic.
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != (0, 1) {
                    assert_eq!(
                        append.sub_cost(PhoneId(i), PhoneId(j)),
                        phonetic.sub_cost(PhoneId(i), PhoneId(j))
                    );
                }
            }
        }
    }

    #[test]
    fn append_of_empty_acoustic_is_phonetic() {
        let set = feature_set(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]);
        let phonetic = build_phonetic_matrix(&set, 1.0, 1.0).unwrap();
        let acoustic = build_acoustic_matrix(
            &PhoneStats::new(3),
            &SimilarityConfig::default(),
            &set,
            1.0,
            1.0,
        )
        .unwrap();
        let append = build_append_matrix(&acoustic, &phonetic).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(
                    append.sub_cost(PhoneId(i), PhoneId(j)),
                    phonetic.sub_cost(PhoneId(i), PhoneId(j))
                );
            }
        }
    }

    #[test]
    fn weighted_blends_and_degenerates() {
        let set = feature_set(vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let phonetic = build_phonetic_matrix(&set, 1.0, 1.0).unwrap();
        let stats = stats_with(3, &[(0, 101, 101, vec![(1, 101)])]);
        let acoustic =
            build_acoustic_matrix(&stats, &SimilarityConfig::default(), &set, 1.0, 1.0).unwrap();

        let half = build_weighted_matrix(&acoustic, &phonetic, 0.5).unwrap();
        // Mean of the acoustic 0.0625 and the phonetic 1 - 1/sqrt(2),
        // worked out independently: 0.17769660940672627.
        let blended = half.sub_cost(PhoneId(0), PhoneId(1));
        assert!((blended - 0.17769660940672627).abs() < 1e-15);
        assert_eq!(
            blended,
            0.5 * 0.0625 + 0.5 * phonetic.sub_cost(PhoneId(0), PhoneId(1))
        );

        let zero = build_weighted_matrix(&acoustic, &phonetic, 0.0).unwrap();
        let one = build_weighted_matrix(&acoustic, &phonetic, 1.0).unwrap();
        let append = build_append_matrix(&acoustic, &phonetic).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(
                    zero.sub_cost(PhoneId(i), PhoneId(j)),
                    phonetic.sub_cost(PhoneId(i), PhoneId(j))
                );
                assert_eq!(
                    one.sub_cost(PhoneId(i), PhoneId(j)),
                    append.sub_cost(PhoneId(i), PhoneId(j))
                );
            }
        }
    }

    #[test]
    fn weighted_rejects_bad_weight() {
        let set = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let phonetic = build_phonetic_matrix(&set, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_weighted_matrix(&phonetic, &phonetic, 1.5),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn ensembles_reject_mismatched_inputs() {
        let set2 = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let set3 = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let a = build_phonetic_matrix(&set2, 1.0, 1.0).unwrap();
        let b = build_phonetic_matrix(&set3, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_append_matrix(&a, &b),
            Err(Error::DimensionMismatch(2, 3))
        ));
        let c = build_phonetic_matrix(&set2, 2.0, 1.0).unwrap();
        assert!(matches!(
            build_append_matrix(&a, &c),
            Err(Error::InvalidCosts(_))
        ));
    }

    proptest! {
        #[test]
        fn phonetic_matrix_is_symmetric_and_bounded(
            rows in proptest::collection::vec(
                proptest::collection::vec(0.0f64..=1.0, 4),
                2..6
            )
        ) {
            // Ensure no zero vectors.
            let rows: Vec<Vec<f64>> = rows
                .into_iter()
                .map(|mut r| {
                    if r.iter().all(|&v| v == 0.0) {
                        r[0] = 1.0;
                    }
                    r
                })
                .collect();
            let n = rows.len();
            let set = feature_set(rows);
            let m = build_phonetic_matrix(&set, 1.0, 1.0).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let c = m.sub_cost(PhoneId(i as u16), PhoneId(j as u16));
                    prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
                    prop_assert_eq!(c, m.sub_cost(PhoneId(j as u16), PhoneId(i as u16)));
                }
            }
        }

        #[test]
        fn pair_counts_sum_to_substitutions(
            pairs in proptest::collection::vec(
                (
                    proptest::collection::vec(0u16..4, 0..=6),
                    proptest::collection::vec(0u16..4, 0..=6),
                ),
                0..20
            )
        ) {
            let set = abcd_set();
            let seqs: Vec<(PhoneSeq, PhoneSeq)> = pairs
                .into_iter()
                .map(|(r, h)| {
                    (
                        PhoneSeq::new(r.into_iter().map(PhoneId).collect()),
                        PhoneSeq::new(h.into_iter().map(PhoneId).collect()),
                    )
                })
                .collect();
            let stats = harvest_phone_stats(&seqs, &set).unwrap();
            let total_ref: u64 = seqs.iter().map(|(r, _)| r.len() as u64).sum();
            let mut accounted = 0;
            for p in 0..4u16 {
                let p = PhoneId(p);
                let from_pairs: u64 = (0..4u16).map(|q| stats.pair(p, PhoneId(q))).sum();
                prop_assert_eq!(from_pairs, stats.substituted(p));
                accounted += stats.correct(p) + stats.substituted(p) + stats.deleted(p);
            }
            // Every reference phone is matched, substituted, or deleted.
            prop_assert_eq!(accounted, total_ref);
        }
    }
}
