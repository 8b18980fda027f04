//! Golden-file regression test: a fixed 100-utterance simulated corpus is
//! recovered and the full report stream is compared byte-for-byte against
//! the committed reference.
//!
//! The reference was produced by the first verified run and ten
//! utterances were reviewed by hand. Set `UPDATE_GOLDEN=1` to regenerate
//! after an intentional behavior change, and re-review.

use std::path::Path;

use oovrec_core::confusion::build_phonetic_matrix;
use oovrec_core::phoneset::{load_lexicon, load_phoneset};
use oovrec_core::recovery::{load_context, recover_utterance, write_reports, RecoveryConfig};
use oovrec_core::simulate::{generate_corpus, CorpusMode, CorruptionModel};

#[test]
fn hundred_utterance_corpus_matches_golden_report() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let set = load_phoneset(&data.join("phones.tsv"), &data.join("features.tsv")).unwrap();
    let lexicon = load_lexicon(&data.join("lexicon.tsv"), &set).unwrap();
    let context = load_context(&data.join("context.tsv"), &lexicon, &set, 16).unwrap();
    let phonetic = build_phonetic_matrix(&set, 1.0, 1.0).unwrap();

    let model = CorruptionModel::new(0.2, 0.05, 0.05, 2024).with_bias(phonetic.clone());
    let corpus =
        generate_corpus(&context, 100, &model, &lexicon, &set, CorpusMode::Sentence).unwrap();

    let cfg = RecoveryConfig::default();
    let reports: Vec<_> = corpus
        .utterances
        .iter()
        .map(|u| {
            recover_utterance(&u.normal, &u.oov, &corpus.context, &phonetic, &cfg, &lexicon)
                .unwrap()
        })
        .collect();
    let mut produced = Vec::new();
    write_reports(&mut produced, &reports).unwrap();

    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/recovery_100.jsonl");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden_path, &produced).unwrap();
        panic!("golden file regenerated; review it and rerun without UPDATE_GOLDEN");
    }
    let golden = std::fs::read(&golden_path).unwrap();
    assert_eq!(
        produced, golden,
        "recovery output drifted from the reviewed golden file"
    );
}
