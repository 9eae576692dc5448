use std::collections::BTreeMap;
use std::io::Write;

use dynk_core::profile::{LoadError, ValidationError};
use dynk_core::synth::{self, SynthConfig};
use dynk_core::{
    load_corpus, read_corpus, AttributionInstance, Corpus, IngestMode, InstanceRecord,
};
use proptest::prelude::*;

#[test]
fn load_from_file_reports_checksum_and_skips() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, r#"{{"id":"a","tokens":["x","y"],"attributions":{{"m":[0.1,0.2]}},"gold_label":"entailment"}}"#).unwrap();
    writeln!(
        file,
        r#"{{"id":"b","tokens":["x","y"],"attributions":{{"m":[0.1]}}}}"#
    )
    .unwrap();
    writeln!(file).unwrap();
    writeln!(
        file,
        r#"{{"id":"c","tokens":["z"],"attributions":{{"m":[1]}},"human":[[1],[0],[1]]}}"#
    )
    .unwrap();
    file.flush().unwrap();

    match load_corpus(file.path(), IngestMode::Strict) {
        Err(LoadError::Invalid {
            line: 2,
            id,
            error: ValidationError::LengthMismatch { .. },
        }) => {
            assert_eq!(id, "b")
        }
        other => panic!("unexpected {other:?}"),
    }
    let loaded = load_corpus(file.path(), IngestMode::Lenient).unwrap();
    assert_eq!(loaded.corpus.len(), 2);
    assert_eq!(loaded.skip_count(), 1);
    assert_eq!(
        loaded.corpus.instances()[0].gold_label(),
        Some("entailment")
    );
    assert_eq!(loaded.corpus.annotated_count(), 1);

    let again = load_corpus(file.path(), IngestMode::Lenient).unwrap();
    assert_eq!(again.corpus, loaded.corpus);
    assert_eq!(again.checksum, loaded.checksum);
}

#[test]
fn synthetic_corpus_round_trips_through_jsonl() {
    let corpus = synth::generate(&SynthConfig {
        instances: 40,
        ..SynthConfig::default()
    });
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf).unwrap();
    let loaded = read_corpus(buf.as_slice(), IngestMode::Strict).unwrap();
    assert_eq!(loaded.corpus, corpus);
    let mut again = Vec::new();
    loaded.corpus.write_jsonl(&mut again).unwrap();
    assert_eq!(again, buf);
}

fn record_strategy() -> impl Strategy<Value = InstanceRecord> {
    (1usize..8, 1usize..4).prop_flat_map(|(n, methods)| {
        let scores = prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, n);
        let attributions = prop::collection::vec(scores, methods).prop_map(|vs| {
            vs.into_iter()
                .enumerate()
                .map(|(i, v)| (format!("method {i}"), v))
                .collect::<BTreeMap<_, _>>()
        });
        let human = prop::option::of(prop::collection::vec(
            prop::collection::vec(0u8..=1, n),
            1..4,
        ));
        (
            "[a-z0-9 \"\\\\]{0,6}",
            prop::collection::vec(".{0,4}", n),
            attributions,
            human,
            prop::option::of("[a-z]{1,8}"),
        )
            .prop_map(
                |(id, tokens, attributions, human, gold_label)| InstanceRecord {
                    id,
                    tokens,
                    attributions,
                    human,
                    gold_label,
                    predicted_label: None,
                },
            )
    })
}

proptest! {
    #[test]
    fn any_valid_record_round_trips(record in record_strategy()) {
        let instance = AttributionInstance::try_from(record).unwrap();
        let corpus = Corpus::new(vec![instance]).unwrap();
        let mut buf = Vec::new();
        corpus.write_jsonl(&mut buf).unwrap();
        let loaded = read_corpus(buf.as_slice(), IngestMode::Strict).unwrap();
        prop_assert_eq!(loaded.corpus, corpus);
    }
}
