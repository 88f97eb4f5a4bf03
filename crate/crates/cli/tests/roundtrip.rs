use genbound::row::{decode, encode};
use genbound::{Format, ParamValue, ResultRow};
use proptest::prelude::*;

fn float() -> impl Strategy<Value = f64> {
    prop_oneof![
        proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO,
        Just(f64::INFINITY),
        Just(f64::NEG_INFINITY),
        -10.0..10.0f64,
    ]
}

/// Identifiers that never read back as numbers.
fn ident() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,8}".prop_filter("number token", |s| s != "inf")
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Int,
    Float,
    Text,
}

fn value(kind: Kind) -> BoxedStrategy<ParamValue> {
    match kind {
        Kind::Int => any::<i64>().prop_map(ParamValue::Int).boxed(),
        Kind::Float => float().prop_map(ParamValue::Float).boxed(),
        Kind::Text => ident().prop_map(ParamValue::Text).boxed(),
    }
}

fn row(keys: Vec<(String, Kind)>) -> impl Strategy<Value = ResultRow> {
    let values: Vec<_> = keys.iter().map(|(_, k)| value(*k)).collect();
    (values, float(), float(), any::<bool>(), any::<u32>()).prop_map(move |(vals, measured, theoretical, pass, ms)| {
        ResultRow {
            experiment: "suite".into(),
            params: keys.iter().map(|(k, _)| k.clone()).zip(vals).collect(),
            measured,
            theoretical,
            pass,
            runtime_ms: ms as u64,
        }
    })
}

fn table() -> impl Strategy<Value = Vec<ResultRow>> {
    let kind = prop_oneof![Just(Kind::Int), Just(Kind::Float), Just(Kind::Text)];
    proptest::collection::vec(kind, 0..5)
        .prop_map(|kinds| kinds.into_iter().enumerate().map(|(i, k)| (format!("p{i}"), k)).collect::<Vec<_>>())
        .prop_flat_map(|keys| proptest::collection::vec(row(keys), 0..6))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn csv_round_trips(rows in table()) {
        let text = encode(&rows, Format::Csv).unwrap();
        prop_assert_eq!(decode(&text, Format::Csv).unwrap(), rows);
    }

    #[test]
    fn json_round_trips(rows in table()) {
        let text = encode(&rows, Format::Json).unwrap();
        prop_assert_eq!(decode(&text, Format::Json).unwrap(), rows);
    }

    #[test]
    fn encoding_is_a_pure_function(rows in table()) {
        for f in [Format::Csv, Format::Json] {
            let once = encode(&rows, f).unwrap();
            let again = encode(&decode(&once, f).unwrap(), f).unwrap();
            prop_assert_eq!(once, again);
        }
    }
}
