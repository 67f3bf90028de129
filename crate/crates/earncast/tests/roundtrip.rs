use earncast::artifacts::{model_from_text, model_to_text};
use earncast::io::{read_consensus, read_meta, read_panel, read_schema, write_consensus, write_meta, write_panel, write_schema};
use earncast_core::gbdt::{bin_features, fit, HyperParams};
use earncast_core::linalg::Matrix;
use earncast_core::panel::Denominators;
use earncast_core::synth::{generate_panel, SignalSpec};
use proptest::prelude::*;

fn spec(seed: u64) -> SignalSpec {
    SignalSpec {
        n_companies: 12,
        n_quarters: 30,
        missing_rate: 0.2,
        seed,
        ..SignalSpec::default()
    }
}

#[test]
fn synthetic_panel_survives_csv() {
    let s = generate_panel(&spec(1)).unwrap();
    let mut buf = Vec::new();
    write_schema(&mut buf, s.panel.schema()).unwrap();
    let schema = read_schema(buf.as_slice(), "schema.csv", &Denominators::default()).unwrap();
    assert_eq!(schema, s.panel.schema());

    let mut buf = Vec::new();
    write_panel(&mut buf, &s.panel).unwrap();
    let panel = read_panel(buf.as_slice(), "panel.csv", schema).unwrap();
    assert_eq!(panel.keys(), s.panel.keys());
    assert_eq!(panel.columns(), s.panel.columns());

    let mut buf = Vec::new();
    write_meta(&mut buf, s.panel.meta()).unwrap();
    assert_eq!(&read_meta(buf.as_slice(), "meta.csv").unwrap(), s.panel.meta());

    let mut buf = Vec::new();
    write_consensus(&mut buf, &s.consensus).unwrap();
    assert_eq!(read_consensus(buf.as_slice(), "consensus.csv").unwrap(), s.consensus);
}

fn model(seed: u64, rows: usize) -> (earncast_core::gbdt::GbdtModel, Matrix) {
    let s = generate_panel(&spec(seed)).unwrap();
    let data: Vec<f64> = s.panel.columns()[..4]
        .iter()
        .flat_map(|c| c[..rows].iter().map(|v| v.unwrap_or(f64::NAN)))
        .collect();
    let x = Matrix::from_row_major(4, rows, data).unwrap().transpose();
    let labels: Vec<u32> = (0..rows).map(|i| (s.target[i] * 1000.0) as u32 % 3).collect();
    let binned = bin_features(&x, 16).unwrap();
    let params = HyperParams {
        n_rounds: 5,
        num_leaves: 4,
        min_data_in_leaf: 3,
        early_stopping_rounds: None,
        ..HyperParams::default()
    };
    (fit(&binned, &labels, 3, &params).unwrap(), x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn model_text_round_trips(seed in 0u64..1000, rows in 30usize..200) {
        let (m, x) = model(seed, rows);
        let text = model_to_text(&m);
        let back = model_from_text(&text).unwrap();
        prop_assert_eq!(model_to_text(&back), text);
        prop_assert_eq!(back.predict_proba_dense(&x).unwrap(), m.predict_proba_dense(&x).unwrap());
    }
}

#[test]
fn truncated_model_text_rejected() {
    let (m, _) = model(3, 80);
    let text = model_to_text(&m);
    let cut: String = text.lines().take(text.lines().count() / 2).collect::<Vec<_>>().join("\n");
    assert!(model_from_text(&cut).is_err());
    assert!(model_from_text("not a model").is_err());
}
