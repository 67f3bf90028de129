use earncast_core::features::quantile_classes;
use earncast_core::gbdt::{bin_features, fit, HyperParams};
use earncast_core::linalg::Matrix;
use earncast_core::rollcast::{enumerate_subsets, prepare, run_subset, BacktestConfig, SearchConfig, ValidationConfig};
use earncast_core::synth::{generate_panel, SignalSpec};
use earncast_core::tuner::no_clock;
use earncast_core::CalendarQuarter;
use proptest::prelude::*;

fn small_config() -> BacktestConfig {
    BacktestConfig {
        train_len: 20,
        n_lags: 4,
        standardize: true,
        validation: ValidationConfig { size: 3, ..Default::default() },
        search: SearchConfig { budget: 2, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn later_quarters_never_reach_a_subset() {
    let spec = SignalSpec { n_companies: 40, n_quarters: 30, seed: 8, ..Default::default() };
    let s = generate_panel(&spec).unwrap();
    let cfg = small_config();
    let data = prepare(&s.panel, None, &cfg).unwrap();
    let split = enumerate_subsets(&data.quarters(), cfg.train_len).unwrap()[2].clone();
    let full = run_subset(&split, &data, &cfg, &no_clock).unwrap();

    // The test quarter's label needs one more quarter; nothing beyond it.
    let cut = s.panel.truncate_after(split.test_quarter.succ());
    let data_cut = prepare(&cut, None, &cfg).unwrap();
    let short = run_subset(&split, &data_cut, &cfg, &no_clock).unwrap();
    assert_eq!(short.predictions, full.predictions);
    assert_eq!(short.metrics, full.metrics);
    assert_eq!(short.tuned, full.tuned);
}

proptest! {
    #[test]
    fn quantile_classes_balanced_and_ordered(values in proptest::collection::vec(-1e3f64..1e3, 1..200), k in 2u32..6) {
        let ids: Vec<String> = (0..values.len()).map(|i| format!("c{i:03}")).collect();
        let entries: Vec<(f64, &str)> = values.iter().zip(&ids).map(|(v, id)| (*v, id.as_str())).collect();
        let classes = quantile_classes(&entries, k);
        let mut counts = vec![0usize; k as usize];
        for c in &classes {
            counts[*c as usize] += 1;
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        prop_assert!(hi - lo <= 1 || values.len() < k as usize);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] < values[j] {
                    prop_assert!(classes[i] <= classes[j]);
                }
            }
        }
    }

    #[test]
    fn subset_count_is_history_minus_window(n in 1usize..160, train_len in 1usize..100) {
        let start = CalendarQuarter::new(1980, 1).unwrap();
        let quarters: Vec<CalendarQuarter> = (0..n as i64).map(|k| start.offset(k)).collect();
        match enumerate_subsets(&quarters, train_len) {
            Ok(s) => {
                prop_assert_eq!(s.len(), n - train_len);
                prop_assert!(s.iter().all(|x| x.train_quarters.len() == train_len));
            }
            Err(_) => prop_assert!(n <= train_len),
        }
    }

    #[test]
    fn probabilities_sum_to_one(seed in 0u64..500, k in 2usize..5) {
        let n = 60;
        let data: Vec<f64> = (0..n * 2).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0).collect();
        let x = Matrix::from_row_major(n, 2, data).unwrap();
        let labels: Vec<u32> = (0..n).map(|i| ((x[(i, 0)] * k as f64) as u32).min(k as u32 - 1)).collect();
        let params = HyperParams { n_rounds: 5, num_leaves: 4, min_data_in_leaf: 2, early_stopping_rounds: None, ..Default::default() };
        let model = fit(&bin_features(&x, 16).unwrap(), &labels, k, &params).unwrap();
        let p = model.predict_proba_dense(&x).unwrap();
        for r in 0..n {
            let sum: f64 = p.row(r).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(p.row(r).iter().all(|v| *v >= 0.0));
        }
    }
}
