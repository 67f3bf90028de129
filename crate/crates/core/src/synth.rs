//! Seeded synthetic panels with a planted, recoverable earnings signal.
//!
//! Per company `c` and quarter `t`:
//!
//! ```text
//! ln A[t]    = ln A[t-1] + drift + asset_sd * e
//! z_j[t]     = phi * z_j[t-1] + sqrt(1 - phi^2) * e            (one per driver)
//! D_j[t]     = A[t] * (DRIVER_BASE + DRIVER_SCALE * z_j[t])
//! u[t]       = psi * u[t-1] + sum_j beta_j * z_j[t-1] + noise_sd * e
//! NI[t]/A[t] = m_c + u[t] + amp * S[(t + phase_c) mod 4]
//! ```
//!
//! `S` is a zero-mean, unit-variance period-4 pattern. Distractor variables
//! follow the driver recipe with their own `z` but never enter net income.
//! The returned target is `NI[t]/A[t]` less this quarter's shock, a linear
//! function of lagged drivers, lagged earnings and the season.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{CompanyMeta, Denominators, RawPanel, StatementGroup, VariableSpec};
use crate::quarter::CalendarQuarter;
use crate::rollcast::{ConsensusRow, ConsensusTable};

pub const DRIVER_BASE: f64 = 0.10;
pub const DRIVER_SCALE: f64 = 0.05;
pub const DRIVER_PHI: f64 = 0.9;
pub const EARNINGS_PERSISTENCE: f64 = 0.97;
pub const MACRO_VARIABLE: &str = "macro_gdp";
pub const MARKET_VARIABLE: &str = "mkt_ret";

const ASSET_DRIFT: f64 = 0.01;
const ASSET_SD: f64 = 0.015;
const MIN_QUARTERS: usize = 25;
const SECTORS: [u32; 5] = [10, 20, 30, 45, 50];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSpec {
    pub driver_variables: Vec<String>,
    pub coefficients: Vec<f64>,
    pub seasonality_amplitude: f64,
    pub noise_sd: f64,
    /// Per-cell probability that a non-crucial value is withheld.
    pub missing_rate: f64,
    pub n_companies: usize,
    pub n_quarters: usize,
    pub seed: u64,
    pub n_distractors: usize,
    pub start: CalendarQuarter,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self {
            driver_variables: vec!["drv1".into()],
            coefficients: vec![0.002],
            seasonality_amplitude: 0.0005,
            noise_sd: 0.0015,
            missing_rate: 0.05,
            n_companies: 300,
            n_quarters: 120,
            seed: 0,
            n_distractors: 3,
            start: CalendarQuarter::new(1990, 1).expect("valid quarter"),
        }
    }
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.into()));
        if self.n_quarters < MIN_QUARTERS {
            return bad("n_quarters must be at least 25");
        }
        if self.n_companies == 0 {
            return bad("n_companies must be positive");
        }
        if self.driver_variables.len() != self.coefficients.len() {
            return bad("driver_variables and coefficients differ in length");
        }
        if !(0.0..=1.0).contains(&self.missing_rate) {
            return bad("missing_rate must lie in [0, 1]");
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return bad("noise_sd must be finite and non-negative");
        }
        if !self.seasonality_amplitude.is_finite() || self.coefficients.iter().any(|b| !b.is_finite()) {
            return bad("coefficients must be finite");
        }
        let mut names: BTreeSet<String> = ["atq", "revtq", "niq", MACRO_VARIABLE, MARKET_VARIABLE]
            .into_iter()
            .map(String::from)
            .chain((0..self.n_distractors).map(distractor_name))
            .collect();
        for d in &self.driver_variables {
            if d.is_empty() || !names.insert(d.clone()) {
                return bad("driver names must be non-empty and distinct from generated names");
            }
        }
        Ok(())
    }
}

fn distractor_name(i: usize) -> String {
    format!("dst{}", i + 1)
}

pub fn company_id(c: usize) -> String {
    format!("C{c:04}")
}

/// Schema of a generated panel: scale variables, net income, drivers,
/// distractors, one macro and one market series.
pub fn synth_schema(spec: &SignalSpec, d: &Denominators) -> Vec<VariableSpec> {
    use StatementGroup::*;
    let mut schema = vec![
        VariableSpec::from_flags("atq", Balance, true, true, false, false, true, false, d),
        VariableSpec::from_flags("revtq", Income, true, true, true, false, true, false, d),
        VariableSpec::from_flags("niq", Income, false, false, true, true, true, false, d),
    ];
    for name in &spec.driver_variables {
        schema.push(VariableSpec::from_flags(name, Income, false, true, true, false, false, false, d));
    }
    for i in 0..spec.n_distractors {
        schema.push(VariableSpec::from_flags(&distractor_name(i), Balance, false, true, true, false, false, false, d));
    }
    schema.push(VariableSpec::from_flags(MACRO_VARIABLE, Macro, false, false, false, false, false, false, d));
    schema.push(VariableSpec::from_flags(MARKET_VARIABLE, Market, false, false, false, false, false, false, d));
    schema
}

/// Zero-mean, unit-variance seasonal pattern.
pub fn season(phase: usize) -> f64 {
    const S: [f64; 4] = [1.5, -0.5, -0.5, -0.5];
    S[phase % 4] / libm::sqrt(0.75)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPanel {
    pub panel: RawPanel,
    /// `NI/A` without the current quarter's shock, per panel key.
    pub target: Vec<f64>,
    pub consensus: ConsensusTable,
    pub seasonal_phase: BTreeMap<String, usize>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws a panel from `spec`. Identical specs give identical panels.
pub fn generate_panel(spec: &SignalSpec) -> Result<SyntheticPanel> {
    spec.validate()?;
    let d = Denominators::default();
    let schema = synth_schema(spec, &d);
    let n_t = spec.n_quarters;
    let n_drv = spec.driver_variables.len();
    let n_dst = spec.n_distractors;
    let innov = libm::sqrt(1.0 - DRIVER_PHI * DRIVER_PHI);

    let mut shared = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut macro_series = Vec::with_capacity(n_t);
    let mut m = 0.0;
    for _ in 0..n_t {
        m = 0.6 * m + 0.5 * normal(&mut shared);
        macro_series.push(0.005 + 0.004 * m);
    }
    let market: Vec<f64> = (0..n_t).map(|_| 0.02 + 0.08 * normal(&mut shared)).collect();

    let quarters: Vec<CalendarQuarter> = (0..n_t).map(|t| spec.start.offset(t as i64)).collect();
    let n_rows = spec.n_companies * n_t;
    let mut keys = Vec::with_capacity(n_rows);
    let mut columns = vec![Vec::with_capacity(n_rows); schema.len()];
    let mut target = Vec::with_capacity(n_rows);
    let mut consensus = ConsensusTable::new();
    let mut meta = BTreeMap::new();
    let mut phases = BTreeMap::new();

    let mut ids: Vec<(String, usize)> = (0..spec.n_companies).map(|c| (company_id(c), c)).collect();
    ids.sort();
    for (id, c) in ids {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(c as u64 + 1);
        let phase = rng.random_range(0..4usize);
        let level = 0.06 + 0.01 * normal(&mut rng);
        let mut u = 0.0;
        let mut log_a = libm::log(1000.0) + normal(&mut rng);
        let mut z: Vec<f64> = (0..n_drv + n_dst + 1).map(|_| normal(&mut rng)).collect();
        let mut z_prev = z.clone();
        let mut prev_assets: Option<f64> = None;
        for (t, &q) in quarters.iter().enumerate() {
            log_a += ASSET_DRIFT + ASSET_SD * normal(&mut rng);
            let assets = libm::exp(log_a);
            for (zp, zi) in z_prev.iter_mut().zip(z.iter_mut()) {
                *zp = *zi;
                *zi = DRIVER_PHI * *zi + innov * normal(&mut rng);
            }
            let expected_u = EARNINGS_PERSISTENCE * u
                + spec.coefficients.iter().zip(&z_prev).map(|(b, zj)| b * zj).sum::<f64>();
            u = expected_u + spec.noise_sd * normal(&mut rng);
            let seasonal = spec.seasonality_amplitude * season(q.ordinal() as usize + phase);
            let signal = level + expected_u + seasonal;
            let ratio = level + u + seasonal;
            let ni = assets * ratio;
            let revenue = assets * (0.25 + 0.03 * z[n_drv + n_dst]);

            let mut row: Vec<Option<f64>> = Vec::with_capacity(schema.len());
            row.push(Some(assets));
            row.push(Some(revenue));
            row.push(Some(ni));
            for &zj in &z[..n_drv + n_dst] {
                let v = assets * (DRIVER_BASE + DRIVER_SCALE * zj);
                let withheld = spec.missing_rate > 0.0 && rng.random::<f64>() < spec.missing_rate;
                row.push((!withheld).then_some(v));
            }
            row.push(Some(macro_series[t]));
            row.push(Some(market[t]));
            for (col, v) in columns.iter_mut().zip(row) {
                col.push(v);
            }

            let adjustment = assets * 0.002 * libm::fabs(normal(&mut rng));
            let forecast = prev_assets.map(|a| a * (signal + 0.5 * spec.noise_sd * normal(&mut rng)));
            consensus.insert(
                (id.clone(), q),
                ConsensusRow {
                    consensus_mean: forecast,
                    consensus_median: forecast.map(|f| f + assets * 0.0005 * normal(&mut rng)),
                    actual_nongaap: Some(ni + adjustment),
                },
            );
            prev_assets = Some(assets);
            keys.push((id.clone(), q));
            target.push(signal);
        }
        meta.insert(
            id.clone(),
            CompanyMeta {
                sector_code: Some(SECTORS[c % SECTORS.len()]),
                min_share_price: Some(5.0 + 10.0 * rng.random::<f64>()),
                fiscal_alignment_flag: Some(true),
                reporting_gap_flag: Some(false),
            },
        );
        phases.insert(id, phase);
    }
    let panel = RawPanel::from_columns(schema, keys, columns)?.with_meta(meta);
    Ok(SyntheticPanel {
        panel,
        target,
        consensus,
        seasonal_phase: phases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{apply_sample_filters, FilterRules};

    fn small(noise: f64, missing: f64) -> SignalSpec {
        SignalSpec {
            n_companies: 20,
            n_quarters: 40,
            noise_sd: noise,
            missing_rate: missing,
            seasonality_amplitude: 0.01,
            coefficients: vec![0.02],
            ..Default::default()
        }
    }

    /// Least squares residual sum of squares via modified Gram-Schmidt.
    fn residual_ss(xs: &[Vec<f64>], y: &[f64]) -> f64 {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for x in xs {
            let mut v = x.clone();
            for b in &basis {
                let p: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(b).for_each(|(a, b)| *a -= p * b);
            }
            let norm = libm::sqrt(v.iter().map(|a| a * a).sum());
            if norm > 1e-9 {
                basis.push(v.into_iter().map(|a| a / norm).collect());
            }
        }
        let mut r = y.to_vec();
        for b in &basis {
            let p: f64 = r.iter().zip(b).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(b).for_each(|(a, b)| *a -= p * b);
        }
        r.iter().map(|a| a * a).sum()
    }

    fn target_r2(noise: f64) -> f64 {
        let spec = small(noise, 0.0);
        let s = generate_panel(&spec).unwrap();
        let p = &s.panel;
        let (ni, at, drv) = (2, 0, 3);
        let ratio = |row: usize| p.columns()[ni][row].unwrap() / p.columns()[at][row].unwrap();
        let mut y = Vec::new();
        let mut xs = vec![Vec::new(); 2 + 4 + 20];
        for (c, range) in p.company_ranges().into_iter().enumerate() {
            let id = &p.keys()[range.start].0;
            let phase = s.seasonal_phase[id];
            for row in range.start + 1..range.end {
                if noise == 0.0 {
                    assert!((ratio(row) - s.target[row]).abs() < 1e-12);
                }
                y.push(s.target[row]);
                let prev = p.columns()[drv][row - 1].unwrap() / p.columns()[at][row - 1].unwrap();
                xs[0].push((prev - DRIVER_BASE) / DRIVER_SCALE);
                xs[1].push(ratio(row - 1));
                let q = p.keys()[row].1.ordinal() as usize + phase;
                for k in 0..4 {
                    xs[2 + k].push(if q % 4 == k { 1.0 } else { 0.0 });
                }
                for k in 0..20 {
                    xs[6 + k].push(if c == k { 1.0 } else { 0.0 });
                }
            }
        }
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let total: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        1.0 - residual_ss(&xs, &y) / total
    }

    #[test]
    fn target_is_linear_in_lagged_drivers_and_earnings() {
        for noise in [0.0, 0.01] {
            let r2 = target_r2(noise);
            assert!(r2 > 1.0 - 1e-9, "{noise} {r2}");
        }
    }

    #[test]
    fn same_seed_same_panel() {
        let spec = small(0.01, 0.1);
        assert_eq!(generate_panel(&spec).unwrap(), generate_panel(&spec).unwrap());
        let other = SignalSpec { seed: 1, ..spec.clone() };
        assert_ne!(generate_panel(&spec).unwrap().panel, generate_panel(&other).unwrap().panel);
    }

    #[test]
    fn missing_rate_realised() {
        let spec = SignalSpec { missing_rate: 0.3, ..small(0.01, 0.3) };
        let s = generate_panel(&spec).unwrap();
        for (spec_v, col) in s.panel.schema().iter().zip(s.panel.columns()) {
            let frac = col.iter().filter(|v| v.is_none()).count() as f64 / col.len() as f64;
            if spec_v.crucial || !spec_v.statement_group.is_financial() {
                assert_eq!(frac, 0.0, "{}", spec_v.name);
            } else {
                assert!((frac - 0.3).abs() <= 0.05, "{} {frac}", spec_v.name);
            }
        }
    }

    #[test]
    fn seasonality_dominates_lag_one() {
        let spec = SignalSpec {
            coefficients: vec![0.0],
            seasonality_amplitude: 0.01,
            ..small(0.0, 0.0)
        };
        let s = generate_panel(&spec).unwrap();
        let series = &s.target[..40];
        let m = series.iter().sum::<f64>() / 40.0;
        let ac = |lag: usize| -> f64 {
            let num: f64 = (lag..40).map(|t| (series[t] - m) * (series[t - lag] - m)).sum();
            num / series.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        };
        assert!(ac(4) > ac(1));
    }

    #[test]
    fn passes_ingest_rules() {
        let s = generate_panel(&small(0.01, 0.05)).unwrap();
        let filtered = apply_sample_filters(&s.panel, &FilterRules::default());
        assert_eq!(filtered.len(), s.panel.len());
        assert_eq!(s.panel.len(), 20 * 40);
    }

    #[test]
    fn invalid_specs_rejected() {
        let short = SignalSpec { n_quarters: 10, ..Default::default() };
        assert!(matches!(generate_panel(&short), Err(Error::InvalidSpec(_))));
        let misaligned = SignalSpec { coefficients: vec![], ..Default::default() };
        assert!(matches!(misaligned.validate(), Err(Error::InvalidSpec(_))));
        let clash = SignalSpec { driver_variables: vec!["niq".into()], ..Default::default() };
        assert!(clash.validate().is_err());
    }
}
