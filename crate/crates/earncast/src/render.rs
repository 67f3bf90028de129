//! Plain-text result tables.

use std::fmt::Write as _;

use earncast_core::features::LabelScheme;
use earncast_core::panel::Format;
use earncast_core::rollcast::{ConfigSummary, Report, LAG_BUCKETS};

fn frac(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn scheme_name(s: LabelScheme) -> &'static str {
    match s {
        LabelScheme::QuantileRank => "quantile",
        LabelScheme::Sign => "sign",
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::YoY => "YoY",
        Format::QoQ => "QoQ",
        Format::PctAssets => "%Assets",
        Format::PctRevenue => "%Revenue",
        Format::Raw => "Raw",
    }
}

fn label(c: &ConfigSummary) -> String {
    format!("{} {}-class {}", c.horizon.as_str(), c.n_classes, scheme_name(c.scheme))
}

pub fn render_report(report: &Report, fingerprint: &str, config_echo: &str) -> String {
    let mut s = String::new();
    writeln!(s, "config sha256 {fingerprint}\n").unwrap();

    writeln!(s, "Table 1. Mean test accuracy over rolling subsets").unwrap();
    writeln!(s, "{:<8} {:>7} {:<9} {:>7} {:>8} {:>9} {:>7}", "horizon", "classes", "scheme", "subsets", "model", "consensus", "chance").unwrap();
    for c in &report.configurations {
        writeln!(
            s,
            "{:<8} {:>7} {:<9} {:>7} {:>8} {:>9} {:>7.4}",
            c.horizon.as_str(),
            c.n_classes,
            scheme_name(c.scheme),
            c.n_subsets,
            frac(c.mean_accuracy),
            frac(c.conditional.and_then(|x| x.consensus_acc())),
            1.0 / c.n_classes as f64
        )
        .unwrap();
    }

    for c in &report.configurations {
        writeln!(s, "\nTable 2. Agreement with consensus ({})", label(c)).unwrap();
        match c.conditional {
            None => writeln!(s, "consensus unavailable").unwrap(),
            Some(x) => {
                writeln!(s, "{:<9} {:>8} {:>8} {:>9}", "set", "samples", "model", "consensus").unwrap();
                let rows = [
                    ("converge", x.n_converge, x.converge_model_acc(), x.converge_consensus_acc()),
                    ("diverge", x.n_diverge, x.diverge_model_acc(), x.diverge_consensus_acc()),
                    ("total", x.n_scored(), x.model_acc(), x.consensus_acc()),
                ];
                for (name, n, m, k) in rows {
                    writeln!(s, "{:<9} {:>8} {:>8} {:>9}", name, n, frac(m), frac(k)).unwrap();
                }
            }
        }
    }

    let signs: Vec<&ConfigSummary> = report.configurations.iter().filter(|c| c.scheme == LabelScheme::Sign).collect();
    writeln!(s, "\nTable 3. Sign accuracy").unwrap();
    if signs.is_empty() {
        writeln!(s, "no sign configuration").unwrap();
    } else {
        writeln!(s, "{:<8} {:>7} {:>8} {:>9}", "horizon", "subsets", "model", "consensus").unwrap();
        for c in signs {
            writeln!(
                s,
                "{:<8} {:>7} {:>8} {:>9}",
                c.horizon.as_str(),
                c.n_subsets,
                frac(c.mean_accuracy),
                frac(c.conditional.and_then(|x| x.consensus_acc()))
            )
            .unwrap();
        }
    }

    for c in &report.configurations {
        writeln!(s, "\nTable 4. Original variables behind the most important components ({})", label(c)).unwrap();
        write!(s, "{:<6}", "lags").unwrap();
        for f in Format::ALL {
            write!(s, " {:>9}", format_name(f)).unwrap();
        }
        writeln!(s, " {:>7}", "total").unwrap();
        let cell = |b: usize, f: Format| {
            c.tallies
                .iter()
                .find(|t| t.bucket == b && t.format == f)
                .map_or(0, |t| t.count)
        };
        for (b, name) in LAG_BUCKETS.iter().enumerate() {
            write!(s, "{name:<6}").unwrap();
            for f in Format::ALL {
                write!(s, " {:>9}", cell(b, f)).unwrap();
            }
            writeln!(s, " {:>7}", Format::ALL.iter().map(|&f| cell(b, f)).sum::<usize>()).unwrap();
        }
        write!(s, "{:<6}", "total").unwrap();
        for f in Format::ALL {
            write!(s, " {:>9}", (0..LAG_BUCKETS.len()).map(|b| cell(b, f)).sum::<usize>()).unwrap();
        }
        writeln!(s, " {:>7}", c.tallies.iter().map(|t| t.count).sum::<usize>()).unwrap();
        let top: Vec<String> = c.variable_mentions.iter().take(10).map(|(v, n)| format!("{v} ({n})")).collect();
        writeln!(s, "most mentioned: {}", if top.is_empty() { "none".into() } else { top.join(", ") }).unwrap();
    }

    for c in &report.configurations {
        writeln!(s, "\nAccuracy by test quarter ({})", label(c)).unwrap();
        for (q, acc) in &c.accuracy_series {
            writeln!(s, "{q}  {}", frac(*acc)).unwrap();
        }
    }

    writeln!(s, "\nConfiguration").unwrap();
    s.push_str(config_echo);
    if !config_echo.ends_with('\n') {
        s.push('\n');
    }
    s
}
