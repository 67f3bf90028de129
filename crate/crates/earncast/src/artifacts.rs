//! Per-subset artifacts: model text, PCA, fill report, trial ledger and
//! predictions.

use std::fmt::Write as _;
use std::path::Path;

use earncast_core::gbdt::{BinMapper, GbdtModel, Node, Tree};
use earncast_core::rollcast::SubsetResult;
use serde::Serialize;

pub const MODEL_MAGIC: &str = "earncast-gbdt-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
#[error("model text, line {line}: {message}")]
pub struct ModelFormatError {
    pub line: usize,
    pub message: String,
}

/// Line-oriented text encoding of a fitted model. Floats use the shortest
/// representation that parses back to the same bits.
pub fn model_to_text(m: &GbdtModel) -> String {
    let mut s = String::new();
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(s, "{MODEL_MAGIC} {MODEL_VERSION}").unwrap();
    writeln!(s, "n_classes {}", m.n_classes).unwrap();
    writeln!(s, "degenerate {}", u8::from(m.degenerate)).unwrap();
    writeln!(s, "base_score {}", join(&m.base_score)).unwrap();
    writeln!(s, "mappers {}", m.mappers.len()).unwrap();
    for mapper in &m.mappers {
        writeln!(s, "{}", format!("edges {}", join(&mapper.edges)).trim_end()).unwrap();
    }
    writeln!(s, "rounds {}", m.trees.len()).unwrap();
    for (r, round) in m.trees.iter().enumerate() {
        for (k, tree) in round.iter().enumerate() {
            writeln!(s, "tree {r} {k} {}", tree.nodes.len()).unwrap();
            for node in &tree.nodes {
                match node {
                    Node::Leaf { value } => writeln!(s, "L {value}").unwrap(),
                    Node::Split {
                        feature,
                        threshold,
                        default_left,
                        missing_bin,
                        gain,
                        left,
                        right,
                    } => writeln!(
                        s,
                        "S {feature} {threshold} {} {missing_bin} {gain} {left} {right}",
                        u8::from(*default_left)
                    )
                    .unwrap(),
                }
            }
        }
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> ModelFormatError {
        ModelFormatError {
            line: self.line,
            message: message.into(),
        }
    }

    /// Next line split into words, checking the leading tag.
    fn next(&mut self, tag: &str) -> Result<Vec<&'a str>, ModelFormatError> {
        let (i, text) = self.inner.next().ok_or_else(|| self.err(format!("missing `{tag}`")))?;
        self.line = i + 1;
        let mut words: Vec<&str> = text.split_whitespace().collect();
        if words.first() != Some(&tag) {
            return Err(self.err(format!("expected `{tag}`")));
        }
        words.remove(0);
        Ok(words)
    }

    fn parse<T: std::str::FromStr>(&self, w: Option<&&str>) -> Result<T, ModelFormatError> {
        let w = w.ok_or_else(|| self.err("missing field"))?;
        w.parse().map_err(|_| self.err(format!("cannot parse `{w}`")))
    }

    fn floats(&self, words: &[&str]) -> Result<Vec<f64>, ModelFormatError> {
        words.iter().map(|w| self.parse(Some(w))).collect()
    }
}

pub fn model_from_text(text: &str) -> Result<GbdtModel, ModelFormatError> {
    let mut l = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let head = l.next(MODEL_MAGIC)?;
    let version: u32 = l.parse(head.first())?;
    if version != MODEL_VERSION {
        return Err(l.err(format!("unsupported version {version}")));
    }
    let n_classes: usize = {
        let w = l.next("n_classes")?;
        l.parse(w.first())?
    };
    let degenerate = {
        let w = l.next("degenerate")?;
        l.parse::<u8>(w.first())? == 1
    };
    let base_score = {
        let w = l.next("base_score")?;
        l.floats(&w)?
    };
    if base_score.len() != n_classes {
        return Err(l.err("base_score length differs from n_classes"));
    }
    let n_mappers: usize = {
        let w = l.next("mappers")?;
        l.parse(w.first())?
    };
    let mut mappers = Vec::with_capacity(n_mappers);
    for _ in 0..n_mappers {
        let w = l.next("edges")?;
        mappers.push(BinMapper { edges: l.floats(&w)? });
    }
    let rounds: usize = {
        let w = l.next("rounds")?;
        l.parse(w.first())?
    };
    let mut trees = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let mut round = Vec::with_capacity(n_classes);
        for k in 0..n_classes {
            let w = l.next("tree")?;
            if l.parse::<usize>(w.first())? != r || l.parse::<usize>(w.get(1))? != k {
                return Err(l.err("trees out of order"));
            }
            let n_nodes: usize = l.parse(w.get(2))?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let (i, text) = l.inner.next().ok_or_else(|| l.err("missing node"))?;
                l.line = i + 1;
                let w: Vec<&str> = text.split_whitespace().collect();
                let node = match w.first() {
                    Some(&"L") => Node::Leaf { value: l.parse(w.get(1))? },
                    Some(&"S") => Node::Split {
                        feature: l.parse(w.get(1))?,
                        threshold: l.parse(w.get(2))?,
                        default_left: l.parse::<u8>(w.get(3))? == 1,
                        missing_bin: l.parse(w.get(4))?,
                        gain: l.parse(w.get(5))?,
                        left: l.parse(w.get(6))?,
                        right: l.parse(w.get(7))?,
                    },
                    _ => return Err(l.err("expected `L` or `S`")),
                };
                if let Node::Split { feature, left, right, .. } = node {
                    if feature >= n_mappers || left >= n_nodes || right >= n_nodes {
                        return Err(l.err("node index out of range"));
                    }
                }
                nodes.push(node);
            }
            round.push(Tree { nodes });
        }
        trees.push(round);
    }
    Ok(GbdtModel {
        n_classes,
        mappers,
        base_score,
        trees,
        degenerate,
    })
}

pub fn to_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(&item).expect("artifact records serialize"));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct FillSummary<'a> {
    sample_deleted_rows: usize,
    variable_deleted_columns: &'a [String],
    relevant_filled_cells: usize,
    constant_filled_cells: usize,
}

/// Writes everything a subset produced into `dir`.
pub fn write_subset(dir: &Path, r: &SubsetResult) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("model.txt"), model_to_text(&r.model))?;
    std::fs::write(dir.join("pca.json"), serde_json::to_string(&r.pca)?)?;
    std::fs::write(dir.join("trials.jsonl"), to_jsonl(&r.trials))?;
    std::fs::write(dir.join("fill_report.jsonl"), to_jsonl(&r.fill_report.entries))?;
    let f = &r.fill_report;
    let summary = FillSummary {
        sample_deleted_rows: f.sample_deleted_rows,
        variable_deleted_columns: &f.variable_deleted_columns,
        relevant_filled_cells: f.relevant_filled_cells,
        constant_filled_cells: f.constant_filled_cells,
    };
    std::fs::write(dir.join("fill_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    let mut w = csv::Writer::from_path(dir.join("predictions.csv"))?;
    w.write_record(["company_id", "year", "quarter", "predicted", "actual"])?;
    for (((company, q), p), a) in r.test_keys.iter().zip(&r.predictions).zip(&r.actual) {
        w.write_record([
            company.clone(),
            q.year().to_string(),
            q.quarter().to_string(),
            p.to_string(),
            a.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use earncast_core::gbdt::{bin_features, fit, HyperParams};
    use earncast_core::linalg::Matrix;

    fn model() -> GbdtModel {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![i as f64 * 0.37, if i % 7 == 0 { f64::NAN } else { (i % 5) as f64 }])
            .collect();
        let labels: Vec<u32> = (0..60).map(|i| (i % 3) as u32).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let b = bin_features(&x, 16).unwrap();
        let p = HyperParams { n_rounds: 4, min_data_in_leaf: 3, num_leaves: 4, ..Default::default() };
        fit(&b, &labels, 3, &p).unwrap()
    }

    #[test]
    fn model_text_round_trips() {
        let m = model();
        assert!(!m.trees.is_empty());
        let text = model_to_text(&m);
        assert!(text.starts_with("earncast-gbdt-model 1\n"));
        assert_eq!(model_from_text(&text).unwrap(), m);
    }

    #[test]
    fn bad_model_text_names_line() {
        let text = model_to_text(&model()).replacen("n_classes 3", "n_classes x", 1);
        assert_eq!(model_from_text(&text).unwrap_err().line, 2);
        let future = model_to_text(&model()).replacen(" 1\n", " 9\n", 1);
        assert!(model_from_text(&future).is_err());
    }
}
