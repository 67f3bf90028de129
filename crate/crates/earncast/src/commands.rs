//! The three commands behind the CLI.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use earncast_core::rollcast::{
    aggregate_report, enumerate_subsets, prepare, run_subset, ConsensusTable, SubsetSummary,
};
use earncast_core::synth::generate_panel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{to_jsonl, write_subset};
use crate::config::ExperimentConfig;
use crate::io;
use crate::render::render_report;

pub const REPORT_JSONL: &str = "report.jsonl";
pub const REPORT_TXT: &str = "report.txt";
pub const CONFIG_ECHO: &str = "config.toml";

/// One line of `report.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub config_sha256: String,
    #[serde(flatten)]
    pub subset: SubsetSummary,
}

#[derive(Debug)]
pub struct SynthOutputs {
    pub schema: PathBuf,
    pub panel: PathBuf,
    pub meta: Option<PathBuf>,
    pub consensus: Option<PathBuf>,
    pub ground_truth: PathBuf,
}

fn ensure_parent(p: &Path) -> Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// Generates a synthetic panel at the configured input paths, plus the
/// noiseless target in the output directory.
pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<SynthOutputs> {
    let synth = generate_panel(&cfg.synth)?;
    let out = SynthOutputs {
        schema: cfg.resolve(&cfg.paths.schema),
        panel: cfg.resolve(&cfg.paths.panel),
        meta: cfg.paths.meta.as_ref().map(|p| cfg.resolve(p)),
        consensus: cfg.paths.consensus.as_ref().map(|p| cfg.resolve(p)),
        ground_truth: cfg.output_dir().join("ground_truth.csv"),
    };
    ensure_parent(&out.schema)?;
    io::write_file(&out.schema, |w| io::write_schema(w, synth.panel.schema()))?;
    ensure_parent(&out.panel)?;
    io::write_file(&out.panel, |w| io::write_panel(w, &synth.panel))?;
    if let Some(p) = &out.meta {
        ensure_parent(p)?;
        io::write_file(p, |w| io::write_meta(w, synth.panel.meta()))?;
    }
    if let Some(p) = &out.consensus {
        ensure_parent(p)?;
        io::write_file(p, |w| io::write_consensus(w, &synth.consensus))?;
    }
    ensure_parent(&out.ground_truth)?;
    io::write_file(&out.ground_truth, |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["company_id", "year", "quarter", "noiseless_ni_over_assets"])?;
        for ((company, q), t) in synth.panel.keys().iter().zip(&synth.target) {
            w.write_record([company.clone(), q.year().to_string(), q.quarter().to_string(), t.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug)]
pub struct BacktestOutputs {
    pub n_subsets: usize,
    pub report_jsonl: PathBuf,
    pub report_txt: PathBuf,
}

fn load_consensus(cfg: &ExperimentConfig) -> Result<Option<ConsensusTable>> {
    let Some(p) = &cfg.paths.consensus else {
        return Ok(None);
    };
    let path = cfg.resolve(p);
    if !path.exists() {
        eprintln!("warning: consensus file {} not found; consensus metrics unavailable", path.display());
        return Ok(None);
    }
    Ok(Some(io::load_consensus(&path)?))
}

/// Runs every rolling subset and writes `report.jsonl`, `report.txt`, the
/// config echo and per-subset artifacts. Subsets run on `jobs` threads;
/// output does not depend on the thread count.
pub fn cmd_backtest(cfg: &ExperimentConfig, jobs: usize) -> Result<BacktestOutputs> {
    cfg.validate()?;
    let bt = &cfg.backtest;
    let schema = io::load_schema(&cfg.resolve(&cfg.paths.schema), &bt.denominators)?;
    let mut panel = io::load_panel(&cfg.resolve(&cfg.paths.panel), schema)?;
    if let Some(p) = &cfg.paths.meta {
        panel = panel.with_meta(io::load_meta(&cfg.resolve(p))?);
    }
    let consensus = load_consensus(cfg)?;
    let data = prepare(&panel, consensus.as_ref(), bt)?;
    let splits = enumerate_subsets(&data.quarters(), bt.train_len)?;

    let out_dir = cfg.output_dir();
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let fingerprint = cfg.fingerprint();
    let start = Instant::now();
    let clock = move || start.elapsed().as_secs_f64();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let summaries: Vec<Result<SubsetSummary>> = pool.install(|| {
        splits
            .par_iter()
            .map(|split| {
                let r = run_subset(split, &data, bt, &clock)?;
                let dir = out_dir.join("subsets").join(format!("{:03}", split.index));
                write_subset(&dir, &r).with_context(|| format!("writing {}", dir.display()))?;
                Ok(r.summary(bt.horizon, bt.n_classes, bt.label_scheme))
            })
            .collect()
    });
    let summaries: Vec<SubsetSummary> = summaries.into_iter().collect::<Result<_>>()?;

    let records = summaries.iter().map(|s| ReportRecord {
        config_sha256: fingerprint.clone(),
        subset: s.clone(),
    });
    let report_jsonl = out_dir.join(REPORT_JSONL);
    std::fs::write(&report_jsonl, to_jsonl(records))?;
    std::fs::write(out_dir.join(CONFIG_ECHO), cfg.echo())?;
    let report = aggregate_report(&summaries)?;
    let report_txt = out_dir.join(REPORT_TXT);
    std::fs::write(&report_txt, render_report(&report, &fingerprint, &cfg.echo()))?;
    Ok(BacktestOutputs {
        n_subsets: summaries.len(),
        report_jsonl,
        report_txt,
    })
}

/// Parses `report.jsonl`, naming the first bad line.
pub fn read_records(text: &str) -> Result<Vec<ReportRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ReportRecord = serde_json::from_str(line)
            .with_context(|| format!("{REPORT_JSONL}, line {}: corrupted record", i + 1))?;
        out.push(rec);
    }
    Ok(out)
}

/// Re-renders the text tables from stored records. The config echo comes
/// from the results directory when present, else from `cfg`.
pub fn cmd_report(cfg: &ExperimentConfig, results_dir: Option<&Path>) -> Result<String> {
    let dir = results_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir());
    let path = dir.join(REPORT_JSONL);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let records = read_records(&text)?;
    if records.is_empty() {
        bail!("{}: no records", path.display());
    }
    let fingerprint = records[0].config_sha256.clone();
    let echo = std::fs::read_to_string(dir.join(CONFIG_ECHO)).unwrap_or_else(|_| cfg.echo());
    let summaries: Vec<SubsetSummary> = records.into_iter().map(|r| r.subset).collect();
    let report = aggregate_report(&summaries)?;
    let rendered = render_report(&report, &fingerprint, &echo);
    let mut f = std::fs::File::create(dir.join(REPORT_TXT))?;
    f.write_all(rendered.as_bytes())?;
    Ok(rendered)
}
