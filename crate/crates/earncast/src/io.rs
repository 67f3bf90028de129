//! CSV formats: variable schema, long-format panel, company meta and
//! analyst consensus.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use earncast_core::panel::{CompanyMeta, Denominators, RawPanel, StatementGroup, VariableSpec};
use earncast_core::rollcast::{ConsensusRow, ConsensusTable};
use earncast_core::CalendarQuarter;
use thiserror::Error;

pub const SCHEMA_HEADER: [&str; 8] = [
    "name",
    "statement_group",
    "yoy",
    "qoq",
    "pct_assets",
    "pct_revenue",
    "crucial",
    "next_quarter_aligned",
];
pub const PANEL_HEADER: [&str; 5] = ["company_id", "year", "quarter", "variable", "value"];
pub const META_HEADER: [&str; 5] = [
    "company_id",
    "sector_code",
    "min_share_price",
    "fiscal_alignment_flag",
    "reporting_gap_flag",
];
pub const CONSENSUS_HEADER: [&str; 6] = [
    "company_id",
    "year",
    "quarter",
    "consensus_mean",
    "consensus_median",
    "actual_nongaap",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}: expected header `{expected}`, found `{found}`")]
    Header {
        file: String,
        expected: String,
        found: String,
    },
    /// `line` is 1-based and counts the header.
    #[error("{file}, line {line}: {message}")]
    Row {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{file}: {source}")]
    Csv { file: String, source: csv::Error },
    #[error("{file}: {source}")]
    Core {
        file: String,
        source: earncast_core::Error,
    },
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<File, IoError> {
    File::create(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads records after checking the header; yields (line, record).
fn records<R: Read>(
    reader: R,
    file: &str,
    header: &[&str],
) -> Result<Vec<(u64, csv::StringRecord)>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found = rdr
        .headers()
        .map_err(|source| IoError::Csv { file: file.into(), source })?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(IoError::Header {
            file: file.into(),
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|source| IoError::Csv { file: file.into(), source })?;
        out.push((i as u64 + 2, rec));
    }
    Ok(out)
}

fn row_err(file: &str, line: u64, message: impl Into<String>) -> IoError {
    IoError::Row {
        file: file.into(),
        line,
        message: message.into(),
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

fn parse_opt_f64(s: &str) -> Result<Option<f64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| format!("not a number: `{s}`"))
}

fn parse_quarter(year: &str, quarter: &str) -> Result<CalendarQuarter, String> {
    let y: i32 = year.parse().map_err(|_| format!("bad year `{year}`"))?;
    let q: i64 = quarter.parse().map_err(|_| format!("bad quarter `{quarter}`"))?;
    CalendarQuarter::new(y, q).map_err(|e| e.to_string())
}

pub fn read_schema<R: Read>(reader: R, file: &str, d: &Denominators) -> Result<Vec<VariableSpec>, IoError> {
    let mut out: Vec<VariableSpec> = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, rec) in records(reader, file, &SCHEMA_HEADER)? {
        let name = &rec[0];
        if name.is_empty() {
            return Err(row_err(file, line, "empty variable name"));
        }
        let group = StatementGroup::parse(&rec[1])
            .ok_or_else(|| row_err(file, line, format!("unknown statement_group `{}`", &rec[1])))?;
        let mut flags = [false; 6];
        for (k, flag) in flags.iter_mut().enumerate() {
            *flag = parse_flag(&rec[k + 2])
                .ok_or_else(|| row_err(file, line, format!("{} must be 0 or 1, found `{}`", SCHEMA_HEADER[k + 2], &rec[k + 2])))?;
        }
        if !seen.insert(name.to_string()) {
            return Err(row_err(file, line, format!("duplicate variable `{name}`")));
        }
        let [yoy, qoq, pa, pr, crucial, nqa] = flags;
        out.push(VariableSpec::from_flags(name, group, yoy, qoq, pa, pr, crucial, nqa, d));
    }
    Ok(out)
}

pub fn load_schema(path: &Path, d: &Denominators) -> Result<Vec<VariableSpec>, IoError> {
    read_schema(open(path)?, &path.display().to_string(), d)
}

pub fn write_schema<W: Write>(writer: W, schema: &[VariableSpec]) -> Result<(), csv::Error> {
    use earncast_core::panel::Format;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SCHEMA_HEADER)?;
    for s in schema {
        let f = |x: Format| if s.formats.contains(&x) { "1" } else { "0" };
        let b = |x: bool| if x { "1" } else { "0" };
        w.write_record([
            s.name.as_str(),
            s.statement_group.as_str(),
            f(Format::YoY),
            f(Format::QoQ),
            f(Format::PctAssets),
            f(Format::PctRevenue),
            b(s.crucial),
            b(s.next_quarter_aligned),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_panel<R: Read>(reader: R, file: &str, schema: Vec<VariableSpec>) -> Result<RawPanel, IoError> {
    let mut obs: Vec<(String, CalendarQuarter, String, Option<f64>)> = Vec::new();
    let mut seen: BTreeSet<(String, CalendarQuarter, String)> = BTreeSet::new();
    let known: BTreeSet<&str> = schema.iter().map(|s| s.name.as_str()).collect();
    for (line, rec) in records(reader, file, &PANEL_HEADER)? {
        let company = rec[0].to_string();
        let quarter = parse_quarter(&rec[1], &rec[2]).map_err(|m| row_err(file, line, m))?;
        let variable = rec[3].to_string();
        if !known.contains(variable.as_str()) {
            return Err(row_err(file, line, format!("unknown variable `{variable}`")));
        }
        let value = parse_opt_f64(&rec[4]).map_err(|m| row_err(file, line, m))?;
        if !seen.insert((company.clone(), quarter, variable.clone())) {
            return Err(row_err(file, line, format!("duplicate observation {company} {quarter} {variable}")));
        }
        obs.push((company, quarter, variable, value));
    }
    RawPanel::from_observations(schema, obs.iter().map(|(c, q, v, x)| (c.as_str(), *q, v.as_str(), *x)))
        .map_err(|source| IoError::Core { file: file.into(), source })
}

pub fn load_panel(path: &Path, schema: Vec<VariableSpec>) -> Result<RawPanel, IoError> {
    read_panel(open(path)?, &path.display().to_string(), schema)
}

/// Long format, one line per (key, variable) including Missing cells, so
/// keys without any value survive a round trip.
pub fn write_panel<W: Write>(writer: W, panel: &RawPanel) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PANEL_HEADER)?;
    for (row, (company, q)) in panel.keys().iter().enumerate() {
        for (spec, col) in panel.schema().iter().zip(panel.columns()) {
            let value = col[row].map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                company.as_str(),
                &q.year().to_string(),
                &q.quarter().to_string(),
                &spec.name,
                &value,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_meta<R: Read>(reader: R, file: &str) -> Result<BTreeMap<String, CompanyMeta>, IoError> {
    let mut out = BTreeMap::new();
    for (line, rec) in records(reader, file, &META_HEADER)? {
        let opt_flag = |s: &str| -> Result<Option<bool>, IoError> {
            if s.is_empty() {
                return Ok(None);
            }
            parse_flag(s).map(Some).ok_or_else(|| row_err(file, line, format!("bad flag `{s}`")))
        };
        let sector_code = if rec[1].is_empty() {
            None
        } else {
            Some(rec[1].parse().map_err(|_| row_err(file, line, format!("bad sector_code `{}`", &rec[1])))?)
        };
        let meta = CompanyMeta {
            sector_code,
            min_share_price: parse_opt_f64(&rec[2]).map_err(|m| row_err(file, line, m))?,
            fiscal_alignment_flag: opt_flag(&rec[3])?,
            reporting_gap_flag: opt_flag(&rec[4])?,
        };
        if out.insert(rec[0].to_string(), meta).is_some() {
            return Err(row_err(file, line, format!("duplicate company `{}`", &rec[0])));
        }
    }
    Ok(out)
}

pub fn load_meta(path: &Path) -> Result<BTreeMap<String, CompanyMeta>, IoError> {
    read_meta(open(path)?, &path.display().to_string())
}

pub fn write_meta<W: Write>(writer: W, meta: &BTreeMap<String, CompanyMeta>) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(META_HEADER)?;
    let flag = |b: Option<bool>| b.map(|b| if b { "1" } else { "0" }.to_string()).unwrap_or_default();
    for (id, m) in meta {
        w.write_record([
            id.clone(),
            m.sector_code.map(|s| s.to_string()).unwrap_or_default(),
            m.min_share_price.map(|s| s.to_string()).unwrap_or_default(),
            flag(m.fiscal_alignment_flag),
            flag(m.reporting_gap_flag),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_consensus<R: Read>(reader: R, file: &str) -> Result<ConsensusTable, IoError> {
    let mut table = ConsensusTable::new();
    for (line, rec) in records(reader, file, &CONSENSUS_HEADER)? {
        let quarter = parse_quarter(&rec[1], &rec[2]).map_err(|m| row_err(file, line, m))?;
        let num = |i: usize| parse_opt_f64(&rec[i]).map_err(|m| row_err(file, line, m));
        let row = ConsensusRow {
            consensus_mean: num(3)?,
            consensus_median: num(4)?,
            actual_nongaap: num(5)?,
        };
        table
            .try_insert((rec[0].to_string(), quarter), row)
            .map_err(|e| row_err(file, line, e.to_string()))?;
    }
    Ok(table)
}

pub fn load_consensus(path: &Path) -> Result<ConsensusTable, IoError> {
    read_consensus(open(path)?, &path.display().to_string())
}

pub fn write_consensus<W: Write>(writer: W, table: &ConsensusTable) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CONSENSUS_HEADER)?;
    let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for ((company, q), row) in table.iter() {
        w.write_record([
            company.clone(),
            q.year().to_string(),
            q.quarter().to_string(),
            num(row.consensus_mean),
            num(row.consensus_median),
            num(row.actual_nongaap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes through a buffered file handle.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<(), csv::Error>) -> Result<(), IoError> {
    let mut w = std::io::BufWriter::new(create(path)?);
    let file = path.display().to_string();
    f(&mut w).map_err(|source| IoError::Csv { file: file.clone(), source })?;
    w.flush().map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d() -> Denominators {
        Denominators::default()
    }

    #[test]
    fn revenue_row_gets_raw() {
        let csv = "name,statement_group,yoy,qoq,pct_assets,pct_revenue,crucial,next_quarter_aligned\nrevtq,income,1,1,0,0,1,0\n";
        let s = read_schema(csv.as_bytes(), "s.csv", &d()).unwrap();
        use earncast_core::panel::Format::*;
        assert_eq!(s[0].formats, [YoY, QoQ, Raw].into_iter().collect());
        assert!(s[0].crucial);
    }

    #[test]
    fn empty_schema_and_duplicates() {
        let header = SCHEMA_HEADER.join(",") + "\n";
        assert!(read_schema(header.as_bytes(), "s", &d()).unwrap().is_empty());
        let dup = header.clone() + "niq,income,1,0,0,0,1,0\nniq,income,1,0,0,0,1,0\n";
        match read_schema(dup.as_bytes(), "s", &d()) {
            Err(IoError::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad = header + "x,income,2,0,0,0,0,0\n";
        assert!(matches!(read_schema(bad.as_bytes(), "s", &d()), Err(IoError::Row { line: 2, .. })));
    }

    fn schema() -> Vec<VariableSpec> {
        let csv = SCHEMA_HEADER.join(",") + "\nniq,income,1,0,0,0,1,0\natq,balance,1,0,0,0,1,0\n";
        read_schema(csv.as_bytes(), "s", &d()).unwrap()
    }

    #[test]
    fn panel_loads_missing_as_missing() {
        let csv = "company_id,year,quarter,variable,value\nA,2000,1,niq,5\nA,2000,2,niq,\n";
        let p = read_panel(csv.as_bytes(), "p", schema()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.column("niq").unwrap(), &[Some(5.0), None]);
    }

    #[test]
    fn panel_errors_name_lines() {
        let unknown = "company_id,year,quarter,variable,value\nA,2000,1,niq,5\nA,2000,1,xyzzy,1\n";
        match read_panel(unknown.as_bytes(), "p", schema()) {
            Err(IoError::Row { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("xyzzy"));
            }
            other => panic!("{other:?}"),
        }
        let bad_q = "company_id,year,quarter,variable,value\nA,2000,5,niq,5\n";
        assert!(matches!(read_panel(bad_q.as_bytes(), "p", schema()), Err(IoError::Row { line: 2, .. })));
        let dup = "company_id,year,quarter,variable,value\nA,2000,1,niq,5\nA,2000,1,niq,6\n";
        assert!(read_panel(dup.as_bytes(), "p", schema()).is_err());
    }

    #[test]
    fn header_checked() {
        assert!(matches!(
            read_panel("a,b\n".as_bytes(), "p", schema()),
            Err(IoError::Header { .. })
        ));
    }

    #[test]
    fn meta_and_consensus_round_trip() {
        let mut meta = BTreeMap::new();
        meta.insert("A".to_string(), CompanyMeta { sector_code: Some(45), min_share_price: Some(2.5), fiscal_alignment_flag: Some(true), reporting_gap_flag: None });
        meta.insert("B".to_string(), CompanyMeta::default());
        let mut buf = Vec::new();
        write_meta(&mut buf, &meta).unwrap();
        assert_eq!(read_meta(buf.as_slice(), "m").unwrap(), meta);

        let mut t = ConsensusTable::new();
        let q = CalendarQuarter::new(2001, 3).unwrap();
        t.try_insert(("A".into(), q), ConsensusRow { consensus_mean: Some(0.1), consensus_median: None, actual_nongaap: Some(-2.0) }).unwrap();
        let mut buf = Vec::new();
        write_consensus(&mut buf, &t).unwrap();
        assert_eq!(read_consensus(buf.as_slice(), "c").unwrap(), t);
    }
}
