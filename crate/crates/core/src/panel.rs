//! Quarterly company panels: the variable schema, the raw long-to-wide
//! panel, company-level sample filters and next-quarter alignment.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quarter::CalendarQuarter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementGroup {
    Income,
    Balance,
    Cashflow,
    Macro,
    Market,
}

impl StatementGroup {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "income" => Self::Income,
            "balance" => Self::Balance,
            "cashflow" => Self::Cashflow,
            "macro" => Self::Macro,
            "market" => Self::Market,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Income => "income",
            Self::Balance => "balance",
            Self::Cashflow => "cashflow",
            Self::Macro => "macro",
            Self::Market => "market",
        }
    }

    /// Financial-statement variables carry a look-back history; economy-wide
    /// series do not.
    pub fn is_financial(self) -> bool {
        !matches!(self, Self::Macro | Self::Market)
    }
}

/// Comparability format of a converted variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Format {
    YoY,
    QoQ,
    PctAssets,
    PctRevenue,
    Raw,
}

impl Format {
    pub const ALL: [Format; 5] = [
        Format::YoY,
        Format::QoQ,
        Format::PctAssets,
        Format::PctRevenue,
        Format::Raw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Format::YoY => "yoy",
            Format::QoQ => "qoq",
            Format::PctAssets => "pct_assets",
            Format::PctRevenue => "pct_revenue",
            Format::Raw => "raw",
        }
    }

    pub fn is_growth(self) -> bool {
        matches!(self, Format::YoY | Format::QoQ)
    }

    pub fn is_ratio(self) -> bool {
        matches!(self, Format::PctAssets | Format::PctRevenue)
    }
}

/// Names of the scale variables used as ratio denominators. Their raw
/// values are also kept as features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Denominators {
    pub assets: String,
    pub revenue: String,
    pub net_income: String,
}

impl Default for Denominators {
    fn default() -> Self {
        Self {
            assets: "atq".into(),
            revenue: "revtq".into(),
            net_income: "niq".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub statement_group: StatementGroup,
    pub formats: BTreeSet<Format>,
    pub crucial: bool,
    pub next_quarter_aligned: bool,
}

impl VariableSpec {
    /// Builds a spec from the schema file's flag columns.
    ///
    /// `Raw` is added for the scale variables named in `denominators` and for
    /// economy-wide series that request no conversion.
    #[allow(clippy::too_many_arguments)]
    pub fn from_flags(
        name: &str,
        statement_group: StatementGroup,
        yoy: bool,
        qoq: bool,
        pct_assets: bool,
        pct_revenue: bool,
        crucial: bool,
        next_quarter_aligned: bool,
        denominators: &Denominators,
    ) -> Self {
        let mut formats = BTreeSet::new();
        for (flag, format) in [
            (yoy, Format::YoY),
            (qoq, Format::QoQ),
            (pct_assets, Format::PctAssets),
            (pct_revenue, Format::PctRevenue),
        ] {
            if flag {
                formats.insert(format);
            }
        }
        let is_scale = name == denominators.assets || name == denominators.revenue;
        if is_scale || (!statement_group.is_financial() && formats.is_empty()) {
            formats.insert(Format::Raw);
        }
        Self {
            name: name.into(),
            statement_group,
            formats,
            crucial,
            next_quarter_aligned,
        }
    }
}

/// Rejects duplicate variable names.
pub fn validate_schema(schema: &[VariableSpec]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for spec in schema {
        if !seen.insert(spec.name.as_str()) {
            return Err(Error::DuplicateVariable(spec.name.clone()));
        }
    }
    Ok(())
}

pub fn schema_index(schema: &[VariableSpec], name: &str) -> Option<usize> {
    schema.iter().position(|s| s.name == name)
}

/// Company-level attributes used by the sample filters. Absent attributes
/// pass every rule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompanyMeta {
    pub sector_code: Option<u32>,
    pub min_share_price: Option<f64>,
    pub fiscal_alignment_flag: Option<bool>,
    pub reporting_gap_flag: Option<bool>,
}

pub type Key = (String, CalendarQuarter);

/// Per-(company, quarter) raw values. Keys are sorted by company then
/// quarter; `columns[v][row]` is the value of `schema[v]` at `keys[row]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPanel {
    schema: Vec<VariableSpec>,
    keys: Vec<Key>,
    columns: Vec<Vec<Option<f64>>>,
    meta: BTreeMap<String, CompanyMeta>,
}

impl RawPanel {
    /// Assembles a panel from long-format observations. Every
    /// (company, quarter) that appears in `observations` becomes a key;
    /// values not observed are Missing.
    pub fn from_observations<'a, I>(schema: Vec<VariableSpec>, observations: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, CalendarQuarter, &'a str, Option<f64>)>,
    {
        validate_schema(&schema)?;
        let index: BTreeMap<&str, usize> = schema
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), i))
            .collect();
        let mut cells: BTreeMap<Key, Vec<Option<f64>>> = BTreeMap::new();
        for (company, quarter, variable, value) in observations {
            let v = *index
                .get(variable)
                .ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
            let row = cells
                .entry((company.to_string(), quarter))
                .or_insert_with(|| vec![None; schema.len()]);
            row[v] = value;
        }
        let mut keys = Vec::with_capacity(cells.len());
        let mut columns = vec![Vec::with_capacity(cells.len()); schema.len()];
        for (key, row) in cells {
            keys.push(key);
            for (col, value) in columns.iter_mut().zip(row) {
                col.push(value);
            }
        }
        Ok(Self {
            schema,
            keys,
            columns,
            meta: BTreeMap::new(),
        })
    }

    /// Builds a panel from already-wide columns. Keys must be unique and
    /// sorted by (company, quarter).
    pub fn from_columns(
        schema: Vec<VariableSpec>,
        keys: Vec<Key>,
        columns: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        validate_schema(&schema)?;
        if columns.len() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                actual: columns.len(),
            });
        }
        for col in &columns {
            if col.len() != keys.len() {
                return Err(Error::DimensionMismatch {
                    expected: keys.len(),
                    actual: col.len(),
                });
            }
        }
        for pair in keys.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::DuplicateKey {
                    company: pair[1].0.clone(),
                    quarter: pair[1].1.to_string(),
                });
            }
        }
        Ok(Self {
            schema,
            keys,
            columns,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, meta: BTreeMap<String, CompanyMeta>) -> Self {
        self.meta = meta;
        self
    }

    pub fn schema(&self) -> &[VariableSpec] {
        &self.schema
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn columns(&self) -> &[Vec<Option<f64>>] {
        &self.columns
    }

    pub fn meta(&self) -> &BTreeMap<String, CompanyMeta> {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        schema_index(&self.schema, name).map(|i| self.columns[i].as_slice())
    }

    pub fn row_of(&self, company: &str, quarter: CalendarQuarter) -> Option<usize> {
        self.keys
            .binary_search_by(|(c, q)| c.as_str().cmp(company).then(q.cmp(&quarter)))
            .ok()
    }

    /// Value of column `var` for the same company, `offset` quarters away
    /// from `row`.
    pub fn value_at(&self, var: usize, row: usize, offset: i64) -> Option<f64> {
        if offset == 0 {
            return self.columns[var][row];
        }
        let (company, quarter) = &self.keys[row];
        let other = self.row_of(company, quarter.offset(offset))?;
        self.columns[var][other]
    }

    pub fn companies(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (c, _) in &self.keys {
            if out.last() != Some(&c.as_str()) {
                out.push(c);
            }
        }
        out
    }

    /// Row ranges per company, in key order.
    pub fn company_ranges(&self) -> Vec<core::ops::Range<usize>> {
        company_ranges(&self.keys)
    }

    /// Sorted distinct quarters present in the panel.
    pub fn quarters(&self) -> Vec<CalendarQuarter> {
        let set: BTreeSet<CalendarQuarter> = self.keys.iter().map(|(_, q)| *q).collect();
        set.into_iter().collect()
    }

    fn retain_rows(&self, keep: impl Fn(usize) -> bool) -> Self {
        let rows: Vec<usize> = (0..self.keys.len()).filter(|&r| keep(r)).collect();
        let keys = rows.iter().map(|&r| self.keys[r].clone()).collect();
        let columns = self
            .columns
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        let companies: BTreeSet<&str> = rows.iter().map(|&r| self.keys[r].0.as_str()).collect();
        let meta = self
            .meta
            .iter()
            .filter(|(c, _)| companies.contains(c.as_str()))
            .map(|(c, m)| (c.clone(), m.clone()))
            .collect();
        Self {
            schema: self.schema.clone(),
            keys,
            columns,
            meta,
        }
    }

    /// Keeps only rows whose quarter is at most `last`.
    pub fn truncate_after(&self, last: CalendarQuarter) -> Self {
        self.retain_rows(|r| self.keys[r].1 <= last)
    }
}

pub(crate) fn company_ranges<T>(keys: &[(String, T)]) -> Vec<core::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=keys.len() {
        if i == keys.len() || keys[i].0 != keys[start].0 {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

/// Company-level sample filters. Each rule can be switched off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterRules {
    pub require_company_id: bool,
    /// Companies whose minimum share price falls below this are removed.
    pub min_share_price: Option<f64>,
    pub excluded_sectors: BTreeSet<u32>,
    pub require_fiscal_alignment: bool,
    pub reject_reporting_gaps: bool,
}

impl Default for FilterRules {
    fn default() -> Self {
        Self {
            require_company_id: true,
            min_share_price: Some(1.0),
            excluded_sectors: [40, 55].into_iter().collect(),
            require_fiscal_alignment: true,
            reject_reporting_gaps: true,
        }
    }
}

impl FilterRules {
    pub fn passes(&self, company: &str, meta: Option<&CompanyMeta>) -> bool {
        if self.require_company_id && company.trim().is_empty() {
            return false;
        }
        let Some(meta) = meta else {
            return true;
        };
        if let (Some(floor), Some(price)) = (self.min_share_price, meta.min_share_price) {
            if price < floor {
                return false;
            }
        }
        if let Some(code) = meta.sector_code {
            if self.excluded_sectors.contains(&code) {
                return false;
            }
        }
        if self.require_fiscal_alignment && meta.fiscal_alignment_flag == Some(false) {
            return false;
        }
        if self.reject_reporting_gaps && meta.reporting_gap_flag == Some(true) {
            return false;
        }
        true
    }
}

/// Removes every company that fails an enabled rule.
pub fn apply_sample_filters(panel: &RawPanel, rules: &FilterRules) -> RawPanel {
    panel.retain_rows(|r| {
        let company = panel.keys[r].0.as_str();
        rules.passes(company, panel.meta.get(company))
    })
}

/// For every variable flagged `next_quarter_aligned`, replaces the value at
/// quarter T with the value observed at T+1 for the same company. Quarters
/// without a successor become Missing.
pub fn shift_forward_aligned(panel: &RawPanel) -> RawPanel {
    let mut out = panel.clone();
    for (v, spec) in panel.schema.iter().enumerate() {
        if !spec.next_quarter_aligned {
            continue;
        }
        out.columns[v] = (0..panel.len()).map(|r| panel.value_at(v, r, 1)).collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(y: i32, n: i64) -> CalendarQuarter {
        CalendarQuarter::new(y, n).unwrap()
    }

    fn spec(name: &str, group: StatementGroup, aligned: bool) -> VariableSpec {
        VariableSpec::from_flags(
            name,
            group,
            false,
            false,
            false,
            false,
            false,
            aligned,
            &Denominators::default(),
        )
    }

    #[test]
    fn revenue_row_gets_raw_format() {
        let s = VariableSpec::from_flags(
            "revtq",
            StatementGroup::Income,
            true,
            true,
            false,
            false,
            true,
            false,
            &Denominators::default(),
        );
        let expected: BTreeSet<Format> = [Format::YoY, Format::QoQ, Format::Raw].into();
        assert_eq!(s.formats, expected);
        assert!(s.crucial);
    }

    #[test]
    fn duplicate_names_rejected() {
        let schema = vec![
            spec("niq", StatementGroup::Income, false),
            spec("niq", StatementGroup::Income, false),
        ];
        assert_eq!(
            validate_schema(&schema),
            Err(Error::DuplicateVariable("niq".into()))
        );
    }

    #[test]
    fn unknown_variable_rejected() {
        let schema = vec![spec("niq", StatementGroup::Income, false)];
        let err = RawPanel::from_observations(schema, [("A", q(2000, 1), "xyzzy", Some(1.0))])
            .unwrap_err();
        assert_eq!(err, Error::UnknownVariable("xyzzy".into()));
    }

    #[test]
    fn missing_value_is_not_zero() {
        let schema = vec![spec("niq", StatementGroup::Income, false)];
        let p = RawPanel::from_observations(
            schema,
            [
                ("A", q(2000, 1), "niq", Some(1.0)),
                ("A", q(2000, 2), "niq", None),
            ],
        )
        .unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.columns()[0], vec![Some(1.0), None]);
    }

    fn meta_panel() -> RawPanel {
        let schema = vec![spec("niq", StatementGroup::Income, false)];
        let obs = ["A", "B", "C", "D", "E", "F"]
            .into_iter()
            .flat_map(|c| (1..=2).map(move |n| (c, q(2001, n), "niq", Some(1.0))));
        let mut meta = BTreeMap::new();
        meta.insert("A".to_string(), CompanyMeta { sector_code: Some(55), ..Default::default() });
        meta.insert("B".to_string(), CompanyMeta { min_share_price: Some(0.5), ..Default::default() });
        meta.insert("C".to_string(), CompanyMeta { sector_code: Some(40), ..Default::default() });
        meta.insert("D".to_string(), CompanyMeta { fiscal_alignment_flag: Some(false), ..Default::default() });
        meta.insert("E".to_string(), CompanyMeta { reporting_gap_flag: Some(true), ..Default::default() });
        meta.insert(
            "F".to_string(),
            CompanyMeta {
                sector_code: Some(45),
                min_share_price: Some(12.0),
                fiscal_alignment_flag: Some(true),
                reporting_gap_flag: Some(false),
            },
        );
        RawPanel::from_observations(schema, obs).unwrap().with_meta(meta)
    }

    #[test]
    fn filters_remove_failing_companies() {
        let p = meta_panel();
        let f = apply_sample_filters(&p, &FilterRules::default());
        assert_eq!(f.companies(), vec!["F"]);
        assert_eq!(f.len(), 2);
        assert_eq!(f.columns()[0], p.columns()[0][10..12].to_vec());
        assert_eq!(apply_sample_filters(&f, &FilterRules::default()), f);
    }

    #[test]
    fn empty_company_id_removed() {
        let schema = vec![spec("niq", StatementGroup::Income, false)];
        let p = RawPanel::from_observations(schema, [("", q(2001, 1), "niq", Some(1.0))]).unwrap();
        assert!(apply_sample_filters(&p, &FilterRules::default()).is_empty());
    }

    #[test]
    fn market_series_shifts_forward() {
        let schema = vec![
            spec("rate", StatementGroup::Market, true),
            spec("niq", StatementGroup::Income, false),
        ];
        let obs = [
            ("A", q(2001, 1), "rate", Some(1.0)),
            ("A", q(2001, 2), "rate", Some(2.0)),
            ("A", q(2001, 3), "rate", Some(3.0)),
            ("A", q(2001, 1), "niq", Some(7.0)),
            ("A", q(2001, 2), "niq", Some(8.0)),
            ("A", q(2001, 3), "niq", Some(9.0)),
            ("B", q(2001, 1), "rate", Some(4.0)),
        ];
        let p = RawPanel::from_observations(schema, obs).unwrap();
        let s = shift_forward_aligned(&p);
        assert_eq!(s.columns()[0], vec![Some(2.0), Some(3.0), None, None]);
        assert_eq!(s.columns()[1], p.columns()[1]);
        assert_eq!(s.keys(), p.keys());
    }

    proptest! {
        #[test]
        fn shift_adds_exactly_one_missing_per_company(
            lens in proptest::collection::vec(1usize..8, 1..5),
        ) {
            let schema = vec![spec("rate", StatementGroup::Market, true)];
            let names: Vec<String> = (0..lens.len()).map(|i| alloc::format!("c{i}")).collect();
            let mut obs = Vec::new();
            for (c, &n) in names.iter().zip(&lens) {
                for t in 0..n {
                    obs.push((c.as_str(), q(2000, 1).offset(t as i64), "rate", Some(t as f64 + 1.0)));
                }
            }
            let p = RawPanel::from_observations(schema, obs).unwrap();
            let s = shift_forward_aligned(&p);
            prop_assert_eq!(s.keys(), p.keys());
            let missing = s.columns()[0].iter().filter(|v| v.is_none()).count();
            prop_assert_eq!(missing, lens.len());
        }
    }
}
