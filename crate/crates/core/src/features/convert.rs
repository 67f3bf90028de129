use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{FeatureColumnMeta, FeatureMatrix};
use crate::error::{Error, Result};
use crate::panel::{schema_index, Denominators, Format, RawPanel};

/// Growth-rate formula. `Standard` is `(T0 - T_k) / T_k`; `MinusOne`
/// subtracts a further 1 from that.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaVariant {
    #[default]
    Standard,
    MinusOne,
}

impl FormulaVariant {
    fn offset(self) -> f64 {
        match self {
            FormulaVariant::Standard => 0.0,
            FormulaVariant::MinusOne => 1.0,
        }
    }
}

/// Converted lag-0 matrix plus, per cell, whether every original input to
/// the conversion was strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvertedPanel {
    pub matrix: FeatureMatrix,
    pub positive_origin: Vec<Vec<bool>>,
    /// Per row: every crucial variable has a raw value.
    pub crucial_present: Vec<bool>,
}

fn clamp0(v: f64) -> f64 {
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// Ratio of clamped inputs. A zero base yields 0 when the numerator is zero
/// and +inf otherwise; the cap in `clip_outliers` bounds the latter.
fn clamped_ratio(num: f64, den: f64) -> f64 {
    let (num, den) = (clamp0(num), clamp0(den));
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn growth(cur: f64, base: f64, variant: FormulaVariant) -> f64 {
    let (c, b) = (clamp0(cur), clamp0(base));
    let g = if b > 0.0 {
        (c - b) / b
    } else if c == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    g - variant.offset()
}

/// Emits one lag-0 column per (variable, enabled format). Negative original
/// values are clamped to zero before any ratio is taken.
pub fn convert_formats(
    panel: &RawPanel,
    denominators: &Denominators,
    variant: FormulaVariant,
) -> Result<ConvertedPanel> {
    let schema = panel.schema();
    let needs = |f: Format| schema.iter().any(|s| s.formats.contains(&f));
    let assets = schema_index(schema, &denominators.assets);
    let revenue = schema_index(schema, &denominators.revenue);
    if needs(Format::PctAssets) && assets.is_none() {
        return Err(Error::MissingDenominator(denominators.assets.clone()));
    }
    if needs(Format::PctRevenue) && revenue.is_none() {
        return Err(Error::MissingDenominator(denominators.revenue.clone()));
    }

    let n = panel.len();
    let mut columns = Vec::new();
    let mut metas = Vec::new();
    let mut origin = Vec::new();
    for (v, spec) in schema.iter().enumerate() {
        for &format in &spec.formats {
            let mut col = Vec::with_capacity(n);
            let mut pos = Vec::with_capacity(n);
            for row in 0..n {
                let cur = panel.columns()[v][row];
                let (value, positive) = match format {
                    Format::Raw => (cur, cur.is_some_and(|x| x > 0.0)),
                    Format::QoQ | Format::YoY => {
                        let k = if format == Format::QoQ { -1 } else { -4 };
                        match (cur, panel.value_at(v, row, k)) {
                            (Some(c), Some(b)) => (Some(growth(c, b, variant)), c > 0.0 && b > 0.0),
                            _ => (None, false),
                        }
                    }
                    Format::PctAssets | Format::PctRevenue => {
                        let d = if format == Format::PctAssets { assets } else { revenue };
                        let den = d.and_then(|d| panel.columns()[d][row]);
                        match (cur, den) {
                            (Some(c), Some(d)) => {
                                (Some(libm::log1p(clamped_ratio(c, d))), c > 0.0 && d > 0.0)
                            }
                            _ => (None, false),
                        }
                    }
                };
                col.push(value);
                pos.push(positive);
            }
            let floor = match format {
                Format::QoQ | Format::YoY => Some(-1.0 - variant.offset()),
                Format::PctAssets | Format::PctRevenue => Some(0.0),
                Format::Raw => None,
            };
            metas.push(FeatureColumnMeta {
                base_variable: spec.name.clone(),
                format,
                lag: 0,
                statement_group: spec.statement_group,
                crucial: spec.crucial,
                floor,
                cap: None,
            });
            columns.push(col);
            origin.push(pos);
        }
    }

    let crucial: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, s)| s.crucial)
        .map(|(i, _)| i)
        .collect();
    let crucial_present = (0..n)
        .map(|row| crucial.iter().all(|&v| panel.columns()[v][row].is_some()))
        .collect();

    Ok(ConvertedPanel {
        matrix: FeatureMatrix::new(panel.keys().to_vec(), columns, metas)?,
        positive_origin: origin,
        crucial_present,
    })
}
