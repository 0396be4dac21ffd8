//! Published reference numbers, flattened to dotted keys such as
//! `binary_accuracy.structured.a.focus`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::MarkerClass;
use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../data/reference_tables.toml");

/// Allowed |reproduced - reference| for percent-accuracy cells.
pub const ACCURACY_BAND_PP: f64 = 5.0;
/// Allowed |reproduced - reference| for F-score, precision and recall.
pub const SCORE_BAND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTables {
    values: BTreeMap<String, f64>,
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut BTreeMap<String, f64>) -> Result<()> {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        toml::Value::Table(table) => {
            for (k, v) in table {
                flatten(&key(k), v, out)?;
            }
        }
        toml::Value::Float(f) => {
            out.insert(prefix.to_string(), *f);
        }
        toml::Value::Integer(i) => {
            out.insert(prefix.to_string(), *i as f64);
        }
        _ => return Err(Error::Config(format!("reference value {prefix:?} is not numeric"))),
    }
    Ok(())
}

impl ReferenceTables {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("bundled reference tables parse")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Value = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut values = BTreeMap::new();
        flatten("", &value, &mut values)?;
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        self.values.get(key).copied().ok_or_else(|| Error::UnknownReferenceKey(key.to_string()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    /// Expected `(positive, negative)` frame counts for a marker file.
    pub fn sample_counts(&self, marker: MarkerClass) -> Result<(usize, usize)> {
        let p = self.get(&format!("sample_counts.{}.positive", marker.name()))?;
        let n = self.get(&format!("sample_counts.{}.negative", marker.name()))?;
        Ok((p as usize, n as usize))
    }
}

pub fn band_for(key: &str) -> f64 {
    if key.starts_with("binary_prf.") {
        SCORE_BAND
    } else {
        ACCURACY_BAND_PP
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub key: String,
    pub reproduced: f64,
    pub reference: f64,
    /// `reproduced - reference`.
    pub deviation: f64,
    pub band: f64,
    pub within_band: bool,
}

pub fn compare_cell(tables: &ReferenceTables, key: &str, reproduced: f64) -> Result<Deviation> {
    let reference = tables.get(key)?;
    let deviation = reproduced - reference;
    let band = band_for(key);
    Ok(Deviation {
        key: key.to_string(),
        reproduced,
        reference,
        deviation,
        band,
        // tolerate float noise from the subtraction
        within_band: deviation.abs() <= band + 1e-9,
    })
}

pub fn compare_cells(tables: &ReferenceTables, cells: &[(String, f64)]) -> Result<Vec<Deviation>> {
    cells.iter().map(|(k, v)| compare_cell(tables, k, *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tables_load() {
        let t = ReferenceTables::builtin();
        assert_eq!(t.get("binary_accuracy.structured.a.assertion").unwrap(), 98.27);
        assert_eq!(t.get("binary_accuracy.fc.a.assertion").unwrap(), 78.32);
        assert_eq!(t.get("multiclass_accuracy.a.3").unwrap(), 98.06);
        assert_eq!(t.get("multiclass_accuracy.b.9").unwrap(), 96.97);
        assert_eq!(t.sample_counts(MarkerClass::Assertion).unwrap(), (541, 644));
        assert_eq!(t.sample_counts(MarkerClass::DoubtQuestion).unwrap(), (1100, 421));
    }

    #[test]
    fn published_column_mean_is_consistent() {
        let t = ReferenceTables::builtin();
        let mean: f64 = MarkerClass::ALL
            .iter()
            .map(|m| t.get(&format!("binary_accuracy.structured.a.{}", m.name())).unwrap())
            .sum::<f64>()
            / 9.0;
        assert!((mean - t.get("binary_accuracy_mean.structured.a").unwrap()).abs() < 0.005);
        let total: usize = MarkerClass::ALL.iter().map(|&m| {
            let (p, n) = t.sample_counts(m).unwrap();
            p + n
        }).sum();
        assert_eq!(total, 15255);
    }

    #[test]
    fn deviation_within_band() {
        let t = ReferenceTables::builtin();
        let d = compare_cell(&t, "binary_prf.structured.assertion.f_score", 0.97).unwrap();
        assert!((d.deviation + 0.01).abs() < 1e-12);
        assert!(d.within_band);
        let d = compare_cell(&t, "binary_accuracy.fc.a.focus", 75.65).unwrap();
        assert_eq!(d.deviation, 0.0);
        let d = compare_cell(&t, "binary_accuracy.structured.a.focus", 90.0).unwrap();
        assert!(!d.within_band);
    }

    #[test]
    fn unknown_key() {
        let t = ReferenceTables::from_toml("[binary_accuracy.structured.a]\nfocus = 98.76\n").unwrap();
        assert!(matches!(
            compare_cell(&t, "binary_accuracy.structured.a.assertion", 97.0),
            Err(Error::UnknownReferenceKey(_))
        ));
    }
}
