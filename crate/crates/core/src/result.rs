//! Method-agnostic container for index vectors, with JSON and CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analyzers::Warning;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexColumn {
    pub name: String,
    pub values: Vec<f64>,
    /// Bootstrap half-widths, when the method provides them.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conf: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub method: String,
    pub factors: Vec<String>,
    pub indices: Vec<IndexColumn>,
    /// Echo of the configuration that produced the result.
    #[serde(default)]
    pub config: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<Warning>,
}

impl SensitivityResult {
    pub fn new(method: &str, factors: &[String]) -> Self {
        Self {
            method: method.to_string(),
            factors: factors.to_vec(),
            indices: Vec::new(),
            config: BTreeMap::new(),
            warning: None,
        }
    }

    pub fn with_index(mut self, name: &str, values: Vec<f64>, conf: Option<Vec<f64>>) -> Self {
        assert_eq!(
            values.len(),
            self.factors.len(),
            "index {name} has the wrong length"
        );
        self.indices.push(IndexColumn {
            name: name.to_string(),
            values,
            conf,
        });
        self
    }

    pub fn with_warning(mut self, warning: Option<Warning>) -> Self {
        self.warning = warning;
        self
    }

    pub fn with_config(mut self, key: &str, value: impl Serialize) -> Self {
        self.config.insert(
            key.to_string(),
            serde_json::to_value(value).expect("config values serialize"),
        );
        self
    }

    pub fn index(&self, name: &str) -> Option<&[f64]> {
        self.indices
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn conf(&self, name: &str) -> Option<&[f64]> {
        self.indices
            .iter()
            .find(|c| c.name == name)
            .and_then(|c| c.conf.as_deref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// One row per factor; each index contributes a column, followed by a
    /// `<name>_conf` column when half-widths exist.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("factor");
        for c in &self.indices {
            out.push(',');
            out.push_str(&c.name);
            if c.conf.is_some() {
                write!(out, ",{}_conf", c.name).unwrap();
            }
        }
        out.push('\n');
        for (i, f) in self.factors.iter().enumerate() {
            out.push_str(f);
            for c in &self.indices {
                write!(out, ",{}", c.values[i]).unwrap();
                if let Some(conf) = &c.conf {
                    write!(out, ",{}", conf[i]).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}
