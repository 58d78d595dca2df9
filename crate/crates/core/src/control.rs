//! Flat, set-prefixed control parameters (`disp.dist_method=manhattan`).
//!
//! Values are kept as strings and parsed by typed getters at the point of
//! use; lists are comma separated.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "ela_conv.nsample",
    "ela_conv.threshold",
    "ela_curv.sample_size",
    "ela_curv.step",
    "ela_level.quantiles",
    "ela_level.classifiers",
    "ela_level.folds",
    "ela_local.n_starts",
    "ela_local.budget",
    "ela_local.clust_cut",
    "gcm.approaches",
    "gcm.weighting",
    "bt.approaches",
    "disp.quantiles",
    "disp.dist_method",
    "nbc.tie_breaking",
    "ic.epsilon_min",
    "ic.epsilon_max",
    "ic.epsilon_steps",
    "ic.settling_threshold",
    "ic.partial_ratio",
    "ic.seed",
    "pca.cov_x",
    "pca.cor_x",
    "pca.cov_init",
    "pca.cor_init",
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, serde_json::Value>", into = "BTreeMap<String, String>")]
pub struct Control {
    values: BTreeMap<String, String>,
}

impl Control {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::UnknownControlKey(key.to_string()));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Result<Self> {
        self.set(key, value)?;
        Ok(self)
    }

    /// Parses `key=value` pairs as given on a command line.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut c = Control::new();
        for p in pairs {
            let p = p.as_ref();
            let (k, v) = p.split_once('=').ok_or_else(|| Error::InvalidControl {
                key: p.to_string(),
                reason: "expected key=value".to_string(),
            })?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn bad(key: &str, reason: impl Into<String>) -> Error {
        Error::InvalidControl {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Self::bad(key, format!("`{}` is not a finite number", v))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| Self::bad(key, format!("`{}` is not a non-negative integer", v))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| Self::bad(key, format!("`{}` is not a non-negative integer", v))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn list_or(&self, key: &str, default: &[&str]) -> Vec<String> {
        match self.raw(key) {
            None => default.iter().map(|s| s.to_string()).collect(),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Self::bad(key, format!("`{}` is not a number", s.trim())))
                })
                .collect(),
        }
    }
}

impl TryFrom<BTreeMap<String, serde_json::Value>> for Control {
    type Error = Error;

    fn try_from(map: BTreeMap<String, serde_json::Value>) -> Result<Self> {
        use serde_json::Value;
        fn scalar(v: &Value) -> Option<String> {
            match v {
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => Some(n.to_string()),
                Value::Bool(b) => Some(b.to_string()),
                _ => None,
            }
        }
        let mut c = Control::new();
        for (k, v) in map {
            let s = match &v {
                Value::Array(items) => items
                    .iter()
                    .map(scalar)
                    .collect::<Option<Vec<_>>>()
                    .map(|xs| xs.join(",")),
                other => scalar(other),
            }
            .ok_or_else(|| Self::bad(&k, "expected a string, number or list"))?;
            c.set(&k, s)?;
        }
        Ok(c)
    }
}

impl From<Control> for BTreeMap<String, String> {
    fn from(c: Control) -> Self {
        c.values
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
        write!(f, "{}", parts.join(";"))
    }
}
