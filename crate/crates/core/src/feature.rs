//! Feature values, feature vectors and the registry of feature sets.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::control::Control;
use crate::error::{Error, Result};
use crate::features;
use crate::object::FeatureObject;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Real(f64),
    Int(i64),
    Missing,
}

impl FeatureValue {
    /// `Missing` for NaN, `Real` otherwise.
    pub fn real(v: f64) -> Self {
        if v.is_nan() {
            FeatureValue::Missing
        } else {
            FeatureValue::Real(v)
        }
    }

    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(FeatureValue::Missing, FeatureValue::real)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            FeatureValue::Real(v) => Some(v),
            FeatureValue::Int(v) => Some(v as f64),
            FeatureValue::Missing => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, FeatureValue::Missing)
    }
}

impl From<f64> for FeatureValue {
    fn from(v: f64) -> Self {
        FeatureValue::real(v)
    }
}

impl From<Option<f64>> for FeatureValue {
    fn from(v: Option<f64>) -> Self {
        FeatureValue::opt(v)
    }
}

impl From<usize> for FeatureValue {
    fn from(v: usize) -> Self {
        FeatureValue::Int(v as i64)
    }
}

impl From<i64> for FeatureValue {
    fn from(v: i64) -> Self {
        FeatureValue::Int(v)
    }
}

impl From<bool> for FeatureValue {
    fn from(v: bool) -> Self {
        FeatureValue::Int(i64::from(v))
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Real(v) if v.is_infinite() => {
                write!(f, "{}", if *v > 0.0 { "Inf" } else { "-Inf" })
            }
            FeatureValue::Real(v) => write!(f, "{:?}", v),
            FeatureValue::Int(v) => write!(f, "{}", v),
            FeatureValue::Missing => write!(f, "NA"),
        }
    }
}

impl Serialize for FeatureValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            FeatureValue::Real(v) if v.is_finite() => s.serialize_f64(v),
            FeatureValue::Real(v) => s.serialize_str(if v > 0.0 { "Inf" } else { "-Inf" }),
            FeatureValue::Int(v) => s.serialize_i64(v),
            FeatureValue::Missing => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for FeatureValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = FeatureValue;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, \"Inf\", \"-Inf\" or null")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<FeatureValue, E> {
                Ok(FeatureValue::Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<FeatureValue, E> {
                Ok(FeatureValue::Int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<FeatureValue, E> {
                i64::try_from(v)
                    .map(FeatureValue::Int)
                    .map_err(|_| E::custom("integer out of range"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<FeatureValue, E> {
                match v {
                    "Inf" => Ok(FeatureValue::Real(f64::INFINITY)),
                    "-Inf" => Ok(FeatureValue::Real(f64::NEG_INFINITY)),
                    "NA" => Ok(FeatureValue::Missing),
                    _ => Err(E::custom(format!("unexpected string `{}`", v))),
                }
            }
            fn visit_none<E: de::Error>(self) -> std::result::Result<FeatureValue, E> {
                Ok(FeatureValue::Missing)
            }
            fn visit_unit<E: de::Error>(self) -> std::result::Result<FeatureValue, E> {
                Ok(FeatureValue::Missing)
            }
        }
        d.deserialize_any(V)
    }
}

/// Serde helper for `Vec<f64>` that may hold infinities.
pub(crate) mod nonfinite_vec {
    use super::FeatureValue;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let vals: Vec<FeatureValue> = v.iter().map(|&x| FeatureValue::Real(x)).collect();
        vals.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let vals = Vec::<FeatureValue>::deserialize(d)?;
        Ok(vals.into_iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect())
    }
}

/// Ordered name -> value map for one feature set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    entries: Vec<(String, FeatureValue)>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<FeatureValue>) {
        self.entries.push((name.into(), value.into()));
    }

    pub fn push_costs(&mut self, prefix: &str, fun_evals: u64, started: Instant) {
        self.push(format!("{}.costs_fun_evals", prefix), FeatureValue::Int(fun_evals as i64));
        self.push(
            format!("{}.costs_runtime", prefix),
            FeatureValue::Real(started.elapsed().as_secs_f64()),
        );
    }

    pub fn extend(&mut self, other: FeatureVector) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<FeatureValue> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Numeric value of `name`; `None` when absent or missing.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|v| v.as_f64())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, FeatureValue)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn is_cost(name: &str) -> bool {
        name.ends_with(".costs_runtime") || name.ends_with(".costs_fun_evals")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    ElaConv,
    ElaCurv,
    ElaDistr,
    ElaLevel,
    ElaLocal,
    ElaMeta,
    CmAngle,
    CmGrad,
    CmConv,
    Gcm,
    Bt,
    Nbc,
    Disp,
    Ic,
    Basic,
    Limo,
    Pca,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 17] = [
        FeatureSet::ElaConv,
        FeatureSet::ElaCurv,
        FeatureSet::ElaDistr,
        FeatureSet::ElaLevel,
        FeatureSet::ElaLocal,
        FeatureSet::ElaMeta,
        FeatureSet::CmAngle,
        FeatureSet::CmGrad,
        FeatureSet::CmConv,
        FeatureSet::Gcm,
        FeatureSet::Bt,
        FeatureSet::Nbc,
        FeatureSet::Disp,
        FeatureSet::Ic,
        FeatureSet::Basic,
        FeatureSet::Limo,
        FeatureSet::Pca,
    ];

    pub fn id(self) -> &'static str {
        match self {
            FeatureSet::ElaConv => "ela_conv",
            FeatureSet::ElaCurv => "ela_curv",
            FeatureSet::ElaDistr => "ela_distr",
            FeatureSet::ElaLevel => "ela_level",
            FeatureSet::ElaLocal => "ela_local",
            FeatureSet::ElaMeta => "ela_meta",
            FeatureSet::CmAngle => "cm_angle",
            FeatureSet::CmGrad => "cm_grad",
            FeatureSet::CmConv => "cm_conv",
            FeatureSet::Gcm => "gcm",
            FeatureSet::Bt => "bt",
            FeatureSet::Nbc => "nbc",
            FeatureSet::Disp => "disp",
            FeatureSet::Ic => "ic",
            FeatureSet::Basic => "basic",
            FeatureSet::Limo => "limo",
            FeatureSet::Pca => "pca",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            FeatureSet::ElaConv => "convexity",
            FeatureSet::ElaCurv => "curvature",
            FeatureSet::ElaDistr => "y-distribution",
            FeatureSet::ElaLevel => "levelset",
            FeatureSet::ElaLocal => "local search",
            FeatureSet::ElaMeta => "meta model",
            FeatureSet::CmAngle => "cell mapping angle",
            FeatureSet::CmGrad => "cell mapping gradient homogeneity",
            FeatureSet::CmConv => "cell mapping convexity",
            FeatureSet::Gcm => "generalized cell mapping",
            FeatureSet::Bt => "barrier trees",
            FeatureSet::Nbc => "nearest better clustering",
            FeatureSet::Disp => "dispersion",
            FeatureSet::Ic => "information content",
            FeatureSet::Basic => "basic",
            FeatureSet::Limo => "linear model",
            FeatureSet::Pca => "principal component analysis",
        }
    }

    pub fn requires_function(self) -> bool {
        matches!(self, FeatureSet::ElaConv | FeatureSet::ElaCurv | FeatureSet::ElaLocal)
    }

    pub fn requires_blocks(self) -> bool {
        matches!(
            self,
            FeatureSet::CmAngle
                | FeatureSet::CmGrad
                | FeatureSet::CmConv
                | FeatureSet::Gcm
                | FeatureSet::Bt
                | FeatureSet::Limo
        )
    }

    /// Whether results depend on the random stream.
    pub fn stochastic(self) -> bool {
        matches!(
            self,
            FeatureSet::ElaConv
                | FeatureSet::ElaCurv
                | FeatureSet::ElaLevel
                | FeatureSet::ElaLocal
                | FeatureSet::Ic
        )
    }

    /// Parses a comma separated list; `all` selects every set.
    pub fn parse_list(s: &str) -> Result<Vec<FeatureSet>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                return Ok(FeatureSet::ALL.to_vec());
            }
            let set: FeatureSet = part.parse()?;
            if !out.contains(&set) {
                out.push(set);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("no feature set selected".to_string()));
        }
        Ok(out)
    }

    /// Checks the object can serve this set.
    pub fn check_available(self, fo: &FeatureObject) -> Result<()> {
        if self.requires_function() && !fo.has_function() {
            return Err(Error::RequiresFunction(self.id().to_string()));
        }
        if self.requires_blocks() && fo.grid().is_none() {
            return Err(Error::RequiresBlocks(self.id().to_string()));
        }
        Ok(())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .iter()
            .copied()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::UnknownFeatureSet(s.to_string()))
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Computes one feature set. `seed` keys the set's private random stream.
pub fn compute_set(
    fo: &FeatureObject,
    set: FeatureSet,
    control: &Control,
    seed: u64,
) -> Result<FeatureVector> {
    set.check_available(fo)?;
    use crate::features::*;
    match set {
        FeatureSet::ElaConv => ela_conv::compute(fo, control, seed),
        FeatureSet::ElaCurv => ela_curv::compute(fo, control, seed),
        FeatureSet::ElaDistr => ela_distr::compute(fo),
        FeatureSet::ElaLevel => ela_level::compute(fo, control, seed),
        FeatureSet::ElaLocal => ela_local::compute(fo, control, seed),
        FeatureSet::ElaMeta => ela_meta::compute(fo),
        FeatureSet::CmAngle => cm::angle(fo),
        FeatureSet::CmGrad => cm::grad(fo),
        FeatureSet::CmConv => cm::conv(fo),
        FeatureSet::Gcm => gcm::gcm_features(fo, control),
        FeatureSet::Bt => gcm::bt_features(fo, control),
        FeatureSet::Nbc => nbc::compute(fo, control, seed),
        FeatureSet::Disp => disp::compute(fo, control),
        FeatureSet::Ic => ic::compute(fo, control, seed),
        FeatureSet::Basic => misc::basic(fo),
        FeatureSet::Limo => misc::limo(fo),
        FeatureSet::Pca => misc::pca(fo, control),
    }
}

/// Canonical feature names of a set under `control`, without computing it.
pub fn feature_names(set: FeatureSet, control: &Control) -> Result<Vec<String>> {
    let mut names = features::names(set, control)?;
    match set {
        FeatureSet::Gcm | FeatureSet::Bt => {}
        _ => {
            names.push(format!("{}.costs_fun_evals", set.id()));
            names.push(format!("{}.costs_runtime", set.id()));
        }
    }
    Ok(names)
}

/// Computes several sets, in parallel on the current rayon pool. Results
/// keep the order of `sets`.
pub fn calculate_features(
    fo: &FeatureObject,
    sets: &[FeatureSet],
    control: &Control,
    seed: u64,
) -> Vec<(FeatureSet, Result<FeatureVector>)> {
    sets.par_iter()
        .map(|&s| (s, compute_set(fo, s, control, seed)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_sets() {
        assert_eq!(FeatureSet::parse_list("all").unwrap().len(), 17);
        assert_eq!(
            FeatureSet::parse_list("nbc, disp").unwrap(),
            vec![FeatureSet::Nbc, FeatureSet::Disp]
        );
        assert!(FeatureSet::parse_list("nope").is_err());
    }

    #[test]
    fn value_serialization() {
        let fv = vec![
            FeatureValue::Real(0.5),
            FeatureValue::Int(3),
            FeatureValue::Missing,
            FeatureValue::Real(f64::NEG_INFINITY),
        ];
        let s = serde_json::to_string(&fv).unwrap();
        assert_eq!(s, r#"[0.5,3,null,"-Inf"]"#);
        let back: Vec<FeatureValue> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, fv);
        assert_eq!(FeatureValue::real(f64::NAN), FeatureValue::Missing);
        assert_eq!(FeatureValue::Missing.to_string(), "NA");
    }

    #[test]
    fn evaluation_and_block_flags() {
        let ev: Vec<_> = FeatureSet::ALL.iter().filter(|s| s.requires_function()).collect();
        assert_eq!(ev.len(), 3);
        let cm: Vec<_> = FeatureSet::ALL.iter().filter(|s| s.requires_blocks()).collect();
        assert_eq!(cm.len(), 6);
    }
}
