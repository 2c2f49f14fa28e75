use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use super::{Family, ModelError};

/// One hyperparameter value as printed in the search grids: `None`, a
/// boolean, an integer, a float or a string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Null => write!(f, "None"),
            ParamValue::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x:?}"),
            ParamValue::Str(s) => write!(f, "'{s}'"),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Str(v.to_string())
    }
}

pub type Hyperparams = BTreeMap<String, ParamValue>;

/// Builds a [`Hyperparams`] map: `hyperparams!{"C" => 10.0, "kernel" => "rbf"}`.
#[macro_export]
macro_rules! hyperparams {
    () => { $crate::classifiers::Hyperparams::new() };
    ($($name:expr => $value:expr),+ $(,)?) => {{
        let mut map = $crate::classifiers::Hyperparams::new();
        $( map.insert($name.to_string(), $crate::classifiers::ParamValue::from($value)); )+
        map
    }};
}

/// Typed access to a family's hyperparameters with sklearn-style defaults.
pub(crate) struct ParamReader<'a> {
    family: Family,
    params: &'a Hyperparams,
}

impl<'a> ParamReader<'a> {
    pub fn new(family: Family, params: &'a Hyperparams) -> Self {
        ParamReader { family, params }
    }

    fn invalid(&self, name: &str, reason: impl Into<String>) -> ModelError {
        ModelError::InvalidParam { family: self.family, name: name.to_string(), reason: reason.into() }
    }

    fn get(&self, name: &str) -> Option<&'a ParamValue> {
        self.params.get(name)
    }

    pub fn f64(&self, name: &str, default: f64) -> Result<f64, ModelError> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Float(v)) => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            Some(other) => Err(self.invalid(name, format!("expected a number, got {other}"))),
        }
    }

    pub fn positive_f64(&self, name: &str, default: f64) -> Result<f64, ModelError> {
        let v = self.f64(name, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.invalid(name, format!("must be positive, got {v}")))
        }
    }

    pub fn fraction(&self, name: &str, default: f64) -> Result<f64, ModelError> {
        let v = self.f64(name, default)?;
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(self.invalid(name, format!("must lie in [0, 1], got {v}")))
        }
    }

    pub fn usize(&self, name: &str, default: usize) -> Result<usize, ModelError> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Int(v)) if *v >= 0 => Ok(*v as usize),
            Some(other) => Err(self.invalid(name, format!("expected a non-negative integer, got {other}"))),
        }
    }

    pub fn opt_usize(&self, name: &str) -> Result<Option<usize>, ModelError> {
        match self.get(name) {
            None | Some(ParamValue::Null) => Ok(None),
            Some(_) => self.usize(name, 0).map(Some),
        }
    }

    pub fn bool(&self, name: &str, default: bool) -> Result<bool, ModelError> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Bool(b)) => Ok(*b),
            Some(other) => Err(self.invalid(name, format!("expected a boolean, got {other}"))),
        }
    }

    /// A string drawn from `choices`; `None` maps to the literal `"None"`.
    pub fn choice(&self, name: &str, default: &'static str, choices: &[&'static str]) -> Result<&'static str, ModelError> {
        let raw = match self.get(name) {
            None => return Ok(default),
            Some(ParamValue::Str(s)) => s.as_str(),
            Some(ParamValue::Null) => "None",
            Some(other) => return Err(self.invalid(name, format!("expected one of {choices:?}, got {other}"))),
        };
        choices
            .iter()
            .find(|c| c.eq_ignore_ascii_case(raw))
            .copied()
            .ok_or_else(|| self.invalid(name, format!("expected one of {choices:?}, got '{raw}'")))
    }

    pub fn raw(&self, name: &str) -> Option<&'a ParamValue> {
        self.get(name)
    }

    pub fn reject(&self, name: &str, reason: impl Into<String>) -> ModelError {
        self.invalid(name, reason)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shapes() {
        let p: Hyperparams = serde_json::from_str(r#"{"C": 10, "gamma": "scale", "max_depth": null, "tol": 0.01, "dual": false}"#).unwrap();
        assert_eq!(p["C"], ParamValue::Int(10));
        assert_eq!(p["gamma"], ParamValue::Str("scale".into()));
        assert_eq!(p["max_depth"], ParamValue::Null);
        assert_eq!(p["tol"], ParamValue::Float(0.01));
        assert_eq!(p["dual"], ParamValue::Bool(false));
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"C":10,"dual":false,"gamma":"scale","max_depth":null,"tol":0.01}"#);
    }

    #[test]
    fn reader_conversions() {
        let p = hyperparams! {"C" => 1i64, "kernel" => "RBF"};
        let r = ParamReader::new(Family::Svm, &p);
        assert_eq!(r.f64("C", 0.0).unwrap(), 1.0);
        assert_eq!(r.choice("kernel", "rbf", &["linear", "rbf"]).unwrap(), "rbf");
        assert!(r.usize("kernel", 0).is_err());
        assert_eq!(r.f64("missing", 2.5).unwrap(), 2.5);
    }
}
