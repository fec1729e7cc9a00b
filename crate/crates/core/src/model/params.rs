use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A model parameter: scalar, vector or row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

/// Named parameters for [`make_model`](super::make_model).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelParams(pub BTreeMap<String, ParamValue>);

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<ParamValue>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<ParamValue>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    /// Rejects keys outside `allowed`.
    pub fn expect_keys(&self, model: &str, allowed: &[&str]) -> Result<()> {
        for key in self.0.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::invalid(format!(
                    "model `{model}` has no parameter `{key}` (expected one of: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn scalar(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(ParamValue::Number(v)) => Ok(Some(*v)),
            Some(ParamValue::Vector(v)) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(Error::invalid(format!("parameter `{key}` must be a scalar"))),
        }
    }

    pub fn scalar_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.scalar(key)?.unwrap_or(default))
    }

    pub fn positive_or(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.scalar_or(key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("parameter `{key}` must be positive and finite, got {v}")));
        }
        Ok(v)
    }

    pub fn dim(&self, key: &str) -> Result<Option<usize>> {
        match self.scalar(key)? {
            None => Ok(None),
            Some(v) if v >= 1.0 && v.fract() == 0.0 && v < 1e9 => Ok(Some(v as usize)),
            Some(v) => Err(Error::invalid(format!("parameter `{key}` must be a positive integer, got {v}"))),
        }
    }

    pub fn vector(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(ParamValue::Number(v)) => Ok(Some(vec![*v])),
            Some(ParamValue::Vector(v)) => Ok(Some(v.clone())),
            Some(ParamValue::Matrix(_)) => Err(Error::invalid(format!("parameter `{key}` must be a vector"))),
        }
    }

    /// A vector parameter of length `n`; scalars broadcast.
    pub fn broadcast(&self, key: &str, n: usize, default: f64) -> Result<Vec<f64>> {
        match self.0.get(key) {
            None => Ok(vec![default; n]),
            Some(ParamValue::Number(v)) => Ok(vec![*v; n]),
            Some(ParamValue::Vector(v)) if v.len() == n => Ok(v.clone()),
            Some(ParamValue::Vector(v)) if v.len() == 1 => Ok(vec![v[0]; n]),
            Some(_) => Err(Error::invalid(format!("parameter `{key}` must be a scalar or a vector of length {n}"))),
        }
    }

    pub fn matrix(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(ParamValue::Matrix(m)) => {
                let cols = m.first().map_or(0, Vec::len);
                if cols == 0 || m.iter().any(|r| r.len() != cols) {
                    return Err(Error::invalid(format!("parameter `{key}` must be a non-empty rectangular matrix")));
                }
                Ok(Some(m.clone()))
            }
            Some(_) => Err(Error::invalid(format!("parameter `{key}` must be a matrix"))),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Number(v)
    }
}

impl From<usize> for ParamValue {
    fn from(v: usize) -> Self {
        ParamValue::Number(v as f64)
    }
}

impl From<Vec<f64>> for ParamValue {
    fn from(v: Vec<f64>) -> Self {
        ParamValue::Vector(v)
    }
}

impl From<&[f64]> for ParamValue {
    fn from(v: &[f64]) -> Self {
        ParamValue::Vector(v.to_vec())
    }
}

impl From<Vec<Vec<f64>>> for ParamValue {
    fn from(v: Vec<Vec<f64>>) -> Self {
        ParamValue::Matrix(v)
    }
}
