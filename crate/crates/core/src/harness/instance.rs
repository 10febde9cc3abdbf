//! Bipartite instances with a fixed online arrival order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance needs at least one offline vertex")]
    NoOffline,
    #[error("arrival {arrival}: offline id {vertex} out of range (n_offline = {n_offline})")]
    VertexRange { arrival: usize, vertex: usize, n_offline: usize },
    #[error("arrival {arrival}: weight {weight} to offline vertex {vertex} is not finite and nonnegative")]
    Weight { arrival: usize, vertex: usize, weight: f64 },
    #[error("bad weight literal `{0}`")]
    Literal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub generator: String,
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// One online vertex: sparse weights to offline vertices.
pub type Arrival = BTreeMap<usize, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n_offline: usize,
    #[serde(serialize_with = "ser_arrivals", deserialize_with = "de_arrivals")]
    pub arrivals: Vec<Arrival>,
    #[serde(default)]
    pub meta: InstanceMeta,
}

impl Instance {
    pub fn new(n_offline: usize, arrivals: Vec<Arrival>, meta: InstanceMeta) -> Result<Self, InstanceError> {
        let inst = Self { n_offline, arrivals, meta };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.n_offline == 0 {
            return Err(InstanceError::NoOffline);
        }
        for (arrival, weights) in self.arrivals.iter().enumerate() {
            for (&vertex, &weight) in weights {
                if vertex >= self.n_offline {
                    return Err(InstanceError::VertexRange { arrival, vertex, n_offline: self.n_offline });
                }
                if !(weight.is_finite() && weight >= 0.0) {
                    return Err(InstanceError::Weight { arrival, vertex, weight });
                }
            }
        }
        Ok(())
    }

    pub fn n_online(&self) -> usize {
        self.arrivals.len()
    }

    /// Weights of arrival `t` to every offline vertex, zero where absent.
    pub fn dense(&self, t: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_offline];
        for (&i, &w) in &self.arrivals[t] {
            out[i] = w;
        }
        out
    }

    /// `n_online × n_offline` weight matrix.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_online()).map(|t| self.dense(t)).collect()
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let inst: Instance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn ser_arrivals<S: Serializer>(arrivals: &[Arrival], s: S) -> Result<S::Ok, S::Error> {
    // shortest round-trip decimal strings
    let text: Vec<BTreeMap<usize, String>> = arrivals
        .iter()
        .map(|a| a.iter().map(|(&i, w)| (i, format!("{w}"))).collect())
        .collect();
    text.serialize(s)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WeightLiteral {
    Text(String),
    Number(f64),
}

fn de_arrivals<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Arrival>, D::Error> {
    let raw: Vec<BTreeMap<usize, WeightLiteral>> = Vec::deserialize(d)?;
    raw.into_iter()
        .map(|a| {
            a.into_iter()
                .map(|(i, w)| match w {
                    WeightLiteral::Number(x) => Ok((i, x)),
                    WeightLiteral::Text(t) => t
                        .trim()
                        .parse::<f64>()
                        .map(|x| (i, x))
                        .map_err(|_| serde::de::Error::custom(InstanceError::Literal(t))),
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut a = Arrival::new();
        a.insert(0, 0.1 + 0.2);
        a.insert(2, 1e-300);
        let inst = Instance::new(3, vec![a, Arrival::new()], InstanceMeta::default()).unwrap();
        let text = inst.to_json();
        assert!(text.contains("\"0.30000000000000004\""));
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.dense(0), vec![0.1 + 0.2, 0.0, 1e-300]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Instance::from_json(r#"{"n_offline":1,"arrivals":[{"1":"1"}]}"#).is_err());
        assert!(Instance::from_json(r#"{"n_offline":1,"arrivals":[{"0":"-1"}]}"#).is_err());
        assert!(Instance::from_json(r#"{"n_offline":1,"arrivals":[{"0":"abc"}]}"#).is_err());
        assert!(Instance::from_json(r#"{"n_offline":0,"arrivals":[]}"#).is_err());
        let ok = Instance::from_json(r#"{"n_offline":2,"arrivals":[{"1":"2.5"},{"0":3}]}"#).unwrap();
        assert_eq!(ok.matrix(), vec![vec![0.0, 2.5], vec![3.0, 0.0]]);
    }
}
