//! JSON parameter files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EcoState, EcologyParams};
use crate::error::{Error, Result};

/// Parameter file as written by users. Every field is optional on disk so
/// that missing entries can be reported by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub mu: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    #[serde(rename = "K1")]
    pub k1: Option<f64>,
    #[serde(rename = "K2")]
    pub k2: Option<f64>,
    pub c: Option<f64>,
    pub g: Option<f64>,
    pub e: Option<f64>,
    pub f: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub initial_state: Option<EcoState>,
    /// Days.
    pub dt: Option<f64>,
    /// Days.
    pub horizon: Option<f64>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcologyConfig {
    pub params: EcologyParams,
    pub initial_state: EcoState,
    pub dt: f64,
    pub horizon: f64,
}

impl ParamFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("parameter file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Resolves the file. Missing feeding rates `a`/`b` give
    /// [`Error::MissingParameters`]; any other missing entry is malformed input.
    pub fn resolve(&self) -> Result<EcologyConfig> {
        let named = [
            ("mu", self.mu),
            ("r1", self.r1),
            ("r2", self.r2),
            ("K1", self.k1),
            ("K2", self.k2),
            ("c", self.c),
            ("g", self.g),
            ("e", self.e),
            ("f", self.f),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("dt", self.dt),
            ("horizon", self.horizon),
        ];
        let mut missing: Vec<&str> = named.iter().filter(|(_, v)| v.is_none()).map(|(n, _)| *n).collect();
        if self.initial_state.is_none() {
            missing.push("initial_state");
        }
        if !missing.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "parameter file lacks {}",
                missing.join(", ")
            )));
        }
        let feeding: Vec<String> = [("a", self.a), ("b", self.b)]
            .iter()
            .filter(|(_, v)| v.is_none())
            .map(|(n, _)| n.to_string())
            .collect();
        if !feeding.is_empty() {
            return Err(Error::MissingParameters(feeding));
        }
        let v = |o: Option<f64>| o.expect("checked above");
        let params = EcologyParams {
            mu: v(self.mu),
            r1: v(self.r1),
            r2: v(self.r2),
            k1: v(self.k1),
            k2: v(self.k2),
            c: v(self.c),
            g: v(self.g),
            e: v(self.e),
            f: v(self.f),
            a: v(self.a),
            b: v(self.b),
            alpha: v(self.alpha),
            beta: v(self.beta),
        };
        params.validate()?;
        let initial_state = self.initial_state.expect("checked above");
        initial_state.validate()?;
        let (dt, horizon) = (v(self.dt), v(self.horizon));
        for (name, x) in [("dt", dt), ("horizon", horizon)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {x} must be positive")));
            }
        }
        Ok(EcologyConfig {
            params,
            initial_state,
            dt,
            horizon,
        })
    }
}

impl From<&EcologyConfig> for ParamFile {
    fn from(c: &EcologyConfig) -> Self {
        let p = &c.params;
        Self {
            mu: Some(p.mu),
            r1: Some(p.r1),
            r2: Some(p.r2),
            k1: Some(p.k1),
            k2: Some(p.k2),
            c: Some(p.c),
            g: Some(p.g),
            e: Some(p.e),
            f: Some(p.f),
            a: Some(p.a),
            b: Some(p.b),
            alpha: Some(p.alpha),
            beta: Some(p.beta),
            initial_state: Some(c.initial_state),
            dt: Some(c.dt),
            horizon: Some(c.horizon),
        }
    }
}

impl EcologyConfig {
    /// Park parameters and initial state, daily step of half a day over ten years.
    pub fn dolomiti_bellunesi() -> Self {
        Self {
            params: EcologyParams::dolomiti_bellunesi(),
            initial_state: EcoState::dolomiti_bellunesi(),
            dt: 0.5,
            horizon: 3650.0,
        }
    }
}
