//! Herbivore / grass / trees population model with Beddington-DeAngelis
//! consumption, its fixed-step integrator, attractor classification and the
//! bisection that locates the herbivore extinction boundary in parameter
//! space.
//!
//! ```text
//! H' = -mu H + a e H G / (c + H + alpha G) + b f H T / (g + H + beta T + alpha G)
//! G' = r1 G (1 - G / K1) - a H G / (c + H + alpha G)
//! T' = r2 T (1 - T / K2) - b H T / (g + H + beta T + alpha G)
//! ```
//!
//! Rates are per day.

mod classify;
mod config;
mod integrate;
mod sensitivity;

use serde::{Deserialize, Serialize};

pub use classify::{
    bisect_boundary, classify, BisectConfig, BoundaryPoint, ClassifyConfig, Classifier, Label,
    Outcome, ScanAxis,
};
pub use config::{EcologyConfig, ParamFile};
pub use integrate::{integrate, integrate_with, Trajectory};
pub use sensitivity::{
    build_sensitivity_samples, holdout_rms, GridFailure, HoldoutReport, SampleLabel,
    SensitivityReport, SensitivitySample, SensitivityScan, SurfaceModel, Trend,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcologyParams {
    /// Herbivore metabolic (mortality) rate.
    pub mu: f64,
    /// Grass growth rate.
    pub r1: f64,
    /// Tree growth rate.
    pub r2: f64,
    /// Grass carrying capacity.
    #[serde(rename = "K1")]
    pub k1: f64,
    /// Tree carrying capacity.
    #[serde(rename = "K2")]
    pub k2: f64,
    /// Grass half-saturation constant.
    pub c: f64,
    /// Tree half-saturation constant.
    pub g: f64,
    /// Conversion factor of grass into herbivore biomass.
    pub e: f64,
    /// Conversion factor of trees into herbivore biomass.
    pub f: f64,
    /// Daily grass feeding rate.
    pub a: f64,
    /// Daily tree feeding rate.
    pub b: f64,
    /// Inverse of the maximal grass consumption.
    pub alpha: f64,
    /// Inverse of the maximal tree consumption.
    pub beta: f64,
}

/// Placeholder feeding rates for the park. The source data fixes every other
/// parameter but not these two. With `b = 1` the herbivores persist at a
/// stable coexistence state for `a` between about 0.993 and 0.9992; `a` is
/// pinned near the middle of that band. `b` only shifts the extinction
/// boundary by about 1e-5 per unit.
pub const PARK_FEEDING_A: f64 = 0.998;
pub const PARK_FEEDING_B: f64 = 1.0;

impl EcologyParams {
    /// Dolomiti Bellunesi park parameters, with the placeholder feeding rates
    /// [`PARK_FEEDING_A`] and [`PARK_FEEDING_B`].
    pub fn dolomiti_bellunesi() -> Self {
        Self {
            mu: 0.03,
            r1: 0.01,
            r2: 0.0006,
            k1: 3_469_640.64,
            k2: 15_695_993.39,
            c: 101_862.16,
            g: 1_001_229_580.18,
            e: 0.605,
            f: 0.001,
            a: PARK_FEEDING_A,
            b: PARK_FEEDING_B,
            alpha: 1.0 / 0.05,
            beta: 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
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
            ("a", self.a),
            ("b", self.b),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ];
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be finite and nonnegative"
                )));
            }
        }
        for (name, v) in [("K1", self.k1), ("K2", self.k2), ("c", self.c), ("g", self.g)] {
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("e", self.e), ("f", self.f)] {
            if v > 1.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} exceeds 1")));
            }
        }
        Ok(())
    }

    /// Herbivore-free equilibrium `(0, K1, K2)`.
    pub fn herbivore_free_equilibrium(&self) -> EcoState {
        EcoState::new(0.0, self.k1, self.k2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcoState {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

impl EcoState {
    pub const fn new(h: f64, g: f64, t: f64) -> Self {
        Self { h, g, t }
    }

    /// Observed park populations at the start of the record.
    pub fn dolomiti_bellunesi() -> Self {
        Self::new(268.750, 2_313_093.76, 1_046_399.56)
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.g.is_finite() && self.t.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() || self.h < 0.0 || self.g < 0.0 || self.t < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "state ({}, {}, {}) must be finite and nonnegative",
                self.h, self.g, self.t
            )));
        }
        Ok(())
    }

    #[inline]
    fn axpy(&self, k: f64, d: &EcoState) -> EcoState {
        EcoState::new(self.h + k * d.h, self.g + k * d.g, self.t + k * d.t)
    }
}

/// Time derivatives `(H', G', T')`.
#[inline]
pub fn rhs(s: &EcoState, p: &EcologyParams) -> EcoState {
    let EcoState { h, g: gr, t: tr } = *s;
    let grass_den = p.c + h + p.alpha * gr;
    let tree_den = p.g + h + p.beta * tr + p.alpha * gr;
    let grass_uptake = h * gr / grass_den;
    let tree_uptake = h * tr / tree_den;
    EcoState {
        h: -p.mu * h + p.a * p.e * grass_uptake + p.b * p.f * tree_uptake,
        g: p.r1 * gr * (1.0 - gr / p.k1) - p.a * grass_uptake,
        t: p.r2 * tr * (1.0 - tr / p.k2) - p.b * tree_uptake,
    }
}
