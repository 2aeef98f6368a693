//! Long-horizon classification of a parameter set and bisection onto the
//! boundary between herbivore persistence and extinction.

use serde::{Deserialize, Serialize};

use super::integrate::integrate_with;
use super::{EcoState, EcologyParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Coexistence,
    HerbivoreFree,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyConfig {
    /// Simulated time in days.
    pub horizon: f64,
    pub dt: f64,
    /// Extinction threshold as a fraction of `H(0)`.
    pub extinction_fraction: f64,
    /// Largest relative change of `H` over the final tenth of the horizon
    /// that still counts as settled.
    pub settle_tolerance: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            horizon: 36_500.0,
            dt: 0.5,
            extinction_fraction: 1e-3,
            settle_tolerance: 1e-3,
        }
    }
}

/// Summary of one classification run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub label: Label,
    pub h_initial: f64,
    pub h_final: f64,
    pub h_min: f64,
    /// `H` at the start of the final tenth of the horizon.
    pub h_window: f64,
    pub window_start: f64,
    pub horizon: f64,
}

impl Outcome {
    /// Mean per-capita growth rate of `H` over the final window.
    pub fn terminal_growth_rate(&self) -> f64 {
        (self.h_final / self.h_window).ln() / (self.horizon - self.window_start)
    }
}

/// Integrates to the horizon and labels the run: `HerbivoreFree` when
/// `H(t_end)` is below the extinction threshold, `Coexistence` when `H`
/// stayed above it throughout and has settled, `Undetermined` otherwise.
pub fn classify(p: &EcologyParams, s0: &EcoState, cfg: &ClassifyConfig) -> Result<Outcome> {
    p.validate()?;
    if !(s0.h > 0.0) {
        return Err(Error::InvalidParameter(
            "classification needs a positive initial herbivore population".into(),
        ));
    }
    let threshold = cfg.extinction_fraction * s0.h;
    let window_from = 0.9 * cfg.horizon;
    let mut h_min = f64::INFINITY;
    let mut window: Option<(f64, f64)> = None;
    let mut h_final = s0.h;
    integrate_with(s0, p, cfg.horizon, cfg.dt, |t, s| {
        h_min = h_min.min(s.h);
        if window.is_none() && t >= window_from {
            window = Some((t, s.h));
        }
        h_final = s.h;
    })?;
    let (window_start, h_window) = window.unwrap_or((cfg.horizon, h_final));

    let label = if h_final < threshold {
        Label::HerbivoreFree
    } else if h_min > threshold
        && (h_final - h_window).abs() <= cfg.settle_tolerance * h_final
    {
        Label::Coexistence
    } else {
        Label::Undetermined
    };
    Ok(Outcome {
        label,
        h_initial: s0.h,
        h_final,
        h_min,
        h_window,
        window_start,
        horizon: cfg.horizon,
    })
}

/// Classification used by the boundary search. An undetermined run is
/// repeated once on a doubled horizon; if that is still undetermined and
/// `resolve_by_trend` is set, the label follows the terminal trend of `H`:
/// herbivores that dipped below the extinction threshold, or that are
/// declining while below their initial level, count as going extinct, all
/// other persisting runs as coexisting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classifier {
    pub config: ClassifyConfig,
    pub resolve_by_trend: bool,
}

impl Default for Classifier {
    fn default() -> Self {
        Self {
            config: ClassifyConfig::default(),
            resolve_by_trend: true,
        }
    }
}

impl Classifier {
    pub fn strict(config: ClassifyConfig) -> Self {
        Self {
            config,
            resolve_by_trend: false,
        }
    }

    pub fn label(&self, p: &EcologyParams, s0: &EcoState) -> Result<Label> {
        let first = classify(p, s0, &self.config)?;
        if first.label != Label::Undetermined {
            return Ok(first.label);
        }
        let doubled = ClassifyConfig {
            horizon: 2.0 * self.config.horizon,
            ..self.config
        };
        let second = classify(p, s0, &doubled)?;
        if second.label != Label::Undetermined || !self.resolve_by_trend {
            return Ok(second.label);
        }
        let threshold = doubled.extinction_fraction * s0.h;
        let declining = second.terminal_growth_rate() < 0.0 && second.h_final < second.h_initial;
        Ok(if second.h_min < threshold || declining {
            Label::HerbivoreFree
        } else {
            Label::Coexistence
        })
    }
}

/// Parameter scanned by the bisection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanAxis {
    Mu,
    E,
    Alpha,
}

impl ScanAxis {
    pub fn get(self, p: &EcologyParams) -> f64 {
        match self {
            ScanAxis::Mu => p.mu,
            ScanAxis::E => p.e,
            ScanAxis::Alpha => p.alpha,
        }
    }

    pub fn with(self, p: &EcologyParams, v: f64) -> EcologyParams {
        let mut q = *p;
        match self {
            ScanAxis::Mu => q.mu = v,
            ScanAxis::E => q.e = v,
            ScanAxis::Alpha => q.alpha = v,
        }
        q
    }

    /// The two parameters held fixed while this one is scanned, in
    /// `(mu, e, alpha)` order.
    pub fn others(self) -> (ScanAxis, ScanAxis) {
        match self {
            ScanAxis::Mu => (ScanAxis::E, ScanAxis::Alpha),
            ScanAxis::E => (ScanAxis::Mu, ScanAxis::Alpha),
            ScanAxis::Alpha => (ScanAxis::Mu, ScanAxis::E),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::Mu => "mu",
            ScanAxis::E => "e",
            ScanAxis::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectConfig {
    /// Stop once the bracket is narrower than this fraction of its initial width.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BisectConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_iterations: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    /// Parameters at the midpoint of the final bracket.
    pub params: EcologyParams,
    pub axis: ScanAxis,
    pub value: f64,
    /// Final bracket end labelled `Coexistence`.
    pub coexistence_value: f64,
    /// Final bracket end labelled `HerbivoreFree`.
    pub free_value: f64,
    pub iterations: usize,
    pub initial_width: f64,
    pub bracket_width: f64,
    /// Bracket `(coexistence end, free end)` after each iteration.
    pub history: Vec<(f64, f64)>,
}

fn scan_axis(p_in: &EcologyParams, p_out: &EcologyParams) -> Result<ScanAxis> {
    let axes = [ScanAxis::Mu, ScanAxis::E, ScanAxis::Alpha];
    let differing: Vec<ScanAxis> = axes
        .into_iter()
        .filter(|a| a.get(p_in) != a.get(p_out))
        .collect();
    let axis = match differing.as_slice() {
        [] => return Err(Error::InvalidBracket("endpoints coincide".into())),
        [a] => *a,
        _ => {
            return Err(Error::InvalidBracket(
                "endpoints differ in more than one scanned parameter".into(),
            ))
        }
    };
    if axis.with(p_out, axis.get(p_in)) != *p_in {
        return Err(Error::InvalidBracket(
            "endpoints differ outside the scanned parameter".into(),
        ));
    }
    Ok(axis)
}

/// Bisects between a coexisting and a herbivore-free parameter set that
/// differ in exactly one of `mu`, `e`, `alpha`.
pub fn bisect_boundary(
    p_in: &EcologyParams,
    p_out: &EcologyParams,
    s0: &EcoState,
    classifier: &Classifier,
    cfg: &BisectConfig,
) -> Result<BoundaryPoint> {
    let axis = scan_axis(p_in, p_out)?;
    let label_in = classifier.label(p_in, s0)?;
    let label_out = classifier.label(p_out, s0)?;
    let (mut coex, mut free) = match (label_in, label_out) {
        (Label::Coexistence, Label::HerbivoreFree) => (axis.get(p_in), axis.get(p_out)),
        (Label::HerbivoreFree, Label::Coexistence) => (axis.get(p_out), axis.get(p_in)),
        (a, b) if a == b => {
            return Err(Error::InvalidBracket(format!("both endpoints classify as {a:?}")))
        }
        (a, b) => {
            return Err(Error::Bisect(format!(
                "bracket endpoints undetermined ({a:?}, {b:?})"
            )))
        }
    };
    let initial_width = (free - coex).abs();
    let target = cfg.tolerance * initial_width;
    let mut history = Vec::new();
    let mut iterations = 0;
    while (free - coex).abs() >= target {
        if iterations == cfg.max_iterations {
            return Err(Error::Bisect(format!(
                "bracket width {} after {iterations} iterations",
                (free - coex).abs()
            )));
        }
        let mid = 0.5 * (coex + free);
        match classifier.label(&axis.with(p_in, mid), s0)? {
            Label::Coexistence => coex = mid,
            Label::HerbivoreFree => free = mid,
            Label::Undetermined => {
                return Err(Error::Bisect(format!(
                    "{} = {mid} undetermined on the doubled horizon",
                    axis.name()
                )))
            }
        }
        iterations += 1;
        history.push((coex, free));
    }
    let value = 0.5 * (coex + free);
    Ok(BoundaryPoint {
        params: axis.with(p_in, value),
        axis,
        value,
        coexistence_value: coex,
        free_value: free,
        iterations,
        initial_width,
        bracket_width: (free - coex).abs(),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn park() -> (EcologyParams, EcoState) {
        (EcologyParams::dolomiti_bellunesi(), EcoState::dolomiti_bellunesi())
    }

    #[test]
    fn high_mortality_goes_extinct() {
        let (p, s) = park();
        let p = EcologyParams { mu: 10.0 * p.mu, ..p };
        let o = classify(&p, &s, &ClassifyConfig::default()).unwrap();
        assert_eq!(o.label, Label::HerbivoreFree);
    }

    #[test]
    fn no_mortality_and_generous_feeding_persists() {
        let (p, s) = park();
        let p = EcologyParams { mu: 0.0, e: 1.0, a: 5.0, ..p };
        let o = classify(&p, &s, &ClassifyConfig::default()).unwrap();
        assert_eq!(o.label, Label::Coexistence);
    }

    #[test]
    fn bracket_validation() {
        let (p, s) = park();
        let c = Classifier::default();
        let b = BisectConfig::default();
        assert!(matches!(
            bisect_boundary(&p, &p, &s, &c, &b),
            Err(Error::InvalidBracket(_))
        ));
        let two = EcologyParams { mu: 0.05, e: 0.5, ..p };
        assert!(matches!(
            bisect_boundary(&p, &two, &s, &c, &b),
            Err(Error::InvalidBracket(_))
        ));
        let other = EcologyParams { r1: 0.02, mu: 0.05, ..p };
        assert!(matches!(
            bisect_boundary(&p, &other, &s, &c, &b),
            Err(Error::InvalidBracket(_))
        ));
        // both far above the boundary
        let hi1 = EcologyParams { mu: 0.2, ..p };
        let hi2 = EcologyParams { mu: 0.3, ..p };
        assert!(matches!(
            bisect_boundary(&hi1, &hi2, &s, &c, &b),
            Err(Error::InvalidBracket(_))
        ));
    }

    #[test]
    fn axis_accessors() {
        let (p, _) = park();
        for axis in [ScanAxis::Mu, ScanAxis::E, ScanAxis::Alpha] {
            let q = axis.with(&p, 0.123);
            assert_eq!(axis.get(&q), 0.123);
            let (a, b) = axis.others();
            assert_eq!(a.get(&q), a.get(&p));
            assert_eq!(b.get(&q), b.get(&p));
        }
    }
}
