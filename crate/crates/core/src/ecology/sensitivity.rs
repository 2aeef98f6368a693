//! Sensitivity samples on the extinction boundary `mu*(e, alpha)` and the
//! interpolated surface through them.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{bisect_boundary, BisectConfig, Classifier, Label, ScanAxis};
use super::{EcoState, EcologyParams};
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, point_in_hull, Point2};
use crate::pum::{build_pum, PumConfig, PumModel, ScatteredData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleLabel {
    Coexistence,
    HerbivoreFree,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySample {
    pub mu: f64,
    pub e: f64,
    pub alpha: f64,
    pub label: SampleLabel,
    pub iterations: usize,
    /// Final bisection bracket in `mu`.
    pub bracket_width: f64,
    /// Bracket width relative to the initial bisection interval.
    pub relative_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub e: f64,
    pub alpha: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub samples: Vec<SensitivitySample>,
    pub failures: Vec<GridFailure>,
}

/// Bisection along `mu` at each `(e, alpha)` grid point.
///
/// For every grid point the scan walks down from the top of `mu_range` in
/// `bracket_steps` equal steps until the first coexisting value, then
/// bisects between it and the previous (herbivore-free) value. Walking from
/// the herbivore-free end locates the boundary where herbivores can first
/// invade; below it the coexistence state may lose stability again, so the
/// step has to be small enough not to jump across the coexistence band.
#[derive(Debug, Clone)]
pub struct SensitivityScan {
    pub base: EcologyParams,
    pub initial_state: EcoState,
    /// `(e, alpha)` pairs.
    pub grid: Vec<(f64, f64)>,
    pub mu_range: (f64, f64),
    pub bracket_steps: usize,
    pub classifier: Classifier,
    pub bisect: BisectConfig,
    pub parallel: bool,
}

impl SensitivityScan {
    pub fn new(base: EcologyParams, initial_state: EcoState, grid: Vec<(f64, f64)>, mu_range: (f64, f64)) -> Self {
        Self {
            base,
            initial_state,
            grid,
            mu_range,
            bracket_steps: 200,
            classifier: Classifier::default(),
            bisect: BisectConfig::default(),
            parallel: true,
        }
    }

    /// Tensor grid with inclusive endpoints, `e` varying fastest.
    pub fn regular_grid(e: (f64, f64), ne: usize, alpha: (f64, f64), nalpha: usize) -> Vec<(f64, f64)> {
        let lin = |(lo, hi): (f64, f64), n: usize, i: usize| {
            if n <= 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        (0..nalpha)
            .flat_map(|j| (0..ne).map(move |i| (lin(e, ne, i), lin(alpha, nalpha, j))))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("empty (e, alpha) grid".into()));
        }
        let (lo, hi) = self.mu_range;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu range ({lo}, {hi}) is not an interval")));
        }
        if self.bracket_steps == 0 {
            return Err(Error::InvalidParameter("bracket_steps must be positive".into()));
        }
        self.base.validate()?;
        self.initial_state.validate()?;
        for &(e, alpha) in &self.grid {
            EcologyParams { e, alpha, ..self.base }.validate()?;
        }
        Ok(())
    }

    fn label(&self, p: &EcologyParams) -> Result<Label> {
        self.classifier.label(p, &self.initial_state)
    }

    /// Finds `(coexisting mu, herbivore-free mu)` one march step apart.
    fn bracket(&self, p: &EcologyParams) -> Result<(f64, f64)> {
        let (lo, hi) = self.mu_range;
        let top = ScanAxis::Mu.with(p, hi);
        match self.label(&top)? {
            Label::HerbivoreFree => {}
            other => {
                return Err(Error::InvalidBracket(format!(
                    "top of the mu range classifies as {other:?}"
                )))
            }
        }
        let step = (hi - lo) / self.bracket_steps as f64;
        let mut free = hi;
        for k in 1..=self.bracket_steps {
            let mu = if k == self.bracket_steps { lo } else { hi - k as f64 * step };
            match self.label(&ScanAxis::Mu.with(p, mu))? {
                Label::Coexistence => return Ok((mu, free)),
                Label::HerbivoreFree => free = mu,
                Label::Undetermined => {
                    return Err(Error::Bisect(format!("mu = {mu} undetermined")))
                }
            }
        }
        Err(Error::InvalidBracket("no coexisting mu in range".into()))
    }

    fn sample(&self, e: f64, alpha: f64) -> Result<SensitivitySample> {
        let p = EcologyParams { e, alpha, ..self.base };
        let (coex, free) = self.bracket(&p)?;
        let bp = bisect_boundary(
            &ScanAxis::Mu.with(&p, coex),
            &ScanAxis::Mu.with(&p, free),
            &self.initial_state,
            &self.classifier,
            &self.bisect,
        )?;
        Ok(SensitivitySample {
            mu: bp.value,
            e,
            alpha,
            label: SampleLabel::Boundary,
            iterations: bp.iterations,
            bracket_width: bp.bracket_width,
            relative_width: bp.bracket_width / bp.initial_width,
        })
    }
}

/// Runs the scan. Grid points whose bracket or bisection fails are reported
/// in `failures`; only invalid scan settings are an error.
pub fn build_sensitivity_samples(scan: &SensitivityScan) -> Result<SensitivityReport> {
    scan.validate()?;
    let run = |&(e, alpha): &(f64, f64)| (e, alpha, scan.sample(e, alpha));
    let results: Vec<_> = if scan.parallel {
        scan.grid.par_iter().map(run).collect()
    } else {
        scan.grid.iter().map(run).collect()
    };
    let mut report = SensitivityReport {
        samples: Vec::new(),
        failures: Vec::new(),
    };
    for (e, alpha, r) in results {
        match r {
            Ok(s) => report.samples.push(s),
            Err(err) => {
                log::warn!("grid point (e = {e}, alpha = {alpha}): {err}");
                report.failures.push(GridFailure {
                    e,
                    alpha,
                    reason: err.to_string(),
                })
            }
        }
    }
    Ok(report)
}

/// Trend removed before the residuals are interpolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    /// Interpolate the raw values.
    None,
    /// Least-squares plane in the normalized coordinates.
    #[default]
    Linear,
}

/// PUM surface `mu*(e, alpha)`. The two parameters live on different scales,
/// so sites are mapped affinely onto the unit square before fitting.
///
/// The boundary sits on a large offset with a mild slope, which a
/// compactly supported interpolant without polynomial part reproduces
/// poorly away from the sites; with [`Trend::Linear`] a plane is fitted
/// first and only the residuals go through the partition of unity. The
/// result still interpolates every sample.
#[derive(Debug, Clone)]
pub struct SurfaceModel {
    model: PumModel,
    e_range: (f64, f64),
    alpha_range: (f64, f64),
    /// `c0 + c1 u + c2 v` in unit-square coordinates.
    plane: [f64; 3],
}

fn fit_plane(sites: &[Point2], values: &[f64]) -> Result<[f64; 3]> {
    let a = DMatrix::from_fn(sites.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => sites[i].x,
        _ => sites[i].y,
    });
    let b = DVector::from_column_slice(values);
    let c = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::DegenerateGeometry(format!("trend fit: {e}")))?;
    Ok([c[0], c[1], c[2]])
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn unit(e_range: (f64, f64), alpha_range: (f64, f64), e: f64, alpha: f64) -> Point2 {
    Point2::new(
        (e - e_range.0) / (e_range.1 - e_range.0),
        (alpha - alpha_range.0) / (alpha_range.1 - alpha_range.0),
    )
}

fn plane_at(c: &[f64; 3], p: Point2) -> f64 {
    c[0] + c[1] * p.x + c[2] * p.y
}

impl SurfaceModel {
    pub fn fit(samples: &[SensitivitySample], config: &PumConfig, trend: Trend) -> Result<Self> {
        let e_range = span(samples.iter().map(|s| s.e));
        let alpha_range = span(samples.iter().map(|s| s.alpha));
        for (name, (lo, hi)) in [("e", e_range), ("alpha", alpha_range)] {
            if !(hi > lo) {
                return Err(Error::DegenerateGeometry(format!("samples do not vary in {name}")));
            }
        }
        let sites: Vec<Point2> = samples
            .iter()
            .map(|s| unit(e_range, alpha_range, s.e, s.alpha))
            .collect();
        let mut values: Vec<f64> = samples.iter().map(|s| s.mu).collect();
        let plane = match trend {
            Trend::None => [0.0; 3],
            Trend::Linear => fit_plane(&sites, &values)?,
        };
        for (v, p) in values.iter_mut().zip(&sites) {
            *v -= plane_at(&plane, *p);
        }
        let model = build_pum(ScatteredData::new(sites, values)?, config)?;
        Ok(Self {
            model,
            e_range,
            alpha_range,
            plane,
        })
    }

    fn to_unit(&self, e: f64, alpha: f64) -> Point2 {
        unit(self.e_range, self.alpha_range, e, alpha)
    }

    pub fn model(&self) -> &PumModel {
        &self.model
    }

    pub fn contains(&self, e: f64, alpha: f64) -> bool {
        point_in_hull(self.to_unit(e, alpha), self.model.hull())
    }

    pub fn eval(&self, e: f64, alpha: f64) -> Result<f64> {
        let u = self.to_unit(e, alpha);
        Ok(self.model.eval(u)? + plane_at(&self.plane, u))
    }

    /// `(e, alpha, mu)` on an `ne x nalpha` grid over the sample range,
    /// skipping nodes outside the sample hull.
    pub fn eval_grid(&self, ne: usize, nalpha: usize) -> Result<Vec<(f64, f64, f64)>> {
        let nodes = SensitivityScan::regular_grid(self.e_range, ne, self.alpha_range, nalpha);
        let mut out = Vec::with_capacity(nodes.len());
        for (e, alpha) in nodes {
            if self.contains(e, alpha) {
                out.push((e, alpha, self.eval(e, alpha)?));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub train: usize,
    pub held_out: usize,
    pub rms: f64,
    pub max_abs: f64,
}

/// Refits the surface without a random `fraction` of the samples and
/// measures the error on them. Vertices of the sample hull always stay in
/// the training set so held-out points remain inside the fitted domain.
pub fn holdout_rms(
    samples: &[SensitivitySample],
    fraction: f64,
    seed: u64,
    config: &PumConfig,
    trend: Trend,
) -> Result<HoldoutReport> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("holdout fraction {fraction} outside (0, 1)")));
    }
    let pts: Vec<Point2> = samples.iter().map(|s| Point2::new(s.e, s.alpha)).collect();
    let hull = convex_hull(&pts)?;
    let mut candidates: Vec<usize> = (0..samples.len())
        .filter(|&i| !hull.vertices().contains(&pts[i]))
        .collect();
    let count = ((fraction * samples.len() as f64).round() as usize).min(candidates.len());
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut held = vec![false; samples.len()];
    for &i in &candidates[..count] {
        held[i] = true;
    }
    let train: Vec<SensitivitySample> = samples
        .iter()
        .zip(&held)
        .filter(|(_, &h)| !h)
        .map(|(s, _)| *s)
        .collect();
    let surface = SurfaceModel::fit(&train, config, trend)?;
    let mut sq = 0.0;
    let mut max_abs = 0.0f64;
    for (s, _) in samples.iter().zip(&held).filter(|(_, &h)| h) {
        let err = surface.eval(s.e, s.alpha)? - s.mu;
        sq += err * err;
        max_abs = max_abs.max(err.abs());
    }
    Ok(HoldoutReport {
        train: train.len(),
        held_out: count,
        rms: if count == 0 { 0.0 } else { (sq / count as f64).sqrt() },
        max_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_grid_layout() {
        let g = SensitivityScan::regular_grid((0.0, 1.0), 3, (10.0, 20.0), 2);
        assert_eq!(
            g,
            vec![(0.0, 10.0), (0.5, 10.0), (1.0, 10.0), (0.0, 20.0), (0.5, 20.0), (1.0, 20.0)]
        );
        assert_eq!(SensitivityScan::regular_grid((0.3, 1.0), 1, (2.0, 3.0), 1), vec![(0.3, 2.0)]);
    }

    #[test]
    fn scan_validation() {
        let p = EcologyParams::dolomiti_bellunesi();
        let s = EcoState::dolomiti_bellunesi();
        let empty = SensitivityScan::new(p, s, vec![], (0.02, 0.04));
        assert!(build_sensitivity_samples(&empty).is_err());
        let reversed = SensitivityScan::new(p, s, vec![(0.6, 20.0)], (0.04, 0.02));
        assert!(build_sensitivity_samples(&reversed).is_err());
        let bad_e = SensitivityScan::new(p, s, vec![(1.5, 20.0)], (0.02, 0.04));
        assert!(build_sensitivity_samples(&bad_e).is_err());
    }

    #[test]
    fn non_bracketing_range_is_reported_not_fatal() {
        let p = EcologyParams::dolomiti_bellunesi();
        let s = EcoState::dolomiti_bellunesi();
        let mut scan = SensitivityScan::new(p, s, vec![(0.6, 20.0)], (0.2, 0.3));
        scan.bracket_steps = 2;
        let r = build_sensitivity_samples(&scan).unwrap();
        assert!(r.samples.is_empty());
        assert_eq!(r.failures.len(), 1);
    }

    fn synthetic(n: usize) -> Vec<SensitivitySample> {
        SensitivityScan::regular_grid((0.55, 0.65), n, (18.0, 22.0), n)
            .into_iter()
            .map(|(e, alpha)| SensitivitySample {
                mu: e / alpha,
                e,
                alpha,
                label: SampleLabel::Boundary,
                iterations: 0,
                bracket_width: 0.0,
                relative_width: 0.0,
            })
            .collect()
    }

    #[test]
    fn surface_reproduces_smooth_boundary() {
        let samples = synthetic(10);
        let surface = SurfaceModel::fit(&samples, &PumConfig::default(), Trend::Linear).unwrap();
        for s in &samples {
            assert!((surface.eval(s.e, s.alpha).unwrap() - s.mu).abs() < 1e-12);
        }
        let grid = surface.eval_grid(7, 5).unwrap();
        assert_eq!(grid.len(), 35);
        for (e, alpha, mu) in grid {
            assert!((mu - e / alpha).abs() < 1e-3 * (e / alpha), "{e} {alpha} {mu}");
        }
        let raw = SurfaceModel::fit(&samples, &PumConfig::default(), Trend::None).unwrap();
        for s in &samples {
            assert!((raw.eval(s.e, s.alpha).unwrap() - s.mu).abs() < 1e-12);
        }
        assert!(SurfaceModel::fit(&samples[..4], &PumConfig::default(), Trend::Linear).is_err());
    }

    #[test]
    fn holdout_keeps_hull_vertices() {
        let samples = synthetic(10);
        let r = holdout_rms(&samples, 0.2, 7, &PumConfig::default(), Trend::Linear).unwrap();
        assert_eq!(r.held_out, 20);
        assert_eq!(r.train, 80);
        assert!(r.rms < 1e-3 * 0.03, "rms {}", r.rms);
        let again = holdout_rms(&samples, 0.2, 7, &PumConfig::default(), Trend::Linear).unwrap();
        assert_eq!(r, again);
    }
}
