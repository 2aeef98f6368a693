//! Classical fixed-step RK4 with nonnegativity clamping.

use super::{rhs, EcoState, EcologyParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<EcoState>,
    /// Steps after which at least one population had to be clamped to zero.
    pub clamped_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &EcoState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_args(t_end: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon {t_end} must be positive")));
    }
    Ok(())
}

#[inline]
fn rk4_step(s: &EcoState, p: &EcologyParams, h: f64) -> EcoState {
    let k1 = rhs(s, p);
    let k2 = rhs(&s.axpy(0.5 * h, &k1), p);
    let k3 = rhs(&s.axpy(0.5 * h, &k2), p);
    let k4 = rhs(&s.axpy(h, &k3), p);
    let w = h / 6.0;
    EcoState::new(
        s.h + w * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h),
        s.g + w * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g),
        s.t + w * (k1.t + 2.0 * k2.t + 2.0 * k3.t + k4.t),
    )
}

/// Integrates from `t = 0` to `t_end`, calling `visit` on every grid time
/// (including both ends). The last step is shortened to land on `t_end`.
/// Returns the number of clamped steps.
pub fn integrate_with<F>(
    s0: &EcoState,
    p: &EcologyParams,
    t_end: f64,
    dt: f64,
    mut visit: F,
) -> Result<usize>
where
    F: FnMut(f64, &EcoState),
{
    check_args(t_end, dt)?;
    s0.validate()?;
    let steps = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut s = *s0;
    let mut t = 0.0;
    let mut clamped = 0usize;
    visit(t, &s);
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { k as f64 * dt };
        let mut next = rk4_step(&s, p, t_next - t);
        if !next.is_finite() {
            return Err(Error::NumericalBlowup { t: t_next });
        }
        if next.h < 0.0 || next.g < 0.0 || next.t < 0.0 {
            next = EcoState::new(next.h.max(0.0), next.g.max(0.0), next.t.max(0.0));
            clamped += 1;
        }
        s = next;
        t = t_next;
        visit(t, &s);
    }
    if clamped > 0 {
        log::debug!("{clamped} step(s) clamped to nonnegative populations");
    }
    Ok(clamped)
}

pub fn integrate(s0: &EcoState, p: &EcologyParams, t_end: f64, dt: f64) -> Result<Trajectory> {
    check_args(t_end, dt)?;
    let cap = (t_end / dt).ceil() as usize + 1;
    let mut times = Vec::with_capacity(cap.min(1 << 24));
    let mut states = Vec::with_capacity(cap.min(1 << 24));
    let clamped_steps = integrate_with(s0, p, t_end, dt, |t, s| {
        times.push(t);
        states.push(*s);
    })?;
    Ok(Trajectory { times, states, clamped_steps })
}
