//! Quasi-random sites and the classic bivariate test function.

use crate::geometry::Point2;

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let inv = 1.0 / base as f64;
    while index > 0 {
        f *= inv;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// First `n` points of the (2, 3) Halton sequence, skipping the origin.
pub fn halton_points(n: usize) -> Vec<Point2> {
    (1..=n as u64)
        .map(|i| Point2::new(halton(i, 2), halton(i, 3)))
        .collect()
}

/// Franke's function on the unit square.
pub fn franke(x: f64, y: f64) -> f64 {
    let a = 0.75 * (-((9.0 * x - 2.0).powi(2) + (9.0 * y - 2.0).powi(2)) / 4.0).exp();
    let b = 0.75 * (-(9.0 * x + 1.0).powi(2) / 49.0 - (9.0 * y + 1.0) / 10.0).exp();
    let c = 0.5 * (-((9.0 * x - 7.0).powi(2) + (9.0 * y - 3.0).powi(2)) / 4.0).exp();
    let d = 0.2 * (-(9.0 * x - 4.0).powi(2) - (9.0 * y - 7.0).powi(2)).exp();
    a + b + c - d
}
