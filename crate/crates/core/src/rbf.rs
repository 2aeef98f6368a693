//! Compactly supported kernels and local RBF interpolation on one patch.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Relative ridge added to the diagonal when the first factorization fails.
pub const RIDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `(1 - eps r)_+^4 (4 eps r + 1)`
    WendlandC2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub family: KernelFamily,
    pub epsilon: f64,
}

impl Kernel {
    pub fn wendland_c2(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidShape(epsilon));
        }
        Ok(Self {
            family: KernelFamily::WendlandC2,
            epsilon,
        })
    }

    /// Radius beyond which the kernel vanishes.
    pub fn support(&self) -> f64 {
        1.0 / self.epsilon
    }

    /// Kernel value at a distance already known to be nonnegative.
    #[inline]
    pub fn phi(&self, r: f64) -> f64 {
        match self.family {
            KernelFamily::WendlandC2 => {
                let s = self.epsilon * r;
                if s >= 1.0 {
                    0.0
                } else {
                    let t = 1.0 - s;
                    let t2 = t * t;
                    t2 * t2 * (4.0 * s + 1.0)
                }
            }
        }
    }
}

pub fn kernel_eval(k: &Kernel, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidRadius(r));
    }
    Ok(k.phi(r))
}

/// Builds `A_ij = phi(|x_i - x_j|)` and the right-hand side. Sites closer
/// than `dup_tol` are rejected since they make `A` singular.
pub fn assemble_system(
    patch_sites: &[Point2],
    values: &[f64],
    k: &Kernel,
    dup_tol: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = patch_sites.len();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: values.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = patch_sites[i].dist(patch_sites[j]);
            if r <= dup_tol {
                return Err(Error::DuplicateSites(i, j));
            }
            let v = k.phi(r);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok((a, DVector::from_column_slice(values)))
}

/// Solves the symmetric system by Cholesky, retrying once with a small ridge.
/// `patch` only labels the error.
pub fn solve_local(a: &DMatrix<f64>, f: &DVector<f64>, patch: usize) -> Result<DVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(f));
    }
    let ridge = RIDGE * a.trace() / n.max(1) as f64;
    let mut reg = a.clone();
    for i in 0..n {
        reg[(i, i)] += ridge;
    }
    log::debug!("patch {patch}: regularized with ridge {ridge:e}");
    reg.cholesky()
        .map(|ch| ch.solve(f))
        .ok_or(Error::IllConditionedPatch { patch })
}

/// Interpolant `sum_i lambda_i phi(|p - x_i|)` over a subset of the global sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalInterpolant {
    pub site_indices: Vec<usize>,
    pub lambda: Vec<f64>,
    pub kernel: Kernel,
}

impl LocalInterpolant {
    /// Assembles and solves the local system on `indices` of the global data.
    pub fn fit(
        sites: &[Point2],
        values: &[f64],
        indices: Vec<usize>,
        kernel: Kernel,
        dup_tol: f64,
        patch: usize,
    ) -> Result<Self> {
        let local_sites: Vec<Point2> = indices.iter().map(|&i| sites[i]).collect();
        let local_values: Vec<f64> = indices.iter().map(|&i| values[i]).collect();
        let (a, f) = assemble_system(&local_sites, &local_values, &kernel, dup_tol).map_err(
            |e| match e {
                Error::DuplicateSites(i, j) => Error::DuplicateSites(indices[i], indices[j]),
                other => other,
            },
        )?;
        let lambda = solve_local(&a, &f, patch)?;
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditionedPatch { patch });
        }
        Ok(Self {
            site_indices: indices,
            lambda: lambda.as_slice().to_vec(),
            kernel,
        })
    }

    pub fn len(&self) -> usize {
        self.site_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_indices.is_empty()
    }
}

pub fn eval_local(interp: &LocalInterpolant, sites: &[Point2], p: Point2) -> f64 {
    interp
        .site_indices
        .iter()
        .zip(&interp.lambda)
        .map(|(&i, &l)| l * interp.kernel.phi(p.dist(sites[i])))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k1() -> Kernel {
        Kernel::wendland_c2(1.0).unwrap()
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_eval(&k1(), 0.0).unwrap(), 1.0);
        assert_eq!(kernel_eval(&k1(), 1.0).unwrap(), 0.0);
        assert_eq!(kernel_eval(&k1(), 3.7).unwrap(), 0.0);
        assert_eq!(kernel_eval(&k1(), 0.5).unwrap(), 0.1875);
        let k = Kernel::wendland_c2(4.0).unwrap();
        assert_eq!(kernel_eval(&k, 0.125).unwrap(), 0.1875);
        assert_eq!(kernel_eval(&k1(), -0.1), Err(Error::InvalidRadius(-0.1)));
        assert!(kernel_eval(&k1(), f64::NAN).is_err());
        assert!(Kernel::wendland_c2(0.0).is_err());
        assert!(Kernel::wendland_c2(-2.0).is_err());
    }

    #[test]
    fn kernel_shape() {
        let k = Kernel::wendland_c2(2.5).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let r = 0.5 * i as f64 / 1000.0;
            let v = k.phi(r);
            assert!(v >= 0.0);
            assert!(v <= prev, "not monotone at r = {r}");
            prev = v;
        }
        // continuity at the edge of the support
        assert!(k.phi(0.4 * (1.0 - 1e-9)) < 1e-30);
    }

    #[test]
    fn assemble_examples() {
        let (a, f) = assemble_system(&[Point2::new(1.0, 2.0)], &[3.0], &k1(), 1e-10).unwrap();
        assert_eq!(a, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(f[0], 3.0);

        let far = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let (a, _) = assemble_system(&far, &[1.0, 2.0], &k1(), 1e-10).unwrap();
        assert_eq!(a, DMatrix::identity(2, 2));

        let near = [Point2::new(0.0, 0.0), Point2::new(0.3, 0.4)];
        let (a, _) = assemble_system(&near, &[1.0, 0.0], &k1(), 1e-10).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[1.0, 0.1875, 0.1875, 1.0]));

        let dup = [Point2::new(0.1, 0.1), Point2::new(0.5, 0.5), Point2::new(0.1, 0.1)];
        assert_eq!(
            assemble_system(&dup, &[0.0; 3], &k1(), 1e-10),
            Err(Error::DuplicateSites(0, 2))
        );
        assert!(matches!(
            assemble_system(&near, &[1.0], &k1(), 1e-10),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_examples() {
        let f = DVector::from_vec(vec![3.0, -1.0, 7.5]);
        assert_eq!(solve_local(&DMatrix::identity(3, 3), &f, 0).unwrap(), f);

        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1875, 0.1875, 1.0]);
        let l = solve_local(&a, &DVector::from_vec(vec![1.0, 0.0]), 0).unwrap();
        let det = 1.0 - 0.1875f64 * 0.1875;
        assert_relative_eq!(l[0], 1.0 / det, epsilon = 1e-14);
        assert_relative_eq!(l[1], -0.1875 / det, epsilon = 1e-14);
        assert_relative_eq!(l[0], 1.03644, epsilon = 1e-5);
        assert_relative_eq!(l[1], -0.19433, epsilon = 1e-5);
    }

    #[test]
    fn solve_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = DMatrix::from_fn(10, 10, |_, _| rng.gen_range(-1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(10, 10) * 0.1;
        let f = DVector::from_fn(10, |_, _| rng.gen_range(-5.0..5.0));
        let l = solve_local(&a, &f, 0).unwrap();
        let res = (&a * &l - &f).amax();
        assert!(res <= 1e-10 * (1.0 + f.amax()), "residual {res}");
    }

    #[test]
    fn singular_system_reports_patch() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(
            solve_local(&a, &DVector::from_vec(vec![1.0, 1.0]), 7),
            Err(Error::IllConditionedPatch { patch: 7 })
        );
    }

    #[test]
    fn eval_local_examples() {
        let sites = [Point2::new(0.0, 0.0), Point2::new(0.3, 0.4)];
        let li = LocalInterpolant::fit(&sites, &[1.0, 0.0], vec![0, 1], k1(), 1e-10, 0).unwrap();
        assert!((eval_local(&li, &sites, sites[0]) - 1.0).abs() < 1e-12);
        assert!(eval_local(&li, &sites, sites[1]).abs() < 1e-12);

        let zero = LocalInterpolant {
            site_indices: vec![0, 1],
            lambda: vec![0.0, 0.0],
            kernel: k1(),
        };
        assert_eq!(eval_local(&zero, &sites, Point2::new(0.1, 0.1)), 0.0);
    }

    #[test]
    fn fit_maps_duplicates_to_global_indices() {
        let sites = [Point2::new(0.0, 0.0), Point2::new(0.5, 0.0), Point2::new(0.5, 0.0)];
        let err = LocalInterpolant::fit(&sites, &[0.0; 3], vec![2, 0, 1], k1(), 1e-10, 3);
        assert_eq!(err, Err(Error::DuplicateSites(2, 1)));
    }
}
