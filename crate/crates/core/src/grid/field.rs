use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::GridDomain;
use crate::error::{Error, Result};
use crate::rng::stream;

/// Values on a [`GridDomain`], zero at every exterior cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(domain: &Arc<GridDomain>) -> Self {
        GridField {
            domain: Arc::clone(domain),
            values: vec![0.0; domain.len()],
        }
    }

    /// Takes `values` (indexed `j·nx + i`) and zeroes the exterior cells.
    pub fn from_values(domain: &Arc<GridDomain>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                found: values.len(),
            });
        }
        for (v, m) in values.iter_mut().zip(domain.mask()) {
            if !m {
                *v = 0.0;
            }
        }
        Ok(GridField {
            domain: Arc::clone(domain),
            values,
        })
    }

    /// Samples `f(x, y)` on the interior cells.
    pub fn from_fn(domain: &Arc<GridDomain>, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut u = GridField::zeros(domain);
        let nx = domain.nx();
        for &p in domain.interior() {
            let (x, y) = domain.coords(p % nx, p / nx);
            u.values[p] = f(x, y);
        }
        u
    }

    /// Seeded uniform `(−1, 1)` values on the interior, normalized to unit
    /// discrete L² norm.
    pub fn random(domain: &Arc<GridDomain>, seed: u64, name: &str) -> Self {
        let mut rng = stream(seed, name);
        let mut u = GridField::zeros(domain);
        for &p in domain.interior() {
            u.values[p] = rng.random_range(-1.0..1.0);
        }
        let nu = u.norm();
        if nu > 0.0 {
            u.scale(1.0 / nu);
        }
        u
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.index(i, j)]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_domain(&self, other: &GridField) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || self.domain == other.domain
    }

    fn check_domain(&self, other: &GridField) -> Result<()> {
        if self.same_domain(other) {
            Ok(())
        } else {
            Err(Error::invalid("fields live on different domains"))
        }
    }

    /// Discrete L² inner product `h² Σ u v`.
    pub fn inner(&self, other: &GridField) -> Result<f64> {
        self.check_domain(other)?;
        Ok(inner_interior(&self.domain, &self.values, &other.values))
    }

    /// Discrete L² norm `h (Σ u²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        libm::sqrt(inner_interior(&self.domain, &self.values, &self.values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, a: f64) {
        for &p in self.domain.interior() {
            self.values[p] *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> GridField {
        let mut u = self.clone();
        u.scale(a);
        u
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: f64, other: &GridField) -> Result<()> {
        self.check_domain(other)?;
        for &p in self.domain.interior() {
            self.values[p] += a * other.values[p];
        }
        Ok(())
    }

    /// `(−Δ_d u)` with the 5-point stencil scaled by `1/h²`; exterior
    /// neighbours read as zero.
    pub fn apply_neg_laplacian(&self) -> GridField {
        let mut out = GridField::zeros(&self.domain);
        neg_laplacian_into(&self.domain, &self.values, &mut out.values);
        out
    }

    /// Discrete Rayleigh quotient `⟨−Δ_d u, u⟩ / ⟨u, u⟩`.
    pub fn rayleigh_quotient(&self) -> f64 {
        let lu = self.apply_neg_laplacian();
        inner_interior(&self.domain, &lu.values, &self.values)
            / inner_interior(&self.domain, &self.values, &self.values)
    }
}

pub(crate) fn inner_interior(d: &GridDomain, u: &[f64], v: &[f64]) -> f64 {
    let h = d.h();
    h * h * d.interior().iter().map(|&p| u[p] * v[p]).sum::<f64>()
}

/// `out = (−Δ_d u)` on the interior; exterior entries of `out` are left
/// untouched (callers keep them zero).
pub(crate) fn neg_laplacian_into(d: &GridDomain, u: &[f64], out: &mut [f64]) {
    let nx = d.nx();
    let inv_h2 = 1.0 / (d.h() * d.h());
    for &p in d.interior() {
        out[p] = (4.0 * u[p] - u[p - 1] - u[p + 1] - u[p - nx] - u[p + nx]) * inv_h2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn zero_maps_to_zero() {
        let d = Arc::new(GridDomain::l_shape(11).unwrap());
        let u = GridField::zeros(&d);
        assert!(u.apply_neg_laplacian().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn separable_sine_is_eigenfield() {
        let d = Arc::new(GridDomain::full_square(81).unwrap());
        let h = d.h();
        let u = GridField::from_fn(&d, |x, y| libm::sin(PI * x) * libm::sin(PI * y));
        let lu = u.apply_neg_laplacian();
        let lam = (2.0 / (h * h)) * (2.0 - 2.0 * libm::cos(PI * h));
        for &p in d.interior() {
            if u.values()[p].abs() > 1e-3 {
                assert!((lu.values()[p] - lam * u.values()[p]).abs() < 1e-10 * (lam * u.values()[p]).abs());
            }
        }
    }

    #[test]
    fn spike_stencil() {
        let d = Arc::new(GridDomain::l_shape(9).unwrap());
        let h2 = d.h() * d.h();
        let mut u = GridField::zeros(&d);
        let (i, j) = (3, 4);
        u.values[d.index(i, j)] = 1.0;
        let lu = u.apply_neg_laplacian();
        assert!((lu.get(i, j) - 4.0 / h2).abs() < 1e-9);
        for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
            let expected = if d.is_interior(a, b) { -1.0 / h2 } else { 0.0 };
            assert_eq!(lu.get(a, b), expected);
        }
    }

    #[test]
    fn exterior_values_are_masked() {
        let d = Arc::new(GridDomain::l_shape(7).unwrap());
        let u = GridField::from_values(&d, vec![1.0; 49]).unwrap();
        for (v, m) in u.values().iter().zip(d.mask()) {
            assert_eq!(*v, if *m { 1.0 } else { 0.0 });
        }
        let other = Arc::new(GridDomain::full_square(7).unwrap());
        assert!(u.inner(&GridField::zeros(&other)).is_err());
    }
}
