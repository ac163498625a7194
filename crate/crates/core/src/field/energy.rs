use serde::Serialize;

use super::fields::{face_average_sq, ScalarField, VectorField};
use super::ops::gradient_into;
use crate::error::{Error, Result};
use crate::real::Real;

/// Lower barrier `eta = a eps^{n-k+1}` for `k`-dimensional objects in `R^n`.
pub fn eta<T: Real>(eps: T, a: T, n: usize, k: usize) -> T {
    a * eps.powi((n - k + 1) as i32)
}

/// Parameters `(eps, a, p, k)` of the phase-field functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functional<T> {
    pub eps: T,
    pub a: T,
    pub p: T,
    pub k: usize,
}

impl<T: Real> Functional<T> {
    /// Functional for curves (`k = 1`) with `p = 2`.
    pub fn new(eps: T, a: T) -> Self {
        Functional {
            eps,
            a,
            p: T::lit(2.0),
            k: 1,
        }
    }

    pub fn with_p(mut self, p: T) -> Self {
        self.p = p;
        self
    }

    pub fn with_eps(mut self, eps: T) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.eps > T::zero()) || !self.eps.is_finite() {
            return Err(Error::invalid("eps", "must be positive"));
        }
        if !(self.a >= T::zero()) || !self.a.is_finite() {
            return Err(Error::invalid("a", "must be finite and >= 0"));
        }
        if self.k < 1 || self.k >= n {
            return Err(Error::invalid("k", format!("must satisfy 1 <= k <= {}", n - 1)));
        }
        if !(self.p > T::lit((n - self.k) as f64)) {
            return Err(Error::invalid("p", format!("must exceed n - k = {}", n - self.k)));
        }
        if self.eta(n) >= T::one() {
            return Err(Error::EpsTooLarge {
                eps: self.eps.as_f64(),
                eta: self.eta(n).as_f64(),
            });
        }
        Ok(())
    }

    pub fn eta(&self, n: usize) -> T {
        eta(self.eps, self.a, n, self.k)
    }

    pub(crate) fn gradient_scale(&self, n: usize) -> T {
        self.eps.powf(self.p - T::lit(n as f64) + T::lit(self.k as f64))
    }

    pub(crate) fn potential_scale(&self, n: usize) -> T {
        self.eps.powi(-((n - self.k) as i32))
    }
}

/// The three terms of the functional and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown<T> {
    pub gradient_term: T,
    pub potential_term: T,
    pub mass_term: T,
    pub total: T,
}

impl<T: Real> EnergyBreakdown<T> {
    pub fn new(gradient_term: T, potential_term: T, mass_term: T) -> Self {
        EnergyBreakdown {
            gradient_term,
            potential_term,
            mass_term,
            total: gradient_term + potential_term + mass_term,
        }
    }
}

/// Per-cell `|grad u|^2` from averaged squared face differences.
pub(crate) fn cell_gradient_sq<T: Real>(u: &ScalarField<T>) -> Vec<T> {
    let mut faces: [Vec<T>; 3] = Default::default();
    for (a, f) in faces.iter_mut().enumerate().take(u.grid.dim()) {
        *f = vec![T::zero(); u.grid.num_faces(a)];
    }
    gradient_into(&u.grid, &u.data, &mut faces);
    face_average_sq(&u.grid, &faces)
}

pub(crate) fn gradient_energy<T: Real>(u: &ScalarField<T>, fun: &Functional<T>) -> T {
    let half_p = fun.p * T::lit(0.5);
    let q = cell_gradient_sq(u);
    let s: T = if fun.p == T::lit(2.0) {
        q.iter().copied().sum()
    } else {
        q.iter().map(|&x| x.powf(half_p)).sum()
    };
    fun.gradient_scale(u.grid.dim()) * s * u.grid.cell_volume()
}

pub(crate) fn potential_energy<T: Real>(u: &ScalarField<T>, fun: &Functional<T>) -> T {
    let s: T = u.data.iter().map(|&x| (T::one() - x) * (T::one() - x)).sum();
    fun.potential_scale(u.grid.dim()) * s * u.grid.cell_volume()
}

pub(crate) fn mass_energy<T: Real>(sigma: &VectorField<T>, u: &ScalarField<T>, fun: &Functional<T>) -> T {
    let s: T = sigma
        .cell_norm_sq()
        .iter()
        .zip(&u.data)
        .map(|(&q, &x)| x * q)
        .sum();
    s * u.grid.cell_volume() / fun.eps
}

/// Midpoint-rule evaluation of the functional.
pub fn energy<T: Real>(sigma: &VectorField<T>, u: &ScalarField<T>, fun: &Functional<T>) -> Result<EnergyBreakdown<T>> {
    sigma.grid.same_as(&u.grid)?;
    Ok(EnergyBreakdown::new(
        gradient_energy(u, fun),
        potential_energy(u, fun),
        mass_energy(sigma, u, fun),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    #[test]
    fn eta_exponents() {
        assert!((eta(0.1f64, 1.0, 2, 1) - 1e-2).abs() < 1e-16);
        assert_eq!(eta(0.1, 0.0, 3, 1), 0.0);
        assert!((eta(0.1f64, 2.0, 3, 2) - 2e-2).abs() < 1e-16);
    }

    #[test]
    fn trivial_and_constant_fields() {
        let g = GridSpec::<f64>::unit(2, 16).unwrap();
        let fun = Functional::new(0.1, 1.0);
        let zero = VectorField::zeros(&g);
        let e = energy(&zero, &ScalarField::ones(&g), &fun).unwrap();
        assert_eq!(e.total, 0.0);
        let low = ScalarField::constant(&g, fun.eta(2));
        let e = energy(&zero, &low, &fun).unwrap();
        assert!((e.potential_term - 0.99f64.powi(2) / 0.1).abs() < 1e-12);
        assert_eq!(e.gradient_term, 0.0);
    }

    #[test]
    fn mass_term_scales_quadratically() {
        let g = GridSpec::<f64>::unit(2, 16).unwrap();
        let fun = Functional::new(0.1, 1.0);
        let mut s = VectorField::from_fn(&g, |a, x| (a as f64 + 1.0) * x[0] * x[1]);
        let u = ScalarField::constant(&g, 0.5);
        let e1 = energy(&s, &u, &fun).unwrap();
        s.scale(2.0);
        let e2 = energy(&s, &u, &fun).unwrap();
        assert_eq!(e2.mass_term, 4.0 * e1.mass_term);
        assert_eq!(e1.total, e1.gradient_term + e1.potential_term + e1.mass_term);
    }

    #[test]
    fn grid_mismatch() {
        let g = GridSpec::<f64>::unit(2, 16).unwrap();
        let g2 = GridSpec::<f64>::unit(2, 8).unwrap();
        let fun = Functional::new(0.1, 1.0);
        assert!(energy(&VectorField::zeros(&g), &ScalarField::ones(&g2), &fun).is_err());
    }
}
