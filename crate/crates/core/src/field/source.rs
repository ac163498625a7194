use super::fields::ScalarField;
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::real::Real;

/// Relative tolerance for the balance `sum c_j = 0`.
const BALANCE_TOL: f64 = 1e-12;

/// Point sources `x_j` with signed weights `c_j`, mollified at radius `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec<T> {
    pub points: Vec<Vec<T>>,
    pub weights: Vec<T>,
    pub eps: T,
}

impl<T: Real> SourceSpec<T> {
    /// Validates `eps > 0`, matching lengths and `sum c_j = 0`.
    pub fn new(points: Vec<Vec<T>>, weights: Vec<T>, eps: T) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid("sources.weights", "one weight per point required"));
        }
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(Error::invalid("eps", "must be positive"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("sources.weights", "must be finite"));
        }
        let total: T = weights.iter().copied().sum();
        let scale: T = weights.iter().map(|w| w.abs()).sum();
        if total.abs() > T::lit(BALANCE_TOL) * scale.max(T::one()) {
            return Err(Error::invalid(
                "sources.weights",
                format!("weights must sum to zero, got {total}"),
            ));
        }
        Ok(SourceSpec { points, weights, eps })
    }

    pub fn empty(eps: T) -> Self {
        SourceSpec {
            points: Vec::new(),
            weights: Vec::new(),
            eps,
        }
    }

    /// Copy with a different mollification radius.
    pub fn with_eps(&self, eps: T) -> Self {
        SourceSpec {
            eps,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks that every ball `B(x_j, eps)` lies in the box and that `eps >= 2h`.
    pub fn check_against(&self, grid: &GridSpec<T>) -> Result<()> {
        let h = grid.max_spacing();
        if self.eps < T::lit(2.0) * h {
            return Err(Error::EpsUnderResolved {
                eps: self.eps.as_f64(),
                h: h.as_f64(),
            });
        }
        for (j, x) in self.points.iter().enumerate() {
            if x.len() != grid.dim() {
                return Err(Error::invalid("sources.points", format!("point {j} has wrong dimension")));
            }
            if !grid.contains_ball(x, self.eps) {
                return Err(Error::invalid(
                    "sources.points",
                    format!("ball of radius eps around point {j} leaves the domain"),
                ));
            }
        }
        Ok(())
    }
}

/// Unnormalized bump `exp(-1/(1 - |y|^2))` for `|y| < 1`.
pub fn bump<T: Real>(y2: T) -> T {
    if y2 >= T::one() {
        T::zero()
    } else {
        (-T::one() / (T::one() - y2)).exp()
    }
}

/// Bump of radius `eps` around `x` sampled at cell centers, scaled to unit discrete mass.
pub(crate) fn unit_bump<T: Real>(grid: &GridSpec<T>, x: &[T], eps: T) -> Vec<(usize, T)> {
    let n = grid.dim();
    let h = grid.spacing();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..n {
        let rel_lo = ((x[a] - eps - grid.origin()[a]) / h[a]).floor().max(T::zero());
        let rel_hi = ((x[a] + eps - grid.origin()[a]) / h[a]).ceil();
        lo[a] = rel_lo.as_f64() as usize;
        hi[a] = (rel_hi.as_f64().max(0.0) as usize).min(grid.cells()[a]);
    }
    let mut out = Vec::new();
    let mut total = T::zero();
    for k in lo[2]..hi[2].max(lo[2] + 1) {
        for j in lo[1]..hi[1] {
            for i in lo[0]..hi[0] {
                let c = grid.index([i, j, k]);
                let y = grid.center(c);
                let mut r2 = T::zero();
                for a in 0..n {
                    let t = (y[a] - x[a]) / eps;
                    r2 += t * t;
                }
                let b = bump(r2);
                if b > T::zero() {
                    total += b;
                    out.push((c, b));
                }
            }
        }
    }
    let norm = T::one() / (total * grid.cell_volume());
    for (_, b) in out.iter_mut() {
        *b *= norm;
    }
    out
}

/// `sum_j c_j rho_eps(x - x_j)` at cell centers, each bump carrying discrete mass exactly `c_j`.
pub fn mollified_source<T: Real>(spec: &SourceSpec<T>, grid: &GridSpec<T>) -> Result<ScalarField<T>> {
    let mut f = ScalarField::zeros(grid);
    if spec.is_empty() {
        return Ok(f);
    }
    spec.check_against(grid)?;
    for (x, &c) in spec.points.iter().zip(&spec.weights) {
        for (cell, b) in unit_bump(grid, x, spec.eps) {
            f.data[cell] += c * b;
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dipole(eps: f64) -> SourceSpec<f64> {
        SourceSpec::new(vec![vec![0.25, 0.5], vec![0.75, 0.5]], vec![1.0, -1.0], eps).unwrap()
    }

    #[test]
    fn no_sources_is_zero() {
        let g = GridSpec::<f64>::unit(2, 16).unwrap();
        let f = mollified_source(&SourceSpec::empty(0.2), &g).unwrap();
        assert!(f.data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn each_bump_has_exact_mass() {
        let g = GridSpec::<f64>::unit(2, 128).unwrap();
        let spec = dipole(0.05);
        let f = mollified_source(&spec, &g).unwrap();
        let hv = g.cell_volume();
        let (mut pos, mut neg) = (0.0, 0.0);
        for &x in &f.data {
            if x > 0.0 {
                pos += x * hv;
            } else {
                neg += x * hv;
            }
        }
        assert!((pos - 1.0).abs() < 1e-12 && (neg + 1.0).abs() < 1e-12);
        assert!(f.integral().abs() < 1e-12);
    }

    #[test]
    fn unbalanced_and_unresolved_are_rejected() {
        assert!(SourceSpec::new(vec![vec![0.5, 0.5]], vec![1.0], 0.05).is_err());
        let g = GridSpec::<f64>::unit(2, 16).unwrap();
        assert!(matches!(
            mollified_source(&dipole(0.05), &g),
            Err(Error::EpsUnderResolved { .. })
        ));
        let edge = SourceSpec::new(vec![vec![0.02, 0.5], vec![0.5, 0.5]], vec![1.0, -1.0], 0.05).unwrap();
        assert!(mollified_source(&edge, &GridSpec::unit(2, 128).unwrap()).is_err());
    }
}
