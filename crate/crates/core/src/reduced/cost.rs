use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::params::CostParams;
use super::transition::q_infinity;
use crate::error::{Error, Result};
use crate::export::sig12;
use crate::real::{gauss5, Real};

/// Default tolerance for truncation and radius searches.
pub const DEFAULT_TOL: f64 = 1e-10;

const SCAN_POINTS: usize = 48;
const GOLDEN_STEPS: usize = 60;

/// Reduced cost at one multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEvaluation<T> {
    pub m: T,
    pub f_value: T,
    /// Minimizing core radius, in eps-rescaled units.
    pub r_star: T,
    /// `q_inf(0, r_star)`.
    pub q_inf_at_r_star: T,
}

/// Three-term objective `a m^2/(w r^d) + w r^d + P q_inf(0, r)`.
///
/// With `a = 0` the mass term is dropped.
pub fn radius_objective<T: Real>(m: T, r: T, params: &CostParams<T>, tol: T) -> Result<(T, T)> {
    let w = params.omega_d();
    let rd = r.powi(params.d as i32);
    let q = q_infinity(T::zero(), r, params, tol)?;
    let mut value = w * rd + params.transition_coefficient() * q;
    if params.a > T::zero() {
        value += params.a * m * m / (w * rd);
    }
    Ok((value, q))
}

/// Energy of the ramp `v = (t - r1)/(r2 - r1)` on `[r1, r2]`.
fn ramp_energy<T: Real>(r1: T, r2: T, params: &CostParams<T>) -> T {
    let len = r2 - r1;
    let dm1 = params.d as i32 - 1;
    let slope = len.recip().powf(params.p);
    gauss5(r1, r2, |t| {
        let y = (r2 - t) / len;
        t.powi(dm1) * (slope + y * y)
    })
}

/// Energy of the explicit competitor: core of radius `r1 = (sqrt(a) m)^{1/d}`
/// followed by a linear ramp.
///
/// Two ramp ends are tried, `r2 = (1 + sqrt(a) m)^{1/d}` and `r2 = r1 + 1`;
/// the smaller energy is returned. Every value is an upper bound on `f(m)`.
pub fn competitor_bound<T: Real>(m: T, params: &CostParams<T>) -> T {
    let w = params.omega_d();
    let dinv = T::one() / T::lit(params.d as f64);
    let s = params.a.sqrt() * m;
    let r1 = s.powf(dinv);
    let core = if s > T::zero() {
        params.a * m * m / (w * s) + w * s
    } else {
        T::zero()
    };
    let coef = params.transition_coefficient();
    let lit = ramp_energy(r1, (T::one() + s).powf(dinv), params);
    let shifted = ramp_energy(r1, r1 + T::one(), params);
    core + coef * lit.min(shifted)
}

/// `sup_m competitor_bound(m) / sqrt(1 + m^2)` over a log-spaced sample of `m`.
pub fn growth_constant<T: Real>(params: &CostParams<T>) -> T {
    (0..=400)
        .map(|i| {
            let m = T::lit(10f64.powf(-4.0 + 8.0 * i as f64 / 400.0));
            competitor_bound(m, params) / (T::one() + m * m).sqrt()
        })
        .fold(T::zero(), T::max)
}

/// Reduced cost `f(m)`: minimum of [`radius_objective`] over the core radius.
///
/// Scans a logarithmic grid of radii bracketed by [`competitor_bound`], then
/// refines with golden-section search.
pub fn cost_f<T: Real>(m: T, params: &CostParams<T>, tol: T) -> Result<CostEvaluation<T>> {
    params.validate()?;
    if !(m >= T::zero()) || !m.is_finite() {
        return Err(Error::invalid("m", "multiplicity must be finite and >= 0"));
    }
    if m == T::zero() {
        return Ok(CostEvaluation {
            m,
            f_value: T::zero(),
            r_star: T::zero(),
            q_inf_at_r_star: T::zero(),
        });
    }
    if params.a == T::zero() {
        let q = q_infinity(T::zero(), T::zero(), params, tol)?;
        return Ok(CostEvaluation {
            m,
            f_value: params.transition_coefficient() * q,
            r_star: T::zero(),
            q_inf_at_r_star: q,
        });
    }

    let w = params.omega_d();
    let dinv = T::one() / T::lit(params.d as f64);
    let upper = competitor_bound(m, params);
    let r_hi = (upper / w).powf(dinv);
    let r_mass = (params.a * m * m / (w * upper)).powf(dinv);
    let r_lo = (r_hi * T::lit(1e-4)).min(r_mass * T::lit(0.5));

    let (llo, lhi) = (r_lo.ln(), r_hi.ln());
    let at = |i: usize| (llo + (lhi - llo) * T::lit(i as f64 / (SCAN_POINTS - 1) as f64)).exp();
    let mut values = Vec::with_capacity(SCAN_POINTS);
    for i in 0..SCAN_POINTS {
        values.push(radius_objective(m, at(i), params, tol)?.0);
    }
    let best = (0..SCAN_POINTS)
        .min_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap())
        .unwrap();
    if best == 0 || best == SCAN_POINTS - 1 {
        return Err(Error::BracketFailure {
            lo: r_lo.as_f64(),
            hi: r_hi.as_f64(),
            edge: at(best).as_f64(),
        });
    }

    // golden section in log r
    let g = T::lit(0.5 * (5f64.sqrt() - 1.0));
    let (mut a, mut b) = (at(best - 1).ln(), at(best + 1).ln());
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = radius_objective(m, x1.exp(), params, tol)?.0;
    let mut f2 = radius_objective(m, x2.exp(), params, tol)?.0;
    for _ in 0..GOLDEN_STEPS {
        if (b - a).abs() < T::lit(1e-9) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = radius_objective(m, x1.exp(), params, tol)?.0;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = radius_objective(m, x2.exp(), params, tol)?.0;
        }
    }
    let r_star = ((a + b) * T::lit(0.5)).exp();
    let (f_value, q) = radius_objective(m, r_star, params, tol)?;
    let (f_value, r_star, q) = if values[best] < f_value {
        let r = at(best);
        let (v, q) = radius_objective(m, r, params, tol)?;
        (v, r, q)
    } else {
        (f_value, r_star, q)
    };
    Ok(CostEvaluation {
        m,
        f_value,
        r_star,
        q_inf_at_r_star: q,
    })
}

/// `kappa = P q_inf(0, 0)`, the lower bound of `f` on `(0, inf)`.
pub fn kappa<T: Real>(params: &CostParams<T>) -> Result<T> {
    kappa_with_tol(params, T::lit(DEFAULT_TOL))
}

pub fn kappa_with_tol<T: Real>(params: &CostParams<T>, tol: T) -> Result<T> {
    params.validate()?;
    Ok(params.transition_coefficient() * q_infinity(T::zero(), T::zero(), params, tol)?)
}

/// Elementwise [`cost_f`] over nonnegative, sorted masses. Entries are evaluated in parallel.
pub fn cost_table<T: Real>(ms: &[T], params: &CostParams<T>, tol: T) -> Result<Vec<CostEvaluation<T>>> {
    if ms.iter().any(|&m| !(m >= T::zero())) {
        return Err(Error::invalid("masses", "must be nonnegative"));
    }
    if ms.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("masses", "must be sorted ascending"));
    }
    ms.par_iter().map(|&m| cost_f(m, params, tol)).collect()
}

/// Writes `m,f,r_star,q_inf` rows with 12 significant digits.
pub fn write_cost_table<T: Real, W: Write>(out: &mut W, rows: &[CostEvaluation<T>]) -> Result<()> {
    writeln!(out, "m,f,r_star,q_inf")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            sig12(r.m.as_f64()),
            sig12(r.f_value.as_f64()),
            sig12(r.r_star.as_f64()),
            sig12(r.q_inf_at_r_star.as_f64())
        )?;
    }
    Ok(())
}
