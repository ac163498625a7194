//! Scalar abstraction shared by every numerical kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
///
/// All solvers are written against this trait; the crate root re-exports
/// `f64` aliases for the common case.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this type.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Smallest positive value treated as a nonzero weight.
    fn weight_floor() -> Self {
        Self::lit(1e-12)
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn weight_floor() -> Self {
        1e-6
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Volume of the unit ball in `R^d`.
///
/// Uses the recursion `w_d = 2 pi / d * w_{d-2}` which is exact up to
/// rounding for integer dimensions.
pub fn unit_ball_volume<T: Real>(d: usize) -> T {
    let mut w = if d % 2 == 0 { T::one() } else { T::lit(2.0) };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        w = w * T::lit(2.0) * T::PI() / T::lit(k as f64);
        k += 2;
    }
    w
}

/// Three-point Gauss-Legendre rule on `[-1, 1]`.
pub(crate) const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Five-point Gauss-Legendre rule on `[-1, 1]`.
pub(crate) const GAUSS5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Integrates `g` over `[a, b]` with the five-point rule.
pub(crate) fn gauss5<T: Real>(a: T, b: T, mut g: impl FnMut(T) -> T) -> T {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    GAUSS5
        .iter()
        .map(|&(x, w)| T::lit(w) * g(mid + half * T::lit(x)))
        .sum::<T>()
        * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes_match_gamma_formula() {
        // pi^{d/2} / Gamma(d/2 + 1) for d = 0..6
        let pi = std::f64::consts::PI;
        let expected = [
            1.0,
            2.0,
            pi,
            4.0 * pi / 3.0,
            pi * pi / 2.0,
            8.0 * pi * pi / 15.0,
            pi.powi(3) / 6.0,
        ];
        for (d, e) in expected.iter().enumerate() {
            let w: f64 = unit_ball_volume(d);
            assert!((w - e).abs() <= 4.0 * f64::EPSILON * e, "d={d}: {w} vs {e}");
        }
    }

    #[test]
    fn gauss5_is_exact_for_degree_nine() {
        let v: f64 = gauss5(0.5, 2.0, |t| t.powi(9));
        let exact = (2.0f64.powi(10) - 0.5f64.powi(10)) / 10.0;
        assert!((v - exact).abs() < 1e-12 * exact);
    }
}
