use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{unit_ball_volume, Real};

/// Coefficient multiplying the transition energy in the reduced cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    /// `d * omega_d`, the surface measure of the unit sphere in `R^d`.
    #[default]
    DOmega,
    /// `(d - 1) * omega_d`, which vanishes for `d = 1`.
    DMinusOneOmega,
}

/// Parameters of the reduced radial problem family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct CostParams<T> {
    /// Codimension `d >= 1`.
    pub d: usize,
    /// Gradient exponent, `p > d`.
    pub p: T,
    /// Lower-barrier coefficient, `a >= 0`.
    pub a: T,
    #[serde(default)]
    pub prefactor: Prefactor,
}

impl<T: Real> CostParams<T> {
    pub fn new(d: usize, p: T, a: T) -> Result<Self> {
        let params = CostParams {
            d,
            p,
            a,
            prefactor: Prefactor::DOmega,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_prefactor(mut self, prefactor: Prefactor) -> Self {
        self.prefactor = prefactor;
        self
    }

    pub fn with_a(mut self, a: T) -> Self {
        self.a = a;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("d", "codimension must be at least 1"));
        }
        if !(self.p > T::lit(self.d as f64)) {
            return Err(Error::invalid(
                "p",
                format!("exponent {} must exceed d = {}", self.p, self.d),
            ));
        }
        if !(self.a >= T::zero()) || !self.a.is_finite() {
            return Err(Error::invalid("a", format!("{} must be finite and >= 0", self.a)));
        }
        Ok(())
    }

    /// Volume of the unit ball in `R^d`.
    pub fn omega_d(&self) -> T {
        unit_ball_volume(self.d)
    }

    /// Coefficient in front of the transition energy.
    pub fn transition_coefficient(&self) -> T {
        let w = self.omega_d();
        match self.prefactor {
            Prefactor::DOmega => T::lit(self.d as f64) * w,
            Prefactor::DMinusOneOmega => T::lit(self.d as f64 - 1.0) * w,
        }
    }

    /// Surface measure of the unit sphere, `d * omega_d`.
    pub fn sphere_measure(&self) -> T {
        T::lit(self.d as f64) * self.omega_d()
    }
}
