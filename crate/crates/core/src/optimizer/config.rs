use crate::error::{Error, Result};
use crate::field::{Functional, GridSpec, SourceSpec};
use crate::real::Real;

/// Starting phase field of [`minimize`](super::minimize).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode<T> {
    /// `u = 1` everywhere.
    Ones,
    /// Independent uniform samples in `[eta, 1]` on interior cells.
    Random { seed: u64 },
    /// `u = eta` within `radius` of every segment joining a positive to a negative source.
    Tube { radius: T },
}

/// One continuation stage; `a` defaults to the functional's value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage<T> {
    pub eps: T,
    pub a: Option<T>,
}

/// Stages run before the final one.
#[derive(Debug, Clone, PartialEq)]
pub enum Continuation<T> {
    /// `eps_final 2^count, ..., eps_final 2`, skipping stages whose mollified
    /// sources do not fit the grid. Resolves to nothing without sources.
    Halving { count: usize },
    /// Explicit stages with strictly decreasing `eps` above the final one.
    Stages(Vec<Stage<T>>),
}

impl<T> Continuation<T> {
    pub fn none() -> Self {
        Continuation::Stages(Vec::new())
    }
}

impl<T> Default for Continuation<T> {
    fn default() -> Self {
        Continuation::Halving { count: 3 }
    }
}

/// Settings of the alternating minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    pub functional: Functional<T>,
    pub max_outer: usize,
    /// Stop once the relative energy decrease of an outer iteration falls below this.
    pub outer_tol: T,
    pub cg_tol: T,
    pub cg_max_iter: usize,
    pub u_tol: T,
    pub u_max_iter: usize,
    pub init: InitMode<T>,
    pub continuation: Continuation<T>,
}

impl<T: Real> OptimizerConfig<T> {
    pub fn new(functional: Functional<T>) -> Self {
        OptimizerConfig {
            functional,
            max_outer: 500,
            outer_tol: T::lit(1e-8),
            cg_tol: T::lit(1e-10),
            cg_max_iter: 100_000,
            u_tol: T::lit(1e-6),
            u_max_iter: 500,
            init: InitMode::Ones,
            continuation: Continuation::default(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.functional.validate(n)?;
        if !(self.cg_tol > T::zero()) {
            return Err(Error::invalid("optimizer.cg_tol", "must be positive"));
        }
        if !(self.u_tol > T::zero()) {
            return Err(Error::invalid("optimizer.u_tol", "must be positive"));
        }
        if !(self.outer_tol >= T::zero()) {
            return Err(Error::invalid("optimizer.outer_tol", "must be nonnegative"));
        }
        if self.max_outer == 0 {
            return Err(Error::invalid("optimizer.max_outer", "must be at least 1"));
        }
        let stages = match &self.continuation {
            Continuation::Halving { .. } => return Ok(()),
            Continuation::Stages(s) => s,
        };
        let mut last = T::infinity();
        for s in stages {
            if !(s.eps < last && s.eps > self.functional.eps) {
                return Err(Error::invalid(
                    "optimizer.continuation",
                    "eps values must strictly decrease towards the final eps",
                ));
            }
            last = s.eps;
        }
        Ok(())
    }

    /// Functionals of all stages for the given sources, the final one last.
    pub fn stages(&self, spec: &SourceSpec<T>, grid: &GridSpec<T>) -> Vec<Functional<T>> {
        let base = self.functional;
        let pre = match &self.continuation {
            Continuation::Stages(s) => s.clone(),
            Continuation::Halving { .. } if spec.is_empty() => Vec::new(),
            Continuation::Halving { count } => halving_schedule(base.eps, *count)
                .into_iter()
                .filter(|s| spec.with_eps(s.eps).check_against(grid).is_ok())
                .collect(),
        };
        let mut out: Vec<Functional<T>> = pre
            .iter()
            .map(|s| Functional {
                eps: s.eps,
                a: s.a.unwrap_or(base.a),
                ..base
            })
            .collect();
        out.push(base);
        out
    }
}

/// `count` stages `eps_final 2^count, ..., eps_final 2` preceding `eps_final`.
pub fn halving_schedule<T: Real>(eps_final: T, count: usize) -> Vec<Stage<T>> {
    (1..=count)
        .rev()
        .map(|i| Stage {
            eps: eps_final * T::lit(2f64.powi(i as i32)),
            a: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps_of(c: &OptimizerConfig<f64>, spec: &SourceSpec<f64>, g: &GridSpec<f64>) -> Vec<f64> {
        c.stages(spec, g).iter().map(|f| f.eps).collect()
    }

    #[test]
    fn schedule_is_decreasing_and_valid() {
        let g = GridSpec::unit(2, 64).unwrap();
        let spec = SourceSpec::new(vec![vec![0.5, 0.5]; 2], vec![1.0, -1.0], 0.05).unwrap();
        let mut c = OptimizerConfig::new(Functional::new(0.05f64, 1.0));
        let mut stages = halving_schedule(0.05, 3);
        c.continuation = Continuation::Stages(stages.clone());
        assert_eq!(eps_of(&c, &spec, &g), vec![0.4, 0.2, 0.1, 0.05]);
        assert!(c.validate(2).is_ok());
        stages.reverse();
        c.continuation = Continuation::Stages(stages);
        assert!(c.validate(2).is_err());
        c.continuation = Continuation::none();
        c.cg_tol = 0.0;
        assert!(c.validate(2).is_err());
    }

    #[test]
    fn default_halving_skips_stages_that_do_not_fit() {
        let g = GridSpec::unit(2, 64).unwrap();
        let c = OptimizerConfig::new(Functional::new(0.05f64, 1.0));
        let centered = SourceSpec::new(vec![vec![0.5, 0.5]; 2], vec![1.0, -1.0], 0.05).unwrap();
        assert_eq!(eps_of(&c, &centered, &g), vec![0.4, 0.2, 0.1, 0.05]);
        let apart = SourceSpec::new(vec![vec![0.25, 0.5], vec![0.75, 0.5]], vec![1.0, -1.0], 0.05).unwrap();
        assert_eq!(eps_of(&c, &apart, &g), vec![0.2, 0.1, 0.05]);
        assert_eq!(eps_of(&c, &SourceSpec::empty(0.05), &g), vec![0.05]);
    }
}
