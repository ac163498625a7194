use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{InitMode, OptimizerConfig};
use super::sigma::sigma_step_with_source;
use super::ustep::u_step_impl;
use crate::error::Result;
use crate::field::{
    energy, mass_energy, mollified_source, residual_against, EnergyBreakdown, Functional, GridSpec, ScalarField,
    SourceSpec, VectorField,
};
use crate::real::Real;

/// Energy and constraint residual after one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry<T> {
    pub iter: usize,
    #[serde(skip)]
    pub stage: usize,
    #[serde(flatten)]
    pub energy: EnergyBreakdown<T>,
    pub residual: T,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult<T> {
    pub sigma: VectorField<T>,
    pub u: ScalarField<T>,
    pub trace: Vec<TraceEntry<T>>,
    /// Final `||div sigma - f_eps||`.
    pub residual: T,
    /// `||f_eps||` of the final stage.
    pub source_norm: T,
    /// Functional of the final stage.
    pub functional: Functional<T>,
    pub converged: bool,
}

impl<T: Real> MinimizeResult<T> {
    pub fn final_energy(&self) -> EnergyBreakdown<T> {
        self.trace.last().map(|t| t.energy).unwrap_or_default()
    }

    /// Writes the trace as JSON lines.
    pub fn write_trace<W: std::io::Write>(&self, out: &mut W) -> Result<()>
    where
        T: Serialize,
    {
        for t in &self.trace {
            serde_json::to_writer(&mut *out, t)?;
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Distance from `x` to the segment `[p, q]`.
pub fn distance_to_segment<T: Real>(x: &[T], p: &[T], q: &[T]) -> T {
    let n = p.len();
    let mut dd = T::zero();
    let mut t = T::zero();
    for a in 0..n {
        let d = q[a] - p[a];
        dd += d * d;
        t += (x[a] - p[a]) * d;
    }
    let t = if dd > T::zero() { (t / dd).max(T::zero()).min(T::one()) } else { T::zero() };
    let mut s = T::zero();
    for a in 0..n {
        let y = p[a] + t * (q[a] - p[a]) - x[a];
        s += y * y;
    }
    s.sqrt()
}

pub(crate) fn initial_phase<T: Real>(
    grid: &GridSpec<T>,
    spec: &SourceSpec<T>,
    init: &InitMode<T>,
    eta: T,
) -> ScalarField<T> {
    let mut u = ScalarField::ones(grid);
    match *init {
        InitMode::Ones => {}
        InitMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for x in u.data.iter_mut() {
                *x = eta + (T::one() - eta) * T::lit(rng.gen::<f64>());
            }
        }
        InitMode::Tube { radius } => {
            let n = grid.dim();
            for c in 0..grid.num_cells() {
                let x = &grid.center(c)[..n];
                for (i, p) in spec.points.iter().enumerate() {
                    for (j, q) in spec.points.iter().enumerate() {
                        if spec.weights[i] > T::zero() && spec.weights[j] < T::zero() && distance_to_segment(x, p, q) <= radius {
                            u.data[c] = eta;
                        }
                    }
                }
            }
        }
    }
    u.pin_boundary();
    u
}

/// Alternating minimization from the initial field selected by `config.init`.
pub fn minimize<T: Real>(spec: &SourceSpec<T>, grid: &GridSpec<T>, config: &OptimizerConfig<T>) -> Result<MinimizeResult<T>> {
    config.validate(grid.dim())?;
    let first = config.stages(spec, grid)[0];
    let u0 = initial_phase(grid, spec, &config.init, first.eta(grid.dim()));
    minimize_from(spec, u0, config)
}

/// Alternating minimization from a given phase field.
///
/// Each outer iteration solves the `sigma`-step exactly and then descends in
/// `u`, so the recorded totals are nonincreasing within every stage. A stage
/// stops when the relative decrease drops below `outer_tol`, when `u` stops
/// changing, or after `max_outer` iterations.
pub fn minimize_from<T: Real>(spec: &SourceSpec<T>, u0: ScalarField<T>, config: &OptimizerConfig<T>) -> Result<MinimizeResult<T>> {
    let grid = u0.grid.clone();
    config.validate(grid.dim())?;
    let mut u = u0;
    u.pin_boundary();
    let mut sigma = VectorField::zeros(&grid);
    let mut phi = vec![T::zero(); grid.num_cells()];
    let mut trace = Vec::new();
    let mut residual = T::zero();
    let mut source_norm = T::zero();
    let mut converged = false;
    let stages = config.stages(spec, &grid);
    let mut fun = stages[0];
    for (stage, &stage_fun) in stages.iter().enumerate() {
        fun = stage_fun;
        let eta = fun.eta(grid.dim());
        for x in u.data.iter_mut() {
            *x = x.max(eta);
        }
        let stage_spec = spec.with_eps(fun.eps);
        let f = mollified_source(&stage_spec, &grid)?;
        source_norm = f.l2_norm();
        let mut prev: Option<(VectorField<T>, T)> = None;
        converged = false;
        for iter in 1..=config.max_outer {
            let mut next_sigma = sigma_step_with_source(&u, &f, config, fun.eps, &mut phi)?;
            if let Some((old, _)) = &prev {
                // both satisfy the constraint to solver tolerance; keep the cheaper one
                if mass_energy(old, &u, &fun) < mass_energy(&next_sigma, &u, &fun) {
                    next_sigma = old.clone();
                }
            }
            sigma = next_sigma;
            let next_u = u_step_impl(&sigma, &u, &fun, config.u_tol, config.u_max_iter, true)?;
            let unchanged = next_u.data == u.data;
            u = next_u;
            let e = energy(&sigma, &u, &fun)?;
            residual = residual_against(&sigma, &f);
            trace.push(TraceEntry {
                iter,
                stage,
                energy: e,
                residual,
            });
            let decrease = prev.as_ref().map(|(_, last)| *last - e.total);
            prev = Some((sigma.clone(), e.total));
            if unchanged || decrease.is_some_and(|d| d <= config.outer_tol * e.total.abs()) {
                converged = true;
                break;
            }
        }
    }
    Ok(MinimizeResult {
        sigma,
        u,
        trace,
        residual,
        source_norm,
        functional: fun,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distance() {
        let p = [0.0, 0.0];
        let q = [1.0, 0.0];
        assert_eq!(distance_to_segment(&[0.5, 0.3], &p, &q), 0.3);
        assert_eq!(distance_to_segment(&[-0.3, 0.4], &p, &q), 0.5);
        assert_eq!(distance_to_segment(&[0.3, 0.4], &p, &p), 0.5);
    }
}
