//! JSON scenario files shared by the command line tools.
//!
//! Lengths are in domain units, masses in source units. Unknown keys are
//! rejected.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::{Functional, GridSpec, SourceSpec};
use crate::optimizer::{Continuation, InitMode, OptimizerConfig, Stage};
use crate::recovery::{PolyhedralMeasure, Segment};
use crate::reduced::CostParams;

/// Default profile slack of recovery runs.
pub const DEFAULT_DELTA: f64 = 1e-2;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    grid: RawGrid,
    #[serde(default)]
    sources: RawSources,
    functional: RawFunctional,
    #[serde(default)]
    optimizer: RawOptimizer,
    #[serde(default)]
    measure: Option<Vec<RawSegment>>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    extent: Vec<f64>,
    cells: Vec<usize>,
    #[serde(default)]
    origin: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSources {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctional {
    eps: f64,
    a: f64,
    #[serde(default = "two")]
    p: f64,
    #[serde(default = "one")]
    k: usize,
}

fn two() -> f64 {
    2.0
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    max_outer: Option<usize>,
    outer_tol: Option<f64>,
    cg_tol: Option<f64>,
    cg_max_iter: Option<usize>,
    u_tol: Option<f64>,
    u_max_iter: Option<usize>,
    #[serde(default)]
    init: RawInit,
    #[serde(default)]
    continuation: Option<RawContinuation>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum RawInit {
    #[default]
    Ones,
    Random,
    Tube { radius: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawContinuation {
    Halving(usize),
    Stages(Vec<RawStage>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage {
    eps: f64,
    #[serde(default)]
    a: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    start: Vec<f64>,
    end: Vec<f64>,
    multiplicity: f64,
}

/// Validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: GridSpec<f64>,
    pub sources: SourceSpec<f64>,
    pub functional: Functional<f64>,
    pub optimizer: OptimizerConfig<f64>,
    pub measure: Option<PolyhedralMeasure<f64>>,
    pub delta: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text)?;
        raw.build()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Reduced-cost parameters matching the functional: `d = n - 1`.
    pub fn cost_params(&self) -> Result<CostParams<f64>> {
        CostParams::new(self.grid.dim() - 1, self.functional.p, self.functional.a)
    }

    /// Segments joining every positive to every negative source, for diagnostics.
    pub fn source_segments(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        if let Some(m) = &self.measure {
            return m.segments.iter().map(|s| (s.start.clone(), s.end.clone())).collect();
        }
        let s = &self.sources;
        let mut out = Vec::new();
        for (p, &cp) in s.points.iter().zip(&s.weights) {
            for (q, &cq) in s.points.iter().zip(&s.weights) {
                if cp > 0.0 && cq < 0.0 {
                    out.push((p.clone(), q.clone()));
                }
            }
        }
        out
    }
}

impl RawScenario {
    fn build(self) -> Result<Scenario> {
        let mut grid = GridSpec::new(&self.grid.extent, &self.grid.cells)?;
        if let Some(o) = &self.grid.origin {
            grid = grid.with_origin(o)?;
        }
        let f = self.functional;
        if f.k != 1 {
            return Err(Error::invalid("functional.k", "grid fields support k = 1 only"));
        }
        let functional = Functional::new(f.eps, f.a).with_p(f.p);
        functional.validate(grid.dim())?;
        let sources = if self.sources.points.is_empty() && self.sources.weights.is_empty() {
            SourceSpec::empty(f.eps)
        } else {
            SourceSpec::new(self.sources.points, self.sources.weights, f.eps)?
        };
        sources.check_against(&grid)?;

        let o = self.optimizer;
        let mut optimizer = OptimizerConfig::new(functional);
        if let Some(v) = o.max_outer {
            optimizer.max_outer = v;
        }
        if let Some(v) = o.outer_tol {
            optimizer.outer_tol = v;
        }
        if let Some(v) = o.cg_tol {
            optimizer.cg_tol = v;
        }
        if let Some(v) = o.cg_max_iter {
            optimizer.cg_max_iter = v;
        }
        if let Some(v) = o.u_tol {
            optimizer.u_tol = v;
        }
        if let Some(v) = o.u_max_iter {
            optimizer.u_max_iter = v;
        }
        optimizer.init = match o.init {
            RawInit::Ones => InitMode::Ones,
            RawInit::Random => InitMode::Random { seed: self.seed },
            RawInit::Tube { radius } => InitMode::Tube { radius },
        };
        optimizer.continuation = match o.continuation {
            None => Continuation::default(),
            Some(RawContinuation::Halving(count)) => Continuation::Halving { count },
            Some(RawContinuation::Stages(s)) => {
                Continuation::Stages(s.into_iter().map(|r| Stage { eps: r.eps, a: r.a }).collect())
            }
        };
        optimizer.validate(grid.dim())?;

        let measure = match self.measure {
            None => None,
            Some(segs) => Some(PolyhedralMeasure::new(
                segs.into_iter()
                    .map(|s| Segment::new(s.start, s.end, s.multiplicity))
                    .collect::<Result<_>>()?,
            )),
        };
        let delta = self.delta.unwrap_or(DEFAULT_DELTA);
        if !(delta > 0.0) {
            return Err(Error::invalid("delta", "must be positive"));
        }
        Ok(Scenario {
            grid,
            sources,
            functional,
            optimizer,
            measure,
            delta,
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SOURCES: &str = r#"{
        "grid": {"extent": [1, 1], "cells": [32, 32]},
        "sources": {"points": [[0.25, 0.5], [0.75, 0.5]], "weights": [1, -1]},
        "functional": {"eps": 0.1, "a": 1}
    }"#;

    #[test]
    fn parses_defaults() {
        let s = Scenario::from_json(TWO_SOURCES).unwrap();
        assert_eq!(s.functional.p, 2.0);
        assert_eq!(s.optimizer.continuation, Continuation::Halving { count: 3 });
        assert_eq!(s.delta, DEFAULT_DELTA);
        assert_eq!(s.source_segments().len(), 1);
        assert_eq!(s.cost_params().unwrap().d, 1);
    }

    #[test]
    fn rejects_unknown_keys_and_imbalance() {
        let extra = TWO_SOURCES.replace(r#""a": 1"#, r#""a": 1, "b": 2"#);
        assert!(matches!(Scenario::from_json(&extra), Err(Error::Json(_))));
        let unbalanced = TWO_SOURCES.replace("[1, -1]", "[1, -0.5]");
        assert!(Scenario::from_json(&unbalanced).is_err());
        let coarse = TWO_SOURCES.replace("[32, 32]", "[8, 8]");
        assert!(matches!(Scenario::from_json(&coarse), Err(Error::EpsUnderResolved { .. })));
    }

    #[test]
    fn parses_optimizer_and_measure() {
        let text = TWO_SOURCES.replace(
            r#""functional""#,
            r#""optimizer": {"init": {"mode": "tube", "radius": 0.05}, "continuation": {"stages": [{"eps": 0.2}]}},
               "measure": [{"start": [0.25, 0.5], "end": [0.75, 0.5], "multiplicity": 1}],
               "seed": 7,
               "functional""#,
        );
        let s = Scenario::from_json(&text).unwrap();
        assert_eq!(s.optimizer.init, InitMode::Tube { radius: 0.05 });
        assert_eq!(s.optimizer.continuation, Continuation::Stages(vec![Stage { eps: 0.2, a: None }]));
        assert_eq!(s.measure.unwrap().segments.len(), 1);
        assert_eq!(s.seed, 7);
    }
}
