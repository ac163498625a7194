use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SourceSpec;
use crate::real::Real;
use crate::reduced::{cost_f, CostParams, DEFAULT_TOL};

/// Oriented segment from `start` to `end` carrying multiplicity `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T> {
    pub start: Vec<T>,
    pub end: Vec<T>,
    pub multiplicity: T,
}

impl<T: Real> Segment<T> {
    pub fn new(start: Vec<T>, end: Vec<T>, multiplicity: T) -> Result<Self> {
        if start.len() != end.len() {
            return Err(Error::Geometry("segment endpoints differ in dimension".into()));
        }
        if !(multiplicity > T::zero()) || !multiplicity.is_finite() {
            return Err(Error::invalid("measure.multiplicity", "must be positive"));
        }
        let s = Segment {
            start,
            end,
            multiplicity,
        };
        if !(s.length() > T::zero()) {
            return Err(Error::Geometry("segment endpoints coincide".into()));
        }
        Ok(s)
    }

    pub fn length(&self) -> T {
        self.start
            .iter()
            .zip(&self.end)
            .map(|(&a, &b)| (b - a) * (b - a))
            .sum::<T>()
            .sqrt()
    }

    /// Unit vector from `start` to `end`.
    pub fn direction(&self) -> Vec<T> {
        let l = self.length();
        self.start.iter().zip(&self.end).map(|(&a, &b)| (b - a) / l).collect()
    }
}

/// Finite union of oriented segments with constant multiplicities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolyhedralMeasure<T> {
    pub segments: Vec<Segment<T>>,
}

/// Imbalance at one vertex: `actual = sum z_j m_j` against the prescribed source weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KirchhoffViolation<T> {
    pub point: Vec<T>,
    pub expected: T,
    pub actual: T,
}

fn same_point<T: Real>(a: &[T], b: &[T], tol: T) -> bool {
    a.iter().zip(b).all(|(&x, &y)| (x - y).abs() <= tol)
}

impl<T: Real> PolyhedralMeasure<T> {
    pub fn new(segments: Vec<Segment<T>>) -> Self {
        PolyhedralMeasure { segments }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Tolerance for identifying vertices, relative to the largest coordinate.
    fn vertex_tol(&self, spec: &SourceSpec<T>) -> T {
        let scale = self
            .segments
            .iter()
            .flat_map(|s| s.start.iter().chain(&s.end))
            .chain(spec.points.iter().flatten())
            .fold(T::one(), |m, &x| m.max(x.abs()));
        scale * T::lit(1e-9)
    }

    /// Checks that segments meet only at endpoints.
    pub fn check_intersections(&self) -> Result<()> {
        let segs = &self.segments;
        for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                let d = segment_distance(&segs[i], &segs[j]);
                let shares = [&segs[i].start, &segs[i].end]
                    .iter()
                    .any(|p| [&segs[j].start, &segs[j].end].iter().any(|q| same_point(p, q, T::lit(1e-9))));
                if d < T::lit(1e-9) && !shares {
                    return Err(Error::Geometry(format!("segments {i} and {j} cross away from their endpoints")));
                }
            }
        }
        Ok(())
    }
}

/// Distance between two segments, by sampling one against the exact point-segment distance.
fn segment_distance<T: Real>(a: &Segment<T>, b: &Segment<T>) -> T {
    let steps = 512;
    (0..=steps)
        .map(|k| {
            let t = T::lit(k as f64 / steps as f64);
            let x: Vec<T> = a.start.iter().zip(&a.end).map(|(&p, &q)| p + t * (q - p)).collect();
            crate::optimizer::distance_to_segment(&x, &b.start, &b.end)
        })
        .fold(T::infinity(), T::min)
}

/// Signed multiplicity balance at every vertex and source point.
///
/// A segment contributes `+m` at its start and `-m` at its end, matching
/// `div sigma = m (delta_start - delta_end)`. The balance must equal the
/// source weight at points of `spec` and vanish elsewhere. Returns the
/// violations; an empty list means the measure is admissible.
pub fn validate_kirchhoff<T: Real>(measure: &PolyhedralMeasure<T>, spec: &SourceSpec<T>) -> Vec<KirchhoffViolation<T>> {
    let tol = measure.vertex_tol(spec);
    let mut points: Vec<Vec<T>> = Vec::new();
    let mut push = |p: &Vec<T>| {
        if !points.iter().any(|q| same_point(p, q, tol)) {
            points.push(p.clone());
        }
    };
    for s in &measure.segments {
        push(&s.start);
        push(&s.end);
    }
    for p in &spec.points {
        push(p);
    }
    let scale = measure
        .segments
        .iter()
        .map(|s| s.multiplicity)
        .chain(spec.weights.iter().map(|w| w.abs()))
        .fold(T::one(), T::max);
    let mut out = Vec::new();
    for p in points {
        let mut actual = T::zero();
        for s in &measure.segments {
            if same_point(&s.start, &p, tol) {
                actual += s.multiplicity;
            }
            if same_point(&s.end, &p, tol) {
                actual -= s.multiplicity;
            }
        }
        let expected: T = spec
            .points
            .iter()
            .zip(&spec.weights)
            .filter(|(q, _)| same_point(q, &p, tol))
            .map(|(_, &w)| w)
            .sum();
        if (actual - expected).abs() > T::lit(1e-9) * scale {
            out.push(KirchhoffViolation {
                point: p,
                expected,
                actual,
            });
        }
    }
    out
}

/// `sum_j f(m_j) L_j`.
pub fn limit_energy<T: Real>(measure: &PolyhedralMeasure<T>, params: &CostParams<T>) -> Result<T> {
    let mut cache: Vec<(T, T)> = Vec::new();
    let mut total = T::zero();
    for s in &measure.segments {
        let m = s.multiplicity;
        let f = match cache.iter().find(|(k, _)| *k == m) {
            Some(&(_, f)) => f,
            None => {
                let f = cost_f(m, params, T::lit(DEFAULT_TOL))?.f_value;
                cache.push((m, f));
                f
            }
        };
        total += f * s.length();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: [f64; 2], b: [f64; 2], m: f64) -> Segment<f64> {
        Segment::new(a.to_vec(), b.to_vec(), m).unwrap()
    }

    #[test]
    fn single_segment_balance() {
        let meas = PolyhedralMeasure::new(vec![seg([0.2, 0.5], [0.8, 0.5], 1.0)]);
        let spec = SourceSpec::new(vec![vec![0.2, 0.5], vec![0.8, 0.5]], vec![1.0, -1.0], 0.05).unwrap();
        assert!(validate_kirchhoff(&meas, &spec).is_empty());
        let v = validate_kirchhoff(&meas, &SourceSpec::empty(0.05));
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].point, vec![0.2, 0.5]);
        assert_eq!(v[0].actual, 1.0);
        assert_eq!(v[1].actual, -1.0);
    }

    #[test]
    fn y_tree_balances_at_junction() {
        let j = [0.5, 0.5];
        let meas = PolyhedralMeasure::new(vec![
            seg([0.2, 0.7], j, 1.0),
            seg([0.2, 0.3], j, 1.0),
            seg(j, [0.8, 0.5], 2.0),
        ]);
        let spec = SourceSpec::new(
            vec![vec![0.2, 0.7], vec![0.2, 0.3], vec![0.8, 0.5]],
            vec![1.0, 1.0, -2.0],
            0.05,
        )
        .unwrap();
        assert!(validate_kirchhoff(&meas, &spec).is_empty());
        assert!(meas.check_intersections().is_ok());
    }

    #[test]
    fn crossing_segments_are_rejected() {
        let meas = PolyhedralMeasure::new(vec![seg([0.2, 0.2], [0.8, 0.8], 1.0), seg([0.2, 0.8], [0.8, 0.2], 1.0)]);
        assert!(meas.check_intersections().is_err());
    }

    #[test]
    fn limit_energy_closed_forms() {
        let p = CostParams::new(1, 2.0, 1.0).unwrap();
        assert_eq!(limit_energy(&PolyhedralMeasure::default(), &p).unwrap(), 0.0);
        let one = PolyhedralMeasure::new(vec![seg([0.0, 0.0], [1.0, 0.0], 1.0)]);
        assert!((limit_energy(&one, &p).unwrap() - 4.0).abs() < 0.04);
        let q = CostParams::new(1, 2.0, 0.25).unwrap();
        let two = PolyhedralMeasure::new(vec![seg([0.0, 0.0], [1.0, 0.0], 1.0), seg([0.0, 1.0], [1.0, 1.0], 2.0)]);
        assert!((limit_energy(&two, &q).unwrap() - 7.0).abs() < 0.07);
    }
}
