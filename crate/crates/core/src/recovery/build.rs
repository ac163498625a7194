use rayon::prelude::*;
use serde::Serialize;

use super::kernel::AxialKernel;
use super::measure::{limit_energy, validate_kirchhoff, PolyhedralMeasure, Segment};
use super::profile::{optimal_profile, RadialProfile};
use crate::error::{Error, Result};
use crate::field::{
    divergence, energy, mollified_source, residual_against, EnergyBreakdown, Functional, GridSpec, ScalarField,
    SourceSpec, VectorField,
};
use crate::optimizer::{distance_to_segment, face_conductance, weighted_projection};
use crate::real::Real;
use crate::reduced::CostParams;

/// Sub-samples per tangential axis when averaging over a face.
const FACE_SAMPLES: usize = 4;
/// Outer radii `(r_star + 2^k) eps` are tried for `k` up to this bound.
const MAX_RADIUS_DOUBLINGS: i32 = 10;
const FIX_TOL: f64 = 1e-12;
const FIX_MAX_ITER: usize = 200_000;

/// Recovery pair for a polyhedral measure at one `eps`.
#[derive(Debug, Clone)]
pub struct RecoveryResult<T> {
    pub sigma: VectorField<T>,
    pub u: ScalarField<T>,
    pub eps: T,
    pub delta: T,
    pub functional: Functional<T>,
    pub energy: EnergyBreakdown<T>,
    /// `sum_j f(m_j) L_j`.
    pub limit_energy: T,
    /// `sum_j L_j (f(m_j) + P delta)` with `P` the transition coefficient.
    pub predicted_bound: T,
    /// Core radius `r_star` of every segment, in eps-rescaled units.
    pub r_star: Vec<T>,
    /// Radius of the tube carrying `sigma` around every segment, `max(r_star, 1) eps`.
    pub support_radius: Vec<T>,
    /// Radius beyond which `u = 1` around every segment.
    pub outer_radius: Vec<T>,
    /// `||div sigma - f_eps||` of the sampled field before the divergence fix.
    pub raw_residual: T,
    /// Same residual after the fix.
    pub residual: T,
    /// `||f_eps||`.
    pub source_norm: T,
}

/// JSON summary of a recovery run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoverySummary<T> {
    pub limit_energy: T,
    pub recovery_energy: T,
    pub gap: T,
    pub eps: T,
    pub delta: T,
}

impl<T: Real> RecoveryResult<T> {
    pub fn summary(&self) -> RecoverySummary<T> {
        RecoverySummary {
            limit_energy: self.limit_energy,
            recovery_energy: self.energy.total,
            gap: self.energy.total - self.limit_energy,
            eps: self.eps,
            delta: self.delta,
        }
    }
}

/// Profile at the smallest outer radius `(r_star + 2^k) eps` meeting the slack `delta`.
fn tube_profile<T: Real>(m: T, eps: T, delta: T, params: &CostParams<T>) -> Result<RadialProfile<T>> {
    let r_star = crate::reduced::cost_f(m, params, T::lit(crate::reduced::DEFAULT_TOL))?.r_star;
    let mut last = None;
    for k in 1..=MAX_RADIUS_DOUBLINGS {
        let r = (r_star + T::lit(2f64.powi(k))) * eps;
        match optimal_profile(m, eps, r, delta, params) {
            Ok(p) => return Ok(p),
            Err(e @ Error::ProfileSlack { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one radius tried"))
}

/// Continuous recovery field of one segment.
struct SegmentField<'a, T> {
    n: usize,
    start: &'a [T],
    dir: Vec<T>,
    length: T,
    m: T,
    eps: T,
    /// Cutoff length and support radius.
    ell: T,
    core: T,
    theta: T,
    kernel: &'a AxialKernel<T>,
}

impl<'a, T: Real> SegmentField<'a, T> {
    fn new(seg: &'a Segment<T>, profile: &RadialProfile<T>, kernel: &'a AxialKernel<T>) -> Self {
        let n = seg.start.len();
        let core = profile.r_star * profile.eps;
        let w = crate::real::unit_ball_volume::<T>(n - 1);
        SegmentField {
            n,
            start: &seg.start,
            dir: seg.direction(),
            length: seg.length(),
            m: seg.multiplicity,
            eps: profile.eps,
            ell: profile.core_radius(),
            core,
            theta: seg.multiplicity / (w * core.powi(n as i32 - 1)),
            kernel,
        }
    }

    /// Cutoff `zeta` and its derivative at axial position `s`.
    fn cutoff(&self, s: T) -> (T, T) {
        let (l, len) = (self.ell, self.length);
        let two = T::lit(2.0);
        if s <= l || s >= len - l {
            (T::one(), T::zero())
        } else if s < two * l {
            ((two * l - s) / l, -l.recip())
        } else if s > len - two * l {
            ((s - (len - two * l)) / l, l.recip())
        } else {
            (T::zero(), T::zero())
        }
    }

    fn local(&self, x: &[T]) -> (T, Vec<T>, T) {
        let rel: Vec<T> = x.iter().zip(self.start).map(|(&a, &b)| a - b).collect();
        let s: T = rel.iter().zip(&self.dir).map(|(&a, &b)| a * b).sum();
        let perp: Vec<T> = rel.iter().zip(&self.dir).map(|(&a, &b)| a - s * b).collect();
        let rho = perp.iter().map(|&v| v * v).sum::<T>().sqrt();
        (s, perp, rho)
    }

    fn value(&self, x: &[T], out: &mut [T; 3]) {
        *out = [T::zero(); 3];
        let (s, perp, rho) = self.local(x);
        if rho >= self.ell || s <= -self.eps || s >= self.length + self.eps {
            return;
        }
        let (zeta, dzeta) = self.cutoff(s);
        let mut axial = T::zero();
        if zeta > T::zero() {
            let k = self.kernel;
            let (y, r) = (s / self.eps, rho / self.eps);
            let line = k.psi(y, r) - k.psi((s - self.length) / self.eps, r);
            axial += zeta * self.m * line / self.eps.powi(self.n as i32 - 1);
        }
        if zeta < T::one() && rho <= self.core {
            axial += (T::one() - zeta) * self.theta;
        }
        let mut radial = T::zero();
        if dzeta != T::zero() && rho > T::zero() {
            let dm2 = self.n as i32 - 2;
            let inner = rho.min(self.core).powi(dm2 + 1) / T::lit((dm2 + 1) as f64);
            let flux = self.m * self.kernel.flux(rho / self.eps) - self.theta * inner;
            radial = -dzeta * flux / rho.powi(dm2) / rho;
        }
        for a in 0..self.n {
            out[a] = axial * self.dir[a] + radial * perp[a];
        }
    }
}

/// Face averages of the field, sampled on `FACE_SAMPLES` points per tangential axis.
fn sample_faces<T: Real>(field: &SegmentField<'_, T>, grid: &GridSpec<T>) -> VectorField<T> {
    let n = grid.dim();
    let h = grid.spacing();
    let half_diag = h[..n].iter().map(|&v| v * v).sum::<T>().sqrt() * T::lit(0.5);
    let reach = field.ell + half_diag;
    let end: Vec<T> = (0..n).map(|a| field.start[a] + field.length * field.dir[a]).collect();
    let per = FACE_SAMPLES.pow(n as u32 - 1);
    let mut out = VectorField::zeros(grid);
    for a in 0..n {
        let tangential: Vec<usize> = (0..n).filter(|&b| b != a).collect();
        out.faces[a].par_iter_mut().enumerate().for_each(|(f, v)| {
            if grid.is_boundary_face(a, f) {
                return;
            }
            let c = grid.face_center(a, f);
            if distance_to_segment(&c[..n], field.start, &end) > reach {
                return;
            }
            let mut acc = T::zero();
            let mut val = [T::zero(); 3];
            let mut x = c;
            for k in 0..per {
                let mut rem = k;
                for &b in &tangential {
                    let i = rem % FACE_SAMPLES;
                    rem /= FACE_SAMPLES;
                    let off = (T::lit(i as f64) + T::lit(0.5)) / T::lit(FACE_SAMPLES as f64) - T::lit(0.5);
                    x[b] = c[b] + off * h[b];
                }
                field.value(&x[..n], &mut val);
                acc += val[a];
            }
            *v = acc / T::lit(per as f64);
        });
    }
    out
}

/// Phase field `min(u_bar(dist), caps)` of one segment at cell centers.
fn segment_phase<T: Real>(seg: &Segment<T>, profile: &RadialProfile<T>, grid: &GridSpec<T>) -> Vec<T> {
    let n = grid.dim();
    let cap = profile.needs_endpoint_cap();
    (0..grid.num_cells())
        .into_par_iter()
        .map(|c| {
            let x = grid.center(c);
            let x = &x[..n];
            let mut u = profile.value_at(distance_to_segment(x, &seg.start, &seg.end));
            if cap {
                for p in [&seg.start, &seg.end] {
                    let d = x.iter().zip(p.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
                    u = u.min(profile.endpoint_cap(d));
                }
            }
            u
        })
        .collect()
}

fn check_margin<T: Real>(seg: &Segment<T>, reach: T, grid: &GridSpec<T>) -> Result<()> {
    let n = grid.dim();
    for p in [&seg.start, &seg.end] {
        for a in 0..n {
            let lo = p[a] - grid.origin()[a];
            let hi = grid.origin()[a] + grid.extent()[a] - p[a];
            if !(lo > reach && hi > reach) {
                return Err(Error::Geometry(format!(
                    "segment endpoint lies within {} of the boundary",
                    reach.as_f64()
                )));
            }
        }
    }
    Ok(())
}

fn check_setup<T: Real>(grid: &GridSpec<T>, params: &CostParams<T>, eps: T, delta: T) -> Result<()> {
    params.validate()?;
    if grid.dim() != params.d + 1 {
        return Err(Error::invalid("params.d", "segments in R^n need codimension d = n - 1"));
    }
    if !(params.a > T::zero()) {
        return Err(Error::invalid("a", "recovery needs a > 0"));
    }
    if !(eps > T::zero()) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    if !(delta > T::zero()) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    if eps < T::lit(2.0) * grid.max_spacing() {
        return Err(Error::EpsUnderResolved {
            eps: eps.as_f64(),
            h: grid.max_spacing().as_f64(),
        });
    }
    Ok(())
}

/// Recovery pair of a Kirchhoff-admissible polyhedral measure.
///
/// Sums the per-segment fields, takes the pointwise minimum of the
/// per-segment phases, and removes the sampling error of the divergence by a
/// correction supported on the cells the sampled field touches.
pub fn build_polyhedral_recovery<T: Real>(
    measure: &PolyhedralMeasure<T>,
    spec: &SourceSpec<T>,
    eps: T,
    delta: T,
    params: &CostParams<T>,
    grid: &GridSpec<T>,
) -> Result<RecoveryResult<T>> {
    check_setup(grid, params, eps, delta)?;
    let violations = validate_kirchhoff(measure, spec);
    if let Some(first) = violations.first() {
        return Err(Error::KirchhoffViolation {
            count: violations.len(),
            first: first.point.iter().map(|v| v.as_f64()).collect(),
        });
    }
    measure.check_intersections()?;
    for s in &measure.segments {
        if s.start.len() != grid.dim() {
            return Err(Error::Geometry("segment dimension differs from the grid".into()));
        }
    }
    let kernel = AxialKernel::new(grid.dim());
    let mut profiles: Vec<(T, RadialProfile<T>)> = Vec::new();
    let mut sigma = VectorField::zeros(grid);
    let mut u = ScalarField::ones(grid);
    let (mut r_star, mut support, mut outer) = (Vec::new(), Vec::new(), Vec::new());
    let mut predicted = T::zero();
    for seg in &measure.segments {
        let m = seg.multiplicity;
        let profile = match profiles.iter().find(|(k, _)| *k == m) {
            Some((_, p)) => p.clone(),
            None => {
                let p = tube_profile(m, eps, delta, params)?;
                profiles.push((m, p.clone()));
                p
            }
        };
        check_margin(seg, profile.r, grid)?;
        if seg.length() < T::lit(4.0) * profile.core_radius() {
            return Err(Error::Geometry("segment shorter than four core radii".into()));
        }
        let field = SegmentField::new(seg, &profile, &kernel);
        sigma.add_assign(&sample_faces(&field, grid))?;
        for (x, v) in u.data.iter_mut().zip(segment_phase(seg, &profile, grid)) {
            *x = x.min(v);
        }
        predicted += seg.length() * (profile.f_value + params.transition_coefficient() * delta);
        r_star.push(profile.r_star);
        support.push(profile.core_radius());
        outer.push(profile.r);
    }
    u.pin_boundary();

    let f = mollified_source(&spec.with_eps(eps), grid)?;
    let raw_residual = residual_against(&sigma, &f);
    let div = divergence(&sigma);
    let g: Vec<T> = f.data.iter().zip(&div.data).map(|(&a, &b)| a - b).collect();
    let mask = touched_cells(&sigma, &f);
    let weights = face_conductance(&u, eps);
    let mut phi = vec![T::zero(); grid.num_cells()];
    let fix = weighted_projection(grid, weights, &g, Some(&mask), &mut phi, T::lit(FIX_TOL), FIX_MAX_ITER)?;
    sigma.add_assign(&fix)?;

    let functional = Functional::new(eps, params.a).with_p(params.p);
    let residual = residual_against(&sigma, &f);
    Ok(RecoveryResult {
        energy: energy(&sigma, &u, &functional)?,
        sigma,
        u,
        eps,
        delta,
        functional,
        limit_energy: limit_energy(measure, params)?,
        predicted_bound: predicted,
        r_star,
        support_radius: support,
        outer_radius: outer,
        raw_residual,
        residual,
        source_norm: f.l2_norm(),
    })
}

/// Recovery pair of a single segment, sources `+m` at its start and `-m` at its end.
pub fn build_segment_recovery<T: Real>(
    seg: &Segment<T>,
    eps: T,
    delta: T,
    params: &CostParams<T>,
    grid: &GridSpec<T>,
) -> Result<RecoveryResult<T>> {
    let spec = SourceSpec::new(
        vec![seg.start.clone(), seg.end.clone()],
        vec![seg.multiplicity, -seg.multiplicity],
        eps,
    )?;
    build_polyhedral_recovery(&PolyhedralMeasure::new(vec![seg.clone()]), &spec, eps, delta, params, grid)
}

/// Cells adjacent to a nonzero face of `sigma` or carrying a nonzero source.
fn touched_cells<T: Real>(sigma: &VectorField<T>, f: &ScalarField<T>) -> Vec<bool> {
    let g = &sigma.grid;
    let mut mask: Vec<bool> = f.data.iter().map(|&v| v != T::zero()).collect();
    for a in 0..g.dim() {
        let s = g.stride(a);
        let fs = g.face_stride(a);
        for c in 0..g.num_cells() {
            let ijk = g.unindex(c);
            if ijk[a] + 1 < g.cells()[a] && sigma.faces[a][g.low_face(a, ijk) + fs] != T::zero() {
                mask[c] = true;
                mask[c + s] = true;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::divergence_residual;

    fn setup(eps: f64, cells_per_eps: f64) -> (Segment<f64>, CostParams<f64>, GridSpec<f64>) {
        let seg = Segment::new(vec![0.5, 0.5], vec![1.5, 0.5], 1.0).unwrap();
        let params = CostParams::new(1, 2.0, 1.0).unwrap();
        let nx = (2.0 * cells_per_eps / eps).round() as usize;
        let grid = GridSpec::new(&[2.0, 1.0], &[nx, nx / 2]).unwrap();
        (seg, params, grid)
    }

    #[test]
    fn segment_recovery_divergence_and_support() {
        let (seg, params, grid) = setup(0.1, 6.0);
        let rec = build_segment_recovery(&seg, 0.1, 1e-2, &params, &grid).unwrap();
        let spec = SourceSpec::new(vec![seg.start.clone(), seg.end.clone()], vec![1.0, -1.0], 0.1).unwrap();
        let res = divergence_residual(&rec.sigma, &spec).unwrap();
        assert!(res <= 1e-9 * rec.source_norm, "{res}");
        let h = grid.max_spacing();
        assert!(rec.raw_residual <= 10.0 * h * rec.source_norm, "{} {}", rec.raw_residual, rec.source_norm);
        let reach = rec.support_radius[0] + h;
        for a in 0..2 {
            for (f, &v) in rec.sigma.faces[a].iter().enumerate() {
                if v != 0.0 {
                    let c = grid.face_center(a, f);
                    assert!(distance_to_segment(&c[..2], &seg.start, &seg.end) <= reach);
                }
            }
        }
        assert!(rec.summary().gap > 0.0);
    }
}
