use super::config::OptimizerConfig;
use super::elliptic::WeightedLaplacian;
use crate::error::Result;
use crate::field::{mollified_source, GridSpec, ScalarField, SourceSpec, VectorField};
use crate::real::Real;

/// Face coefficients `eps / mean(u)`: the harmonic mean of `eps/u` over the two adjacent cells.
pub(crate) fn face_conductance<T: Real>(u: &ScalarField<T>, eps: T) -> [Vec<T>; 3] {
    let g = &u.grid;
    let floor = T::weight_floor();
    let mut w: [Vec<T>; 3] = Default::default();
    for a in 0..g.dim() {
        w[a] = vec![T::zero(); g.num_faces(a)];
        let s = g.stride(a);
        let fs = g.face_stride(a);
        for c in 0..g.num_cells() {
            let ijk = g.unindex(c);
            if ijk[a] + 1 < g.cells()[a] {
                let mean = T::lit(0.5) * (u.data[c] + u.data[c + s]);
                w[a][g.low_face(a, ijk) + fs] = eps / mean.max(floor);
            }
        }
    }
    w
}

/// Minimizer of `sum u |sigma|^2 / eps` subject to `div sigma = f` with zero boundary flux.
///
/// Solves `div(W grad phi) = f` for the potential, optionally only on the
/// cells selected by `mask`, and returns `sigma = W grad phi`. `phi` holds the
/// initial guess and receives the solution.
pub(crate) fn weighted_projection<T: Real>(
    grid: &GridSpec<T>,
    weights: [Vec<T>; 3],
    f: &[T],
    mask: Option<&[bool]>,
    phi: &mut [T],
    tol: T,
    max_iter: usize,
) -> Result<VectorField<T>> {
    let lap = WeightedLaplacian::new(grid, weights, mask);
    let rhs: Vec<T> = f.iter().map(|&x| -x).collect();
    lap.solve(&rhs, phi, tol, max_iter)?;
    let mut sigma = VectorField::zeros(grid);
    let w = lap.face_weights();
    for a in 0..grid.dim() {
        let s = grid.stride(a);
        let fs = grid.face_stride(a);
        let h = grid.spacing()[a];
        for c in 0..grid.num_cells() {
            let ijk = grid.unindex(c);
            if ijk[a] + 1 < grid.cells()[a] {
                let face = grid.low_face(a, ijk) + fs;
                if w[a][face] > T::zero() {
                    sigma.faces[a][face] = w[a][face] * (phi[c + s] - phi[c]) / h;
                }
            }
        }
    }
    Ok(sigma)
}

pub(crate) fn sigma_step_with_source<T: Real>(
    u: &ScalarField<T>,
    f: &ScalarField<T>,
    config: &OptimizerConfig<T>,
    eps: T,
    phi: &mut [T],
) -> Result<VectorField<T>> {
    u.grid.same_as(&f.grid)?;
    let w = face_conductance(u, eps);
    weighted_projection(&u.grid, w, &f.data, None, phi, config.cg_tol, config.cg_max_iter)
}

/// Exact minimizer of the mass term for frozen `u` under the mollified divergence constraint.
pub fn sigma_step<T: Real>(u: &ScalarField<T>, spec: &SourceSpec<T>, config: &OptimizerConfig<T>) -> Result<VectorField<T>> {
    let f = mollified_source(spec, &u.grid)?;
    let mut phi = vec![T::zero(); u.grid.num_cells()];
    sigma_step_with_source(u, &f, config, spec.eps, &mut phi)
}
