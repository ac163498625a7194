use super::fields::{ScalarField, VectorField};
use super::grid::GridSpec;
use super::source::{mollified_source, SourceSpec};
use crate::error::Result;
use crate::real::Real;

/// Conservative face-difference divergence.
pub fn divergence<T: Real>(sigma: &VectorField<T>) -> ScalarField<T> {
    let grid = &sigma.grid;
    let mut out = ScalarField::zeros(grid);
    divergence_into(grid, &sigma.faces, &mut out.data);
    out
}

pub(crate) fn divergence_into<T: Real>(grid: &GridSpec<T>, faces: &[Vec<T>; 3], out: &mut [T]) {
    let h = grid.spacing();
    for (c, o) in out.iter_mut().enumerate() {
        let ijk = grid.unindex(c);
        let mut s = T::zero();
        for a in 0..grid.dim() {
            let lo = grid.low_face(a, ijk);
            let hi = lo + grid.face_stride(a);
            s += (faces[a][hi] - faces[a][lo]) / h[a];
        }
        *o = s;
    }
}

/// Face gradient of a cell field; boundary faces are zero.
///
/// Satisfies `sum_c div(s)_c phi_c = -sum_f s_f grad(phi)_f` for every `s`
/// with zero boundary faces.
pub fn face_gradient<T: Real>(phi: &ScalarField<T>) -> VectorField<T> {
    let grid = &phi.grid;
    let mut out = VectorField::zeros(grid);
    gradient_into(grid, &phi.data, &mut out.faces);
    out
}

pub(crate) fn gradient_into<T: Real>(grid: &GridSpec<T>, phi: &[T], faces: &mut [Vec<T>; 3]) {
    let h = grid.spacing();
    for a in 0..grid.dim() {
        let stride = grid.stride(a);
        let fstride = grid.face_stride(a);
        for f in faces[a].iter_mut() {
            *f = T::zero();
        }
        for c in 0..grid.num_cells() {
            let ijk = grid.unindex(c);
            if ijk[a] + 1 < grid.cells()[a] {
                let f = grid.low_face(a, ijk) + fstride;
                faces[a][f] = (phi[c + stride] - phi[c]) / h[a];
            }
        }
    }
}

/// `||div(sigma) - f_eps||` in `L^2`.
pub fn divergence_residual<T: Real>(sigma: &VectorField<T>, spec: &SourceSpec<T>) -> Result<T> {
    let f = mollified_source(spec, &sigma.grid)?;
    Ok(residual_against(sigma, &f))
}

pub(crate) fn residual_against<T: Real>(sigma: &VectorField<T>, f: &ScalarField<T>) -> T {
    let div = divergence(sigma);
    let s: T = div.data.iter().zip(&f.data).map(|(&x, &y)| (x - y) * (x - y)).sum();
    (s * sigma.grid.cell_volume()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_field_has_zero_divergence() {
        let g = GridSpec::<f64>::unit(3, 8).unwrap();
        assert!(divergence(&VectorField::zeros(&g)).data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_flux_telescopes_to_boundary_layers() {
        let g = GridSpec::<f64>::unit(2, 8).unwrap();
        let s = VectorField::from_fn(&g, |a, _| if a == 0 { 1.0 } else { 0.0 });
        let div = divergence(&s);
        for c in 0..g.num_cells() {
            let i = g.unindex(c)[0];
            let expect = match i {
                0 => 8.0,
                7 => -8.0,
                _ => 0.0,
            };
            assert!((div.data[c] - expect).abs() < 1e-12);
        }
        assert!(div.integral().abs() < 1e-12);
    }

    #[test]
    fn gradient_is_negative_adjoint() {
        let g = GridSpec::<f64>::new(&[1.0, 0.7, 1.3], &[8, 9, 10]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = ScalarField::from_data(&g, (0..g.num_cells()).map(|_| rng.gen()).collect()).unwrap();
        let mut s = VectorField::zeros(&g);
        for f in s.faces.iter_mut() {
            f.iter_mut().for_each(|x| *x = rng.gen::<f64>() - 0.5);
        }
        s.clear_boundary();
        let lhs: f64 = divergence(&s).data.iter().zip(&phi.data).map(|(a, b)| a * b).sum();
        let gp = face_gradient(&phi);
        let rhs: f64 = (0..3).map(|a| s.faces[a].iter().zip(&gp.faces[a]).map(|(x, y)| x * y).sum::<f64>()).sum();
        assert!((lhs + rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
