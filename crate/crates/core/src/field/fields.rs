use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::real::Real;

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    pub grid: GridSpec<T>,
    pub data: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn constant(grid: &GridSpec<T>, value: T) -> Self {
        ScalarField {
            data: vec![value; grid.num_cells()],
            grid: grid.clone(),
        }
    }

    pub fn zeros(grid: &GridSpec<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn ones(grid: &GridSpec<T>) -> Self {
        Self::constant(grid, T::one())
    }

    pub fn from_data(grid: &GridSpec<T>, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.num_cells() {
            return Err(Error::GridMismatch);
        }
        Ok(ScalarField {
            grid: grid.clone(),
            data,
        })
    }

    /// Sets every boundary cell to one.
    pub fn pin_boundary(&mut self) {
        for c in 0..self.data.len() {
            if self.grid.is_boundary_cell(c) {
                self.data[c] = T::one();
            }
        }
    }

    /// Checks `eta <= u <= 1` and `u = 1` on boundary cells.
    pub fn check_phase(&self, eta: T) -> Result<()> {
        for (c, &u) in self.data.iter().enumerate() {
            if !(u >= eta && u <= T::one()) {
                return Err(Error::invalid("u", format!("cell {c} value {u} outside [{eta}, 1]")));
            }
            if self.grid.is_boundary_cell(c) && u != T::one() {
                return Err(Error::invalid("u", format!("boundary cell {c} is not 1")));
            }
        }
        Ok(())
    }

    /// `sqrt(sum data^2 h^n)`.
    pub fn l2_norm(&self) -> T {
        (self.data.iter().map(|&x| x * x).sum::<T>() * self.grid.cell_volume()).sqrt()
    }

    /// `sum data h^n`.
    pub fn integral(&self) -> T {
        self.data.iter().copied().sum::<T>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Staggered vector field: one normal component per cell face.
///
/// `faces[a]` holds the faces normal to axis `a` in the layout of
/// [`GridSpec::low_face`]; inactive axes of a 2-D grid are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    pub grid: GridSpec<T>,
    pub faces: [Vec<T>; 3],
}

impl<T: Real> VectorField<T> {
    pub fn zeros(grid: &GridSpec<T>) -> Self {
        let mut faces: [Vec<T>; 3] = Default::default();
        for (a, f) in faces.iter_mut().enumerate().take(grid.dim()) {
            *f = vec![T::zero(); grid.num_faces(a)];
        }
        VectorField {
            grid: grid.clone(),
            faces,
        }
    }

    /// Builds a field from a face function `g(axis, face_center)`; boundary faces are zero.
    pub fn from_fn(grid: &GridSpec<T>, mut g: impl FnMut(usize, [T; 3]) -> T) -> Self {
        let mut v = Self::zeros(grid);
        for a in 0..grid.dim() {
            for f in 0..v.faces[a].len() {
                if !grid.is_boundary_face(a, f) {
                    v.faces[a][f] = g(a, grid.face_center(a, f));
                }
            }
        }
        v
    }

    /// Zeroes every boundary face.
    pub fn clear_boundary(&mut self) {
        for a in 0..self.grid.dim() {
            for f in 0..self.faces[a].len() {
                if self.grid.is_boundary_face(a, f) {
                    self.faces[a][f] = T::zero();
                }
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for f in self.faces.iter_mut() {
            f.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.grid.same_as(&other.grid)?;
        for a in 0..3 {
            for (x, &y) in self.faces[a].iter_mut().zip(&other.faces[a]) {
                *x += y;
            }
        }
        Ok(())
    }

    /// Per-cell `|sigma|^2`: average of the squared values on the two faces of each axis.
    pub fn cell_norm_sq(&self) -> Vec<T> {
        face_average_sq(&self.grid, &self.faces)
    }

    /// Cell-centered vector: mean of the two faces along each axis.
    pub fn cell_vector(&self, c: usize) -> [T; 3] {
        let ijk = self.grid.unindex(c);
        let mut v = [T::zero(); 3];
        for a in 0..self.grid.dim() {
            let lo = self.grid.low_face(a, ijk);
            let hi = lo + self.grid.face_stride(a);
            v[a] = T::lit(0.5) * (self.faces[a][lo] + self.faces[a][hi]);
        }
        v
    }
}

/// `sum_a (g_lo^2 + g_hi^2)/2` for every cell.
pub(crate) fn face_average_sq<T: Real>(grid: &GridSpec<T>, faces: &[Vec<T>; 3]) -> Vec<T> {
    let half = T::lit(0.5);
    let mut out = vec![T::zero(); grid.num_cells()];
    for (c, o) in out.iter_mut().enumerate() {
        let ijk = grid.unindex(c);
        let mut s = T::zero();
        for a in 0..grid.dim() {
            let lo = grid.low_face(a, ijk);
            let hi = lo + grid.face_stride(a);
            let (x, y) = (faces[a][lo], faces[a][hi]);
            s += half * (x * x + y * y);
        }
        *o = s;
    }
    out
}
