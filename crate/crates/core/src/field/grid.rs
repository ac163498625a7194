use crate::error::{Error, Result};
use crate::real::Real;

/// Minimum number of cells per axis.
pub const MIN_CELLS: usize = 8;

/// Uniform cell grid on an axis-aligned box in two or three dimensions.
///
/// Unused axes of a two-dimensional grid carry one cell of unit width so
/// that all index arithmetic can be written for three axes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    n: usize,
    cells: [usize; 3],
    extent: [T; 3],
    origin: [T; 3],
    h: [T; 3],
}

impl<T: Real> GridSpec<T> {
    /// Box `[0, extent]` split into `cells` along each axis.
    pub fn new(extent: &[T], cells: &[usize]) -> Result<Self> {
        let n = extent.len();
        if !(n == 2 || n == 3) {
            return Err(Error::invalid("grid.extent", "dimension must be 2 or 3"));
        }
        if cells.len() != n {
            return Err(Error::invalid("grid.cells", "needs one count per axis"));
        }
        let mut g = GridSpec {
            n,
            cells: [1; 3],
            extent: [T::one(); 3],
            origin: [T::zero(); 3],
            h: [T::one(); 3],
        };
        for a in 0..n {
            if cells[a] < MIN_CELLS {
                return Err(Error::invalid("grid.cells", format!("axis {a} has fewer than {MIN_CELLS} cells")));
            }
            if !(extent[a] > T::zero()) || !extent[a].is_finite() {
                return Err(Error::invalid("grid.extent", format!("axis {a} must have positive length")));
            }
            g.cells[a] = cells[a];
            g.extent[a] = extent[a];
            g.h[a] = extent[a] / T::lit(cells[a] as f64);
        }
        Ok(g)
    }

    /// Unit square or cube with `cells` per axis.
    pub fn unit(n: usize, cells: usize) -> Result<Self> {
        Self::new(&vec![T::one(); n], &vec![cells; n])
    }

    pub fn with_origin(mut self, origin: &[T]) -> Result<Self> {
        if origin.len() != self.n {
            return Err(Error::invalid("grid.origin", "needs one coordinate per axis"));
        }
        self.origin[..self.n].copy_from_slice(origin);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.n]
    }

    pub fn extent(&self) -> &[T] {
        &self.extent[..self.n]
    }

    pub fn origin(&self) -> &[T] {
        &self.origin[..self.n]
    }

    pub fn spacing(&self) -> &[T] {
        &self.h[..self.n]
    }

    /// Largest spacing over the active axes.
    pub fn max_spacing(&self) -> T {
        self.spacing().iter().copied().fold(T::zero(), T::max)
    }

    pub fn cell_volume(&self) -> T {
        self.spacing().iter().copied().fold(T::one(), |v, h| v * h)
    }

    pub fn volume(&self) -> T {
        self.extent().iter().copied().fold(T::one(), |v, l| v * l)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().product()
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.cells[0] * (ijk[1] + self.cells[1] * ijk[2])
    }

    #[inline]
    pub fn unindex(&self, c: usize) -> [usize; 3] {
        let i = c % self.cells[0];
        let r = c / self.cells[0];
        [i, r % self.cells[1], r / self.cells[1]]
    }

    /// Cell stride along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.cells[0],
            _ => self.cells[0] * self.cells[1],
        }
    }

    /// Cell counts of the face array normal to `axis`.
    pub fn face_dims(&self, axis: usize) -> [usize; 3] {
        let mut d = self.cells;
        d[axis] += 1;
        d
    }

    pub fn num_faces(&self, axis: usize) -> usize {
        self.face_dims(axis).iter().product()
    }

    /// Index of the face on the low side of cell `ijk` along `axis`.
    #[inline]
    pub fn low_face(&self, axis: usize, ijk: [usize; 3]) -> usize {
        let d = self.face_dims(axis);
        ijk[0] + d[0] * (ijk[1] + d[1] * ijk[2])
    }

    /// Face stride along `axis` in the face array normal to `axis`.
    #[inline]
    pub fn face_stride(&self, axis: usize) -> usize {
        let d = self.face_dims(axis);
        match axis {
            0 => 1,
            1 => d[0],
            _ => d[0] * d[1],
        }
    }

    /// Center of cell `c`, zero-padded to three coordinates.
    pub fn center(&self, c: usize) -> [T; 3] {
        let ijk = self.unindex(c);
        let mut x = [T::zero(); 3];
        for a in 0..self.n {
            x[a] = self.origin[a] + (T::lit(ijk[a] as f64) + T::lit(0.5)) * self.h[a];
        }
        x
    }

    /// Center of face `f` normal to `axis`.
    pub fn face_center(&self, axis: usize, f: usize) -> [T; 3] {
        let d = self.face_dims(axis);
        let ijk = [f % d[0], (f / d[0]) % d[1], f / (d[0] * d[1])];
        let mut x = [T::zero(); 3];
        for a in 0..self.n {
            let shift = if a == axis { T::zero() } else { T::lit(0.5) };
            x[a] = self.origin[a] + (T::lit(ijk[a] as f64) + shift) * self.h[a];
        }
        x
    }

    /// Whether the face lies on the boundary of the box.
    pub fn is_boundary_face(&self, axis: usize, f: usize) -> bool {
        let d = self.face_dims(axis);
        let i = match axis {
            0 => f % d[0],
            1 => (f / d[0]) % d[1],
            _ => f / (d[0] * d[1]),
        };
        i == 0 || i == self.cells[axis]
    }

    /// Whether cell `c` touches the boundary of the box.
    pub fn is_boundary_cell(&self, c: usize) -> bool {
        let ijk = self.unindex(c);
        (0..self.n).any(|a| ijk[a] == 0 || ijk[a] + 1 == self.cells[a])
    }

    /// Whether the closed ball `B(x, r)` lies inside the box.
    pub fn contains_ball(&self, x: &[T], r: T) -> bool {
        (0..self.n).all(|a| x[a] - r >= self.origin[a] && x[a] + r <= self.origin[a] + self.extent[a])
    }

    /// Grid with every cell count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let cells: Vec<usize> = self.cells().iter().map(|&c| c * factor).collect();
        GridSpec::new(self.extent(), &cells)?.with_origin(self.origin())
    }

    pub(crate) fn same_as(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}
