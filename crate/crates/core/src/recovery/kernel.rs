use crate::field::bump;
use crate::real::{gauss5, unit_ball_volume, Real};

const PANELS: usize = 64;
const TABLE_CELLS: usize = 1024;

fn composite<T: Real>(a: T, b: T, panels: usize, mut g: impl FnMut(T) -> T) -> T {
    if !(b > a) {
        return T::zero();
    }
    let w = (b - a) / T::lit(panels as f64);
    (0..panels)
        .map(|k| {
            let lo = a + w * T::lit(k as f64);
            gauss5(lo, lo + w, &mut g)
        })
        .sum()
}

/// Normalized bump in `R^n` and its integrals along one axis.
///
/// With `y` the axial and `s` the transverse radius (both in units of the
/// bump radius): `psi(y, s)` integrates the bump along the axis up to `y`,
/// `chord(s) = psi(inf, s)` and `flux(s) = int_0^s t^{n-2} chord(t) dt`.
#[derive(Debug, Clone)]
pub(crate) struct AxialKernel<T> {
    n: usize,
    scale: T,
    flux_nodes: Vec<T>,
    flux_values: Vec<T>,
    flux_slopes: Vec<T>,
}

impl<T: Real> AxialKernel<T> {
    pub fn new(n: usize) -> Self {
        let area = T::lit(n as f64) * unit_ball_volume::<T>(n);
        let mass = area * composite(T::zero(), T::one(), 64, |t| t.powi(n as i32 - 1) * bump(t * t));
        let mut k = AxialKernel {
            n,
            scale: mass.recip(),
            flux_nodes: Vec::new(),
            flux_values: Vec::new(),
            flux_slopes: Vec::new(),
        };
        let dt = T::one() / T::lit(TABLE_CELLS as f64);
        let mut acc = T::zero();
        for i in 0..=TABLE_CELLS {
            let t = dt * T::lit(i as f64);
            if i > 0 {
                acc += gauss5(t - dt, t, |x| k.flux_density(x));
            }
            k.flux_nodes.push(t);
            k.flux_values.push(acc);
            k.flux_slopes.push(k.flux_density(t));
        }
        k
    }

    fn flux_density(&self, t: T) -> T {
        t.powi(self.n as i32 - 2) * self.chord(t)
    }

    /// Normalized bump at squared radius `y2`.
    pub fn density(&self, y2: T) -> T {
        self.scale * bump(y2)
    }

    pub fn psi(&self, y: T, s: T) -> T {
        let c2 = T::one() - s * s;
        if c2 <= T::zero() {
            return T::zero();
        }
        let c = c2.sqrt();
        if y <= -c {
            return T::zero();
        }
        composite(-c, y.min(c), PANELS, |x| self.density(x * x + s * s))
    }

    pub fn chord(&self, s: T) -> T {
        self.psi(T::one(), s)
    }

    /// `int_0^s t^{n-2} chord(t) dt`, cubic Hermite interpolated from a table.
    pub fn flux(&self, s: T) -> T {
        let last = TABLE_CELLS;
        if s >= T::one() {
            return self.flux_values[last];
        }
        if s <= T::zero() {
            return T::zero();
        }
        let dt = self.flux_nodes[1];
        let i = ((s / dt).as_f64() as usize).min(last - 1);
        let x = (s - self.flux_nodes[i]) / dt;
        let (y0, y1) = (self.flux_values[i], self.flux_values[i + 1]);
        let (m0, m1) = (self.flux_slopes[i] * dt, self.flux_slopes[i + 1] * dt);
        let x2 = x * x;
        let x3 = x2 * x;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        (two * x3 - three * x2 + T::one()) * y0
            + (x3 - two * x2 + x) * m0
            + (three * x2 - two * x3) * y1
            + (x3 - x2) * m1
    }
}
