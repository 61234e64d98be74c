use num_rational::Rational64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::height::{floor_to_parity, Slope};
use crate::lattice::Vertex;

/// Periodic boundary conditions for the sublattice `L_n = n (d + 1) X^d` with slope `s`:
/// `f(x + y) = f(x) + s(y)` for `y ∈ L_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicBoundary {
    n: i64,
    slope: Slope,
}

impl PeriodicBoundary {
    pub fn new(n: i64, slope: Slope) -> Result<Self> {
        if n < 1 {
            return Err(Error::Invalid(format!("period must be positive, got {n}")));
        }
        Ok(PeriodicBoundary { n, slope })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn slope(&self) -> &Slope {
        &self.slope
    }

    /// `s ∈ S_n`, i.e. the pair `(L_n, s)` admits height functions.
    pub fn is_valid(&self) -> bool {
        self.slope.in_lattice_simplex(self.n)
    }

    /// Side length `N = n (d + 1)` of the fundamental domain in box coordinates.
    pub fn period(&self) -> i64 {
        self.n * self.slope.dim().span()
    }

    pub fn site_count(&self) -> usize {
        (self.period() as usize).pow(self.slope.dim().d() as u32)
    }

    pub fn site_vertex(&self, mut i: usize) -> Vertex {
        let big_n = self.period() as usize;
        let d = self.slope.dim().d();
        let mut a = vec![0i64; d];
        for c in a.iter_mut().rev() {
            *c = (i % big_n) as i64;
            i /= big_n;
        }
        Vertex::from_box_coords(&a)
    }

    /// The site of the fundamental domain equivalent to `y`, and `f(y) - f(site)`.
    pub fn reduce(&self, y: &Vertex) -> (usize, i64) {
        let big_n = self.period();
        let mut index = 0usize;
        let mut shift = Rational64::zero();
        for (i, &a) in y.box_coords().iter().enumerate() {
            index = index * big_n as usize + a.rem_euclid(big_n) as usize;
            shift += self.slope.values()[i] * (a.div_euclid(big_n) * big_n);
        }
        debug_assert!(shift.is_integer());
        (index, shift.to_integer())
    }
}

/// A periodic height function, stored on the fundamental domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusState {
    pbc: PeriodicBoundary,
    values: Vec<i64>,
}

impl TorusState {
    /// `⌊s⌋` on the torus.
    pub fn new(pbc: PeriodicBoundary) -> Result<Self> {
        if !pbc.is_valid() {
            return Err(Error::SlopeOutsideSimplex(format!(
                "{} with period {}",
                pbc.slope, pbc.n
            )));
        }
        let span = pbc.slope.dim().span();
        let values = (0..pbc.site_count())
            .map(|i| {
                let x = pbc.site_vertex(i);
                floor_to_parity(pbc.slope.eval(&x), x.parity(), span)
            })
            .collect();
        Ok(TorusState { pbc, values })
    }

    pub fn from_values(pbc: PeriodicBoundary, values: Vec<i64>) -> Result<Self> {
        if values.len() != pbc.site_count() {
            return Err(Error::LengthMismatch {
                expected: pbc.site_count(),
                found: values.len(),
            });
        }
        Ok(TorusState { pbc, values })
    }

    pub fn boundary(&self) -> &PeriodicBoundary {
        &self.pbc
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn value(&self, x: &Vertex) -> i64 {
        let (j, shift) = self.pbc.reduce(x);
        self.values[j] + shift
    }

    /// Values shifted so that `f(0) = 0`.
    pub fn normalized(&self) -> Vec<i64> {
        let f0 = self.values[0];
        self.values.iter().map(|v| v - f0).collect()
    }

    /// Parity at every site and `∇f ∈ {1, -d}` on every edge, wrapped edges included.
    pub fn validate(&self) -> bool {
        let dim = self.pbc.slope.dim();
        let d = dim.d() as i64;
        (0..self.values.len()).all(|i| {
            let x = self.pbc.site_vertex(i);
            let fx = self.values[i];
            (fx - x.parity()).rem_euclid(dim.span()) == 0
                && (0..dim.coords()).all(|dir| {
                    let g = self.value(&x.step(dir, 1)) - fx;
                    g == 1 || g == -d
                })
        })
    }
}
