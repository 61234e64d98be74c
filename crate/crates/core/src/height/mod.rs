//! Height functions on the simplicial lattice.
//!
//! A [`HeightField`] is a background function defined on all of `X^d` plus a finite set of
//! overridden values. Overrides equal to the background value are never stored, so two
//! fields with the same background compare equal exactly when they agree everywhere.

mod tiling;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{Dim, Edge, Vertex};

pub use tiling::{integrate_tiling, phi, phi_inv, tiling_of, Tiling};

/// A linear form on `H`, given by its values on `g_1 .. g_{d+1}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Slope {
    values: Vec<Rational64>,
}

impl Slope {
    /// Stores the values as given; use [`Slope::is_linear`] and [`Slope::in_simplex`] to
    /// check them.
    pub fn new(values: Vec<Rational64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidDimension(values.len().saturating_sub(1)));
        }
        Ok(Slope { values })
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Rational64::from_integer(v)).collect())
    }

    pub fn zero(dim: Dim) -> Self {
        Slope {
            values: vec![Rational64::zero(); dim.coords()],
        }
    }

    /// The extreme point `s^i` of the simplex (zero-based `i`): `-d` on `g_i`, `1` elsewhere.
    pub fn extreme(dim: Dim, i: usize) -> Self {
        let d = dim.d() as i64;
        Slope {
            values: (0..dim.coords())
                .map(|j| Rational64::from_integer(if j == i { -d } else { 1 }))
                .collect(),
        }
    }

    pub fn dim(&self) -> Dim {
        Dim::new(self.values.len() - 1).expect("checked on construction")
    }

    pub fn values(&self) -> &[Rational64] {
        &self.values
    }

    /// `sum_i s(g_i) = 0`, required since `g_1 + .. + g_{d+1} = 0`.
    pub fn is_linear(&self) -> bool {
        self.values.iter().copied().sum::<Rational64>().is_zero()
    }

    /// Membership in the Lipschitz simplex `S`.
    pub fn in_simplex(&self) -> bool {
        self.is_linear() && self.values.iter().all(|v| *v <= Rational64::one())
    }

    /// Membership in `S_n`: in `S` with every `s(g_i)` in `Z/n`.
    pub fn in_lattice_simplex(&self, n: i64) -> bool {
        self.in_simplex() && self.values.iter().all(|v| (v * n).is_integer())
    }

    pub fn eval(&self, x: &Vertex) -> Rational64 {
        x.coords()
            .iter()
            .zip(&self.values)
            .map(|(&c, s)| s * c)
            .sum()
    }

    pub fn midpoint(&self, other: &Slope) -> Slope {
        let half = Rational64::new(1, 2);
        Slope {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a + b) * half)
                .collect(),
        }
    }

    fn check_simplex(&self) -> Result<()> {
        if self.in_simplex() {
            Ok(())
        } else {
            Err(Error::SlopeOutsideSimplex(self.to_string()))
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl fmt::Debug for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Largest integer congruent to `parity` modulo `span` that does not exceed `t`.
pub(crate) fn floor_to_parity(t: Rational64, parity: i64, span: i64) -> i64 {
    let k = ((t - parity) / span).floor().to_integer();
    parity + span * k
}

/// The function a [`HeightField`] takes away from its overrides.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Background {
    /// `⌊s + a⌋`, the largest height function below the affine map `s + a`.
    Floor { slope: Slope, offset: Rational64 },
    /// The largest height function extending the given Lipschitz, parity-correct pins.
    Extension { pins: BTreeMap<Vertex, i64> },
}

impl Background {
    pub fn value(&self, x: &Vertex) -> i64 {
        match self {
            Background::Floor { slope, offset } => {
                floor_to_parity(slope.eval(x) + offset, x.parity(), x.dim().span())
            }
            Background::Extension { pins } => pins
                .iter()
                .map(|(y, v)| v + x.sub(y).plus_norm())
                .min()
                .expect("extension has at least one pin"),
        }
    }

    fn shifted(&self, by: i64) -> Background {
        match self {
            Background::Floor { slope, offset } => Background::Floor {
                slope: slope.clone(),
                offset: offset + by,
            },
            Background::Extension { pins } => Background::Extension {
                pins: pins.iter().map(|(k, v)| (k.clone(), v + by)).collect(),
            },
        }
    }

    /// Pointwise max (`upper`) or min of two backgrounds, when it is again a background.
    fn combine(&self, other: &Background, upper: bool) -> Result<Background> {
        if self == other {
            return Ok(self.clone());
        }
        match (self, other) {
            (
                Background::Floor { slope: s1, offset: a1 },
                Background::Floor { slope: s2, offset: a2 },
            ) if s1 == s2 => {
                // ⌊s + a⌋ is monotone in a
                let pick_first = (a1 >= a2) == upper;
                Ok(if pick_first { self.clone() } else { other.clone() })
            }
            _ => Err(Error::IncompatibleBackgrounds),
        }
    }
}

/// Diagnostics from a validity scan.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Validity {
    pub parity_violations: Vec<Vertex>,
    /// Edges whose gradient is not in `{1, -d}`, with the offending gradient.
    pub edge_violations: Vec<(Edge, i64)>,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.parity_violations.is_empty() && self.edge_violations.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct HeightField {
    background: Background,
    overrides: BTreeMap<Vertex, i64>,
    dim: Dim,
}

impl fmt::Debug for HeightField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HeightField")
            .field("background", &self.background)
            .field("overrides", &self.overrides)
            .finish()
    }
}

impl HeightField {
    /// `⌊s + a⌋`: at each vertex the largest integer of the right parity below `s(x) + a`.
    pub fn floor_field(slope: Slope, offset: Rational64) -> Result<Self> {
        slope.check_simplex()?;
        let dim = slope.dim();
        Ok(HeightField {
            background: Background::Floor { slope, offset },
            overrides: BTreeMap::new(),
            dim,
        })
    }

    /// `⌊0⌋`.
    pub fn flat(dim: Dim) -> Self {
        Self::floor_field(Slope::zero(dim), Rational64::zero()).expect("zero slope is in S")
    }

    /// The largest height function extending `partial`, i.e.
    /// `f(x) = min_y partial(y) + ||x - y||_+`.
    pub fn kirszbraun_extend(partial: &BTreeMap<Vertex, i64>) -> Result<Self> {
        let dim = partial
            .keys()
            .next()
            .ok_or_else(|| Error::NotExtendable("no pinned values".into()))?
            .dim();
        let span = dim.span();
        for (x, &v) in partial {
            if x.dim() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim.coords(),
                    found: x.coords().len(),
                });
            }
            if (v - x.parity()).rem_euclid(span) != 0 {
                return Err(Error::NotExtendable(format!(
                    "value {v} at {x:?} has the wrong parity"
                )));
            }
        }
        for (x, &fx) in partial {
            for (y, &fy) in partial {
                if fy - fx > y.sub(x).plus_norm() {
                    return Err(Error::NotExtendable(format!(
                        "f({y:?}) - f({x:?}) = {} exceeds ||y - x||_+ = {}",
                        fy - fx,
                        y.sub(x).plus_norm()
                    )));
                }
            }
        }
        Ok(HeightField {
            background: Background::Extension {
                pins: partial.clone(),
            },
            overrides: BTreeMap::new(),
            dim,
        })
    }

    /// Builds a field from a background and explicit values; values equal to the
    /// background are dropped. No validity check.
    pub fn from_parts(background: Background, values: BTreeMap<Vertex, i64>) -> Self {
        let dim = match &background {
            Background::Floor { slope, .. } => slope.dim(),
            Background::Extension { pins } => pins.keys().next().expect("pins nonempty").dim(),
        };
        let mut f = HeightField {
            background,
            overrides: BTreeMap::new(),
            dim,
        };
        for (x, v) in values {
            f.set(x, v);
        }
        f
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn overrides(&self) -> &BTreeMap<Vertex, i64> {
        &self.overrides
    }

    /// Vertices where the field departs from its background.
    pub fn window(&self) -> BTreeSet<Vertex> {
        self.overrides.keys().cloned().collect()
    }

    pub fn value(&self, x: &Vertex) -> i64 {
        match self.overrides.get(x) {
            Some(&v) => v,
            None => self.background.value(x),
        }
    }

    pub fn set(&mut self, x: Vertex, v: i64) {
        if self.background.value(&x) == v {
            self.overrides.remove(&x);
        } else {
            self.overrides.insert(x, v);
        }
    }

    pub fn with_value(&self, x: &Vertex, v: i64) -> Self {
        let mut out = self.clone();
        out.set(x.clone(), v);
        out
    }

    /// `f(base + g_dir) - f(base)`.
    pub fn gradient(&self, e: &Edge) -> i64 {
        self.value(&e.head()) - self.value(&e.base)
    }

    /// Gradient along a directed pair of adjacent vertices.
    pub fn gradient_between(&self, from: &Vertex, to: &Vertex) -> i64 {
        self.value(to) - self.value(from)
    }

    /// `f + k (d + 1)`.
    pub fn shifted(&self, k: i64) -> Self {
        let by = k * self.dim.span();
        HeightField {
            background: self.background.shifted(by),
            overrides: self.overrides.iter().map(|(x, v)| (x.clone(), v + by)).collect(),
            dim: self.dim,
        }
    }

    /// Checks parity at the window and the gradient of every edge touching it. The
    /// background is a height function by construction.
    pub fn validity(&self) -> Validity {
        self.validity_on(self.overrides.keys())
    }

    pub fn validity_on<'a>(&self, window: impl IntoIterator<Item = &'a Vertex>) -> Validity {
        let span = self.dim.span();
        let d = self.dim.d() as i64;
        let mut out = Validity::default();
        let mut edges = BTreeSet::new();
        for x in window {
            if (self.value(x) - x.parity()).rem_euclid(span) != 0 {
                out.parity_violations.push(x.clone());
            }
            for dir in 0..self.dim.coords() {
                edges.insert(Edge::new(x.clone(), dir));
                edges.insert(Edge::new(x.step(dir, -1), dir));
            }
        }
        for e in edges {
            let g = self.gradient(&e);
            if g != 1 && g != -d {
                out.edge_violations.push((e, g));
            }
        }
        out
    }

    pub fn is_height_function(&self) -> bool {
        self.validity().is_valid()
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let v = self.validity();
        if v.is_valid() {
            Ok(())
        } else {
            Err(Error::NotHeightFunction(format!("{v:?}")))
        }
    }

    fn combine(&self, other: &HeightField, upper: bool) -> Result<HeightField> {
        let background = self.background.combine(&other.background, upper)?;
        let keys: BTreeSet<&Vertex> = self.overrides.keys().chain(other.overrides.keys()).collect();
        let values = keys
            .into_iter()
            .map(|x| {
                let (a, b) = (self.value(x), other.value(x));
                (x.clone(), if upper { a.max(b) } else { a.min(b) })
            })
            .collect();
        Ok(HeightField::from_parts(background, values))
    }

    /// Pointwise maximum.
    pub fn vee(&self, other: &HeightField) -> Result<HeightField> {
        self.combine(other, true)
    }

    /// Pointwise minimum.
    pub fn wedge(&self, other: &HeightField) -> Result<HeightField> {
        self.combine(other, false)
    }

    /// Whether `x` is a local minimum (`up`) or maximum (`!up`); on failure returns the
    /// first neighbour that blocks the move.
    fn move_blocker(&self, x: &Vertex, up: bool) -> Option<Vertex> {
        let d = self.dim.d() as i64;
        let fx = self.value(x);
        let (out_grad, in_grad) = if up { (1, -d) } else { (-d, 1) };
        for dir in 0..self.dim.coords() {
            let fwd = x.step(dir, 1);
            if self.value(&fwd) - fx != out_grad {
                return Some(fwd);
            }
            let back = x.step(dir, -1);
            if fx - self.value(&back) != in_grad {
                return Some(back);
            }
        }
        None
    }

    pub fn can_move(&self, x: &Vertex, up: bool) -> bool {
        self.move_blocker(x, up).is_none()
    }

    /// Raises (`sign = +1`) a local minimum or lowers (`sign = -1`) a local maximum by `d + 1`.
    pub fn local_move(&self, x: &Vertex, sign: i64) -> Result<HeightField> {
        let up = match sign {
            1 => true,
            -1 => false,
            _ => return Err(Error::Invalid(format!("move sign must be ±1, got {sign}"))),
        };
        if let Some(blocker) = self.move_blocker(x, up) {
            return Err(Error::MoveBlocked {
                vertex: x.clone(),
                blocker,
            });
        }
        Ok(self.with_value(x, self.value(x) + sign * self.dim.span()))
    }

    /// A sequence of local moves turning `self` into `target`: down to `self ∧ target`
    /// by lowering the highest excess vertex each time, then up by raising the lowest
    /// deficient vertex each time.
    pub fn move_path(&self, target: &HeightField) -> Result<Vec<(Vertex, i64)>> {
        if self.background != target.background {
            return Err(Error::IncompatibleBackgrounds);
        }
        let meet = self.wedge(target)?;
        let mut moves = Vec::new();
        let mut cur = self.clone();
        let window: BTreeSet<Vertex> = self
            .overrides
            .keys()
            .chain(target.overrides.keys())
            .cloned()
            .collect();
        while let Some(x) = window
            .iter()
            .filter(|x| cur.value(x) > meet.value(x))
            .max_by_key(|x| cur.value(x))
        {
            let x = x.clone();
            cur = cur.local_move(&x, -1)?;
            moves.push((x, -1));
        }
        while let Some(x) = window
            .iter()
            .filter(|x| cur.value(x) < target.value(x))
            .min_by_key(|x| cur.value(x))
        {
            let x = x.clone();
            cur = cur.local_move(&x, 1)?;
            moves.push((x, 1));
        }
        debug_assert_eq!(&cur, target);
        Ok(moves)
    }

    /// Applies a move sequence, checking each move.
    pub fn apply_moves(&self, moves: &[(Vertex, i64)]) -> Result<HeightField> {
        let mut cur = self.clone();
        for (x, s) in moves {
            cur = cur.local_move(x, *s)?;
        }
        Ok(cur)
    }

    /// The point `x + f(x) n / (d + 1)` of `Z^{d+1}` for each window vertex.
    pub fn v_set<'a>(&self, window: impl IntoIterator<Item = &'a Vertex>) -> Vec<Vec<i64>> {
        let span = self.dim.span();
        window
            .into_iter()
            .map(|x| {
                let t = self.value(x) - x.coord_sum();
                debug_assert_eq!(t.rem_euclid(span), 0, "parity violated at {x:?}");
                x.coords().iter().map(|c| c + t / span).collect()
            })
            .collect()
    }

    /// The monotone function of the stepped surface: for `y ∈ Z^d`,
    /// `sup{k : (y, k) ∈ L(V(f))}`. `None` when the supremum is infinite within `horizon`
    /// unit steps.
    pub fn monotone_value(&self, y: &[i64], horizon: i64) -> Option<i64> {
        let sum_y: i64 = y.iter().sum();
        // (y, k) lies below the surface iff f([(y, k)]) >= sum(y) + k; the slack is
        // non-increasing in k.
        let slack = |k: i64| {
            let mut raw = y.to_vec();
            raw.push(k);
            self.value(&Vertex::from_raw(&raw)) - sum_y - k
        };
        let mut k = 0;
        if slack(k) >= 0 {
            while slack(k + 1) >= 0 {
                k += 1;
                if k > horizon {
                    return None;
                }
            }
            Some(k)
        } else {
            while slack(k) < 0 {
                k -= 1;
                if k < -horizon {
                    return None;
                }
            }
            Some(k)
        }
    }

    pub fn monotone_view(&self, ys: &[Vec<i64>], horizon: i64) -> BTreeMap<Vec<i64>, Option<i64>> {
        ys.iter()
            .map(|y| (y.clone(), self.monotone_value(y, horizon)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Region, RegionKind};

    fn dim(d: usize) -> Dim {
        Dim::new(d).unwrap()
    }

    fn v(raw: &[i64]) -> Vertex {
        Vertex::from_raw(raw)
    }

    fn ball(d: usize, r: i64) -> Vec<Vertex> {
        Region::make_box(dim(d), RegionKind::CentredBox, r)
            .unwrap()
            .iter()
            .cloned()
            .collect()
    }

    #[test]
    fn floor_of_zero_slope() {
        let f = HeightField::flat(dim(2));
        assert_eq!(f.value(&v(&[0, 0, 0])), 0);
        assert_eq!(f.value(&v(&[1, 0, 0])), -2);
        assert_eq!(f.value(&v(&[1, 1, 0])), -1);
        assert!(f.validity_on(&ball(2, 4)).is_valid());
        assert!(HeightField::flat(dim(3)).validity_on(&ball(3, 3)).is_valid());
        let g = HeightField::floor_field(Slope::zero(dim(2)), Rational64::from_integer(3)).unwrap();
        for x in ball(2, 3) {
            assert_eq!(g.value(&x), f.value(&x) + 3);
        }
    }

    #[test]
    fn extreme_slope_has_no_rounding() {
        for d in [2, 3] {
            for i in 0..=d {
                let s = Slope::extreme(dim(d), i);
                let f = HeightField::floor_field(s.clone(), Rational64::zero()).unwrap();
                for x in ball(d, 3) {
                    assert_eq!(Rational64::from_integer(f.value(&x)), s.eval(&x));
                }
                // every g_i edge has gradient -d
                let e = Edge::new(v(&vec![0; d + 1]), i);
                assert_eq!(f.gradient(&e), -(d as i64));
            }
        }
    }

    #[test]
    fn slope_outside_simplex_is_rejected() {
        let s = Slope::from_ints(&[2, -1, -1]).unwrap();
        assert!(matches!(
            HeightField::floor_field(s, Rational64::zero()),
            Err(Error::SlopeOutsideSimplex(_))
        ));
    }

    #[test]
    fn parity_and_lipschitz_violations_are_reported() {
        let f = HeightField::flat(dim(2));
        let x = v(&[2, 1, 0]);
        let bumped = f.with_value(&x, f.value(&x) + 1);
        let diag = bumped.validity();
        assert_eq!(diag.parity_violations, vec![x.clone()]);
        // find a vertex that is not a local minimum and raise it by d + 1
        let y = ball(2, 3)
            .into_iter()
            .find(|y| !f.can_move(y, true))
            .unwrap();
        let raised = f.with_value(&y, f.value(&y) + 3);
        let diag = raised.validity();
        assert!(diag.parity_violations.is_empty());
        assert!(!diag.edge_violations.is_empty());
        assert!(diag.edge_violations.iter().all(|(e, _)| e.contains(&y)));
    }

    #[test]
    fn gradient_antisymmetry() {
        let f = HeightField::flat(dim(2));
        let o = v(&[0, 0, 0]);
        let x = o.step(0, 1);
        assert_eq!(f.gradient(&Edge::new(o.clone(), 0)), -2);
        assert_eq!(f.gradient_between(&x, &o), -f.gradient_between(&o, &x));
    }

    #[test]
    fn local_moves_round_trip() {
        let f = HeightField::flat(dim(2));
        let window = ball(2, 3);
        let min = window.iter().find(|x| f.can_move(x, true)).unwrap();
        let up = f.local_move(min, 1).unwrap();
        assert!(up.is_height_function());
        assert_eq!(up.local_move(min, -1).unwrap(), f);
        let blocked = window
            .iter()
            .find(|x| !f.can_move(x, true) && !f.can_move(x, false))
            .unwrap();
        assert!(matches!(f.local_move(blocked, 1), Err(Error::MoveBlocked { .. })));
    }

    #[test]
    fn vee_wedge_laws() {
        let f = HeightField::flat(dim(2));
        assert_eq!(f.vee(&f).unwrap(), f);
        assert_eq!(f.wedge(&f.shifted(1)).unwrap(), f);
        assert_eq!(f.vee(&f.shifted(1)).unwrap(), f.shifted(1));
        let x = ball(2, 3).into_iter().find(|x| f.can_move(x, true)).unwrap();
        let g = f.local_move(&x, 1).unwrap();
        assert_eq!(f.wedge(&f.vee(&g).unwrap()).unwrap(), f);
        let other = HeightField::floor_field(Slope::extreme(dim(2), 0), Rational64::zero()).unwrap();
        assert!(matches!(f.vee(&other), Err(Error::IncompatibleBackgrounds)));
    }

    #[test]
    fn move_path_lengths() {
        let f = HeightField::flat(dim(2));
        assert!(f.move_path(&f).unwrap().is_empty());
        let window = ball(2, 3);
        let mut g = f.clone();
        for _ in 0..3 {
            let x = window.iter().find(|x| g.can_move(x, true)).unwrap().clone();
            g = g.local_move(&x, 1).unwrap();
        }
        let path = f.move_path(&g).unwrap();
        let total: i64 = window.iter().map(|x| g.value(x) - f.value(x)).sum();
        assert_eq!(path.len() as i64, total / 3);
        assert_eq!(f.apply_moves(&path).unwrap(), g);
    }

    #[test]
    fn kirszbraun_single_pin() {
        let o = Vertex::origin(dim(2));
        let f = HeightField::kirszbraun_extend(&BTreeMap::from([(o.clone(), 0)])).unwrap();
        for x in ball(2, 3) {
            assert_eq!(f.value(&x), x.plus_norm());
        }
        assert!(f.validity_on(&ball(2, 3)).is_valid());
        let bad = BTreeMap::from([(o.clone(), 0), (o.step(0, 1), 4)]);
        assert!(HeightField::kirszbraun_extend(&bad).is_err());
        let wrong_parity = BTreeMap::from([(o, 1)]);
        assert!(HeightField::kirszbraun_extend(&wrong_parity).is_err());
    }

    #[test]
    fn v_set_is_integral_and_shifts_with_f() {
        let f = HeightField::flat(dim(2));
        let window = ball(2, 2);
        let pts = f.v_set(&window);
        let shifted = f.shifted(1).v_set(&window);
        for (p, q) in pts.iter().zip(&shifted) {
            let diff: Vec<i64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
            assert_eq!(diff, vec![1, 1, 1]);
        }
    }

    #[test]
    fn monotone_view_is_non_increasing() {
        let f = HeightField::flat(dim(2));
        let m = |y: &[i64]| f.monotone_value(y, 1000).unwrap();
        for a in -3..3 {
            for b in -3..3 {
                assert!(m(&[a + 1, b]) <= m(&[a, b]));
                assert!(m(&[a, b + 1]) <= m(&[a, b]));
                // (y, m(y)) is a point of V(f)
                let k = m(&[a, b]);
                let x = Vertex::from_raw(&[a, b, k]);
                assert_eq!(f.value(&x), a + b + k);
            }
        }
    }
}
