use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_integer::Integer;

use super::{Background, HeightField};
use crate::error::{Error, Result};
use crate::lattice::{loops_through, Dim, Edge, UnrootedLoop, Vertex};

/// A tiling `T`, stored as its edges inside a finite window of vertices. Outside
/// `E^d(window)` the tiling is the one of the background height function.
#[derive(Clone, Debug)]
pub struct Tiling {
    background: Background,
    window: BTreeSet<Vertex>,
    edges: BTreeSet<Edge>,
    dim: Dim,
}

impl Tiling {
    /// Assembles a tiling; edges outside `E^d(window)` are rejected. Completeness is not
    /// checked here, see [`Tiling::is_complete`].
    pub fn new(
        dim: Dim,
        background: Background,
        window: BTreeSet<Vertex>,
        edges: BTreeSet<Edge>,
    ) -> Result<Self> {
        let t = Tiling {
            background,
            window,
            edges,
            dim,
        };
        if let Some(e) = t.edges.iter().find(|e| !t.in_window(e)) {
            return Err(Error::Invalid(format!("tiling edge {e:?} lies outside the window")));
        }
        Ok(t)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn window(&self) -> &BTreeSet<Vertex> {
        &self.window
    }

    /// The tiling edges in `E^d(window)`.
    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn in_window(&self, e: &Edge) -> bool {
        self.window.contains(&e.base) || self.window.contains(&e.head())
    }

    pub fn contains(&self, e: &Edge) -> bool {
        if self.in_window(e) {
            self.edges.contains(e)
        } else {
            let g = self.background.value(&e.head()) - self.background.value(&e.base);
            g == -(self.dim.d() as i64)
        }
    }

    /// `α_T` on the edge `e` in its `+g` direction: `-d` on tiling edges, `1` elsewhere.
    pub fn alpha(&self, e: &Edge) -> i64 {
        if self.contains(e) {
            -(self.dim.d() as i64)
        } else {
            1
        }
    }

    /// `α_T` along the directed step `from -> to` between adjacent vertices.
    pub fn alpha_between(&self, from: &Vertex, to: &Vertex) -> Result<i64> {
        let e = Edge::between(from, to)
            .ok_or_else(|| Error::Invalid(format!("{from:?} and {to:?} are not adjacent")))?;
        let a = self.alpha(&e);
        Ok(if &e.base == from { a } else { -a })
    }

    /// Loops meeting `E^d(window)`; loops that avoid it see only the background.
    pub fn window_loops(&self) -> BTreeSet<UnrootedLoop> {
        let mut out = BTreeSet::new();
        for x in &self.window {
            for dir in 0..self.dim.coords() {
                for e in [Edge::new(x.clone(), dir), Edge::new(x.step(dir, -1), dir)] {
                    out.extend(loops_through(&e));
                }
            }
        }
        out
    }

    /// Window loops that do not contain exactly one tiling edge.
    pub fn defects(&self) -> Vec<UnrootedLoop> {
        self.window_loops()
            .into_iter()
            .filter(|s| s.edges().iter().filter(|e| self.contains(e)).count() != 1)
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.defects().is_empty()
    }

    /// `a + ∫ α_T` along the given vertex path, which must start at the origin.
    pub fn integrate_along(&self, a: i64, path: &[Vertex]) -> Result<i64> {
        let origin = Vertex::origin(self.dim);
        match path.first() {
            Some(p) if *p == origin => {}
            _ => return Err(Error::Invalid("integration path must start at the origin".into())),
        }
        let mut total = a;
        for w in path.windows(2) {
            total += self.alpha_between(&w[0], &w[1])?;
        }
        Ok(total)
    }

    /// Walks from the origin to `target` along the box coordinates, then sums `α_T`.
    pub fn straight_path(&self, target: &Vertex) -> Vec<Vertex> {
        let mut cur = Vertex::origin(self.dim);
        let mut path = vec![cur.clone()];
        for (dir, &a) in target.box_coords().iter().enumerate() {
            for _ in 0..a.abs() {
                cur = cur.step(dir, a.signum());
                path.push(cur.clone());
            }
        }
        path
    }

    /// Values of `a + ∫_0^x α_T` for every `x` in the bounding box of the window and the
    /// origin, grown by one layer.
    fn integrate_box(&self, a: i64) -> BTreeMap<Vertex, i64> {
        let d = self.dim.d();
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for v in &self.window {
            for (i, &c) in v.box_coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        for i in 0..d {
            lo[i] -= 1;
            hi[i] += 1;
        }
        let inside = |v: &Vertex| {
            v.box_coords()
                .iter()
                .enumerate()
                .all(|(i, &c)| lo[i] <= c && c <= hi[i])
        };
        let origin = Vertex::origin(self.dim);
        let mut values = BTreeMap::from([(origin.clone(), a)]);
        let mut queue = VecDeque::from([origin]);
        while let Some(x) = queue.pop_front() {
            let fx = values[&x];
            for dir in 0..self.dim.coords() {
                for sign in [1, -1] {
                    let y = x.step(dir, sign);
                    if !inside(&y) || values.contains_key(&y) {
                        continue;
                    }
                    let e = if sign == 1 {
                        Edge::new(x.clone(), dir)
                    } else {
                        Edge::new(y.clone(), dir)
                    };
                    values.insert(y.clone(), fx + sign * self.alpha(&e));
                    queue.push_back(y);
                }
            }
        }
        values
    }
}

impl PartialEq for Tiling {
    /// Equal as edge sets of `E^d`.
    fn eq(&self, other: &Self) -> bool {
        if self.dim != other.dim || !self.background.same_gradient(&other.background) {
            return false;
        }
        let edges = |t: &Tiling| {
            t.window
                .iter()
                .flat_map(|x| {
                    (0..t.dim.coords())
                        .flat_map(move |dir| [Edge::new(x.clone(), dir), Edge::new(x.step(dir, -1), dir)])
                })
                .collect::<Vec<_>>()
        };
        edges(self)
            .into_iter()
            .chain(edges(other))
            .all(|e| self.contains(&e) == other.contains(&e))
    }
}

impl Background {
    /// Whether the two backgrounds differ by a constant, hence have the same tiling.
    pub(crate) fn same_gradient(&self, other: &Background) -> bool {
        match (self, other) {
            (
                Background::Floor { slope: s1, offset: a1 },
                Background::Floor { slope: s2, offset: a2 },
            ) => {
                let diff = a1 - a2;
                s1 == s2 && diff.is_integer() && diff.to_integer().is_multiple_of(&s1.dim().span())
            }
            (Background::Extension { pins: p1 }, Background::Extension { pins: p2 }) => {
                if p1.len() != p2.len() || !p1.keys().eq(p2.keys()) {
                    return false;
                }
                let shifts: BTreeSet<i64> = p1.iter().map(|(k, v)| v - p2[k]).collect();
                shifts.len() == 1
            }
            _ => false,
        }
    }
}

/// `T(f)`, recorded on the override window of `f`, its neighbours and the origin.
pub fn tiling_of(f: &HeightField) -> Result<Tiling> {
    f.ensure_valid()?;
    let mut window: BTreeSet<Vertex> = BTreeSet::from([Vertex::origin(f.dim())]);
    for x in f.overrides().keys() {
        window.insert(x.clone());
        window.extend(x.neighbors());
    }
    let d = f.dim().d() as i64;
    let mut edges = BTreeSet::new();
    for x in &window {
        for dir in 0..f.dim().coords() {
            for e in [Edge::new(x.clone(), dir), Edge::new(x.step(dir, -1), dir)] {
                if f.gradient(&e) == -d {
                    edges.insert(e);
                }
            }
        }
    }
    Ok(Tiling {
        background: f.background().clone(),
        window,
        edges,
        dim: f.dim(),
    })
}

/// `Φ(f) = (f(0), T(f))`.
pub fn phi(f: &HeightField) -> Result<(i64, Tiling)> {
    Ok((f.value(&Vertex::origin(f.dim())), tiling_of(f)?))
}

/// `Φ^{-1}(a, T)`: the height function `x ↦ a + ∫_0^x α_T`.
pub fn phi_inv(a: i64, t: &Tiling) -> Result<HeightField> {
    let span = t.dim.span();
    if a.rem_euclid(span) != 0 {
        return Err(Error::Invalid(format!(
            "f(0) must be a multiple of {span}, got {a}"
        )));
    }
    let defects = t.defects();
    if let Some(s) = defects.first() {
        return Err(Error::Invalid(format!(
            "not a tiling: loop {s:?} meets {} tiling edges",
            s.edges().iter().filter(|e| t.contains(e)).count()
        )));
    }
    let values = t.integrate_box(a);
    // the box's outer layer avoids the window, so there f differs from the background by
    // one constant, a multiple of d + 1
    let far = values
        .keys()
        .next()
        .expect("box is nonempty")
        .clone();
    let shift = values[&far] - t.background.value(&far);
    debug_assert_eq!(shift.rem_euclid(span), 0);
    let background = t.background.shifted(shift);
    Ok(HeightField::from_parts(background, values))
}

/// `a + ∫_0^target α_T` along a straight path.
pub fn integrate_tiling(t: &Tiling, a: i64, target: &Vertex) -> Result<i64> {
    let span = t.dim.span();
    if a.rem_euclid(span) != 0 {
        return Err(Error::Invalid(format!(
            "f(0) must be a multiple of {span}, got {a}"
        )));
    }
    t.integrate_along(a, &t.straight_path(target))
}
