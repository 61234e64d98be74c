//! The simplicial lattice `X^d`: the square lattice `Z^{d+1}` with vertices identified when
//! they differ by a multiple of the all-ones vector `n`.
//!
//! A vertex is stored by its unique representative whose last coordinate is zero, so the
//! first `d` coordinates are the box coordinates `a_1 .. a_d` of `a_1 g_1 + ... + a_d g_d`.
//! Directions are zero-based internally (`0..=d` stands for `g_1 .. g_{d+1}`); the JSON
//! encoding of edges is one-based.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Lattice dimension `d >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dim(usize);

impl Dim {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Dim(d))
    }

    #[inline]
    pub fn d(self) -> usize {
        self.0
    }

    /// Number of coordinates of a representative, `d + 1`.
    #[inline]
    pub fn coords(self) -> usize {
        self.0 + 1
    }

    /// The step span `d + 1`; heights live in parity classes modulo this.
    #[inline]
    pub fn span(self) -> i64 {
        self.0 as i64 + 1
    }

    /// `d!`, the number of unrooted loops through every edge.
    pub fn loops_per_edge(self) -> usize {
        (1..=self.0).product()
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A vertex of `X^d` in canonical form (last coordinate zero).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(Box<[i64]>);

impl Vertex {
    pub fn origin(dim: Dim) -> Self {
        Vertex(vec![0; dim.coords()].into_boxed_slice())
    }

    /// Canonical representative of the class `raw + Z n`.
    pub fn canonicalize(dim: Dim, raw: &[i64]) -> Result<Self> {
        if raw.len() != dim.coords() {
            return Err(Error::LengthMismatch {
                expected: dim.coords(),
                found: raw.len(),
            });
        }
        Ok(Self::from_raw(raw))
    }

    /// Canonicalises a raw representative of any length `>= 3`.
    pub(crate) fn from_raw(raw: &[i64]) -> Self {
        let last = raw[raw.len() - 1];
        Vertex(raw.iter().map(|&c| c - last).collect())
    }

    /// The vertex `a_1 g_1 + ... + a_d g_d`.
    pub fn from_box_coords(a: &[i64]) -> Self {
        let mut c = a.to_vec();
        c.push(0);
        Vertex(c.into_boxed_slice())
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// The box coordinates `a_1 .. a_d`.
    #[inline]
    pub fn box_coords(&self) -> &[i64] {
        &self.0[..self.0.len() - 1]
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        Dim(self.0.len() - 1)
    }

    /// `self + sign * g_dir`.
    pub fn step(&self, dir: usize, sign: i64) -> Vertex {
        let last = self.0.len() - 1;
        let mut c = self.0.clone();
        if dir == last {
            for x in c[..last].iter_mut() {
                *x -= sign;
            }
        } else {
            c[dir] += sign;
        }
        Vertex(c)
    }

    pub fn add(&self, other: &Vertex) -> Vertex {
        Vertex(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vertex) -> Vertex {
        Vertex(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: i64) -> Vertex {
        Vertex(self.0.iter().map(|a| a * k).collect())
    }

    /// The `2d + 2` neighbours `x + g_1, .., x + g_{d+1}, x - g_1, .., x - g_{d+1}`.
    pub fn neighbors(&self) -> Vec<Vertex> {
        let k = self.0.len();
        let mut out = Vec::with_capacity(2 * k);
        for i in 0..k {
            out.push(self.step(i, 1));
        }
        for i in 0..k {
            out.push(self.step(i, -1));
        }
        out
    }

    /// Sum of coordinates modulo `d + 1`.
    pub fn parity(&self) -> i64 {
        let span = self.0.len() as i64;
        self.0.iter().sum::<i64>().rem_euclid(span)
    }

    /// The asymmetric norm `||x||_+`: length of the shortest path from `0` to `x` that only
    /// uses positive increments `+g_i`.
    pub fn plus_norm(&self) -> i64 {
        let span = self.0.len() as i64;
        let min = *self.0.iter().min().expect("nonempty");
        self.0.iter().sum::<i64>() - span * min
    }

    /// Coordinate of `x` in the `n` direction after projecting onto `H`, times `d + 1`;
    /// i.e. the sum of the coordinates of the canonical representative.
    #[inline]
    pub(crate) fn coord_sum(&self) -> i64 {
        self.0.iter().sum()
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &self.0)
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<i64>::deserialize(d)?;
        if raw.len() < 3 {
            return Err(serde::de::Error::custom(format!(
                "vertex needs at least 3 coordinates, got {}",
                raw.len()
            )));
        }
        Ok(Vertex::from_raw(&raw))
    }
}

/// Graph distance in `(X^d, E^d)`: `min_k ||(y - x) + k n||_1`.
///
/// The minimising shift is a median of the coordinates, so it suffices to try the `d + 1`
/// candidates `k = -z_i`.
pub fn graph_distance(x: &Vertex, y: &Vertex) -> i64 {
    let z = y.sub(x);
    z.coords()
        .iter()
        .map(|&k| z.coords().iter().map(|&c| (c - k).abs()).sum::<i64>())
        .min()
        .expect("nonempty")
}

/// An undirected edge `{base, base + g_dir}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Edge {
    pub base: Vertex,
    pub dir: usize,
}

impl Edge {
    pub fn new(base: Vertex, dir: usize) -> Self {
        debug_assert!(dir < base.coords().len());
        Edge { base, dir }
    }

    pub fn head(&self) -> Vertex {
        self.base.step(self.dir, 1)
    }

    /// The edge joining two adjacent vertices, if they are adjacent.
    pub fn between(x: &Vertex, y: &Vertex) -> Option<Edge> {
        for dir in 0..x.coords().len() {
            if &x.step(dir, 1) == y {
                return Some(Edge::new(x.clone(), dir));
            }
            if &y.step(dir, 1) == x {
                return Some(Edge::new(y.clone(), dir));
            }
        }
        None
    }

    pub fn endpoints(&self) -> [Vertex; 2] {
        [self.base.clone(), self.head()]
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        &self.base == v || &self.head() == v
    }
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    base: Vertex,
    dir: usize,
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EdgeDoc {
            base: self.base.clone(),
            dir: self.dir + 1,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = EdgeDoc::deserialize(d)?;
        let k = doc.base.coords().len();
        if doc.dir == 0 || doc.dir > k {
            return Err(serde::de::Error::custom(format!(
                "edge direction {} outside 1..={k}",
                doc.dir
            )));
        }
        Ok(Edge::new(doc.base, doc.dir - 1))
    }
}

/// All permutations of `0..d` in lexicographic order; this fixes the enumeration
/// `xi^1, .., xi^{d!}` of `S_d` used for loop classes.
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    (0..d).permutations(d).collect()
}

/// Index of `perm` in the lexicographic enumeration of `S_d` (Lehmer code).
pub fn permutation_rank(perm: &[usize]) -> usize {
    let d = perm.len();
    let mut rank = 0;
    for i in 0..d {
        let smaller_after = perm[i + 1..].iter().filter(|&&p| p < perm[i]).count();
        rank = rank * (d - i) + smaller_after;
    }
    rank
}

/// `+1` for even permutations and `-1` for odd ones.
pub fn permutation_sign(perm: &[usize]) -> i32 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// An unrooted simplicial loop, indexed so that its first increment is `g_{d+1}`; the
/// remaining increments follow `order` (a permutation of the directions `0..d`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct UnrootedLoop {
    pub start: Vertex,
    pub order: Vec<usize>,
}

impl UnrootedLoop {
    pub fn new(start: Vertex, order: Vec<usize>) -> Self {
        UnrootedLoop { start, order }
    }

    /// Index of the loop's permutation class in the lexicographic enumeration of `S_d`.
    pub fn class(&self) -> usize {
        permutation_rank(&self.order)
    }

    /// The increments in traversal order, `g_{d+1}` first.
    pub fn increments(&self) -> Vec<usize> {
        let d = self.order.len();
        std::iter::once(d).chain(self.order.iter().copied()).collect()
    }

    /// The `d + 2` visited vertices; the first and last coincide.
    pub fn vertices(&self) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(self.order.len() + 2);
        let mut cur = self.start.clone();
        out.push(cur.clone());
        for dir in self.increments() {
            cur = cur.step(dir, 1);
            out.push(cur.clone());
        }
        out
    }

    /// The `d + 1` traversed edges, in traversal order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.order.len() + 1);
        let mut cur = self.start.clone();
        for dir in self.increments() {
            let next = cur.step(dir, 1);
            out.push(Edge::new(cur, dir));
            cur = next;
        }
        out
    }

    pub fn traverses(&self, e: &Edge) -> bool {
        self.edges().iter().any(|f| f == e)
    }
}

/// The `d!` unrooted loops through `e`, ordered by permutation class.
pub fn loops_through(e: &Edge) -> Vec<UnrootedLoop> {
    let dim = e.base.dim();
    let d = dim.d();
    permutations(d)
        .into_iter()
        .map(|order| {
            // Walk back from e.base along the increments preceding the one along e.dir.
            let mut start = e.base.clone();
            if e.dir != d {
                start = start.step(d, -1);
                for &dir in order.iter().take_while(|&&o| o != e.dir) {
                    start = start.step(dir, -1);
                }
            }
            UnrootedLoop::new(start, order)
        })
        .collect()
}

pub fn edges_of_loop(s: &UnrootedLoop) -> Vec<Edge> {
    s.edges()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Generic,
    /// `B_n = {a : 0 < a_i < n}`
    Box,
    /// `B̄_n = {a : 0 <= a_i <= n}`
    ClosedBox,
    /// `Π_n = {a : -n <= a_i < n}`
    CentredBox,
}

/// A finite vertex set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    dim: Dim,
    vertices: BTreeSet<Vertex>,
    kind: RegionKind,
}

impl Region {
    pub fn new(dim: Dim, vertices: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let vertices: BTreeSet<Vertex> = vertices.into_iter().collect();
        if let Some(v) = vertices.iter().find(|v| v.dim() != dim) {
            return Err(Error::LengthMismatch {
                expected: dim.coords(),
                found: v.coords().len(),
            });
        }
        Ok(Region {
            dim,
            vertices,
            kind: RegionKind::Generic,
        })
    }

    pub fn empty(dim: Dim) -> Self {
        Region {
            dim,
            vertices: BTreeSet::new(),
            kind: RegionKind::Generic,
        }
    }

    /// One of the standard boxes; `Generic` is rejected.
    pub fn make_box(dim: Dim, kind: RegionKind, n: i64) -> Result<Self> {
        let range = match kind {
            RegionKind::Box => 1..n,
            RegionKind::ClosedBox => 0..n + 1,
            RegionKind::CentredBox => -n..n,
            RegionKind::Generic => return Err(Error::Invalid("generic is not a box kind".into())),
        };
        if n < 1 {
            return Err(Error::Invalid(format!("box size must be positive, got {n}")));
        }
        let vertices = (0..dim.d())
            .map(|_| range.clone())
            .multi_cartesian_product()
            .map(|a| Vertex::from_box_coords(&a))
            .collect();
        Ok(Region { dim, vertices, kind })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.vertices.contains(v)
    }

    pub fn vertices(&self) -> &BTreeSet<Vertex> {
        &self.vertices
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter()
    }

    pub fn translate(&self, by: &Vertex) -> Region {
        Region {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v.add(by)).collect(),
            kind: self.kind,
        }
    }

    pub fn union(&self, other: &Region) -> Region {
        Region {
            dim: self.dim,
            vertices: self.vertices.union(&other.vertices).cloned().collect(),
            kind: RegionKind::Generic,
        }
    }

    /// `∂R`: vertices adjacent to, but not in, `R`.
    pub fn boundary(&self) -> BTreeSet<Vertex> {
        self.vertices
            .iter()
            .flat_map(|v| v.neighbors())
            .filter(|u| !self.vertices.contains(u))
            .collect()
    }

    /// `E^d(R)`: edges with at least one endpoint in `R`.
    pub fn incident_edges(&self) -> BTreeSet<Edge> {
        let mut out = BTreeSet::new();
        for v in &self.vertices {
            for dir in 0..self.dim.coords() {
                out.insert(Edge::new(v.clone(), dir));
                out.insert(Edge::new(v.step(dir, -1), dir));
            }
        }
        out
    }

    /// Graph distance from `x` to the complement of `R`.
    pub fn distance_to_complement(&self, x: &Vertex) -> i64 {
        if !self.contains(x) {
            return 0;
        }
        self.boundary()
            .iter()
            .map(|y| graph_distance(x, y))
            .min()
            .unwrap_or(0)
    }

    /// Whether `R^∁` is connected, i.e. whether `R` is a region.
    ///
    /// Checked inside the bounding box of `R` grown by two layers: the outer layer of that
    /// box avoids `R` and is connected, and everything beyond it is too.
    pub fn has_connected_complement(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let d = self.dim.d();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for v in &self.vertices {
            for (i, &a) in v.box_coords().iter().enumerate() {
                lo[i] = lo[i].min(a - 2);
                hi[i] = hi[i].max(a + 2);
            }
        }
        let inside = |v: &Vertex| {
            v.box_coords()
                .iter()
                .enumerate()
                .all(|(i, &a)| lo[i] <= a && a <= hi[i])
        };
        let start = Vertex::from_box_coords(&lo);
        let mut seen = BTreeSet::new();
        seen.insert(start.clone());
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for u in v.neighbors() {
                if inside(&u) && !self.vertices.contains(&u) && seen.insert(u.clone()) {
                    queue.push_back(u);
                }
            }
        }
        let window: usize = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).product();
        seen.len() == window - self.vertices.len()
    }
}
