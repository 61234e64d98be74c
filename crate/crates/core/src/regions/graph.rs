//! An indexed view of the movable sites of a boundary condition, shared by enumeration and
//! the samplers.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::lattice::{Dim, Edge, Vertex};

use super::{FixedBoundary, PeriodicBoundary};

/// The value of a neighbouring site: either a movable site (plus a constant shift, nonzero
/// only across a torus wrap) or a frozen value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nbr {
    Free(usize, i64),
    Fixed(i64),
}

impl Nbr {
    #[inline]
    pub fn value(self, values: &[i64]) -> i64 {
        match self {
            Nbr::Free(j, shift) => values[j] + shift,
            Nbr::Fixed(v) => v,
        }
    }

    /// The value if it is already known during a depth-first assignment of sites `0..limit`.
    #[inline]
    fn known(self, values: &[i64], limit: usize) -> Option<i64> {
        match self {
            Nbr::Free(j, shift) if j < limit => Some(values[j] + shift),
            Nbr::Free(..) => None,
            Nbr::Fixed(v) => Some(v),
        }
    }
}

/// One neighbour slot of a site: the neighbour and the index of the joining edge.
#[derive(Clone, Copy, Debug)]
pub struct Slot {
    pub nbr: Nbr,
    pub edge: usize,
}

#[derive(Clone, Debug)]
pub struct RegionGraph {
    pub dim: Dim,
    /// Movable sites, ordered breadth-first from the boundary.
    pub sites: Vec<Vertex>,
    pub index: HashMap<Vertex, usize>,
    pub parity: Vec<i64>,
    /// Neighbours `x + g_i`.
    pub out_slots: Vec<Vec<Slot>>,
    /// Neighbours `x - g_i`.
    pub in_slots: Vec<Vec<Slot>>,
    /// `E^d(R)` for fixed boundaries; empty on the torus.
    pub edges: Vec<Edge>,
    /// Endpoints `(base, head)` of each edge.
    pub edge_ends: Vec<(Nbr, Nbr)>,
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

impl RegionGraph {
    pub fn from_fixed(bc: &FixedBoundary) -> Self {
        let region = bc.region();
        let b = bc.reference();
        let dim = region.dim();
        let boundary = region.boundary();

        let mut sites = Vec::with_capacity(region.len());
        let mut seen: BTreeSet<Vertex> = BTreeSet::new();
        let mut queue: VecDeque<Vertex> = boundary.iter().cloned().collect();
        while let Some(x) = queue.pop_front() {
            for y in x.neighbors() {
                if region.contains(&y) && seen.insert(y.clone()) {
                    sites.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        let index: HashMap<Vertex, usize> =
            sites.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let nbr_of = |y: &Vertex| match index.get(y) {
            Some(&j) => Nbr::Free(j, 0),
            None => Nbr::Fixed(b.value(y)),
        };

        let edges: Vec<Edge> = region.incident_edges().into_iter().collect();
        let edge_index: HashMap<&Edge, usize> =
            edges.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let edge_ends = edges
            .iter()
            .map(|e| (nbr_of(&e.base), nbr_of(&e.head())))
            .collect();

        let mut out_slots = Vec::with_capacity(sites.len());
        let mut in_slots = Vec::with_capacity(sites.len());
        for x in &sites {
            let mut outs = Vec::with_capacity(dim.coords());
            let mut ins = Vec::with_capacity(dim.coords());
            for dir in 0..dim.coords() {
                let fwd = x.step(dir, 1);
                outs.push(Slot {
                    nbr: nbr_of(&fwd),
                    edge: edge_index[&Edge::new(x.clone(), dir)],
                });
                let back = x.step(dir, -1);
                ins.push(Slot {
                    nbr: nbr_of(&back),
                    edge: edge_index[&Edge::new(back, dir)],
                });
            }
            out_slots.push(outs);
            in_slots.push(ins);
        }

        let upper_field = bc.extremal_max();
        let lower_field = bc.extremal_min();
        RegionGraph {
            dim,
            parity: sites.iter().map(|v| v.parity()).collect(),
            lower: sites.iter().map(|v| lower_field.value(v)).collect(),
            upper: sites.iter().map(|v| upper_field.value(v)).collect(),
            sites,
            index,
            out_slots,
            in_slots,
            edges,
            edge_ends,
        }
    }

    /// The fundamental domain `(Z/N)^d` of the torus, `N = n (d + 1)`, in box coordinates.
    pub fn from_torus(pbc: &PeriodicBoundary) -> Self {
        let dim = pbc.slope().dim();
        let sites: Vec<Vertex> = (0..pbc.site_count()).map(|i| pbc.site_vertex(i)).collect();
        let index: HashMap<Vertex, usize> =
            sites.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let nbr_of = |y: &Vertex| {
            let (j, shift) = pbc.reduce(y);
            Nbr::Free(j, shift)
        };
        let mut out_slots = Vec::with_capacity(sites.len());
        let mut in_slots = Vec::with_capacity(sites.len());
        for x in &sites {
            let mut outs = Vec::new();
            let mut ins = Vec::new();
            for dir in 0..dim.coords() {
                outs.push(Slot {
                    nbr: nbr_of(&x.step(dir, 1)),
                    edge: usize::MAX,
                });
                ins.push(Slot {
                    nbr: nbr_of(&x.step(dir, -1)),
                    edge: usize::MAX,
                });
            }
            out_slots.push(outs);
            in_slots.push(ins);
        }
        let n = sites.len();
        RegionGraph {
            dim,
            parity: sites.iter().map(|v| v.parity()).collect(),
            sites,
            index,
            out_slots,
            in_slots,
            edges: Vec::new(),
            edge_ends: Vec::new(),
            lower: vec![i64::MIN / 4; n],
            upper: vec![i64::MAX / 4; n],
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Sites whose value is not forced by the extremal fields.
    pub fn free_count(&self) -> usize {
        self.lower.iter().zip(&self.upper).filter(|(l, u)| l < u).count()
    }

    /// The allowed values at site `j` given its neighbours, as the smallest allowed value
    /// and the number of allowed values (each `d + 1` apart). Neighbours among sites
    /// `limit..` are ignored.
    #[inline]
    pub fn allowed(&self, j: usize, values: &[i64], limit: usize) -> (i64, i64) {
        let d = self.dim.d() as i64;
        let span = d + 1;
        let mut lo = self.lower[j];
        let mut hi = self.upper[j];
        for s in &self.out_slots[j] {
            if let Some(u) = s.nbr.known(values, limit) {
                lo = lo.max(u - 1);
                hi = hi.min(u + d);
            }
        }
        for s in &self.in_slots[j] {
            if let Some(u) = s.nbr.known(values, limit) {
                lo = lo.max(u - d);
                hi = hi.min(u + 1);
            }
        }
        let p = self.parity[j];
        let first = lo + (p - lo).rem_euclid(span);
        let last = hi - (hi - p).rem_euclid(span);
        if last < first {
            (first, 0)
        } else {
            (first, (last - first) / span + 1)
        }
    }

    /// Calls `visit` with every valid assignment of the sites, in lexicographic order of
    /// the value vectors.
    pub fn for_each(&self, mut visit: impl FnMut(&[i64])) {
        let mut values = self.lower.clone();
        self.dfs(0, &mut values, &mut visit);
    }

    fn dfs(&self, depth: usize, values: &mut Vec<i64>, visit: &mut impl FnMut(&[i64])) {
        if depth == self.sites.len() {
            visit(values);
            return;
        }
        let (first, count) = self.allowed(depth, values, depth);
        let span = self.dim.span();
        for k in 0..count {
            values[depth] = first + k * span;
            self.dfs(depth + 1, values, visit);
        }
    }

    /// Number of valid assignments.
    pub fn count(&self) -> u128 {
        let mut values = self.lower.clone();
        self.count_from(0, &mut values)
    }

    fn count_from(&self, depth: usize, values: &mut Vec<i64>) -> u128 {
        if depth == self.sites.len() {
            return 1;
        }
        let (first, count) = self.allowed(depth, values, depth);
        let span = self.dim.span();
        let mut total = 0;
        for k in 0..count {
            values[depth] = first + k * span;
            total += self.count_from(depth + 1, values);
        }
        total
    }

    /// `∇f` along edge `i`.
    #[inline]
    pub fn edge_gradient(&self, i: usize, values: &[i64]) -> i64 {
        let (a, b) = self.edge_ends[i];
        b.value(values) - a.value(values)
    }

    /// Indices of the edges of `E^d(R)` in the tiling of the assignment.
    pub fn tiling_edges<'a>(&'a self, values: &'a [i64]) -> impl Iterator<Item = usize> + 'a {
        let d = self.dim.d() as i64;
        (0..self.edges.len()).filter(move |&i| self.edge_gradient(i, values) == -d)
    }
}
