//! The dual hypergraph of unrooted loops, Kasteleyn hypermatrices and Cayley
//! hyperdeterminants.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::height::{tiling_of, Tiling};
use crate::lattice::{loops_through, permutation_sign, Edge, UnrootedLoop};
use crate::regions::{FixedBoundary, WeightFunction};
use crate::scalar::Scalar;

/// Default bound on `(n!)^{m-1}` for the brute-force hyperdeterminant.
pub const DEFAULT_HYPERDET_CAP: f64 = 1e8;

/// `h(e)`: the `d!` unrooted loops traversing `e`, indexed by loop class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualHyperedge {
    pub source: Edge,
    pub loops: Vec<UnrootedLoop>,
}

pub fn dual_edge(e: &Edge) -> DualHyperedge {
    DualHyperedge {
        source: e.clone(),
        loops: loops_through(e),
    }
}

/// `h^{-1}`: the unique edge shared by all loops of a hyperedge.
pub fn source_edge(loops: &[UnrootedLoop]) -> Option<Edge> {
    let first: BTreeSet<Edge> = loops.first()?.edges().into_iter().collect();
    let shared: Vec<Edge> = first
        .into_iter()
        .filter(|e| loops.iter().all(|s| s.traverses(e)))
        .collect();
    match shared.as_slice() {
        [e] if loops_through(e).as_slice() == loops => Some(e.clone()),
        _ => None,
    }
}

/// The matching `h(T)` restricted to hyperedges meeting the window loops of `T`, and
/// whether it covers every window loop exactly once.
pub fn matching_of_tiling(t: &Tiling) -> (Vec<DualHyperedge>, bool) {
    let window_loops = t.window_loops();
    let mut tiles: BTreeSet<Edge> = BTreeSet::new();
    for s in &window_loops {
        tiles.extend(s.edges().into_iter().filter(|e| t.contains(e)));
    }
    let matching: Vec<DualHyperedge> = tiles.iter().map(dual_edge).collect();
    let mut cover: HashMap<&UnrootedLoop, usize> = HashMap::new();
    for h in &matching {
        for s in &h.loops {
            *cover.entry(s).or_default() += 1;
        }
    }
    let partition = window_loops
        .iter()
        .all(|s| cover.get(s).copied().unwrap_or(0) == 1);
    (matching, partition)
}

/// A sparse hypermatrix `A : [n]^m -> W`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypermatrix<W> {
    rank: usize,
    size: usize,
    entries: BTreeMap<Vec<usize>, W>,
}

impl<W: Scalar> Hypermatrix<W> {
    pub fn new(rank: usize, size: usize) -> Self {
        Hypermatrix {
            rank,
            size,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_matrix(rows: &[Vec<W>]) -> Self {
        let mut a = Hypermatrix::new(2, rows.len());
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a.insert(vec![i, j], v.clone());
            }
        }
        a
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn insert(&mut self, index: Vec<usize>, value: W) {
        assert_eq!(index.len(), self.rank);
        assert!(index.iter().all(|&i| i < self.size));
        if value == W::zero() {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
    }

    pub fn get(&self, index: &[usize]) -> W {
        self.entries.get(index).cloned().unwrap_or_else(W::zero)
    }

    pub fn nonzeros(&self) -> &BTreeMap<Vec<usize>, W> {
        &self.entries
    }
}

/// A Cayley hyperdeterminant and the sign pattern of its nonzero terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperdet<W> {
    pub value: W,
    pub positive_terms: u64,
    pub negative_terms: u64,
}

impl<W> Hyperdet<W> {
    pub fn nonzero_terms(&self) -> u64 {
        self.positive_terms + self.negative_terms
    }

    pub fn sign_uniform(&self) -> bool {
        self.positive_terms == 0 || self.negative_terms == 0
    }
}

/// `Det A = Σ_{σ_2..σ_m ∈ S_n} Π_i sign σ_i Π_k A(k, σ_2(k), .., σ_m(k))`, by a search over
/// the nonzero entries that abandons a branch as soon as an index repeats.
pub fn hyperdet<W: Scalar>(a: &Hypermatrix<W>) -> Result<Hyperdet<W>> {
    hyperdet_capped(a, DEFAULT_HYPERDET_CAP)
}

pub fn hyperdet_capped<W: Scalar>(a: &Hypermatrix<W>, cap: f64) -> Result<Hyperdet<W>> {
    let (m, n) = (a.rank, a.size);
    if m % 2 == 1 {
        return Err(Error::OddRank(m));
    }
    let work = (1..=n).map(|k| k as f64).product::<f64>().powi(m as i32 - 1);
    if work > cap {
        return Err(Error::HyperdetCap { work, cap });
    }
    if n == 0 {
        return Ok(Hyperdet {
            value: W::one(),
            positive_terms: 1,
            negative_terms: 0,
        });
    }
    let mut rows: Vec<Vec<(&[usize], &W)>> = vec![Vec::new(); n];
    for (idx, v) in &a.entries {
        rows[idx[0]].push((&idx[1..], v));
    }
    let search = Search { rows: &rows, m, n };
    // split on the entry chosen in row 0; partial results are combined in entry order
    let parts: Vec<Hyperdet<W>> = rows[0]
        .par_iter()
        .map(|&(tail, v)| {
            let mut state = SearchState::new(m, n);
            let mut acc = Hyperdet {
                value: W::zero(),
                positive_terms: 0,
                negative_terms: 0,
            };
            state.assign(0, tail);
            search.run(1, v.clone(), &mut state, &mut acc);
            acc
        })
        .collect();
    let mut out = Hyperdet {
        value: W::zero(),
        positive_terms: 0,
        negative_terms: 0,
    };
    for p in parts {
        out.value = out.value + p.value;
        out.positive_terms += p.positive_terms;
        out.negative_terms += p.negative_terms;
    }
    Ok(out)
}

struct Search<'a, W> {
    rows: &'a [Vec<(&'a [usize], &'a W)>],
    m: usize,
    n: usize,
}

struct SearchState {
    /// `perms[i][k] = σ_{i+2}(k)`
    perms: Vec<Vec<usize>>,
    used: Vec<Vec<bool>>,
}

impl SearchState {
    fn new(m: usize, n: usize) -> Self {
        SearchState {
            perms: vec![vec![0; n]; m - 1],
            used: vec![vec![false; n]; m - 1],
        }
    }

    fn free(&self, tail: &[usize]) -> bool {
        tail.iter().enumerate().all(|(i, &j)| !self.used[i][j])
    }

    fn assign(&mut self, k: usize, tail: &[usize]) {
        for (i, &j) in tail.iter().enumerate() {
            self.perms[i][k] = j;
            self.used[i][j] = true;
        }
    }

    fn release(&mut self, tail: &[usize]) {
        for (i, &j) in tail.iter().enumerate() {
            self.used[i][j] = false;
        }
    }
}

impl<W: Scalar> Search<'_, W> {
    fn run(&self, k: usize, product: W, state: &mut SearchState, acc: &mut Hyperdet<W>) {
        if k == self.n {
            let sign: i32 = state.perms.iter().map(|p| permutation_sign(p)).product();
            let term = if sign > 0 { product } else { W::zero() - product };
            if term > W::zero() {
                acc.positive_terms += 1;
            } else if term < W::zero() {
                acc.negative_terms += 1;
            }
            acc.value = acc.value.clone() + term;
            return;
        }
        debug_assert_eq!(state.perms.len(), self.m - 1);
        for &(tail, v) in &self.rows[k] {
            if state.free(tail) {
                state.assign(k, tail);
                self.run(k + 1, product.clone() * v.clone(), state, acc);
                state.release(tail);
            }
        }
    }
}

/// Determinant by Gaussian elimination over the scalar field.
pub fn determinant<W: Scalar>(matrix: &[Vec<W>]) -> W {
    let n = matrix.len();
    let mut a: Vec<Vec<W>> = matrix.to_vec();
    let mut det = W::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| a[r][col] != W::zero()) else {
            return W::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = W::zero() - det;
        }
        let p = a[col][col].clone();
        det = det * p.clone();
        for r in col + 1..n {
            if a[r][col] == W::zero() {
                continue;
            }
            let factor = a[r][col].clone() / p.clone();
            for c in col..n {
                let delta = factor.clone() * a[col][c].clone();
                a[r][c] = a[r][c].clone() - delta;
            }
        }
    }
    det
}

/// The weighted Kasteleyn hypermatrix of `(R, T(b))`.
#[derive(Clone, Debug)]
pub struct KasteleynHypermatrix<W> {
    /// `X_1 .. X_{d!}`; position `k` of every set comes from the `k`-th edge of `T ∩ E^d(R)`.
    pub index_sets: Vec<Vec<UnrootedLoop>>,
    pub matrix: Hypermatrix<W>,
    /// The edge `h^{-1}` behind each nonzero entry.
    pub sources: BTreeMap<Vec<usize>, Edge>,
}

/// `X_i`: the loops of class `ξ^i` meeting `T ∩ E^d(R)`, with `T = T(b)`.
pub fn build_index_sets(bc: &FixedBoundary) -> Result<Vec<Vec<UnrootedLoop>>> {
    let b = bc.reference();
    let d = b.dim().d() as i64;
    let m = b.dim().loops_per_edge();
    let mut sets = vec![Vec::new(); m];
    for e in bc.region().incident_edges() {
        if b.gradient(&e) == -d {
            for (i, s) in loops_through(&e).into_iter().enumerate() {
                sets[i].push(s);
            }
        }
    }
    Ok(sets)
}

pub fn build_hypermatrix<W: Scalar>(
    bc: &FixedBoundary,
    w: &WeightFunction<W>,
) -> Result<KasteleynHypermatrix<W>> {
    let index_sets = build_index_sets(bc)?;
    let m = index_sets.len();
    let n = index_sets[0].len();
    let lookup: Vec<HashMap<&UnrootedLoop, usize>> = index_sets
        .iter()
        .map(|set| set.iter().enumerate().map(|(k, s)| (s, k)).collect())
        .collect();
    let mut matrix = Hypermatrix::new(m, n);
    let mut sources = BTreeMap::new();
    for e in bc.region().incident_edges() {
        let loops = loops_through(&e);
        let index: Option<Vec<usize>> = loops
            .iter()
            .enumerate()
            .map(|(i, s)| lookup[i].get(s).copied())
            .collect();
        if let Some(index) = index {
            matrix.insert(index.clone(), w.weight(&e));
            sources.insert(index, e);
        }
    }
    Ok(KasteleynHypermatrix {
        index_sets,
        matrix,
        sources,
    })
}

/// The outcome of comparing `Z_w` with `Det K_w`.
#[derive(Clone, Debug, PartialEq)]
pub struct KasteleynReport<W> {
    pub n: usize,
    pub rank: usize,
    /// `|Ω(R, b)|`
    pub count: BigUint,
    pub z: W,
    pub det: Hyperdet<W>,
    /// Sign of `Det K_w`, `0` if it vanishes.
    pub sign: i32,
    /// `|Det K_w| = Z_w`
    pub equal: bool,
}

pub fn verify_kasteleyn<W: Scalar>(
    bc: &FixedBoundary,
    w: &WeightFunction<W>,
) -> Result<KasteleynReport<W>> {
    verify_kasteleyn_capped(bc, w, DEFAULT_HYPERDET_CAP)
}

pub fn verify_kasteleyn_capped<W: Scalar>(
    bc: &FixedBoundary,
    w: &WeightFunction<W>,
    cap: f64,
) -> Result<KasteleynReport<W>> {
    if !bc.region().has_connected_complement() {
        return Err(Error::NotARegion);
    }
    let k = build_hypermatrix(bc, w)?;
    let det = hyperdet_capped(&k.matrix, cap)?;
    let z = bc.partition_function(w)?;
    let count = bc.count()?;
    let zero = W::zero();
    let sign = if det.value > zero {
        1
    } else if det.value < zero {
        -1
    } else {
        0
    };
    let magnitude = if sign < 0 {
        zero - det.value.clone()
    } else {
        det.value.clone()
    };
    Ok(KasteleynReport {
        n: k.matrix.size(),
        rank: k.matrix.rank(),
        count,
        equal: magnitude == z,
        z,
        det,
        sign,
    })
}

/// `T(b)` as a tiling, for callers that want the matching view of a boundary condition.
pub fn boundary_tiling(bc: &FixedBoundary) -> Result<Tiling> {
    tiling_of(bc.reference())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::height::HeightField;
    use crate::lattice::{Dim, Region, RegionKind, Vertex};
    use crate::scalar::Rational;

    fn q(k: i64) -> Rational {
        Rational::from_int(k)
    }

    #[test]
    fn small_determinants() {
        let a = Hypermatrix::from_matrix(&[vec![q(1), q(2)], vec![q(3), q(4)]]);
        assert_eq!(hyperdet(&a).unwrap().value, q(-2));
        let mut b = Hypermatrix::new(4, 1);
        b.insert(vec![0, 0, 0, 0], q(7));
        assert_eq!(hyperdet(&b).unwrap().value, q(7));
        assert!(matches!(hyperdet(&Hypermatrix::<Rational>::new(3, 2)), Err(Error::OddRank(3))));
        let m = vec![vec![q(2), q(0), q(1)], vec![q(1), q(3), q(2)], vec![q(1), q(1), q(2)]];
        assert_eq!(determinant(&m), q(6));
        assert_eq!(hyperdet(&Hypermatrix::from_matrix(&m)).unwrap().value, q(6));
    }

    #[test]
    fn dual_edges_are_injective() {
        let dim = Dim::new(3).unwrap();
        let o = Vertex::origin(dim);
        let mut seen = BTreeSet::new();
        for x in o.neighbors().into_iter().chain([o.clone()]) {
            for dir in 0..4 {
                let e = Edge::new(x.clone(), dir);
                let h = dual_edge(&e);
                assert_eq!(h.loops.len(), 6);
                assert_eq!(source_edge(&h.loops), Some(e));
                assert!(seen.insert(h.loops));
            }
        }
    }

    #[test]
    fn flat_box_matches_count() {
        let dim = Dim::new(2).unwrap();
        let bc = FixedBoundary::new(
            Region::make_box(dim, RegionKind::Box, 3).unwrap(),
            HeightField::flat(dim),
        )
        .unwrap();
        let report = verify_kasteleyn(&bc, &WeightFunction::<Rational>::uniform()).unwrap();
        assert!(report.equal);
        assert!(report.det.sign_uniform());
        assert_eq!(BigUint::from(report.det.nonzero_terms()), report.count);
        let (_, ok) = matching_of_tiling(&boundary_tiling(&bc).unwrap());
        assert!(ok);
    }
}
