//! Level-set decompositions of differences of height functions, the cluster boundary
//! swap, and the variance and covariance identities.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use petgraph::unionfind::UnionFind;
use rand::Rng;

use crate::error::{Error, Result};
use crate::height::HeightField;
use crate::lattice::{loops_through, Edge, Vertex};
use crate::regions::{mass_of, FixedBoundary, RegionGraph, WeightFunction};
use crate::sampler::{cftp_batch, glauber_values, CftpOptions, Weights};
use crate::scalar::Scalar;

/// Precomputed lattice data for pairs in `Ω(R, b)²`.
#[derive(Clone, Debug)]
pub struct ClusterContext {
    bc: FixedBoundary,
    graph: RegionGraph,
    /// `R` (in site order) followed by `∂R`.
    vertices: Vec<Vertex>,
    vertex_index: HashMap<Vertex, usize>,
    /// Endpoints of each edge of `E^d(R)` as indices into `vertices`.
    edge_vertices: Vec<(usize, usize)>,
    /// For each edge and each loop through it, the other loop edges lying in `E^d(R)`.
    loop_partners: Vec<Vec<Vec<usize>>>,
}

impl ClusterContext {
    /// Requires `R` to be a region not containing the origin.
    pub fn new(bc: &FixedBoundary) -> Result<Self> {
        let region = bc.region();
        if region.contains(&Vertex::origin(region.dim())) {
            return Err(Error::OriginInRegion);
        }
        if !region.has_connected_complement() {
            return Err(Error::NotARegion);
        }
        let graph = bc.graph();
        let mut vertices = graph.sites.clone();
        vertices.extend(region.boundary());
        let vertex_index: HashMap<Vertex, usize> =
            vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let edge_index: HashMap<&Edge, usize> =
            graph.edges.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let edge_vertices = graph
            .edges
            .iter()
            .map(|e| (vertex_index[&e.base], vertex_index[&e.head()]))
            .collect();
        let loop_partners = graph
            .edges
            .iter()
            .map(|e| {
                loops_through(e)
                    .iter()
                    .map(|s| {
                        s.edges()
                            .iter()
                            .filter(|f| *f != e)
                            .filter_map(|f| edge_index.get(f).copied())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(ClusterContext {
            bc: bc.clone(),
            graph,
            vertices,
            vertex_index,
            edge_vertices,
            loop_partners,
        })
    }

    pub fn boundary_condition(&self) -> &FixedBoundary {
        &self.bc
    }

    pub fn graph(&self) -> &RegionGraph {
        &self.graph
    }

    fn value_at(&self, values: &[i64], vertex: usize) -> i64 {
        if vertex < self.graph.len() {
            values[vertex]
        } else {
            self.bc.reference().value(&self.vertices[vertex])
        }
    }

    fn values_of(&self, f: &HeightField) -> Result<Vec<i64>> {
        if !self.bc.contains(f) {
            return Err(Error::Invalid(
                "height function is not an element of Ω(R, b)".into(),
            ));
        }
        Ok(self.bc.values_of(&self.graph, f))
    }

    /// `V_g`, the edges of `E^d(R)` on which `g = f_1 - f_2` is not constant.
    pub fn difference_support(&self, v1: &[i64], v2: &[i64]) -> Vec<usize> {
        (0..self.graph.edges.len())
            .filter(|&i| self.graph.edge_gradient(i, v1) != self.graph.edge_gradient(i, v2))
            .collect()
    }

    /// `LSD(g)` for two site-value vectors of `Ω(R, b)`.
    pub fn decompose(&self, v1: &[i64], v2: &[i64]) -> Result<LevelSetDecomposition<'_>> {
        let support = self.difference_support(v1, v2);
        let in_support: HashMap<usize, usize> =
            support.iter().enumerate().map(|(k, &e)| (e, k)).collect();

        // boundaries: components of the support under "shares a loop"
        let mut uf = UnionFind::<usize>::new(support.len());
        for (k, &e) in support.iter().enumerate() {
            for partners in &self.loop_partners[e] {
                let hits: Vec<usize> = partners
                    .iter()
                    .filter_map(|f| in_support.get(f).copied())
                    .collect();
                if hits.len() != 1 {
                    return Err(Error::Invalid(format!(
                        "a loop through {:?} meets the support {} times",
                        self.graph.edges[e],
                        hits.len() + 1
                    )));
                }
                uf.union(k, hits[0]);
            }
        }
        let mut boundary_id: HashMap<usize, usize> = HashMap::new();
        let mut boundary_edges: Vec<Vec<usize>> = Vec::new();
        for (k, &e) in support.iter().enumerate() {
            let rep = uf.find(k);
            let id = *boundary_id.entry(rep).or_insert_with(|| {
                boundary_edges.push(Vec::new());
                boundary_edges.len() - 1
            });
            boundary_edges[id].push(e);
        }

        // level sets: components of R ∪ ∂R without the support, with ∂R merged
        let nv = self.vertices.len();
        let mut lv = UnionFind::<usize>::new(nv);
        let first_outer = self.graph.len();
        for b in first_outer + 1..nv {
            lv.union(first_outer, b);
        }
        for (i, &(a, b)) in self.edge_vertices.iter().enumerate() {
            if !in_support.contains_key(&i) {
                lv.union(a, b);
            }
        }
        let mut level_id: HashMap<usize, usize> = HashMap::new();
        let mut level_of = vec![0usize; nv];
        let mut level_values: Vec<i64> = Vec::new();
        // the root is numbered first
        let order = std::iter::once(first_outer.min(nv.saturating_sub(1))).chain(0..nv);
        for x in order {
            if nv == 0 {
                break;
            }
            let rep = lv.find(x);
            let id = *level_id.entry(rep).or_insert_with(|| {
                level_values.push(self.value_at(v1, x) - self.value_at(v2, x));
                level_values.len() - 1
            });
            level_of[x] = id;
        }
        for x in 0..nv {
            let g = self.value_at(v1, x) - self.value_at(v2, x);
            if g != level_values[level_of[x]] {
                return Err(Error::Invalid("g is not constant on a level set".into()));
            }
        }

        let span = self.graph.dim.span();
        let mut links = Vec::with_capacity(boundary_edges.len());
        for edges in &boundary_edges {
            let mut pair: Option<(usize, usize)> = None;
            for &e in edges {
                let (a, b) = self.edge_vertices[e];
                let (la, lb) = (level_of[a], level_of[b]);
                let p = if level_values[la] < level_values[lb] { (la, lb) } else { (lb, la) };
                if level_values[p.1] - level_values[p.0] != span {
                    return Err(Error::Invalid("g jumps by other than d + 1 across a boundary".into()));
                }
                match pair {
                    None => pair = Some(p),
                    Some(q) if q == p => {}
                    Some(_) => {
                        return Err(Error::Invalid("a boundary touches more than two level sets".into()))
                    }
                }
            }
            links.push(pair.expect("boundaries are nonempty"));
        }

        let levels = level_values.len();
        if levels != boundary_edges.len() + 1 {
            return Err(Error::Invalid(format!(
                "{levels} level sets and {} boundaries do not form a tree",
                boundary_edges.len()
            )));
        }
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); levels];
        for (b, &(lo, hi)) in links.iter().enumerate() {
            adjacency[lo].push((hi, b));
            adjacency[hi].push((lo, b));
        }
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; levels];
        let mut depth = vec![usize::MAX; levels];
        depth[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(l) = queue.pop_front() {
            for &(m, b) in &adjacency[l] {
                if depth[m] == usize::MAX {
                    depth[m] = depth[l] + 1;
                    parent[m] = Some((l, b));
                    queue.push_back(m);
                }
            }
        }
        if depth.contains(&usize::MAX) {
            return Err(Error::Invalid("level-set graph is not connected".into()));
        }

        Ok(LevelSetDecomposition {
            ctx: self,
            support,
            boundaries: boundary_edges
                .into_iter()
                .zip(links)
                .map(|(edges, (lower, upper))| Boundary { edges, lower, upper })
                .collect(),
            level_of,
            level_values,
            parent,
            depth,
        })
    }

    /// `LSD(f_1 - f_2)` for two elements of `Ω(R, b)`.
    pub fn build_lsd(&self, f1: &HeightField, f2: &HeightField) -> Result<LevelSetDecomposition<'_>> {
        let v1 = self.values_of(f1)?;
        let v2 = self.values_of(f2)?;
        self.decompose(&v1, &v2)
    }

    /// `(f_1, f_2) ⊖ M` on site-value vectors.
    pub fn swap_values(
        &self,
        lsd: &LevelSetDecomposition<'_>,
        v1: &[i64],
        v2: &[i64],
        mask: &SwapMask,
    ) -> (Vec<i64>, Vec<i64>) {
        // g' on each level set: the root value plus the flipped steps along the tree path
        let levels = lsd.level_values.len();
        let mut shift = vec![0i64; levels];
        let mut order: Vec<usize> = (0..levels).collect();
        order.sort_by_key(|&l| lsd.depth[l]);
        for l in order {
            if let Some((p, b)) = lsd.parent[l] {
                let step = lsd.level_values[l] - lsd.level_values[p];
                shift[l] = shift[p] + if mask.selected.contains(&b) { -2 * step } else { 0 };
            }
        }
        let mut w1 = v1.to_vec();
        let mut w2 = v2.to_vec();
        for x in 0..self.graph.len() {
            // g' - g is a multiple of 2(d + 1), split evenly to keep f_1 + f_2
            let half = shift[lsd.level_of[x]] / 2;
            w1[x] += half;
            w2[x] -= half;
        }
        (w1, w2)
    }

    pub fn swap(
        &self,
        f1: &HeightField,
        f2: &HeightField,
        mask: &SwapMask,
    ) -> Result<(HeightField, HeightField)> {
        let v1 = self.values_of(f1)?;
        let v2 = self.values_of(f2)?;
        let lsd = self.decompose(&v1, &v2)?;
        if let Some(&b) = mask.selected.iter().find(|&&b| b >= lsd.boundaries.len()) {
            return Err(Error::Invalid(format!("no boundary with index {b}")));
        }
        let (w1, w2) = self.swap_values(&lsd, &v1, &v2, mask);
        Ok((
            self.bc.field_from_values(&self.graph, &w1),
            self.bc.field_from_values(&self.graph, &w2),
        ))
    }

    /// `(f̂_1, f̂_2)`: each boundary flipped independently with probability one half.
    pub fn rerandomize(
        &self,
        f1: &HeightField,
        f2: &HeightField,
        rng: &mut impl Rng,
    ) -> Result<(HeightField, HeightField)> {
        let v1 = self.values_of(f1)?;
        let v2 = self.values_of(f2)?;
        let lsd = self.decompose(&v1, &v2)?;
        let mask = SwapMask::random(&lsd, rng);
        let (w1, w2) = self.swap_values(&lsd, &v1, &v2, &mask);
        Ok((
            self.bc.field_from_values(&self.graph, &w1),
            self.bc.field_from_values(&self.graph, &w2),
        ))
    }

    fn vertex_slot(&self, x: &Vertex) -> Option<usize> {
        self.vertex_index.get(x).copied()
    }
}

/// One boundary of `LSD(g)`: a connected component of the boundary graph, linking the
/// level set where `g` is lower to the one where it is higher by `d + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Boundary {
    /// Indices into `E^d(R)`.
    pub edges: Vec<usize>,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Clone, Debug)]
pub struct LevelSetDecomposition<'a> {
    ctx: &'a ClusterContext,
    /// `V_g` as indices into `E^d(R)`.
    pub support: Vec<usize>,
    pub boundaries: Vec<Boundary>,
    /// Level set of each vertex of `R ∪ ∂R`.
    level_of: Vec<usize>,
    /// `g` on each level set; level set `0` is the root, containing `R^∁`.
    pub level_values: Vec<i64>,
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
}

impl LevelSetDecomposition<'_> {
    pub fn level_count(&self) -> usize {
        self.level_values.len()
    }

    pub fn support_edges(&self) -> Vec<Edge> {
        self.support
            .iter()
            .map(|&i| self.ctx.graph.edges[i].clone())
            .collect()
    }

    /// The level set containing `x`; everything outside `R ∪ ∂R` is in the root.
    pub fn level_of(&self, x: &Vertex) -> usize {
        self.ctx
            .vertex_slot(x)
            .map(|i| self.level_of[i])
            .unwrap_or(0)
    }

    pub fn depth(&self, level: usize) -> usize {
        self.depth[level]
    }

    /// `d_LSD(0, x)`.
    pub fn lsd_distance(&self, x: &Vertex) -> usize {
        self.depth[self.level_of(x)]
    }

    /// The last level set shared by the tree paths from the root to `x` and to `y`.
    pub fn meet_vertex(&self, x: &Vertex, y: &Vertex) -> usize {
        self.meet_levels(self.level_of(x), self.level_of(y))
    }

    fn meet_levels(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has a parent").0;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has a parent").0;
        }
        while a != b {
            a = self.parent[a].expect("non-root has a parent").0;
            b = self.parent[b].expect("non-root has a parent").0;
        }
        a
    }

    /// Whether deleting boundary `b` separates `x` from the root, tested by a search in the
    /// level-set graph with that boundary removed.
    pub fn separates(&self, b: usize, x: &Vertex) -> bool {
        let levels = self.level_values.len();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); levels];
        for (i, bd) in self.boundaries.iter().enumerate() {
            if i != b {
                adjacency[bd.lower].push(bd.upper);
                adjacency[bd.upper].push(bd.lower);
            }
        }
        let target = self.level_of(x);
        let mut seen = vec![false; levels];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(l) = queue.pop_front() {
            if l == target {
                return false;
            }
            for &m in &adjacency[l] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        true
    }

    /// The tree with orientations forgotten: level sets as vertex sets, boundaries as edge
    /// sets, and which pairs of level sets they join.
    pub fn unoriented(&self) -> UnorientedTree {
        let mut members: BTreeMap<usize, BTreeSet<Vertex>> = BTreeMap::new();
        for (i, &l) in self.level_of.iter().enumerate() {
            members.entry(l).or_default().insert(self.ctx.vertices[i].clone());
        }
        let levels: BTreeSet<BTreeSet<Vertex>> = members.values().cloned().collect();
        let boundaries = self
            .boundaries
            .iter()
            .map(|b| {
                let edges: BTreeSet<Edge> =
                    b.edges.iter().map(|&i| self.ctx.graph.edges[i].clone()).collect();
                let mut ends = [members[&b.lower].clone(), members[&b.upper].clone()];
                ends.sort();
                (edges, ends)
            })
            .collect();
        UnorientedTree { levels, boundaries }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnorientedTree {
    pub levels: BTreeSet<BTreeSet<Vertex>>,
    pub boundaries: BTreeSet<(BTreeSet<Edge>, [BTreeSet<Vertex>; 2])>,
}

/// A set `M` of boundaries of `LSD(g)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SwapMask {
    pub selected: BTreeSet<usize>,
}

impl SwapMask {
    pub fn none() -> Self {
        SwapMask::default()
    }

    pub fn all(lsd: &LevelSetDecomposition<'_>) -> Self {
        SwapMask {
            selected: (0..lsd.boundaries.len()).collect(),
        }
    }

    pub fn random(lsd: &LevelSetDecomposition<'_>, rng: &mut impl Rng) -> Self {
        SwapMask {
            selected: (0..lsd.boundaries.len())
                .filter(|_| rng.random_bool(0.5))
                .collect(),
        }
    }

    /// The mask whose boundaries make up exactly the given edge set.
    pub fn from_edges(lsd: &LevelSetDecomposition<'_>, edges: &BTreeSet<Edge>) -> Result<Self> {
        let mut selected = BTreeSet::new();
        for e in edges {
            let idx = lsd.ctx.graph.edges.iter().position(|f| f == e);
            let b = idx.and_then(|i| lsd.boundaries.iter().position(|b| b.edges.contains(&i)));
            match b {
                Some(b) => {
                    selected.insert(b);
                }
                None => return Err(Error::NotUnionOfBoundaries(e.clone())),
            }
        }
        for &b in &selected {
            for &i in &lsd.boundaries[b].edges {
                let e = &lsd.ctx.graph.edges[i];
                if !edges.contains(e) {
                    return Err(Error::NotUnionOfBoundaries(e.clone()));
                }
            }
        }
        Ok(SwapMask { selected })
    }
}

/// Exact sides of `Cov_w(f(x), f(y)) = ½ (d + 1)² E_w d_LSD(0, x ∧ y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport<W> {
    pub x: Vertex,
    pub y: Vertex,
    pub lhs: W,
    pub rhs: W,
    pub equal: bool,
}

/// Both sides of the covariance identity for each pair of points, from one pass over all
/// ordered pairs of `Ω(R, b)`. A pair `(x, x)` gives the variance identity.
pub fn covariance_identities<W: Scalar>(
    bc: &FixedBoundary,
    w: &WeightFunction<W>,
    points: &[(Vertex, Vertex)],
    cap: usize,
) -> Result<Vec<IdentityReport<W>>> {
    let ctx = ClusterContext::new(bc)?;
    let (graph, all) = bc.enumerate_values(cap)?;
    let edge_weights = w.on_edges(&graph.edges);
    let masses: Vec<W> = all.iter().map(|v| mass_of(&graph, &edge_weights, v)).collect();
    let z = masses.iter().fold(W::zero(), |a, m| a + m.clone());

    let value = |v: &[i64], x: &Vertex| match ctx.graph.index.get(x) {
        Some(&j) => v[j],
        None => bc.reference().value(x),
    };
    let k = points.len();
    let mut ex = vec![W::zero(); k];
    let mut ey = vec![W::zero(); k];
    let mut exy = vec![W::zero(); k];
    for (v, m) in all.iter().zip(&masses) {
        for (i, (x, y)) in points.iter().enumerate() {
            let (fx, fy) = (W::from_int(value(v, x)), W::from_int(value(v, y)));
            ex[i] = ex[i].clone() + m.clone() * fx.clone();
            ey[i] = ey[i].clone() + m.clone() * fy.clone();
            exy[i] = exy[i].clone() + m.clone() * fx * fy;
        }
    }
    let mut dist = vec![W::zero(); k];
    for (v1, m1) in all.iter().zip(&masses) {
        for (v2, m2) in all.iter().zip(&masses) {
            let lsd = ctx.decompose(v1, v2)?;
            let pm = m1.clone() * m2.clone();
            for (i, (x, y)) in points.iter().enumerate() {
                let depth = lsd.depth(lsd.meet_vertex(x, y)) as i64;
                if depth != 0 {
                    dist[i] = dist[i].clone() + pm.clone() * W::from_int(depth);
                }
            }
        }
    }
    let span = W::from_int(bc.reference().dim().span());
    let half_span_sq = span.clone() * span / W::from_int(2);
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let lhs = exy[i].clone() / z.clone()
                - (ex[i].clone() / z.clone()) * (ey[i].clone() / z.clone());
            let rhs = half_span_sq.clone() * dist[i].clone() / (z.clone() * z.clone());
            IdentityReport {
                x: x.clone(),
                y: y.clone(),
                equal: lhs == rhs,
                lhs,
                rhs,
            }
        })
        .collect())
}

pub fn variance_identity_exact<W: Scalar>(
    bc: &FixedBoundary,
    w: &WeightFunction<W>,
    x: &Vertex,
) -> Result<IdentityReport<W>> {
    let mut r = covariance_identities(bc, w, &[(x.clone(), x.clone())], crate::regions::DEFAULT_ENUMERATION_CAP)?;
    Ok(r.remove(0))
}

pub fn covariance_identity_exact<W: Scalar>(
    bc: &FixedBoundary,
    w: &WeightFunction<W>,
    x: &Vertex,
    y: &Vertex,
) -> Result<IdentityReport<W>> {
    let mut r = covariance_identities(bc, w, &[(x.clone(), y.clone())], crate::regions::DEFAULT_ENUMERATION_CAP)?;
    Ok(r.remove(0))
}

/// Monte Carlo estimates of both sides of the covariance identity.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityEstimate {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
}

/// Draws `2 samples` independent fields: exact samples when `w` is uniform, otherwise the
/// end points of independent Glauber chains of `steps` updates.
pub fn identity_estimators_mcmc<W: Scalar>(
    bc: &FixedBoundary,
    w: &WeightFunction<W>,
    x: &Vertex,
    y: &Vertex,
    samples: u64,
    steps: u64,
    seed: u64,
) -> Result<IdentityEstimate> {
    let ctx = ClusterContext::new(bc)?;
    let graph = &ctx.graph;
    let weights = Weights::for_graph(graph, w);
    let draws: Vec<Vec<i64>> = if w.is_uniform() {
        cftp_batch(graph, &weights, seed, 2 * samples, CftpOptions::default())?
    } else {
        use rayon::prelude::*;
        (0..2 * samples)
            .into_par_iter()
            .map(|i| glauber_values(graph, &weights, graph.upper.clone(), steps, seed, i))
            .collect()
    };
    let value = |v: &[i64], p: &Vertex| match graph.index.get(p) {
        Some(&j) => v[j] as f64,
        None => bc.reference().value(p) as f64,
    };
    let n = draws.len() as f64;
    let mx = draws.iter().map(|v| value(v, x)).sum::<f64>() / n;
    let my = draws.iter().map(|v| value(v, y)).sum::<f64>() / n;
    let products: Vec<f64> = draws
        .iter()
        .map(|v| (value(v, x) - mx) * (value(v, y) - my))
        .collect();
    let (lhs, lhs_se) = mean_and_se(&products);
    let span = bc.reference().dim().span() as f64;
    let mut rhs_terms = Vec::with_capacity(samples as usize);
    for pair in draws.chunks(2) {
        let lsd = ctx.decompose(&pair[0], &pair[1])?;
        rhs_terms.push(0.5 * span * span * lsd.depth(lsd.meet_vertex(x, y)) as f64);
    }
    let (rhs, rhs_se) = mean_and_se(&rhs_terms);
    Ok(IdentityEstimate {
        lhs,
        lhs_se,
        rhs,
        rhs_se,
    })
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
