//! Heat-bath Glauber dynamics, monotone coupling and coupling from the past.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::height::HeightField;
use crate::lattice::Vertex;
use crate::regions::{FixedBoundary, PeriodicBoundary, RegionGraph, TorusState, WeightFunction};
use crate::scalar::Scalar;

/// 32-bit words of the generator consumed by each step.
const WORDS_PER_STEP: u128 = 4;

/// A stream of `(site, u)` draws keyed by `(seed, stream, step)`: the draw for a given step
/// does not depend on how many other draws were made before it.
#[derive(Clone, Debug)]
pub struct SharedRandomness {
    rng: ChaCha8Rng,
    next_step: u64,
}

impl SharedRandomness {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SharedRandomness { rng, next_step: 0 }
    }

    /// The site (uniform in `0..sites`) and uniform `u ∈ [0, 1)` of step `step`.
    pub fn draw(&mut self, step: u64, sites: usize) -> (usize, f64) {
        if step != self.next_step {
            self.rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        }
        self.next_step = step + 1;
        let a = (self.rng.next_u32() as u64) << 32 | self.rng.next_u32() as u64;
        let b = (self.rng.next_u32() as u64) << 32 | self.rng.next_u32() as u64;
        let site = ((a as u128 * sites as u128) >> 64) as usize;
        let u = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (site, u)
    }
}

/// Per-edge weights in the form the kernels use.
#[derive(Clone, Debug)]
pub enum Weights {
    Uniform,
    Edges(Vec<f64>),
}

impl Weights {
    pub fn for_graph<W: Scalar>(graph: &RegionGraph, w: &WeightFunction<W>) -> Self {
        if w.is_uniform() {
            Weights::Uniform
        } else {
            Weights::Edges(
                w.on_edges(&graph.edges)
                    .iter()
                    .map(|x| x.to_f64_lossy())
                    .collect(),
            )
        }
    }
}

/// Product of the weights of the tiling edges at site `j` if it takes the value `v`.
fn local_mass<W: Scalar>(graph: &RegionGraph, weights: &[W], values: &[i64], j: usize, v: i64) -> W {
    let d = graph.dim.d() as i64;
    let mut m = W::one();
    for s in &graph.out_slots[j] {
        if s.nbr.value(values) - v == -d {
            m = m * weights[s.edge].clone();
        }
    }
    for s in &graph.in_slots[j] {
        if v - s.nbr.value(values) == -d {
            m = m * weights[s.edge].clone();
        }
    }
    m
}

/// The conditional law at site `j`: allowed values with their exact probabilities.
pub fn heat_bath_kernel<W: Scalar>(
    graph: &RegionGraph,
    weights: &[W],
    values: &[i64],
    j: usize,
) -> Vec<(i64, W)> {
    let (first, count) = graph.allowed(j, values, usize::MAX);
    let span = graph.dim.span();
    let masses: Vec<(i64, W)> = (0..count)
        .map(|k| {
            let v = first + k * span;
            (v, local_mass(graph, weights, values, j, v))
        })
        .collect();
    let total = masses.iter().fold(W::zero(), |a, (_, m)| a + m.clone());
    masses
        .into_iter()
        .map(|(v, m)| (v, m / total.clone()))
        .collect()
}

/// Resamples site `j`; with two candidates the high one is taken iff `u < p_high`.
#[inline]
pub fn heat_bath_step(graph: &RegionGraph, weights: &Weights, values: &mut [i64], j: usize, u: f64) {
    let (first, count) = graph.allowed(j, values, usize::MAX);
    debug_assert!(count >= 1 && count <= 2, "site {j} has {count} allowed values");
    if count < 2 {
        values[j] = first;
        return;
    }
    let high = first + graph.dim.span();
    let p_high = match weights {
        Weights::Uniform => 0.5,
        Weights::Edges(w) => {
            let lo = local_mass(graph, w, values, j, first);
            let hi = local_mass(graph, w, values, j, high);
            hi / (lo + hi)
        }
    };
    values[j] = if u < p_high { high } else { first };
}

/// `steps` heat-bath updates from `f^+`, driven by stream 0 of `seed`.
pub fn glauber_run<W: Scalar>(
    bc: &FixedBoundary,
    w: &WeightFunction<W>,
    steps: u64,
    seed: u64,
) -> HeightField {
    let graph = bc.graph();
    let values = glauber_values(&graph, &Weights::for_graph(&graph, w), graph.upper.clone(), steps, seed, 0);
    bc.field_from_values(&graph, &values)
}

pub fn glauber_values(
    graph: &RegionGraph,
    weights: &Weights,
    mut values: Vec<i64>,
    steps: u64,
    seed: u64,
    stream: u64,
) -> Vec<i64> {
    if graph.is_empty() {
        return values;
    }
    let mut rng = SharedRandomness::new(seed, stream);
    for t in 0..steps {
        let (j, u) = rng.draw(t, graph.len());
        heat_bath_step(graph, weights, &mut values, j, u);
    }
    values
}

/// `a_- = min (b_1 - b_2)` and `a_+ = max (b_1 - b_2)` over `∂R`.
pub fn boundary_difference_range(bc1: &FixedBoundary, bc2: &FixedBoundary) -> Option<(i64, i64)> {
    let diffs: Vec<i64> = bc1
        .region()
        .boundary()
        .iter()
        .map(|y| bc1.reference().value(y) - bc2.reference().value(y))
        .collect();
    Some((*diffs.iter().min()?, *diffs.iter().max()?))
}

/// Runs two chains on the same region with shared randomness, both started from their
/// maximal fields, and checks `a_- <= f_1 - f_2 <= a_+` after every step.
pub fn coupled_run<W: Scalar>(
    bc1: &FixedBoundary,
    bc2: &FixedBoundary,
    w: &WeightFunction<W>,
    steps: u64,
    seed: u64,
) -> Result<(HeightField, HeightField)> {
    if bc1.region() != bc2.region() {
        return Err(Error::Invalid("coupled chains need the same region".into()));
    }
    let g1 = bc1.graph();
    let g2 = bc2.graph();
    let w1 = Weights::for_graph(&g1, w);
    let w2 = Weights::for_graph(&g2, w);
    let mut v1 = g1.upper.clone();
    let mut v2 = g2.upper.clone();
    let Some((a_lo, a_hi)) = boundary_difference_range(bc1, bc2) else {
        return Ok((bc1.reference().clone(), bc2.reference().clone()));
    };
    let mut rng = SharedRandomness::new(seed, 0);
    for t in 0..steps {
        let (j, u) = rng.draw(t, g1.len());
        heat_bath_step(&g1, &w1, &mut v1, j, u);
        heat_bath_step(&g2, &w2, &mut v2, j, u);
        let diff = v1[j] - v2[j];
        if diff < a_lo || diff > a_hi {
            return Err(Error::CouplingViolation {
                step: t,
                detail: format!(
                    "f1 - f2 = {diff} at {:?} outside [{a_lo}, {a_hi}]",
                    g1.sites[j]
                ),
            });
        }
    }
    Ok((bc1.field_from_values(&g1, &v1), bc2.field_from_values(&g2, &v2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CftpOptions {
    /// Give up once the chains have been run from this far back.
    pub max_steps: u64,
    /// Allow non-uniform weights; monotonicity is then checked at every step.
    pub weighted_experimental: bool,
}

impl Default for CftpOptions {
    fn default() -> Self {
        CftpOptions {
            max_steps: 1 << 26,
            weighted_experimental: false,
        }
    }
}

/// One exact sample from `Ω(R, b)` by coupling from the past, using stream `stream`.
pub fn cftp_values(
    graph: &RegionGraph,
    weights: &Weights,
    seed: u64,
    stream: u64,
    opts: CftpOptions,
) -> Result<Vec<i64>> {
    if matches!(weights, Weights::Edges(_)) && !opts.weighted_experimental {
        return Err(Error::Invalid(
            "coupling from the past needs uniform weights unless the experimental flag is set".into(),
        ));
    }
    if graph.is_empty() {
        return Ok(Vec::new());
    }
    let mut rng = SharedRandomness::new(seed, stream);
    // draws[t] drives the update at time -(t + 1)
    let mut draws: Vec<(usize, f64)> = Vec::new();
    let mut horizon = (graph.len() as u64).next_power_of_two();
    loop {
        while (draws.len() as u64) < horizon {
            let t = draws.len() as u64;
            draws.push(rng.draw(t, graph.len()));
        }
        let mut upper = graph.upper.clone();
        let mut lower = graph.lower.clone();
        for (step, &(j, u)) in draws[..horizon as usize].iter().enumerate().rev() {
            heat_bath_step(graph, weights, &mut upper, j, u);
            heat_bath_step(graph, weights, &mut lower, j, u);
            if lower[j] > upper[j] {
                return Err(Error::CouplingViolation {
                    step: step as u64,
                    detail: format!("lower chain above upper chain at {:?}", graph.sites[j]),
                });
            }
        }
        if upper == lower {
            return Ok(upper);
        }
        if horizon >= opts.max_steps {
            return Err(Error::NoCoalescence(horizon));
        }
        horizon *= 2;
    }
}

pub fn cftp_sample<W: Scalar>(
    bc: &FixedBoundary,
    w: &WeightFunction<W>,
    seed: u64,
    opts: CftpOptions,
) -> Result<HeightField> {
    let graph = bc.graph();
    let values = cftp_values(&graph, &Weights::for_graph(&graph, w), seed, 0, opts)?;
    Ok(bc.field_from_values(&graph, &values))
}

/// `count` independent exact samples; sample `i` uses stream `i`, so the output does not
/// depend on the number of worker threads.
pub fn cftp_batch(
    graph: &RegionGraph,
    weights: &Weights,
    seed: u64,
    count: u64,
    opts: CftpOptions,
) -> Result<Vec<Vec<i64>>> {
    (0..count)
        .into_par_iter()
        .map(|i| cftp_values(graph, weights, seed, i, opts))
        .collect()
}

/// Heat-bath dynamics on the torus, from `⌊s⌋`.
pub fn periodic_glauber(pbc: &PeriodicBoundary, steps: u64, seed: u64) -> Result<TorusState> {
    let start = TorusState::new(pbc.clone())?;
    let graph = RegionGraph::from_torus(pbc);
    let values = glauber_values(&graph, &Weights::Uniform, start.values().to_vec(), steps, seed, 0);
    TorusState::from_values(pbc.clone(), values)
}

/// Empirical means of `f(x) - f(0)` on the torus with batch-means standard errors.
#[derive(Clone, Debug)]
pub struct TorusMeanReport {
    pub samples: u64,
    pub sites: Vec<Vertex>,
    /// Expected value `s(x)`.
    pub expected: Vec<f64>,
    pub mean: Vec<f64>,
    pub standard_error: Vec<f64>,
}

impl TorusMeanReport {
    /// Largest `|mean - s(x)| / se` over the sites with positive standard error.
    pub fn max_z(&self) -> f64 {
        self.mean
            .iter()
            .zip(&self.expected)
            .zip(&self.standard_error)
            .filter(|(_, se)| **se > 0.0)
            .map(|((m, e), se)| (m - e).abs() / se)
            .fold(0.0, f64::max)
    }
}

/// Records `f(x) - f(0)` every `thin` sweeps after `burnin` sweeps, where a sweep is one
/// update per site on average.
pub fn periodic_mean_check(
    pbc: &PeriodicBoundary,
    burnin: u64,
    samples: u64,
    thin: u64,
    batches: u64,
    seed: u64,
) -> Result<TorusMeanReport> {
    let start = TorusState::new(pbc.clone())?;
    let graph = RegionGraph::from_torus(pbc);
    let n = graph.len();
    let mut values = start.values().to_vec();
    let mut rng = SharedRandomness::new(seed, 0);
    let mut t = 0u64;
    let mut sweep = |values: &mut Vec<i64>, t: &mut u64| {
        for _ in 0..n {
            let (j, u) = rng.draw(*t, n);
            heat_bath_step(&graph, &Weights::Uniform, values, j, u);
            *t += 1;
        }
    };
    for _ in 0..burnin {
        sweep(&mut values, &mut t);
    }
    let batch_len = (samples / batches).max(1);
    let mut batch_sums = vec![vec![0f64; n]; batches as usize];
    for k in 0..samples {
        for _ in 0..thin {
            sweep(&mut values, &mut t);
        }
        let b = ((k / batch_len) as usize).min(batches as usize - 1);
        let f0 = values[0];
        for (acc, v) in batch_sums[b].iter_mut().zip(&values) {
            *acc += (v - f0) as f64;
        }
    }
    let sizes: Vec<f64> = (0..batches)
        .map(|b| {
            let lo = b * batch_len;
            let hi = if b + 1 == batches { samples } else { (b + 1) * batch_len };
            hi.saturating_sub(lo) as f64
        })
        .collect();
    let mut mean = vec![0f64; n];
    let mut standard_error = vec![0f64; n];
    for x in 0..n {
        let batch_means: Vec<f64> = batch_sums
            .iter()
            .zip(&sizes)
            .map(|(s, &len)| s[x] / len)
            .collect();
        let m = batch_sums.iter().map(|s| s[x]).sum::<f64>() / samples as f64;
        let var = batch_means.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
        mean[x] = m;
        standard_error[x] = (var / batches as f64).sqrt();
    }
    let expected = graph
        .sites
        .iter()
        .map(|x| {
            let s = pbc.slope().eval(x);
            *s.numer() as f64 / *s.denom() as f64
        })
        .collect();
    Ok(TorusMeanReport {
        samples,
        sites: graph.sites.clone(),
        expected,
        mean,
        standard_error,
    })
}

/// Empirical variance of `f(x)` against `(d + 1)^2 d(x, R^∁)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceBoundReport {
    pub variance: f64,
    pub standard_error: f64,
    pub bound: f64,
    /// The variance exceeds the bound by more than three standard errors.
    pub violated: bool,
}

pub fn empirical_variance_bound_check(
    bc: &FixedBoundary,
    samples: &[i64],
    x: &Vertex,
) -> VarianceBoundReport {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&v| v as f64).sum::<f64>() / n;
    let m2 = samples.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|&v| (v as f64 - mean).powi(4)).sum::<f64>() / n;
    let variance = m2 * n / (n - 1.0).max(1.0);
    let standard_error = ((m4 - m2 * m2).max(0.0) / n).sqrt();
    let span = bc.reference().dim().span() as f64;
    let bound = span * span * bc.region().distance_to_complement(x) as f64;
    VarianceBoundReport {
        variance,
        standard_error,
        bound,
        violated: variance > bound + 3.0 * standard_error,
    }
}

/// Pearson's goodness-of-fit test against the uniform law on `counts.len()` cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareReport {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

pub fn chi_square_uniform(counts: &[u64]) -> ChiSquareReport {
    let total: u64 = counts.iter().sum();
    let k = counts.len();
    let expected = total as f64 / k as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = k.saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    ChiSquareReport {
        statistic,
        dof,
        p_value,
    }
}
