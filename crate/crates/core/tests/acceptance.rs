//! The acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p hyperdimer --test acceptance`.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use hyperdimer::cluster::{covariance_identities, ClusterContext, SwapMask};
use hyperdimer::height::{phi, phi_inv};
use hyperdimer::kasteleyn::{build_index_sets, verify_kasteleyn};
use hyperdimer::regions::{FixedBoundary, PeriodicBoundary};
use hyperdimer::sampler::{
    cftp_batch, chi_square_uniform, coupled_run, empirical_variance_bound_check, glauber_values,
    periodic_mean_check, CftpOptions, Weights,
};
use hyperdimer::tension::{check_supermultiplicative, midpoint_convexity_probe, sigma_n};
use hyperdimer::{
    Dim, Error, ExactWeights, HeightField, Rational, Region, RegionKind, Slope, Vertex,
};
use num_bigint::BigUint;
use num_rational::Rational64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn box_bc(d: usize, n: i64) -> FixedBoundary {
    let dim = common::dim(d);
    FixedBoundary::new(Region::make_box(dim, RegionKind::Box, n).unwrap(), HeightField::flat(dim)).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_secs: u64, detail: String) -> Outcome {
    if elapsed.as_secs() >= limit_secs {
        Err(format!("{detail}; took {elapsed:.1?}, limit {limit_secs}s"))
    } else {
        Ok(format!("{detail}; {elapsed:.1?}"))
    }
}

fn bijection() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    for (d, n) in [(2, 4), (3, 3)] {
        let bc = box_bc(d, n);
        let all = bc.enumerate().map_err(|e| e.to_string())?;
        let oracle = common::product_space_oracle(&bc).len();
        if all.len() != oracle {
            return Err(format!("d={d}: enumeration {} vs oracle {oracle}", all.len()));
        }
        let mut tilings = BTreeSet::new();
        for f in &all {
            let (a, t) = phi(f).map_err(|e| e.to_string())?;
            if phi_inv(a, &t).map_err(|e| e.to_string())? != *f {
                return Err(format!("d={d}: round trip failed"));
            }
            tilings.insert(format!("{:?}", t.edges()));
        }
        if tilings.len() != all.len() {
            return Err(format!("d={d}: distinct fields share a tiling"));
        }
        details.push(format!("d={d} B_{n}: {} fields", all.len()));
    }
    within(start.elapsed(), 60, details.join(", "))
}

fn kasteleyn_planar() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let (mut done, mut largest) = (0, 0);
    while done < 60 {
        let size = rng.random_range(1..=5);
        let bc = common::random_boundary(&mut rng, common::dim(2), size);
        let w = common::random_weights(&mut rng, bc.region());
        let r = match verify_kasteleyn(&bc, &w) {
            Ok(r) => r,
            Err(e) if e.is_cap() => continue,
            Err(e) => return Err(e.to_string()),
        };
        if r.n > 8 {
            continue;
        }
        if !r.equal || !r.det.sign_uniform() {
            return Err(format!("instance {done}: Z = {}, Det = {}", r.z, r.det.value));
        }
        largest = largest.max(r.n);
        done += 1;
    }
    within(start.elapsed(), 120, format!("{done} instances, n up to {largest}, |Det K| = Z and one sign"))
}

fn kasteleyn_3d() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(77);
    let mut done = 0;
    let mut sizes = BTreeSet::new();
    let mut attempts = 0;
    while done < 12 && attempts < 500 {
        attempts += 1;
        let size = 1 + done % 2;
        let bc = common::random_boundary(&mut rng, common::dim(3), size);
        let n = build_index_sets(&bc).map_err(|e| e.to_string())?[0].len();
        if n == 0 || n > 4 {
            continue;
        }
        let r = verify_kasteleyn(&bc, &ExactWeights::uniform()).map_err(|e| e.to_string())?;
        let count = Rational::from(num_bigint::BigInt::from(r.count.clone()));
        let magnitude = if r.det.value < Rational::from_integer(0.into()) {
            -r.det.value.clone()
        } else {
            r.det.value.clone()
        };
        if magnitude != count {
            return Err(format!("|R| = {size}: |Det| = {magnitude}, count = {}", r.count));
        }
        sizes.insert(r.n);
        done += 1;
    }
    check(done == 12, format!("{done} instances with n in {sizes:?}"))
        .and_then(|d| within(start.elapsed(), 300, d))
}

/// Random enumerable instances with at least two elements.
fn identity_instances(rng: &mut StdRng, count: usize) -> Vec<(FixedBoundary, ExactWeights)> {
    let mut out = Vec::new();
    while out.len() < count {
        let d = if out.len() % 2 == 0 { 2 } else { 3 };
        let size = if d == 2 { rng.random_range(3..=6) } else { rng.random_range(2..=4) };
        let bc = common::random_boundary(rng, common::dim(d), size);
        let n = bc.count().unwrap();
        if n < BigUint::from(2u32) || n > BigUint::from(150u32) {
            continue;
        }
        let w = if out.len() % 4 < 2 {
            ExactWeights::uniform()
        } else {
            common::random_weights(rng, bc.region())
        };
        out.push((bc, w));
    }
    out
}

fn variance_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(99);
    let mut checked = 0;
    for (bc, w) in identity_instances(&mut rng, 24) {
        let points: Vec<(Vertex, Vertex)> = bc.region().iter().map(|x| (x.clone(), x.clone())).collect();
        for r in covariance_identities(&bc, &w, &points, 24).map_err(|e| e.to_string())? {
            if !r.equal {
                return Err(format!("Var f({:?}) = {} but rhs = {}", r.x, r.lhs, r.rhs));
            }
            checked += 1;
        }
    }
    within(start.elapsed(), 300, format!("24 instances, {checked} sites, exact equality"))
}

fn covariance_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(100);
    let mut checked = 0;
    for (bc, w) in identity_instances(&mut rng, 24) {
        let sites: Vec<Vertex> = bc.region().iter().cloned().collect();
        let mut points = Vec::new();
        for k in 0..4 {
            let x = sites[k % sites.len()].clone();
            let y = sites[(k * 3 + 1) % sites.len()].clone();
            points.push((x, y));
        }
        // one point outside the region, where f is fixed
        points.push((sites[0].clone(), sites[0].step(0, 5)));
        for r in covariance_identities(&bc, &w, &points, 24).map_err(|e| e.to_string())? {
            if !r.equal {
                return Err(format!("Cov({:?}, {:?}) = {} but rhs = {}", r.x, r.y, r.lhs, r.rhs));
            }
            checked += 1;
        }
    }
    within(start.elapsed(), 300, format!("24 instances, {checked} pairs, exact equality"))
}

fn swap_invariants() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut violations = Vec::new();
    let mut swaps = 0;
    let mut boundaries = 0;
    for (d, n) in [(2, 6), (3, 4)] {
        let bc = box_bc(d, n);
        let ctx = ClusterContext::new(&bc).map_err(|e| e.to_string())?;
        let graph = ctx.graph().clone();
        let samples =
            cftp_batch(&graph, &Weights::Uniform, 31 + d as u64, 1000, CftpOptions::default()).map_err(|e| e.to_string())?;
        let window: Vec<Vertex> = bc.region().iter().cloned().chain(bc.region().boundary()).collect();
        for _ in 0..5000 {
            let f1 = bc.field_from_values(&graph, &samples[rng.random_range(0..samples.len())]);
            let f2 = bc.field_from_values(&graph, &samples[rng.random_range(0..samples.len())]);
            let lsd = ctx.build_lsd(&f1, &f2).map_err(|e| e.to_string())?;
            boundaries += lsd.boundaries.len();
            let mask = SwapMask::random(&lsd, &mut rng);
            let (g1, g2) = ctx.swap(&f1, &f2, &mask).map_err(|e| e.to_string())?;
            swaps += 1;
            if window.iter().any(|x| g1.value(x) + g2.value(x) != f1.value(x) + f2.value(x)) {
                violations.push("sum changed");
            }
            if !bc.contains(&g1) || !bc.contains(&g2) {
                violations.push("invalid output");
            }
            let lsd2 = ctx.build_lsd(&g1, &g2).map_err(|e| e.to_string())?;
            if lsd2.unoriented() != lsd.unoriented() {
                violations.push("tree changed");
            }
            let edges: BTreeSet<_> = mask
                .selected
                .iter()
                .flat_map(|&b| lsd.boundaries[b].edges.iter().map(|&i| graph.edges[i].clone()))
                .collect();
            let back = SwapMask::from_edges(&lsd2, &edges).map_err(|e| e.to_string())?;
            if ctx.swap(&g1, &g2, &back).map_err(|e| e.to_string())? != (f1, f2) {
                violations.push("swap twice is not the identity");
            }
        }
    }
    check(
        violations.is_empty(),
        match violations.first() {
            None => format!("{swaps} swaps, {boundaries} boundaries seen, 0 violations"),
            Some(v) => format!("{swaps} swaps, {} violations, first: {v:?}", violations.len()),
        },
    )
}

/// Uniformity of CFTP samples; the samples also feed the variance-bound check.
fn cftp_uniformity(samples_out: &mut Vec<(FixedBoundary, Vec<Vec<i64>>)>) -> Outcome {
    let start = Instant::now();
    let dim2 = common::dim(2);
    let skew = FixedBoundary::new(
        Region::make_box(dim2, RegionKind::Box, 5).unwrap(),
        HeightField::floor_field(
            Slope::new(vec![Rational64::new(1, 2), Rational64::new(-1, 4), Rational64::new(-1, 4)]).unwrap(),
            Rational64::new(1, 1),
        )
        .unwrap(),
    )
    .unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, bc) in [box_bc(2, 4), box_bc(3, 3), skew].into_iter().enumerate() {
        let (graph, all) = bc.enumerate_values(24).map_err(|e| e.to_string())?;
        if !(10..=60).contains(&all.len()) {
            return Err(format!("region {i} has {} elements", all.len()));
        }
        let index: HashMap<&Vec<i64>, usize> = all.iter().enumerate().map(|(k, v)| (v, k)).collect();
        let samples = cftp_batch(&graph, &Weights::Uniform, 1000 + i as u64, 100_000, CftpOptions::default())
            .map_err(|e| e.to_string())?;
        let mut counts = vec![0u64; all.len()];
        for s in &samples {
            counts[*index.get(s).ok_or("sample outside Ω")?] += 1;
        }
        let r = chi_square_uniform(&counts);
        ok &= r.passes(0.01);
        lines.push(format!("|Ω| = {} p = {:.3}", all.len(), r.p_value));
        samples_out.push((bc, samples));
    }
    check(ok, lines.join(", ")).and_then(|d| within(start.elapsed(), 600, d))
}

fn monotone_coupling() -> Outcome {
    let dim = common::dim(2);
    let region = Region::make_box(dim, RegionKind::Box, 7).unwrap();
    let slope = Slope::new(vec![Rational64::new(1, 2), Rational64::new(-1, 4), Rational64::new(-1, 4)]).unwrap();
    let lower = FixedBoundary::new(region.clone(), HeightField::floor_field(slope.clone(), Rational64::new(0, 1)).unwrap())
        .unwrap();
    let upper = FixedBoundary::new(region, HeightField::floor_field(slope, Rational64::new(7, 2)).unwrap()).unwrap();
    let mut steps = 0u64;
    for (k, (a, b)) in [(&upper, &lower), (&lower, &upper)].into_iter().enumerate() {
        match coupled_run(a, b, &ExactWeights::uniform(), 100_000, 17 + k as u64) {
            Ok(_) => steps += 100_000,
            Err(Error::CouplingViolation { step, detail }) => return Err(format!("step {step}: {detail}")),
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(format!("{steps} coupled steps, zero violations"))
}

fn variance_bound(samples: &[(FixedBoundary, Vec<Vec<i64>>)]) -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut experiments: Vec<(FixedBoundary, Vec<Vec<i64>>)> = samples.to_vec();
    // weighted Glauber chains on a larger box
    let bc = box_bc(2, 6);
    let graph = bc.graph();
    let w = common::random_weights(&mut rng, bc.region());
    let weights = Weights::for_graph(&graph, &w);
    let chains: Vec<Vec<i64>> = (0..4000)
        .map(|i| glauber_values(&graph, &weights, graph.upper.clone(), 20_000, 8, i))
        .collect();
    experiments.push((bc, chains));
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    for (bc, draws) in &experiments {
        let graph = bc.graph();
        for (j, x) in graph.sites.iter().enumerate() {
            let values: Vec<i64> = draws.iter().map(|v| v[j]).collect();
            let r = empirical_variance_bound_check(bc, &values, x);
            if r.violated {
                return Err(format!("Var f({x:?}) = {:.3} > {} + 3 se", r.variance, r.bound));
            }
            worst = worst.max(r.variance / r.bound);
            checked += 1;
        }
    }
    Ok(format!("{checked} sites in {} experiments, largest Var / bound = {worst:.3}", experiments.len()))
}

fn surface_tension() -> Outcome {
    let dim = common::dim(2);
    let mut lines = Vec::new();
    let mut in_range = true;
    for s in [Slope::zero(dim), Slope::new(vec![Rational64::new(1, 3), Rational64::new(-1, 6), Rational64::new(-1, 6)]).unwrap()] {
        for n in 2..=5 {
            let e = sigma_n(&s, n).map_err(|e| e.to_string())?;
            in_range &= e.sigma <= 0.0 && e.sigma >= -std::f64::consts::LN_2;
        }
    }
    for s in [Slope::zero(common::dim(3))] {
        for n in 2..=3 {
            let e = sigma_n(&s, n).map_err(|e| e.to_string())?;
            in_range &= e.sigma <= 0.0 && e.sigma >= -std::f64::consts::LN_2;
        }
    }
    lines.push(format!("range {}", if in_range { "ok" } else { "violated" }));
    let r = check_supermultiplicative(&Slope::zero(dim), 2, 2).map_err(|e| e.to_string())?;
    lines.push(format!("count(B_4) = {} >= count(B_2)^4 = {}", r.count_kn, r.power));
    let mut frozen = true;
    for i in 0..3 {
        for n in 2..=5 {
            frozen &= sigma_n(&Slope::extreme(dim, i), n).map_err(|e| e.to_string())?.count == BigUint::from(1u32);
        }
    }
    lines.push(format!("extreme slopes frozen: {frozen}"));
    let half = Rational64::new(1, 2);
    let quarter = Rational64::new(1, 4);
    let s1 = Slope::new(vec![half, -quarter, -quarter]).unwrap();
    let s2 = Slope::new(vec![-half, quarter, quarter]).unwrap();
    let m = midpoint_convexity_probe(&s1, &s2, 4).map_err(|e| e.to_string())?;
    lines.push(format!(
        "midpoint probe n=4: σ(s1) = {:.4}, σ(s2) = {:.4}, σ(mid) = {:.4}, gap = {:.4}",
        m.sigma_1, m.sigma_2, m.sigma_mid, m.gap
    ));
    check(in_range && r.holds && frozen, lines.join("; "))
}

fn periodic_mean() -> Outcome {
    let start = Instant::now();
    let pbc = PeriodicBoundary::new(3, Slope::zero(Dim::new(2).unwrap())).map_err(|e| e.to_string())?;
    let r = periodic_mean_check(&pbc, 2_000, 100_000, 1, 50, 2718).map_err(|e| e.to_string())?;
    let z = r.max_z();
    check(z <= 3.0, format!("{} samples on {} sites, max |mean| / se = {z:.2}", r.samples, r.sites.len()))
        .and_then(|d| within(start.elapsed(), 600, d))
}

fn main() {
    let mut sampler_draws = Vec::new();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 bijection", bijection()),
        ("2 kasteleyn d=2", kasteleyn_planar()),
        ("3 kasteleyn d=3", kasteleyn_3d()),
        ("4 variance identity", variance_identity()),
        ("5 covariance identity", covariance_identity()),
        ("6 swap invariants", swap_invariants()),
        ("7 cftp uniformity", cftp_uniformity(&mut sampler_draws)),
        ("8 monotone coupling", monotone_coupling()),
        ("9 variance bound", variance_bound(&sampler_draws)),
        ("10 surface tension", surface_tension()),
        ("11 periodic mean", periodic_mean()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
