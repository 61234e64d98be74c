#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use hyperdimer::regions::FixedBoundary;
use hyperdimer::{Dim, ExactWeights, HeightField, Rational, Region, Slope, Vertex};
use num_bigint::BigInt;
use num_rational::Rational64;
use rand::Rng;

pub fn dim(d: usize) -> Dim {
    Dim::new(d).unwrap()
}

pub fn random_slope(rng: &mut impl Rng, d: Dim) -> Slope {
    let denom = 6;
    loop {
        let mut vals: Vec<Rational64> = (0..d.d())
            .map(|_| Rational64::new(rng.random_range(-(d.d() as i64) * denom..=denom), denom))
            .collect();
        let last = -vals.iter().copied().sum::<Rational64>();
        vals.push(last);
        let s = Slope::new(vals).unwrap();
        if s.in_simplex() {
            return s;
        }
    }
}

/// A connected cluster of `size` vertices grown at random around a start point away from
/// the origin, retried until its complement is connected.
pub fn random_region(rng: &mut impl Rng, d: Dim, size: usize) -> Region {
    loop {
        let start: Vec<i64> = (0..d.d()).map(|_| rng.random_range(2..5)).collect();
        let mut set: BTreeSet<Vertex> = BTreeSet::from([Vertex::from_box_coords(&start)]);
        while set.len() < size {
            let pick = set.iter().nth(rng.random_range(0..set.len())).unwrap().clone();
            let nbrs = pick.neighbors();
            let next = nbrs[rng.random_range(0..nbrs.len())].clone();
            if next != Vertex::origin(d) {
                set.insert(next);
            }
        }
        let region = Region::new(d, set).unwrap();
        if region.has_connected_complement() {
            return region;
        }
    }
}

/// A region with a random floor boundary condition.
pub fn random_boundary(rng: &mut impl Rng, d: Dim, size: usize) -> FixedBoundary {
    let region = random_region(rng, d, size);
    let slope = random_slope(rng, d);
    let offset = Rational64::new(rng.random_range(0..6 * d.span()), 6);
    FixedBoundary::new(region, HeightField::floor_field(slope, offset).unwrap()).unwrap()
}

/// Random positive rational weights on the edges of `E^d(R)`.
pub fn random_weights(rng: &mut impl Rng, region: &Region) -> ExactWeights {
    let mut w = ExactWeights::uniform();
    for e in region.incident_edges() {
        let v = Rational::new(BigInt::from(rng.random_range(1..6)), BigInt::from(rng.random_range(1..5)));
        w.insert(e, v).unwrap();
    }
    w
}

/// Every height function agreeing with `b` off `R`, found by checking all assignments of
/// parity-correct values within `||.||_+` distance bounds of the boundary.
pub fn product_space_oracle(bc: &FixedBoundary) -> BTreeSet<BTreeMap<Vertex, i64>> {
    let b = bc.reference();
    let span = b.dim().span();
    let sites: Vec<Vertex> = bc.region().iter().cloned().collect();
    let boundary: Vec<Vertex> = bc.region().boundary().into_iter().collect();
    let ranges: Vec<Vec<i64>> = sites
        .iter()
        .map(|x| {
            let hi = boundary
                .iter()
                .map(|y| b.value(y) + x.sub(y).plus_norm())
                .min()
                .unwrap();
            let lo = boundary
                .iter()
                .map(|y| b.value(y) - y.sub(x).plus_norm())
                .max()
                .unwrap();
            let mut v = Vec::new();
            let mut t = hi;
            while t >= lo {
                v.push(t);
                t -= span;
            }
            v
        })
        .collect();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; sites.len()];
    loop {
        let mut f = b.clone();
        for (i, x) in sites.iter().enumerate() {
            f.set(x.clone(), ranges[i][idx[i]]);
        }
        let mut check: BTreeSet<Vertex> = sites.iter().cloned().collect();
        check.extend(boundary.iter().cloned());
        if f.validity_on(check.iter()).is_valid() {
            out.insert(sites.iter().map(|x| (x.clone(), f.value(x))).collect());
        }
        let mut k = 0;
        loop {
            if k == sites.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < ranges[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn restrict(f: &HeightField, region: &Region) -> BTreeMap<Vertex, i64> {
    region.iter().map(|x| (x.clone(), f.value(x))).collect()
}
