//! Finite-volume surface tension `σ_n(s) = -n^{-d} log inf_a |Ω(B_n, ⌊s + a⌋)|` from exact
//! counts.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::Result;
use crate::height::{HeightField, Slope};
use crate::lattice::{Region, RegionKind};
use crate::regions::{FixedBoundary, DEFAULT_ENUMERATION_CAP};

/// Natural logarithm of a big integer, accurate to double precision.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64 bits fit");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `-n^{-d} log count`.
pub fn sigma_of_count(count: &BigUint, n: i64, d: usize) -> f64 {
    let volume = (n as f64).powi(d as i32);
    let s = -ln_big(count) / volume;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// `|Ω(B_n, ⌊s + a⌋)|`.
pub fn box_count(s: &Slope, n: i64, offset: Rational64, cap: usize) -> Result<BigUint> {
    let region = Region::make_box(s.dim(), RegionKind::Box, n)?;
    let reference = HeightField::floor_field(s.clone(), offset)?;
    FixedBoundary::new(region, reference)?.count_capped(cap)
}

/// The offsets in `[0, d + 1)` at which `a ↦ ⌊s + a⌋|_{∂B_n}` jumps, together with `0`.
///
/// The boundary values are right-continuous and constant between consecutive breakpoints,
/// and a shift by `d + 1` leaves the count unchanged, so these offsets see every value the
/// count takes.
pub fn breakpoints(s: &Slope, n: i64) -> Result<Vec<Rational64>> {
    let dim = s.dim();
    let span = dim.span();
    let region = Region::make_box(dim, RegionKind::Box, n)?;
    let mut out: BTreeSet<Rational64> = BTreeSet::from([Rational64::zero()]);
    for x in region.boundary() {
        let a = Rational64::from_integer(x.parity()) - s.eval(&x);
        let r = a - (a / span).floor() * span;
        out.insert(r);
    }
    Ok(out.into_iter().collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensionEntry {
    pub n: i64,
    /// The infimum of the counts over all offsets.
    pub count: BigUint,
    pub sigma: f64,
    /// Smallest breakpoint attaining the infimum.
    pub offset: Rational64,
    pub zero_offset_count: BigUint,
    pub zero_offset_sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensionEstimate {
    pub slope: Slope,
    pub entries: Vec<TensionEntry>,
}

impl TensionEstimate {
    pub fn compute(s: &Slope, ns: &[i64], cap: usize) -> Result<Self> {
        let entries = ns
            .iter()
            .map(|&n| sigma_n_capped(s, n, cap))
            .collect::<Result<_>>()?;
        Ok(TensionEstimate {
            slope: s.clone(),
            entries,
        })
    }

    /// Every value lies in `[-log 2, 0]`.
    pub fn in_range(&self) -> bool {
        self.entries.iter().all(|e| in_tension_range(e.sigma))
    }
}

pub fn in_tension_range(sigma: f64) -> bool {
    let tol = 1e-12;
    sigma <= tol && sigma >= -std::f64::consts::LN_2 - tol
}

pub fn sigma_n(s: &Slope, n: i64) -> Result<TensionEntry> {
    sigma_n_capped(s, n, DEFAULT_ENUMERATION_CAP)
}

pub fn sigma_n_capped(s: &Slope, n: i64, cap: usize) -> Result<TensionEntry> {
    let offsets = breakpoints(s, n)?;
    let counts: Vec<BigUint> = offsets
        .par_iter()
        .map(|&a| box_count(s, n, a, cap))
        .collect::<Result<_>>()?;
    let (best, count) = counts
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.cmp(b).then(i.cmp(j)))
        .expect("zero is always a breakpoint");
    let zero = &counts[0];
    let d = s.dim().d();
    Ok(TensionEntry {
        n,
        sigma: sigma_of_count(count, n, d),
        count: count.clone(),
        offset: offsets[best],
        zero_offset_sigma: sigma_of_count(zero, n, d),
        zero_offset_count: zero.clone(),
    })
}

/// `-n^{-d} log |Ω(B_n, ⌊s⌋)|`.
pub fn sigma_zero_offset(s: &Slope, n: i64) -> Result<f64> {
    let count = box_count(s, n, Rational64::zero(), DEFAULT_ENUMERATION_CAP)?;
    Ok(sigma_of_count(&count, n, s.dim().d()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupermultiplicativeReport {
    pub n: i64,
    pub k: i64,
    pub count_n: BigUint,
    pub count_kn: BigUint,
    /// `count_n^{k^d}`.
    pub power: BigUint,
    /// `count_kn >= count_n^{k^d}`, i.e. `σ_{kn} <= σ_n`.
    pub holds: bool,
    pub equal: bool,
}

pub fn check_supermultiplicative(s: &Slope, n: i64, k: i64) -> Result<SupermultiplicativeReport> {
    let a = sigma_n(s, n)?;
    let b = sigma_n(s, k * n)?;
    let exponent = (k as u32).pow(s.dim().d() as u32);
    let power = a.count.pow(exponent);
    Ok(SupermultiplicativeReport {
        n,
        k,
        holds: b.count >= power,
        equal: b.count == power,
        count_n: a.count,
        count_kn: b.count,
        power,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MidpointReport {
    pub n: i64,
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub sigma_mid: f64,
    /// `(σ_n(s_1) + σ_n(s_2)) / 2 - σ_n((s_1 + s_2) / 2)`; positive when the midpoint is
    /// below the chord.
    pub gap: f64,
}

pub fn midpoint_convexity_probe(s1: &Slope, s2: &Slope, n: i64) -> Result<MidpointReport> {
    let mid = s1.midpoint(s2);
    let sigma_1 = sigma_n(s1, n)?.sigma;
    let sigma_2 = sigma_n(s2, n)?.sigma;
    let sigma_mid = sigma_n(&mid, n)?.sigma;
    Ok(MidpointReport {
        n,
        sigma_1,
        sigma_2,
        sigma_mid,
        gap: 0.5 * (sigma_1 + sigma_2) - sigma_mid,
    })
}
