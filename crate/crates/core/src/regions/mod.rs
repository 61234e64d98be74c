//! Fixed and periodic boundary conditions, enumeration and partition functions.

mod graph;
mod periodic;
mod weights;

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::height::HeightField;
use crate::lattice::{Region, Vertex};
use crate::scalar::Scalar;

pub use graph::{Nbr, RegionGraph, Slot};
pub use periodic::{PeriodicBoundary, TorusState};
pub use weights::WeightFunction;

/// Default bound on the number of free vertices for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// `Ω(R, b)`: height functions equal to `b` off the finite set `R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedBoundary {
    region: Region,
    reference: HeightField,
}

impl FixedBoundary {
    /// Checks that `b` is a height function on `R ∪ ∂R` and on its own override window.
    pub fn new(region: Region, reference: HeightField) -> Result<Self> {
        if region.dim() != reference.dim() {
            return Err(Error::LengthMismatch {
                expected: reference.dim().coords(),
                found: region.dim().coords(),
            });
        }
        let mut check = reference.window();
        check.extend(region.iter().cloned());
        check.extend(region.boundary());
        let validity = reference.validity_on(&check);
        if !validity.is_valid() {
            return Err(Error::NotHeightFunction(format!("{validity:?}")));
        }
        Ok(FixedBoundary { region, reference })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn reference(&self) -> &HeightField {
        &self.reference
    }

    /// Same region, reference shifted by `k (d + 1)`.
    pub fn shifted(&self, k: i64) -> FixedBoundary {
        FixedBoundary {
            region: self.region.clone(),
            reference: self.reference.shifted(k),
        }
    }

    fn with_values(&self, values: impl Fn(&Vertex) -> i64) -> HeightField {
        let mut f = self.reference.clone();
        for x in self.region.iter() {
            f.set(x.clone(), values(x));
        }
        f
    }

    /// `f^+`, the largest element of `Ω(R, b)`.
    pub fn extremal_max(&self) -> HeightField {
        let boundary: Vec<(Vertex, i64)> = self
            .region
            .boundary()
            .into_iter()
            .map(|y| {
                let v = self.reference.value(&y);
                (y, v)
            })
            .collect();
        self.with_values(|x| {
            boundary
                .iter()
                .map(|(y, b)| b + x.sub(y).plus_norm())
                .min()
                .expect("a finite nonempty region has a boundary")
        })
    }

    /// `f^-`, the smallest element of `Ω(R, b)`.
    pub fn extremal_min(&self) -> HeightField {
        let boundary: Vec<(Vertex, i64)> = self
            .region
            .boundary()
            .into_iter()
            .map(|y| {
                let v = self.reference.value(&y);
                (y, v)
            })
            .collect();
        self.with_values(|x| {
            boundary
                .iter()
                .map(|(y, b)| b - y.sub(x).plus_norm())
                .max()
                .expect("a finite nonempty region has a boundary")
        })
    }

    pub fn graph(&self) -> RegionGraph {
        RegionGraph::from_fixed(self)
    }

    /// The element of `Ω(R, b)` with the given site values (in [`RegionGraph`] order).
    pub fn field_from_values(&self, graph: &RegionGraph, values: &[i64]) -> HeightField {
        let mut f = self.reference.clone();
        for (x, &v) in graph.sites.iter().zip(values) {
            f.set(x.clone(), v);
        }
        f
    }

    /// Site values of `f` in [`RegionGraph`] order.
    pub fn values_of(&self, graph: &RegionGraph, f: &HeightField) -> Vec<i64> {
        graph.sites.iter().map(|x| f.value(x)).collect()
    }

    /// Whether `f` lies in `Ω(R, b)`.
    pub fn contains(&self, f: &HeightField) -> bool {
        if f.background() != self.reference.background() {
            return false;
        }
        let off_region = f
            .overrides()
            .keys()
            .chain(self.reference.overrides().keys())
            .filter(|x| !self.region.contains(x))
            .all(|x| f.value(x) == self.reference.value(x));
        off_region
            && f.validity_on(self.region.iter().chain(self.region.boundary().iter()))
                .is_valid()
    }

    fn checked_graph(&self, cap: usize) -> Result<RegionGraph> {
        let graph = self.graph();
        let free = graph.free_count();
        if free > cap {
            return Err(Error::EnumerationCap { free, cap });
        }
        Ok(graph)
    }

    /// All of `Ω(R, b)`, lexicographic in the site values.
    pub fn enumerate(&self) -> Result<Vec<HeightField>> {
        self.enumerate_capped(DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_capped(&self, cap: usize) -> Result<Vec<HeightField>> {
        let graph = self.checked_graph(cap)?;
        let mut out = Vec::new();
        graph.for_each(|values| out.push(self.field_from_values(&graph, values)));
        Ok(out)
    }

    /// Site-value vectors of all of `Ω(R, b)`, in enumeration order.
    pub fn enumerate_values(&self, cap: usize) -> Result<(RegionGraph, Vec<Vec<i64>>)> {
        let graph = self.checked_graph(cap)?;
        let mut out = Vec::new();
        graph.for_each(|values| out.push(values.to_vec()));
        Ok((graph, out))
    }

    /// `|Ω(R, b)|`.
    pub fn count(&self) -> Result<BigUint> {
        self.count_capped(DEFAULT_ENUMERATION_CAP)
    }

    pub fn count_capped(&self, cap: usize) -> Result<BigUint> {
        Ok(BigUint::from(self.checked_graph(cap)?.count()))
    }

    /// Unnormalised Boltzmann mass: the product of `w(e)` over `T(g) ∩ E^d(R)`.
    pub fn boltzmann_mass<W: Scalar>(&self, g: &HeightField, w: &WeightFunction<W>) -> W {
        let d = g.dim().d() as i64;
        self.region
            .incident_edges()
            .iter()
            .filter(|e| g.gradient(e) == -d)
            .fold(W::one(), |acc, e| acc * w.weight(e))
    }

    /// `Z_w`, summed over the enumeration.
    pub fn partition_function<W: Scalar>(&self, w: &WeightFunction<W>) -> Result<W> {
        let graph = self.checked_graph(DEFAULT_ENUMERATION_CAP)?;
        let edge_weights = w.on_edges(&graph.edges);
        let mut total = W::zero();
        graph.for_each(|values| {
            total = total.clone() + mass_of(&graph, &edge_weights, values);
        });
        Ok(total)
    }

    /// Pointwise values of `b` on `R ∪ ∂R`, used for boundary comparisons.
    pub fn boundary_values(&self) -> BTreeMap<Vertex, i64> {
        self.region
            .boundary()
            .into_iter()
            .map(|y| {
                let v = self.reference.value(&y);
                (y, v)
            })
            .collect()
    }
}

/// Mass of a site assignment given per-edge weights.
pub fn mass_of<W: Scalar>(graph: &RegionGraph, edge_weights: &[W], values: &[i64]) -> W {
    graph
        .tiling_edges(values)
        .fold(W::one(), |acc, i| acc * edge_weights[i].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Dim, RegionKind};
    use crate::scalar::Rational;

    fn dim(d: usize) -> Dim {
        Dim::new(d).unwrap()
    }

    fn flat_box(d: usize, kind: RegionKind, n: i64) -> FixedBoundary {
        FixedBoundary::new(
            Region::make_box(dim(d), kind, n).unwrap(),
            HeightField::flat(dim(d)),
        )
        .unwrap()
    }

    #[test]
    fn empty_region_has_one_element() {
        let bc = FixedBoundary::new(Region::empty(dim(2)), HeightField::flat(dim(2))).unwrap();
        assert_eq!(bc.enumerate().unwrap(), vec![HeightField::flat(dim(2))]);
    }

    #[test]
    fn single_local_min() {
        let b = HeightField::flat(dim(2));
        let x = Region::make_box(dim(2), RegionKind::CentredBox, 2)
            .unwrap()
            .iter()
            .find(|x| b.can_move(x, true))
            .unwrap()
            .clone();
        let bc = FixedBoundary::new(Region::new(dim(2), [x.clone()]).unwrap(), b.clone()).unwrap();
        let all = bc.enumerate().unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(bc.extremal_max(), b.local_move(&x, 1).unwrap());
        assert_eq!(bc.extremal_min(), b);
    }

    #[test]
    fn enumeration_is_valid_and_sandwiched() {
        let bc = flat_box(2, RegionKind::Box, 4);
        let all = bc.enumerate().unwrap();
        let (hi, lo) = (bc.extremal_max(), bc.extremal_min());
        for f in &all {
            assert!(bc.contains(f));
            for x in bc.region().iter() {
                assert!(lo.value(x) <= f.value(x) && f.value(x) <= hi.value(x));
            }
        }
        assert!(all.contains(&hi) && all.contains(&lo));
        assert_eq!(BigUint::from(all.len()), bc.count().unwrap());
        assert_eq!(bc.count().unwrap(), bc.shifted(1).count().unwrap());
    }

    #[test]
    fn uniform_partition_function_is_the_count() {
        let bc = flat_box(2, RegionKind::Box, 3);
        let z: Rational = bc.partition_function(&WeightFunction::uniform()).unwrap();
        assert_eq!(z, Rational::from_int(bc.enumerate().unwrap().len() as i64));
    }

    #[test]
    fn cap_is_enforced() {
        let bc = flat_box(2, RegionKind::Box, 8);
        assert!(matches!(bc.count(), Err(Error::EnumerationCap { .. })));
    }
}
