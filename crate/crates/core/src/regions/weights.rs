use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::Edge;
use crate::scalar::Scalar;

/// Positive edge weights, `1` on every edge not listed.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction<W> {
    weights: BTreeMap<Edge, W>,
}

impl<W: Scalar> Default for WeightFunction<W> {
    fn default() -> Self {
        Self::uniform()
    }
}

impl<W: Scalar> WeightFunction<W> {
    pub fn uniform() -> Self {
        WeightFunction {
            weights: BTreeMap::new(),
        }
    }

    pub fn from_map(weights: BTreeMap<Edge, W>) -> Result<Self> {
        let mut w = Self::uniform();
        for (e, v) in weights {
            w.insert(e, v)?;
        }
        Ok(w)
    }

    pub fn insert(&mut self, e: Edge, w: W) -> Result<()> {
        if w <= W::zero() {
            return Err(Error::Invalid(format!("weight on {e:?} must be positive, got {w:?}")));
        }
        if w == W::one() {
            self.weights.remove(&e);
        } else {
            self.weights.insert(e, w);
        }
        Ok(())
    }

    pub fn weight(&self, e: &Edge) -> W {
        self.weights.get(e).cloned().unwrap_or_else(W::one)
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.is_empty()
    }

    /// Explicit non-unit weights.
    pub fn entries(&self) -> &BTreeMap<Edge, W> {
        &self.weights
    }

    pub fn on_edges(&self, edges: &[Edge]) -> Vec<W> {
        edges.iter().map(|e| self.weight(e)).collect()
    }

    pub fn map<V: Scalar>(&self, f: impl Fn(&W) -> V) -> WeightFunction<V> {
        WeightFunction {
            weights: self.weights.iter().map(|(e, w)| (e.clone(), f(w))).collect(),
        }
    }
}
