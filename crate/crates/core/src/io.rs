//! JSON documents for height functions, tilings, boundary conditions and weights.
//!
//! Rationals are written as `"p/q"` strings and vertices as arrays of `d + 1` integers.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::height::{Background, HeightField, Slope, Tiling};
use crate::lattice::{Dim, Edge, Region, RegionKind, Vertex};
use crate::regions::{FixedBoundary, WeightFunction};
use crate::scalar::{parse_ratio64, parse_rational, Rational};

/// A height function as a background plus finitely many overridden values. With neither
/// `slope` nor `pins` the background is flat.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightFieldDoc {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<String>,
    /// Pins of a Kirszbraun extension background, used instead of `slope` and `offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pins: Option<Vec<(Vertex, i64)>>,
    #[serde(default)]
    pub overrides: Vec<(Vertex, i64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingDoc {
    #[serde(flatten)]
    pub background: HeightFieldDoc,
    pub window: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionDoc {
    Box { kind: RegionKind, n: i64 },
    Vertices { vertices: Vec<Vertex> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedBoundaryDoc {
    pub region: RegionDoc,
    pub reference: HeightFieldDoc,
}

/// Non-unit edge weights as `[edge, "p/q"]` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightsDoc {
    pub weights: Vec<(Edge, String)>,
}

fn check_dim(dim: Dim, x: &Vertex) -> Result<()> {
    if x.dim() != dim {
        return Err(Error::LengthMismatch {
            expected: dim.coords(),
            found: x.coords().len(),
        });
    }
    Ok(())
}

fn background_doc(dim: Dim, bg: &Background) -> HeightFieldDoc {
    let mut doc = HeightFieldDoc {
        d: dim.d(),
        slope: None,
        offset: None,
        pins: None,
        overrides: Vec::new(),
    };
    match bg {
        Background::Floor { slope, offset } => {
            doc.slope = Some(slope.values().iter().map(|v| v.to_string()).collect());
            doc.offset = Some(offset.to_string());
        }
        Background::Extension { pins } => {
            doc.pins = Some(pins.iter().map(|(x, v)| (x.clone(), *v)).collect());
        }
    }
    doc
}

fn parse_background(doc: &HeightFieldDoc) -> Result<(Dim, Background)> {
    let dim = Dim::new(doc.d)?;
    let bg = match (&doc.slope, &doc.pins) {
        (Some(slope), None) => {
            let values = slope
                .iter()
                .map(|s| parse_ratio64(s))
                .collect::<Result<Vec<Rational64>>>()?;
            if values.len() != dim.coords() {
                return Err(Error::LengthMismatch {
                    expected: dim.coords(),
                    found: values.len(),
                });
            }
            let offset = match &doc.offset {
                Some(a) => parse_ratio64(a)?,
                None => Rational64::from_integer(0),
            };
            let f = HeightField::floor_field(Slope::new(values)?, offset)?;
            f.background().clone()
        }
        (None, Some(pins)) => {
            let mut map = BTreeMap::new();
            for (x, v) in pins {
                check_dim(dim, x)?;
                map.insert(x.clone(), *v);
            }
            HeightField::kirszbraun_extend(&map)?.background().clone()
        }
        (Some(_), Some(_)) => {
            return Err(Error::Invalid("give either \"slope\" or \"pins\", not both".into()))
        }
        (None, None) => HeightField::flat(dim).background().clone(),
    };
    Ok((dim, bg))
}

impl HeightFieldDoc {
    pub fn from_field(f: &HeightField) -> Self {
        let mut doc = background_doc(f.dim(), f.background());
        doc.overrides = f.overrides().iter().map(|(x, v)| (x.clone(), *v)).collect();
        doc
    }

    /// Parses and validates the field.
    pub fn to_field(&self) -> Result<HeightField> {
        let (dim, bg) = parse_background(self)?;
        let mut values = BTreeMap::new();
        for (x, v) in &self.overrides {
            check_dim(dim, x)?;
            if values.insert(x.clone(), *v).is_some() {
                return Err(Error::Invalid(format!("vertex {x:?} is listed twice")));
            }
        }
        let f = HeightField::from_parts(bg, values);
        f.ensure_valid()?;
        Ok(f)
    }
}

impl TilingDoc {
    pub fn from_tiling(t: &Tiling) -> Self {
        TilingDoc {
            background: background_doc(t.dim(), t.background()),
            window: t.window().iter().cloned().collect(),
            edges: t.edges().iter().cloned().collect(),
        }
    }

    pub fn to_tiling(&self) -> Result<Tiling> {
        if !self.background.overrides.is_empty() {
            return Err(Error::Invalid("a tiling document takes no overrides".into()));
        }
        let (dim, bg) = parse_background(&self.background)?;
        for x in &self.window {
            check_dim(dim, x)?;
        }
        for e in &self.edges {
            check_dim(dim, &e.base)?;
        }
        let window: BTreeSet<Vertex> = self.window.iter().cloned().collect();
        let edges: BTreeSet<Edge> = self.edges.iter().cloned().collect();
        Tiling::new(dim, bg, window, edges)
    }
}

impl FixedBoundaryDoc {
    pub fn from_boundary(bc: &FixedBoundary) -> Self {
        let region = bc.region();
        let n = match region.kind() {
            RegionKind::Generic => None,
            kind => infer_box_size(region, kind),
        };
        FixedBoundaryDoc {
            region: match n {
                Some(n) => RegionDoc::Box {
                    kind: region.kind(),
                    n,
                },
                None => RegionDoc::Vertices {
                    vertices: region.iter().cloned().collect(),
                },
            },
            reference: HeightFieldDoc::from_field(bc.reference()),
        }
    }

    pub fn to_boundary(&self) -> Result<FixedBoundary> {
        let reference = self.reference.to_field()?;
        let dim = reference.dim();
        let region = match &self.region {
            RegionDoc::Box { kind, n } => Region::make_box(dim, *kind, *n)?,
            RegionDoc::Vertices { vertices } => {
                for x in vertices {
                    check_dim(dim, x)?;
                }
                Region::new(dim, vertices.iter().cloned())?
            }
        };
        FixedBoundary::new(region, reference)
    }
}

fn infer_box_size(region: &Region, kind: RegionKind) -> Option<i64> {
    let first = region.iter().next()?;
    let a = first.box_coords()[0];
    let n = match kind {
        RegionKind::Box => (region.len() as f64).powf(1.0 / region.dim().d() as f64).round() as i64 + 1,
        RegionKind::ClosedBox => {
            (region.len() as f64).powf(1.0 / region.dim().d() as f64).round() as i64 - 1
        }
        RegionKind::CentredBox => -a,
        RegionKind::Generic => return None,
    };
    let rebuilt = Region::make_box(region.dim(), kind, n).ok()?;
    (rebuilt.vertices() == region.vertices()).then_some(n)
}

impl WeightsDoc {
    pub fn from_weights(w: &WeightFunction<Rational>) -> Self {
        WeightsDoc {
            weights: w
                .entries()
                .iter()
                .map(|(e, v)| (e.clone(), v.to_string()))
                .collect(),
        }
    }

    pub fn to_weights(&self, dim: Dim) -> Result<WeightFunction<Rational>> {
        let mut w = WeightFunction::uniform();
        for (e, v) in &self.weights {
            check_dim(dim, &e.base)?;
            w.insert(e.clone(), parse_rational(v)?)?;
        }
        Ok(w)
    }
}

/// Parses a JSON document, reporting the line and column of syntax and field errors.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("documents serialise")
}

pub fn read_field(text: &str) -> Result<HeightField> {
    from_json::<HeightFieldDoc>(text)?.to_field()
}

pub fn write_field(f: &HeightField) -> String {
    to_json(&HeightFieldDoc::from_field(f))
}

pub fn read_tiling(text: &str) -> Result<Tiling> {
    from_json::<TilingDoc>(text)?.to_tiling()
}

pub fn write_tiling(t: &Tiling) -> String {
    to_json(&TilingDoc::from_tiling(t))
}

pub fn read_boundary(text: &str) -> Result<FixedBoundary> {
    from_json::<FixedBoundaryDoc>(text)?.to_boundary()
}

pub fn write_boundary(bc: &FixedBoundary) -> String {
    to_json(&FixedBoundaryDoc::from_boundary(bc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::height::tiling_of;

    #[test]
    fn field_document_shape() {
        let dim = Dim::new(2).unwrap();
        let f = HeightField::flat(dim);
        let x = Region::make_box(dim, RegionKind::CentredBox, 2)
            .unwrap()
            .iter()
            .find(|x| f.can_move(x, true))
            .unwrap()
            .clone();
        let g = f.local_move(&x, 1).unwrap();
        let text = write_field(&g);
        assert!(text.starts_with(r#"{"d":2,"slope":["0","0","0"],"offset":"0","overrides":[[["#));
        assert_eq!(read_field(&text).unwrap(), g);
        let t = tiling_of(&g).unwrap();
        let back = read_tiling(&write_tiling(&t)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn invalid_overrides_are_rejected() {
        let text = r#"{"d":2,"slope":["0","0","0"],"offset":"0","overrides":[[[1,1,0],7]]}"#;
        assert!(matches!(read_field(text), Err(Error::NotHeightFunction(_))));
        let err = read_field(r#"{"d":2,"slope":["0","0"]"#).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn boundary_documents() {
        let dim = Dim::new(3).unwrap();
        let bc = FixedBoundary::new(
            Region::make_box(dim, RegionKind::Box, 3).unwrap(),
            HeightField::flat(dim),
        )
        .unwrap();
        let text = write_boundary(&bc);
        assert!(text.contains(r#""region":{"kind":"box","n":3}"#), "{text}");
        assert_eq!(read_boundary(&text).unwrap(), bc);
    }
}
