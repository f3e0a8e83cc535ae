//! Plain-data descriptions of fields and regions, used by configuration
//! files and saved stacks to rebuild the closures they stand for.

use super::{Aabb, Polynomial, Region, ScalarField, VectorField};
use crate::{Error, Point, Result};
use serde::{Deserialize, Serialize};

/// A vector field by fixture name or by coefficient tables. Each table row
/// is `[coef, px, py]` for the monomial `coef · x^px · y^py`; `domain` is
/// `[x_lo, x_hi, y_lo, y_hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Fixture { name: String },
    Polynomial { name: String, domain: [f64; 4], x: Vec<[f64; 3]>, y: Vec<[f64; 3]> },
}

impl FieldSpec {
    pub fn fixture(name: &str) -> Self {
        FieldSpec::Fixture { name: name.to_string() }
    }

    pub fn build(&self) -> Result<VectorField> {
        match self {
            FieldSpec::Fixture { name } => VectorField::fixture(name),
            FieldSpec::Polynomial { name, domain, x, y } => {
                let d = Aabb::from_bounds(*domain);
                if !d.is_valid() {
                    return Err(Error::InvalidInput(format!("invalid domain {domain:?}")));
                }
                let px = Polynomial::from_table(x)?;
                let py = Polynomial::from_table(y)?;
                Ok(VectorField::polynomial(name.clone(), d, [px, py]))
            }
        }
    }

    pub fn name(&self) -> &str {
        match self {
            FieldSpec::Fixture { name } | FieldSpec::Polynomial { name, .. } => name,
        }
    }
}

/// A scalar field: a constant or a polynomial table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarSpec {
    Constant { value: f64 },
    Polynomial { terms: Vec<[f64; 3]> },
}

impl ScalarSpec {
    pub fn build(&self) -> Result<ScalarField> {
        match self {
            ScalarSpec::Constant { value } => Ok(ScalarField::constant(*value)),
            ScalarSpec::Polynomial { terms } => Ok(ScalarField::polynomial(Polynomial::from_table(terms)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    Empty,
    Point {
        at: [f64; 2],
    },
    Points {
        at: Vec<[f64; 2]>,
    },
    /// `[x_lo, x_hi, y_lo, y_hi]`
    Box {
        bounds: [f64; 4],
    },
    Annulus {
        center: [f64; 2],
        r_in: f64,
        r_out: f64,
    },
}

impl RegionSpec {
    pub fn build(&self) -> Result<Region> {
        let pt = |a: &[f64; 2]| Point::new(a[0], a[1]);
        let r = match self {
            RegionSpec::Empty => Region::Empty,
            RegionSpec::Point { at } => Region::Point(pt(at)),
            RegionSpec::Points { at } => Region::Points(at.iter().map(pt).collect()),
            RegionSpec::Box { bounds } => {
                let b = Aabb::from_bounds(*bounds);
                if !b.is_valid() {
                    return Err(Error::InvalidInput(format!("invalid box {bounds:?}")));
                }
                Region::Box(b)
            }
            RegionSpec::Annulus { center, r_in, r_out } => {
                if !(*r_in >= 0.0 && r_out > r_in) {
                    return Err(Error::InvalidInput(format!("invalid annulus radii {r_in}, {r_out}")));
                }
                Region::Annulus { center: pt(center), r_in: *r_in, r_out: *r_out }
            }
        };
        Ok(r)
    }
}
