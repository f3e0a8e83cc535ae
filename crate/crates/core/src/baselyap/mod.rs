//! Base Lyapunov functions `τ′`: analytic fixtures and Hermite collocation.

mod collocation;
mod kernel;

pub use collocation::{annulus_nodes, collocation_fit, grid_nodes, CollocationModel};
pub use kernel::Wendland;

use crate::flow::FlowMapConfig;
use crate::system::{ScalarField, VectorField};
use crate::{Error, Jet, Point, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Collocation,
    ModifiedStack,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Collocation => "collocation",
            Provenance::ModifiedStack => "modified-stack",
        }
    }
}

/// A scalar function with its orbital derivative along [`Self::field`].
pub trait LyapunovEvaluator: Send + Sync {
    fn value(&self, p: &Point) -> Result<f64>;

    /// Value and orbital derivative along `self.field()`.
    fn jet(&self, p: &Point) -> Result<Jet>;

    fn gradient(&self, _p: &Point) -> Option<Point> {
        None
    }

    fn field(&self) -> &VectorField;

    fn provenance(&self) -> Provenance;
}

/// `∇τ(p)·X(p)` from the gradient if there is one, from the evaluator's
/// own derivative if `x` is its field, else by flow finite differences.
pub fn orbital_derivative(tau: &dyn LyapunovEvaluator, x: &VectorField, p: &Point, cfg: &FlowMapConfig) -> Result<f64> {
    if let Some(g) = tau.gradient(p) {
        return Ok(g.dot(&x.eval(p)));
    }
    if x.same_rhs(tau.field()) {
        return Ok(tau.jet(p)?.deriv);
    }
    crate::verify::fd_orbital_derivative_with(tau, x, p, 1e-4, cfg)
}

/// Base function `τ′` together with the field it is Lyapunov for.
#[derive(Clone)]
pub struct BaseLyapunov {
    name: String,
    scalar: ScalarField,
    field: VectorField,
    provenance: Provenance,
    model: Option<Arc<CollocationModel>>,
}

impl std::fmt::Debug for BaseLyapunov {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BaseLyapunov")
            .field("name", &self.name)
            .field("field", &self.field.name())
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl BaseLyapunov {
    /// `scalar` must carry an analytic gradient.
    pub fn analytic(name: impl Into<String>, scalar: ScalarField, field: VectorField) -> Result<BaseLyapunov> {
        if !scalar.has_gradient() {
            return Err(Error::InvalidInput("analytic base needs a gradient".into()));
        }
        Ok(BaseLyapunov { name: name.into(), scalar, field, provenance: Provenance::Analytic, model: None })
    }

    pub fn collocation(model: CollocationModel, field: VectorField) -> BaseLyapunov {
        let m = Arc::new(model);
        let (mv, mg) = (m.clone(), m.clone());
        let scalar = ScalarField::new(move |p| mv.value(p)).with_gradient(move |p| mg.gradient(p));
        BaseLyapunov {
            name: format!("collocation({})", m.field_name()),
            scalar,
            field,
            provenance: Provenance::Collocation,
            model: Some(m),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The same `τ′` regarded as a function for another field.
    pub fn with_field(mut self, field: VectorField) -> BaseLyapunov {
        self.field = field;
        self
    }

    pub fn scalar(&self) -> &ScalarField {
        &self.scalar
    }

    pub fn model(&self) -> Option<&CollocationModel> {
        self.model.as_deref()
    }

    /// `min(−τ̇′)` over the points; a non-positive result rejects the base.
    pub fn min_decay(&self, x: &VectorField, pts: &[Point]) -> f64 {
        pts.iter().map(|p| -self.scalar.gradient_or_fd(p).dot(&x.eval(p))).fold(f64::INFINITY, f64::min)
    }
}

impl LyapunovEvaluator for BaseLyapunov {
    fn value(&self, p: &Point) -> Result<f64> {
        Ok(self.scalar.eval(p))
    }

    fn jet(&self, p: &Point) -> Result<Jet> {
        Ok(Jet::new(self.scalar.eval(p), self.scalar.gradient_or_fd(p).dot(&self.field.eval(p))))
    }

    fn gradient(&self, p: &Point) -> Option<Point> {
        self.scalar.gradient(p)
    }

    fn field(&self) -> &VectorField {
        &self.field
    }

    fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// Analytic base for a fixture field: `linear_sink ↦ ‖x‖²/2`,
/// `constant ↦ −x`, `limit_cycle ↦ (1 − r²)²`.
pub fn fixture_base(name: &str) -> Result<BaseLyapunov> {
    let field = VectorField::fixture(name)?;
    let scalar = match name {
        "linear_sink" => ScalarField::new(|p| 0.5 * p.norm_squared()).with_gradient(|p| *p),
        "constant" => ScalarField::new(|p| -p.x).with_gradient(|_| Point::new(-1.0, 0.0)),
        "limit_cycle" => ScalarField::new(|p| (1.0 - p.norm_squared()).powi(2))
            .with_gradient(|p| -4.0 * (1.0 - p.norm_squared()) * p),
        other => return Err(Error::InvalidInput(format!("no analytic base for fixture `{other}`"))),
    };
    BaseLyapunov::analytic(name, scalar, field)
}

/// Where a base comes from: an analytic fixture or a saved collocation
/// model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSpec {
    Fixture { name: String },
    Collocation { model: PathBuf },
}

impl BaseSpec {
    pub fn build(&self, field: &VectorField) -> Result<BaseLyapunov> {
        match self {
            BaseSpec::Fixture { name } => Ok(fixture_base(name)?.with_field(field.clone())),
            BaseSpec::Collocation { model } => {
                let m = CollocationModel::load(model)?;
                if m.field_name() != field.name() {
                    return Err(Error::InvalidInput(format!(
                        "model {} was fitted for `{}`, not `{}`",
                        model.display(),
                        m.field_name(),
                        field.name()
                    )));
                }
                Ok(BaseLyapunov::collocation(m, field.clone()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_derivatives() {
        let c = fixture_base("constant").unwrap();
        assert_eq!(c.jet(&Point::new(0.3, -2.0)).unwrap().deriv, -1.0);
        let lc = fixture_base("limit_cycle").unwrap();
        assert!(lc.jet(&Point::new(0.6, 0.8)).unwrap().deriv.abs() < 1e-15);
        assert!((lc.jet(&Point::new(0.5, 0.0)).unwrap().deriv + 0.5625).abs() < 1e-15);
        let s = fixture_base("linear_sink").unwrap();
        assert_eq!(s.jet(&Point::new(1.0, 1.0)).unwrap().deriv, -2.0);
        assert!(fixture_base("chi_e1").is_err());
        assert!(fixture_base("nope").is_err());
    }

    #[test]
    fn orbital_derivative_paths_agree() {
        let s = fixture_base("linear_sink").unwrap();
        let x = VectorField::fixture("linear_sink").unwrap();
        let p = Point::new(0.7, -0.2);
        let a = orbital_derivative(&s, &x, &p, &FlowMapConfig::default()).unwrap();
        let fd = crate::verify::fd_orbital_derivative(&s, &x, &p, 1e-3).unwrap();
        assert!((a - fd).abs() < 1e-9);
        assert!((a + p.norm_squared()).abs() < 1e-15);
    }

    #[test]
    fn fixture_bases_decrease_off_recurrence() {
        let lc = fixture_base("limit_cycle").unwrap();
        let x = VectorField::fixture("limit_cycle").unwrap();
        let pts: Vec<Point> = crate::sampling::Halton2::new(3)
            .take(2000)
            .map(|[u, v]| Point::new(4.0 * u - 2.0, 4.0 * v - 2.0))
            .filter(|p| p.norm() > 0.1 && (p.norm() - 1.0).abs() > 0.1)
            .collect();
        assert!(lc.min_decay(&x, &pts) > 0.0);
    }
}
