use crate::baselyap::LyapunovEvaluator;
use crate::flow::{flow_map, FlowMapConfig};
use crate::system::VectorField;
use crate::{Error, Point, Result};

/// Flow finite difference `(τ(Φ_δ p) − τ(Φ_{−δ} p))/(2δ)` with one
/// Richardson step over `(δ, δ/2)`. Uses the closed-form flow when the
/// field has one.
pub fn fd_orbital_derivative(tau: &dyn LyapunovEvaluator, x: &VectorField, p: &Point, delta: f64) -> Result<f64> {
    fd_orbital_derivative_with(tau, x, p, delta, &FlowMapConfig::default())
}

pub fn fd_orbital_derivative_with(
    tau: &dyn LyapunovEvaluator,
    x: &VectorField,
    p: &Point,
    delta: f64,
    cfg: &FlowMapConfig,
) -> Result<f64> {
    let d1 = central_difference(tau, x, p, delta, cfg)?;
    let d2 = central_difference(tau, x, p, 0.5 * delta, cfg)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// The plain central difference at step `δ`.
pub fn central_difference(
    tau: &dyn LyapunovEvaluator,
    x: &VectorField,
    p: &Point,
    delta: f64,
    cfg: &FlowMapConfig,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {delta}")));
    }
    let fwd = flow_point(x, p, delta, cfg)?;
    let bwd = flow_point(x, p, -delta, cfg)?;
    Ok((tau.value(&fwd)? - tau.value(&bwd)?) / (2.0 * delta))
}

fn flow_point(x: &VectorField, p: &Point, t: f64, cfg: &FlowMapConfig) -> Result<Point> {
    match x.closed_form_flow(t, p) {
        Some(y) if x.domain().contains(&y) => Ok(y),
        Some(y) => Err(Error::DomainExit { time: t, x: y.x, y: y.y }),
        None => flow_map(x, p, t, cfg),
    }
}
