//! Dormand–Prince 5(4) integration, adaptive and fixed-step.

use crate::system::VectorField;
use crate::{Error, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowMapConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Step used by fixed-step chart integration inside flow boxes.
    pub chart_step: f64,
}

impl Default for FlowMapConfig {
    fn default() -> Self {
        FlowMapConfig { abs_tol: 1e-10, rel_tol: 1e-10, max_step: 0.1, chart_step: 0.02 }
    }
}

impl FlowMapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_step > 0.0 && self.chart_step > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("flow tolerances and steps must be positive: {self:?}")))
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand–Prince step; returns the fifth-order solution and the
/// embedded error estimate.
#[inline]
pub fn dp5_step(x: &VectorField, y: &Point, h: f64) -> (Point, Point) {
    let k1 = x.eval(y);
    let k2 = x.eval(&(y + h * A21 * k1));
    let k3 = x.eval(&(y + h * (A31 * k1 + A32 * k2)));
    let k4 = x.eval(&(y + h * (A41 * k1 + A42 * k2 + A43 * k3)));
    let k5 = x.eval(&(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)));
    let k6 = x.eval(&(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)));
    let y5 = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = x.eval(&y5);
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    (y5, err)
}

fn exit(t: f64, p: &Point) -> Error {
    Error::DomainExit { time: t, x: p.x, y: p.y }
}

/// `Φ_t(p)` by adaptive Dormand–Prince. `Φ_0(p) = p` exactly. Fails with
/// [`Error::DomainExit`] if the trajectory leaves the field's domain.
pub fn flow_map(x: &VectorField, p: &Point, t: f64, cfg: &FlowMapConfig) -> Result<Point> {
    if t == 0.0 {
        return Ok(*p);
    }
    let dom = x.domain();
    if !dom.contains(p) {
        return Err(exit(0.0, p));
    }
    let dir = t.signum();
    let total = t.abs();
    let mut s = 0.0;
    let mut y = *p;
    let mut h = total.min(cfg.max_step).min(0.05);
    let mut rejects = 0usize;
    while s < total {
        if s + h > total {
            h = total - s;
        }
        let (y_new, err) = dp5_step(x, &y, dir * h);
        let sc = |i: usize| cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        let en = ((err.x / sc(0)).powi(2) + (err.y / sc(1)).powi(2)).sqrt() / std::f64::consts::SQRT_2;
        if !en.is_finite() {
            h *= 0.2;
            rejects += 1;
        } else if en <= 1.0 {
            s += h;
            y = y_new;
            if !dom.contains(&y) {
                return Err(exit(dir * s, &y));
            }
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(cfg.max_step);
        } else {
            h *= (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
            rejects += 1;
        }
        if rejects > 0 && h < 1e-14 * (1.0 + total) && s + h < total || rejects > 10_000 {
            return Err(Error::NoConvergence(format!("step size underflow at t = {}", dir * s)));
        }
    }
    Ok(y)
}

/// `Φ_t(p)` with exactly `steps` Dormand–Prince steps of size `t/steps`.
/// The result is a smooth function of `(t, p)`, which flow-box charts rely on.
pub fn flow_fixed(x: &VectorField, p: &Point, t: f64, steps: usize) -> Result<Point> {
    if t == 0.0 {
        return Ok(*p);
    }
    let dom = x.domain();
    let h = t / steps.max(1) as f64;
    let mut y = *p;
    for i in 0..steps.max(1) {
        y = dp5_step(x, &y, h).0;
        if !dom.contains(&y) {
            return Err(exit(h * (i + 1) as f64, &y));
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Halton2;
    use crate::system::{Aabb, Regularity};

    #[test]
    fn identity_at_zero() {
        let x = VectorField::fixture("limit_cycle").unwrap();
        let p = Point::new(0.3, -0.7);
        assert_eq!(flow_map(&x, &p, 0.0, &FlowMapConfig::default()).unwrap(), p);
    }

    #[test]
    fn sink_closed_form() {
        let x = VectorField::fixture("linear_sink").unwrap();
        let q = flow_map(&x, &Point::new(1.0, 0.0), 2f64.ln(), &FlowMapConfig::default()).unwrap();
        assert!((q - Point::new(0.5, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn shear_flow() {
        // χ ≡ 1: Φ_t(x, y) = (x + t, y)
        let x = VectorField::fixture("constant").unwrap();
        let q = flow_map(&x, &Point::new(0.2, 0.4), 1.7, &FlowMapConfig::default()).unwrap();
        assert!((q - Point::new(1.9, 0.4)).norm() < 1e-12);
    }

    #[test]
    fn closed_form_oracles() {
        let cfg = FlowMapConfig::default();
        for name in ["linear_sink", "limit_cycle", "chi_e1"] {
            let x = VectorField::fixture(name).unwrap();
            let mut worst: f64 = 0.0;
            for (i, [u, v]) in Halton2::new(5).take(200).enumerate() {
                let p = Point::new(1.6 * u - 0.8, 1.6 * v - 0.8);
                let t = if name == "chi_e1" { 0.4 } else { -1.0 + 3.0 * (i as f64 / 200.0) };
                let a = flow_map(&x, &p, t, &cfg).unwrap();
                worst = worst.max((a - x.closed_form_flow(t, &p).unwrap()).norm());
            }
            assert!(worst < 1e-7, "{name}: {worst}");
        }
    }

    #[test]
    fn domain_exit_reports_time() {
        let x = VectorField::new("c", Aabb::square(1.0), Regularity::Smooth, |_| Point::new(1.0, 0.0));
        match flow_map(&x, &Point::zeros(), 5.0, &FlowMapConfig::default()) {
            Err(Error::DomainExit { time, .. }) => assert!(time > 0.9 && time <= 1.2, "{time}"),
            other => panic!("expected domain exit, got {other:?}"),
        }
    }

    #[test]
    fn fixed_step_matches_adaptive() {
        let x = VectorField::fixture("limit_cycle").unwrap();
        let p = Point::new(0.5, 0.2);
        let a = flow_fixed(&x, &p, 2.0, 200).unwrap();
        let b = x.closed_form_flow(2.0, &p).unwrap();
        assert!((a - b).norm() < 1e-9, "{}", (a - b).norm());
    }
}
