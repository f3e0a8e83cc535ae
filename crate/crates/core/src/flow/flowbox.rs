//! Flow boxes `Φ((-T, T) × W)` over a section `W` and their charts.

use super::ode::{dp5_step, flow_fixed};
use super::roots::brent;
use super::section::Section;
use crate::system::{Aabb, VectorField};
use crate::{Error, Point, Result};

/// Scalar data describing a box apart from its section (used when loading).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowBoxSpec {
    pub k: usize,
    pub half_width: f64,
    pub chart_step: f64,
}

/// Flow box over the outer section `W`; the inner section `V` is the
/// sub-interval of each piece. Chart integration uses a fixed number of
/// steps so that `(t, q) ↦ Φ_t(W(q))` is smooth.
#[derive(Clone, Debug)]
pub struct FlowBox {
    pub section: Section,
    pub k: usize,
    pub half_width: f64,
    chart_step: f64,
    steps: usize,
    field: VectorField,
    bounds: Aabb,
    level_range: (f64, f64),
}

impl FlowBox {
    pub fn new(section: Section, field: VectorField, spec: FlowBoxSpec) -> Result<FlowBox> {
        if !(spec.half_width > 0.0 && spec.chart_step > 0.0) {
            return Err(Error::InvalidInput(format!("bad flow box parameters {spec:?}")));
        }
        let steps = (spec.half_width / spec.chart_step).ceil() as usize;
        let mut fb = FlowBox {
            section,
            k: spec.k,
            half_width: spec.half_width,
            chart_step: spec.chart_step,
            steps,
            field,
            bounds: Aabb::square(0.0),
            level_range: (0.0, 0.0),
        };
        fb.compute_bounds()?;
        Ok(fb)
    }

    pub fn spec(&self) -> FlowBoxSpec {
        FlowBoxSpec { k: self.k, half_width: self.half_width, chart_step: self.chart_step }
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn level(&self) -> f64 {
        self.section.level
    }

    pub fn chart_steps(&self) -> usize {
        self.steps
    }

    /// `Φ_t(W(q))`.
    pub fn chart(&self, t: f64, q: f64) -> Result<Point> {
        flow_fixed(&self.field, &self.section.chart(q)?, t, self.steps)
    }

    /// Points `Φ_t(W(q))` at `t = t0 + i·(t1 − t0)/m`, `i = 0..=m`, integrated
    /// incrementally with steps no longer than the chart step.
    pub fn fiber(&self, q: f64, t0: f64, t1: f64, m: usize) -> Result<Vec<(f64, Point)>> {
        let m = m.max(1);
        let mut y = if t0 == 0.0 {
            self.section.chart(q)?
        } else {
            let n = ((t0.abs() / self.chart_step).ceil() as usize).max(1);
            flow_fixed(&self.field, &self.section.chart(q)?, t0, n)?
        };
        let dt = (t1 - t0) / m as f64;
        let sub = ((dt.abs() / self.chart_step).ceil() as usize).max(1);
        let mut out = Vec::with_capacity(m + 1);
        out.push((t0, y));
        for i in 1..=m {
            y = flow_fixed(&self.field, &y, dt, sub)?;
            out.push((t0 + i as f64 * dt, y));
        }
        Ok(out)
    }

    fn compute_bounds(&mut self) -> Result<()> {
        let base = self.section.base().clone();
        let mut pts = Vec::new();
        let mut q_step: f64 = 0.0;
        for piece in &self.section.pieces {
            let n = ((piece.outer.len() / 0.05).ceil() as usize).max(2);
            q_step = q_step.max(piece.outer.len() / (n - 1) as f64);
            for q in piece.outer.grid(n) {
                let x0 = self.section.chart(q)?;
                pts.push(x0);
                for dir in [1.0, -1.0] {
                    let mut y = x0;
                    let h = dir * self.half_width / self.steps as f64;
                    for _ in 0..self.steps {
                        y = dp5_step(&self.field, &y, h).0;
                        if !self.field.domain().contains(&y) {
                            return Err(Error::Rejected(format!(
                                "flow box {} leaves the domain near ({}, {})",
                                self.k, y.x, y.y
                            )));
                        }
                        pts.push(y);
                    }
                }
            }
        }
        let bb = Aabb::around(pts.iter()).expect("sections are never empty");
        let spread = pts.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
        self.bounds = bb.inflate(0.1 + spread + q_step);
        let (lo, hi) =
            pts.iter().map(|p| base.eval(p)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let pad = 0.25 * (hi - lo) + 1e-9;
        self.level_range = (lo - pad, hi + pad);
        Ok(())
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    /// Box coordinates `(t, q)` of `p` with `|t| < half_width` and `q` in the
    /// section's parameter range, or `None`. Membership in `W` or `V` is left
    /// to the caller.
    pub fn locate(&self, p: &Point, half_width: f64) -> Option<(f64, f64)> {
        if !self.bounds.contains(p) {
            return None;
        }
        let base = self.section.base();
        let level = self.section.level;
        let v0 = base.eval(p);
        if v0 < self.level_range.0 || v0 > self.level_range.1 {
            return None;
        }
        // march toward the section along the flow, τ′ decreasing forward
        let d0 = v0 - level;
        let (t_coarse, x) = if d0 == 0.0 {
            (0.0, *p)
        } else {
            let dir = d0.signum();
            // coarse march; `refine` restores chart accuracy
            let h = (5.0 * self.chart_step).min(half_width);
            let n = (half_width / h).ceil() as usize + 1;
            let mut y = *p;
            let mut found = None;
            for i in 0..n {
                let y1 = dp5_step(&self.field, &y, dir * h).0;
                if !self.field.domain().contains(&y1) {
                    return None;
                }
                if (base.eval(&y1) - level).signum() != dir {
                    let start = y;
                    let s =
                        brent(|s| Ok(base.eval(&dp5_step(&self.field, &start, dir * s).0) - level), 0.0, h, 1e-15, 100)
                            .ok()?;
                    found = Some((-dir * (i as f64 * h + s), dp5_step(&self.field, &start, dir * s).0));
                    break;
                }
                y = y1;
            }
            found?
        };
        if t_coarse.abs() > half_width + 5.0 * self.chart_step {
            return None;
        }
        let (q0, dist) = self.section.locate(&x)?;
        if dist > 1e-6 {
            return None;
        }
        let (t, q) = self.refine(p, t_coarse, q0)?;
        if t.abs() < half_width {
            Some((t, q))
        } else {
            None
        }
    }

    /// Newton iteration on `chart(t, q) = p`; makes the inverse consistent
    /// with the fixed-step chart to rounding level.
    fn refine(&self, p: &Point, mut t: f64, mut q: f64) -> Option<(f64, f64)> {
        let range = self.section.piece_of(q)?.range();
        let mut jac: Option<nalgebra::Matrix2<f64>> = None;
        for _ in 0..5 {
            let c = self.chart(t, q).ok()?;
            let r = c - p;
            if r.norm() <= 1e-14 * (1.0 + p.norm()) {
                break;
            }
            let j = match jac {
                Some(j) => j,
                None => {
                    let hq = 1e-7;
                    let (qa, qb) = if q + hq <= range.hi { (q, q + hq) } else { (q - hq, q) };
                    let ca = if qa == q { c } else { self.chart(t, qa).ok()? };
                    let cb = if qb == q { c } else { self.chart(t, qb).ok()? };
                    let dq = (cb - ca) / hq;
                    let j = nalgebra::Matrix2::from_columns(&[self.field.eval(&c), dq]);
                    jac = Some(j);
                    j
                }
            };
            let step = j.lu().solve(&r)?;
            t -= step.x;
            q = (q - step.y).clamp(range.lo, range.hi);
        }
        Some((t, q))
    }

    /// Coordinates of `p` in `Φ((-(k+1), k+1) × W)`, or `None`.
    pub fn inverse(&self, p: &Point) -> Option<(f64, f64)> {
        self.locate(p, self.half_width).filter(|&(_, q)| self.section.in_outer(q))
    }

    /// Coordinates of `p` in the closed inner box `Φ([-1, 1] × V̄)`, or `None`.
    pub fn inverse_inner_closed(&self, p: &Point) -> Option<(f64, f64)> {
        self.locate(p, 1.0 + 1e-12).filter(|&(_, q)| self.section.in_inner_closed(q))
    }

    /// Coordinates of `p` in the open inner box `Φ((-1, 1) × V)`, or `None`.
    pub fn inverse_inner(&self, p: &Point) -> Option<(f64, f64)> {
        self.locate(p, 1.0).filter(|&(_, q)| self.section.in_inner(q))
    }
}

/// Chart of a flow box at `(t, q)`; errors if `|t|` exceeds the half width.
pub fn box_chart(b: &FlowBox, t: f64, q: f64) -> Result<Point> {
    if t.abs() > b.half_width {
        return Err(Error::InvalidInput(format!("|t| = {} exceeds the half width {}", t.abs(), b.half_width)));
    }
    b.chart(t, q)
}

/// Inverse chart; `None` means the point is not in the box.
pub fn box_chart_inverse(b: &FlowBox, p: &Point) -> Option<(f64, f64)> {
    b.inverse(p)
}
