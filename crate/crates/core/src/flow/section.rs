//! Sections: arcs of a level set `{τ′ = s}`, parameterized by arc length.
//!
//! A piece stores vertices at a fixed arc-length spacing. Between vertices
//! the chart follows the unit tangent field of the level set (four RK4
//! substeps from the nearest vertex) and is then projected back onto the
//! level along the gradient, so it is smooth inside each vertex cell and
//! sits on the level set to integration accuracy.

use super::ode::{flow_map, FlowMapConfig};
use super::roots::brent;
use crate::system::{ScalarField, VectorField};
use crate::{Error, Point, Result};

/// Gap left between the parameter ranges of merged pieces.
const PIECE_GAP: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains_open(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn contains_closed(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn shift(&self, d: f64) -> Interval {
        Interval::new(self.lo + d, self.hi + d)
    }

    /// `n ≥ 2` equally spaced points including both ends.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let n = n.max(2);
        (0..n).map(move |i| self.lo + self.len() * i as f64 / (n - 1) as f64)
    }
}

#[derive(Clone, Debug)]
pub struct SectionPiece {
    /// Parameter of `vertices[0]`.
    pub q_start: f64,
    pub spacing: f64,
    pub vertices: Vec<Point>,
    /// Parameter interval of the outer section `W` on this piece.
    pub outer: Interval,
    /// Parameter interval of the inner section `V` on this piece.
    pub inner: Interval,
}

impl SectionPiece {
    pub fn q_end(&self) -> f64 {
        self.q_start + self.spacing * (self.vertices.len() - 1) as f64
    }

    pub fn range(&self) -> Interval {
        Interval::new(self.q_start, self.q_end())
    }

    fn shifted(mut self, d: f64) -> Self {
        self.q_start += d;
        self.outer = self.outer.shift(d);
        self.inner = self.inner.shift(d);
        self
    }
}

#[derive(Clone, Debug)]
pub struct Section {
    pub level: f64,
    pub pieces: Vec<SectionPiece>,
    base: ScalarField,
}

fn tangent(base: &ScalarField, x: &Point) -> Point {
    let g = base.gradient_or_fd(x);
    Point::new(-g.y, g.x) / g.norm()
}

fn project(base: &ScalarField, level: f64, x: Point) -> Point {
    let g = base.gradient_or_fd(&x);
    x - (base.eval(&x) - level) * g / g.norm_squared()
}

/// Moves along the level set by arc length `dq` (RK4, four substeps).
fn advance(base: &ScalarField, level: f64, x: &Point, dq: f64) -> Point {
    if dq == 0.0 {
        return *x;
    }
    let h = dq / 4.0;
    let mut y = *x;
    for _ in 0..4 {
        let k1 = tangent(base, &y);
        let k2 = tangent(base, &(y + 0.5 * h * k1));
        let k3 = tangent(base, &(y + 0.5 * h * k2));
        let k4 = tangent(base, &(y + h * k3));
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    project(base, level, y)
}

impl Section {
    /// Assembles a section from stored pieces (used when loading).
    pub fn from_pieces(level: f64, pieces: Vec<SectionPiece>, base: ScalarField) -> Self {
        Section { level, pieces, base }
    }

    pub fn base(&self) -> &ScalarField {
        &self.base
    }

    pub fn piece_of(&self, q: f64) -> Option<&SectionPiece> {
        self.pieces.iter().find(|p| p.range().contains_closed(q))
    }

    pub fn in_outer(&self, q: f64) -> bool {
        self.pieces.iter().any(|p| p.outer.contains_open(q))
    }

    pub fn in_outer_closed(&self, q: f64) -> bool {
        self.pieces.iter().any(|p| p.outer.contains_closed(q))
    }

    pub fn in_inner(&self, q: f64) -> bool {
        self.pieces.iter().any(|p| p.inner.contains_open(q))
    }

    pub fn in_inner_closed(&self, q: f64) -> bool {
        self.pieces.iter().any(|p| p.inner.contains_closed(q))
    }

    /// Point of the section with parameter `q`.
    pub fn chart(&self, q: f64) -> Result<Point> {
        let piece =
            self.piece_of(q).ok_or_else(|| Error::InvalidInput(format!("parameter {q} outside the section")))?;
        let rel = (q - piece.q_start) / piece.spacing;
        let i = (rel.round() as usize).min(piece.vertices.len() - 1);
        let dq = q - (piece.q_start + i as f64 * piece.spacing);
        Ok(advance(&self.base, self.level, &piece.vertices[i], dq))
    }

    /// Unit tangent of the section at parameter `q`.
    pub fn tangent(&self, q: f64) -> Result<Point> {
        Ok(tangent(&self.base, &self.chart(q)?))
    }

    /// Parameter of the section point closest to `x`, with the residual
    /// distance `‖chart(q) - x‖`.
    pub fn locate(&self, x: &Point) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for piece in &self.pieces {
            let (i, _) = piece
                .vertices
                .iter()
                .enumerate()
                .map(|(i, v)| (i, (v - x).norm_squared()))
                .min_by(|a, b| a.1.total_cmp(&b.1))?;
            let range = piece.range();
            let mut q = piece.q_start + i as f64 * piece.spacing;
            for _ in 0..6 {
                let Ok(c) = self.chart(q) else { break };
                let step = (x - c).dot(&tangent(&self.base, &c));
                q = (q + step).clamp(range.lo, range.hi);
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let Ok(c) = self.chart(q) else { continue };
            let d = (c - x).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((q, d));
            }
        }
        best
    }

    /// Appends the pieces of `other` (same level) behind this section's
    /// parameter range. Fails if the arcs come closer than two vertex spacings.
    pub fn merge(&mut self, other: Section) -> Result<()> {
        if (self.level - other.level).abs() > 1e-9 * (1.0 + self.level.abs()) {
            return Err(Error::InvalidInput("can only merge sections of one level".into()));
        }
        for a in &self.pieces {
            for b in &other.pieces {
                let sep = a
                    .vertices
                    .iter()
                    .flat_map(|u| b.vertices.iter().map(move |v| (u - v).norm()))
                    .fold(f64::INFINITY, f64::min);
                if sep < 2.0 * a.spacing.max(b.spacing) {
                    return Err(Error::Rejected(format!("merged section pieces overlap (separation {sep})")));
                }
            }
        }
        let end = self.pieces.iter().map(|p| p.q_end()).fold(f64::NEG_INFINITY, f64::max);
        for piece in other.pieces {
            let d = end + PIECE_GAP - piece.q_start;
            self.pieces.push(piece.shifted(d));
        }
        Ok(())
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Point> {
        self.pieces.iter().flat_map(|p| p.vertices.iter())
    }
}

/// Settings for [`section_from_level`].
#[derive(Clone, Copy, Debug)]
pub struct SectionRequest {
    /// Half-length of the traced arc: parameters run over `[-extent, extent]`.
    pub extent: f64,
    pub spacing: f64,
    /// Parameter interval of `V` (inner), relative to the seed at `q = 0`.
    pub inner: Interval,
    pub outer: Interval,
}

/// Traces a section of `{τ′ = s}` through `seed`, first moving the seed
/// along the flow of `field` onto the level. `admissible` rejects vertices
/// too close to the recurrent cells.
pub fn section_from_level(
    base: &ScalarField,
    s: f64,
    seed: &Point,
    field: &VectorField,
    req: &SectionRequest,
    cfg: &FlowMapConfig,
    admissible: &dyn Fn(&Point) -> bool,
) -> Result<Section> {
    if !(req.extent > 0.0 && req.spacing > 0.0) {
        return Err(Error::InvalidInput("section extent and spacing must be positive".into()));
    }
    let seed = land_on_level(base, s, seed, field, cfg)?;
    let n_half = (req.extent / req.spacing).ceil() as usize;
    let mut fwd = vec![seed];
    let mut bwd = Vec::new();
    for (dir, out) in [(1.0, &mut fwd), (-1.0, &mut bwd)] {
        let mut x = seed;
        for _ in 0..n_half {
            x = advance(base, s, &x, dir * req.spacing);
            if !field.domain().contains(&x) {
                return Err(Error::Rejected(format!("section left the domain at ({}, {})", x.x, x.y)));
            }
            if !admissible(&x) {
                return Err(Error::Rejected(format!("section meets the recurrent cell set near ({}, {})", x.x, x.y)));
            }
            out.push(x);
        }
    }
    bwd.reverse();
    bwd.extend(fwd);
    let piece = SectionPiece {
        q_start: -(n_half as f64) * req.spacing,
        spacing: req.spacing,
        vertices: bwd,
        outer: req.outer,
        inner: req.inner,
    };
    if !piece.range().contains_closed(req.outer.lo) || !piece.range().contains_closed(req.outer.hi) {
        return Err(Error::InvalidInput("outer interval exceeds the traced extent".into()));
    }
    Ok(Section { level: s, pieces: vec![piece], base: base.clone() })
}

/// Moves `seed` along the flow until `τ′ = s`, then projects onto the level.
fn land_on_level(base: &ScalarField, s: f64, seed: &Point, field: &VectorField, cfg: &FlowMapConfig) -> Result<Point> {
    let d0 = base.eval(seed) - s;
    if d0.abs() <= 1e-13 * (1.0 + s.abs()) {
        return Ok(project(base, s, *seed));
    }
    // τ′ decreases along the flow: go forward if above the level
    let dir = d0.signum();
    let h = 0.05;
    let mut y = *seed;
    let mut elapsed = 0.0;
    while elapsed < 200.0 {
        let next = flow_map(field, &y, dir * h, cfg)
            .map_err(|e| Error::Rejected(format!("level {s} not reached from the seed: {e}")))?;
        if (base.eval(&next) - s).signum() != dir {
            let start = y;
            let tt = brent(|t| Ok(base.eval(&flow_map(field, &start, dir * t, cfg)?) - s), 0.0, h, 1e-15, 200)?;
            let x = flow_map(field, &start, dir * tt, cfg)?;
            return Ok(project(base, s, x));
        }
        y = next;
        elapsed += h;
    }
    Err(Error::Rejected(format!("level {s} not reached from the seed")))
}
