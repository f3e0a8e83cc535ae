//! Flow-box cover of `K` and the scale constant.

use super::modification::PieceIntervals;
use crate::chainrec::{dist_to_recurrent, RecurrentSet};
use crate::flow::{section_from_level, FlowBox, FlowBoxSpec, FlowMapConfig, Interval, Section, SectionRequest};
use crate::system::{Region, ScalarField, VectorField};
use crate::{Error, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverConfig {
    /// Number of quasi-random samples of `K` the greedy cover must catch.
    pub k_samples: usize,
    pub seed: u64,
    /// `V` is `(-inner_half, inner_half)` in arc length around the seed.
    pub inner_half: f64,
    /// `W` is `(-outer_half, outer_half)`.
    pub outer_half: f64,
    /// Arc length traced on each side of the seed (≥ `outer_half`).
    pub extent: f64,
    /// Vertex spacing of section polylines.
    pub spacing: f64,
    /// Maximum step of the fixed-step flow-box charts.
    pub chart_step: f64,
    /// A sample counts as covered if it lies in `Φ((-c, c) × V′)` where `c`
    /// and the shrink of `V′` are both `cover_margin` of the full size.
    pub cover_margin: f64,
    /// Required distance of `K` and of sections from the recurrent cells.
    pub recurrent_margin: f64,
    pub flow: FlowMapConfig,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            k_samples: 400,
            seed: 7,
            inner_half: 1.0,
            outer_half: 1.25,
            extent: 1.3,
            spacing: 0.01,
            chart_step: 0.02,
            cover_margin: 0.9,
            recurrent_margin: 0.05,
            flow: FlowMapConfig::default(),
        }
    }
}

/// Boxes ordered by strictly decreasing level, with the scale constant.
#[derive(Clone, Debug)]
pub struct ConstructionPlan {
    pub boxes: Vec<FlowBox>,
    pub scale: f64,
    /// `min(−τ̇′)` over the sampled boxes (`+∞` without boxes).
    pub min_decay: f64,
    /// `max C·τ̇′ + N + 3` over the samples; negative when E2 holds.
    pub e2_worst: f64,
}

impl ConstructionPlan {
    pub fn n(&self) -> usize {
        self.boxes.len()
    }
}

/// Per-piece `(W, V)` intervals of a box's section.
pub fn piece_intervals(b: &FlowBox) -> Vec<PieceIntervals> {
    b.section.pieces.iter().map(|p| PieceIntervals { outer: p.outer, inner: p.inner }).collect()
}

/// Greedy cover of `K` by inner boxes `Φ((-1, 1) × V)` over sections of
/// level sets of `base`. A new seed is first tried on existing levels
/// (merged as an extra piece); otherwise it opens a level through itself.
/// The result is sorted by decreasing level and box `i` (0-based) gets
/// `k = i + 1` and half width `k + 1`.
pub fn choose_cover(
    k: &Region,
    base: &ScalarField,
    z: &VectorField,
    rec: Option<&RecurrentSet>,
    cfg: &CoverConfig,
) -> Result<Vec<FlowBox>> {
    if k.is_empty() {
        return Ok(Vec::new());
    }
    if !(cfg.inner_half > 0.0 && cfg.outer_half > cfg.inner_half && cfg.extent >= cfg.outer_half) {
        return Err(Error::InvalidInput(format!("bad section half widths in {cfg:?}")));
    }
    let samples = k.samples(cfg.k_samples, cfg.seed);
    let far = |p: &Point| rec.is_none_or(|r| dist_to_recurrent(r, p) > cfg.recurrent_margin);
    if let Some(p) = samples.iter().find(|p| !far(p)) {
        return Err(Error::Rejected(format!("K meets the inflated recurrent cells near ({}, {})", p.x, p.y)));
    }
    let req = SectionRequest {
        extent: cfg.extent,
        spacing: cfg.spacing,
        inner: Interval::new(-cfg.inner_half, cfg.inner_half),
        outer: Interval::new(-cfg.outer_half, cfg.outer_half),
    };
    let probe = |sec: &Section| {
        FlowBox::new(sec.clone(), z.clone(), FlowBoxSpec { k: 0, half_width: 1.0, chart_step: cfg.chart_step })
    };
    let covers = |b: &FlowBox, p: &Point| {
        b.locate(p, cfg.cover_margin)
            .is_some_and(|(_, q)| b.section.pieces.iter().any(|pc| q.abs() < cfg.cover_margin * pc.inner.hi))
    };

    let mut levels: Vec<Section> = Vec::new();
    let mut covered = vec![false; samples.len()];
    for i in 0..samples.len() {
        if covered[i] {
            continue;
        }
        let p = samples[i];
        let r = base.eval(&p);
        let mut order: Vec<usize> = (0..levels.len()).collect();
        order.sort_by(|&a, &b| (levels[a].level - r).abs().total_cmp(&(levels[b].level - r).abs()));
        let mut placed: Option<FlowBox> = None;
        for li in order {
            let Ok(sec) = section_from_level(base, levels[li].level, &p, z, &req, &cfg.flow, &far) else {
                continue;
            };
            let Ok(b) = probe(&sec) else { continue };
            if !covers(&b, &p) {
                continue;
            }
            let mut merged = levels[li].clone();
            if merged.merge(sec).is_ok() {
                levels[li] = merged;
                placed = Some(b);
                break;
            }
        }
        let b = match placed {
            Some(b) => b,
            None => {
                let mut lv = r;
                while levels.iter().any(|s| (s.level - lv).abs() < 1e-6 * (1.0 + lv.abs())) {
                    lv -= 1e-3 * (1.0 + lv.abs());
                }
                let sec = section_from_level(base, lv, &p, z, &req, &cfg.flow, &far)?;
                let b = probe(&sec)?;
                levels.push(sec);
                b
            }
        };
        for (j, q) in samples.iter().enumerate() {
            if !covered[j] && covers(&b, q) {
                covered[j] = true;
            }
        }
        if !covered[i] {
            return Err(Error::Rejected(format!("box through ({}, {}) does not cover its seed", p.x, p.y)));
        }
    }
    levels.sort_by(|a, b| b.level.total_cmp(&a.level));
    levels
        .into_iter()
        .enumerate()
        .map(|(i, sec)| {
            let kk = i + 1;
            FlowBox::new(sec, z.clone(), FlowBoxSpec { k: kk, half_width: kk as f64 + 1.0, chart_step: cfg.chart_step })
        })
        .collect()
}

/// `C = 1.1·(N + 3)/m`; `C = 1` when there are no boxes.
pub fn scale_from_decay(n: usize, m: f64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    if !(m > 0.0) {
        return Err(Error::Rejected(format!("base is not strictly decreasing on the boxes (min −τ̇′ = {m})")));
    }
    Ok(1.1 * (n as f64 + 3.0) / m)
}

/// Sample spacing used on box fibers and sections for [`scale_constant`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleSampling {
    pub q_step: f64,
    pub t_step: f64,
}

impl Default for ScaleSampling {
    fn default() -> Self {
        ScaleSampling { q_step: 0.05, t_step: 0.05 }
    }
}

/// Points of `Φ([-T, T] × W̄)` on a `(t, q)` grid.
pub fn box_samples(b: &FlowBox, q_step: f64, t_step: f64) -> Result<Vec<Point>> {
    let hw = b.half_width;
    let m = ((2.0 * hw / t_step).ceil() as usize).max(2);
    let mut pts = Vec::new();
    for piece in &b.section.pieces {
        let n = ((piece.outer.len() / q_step).ceil() as usize).max(2) + 1;
        for q in piece.outer.grid(n) {
            pts.extend(b.fiber(q, -hw, hw, m)?.into_iter().map(|(_, p)| p));
        }
    }
    Ok(pts)
}

/// Chooses `C` from the sampled decay of `τ′` along `z` over all boxes and
/// checks `C·τ̇′ < −(N + 3)` on the same samples.
pub fn scale_constant(
    boxes: Vec<FlowBox>,
    base: &ScalarField,
    z: &VectorField,
    s: &ScaleSampling,
) -> Result<ConstructionPlan> {
    let n = boxes.len();
    let mut decay: Vec<f64> = Vec::new();
    for b in &boxes {
        for p in box_samples(b, s.q_step, s.t_step)? {
            decay.push(-base.gradient_or_fd(&p).dot(&z.eval(&p)));
        }
    }
    let m = decay.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = scale_from_decay(n, m)?;
    let e2_worst = decay.iter().map(|d| -scale * d + n as f64 + 3.0).fold(f64::NEG_INFINITY, f64::max);
    if n > 0 && !(e2_worst < 0.0) {
        return Err(Error::Rejected(format!("E2 check failed: max C·τ̇′ + N + 3 = {e2_worst}")));
    }
    Ok(ConstructionPlan { boxes, scale, min_decay: m, e2_worst })
}
