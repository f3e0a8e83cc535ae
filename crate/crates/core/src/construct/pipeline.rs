//! The whole construction: reduction, cover, scale and the induction over
//! boxes.

use super::modification::{modify_box, Diagnostics, ModifyConfig, MsSample, MS_HI, MS_LO};
use super::plan::{choose_cover, piece_intervals, scale_constant, CoverConfig, ScaleSampling};
use super::stack::{ModifiedStack, PrescribedLyapunov};
use crate::baselyap::BaseLyapunov;
use crate::chainrec::RecurrentSet;
use crate::flow::FlowBox;
use crate::par::{self, Execution};
use crate::system::{ReducedSystem, Region, ScalarField, VectorField};
use crate::{Error, Result};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstructConfig {
    /// `U_K` is the open `uk_margin`-neighbourhood of `K`.
    pub uk_margin: f64,
    /// `ĝ` reaches `−1` at distance `collar_fraction · uk_margin` from `K`.
    pub collar_fraction: f64,
    pub cover: CoverConfig,
    pub scale: ScaleSampling,
    pub modify: ModifyConfig,
    /// Parameter spacing of the `M_s` scan.
    pub ms_q_step: f64,
    /// Time samples of the `M_s` scan on `[-7/4, -5/4]`.
    pub ms_t_samples: usize,
    /// Points per fiber on `[k, k+1]` in the disjointness check.
    pub disjoint_fiber_samples: usize,
    pub disjoint_q_step: f64,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        ConstructConfig {
            uk_margin: 0.3,
            collar_fraction: 0.5,
            cover: CoverConfig::default(),
            scale: ScaleSampling::default(),
            modify: ModifyConfig::default(),
            ms_q_step: 0.01,
            ms_t_samples: 11,
            disjoint_fiber_samples: 64,
            disjoint_q_step: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxLog {
    pub k: usize,
    pub level: f64,
    pub pieces: usize,
    pub eps: f64,
    pub patches: usize,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionLog {
    pub n: usize,
    pub scale: f64,
    pub min_decay: f64,
    pub e2_worst: f64,
    pub boxes: Vec<BoxLog>,
    /// Points checked for `Φ([k, k+1] × W̄_k) ∩ ⋃_{i<k} 𝒲_i = ∅`.
    pub disjoint_samples: usize,
}

impl fmt::Display for ConstructionLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "boxes N = {}", self.n)?;
        writeln!(f, "scale C = {}", self.scale)?;
        writeln!(f, "min -dtau'/dt over boxes m = {}", self.min_decay)?;
        let verdict = if self.n == 0 || self.e2_worst < 0.0 { "passed" } else { "FAILED" };
        writeln!(f, "check C*dtau' < -(N+3): {verdict} (worst C*dtau' + N + 3 = {})", self.e2_worst)?;
        writeln!(f, "disjointness samples = {}", self.disjoint_samples)?;
        for b in &self.boxes {
            writeln!(
                f,
                "box k={} level={} pieces={} eps={} patches={} e1_worst={} inequality_margin={} gap_margin={} ms={}",
                b.k,
                b.level,
                b.pieces,
                b.eps,
                b.patches,
                b.diagnostics.e1_worst,
                b.diagnostics.inequality_margin,
                b.diagnostics.gap_margin,
                b.diagnostics.ms_count
            )?;
        }
        Ok(())
    }
}

/// Builds `τ_K` with `∇τ_K·X = g` on `K` from a base Lyapunov function of
/// `raw`. `rec` is the recurrent-cell estimate `K` and the sections must
/// avoid.
pub fn construct_prescribed(
    raw: &VectorField,
    k: &Region,
    g: &ScalarField,
    base: &BaseLyapunov,
    rec: Option<&RecurrentSet>,
    cfg: &ConstructConfig,
) -> Result<(PrescribedLyapunov, ConstructionLog)> {
    let system = ReducedSystem::new(raw, g, k, cfg.uk_margin, cfg.collar_fraction).map_err(|e| e.at_stage("reduce"))?;
    let z = system.field().clone();
    let boxes = choose_cover(k, base.scalar(), &z, rec, &cfg.cover).map_err(|e| e.at_stage("cover"))?;
    let plan = scale_constant(boxes, base.scalar(), &z, &cfg.scale).map_err(|e| e.at_stage("scale"))?;
    let mut log = ConstructionLog {
        n: plan.n(),
        scale: plan.scale,
        min_decay: plan.min_decay,
        e2_worst: plan.e2_worst,
        boxes: Vec::new(),
        disjoint_samples: 0,
    };
    let modify = ModifyConfig { ms_cell: cfg.ms_q_step, ..cfg.modify };
    let mut stack =
        ModifiedStack { system, base: base.clone(), scale: plan.scale, boxes: plan.boxes, mods: Vec::new() };
    for kk in 1..=stack.boxes.len() {
        let fbox = &stack.boxes[kk - 1];
        let earlier = &stack.boxes[..kk - 1];
        log.disjoint_samples += check_disjoint(fbox, earlier, cfg).map_err(|e| e.at_stage("disjointness"))?;
        let ms = scan_ms(fbox, earlier, cfg).map_err(|e| e.at_stage("m-scan"))?;
        let m = modify_box(&stack.lower_on_box(kk), piece_intervals(fbox), kk, &ms, &modify)
            .map_err(|e| e.at_stage("modify"))?;
        log.boxes.push(BoxLog {
            k: kk,
            level: fbox.level(),
            pieces: fbox.section.pieces.len(),
            eps: m.eps,
            patches: m.patches.len(),
            diagnostics: m.diagnostics,
        });
        stack.mods.push(m);
    }
    Ok((PrescribedLyapunov::new(stack), log))
}

fn outer_q_grid(b: &FlowBox, step: f64) -> Vec<f64> {
    b.section
        .pieces
        .iter()
        .flat_map(|p| {
            let n = ((p.outer.len() / step).ceil() as usize).max(2) + 1;
            p.outer.grid(n).collect::<Vec<_>>()
        })
        .collect()
}

/// Samples `Φ([k, k+1] × W̄_k)` and rejects any point inside an earlier box.
fn check_disjoint(b: &FlowBox, earlier: &[FlowBox], cfg: &ConstructConfig) -> Result<usize> {
    if earlier.is_empty() {
        return Ok(0);
    }
    let k = b.k as f64;
    let qs = outer_q_grid(b, cfg.disjoint_q_step);
    let m = cfg.disjoint_fiber_samples.max(2) - 1;
    let rows = par::map(Execution::default(), &qs, |&q| -> Result<usize> {
        let pts = b.fiber(q, k, k + 1.0, m)?;
        for (t, p) in &pts {
            if let Some(i) = earlier.iter().position(|e| e.inverse(p).is_some()) {
                return Err(Error::Rejected(format!("Φ({t}, W(q = {q})) of box {} lies in box {}", b.k, i + 1)));
            }
        }
        Ok(pts.len())
    });
    rows.into_iter().sum()
}

/// Parameters `q ∈ W̄` whose fiber meets `M = ⋃_{i<k} 𝒱̄_i` at times in
/// `[-7/4, -5/4]`.
fn scan_ms(b: &FlowBox, earlier: &[FlowBox], cfg: &ConstructConfig) -> Result<Vec<MsSample>> {
    if earlier.is_empty() {
        return Ok(Vec::new());
    }
    let qs = outer_q_grid(b, cfg.ms_q_step);
    let m = cfg.ms_t_samples.max(2) - 1;
    let rows = par::map(Execution::default(), &qs, |&q| -> Result<Option<MsSample>> {
        let times: Vec<f64> = b
            .fiber(q, MS_LO, MS_HI, m)?
            .into_iter()
            .filter(|(_, p)| earlier.iter().any(|e| e.inverse_inner_closed(p).is_some()))
            .map(|(t, _)| t)
            .collect();
        Ok((!times.is_empty()).then_some(MsSample { q, times }))
    });
    Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}
