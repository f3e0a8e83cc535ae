//! The four-step modification of a function on one flow box, in box
//! coordinates `(t, q)` where the flow is the constant field `e₁`.

use super::bump::{radial_bump, SmoothStep};
use crate::flow::{level_time, Interval};
use crate::par::{self, Execution};
use crate::{Error, Jet, Result};
use std::collections::HashMap;
use std::sync::RwLock;

/// Window `[-7/4, -1]` in which the seam times `φ_j(q)` live.
pub const PHI_LO: f64 = -1.75;
pub const PHI_HI: f64 = -1.0;
/// Time slab `[-7/4, -5/4]` defining `M_s`.
pub const MS_LO: f64 = -1.75;
pub const MS_HI: f64 = -1.25;

/// A function on box coordinates with its `t`-derivative.
pub trait BoxFunction: Sync {
    fn jet(&self, t: f64, q: f64) -> Result<Jet>;
}

impl<F> BoxFunction for F
where
    F: Fn(f64, f64) -> Result<Jet> + Sync,
{
    fn jet(&self, t: f64, q: f64) -> Result<Jet> {
        self(t, q)
    }
}

/// One patch `U_j = (center − radius, center + radius)` of the step-2
/// cover, with the level `c_j` whose crossing time is `φ_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverPatch {
    pub center: f64,
    pub radius: f64,
    pub level: f64,
}

impl CoverPatch {
    /// Unnormalized partition weight `ψ_j`, positive exactly on `U_j`.
    pub fn weight(&self, q: f64) -> f64 {
        radial_bump(q, self.center, self.radius, 0.5, 1.0)
    }

    /// Profile used for `ν₁`: 1 on the inner half, 0 beyond `0.8·radius`.
    pub fn core(&self, q: f64) -> f64 {
        radial_bump(q, self.center, self.radius, 0.5, 0.8)
    }

    pub fn contains(&self, q: f64) -> bool {
        (q - self.center).abs() < self.radius
    }
}

/// Section geometry seen by the modification: per piece, the outer
/// interval `W` and inner interval `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct PieceIntervals {
    pub outer: Interval,
    pub inner: Interval,
}

impl PieceIntervals {
    /// `ν₂` on this piece: 1 on `[v.lo − m_L/4, v.hi + m_R/4]`, supported in
    /// `[w.lo + m_L/4, w.hi − m_R/4]`.
    pub fn nu2(&self, q: f64) -> f64 {
        let (w, v) = (self.outer, self.inner);
        let ml = v.lo - w.lo;
        let mr = w.hi - v.hi;
        let up = SmoothStep::new(w.lo + 0.25 * ml, v.lo - 0.25 * ml).value(q);
        let down = SmoothStep::new(v.hi + 0.25 * mr, w.hi - 0.25 * mr).value(q);
        up * (1.0 - down)
    }
}

/// All data fixing `τ̃` on one box given the function `τ` it modifies.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxModification {
    /// Induction index; the box has half width `k + 1`.
    pub k: usize,
    /// Step-3 parameter `ε ∈ (0, 1/2)`.
    pub eps: f64,
    pub patches: Vec<CoverPatch>,
    pub pieces: Vec<PieceIntervals>,
    pub diagnostics: Diagnostics,
    memo: QMemo,
}

/// Grid spacing of the `q`-memo.
pub const MEMO_CELL: f64 = 1e-6;

/// Memo of the `q`-only quantities `τ(−1, q)` (slot 0) and `φ_j(q)`
/// (slot `j + 1`) on a `q` grid of spacing [`MEMO_CELL`]. Lookups
/// interpolate linearly between the two neighbouring nodes, so memoized
/// values stay continuous in `q`.
#[derive(Default)]
struct QMemo {
    map: RwLock<HashMap<(usize, i64), f64>>,
}

impl QMemo {
    fn node(&self, slot: usize, n: i64, compute: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        if let Some(&v) = self.map.read().expect("memo lock").get(&(slot, n)) {
            return Ok(v);
        }
        let v = compute(n as f64 * MEMO_CELL)?;
        self.map.write().expect("memo lock").insert((slot, n), v);
        Ok(v)
    }

    fn get(&self, slot: usize, q: f64, compute: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        let x = q / MEMO_CELL;
        let n0 = x.floor();
        let w = x - n0;
        let n0 = n0 as i64;
        let v0 = match self.node(slot, n0, compute) {
            Ok(v) => v,
            Err(_) => return compute(q),
        };
        if w == 0.0 {
            return Ok(v0);
        }
        match self.node(slot, n0 + 1, compute) {
            Ok(v1) => Ok((1.0 - w) * v0 + w * v1),
            Err(_) => compute(q),
        }
    }

    fn len(&self) -> usize {
        self.map.read().expect("memo lock").len()
    }
}

impl Clone for QMemo {
    fn clone(&self) -> Self {
        QMemo::default()
    }
}

impl PartialEq for QMemo {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl std::fmt::Debug for QMemo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "QMemo({} entries)", self.len())
    }
}

/// Sampled margins recorded while building a modification.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// `max τ̇ + k + 3` over `[k, k+1] × W̄` (negative means E1 holds).
    pub e1_worst: f64,
    /// `min τ₂(k+1,q) − τ(−1,q) + k + 11/4`.
    pub inequality_margin: f64,
    /// `min (τ₂ − τ)` over `[k+1−2ε, k+1] × W̄`.
    pub gap_margin: f64,
    /// Number of sampled parameters in `M_s`.
    pub ms_count: usize,
}

/// Every intermediate function at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepJets {
    pub tau: Jet,
    pub tau1: Jet,
    pub tau2: Jet,
    pub tau3: Jet,
    pub tau4: Jet,
}

impl BoxModification {
    pub fn new(
        k: usize,
        eps: f64,
        patches: Vec<CoverPatch>,
        pieces: Vec<PieceIntervals>,
        diagnostics: Diagnostics,
    ) -> Self {
        BoxModification { k, eps, patches, pieces, diagnostics, memo: QMemo::default() }
    }

    /// Number of memoized `q`-nodes.
    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// `τ(−1, q)`, memoized.
    pub fn anchor(&self, f: &dyn BoxFunction, q: f64) -> Result<f64> {
        self.memo.get(0, q, &|q| Ok(f.jet(-1.0, q)?.value))
    }

    pub fn half_width(&self) -> f64 {
        self.k as f64 + 1.0
    }

    pub fn mu_minus(&self) -> SmoothStep {
        SmoothStep::new(-1.5, -1.25)
    }

    pub fn mu_plus(&self) -> SmoothStep {
        let e = self.half_width();
        SmoothStep::new(e - 2.0 * self.eps, e - self.eps)
    }

    pub fn nu1(&self, q: f64) -> f64 {
        1.0 - self.patches.iter().map(|p| 1.0 - p.core(q)).product::<f64>()
    }

    pub fn nu2(&self, q: f64) -> f64 {
        self.pieces.iter().find(|p| p.outer.contains_closed(q)).map_or(0.0, |p| p.nu2(q))
    }

    /// Partition weights `λ_j(q)` that are nonzero.
    pub fn lambdas(&self, q: f64) -> Vec<(usize, f64)> {
        let w: Vec<(usize, f64)> =
            self.patches.iter().enumerate().map(|(j, p)| (j, p.weight(q))).filter(|&(_, w)| w > 0.0).collect();
        let s: f64 = w.iter().map(|&(_, w)| w).sum();
        w.into_iter().map(|(j, w)| (j, w / s)).collect()
    }

    /// `φ_j(q)`: the time in `[-7/4, -1]` where `τ(·, q)` crosses `c_j`,
    /// memoized.
    pub fn phi(&self, f: &dyn BoxFunction, j: usize, q: f64) -> Result<f64> {
        let c = self.patches[j].level;
        self.memo.get(j + 1, q, &|q| level_time(|u| f.jet(u, q), c, PHI_LO, PHI_HI, 0.5 * (PHI_LO + PHI_HI)))
    }

    /// Step 1. `a` is `τ(−1, q)`.
    pub fn step1(&self, t: f64, tau: Jet, a: f64) -> Jet {
        let mu = self.mu_minus();
        let (m, dm) = (mu.value(t), mu.derivative(t));
        let alt = a - (t + 1.5);
        Jet::new((1.0 - m) * tau.value + m * alt, (1.0 - m) * tau.deriv - m + dm * (alt - tau.value))
    }

    /// `σ(t, q) = Σ λ_j σ_{p_j}`; `None` where no patch is active.
    pub fn sigma(&self, f: &dyn BoxFunction, t: f64, q: f64, tau: Jet) -> Result<Option<Jet>> {
        let lambdas = self.lambdas(q);
        if lambdas.is_empty() {
            return Ok(None);
        }
        let mut s = Jet::new(0.0, 0.0);
        for (j, l) in lambdas {
            let sj = if t <= PHI_LO {
                tau
            } else {
                let phi = self.phi(f, j, q)?;
                if t <= phi {
                    tau
                } else {
                    Jet::new(self.patches[j].level - t + phi, -1.0)
                }
            };
            s.value += l * sj.value;
            s.deriv += l * sj.deriv;
        }
        Ok(Some(s))
    }

    /// Step 2 from `τ₁`.
    pub fn step2(&self, f: &dyn BoxFunction, t: f64, q: f64, tau: Jet, tau1: Jet) -> Result<Jet> {
        let nu = self.nu1(q);
        if nu == 0.0 || t <= PHI_LO {
            return Ok(tau1);
        }
        let s = self.sigma(f, t, q, tau)?.expect("ν₁ > 0 implies an active patch");
        Ok(Jet::new(nu * s.value + (1.0 - nu) * tau1.value, nu * s.deriv + (1.0 - nu) * tau1.deriv))
    }

    pub fn step3(&self, t: f64, tau: Jet, tau2: Jet) -> Jet {
        let mu = self.mu_plus();
        let (m, dm) = (mu.value(t), mu.derivative(t));
        Jet::new(
            (1.0 - m) * tau2.value + m * tau.value,
            (1.0 - m) * tau2.deriv + m * tau.deriv + dm * (tau.value - tau2.value),
        )
    }

    pub fn step4(&self, q: f64, tau: Jet, tau3: Jet) -> Jet {
        let nu = self.nu2(q);
        Jet::new(nu * tau3.value + (1.0 - nu) * tau.value, nu * tau3.deriv + (1.0 - nu) * tau.deriv)
    }

    /// All steps at `(t, q)` without shortcuts; `tau` is `τ(t, q)`.
    pub fn steps(&self, f: &dyn BoxFunction, t: f64, q: f64, tau: Jet) -> Result<StepJets> {
        let a = self.anchor(f, q)?;
        let tau1 = self.step1(t, tau, a);
        let tau2 = self.step2(f, t, q, tau, tau1)?;
        let tau3 = self.step3(t, tau, tau2);
        let tau4 = self.step4(q, tau, tau3);
        Ok(StepJets { tau, tau1, tau2, tau3, tau4 })
    }

    /// `τ̃(t, q)`; returns `tau` itself wherever the modification is the
    /// identity, so coincidence with `τ` is exact there.
    pub fn eval(&self, f: &dyn BoxFunction, t: f64, q: f64, tau: Jet) -> Result<Jet> {
        let nu2 = self.nu2(q);
        if nu2 == 0.0 || self.mu_plus().value(t) == 1.0 {
            return Ok(tau);
        }
        let tau1 = if t <= -1.5 { tau } else { self.step1(t, tau, self.anchor(f, q)?) };
        let tau2 = self.step2(f, t, q, tau, tau1)?;
        let tau3 = self.step3(t, tau, tau2);
        Ok(self.step4(q, tau, tau3))
    }
}

/// Sampling and search settings for [`modify_box`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModifyConfig {
    /// Parameter spacing of the `q` samples over `W̄`.
    pub q_step: f64,
    /// Time samples per unit length on the E1 and ε checks.
    pub t_samples: usize,
    /// Initial patch radius before halving.
    pub patch_radius: f64,
    /// Allowed `|∂τ + 1|` on the seam slab.
    pub slab_tol: f64,
    /// Half-height of the slab checked around each seam.
    pub slab_halfwidth: f64,
    pub max_halvings: u32,
    /// Half-length of the `q` interval each `M_s` sample stands for.
    pub ms_cell: f64,
}

impl Default for ModifyConfig {
    fn default() -> Self {
        ModifyConfig {
            q_step: 0.02,
            t_samples: 16,
            patch_radius: 0.3,
            slab_tol: 1e-8,
            slab_halfwidth: 0.02,
            max_halvings: 12,
            ms_cell: 0.01,
        }
    }
}

/// A sampled parameter of `M_s` with the slab times at which it lies in `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct MsSample {
    pub q: f64,
    pub times: Vec<f64>,
}

fn q_samples(pieces: &[PieceIntervals], step: f64) -> Vec<f64> {
    pieces
        .iter()
        .flat_map(|p| {
            let n = ((p.outer.len() / step).ceil() as usize).max(2) + 1;
            p.outer.grid(n).collect::<Vec<_>>()
        })
        .collect()
}

/// Builds the modification of `f` on a box of half width `k + 1` with the
/// given section geometry and sampled `M_s`.
pub fn modify_box(
    f: &dyn BoxFunction,
    pieces: Vec<PieceIntervals>,
    k: usize,
    ms: &[MsSample],
    cfg: &ModifyConfig,
) -> Result<BoxModification> {
    if k == 0 {
        return Err(Error::InvalidInput("box index k starts at 1".into()));
    }
    let kf = k as f64;
    let qs = q_samples(&pieces, cfg.q_step);
    let tn = cfg.t_samples.max(2);

    let e1_rows = par::map(Execution::default(), &qs, |&q| -> Result<f64> {
        let mut w = f64::NEG_INFINITY;
        for i in 0..=tn {
            let t = kf + i as f64 / tn as f64;
            w = w.max(f.jet(t, q)?.deriv + kf + 3.0);
        }
        Ok(w)
    });
    let e1_worst = e1_rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !(e1_worst < 0.0) {
        return Err(Error::Rejected(format!("E1 fails on box {k}: max τ̇ + k + 3 = {e1_worst} on [k, k+1] × W̄")));
    }

    let patches = build_cover(f, &pieces, ms, cfg)?;
    let diagnostics = Diagnostics { e1_worst, ms_count: ms.len(), ..Default::default() };
    let mut m = BoxModification::new(k, 0.25, patches, pieces, diagnostics);

    // τ₂ − τ on [k + 1/2, k + 1] does not depend on ε
    let top = kf + 1.0;
    let rows = par::map(Execution::default(), &qs, |&q| -> Result<(f64, Vec<(f64, f64)>)> {
        let a = m.anchor(f, q)?;
        let mut ineq = f64::INFINITY;
        let mut gaps = Vec::with_capacity(tn + 1);
        for i in 0..=tn {
            let t = top - 0.5 * i as f64 / tn as f64;
            let tau = f.jet(t, q)?;
            let tau2 = m.step2(f, t, q, tau, m.step1(t, tau, a))?;
            gaps.push((t, tau2.value - tau.value));
            if i == 0 {
                ineq = tau2.value - (a - kf - 2.75);
            }
        }
        Ok((ineq, gaps))
    });
    let mut ineq = f64::INFINITY;
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        let (i, g) = r?;
        ineq = ineq.min(i);
        gaps.extend(g);
    }
    m.diagnostics.inequality_margin = ineq;
    if !(ineq >= -1e-9) {
        return Err(Error::Rejected(format!("box {k}: τ₂(k+1,q) ≥ τ(−1,q) − k − 11/4 violated by {}", -ineq)));
    }
    let mut eps = 0.25;
    for _ in 0..=cfg.max_halvings {
        let lo = top - 2.0 * eps;
        let g = gaps.iter().filter(|(t, _)| *t >= lo - 1e-12).map(|&(_, g)| g).fold(f64::INFINITY, f64::min);
        if g > 0.0 {
            m.eps = eps;
            m.diagnostics.gap_margin = g;
            return Ok(m);
        }
        eps *= 0.5;
    }
    let g = gaps.iter().map(|&(_, g)| g).fold(f64::INFINITY, f64::min);
    Err(Error::Rejected(format!("box {k}: no ε with τ < τ₂ near t = k+1 (min gap {g})")))
}

/// Interval of `W̄` attributed to sampled `M_s` points, with the slab time
/// used for patch levels.
struct MsRun {
    lo: f64,
    hi: f64,
    outer: Interval,
    samples: Vec<(f64, f64)>,
}

impl MsRun {
    /// Median slab time of the sample nearest to `q`.
    fn time_near(&self, q: f64) -> f64 {
        self.samples
            .iter()
            .min_by(|a, b| (a.0 - q).abs().total_cmp(&(b.0 - q).abs()))
            .map_or(0.5 * (MS_LO + MS_HI), |s| s.1)
    }
}

/// Each sample stands for `[q − cell, q + cell] ∩ W̄`; overlapping
/// intervals on one piece are merged.
fn ms_runs(pieces: &[PieceIntervals], ms: &[MsSample], cell: f64) -> Result<Vec<MsRun>> {
    let mut items: Vec<(usize, f64, f64)> = Vec::new();
    for s in ms.iter().filter(|s| !s.times.is_empty()) {
        let pi = pieces
            .iter()
            .position(|p| p.outer.contains_closed(s.q))
            .ok_or_else(|| Error::InvalidInput(format!("M_s sample {} outside W̄", s.q)))?;
        let mut times = s.times.clone();
        times.sort_by(f64::total_cmp);
        items.push((pi, s.q, times[times.len() / 2]));
    }
    items.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut runs: Vec<(usize, MsRun)> = Vec::new();
    for (pi, q, t) in items {
        let outer = pieces[pi].outer;
        let (lo, hi) = ((q - cell).max(outer.lo), (q + cell).min(outer.hi));
        match runs.last_mut() {
            Some((pj, r)) if *pj == pi && lo <= r.hi => {
                r.hi = r.hi.max(hi);
                r.samples.push((q, t));
            }
            _ => runs.push((pi, MsRun { lo, hi, outer, samples: vec![(q, t)] })),
        }
    }
    Ok(runs.into_iter().map(|(_, r)| r).collect())
}

/// Greedy left-to-right cover of the sampled `M_s`, each patch shrunk
/// until its seam slab lies where `∂τ = −1`. A patch counts for the inner
/// 80 % of the set where `ν₁ ≡ 1`.
fn build_cover(
    f: &dyn BoxFunction,
    pieces: &[PieceIntervals],
    ms: &[MsSample],
    cfg: &ModifyConfig,
) -> Result<Vec<CoverPatch>> {
    let mut patches: Vec<CoverPatch> = Vec::new();
    // neighbouring patches usually need similar radii
    let mut start = cfg.patch_radius;
    for run in ms_runs(pieces, ms, cfg.ms_cell)? {
        let mut x = run.lo;
        loop {
            let mut radius = start;
            let mut found = None;
            for _ in 0..=cfg.max_halvings {
                let center = (x + 0.4 * radius).min(run.outer.hi);
                let t_c = run.time_near(center).clamp(PHI_LO + 0.05, PHI_HI - 0.05);
                let patch = CoverPatch { center, radius, level: f.jet(t_c, center)?.value };
                if seam_in_unit_region(f, &patch, run.outer, cfg)? {
                    found = Some(patch);
                    break;
                }
                radius *= 0.5;
            }
            let patch = found.ok_or_else(|| {
                Error::Rejected(format!("cover shrink failed at q = {x}: seam slab never inside ∂τ ≡ −1"))
            })?;
            start = (4.0 * patch.radius).min(cfg.patch_radius);
            patches.push(patch);
            x = patch.center + 0.4 * patch.radius;
            if x >= run.hi {
                break;
            }
        }
    }
    Ok(patches)
}

fn seam_in_unit_region(f: &dyn BoxFunction, patch: &CoverPatch, outer: Interval, cfg: &ModifyConfig) -> Result<bool> {
    let lo = (patch.center - patch.radius).max(outer.lo);
    let hi = (patch.center + patch.radius).min(outer.hi);
    for q in Interval::new(lo, hi).grid(21) {
        let phi = match level_time(|u| f.jet(u, q), patch.level, PHI_LO, PHI_HI, 0.5 * (PHI_LO + PHI_HI)) {
            Ok(phi) => phi,
            Err(Error::Bracket { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        for d in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let u = phi + d * cfg.slab_halfwidth;
            if (f.jet(u, q)?.deriv + 1.0).abs() > cfg.slab_tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(k: usize, patches: Vec<CoverPatch>) -> BoxModification {
        BoxModification::new(
            k,
            0.25,
            patches,
            vec![PieceIntervals { outer: Interval::new(-1.25, 1.25), inner: Interval::new(-1.0, 1.0) }],
            Diagnostics::default(),
        )
    }

    #[test]
    fn step1_examples() {
        let m = unit_box(1, vec![]);
        let tau = |t: f64| Jet::new(0.3 - t, -1.0);
        // μ₋ = 0
        assert_eq!(m.step1(-2.0, tau(-2.0), tau(-1.0).value), tau(-2.0));
        // unit speed, t ≥ −5/4: τ₁ = τ − 1/2
        for t in [-1.25, 0.0, 1.7] {
            let j = m.step1(t, tau(t), tau(-1.0).value);
            assert!((j.value - (tau(t).value - 0.5)).abs() < 1e-15);
            assert_eq!(j.deriv, -1.0);
        }
        // τ = −2t at t = −5/4
        let j = m.step1(-1.25, Jet::new(2.5, -2.0), 2.0);
        assert!((j.value - 1.75).abs() < 1e-15);
    }

    #[test]
    fn empty_cover_leaves_step1() {
        let m = unit_box(1, vec![]);
        let f = |t: f64, q: f64| Ok(Jet::new(q * q - t, -1.0));
        let tau = f(0.4, 0.2).unwrap();
        let t1 = m.step1(0.4, tau, f(-1.0, 0.2).unwrap().value);
        assert_eq!(m.step2(&f, 0.4, 0.2, tau, t1).unwrap(), t1);
        assert_eq!(m.nu1(0.2), 0.0);
    }

    #[test]
    fn nu2_profile() {
        let p = PieceIntervals { outer: Interval::new(-1.25, 1.25), inner: Interval::new(-1.0, 1.0) };
        assert_eq!(p.nu2(0.0), 1.0);
        assert_eq!(p.nu2(-1.0625), 1.0);
        assert_eq!(p.nu2(1.0625), 1.0);
        assert_eq!(p.nu2(-1.1875), 0.0);
        assert_eq!(p.nu2(1.2), 0.0);
    }

    #[test]
    fn modify_unit_speed_box() {
        let f = |t: f64, q: f64| Ok(Jet::new(3.0 + 0.2 * q - t, -1.0));
        let pieces = vec![PieceIntervals { outer: Interval::new(-1.25, 1.25), inner: Interval::new(-1.0, 1.0) }];
        let ms: Vec<MsSample> =
            (0..11).map(|i| MsSample { q: -0.5 + 0.05 * i as f64, times: vec![-1.6, -1.5, -1.4] }).collect();
        // E1 fails for a unit-speed τ
        assert!(modify_box(&f, pieces.clone(), 1, &ms, &ModifyConfig::default()).is_err());
    }
}
