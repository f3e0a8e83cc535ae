use super::fd::fd_orbital_derivative_with;
use crate::baselyap::LyapunovEvaluator;
use crate::chainrec::{dist_to_recurrent, RecurrentSet};
use crate::construct::{box_samples, BoxFunction, LevelOnBox, ModifiedStack, PrescribedLyapunov};
use crate::flow::{flow_fixed, flow_map, FlowMapConfig};
use crate::par::{self, Execution};
use crate::sampling::Halton2;
use crate::system::{Aabb, Region, ScalarField, VectorField};
use crate::{Point, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default tolerances of the acceptance suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `|τ̇_K − g| ≤ prescription · max_K |g|`.
    pub prescription: f64,
    /// `|fd − analytic| ≤ fd_vs_analytic · (1 + |analytic|)` on `K`.
    pub fd_vs_analytic: f64,
    /// The same comparison on the whole sampling domain.
    pub fd_vs_analytic_global: f64,
    pub locality: f64,
    /// Required bound `τ̇_K < −negativity`.
    pub negativity: f64,
    pub chart: f64,
    pub flow_group: f64,
    /// Identities that hold exactly in exact arithmetic, relative to `1 + |τ|`.
    pub exact: f64,
    pub unit_speed: f64,
    /// Minimum observed first-difference convergence order on seams.
    pub seam_order: f64,
    /// Maximum ratio of second differences as `δ` halves.
    pub seam_second_ratio: f64,
    pub base_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            prescription: 1e-4,
            fd_vs_analytic: 1e-6,
            fd_vs_analytic_global: 1e-4,
            locality: 1e-7,
            negativity: 1e-3,
            chart: 1e-7,
            flow_group: 1e-7,
            exact: 1e-9,
            unit_speed: 1e-6,
            seam_order: 1.8,
            seam_second_ratio: 1.5,
            base_residual: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Sample budget per region.
    pub samples: usize,
    pub seed: u64,
    /// Step of the flow finite differences for prescription, negativity
    /// and the global derivative comparison.
    pub fd_delta: f64,
    /// Step for the derivative comparison on `K`, where `τ_K` is affine
    /// along the flow and a larger step only reduces rounding.
    pub fd_delta_k: f64,
    pub flow: FlowMapConfig,
    /// Sampling domain `U` for locality, negativity and the flow group.
    pub domain: Aabb,
    /// Recurrent cells excluded from the negativity check, inflated by
    /// `recurrent_inflation` cell widths.
    pub recurrent: Option<RecurrentSet>,
    pub recurrent_inflation: f64,
    /// `(t, q)` grid per box for the step invariants.
    pub box_q: usize,
    pub box_t: usize,
    /// Initial seam finite-difference step and the number of halvings
    /// allowed before the observed order must be reached.
    pub seam_delta: f64,
    pub seam_halvings: u32,
    pub tol: Tolerances,
    pub exec: Execution,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 1000,
            seed: 0,
            fd_delta: 1e-4,
            fd_delta_k: 1e-3,
            flow: FlowMapConfig::default(),
            domain: Aabb::square(3.0),
            recurrent: None,
            recurrent_inflation: 2.0,
            box_q: 24,
            box_t: 48,
            seam_delta: 0.005,
            seam_halvings: 8,
            tol: Tolerances::default(),
            exec: Execution::default(),
        }
    }
}

/// How `worst` is compared with `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    Below,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub base: String,
    pub provenance: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// One `name worst tolerance pass|fail` line per check.
    pub fn machine_lines(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {:e} {:e} {}\n",
                c.name,
                c.worst,
                c.tolerance,
                if c.pass { "pass" } else { "fail" }
            ));
        }
        s
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verification report")?;
        writeln!(f, "  base: {} ({})", self.base, self.provenance)?;
        writeln!(f, "  seed: {}", self.seed)?;
        writeln!(f, "  verdict: {}", if self.pass() { "PASS" } else { "FAIL" })?;
        for c in &self.checks {
            let op = match c.bound {
                Bound::AtMost => "<=",
                Bound::Below => "<",
                Bound::AtLeast => ">=",
            };
            write!(
                f,
                "  [{}] {:<24} n={:<6} worst={:<12.4e} {op} {:.3e}",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.samples,
                c.worst,
                c.tolerance
            )?;
            if c.note.is_empty() {
                writeln!(f)?;
            } else {
                writeln!(f, "  ({})", c.note)?;
            }
        }
        Ok(())
    }
}

type Sample = std::result::Result<f64, String>;

/// Folds per-sample values into a check. Evaluation errors are failures;
/// `None` samples are skipped.
fn fold(name: &str, tol: f64, bound: Bound, vals: &[Option<Sample>], note: impl Into<String>) -> CheckResult {
    let mut note: String = note.into();
    let mut n = 0;
    let mut errors = 0;
    let mut first_err = None;
    let start = if bound == Bound::AtLeast { f64::INFINITY } else { f64::NEG_INFINITY };
    let mut worst = start;
    for v in vals.iter().flatten() {
        n += 1;
        match v {
            Ok(x) if x.is_nan() => {
                errors += 1;
                first_err.get_or_insert_with(|| "NaN".to_string());
            }
            Ok(x) if bound == Bound::AtLeast => worst = worst.min(*x),
            Ok(x) => worst = worst.max(*x),
            Err(e) => {
                errors += 1;
                first_err.get_or_insert_with(|| e.clone());
            }
        }
    }
    let mut pass = match bound {
        Bound::AtMost => worst <= tol,
        Bound::Below => worst < tol,
        Bound::AtLeast => worst >= tol,
    };
    if n == errors {
        worst = 0.0;
        pass = true;
        if n == 0 {
            note = if note.is_empty() { "vacuous".into() } else { format!("vacuous; {note}") };
        }
    }
    if errors > 0 {
        pass = false;
        worst = if bound == Bound::AtLeast { f64::NEG_INFINITY } else { f64::INFINITY };
        let e = format!("{errors} evaluation errors, first: {}", first_err.unwrap_or_default());
        note = if note.is_empty() { e } else { format!("{note}; {e}") };
    }
    CheckResult { name: name.into(), samples: n, worst, tolerance: tol, bound, pass, note }
}

fn flag(name: &str, ok: bool, worst: f64, tol: f64, bound: Bound, samples: usize, note: String) -> CheckResult {
    CheckResult { name: name.into(), samples, worst, tolerance: tol, bound, pass: ok, note }
}

fn halton_in(domain: &Aabb, n: usize, seed: u64) -> Vec<Point> {
    let w = domain.width();
    Halton2::new(seed).take(n).map(|[u, v]| Point::new(domain.lo.x + u * w.x, domain.lo.y + v * w.y)).collect()
}

/// `n` points of `domain` that satisfy `keep`, drawn in batches.
fn filtered(
    exec: Execution,
    domain: &Aabb,
    n: usize,
    seed: u64,
    keep: impl Fn(&Point) -> bool + Sync + Send,
) -> Vec<Point> {
    let mut out = Vec::with_capacity(n);
    let mut hal = Halton2::new(seed);
    let w = domain.width();
    let mut drawn = 0;
    while out.len() < n && drawn < 50 * n.max(1) {
        let batch: Vec<Point> =
            (&mut hal).take(n.max(64)).map(|[u, v]| Point::new(domain.lo.x + u * w.x, domain.lo.y + v * w.y)).collect();
        drawn += batch.len();
        let ok = par::map(exec, &batch, |p| keep(p));
        out.extend(batch.into_iter().zip(ok).filter(|(_, k)| *k).map(|(p, _)| p).take(n - out.len()));
    }
    out
}

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

/// `|fd − analytic| / (1 + |analytic|)`.
fn agreement(fd: Sample, an: Sample) -> Sample {
    let (fd, an) = (fd?, an?);
    Ok((fd - an).abs() / (1.0 + an.abs()))
}

/// Re-checks every property the construction relies on. Failures become
/// report entries; this never returns an error.
pub fn verify_report(
    tau: &PrescribedLyapunov,
    x_raw: &VectorField,
    k: &Region,
    g: &ScalarField,
    cfg: &VerifyConfig,
) -> VerificationReport {
    let stack = tau.stack();
    let tol = &cfg.tol;
    let exec = cfg.exec;
    let mut checks = Vec::new();

    // prescription and the FD oracle against the analytic derivative on K
    let ks = k.samples(cfg.samples, cfg.seed);
    let gmax = ks.iter().map(|p| g.eval(p).abs()).fold(0.0, f64::max);
    let on_k: Vec<(Sample, Sample)> = par::map(exec, &ks, |p| {
        let fd = fd_orbital_derivative_with(tau, x_raw, p, cfg.fd_delta, &cfg.flow).map_err(err);
        let presc = fd.map(|d| (d - g.eval(p)).abs());
        let coarse = fd_orbital_derivative_with(tau, x_raw, p, cfg.fd_delta_k, &cfg.flow).map_err(err);
        (presc, agreement(coarse, tau.jet(p).map(|j| j.deriv).map_err(err)))
    });
    let mut note = format!("max_K |g| = {gmax:.4e}");
    if let Some(m) = stack.base.model() {
        note.push_str(&format!("; collocation base node residual {:.3e}", m.max_node_residual()));
    }
    let presc: Vec<Option<Sample>> = on_k.iter().map(|(a, _)| Some(a.clone())).collect();
    let mut c = fold("prescription", tol.prescription * gmax.max(f64::MIN_POSITIVE), Bound::AtMost, &presc, note);
    if stack.base.model().is_some() {
        c.note.push_str(&format!("; residual-induced margin {:.3e}", c.tolerance - c.worst));
    }
    checks.push(c);

    let covered = par::map(exec, &ks, |p| {
        let inside = stack.boxes.iter().any(|b| b.inverse_inner_closed(p).is_some());
        Some(Ok(if inside { 0.0 } else { 1.0 }))
    });
    checks.push(fold("k_cover", 0.0, Bound::AtMost, &covered, "K inside the closed inner boxes"));

    // locality; the square grows toward the field's domain until enough
    // points outside the boxes are found
    let fd = x_raw.domain();
    let mut dom = cfg.domain;
    let mut outside = Vec::new();
    for round in 0..8u64 {
        outside = filtered(exec, &dom, cfg.samples, cfg.seed.wrapping_add(1 + 1000 * round), |p| !stack.in_any_box(p));
        let next = Aabb::new((dom.lo - 0.5 * dom.width()).sup(&fd.lo), (dom.hi + 0.5 * dom.width()).inf(&fd.hi));
        if outside.len() >= cfg.samples || next == dom {
            break;
        }
        dom = next;
    }
    let loc = par::map(exec, &outside, |p| {
        let b = stack.scale * stack.base.scalar().eval(p);
        Some(tau.value(p).map(|v| (v - b).abs()).map_err(err))
    });
    let [x0, x1, y0, y1] = dom.bounds();
    let mut note = format!("sampled [{x0}, {x1}] × [{y0}, {y1}]");
    if outside.len() < cfg.samples {
        note.push_str(&format!("; only {} points outside the boxes found", outside.len()));
    }
    checks.push(fold("locality", tol.locality, Bound::AtMost, &loc, note));

    // negativity off the inflated recurrent set, plus FD against analytic there
    let margin = cfg.recurrent.as_ref().map(|r| {
        let h = r.grid.h();
        cfg.recurrent_inflation * h.x.max(h.y)
    });
    let free = filtered(exec, &cfg.domain, cfg.samples, cfg.seed.wrapping_add(2), |p| match (&cfg.recurrent, margin) {
        (Some(r), Some(m)) => dist_to_recurrent(r, p) > m,
        _ => true,
    });
    let off: Vec<(Sample, Sample)> = par::map(exec, &free, |p| {
        let fd = fd_orbital_derivative_with(tau, x_raw, p, cfg.fd_delta, &cfg.flow).map_err(err);
        let agree = agreement(fd.clone(), tau.jet(p).map(|j| j.deriv).map_err(err));
        (fd, agree)
    });
    let neg: Vec<Option<Sample>> = off.iter().map(|(a, _)| Some(a.clone())).collect();
    let note = match &cfg.recurrent {
        Some(r) => format!("{} recurrent cells excluded", r.cells.len()),
        None => "no recurrent set given".into(),
    };
    checks.push(fold("negativity", -tol.negativity, Bound::Below, &neg, note));
    let agree: Vec<Option<Sample>> = on_k.iter().map(|(_, b)| Some(b.clone())).collect();
    checks.push(fold("fd_vs_analytic", tol.fd_vs_analytic, Bound::AtMost, &agree, "on K, relative to 1 + |τ̇|"));
    let agree: Vec<Option<Sample>> = off.iter().map(|(_, b)| Some(b.clone())).collect();
    checks.push(fold(
        "fd_vs_analytic_global",
        tol.fd_vs_analytic_global,
        Bound::AtMost,
        &agree,
        "off the recurrent set, relative to 1 + |τ̇|",
    ));

    // geometry
    checks.push(chart_round_trip(stack, cfg));
    checks.push(flow_group(x_raw, cfg));

    // scaling
    checks.push(scale_check(stack));
    if let Some(m) = stack.base.model() {
        let r = m.max_node_residual();
        checks.push(flag(
            "base_residual",
            r <= tol.base_residual,
            r,
            tol.base_residual,
            Bound::AtMost,
            m.nodes().len(),
            "collocation node residual; off-node residual bounds the attainable prescription".into(),
        ));
    }

    checks.extend(box_checks(stack, cfg));
    checks.extend(seam_checks(stack, cfg));

    VerificationReport {
        base: stack.base.name().to_string(),
        provenance: stack.base.provenance().as_str().to_string(),
        seed: cfg.seed,
        checks,
    }
}

fn chart_round_trip(stack: &ModifiedStack, cfg: &VerifyConfig) -> CheckResult {
    let mut pts = Vec::new();
    for (i, b) in stack.boxes.iter().enumerate() {
        let hw = b.half_width * (1.0 - 1e-6);
        let total: f64 = b.section.pieces.iter().map(|p| p.outer.len()).sum();
        for [u, v] in Halton2::new(cfg.seed.wrapping_add(10 + i as u64)).take(cfg.samples) {
            // q runs over the concatenated outer intervals
            let mut s = v * total;
            let mut q = 0.0;
            for p in &b.section.pieces {
                if s <= p.outer.len() {
                    q = p.outer.lo + s;
                    break;
                }
                s -= p.outer.len();
            }
            pts.push((i, -hw + 2.0 * hw * u, q));
        }
    }
    let vals = par::map(cfg.exec, &pts, |&(i, t, q)| {
        let b = &stack.boxes[i];
        Some(match b.chart(t, q) {
            Ok(p) => match b.inverse(&p) {
                Some((t2, q2)) => Ok((t - t2).abs().max((q - q2).abs())),
                None => Err(format!("inverse failed at box {} ({t}, {q})", b.k)),
            },
            Err(e) => Err(err(e)),
        })
    });
    fold("chart_round_trip", cfg.tol.chart, Bound::AtMost, &vals, "")
}

fn flow_group(x: &VectorField, cfg: &VerifyConfig) -> CheckResult {
    let pts = halton_in(&cfg.domain, cfg.samples, cfg.seed.wrapping_add(3));
    let times = Halton2::new(cfg.seed.wrapping_add(4)).take(cfg.samples).collect::<Vec<_>>();
    let idx: Vec<usize> = (0..pts.len()).collect();
    let vals = par::map(cfg.exec, &idx, |&i| {
        let p = &pts[i];
        let (s, t) = (times[i][0] - 0.5, times[i][1] - 0.5);
        let two = flow_map(x, p, t, &cfg.flow).and_then(|y| flow_map(x, &y, s, &cfg.flow));
        let one = flow_map(x, p, s + t, &cfg.flow);
        // leaving the field's domain is not a group violation
        match (two, one) {
            (Ok(a), Ok(b)) => Some(Ok((a - b).norm())),
            _ => None,
        }
    });
    fold("flow_group", cfg.tol.flow_group, Bound::AtMost, &vals, "")
}

fn scale_check(stack: &ModifiedStack) -> CheckResult {
    let n = stack.depth() as f64;
    let z = stack.field();
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for b in &stack.boxes {
        match box_samples(b, 0.05, 0.05) {
            Ok(pts) => {
                for p in pts {
                    samples += 1;
                    let d = stack.base.scalar().gradient_or_fd(&p).dot(&z.eval(&p));
                    worst = worst.max(stack.scale * d + n + 3.0);
                }
            }
            Err(e) => return flag("scale_e2", false, f64::INFINITY, 0.0, Bound::Below, samples, err(e)),
        }
    }
    if samples == 0 {
        return flag("scale_e2", true, 0.0, 0.0, Bound::Below, 0, "vacuous".into());
    }
    flag(
        "scale_e2",
        worst < 0.0,
        worst,
        0.0,
        Bound::Below,
        samples,
        format!("C = {:.6e}, N = {}", stack.scale, stack.depth()),
    )
}

#[derive(Default)]
struct BoxAcc {
    below: Vec<Option<Sample>>,
    unit: Vec<Option<Sample>>,
    identity: Vec<Option<Sample>>,
    inequality: Vec<Option<Sample>>,
    gap: Vec<Option<Sample>>,
    step3: Vec<Option<Sample>>,
    step4: Vec<Option<Sample>>,
    decrease: Vec<Option<Sample>>,
    boundary: Vec<Option<Sample>>,
    inner: Vec<Option<Sample>>,
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(1);
    (0..=n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

/// The step invariants on a `(t, q)` grid of every box, evaluated through
/// the unshortcut composition.
fn box_checks(stack: &ModifiedStack, cfg: &VerifyConfig) -> Vec<CheckResult> {
    let tol = &cfg.tol;
    let mut acc = BoxAcc::default();
    let mut eps_ok = true;
    let mut eps_worst: f64 = 0.0;
    for (i, (fbox, m)) in stack.boxes.iter().zip(&stack.mods).enumerate() {
        if !(m.eps > 0.0 && m.eps < 0.5) {
            eps_ok = false;
        }
        eps_worst = eps_worst.max(m.eps);
        let f = LevelOnBox { stack, level: i, fbox };
        let kf = m.k as f64;
        let hw = fbox.half_width;
        let mut pts = Vec::new();
        for piece in &fbox.section.pieces {
            for q in grid(piece.outer.lo, piece.outer.hi, cfg.box_q) {
                for t in grid(-hw, hw, cfg.box_t) {
                    pts.push((t, q));
                }
                // extra rows in the top transition
                for t in grid(hw - 2.0 * m.eps, hw, 8) {
                    pts.push((t, q));
                }
            }
        }
        let rows = par::map(cfg.exec, &pts, |&(t, q)| -> std::result::Result<[Option<f64>; 8], String> {
            let f: &dyn BoxFunction = &f;
            let base = f.jet(t, q).map_err(err)?;
            let s = m.steps(f, t, q, base).map_err(err)?;
            let a = m.anchor(f, q).map_err(err)?;
            let scale = 1.0 + base.value.abs();
            let d = |x: crate::Jet, y: crate::Jet| (x.value - y.value).abs().max((x.deriv - y.deriv).abs()) / scale;
            let top = t == hw;
            Ok([
                (t <= -1.5).then(|| d(s.tau1, s.tau)),
                (t >= -1.25).then(|| (s.tau1.deriv + 1.0).abs()),
                top.then(|| (s.tau1.value - (a - kf - 2.5)).abs() / (1.0 + a.abs())),
                top.then_some((a - kf - 2.75) - s.tau2.value),
                (t >= hw - 2.0 * m.eps).then_some(s.tau.value - s.tau2.value),
                (t >= hw - m.eps).then(|| d(s.tau3, s.tau)),
                (m.nu2(q) == 0.0).then(|| d(s.tau4, s.tau)),
                Some(s.tau1.deriv.max(s.tau2.deriv).max(s.tau3.deriv).max(s.tau4.deriv)),
            ])
        });
        for r in rows {
            match r {
                Ok(v) => {
                    let cols = [
                        &mut acc.below,
                        &mut acc.unit,
                        &mut acc.identity,
                        &mut acc.inequality,
                        &mut acc.gap,
                        &mut acc.step3,
                        &mut acc.step4,
                        &mut acc.decrease,
                    ];
                    for (c, x) in cols.into_iter().zip(v) {
                        c.push(x.map(Ok));
                    }
                }
                Err(e) => acc.decrease.push(Some(Err(e))),
            }
        }

        // the modified level agrees with the level below on the box boundary
        let mut edge = Vec::new();
        let inset = 1e-9 * hw;
        for piece in &fbox.section.pieces {
            for q in grid(piece.outer.lo, piece.outer.hi, cfg.box_q) {
                edge.push((-hw + inset, q));
                edge.push((hw - inset, q));
            }
            for t in grid(-hw + inset, hw - inset, cfg.box_t) {
                edge.push((t, piece.outer.lo));
                edge.push((t, piece.outer.hi));
            }
        }
        acc.boundary.extend(par::map(cfg.exec, &edge, |&(t, q)| {
            Some(
                (|| -> Result<f64> {
                    let p = fbox.chart(t, q)?;
                    let lo = stack.jet_at_level(i, &p)?;
                    let hi = stack.jet_at_level(i + 1, &p)?;
                    Ok((hi.value - lo.value).abs() / (1.0 + lo.value.abs()))
                })()
                .map_err(err),
            )
        }));

        // the top of the stack has unit speed along Z on the closed inner box
        let mut inner = Vec::new();
        for piece in &fbox.section.pieces {
            for q in grid(piece.inner.lo, piece.inner.hi, cfg.box_q) {
                for t in grid(-1.0, 1.0, 8) {
                    inner.push((t, q));
                }
            }
        }
        acc.inner.extend(par::map(cfg.exec, &inner, |&(t, q)| {
            Some(fbox.chart(t, q).and_then(|p| stack.jet(&p)).map(|j| (j.deriv + 1.0).abs()).map_err(err))
        }));
    }
    let n = stack.depth();
    vec![
        flag("eps_range", eps_ok, eps_worst, 0.5, Bound::Below, n, "every ε in (0, 1/2)".into()),
        fold("step1_below", tol.exact, Bound::AtMost, &acc.below, "τ₁ = τ for t ≤ −3/2"),
        fold("step1_unit_speed", tol.unit_speed, Bound::AtMost, &acc.unit, "∂τ₁ = −1 for t ≥ −5/4"),
        fold("step1_identity", tol.exact, Bound::AtMost, &acc.identity, "τ₁(k+1,q) = τ(−1,q) − k − 5/2"),
        fold("paper_inequality", 0.0, Bound::AtMost, &acc.inequality, "τ(−1,q) − k − 11/4 − τ₂(k+1,q)"),
        fold("gap_margin", 0.0, Bound::Below, &acc.gap, "τ − τ₂ on [k+1−2ε, k+1]"),
        fold("step3_coincidence", tol.exact, Bound::AtMost, &acc.step3, "τ₃ = τ for t ≥ k+1−ε"),
        fold("step4_outside_nu2", tol.exact, Bound::AtMost, &acc.step4, "τ₄ = τ where ν₂ = 0"),
        fold("steps_decreasing", 0.0, Bound::Below, &acc.decrease, "max ∂ over τ₁…τ₄"),
        fold("boundary_coincidence", tol.exact, Bound::AtMost, &acc.boundary, "τ̃_k = τ̃_{k−1} on the box boundary"),
        fold("inner_box_unit_speed", tol.unit_speed, Bound::AtMost, &acc.inner, "∂_Z τ_K = −1 on [−1,1] × V̄"),
    ]
}

/// Observed order and second-difference ratio at one seam point.
type SeamSample = std::result::Result<(Option<f64>, Option<f64>), String>;

/// Finite differences of `τ_K` along the rescaled flow across every blend
/// region: `μ₋`, `μ₊`, the `ν₂` ramps and the `ν₁`/`λ` patch seams.
fn seam_checks(stack: &ModifiedStack, cfg: &VerifyConfig) -> Vec<CheckResult> {
    let z = stack.field();
    let mut pts: Vec<(usize, f64, f64)> = Vec::new();
    for (i, (fbox, m)) in stack.boxes.iter().zip(&stack.mods).enumerate() {
        let hw = fbox.half_width;
        let mut regions: Vec<(f64, f64, f64, f64)> = Vec::new();
        for piece in &fbox.section.pieces {
            let (w, v) = (piece.outer, piece.inner);
            regions.push((-1.55, -1.2, v.lo, v.hi));
            regions.push((hw - 2.0 * m.eps - 0.05, hw - m.eps + 0.05, v.lo, v.hi));
            regions.push((-1.0, hw - 2.0 * m.eps, w.lo, v.lo));
            regions.push((-1.0, hw - 2.0 * m.eps, v.hi, w.hi));
        }
        for p in &m.patches {
            regions.push((-1.75, -1.0, p.center - p.radius, p.center + p.radius));
        }
        let per = (cfg.samples / regions.len().max(1)).max(16);
        for (r, &(t0, t1, q0, q1)) in regions.iter().enumerate() {
            let seed = cfg.seed.wrapping_add(100 + 1000 * i as u64 + r as u64);
            for [u, v] in Halton2::new(seed).take(per) {
                let t = (t0 + (t1 - t0) * u).clamp(-hw + 0.05, hw - 0.05);
                pts.push((i, t, q0 + (q1 - q0) * v));
            }
        }
    }
    let tol = &cfg.tol;
    let vals =
        par::map(cfg.exec, &pts, |&(i, t, q)| -> Option<SeamSample> {
            let fbox = &stack.boxes[i];
            let r = (|| -> Result<Option<(Option<f64>, Option<f64>)>> {
                let p0 = fbox.chart(t, q)?;
                if fbox.inverse(&p0).is_none() {
                    return Ok(None);
                }
                let v0 = stack.jet(&p0)?.value;
                // value noise from rounding of the recovered box coordinates
                let noise = 1e-14 * (1.0 + v0.abs());
                let at = |s: f64| -> Result<f64> { Ok(stack.jet(&flow_fixed(z, &p0, s, 1)?)?.value) };
                // central first and second differences at step h
                let probe = |h: f64| -> Result<(f64, f64)> {
                    let (f, b) = (at(h)?, at(-h)?);
                    Ok(((f - b) / (2.0 * h), ((f - 2.0 * v0 + b) / (h * h)).abs()))
                };
                // the order is read off successive differences D(h) − D(h/2),
                // which does not involve the analytic derivative
                let mut h = cfg.seam_delta;
                let mut d0 = probe(h)?;
                let mut d1 = probe(0.5 * h)?;
                let (mut order, mut ratio) = (None, None);
                let (mut order_done, mut ratio_done) = (false, false);
                for _ in 0..cfg.seam_halvings.max(1) {
                    let d2 = probe(0.25 * h)?;
                    if !order_done {
                        let (e0, e1) = ((d0.0 - d1.0).abs(), (d1.0 - d2.0).abs());
                        if e0 <= 16.0 * noise / h || e1 <= 16.0 * noise / h {
                            order_done = true;
                        } else {
                            let o = (e0 / e1).log2();
                            order = Some(o);
                            order_done = o >= tol.seam_order;
                        }
                    }
                    if !ratio_done {
                        let floor = 64.0 * noise / (h * h);
                        if d0.1 <= floor || d1.1 <= floor {
                            ratio_done = true;
                        } else {
                            let r = d1.1 / d0.1;
                            ratio = Some(r);
                            ratio_done = r <= tol.seam_second_ratio;
                        }
                    }
                    if order_done && ratio_done {
                        break;
                    }
                    (d0, d1) = (d1, d2);
                    h *= 0.5;
                }
                Ok(Some((order, ratio)))
            })();
            match r {
                Ok(None) => None,
                Err(e) => Some(Err(err(e))),
                Ok(Some(v)) => Some(Ok(v)),
            }
        });
    let mut order = Vec::new();
    let mut ratio = Vec::new();
    for v in vals.into_iter().flatten() {
        match v {
            Ok((o, r)) => {
                order.push(o.map(Ok));
                ratio.push(r.map(Ok));
            }
            Err(e) => order.push(Some(Err(e))),
        }
    }
    let resolved = order.iter().flatten().count();
    vec![
        fold(
            "seam_fd_order",
            cfg.tol.seam_order,
            Bound::AtLeast,
            &order,
            format!(
                "{} seam points, {resolved} above the rounding floor; δ halved from {} until resolved",
                pts.len(),
                cfg.seam_delta
            ),
        ),
        fold(
            "seam_second_difference",
            cfg.tol.seam_second_ratio,
            Bound::AtMost,
            &ratio,
            "|S(δ/2)/S(δ)| at the resolving step",
        ),
    ]
}
