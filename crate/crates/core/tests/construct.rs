//! End-to-end construction on fixtures, checked with the finite-difference
//! oracle along the raw flow.

use complyap::baselyap::{fixture_base, LyapunovEvaluator};
use complyap::construct::{construct_prescribed, ConstructConfig, ConstructionLog, LevelOnBox, PrescribedLyapunov};
use complyap::system::{Aabb, Region, ScalarField, VectorField};
use complyap::verify::fd_orbital_derivative;
use complyap::Point;
use std::sync::OnceLock;

fn annulus() -> Region {
    Region::Annulus { center: Point::zeros(), r_in: 1.0, r_out: 1.5 }
}

fn build(field: &str, k: &Region, g: &ScalarField) -> (PrescribedLyapunov, ConstructionLog) {
    let x = VectorField::fixture(field).unwrap();
    let base = fixture_base(field).unwrap();
    match construct_prescribed(&x, k, g, &base, None, &ConstructConfig::default()) {
        Ok(v) => v,
        Err(e) => panic!("construction failed: {e}"),
    }
}

fn sink() -> &'static (PrescribedLyapunov, ConstructionLog) {
    static S: OnceLock<(PrescribedLyapunov, ConstructionLog)> = OnceLock::new();
    S.get_or_init(|| build("linear_sink", &annulus(), &ScalarField::constant(-1.0)))
}

fn grid(half: f64, n: usize) -> Vec<Point> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let s = |i: usize| -half + 2.0 * half * (i as f64 + 0.5) / n as f64;
            v.push(Point::new(s(i), s(j)));
        }
    }
    v
}

#[test]
fn sink_prescribes_minus_one() {
    let (tau, log) = sink();
    assert!((1..=6).contains(&log.n), "N = {}", log.n);
    assert!(log.scale >= 1.0);
    let x = tau.field().clone();
    for p in annulus().samples(200, 11) {
        let fd = fd_orbital_derivative(tau, &x, &p, 1e-4).unwrap();
        assert!((fd + 1.0).abs() <= 1e-4, "FD τ̇ = {fd} at {p:?}");
        let an = tau.jet(&p).unwrap().deriv;
        assert!((an + 1.0).abs() <= 1e-8, "analytic τ̇ = {an} at {p:?}");
    }
}

#[test]
fn sink_is_local() {
    let (tau, log) = sink();
    let base = fixture_base("linear_sink").unwrap();
    let stack = tau.stack();
    let mut outside = 0;
    for p in grid(9.0, 40) {
        if !stack.in_any_box(&p) {
            outside += 1;
            let v = tau.value(&p).unwrap();
            let b = log.scale * base.scalar().eval(&p);
            assert!((v - b).abs() <= 1e-7, "τ_K − Cτ′ = {} at {p:?}", v - b);
        }
    }
    assert!(outside > 100);
}

#[test]
fn sink_is_strictly_decreasing_off_the_origin() {
    let (tau, _) = sink();
    let x = tau.field().clone();
    for p in grid(3.0, 30) {
        if p.norm() < 0.1 {
            continue;
        }
        let an = tau.jet(&p).unwrap().deriv;
        assert!(an < -1e-3, "τ̇ = {an} at {p:?}");
    }
    for p in grid(3.0, 8) {
        if p.norm() < 0.1 {
            continue;
        }
        let fd = fd_orbital_derivative(tau, &x, &p, 1e-4).unwrap();
        assert!(fd < -1e-3, "FD τ̇ = {fd} at {p:?}");
    }
}

/// Step invariants evaluated on the pipeline's own boxes.
#[test]
fn sink_box_invariants() {
    let (tau, _) = sink();
    let stack = tau.stack();
    for (i, (fbox, m)) in stack.boxes.iter().zip(&stack.mods).enumerate() {
        let k = (i + 1) as f64;
        assert_eq!(fbox.k, i + 1);
        assert_eq!(fbox.half_width, k + 1.0);
        assert!(m.eps > 0.0 && m.eps < 0.5);
        let f = LevelOnBox { stack, level: i, fbox };
        let f: &dyn complyap::construct::BoxFunction = &f;
        for piece in &fbox.section.pieces {
            let r = piece.outer;
            for iq in 0..=12 {
                let q = r.lo + r.len() * iq as f64 / 12.0;
                let a = f.jet(-1.0, q).unwrap().value;
                for it in 0..=40 {
                    let t = -(k + 1.0) + 2.0 * (k + 1.0) * it as f64 / 40.0;
                    let t = t.clamp(-(k + 1.0) + 1e-9, k + 1.0 - 1e-9);
                    let base = f.jet(t, q).unwrap();
                    let s = m.steps(f, t, q, base).unwrap();
                    if t <= -1.5 {
                        assert_eq!(s.tau1, base);
                    }
                    if t >= -1.25 {
                        assert!((s.tau1.deriv + 1.0).abs() < 1e-9);
                    }
                    if t >= k + 1.0 - m.eps {
                        assert_eq!(s.tau3, base);
                    }
                    if m.nu2(q) == 0.0 {
                        assert_eq!(s.tau4, base);
                    }
                    assert!(s.tau4.deriv < 0.0);
                }
                let top = f.jet(k + 1.0 - 1e-9, q).unwrap();
                let s = m.steps(f, k + 1.0 - 1e-9, q, top).unwrap();
                assert!(s.tau2.value >= a - k - 2.75 - 1e-9);
            }
        }
    }
}

#[test]
fn varying_prescription() {
    let g = ScalarField::new(|p| -(1.0 + p.norm_squared()) / 2.0);
    let (tau, _) = build("linear_sink", &annulus(), &g);
    let x = tau.field().clone();
    let gmax = annulus().samples(400, 3).iter().map(|p| g.eval(p).abs()).fold(0.0, f64::max);
    for p in annulus().samples(150, 13) {
        let fd = fd_orbital_derivative(&tau, &x, &p, 1e-4).unwrap();
        assert!((fd - g.eval(&p)).abs() <= 1e-4 * gmax, "FD τ̇ − g = {} at {p:?}", fd - g.eval(&p));
    }
}

#[test]
fn empty_k_leaves_the_base() {
    let (tau, log) = build("linear_sink", &Region::Empty, &ScalarField::constant(-1.0));
    assert_eq!(log.n, 0);
    assert_eq!(log.scale, 1.0);
    let base = fixture_base("linear_sink").unwrap();
    for p in grid(3.0, 10) {
        assert_eq!(tau.value(&p).unwrap(), base.scalar().eval(&p));
    }
}

/// Constant flow with boxes stacked along the flow, so `M_s` is nonempty
/// and step 2 is active in the pipeline.
#[test]
fn constant_flow_exercises_step_two() {
    let k = Region::Box(Aabb::new(Point::new(0.0, 0.0), Point::new(1.8, 1.0)));
    let g = ScalarField::new(|p| -1.0 - 0.5 * p.x.sin().powi(2));
    let (tau, log) = build("constant", &k, &g);
    assert!(log.boxes.iter().any(|b| b.patches > 0 && b.diagnostics.ms_count > 0), "{log}");
    let x = tau.field().clone();
    for p in k.samples(150, 17) {
        let fd = fd_orbital_derivative(&tau, &x, &p, 1e-4).unwrap();
        assert!((fd - g.eval(&p)).abs() <= 1e-4 * 1.5, "FD τ̇ − g = {} at {p:?}", fd - g.eval(&p));
    }
    // ∂_Z τ_K = −1 on every closed inner box
    let stack = tau.stack();
    for fbox in &stack.boxes {
        for piece in &fbox.section.pieces {
            for iq in 0..=10 {
                let q = piece.inner.lo + piece.inner.len() * iq as f64 / 10.0;
                for it in 0..=8 {
                    let t = -1.0 + 0.25 * it as f64;
                    let p = fbox.chart(t, q).unwrap();
                    let d = tau.jet_z(&p).unwrap().deriv;
                    assert!((d + 1.0).abs() < 1e-8, "∂_Z τ = {d} at box {} ({t}, {q})", fbox.k);
                }
            }
        }
    }
}

#[test]
fn chi_e1_has_no_fixture_base() {
    assert!(fixture_base("chi_e1").is_err());
}
