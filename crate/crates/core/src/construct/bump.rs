//! C^∞ monotone transition functions built from `e(t) = exp(-1/t)`.

/// `e(t) = exp(-1/t)` for `t > 0`, else `0`.
fn e(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step from 0 at `lo` to 1 at `hi`, flat to all orders at
/// both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothStep {
    pub lo: f64,
    pub hi: f64,
}

impl SmoothStep {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "SmoothStep requires lo < hi (got {lo}, {hi})");
        SmoothStep { lo, hi }
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = (t - self.lo) / (self.hi - self.lo);
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            let a = e(u);
            a / (a + e(1.0 - u))
        }
    }

    /// First derivative with respect to `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        let w = self.hi - self.lo;
        let u = (t - self.lo) / w;
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let v = 1.0 - u;
        let (a, b) = (e(u), e(v));
        let (da, db) = (a / (u * u), b / (v * v));
        // d/du a/(a+b) with b = e(1-u), db/du = -e'(1-u)
        (da * b + a * db) / ((a + b) * (a + b)) / w
    }
}

/// Convenience: [`SmoothStep::value`] for a one-off step.
pub fn smoothstep(s: SmoothStep, t: f64) -> f64 {
    s.value(t)
}

/// Radial bump: 1 for `|x - center| ≤ inner·radius`, 0 for
/// `|x - center| ≥ outer·radius`, smooth and monotone in between.
pub fn radial_bump(x: f64, center: f64, radius: f64, inner: f64, outer: f64) -> f64 {
    let d = (x - center).abs() / radius;
    1.0 - SmoothStep::new(inner, outer).value(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_midpoint() {
        let s = SmoothStep::new(-1.5, -1.25);
        assert_eq!(s.value(-1.5), 0.0);
        assert_eq!(s.value(-1.25), 1.0);
        assert_eq!(s.value(-2.0), 0.0);
        assert_eq!(s.value(0.0), 1.0);
        assert!((s.value(-1.375) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let s = SmoothStep::new(0.0, 1.0);
        for &t in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let h = 1e-6;
            let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
            assert!((fd - s.derivative(t)).abs() < 1e-7, "t={t}");
        }
        assert_eq!(s.derivative(0.0), 0.0);
        assert_eq!(s.derivative(1.0), 0.0);
    }

    #[test]
    fn flat_at_the_ends() {
        let s = SmoothStep::new(0.0, 1.0);
        assert!(s.value(0.02) < 1e-20);
        assert!(s.derivative(0.02) < 1e-15);
        assert!(1.0 - s.value(0.98) < 1e-20);
    }

    #[test]
    fn bump_profile() {
        assert_eq!(radial_bump(0.3, 0.0, 1.0, 0.5, 0.8), 1.0);
        assert_eq!(radial_bump(0.9, 0.0, 1.0, 0.5, 0.8), 0.0);
        let m = radial_bump(0.65, 0.0, 1.0, 0.5, 0.8);
        assert!(m > 0.0 && m < 1.0);
    }

    proptest! {
        #[test]
        // exp(-1/u) underflows below u ≈ 0.0014, so stay clear of the ends
        fn strictly_monotone_inside(a in 0.01f64..0.99, b in 0.01f64..0.99) {
            prop_assume!((a - b).abs() > 1e-6);
            let s = SmoothStep::new(0.0, 1.0);
            let (t1, t2) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(s.value(t1) < s.value(t2));
            prop_assert!(s.derivative(t1) > 0.0);
        }

        #[test]
        fn symmetric_about_midpoint(u in 0.0f64..1.0) {
            let s = SmoothStep::new(2.0, 4.0);
            let t = 2.0 + 2.0 * u;
            let mirrored = 6.0 - t;
            prop_assert!((s.value(t) + s.value(mirrored) - 1.0).abs() < 1e-14);
        }
    }
}
