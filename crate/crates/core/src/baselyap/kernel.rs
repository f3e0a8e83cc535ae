use crate::{Error, Result};

/// Wendland function `ψ_{l,k}` with `l = k + 2`, scaled as `ψ(c‖x‖)`.
///
/// Hermite collocation with a first-order operator needs `ψ₂ = ψ₁'/r`
/// bounded at the origin, which holds for `k ≥ 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wendland {
    pub k: u32,
    pub c: f64,
}

impl Wendland {
    pub fn new(k: u32, c: f64) -> Result<Wendland> {
        if !(2..=3).contains(&k) {
            return Err(Error::InvalidInput(format!("Wendland smoothness k = {k} unsupported (use 2 or 3)")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("kernel shape parameter must be positive, got {c}")));
        }
        Ok(Wendland { k, c })
    }

    pub fn support_radius(&self) -> f64 {
        1.0 / self.c
    }

    /// `ψ(r)` for unscaled `r ≥ 0`.
    pub fn psi(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - r;
        match self.k {
            2 => s.powi(6) * (35.0 * r * r + 18.0 * r + 3.0),
            _ => s.powi(8) * (32.0 * r * r * r + 25.0 * r * r + 8.0 * r + 1.0),
        }
    }

    /// `ψ₁(r) = ψ'(r)/r`.
    pub fn psi1(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - r;
        match self.k {
            2 => -56.0 * s.powi(5) * (5.0 * r + 1.0),
            _ => -22.0 * s.powi(7) * (16.0 * r * r + 7.0 * r + 1.0),
        }
    }

    /// `ψ₂(r) = ψ₁'(r)/r`.
    pub fn psi2(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - r;
        match self.k {
            2 => 1680.0 * s.powi(4),
            _ => 528.0 * (6.0 * r + 1.0) * s.powi(6),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_identities_by_finite_differences() {
        for k in [2, 3] {
            let w = Wendland::new(k, 1.0).unwrap();
            for i in 1..20 {
                let r = i as f64 / 20.0;
                let h = 1e-6;
                let d = (w.psi(r + h) - w.psi(r - h)) / (2.0 * h);
                assert!((d / r - w.psi1(r)).abs() < 1e-6 * (1.0 + w.psi1(r).abs()), "k={k} r={r}");
                let d1 = (w.psi1(r + h) - w.psi1(r - h)) / (2.0 * h);
                assert!((d1 / r - w.psi2(r)).abs() < 1e-5 * (1.0 + w.psi2(r).abs()), "k={k} r={r}");
            }
            assert_eq!(w.psi(1.0), 0.0);
            assert!(w.psi1(1.0 - 1e-9).abs() < 1e-30);
        }
    }

    #[test]
    fn rejects_unsupported() {
        assert!(Wendland::new(1, 1.0).is_err());
        assert!(Wendland::new(2, 0.0).is_err());
    }
}
