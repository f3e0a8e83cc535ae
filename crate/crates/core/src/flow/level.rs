use super::roots::newton_bracketed;
use crate::{Error, Jet, Result};

/// The unique `u ∈ [lo, hi]` with `τ(u) = c` for a fiber function that is
/// strictly decreasing on the window. Requires `τ(lo) ≥ c ≥ τ(hi)`; a
/// failed bracket is reported as [`Error::Bracket`].
pub fn level_time<F>(mut tau: F, c: f64, lo: f64, hi: f64, start: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<Jet>,
{
    let t_lo = tau(lo)?.value;
    let t_hi = tau(hi)?.value;
    if !(t_lo >= c && c >= t_hi) {
        return Err(Error::Bracket { lo, hi, f_lo: t_lo - c, f_hi: t_hi - c });
    }
    if t_lo == c {
        return Ok(lo);
    }
    if t_hi == c {
        return Ok(hi);
    }
    newton_bracketed(
        |u| {
            let j = tau(u)?;
            Ok((j.value - c, j.deriv))
        },
        lo,
        hi,
        start,
        1e-13,
        80,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const LO: f64 = -7.0 / 4.0;
    const HI: f64 = -1.0;

    #[test]
    fn unit_speed_fiber() {
        let u = level_time(|u| Ok(Jet::new(-u, -1.0)), 1.25, LO, HI, -1.5).unwrap();
        assert!((u + 1.25).abs() < 1e-12);
    }

    #[test]
    fn endpoint_level() {
        let u = level_time(|u| Ok(Jet::new(-u, -1.0)), 1.0, LO, HI, -1.5).unwrap();
        assert_eq!(u, -1.0);
    }

    #[test]
    fn double_speed_fiber() {
        let u = level_time(|u| Ok(Jet::new(-2.0 * u, -2.0)), 3.0, LO, HI, -1.2).unwrap();
        assert!((u + 1.5).abs() < 1e-12);
    }

    #[test]
    fn nonlinear_fiber() {
        let f = |u: f64| Ok(Jet::new((-u).powi(3), -3.0 * u * u));
        let u = level_time(f, 3.0, LO, HI, -1.7).unwrap();
        assert!((u + 3f64.cbrt()).abs() < 1e-9);
    }

    #[test]
    fn bracket_failure() {
        let e = level_time(|u| Ok(Jet::new(-u, -1.0)), 5.0, LO, HI, -1.5).unwrap_err();
        assert!(matches!(e, Error::Bracket { .. }));
    }
}
