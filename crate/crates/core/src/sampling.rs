//! Low-discrepancy sample sequences. All verification sampling goes through
//! here so that a fixed seed reproduces the same points.

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Two-dimensional Halton sequence (bases 2 and 3) starting at an offset
/// derived from `seed`.
#[derive(Clone, Debug)]
pub struct Halton2 {
    index: u64,
}

impl Halton2 {
    pub fn new(seed: u64) -> Self {
        Halton2 { index: 1 + seed.wrapping_mul(7919) % 1_000_003 }
    }
}

impl Iterator for Halton2 {
    type Item = [f64; 2];

    fn next(&mut self) -> Option<[f64; 2]> {
        let i = self.index;
        self.index += 1;
        Some([radical_inverse(i, 2), radical_inverse(i, 3)])
    }
}

/// `n` points of the unit interval from the base-2 radical inverse, offset by seed.
pub fn unit_interval(n: usize, seed: u64) -> Vec<f64> {
    let start = 1 + seed.wrapping_mul(104_729) % 1_000_003;
    (0..n as u64).map(|i| radical_inverse(start + i, 2)).collect()
}
