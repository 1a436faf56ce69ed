//! Space-filling point sets on the unit cube.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

/// Latin-hypercube sample of `n` points in `[0, 1]^dim`: each axis is cut
/// into `n` strata and every stratum holds exactly one point.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = alloc::vec![alloc::vec![0.0; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        strata.shuffle(rng);
        for (point, &s) in points.iter_mut().zip(&strata) {
            point[d] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Largest dimension supported by [`Halton`].
pub const HALTON_MAX_DIM: usize = PRIMES.len();

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    r
}

/// Halton sequence with a random Cranley–Patterson shift per axis.
#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
    index: u64,
}

impl Halton {
    /// Panics if `dim` exceeds [`HALTON_MAX_DIM`].
    pub fn new<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        assert!(dim <= HALTON_MAX_DIM, "Halton sequence supports at most {HALTON_MAX_DIM} dimensions");
        Self { shift: (0..dim).map(|_| rng.random::<f64>()).collect(), index: 1 }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(&s, p)| {
                let v = radical_inverse(i, p) + s;
                if v >= 1.0 { v - 1.0 } else { v }
            })
            .collect()
    }
}
