//! Reproducible random draws for verification suites.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::point::PolyUpperPoint;

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Seeded generator shared by every report so that a seed fixes the output.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for sample `index`, so samples can run in any order.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index as u64 + 1);
    r
}

pub fn upper_point<R: Rng>(rng: &mut R, re: (f64, f64), im: (f64, f64)) -> Complex64 {
    Complex64::new(rng.gen_range(re.0..=re.1), rng.gen_range(im.0..=im.1))
}

pub fn poly_upper_point<R: Rng>(rng: &mut R, n: usize, re: (f64, f64), im: (f64, f64)) -> PolyUpperPoint {
    let coords = (0..n).map(|_| upper_point(rng, re, im)).collect();
    PolyUpperPoint::new(coords).expect("sampled imaginary parts are positive")
}

/// Log-uniform positive reals in `[lo, hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Random convex weights, each at least `floor` before normalisation.
pub fn convex_weights<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(floor..=1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut k: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // absorb rounding so that the weights sum to one as closely as possible
    let rest: f64 = k[..n - 1].iter().sum();
    k[n - 1] = 1.0 - rest;
    k
}

/// Radical inverse of `index` in `base`; the building block of Halton points.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// `count` Halton points in `[0,1]^dim`, skipping the origin.
pub fn halton(count: usize, dim: usize) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "halton dimension too large");
    (1..=count as u64)
        .map(|i| PRIMES[..dim].iter().map(|&p| radical_inverse(i, p)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_points() {
        let h = halton(3, 2);
        assert_eq!(h[0], vec![0.5, 1.0 / 3.0]);
        assert_eq!(h[1], vec![0.25, 2.0 / 3.0]);
        assert_eq!(h[2][0], 0.75);
    }

    #[test]
    fn convex_weights_sum_to_one() {
        let mut r = rng(1);
        for n in 2..6 {
            let k = convex_weights(&mut r, n, 0.05);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(k.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let a: f64 = sample_rng(7, 3).gen();
        let b: f64 = sample_rng(7, 3).gen();
        let c: f64 = sample_rng(7, 4).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
