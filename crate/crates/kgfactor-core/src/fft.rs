//! In-place radix-2 FFT.
//!
//! Grids are power-of-two by construction, so a plain iterative Cooley-Tukey
//! kernel with precomputed twiddles covers every transform in the crate. Both
//! directions are unscaled (`forward` sums `exp(-2 pi i j m / n)`, `inverse`
//! sums the conjugate); callers apply the `1/n` normalization that matches
//! their analysis convention. Correctness is pinned against a direct O(n^2)
//! DFT in the tests.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::C64;

/// Precomputed twiddles and bit-reversal table for one transform size.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    /// `exp(-2 pi i j / n)` for `j < n/2`.
    twiddles: Vec<C64>,
    bitrev: Vec<u32>,
}

impl FftPlan {
    /// Plan for size `n`; panics if `n` is not a power of two (grids enforce
    /// that invariant before any plan is built).
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2, "FFT size must be a power of two >= 2");
        let twiddles = (0..n / 2)
            .map(|j| {
                let angle = -2.0 * PI * j as f64 / n as f64;
                C64::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32).map(|i| i.reverse_bits() >> (32 - bits)).collect();
        FftPlan { n, twiddles, bitrev }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unscaled forward transform: `X_m = sum_j x_j exp(-2 pi i j m / n)`.
    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, false);
    }

    /// Unscaled inverse transform: `x_j = sum_m X_m exp(+2 pi i j m / n)`.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, true);
    }

    fn transform(&self, data: &mut [C64], conjugate: bool) {
        let n = self.n;
        assert_eq!(data.len(), n, "buffer length must match plan size");
        for i in 0..n {
            let r = self.bitrev[i] as usize;
            if r > i {
                data.swap(i, r);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            let mut base = 0;
            while base < n {
                for j in 0..half {
                    let mut w = self.twiddles[j * stride];
                    if conjugate {
                        w = w.conj();
                    }
                    let t = w * data[base + half + j];
                    data[base + half + j] = data[base + j] - t;
                    data[base + j] += t;
                }
                base += len;
            }
            len *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Direct O(n^2) DFT used as the independent oracle.
    fn dft_naive(input: &[C64]) -> Vec<C64> {
        let n = input.len();
        (0..n)
            .map(|m| {
                let mut acc = C64::new(0.0, 0.0);
                for (j, &x) in input.iter().enumerate() {
                    let angle = -2.0 * PI * (j * m % n) as f64 / n as f64;
                    acc += x * C64::new(libm::cos(angle), libm::sin(angle));
                }
                acc
            })
            .collect()
    }

    /// Small deterministic generator so the oracle comparison is reproducible.
    fn pseudo_random(n: usize, seed: u64) -> Vec<C64> {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        (0..n).map(|_| C64::new(next(), next())).collect()
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn impulse_transforms_to_flat_spectrum() {
        let plan = FftPlan::new(8);
        let mut data = vec![C64::new(0.0, 0.0); 8];
        data[0] = C64::new(1.0, 0.0);
        plan.forward(&mut data);
        for v in &data {
            assert!((v - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[8usize, 64, 256] {
            let plan = FftPlan::new(n);
            let input = pseudo_random(n, n as u64);
            let expected = dft_naive(&input);
            let mut data = input.clone();
            plan.forward(&mut data);
            let scale = (n as f64) * 1e-14;
            assert!(
                max_diff(&data, &expected) < scale,
                "forward FFT deviates from direct DFT at n = {n}"
            );
        }
    }

    #[test]
    fn forward_then_inverse_is_n_times_identity() {
        for &n in &[8usize, 128, 1024] {
            let plan = FftPlan::new(n);
            let input = pseudo_random(n, 7 + n as u64);
            let mut data = input.clone();
            plan.forward(&mut data);
            plan.inverse(&mut data);
            let scale = 1.0 / n as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
            assert!(max_diff(&data, &input) < 1e-13);
        }
    }

    #[test]
    fn parseval_holds_to_machine_precision() {
        let n = 512;
        let plan = FftPlan::new(n);
        let input = pseudo_random(n, 99);
        let time_energy: f64 = input.iter().map(|v| v.norm_sqr()).sum();
        let mut data = input;
        plan.forward(&mut data);
        let freq_energy: f64 = data.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        assert!((time_energy - freq_energy).abs() < 1e-12 * time_energy);
    }
}
