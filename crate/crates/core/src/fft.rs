// Iterative radix-2 FFT. Sizes are powers of two.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::Complex;
// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

pub(crate) struct Fft {
    len: usize,
    twiddles: Vec<Complex<f64>>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len.is_power_of_two(), "FFT length must be a power of two");
        let twiddles = (0..len / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / len as f64;
                Complex::new(a.cos(), a.sin())
            })
            .collect();
        let bits = len.trailing_zeros();
        let bitrev = (0..len)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Self { len, twiddles, bitrev }
    }

    /// In-place forward transform, no scaling.
    pub fn forward(&self, data: &mut [Complex<f64>]) {
        self.run(data, false);
    }

    /// In-place inverse transform, scaled by 1/len.
    pub fn inverse(&self, data: &mut [Complex<f64>]) {
        self.run(data, true);
        let scale = 1.0 / self.len as f64;
        for x in data.iter_mut() {
            *x *= scale;
        }
    }

    fn run(&self, data: &mut [Complex<f64>], inverse: bool) {
        assert_eq!(data.len(), self.len);
        for i in 0..self.len {
            let j = self.bitrev[i];
            if j > i {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.len {
            let half = size / 2;
            let step = self.len / size;
            for start in (0..self.len).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * step];
                    if inverse {
                        w = w.conj();
                    }
                    let t = w * data[start + k + half];
                    let u = data[start + k];
                    data[start + k] = u + t;
                    data[start + k + half] = u - t;
                }
            }
            size *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (t, v)| {
                    let a = -2.0 * PI * (k * t) as f64 / n as f64;
                    acc + v * Complex::new(a.cos(), a.sin())
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[1usize, 2, 8, 64] {
            let x: Vec<_> = (0..n)
                .map(|i| Complex::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
                .collect();
            let mut y = x.clone();
            let fft = Fft::new(n);
            fft.forward(&mut y);
            for (a, b) in y.iter().zip(naive_dft(&x)) {
                assert!((a - b).norm() < 1e-10);
            }
            fft.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
