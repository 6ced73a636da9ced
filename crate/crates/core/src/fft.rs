//! Complex FFTs for arbitrary lengths.
//!
//! Power-of-two lengths use an iterative radix-2 kernel; every other length
//! goes through Bluestein's chirp-z reformulation on a padded power-of-two
//! transform. Plans are immutable once built, so a plan can be shared across
//! threads and repeated transforms are bit-identical.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

#[derive(Debug, Clone)]
enum Kernel {
    Trivial,
    Radix2 { twiddles: Vec<Complex64>, bitrev: Vec<usize> },
    Bluestein { inner: Box<Fft>, chirp: Vec<Complex64>, kernel_hat: Vec<Complex64> },
}

/// Forward transform `X_k = Σ_j x_j e^(−2πi jk/n)`; inverse includes the `1/n`.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    kernel: Kernel,
}

impl Fft {
    pub fn new(len: usize) -> Self {
        let kernel = if len <= 1 {
            Kernel::Trivial
        } else if len.is_power_of_two() {
            let twiddles = (0..len / 2)
                .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
                .collect();
            let bits = len.trailing_zeros();
            let bitrev = (0..len).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
            Kernel::Radix2 { twiddles, bitrev }
        } else {
            let m = (2 * len - 1).next_power_of_two();
            let inner = Fft::new(m);
            // chirp w_j = e^(−πi j²/n); j² taken mod 2n to keep the angle small
            let chirp: Vec<Complex64> = (0..len)
                .map(|j| {
                    let jj = (j as u128 * j as u128 % (2 * len as u128)) as f64;
                    Complex64::from_polar(1.0, -PI * jj / len as f64)
                })
                .collect();
            let mut kernel = vec![Complex64::new(0.0, 0.0); m];
            kernel[0] = chirp[0].conj();
            for j in 1..len {
                kernel[j] = chirp[j].conj();
                kernel[m - j] = chirp[j].conj();
            }
            inner.forward(&mut kernel);
            Kernel::Bluestein { inner: Box::new(inner), chirp, kernel_hat: kernel }
        };
        Self { len, kernel }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len, "fft length mismatch");
        match &self.kernel {
            Kernel::Trivial => {}
            Kernel::Radix2 { twiddles, bitrev } => radix2(data, twiddles, bitrev),
            Kernel::Bluestein { inner, chirp, kernel_hat } => {
                let m = inner.len();
                let mut a = vec![Complex64::new(0.0, 0.0); m];
                for ((aj, xj), wj) in a.iter_mut().zip(data.iter()).zip(chirp) {
                    *aj = xj * wj;
                }
                inner.forward(&mut a);
                for (aj, kj) in a.iter_mut().zip(kernel_hat) {
                    *aj *= kj;
                }
                inner.inverse(&mut a);
                for ((xj, aj), wj) in data.iter_mut().zip(&a).zip(chirp) {
                    *xj = aj * wj;
                }
            }
        }
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        // conj ∘ F ∘ conj, scaled
        for v in data.iter_mut() {
            *v = v.conj();
        }
        self.forward(data);
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v = v.conj() * scale;
        }
    }
}

fn radix2(data: &mut [Complex64], twiddles: &[Complex64], bitrev: &[usize]) {
    let n = data.len();
    for i in 0..n {
        let j = bitrev[i];
        if i < j {
            data.swap(i, j);
        }
    }
    let mut half = 1;
    while half < n {
        let stride = n / (2 * half);
        for start in (0..n).step_by(2 * half) {
            for k in 0..half {
                let t = data[start + k + half] * twiddles[k * stride];
                let u = data[start + k];
                data[start + k] = u + t;
                data[start + k + half] = u - t;
            }
        }
        half *= 2;
    }
}

/// Row-major 2-D transform built from 1-D plans along each axis.
#[derive(Debug, Clone)]
pub struct Fft2d {
    width: usize,
    height: usize,
    rows: Fft,
    cols: Fft,
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, rows: Fft::new(width), cols: Fft::new(height) }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }

    /// Forward transform of a real image.
    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let (w, h) = (self.width, self.height);
        assert_eq!(data.len(), w * h, "fft2d size mismatch");
        for row in data.chunks_exact_mut(w) {
            if inverse {
                self.rows.inverse(row);
            } else {
                self.rows.forward(row);
            }
        }
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = data[r * w + c];
            }
            if inverse {
                self.cols.inverse(&mut column);
            } else {
                self.cols.forward(&mut column);
            }
            for r in 0..h {
                data[r * w + c] = column[r];
            }
        }
    }
}
