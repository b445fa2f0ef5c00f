//! Complex and real-input FFT plans.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other
//! length goes through Bluestein's chirp-z reformulation on top of a
//! radix-2 transform of at least `2n - 1` points. The real transform packs
//! an even-length real signal into a half-length complex sequence.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use num_complex::Complex64;

#[derive(Debug)]
struct Radix2 {
    n: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Self { n, twiddles, rev }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Debug)]
struct Bluestein {
    n: usize,
    inner: Radix2,
    chirp: Vec<Complex64>,
    kernel_spectrum: Vec<Complex64>,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k^2 is reduced mod 2n so the angle stays small for long transforms.
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                Complex64::from_polar(1.0, -PI * k2 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Self {
            n,
            inner,
            chirp,
            kernel_spectrum: kernel,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let m = self.inner.n;
        let mut work = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..self.n {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.forward(&mut work);
        for (w, kern) in work.iter_mut().zip(&self.kernel_spectrum) {
            *w = (*w * kern).conj();
        }
        // inverse via conjugation: ifft(a) = conj(fft(conj(a))) / m
        self.inner.forward(&mut work);
        let scale = 1.0 / m as f64;
        for k in 0..self.n {
            buf[k] = work[k].conj() * scale * self.chirp[k];
        }
    }
}

#[derive(Debug)]
enum Algorithm {
    Radix2(Radix2),
    Bluestein(Bluestein),
}

/// Unnormalized complex DFT of a fixed length.
#[derive(Debug)]
pub struct ComplexFft {
    n: usize,
    algorithm: Algorithm,
}

impl ComplexFft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "FFT length must be positive");
        let algorithm = if n.is_power_of_two() {
            Algorithm::Radix2(Radix2::new(n))
        } else {
            Algorithm::Bluestein(Bluestein::new(n))
        };
        Self { n, algorithm }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n);
        match &self.algorithm {
            Algorithm::Radix2(p) => p.forward(buf),
            Algorithm::Bluestein(p) => p.forward(buf),
        }
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        buf.iter_mut().for_each(|z| *z = z.conj());
        self.forward(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z = z.conj() * scale);
    }
}

/// Real-input transform of even length `n`, computed through a complex
/// transform of length `n / 2`.
#[derive(Debug)]
pub struct RealFft {
    n: usize,
    half: ComplexFft,
    // e^{-j 2 pi k / n} for k in 0..=n/2
    twiddles: Vec<Complex64>,
}

impl RealFft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "real FFT length must be even");
        let m = n / 2;
        let twiddles = (0..=m)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Self {
            n,
            half: ComplexFft::new(m),
            twiddles,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, input: &[f64], out: &mut [Complex64]) {
        let m = self.n / 2;
        assert_eq!(input.len(), self.n);
        assert_eq!(out.len(), m + 1);
        let mut z: Vec<Complex64> = (0..m)
            .map(|i| Complex64::new(input[2 * i], input[2 * i + 1]))
            .collect();
        self.half.forward(&mut z);
        let half_j = Complex64::new(0.0, -0.5);
        for k in 0..=m {
            let zk = z[k % m];
            let zmk = z[(m - k) % m].conj();
            let even = (zk + zmk) * 0.5;
            let odd = (zk - zmk) * half_j;
            out[k] = even + self.twiddles[k] * odd;
        }
        // the packed algebra leaves rounding residue in these imaginary parts
        out[0].im = 0.0;
        out[m].im = 0.0;
    }

    /// Exact inverse of [`RealFft::forward`]; imaginary parts of the DC and
    /// Nyquist bins are ignored.
    pub fn inverse(&self, bins: &[Complex64], out: &mut [f64]) {
        let m = self.n / 2;
        assert_eq!(bins.len(), m + 1);
        assert_eq!(out.len(), self.n);
        let at = |k: usize| {
            let mut v = bins[k];
            if k == 0 || k == m {
                v.im = 0.0;
            }
            v
        };
        let j = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = (0..m)
            .map(|k| {
                let xk = at(k);
                let xmk = at(m - k).conj();
                let even = (xk + xmk) * 0.5;
                let odd = (xk - xmk) * self.twiddles[k].conj() * 0.5;
                even + j * odd
            })
            .collect();
        self.half.inverse(&mut z);
        for (i, v) in z.iter().enumerate() {
            out[2 * i] = v.re;
            out[2 * i + 1] = v.im;
        }
    }
}

thread_local! {
    static REAL_PLANS: RefCell<HashMap<usize, Rc<RealFft>>> = RefCell::new(HashMap::new());
}

/// Per-thread cached real plan for length `n`.
pub fn real_plan(n: usize) -> Rc<RealFft> {
    REAL_PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(RealFft::new(n)))
            .clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, v)| {
                        let angle = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, angle)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn complex_fft_matches_naive_for_mixed_lengths() {
        for n in [1usize, 2, 3, 5, 8, 12, 45, 64, 93, 100] {
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
                .collect();
            let expected = naive_dft(&x);
            let mut got = x.clone();
            ComplexFft::new(n).forward(&mut got);
            for (a, b) in got.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-9, "n={n}: {a} vs {b}");
            }
            ComplexFft::new(n).inverse(&mut got);
            for (a, b) in got.iter().zip(&x) {
                assert!((a - b).norm() < 1e-9);
            }
        }
    }
}
