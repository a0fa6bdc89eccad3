//! Real-to-complex 2D transforms on the periodic grid.
//!
//! Rows (fixed x, varying y) go through a real FFT, columns through a complex
//! FFT. Plans are cached per size and shared between threads.

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Block edge for the cache-friendly transposes.
const BLOCK: usize = 32;

pub struct Fft2 {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_forward: Arc<dyn Fft<f64>>,
    col_inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<Fft2>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Fft2 {
    /// Shared plan for an `n x n` grid.
    pub fn get(n: usize) -> Arc<Fft2> {
        let mut map = cache().lock().expect("fft plan cache poisoned");
        map.entry(n)
            .or_insert_with(|| {
                let mut real = RealFftPlanner::<f64>::new();
                let mut complex = FftPlanner::<f64>::new();
                Arc::new(Fft2 {
                    n,
                    r2c: real.plan_fft_forward(n),
                    c2r: real.plan_fft_inverse(n),
                    col_forward: complex.plan_fft_forward(n),
                    col_inverse: complex.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    /// Forward transform normalised so that `f(x) = sum_k c_k exp(i k . x)`
    /// with `x` measured from the first grid point.
    ///
    /// Output layout: `coeffs[j * n + i]`, `j` the ky index in `0..=n/2`.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let h = n / 2 + 1;
        assert_eq!(values.len(), n * n);
        let mut out = vec![Complex64::new(0.0, 0.0); h * n];

        let mut row_in = self.r2c.make_input_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        // Row spectra are staged in blocks of rows and then transposed.
        let mut stage = vec![Complex64::new(0.0, 0.0); BLOCK * h];
        for i0 in (0..n).step_by(BLOCK) {
            let rows = BLOCK.min(n - i0);
            for r in 0..rows {
                let i = i0 + r;
                row_in.copy_from_slice(&values[i * n..(i + 1) * n]);
                self.r2c
                    .process_with_scratch(&mut row_in, &mut stage[r * h..(r + 1) * h], &mut scratch)
                    .expect("real forward transform");
            }
            for j in 0..h {
                let dst = &mut out[j * n + i0..j * n + i0 + rows];
                for (r, d) in dst.iter_mut().enumerate() {
                    *d = stage[r * h + j];
                }
            }
        }

        let mut col_scratch =
            vec![Complex64::new(0.0, 0.0); self.col_forward.get_inplace_scratch_len()];
        self.col_forward.process_with_scratch(&mut out, &mut col_scratch);

        let scale = 1.0 / (n * n) as f64;
        for c in out.iter_mut() {
            *c *= scale;
        }
        out
    }

    /// Inverse of [`Fft2::forward`]. Imaginary parts that a real field cannot
    /// carry (the `ky = 0` and Nyquist columns after the column pass) are
    /// discarded, i.e. the result is the real part of the synthesis.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        let h = n / 2 + 1;
        assert_eq!(coeffs.len(), h * n);
        let mut buf = coeffs.to_vec();
        let mut col_scratch =
            vec![Complex64::new(0.0, 0.0); self.col_inverse.get_inplace_scratch_len()];
        self.col_inverse.process_with_scratch(&mut buf, &mut col_scratch);

        let mut out = vec![0.0; n * n];
        let mut row_spec = self.c2r.make_input_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        let mut stage = vec![Complex64::new(0.0, 0.0); BLOCK * h];
        for i0 in (0..n).step_by(BLOCK) {
            let rows = BLOCK.min(n - i0);
            for j in 0..h {
                let src = &buf[j * n + i0..j * n + i0 + rows];
                for (r, s) in src.iter().enumerate() {
                    stage[r * h + j] = *s;
                }
            }
            for r in 0..rows {
                let i = i0 + r;
                row_spec.copy_from_slice(&stage[r * h..(r + 1) * h]);
                row_spec[0].im = 0.0;
                row_spec[h - 1].im = 0.0;
                self.c2r
                    .process_with_scratch(&mut row_spec, &mut out[i * n..(i + 1) * n], &mut scratch)
                    .expect("real inverse transform");
            }
        }
        out
    }
}
