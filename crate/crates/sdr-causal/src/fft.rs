//! Thin wrappers over rustfft used by the spectral and resampling modules.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward DFT of a real slice, returned as complex bins of the same length.
pub(crate) fn dft_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse DFT back to the real axis. rustfft is unnormalized, so the 1/N is
/// applied here; the imaginary residue is discarded (callers only use this on
/// conjugate-symmetric spectra).
pub(crate) fn idft_to_real(mut bins: Vec<Complex64>) -> Vec<f64> {
    let n = bins.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut bins);
    let scale = 1.0 / n as f64;
    bins.into_iter().map(|c| c.re * scale).collect()
}

/// Reusable forward plan for repeated same-size transforms (Welch segments).
pub(crate) struct ForwardPlan {
    plan: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl ForwardPlan {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            plan: FftPlanner::new().plan_fft_forward(len),
        }
    }

    pub(crate) fn process(&self, buf: &mut [Complex64]) {
        self.plan.process(buf);
    }
}
