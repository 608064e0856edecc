//! Frequency-grid conventions, power spectral density estimation and the
//! spectral averaging operator used by every other module.
//!
//! All spectra live on a uniform full-period grid of `M` bins over the
//! normalized-frequency interval `[0, 1)`, bin `k` at `nu_k = k / M`. The
//! averaging operator is the plain bin mean, which makes the discrete
//! Parseval identity exact and needs no endpoint weights; the conventional
//! symmetric interval `[-1/2, 1/2]` maps onto this grid by 1-periodicity.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::ForwardPlan;
use crate::util::{kahan_mean, kahan_sum};

/// Relative denominator floor used by ratio-type operations when none is
/// given explicitly. Estimated spectra can touch zero even though the model
/// assumes strict positivity, so denominators are floored at
/// `floor_rel * max(denominator)`.
pub const DEFAULT_FLOOR_REL: f64 = 1e-8;

/// A real-valued sample sequence, the observable object for both cause and
/// effect.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    name: Option<String>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input and non-finite samples.
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::SeriesTooShort { needed: 1, got: 0 });
        }
        if let Some(bad) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite sample at index {bad}"
            )));
        }
        Ok(Self {
            samples,
            name: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample mean.
    pub fn mean(&self) -> f64 {
        kahan_mean(self.samples.iter().copied())
    }

    /// Mean of squares after centering; the sample power of the zero-mean
    /// model, which the Welch estimate is normalized against.
    pub fn centered_power(&self) -> f64 {
        let mu = self.mean();
        kahan_mean(self.samples.iter().map(|&x| (x - mu) * (x - mu)))
    }

    /// Biased autocovariance estimate `C(tau) = (1/N) sum (x_t - mean)(x_{t+tau} - mean)`
    /// for `tau = 0..=max_lag`.
    pub fn autocovariance(&self, max_lag: usize) -> Result<Vec<f64>> {
        let n = self.samples.len();
        if max_lag >= n {
            return Err(Error::LagTooLarge {
                lag: max_lag,
                len: n,
            });
        }
        let mu = self.mean();
        let centered: Vec<f64> = self.samples.iter().map(|&x| x - mu).collect();
        let mut out = Vec::with_capacity(max_lag + 1);
        for tau in 0..=max_lag {
            let s = kahan_sum((0..n - tau).map(|t| centered[t] * centered[t + tau]));
            out.push(s / n as f64);
        }
        Ok(out)
    }

    /// Drops `fraction` of the samples at each end (used to shed transform
    /// edge artifacts after frequency-domain filtering).
    pub fn trim_edges(&self, fraction: f64) -> Result<TimeSeries> {
        if !(0.0..0.5).contains(&fraction) {
            return Err(Error::InvalidParameter(format!(
                "trim fraction must be in [0, 0.5), got {fraction}"
            )));
        }
        let n = self.samples.len();
        let cut = (n as f64 * fraction).floor() as usize;
        if n <= 2 * cut {
            return Err(Error::SeriesTooShort {
                needed: 2 * cut + 1,
                got: n,
            });
        }
        TimeSeries::new(self.samples[cut..n - cut].to_vec())
    }
}

/// Uniform discretization of one frequency period into `M >= 2` bins,
/// bin `k` at `nu_k = k / M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyGrid {
    size: usize,
}

impl FrequencyGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidParameter(format!(
                "frequency grid needs at least 2 bins, got {size}"
            )));
        }
        Ok(Self { size })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Normalized frequency of bin `k` in `[0, 1)`.
    pub fn nu(&self, k: usize) -> f64 {
        k as f64 / self.size as f64
    }

    /// `|nu|` of bin `k` folded into `[0, 1/2]` by 1-periodicity and evenness.
    pub fn folded_nu(&self, k: usize) -> f64 {
        let k = k % self.size;
        k.min(self.size - k) as f64 / self.size as f64
    }

    /// Grid large enough that a length-`m` response is resolved: `16 m`
    /// rounded up to a power of two, at least 1024. Discrete frequency maxima
    /// then track continuous ones to O(1/M^2).
    pub fn for_filter_len(m: usize) -> Self {
        let size = (16 * m.max(1)).next_power_of_two().max(1024);
        Self { size }
    }
}

/// Nonnegative power values on a [`FrequencyGrid`]. Holds estimated or
/// analytic PSDs as well as squared frequency responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl Spectrum {
    /// Validates nonnegativity, finiteness and the value/grid length match.
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spectrum value at bin {bad} is negative or non-finite"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Constant spectrum of the given level.
    pub fn constant(grid: FrequencyGrid, level: f64) -> Result<Self> {
        Self::new(grid, vec![level; grid.len()])
    }

    pub(crate) fn from_raw(grid: FrequencyGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The spectral averaging operator: the plain bin mean over one period.
    /// For a PSD this is the per-sample power of the process.
    pub fn mean(&self) -> f64 {
        kahan_mean(self.values.iter().copied())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mean of the pointwise ratio `self / den`, with the denominator floored
    /// at `floor_rel * max(den)` so that near-zero bins cannot blow up the
    /// average. Errors if the grids differ or `den` is identically zero.
    pub fn ratio_mean(&self, den: &Spectrum, floor_rel: f64) -> Result<f64> {
        self.check_same_grid(den)?;
        if floor_rel < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "floor_rel must be nonnegative, got {floor_rel}"
            )));
        }
        let den_max = den.max();
        if den_max <= 0.0 {
            return Err(Error::DegenerateSpectrum("ratio denominator is all zero"));
        }
        let floor = floor_rel * den_max;
        Ok(kahan_mean(
            self.values
                .iter()
                .zip(&den.values)
                .map(|(&n, &d)| n / d.max(floor)),
        ))
    }

    /// Pointwise product with another spectrum on the same grid.
    pub fn pointwise_mul(&self, other: &Spectrum) -> Result<Spectrum> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .collect();
        Ok(Spectrum::from_raw(self.grid, values))
    }

    /// Pointwise reciprocal with the usual relative floor; represents the
    /// squared response of the inverse mechanism. Errors if all-zero.
    pub fn reciprocal(&self, floor_rel: f64) -> Result<Spectrum> {
        let max = self.max();
        if max <= 0.0 {
            return Err(Error::DegenerateSpectrum("cannot invert all-zero spectrum"));
        }
        let floor = floor_rel * max;
        let values = self.values.iter().map(|&v| 1.0 / v.max(floor)).collect();
        Spectrum::new(self.grid, values)
    }

    /// Scales every bin by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Spectrum> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "scale must be finite and nonnegative, got {c}"
            )));
        }
        Ok(Spectrum::from_raw(
            self.grid,
            self.values.iter().map(|&v| v * c).collect(),
        ))
    }

    /// True when `values[k] == values[M-k mod M]` within `tol` (relative to
    /// the spectrum maximum), the symmetry of spectra of real signals.
    pub fn is_even_symmetric(&self, tol: f64) -> bool {
        let m = self.values.len();
        let scale = self.max().max(f64::MIN_POSITIVE);
        (0..m).all(|k| {
            let mirror = (m - k) % m;
            (self.values[k] - self.values[mirror]).abs() <= tol * scale
        })
    }

    pub(crate) fn check_same_grid(&self, other: &Spectrum) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.len(),
                right: other.grid.len(),
            });
        }
        Ok(())
    }
}

/// Window applied to Welch segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    fn taps(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|i| {
                    let x = 2.0 * std::f64::consts::PI * i as f64 / len as f64;
                    0.5 * (1.0 - x.cos())
                })
                .collect(),
        }
    }
}

/// Welch averaged-periodogram configuration. The output grid size equals the
/// segment length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_length: usize,
    pub overlap_fraction: f64,
    pub window: Window,
}

impl WelchConfig {
    /// Validates: power-of-two segment length, overlap in `[0, 1)`.
    pub fn new(segment_length: usize, overlap_fraction: f64, window: Window) -> Result<Self> {
        if segment_length < 2 || !segment_length.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "segment_length must be a power of two >= 2, got {segment_length}"
            )));
        }
        if !(0.0..1.0).contains(&overlap_fraction) {
            return Err(Error::InvalidParameter(format!(
                "overlap_fraction must be in [0, 1), got {overlap_fraction}"
            )));
        }
        Ok(Self {
            segment_length,
            overlap_fraction,
            window,
        })
    }

    /// Output frequency grid (one bin per segment sample).
    pub fn grid(&self) -> FrequencyGrid {
        FrequencyGrid {
            size: self.segment_length,
        }
    }

    fn step(&self) -> usize {
        ((self.segment_length as f64) * (1.0 - self.overlap_fraction)).round() as usize
    }
}

impl Default for WelchConfig {
    /// Hann window, 50% overlap, 1024-sample segments.
    fn default() -> Self {
        Self {
            segment_length: 1024,
            overlap_fraction: 0.5,
            window: Window::Hann,
        }
    }
}

/// Welch PSD estimate on the full-period grid of `segment_length` bins.
///
/// The series is centered (global mean removed, matching the zero-mean
/// process model), split into overlapping windowed segments, and the averaged
/// periodogram is normalized by the window power so that the spectral mean of
/// the result estimates the centered sample power. The output is exactly
/// even-symmetric and nonnegative.
pub fn estimate_psd_welch(ts: &TimeSeries, cfg: &WelchConfig) -> Result<Spectrum> {
    let n = ts.len();
    let seg = cfg.segment_length;
    if n < seg {
        return Err(Error::SeriesTooShort { needed: seg, got: n });
    }
    let step = cfg.step().max(1);
    let window = cfg.window.taps(seg);
    let window_energy: f64 = kahan_sum(window.iter().map(|w| w * w));

    let mu = ts.mean();
    let plan = ForwardPlan::new(seg);
    let mut acc = vec![0.0f64; seg];
    let mut buf = vec![Complex64::new(0.0, 0.0); seg];
    let mut segments = 0usize;
    let mut start = 0usize;
    while start + seg <= n {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new((ts.samples[start + i] - mu) * window[i], 0.0);
        }
        plan.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let scale = 1.0 / (segments as f64 * window_energy);
    for a in acc.iter_mut() {
        *a *= scale;
    }
    // Real input makes the periodogram even up to rounding; enforce it
    // exactly by averaging mirrored bins.
    let m = acc.len();
    let sym: Vec<f64> = (0..m)
        .map(|k| 0.5 * (acc[k] + acc[(m - k) % m]))
        .collect();
    Ok(Spectrum::from_raw(cfg.grid(), sym))
}
