//! Decimation: ideal anti-aliasing low-pass followed by factor-D
//! downsampling, the analytic PSD prediction for the decimated signal, and
//! the end-to-end decimated inference trial.
//!
//! The ideal brick-wall filter is realized by whole-signal DFT masking
//! (bins at folded frequency `>= 1/(2D)` zeroed, strict inequality kept).
//! Acyclic edge effects are shed by trimming a configurable fraction of
//! samples at each end before subsampling.

use crate::error::{Error, Result};
use crate::fft::{dft_real, idft_to_real};
use crate::gen_model::{generate_pair, CauseSpec};
use crate::sdr::{infer_direction, SdrReport};
use crate::spectral::{Spectrum, TimeSeries, WelchConfig};
use crate::util::kahan_sum;

/// Fraction of samples dropped at each end after frequency-domain filtering.
pub const DEFAULT_TRIM_FRACTION: f64 = 0.05;

/// Zeroes every DFT bin with folded frequency at or above `1/(2 D)` and
/// transforms back. The output is real (the mask is symmetric, so the
/// imaginary residue is rounding noise and is discarded).
pub fn ideal_lowpass(x: &TimeSeries, factor: usize) -> Result<TimeSeries> {
    if factor < 1 {
        return Err(Error::InvalidParameter(
            "decimation factor must be at least 1".into(),
        ));
    }
    let n = x.len();
    if n < 2 * factor {
        return Err(Error::SeriesTooShort {
            needed: 2 * factor,
            got: n,
        });
    }
    let cutoff = 1.0 / (2.0 * factor as f64);
    let mut bins = dft_real(x.samples());
    for (k, bin) in bins.iter_mut().enumerate() {
        let folded = k.min(n - k) as f64 / n as f64;
        if folded >= cutoff {
            *bin = Default::default();
        }
    }
    TimeSeries::new(idft_to_real(bins))
}

/// Keeps one sample out of every `factor`: `out[k] = x[k * factor]`.
pub fn decimate(x: &TimeSeries, factor: usize) -> Result<TimeSeries> {
    if factor < 1 {
        return Err(Error::InvalidParameter(
            "decimation factor must be at least 1".into(),
        ));
    }
    TimeSeries::new(x.samples().iter().copied().step_by(factor).collect())
}

/// Full decimation pipeline: ideal low-pass, edge trim, subsample. A factor
/// of 1 is a bypass (no filtering, no trim), so sweeps over factors can
/// include the undecimated baseline.
pub fn decimate_pipeline(x: &TimeSeries, factor: usize, trim_fraction: f64) -> Result<TimeSeries> {
    if factor <= 1 {
        return Ok(x.clone());
    }
    let filtered = ideal_lowpass(x, factor)?;
    let trimmed = if trim_fraction > 0.0 {
        filtered.trim_edges(trim_fraction)?
    } else {
        filtered
    };
    decimate(&trimmed, factor)
}

/// Analytic PSD of the decimated signal: the input spectrum stretched by `D`
/// and scaled by `1/D`, `S_out(nu) = (1/D) S(nu / D)`, evaluated on the same
/// grid size with the even periodic extension (linear interpolation between
/// bins; exact at aligned bins and for `D = 1`).
pub fn decimated_psd_prediction(s: &Spectrum, factor: usize) -> Result<Spectrum> {
    if factor < 1 {
        return Err(Error::InvalidParameter(
            "decimation factor must be at least 1".into(),
        ));
    }
    let m = s.len();
    if !m.is_multiple_of(factor) {
        return Err(Error::InvalidParameter(format!(
            "grid size {m} not divisible by decimation factor {factor}"
        )));
    }
    let half = m / 2;
    let values = (0..m)
        .map(|k| {
            // Signed bin in [-M/2, M/2], stretched into the input grid.
            let signed = if k <= half { k as f64 } else { k as f64 - m as f64 };
            let pos = signed.abs() / factor as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let get = |idx: usize| {
                let wrapped = idx % m;
                s.values()[wrapped.min(m - wrapped)]
            };
            (get(lo) * (1.0 - frac) + get(lo + 1) * frac) / factor as f64
        })
        .collect();
    Spectrum::new(s.grid(), values)
}

/// One decimated inference trial plus the spectral flatness constant of the
/// retained band.
#[derive(Debug, Clone)]
pub struct DecimatedTrial {
    pub report: SdrReport,
    /// `K = max_{|nu| < 1/(2D)} S_xx / integral_0^{1/(2D)} S_xx`: how peaked
    /// the cause PSD is over the retained band. Large `K` means decimation
    /// keeps little usable spectral variation.
    pub k_constant: f64,
}

/// Generates a cause/effect pair, pushes both streams through the decimation
/// pipeline, and runs the decision rule on the decimated pair. `K` comes
/// from the analytic cause PSD.
#[allow(clippy::too_many_arguments)]
pub fn decimated_sdr_trial(
    spec: &CauseSpec,
    m: usize,
    sampler: &crate::filters::CoefficientSampler,
    factor: usize,
    n: usize,
    seed: u64,
    welch: &WelchConfig,
    floor_rel: f64,
    tie_tolerance: f64,
    trim_fraction: f64,
) -> Result<DecimatedTrial> {
    let pair = generate_pair(spec, m, sampler, n, seed)?;
    let x_dec = decimate_pipeline(&pair.x, factor, trim_fraction)?;
    let y_dec = decimate_pipeline(&pair.y, factor, trim_fraction)?;
    let report = infer_direction(&x_dec, &y_dec, welch, floor_rel, tie_tolerance)?;
    let k_constant = band_flatness_constant(&pair.true_sxx, factor)?;
    Ok(DecimatedTrial { report, k_constant })
}

/// `max_{|nu| < 1/(2D)} S / integral_0^{1/(2D)} S d nu` on the grid (max over
/// the retained band, one-sided left-Riemann integral over `[0, 1/(2D))`).
/// The one-sided integral follows the even symmetry of real-signal spectra;
/// for a white spectrum the value is exactly `2 D`.
pub fn band_flatness_constant(s: &Spectrum, factor: usize) -> Result<f64> {
    if factor < 1 {
        return Err(Error::InvalidParameter(
            "decimation factor must be at least 1".into(),
        ));
    }
    let m = s.len();
    let band_bins = (m / (2 * factor)).max(1);
    let band = &s.values()[..band_bins];
    let max = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let integral = kahan_sum(band.iter().copied()) / m as f64;
    if integral <= 0.0 {
        return Err(Error::DegenerateSpectrum("retained band carries no power"));
    }
    Ok(max / integral)
}
