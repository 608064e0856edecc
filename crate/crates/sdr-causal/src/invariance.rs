//! Whitening preprocessing and the translation-genericity view of spectral
//! independence.
//!
//! Spectral independence implicitly treats flat (white) spectra as the
//! uninformative reference; datasets whose spectra share a strong common
//! shape (power laws in particular) break that reference. An invertible
//! whitening gain fitted to the dataset-average PSD restores it: dividing
//! every spectrum by the average flattens the family, after which the
//! dependency ratios concentrate again.
//!
//! The genericity view replaces the reference manifold with a group average:
//! translating the one-sided cause spectrum along the frequency axis and
//! averaging the output power over all translations yields exactly
//! `<S_xx> <g>` on the discrete grid, so the ratio of actual to generic
//! output power is the forward SDR itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{dft_real, idft_to_real};
use crate::filters::FirFilter;
use crate::spectral::{FrequencyGrid, Spectrum, TimeSeries};
use crate::util::{kahan_mean, kahan_sum};
use rustfft::num_complex::Complex64;

/// Multiplicative spectral gain `|w(nu)|^2` with its power-preserving scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitener {
    gain: Spectrum,
    gamma: f64,
}

#[derive(Serialize, Deserialize)]
struct WhitenerWire {
    gain: Vec<f64>,
    gamma: f64,
    grid: usize,
}

impl Serialize for Whitener {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        WhitenerWire {
            gain: self.gain.values().to_vec(),
            gamma: self.gamma,
            grid: self.gain.len(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Whitener {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let wire = WhitenerWire::deserialize(de)?;
        let grid = FrequencyGrid::new(wire.grid).map_err(serde::de::Error::custom)?;
        let gain = Spectrum::new(grid, wire.gain).map_err(serde::de::Error::custom)?;
        Ok(Whitener {
            gain,
            gamma: wire.gamma,
        })
    }
}

impl Whitener {
    /// Identity whitener (unit gain) on a grid.
    pub fn identity(grid: FrequencyGrid) -> Self {
        Whitener {
            gain: Spectrum::from_raw(grid, vec![1.0; grid.len()]),
            gamma: 1.0,
        }
    }

    pub fn gain(&self) -> &Spectrum {
        &self.gain
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.gain.grid()
    }

    /// Fits the gain to a collection of spectra on a common grid:
    /// `gain = gamma / mean_spectrum`, with the denominator floored and
    /// `gamma` chosen so that whitening the average spectrum preserves its
    /// power. The dependency ratios are invariant to the `gamma` scale; the
    /// power-preserving choice just keeps whitened spectra on the original
    /// scale.
    pub fn fit(spectra: &[Spectrum], floor_rel: f64) -> Result<Whitener> {
        let first = spectra.first().ok_or(Error::EmptyCollection)?;
        let grid = first.grid();
        let m = grid.len();
        let mut mean = vec![0.0f64; m];
        for s in spectra {
            first.check_same_grid(s)?;
            for (acc, &v) in mean.iter_mut().zip(s.values()) {
                *acc += v;
            }
        }
        let count = spectra.len() as f64;
        for v in mean.iter_mut() {
            *v /= count;
        }
        let max = mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max <= 0.0 {
            return Err(Error::DegenerateSpectrum("average spectrum is all zero"));
        }
        let floor = floor_rel * max;
        let power = kahan_mean(mean.iter().copied());
        // gamma * mean over bins of mean[k]/max(mean[k], floor) = power.
        let retained = kahan_mean(mean.iter().map(|&v| v / v.max(floor)));
        let gamma = power / retained;
        let gain = Spectrum::new(
            grid,
            mean.iter().map(|&v| gamma / v.max(floor)).collect(),
        )?;
        Ok(Whitener { gain, gamma })
    }

    /// Pointwise application to a spectrum on the same grid.
    pub fn apply(&self, s: &Spectrum) -> Result<Spectrum> {
        self.gain.check_same_grid(s)?;
        s.pointwise_mul(&self.gain)
    }

    /// Time-domain application: multiplies the series transform by
    /// `sqrt(gain)` (gain evaluated at each DFT frequency by even-periodic
    /// linear interpolation) and transforms back; the output is real by
    /// construction.
    pub fn apply_to_series(&self, x: &TimeSeries) -> Result<TimeSeries> {
        let n = x.len();
        if n < 2 {
            return Err(Error::SeriesTooShort { needed: 2, got: n });
        }
        let mut bins = dft_real(x.samples());
        let m = self.gain.len() as f64;
        for (k, bin) in bins.iter_mut().enumerate() {
            let folded = k.min(n - k) as f64 / n as f64;
            let pos = folded * m;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let get = |idx: usize| {
                let wrapped = idx % self.gain.len();
                self.gain.values()[wrapped.min(self.gain.len() - wrapped)]
            };
            let gain = get(lo) * (1.0 - frac) + get(lo + 1) * frac;
            *bin *= Complex64::new(gain.sqrt(), 0.0);
        }
        TimeSeries::new(idft_to_real(bins))
    }

    /// Whitener with the reciprocal gain (undoes `apply` wherever the fit
    /// floor never bound).
    pub fn inverse(&self, floor_rel: f64) -> Result<Whitener> {
        Ok(Whitener {
            gain: self.gain.reciprocal(floor_rel)?,
            gamma: 1.0 / self.gamma,
        })
    }
}

/// Average output power over all discrete translations of the one-sided
/// cause spectrum: the generic contrast baseline. Equals
/// `<S_xx> <g>` exactly on the grid, so `<g S_xx> / EGC` is the forward SDR.
///
/// Discretization: the even grid's one-sided half is the cell-centered array
/// `s_j = (S[j] + S[M-1-j]) / 2` (for spectra that are palindromic or even in
/// the `k <-> M-k` sense this is just the first half); the group is the
/// `M/2` cyclic shifts of that array, and each shifted spectrum is rebuilt by
/// reflection, `[s, reverse(s)]`. Every one-sided value enters the full-grid
/// mean exactly twice, which is what makes the Haar average exact.
pub fn expected_generic_contrast(s_xx: &Spectrum, filter: &FirFilter) -> Result<f64> {
    let m = s_xx.len();
    if !m.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "generic contrast needs an even grid, got {m} bins"
        )));
    }
    let half = m / 2;
    let g = filter.squared_frequency_response(s_xx.grid());
    let one_sided: Vec<f64> = (0..half)
        .map(|j| 0.5 * (s_xx.values()[j] + s_xx.values()[m - 1 - j]))
        .collect();
    // Sum of the response against every cyclic shift of the evenized
    // spectrum, then the Haar (plain) average over the M/2 shifts.
    let mut total = 0.0;
    for shift in 0..half {
        let contrast = kahan_sum((0..m).map(|k| {
            let j = if k < half { k } else { m - 1 - k };
            let src = (j + half - shift) % half;
            g.values()[k] * one_sided[src]
        })) / m as f64;
        total += contrast;
    }
    Ok(total / half as f64)
}

/// Output power of the actual cause/mechanism pair, `<g S_xx>`; the
/// numerator of the genericity ratio.
pub fn actual_contrast(s_xx: &Spectrum, filter: &FirFilter) -> Result<f64> {
    let g = filter.squared_frequency_response(s_xx.grid());
    Ok(g.pointwise_mul(s_xx)?.mean())
}
