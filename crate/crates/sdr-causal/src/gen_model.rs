//! Synthetic cause processes and the end-to-end forward generative model
//! used by all experiments: draw a stationary cause with a known PSD, draw a
//! random filter, convolve, keep the ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{dft_real, idft_to_real};
use crate::filters::{CoefficientSampler, FirFilter};
use crate::spectral::{FrequencyGrid, Spectrum, TimeSeries};
use crate::util::derive_seed;

/// Stationary cause-process family. Every kind has a strictly positive PSD
/// and a closed form for it on any grid, normalized so the spectral mean
/// equals `power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CauseSpec {
    /// Gaussian white noise.
    White { power: f64 },
    /// First-order autoregression `x_t = a x_{t-1} + noise`.
    Ar1 { a: f64, power: f64 },
    /// Second-order autoregression.
    Ar2 { a1: f64, a2: f64, power: f64 },
    /// `S(nu) ~ 1 / (|nu|^exponent + floor)`: power-law decay with a noise
    /// floor keeping the PSD strictly positive and finite at DC.
    PowerLaw {
        exponent: f64,
        floor: f64,
        power: f64,
    },
    /// PSD given directly as a table; sampled by spectral shaping.
    AnalyticTable { spectrum: Spectrum },
}

impl CauseSpec {
    pub fn white(power: f64) -> Result<Self> {
        let s = CauseSpec::White { power };
        s.validate()?;
        Ok(s)
    }

    pub fn ar1(a: f64, power: f64) -> Result<Self> {
        let s = CauseSpec::Ar1 { a, power };
        s.validate()?;
        Ok(s)
    }

    pub fn ar2(a1: f64, a2: f64, power: f64) -> Result<Self> {
        let s = CauseSpec::Ar2 { a1, a2, power };
        s.validate()?;
        Ok(s)
    }

    pub fn power_law(exponent: f64, floor: f64, power: f64) -> Result<Self> {
        let s = CauseSpec::PowerLaw {
            exponent,
            floor,
            power,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks stationarity/positivity constraints.
    pub fn validate(&self) -> Result<()> {
        let power = self.power();
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "process power must be positive, got {power}"
            )));
        }
        match *self {
            CauseSpec::White { .. } => Ok(()),
            CauseSpec::Ar1 { a, .. } => {
                if a.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(Error::UnstableProcess)
                }
            }
            CauseSpec::Ar2 { a1, a2, .. } => {
                // Stationarity triangle for x_t = a1 x_{t-1} + a2 x_{t-2} + e.
                if a2.abs() < 1.0 && a1 + a2 < 1.0 && a2 - a1 < 1.0 {
                    Ok(())
                } else {
                    Err(Error::UnstableProcess)
                }
            }
            CauseSpec::PowerLaw {
                exponent, floor, ..
            } => {
                if !(exponent.is_finite() && exponent > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power-law exponent must be positive, got {exponent}"
                    )));
                }
                if !(floor.is_finite() && floor > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power-law floor must be positive, got {floor}"
                    )));
                }
                Ok(())
            }
            CauseSpec::AnalyticTable { ref spectrum } => {
                if spectrum.mean() <= 0.0 {
                    return Err(Error::DegenerateSpectrum("table PSD has zero mean"));
                }
                Ok(())
            }
        }
    }

    /// Target process power (the PSD's spectral mean).
    pub fn power(&self) -> f64 {
        match *self {
            CauseSpec::White { power }
            | CauseSpec::Ar1 { power, .. }
            | CauseSpec::Ar2 { power, .. }
            | CauseSpec::PowerLaw { power, .. } => power,
            CauseSpec::AnalyticTable { ref spectrum } => spectrum.mean(),
        }
    }

    /// Un-normalized spectral shape at folded frequency `|nu| <= 1/2`.
    fn shape_at(&self, nu: f64) -> f64 {
        let th = 2.0 * std::f64::consts::PI * nu;
        match *self {
            CauseSpec::White { .. } => 1.0,
            CauseSpec::Ar1 { a, .. } => 1.0 / (1.0 + a * a - 2.0 * a * th.cos()),
            CauseSpec::Ar2 { a1, a2, .. } => {
                // |1 - a1 z - a2 z^2|^2 on the unit circle, z = e^{-i th}.
                let (c1, s1) = (th.cos(), th.sin());
                let (c2, s2) = ((2.0 * th).cos(), (2.0 * th).sin());
                let re = 1.0 - a1 * c1 - a2 * c2;
                let im = a1 * s1 + a2 * s2;
                1.0 / (re * re + im * im)
            }
            CauseSpec::PowerLaw {
                exponent, floor, ..
            } => 1.0 / (nu.abs().powf(exponent) + floor),
            CauseSpec::AnalyticTable { ref spectrum } => interp_folded(spectrum, nu),
        }
    }

    /// Closed-form PSD on the grid, scaled so the grid mean equals `power`
    /// exactly. Ground-truth identities downstream rely on that exactness.
    pub fn analytic_psd(&self, grid: FrequencyGrid) -> Result<Spectrum> {
        self.validate()?;
        if let CauseSpec::AnalyticTable { spectrum } = self {
            if spectrum.grid() == grid {
                let scale = self.power() / spectrum.mean();
                return spectrum.scaled(scale);
            }
        }
        let m = grid.len();
        let raw: Vec<f64> = (0..m).map(|k| self.shape_at(grid.folded_nu(k))).collect();
        let raw = Spectrum::new(grid, raw)?;
        let mean = raw.mean();
        if mean <= 0.0 {
            return Err(Error::DegenerateSpectrum("analytic PSD has zero mean"));
        }
        raw.scaled(self.power() / mean)
    }

    /// Draws a realization of length `n` with this PSD, deterministic per
    /// seed. AR kinds run the recursion on Gaussian innovations with burn-in;
    /// spectral kinds shape white noise in the frequency domain (circularly
    /// stationary, which is invisible to the spectral averages used
    /// downstream).
    pub fn sample(&self, n: usize, seed: u64) -> Result<TimeSeries> {
        self.validate()?;
        if n == 0 {
            return Err(Error::SeriesTooShort { needed: 1, got: 0 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match *self {
            CauseSpec::White { power } => {
                let sd = power.sqrt();
                TimeSeries::new(
                    (0..n)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            z * sd
                        })
                        .collect(),
                )
            }
            CauseSpec::Ar1 { a, power } => {
                // Innovation variance for stationary variance `power`.
                let sigma = (power * (1.0 - a * a)).sqrt();
                sample_ar(&[a], sigma, n, default_burn_in(a.abs()), &mut rng)
            }
            CauseSpec::Ar2 { a1, a2, power } => {
                let num = (1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1);
                let sigma = (power * num / (1.0 - a2)).sqrt();
                let radius = companion_radius(a1, a2);
                sample_ar(&[a1, a2], sigma, n, default_burn_in(radius), &mut rng)
            }
            CauseSpec::PowerLaw { .. } | CauseSpec::AnalyticTable { .. } => {
                self.sample_by_shaping(n, &mut rng)
            }
        }
    }

    fn sample_by_shaping(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<TimeSeries> {
        let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let mut bins = dft_real(&noise);
        // Evaluate the PSD on the length-n grid and normalize its mean to the
        // target power so the shaped output has the right variance.
        let shape: Vec<f64> = (0..n)
            .map(|k| {
                let fold = k.min(n - k) as f64 / n as f64;
                self.shape_at(fold)
            })
            .collect();
        let mean = crate::util::kahan_mean(shape.iter().copied());
        let scale = self.power() / mean;
        for (b, &s) in bins.iter_mut().zip(&shape) {
            *b *= Complex64::new((s * scale).sqrt(), 0.0);
        }
        TimeSeries::new(idft_to_real(bins))
    }
}

/// Burn-in long enough to forget initial conditions: ten correlation lengths,
/// at least 1024 samples.
fn default_burn_in(radius: f64) -> usize {
    let corr_len = if radius < 1.0 {
        1.0 / (1.0 - radius)
    } else {
        1.0
    };
    ((10.0 * corr_len).ceil() as usize).max(1024)
}

/// Spectral radius of the AR(2) companion matrix (largest root modulus).
fn companion_radius(a1: f64, a2: f64) -> f64 {
    let disc = a1 * a1 + 4.0 * a2;
    if disc >= 0.0 {
        let r1 = (a1 + disc.sqrt()) / 2.0;
        let r2 = (a1 - disc.sqrt()) / 2.0;
        r1.abs().max(r2.abs())
    } else {
        // Complex pair: modulus sqrt(-a2).
        (-a2).sqrt()
    }
}

fn sample_ar(
    coeffs: &[f64],
    sigma: f64,
    n: usize,
    burn_in: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TimeSeries> {
    let total = n + burn_in;
    let mut x = vec![0.0f64; total];
    for t in 0..total {
        let z: f64 = StandardNormal.sample(rng);
        let mut acc = sigma * z;
        for (i, &a) in coeffs.iter().enumerate() {
            if t > i {
                acc += a * x[t - 1 - i];
            }
        }
        x[t] = acc;
    }
    TimeSeries::new(x.split_off(burn_in))
}

/// A generated cause/effect pair with its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    /// Cause restricted to the window where the effect is defined, so both
    /// series have equal length.
    pub x: TimeSeries,
    /// Effect `y = h * x` (valid-region convolution).
    pub y: TimeSeries,
    pub true_filter: FirFilter,
    /// Analytic cause PSD on a grid resolving the filter.
    pub true_sxx: Spectrum,
    pub seed: u64,
}

/// Samples a cause and a random mechanism, convolves, and records the ground
/// truth. Both output series have length `n` (the cause is drawn `m - 1`
/// samples longer to absorb the valid-region truncation). Sub-seeds come
/// from the documented SplitMix64 derivation, so the cause draw does not
/// depend on the filter length.
pub fn generate_pair(
    spec: &CauseSpec,
    m: usize,
    sampler: &CoefficientSampler,
    n: usize,
    seed: u64,
) -> Result<GeneratedPair> {
    if n <= m {
        return Err(Error::SeriesTooShort { needed: m + 1, got: n });
    }
    let cause_seed = derive_seed(seed, 1);
    let filter_seed = derive_seed(seed, 2);
    let x_full = spec.sample(n + m - 1, cause_seed)?;
    let true_filter = FirFilter::sample(m, sampler, filter_seed)?;
    let y = true_filter.apply(&x_full)?;
    let x = TimeSeries::new(x_full.samples()[m - 1..].to_vec())?;
    let true_sxx = spec.analytic_psd(FrequencyGrid::for_filter_len(m))?;
    Ok(GeneratedPair {
        x,
        y,
        true_filter,
        true_sxx,
        seed,
    })
}

/// Piecewise-linear evaluation of a gridded spectrum at an arbitrary folded
/// frequency, using the even periodic extension.
fn interp_folded(spectrum: &Spectrum, nu: f64) -> f64 {
    let m = spectrum.len() as f64;
    let nu = nu.abs().min(0.5);
    let pos = nu * m;
    let lo = pos.floor() as usize;
    let hi = lo + 1;
    let frac = pos - lo as f64;
    let get = |idx: usize| {
        let wrapped = idx % spectrum.len();
        let folded = wrapped.min(spectrum.len() - wrapped);
        spectrum.values()[folded]
    };
    get(lo) * (1.0 - frac) + get(hi) * frac
}
