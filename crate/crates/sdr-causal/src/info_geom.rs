//! Relative entropy rates between stationary Gaussian processes and the
//! orthogonality decomposition that ties spectral independence to
//! information geometry.
//!
//! For zero-mean stationary Gaussian processes with strictly positive PSDs
//! the per-sample Kullback-Leibler rate has a closed spectral form,
//! `(1/2) <S1/S2 - 1 - ln(S1/S2)>`, and the divergence of a process to the
//! manifold of Gaussian white noises is reached at the white noise with the
//! same power. The divergence of the effect to that manifold then splits into
//! the cause's divergence, the mechanism's contribution, and a residual that
//! vanishes exactly when spectral independence holds.
//!
//! Everything here is a spectral functional; it is a KL rate only under the
//! Gaussian model, which is assumed, not checked. All rates are per sample in
//! nats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FirFilter;
use crate::spectral::Spectrum;
use crate::util::kahan_mean;

/// Relative entropy rate `(1/2) <r - 1 - ln r>` with `r = S1 / floored(S2)`,
/// in nats per sample. Nonnegative; zero iff the spectra agree pointwise
/// (up to the floor).
pub fn relative_entropy_rate(s1: &Spectrum, s2: &Spectrum, floor_rel: f64) -> Result<f64> {
    s1.check_same_grid(s2)?;
    let max2 = s2.max();
    if max2 <= 0.0 {
        return Err(Error::DegenerateSpectrum(
            "reference spectrum is all zero",
        ));
    }
    let floor = floor_rel * max2;
    Ok(kahan_mean(s1.values().iter().zip(s2.values()).map(
        |(&a, &b)| {
            let r = a / b.max(floor);
            0.5 * (r - 1.0 - r.ln())
        },
    )))
}

/// Divergence of a process to the white-noise manifold and the power of its
/// projection. The projection is the white noise of equal power, and the
/// divergence is `-(1/2) <ln(S / power)>`, zero iff the spectrum is constant.
/// Requires a strictly positive spectrum.
pub fn divergence_to_white_manifold(s: &Spectrum) -> Result<(f64, f64)> {
    if s.min() <= 0.0 {
        return Err(Error::DegenerateSpectrum(
            "white-manifold divergence needs a strictly positive spectrum",
        ));
    }
    let power = s.mean();
    let div = -kahan_mean(s.values().iter().map(|&v| 0.5 * (v / power).ln()));
    Ok((div, power))
}

/// The four terms of the orthogonality decomposition, plus the numerical gap
/// of the identity they satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceDecomposition {
    /// Irregularity of the effect: divergence of `S_yy` to the white manifold.
    pub d_effect: f64,
    /// Irregularity of the cause: divergence of `S_xx` to the white manifold.
    pub d_cause: f64,
    /// Irregularity of the mechanism: divergence of the white-noise-fed
    /// output (PSD `P(X) g`) from the effect's projection (white of power
    /// `P(Y)`).
    pub d_mechanism: f64,
    /// `(1/2)(1 - 1/rho_forward)`; zero exactly when spectral independence
    /// holds.
    pub residual: f64,
    /// `d_effect - d_cause - d_mechanism - residual`; identically zero in
    /// exact arithmetic, so it measures quadrature/rounding only.
    pub identity_gap: f64,
}

/// Computes the full decomposition for a cause PSD and a mechanism, with
/// `S_yy = g S_xx` formed on the grid.
pub fn igci_decomposition(s_xx: &Spectrum, filter: &FirFilter) -> Result<DivergenceDecomposition> {
    if s_xx.len() < filter.len() {
        return Err(Error::InvalidParameter(format!(
            "grid of {} bins cannot resolve a {}-tap filter",
            s_xx.len(),
            filter.len()
        )));
    }
    let g = filter.squared_frequency_response(s_xx.grid());
    let s_yy = g.pointwise_mul(s_xx)?;

    let (d_cause, p_x) = divergence_to_white_manifold(s_xx)?;
    let (d_effect, p_y) = divergence_to_white_manifold(&s_yy)?;

    // White noise of power P(X) fed through the mechanism has PSD P(X) g;
    // its divergence from the white noise of power P(Y):
    let u_y = Spectrum::constant(s_yy.grid(), p_y)?;
    let pushforward = g.scaled(p_x)?;
    let d_mechanism = relative_entropy_rate(&pushforward, &u_y, 0.0)?;

    // 1/rho = P(X) <g> / P(Y).
    let inv_rho = p_x * g.mean() / p_y;
    let residual = 0.5 * (1.0 - inv_rho);

    let identity_gap = d_effect - d_cause - d_mechanism - residual;
    Ok(DivergenceDecomposition {
        d_effect,
        d_cause,
        d_mechanism,
        residual,
        identity_gap,
    })
}
