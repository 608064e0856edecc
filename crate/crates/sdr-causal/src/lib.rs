//! Causal direction inference between pairs of stationary time series from
//! the spectral independence of cause and mechanism.
//!
//! The model: a cause series with power spectral density `S_xx` drives an
//! effect through a linear time-invariant filter, `S_yy = |h|^2 S_xx`. If
//! the mechanism was chosen with no regard for the cause, its amplification
//! profile is uncorrelated with the cause spectrum, and the spectral
//! dependency ratio `<S_yy> / (<S_xx> <S_yy/S_xx>)` sits at one in the causal
//! direction while being pushed below one in the anti-causal direction. The
//! crate provides:
//!
//! - PSD estimation (Welch), autocovariance, and the grid conventions that
//!   make the discrete identities exact ([`spectral`]);
//! - FIR mechanisms, their frequency responses, and the spherically
//!   symmetric random-filter model ([`filters`]);
//! - the dependency ratios, the decision rule, and the forward-backward
//!   product bound ([`sdr`]);
//! - relative entropy rates between stationary Gaussian processes and the
//!   orthogonality decomposition behind the criterion ([`info_geom`]);
//! - ideal-lowpass decimation and its effect on inference ([`resampling`]);
//! - whitening and the translation-genericity identity ([`invariance`]);
//! - synthetic cause generation ([`gen_model`]) and reproducible Monte Carlo
//!   suites ([`harness`]).
//!
//! ```
//! use sdr_causal::{generate_pair, infer_direction, CauseSpec, CoefficientSampler,
//!                  Decision, WelchConfig};
//!
//! let cause = CauseSpec::ar1(0.8, 1.0)?;
//! let pair = generate_pair(&cause, 64, &CoefficientSampler::unit_sphere(), 1 << 14, 7)?;
//! let report = infer_direction(&pair.x, &pair.y, &WelchConfig::default(), 1e-8, 1e-9)?;
//! assert_eq!(report.decision, Decision::XToY);
//! # Ok::<(), sdr_causal::Error>(())
//! ```

pub mod error;
pub mod filters;
pub mod gen_model;
pub mod guide;
pub mod harness;
pub mod info_geom;
pub mod invariance;
pub mod resampling;
pub mod sdr;
pub mod spectral;
pub mod util;

mod fft;

pub use error::{Error, Result};
pub use filters::{
    invert_response, CoefficientSampler, FirFilter, IidDistribution, RadiusDistribution,
};
pub use gen_model::{generate_pair, CauseSpec, GeneratedPair};
pub use harness::{run, ExperimentConfig, ExperimentKind, ExperimentResult, GroupSummary, Mode, TrialRow};
pub use info_geom::{
    divergence_to_white_manifold, igci_decomposition, relative_entropy_rate,
    DivergenceDecomposition,
};
pub use invariance::{actual_contrast, expected_generic_contrast, Whitener};
pub use resampling::{
    band_flatness_constant, decimate, decimate_pipeline, decimated_psd_prediction,
    decimated_sdr_trial, ideal_lowpass, DecimatedTrial, DEFAULT_TRIM_FRACTION,
};
pub use sdr::{
    analytic_sdr_pair, forward_backward_bound, infer_direction, report_from_spectra,
    sdr_forward_from_filter, sdr_from_spectra, Decision, FbDiagnostics, SdrReport,
    DEFAULT_TIE_TOLERANCE,
};
pub use spectral::{
    estimate_psd_welch, FrequencyGrid, Spectrum, TimeSeries, WelchConfig, Window,
    DEFAULT_FLOOR_REL,
};
