//! Finite impulse response filters: the causal mechanism of the model.
//!
//! A filter is a coefficient vector `b` plus an integer delay (the index of
//! the first tap). Convolution with the cause series produces the effect,
//! the squared frequency response is the per-frequency power amplification,
//! and random filters drawn from a spherically symmetric distribution are the
//! generative model behind all identifiability experiments.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::ForwardPlan;
use crate::spectral::{FrequencyGrid, Spectrum, TimeSeries};
use crate::util::{derive_seed, kahan_sum};

/// FIR filter: `m` coefficients and the delay of the first tap.
///
/// The delay shifts time labels only; it never affects the squared frequency
/// response, the filter energy, or the valid-region convolution values, so it
/// is carried purely as metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirFilter {
    coeffs: Vec<f64>,
    delay: i64,
}

impl FirFilter {
    /// Builds a filter; coefficients must be finite and not all zero.
    pub fn new(coeffs: Vec<f64>, delay: i64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "filter needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "filter coefficients must be finite".into(),
            ));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidParameter(
                "filter coefficients must not be all zero".into(),
            ));
        }
        Ok(Self { coeffs, delay })
    }

    /// Identity mechanism (single unit tap).
    pub fn identity() -> Self {
        Self {
            coeffs: vec![1.0],
            delay: 0,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn delay(&self) -> i64 {
        self.delay
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Squared l2 norm of the coefficients (the filter energy). Equals the
    /// grid mean of the squared frequency response exactly whenever the grid
    /// has at least as many bins as taps.
    pub fn energy(&self) -> f64 {
        kahan_sum(self.coeffs.iter().map(|&b| b * b))
    }

    /// Applies the filter by linear convolution truncated to the valid
    /// region: output length `N - m + 1`, every output sample a full overlap.
    /// Valid-region truncation keeps the output stationary (no zero-padded
    /// warm-up). The delay only relabels time, so the sample values are
    /// delay-independent.
    pub fn apply(&self, x: &TimeSeries) -> Result<TimeSeries> {
        let n = x.len();
        let m = self.coeffs.len();
        if n < m {
            return Err(Error::SeriesTooShort { needed: m, got: n });
        }
        let xs = x.samples();
        let mut out = Vec::with_capacity(n - m + 1);
        for t in (m - 1)..n {
            let mut acc = 0.0;
            for (i, &b) in self.coeffs.iter().enumerate() {
                acc += b * xs[t - i];
            }
            out.push(acc);
        }
        TimeSeries::new(out)
    }

    /// Squared modulus of the frequency response on the grid:
    /// `|sum_j b_j exp(-i 2 pi (k/M) j)|^2`. Even-symmetric; the delay factor
    /// has unit modulus and drops out. Coefficients beyond the grid size fold
    /// in modulo `M`, which matches the DFT evaluation exactly.
    pub fn squared_frequency_response(&self, grid: FrequencyGrid) -> Spectrum {
        let m = grid.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (j, &b) in self.coeffs.iter().enumerate() {
            buf[j % m].re += b;
        }
        ForwardPlan::new(m).process(&mut buf);
        let values: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
        // Exact even symmetry (real coefficients).
        let sym = (0..m)
            .map(|k| 0.5 * (values[k] + values[(m - k) % m]))
            .collect();
        Spectrum::from_raw(grid, sym)
    }

    /// Coefficient of variation of the squared frequency response along the
    /// frequency axis: std over the grid divided by the grid mean. Scale
    /// invariant; zero iff the response is constant on the grid.
    pub fn cv_squared_response(&self, grid: FrequencyGrid) -> f64 {
        let g = self.squared_frequency_response(grid);
        let mean = g.mean();
        let var = crate::util::kahan_mean(g.values().iter().map(|&v| (v - mean) * (v - mean)));
        var.sqrt() / mean
    }

    /// Draws a filter from the sampler, deterministically for a given seed.
    pub fn sample(m: usize, sampler: &CoefficientSampler, seed: u64) -> Result<Self> {
        sampler.sample(m, seed)
    }
}

/// Reciprocal of a squared response with the usual relative floor; the
/// spectral footprint of the backward mechanism. The backward direction is
/// only ever represented this way — a stable time-domain inverse FIR does not
/// exist in general and the dependency ratios never need one.
pub fn invert_response(response: &Spectrum, floor_rel: f64) -> Result<Spectrum> {
    response.reciprocal(floor_rel)
}

/// Radius distribution of the spherically symmetric coefficient model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusDistribution {
    /// Fixed radius `r > 0`. The dependency ratios are scale invariant, so
    /// the unit sphere is the default.
    Constant(f64),
    /// Norm of `m` iid standard normals; combined with a uniform direction
    /// this reproduces the iid Gaussian coefficient vector.
    Chi,
}

/// Unit-variance zero-mean distributions for the iid coefficient model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IidDistribution {
    StandardNormal,
    /// +1 or -1 with equal probability.
    Rademacher,
    /// Uniform on [-sqrt(3), sqrt(3)].
    UniformPmSqrt3,
}

/// How random filter coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSampler {
    /// Direction uniform on the unit sphere (normalized standard normals),
    /// scaled by a radius draw.
    Spherical { radius: RadiusDistribution },
    /// iid coefficients from a zero-mean unit-variance distribution, scaled
    /// by `1/sqrt(m)` so the energy concentrates at one.
    Iid { dist: IidDistribution },
}

impl CoefficientSampler {
    /// Unit-sphere sampler (constant radius one).
    pub fn unit_sphere() -> Self {
        CoefficientSampler::Spherical {
            radius: RadiusDistribution::Constant(1.0),
        }
    }

    pub fn iid(dist: IidDistribution) -> Self {
        CoefficientSampler::Iid { dist }
    }

    /// Validates the sampler parameters.
    pub fn validate(&self) -> Result<()> {
        if let CoefficientSampler::Spherical {
            radius: RadiusDistribution::Constant(r),
        } = self
        {
            if !(r.is_finite() && *r > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "constant radius must be positive, got {r}"
                )));
            }
        }
        Ok(())
    }

    fn sample(&self, m: usize, seed: u64) -> Result<FirFilter> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "filter length must be at least 1".into(),
            ));
        }
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = match self {
            CoefficientSampler::Spherical { radius } => {
                let mut unit = draw_unit_direction(m, &mut rng)?;
                let r = match radius {
                    RadiusDistribution::Constant(r) => *r,
                    RadiusDistribution::Chi => {
                        // Independent stream so the radius draw never
                        // perturbs the direction draw.
                        let mut radius_rng =
                            ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5261_6469));
                        norm_of_normals(m, &mut radius_rng)
                    }
                };
                for c in unit.iter_mut() {
                    *c *= r;
                }
                unit
            }
            CoefficientSampler::Iid { dist } => {
                let scale = 1.0 / (m as f64).sqrt();
                let mut coeffs = vec![0.0; m];
                match dist {
                    IidDistribution::StandardNormal => {
                        for c in coeffs.iter_mut() {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *c = z * scale;
                        }
                    }
                    IidDistribution::Rademacher => {
                        for c in coeffs.iter_mut() {
                            *c = if rng.next_u64() & 1 == 1 { scale } else { -scale };
                        }
                    }
                    IidDistribution::UniformPmSqrt3 => {
                        let width = 3.0f64.sqrt();
                        let u = Uniform::new_inclusive(-width, width)
                            .expect("valid uniform bounds");
                        for c in coeffs.iter_mut() {
                            *c = u.sample(&mut rng) * scale;
                        }
                    }
                }
                coeffs
            }
        };
        FirFilter::new(coeffs, 0)
    }
}

const MAX_DRAW_ATTEMPTS: usize = 16;

fn draw_unit_direction(m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    for _ in 0..MAX_DRAW_ATTEMPTS {
        let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        let norm = kahan_sum(v.iter().map(|&x| x * x)).sqrt();
        if norm > f64::MIN_POSITIVE.sqrt() {
            return Ok(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Err(Error::DegenerateDraw(MAX_DRAW_ATTEMPTS))
}

fn norm_of_normals(m: usize, rng: &mut ChaCha8Rng) -> f64 {
    kahan_sum((0..m).map(|_| {
        let z: f64 = StandardNormal.sample(rng);
        z * z
    }))
    .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FrequencyGrid;

    #[test]
    fn identity_filter_returns_input() {
        let x = TimeSeries::new(vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let y = FirFilter::identity().apply(&x).unwrap();
        assert_eq!(y.samples(), x.samples());
    }

    #[test]
    fn differencer_kills_constant_series() {
        let f = FirFilter::new(vec![1.0, -1.0], 0).unwrap();
        let x = TimeSeries::new(vec![2.5; 10]).unwrap();
        let y = f.apply(&x).unwrap();
        assert_eq!(y.len(), 9);
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn moving_average_hand_example() {
        let f = FirFilter::new(vec![0.5, 0.5], 0).unwrap();
        let x = TimeSeries::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = f.apply(&x).unwrap();
        assert_eq!(y.samples(), &[1.5, 2.5, 3.5]);
    }

    #[test]
    fn apply_rejects_too_short_input() {
        let f = FirFilter::new(vec![1.0, 0.0, 1.0], 0).unwrap();
        let x = TimeSeries::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(f.apply(&x), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn unit_tap_has_flat_response() {
        let f = FirFilter::new(vec![1.0], 0).unwrap();
        let g = f.squared_frequency_response(FrequencyGrid::new(16).unwrap());
        assert!(g.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn two_tap_response_closed_form() {
        // b = [1,1]/sqrt(2): |h(nu)|^2 = 1 + cos(2 pi nu).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = FirFilter::new(vec![s, s], 0).unwrap();
        let g = f.squared_frequency_response(FrequencyGrid::new(8).unwrap());
        assert!((g.values()[0] - 2.0).abs() < 1e-12);
        assert!((g.values()[2] - 1.0).abs() < 1e-12);
        assert!(g.values()[4].abs() < 1e-12);
    }

    #[test]
    fn delay_does_not_change_the_response() {
        let f0 = FirFilter::new(vec![0.3, -1.0, 0.7], 0).unwrap();
        let f5 = FirFilter::new(vec![0.3, -1.0, 0.7], 5).unwrap();
        let grid = FrequencyGrid::new(64).unwrap();
        assert_eq!(
            f0.squared_frequency_response(grid).values(),
            f5.squared_frequency_response(grid).values()
        );
    }

    #[test]
    fn energy_examples() {
        assert_eq!(FirFilter::new(vec![1.0], 0).unwrap().energy(), 1.0);
        assert_eq!(FirFilter::new(vec![3.0, 4.0], 0).unwrap().energy(), 25.0);
        let f = FirFilter::sample(64, &CoefficientSampler::unit_sphere(), 1234).unwrap();
        assert!((f.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cv_examples() {
        let grid = FrequencyGrid::new(64).unwrap();
        assert_eq!(
            FirFilter::new(vec![1.0], 0).unwrap().cv_squared_response(grid),
            0.0
        );
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = FirFilter::new(vec![s, s], 0).unwrap();
        // mean of cos^2 over the grid is exactly 1/2, so CV = sqrt(1/2).
        assert!((f.cv_squared_response(grid) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cv_is_scale_invariant() {
        let grid = FrequencyGrid::new(256).unwrap();
        let f = FirFilter::new(vec![0.2, -0.5, 1.0], 0).unwrap();
        let scaled = FirFilter::new(vec![0.2 * 7.5, -0.5 * 7.5, 7.5], 0).unwrap();
        let a = f.cv_squared_response(grid);
        let b = scaled.cv_squared_response(grid);
        assert!((a - b).abs() < 1e-12 * a.max(1.0));
    }

    #[test]
    fn one_dimensional_sphere_is_sign_flip() {
        for seed in 0..8 {
            let f = FirFilter::sample(1, &CoefficientSampler::unit_sphere(), seed).unwrap();
            assert!((f.coeffs()[0].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sphere_draw_is_deterministic_per_seed() {
        let s = CoefficientSampler::unit_sphere();
        let a = FirFilter::sample(16, &s, 77).unwrap();
        let b = FirFilter::sample(16, &s, 77).unwrap();
        let c = FirFilter::sample(16, &s, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn iid_normal_energy_concentrates() {
        // chi-square concentration: |energy - 1| < 0.3 in >= 99% of draws.
        let sampler = CoefficientSampler::iid(IidDistribution::StandardNormal);
        let mut hits = 0;
        let trials = 1000;
        for seed in 0..trials {
            let f = FirFilter::sample(256, &sampler, seed).unwrap();
            if (f.energy() - 1.0).abs() < 0.3 {
                hits += 1;
            }
        }
        assert!(hits * 100 >= trials * 99, "only {hits}/{trials} inside band");
    }

    #[test]
    fn rademacher_and_uniform_have_unit_energy_scaling() {
        for dist in [IidDistribution::Rademacher, IidDistribution::UniformPmSqrt3] {
            let f = FirFilter::sample(4096, &CoefficientSampler::iid(dist), 5).unwrap();
            // Rademacher energy is exactly 1; uniform concentrates near 1.
            assert!((f.energy() - 1.0).abs() < 0.1, "{dist:?}: {}", f.energy());
        }
    }

    #[test]
    fn invert_response_examples() {
        let grid = FrequencyGrid::new(8).unwrap();
        let c2 = Spectrum::constant(grid, 2.0).unwrap();
        let inv = invert_response(&c2, 1e-8).unwrap();
        assert!(inv.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));

        // Response touching zero is floored at floor_rel * max = 2e-8.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = FirFilter::new(vec![s, s], 0).unwrap();
        let g = f.squared_frequency_response(grid);
        let inv = invert_response(&g, 1e-8).unwrap();
        assert!((inv.values()[4] - 1.0 / (1e-8 * 2.0)).abs() < 1e-3);

        // invert . invert is the identity wherever the floor never binds.
        let back = invert_response(&inv, 0.0).unwrap();
        for (k, (&a, &b)) in g.values().iter().zip(back.values()).enumerate() {
            if a > 1e-8 * 2.0 {
                assert!((a - b).abs() < 1e-12 * a, "bin {k}: {a} vs {b}");
            }
        }

        let zero = Spectrum::constant(grid, 0.0).unwrap();
        assert!(matches!(
            invert_response(&zero, 1e-8),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn filter_json_round_trip() {
        let f = FirFilter::new(vec![0.25, -1.5], 3).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"coeffs":[0.25,-1.5],"delay":3}"#);
        let back: FirFilter = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn sphere_first_coordinate_matches_beta_marginal() {
        // Rotation invariance check at desk scale: the first coordinate u of
        // a uniform direction on S^{m-1} has u^2 ~ Beta(1/2, (m-1)/2).
        // Kolmogorov-Smirnov against that CDF.
        use statrs::distribution::{Beta, ContinuousCDF};
        let m = 8;
        let n = 2000usize;
        let beta = Beta::new(0.5, (m as f64 - 1.0) / 2.0).unwrap();
        let mut firsts: Vec<f64> = (0..n)
            .map(|seed| {
                FirFilter::sample(m, &CoefficientSampler::unit_sphere(), seed as u64)
                    .unwrap()
                    .coeffs()[0]
            })
            .collect();
        firsts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |t: f64| 0.5 + 0.5 * t.signum() * beta.cdf(t * t);
        let mut ks: f64 = 0.0;
        for (i, &t) in firsts.iter().enumerate() {
            let empirical_hi = (i + 1) as f64 / n as f64;
            let empirical_lo = i as f64 / n as f64;
            let model = cdf(t);
            ks = ks.max((empirical_hi - model).abs()).max((model - empirical_lo).abs());
        }
        // 1% critical value 1.63 / sqrt(n).
        let critical = 1.63 / (n as f64).sqrt();
        assert!(ks < critical, "KS statistic {ks} above {critical}");
    }
}
