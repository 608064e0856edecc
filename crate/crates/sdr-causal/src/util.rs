//! Small numeric helpers: compensated sums, quantiles, seed derivation.

/// Kahan-compensated sum. Keeps accumulated rounding at O(eps) regardless of
/// length, which the exact spectral identities (Parseval, the divergence
/// decomposition) rely on at large grid sizes.
pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

pub(crate) fn kahan_mean<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut n = 0usize;
    let sum = kahan_sum(xs.into_iter().inspect(|_| n += 1));
    sum / n as f64
}

/// Linear-interpolation quantile (R-7 convention) of an unsorted slice.
/// `q` is clamped to [0, 1]. Panics on an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    let q = q.clamp(0.0, 1.0);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        let frac = pos - lo as f64;
        v[lo] * (1.0 - frac) + v[hi] * frac
    }
}

/// Median shorthand.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// SplitMix64 mix of a base seed and a stream index. This is the documented
/// sub-seed rule: every internal draw (cause, filter, ...) gets
/// `derive_seed(seed, stream)` so that trials are reproducible and
/// independent streams never share RNG state.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
