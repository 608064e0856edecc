//! Textual forms of domain values: cause specs, samplers, windows, and the
//! `key = value` experiment config file.

use std::collections::HashMap;
use std::path::Path;

use sdr_causal::{
    CauseSpec, CoefficientSampler, ExperimentConfig, ExperimentKind, IidDistribution,
    RadiusDistribution, WelchConfig, Window,
};

use crate::CliError;

/// `white[:power]`, `ar1:a[:power]`, `ar2:a1:a2[:power]`,
/// `powerlaw:exponent[:floor[:power]]`.
pub fn parse_cause(text: &str) -> Result<CauseSpec, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| -> Result<f64, CliError> {
        s.parse::<f64>()
            .map_err(|_| CliError::usage(format!("invalid number '{s}' in cause '{text}'")))
    };
    let spec = match parts[0] {
        "white" => {
            let power = parts.get(1).map(|s| num(s)).transpose()?.unwrap_or(1.0);
            CauseSpec::white(power)?
        }
        "ar1" => {
            let a = num(parts.get(1).ok_or_else(|| {
                CliError::usage("ar1 cause needs a coefficient, e.g. ar1:0.9".into())
            })?)?;
            let power = parts.get(2).map(|s| num(s)).transpose()?.unwrap_or(1.0);
            CauseSpec::ar1(a, power)?
        }
        "ar2" => {
            if parts.len() < 3 {
                return Err(CliError::usage(
                    "ar2 cause needs two coefficients, e.g. ar2:0.5:-0.3".into(),
                ));
            }
            let a1 = num(parts[1])?;
            let a2 = num(parts[2])?;
            let power = parts.get(3).map(|s| num(s)).transpose()?.unwrap_or(1.0);
            CauseSpec::ar2(a1, a2, power)?
        }
        "powerlaw" => {
            let e = num(parts.get(1).ok_or_else(|| {
                CliError::usage("powerlaw cause needs an exponent, e.g. powerlaw:1.0".into())
            })?)?;
            let floor = parts.get(2).map(|s| num(s)).transpose()?.unwrap_or(0.01);
            let power = parts.get(3).map(|s| num(s)).transpose()?.unwrap_or(1.0);
            CauseSpec::power_law(e, floor, power)?
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown cause kind '{other}' (expected white, ar1, ar2 or powerlaw)"
            )))
        }
    };
    Ok(spec)
}

/// `spherical` (unit radius), `spherical-chi`, `gaussian`, `rademacher`,
/// `uniform`.
pub fn parse_sampler(text: &str) -> Result<CoefficientSampler, CliError> {
    match text {
        "spherical" => Ok(CoefficientSampler::unit_sphere()),
        "spherical-chi" => Ok(CoefficientSampler::Spherical {
            radius: RadiusDistribution::Chi,
        }),
        "gaussian" => Ok(CoefficientSampler::iid(IidDistribution::StandardNormal)),
        "rademacher" => Ok(CoefficientSampler::iid(IidDistribution::Rademacher)),
        "uniform" => Ok(CoefficientSampler::iid(IidDistribution::UniformPmSqrt3)),
        other => Err(CliError::usage(format!(
            "unknown sampler '{other}' (expected spherical, spherical-chi, gaussian, \
             rademacher or uniform)"
        ))),
    }
}

pub fn parse_window(text: &str) -> Result<Window, CliError> {
    match text {
        "hann" => Ok(Window::Hann),
        "rectangular" => Ok(Window::Rectangular),
        other => Err(CliError::usage(format!(
            "unknown window '{other}' (expected hann or rectangular)"
        ))),
    }
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("invalid integer '{s}' in list '{text}'")))
        })
        .collect()
}

/// Inline experiment flags; every field optional so the config file can fill
/// the gaps.
#[derive(Debug, Default, Clone)]
pub struct ExperimentOverrides {
    pub experiment: Option<String>,
    pub m_values: Option<String>,
    pub trials: Option<usize>,
    pub cause: Option<String>,
    pub sampler: Option<String>,
    pub n: Option<usize>,
    pub d_values: Option<String>,
    pub base_seed: Option<u64>,
    pub segment_length: Option<usize>,
    pub overlap_fraction: Option<f64>,
    pub window: Option<String>,
    pub floor_rel: Option<f64>,
    pub trim_fraction: Option<f64>,
}

const CONFIG_KEYS: [&str; 13] = [
    "experiment",
    "m_values",
    "trials",
    "cause",
    "sampler",
    "n",
    "d_values",
    "base_seed",
    "segment_length",
    "overlap_fraction",
    "window",
    "floor_rel",
    "trim_fraction",
];

/// Reads a `key = value` config file (`#` comments, blank lines ignored).
/// Unknown keys are rejected before any numerical work.
pub fn read_config_file(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "{} line {}: expected 'key = value'",
                path.display(),
                idx + 1
            )));
        };
        let key = key.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(CliError::usage(format!(
                "{} line {}: unknown key '{key}'",
                path.display(),
                idx + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Merges flags over file values over defaults into a full config.
/// `base_seed` has no default: stochastic runs must pin their seed.
pub fn build_experiment_config(
    overrides: &ExperimentOverrides,
    file: &HashMap<String, String>,
) -> Result<ExperimentConfig, CliError> {
    let pick = |flag: &Option<String>, key: &str| -> Option<String> {
        flag.clone().or_else(|| file.get(key).cloned())
    };
    let pick_parse = |flag: Option<String>, key: &str| -> Result<Option<f64>, CliError> {
        match flag.or_else(|| file.get(key).cloned()) {
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::usage(format!("invalid number '{s}' for {key}"))),
            None => Ok(None),
        }
    };

    let experiment: ExperimentKind = pick(&overrides.experiment, "experiment")
        .ok_or_else(|| CliError::usage("missing 'experiment' (flag or config file)".into()))?
        .parse()?;
    let cause = parse_cause(
        &pick(&overrides.cause, "cause").unwrap_or_else(|| "ar1:0.9".to_string()),
    )?;
    let sampler = parse_sampler(
        &pick(&overrides.sampler, "sampler").unwrap_or_else(|| "spherical".to_string()),
    )?;
    let base_seed = match overrides.base_seed {
        Some(s) => s,
        None => file
            .get("base_seed")
            .ok_or_else(|| {
                CliError::usage("missing 'base_seed' (stochastic runs must pin a seed)".into())
            })?
            .parse::<u64>()
            .map_err(|_| CliError::usage("invalid base_seed".into()))?,
    };

    let mut cfg = ExperimentConfig::new(experiment, cause, base_seed);
    cfg.sampler = sampler;
    if let Some(list) = pick(&overrides.m_values, "m_values") {
        cfg.m_values = parse_usize_list(&list)?;
    }
    if let Some(list) = pick(&overrides.d_values, "d_values") {
        cfg.d_values = parse_usize_list(&list)?;
    }
    if let Some(t) = overrides.trials {
        cfg.trials = t;
    } else if let Some(s) = file.get("trials") {
        cfg.trials = s
            .parse()
            .map_err(|_| CliError::usage("invalid trials".into()))?;
    }
    if let Some(n) = overrides.n {
        cfg.n = n;
    } else if let Some(s) = file.get("n") {
        cfg.n = s.parse().map_err(|_| CliError::usage("invalid n".into()))?;
    }
    let segment_length = match overrides.segment_length {
        Some(s) => Some(s),
        None => file
            .get("segment_length")
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| CliError::usage("invalid segment_length".into()))
            })
            .transpose()?,
    };
    let overlap = pick_parse(overrides.overlap_fraction.map(|v| v.to_string()), "overlap_fraction")?;
    let window = match pick(&overrides.window, "window") {
        Some(w) => Some(parse_window(&w)?),
        None => None,
    };
    let default_welch = WelchConfig::default();
    cfg.welch = WelchConfig::new(
        segment_length.unwrap_or(default_welch.segment_length),
        overlap.unwrap_or(default_welch.overlap_fraction),
        window.unwrap_or(default_welch.window),
    )?;
    if let Some(f) = pick_parse(overrides.floor_rel.map(|v| v.to_string()), "floor_rel")? {
        cfg.floor_rel = f;
    }
    if let Some(t) = pick_parse(overrides.trim_fraction.map(|v| v.to_string()), "trim_fraction")? {
        cfg.trim_fraction = t;
    }
    Ok(cfg)
}
