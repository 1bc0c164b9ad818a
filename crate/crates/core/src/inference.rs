//! Nonparametric bootstrap, Wald tests and the treatment-label swap
//! diagnostic for the monotonicity assumption.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effects::{conditional_curves, marginal_curves, quantile_sorted, EffectCurve};
use crate::em::{fit, fit_from, EmConfig, StartValues};
use crate::error::{Error, Result};
use crate::model::{log_weights_unchecked, Dataset, FittedModel, ParameterSet};
use crate::scalar::{compensated_sum, Scalar};

/// Normal quantile used for 95% Wald intervals.
pub const Z95: f64 = 1.959963984540054;

/// Largest tolerated fraction of failed resamples.
pub const MAX_FAILED_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    /// Estimate ± 1.96 bootstrap SE.
    #[default]
    Wald,
    /// 2.5% and 97.5% quantiles of the resampled estimates.
    Percentile,
}

/// Effect curves to carry through the bootstrap.
#[derive(Debug, Clone, Default)]
pub struct EffectRequest<T> {
    pub grid: Vec<T>,
    pub profiles: Vec<Vec<T>>,
    pub marginal: bool,
}

#[derive(Debug, Clone)]
pub struct BootstrapConfig<T> {
    pub n_resamples: usize,
    pub seed: u64,
    pub interval: IntervalKind,
    /// Start every refit from the base fit instead of the default start.
    /// Faster, but a refit may settle in a different local maximum than
    /// the default start would reach.
    pub warm_start: bool,
    /// Test hook: every resample is the original data in original order.
    pub identity_resample: bool,
    pub effects: Option<EffectRequest<T>>,
}

impl<T> BootstrapConfig<T> {
    pub fn new(n_resamples: usize, seed: u64) -> Self {
        Self {
            n_resamples,
            seed,
            interval: IntervalKind::Wald,
            warm_start: false,
            identity_resample: false,
            effects: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BootstrapResult<T> {
    pub n_resamples: usize,
    pub n_failed: usize,
    pub seed: u64,
    pub interval: IntervalKind,
    pub param_names: Vec<String>,
    pub estimate: Vec<T>,
    pub se: Vec<T>,
    pub ci_low: Vec<T>,
    pub ci_high: Vec<T>,
    /// Point-estimate curves with `se`, `ci_low` and `ci_high` filled in.
    /// Entries are NaN where fewer than two resamples cover a grid point.
    pub effects: Vec<EffectCurve<T>>,
}

/// Resample indices for resample `b`: stream `b + 1` of the master seed.
pub fn resample_indices(n: usize, seed: u64, b: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64 + 1);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Conditional curves for every requested profile, then the marginal curves
/// on the grid points inside the illness-path support.
pub fn effect_curves<T: Scalar>(
    req: &EffectRequest<T>,
    fit: &FittedModel<T>,
    data: &Dataset<T>,
) -> Result<Vec<EffectCurve<T>>> {
    let mut out = Vec::new();
    for x in &req.profiles {
        out.extend(conditional_curves(&req.grid, x, fit)?);
    }
    if req.marginal {
        let limit = fit.hazards.illness_path_limit();
        let kept: Vec<T> = req
            .grid
            .iter()
            .copied()
            .filter(|&t| t >= T::zero() && t <= limit)
            .collect();
        out.extend(marginal_curves(&kept, fit, data)?);
    }
    Ok(out)
}

/// Values of a replicate's curve at the base curve's grid points.
fn align<T: Scalar>(base: &EffectCurve<T>, rep: &EffectCurve<T>) -> Vec<Option<T>> {
    base.grid
        .iter()
        .map(|t| rep.grid.iter().position(|s| s == t).map(|k| rep.values[k]))
        .collect()
}

struct Replicate<T> {
    params: Vec<T>,
    effects: Vec<Vec<Option<T>>>,
}

fn one_resample<T: Scalar>(
    data: &Dataset<T>,
    base: &FittedModel<T>,
    base_curves: &[EffectCurve<T>],
    em: &EmConfig,
    cfg: &BootstrapConfig<T>,
    b: usize,
) -> Option<Replicate<T>> {
    let sample = if cfg.identity_resample {
        data.clone()
    } else {
        data.select(&resample_indices(data.len(), cfg.seed, b))
    };
    let start = StartValues {
        params: base.params.clone(),
        hazards: Some(base.hazards.clone()),
    };
    let refit = if cfg.warm_start {
        fit_from(&sample, em, Some(&start))
    } else {
        fit(&sample, em)
    }
    .ok()?;
    if !refit.converged {
        return None;
    }
    let effects = match &cfg.effects {
        Some(req) => {
            let curves = effect_curves(req, &refit, &sample).ok()?;
            base_curves.iter().zip(&curves).map(|(bc, rc)| align(bc, rc)).collect()
        }
        None => Vec::new(),
    };
    Some(Replicate {
        params: refit.params.to_vec(),
        effects,
    })
}

/// Sample standard deviation with the `n - 1` denominator.
fn sd<T: Scalar>(v: &[T]) -> T {
    if v.len() < 2 {
        return T::nan();
    }
    // Shifted by the first draw so identical draws give exactly zero.
    let n = T::from_usize(v.len()).unwrap();
    let d: Vec<T> = v.iter().map(|&x| x - v[0]).collect();
    let mean = compensated_sum(d.iter().copied()) / n;
    let ss = compensated_sum(d.iter().map(|&x| (x - mean) * (x - mean)));
    (ss / (n - T::one())).sqrt()
}

fn interval<T: Scalar>(kind: IntervalKind, est: T, se: T, draws: &mut [T]) -> (T, T) {
    match kind {
        IntervalKind::Wald => {
            let half = T::lit(Z95) * se;
            (est - half, est + half)
        }
        IntervalKind::Percentile => {
            if draws.len() < 2 {
                return (T::nan(), T::nan());
            }
            draws.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
            (
                quantile_sorted(draws, T::lit(0.025)),
                quantile_sorted(draws, T::lit(0.975)),
            )
        }
    }
}

/// Bootstrap standard errors and intervals around `base`, which must be a
/// converged fit of `data`. Resamples draw whole subjects with replacement;
/// resample `b` uses its own stream of the master seed, so the result does
/// not depend on the number of worker threads. Refits that fail or do not
/// converge are counted and excluded.
pub fn bootstrap<T: Scalar>(
    data: &Dataset<T>,
    base: &FittedModel<T>,
    em: &EmConfig,
    cfg: &BootstrapConfig<T>,
) -> Result<BootstrapResult<T>> {
    if !base.converged {
        return Err(Error::InvalidInput("bootstrap needs a converged base fit".into()));
    }
    if cfg.n_resamples < 2 {
        return Err(Error::InvalidInput(
            "at least two bootstrap resamples are needed".into(),
        ));
    }
    let mut base_curves = match &cfg.effects {
        Some(req) => effect_curves(req, base, data)?,
        None => Vec::new(),
    };
    let reps: Vec<Option<Replicate<T>>> = (0..cfg.n_resamples)
        .into_par_iter()
        .map(|b| one_resample(data, base, &base_curves, em, cfg, b))
        .collect();
    let ok: Vec<Replicate<T>> = reps.into_iter().flatten().collect();
    let n_failed = cfg.n_resamples - ok.len();
    if n_failed as f64 > MAX_FAILED_FRACTION * cfg.n_resamples as f64 {
        return Err(Error::UnreliableInference {
            failed: n_failed,
            total: cfg.n_resamples,
        });
    }

    let estimate = base.params.to_vec();
    let mut se = Vec::with_capacity(estimate.len());
    let mut ci_low = Vec::with_capacity(estimate.len());
    let mut ci_high = Vec::with_capacity(estimate.len());
    for (k, &est) in estimate.iter().enumerate() {
        let mut draws: Vec<T> = ok.iter().map(|r| r.params[k]).collect();
        let s = sd(&draws);
        let (lo, hi) = interval(cfg.interval, est, s, &mut draws);
        se.push(s);
        ci_low.push(lo);
        ci_high.push(hi);
    }

    for (c, curve) in base_curves.iter_mut().enumerate() {
        let mut cse = Vec::with_capacity(curve.grid.len());
        let mut clo = Vec::with_capacity(curve.grid.len());
        let mut chi = Vec::with_capacity(curve.grid.len());
        for (g, &est) in curve.values.iter().enumerate() {
            let mut draws: Vec<T> = ok.iter().filter_map(|r| r.effects[c][g]).collect();
            let s = sd(&draws);
            let (lo, hi) = interval(cfg.interval, est, s, &mut draws);
            cse.push(s);
            clo.push(lo);
            chi.push(hi);
        }
        curve.se = Some(cse);
        curve.ci_low = Some(clo);
        curve.ci_high = Some(chi);
    }

    Ok(BootstrapResult {
        n_resamples: cfg.n_resamples,
        n_failed,
        seed: cfg.seed,
        interval: cfg.interval,
        param_names: ParameterSet::<T>::names(base.params.p()),
        estimate,
        se,
        ci_low,
        ci_high,
        effects: base_curves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WaldTest<T> {
    pub name: String,
    pub estimate: T,
    pub se: T,
    /// `None` when the standard error is zero or not finite.
    pub z: Option<T>,
    pub p_value: Option<T>,
}

/// `z = estimate / se` and its two-sided normal p-value.
pub fn wald_test<T: Scalar>(estimate: T, se: T) -> Option<(T, T)> {
    if !(se > T::zero()) || !se.is_finite() || !estimate.is_finite() {
        return None;
    }
    let z = estimate / se;
    let p = libm::erfc(z.abs().as_f64() / std::f64::consts::SQRT_2);
    Some((z, T::lit(p)))
}

pub fn wald_tests<T: Scalar>(fit: &FittedModel<T>, boot: &BootstrapResult<T>) -> Vec<WaldTest<T>> {
    let est = fit.params.to_vec();
    ParameterSet::<T>::names(fit.params.p())
        .into_iter()
        .zip(est)
        .zip(&boot.se)
        .map(|((name, estimate), &se)| {
            let zp = wald_test(estimate, se);
            WaldTest {
                name,
                estimate,
                se,
                z: zp.map(|v| v.0),
                p_value: zp.map(|v| v.1),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySummary {
    pub original_avg_w2: f64,
    pub swapped_avg_w2: f64,
    pub original_converged: bool,
    pub swapped_converged: bool,
    pub original_loglik: f64,
    pub swapped_loglik: f64,
}

/// Mean fitted stratum-2 weight over the subjects of `data`.
pub fn average_w2<T: Scalar>(fit: &FittedModel<T>, data: &Dataset<T>) -> T {
    let n = T::from_usize(data.len().max(1)).unwrap();
    compensated_sum(
        data.records()
            .iter()
            .map(|r| log_weights_unchecked(&r.x, &fit.params.alpha1, &fit.params.alpha2)[1].exp()),
    ) / n
}

/// Fits the data as given and with treatment labels swapped. A small
/// average stratum-2 weight under the swap is consistent with the absence of
/// subjects whose intermediate event is caused by treatment.
pub fn label_swap_sensitivity<T: Scalar>(data: &Dataset<T>, cfg: &EmConfig) -> Result<SensitivitySummary> {
    let treated = data.records().iter().filter(|r| r.treated).count();
    if treated == 0 || treated == data.len() {
        return Err(Error::InvalidInput(
            "label swap needs both treatment arms; with one arm the stratum-2 paths are not identifiable".into(),
        ));
    }
    let original = fit(data, cfg)?;
    let swapped_data = data.with_swapped_treatment();
    let swapped = fit(&swapped_data, cfg)?;
    Ok(SensitivitySummary {
        original_avg_w2: average_w2(&original, data).as_f64(),
        swapped_avg_w2: average_w2(&swapped, &swapped_data).as_f64(),
        original_converged: original.converged,
        swapped_converged: swapped.converged,
        original_loglik: original.loglik().as_f64(),
        swapped_loglik: swapped.loglik().as_f64(),
    })
}
