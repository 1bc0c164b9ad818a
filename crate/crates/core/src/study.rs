//! Monte Carlo study on the reference design: simulate, fit, bootstrap and
//! summarize parameter and effect estimates against the truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effects::{conditional_effect, EffectName};
use crate::em::{fit, EmConfig};
use crate::error::{Error, Result};
use crate::inference::{bootstrap, BootstrapConfig, EffectRequest, Z95};
use crate::model::ParameterSet;
use crate::simulate::{generate, true_effects, GenerativeSpec};

/// Effect rows reported by the effect table, as `(effect, time)`.
pub const EFFECT_ROWS: [(EffectName, f64); 14] = [
    (EffectName::Nde1, 2.0),
    (EffectName::Nde1, 4.0),
    (EffectName::Nde1, 6.0),
    (EffectName::Nie1, 2.0),
    (EffectName::Nie1, 4.0),
    (EffectName::Nie1, 6.0),
    (EffectName::Te2, 2.0),
    (EffectName::Te2, 4.0),
    (EffectName::Te2, 6.0),
    (EffectName::Te2, 8.0),
    (EffectName::Te3, 2.0),
    (EffectName::Te3, 4.0),
    (EffectName::Te3, 6.0),
    (EffectName::Te3, 8.0),
];

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub n: usize,
    pub replicates: usize,
    pub bootstrap_n: usize,
    pub seed: u64,
    pub em: EmConfig,
    /// Covariate profile for the conditional effects.
    pub profile: Vec<f64>,
    pub effects: bool,
}

impl StudyConfig {
    pub fn new(n: usize, replicates: usize, bootstrap_n: usize, seed: u64) -> Self {
        Self {
            n,
            replicates,
            bootstrap_n,
            seed,
            em: EmConfig::default(),
            profile: vec![0.5, 0.5],
            effects: true,
        }
    }
}

/// Estimates from one successful replicate. Effect entries are `None` when
/// the time lies beyond the replicate's estimated support.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub estimate: Vec<f64>,
    pub se: Vec<f64>,
    pub effect: Vec<Option<(f64, f64)>>,
    pub n_iters: usize,
    pub boot_failed: usize,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub config_n: usize,
    pub outcomes: Vec<ReplicateOutcome>,
    pub failures: Vec<(usize, String)>,
    pub truth_params: Vec<f64>,
    pub truth_effects: Vec<f64>,
}

/// One row of a summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub truth: f64,
    pub bias: f64,
    pub se: f64,
    pub see: f64,
    pub cp: f64,
    /// Replicates contributing to the row.
    pub count: usize,
}

/// Seed of the data for replicate `r`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r as u64)
}

fn run_replicate(cfg: &StudyConfig, r: usize) -> Result<ReplicateOutcome> {
    let data_seed = replicate_seed(cfg.seed, r);
    let sim = generate::<f64>(&GenerativeSpec::reference(cfg.n, data_seed))?;
    let base = fit(&sim.data, &cfg.em)?;
    if !base.converged {
        return Err(Error::InvalidInput(format!(
            "fit did not converge in {} iterations",
            cfg.em.max_outer_iters
        )));
    }
    let times: Vec<f64> = {
        let mut t: Vec<f64> = EFFECT_ROWS.iter().map(|r| r.1).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    };
    let mut bcfg = BootstrapConfig::new(cfg.bootstrap_n, data_seed ^ 0xB007);
    if cfg.effects {
        bcfg.effects = Some(EffectRequest {
            grid: times.clone(),
            profiles: vec![cfg.profile.clone()],
            marginal: false,
        });
    }
    let boot = bootstrap(&sim.data, &base, &cfg.em, &bcfg)?;
    let effect = EFFECT_ROWS
        .iter()
        .map(|&(name, t)| {
            if !cfg.effects {
                return None;
            }
            let value = conditional_effect(name, t, &cfg.profile, &base).ok()?;
            let curve = boot.effects.iter().find(|c| c.name == name)?;
            let k = curve.grid.iter().position(|&g| g == t)?;
            Some((value, curve.se.as_ref()?[k]))
        })
        .collect();
    Ok(ReplicateOutcome {
        index: r,
        estimate: base.params.to_vec(),
        se: boot.se,
        effect,
        n_iters: base.n_iters,
        boot_failed: boot.n_failed,
    })
}

/// Runs all replicates; replicates run in parallel on the current rayon
/// pool. Failed replicates are reported, not retried.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    if cfg.replicates < 2 {
        return Err(Error::InvalidInput("a study needs at least two replicates".into()));
    }
    let spec = GenerativeSpec::reference(cfg.n, cfg.seed);
    spec.validate()?;
    if cfg.profile.len() != spec.params.p() {
        return Err(Error::InvalidInput("effect profile must have two entries".into()));
    }
    let results: Vec<Result<ReplicateOutcome>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r))
        .collect();
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    let mut truth_effects = Vec::with_capacity(EFFECT_ROWS.len());
    for &(name, t) in &EFFECT_ROWS {
        let curves = true_effects(&spec, &[t], &cfg.profile)?;
        let c = curves.iter().find(|c| c.name == name).expect("all conditional effects");
        truth_effects.push(c.values[0]);
    }
    Ok(StudyResult {
        config_n: cfg.n,
        outcomes,
        failures,
        truth_params: spec.params.to_vec(),
        truth_effects,
    })
}

fn summarize(label: String, truth: f64, draws: &[(f64, f64)]) -> SummaryRow {
    let k = draws.len();
    let kf = k as f64;
    let mean = draws.iter().map(|d| d.0).sum::<f64>() / kf;
    let se = if k > 1 {
        (draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (kf - 1.0)).sqrt()
    } else {
        f64::NAN
    };
    let see = draws.iter().map(|d| d.1).sum::<f64>() / kf;
    let covered = draws.iter().filter(|(est, s)| (est - truth).abs() <= Z95 * s).count();
    SummaryRow {
        label,
        truth,
        bias: mean - truth,
        se,
        see,
        cp: covered as f64 / kf,
        count: k,
    }
}

/// Bias, empirical SE, mean bootstrap SE and Wald coverage per parameter.
pub fn parameter_table(res: &StudyResult) -> Vec<SummaryRow> {
    let names = ParameterSet::<f64>::names(2);
    names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let draws: Vec<(f64, f64)> = res.outcomes.iter().map(|o| (o.estimate[k], o.se[k])).collect();
            summarize(name, res.truth_params[k], &draws)
        })
        .collect()
}

/// The same summaries for the effect rows, each averaged over the
/// replicates whose estimated support reaches the row's time.
pub fn effect_table(res: &StudyResult) -> Vec<SummaryRow> {
    EFFECT_ROWS
        .iter()
        .enumerate()
        .map(|(k, &(name, t))| {
            let draws: Vec<(f64, f64)> = res
                .outcomes
                .iter()
                .filter_map(|o| o.effect[k])
                .filter(|d| d.1.is_finite())
                .collect();
            summarize(format!("{}@{}", name.as_str(), t), res.truth_effects[k], &draws)
        })
        .collect()
}
