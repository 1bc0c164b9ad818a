//! Observed-data likelihood of the three-stratum mixture, plus the
//! Kaplan–Meier and population-average survival curves used for
//! goodness-of-fit overlays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    log_weights_unchecked, stratum_survival, BaselineHazard, Dataset, FittedModel, Hazards, ParameterSet, Stratum,
    SubjectRecord,
};
use crate::scalar::{clamp_lp, compensated_sum, log_sum_exp, Scalar};

/// Which likelihood component a subject contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContributionKind {
    /// Intermediate event observed (`L₁`).
    Illness,
    /// Terminal event without intermediate event (`L₂`).
    DirectDeath,
    /// Neither event observed (`L₃`).
    Censored,
}

impl ContributionKind {
    pub fn of<T>(r: &SubjectRecord<T>) -> Self {
        match (r.delta_m, r.delta_t) {
            (true, _) => ContributionKind::Illness,
            (false, true) => ContributionKind::DirectDeath,
            (false, false) => ContributionKind::Censored,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LikelihoodBreakdown<T> {
    pub kinds: Vec<ContributionKind>,
    pub log_contrib: Vec<T>,
    pub total: T,
}

/// Hazard quantities one subject's likelihood depends on.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SubjectHazardValues<T> {
    /// `Λ₁{Z}`: jump of Λ₁ at Z (only used when `delta_m`).
    pub jump1: T,
    /// `Λ₁(Z)`.
    pub cum1: T,
    /// `Λ₂{V}` (only used when `delta_m && delta_t`).
    pub jump2: T,
    /// `Λ₂(V)`.
    pub cum2: T,
    /// `Λ₃{Y}` (only used when `!delta_m && delta_t`).
    pub jump3: T,
    /// `Λ₃(Y)`.
    pub cum3: T,
}

fn jump_at<T: Scalar>(h: &BaselineHazard<T>, t: T) -> T {
    let k = h.count_upto(t);
    if k > 0 && h.jump_times()[k - 1] == t {
        h.jump_sizes()[k - 1]
    } else {
        T::zero()
    }
}

impl<T: Scalar> SubjectHazardValues<T> {
    pub fn lookup(r: &SubjectRecord<T>, h: &Hazards<T>) -> Self {
        let v = r.gap();
        Self {
            jump1: if r.delta_m { jump_at(&h.illness, r.z) } else { T::zero() },
            cum1: h.illness.eval(r.z),
            jump2: if r.delta_m && r.delta_t {
                jump_at(&h.gap, v)
            } else {
                T::zero()
            },
            cum2: if r.delta_m { h.gap.eval(v) } else { T::zero() },
            jump3: if !r.delta_m && r.delta_t {
                jump_at(&h.direct, r.y)
            } else {
                T::zero()
            },
            cum3: h.direct.eval(r.y),
        }
    }
}

/// Tracks how many linear predictors were clamped.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct ClampCounter(pub usize);

impl ClampCounter {
    #[inline]
    pub fn exp<T: Scalar>(&mut self, lp: T) -> (T, T) {
        let (c, hit) = clamp_lp(lp);
        if hit {
            self.0 += 1;
        }
        (c, c.exp())
    }
}

/// Log of each stratum's joint term `w_u · P(data | U = u)`; `-inf` where a
/// stratum is incompatible with the observation.
pub(crate) fn subject_log_terms<T: Scalar>(
    r: &SubjectRecord<T>,
    pm: &ParameterSet<T>,
    hv: &SubjectHazardValues<T>,
    clamps: &mut ClampCounter,
) -> [T; 3] {
    let lw = log_weights_unchecked(&r.x, &pm.alpha1, &pm.alpha2);
    let ninf = T::neg_infinity();
    let a = r.treated;
    match (r.delta_m, r.delta_t) {
        (true, dt) => {
            let log_j1 = hv.jump1.ln();
            let log_j2 = if dt { hv.jump2.ln() } else { T::zero() };
            let path = |lp_m: T, lp_r: T, clamps: &mut ClampCounter| {
                let (lm, em) = clamps.exp(lp_m);
                let (lr, er) = clamps.exp(lp_r);
                let mut s = log_j1 + lm - em * hv.cum1 - er * hv.cum2;
                if dt {
                    s += log_j2 + lr;
                }
                s
            };
            let t1 = lw[0]
                + path(
                    ParameterSet::lp_treat(&pm.eta_m1, a, &r.x),
                    ParameterSet::lp_treat(&pm.eta_r1, a, &r.x),
                    clamps,
                );
            let t2 = if a {
                ninf
            } else {
                lw[1]
                    + path(
                        ParameterSet::lp_intercept(&pm.eta_m2, &r.x),
                        ParameterSet::lp_intercept(&pm.eta_r2, &r.x),
                        clamps,
                    )
            };
            [t1, t2, ninf]
        }
        (false, true) => {
            let log_j3 = hv.jump3.ln();
            let direct = |lp: T, clamps: &mut ClampCounter| {
                let (l, e) = clamps.exp(lp);
                log_j3 + l - e * hv.cum3
            };
            let t2 = if a {
                lw[1] + direct(ParameterSet::lp_intercept(&pm.eta_t2, &r.x), clamps)
            } else {
                ninf
            };
            let t3 = lw[2] + direct(ParameterSet::lp_treat(&pm.eta_t3, a, &r.x), clamps);
            [ninf, t2, t3]
        }
        (false, false) => {
            let (_, em1) = clamps.exp(ParameterSet::lp_treat(&pm.eta_m1, a, &r.x));
            let t1 = lw[0] - em1 * hv.cum1;
            let t2 = if a {
                let (_, e) = clamps.exp(ParameterSet::lp_intercept(&pm.eta_t2, &r.x));
                lw[1] - e * hv.cum3
            } else {
                let (_, e) = clamps.exp(ParameterSet::lp_intercept(&pm.eta_m2, &r.x));
                lw[1] - e * hv.cum1
            };
            let (_, e3) = clamps.exp(ParameterSet::lp_treat(&pm.eta_t3, a, &r.x));
            let t3 = lw[2] - e3 * hv.cum3;
            [t1, t2, t3]
        }
    }
}

/// Observed-data log-likelihood, one term per subject.
pub fn observed_loglik<T: Scalar>(
    data: &Dataset<T>,
    params: &ParameterSet<T>,
    hazards: &Hazards<T>,
) -> Result<LikelihoodBreakdown<T>> {
    params.validate()?;
    if params.p() != data.p() {
        return Err(Error::InvalidInput(format!(
            "parameters are for p = {}, data has p = {}",
            params.p(),
            data.p()
        )));
    }
    let mut clamps = ClampCounter::default();
    let mut kinds = Vec::with_capacity(data.len());
    let mut log_contrib = Vec::with_capacity(data.len());
    for r in data.records() {
        let hv = SubjectHazardValues::lookup(r, hazards);
        let terms = subject_log_terms(r, params, &hv, &mut clamps);
        let l = log_sum_exp(&terms);
        if !l.is_finite() {
            return Err(Error::Underflow { id: r.id.clone() });
        }
        kinds.push(ContributionKind::of(r));
        log_contrib.push(l);
    }
    let total = compensated_sum(log_contrib.iter().copied());
    Ok(LikelihoodBreakdown {
        kinds,
        log_contrib,
        total,
    })
}

/// Right-continuous survival step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SurvivalCurve<T> {
    /// Distinct event times.
    pub times: Vec<T>,
    /// Survival just after each event time.
    pub survival: Vec<T>,
}

impl<T: Scalar> SurvivalCurve<T> {
    pub fn eval(&self, t: T) -> T {
        match self.times.partition_point(|&s| s <= t) {
            0 => T::one(),
            k => self.survival[k - 1],
        }
    }
}

/// Product-limit estimator. Deaths at a tied time are processed before
/// censorings at that time.
pub fn kaplan_meier<T: Scalar>(times: &[T], events: &[bool]) -> Result<SurvivalCurve<T>> {
    if times.is_empty() {
        return Err(Error::InvalidInput(
            "Kaplan-Meier needs at least one observation".into(),
        ));
    }
    if times.len() != events.len() {
        return Err(Error::InvalidInput("times and events differ in length".into()));
    }
    if times.iter().any(|t| !(*t > T::zero()) || !t.is_finite()) {
        return Err(Error::InvalidInput("Kaplan-Meier times must be positive".into()));
    }
    let mut idx: Vec<usize> = (0..times.len()).collect();
    idx.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).expect("finite"));
    let mut at_risk = times.len();
    let mut s = T::one();
    let mut out = SurvivalCurve {
        times: Vec::new(),
        survival: Vec::new(),
    };
    let mut i = 0;
    while i < idx.len() {
        let t = times[idx[i]];
        let mut j = i;
        let mut deaths = 0usize;
        while j < idx.len() && times[idx[j]] == t {
            if events[idx[j]] {
                deaths += 1;
            }
            j += 1;
        }
        if deaths > 0 {
            s *= T::one() - T::from_usize(deaths).unwrap() / T::from_usize(at_risk).unwrap();
            out.times.push(t);
            out.survival.push(s);
        }
        at_risk -= j - i;
        i = j;
    }
    Ok(out)
}

/// Arm-level model-based survival on a grid.
#[derive(Debug, Clone)]
pub struct ArmSurvival<T> {
    pub treated: bool,
    pub grid: Vec<T>,
    pub values: Vec<T>,
    /// True when grid points beyond the joint hazard support were dropped.
    pub truncated: bool,
}

/// Average over subjects in the arm of `Σ_u w_u(xᵢ; α̂) S_u(t | xᵢ, arm)`.
pub fn population_average_survival<T: Scalar>(
    fit: &FittedModel<T>,
    data: &Dataset<T>,
    treated: bool,
    grid: &[T],
) -> Result<ArmSurvival<T>> {
    let members: Vec<&SubjectRecord<T>> = data.records().iter().filter(|r| r.treated == treated).collect();
    if members.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no subjects in arm a = {}",
            u8::from(treated)
        )));
    }
    let limit = fit.hazards.joint_limit();
    let kept: Vec<T> = grid.iter().copied().filter(|&t| t <= limit).collect();
    let truncated = kept.len() < grid.len();
    let pm = &fit.params;
    let weights: Vec<[T; 3]> = members
        .iter()
        .map(|r| {
            let lw = log_weights_unchecked(&r.x, &pm.alpha1, &pm.alpha2);
            [lw[0].exp(), lw[1].exp(), lw[2].exp()]
        })
        .collect();
    let n = T::from_usize(members.len()).unwrap();
    let mut values = Vec::with_capacity(kept.len());
    for &t in &kept {
        let mut acc = Vec::with_capacity(members.len());
        for (r, w) in members.iter().zip(&weights) {
            let mut s = T::zero();
            for u in Stratum::ALL {
                s += w[u.index()] * stratum_survival(t, &r.x, treated, u, fit)?;
            }
            acc.push(s);
        }
        values.push(compensated_sum(acc) / n);
    }
    Ok(ArmSurvival {
        treated,
        grid: kept,
        values,
        truncated,
    })
}
