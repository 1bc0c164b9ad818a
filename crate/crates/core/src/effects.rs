//! Plug-in estimators of the stratum-specific natural indirect/direct
//! effects (stratum 1), total effects (strata 2 and 3) and the
//! membership-weighted marginal indirect/direct effects.
//!
//! All conditional effects are jump sums over the fitted step-function
//! hazards; `x` is the covariate profile without treatment or intercept.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_weights_unchecked, Dataset, FittedModel, Hazards, ParameterSet};
use crate::scalar::{compensated_sum, dot, exp_lp, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectName {
    #[serde(rename = "NIE1")]
    Nie1,
    #[serde(rename = "NDE1")]
    Nde1,
    #[serde(rename = "TE1")]
    Te1,
    #[serde(rename = "TE2")]
    Te2,
    #[serde(rename = "TE3")]
    Te3,
    #[serde(rename = "NIE1_marginal")]
    Nie1Marginal,
    #[serde(rename = "NDE1_marginal")]
    Nde1Marginal,
}

impl EffectName {
    pub const CONDITIONAL: [EffectName; 5] = [
        EffectName::Nie1,
        EffectName::Nde1,
        EffectName::Te1,
        EffectName::Te2,
        EffectName::Te3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EffectName::Nie1 => "NIE1",
            EffectName::Nde1 => "NDE1",
            EffectName::Te1 => "TE1",
            EffectName::Te2 => "TE2",
            EffectName::Te3 => "TE3",
            EffectName::Nie1Marginal => "NIE1_marginal",
            EffectName::Nde1Marginal => "NDE1_marginal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            EffectName::Nie1,
            EffectName::Nde1,
            EffectName::Te1,
            EffectName::Te2,
            EffectName::Te3,
            EffectName::Nie1Marginal,
            EffectName::Nde1Marginal,
        ]
        .into_iter()
        .find(|e| e.as_str() == s)
    }

    pub fn is_marginal(self) -> bool {
        matches!(self, EffectName::Nie1Marginal | EffectName::Nde1Marginal)
    }

    /// Largest time at which this effect is defined for the given hazards.
    pub fn support_limit<T: Scalar>(self, h: &Hazards<T>) -> T {
        match self {
            EffectName::Te2 => h.joint_limit(),
            EffectName::Te3 => h.direct.tau(),
            _ => h.illness_path_limit(),
        }
    }
}

/// A named effect on a time grid, with optional bootstrap bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EffectCurve<T> {
    pub name: EffectName,
    pub grid: Vec<T>,
    pub values: Vec<T>,
    /// Covariate profile; `None` for marginal curves.
    pub profile: Option<Vec<T>>,
    pub se: Option<Vec<T>>,
    pub ci_low: Option<Vec<T>>,
    pub ci_high: Option<Vec<T>>,
}

impl<T: Scalar> EffectCurve<T> {
    pub fn new(name: EffectName, grid: Vec<T>, values: Vec<T>, profile: Option<Vec<T>>) -> Self {
        Self {
            name,
            grid,
            values,
            profile,
            se: None,
            ci_low: None,
            ci_high: None,
        }
    }
}

/// Hazard multipliers `exp(lp)` at a covariate profile.
struct Multipliers<T> {
    m1_treated: T,
    m1_control: T,
    r1_treated: T,
    r1_control: T,
    m2: T,
    r2: T,
    t2: T,
    t3_treated: T,
    t3_control: T,
}

impl<T: Scalar> Multipliers<T> {
    fn new(pm: &ParameterSet<T>, x: &[T]) -> Self {
        let gamma = |eta: &[T]| dot(&eta[1..], x);
        let (gm1, gr1, gt3) = (gamma(&pm.eta_m1), gamma(&pm.eta_r1), gamma(&pm.eta_t3));
        Self {
            m1_treated: exp_lp(pm.eta_m1[0] + gm1),
            m1_control: exp_lp(gm1),
            r1_treated: exp_lp(pm.eta_r1[0] + gr1),
            r1_control: exp_lp(gr1),
            m2: exp_lp(ParameterSet::lp_intercept(&pm.eta_m2, x)),
            r2: exp_lp(ParameterSet::lp_intercept(&pm.eta_r2, x)),
            t2: exp_lp(ParameterSet::lp_intercept(&pm.eta_t2, x)),
            t3_treated: exp_lp(pm.eta_t3[0] + gt3),
            t3_control: exp_lp(gt3),
        }
    }
}

fn check_profile<T: Scalar>(fit: &FittedModel<T>, x: &[T]) -> Result<()> {
    if x.len() != fit.params.p() {
        return Err(Error::InvalidInput(format!(
            "covariate profile has length {}, expected {}",
            x.len(),
            fit.params.p()
        )));
    }
    Ok(())
}

fn check_time<T: Scalar>(t: T, limit: T) -> Result<()> {
    if t < T::zero() || t.is_nan() {
        return Err(Error::InvalidInput(format!("effect requested at t = {t}")));
    }
    if t > limit {
        return Err(Error::OutOfSupport {
            t: t.as_f64(),
            limit: limit.as_f64(),
        });
    }
    Ok(())
}

fn nie1_at<T: Scalar>(h: &Hazards<T>, t: T, e: &Multipliers<T>) -> T {
    let il = &h.illness;
    let k = il.count_upto(t);
    let mut acc = T::zero();
    for j in 0..k {
        let cum = il.cumulative()[j];
        let surv_r = (-h.gap.eval(t - il.jump_times()[j]) * e.r1_treated).exp();
        let diff = e.m1_treated * (-cum * e.m1_treated).exp() - e.m1_control * (-cum * e.m1_control).exp();
        acc += surv_r * il.jump_sizes()[j] * diff;
    }
    let cum_t = il.eval(t);
    acc + (-cum_t * e.m1_treated).exp() - (-cum_t * e.m1_control).exp()
}

fn nde1_at<T: Scalar>(h: &Hazards<T>, t: T, e: &Multipliers<T>) -> T {
    let il = &h.illness;
    let k = il.count_upto(t);
    let mut acc = T::zero();
    for j in 0..k {
        let g = h.gap.eval(t - il.jump_times()[j]);
        let bracket = (-g * e.r1_treated).exp() - (-g * e.r1_control).exp();
        acc += bracket * il.jump_sizes()[j] * e.m1_control * (-il.cumulative()[j] * e.m1_control).exp();
    }
    acc
}

fn te2_at<T: Scalar>(h: &Hazards<T>, t: T, e: &Multipliers<T>) -> T {
    let il = &h.illness;
    let k = il.count_upto(t);
    let mut acc = T::zero();
    for j in 0..k {
        let g = h.gap.eval(t - il.jump_times()[j]);
        acc += il.jump_sizes()[j] * e.m2 * (-il.cumulative()[j] * e.m2).exp() * (T::one() - (-g * e.r2).exp());
    }
    (-h.direct.eval(t) * e.t2).exp() - T::one() + acc
}

fn te3_at<T: Scalar>(h: &Hazards<T>, t: T, e: &Multipliers<T>) -> T {
    let c = h.direct.eval(t);
    (-c * e.t3_treated).exp() - (-c * e.t3_control).exp()
}

/// Natural indirect effect in stratum 1 at time `t` and profile `x`.
pub fn nie1<T: Scalar>(t: T, x: &[T], fit: &FittedModel<T>) -> Result<T> {
    check_profile(fit, x)?;
    check_time(t, fit.hazards.illness_path_limit())?;
    Ok(nie1_at(&fit.hazards, t, &Multipliers::new(&fit.params, x)))
}

/// Natural direct effect in stratum 1.
pub fn nde1<T: Scalar>(t: T, x: &[T], fit: &FittedModel<T>) -> Result<T> {
    check_profile(fit, x)?;
    check_time(t, fit.hazards.illness_path_limit())?;
    Ok(nde1_at(&fit.hazards, t, &Multipliers::new(&fit.params, x)))
}

/// Total effect in stratum 2.
pub fn te2<T: Scalar>(t: T, x: &[T], fit: &FittedModel<T>) -> Result<T> {
    check_profile(fit, x)?;
    check_time(t, fit.hazards.joint_limit())?;
    Ok(te2_at(&fit.hazards, t, &Multipliers::new(&fit.params, x)))
}

/// Total effect in stratum 3.
pub fn te3<T: Scalar>(t: T, x: &[T], fit: &FittedModel<T>) -> Result<T> {
    check_profile(fit, x)?;
    check_time(t, fit.hazards.direct.tau())?;
    Ok(te3_at(&fit.hazards, t, &Multipliers::new(&fit.params, x)))
}

/// Evaluates one conditional effect.
pub fn conditional_effect<T: Scalar>(name: EffectName, t: T, x: &[T], fit: &FittedModel<T>) -> Result<T> {
    match name {
        EffectName::Nie1 => nie1(t, x, fit),
        EffectName::Nde1 => nde1(t, x, fit),
        EffectName::Te1 => Ok(nie1(t, x, fit)? + nde1(t, x, fit)?),
        EffectName::Te2 => te2(t, x, fit),
        EffectName::Te3 => te3(t, x, fit),
        EffectName::Nie1Marginal | EffectName::Nde1Marginal => Err(Error::InvalidInput(format!(
            "{} is not a conditional effect",
            name.as_str()
        ))),
    }
}

/// Membership-weighted averages of NIE₁ and NDE₁ over the subjects in `data`.
pub fn marginal_effects<T: Scalar>(t: T, fit: &FittedModel<T>, data: &Dataset<T>) -> Result<(T, T)> {
    let mut out = marginal_curves(&[t], fit, data)?;
    let nde = out.pop().expect("two curves").values[0];
    let nie = out.pop().expect("two curves").values[0];
    Ok((nie, nde))
}

/// Marginal NIE₁ and NDE₁ on a grid. Every grid point must lie within the
/// illness-path support.
pub fn marginal_curves<T: Scalar>(grid: &[T], fit: &FittedModel<T>, data: &Dataset<T>) -> Result<Vec<EffectCurve<T>>> {
    if data.is_empty() {
        return Err(Error::InvalidInput("marginal effects need at least one subject".into()));
    }
    if data.p() != fit.params.p() {
        return Err(Error::InvalidInput("data and fit differ in covariate dimension".into()));
    }
    let limit = fit.hazards.illness_path_limit();
    for &t in grid {
        check_time(t, limit)?;
    }
    let pm = &fit.params;
    let subjects: Vec<(T, Multipliers<T>)> = data
        .records()
        .iter()
        .map(|r| {
            let w1 = log_weights_unchecked(&r.x, &pm.alpha1, &pm.alpha2)[0].exp();
            (w1, Multipliers::new(pm, &r.x))
        })
        .collect();
    let denom = compensated_sum(subjects.iter().map(|s| s.0));
    if !(denom > T::min_positive_value()) {
        return Err(Error::DegenerateStratum);
    }
    let mut nie = Vec::with_capacity(grid.len());
    let mut nde = Vec::with_capacity(grid.len());
    for &t in grid {
        nie.push(compensated_sum(subjects.iter().map(|(w, e)| *w * nie1_at(&fit.hazards, t, e))) / denom);
        nde.push(compensated_sum(subjects.iter().map(|(w, e)| *w * nde1_at(&fit.hazards, t, e))) / denom);
    }
    Ok(vec![
        EffectCurve::new(EffectName::Nie1Marginal, grid.to_vec(), nie, None),
        EffectCurve::new(EffectName::Nde1Marginal, grid.to_vec(), nde, None),
    ])
}

/// The conditional curves at one profile. Grid points beyond an effect's
/// support are dropped from that effect's curve.
pub fn conditional_curves<T: Scalar>(grid: &[T], x: &[T], fit: &FittedModel<T>) -> Result<Vec<EffectCurve<T>>> {
    check_profile(fit, x)?;
    let e = Multipliers::new(&fit.params, x);
    let h = &fit.hazards;
    let mut out = Vec::new();
    for name in EffectName::CONDITIONAL {
        let limit = name.support_limit(h);
        let kept: Vec<T> = grid.iter().copied().filter(|&t| t >= T::zero() && t <= limit).collect();
        let values = kept
            .iter()
            .map(|&t| match name {
                EffectName::Nie1 => nie1_at(h, t, &e),
                EffectName::Nde1 => nde1_at(h, t, &e),
                EffectName::Te1 => nie1_at(h, t, &e) + nde1_at(h, t, &e),
                EffectName::Te2 => te2_at(h, t, &e),
                _ => te3_at(h, t, &e),
            })
            .collect();
        out.push(EffectCurve::new(name, kept, values, Some(x.to_vec())));
    }
    Ok(out)
}

/// `npts` equally spaced points from 0 to the 95th percentile of observed
/// follow-up times.
pub fn default_grid<T: Scalar>(data: &Dataset<T>, npts: usize) -> Vec<T> {
    let mut ys: Vec<T> = data.records().iter().map(|r| r.y).collect();
    if ys.is_empty() || npts == 0 {
        return Vec::new();
    }
    ys.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let upper = quantile_sorted(&ys, T::lit(0.95));
    if npts == 1 {
        return vec![T::zero()];
    }
    let step = upper / T::from_usize(npts - 1).unwrap();
    (0..npts).map(|i| step * T::from_usize(i).unwrap()).collect()
}

/// Linear-interpolation quantile of sorted values.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * T::from_usize(n - 1).unwrap();
    let lo = pos.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = pos - T::from_usize(lo).unwrap();
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
