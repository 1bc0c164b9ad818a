//! Domain types and the elementary model quantities: multinomial-logistic
//! stratum weights, step-function cumulative hazards and stratum-specific
//! survival curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, exp_lp, Scalar};

/// One observed subject: treatment, intermediate-event time `z`, follow-up
/// time `y`, their event indicators and a fixed-length covariate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord<T> {
    pub id: String,
    pub treated: bool,
    pub z: T,
    pub delta_m: bool,
    pub y: T,
    pub delta_t: bool,
    pub x: Vec<T>,
}

impl<T: Scalar> SubjectRecord<T> {
    /// Builds a record and checks its ordering invariants.
    pub fn new(
        id: impl Into<String>,
        treated: bool,
        z: T,
        delta_m: bool,
        y: T,
        delta_t: bool,
        x: Vec<T>,
    ) -> Result<Self> {
        let rec = Self {
            id: id.into(),
            treated,
            z,
            delta_m,
            y,
            delta_t,
            x,
        };
        rec.check().map_err(Error::InvalidInput)?;
        Ok(rec)
    }

    /// Gap time `y - z`.
    #[inline]
    pub fn gap(&self) -> T {
        self.y - self.z
    }

    /// Returns a description of the first violated invariant, if any.
    pub fn check(&self) -> std::result::Result<(), String> {
        if !self.z.is_finite() || !self.y.is_finite() {
            return Err("times must be finite".into());
        }
        if self.z < T::zero() || self.y < T::zero() {
            return Err("times must be non-negative".into());
        }
        if self.z > self.y {
            return Err(format!("z = {} exceeds y = {}", self.z, self.y));
        }
        if !self.delta_m && self.z != self.y {
            return Err("delta_m = 0 requires z = y".into());
        }
        if self.delta_m && self.y - self.z <= T::zero() {
            return Err("delta_m = 1 requires a strictly positive gap time y - z".into());
        }
        if self.delta_m && self.z <= T::zero() {
            return Err("intermediate event time must be positive".into());
        }
        if self.delta_t && self.y <= T::zero() {
            return Err("terminal event time must be positive".into());
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err("covariates must be finite".into());
        }
        Ok(())
    }
}

/// A validated collection of subjects sharing one covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    records: Vec<SubjectRecord<T>>,
    p: usize,
}

impl<T: Scalar> Dataset<T> {
    /// Validates every record. Row numbers in errors are 1-based.
    pub fn new(records: Vec<SubjectRecord<T>>) -> Result<Self> {
        let p = records.first().map_or(0, |r| r.x.len());
        for (i, r) in records.iter().enumerate() {
            if r.x.len() != p {
                return Err(Error::Validation {
                    row: i + 1,
                    message: format!("expected {p} covariates, found {}", r.x.len()),
                });
            }
            r.check().map_err(|message| Error::Validation { row: i + 1, message })?;
        }
        Ok(Self { records, p })
    }

    /// Empty dataset with a declared covariate dimension.
    pub fn empty(p: usize) -> Self {
        Self { records: Vec::new(), p }
    }

    pub fn records(&self) -> &[SubjectRecord<T>] {
        &self.records
    }

    pub fn into_records(self) -> Vec<SubjectRecord<T>> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Covariate dimension.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Copy of the data with treatment labels flipped.
    pub fn with_swapped_treatment(&self) -> Self {
        let records = self
            .records
            .iter()
            .map(|r| SubjectRecord {
                treated: !r.treated,
                ..r.clone()
            })
            .collect();
        Self { records, p: self.p }
    }

    /// Subset by index; indices may repeat (bootstrap resampling).
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            p: self.p,
        }
    }
}

/// All regression coefficients.
///
/// `eta_m1`, `eta_r1` and `eta_t3` are indexed `(β, γ₁..γ_p)` and act on
/// `(a, x)`. `eta_m2`, `eta_r2`, `eta_t2`, `alpha1` and `alpha2` are indexed
/// `(intercept, γ₁..γ_p)` and act on `(1, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ParameterSet<T> {
    pub eta_m1: Vec<T>,
    pub eta_r1: Vec<T>,
    pub eta_m2: Vec<T>,
    pub eta_r2: Vec<T>,
    pub eta_t2: Vec<T>,
    pub eta_t3: Vec<T>,
    pub alpha1: Vec<T>,
    pub alpha2: Vec<T>,
}

/// Block names in storage order.
pub const BLOCK_NAMES: [&str; 8] = ["M1", "R1", "M2", "R2", "T2", "T3", "alpha1", "alpha2"];

impl<T: Scalar> ParameterSet<T> {
    pub fn zeros(p: usize) -> Self {
        let z = vec![T::zero(); p + 1];
        Self {
            eta_m1: z.clone(),
            eta_r1: z.clone(),
            eta_m2: z.clone(),
            eta_r2: z.clone(),
            eta_t2: z.clone(),
            eta_t3: z.clone(),
            alpha1: z.clone(),
            alpha2: z,
        }
    }

    /// Covariate dimension implied by the block length.
    pub fn p(&self) -> usize {
        self.eta_m1.len().saturating_sub(1)
    }

    pub fn blocks(&self) -> [&Vec<T>; 8] {
        [
            &self.eta_m1,
            &self.eta_r1,
            &self.eta_m2,
            &self.eta_r2,
            &self.eta_t2,
            &self.eta_t3,
            &self.alpha1,
            &self.alpha2,
        ]
    }

    /// Flattened vector of length `8(p+1)` in [`BLOCK_NAMES`] order.
    pub fn to_vec(&self) -> Vec<T> {
        self.blocks().iter().flat_map(|b| b.iter().copied()).collect()
    }

    pub fn from_slice(p: usize, v: &[T]) -> Result<Self> {
        let k = p + 1;
        if v.len() != 8 * k {
            return Err(Error::InvalidInput(format!(
                "parameter vector has length {}, expected {}",
                v.len(),
                8 * k
            )));
        }
        let b = |i: usize| v[i * k..(i + 1) * k].to_vec();
        let out = Self {
            eta_m1: b(0),
            eta_r1: b(1),
            eta_m2: b(2),
            eta_r2: b(3),
            eta_t2: b(4),
            eta_t3: b(5),
            alpha1: b(6),
            alpha2: b(7),
        };
        out.validate()?;
        Ok(out)
    }

    /// Checks block lengths agree and every entry is finite.
    pub fn validate(&self) -> Result<()> {
        let k = self.eta_m1.len();
        if k == 0 {
            return Err(Error::InvalidInput("empty parameter block".into()));
        }
        for (name, b) in BLOCK_NAMES.iter().zip(self.blocks()) {
            if b.len() != k {
                return Err(Error::InvalidInput(format!(
                    "block {name} has length {}, expected {k}",
                    b.len()
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("block {name} has non-finite entries")));
            }
        }
        Ok(())
    }

    /// Human-readable names for every entry of [`Self::to_vec`].
    pub fn names(p: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(8 * (p + 1));
        for block in ["M1", "R1"] {
            out.push(format!("beta_{block}"));
            out.extend((1..=p).map(|j| format!("gamma_{block}[{j}]")));
        }
        for block in ["M2", "R2", "T2"] {
            out.push(format!("beta_{block}"));
            out.extend((1..=p).map(|j| format!("gamma_{block}[{j}]")));
        }
        out.push("beta_T3".into());
        out.extend((1..=p).map(|j| format!("gamma_T3[{j}]")));
        for block in ["alpha1", "alpha2"] {
            out.extend((0..=p).map(|j| format!("{block}[{j}]")));
        }
        out
    }

    /// `β·a + γᵀx` for the treatment-coded blocks.
    #[inline]
    pub fn lp_treat(eta: &[T], treated: bool, x: &[T]) -> T {
        let b = if treated { eta[0] } else { T::zero() };
        b + dot(&eta[1..], x)
    }

    /// `η₀ + γᵀx` for the intercept-coded blocks.
    #[inline]
    pub fn lp_intercept(eta: &[T], x: &[T]) -> T {
        eta[0] + dot(&eta[1..], x)
    }
}

/// Which cumulative hazard a step function estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardScale {
    /// Λ₁: healthy → illness, on the intermediate-event time scale.
    Illness,
    /// Λ₂: illness → death, on the gap-time scale.
    Gap,
    /// Λ₃: healthy → death without the intermediate event.
    Direct,
}

impl HazardScale {
    pub const ALL: [HazardScale; 3] = [HazardScale::Illness, HazardScale::Gap, HazardScale::Direct];

    pub fn as_str(self) -> &'static str {
        match self {
            HazardScale::Illness => "illness",
            HazardScale::Gap => "gap",
            HazardScale::Direct => "direct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.as_str() == s)
    }
}

/// Nondecreasing right-continuous step function `Λ(t) = Σ_{t_l ≤ t} λ_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineHazard<T> {
    scale: HazardScale,
    jump_times: Vec<T>,
    jump_sizes: Vec<T>,
    cumulative: Vec<T>,
}

impl<T: Scalar> BaselineHazard<T> {
    /// Requires strictly increasing positive times and positive sizes.
    pub fn new(scale: HazardScale, jump_times: Vec<T>, jump_sizes: Vec<T>) -> Result<Self> {
        if jump_times.len() != jump_sizes.len() {
            return Err(Error::InvalidInput(format!(
                "{} hazard: {} jump times but {} jump sizes",
                scale.as_str(),
                jump_times.len(),
                jump_sizes.len()
            )));
        }
        let mut prev = T::zero();
        for (&t, &s) in jump_times.iter().zip(&jump_sizes) {
            if !(t > prev) || !t.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{} hazard: jump times must be positive and strictly increasing",
                    scale.as_str()
                )));
            }
            if !(s > T::zero()) || !s.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{} hazard: jump sizes must be positive and finite",
                    scale.as_str()
                )));
            }
            prev = t;
        }
        let mut acc = T::zero();
        let cumulative = jump_sizes
            .iter()
            .map(|&s| {
                acc += s;
                acc
            })
            .collect();
        Ok(Self {
            scale,
            jump_times,
            jump_sizes,
            cumulative,
        })
    }

    pub fn empty(scale: HazardScale) -> Self {
        Self {
            scale,
            jump_times: Vec::new(),
            jump_sizes: Vec::new(),
            cumulative: Vec::new(),
        }
    }

    pub fn scale(&self) -> HazardScale {
        self.scale
    }

    pub fn jump_times(&self) -> &[T] {
        &self.jump_times
    }

    pub fn jump_sizes(&self) -> &[T] {
        &self.jump_sizes
    }

    /// Running sums `Λ(t_l)` at each jump.
    pub fn cumulative(&self) -> &[T] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.jump_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jump_times.is_empty()
    }

    /// Support limit: the last jump time, or zero when there are no jumps.
    pub fn tau(&self) -> T {
        self.jump_times.last().copied().unwrap_or_else(T::zero)
    }

    /// Number of jumps at or before `t`.
    #[inline]
    pub fn count_upto(&self, t: T) -> usize {
        self.jump_times.partition_point(|&s| s <= t)
    }

    /// `Λ(t)` without argument checks. Negative `t` yields zero.
    #[inline]
    pub fn eval(&self, t: T) -> T {
        match self.count_upto(t) {
            0 => T::zero(),
            k => self.cumulative[k - 1],
        }
    }
}

/// `Λ(t)`; right-continuous, so a jump at exactly `t` is included.
pub fn cumhaz<T: Scalar>(h: &BaselineHazard<T>, t: T) -> Result<T> {
    if t < T::zero() || t.is_nan() {
        return Err(Error::InvalidInput(format!("cumulative hazard requested at t = {t}")));
    }
    Ok(h.eval(t))
}

/// The three baseline hazards of a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct Hazards<T> {
    pub illness: BaselineHazard<T>,
    pub gap: BaselineHazard<T>,
    pub direct: BaselineHazard<T>,
}

impl<T: Scalar> Hazards<T> {
    pub fn get(&self, scale: HazardScale) -> &BaselineHazard<T> {
        match scale {
            HazardScale::Illness => &self.illness,
            HazardScale::Gap => &self.gap,
            HazardScale::Direct => &self.direct,
        }
    }

    /// Largest `t` at which illness-path quantities are defined.
    pub fn illness_path_limit(&self) -> T {
        self.illness.tau().min(self.gap.tau())
    }

    /// Largest `t` at which every curve is defined.
    pub fn joint_limit(&self) -> T {
        self.illness_path_limit().min(self.direct.tau())
    }
}

/// Latent principal stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stratum {
    /// U = 1: intermediate event possible under both arms.
    AlwaysSusceptible = 1,
    /// U = 2: intermediate event possible under control only.
    Prevented = 2,
    /// U = 3: intermediate event impossible under both arms.
    NeverSusceptible = 3,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [
        Stratum::AlwaysSusceptible,
        Stratum::Prevented,
        Stratum::NeverSusceptible,
    ];

    pub fn index(self) -> usize {
        self as usize - 1
    }
}

impl TryFrom<u8> for Stratum {
    type Error = Error;

    fn try_from(u: u8) -> Result<Self> {
        match u {
            1 => Ok(Stratum::AlwaysSusceptible),
            2 => Ok(Stratum::Prevented),
            3 => Ok(Stratum::NeverSusceptible),
            other => Err(Error::UnknownStratum(other)),
        }
    }
}

/// Per-subject posterior stratum probabilities from the E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix<T> {
    pub rows: Vec<[T; 3]>,
}

impl<T: Scalar> PosteriorMatrix<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column sums.
    pub fn totals(&self) -> [T; 3] {
        let mut t = [T::zero(); 3];
        for r in &self.rows {
            for k in 0..3 {
                t[k] += r[k];
            }
        }
        t
    }
}

/// Output of the EM fit.
#[derive(Debug, Clone)]
pub struct FittedModel<T> {
    pub params: ParameterSet<T>,
    pub hazards: Hazards<T>,
    pub posteriors: PosteriorMatrix<T>,
    /// Observed-data log-likelihood at the start of every iteration plus the
    /// value at the returned parameters.
    pub loglik_trace: Vec<T>,
    pub converged: bool,
    pub n_iters: usize,
    /// Count of linear predictors clamped before exponentiation.
    pub clamp_events: usize,
    pub warnings: Vec<String>,
}

impl<T: Scalar> FittedModel<T> {
    pub fn loglik(&self) -> T {
        self.loglik_trace.last().copied().unwrap_or_else(T::nan)
    }
}

/// Log of the multinomial-logistic weights, computed with a max shift.
pub fn log_stratum_weights<T: Scalar>(x: &[T], alpha1: &[T], alpha2: &[T]) -> Result<[T; 3]> {
    if alpha1.len() != x.len() + 1 || alpha2.len() != x.len() + 1 {
        return Err(Error::InvalidInput(format!(
            "membership coefficients have lengths {} and {}, expected {}",
            alpha1.len(),
            alpha2.len(),
            x.len() + 1
        )));
    }
    Ok(log_weights_unchecked(x, alpha1, alpha2))
}

#[inline]
pub(crate) fn log_weights_unchecked<T: Scalar>(x: &[T], alpha1: &[T], alpha2: &[T]) -> [T; 3] {
    let l1 = ParameterSet::lp_intercept(alpha1, x);
    let l2 = ParameterSet::lp_intercept(alpha2, x);
    let m = l1.max(l2).max(T::zero());
    let log_den = m + ((l1 - m).exp() + (l2 - m).exp() + (-m).exp()).ln();
    [l1 - log_den, l2 - log_den, -log_den]
}

/// `(w₁, w₂, w₃)` for covariates `x` under the membership model.
pub fn stratum_weights<T: Scalar>(x: &[T], alpha1: &[T], alpha2: &[T]) -> Result<[T; 3]> {
    let lw = log_stratum_weights(x, alpha1, alpha2)?;
    Ok([lw[0].exp(), lw[1].exp(), lw[2].exp()])
}

/// `P(M + R ≥ t)` for the illness path with hazard multipliers `em` (Λ₁) and
/// `er` (Λ₂).
pub(crate) fn illness_path_survival<T: Scalar>(h: &Hazards<T>, t: T, em: T, er: T) -> T {
    let il = &h.illness;
    let k = il.count_upto(t);
    let mut acc = (-il.eval(t) * em).exp();
    for j in 0..k {
        let tj = il.jump_times[j];
        let dens = il.jump_sizes[j] * em * (-il.cumulative[j] * em).exp();
        acc += dens * (-h.gap.eval(t - tj) * er).exp();
    }
    acc
}

/// Survival `P(T ≥ t | X = x, A = a, U = u)` under the fitted model.
///
/// Strata routed through the illness path are evaluated on
/// `[0, min(τ₁, τ₂)]`; direct-death strata on `[0, τ₃]`.
pub fn stratum_survival<T: Scalar>(t: T, x: &[T], treated: bool, u: Stratum, fit: &FittedModel<T>) -> Result<T> {
    let pm = &fit.params;
    if x.len() != pm.p() {
        return Err(Error::InvalidInput(format!(
            "covariate profile has length {}, expected {}",
            x.len(),
            pm.p()
        )));
    }
    if t < T::zero() || t.is_nan() {
        return Err(Error::InvalidInput(format!("survival requested at t = {t}")));
    }
    let h = &fit.hazards;
    let illness_path = matches!(
        (u, treated),
        (Stratum::AlwaysSusceptible, _) | (Stratum::Prevented, false)
    );
    let limit = if illness_path {
        h.illness_path_limit()
    } else {
        h.direct.tau()
    };
    if t > limit {
        return Err(Error::OutOfSupport {
            t: t.as_f64(),
            limit: limit.as_f64(),
        });
    }
    let s = match (u, treated) {
        (Stratum::AlwaysSusceptible, a) => {
            let em = exp_lp(ParameterSet::lp_treat(&pm.eta_m1, a, x));
            let er = exp_lp(ParameterSet::lp_treat(&pm.eta_r1, a, x));
            illness_path_survival(h, t, em, er)
        }
        (Stratum::Prevented, false) => {
            let em = exp_lp(ParameterSet::lp_intercept(&pm.eta_m2, x));
            let er = exp_lp(ParameterSet::lp_intercept(&pm.eta_r2, x));
            illness_path_survival(h, t, em, er)
        }
        (Stratum::Prevented, true) => {
            let e = exp_lp(ParameterSet::lp_intercept(&pm.eta_t2, x));
            (-h.direct.eval(t) * e).exp()
        }
        (Stratum::NeverSusceptible, a) => {
            let e = exp_lp(ParameterSet::lp_treat(&pm.eta_t3, a, x));
            (-h.direct.eval(t) * e).exp()
        }
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hazard(times: &[f64], sizes: &[f64]) -> BaselineHazard<f64> {
        BaselineHazard::new(HazardScale::Illness, times.to_vec(), sizes.to_vec()).unwrap()
    }

    #[test]
    fn weights_symmetric_at_zero() {
        let w = stratum_weights(&[0.3_f64, -2.0], &[0.0; 3], &[0.0; 3]).unwrap();
        for v in w {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_ratio_two_one_one() {
        let w = stratum_weights::<f64>(&[], &[2.0_f64.ln()], &[0.0]).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15);
        assert!((w[1] - 0.25).abs() < 1e-15);
        assert!((w[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn weights_dimension_mismatch() {
        assert!(matches!(
            stratum_weights(&[1.0], &[0.0], &[0.0, 0.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn weights_extreme_predictors_stay_finite() {
        let w = stratum_weights::<f64>(&[], &[700.0], &[-700.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn cumhaz_partial_sums_and_right_continuity() {
        let h = hazard(&[1.0, 2.0], &[0.5, 0.25]);
        assert_eq!(cumhaz(&h, 0.5).unwrap(), 0.0);
        assert_eq!(cumhaz(&h, 1.5).unwrap(), 0.5);
        assert_eq!(cumhaz(&h, 2.0).unwrap(), 0.75);
        assert_eq!(cumhaz(&h, 1e9).unwrap(), 0.75);
        assert_eq!(
            cumhaz(&BaselineHazard::<f64>::empty(HazardScale::Gap), 3.0).unwrap(),
            0.0
        );
        assert!(cumhaz(&h, -1.0).is_err());
    }

    #[test]
    fn hazard_rejects_bad_jumps() {
        assert!(BaselineHazard::new(HazardScale::Gap, vec![1.0, 1.0], vec![0.1, 0.1]).is_err());
        assert!(BaselineHazard::new(HazardScale::Gap, vec![1.0], vec![0.0]).is_err());
        assert!(BaselineHazard::new(HazardScale::Gap, vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn record_invariants() {
        assert!(SubjectRecord::new("a", true, 2.0, false, 2.0, true, vec![0.0]).is_ok());
        assert!(SubjectRecord::new("b", true, 2.5, false, 2.0, true, vec![0.0]).is_err());
        assert!(SubjectRecord::new("c", true, 1.0, false, 2.0, true, vec![0.0]).is_err());
        assert!(SubjectRecord::new("d", true, 2.0, true, 2.0, true, vec![0.0]).is_err());
        assert!(SubjectRecord::new("e", true, 1.0, true, 2.0, false, vec![f64::NAN]).is_err());
    }

    #[test]
    fn dataset_reports_row() {
        let good = SubjectRecord::new("1", true, 1.0, true, 2.0, true, vec![0.0]).unwrap();
        let mut bad = good.clone();
        bad.z = 3.0;
        let err = Dataset::new(vec![good.clone(), good, bad]).unwrap_err();
        assert!(matches!(err, Error::Validation { row: 3, .. }));
    }

    #[test]
    fn parameter_roundtrip_and_names() {
        let v: Vec<f64> = (0..24).map(f64::from).collect();
        let ps = ParameterSet::from_slice(2, &v).unwrap();
        assert_eq!(ps.to_vec(), v);
        assert_eq!(ps.eta_t3, vec![15.0, 16.0, 17.0]);
        assert_eq!(ParameterSet::<f64>::names(2).len(), 24);
        assert!(ParameterSet::<f64>::from_slice(2, &v[..23]).is_err());
    }

    #[test]
    fn stratum_labels() {
        assert_eq!(Stratum::try_from(2).unwrap(), Stratum::Prevented);
        assert!(matches!(Stratum::try_from(4), Err(Error::UnknownStratum(4))));
    }

    fn toy_fit() -> FittedModel<f64> {
        let h = Hazards {
            illness: BaselineHazard::new(HazardScale::Illness, vec![0.5, 1.0, 2.0], vec![0.2, 0.3, 0.4]).unwrap(),
            gap: BaselineHazard::new(HazardScale::Gap, vec![0.3, 1.5, 2.5], vec![0.1, 0.2, 0.3]).unwrap(),
            direct: BaselineHazard::new(HazardScale::Direct, vec![1.0, 3.0], vec![0.7, 0.2]).unwrap(),
        };
        FittedModel {
            params: ParameterSet::zeros(1),
            hazards: h,
            posteriors: PosteriorMatrix { rows: vec![] },
            loglik_trace: vec![],
            converged: true,
            n_iters: 1,
            clamp_events: 0,
            warnings: vec![],
        }
    }

    #[test]
    fn survival_starts_at_one_and_respects_support() {
        let fit = toy_fit();
        for u in Stratum::ALL {
            for a in [false, true] {
                assert_eq!(stratum_survival(0.0, &[0.4], a, u, &fit).unwrap(), 1.0);
            }
        }
        // illness path limit is min(2.0, 2.5)
        assert!(stratum_survival(2.0, &[0.0], false, Stratum::AlwaysSusceptible, &fit).is_ok());
        assert!(matches!(
            stratum_survival(2.1, &[0.0], false, Stratum::AlwaysSusceptible, &fit),
            Err(Error::OutOfSupport { .. })
        ));
        assert!(stratum_survival(2.9, &[0.0], true, Stratum::Prevented, &fit).is_ok());
    }

    #[test]
    fn direct_stratum_with_zero_coefficients() {
        let fit = toy_fit();
        let s = stratum_survival(1.5, &[3.0], true, Stratum::NeverSusceptible, &fit).unwrap();
        assert!((s - (-0.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn illness_path_survival_nonincreasing() {
        let fit = toy_fit();
        let mut prev = 1.0;
        for i in 0..=200 {
            let t = 2.0 * i as f64 / 200.0;
            let s = stratum_survival(t, &[1.0], true, Stratum::AlwaysSusceptible, &fit).unwrap();
            assert!(s <= prev + 1e-15);
            assert!(s >= 0.0);
            prev = s;
        }
    }
}
