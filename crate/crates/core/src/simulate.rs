//! Synthetic data from the three-stratum mixture by inverse-CDF sampling,
//! and quadrature ground truth for the effect estimands.
//!
//! Every random draw comes from a ChaCha8 stream keyed by
//! `(seed, subject index, variable role)`, so draws for one variable do not
//! move when another variable or column is added.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::effects::{EffectCurve, EffectName};
use crate::error::{Error, Result};
use crate::model::{stratum_weights, Dataset, ParameterSet, Stratum, SubjectRecord};
use crate::scalar::Scalar;

/// Smooth cumulative baseline hazard with an analytic inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum HazardForm {
    /// `Λ(t) = rate · t`.
    Linear { rate: f64 },
    /// `Λ(t) = log(1 + t)`.
    Log,
}

impl HazardForm {
    pub fn cumulative(self, t: f64) -> f64 {
        match self {
            HazardForm::Linear { rate } => rate * t,
            HazardForm::Log => t.ln_1p(),
        }
    }

    pub fn hazard(self, t: f64) -> f64 {
        match self {
            HazardForm::Linear { rate } => rate,
            HazardForm::Log => 1.0 / (1.0 + t),
        }
    }

    pub fn inverse(self, h: f64) -> f64 {
        match self {
            HazardForm::Linear { rate } => h / rate,
            HazardForm::Log => h.exp_m1(),
        }
    }

    /// Parses `linear:<rate>` or `log`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "log" {
            return Ok(HazardForm::Log);
        }
        if let Some(rate) = s.strip_prefix("linear:") {
            let rate: f64 = rate
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad rate in hazard form '{s}'")))?;
            let form = HazardForm::Linear { rate };
            form.validate()?;
            return Ok(form);
        }
        Err(Error::InvalidInput(format!(
            "unsupported hazard form '{s}' (expected 'linear:<rate>' or 'log')"
        )))
    }

    fn validate(self) -> Result<()> {
        match self {
            HazardForm::Linear { rate } if !(rate > 0.0 && rate.is_finite()) => Err(Error::InvalidInput(format!(
                "linear hazard rate must be positive, got {rate}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum CovariateSpec {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum Censoring {
    /// `C ~ Uniform(0, max)`.
    Uniform { max: f64 },
    /// No censoring: every terminal event is observed.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeSpec {
    pub n: usize,
    pub params: ParameterSet<f64>,
    pub illness: HazardForm,
    pub gap: HazardForm,
    pub direct: HazardForm,
    pub censoring: Censoring,
    pub covariates: Vec<CovariateSpec>,
    pub treat_prob: f64,
    pub seed: u64,
}

impl GenerativeSpec {
    /// The two-covariate simulation design with `Λ₁(t) = t`,
    /// `Λ₂(t) = 0.2t`, `Λ₃(t) = log(1+t)` and `C ~ U(0, 15)`.
    pub fn reference(n: usize, seed: u64) -> Self {
        Self {
            n,
            params: reference_params(),
            illness: HazardForm::Linear { rate: 1.0 },
            gap: HazardForm::Linear { rate: 0.2 },
            direct: HazardForm::Log,
            censoring: Censoring::Uniform { max: 15.0 },
            covariates: vec![
                CovariateSpec::Normal { mean: 0.0, sd: 1.0 },
                CovariateSpec::Uniform { low: 0.0, high: 1.0 },
            ],
            treat_prob: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if self.params.p() != self.covariates.len() {
            return Err(Error::InvalidInput(format!(
                "parameters expect {} covariates, spec has {}",
                self.params.p(),
                self.covariates.len()
            )));
        }
        self.params.validate()?;
        for f in [self.illness, self.gap, self.direct] {
            f.validate()?;
        }
        if let Censoring::Uniform { max } = self.censoring {
            if !(max > 0.0 && max.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "censoring max must be positive, got {max}"
                )));
            }
        }
        for c in &self.covariates {
            let ok = match *c {
                CovariateSpec::Normal { mean, sd } => mean.is_finite() && sd >= 0.0 && sd.is_finite(),
                CovariateSpec::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            };
            if !ok {
                return Err(Error::InvalidInput(format!("bad covariate distribution {c:?}")));
            }
        }
        if !(0.0..=1.0).contains(&self.treat_prob) {
            return Err(Error::InvalidInput("treatment probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// True parameter values of the reference design, covariates `(X1, X2)`.
pub fn reference_params() -> ParameterSet<f64> {
    ParameterSet {
        eta_m1: vec![0.5, 0.5, 0.5],
        eta_r1: vec![0.5, -0.2, -0.2],
        eta_m2: vec![-0.2, 0.4, 0.5],
        eta_r2: vec![0.4, 0.5, 0.5],
        eta_t2: vec![0.0, -0.5, -0.2],
        eta_t3: vec![0.2, -0.2, 0.0],
        alpha1: vec![0.0, 0.3, 0.1],
        alpha2: vec![0.2, -0.5, 0.3],
    }
}

/// Inverse-CDF draw from `S(t) = exp(-Λ(t) e^{lp})` given `u ∈ (0, 1)`.
pub fn sample_event_time(form: HazardForm, lp: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidInput(format!("uniform draw {u} outside (0, 1)")));
    }
    form.validate()?;
    Ok(form.inverse(-u.ln() * (-lp).exp()))
}

/// Latent quantities behind one simulated record.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub id: String,
    pub stratum: Stratum,
    /// Intermediate-event time; `None` when the event can never occur.
    pub m: Option<f64>,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct SimulatedData<T> {
    pub data: Dataset<T>,
    pub truth: Vec<TruthRecord>,
}

#[derive(Clone, Copy)]
enum Role {
    Treatment,
    Stratum,
    Intermediate,
    Gap,
    Direct,
    Censor,
    Covariate(usize),
}

impl Role {
    fn index(self) -> u128 {
        match self {
            Role::Treatment => 0,
            Role::Stratum => 1,
            Role::Intermediate => 2,
            Role::Gap => 3,
            Role::Direct => 4,
            Role::Censor => 5,
            Role::Covariate(j) => 16 + j as u128,
        }
    }
}

fn stream(seed: u64, subject: usize, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(subject as u64);
    rng.set_word_pos(role.index() << 32);
    rng
}

fn open01(seed: u64, subject: usize, role: Role) -> f64 {
    Open01.sample(&mut stream(seed, subject, role))
}

/// Draws one dataset. Ids are `1..=n`.
pub fn generate<T: Scalar>(spec: &GenerativeSpec) -> Result<SimulatedData<T>> {
    spec.validate()?;
    let pm = &spec.params;
    let mut records = Vec::with_capacity(spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let seed = spec.seed;
        let x: Vec<f64> = spec
            .covariates
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let mut rng = stream(seed, i, Role::Covariate(j));
                match *c {
                    CovariateSpec::Normal { mean, sd } => {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        mean + sd * z
                    }
                    CovariateSpec::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
                }
            })
            .collect();
        let treated = stream(seed, i, Role::Treatment).random::<f64>() < spec.treat_prob;
        let w = stratum_weights(&x, &pm.alpha1, &pm.alpha2)?;
        let us = stream(seed, i, Role::Stratum).random::<f64>();
        let stratum = if us < w[0] {
            Stratum::AlwaysSusceptible
        } else if us < w[0] + w[1] {
            Stratum::Prevented
        } else {
            Stratum::NeverSusceptible
        };

        let illness_path = |eta_m: &[f64], eta_r: &[f64], lp: fn(&[f64], bool, &[f64]) -> f64| -> Result<(f64, f64)> {
            let m = sample_event_time(
                spec.illness,
                lp(eta_m, treated, &x),
                open01(seed, i, Role::Intermediate),
            )?;
            let r = sample_event_time(spec.gap, lp(eta_r, treated, &x), open01(seed, i, Role::Gap))?;
            Ok((m, m + r))
        };
        let direct = |lp: f64| sample_event_time(spec.direct, lp, open01(seed, i, Role::Direct));
        let (m, t) = match stratum {
            Stratum::AlwaysSusceptible => {
                let (m, t) = illness_path(&pm.eta_m1, &pm.eta_r1, ParameterSet::lp_treat)?;
                (Some(m), t)
            }
            Stratum::Prevented if !treated => {
                let (m, t) = illness_path(&pm.eta_m2, &pm.eta_r2, |eta, _, x| ParameterSet::lp_intercept(eta, x))?;
                (Some(m), t)
            }
            Stratum::Prevented => (None, direct(ParameterSet::lp_intercept(&pm.eta_t2, &x))?),
            Stratum::NeverSusceptible => (None, direct(ParameterSet::lp_treat(&pm.eta_t3, treated, &x))?),
        };
        let c = match spec.censoring {
            Censoring::Uniform { max } => max * open01(seed, i, Role::Censor),
            Censoring::None => f64::INFINITY,
        };
        let y = t.min(c);
        let delta_t = t <= c;
        let (z, delta_m) = match m {
            Some(m) if m < y => (m, true),
            _ => (y, false),
        };
        let id = (i + 1).to_string();
        let lit = |v: f64| T::from_f64(v).expect("finite time");
        let mut rec = SubjectRecord {
            id: id.clone(),
            treated,
            z: lit(z),
            delta_m,
            y: lit(y),
            delta_t,
            x: x.iter().map(|&v| lit(v)).collect(),
        };
        // Rounding to a narrow scalar can collapse a tiny positive gap.
        if rec.delta_m && rec.y <= rec.z {
            rec.delta_m = false;
            rec.z = rec.y;
        }
        records.push(rec);
        truth.push(TruthRecord { id, stratum, m, t });
    }
    Ok(SimulatedData {
        data: Dataset::new(records)?,
        truth,
    })
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if diff.abs() <= 15.0 * tol {
            return Ok(left + right + diff / 15.0);
        }
        if depth == 0 || !diff.is_finite() {
            return Err(Error::Quadrature { a, b });
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    recurse(&f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 40)
}

const QUAD_TOL: f64 = 1e-8;

/// Survival to `t` along the illness path with multipliers `em`, `er`:
/// `exp(-Λ₁(t)em) + ∫₀ᵗ λ₁(m) em exp(-Λ₁(m)em) exp(-Λ₂(t-m)er) dm`.
fn illness_survival(spec: &GenerativeSpec, t: f64, em: f64, er: f64) -> Result<f64> {
    let integral = integrate(
        |m| {
            spec.illness.hazard(m)
                * em
                * (-spec.illness.cumulative(m) * em).exp()
                * (-spec.gap.cumulative(t - m) * er).exp()
        },
        0.0,
        t,
        QUAD_TOL,
    )?;
    Ok((-spec.illness.cumulative(t) * em).exp() + integral)
}

/// True survival of the terminal event in one stratum and arm.
pub fn true_survival(spec: &GenerativeSpec, t: f64, x: &[f64], treated: bool, stratum: Stratum) -> Result<f64> {
    let pm = &spec.params;
    let e = |v: f64| v.exp();
    match stratum {
        Stratum::AlwaysSusceptible => illness_survival(
            spec,
            t,
            e(ParameterSet::lp_treat(&pm.eta_m1, treated, x)),
            e(ParameterSet::lp_treat(&pm.eta_r1, treated, x)),
        ),
        Stratum::Prevented if !treated => illness_survival(
            spec,
            t,
            e(ParameterSet::lp_intercept(&pm.eta_m2, x)),
            e(ParameterSet::lp_intercept(&pm.eta_r2, x)),
        ),
        Stratum::Prevented => Ok((-spec.direct.cumulative(t) * e(ParameterSet::lp_intercept(&pm.eta_t2, x))).exp()),
        Stratum::NeverSusceptible => {
            Ok((-spec.direct.cumulative(t) * e(ParameterSet::lp_treat(&pm.eta_t3, treated, x))).exp())
        }
    }
}

/// True NIE₁, NDE₁, TE₁, TE₂ and TE₃ at profile `x` on `grid`.
pub fn true_effects(spec: &GenerativeSpec, grid: &[f64], x: &[f64]) -> Result<Vec<EffectCurve<f64>>> {
    if x.len() != spec.params.p() {
        return Err(Error::InvalidInput("covariate profile has the wrong length".into()));
    }
    let pm = &spec.params;
    let gm1 = ParameterSet::lp_treat(&pm.eta_m1, false, x);
    let gr1 = ParameterSet::lp_treat(&pm.eta_r1, false, x);
    let (em1, em0) = ((pm.eta_m1[0] + gm1).exp(), gm1.exp());
    let (er1, er0) = ((pm.eta_r1[0] + gr1).exp(), gr1.exp());
    let mut vals: [Vec<f64>; 5] = Default::default();
    for &t in grid {
        if !(t >= 0.0) {
            return Err(Error::InvalidInput(format!("grid time {t} is negative")));
        }
        let g11 = illness_survival(spec, t, em1, er1)?;
        let g01 = illness_survival(spec, t, em0, er1)?;
        let g00 = illness_survival(spec, t, em0, er0)?;
        vals[0].push(g11 - g01);
        vals[1].push(g01 - g00);
        vals[2].push(g11 - g00);
        vals[3].push(
            true_survival(spec, t, x, true, Stratum::Prevented)?
                - true_survival(spec, t, x, false, Stratum::Prevented)?,
        );
        vals[4].push(
            true_survival(spec, t, x, true, Stratum::NeverSusceptible)?
                - true_survival(spec, t, x, false, Stratum::NeverSusceptible)?,
        );
    }
    Ok(EffectName::CONDITIONAL
        .into_iter()
        .zip(vals)
        .map(|(name, v)| EffectCurve::new(name, grid.to_vec(), v, Some(x.to_vec())))
        .collect())
}
