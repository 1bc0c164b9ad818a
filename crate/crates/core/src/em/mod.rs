//! EM estimation of the three-stratum model.
//!
//! The E-step computes posterior stratum probabilities in log space. The
//! M-step solves the six profiled hazard-regression score equations by
//! Newton's method, refreshes the baseline-hazard jumps in closed form at the
//! new coefficients, and finally solves the membership score equations.

mod design;
mod membership;
mod newton;
mod riskset;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{subject_log_terms, ClampCounter, SubjectHazardValues};
use crate::linalg::SymMatrix;
use crate::model::{Dataset, FittedModel, Hazards, ParameterSet, PosteriorMatrix};
use crate::scalar::{compensated_sum, exp_lp, log_sum_exp, Scalar};

pub(crate) use design::Design;
pub use newton::Evaluation;
use newton::{maximize, NewtonSettings};
use riskset::BlockSetup;

/// Tuning of the outer EM loop and the inner Newton solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    /// Convergence threshold on the largest absolute change of any
    /// coefficient or hazard jump between iterations.
    pub tol: f64,
    pub max_outer_iters: usize,
    pub inner_newton_tol: f64,
    pub inner_max_iters: usize,
    pub step_halving_max: usize,
    /// Generalized EM: one damped Newton step per block instead of a full solve.
    pub single_newton_step: bool,
    /// Extra starts from jittered coefficients; the best log-likelihood wins.
    pub extra_starts: usize,
    pub seed: Option<u64>,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_outer_iters: 5000,
            inner_newton_tol: 1e-8,
            inner_max_iters: 50,
            step_halving_max: 20,
            single_newton_step: false,
            extra_starts: 0,
            seed: None,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.inner_newton_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.max_outer_iters == 0 || self.inner_max_iters == 0 || self.step_halving_max == 0 {
            return Err(Error::InvalidInput("iteration limits must be at least 1".into()));
        }
        Ok(())
    }

    fn newton<T: Scalar>(&self) -> NewtonSettings<T> {
        NewtonSettings {
            tol: T::lit(self.inner_newton_tol),
            max_iters: self.inner_max_iters,
            max_halvings: self.step_halving_max,
            single_step: self.single_newton_step,
        }
    }
}

/// The six hazard-regression coefficient blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EtaBlock {
    M1,
    M2,
    R1,
    R2,
    T2,
    T3,
}

impl EtaBlock {
    /// Update order used inside one M-step.
    pub const ALL: [EtaBlock; 6] = [
        EtaBlock::M1,
        EtaBlock::M2,
        EtaBlock::R1,
        EtaBlock::R2,
        EtaBlock::T2,
        EtaBlock::T3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EtaBlock::M1 => "eta_M1",
            EtaBlock::M2 => "eta_M2",
            EtaBlock::R1 => "eta_R1",
            EtaBlock::R2 => "eta_R2",
            EtaBlock::T2 => "eta_T2",
            EtaBlock::T3 => "eta_T3",
        }
    }

    /// True for blocks acting on `(a, x)`; false for `(1, x)`.
    pub fn uses_treatment(self) -> bool {
        matches!(self, EtaBlock::M1 | EtaBlock::R1 | EtaBlock::T3)
    }

    pub fn get<T>(self, p: &ParameterSet<T>) -> &Vec<T> {
        match self {
            EtaBlock::M1 => &p.eta_m1,
            EtaBlock::M2 => &p.eta_m2,
            EtaBlock::R1 => &p.eta_r1,
            EtaBlock::R2 => &p.eta_r2,
            EtaBlock::T2 => &p.eta_t2,
            EtaBlock::T3 => &p.eta_t3,
        }
    }

    pub fn get_mut<T>(self, p: &mut ParameterSet<T>) -> &mut Vec<T> {
        match self {
            EtaBlock::M1 => &mut p.eta_m1,
            EtaBlock::M2 => &mut p.eta_m2,
            EtaBlock::R1 => &mut p.eta_r1,
            EtaBlock::R2 => &mut p.eta_r2,
            EtaBlock::T2 => &mut p.eta_t2,
            EtaBlock::T3 => &mut p.eta_t3,
        }
    }

    /// The block sharing this block's baseline hazard.
    fn companion(self) -> EtaBlock {
        match self {
            EtaBlock::M1 => EtaBlock::M2,
            EtaBlock::M2 => EtaBlock::M1,
            EtaBlock::R1 => EtaBlock::R2,
            EtaBlock::R2 => EtaBlock::R1,
            EtaBlock::T2 => EtaBlock::T3,
            EtaBlock::T3 => EtaBlock::T2,
        }
    }

    /// Posterior weight with which subject `i` belongs to this block's process.
    #[inline]
    fn weight<T: Scalar>(self, post: &[T; 3], treated: bool) -> T {
        let z = T::zero();
        match self {
            EtaBlock::M1 | EtaBlock::R1 => post[0],
            EtaBlock::M2 | EtaBlock::R2 => {
                if treated {
                    z
                } else {
                    post[1]
                }
            }
            EtaBlock::T2 => {
                if treated {
                    post[1]
                } else {
                    z
                }
            }
            EtaBlock::T3 => post[2],
        }
    }
}

fn block_rows<'d, T: Scalar>(d: &'d Design<'_, T>, block: EtaBlock) -> &'d [Vec<T>] {
    if block.uses_treatment() {
        &d.w_rows
    } else {
        &d.xt_rows
    }
}

fn block_family<'d, T: Scalar>(
    d: &'d Design<'_, T>,
    block: EtaBlock,
) -> (&'d design::RiskFamily<T>, &'d design::JumpGrid<T>) {
    match block {
        EtaBlock::M1 | EtaBlock::M2 => (&d.fam1, &d.grid1),
        EtaBlock::R1 | EtaBlock::R2 => (&d.fam2, &d.grid2),
        EtaBlock::T2 | EtaBlock::T3 => (&d.fam3, &d.grid3),
    }
}

/// `q_j e^{ηᵀd_j}` for every subject under the given block coefficients.
fn exposures<T: Scalar>(d: &Design<'_, T>, block: EtaBlock, eta: &[T], post: &[[T; 3]]) -> Vec<T> {
    let rows = block_rows(d, block);
    d.data
        .records()
        .iter()
        .zip(rows)
        .zip(post)
        .map(|((r, row), p)| {
            let q = block.weight(p, r.treated);
            if q == T::zero() {
                T::zero()
            } else {
                q * exp_lp(crate::scalar::dot(eta, row))
            }
        })
        .collect()
}

fn block_setup<T: Scalar>(
    d: &Design<'_, T>,
    block: EtaBlock,
    post: &[[T; 3]],
    params: &ParameterSet<T>,
) -> BlockSetup<T> {
    let own: Vec<T> = d
        .data
        .records()
        .iter()
        .zip(post)
        .map(|(r, p)| block.weight(p, r.treated))
        .collect();
    let comp = block.companion();
    let other = exposures(d, comp, comp.get(params), post);
    let (fam, _) = block_family(d, block);
    BlockSetup::new(fam, block_rows(d, block), own, other)
}

fn solve_block<T: Scalar>(
    d: &Design<'_, T>,
    block: EtaBlock,
    post: &[[T; 3]],
    params: &ParameterSet<T>,
    cfg: &EmConfig,
) -> Result<Vec<T>> {
    let setup = block_setup(d, block, post, params);
    let start = block.get(params);
    let (fam, grid) = block_family(d, block);
    if setup.is_void(fam) {
        return Ok(start.clone());
    }
    let rows = block_rows(d, block);
    maximize(
        |eta| riskset::evaluate(fam, grid, rows, &setup, eta),
        start,
        cfg.newton(),
        block.name(),
    )
}

fn hazard_jumps<T: Scalar>(d: &Design<'_, T>, post: &[[T; 3]], params: &ParameterSet<T>) -> Result<[Vec<T>; 3]> {
    let sum = |a: Vec<T>, b: Vec<T>| a.into_iter().zip(b).map(|(x, y)| x + y).collect::<Vec<T>>();
    let s1 = sum(
        exposures(d, EtaBlock::M1, &params.eta_m1, post),
        exposures(d, EtaBlock::M2, &params.eta_m2, post),
    );
    let s2 = sum(
        exposures(d, EtaBlock::R1, &params.eta_r1, post),
        exposures(d, EtaBlock::R2, &params.eta_r2, post),
    );
    let s3 = sum(
        exposures(d, EtaBlock::T2, &params.eta_t2, post),
        exposures(d, EtaBlock::T3, &params.eta_t3, post),
    );
    let wrap = |scale: &'static str| {
        move |t: T| Error::DegenerateRiskSet {
            scale,
            time: t.as_f64(),
        }
    };
    Ok([
        riskset::breslow_jumps(&d.fam1, &d.grid1, &s1).map_err(wrap("illness"))?,
        riskset::breslow_jumps(&d.fam2, &d.grid2, &s2).map_err(wrap("gap"))?,
        riskset::breslow_jumps(&d.fam3, &d.grid3, &s3).map_err(wrap("direct"))?,
    ])
}

fn solve_alpha<T: Scalar>(
    xt_rows: &[Vec<T>],
    post: &[[T; 3]],
    alpha1: &[T],
    alpha2: &[T],
    cfg: &EmConfig,
) -> Result<(Vec<T>, Vec<T>)> {
    let start: Vec<T> = alpha1.iter().chain(alpha2).copied().collect();
    let sol = maximize(
        |a| membership::evaluate(xt_rows, post, a),
        &start,
        cfg.newton(),
        "alpha",
    )?;
    let k = alpha1.len();
    Ok((sol[..k].to_vec(), sol[k..].to_vec()))
}

/// Posteriors and log-likelihood from per-subject hazard values.
fn posteriors_from<T: Scalar>(
    data: &Dataset<T>,
    params: &ParameterSet<T>,
    hv: &[SubjectHazardValues<T>],
    clamps: &mut ClampCounter,
) -> Result<(PosteriorMatrix<T>, T)> {
    let mut rows = Vec::with_capacity(data.len());
    let mut logs = Vec::with_capacity(data.len());
    for (r, v) in data.records().iter().zip(hv) {
        let terms = subject_log_terms(r, params, v, clamps);
        let l = log_sum_exp(&terms);
        if !l.is_finite() {
            return Err(Error::NumericalDegeneracy { id: r.id.clone() });
        }
        rows.push([(terms[0] - l).exp(), (terms[1] - l).exp(), (terms[2] - l).exp()]);
        logs.push(l);
    }
    Ok((PosteriorMatrix { rows }, compensated_sum(logs)))
}

fn check_dims<T: Scalar>(data: &Dataset<T>, params: &ParameterSet<T>) -> Result<()> {
    params.validate()?;
    if params.p() != data.p() {
        return Err(Error::InvalidInput(format!(
            "parameters are for p = {}, data has p = {}",
            params.p(),
            data.p()
        )));
    }
    Ok(())
}

fn check_posteriors<T: Scalar>(data: &Dataset<T>, post: &PosteriorMatrix<T>) -> Result<()> {
    if post.len() != data.len() {
        return Err(Error::InvalidInput(format!(
            "{} posterior rows for {} subjects",
            post.len(),
            data.len()
        )));
    }
    let tol = T::lit(1e-9);
    for (i, r) in post.rows.iter().enumerate() {
        let s = r[0] + r[1] + r[2];
        if r.iter().any(|&v| !(v >= T::zero() && v <= T::one())) || (s - T::one()).abs() > tol {
            return Err(Error::Validation {
                row: i + 1,
                message: "posterior row is not a probability vector".into(),
            });
        }
    }
    Ok(())
}

/// Posterior stratum probabilities given parameters and hazards.
pub fn e_step<T: Scalar>(
    data: &Dataset<T>,
    params: &ParameterSet<T>,
    hazards: &Hazards<T>,
) -> Result<PosteriorMatrix<T>> {
    check_dims(data, params)?;
    let hv: Vec<_> = data
        .records()
        .iter()
        .map(|r| SubjectHazardValues::lookup(r, hazards))
        .collect();
    Ok(posteriors_from(data, params, &hv, &mut ClampCounter::default())?.0)
}

/// Closed-form baseline-hazard jumps given posteriors and coefficients.
pub fn m_step_hazards<T: Scalar>(
    data: &Dataset<T>,
    posteriors: &PosteriorMatrix<T>,
    params: &ParameterSet<T>,
) -> Result<Hazards<T>> {
    check_dims(data, params)?;
    check_posteriors(data, posteriors)?;
    let d = Design::new(data)?;
    let jumps = hazard_jumps(&d, &posteriors.rows, params)?;
    d.hazards(&jumps)
}

/// Root of one block's weighted score equation, starting from the block's
/// current value in `params`. The companion block sharing the same baseline
/// hazard is held at its value in `params`.
pub fn m_step_eta<T: Scalar>(
    block: EtaBlock,
    data: &Dataset<T>,
    posteriors: &PosteriorMatrix<T>,
    params: &ParameterSet<T>,
    cfg: &EmConfig,
) -> Result<Vec<T>> {
    check_dims(data, params)?;
    check_posteriors(data, posteriors)?;
    let d = Design::new(data)?;
    solve_block(&d, block, &posteriors.rows, params, cfg)
}

/// Root of the weighted multinomial-logistic score equations.
pub fn m_step_alpha<T: Scalar>(
    posteriors: &PosteriorMatrix<T>,
    covariates: &[Vec<T>],
    warm_start: (&[T], &[T]),
    cfg: &EmConfig,
) -> Result<(Vec<T>, Vec<T>)> {
    if posteriors.len() != covariates.len() {
        return Err(Error::InvalidInput("posteriors and covariates differ in length".into()));
    }
    let p = warm_start.0.len().saturating_sub(1);
    if warm_start.1.len() != p + 1 || covariates.iter().any(|x| x.len() != p) {
        return Err(Error::InvalidInput("membership dimensions disagree".into()));
    }
    let xt: Vec<Vec<T>> = covariates
        .iter()
        .map(|x| std::iter::once(T::one()).chain(x.iter().copied()).collect())
        .collect();
    solve_alpha(&xt, &posteriors.rows, warm_start.0, warm_start.1, cfg)
}

/// A block's profiled objective, exposed for diagnostics and derivative checks.
pub struct EtaObjective<'a, T> {
    design: Design<'a, T>,
    block: EtaBlock,
    setup: BlockSetup<T>,
}

impl<'a, T: Scalar> EtaObjective<'a, T> {
    pub fn new(
        block: EtaBlock,
        data: &'a Dataset<T>,
        posteriors: &PosteriorMatrix<T>,
        params: &ParameterSet<T>,
    ) -> Result<Self> {
        check_dims(data, params)?;
        check_posteriors(data, posteriors)?;
        let design = Design::new(data)?;
        let setup = block_setup(&design, block, &posteriors.rows, params);
        Ok(Self { design, block, setup })
    }

    pub fn evaluate(&self, eta: &[T]) -> Evaluation<T> {
        let (fam, grid) = block_family(&self.design, self.block);
        riskset::evaluate(fam, grid, block_rows(&self.design, self.block), &self.setup, eta)
    }
}

/// Membership objective, exposed for diagnostics and derivative checks.
pub struct AlphaObjective<T> {
    xt_rows: Vec<Vec<T>>,
    post: Vec<[T; 3]>,
}

impl<T: Scalar> AlphaObjective<T> {
    pub fn new(posteriors: &PosteriorMatrix<T>, covariates: &[Vec<T>]) -> Self {
        Self {
            xt_rows: covariates
                .iter()
                .map(|x| std::iter::once(T::one()).chain(x.iter().copied()).collect())
                .collect(),
            post: posteriors.rows.clone(),
        }
    }

    /// Argument is `(α₁, α₂)` concatenated.
    pub fn evaluate(&self, alpha: &[T]) -> Evaluation<T> {
        membership::evaluate(&self.xt_rows, &self.post, alpha)
    }
}

/// Starting values for [`fit_from`].
#[derive(Debug, Clone)]
pub struct StartValues<T> {
    pub params: ParameterSet<T>,
    /// Hazards to start from; jumps are transferred onto the data's own grid.
    pub hazards: Option<Hazards<T>>,
}

/// Fits the model from the deterministic start (all coefficients zero, flat
/// jumps `1/m_k`).
pub fn fit<T: Scalar>(data: &Dataset<T>, cfg: &EmConfig) -> Result<FittedModel<T>> {
    fit_from(data, cfg, None)
}

/// Fits the model from the given start, or from the deterministic start when
/// `start` is `None`.
pub fn fit_from<T: Scalar>(
    data: &Dataset<T>,
    cfg: &EmConfig,
    start: Option<&StartValues<T>>,
) -> Result<FittedModel<T>> {
    cfg.validate()?;
    let d = Design::new(data)?;
    let (params0, jumps0) = match start {
        Some(s) => {
            check_dims(data, &s.params)?;
            let jumps = match &s.hazards {
                Some(h) => d.jumps_from(h),
                None => d.initial_jumps(),
            };
            (s.params.clone(), jumps)
        }
        None => (ParameterSet::zeros(data.p()), d.initial_jumps()),
    };
    let mut best = run_em(&d, cfg, params0.clone(), jumps0.clone())?;
    if cfg.extra_starts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
        for _ in 0..cfg.extra_starts {
            let base = params0.to_vec();
            let jittered: Vec<T> = base.iter().map(|&v| v + T::lit(rng.random_range(-0.5..0.5))).collect();
            let ps = ParameterSet::from_slice(data.p(), &jittered)?;
            if let Ok(alt) = run_em(&d, cfg, ps, jumps0.clone()) {
                if alt.loglik() > best.loglik() {
                    best = alt;
                }
            }
        }
    }
    best.warnings.extend(collinearity_warnings(&d));
    Ok(best)
}

fn gram_is_regular<T: Scalar>(rows: &[Vec<T>]) -> bool {
    let k = rows.first().map_or(0, Vec::len);
    let mut g = SymMatrix::zeros(k);
    for r in rows {
        for a in 0..k {
            for b in 0..k {
                g.add(a, b, r[a] * r[b]);
            }
        }
    }
    g.cholesky_solve(&vec![T::zero(); k]).is_some()
}

fn collinearity_warnings<T: Scalar>(d: &Design<'_, T>) -> Vec<String> {
    let mut out = Vec::new();
    if !gram_is_regular(&d.xt_rows) {
        out.push(
            "covariates with intercept are (nearly) collinear; membership and stratum-2 \
             coefficients may not be identified"
                .to_string(),
        );
    }
    if !gram_is_regular(&d.w_rows) {
        out.push("treatment and covariates are (nearly) collinear".to_string());
    }
    out
}

fn max_abs_change<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).fold(T::zero(), T::max)
}

/// One M-step. Returns new coefficients and hazard jumps.
fn m_step<T: Scalar>(
    d: &Design<'_, T>,
    post: &[[T; 3]],
    params: &ParameterSet<T>,
    cfg: &EmConfig,
) -> Result<(ParameterSet<T>, [Vec<T>; 3])> {
    let mut next = params.clone();
    for block in EtaBlock::ALL {
        let sol = solve_block(d, block, post, &next, cfg)?;
        *block.get_mut(&mut next) = sol;
    }
    let jumps = hazard_jumps(d, post, &next)?;
    let (a1, a2) = solve_alpha(&d.xt_rows, post, &next.alpha1, &next.alpha2, cfg)?;
    next.alpha1 = a1;
    next.alpha2 = a2;
    Ok((next, jumps))
}

fn run_em<T: Scalar>(
    d: &Design<'_, T>,
    cfg: &EmConfig,
    mut params: ParameterSet<T>,
    mut jumps: [Vec<T>; 3],
) -> Result<FittedModel<T>> {
    let tol = T::lit(cfg.tol);
    let mut clamps = ClampCounter::default();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    let posteriors = loop {
        let hv = d.hazard_values(&jumps);
        let (post, ll) = posteriors_from(d.data, &params, &hv, &mut clamps).map_err(|e| Error::AtIteration {
            iter: iters,
            source: Box::new(e),
        })?;
        trace.push(ll);
        if converged || iters == cfg.max_outer_iters {
            break post;
        }
        let (next, next_jumps) = m_step(d, &post.rows, &params, cfg).map_err(|e| Error::AtIteration {
            iter: iters + 1,
            source: Box::new(e),
        })?;
        let mut change = max_abs_change(&params.to_vec(), &next.to_vec());
        for k in 0..3 {
            change = change.max(max_abs_change(&jumps[k], &next_jumps[k]));
        }
        params = next;
        jumps = next_jumps;
        iters += 1;
        if change < tol {
            converged = true;
        }
    };
    let mut warnings = Vec::new();
    if clamps.0 > 0 {
        warnings.push(format!(
            "{} linear predictors were clamped to ±{} before exponentiation",
            clamps.0,
            T::lp_bound()
        ));
    }
    if !converged {
        warnings.push(format!("EM did not converge within {} iterations", cfg.max_outer_iters));
    }
    Ok(FittedModel {
        params,
        hazards: d.hazards(&jumps)?,
        posteriors,
        loglik_trace: trace,
        converged,
        n_iters: iters,
        clamp_events: clamps.0,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SubjectRecord;

    fn rec(id: &str, a: bool, z: f64, dm: bool, y: f64, dt: bool, x: f64) -> SubjectRecord<f64> {
        SubjectRecord::new(id, a, z, dm, y, dt, vec![x]).unwrap()
    }

    fn tiny() -> Dataset<f64> {
        Dataset::new(vec![
            rec("1", true, 1.0, true, 2.5, true, 0.3),
            rec("2", false, 0.7, true, 3.0, false, -0.2),
            rec("3", false, 2.0, false, 2.0, true, 1.1),
            rec("4", true, 1.5, false, 1.5, true, 0.0),
            rec("5", true, 4.0, false, 4.0, false, -1.0),
            rec("6", false, 3.5, false, 3.5, false, 0.5),
            rec("7", false, 1.2, true, 1.6, true, 0.9),
        ])
        .unwrap()
    }

    #[test]
    fn structural_zeros_in_e_step() {
        let data = tiny();
        let d = Design::new(&data).unwrap();
        let h = d.hazards(&d.initial_jumps()).unwrap();
        let mut pm = ParameterSet::zeros(1);
        pm.alpha1 = vec![0.2, -0.3];
        pm.eta_t2 = vec![0.4, 0.1];
        let post = e_step(&data, &pm, &h).unwrap();
        assert_eq!(post.rows[0], [1.0, 0.0, 0.0]);
        assert_eq!(post.rows[1][2], 0.0);
        assert_eq!(post.rows[2], [0.0, 0.0, 1.0]);
        assert_eq!(post.rows[3][0], 0.0);
        for r in &post.rows {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_event_kind_is_rejected() {
        let data = Dataset::new(vec![
            rec("1", true, 2.0, false, 2.0, true, 0.3),
            rec("2", false, 3.0, false, 3.0, false, 0.1),
        ])
        .unwrap();
        assert!(matches!(
            fit(&data, &EmConfig::default()),
            Err(Error::MissingEvents("intermediate"))
        ));
    }

    #[test]
    fn single_subject_hazard_jump_is_one() {
        // one intermediate event, posterior (1,0,0), η = 0 → λ = 1/1
        let data = Dataset::new(vec![
            rec("1", true, 1.0, true, 2.0, true, 0.0),
            rec("2", true, 3.0, false, 3.0, true, 0.0),
        ])
        .unwrap();
        let post = PosteriorMatrix {
            rows: vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        };
        let h = m_step_hazards(&data, &post, &ParameterSet::zeros(1)).unwrap();
        assert_eq!(h.illness.jump_sizes(), &[1.0]);
        assert_eq!(h.gap.jump_sizes(), &[1.0]);
        assert_eq!(h.direct.jump_sizes(), &[1.0]);
    }

    #[test]
    fn config_validation() {
        let cfg = EmConfig {
            tol: 0.0,
            ..EmConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(EmConfig::default().validate().is_ok());
    }
}
