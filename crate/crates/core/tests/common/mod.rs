//! Reference implementations used as oracles by the integration and
//! acceptance tests. They are deliberately naive: quadratic risk-set loops,
//! dense Gaussian elimination, no shared code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

use stratmed::model::{PosteriorMatrix, Stratum};
use stratmed::simulate::TruthRecord;
use stratmed::Data;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-300, "singular system");
        for r in col + 1..n {
            let f = a[r][col] / d;
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// One subject in a Cox regression problem.
#[derive(Debug, Clone)]
pub struct CoxRow {
    pub time: f64,
    pub event: bool,
    pub z: Vec<f64>,
}

fn cox_eval(rows: &[CoxRow], beta: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let p = beta.len();
    let lp: Vec<f64> = rows
        .iter()
        .map(|r| r.z.iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect();
    let mut ll = 0.0;
    let mut g = vec![0.0; p];
    let mut h = vec![vec![0.0; p]; p];
    for (i, ri) in rows.iter().enumerate() {
        if !ri.event {
            continue;
        }
        // Breslow handling of ties: every event sees the full risk set.
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![vec![0.0; p]; p];
        for (j, rj) in rows.iter().enumerate() {
            if rj.time >= ri.time {
                let e = lp[j].exp();
                s0 += e;
                for a in 0..p {
                    s1[a] += e * rj.z[a];
                    for b in 0..p {
                        s2[a][b] += e * rj.z[a] * rj.z[b];
                    }
                }
            }
        }
        ll += lp[i] - s0.ln();
        for a in 0..p {
            g[a] += ri.z[a] - s1[a] / s0;
            for b in 0..p {
                h[a][b] += s2[a][b] / s0 - s1[a] * s1[b] / (s0 * s0);
            }
        }
    }
    (ll, g, h)
}

/// Maximum partial-likelihood estimate by Newton with step halving.
pub fn cox_fit(rows: &[CoxRow], p: usize) -> Vec<f64> {
    let mut beta = vec![0.0; p];
    let (mut ll, mut g, mut h) = cox_eval(rows, &beta);
    for _ in 0..200 {
        let step = solve_dense(h.clone(), g.clone());
        let mut scale = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let (ll2, g2, h2) = cox_eval(rows, &cand);
            if ll2 >= ll - 1e-12 * ll.abs() || scale < 1e-10 {
                beta = cand;
                ll = ll2;
                g = g2;
                h = h2;
                break;
            }
            scale *= 0.5;
        }
        if step.iter().map(|s| (scale * s).abs()).fold(0.0, f64::max) < 1e-13 {
            break;
        }
    }
    beta
}

/// Nelson-Aalen increments `d_k / r_k` at the distinct event times.
pub fn nelson_aalen(times: &[f64], events: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let mut ev: Vec<f64> = times.iter().zip(events).filter(|(_, &e)| e).map(|(&t, _)| t).collect();
    ev.sort_by(f64::total_cmp);
    ev.dedup();
    let inc = ev
        .iter()
        .map(|&t| {
            let d = times.iter().zip(events).filter(|(&s, &e)| e && s == t).count() as f64;
            let r = times.iter().filter(|&&s| s >= t).count() as f64;
            d / r
        })
        .collect();
    (ev, inc)
}

/// Product-limit estimate evaluated at `t` (right-continuous).
pub fn kaplan_meier_at(times: &[f64], events: &[bool], t: f64) -> f64 {
    let (ev, _) = nelson_aalen(times, events);
    let mut s = 1.0;
    for &u in ev.iter().take_while(|&&u| u <= t) {
        let d = times.iter().zip(events).filter(|(&s, &e)| e && s == u).count() as f64;
        let r = times.iter().filter(|&&s| s >= u).count() as f64;
        s *= 1.0 - d / r;
    }
    s
}

/// Posteriors fixed at the true strata.
pub fn clamped_posteriors(truth: &[TruthRecord]) -> PosteriorMatrix<f64> {
    PosteriorMatrix {
        rows: truth
            .iter()
            .map(|t| {
                let mut r = [0.0; 3];
                r[t.stratum.index()] = 1.0;
                r
            })
            .collect(),
    }
}

/// Hazard scale of the oracle problems below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Illness,
    Gap,
    Direct,
}

fn with_intercept(x: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(x.iter().copied()).collect()
}

fn with_treatment(a: bool, x: &[f64]) -> Vec<f64> {
    std::iter::once(if a { 1.0 } else { 0.0 })
        .chain(x.iter().copied())
        .collect()
}

/// The Cox problem that a pair of coefficient blocks sharing one baseline
/// hazard reduces to when strata are known. Covariate vectors are the two
/// blocks stacked: `(first block, second block)` in the order
/// M1|M2, R1|R2 and T2|T3.
pub fn known_strata_cox(data: &Data, truth: &[TruthRecord], scale: Scale) -> Vec<CoxRow> {
    let mut out = Vec::new();
    for (r, t) in data.records().iter().zip(truth) {
        let k = r.x.len() + 1;
        let zero = vec![0.0; k];
        let stack = |first: Vec<f64>, second: Vec<f64>| [first, second].concat();
        let u = t.stratum;
        let row = match scale {
            Scale::Illness | Scale::Gap => {
                let design_first = with_treatment(r.treated, &r.x);
                let design_second = with_intercept(&r.x);
                let z = match (u, r.treated) {
                    (Stratum::AlwaysSusceptible, _) => stack(design_first, zero),
                    (Stratum::Prevented, false) => stack(zero, design_second),
                    _ => continue,
                };
                if scale == Scale::Illness {
                    CoxRow {
                        time: r.z,
                        event: r.delta_m,
                        z,
                    }
                } else {
                    if !r.delta_m {
                        continue;
                    }
                    CoxRow {
                        time: r.y - r.z,
                        event: r.delta_t,
                        z,
                    }
                }
            }
            Scale::Direct => {
                if r.delta_m {
                    continue;
                }
                let z = match (u, r.treated) {
                    (Stratum::Prevented, true) => stack(with_intercept(&r.x), zero),
                    (Stratum::NeverSusceptible, a) => stack(zero, with_treatment(a, &r.x)),
                    _ => continue,
                };
                CoxRow {
                    time: r.y,
                    event: r.delta_t,
                    z,
                }
            }
        };
        out.push(row);
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn discretize(
    form: stratmed::simulate::HazardForm,
    times: Vec<f64>,
    scale: stratmed::HazardScale,
) -> stratmed::BaselineHazard<f64> {
    let mut prev = 0.0;
    let jumps = times
        .iter()
        .map(|&t| {
            let c = form.cumulative(t);
            let d = c - prev;
            prev = c;
            d
        })
        .collect();
    stratmed::BaselineHazard::new(scale, times, jumps).unwrap()
}

/// The generating cumulative hazards as step functions on the data's own
/// event-time grids.
pub fn truth_hazards(spec: &stratmed::GenerativeSpec, data: &Data) -> stratmed::Hazards<f64> {
    use stratmed::HazardScale;
    let recs = data.records();
    let z = distinct(recs.iter().filter(|r| r.delta_m).map(|r| r.z).collect());
    let v = distinct(
        recs.iter()
            .filter(|r| r.delta_m && r.delta_t)
            .map(|r| r.y - r.z)
            .collect(),
    );
    let y = distinct(recs.iter().filter(|r| !r.delta_m && r.delta_t).map(|r| r.y).collect());
    stratmed::Hazards {
        illness: discretize(spec.illness, z, HazardScale::Illness),
        gap: discretize(spec.gap, v, HazardScale::Gap),
        direct: discretize(spec.direct, y, HazardScale::Direct),
    }
}

/// A fitted-model value carrying the true parameters and discretized true
/// hazards.
pub fn truth_model(spec: &stratmed::GenerativeSpec, data: &Data) -> stratmed::Fit {
    stratmed::FittedModel {
        params: spec.params.clone(),
        hazards: truth_hazards(spec, data),
        posteriors: PosteriorMatrix { rows: Vec::new() },
        loglik_trace: vec![0.0],
        converged: true,
        n_iters: 0,
        clamp_events: 0,
        warnings: Vec::new(),
    }
}

/// Reference design with every coefficient drawn uniformly from [-1, 1].
pub fn random_spec(n: usize, seed: u64) -> stratmed::GenerativeSpec {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut spec = stratmed::GenerativeSpec::reference(n, seed);
    let k = spec.params.to_vec().len();
    let v: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect();
    spec.params = stratmed::model::ParameterSet::from_slice(spec.covariates.len(), &v).unwrap();
    spec
}
