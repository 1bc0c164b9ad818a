mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratmed::em::{e_step, m_step_alpha, m_step_eta, m_step_hazards, EtaBlock};
use stratmed::model::{stratum_weights, Dataset, ParameterSet, PosteriorMatrix};
use stratmed::simulate::{generate, GenerativeSpec};
use stratmed::{fit, fit_from, EmConfig, Error, Record, StartValues};

fn covariates(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0)])
        .collect()
}

#[test]
fn alpha_with_uniform_posteriors_is_zero() {
    let post = PosteriorMatrix {
        rows: vec![[1.0 / 3.0; 3]; 50],
    };
    let covs: Vec<Vec<f64>> = vec![vec![]; 50];
    let (a1, a2): (Vec<f64>, Vec<f64>) = m_step_alpha(&post, &covs, (&[0.4], &[-0.2]), &EmConfig::default()).unwrap();
    assert!(a1[0].abs() < 1e-12 && a2[0].abs() < 1e-12);
}

#[test]
fn alpha_recovers_its_fixed_point() {
    let covs = covariates(300, 1);
    let (s1, s2) = ([0.3, -0.5, 0.8], [-0.1, 0.4, 0.2]);
    let rows = covs.iter().map(|x| stratum_weights(x, &s1, &s2).unwrap()).collect();
    let post = PosteriorMatrix { rows };
    let (a1, a2) = m_step_alpha(&post, &covs, (&[0.0; 3], &[0.0; 3]), &EmConfig::default()).unwrap();
    for (got, want) in a1.iter().chain(&a2).zip(s1.iter().chain(&s2)) {
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

/// `Σᵢ (P̂ᵢᵤ − wᵤ(xᵢ)) x̃ᵢ` for u = 1, 2, written out independently.
fn alpha_score(post: &[[f64; 3]], covs: &[Vec<f64>], alpha: &[f64]) -> Vec<f64> {
    let k = alpha.len() / 2;
    let mut g = vec![0.0; 2 * k];
    for (p, x) in post.iter().zip(covs) {
        let xt: Vec<f64> = std::iter::once(1.0).chain(x.iter().copied()).collect();
        let l1: f64 = xt.iter().zip(&alpha[..k]).map(|(a, b)| a * b).sum();
        let l2: f64 = xt.iter().zip(&alpha[k..]).map(|(a, b)| a * b).sum();
        let d = 1.0 + l1.exp() + l2.exp();
        for j in 0..k {
            g[j] += (p[0] - l1.exp() / d) * xt[j];
            g[k + j] += (p[1] - l2.exp() / d) * xt[j];
        }
    }
    g
}

#[test]
fn alpha_root_matches_generic_root_finder() {
    let covs = covariates(250, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<[f64; 3]> = (0..250)
        .map(|_| {
            let v = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let s: f64 = v.iter().sum();
            [v[0] / s, v[1] / s, v[2] / s]
        })
        .collect();
    let post = PosteriorMatrix { rows: rows.clone() };
    let (a1, a2) = m_step_alpha(&post, &covs, (&[0.0; 3], &[0.0; 3]), &EmConfig::default()).unwrap();
    let ours: Vec<f64> = a1.into_iter().chain(a2).collect();
    let g: f64 = alpha_score(&rows, &covs, &ours)
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    assert!(g < 1e-8, "score norm {g}");

    // Newton on a finite-difference Jacobian of the independent score.
    let mut x = vec![0.0; 6];
    for _ in 0..50 {
        let f0 = alpha_score(&rows, &covs, &x);
        let jac: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                (0..6)
                    .map(|j| {
                        let mut xp = x.clone();
                        let mut xm = x.clone();
                        xp[j] += 1e-6;
                        xm[j] -= 1e-6;
                        (alpha_score(&rows, &covs, &xp)[i] - alpha_score(&rows, &covs, &xm)[i]) / 2e-6
                    })
                    .collect()
            })
            .collect();
        let step = common::solve_dense(jac, f0.iter().map(|v| -v).collect());
        x.iter_mut().zip(&step).for_each(|(a, s)| *a += s);
        if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-13 {
            break;
        }
    }
    assert!(common::max_abs_diff(&ours, &x) < 1e-7, "{ours:?} vs {x:?}");
}

#[test]
fn eta_with_all_zero_design_stays_at_zero() {
    let recs: Vec<Record> = (0..40)
        .map(|i| {
            let t = 0.1 + i as f64 * 0.05;
            match i % 3 {
                0 => Record::new(i.to_string(), false, t, true, t + 0.5, true, vec![0.0]).unwrap(),
                1 => Record::new(i.to_string(), false, t, false, t, true, vec![0.0]).unwrap(),
                _ => Record::new(i.to_string(), false, t, false, t, false, vec![0.0]).unwrap(),
            }
        })
        .collect();
    let data = Dataset::new(recs).unwrap();
    let post = PosteriorMatrix {
        rows: vec![[0.5, 0.25, 0.25]; 40],
    };
    let params = ParameterSet::zeros(1);
    let eta = m_step_eta(EtaBlock::M1, &data, &post, &params, &EmConfig::default()).unwrap();
    assert_eq!(eta, vec![0.0, 0.0]);
}

#[test]
fn exact_e_step_at_truth_recovers_illness_hazard() {
    let spec = GenerativeSpec::reference(10_000, 31);
    let sim = generate::<f64>(&spec).unwrap();
    let h = common::truth_hazards(&spec, &sim.data);
    let post = e_step(&sim.data, &spec.params, &h).unwrap();
    let est = m_step_hazards(&sim.data, &post, &spec.params).unwrap();
    let mut z: Vec<f64> = sim.data.records().iter().filter(|r| r.delta_m).map(|r| r.z).collect();
    z.sort_by(f64::total_cmp);
    let (lo, hi) = (z[z.len() / 10], z[9 * z.len() / 10]);
    for k in 0..=50 {
        let t = lo + (hi - lo) * k as f64 / 50.0;
        let c = est.illness.eval(t);
        assert!((c - t).abs() <= 0.1 * t, "Λ₁({t}) = {c}");
    }
}

#[test]
fn reference_fit_converges_and_is_self_consistent() {
    let sim = generate::<f64>(&GenerativeSpec::reference(1000, 41)).unwrap();
    let cfg = EmConfig::default();
    let f = fit(&sim.data, &cfg).unwrap();
    assert!(f.converged, "{} iterations", f.n_iters);
    let start = StartValues {
        params: f.params.clone(),
        hazards: Some(f.hazards.clone()),
    };
    let once = fit_from(
        &sim.data,
        &EmConfig {
            max_outer_iters: 1,
            ..cfg.clone()
        },
        Some(&start),
    )
    .unwrap();
    let change = common::max_abs_diff(&once.params.to_vec(), &f.params.to_vec());
    assert!(change < cfg.tol, "one more iteration moved parameters by {change}");
}

fn assert_ascent(trace: &[f64]) {
    for (k, w) in trace.windows(2).enumerate() {
        assert!(w[1] >= w[0] - 1e-10, "iteration {k}: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn ascent_on_random_small_datasets() {
    for seed in 0..8 {
        let sim = match generate::<f64>(&common::random_spec(200, 500 + seed)) {
            Ok(s) => s,
            Err(e) => panic!("generation failed: {e}"),
        };
        match fit(&sim.data, &EmConfig::default()) {
            Ok(f) => assert_ascent(&f.loglik_trace),
            // Degenerate draws must fail with a typed error, never silently.
            Err(Error::MissingEvents(_) | Error::RankDeficient(_) | Error::SolverFailure { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}

#[test]
fn generalized_em_single_step_also_ascends() {
    let sim = generate::<f64>(&GenerativeSpec::reference(300, 51)).unwrap();
    let cfg = EmConfig {
        single_newton_step: true,
        ..EmConfig::default()
    };
    let f = fit(&sim.data, &cfg).unwrap();
    assert!(f.converged);
    assert_ascent(&f.loglik_trace);
    let full = fit(&sim.data, &EmConfig::default()).unwrap();
    assert!((f.loglik() - full.loglik()).abs() < 1e-3);
}

#[test]
fn extra_starts_never_lower_the_likelihood() {
    let sim = generate::<f64>(&GenerativeSpec::reference(300, 61)).unwrap();
    let plain = fit(&sim.data, &EmConfig::default()).unwrap();
    let multi = fit(
        &sim.data,
        &EmConfig {
            extra_starts: 2,
            seed: Some(9),
            ..EmConfig::default()
        },
    )
    .unwrap();
    assert!(multi.loglik() >= plain.loglik() - 1e-9);
}
