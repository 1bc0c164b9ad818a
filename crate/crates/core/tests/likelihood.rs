mod common;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use stratmed::likelihood::{kaplan_meier, observed_loglik, population_average_survival};
use stratmed::model::{stratum_survival, Dataset, ParameterSet, Stratum};
use stratmed::simulate::{generate, GenerativeSpec};
use stratmed::{fit, EmConfig, Record};

#[test]
fn loglik_is_invariant_to_subject_order() {
    let sim = generate::<f64>(&GenerativeSpec::reference(400, 6)).unwrap();
    let f = fit(&sim.data, &EmConfig::default()).unwrap();
    let mut recs = sim.data.clone().into_records();
    recs.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let shuffled = Dataset::new(recs).unwrap();
    let a = observed_loglik(&sim.data, &f.params, &f.hazards).unwrap();
    let b = observed_loglik(&shuffled, &f.params, &f.hazards).unwrap();
    assert!((a.total - b.total).abs() < 1e-12 * a.total.abs());
}

#[test]
fn contributions_resum_to_total() {
    let sim = generate::<f64>(&GenerativeSpec::reference(400, 7)).unwrap();
    let f = fit(&sim.data, &EmConfig::default()).unwrap();
    let mut p = f.params.clone();
    p.eta_t3[0] += 0.7;
    p.alpha2[1] -= 0.4;
    let br = observed_loglik(&sim.data, &p, &f.hazards).unwrap();
    let resummed: f64 = br.log_contrib.iter().map(|l| l.exp().ln()).sum();
    assert!((resummed - br.total).abs() < 1e-10 * br.total.abs());
    let plain: f64 = br.log_contrib.iter().sum();
    assert!((plain - br.total).abs() < 1e-12 * br.total.abs());
}

#[test]
fn truth_beats_perturbed_parameters_on_average() {
    let mut diff = 0.0;
    for seed in 0..20 {
        let spec = GenerativeSpec::reference(500, 100 + seed);
        let sim = generate::<f64>(&spec).unwrap();
        let h = common::truth_hazards(&spec, &sim.data);
        let truth = observed_loglik(&sim.data, &spec.params, &h).unwrap().total;
        let shifted: Vec<f64> = spec.params.to_vec().iter().map(|v| v + 0.3).collect();
        let p = ParameterSet::from_slice(2, &shifted).unwrap();
        diff += truth - observed_loglik(&sim.data, &p, &h).unwrap().total;
    }
    assert!(diff > 0.0, "average gain {}", diff / 20.0);
}

#[test]
fn zeroed_covariates_reduce_to_intercept_only() {
    let sim = generate::<f64>(&GenerativeSpec::reference(600, 9)).unwrap();
    let strip = |keep: bool| {
        let recs = sim
            .data
            .records()
            .iter()
            .map(|r| Record {
                x: if keep { vec![0.0; 2] } else { vec![] },
                ..r.clone()
            })
            .collect();
        Dataset::new(recs).unwrap()
    };
    let cfg = EmConfig::default();
    let zeroed = fit(&strip(true), &cfg).unwrap();
    let bare = fit(&strip(false), &cfg).unwrap();
    assert!((zeroed.loglik() - bare.loglik()).abs() < 1e-8 * bare.loglik().abs());
    for (z, b) in zeroed.params.blocks().iter().zip(bare.params.blocks()) {
        assert!((z[0] - b[0]).abs() < 1e-6, "{z:?} vs {b:?}");
        assert!(z[1..].iter().all(|&v| v == 0.0));
    }
}

#[test]
fn kaplan_meier_tracks_unit_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let times: Vec<f64> = (0..1000).map(|_| Exp1.sample(&mut rng)).collect();
    let km = kaplan_meier(&times, &vec![true; 1000]).unwrap();
    let mut sup: f64 = 0.0;
    for (&t, &s) in km.times.iter().zip(&km.survival) {
        // Check both sides of each step.
        let before = km.eval(t - 1e-12);
        sup = sup.max((s - (-t).exp()).abs()).max((before - (-t).exp()).abs());
    }
    assert!(sup < 0.06, "sup distance {sup}");
}

#[test]
fn population_average_starts_at_one_and_collapses_to_one_stratum() {
    let sim = generate::<f64>(&GenerativeSpec::reference(500, 12)).unwrap();
    let mut f = fit(&sim.data, &EmConfig::default()).unwrap();
    let grid: Vec<f64> = (0..30).map(|k| k as f64 * 0.2).collect();
    for a in [false, true] {
        let s = population_average_survival(&f, &sim.data, a, &grid).unwrap();
        assert_eq!(s.values[0], 1.0);
    }
    f.params.alpha1 = vec![-40.0, 0.0, 0.0];
    f.params.alpha2 = vec![-40.0, 0.0, 0.0];
    let s = population_average_survival(&f, &sim.data, true, &grid).unwrap();
    let arm: Vec<&Record> = sim.data.records().iter().filter(|r| r.treated).collect();
    for (k, &t) in s.grid.iter().enumerate() {
        let direct: f64 = arm
            .iter()
            .map(|r| stratum_survival(t, &r.x, true, Stratum::NeverSusceptible, &f).unwrap())
            .sum::<f64>()
            / arm.len() as f64;
        assert!((s.values[k] - direct).abs() < 1e-12);
    }
}
