use proptest::prelude::*;
use stratmed::io::{
    default_names, read_dataset, read_fit_artifact, read_hazards, read_posteriors, read_trace, write_dataset,
    write_hazards, write_json, write_posteriors, write_trace, FitArtifact,
};
use stratmed::likelihood::observed_loglik;
use stratmed::model::Dataset;
use stratmed::simulate::{generate, GenerativeSpec};
use stratmed::{fit, EmConfig, Record};

fn record() -> impl Strategy<Value = (f64, f64, bool, bool, bool, Vec<f64>)> {
    (
        1e-6..50.0f64,
        1e-6..50.0f64,
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
        prop::collection::vec(-1e6..1e6f64, 3),
    )
}

proptest! {
    #[test]
    fn datasets_survive_a_csv_round_trip(rows in prop::collection::vec(record(), 1..40)) {
        let recs: Vec<Record> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (z, gap, dm, dt, a, x))| {
                let y = if dm { z + gap } else { z };
                Record::new(format!("s{i}"), a, z, dm, y, dt, x).unwrap()
            })
            .collect();
        let data = Dataset::new(recs).unwrap();
        let names = vec!["age".to_string(), "psa".into(), "grade".into()];
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data, &names).unwrap();
        let back = read_dataset::<f64, _>(buf.as_slice()).unwrap();
        prop_assert_eq!(back.covariate_names, names);
        prop_assert_eq!(back.data.records(), data.records());
    }
}

#[test]
fn a_saved_fit_reproduces_its_likelihood() {
    let sim = generate::<f64>(&GenerativeSpec::reference(400, 31)).unwrap();
    let cfg = EmConfig::default();
    let f = fit(&sim.data, &cfg).unwrap();
    let names = default_names(2);

    let mut art = Vec::new();
    write_json(&mut art, &FitArtifact::new(&f, sim.data.len(), &names, &cfg)).unwrap();
    let mut haz = Vec::new();
    write_hazards(&mut haz, &f.hazards).unwrap();
    let mut post = Vec::new();
    write_posteriors(&mut post, &sim.data, &f.posteriors).unwrap();
    let mut trace = Vec::new();
    write_trace(&mut trace, &f.loglik_trace).unwrap();

    let art = read_fit_artifact::<f64, _>(art.as_slice()).unwrap();
    let h = read_hazards::<f64, _>(haz.as_slice()).unwrap();
    assert_eq!(art.params, f.params);
    assert_eq!(art.covariate_names, names);
    assert_eq!(h, f.hazards);
    let (ids, p) = read_posteriors::<f64, _>(post.as_slice()).unwrap();
    assert_eq!(ids.len(), sim.data.len());
    assert_eq!(p, f.posteriors);
    assert_eq!(read_trace::<f64, _>(trace.as_slice()).unwrap(), f.loglik_trace);

    let ll = observed_loglik(&sim.data, &art.params, &h).unwrap().total;
    assert_eq!(ll, f.loglik());
    assert_eq!(art.loglik, f.loglik());
}

#[test]
fn single_precision_fit_tracks_double_precision() {
    let spec = GenerativeSpec::reference(500, 13);
    let d64 = generate::<f64>(&spec).unwrap().data;
    let recs32: Vec<_> = d64
        .records()
        .iter()
        .map(|r| {
            let x = r.x.iter().map(|&v| v as f32).collect();
            stratmed::SubjectRecord::new(r.id.clone(), r.treated, r.z as f32, r.delta_m, r.y as f32, r.delta_t, x)
                .unwrap()
        })
        .collect();
    let d32 = Dataset::new(recs32).unwrap();
    let f64_fit = fit(&d64, &EmConfig::default()).unwrap();
    let cfg32 = EmConfig {
        tol: 1e-4,
        inner_newton_tol: 1e-4,
        ..EmConfig::default()
    };
    let f32_fit = fit(&d32, &cfg32).unwrap();
    assert!(f32_fit.converged);
    for (a, b) in f64_fit.params.to_vec().iter().zip(f32_fit.params.to_vec()) {
        assert!((a - b as f64).abs() < 0.05, "{a} vs {b}");
    }
}
