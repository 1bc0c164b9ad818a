use std::path::{Path, PathBuf};

use serde::Serialize;
use stratmed::effects::{default_grid, EffectCurve};
use stratmed::error::{Error, Result};
use stratmed::inference::{
    bootstrap, effect_curves, label_swap_sensitivity, wald_tests, BootstrapConfig, EffectRequest, IntervalKind,
    SensitivitySummary,
};
use stratmed::io::{self, OverlayRow, ParamRow, Standardization, Table};
use stratmed::likelihood::{kaplan_meier, population_average_survival};
use stratmed::simulate::{generate, Censoring, GenerativeSpec};
use stratmed::study::{effect_table, parameter_table, run_study, StudyConfig, SummaryRow};
use stratmed::{fit_from, Data, EmConfig, Fit, StartValues};

use crate::{Command, EmArgs, GridArgs, TableKind};

impl EmArgs {
    fn config(&self, seed: Option<u64>) -> Result<EmConfig> {
        let cfg = EmConfig {
            tol: self.tol,
            max_outer_iters: self.max_iters,
            extra_starts: self.extra_starts,
            seed,
            ..EmConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `start:end:count` or `t1,t2,...` into a non-decreasing grid of
/// non-negative times.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: &str| Error::InvalidInput(format!("bad --grid '{spec}': {m}"));
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:end:count"));
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad("start is not a number"))?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad("end is not a number"))?;
        let k: usize = parts[2].trim().parse().map_err(|_| bad("count is not an integer"))?;
        match k {
            0 => return Err(bad("count must be positive")),
            1 => vec![a],
            _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
        }
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("entries must be numbers")))
            .collect::<Result<_>>()?
    };
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(bad("times must be finite and non-negative"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(bad("times must be non-decreasing"));
    }
    Ok(grid)
}

fn grid_for(args: &GridArgs, data: &Data) -> Result<Vec<f64>> {
    match &args.grid {
        Some(s) => parse_grid(s),
        None => Ok(default_grid(data, 100)),
    }
}

fn check_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::InvalidInput(format!(
            "input file {} does not exist",
            path.display()
        )));
    }
    Ok(())
}

fn check_fit_dir(dir: &Option<PathBuf>) -> Result<()> {
    if let Some(d) = dir {
        if !d.join(io::FIT_JSON).is_file() || !d.join(io::HAZARDS_CSV).is_file() {
            return Err(Error::InvalidInput(format!(
                "{} does not contain {} and {}",
                d.display(),
                io::FIT_JSON,
                io::HAZARDS_CSV
            )));
        }
    }
    Ok(())
}

/// Reads the analysis CSV, standardizing covariates on request.
fn load(input: &Path, standardize: bool) -> Result<(Table<f64>, Option<Standardization>)> {
    check_input(input)?;
    let mut table = io::read_dataset_path::<f64>(input)?;
    if !standardize {
        return Ok((table, None));
    }
    let st = Standardization::from_data(&table.data, &table.covariate_names)?;
    table.data = st.apply(&table.data)?;
    Ok((table, Some(st)))
}

/// Loads the fit from `dir` or fits `data` afresh.
fn obtain_fit(
    dir: &Option<PathBuf>,
    data: &Data,
    names: &[String],
    st: Option<&Standardization>,
    em: &EmConfig,
) -> Result<Fit> {
    match dir {
        Some(d) => {
            let (art, fit) = io::load_fit::<f64>(d)?;
            if art.covariate_names != names {
                return Err(Error::InvalidInput(format!(
                    "fit covariates [{}] differ from input covariates [{}]",
                    art.covariate_names.join(","),
                    names.join(",")
                )));
            }
            if art.standardization.as_ref() != st {
                return Err(Error::InvalidInput(
                    "fit and input disagree on covariate standardization (--standardize)".into(),
                ));
            }
            Ok(fit)
        }
        None => {
            let fit = stratmed::fit(data, em)?;
            report_fit(&fit);
            Ok(fit)
        }
    }
}

fn report_fit(fit: &Fit) {
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "EM {} after {} iterations, log-likelihood {:.6}",
        if fit.converged { "converged" } else { "stopped" },
        fit.n_iters,
        fit.loglik()
    );
}

/// Parsed profiles as `(given, used)`: the values as typed and the values
/// on the fitting scale.
fn profiles(specs: &[String], names: &[String], st: Option<&Standardization>) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    specs
        .iter()
        .map(|s| {
            let x = io::parse_profile(s, names)?;
            let used = st.map_or(x.clone(), |st| st.profile(&x));
            Ok((x, used))
        })
        .collect()
}

/// Relabels curves with the profiles as the user typed them.
fn given_profiles(mut curves: Vec<EffectCurve<f64>>, pairs: &[(Vec<f64>, Vec<f64>)]) -> Vec<EffectCurve<f64>> {
    for c in &mut curves {
        if let Some(p) = &c.profile {
            if let Some((given, _)) = pairs.iter().find(|(_, used)| used == p) {
                c.profile = Some(given.clone());
            }
        }
    }
    curves
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

fn write_versioned<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    io::write_json(
        io::create(path)?,
        &Versioned {
            schema_version: io::SCHEMA_VERSION,
            body,
        },
    )
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit {
            input,
            standardize,
            out_dir,
            warm_start,
            seed,
            em,
        } => {
            check_fit_dir(&warm_start)?;
            let em = em.config(Some(seed))?;
            let (table, st) = load(&input, standardize)?;
            let start = match &warm_start {
                Some(d) => {
                    let (_, prev) = io::load_fit::<f64>(d)?;
                    Some(StartValues {
                        params: prev.params,
                        hazards: Some(prev.hazards),
                    })
                }
                None => None,
            };
            let fit = fit_from(&table.data, &em, start.as_ref())?;
            report_fit(&fit);
            io::save_fit(&out_dir, &fit, &table.data, &table.covariate_names, &em, st.as_ref())?;
            if !fit.converged {
                return Err(Error::SolverFailure {
                    context: "EM".into(),
                    residual: f64::NAN,
                });
            }
            Ok(())
        }

        Command::Effects {
            input,
            standardize,
            fit_dir,
            out_dir,
            profile,
            bootstrap_n,
            seed,
            grid,
            em,
        } => {
            check_fit_dir(&fit_dir)?;
            let em = em.config(None)?;
            let (table, st) = load(&input, standardize)?;
            let pairs = profiles(&profile, &table.covariate_names, st.as_ref())?;
            let req = EffectRequest {
                grid: grid_for(&grid, &table.data)?,
                profiles: pairs.iter().map(|p| p.1.clone()).collect(),
                marginal: true,
            };
            let fit = obtain_fit(&fit_dir, &table.data, &table.covariate_names, st.as_ref(), &em)?;
            let curves: Vec<EffectCurve<f64>> = if bootstrap_n > 0 {
                let mut cfg = BootstrapConfig::new(bootstrap_n, seed);
                cfg.effects = Some(req);
                let boot = bootstrap(&table.data, &fit, &em, &cfg)?;
                if boot.n_failed > 0 {
                    eprintln!("warning: {} of {} resamples failed", boot.n_failed, bootstrap_n);
                }
                boot.effects
            } else {
                effect_curves(&req, &fit, &table.data)?
            };
            let curves = given_profiles(curves, &pairs);
            io::write_effects(
                io::create(&out_dir.join("effects.csv"))?,
                &curves,
                &table.covariate_names,
            )
        }

        Command::Diagnose {
            input,
            standardize,
            fit_dir,
            out_dir,
            grid,
            em,
        } => {
            check_fit_dir(&fit_dir)?;
            let em = em.config(None)?;
            let (table, st) = load(&input, standardize)?;
            let grid = grid_for(&grid, &table.data)?;
            let fit = obtain_fit(&fit_dir, &table.data, &table.covariate_names, st.as_ref(), &em)?;
            let rows = survival_overlay(&fit, &table.data, &grid)?;
            io::write_overlay(io::create(&out_dir.join("survival_overlay.csv"))?, &rows)
        }

        Command::Simulate {
            n,
            seed,
            out_dir,
            spec,
            censor_max,
            no_censoring,
        } => {
            let mut s = match spec {
                Some(p) => serde_json::from_reader::<_, GenerativeSpec>(io::open(&p)?)?,
                None => GenerativeSpec::reference(n, seed),
            };
            s.n = n;
            s.seed = seed;
            if let Some(max) = censor_max {
                s.censoring = Censoring::Uniform { max };
            }
            if no_censoring {
                s.censoring = Censoring::None;
            }
            let sim = generate::<f64>(&s)?;
            let names = io::default_names(s.covariates.len());
            io::write_dataset(io::create(&out_dir.join("data.csv"))?, &sim.data, &names)?;
            io::write_truth(io::create(&out_dir.join("truth.csv"))?, &sim.truth)
        }

        Command::Reproduce {
            table,
            n,
            replicates,
            bootstrap_n,
            seed,
            out_dir,
            em,
        } => {
            let mut cfg = StudyConfig::new(n, replicates, bootstrap_n, seed);
            cfg.em = em.config(None)?;
            cfg.effects = table == TableKind::Table2;
            let res = run_study(&cfg)?;
            let (rows, file, label) = match table {
                TableKind::Table1 => (parameter_table(&res), "table1.csv", "parameter"),
                TableKind::Table2 => (effect_table(&res), "table2.csv", "effect"),
            };
            write_summary(&out_dir.join(file), label, &rows)?;
            let mut w = csv::Writer::from_writer(io::create(&out_dir.join("failures.csv"))?);
            w.write_record(["replicate", "error"])?;
            for (r, e) in &res.failures {
                w.write_record([r.to_string(), e.clone()])?;
            }
            w.flush()?;
            println!("{} of {} replicates succeeded", res.outcomes.len(), replicates);
            if res.outcomes.len() < 2 {
                return Err(Error::SolverFailure {
                    context: format!("{} replicates failed", res.failures.len()),
                    residual: f64::NAN,
                });
            }
            Ok(())
        }

        Command::Sensitivity {
            input,
            standardize,
            out_dir,
            em,
        } => {
            let em = em.config(None)?;
            let (table, _) = load(&input, standardize)?;
            let s: SensitivitySummary = label_swap_sensitivity(&table.data, &em)?;
            println!(
                "average stratum-2 weight: original {:.4}, swapped {:.4}",
                s.original_avg_w2, s.swapped_avg_w2
            );
            write_versioned(&out_dir.join("sensitivity.json"), &s)
        }

        Command::Bootstrap {
            input,
            standardize,
            fit_dir,
            out_dir,
            bootstrap_n,
            seed,
            percentile,
            warm_start,
            profile,
            grid,
            em,
        } => {
            check_fit_dir(&fit_dir)?;
            let em = em.config(None)?;
            let (table, st) = load(&input, standardize)?;
            let pairs = profiles(&profile, &table.covariate_names, st.as_ref())?;
            let profiles: Vec<Vec<f64>> = pairs.iter().map(|p| p.1.clone()).collect();
            let fit = obtain_fit(&fit_dir, &table.data, &table.covariate_names, st.as_ref(), &em)?;
            let mut cfg = BootstrapConfig::new(bootstrap_n, seed);
            cfg.warm_start = warm_start;
            if percentile {
                cfg.interval = IntervalKind::Percentile;
            }
            if !profiles.is_empty() || grid.grid.is_some() {
                cfg.effects = Some(EffectRequest {
                    grid: grid_for(&grid, &table.data)?,
                    profiles,
                    marginal: true,
                });
            }
            let boot = bootstrap(&table.data, &fit, &em, &cfg)?;
            let tests = wald_tests(&fit, &boot);
            let fin = |v: f64| v.is_finite().then_some(v);
            let rows: Vec<ParamRow> = tests
                .iter()
                .enumerate()
                .map(|(k, t)| ParamRow {
                    parameter: t.name.clone(),
                    estimate: t.estimate,
                    se: fin(t.se),
                    ci_low: fin(boot.ci_low[k]),
                    ci_high: fin(boot.ci_high[k]),
                    z: t.z,
                    p_value: t.p_value,
                })
                .collect();
            io::write_param_rows(io::create(&out_dir.join("bootstrap.csv"))?, &rows)?;
            write_versioned(&out_dir.join("bootstrap.json"), &boot)?;
            if !boot.effects.is_empty() {
                io::write_effects(
                    io::create(&out_dir.join("effects.csv"))?,
                    &given_profiles(boot.effects.clone(), &pairs),
                    &table.covariate_names,
                )?;
            }
            println!("{} resamples, {} failed", boot.n_resamples, boot.n_failed);
            Ok(())
        }
    }
}

/// Per-arm model-average and Kaplan-Meier survival on the grid points inside
/// the joint hazard support.
pub fn survival_overlay(fit: &Fit, data: &Data, grid: &[f64]) -> Result<Vec<OverlayRow>> {
    let mut rows = Vec::new();
    for treated in [false, true] {
        let arm: Vec<_> = data.records().iter().filter(|r| r.treated == treated).collect();
        if arm.is_empty() {
            continue;
        }
        let (times, events): (Vec<f64>, Vec<bool>) = arm.iter().filter(|r| r.y > 0.0).map(|r| (r.y, r.delta_t)).unzip();
        let km = kaplan_meier(&times, &events)?;
        let model = population_average_survival(fit, data, treated, grid)?;
        for (&t, &m) in model.grid.iter().zip(&model.values) {
            rows.push(OverlayRow {
                arm: u8::from(treated),
                t,
                model_avg: m,
                km: km.eval(t),
            });
        }
    }
    Ok(rows)
}

fn write_summary(path: &Path, label: &str, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(io::create(path)?);
    w.write_record([label, "truth", "bias", "se", "see", "cp", "replicates"])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.truth.to_string(),
            r.bias.to_string(),
            r.se.to_string(),
            r.see.to_string(),
            r.cp.to_string(),
            r.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
