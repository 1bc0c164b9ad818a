//! File formats for the analysis CSV and every artifact the commands write.
//! Every writer has a matching reader.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! write/read cycle is exact.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::effects::{EffectCurve, EffectName};
use crate::em::EmConfig;
use crate::error::{Error, Result};
use crate::model::{
    BaselineHazard, Dataset, FittedModel, HazardScale, Hazards, ParameterSet, PosteriorMatrix, Stratum, SubjectRecord,
};
use crate::scalar::Scalar;
use crate::simulate::TruthRecord;

pub const SCHEMA_VERSION: u32 = 1;

const FIXED_COLUMNS: [&str; 6] = ["id", "a", "z", "delta_m", "y", "delta_t"];

fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).unwrap_or_else(T::nan)
}

fn parse_flag(s: &str, col: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("{col} must be 0 or 1, found '{other}'")),
    }
}

fn parse_num(s: &str, col: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{col} is not a number: '{}'", s.trim()))?;
    if !v.is_finite() {
        return Err(format!("{col} must be finite"));
    }
    Ok(v)
}

/// An analysis dataset together with its covariate column names.
#[derive(Debug, Clone)]
pub struct Table<T> {
    pub data: Dataset<T>,
    pub covariate_names: Vec<String>,
}

/// Reads `id,a,z,delta_m,y,delta_t,<covariates...>`. Every bad row is
/// reported; rows are numbered from 1 at the first data line.
pub fn read_dataset<T: Scalar, R: Read>(reader: R) -> Result<Table<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < FIXED_COLUMNS.len() || names[..6] != FIXED_COLUMNS {
        return Err(Error::InvalidInput(format!(
            "header must start with {}, found {}",
            FIXED_COLUMNS.join(","),
            names.join(",")
        )));
    }
    let covariate_names: Vec<String> = names[6..].iter().map(|s| s.to_string()).collect();
    let p = covariate_names.len();
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let rownum = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                issues.push((rownum, e.to_string()));
                continue;
            }
        };
        let parsed = (|| -> std::result::Result<SubjectRecord<T>, String> {
            if row.len() != 6 + p {
                return Err(format!("expected {} fields, found {}", 6 + p, row.len()));
            }
            let id = row[0].to_string();
            if id.is_empty() {
                return Err("id is empty".into());
            }
            let x = (0..p)
                .map(|j| parse_num(&row[6 + j], &covariate_names[j]).map(lit::<T>))
                .collect::<std::result::Result<Vec<T>, String>>()?;
            let rec = SubjectRecord {
                id,
                treated: parse_flag(&row[1], "a")?,
                z: lit(parse_num(&row[2], "z")?),
                delta_m: parse_flag(&row[3], "delta_m")?,
                y: lit(parse_num(&row[4], "y")?),
                delta_t: parse_flag(&row[5], "delta_t")?,
                x,
            };
            rec.check()?;
            Ok(rec)
        })();
        match parsed {
            Ok(r) => records.push(r),
            Err(m) => issues.push((rownum, m)),
        }
    }
    if !issues.is_empty() {
        return Err(Error::InvalidRows(issues));
    }
    if records.is_empty() {
        return Err(Error::InvalidInput("input has no data rows".into()));
    }
    Ok(Table {
        data: Dataset::new(records)?,
        covariate_names,
    })
}

pub fn read_dataset_path<T: Scalar>(path: &Path) -> Result<Table<T>> {
    let f = File::open(path).map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    read_dataset(f)
}

/// Default covariate names `x1..xp`.
pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

pub fn write_dataset<T: Scalar, W: Write>(writer: W, data: &Dataset<T>, covariate_names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(covariate_names.iter().cloned());
    w.write_record(&header)?;
    for r in data.records() {
        let mut row = vec![
            r.id.clone(),
            u8::from(r.treated).to_string(),
            r.z.to_string(),
            u8::from(r.delta_m).to_string(),
            r.y.to_string(),
            u8::from(r.delta_t).to_string(),
        ];
        row.extend(r.x.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Sentinel in the `m_true` column for an intermediate event that can never
/// happen.
pub const NEVER: &str = "NA";

#[derive(Serialize, Deserialize)]
struct TruthRow {
    id: String,
    u: u8,
    m_true: String,
    t_true: f64,
}

pub fn write_truth<W: Write>(writer: W, truth: &[TruthRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in truth {
        w.serialize(TruthRow {
            id: t.id.clone(),
            u: t.stratum as u8,
            m_true: t.m.map_or_else(|| NEVER.to_string(), |m| m.to_string()),
            t_true: t.t,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth<R: Read>(reader: R) -> Result<Vec<TruthRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<TruthRow>().enumerate() {
        let row = row?;
        let m = if row.m_true == NEVER {
            None
        } else {
            Some(row.m_true.parse::<f64>().map_err(|_| Error::Validation {
                row: i + 1,
                message: format!("bad m_true '{}'", row.m_true),
            })?)
        };
        out.push(TruthRecord {
            id: row.id,
            stratum: Stratum::try_from(row.u)?,
            m,
            t: row.t_true,
        });
    }
    Ok(out)
}

/// Contents of `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitArtifact<T> {
    pub schema_version: u32,
    pub n_subjects: usize,
    pub covariate_names: Vec<String>,
    pub params: ParameterSet<T>,
    pub converged: bool,
    pub n_iters: usize,
    pub loglik: T,
    pub clamp_events: usize,
    pub warnings: Vec<String>,
    pub config: EmConfig,
    /// Present when covariates were standardized before fitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Standardization>,
}

impl<T: Scalar> FitArtifact<T> {
    pub fn new(fit: &FittedModel<T>, n_subjects: usize, covariate_names: &[String], config: &EmConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_subjects,
            covariate_names: covariate_names.to_vec(),
            params: fit.params.clone(),
            converged: fit.converged,
            n_iters: fit.n_iters,
            loglik: fit.loglik(),
            clamp_events: fit.clamp_events,
            warnings: fit.warnings.clone(),
            config: config.clone(),
            standardization: None,
        }
    }
}

/// Column means and sample standard deviations used to put covariates on a
/// unit scale. Coefficients fitted on standardized covariates are per
/// standard deviation of the original column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardization {
    pub fn from_data<T: Scalar>(data: &Dataset<T>, names: &[String]) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(Error::InvalidInput("standardizing needs at least two subjects".into()));
        }
        let mut means = Vec::with_capacity(data.p());
        let mut sds = Vec::with_capacity(data.p());
        for j in 0..data.p() {
            let col: Vec<f64> = data.records().iter().map(|r| r.x[j].as_f64()).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt();
            if !(sd > 0.0) {
                let name = names.get(j).map_or("?", String::as_str);
                return Err(Error::InvalidInput(format!(
                    "covariate '{name}' is constant and cannot be standardized"
                )));
            }
            means.push(m);
            sds.push(sd);
        }
        Ok(Self { means, sds })
    }

    pub fn profile<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(&v, (&m, &s))| lit((v.as_f64() - m) / s))
            .collect()
    }

    pub fn apply<T: Scalar>(&self, data: &Dataset<T>) -> Result<Dataset<T>> {
        if data.p() != self.means.len() {
            return Err(Error::InvalidInput(format!(
                "standardization has {} columns, data has {}",
                self.means.len(),
                data.p()
            )));
        }
        let recs = data
            .records()
            .iter()
            .map(|r| SubjectRecord {
                x: self.profile(&r.x),
                ..r.clone()
            })
            .collect();
        Dataset::new(recs)
    }
}

pub fn write_json<S: Serialize, W: Write>(mut writer: W, value: &S) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writeln!(writer)?;
    Ok(())
}

pub fn read_fit_artifact<T: Scalar, R: Read>(reader: R) -> Result<FitArtifact<T>> {
    let art: FitArtifact<T> = serde_json::from_reader(reader)?;
    if art.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "fit.json has schema version {}, this build reads {SCHEMA_VERSION}",
            art.schema_version
        )));
    }
    art.params.validate()?;
    Ok(art)
}

#[derive(Serialize, Deserialize)]
struct HazardRow {
    scale: String,
    time: f64,
    jump: f64,
    cumulated: f64,
}

pub fn write_hazards<T: Scalar, W: Write>(writer: W, h: &Hazards<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for scale in HazardScale::ALL {
        let b = h.get(scale);
        for k in 0..b.len() {
            w.serialize(HazardRow {
                scale: scale.as_str().to_string(),
                time: b.jump_times()[k].as_f64(),
                jump: b.jump_sizes()[k].as_f64(),
                cumulated: b.cumulative()[k].as_f64(),
            })?;
        }
    }
    // an empty file still needs its header
    if HazardScale::ALL.iter().all(|s| h.get(*s).is_empty()) {
        w.write_record(["scale", "time", "jump", "cumulated"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_hazards<T: Scalar, R: Read>(reader: R) -> Result<Hazards<T>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut cols: [(Vec<T>, Vec<T>); 3] = Default::default();
    for (i, row) in rdr.deserialize::<HazardRow>().enumerate() {
        let row = row?;
        let scale = HazardScale::parse(&row.scale).ok_or_else(|| Error::Validation {
            row: i + 1,
            message: format!("unknown hazard scale '{}'", row.scale),
        })?;
        let k = scale as usize;
        cols[k].0.push(lit(row.time));
        cols[k].1.push(lit(row.jump));
    }
    let [il, gp, dr] = cols;
    Ok(Hazards {
        illness: BaselineHazard::new(HazardScale::Illness, il.0, il.1)?,
        gap: BaselineHazard::new(HazardScale::Gap, gp.0, gp.1)?,
        direct: BaselineHazard::new(HazardScale::Direct, dr.0, dr.1)?,
    })
}

#[derive(Serialize, Deserialize)]
struct PosteriorRow {
    id: String,
    p1: f64,
    p2: f64,
    p3: f64,
}

pub fn write_posteriors<T: Scalar, W: Write>(writer: W, data: &Dataset<T>, post: &PosteriorMatrix<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "p1", "p2", "p3"])?;
    for (r, p) in data.records().iter().zip(&post.rows) {
        w.write_record([r.id.clone(), p[0].to_string(), p[1].to_string(), p[2].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_posteriors<T: Scalar, R: Read>(reader: R) -> Result<(Vec<String>, PosteriorMatrix<T>)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for row in rdr.deserialize::<PosteriorRow>() {
        let row = row?;
        ids.push(row.id);
        rows.push([lit(row.p1), lit(row.p2), lit(row.p3)]);
    }
    Ok((ids, PosteriorMatrix { rows }))
}

pub fn write_trace<T: Scalar, W: Write>(writer: W, trace: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iter", "loglik"])?;
    for (i, v) in trace.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<T: Scalar, R: Read>(reader: R) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize::<(usize, f64)>().map(|r| Ok(lit(r?.1))).collect()
}

/// Formats a covariate profile as `x1=0.5;x2=0.5`.
pub fn profile_label<T: Scalar>(names: &[String], x: &[T]) -> String {
    names
        .iter()
        .zip(x)
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Parses `x1=0.5,x2=0.5` (or `;`-separated) against the covariate names.
/// Every covariate must be given exactly once.
pub fn parse_profile<T: Scalar>(s: &str, names: &[String]) -> Result<Vec<T>> {
    let mut out: Vec<Option<T>> = vec![None; names.len()];
    for part in s.split([',', ';']).map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("profile entry '{part}' is not name=value")))?;
        let j = names
            .iter()
            .position(|n| n == k.trim())
            .ok_or_else(|| Error::InvalidInput(format!("profile names unknown covariate '{}'", k.trim())))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("profile value '{}' is not a number", v.trim())))?;
        if out[j].replace(lit(v)).is_some() {
            return Err(Error::InvalidInput(format!(
                "covariate '{}' given twice in profile",
                names[j]
            )));
        }
    }
    out.iter()
        .enumerate()
        .map(|(j, v)| {
            v.ok_or_else(|| {
                Error::InvalidInput(format!(
                    "profile has {} of {} covariates; missing '{}'",
                    out.iter().filter(|v| v.is_some()).count(),
                    names.len(),
                    names[j]
                ))
            })
        })
        .collect()
}

pub const MARGINAL: &str = "marginal";

#[derive(Debug, Serialize, Deserialize)]
struct EffectRow {
    name: String,
    t: f64,
    value: f64,
    se: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    profile: String,
}

fn finite(v: Option<f64>) -> Option<f64> {
    v.filter(|x| x.is_finite())
}

/// Long format: one row per curve and grid point.
pub fn write_effects<T: Scalar, W: Write>(writer: W, curves: &[EffectCurve<T>], names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut any = false;
    for c in curves {
        let profile = c
            .profile
            .as_ref()
            .map_or_else(|| MARGINAL.to_string(), |x| profile_label(names, x));
        for (k, (&t, &v)) in c.grid.iter().zip(&c.values).enumerate() {
            let band = |b: &Option<Vec<T>>| finite(b.as_ref().map(|b| b[k].as_f64()));
            w.serialize(EffectRow {
                name: c.name.as_str().to_string(),
                t: t.as_f64(),
                value: v.as_f64(),
                se: band(&c.se),
                ci_low: band(&c.ci_low),
                ci_high: band(&c.ci_high),
                profile: profile.clone(),
            })?;
            any = true;
        }
    }
    if !any {
        w.write_record(["name", "t", "value", "se", "ci_low", "ci_high", "profile"])?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_effects`]. Consecutive rows with the same name and
/// profile form one curve. A band column is `None` when every entry of the
/// curve is empty; otherwise empty cells read as NaN.
pub fn read_effects<T: Scalar, R: Read>(reader: R, names: &[String]) -> Result<Vec<EffectCurve<T>>> {
    // curve and profile label, plus the raw band cells
    type Partial<T> = (EffectCurve<T>, String, [Vec<Option<f64>>; 3]);
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out: Vec<Partial<T>> = Vec::new();
    for (i, row) in rdr.deserialize::<EffectRow>().enumerate() {
        let row = row?;
        let name = EffectName::parse(&row.name).ok_or_else(|| Error::Validation {
            row: i + 1,
            message: format!("unknown effect '{}'", row.name),
        })?;
        let same = matches!(out.last(), Some((c, p, _)) if c.name == name && *p == row.profile);
        if !same {
            let profile = if row.profile == MARGINAL {
                None
            } else {
                Some(parse_profile(&row.profile, names)?)
            };
            out.push((
                EffectCurve::new(name, vec![], vec![], profile),
                row.profile.clone(),
                Default::default(),
            ));
        }
        let (c, _, bands) = out.last_mut().expect("just pushed");
        c.grid.push(lit(row.t));
        c.values.push(lit(row.value));
        bands[0].push(row.se);
        bands[1].push(row.ci_low);
        bands[2].push(row.ci_high);
    }
    Ok(out
        .into_iter()
        .map(|(mut c, _, [se, lo, hi])| {
            let col = |b: Vec<Option<f64>>| {
                b.iter()
                    .any(Option::is_some)
                    .then(|| b.iter().map(|v| v.map_or_else(T::nan, lit)).collect())
            };
            c.se = col(se);
            c.ci_low = col(lo);
            c.ci_high = col(hi);
            c
        })
        .collect())
}

/// One row of `survival_overlay.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub arm: u8,
    pub t: f64,
    pub model_avg: f64,
    pub km: f64,
}

pub fn write_overlay<W: Write>(writer: W, rows: &[OverlayRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(["arm", "t", "model_avg", "km"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_overlay<R: Read>(reader: R) -> Result<Vec<OverlayRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// One parameter row of `bootstrap.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub parameter: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
}

pub fn write_param_rows<W: Write>(writer: W, rows: &[ParamRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_param_rows<R: Read>(reader: R) -> Result<Vec<ParamRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Writes to `path`, creating parent directories.
pub fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(File::create(path)?))
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))
}

pub const FIT_JSON: &str = "fit.json";
pub const HAZARDS_CSV: &str = "hazards.csv";
pub const POSTERIORS_CSV: &str = "posteriors.csv";
pub const TRACE_CSV: &str = "loglik_trace.csv";

/// Writes `fit.json`, `hazards.csv`, `posteriors.csv` and
/// `loglik_trace.csv` into `dir`.
pub fn save_fit<T: Scalar>(
    dir: &Path,
    fit: &FittedModel<T>,
    data: &Dataset<T>,
    covariate_names: &[String],
    config: &EmConfig,
    standardization: Option<&Standardization>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut art = FitArtifact::new(fit, data.len(), covariate_names, config);
    art.standardization = standardization.cloned();
    write_json(create(&dir.join(FIT_JSON))?, &art)?;
    write_hazards(create(&dir.join(HAZARDS_CSV))?, &fit.hazards)?;
    write_posteriors(create(&dir.join(POSTERIORS_CSV))?, data, &fit.posteriors)?;
    write_trace(create(&dir.join(TRACE_CSV))?, &fit.loglik_trace)?;
    Ok(())
}

/// Rebuilds a fitted model from the files written by [`save_fit`].
/// Posteriors and the trace are optional.
pub fn load_fit<T: Scalar>(dir: &Path) -> Result<(FitArtifact<T>, FittedModel<T>)> {
    let art: FitArtifact<T> = read_fit_artifact(open(&dir.join(FIT_JSON))?)?;
    let hazards = read_hazards(open(&dir.join(HAZARDS_CSV))?)?;
    let post_path = dir.join(POSTERIORS_CSV);
    let posteriors = if post_path.exists() {
        read_posteriors(open(&post_path)?)?.1
    } else {
        PosteriorMatrix { rows: Vec::new() }
    };
    let trace_path = dir.join(TRACE_CSV);
    let mut loglik_trace = if trace_path.exists() {
        read_trace(open(&trace_path)?)?
    } else {
        Vec::new()
    };
    if loglik_trace.is_empty() {
        loglik_trace.push(art.loglik);
    }
    let fit = FittedModel {
        params: art.params.clone(),
        hazards,
        posteriors,
        loglik_trace,
        converged: art.converged,
        n_iters: art.n_iters,
        clamp_events: art.clamp_events,
        warnings: art.warnings.clone(),
    };
    Ok((art, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "id,a,z,delta_m,y,delta_t,x1,x2\n\
        s1,1,0.5,1,2,1,0.1,0.2\n\
        s2,0,3,0,3,0,-1,0.5\n";

    #[test]
    fn dataset_round_trip() {
        let t = read_dataset::<f64, _>(GOOD.as_bytes()).unwrap();
        assert_eq!(t.covariate_names, vec!["x1", "x2"]);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &t.data, &t.covariate_names).unwrap();
        let back = read_dataset::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(back.data, t.data);
    }

    #[test]
    fn every_bad_row_is_reported() {
        let src = "id,a,z,delta_m,y,delta_t,x1\n\
            a,1,0.5,1,2,1,0\n\
            b,1,3,1,2,1,0\n\
            c,2,1,0,1,0,0\n\
            d,0,1,0,1,0,abc\n";
        match read_dataset::<f64, _>(src.as_bytes()) {
            Err(Error::InvalidRows(rows)) => {
                let nums: Vec<usize> = rows.iter().map(|r| r.0).collect();
                assert_eq!(nums, vec![2, 3, 4]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_is_checked() {
        assert!(read_dataset::<f64, _>("id,a,z,y\n1,0,1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn profile_parsing() {
        let names = default_names(2);
        assert_eq!(parse_profile::<f64>("x1=0.5,x2=-1", &names).unwrap(), vec![0.5, -1.0]);
        assert_eq!(parse_profile::<f64>("x2=3;x1=1", &names).unwrap(), vec![1.0, 3.0]);
        assert!(parse_profile::<f64>("x1=0.5", &names).is_err());
        assert!(parse_profile::<f64>("x1=0.5,x3=1", &names).is_err());
        assert!(parse_profile::<f64>("x1=0.5,x1=1", &names).is_err());
    }

    #[test]
    fn hazards_round_trip() {
        let h = Hazards {
            illness: BaselineHazard::new(HazardScale::Illness, vec![0.1, 0.3], vec![0.5, 0.25]).unwrap(),
            gap: BaselineHazard::new(HazardScale::Gap, vec![1.0 / 3.0], vec![0.7]).unwrap(),
            direct: BaselineHazard::new(HazardScale::Direct, vec![2.0], vec![0.1]).unwrap(),
        };
        let mut buf = Vec::new();
        write_hazards(&mut buf, &h).unwrap();
        assert_eq!(read_hazards::<f64, _>(buf.as_slice()).unwrap(), h);
    }

    #[test]
    fn effects_round_trip() {
        let names = default_names(1);
        let mut c = EffectCurve::new(EffectName::Nie1, vec![0.0, 1.0], vec![0.0, -0.1], Some(vec![0.25]));
        c.se = Some(vec![f64::NAN, 0.02]);
        let m = EffectCurve::new(EffectName::Nde1Marginal, vec![0.0], vec![0.0], None);
        let mut buf = Vec::new();
        write_effects(&mut buf, &[c.clone(), m.clone()], &names).unwrap();
        let back = read_effects::<f64, _>(buf.as_slice(), &names).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1], m);
        assert_eq!(back[0].values, c.values);
        assert_eq!(back[0].profile, c.profile);
        assert!(back[0].se.as_ref().unwrap()[0].is_nan());
        assert_eq!(back[0].se.as_ref().unwrap()[1], 0.02);
    }

    #[test]
    fn truth_sentinel() {
        let tr = vec![
            TruthRecord {
                id: "1".into(),
                stratum: Stratum::NeverSusceptible,
                m: None,
                t: 2.5,
            },
            TruthRecord {
                id: "2".into(),
                stratum: Stratum::AlwaysSusceptible,
                m: Some(0.75),
                t: 3.0,
            },
        ];
        let mut buf = Vec::new();
        write_truth(&mut buf, &tr).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains(",NA,"));
        assert_eq!(read_truth(buf.as_slice()).unwrap(), tr);
    }
}
