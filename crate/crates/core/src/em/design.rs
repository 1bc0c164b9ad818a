//! Per-dataset quantities that stay fixed across EM iterations: the jump
//! grids of the three hazards, each subject's position on them, the design
//! rows and the risk-set orderings.

use crate::error::{Error, Result};
use crate::likelihood::SubjectHazardValues;
use crate::model::{BaselineHazard, Dataset, HazardScale, Hazards};
use crate::scalar::Scalar;

/// Distinct event times of one hazard and the event count at each.
#[derive(Debug, Clone)]
pub(crate) struct JumpGrid<T> {
    pub times: Vec<T>,
    pub counts: Vec<T>,
}

impl<T: Scalar> JumpGrid<T> {
    fn from_events(mut ev: Vec<T>) -> Self {
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        let mut times = Vec::new();
        let mut counts: Vec<T> = Vec::new();
        for t in ev {
            if times.last() == Some(&t) {
                *counts.last_mut().unwrap() += T::one();
            } else {
                times.push(t);
                counts.push(T::one());
            }
        }
        Self { times, counts }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }
}

/// One risk-set family: members sorted by their time, descending.
#[derive(Debug, Clone)]
pub(crate) struct RiskFamily<T> {
    pub order: Vec<usize>,
    pub times: Vec<T>,
    /// Event indicator per subject (all subjects, not only members).
    pub events: Vec<bool>,
}

impl<T: Scalar> RiskFamily<T> {
    fn new(times: Vec<T>, member: impl Fn(usize) -> bool, events: Vec<bool>) -> Self {
        let mut order: Vec<usize> = (0..times.len()).filter(|&i| member(i)).collect();
        order.sort_by(|&a, &b| times[b].partial_cmp(&times[a]).expect("finite times").then(a.cmp(&b)));
        Self { order, times, events }
    }

    /// `Σ_{j ∈ family, time_j ≥ t_k} exposure_j` for each jump `t_k`.
    pub fn at_risk_sums(&self, grid: &JumpGrid<T>, exposure: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); grid.len()];
        let mut acc = T::zero();
        let mut ptr = 0;
        for k in (0..grid.len()).rev() {
            let tk = grid.times[k];
            while ptr < self.order.len() && self.times[self.order[ptr]] >= tk {
                acc += exposure[self.order[ptr]];
                ptr += 1;
            }
            out[k] = acc;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Design<'a, T> {
    pub data: &'a Dataset<T>,
    pub grid1: JumpGrid<T>,
    pub grid2: JumpGrid<T>,
    pub grid3: JumpGrid<T>,
    /// Number of Λ₁ jumps ≤ Zᵢ.
    pub pos1: Vec<usize>,
    /// Number of Λ₂ jumps ≤ Vᵢ.
    pub pos2: Vec<usize>,
    /// Number of Λ₃ jumps ≤ Yᵢ.
    pub pos3: Vec<usize>,
    /// `(a, x)` rows.
    pub w_rows: Vec<Vec<T>>,
    /// `(1, x)` rows.
    pub xt_rows: Vec<Vec<T>>,
    pub fam1: RiskFamily<T>,
    pub fam2: RiskFamily<T>,
    pub fam3: RiskFamily<T>,
}

impl<'a, T: Scalar> Design<'a, T> {
    pub fn new(data: &'a Dataset<T>) -> Result<Self> {
        let recs = data.records();
        let grid1 = JumpGrid::from_events(recs.iter().filter(|r| r.delta_m).map(|r| r.z).collect());
        let grid2 = JumpGrid::from_events(
            recs.iter()
                .filter(|r| r.delta_m && r.delta_t)
                .map(|r| r.gap())
                .collect(),
        );
        let grid3 = JumpGrid::from_events(recs.iter().filter(|r| !r.delta_m && r.delta_t).map(|r| r.y).collect());
        if grid1.len() == 0 {
            return Err(Error::MissingEvents("intermediate"));
        }
        if grid2.len() == 0 {
            return Err(Error::MissingEvents("post-intermediate terminal"));
        }
        if grid3.len() == 0 {
            return Err(Error::MissingEvents("direct terminal"));
        }
        let count = |g: &JumpGrid<T>, t: T| g.times.partition_point(|&s| s <= t);
        let pos1 = recs.iter().map(|r| count(&grid1, r.z)).collect();
        let pos2 = recs
            .iter()
            .map(|r| if r.delta_m { count(&grid2, r.gap()) } else { 0 })
            .collect();
        let pos3 = recs.iter().map(|r| count(&grid3, r.y)).collect();
        let w_rows = recs
            .iter()
            .map(|r| {
                let mut v = Vec::with_capacity(r.x.len() + 1);
                v.push(if r.treated { T::one() } else { T::zero() });
                v.extend_from_slice(&r.x);
                v
            })
            .collect();
        let xt_rows = recs
            .iter()
            .map(|r| {
                let mut v = Vec::with_capacity(r.x.len() + 1);
                v.push(T::one());
                v.extend_from_slice(&r.x);
                v
            })
            .collect();
        // Λ₁ risk family excludes direct deaths (1 - Δᵀ + ΔᴹΔᵀ = 0).
        let fam1 = RiskFamily::new(
            recs.iter().map(|r| r.z).collect(),
            |i| recs[i].delta_m || !recs[i].delta_t,
            recs.iter().map(|r| r.delta_m).collect(),
        );
        let fam2 = RiskFamily::new(
            recs.iter().map(|r| r.gap()).collect(),
            |i| recs[i].delta_m,
            recs.iter().map(|r| r.delta_m && r.delta_t).collect(),
        );
        let fam3 = RiskFamily::new(
            recs.iter().map(|r| r.y).collect(),
            |i| !recs[i].delta_m,
            recs.iter().map(|r| !r.delta_m && r.delta_t).collect(),
        );
        Ok(Self {
            data,
            grid1,
            grid2,
            grid3,
            pos1,
            pos2,
            pos3,
            w_rows,
            xt_rows,
            fam1,
            fam2,
            fam3,
        })
    }

    /// Initial jumps `1/m_k` on every grid.
    pub fn initial_jumps(&self) -> [Vec<T>; 3] {
        let flat = |g: &JumpGrid<T>| vec![T::one() / T::from_usize(g.len()).unwrap(); g.len()];
        [flat(&self.grid1), flat(&self.grid2), flat(&self.grid3)]
    }

    /// Jumps on this design's grids that reproduce `h` at the grid times.
    /// Jumps where `h` does not increase fall back to `1/m_k`.
    pub fn jumps_from(&self, h: &Hazards<T>) -> [Vec<T>; 3] {
        let conv = |g: &JumpGrid<T>, bh: &BaselineHazard<T>| {
            let fallback = T::one() / T::from_usize(g.len()).unwrap();
            let mut prev = T::zero();
            g.times
                .iter()
                .map(|&t| {
                    let c = bh.eval(t);
                    let d = c - prev;
                    prev = c;
                    if d > T::zero() {
                        d
                    } else {
                        fallback
                    }
                })
                .collect()
        };
        [
            conv(&self.grid1, &h.illness),
            conv(&self.grid2, &h.gap),
            conv(&self.grid3, &h.direct),
        ]
    }

    pub fn hazards(&self, jumps: &[Vec<T>; 3]) -> Result<Hazards<T>> {
        Ok(Hazards {
            illness: BaselineHazard::new(HazardScale::Illness, self.grid1.times.clone(), jumps[0].clone())?,
            gap: BaselineHazard::new(HazardScale::Gap, self.grid2.times.clone(), jumps[1].clone())?,
            direct: BaselineHazard::new(HazardScale::Direct, self.grid3.times.clone(), jumps[2].clone())?,
        })
    }

    /// Per-subject hazard values from jump vectors on this design's grids.
    pub fn hazard_values(&self, jumps: &[Vec<T>; 3]) -> Vec<SubjectHazardValues<T>> {
        let cum = |j: &Vec<T>| {
            let mut acc = T::zero();
            let mut out = Vec::with_capacity(j.len() + 1);
            out.push(T::zero());
            for &v in j {
                acc += v;
                out.push(acc);
            }
            out
        };
        let (c1, c2, c3) = (cum(&jumps[0]), cum(&jumps[1]), cum(&jumps[2]));
        self.data
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let (p1, p2, p3) = (self.pos1[i], self.pos2[i], self.pos3[i]);
                SubjectHazardValues {
                    jump1: if r.delta_m { jumps[0][p1 - 1] } else { T::zero() },
                    cum1: c1[p1],
                    jump2: if r.delta_m && r.delta_t {
                        jumps[1][p2 - 1]
                    } else {
                        T::zero()
                    },
                    cum2: c2[p2],
                    jump3: if !r.delta_m && r.delta_t {
                        jumps[2][p3 - 1]
                    } else {
                        T::zero()
                    },
                    cum3: c3[p3],
                }
            })
            .collect()
    }
}
