use std::io::Write;

use serde::{Deserialize, Serialize};

use super::interp::TrigInterpolant;
use super::zeros::{find_zeros, newton, torus_distance, ZeroFinderConfig, ZeroRecord};
use crate::error::{Error, Result};
use crate::spectral::{SpectralField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    /// `margin > slack·M`.
    pub holds: bool,
    /// `M - sup|b₃ - M|` on the oversampled grid.
    pub margin: f64,
    pub min_b3: f64,
}

/// Sufficient no-zero test `sup|b₃ - M| < M`, evaluated on a 2×-refined
/// grid. Reports true only when the margin exceeds `slack·M`.
pub fn positivity_criterion(b3: &SpectralField, m: f64, slack: f64) -> Result<Positivity> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::param(format!("M = {m} must be positive")));
    }
    if !(0.0..1.0).contains(&slack) {
        return Err(Error::param("slack must lie in [0, 1)"));
    }
    let fine = b3.grid().refined(2)?;
    let vals = b3.resample(&fine)?.to_physical();
    let dev = vals.iter().map(|v| (v - m).abs()).fold(0.0, f64::max);
    let min_b3 = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let margin = m - dev;
    Ok(Positivity {
        holds: margin > slack * m,
        margin,
        min_b3,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Criterion {
    StrictZeroSet(ZeroFinderConfig),
    PositivityB3 { slack: f64 },
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::StrictZeroSet(_) => "strict_zero_set",
            Criterion::PositivityB3 { .. } => "positivity_b3",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub t: f64,
    /// Only computed by the strict criterion.
    pub n_zeros: Option<usize>,
    pub min_abs_b: f64,
    pub margin: f64,
    pub first_zero: Option<ZeroRecord>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconnectionReport {
    pub criterion: String,
    pub m: f64,
    pub eta: Option<f64>,
    /// `None` when the criterion never held.
    pub t_first_no_zero: Option<f64>,
    pub rows: Vec<SnapshotRow>,
    /// Extra rows produced while bisecting.
    pub refinements: Vec<SnapshotRow>,
}

impl ReconnectionReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# criterion={}", self.criterion)?;
        writeln!(w, "# M={}", self.m)?;
        if let Some(eta) = self.eta {
            writeln!(w, "# eta={eta}")?;
        }
        match self.t_first_no_zero {
            Some(t) => writeln!(w, "# t_first_no_zero={t}")?,
            None => writeln!(w, "# t_first_no_zero=not observed")?,
        }
        writeln!(
            w,
            "t,criterion,n_zeros,min_abs_b,margin,first_zero_x1,first_zero_x2,first_zero_x3,class"
        )?;
        let mut rows: Vec<&SnapshotRow> = self.rows.iter().chain(&self.refinements).collect();
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        for r in rows {
            let nz = r.n_zeros.map(|n| n.to_string()).unwrap_or_default();
            let (x, class) = match &r.first_zero {
                Some(z) => (
                    z.location.map(|v| v.to_string()).join(","),
                    z.class.as_str().to_string(),
                ),
                None => (",,".to_string(), String::new()),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.t, self.criterion, nz, r.min_abs_b, r.margin, x, class
            )?;
        }
        Ok(())
    }
}

fn b3_of(b: &VectorField) -> Result<&SpectralField> {
    match b.ncomp() {
        1 => Ok(b.comp(0)),
        3 => Ok(b.comp(2)),
        n => Err(Error::param(format!("snapshot with {n} components"))),
    }
}

/// Applies `criterion` to one snapshot (`b₃` alone or the full field).
pub fn evaluate_snapshot(t: f64, b: &VectorField, criterion: &Criterion, m: f64) -> Result<SnapshotRow> {
    let slack = match criterion {
        Criterion::PositivityB3 { slack } => *slack,
        Criterion::StrictZeroSet(_) => 0.0,
    };
    let pos = positivity_criterion(b3_of(b)?, m, slack)?;
    match criterion {
        Criterion::PositivityB3 { .. } => Ok(SnapshotRow {
            t,
            n_zeros: None,
            min_abs_b: if b.ncomp() == 1 {
                pos.min_b3.abs()
            } else {
                min_magnitude(b)?
            },
            margin: pos.margin,
            first_zero: None,
            holds: pos.holds,
        }),
        Criterion::StrictZeroSet(cfg) => {
            if b.ncomp() != 3 {
                return Err(Error::param("the strict criterion needs the full 3D field"));
            }
            let zs = find_zeros(b, cfg)?;
            Ok(SnapshotRow {
                t,
                n_zeros: Some(zs.len()),
                min_abs_b: min_magnitude(b)?,
                margin: pos.margin,
                first_zero: zs.first().cloned(),
                holds: zs.is_empty(),
            })
        }
    }
}

fn min_magnitude(b: &VectorField) -> Result<f64> {
    let fine = b.grid().refined(2)?;
    let p = b.resample(&fine)?.to_physical();
    Ok((0..fine.len())
        .map(|i| p.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min))
}

/// Re-solves from a snapshot `(t0, b0)` up to a later time.
pub type Refine<'a> = &'a mut dyn FnMut(f64, &VectorField, f64) -> Result<VectorField>;

/// First snapshot time at which `criterion` holds, bisected between
/// snapshots to `rel_tol` when a re-solver is supplied.
pub fn reconnection_time(
    snapshots: &[(f64, VectorField)],
    criterion: &Criterion,
    m: f64,
    refine: Option<Refine<'_>>,
    rel_tol: f64,
) -> Result<ReconnectionReport> {
    if snapshots.is_empty() {
        return Err(Error::param("no snapshots"));
    }
    if snapshots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::param("snapshots must be strictly time-ordered"));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::param("rel_tol must be positive"));
    }
    let mut rows = Vec::with_capacity(snapshots.len());
    for (t, b) in snapshots {
        rows.push(evaluate_snapshot(*t, b, criterion, m)?);
    }
    let mut refinements = Vec::new();
    let first = rows.iter().position(|r| r.holds);
    let t_first = match (first, refine) {
        (None, _) => None,
        (Some(0), _) | (Some(_), None) => first.map(|j| rows[j].t),
        (Some(j), Some(refine)) => {
            let (t0, ref b0) = snapshots[j - 1];
            let (mut lo, mut hi) = (t0, snapshots[j].0);
            while hi - lo > rel_tol * hi {
                let mid = 0.5 * (lo + hi);
                let b = refine(t0, b0, mid)?;
                let row = evaluate_snapshot(mid, &b, criterion, m)?;
                if row.holds {
                    hi = mid;
                } else {
                    lo = mid;
                }
                refinements.push(row);
            }
            Some(hi)
        }
    };
    if t_first.is_none() {
        log::info!(
            "{} criterion not observed; final margin {}",
            criterion.name(),
            rows.last().map(|r| r.margin).unwrap_or(f64::NAN)
        );
    }
    Ok(ReconnectionReport {
        criterion: criterion.name().to_string(),
        m,
        eta: None,
        t_first_no_zero: t_first,
        rows,
        refinements,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Persistence {
    pub held: bool,
    pub track: Vec<(f64, [f64; 3])>,
    /// Last snapshot time with a tracked zero.
    pub last_good_time: f64,
}

/// Follows the zero starting at `x_star` through the snapshots, requiring it
/// to move less than `radius` between consecutive ones.
pub fn persistence_check(
    snapshots: &[(f64, VectorField)],
    x_star: [f64; 3],
    radius: f64,
    cfg: &ZeroFinderConfig,
) -> Result<Persistence> {
    if !(radius > 0.0) {
        return Err(Error::param("radius must be positive"));
    }
    if snapshots.is_empty() {
        return Err(Error::param("no snapshots"));
    }
    cfg.validate()?;
    let mut track = Vec::new();
    let mut x = x_star;
    let mut last_good = f64::NAN;
    for (t, b) in snapshots {
        let it = TrigInterpolant::new(b)?;
        let periods = b.grid().periods().to_vec();
        match newton(&it, x, cfg.zero_tol, cfg.max_iters) {
            Some(c) if torus_distance(&c.x, &x, &periods) <= radius => {
                x = c.x;
                last_good = *t;
                track.push((*t, x));
            }
            _ => {
                log::info!("zero track lost at t = {t} (last good {last_good})");
                return Ok(Persistence {
                    held: false,
                    track,
                    last_good_time: last_good,
                });
            }
        }
    }
    Ok(Persistence {
        held: true,
        track,
        last_good_time: last_good,
    })
}
