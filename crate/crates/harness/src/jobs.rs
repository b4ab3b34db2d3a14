//! Isolated parallel jobs and the rows they produce.

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One job's outcome. `values` is empty for failed rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub group: String,
    pub label: String,
    pub eta: Option<f64>,
    pub status: RowStatus,
    pub error: Option<String>,
    pub values: BTreeMap<String, f64>,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

/// A unit of work: group, label and the parameter it sweeps.
#[derive(Clone, Debug)]
pub struct Job {
    pub group: String,
    pub label: String,
    pub eta: Option<f64>,
}

impl Job {
    pub fn eta(group: &str, eta: f64) -> Self {
        Job {
            group: group.to_string(),
            label: format!("eta={eta}"),
            eta: Some(eta),
        }
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".to_string()
    }
}

/// Runs `work` for every job in parallel. Errors and panics become failed
/// rows; the returned rows keep the order of `jobs`.
pub fn run_jobs<F>(jobs: &[Job], work: F) -> Vec<Row>
where
    F: Fn(&Job) -> Result<BTreeMap<String, f64>, String> + Sync,
{
    jobs.par_iter()
        .map(|job| {
            let outcome = catch_unwind(AssertUnwindSafe(|| work(job)))
                .unwrap_or_else(|p| Err(format!("panic: {}", panic_message(p))));
            let (status, error, values) = match outcome {
                Ok(v) => (RowStatus::Ok, None, v),
                Err(e) => {
                    log::warn!("job {} {} failed: {e}", job.group, job.label);
                    (RowStatus::Failed, Some(e), BTreeMap::new())
                }
            };
            Row {
                group: job.group.clone(),
                label: job.label.clone(),
                eta: job.eta,
                status,
                error,
                values,
            }
        })
        .collect()
}

/// `(η, value)` over the successful rows of `group` that carry `key`.
pub fn column(rows: &[Row], group: &str, key: &str) -> (Vec<f64>, Vec<f64>) {
    rows.iter()
        .filter(|r| r.is_ok() && r.group == group)
        .filter_map(|r| Some((r.eta?, r.get(key)?)))
        .unzip()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Header comments, then `group,label,eta,status,error` followed by every
/// value key in sorted order.
pub fn write_rows_csv<W: Write>(w: &mut W, header: &[String], rows: &[Row]) -> std::io::Result<()> {
    for h in header {
        writeln!(w, "# {h}")?;
    }
    let mut keys: Vec<&String> = rows.iter().flat_map(|r| r.values.keys()).collect();
    keys.sort();
    keys.dedup();
    write!(w, "group,label,eta,status,error")?;
    for k in &keys {
        write!(w, ",{k}")?;
    }
    writeln!(w)?;
    for r in rows {
        let eta = r.eta.map(|e| e.to_string()).unwrap_or_default();
        let status = match r.status {
            RowStatus::Ok => "ok",
            RowStatus::Failed => "failed",
        };
        let err = r.error.as_deref().map(csv_field).unwrap_or_default();
        write!(w, "{},{},{eta},{status},{err}", csv_field(&r.group), csv_field(&r.label))?;
        for k in &keys {
            match r.values.get(*k) {
                Some(v) => write!(w, ",{v}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_and_errors_are_isolated() {
        let jobs: Vec<Job> = [1e-1, 1e-2, 1e-3].iter().map(|&e| Job::eta("main", e)).collect();
        let rows = run_jobs(&jobs, |job| {
            let eta = job.eta.unwrap();
            if eta == 1e-2 {
                panic!("boom at {eta}");
            }
            if eta == 1e-3 {
                return Err("not reached".into());
            }
            Ok(BTreeMap::from([("t".to_string(), 1.0 / eta)]))
        });
        assert_eq!(rows.len(), 3);
        assert!(rows[0].is_ok() && rows[0].get("t") == Some(10.0));
        assert_eq!(rows[1].status, RowStatus::Failed);
        assert!(rows[1].error.as_deref().unwrap().contains("boom at 0.01"));
        assert_eq!(rows[2].error.as_deref(), Some("not reached"));
        let (e, t) = column(&rows, "main", "t");
        assert_eq!((e, t), (vec![0.1], vec![10.0]));
    }

    #[test]
    fn csv_layout() {
        let rows = vec![
            Row {
                group: "main".into(),
                label: "eta=0.1".into(),
                eta: Some(0.1),
                status: RowStatus::Ok,
                error: None,
                values: BTreeMap::from([("b".into(), 2.0), ("a".into(), 1.5)]),
            },
            Row {
                group: "main".into(),
                label: "eta=0.01".into(),
                eta: Some(0.01),
                status: RowStatus::Failed,
                error: Some("x, y".into()),
                values: BTreeMap::new(),
            },
        ];
        let mut buf = Vec::new();
        write_rows_csv(&mut buf, &["seeds=7".into()], &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let want = "# seeds=7\ngroup,label,eta,status,error,a,b\n\
                    main,eta=0.1,0.1,ok,,1.5,2\nmain,eta=0.01,0.01,failed,\"x, y\",,\n";
        assert_eq!(text, want);
    }
}
