use std::collections::BTreeMap;
use std::fs;

use reconlab::config::ConfigError;
use reconlab::jobs::{run_jobs, Job, RowStatus};
use reconlab::{execute, fit_reconnection_scaling, run_experiment, ExperimentConfig, ExperimentKind, ScalingModel};

const SMALL_ADVDIFF: &str = "\
kind = advdiff_rate
grid = 16, 16
etas = 1e-1, 3e-2, 1e-2, 3e-3
dt = 0.05
horizon = 4
horizon_policy = tdis
";

fn small(out: &std::path::Path, threads: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(SMALL_ADVDIFF).unwrap();
    cfg.out = out.to_path_buf();
    cfg.threads = threads;
    cfg
}

#[test]
fn resolved_config_round_trips() {
    let cfg = ExperimentConfig::parse(SMALL_ADVDIFF).unwrap();
    let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(again.to_text(), cfg.to_text());
}

#[test]
fn malformed_configs_name_the_problem() {
    type Check = dyn Fn(&ConfigError) -> bool;
    let cases: &[(&str, &Check)] = &[
        ("kind = advdiff_rate\nfoo = 1\n", &|e| matches!(e, ConfigError::UnknownKey { key, line: 2 } if key == "foo")),
        ("kind = advdiff_rate\ndt = 1\ndt = 2\n", &|e| matches!(e, ConfigError::Duplicate { key, line: 3 } if key == "dt")),
        ("kind = advdiff_rate\njust words\n", &|e| matches!(e, ConfigError::Syntax { line: 2, .. })),
        ("dt = 0.1\n", &|e| matches!(e, ConfigError::Missing(k) if *k == "kind")),
        ("kind = advdiff_rate\ndt = -1\n", &|e| matches!(e, ConfigError::Value { key, .. } if key == "dt")),
        ("kind = advdiff_rate\ngrid = 12, 16\n", &|e| matches!(e, ConfigError::Value { key, .. } if key == "grid")),
        ("kind = advdiff_rate\netas = 1e-2, 1e-3, 9e-4\n", &|e| matches!(e, ConfigError::Value { key, .. } if key == "etas")),
        ("kind = nonsense\n", &|e| matches!(e, ConfigError::Value { key, .. } if key == "kind")),
        ("kind = advdiff_rate\nflow = swirl\n", &|e| matches!(e, ConfigError::Value { key, .. } if key == "flow")),
    ];
    for (text, check) in cases {
        let err = ExperimentConfig::parse(text).and_then(|c| c.validate().map(|_| c)).unwrap_err();
        assert!(check(&err), "{text:?} gave {err:?}");
    }
}

#[test]
fn synthetic_scaling_recovers_models() {
    let etas = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    for model in ScalingModel::ALL {
        let t: Vec<f64> = etas.iter().map(|&e| 0.7 * model.regressor(e)).collect();
        let fit = fit_reconnection_scaling(&etas, &t).unwrap();
        assert_eq!(fit.best, model);
        assert!((fit.model(model).c2 - 0.7).abs() < 1e-10);
        assert!(fit.model(model).r2 > 1.0 - 1e-12);
    }
}

#[test]
fn failing_job_does_not_abort_the_sweep() {
    let jobs: Vec<Job> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&e| Job::eta("g", e)).collect();
    let rows = run_jobs(&jobs, |job| {
        let eta = job.eta.unwrap();
        if eta == 1e-2 {
            panic!("solver blew up");
        }
        if eta == 1e-3 {
            return Err("did not converge".into());
        }
        Ok(BTreeMap::from([("x".to_string(), eta)]))
    });
    assert_eq!(rows.len(), 4);
    let status: Vec<RowStatus> = rows.iter().map(|r| r.status).collect();
    assert_eq!(status, [RowStatus::Ok, RowStatus::Failed, RowStatus::Failed, RowStatus::Ok]);
    assert!(rows[1].error.as_deref().unwrap().contains("solver blew up"));
    assert_eq!(rows[3].get("x"), Some(1e-4));
}

#[test]
fn sweep_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_experiment(&small(&a, 1)).unwrap();
    run_experiment(&small(&b, 2)).unwrap();
    let ra = fs::read(a.join("rows.csv")).unwrap();
    let rb = fs::read(b.join("rows.csv")).unwrap();
    assert_eq!(ra, rb);
    for f in ["config.resolved", "summary.json"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let resolved = fs::read_to_string(a.join("config.resolved")).unwrap();
    let mut back = ExperimentConfig::parse(&resolved).unwrap();
    back.threads = 1;
    assert_eq!(back, small(&a, 1));
}

#[test]
fn small_sweep_reports_rates() {
    let dir = tempfile::tempdir().unwrap();
    let res = execute(&small(dir.path(), 0)).unwrap();
    assert_eq!(res.kind, ExperimentKind::AdvdiffRate);
    assert_eq!(res.failed_rows(), 0);
    assert_eq!(res.rows_in("advdiff").count(), 4);
    let fit = res.fit("t_dis_exponent").unwrap();
    assert!(fit.slope > 0.0 && fit.slope < 1.0, "{}", fit.slope);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::parse(&fs::read_to_string(&path).unwrap()).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 4);
}
