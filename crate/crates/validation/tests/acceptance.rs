//! Acceptance checks. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test -p reconlab-validation --test acceptance -- 1 2 7`.

use std::f64::consts::{LN_2, PI};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reconlab::pipelines::reconnection::scan_datum;
use reconlab::{execute, run_spectral_selftest, ExperimentConfig, ExperimentKind, ScalingModel, SweepResult};
use reconlab_core::advdiff::{
    dissipation_time, extrude, rate_exponent, AdvDiffParams, AdvDiffStepper, FlowSpec,
};
use reconlab_core::mhd3d::{compose_reference, lifespan_bound, make_theorem_a_data, MhdParams, MhdStepper, TheoremAData};
use reconlab_core::spectral::{Grid, SpectralField, VectorField};
use reconlab_core::topology::{
    classify_zero, find_zeros, positivity_criterion, torus_distance, TrigInterpolant, ZeroClass, ZeroFinderConfig,
};

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn sweep(kind: ExperimentKind) -> Result<SweepResult, String> {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.out = std::env::temp_dir().join("reconlab-acceptance");
    execute(&cfg).map_err(|e| e.to_string())
}

fn all_of(checks: &[(bool, String)]) -> Verdict {
    let passed = checks.iter().all(|c| c.0);
    let detail = checks
        .iter()
        .map(|(ok, s)| if *ok { s.clone() } else { format!("[x] {s}") })
        .collect::<Vec<_>>()
        .join("; ");
    Verdict::new(passed, detail)
}

fn spectral_selftest() -> Verdict {
    let report = run_spectral_selftest(20_240_601);
    let checks: Vec<(bool, String)> = report
        .checks
        .iter()
        .map(|c| (c.passed, format!("{} {:.1e}/{:.1e}", c.name, c.worst, c.tolerance)))
        .collect();
    all_of(&checks)
}

fn heat_oracle() -> Verdict {
    let g = Grid::new(&[16, 16]).unwrap();
    let rho0 = SpectralField::from_fn(&g, |x| x[0].sin());
    let flow = FlowSpec::still();
    let etas = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let mut t_dis = Vec::new();
    let mut checks = Vec::new();
    for &eta in &etas {
        let exact = LN_2 / eta;
        let params = AdvDiffParams::new(eta, 1.0, exact * 1.01 + 2.0);
        let t = match dissipation_time(&rho0, &flow, &params) {
            Ok(t) => t,
            Err(e) => return Verdict::new(false, format!("eta {eta}: {e}")),
        };
        if [1e-2, 1e-3, 1e-4].contains(&eta) {
            let rel = (t - exact).abs() / exact;
            checks.push((rel <= 1e-3, format!("eta {eta:e} rel {rel:.1e}")));
        }
        t_dis.push(t);
    }
    match rate_exponent(&etas, &t_dis) {
        Ok(f) => checks.push(((f.exponent - 1.0).abs() <= 0.02, format!("exponent {:.4}", f.exponent))),
        Err(e) => checks.push((false, e.to_string())),
    }
    all_of(&checks)
}

fn advdiff_sweep() -> &'static Result<SweepResult, String> {
    static SWEEP: OnceLock<Result<SweepResult, String>> = OnceLock::new();
    SWEEP.get_or_init(|| sweep(ExperimentKind::AdvdiffRate))
}

fn enhanced_dissipation() -> Verdict {
    let res = match advdiff_sweep() {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, e.clone()),
    };
    // diagnostic only: slope of the asymptotic decay rate against η
    let rate = res.fit("rate_exponent").map_or(f64::NAN, |f| f.slope);
    match res.fit("t_dis_exponent") {
        Some(f) => Verdict::new(
            (0.4..=0.6).contains(&f.slope),
            format!(
                "t_dis exponent {:.3} (R² {:.4}, {} etas); decay-rate exponent {rate:.3}",
                f.slope, f.r2, f.rows
            ),
        ),
        None => Verdict::new(false, format!("no exponent fit: {:?}", res.notes)),
    }
}

fn hs_constant() -> Verdict {
    let res = match advdiff_sweep() {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, e.clone()),
    };
    let checks: Vec<(bool, String)> = [(0.0, 0.1), (1.0, 0.6), (2.0, 1.1)]
        .iter()
        .map(|&(s, max)| match res.fit(&format!("hs_{s}_growth")) {
            Some(f) => (f.slope <= max, format!("s={s} exponent {:.3} <= {max}", f.slope)),
            None => (false, format!("s={s} missing")),
        })
        .collect();
    all_of(&checks)
}

fn reference_fidelity() -> Verdict {
    let (n, dt, eta, steps) = (32, 1e-3, 1e-2, 1000);
    let d = TheoremAData::new(1.0, 0.0, [0.4, 1.3, 2.2]);
    let g2 = Grid::new(&[n, n]).unwrap();
    let b3 = SpectralField::from_fn(&g2, |x| d.b3(x));
    let flow = FlowSpec::kolmogorov(1.0, 1);
    let run = || -> reconlab_core::Result<(f64, f64)> {
        let mut state = compose_reference(&flow, &b3, n)?;
        let st = MhdStepper::new(state.grid(), &MhdParams::new(eta, dt, 1.0))?;
        st.advance(&mut state, steps)?;
        let mut oracle = AdvDiffStepper::new(&g2, &flow, &AdvDiffParams::new(eta, dt, 1.0))?;
        let planar = oracle.advance(&b3, 0.0, steps)?;
        let lifted = extrude(&planar, state.grid())?;
        let err = state.b.comp(2).axpy(-1.0, &lifted)?.sup_norm();
        let off = [state.u.comp(2), state.b.comp(0), state.b.comp(1)]
            .iter()
            .map(|f| f.sup_norm())
            .fold(0.0, f64::max);
        Ok((err, off))
    };
    match run() {
        Ok((err, off)) => all_of(&[
            (err < 1e-6, format!("b3 sup error {err:.2e}")),
            (off <= 1e-10, format!("off-manifold {off:.2e}")),
        ]),
        Err(e) => Verdict::new(false, e.to_string()),
    }
}

fn reconnection_sweep() -> Verdict {
    let res = match sweep(ExperimentKind::TheoremAReconnection) {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, e),
    };
    let mut checks = Vec::new();

    let cfg = ExperimentConfig::new(ExperimentKind::TheoremAReconnection);
    match scan_datum(&cfg) {
        Ok(scan) => match scan.nearest {
            Some((dist, z)) => {
                let want = [[0.0, cfg.eps, 0.0], [0.0, 0.0, cfg.eps], [-(3f64.sqrt()) * cfg.m, 0.0, 0.0]];
                let jac_err = (0..3)
                    .flat_map(|r| (0..3).map(move |c| (r, c)))
                    .map(|(r, c)| (z.jacobian[r][c] - want[r][c]).abs())
                    .fold(0.0, f64::max);
                checks.push((dist <= 1e-8, format!("zero at x* ({dist:.1e})")));
                checks.push((z.class == ZeroClass::Hyperbolic, format!("class {}", z.class.as_str())));
                checks.push((jac_err <= 1e-8, format!("jacobian c=-√3 ({jac_err:.1e})")));
            }
            None => checks.push((false, "no zero found".into())),
        },
        Err(e) => checks.push((false, e.to_string())),
    }

    let persistence: Vec<_> = res.rows_in("persistence").collect();
    let held = persistence.len() == cfg.etas.len()
        && persistence
            .iter()
            .all(|r| r.is_ok() && r.get("persistence_held") == Some(1.0) && r.get("persistence_window").unwrap_or(0.0) >= 0.1);
    checks.push((held, format!("persistence on [0, 0.1] for {} etas", persistence.len())));
    let spread = res.scalars.get("persistence_window_spread").copied().unwrap_or(f64::NAN);
    checks.push((spread < 0.2, format!("window spread {spread:.3}")));

    match res.scaling.get("flow") {
        Some(s) => {
            let (acc, dif) = (s.model(ScalingModel::Accelerated).r2, s.model(ScalingModel::Diffusive).r2);
            checks.push((acc > dif, format!("R² accelerated {acc:.4} vs diffusive {dif:.4}")));
        }
        None => checks.push((false, format!("no scaling fit: {:?}", res.notes))),
    }
    let positivity: Vec<_> = res.rows_in("positivity").collect();
    let faster = positivity.len() == cfg.etas.len()
        && positivity.iter().all(|r| r.get("still_ratio").is_some_and(|q| q > 1.0));
    let ratios: Vec<String> = positivity
        .iter()
        .map(|r| format!("{:.2}", r.get("still_ratio").unwrap_or(f64::NAN)))
        .collect();
    checks.push((faster, format!("U=0 over flow [{}]", ratios.join(", "))));
    let growing = res.scalars.get("still_ratio_growing") == Some(&1.0);
    checks.push((growing, "ratio grows as eta decreases".into()));
    all_of(&checks)
}

fn lifespan() -> Verdict {
    let mut checks = Vec::new();
    let mesh = |t: f64, n: usize| (0..=n).map(|i| t * i as f64 / n as f64).collect::<Vec<f64>>();
    for &(c, e) in &[(0.7, 2.0), (2.0, 1.0), (1.3, 0.05)] {
        let closed0 = 2.0 / (c * f64::sqrt(e));
        let t = mesh(1.5 * closed0, 1000);
        let got = lifespan_bound(e, &t, &vec![0.0; t.len()], c).map(|l| l.t_guaranteed);
        let err0 = got.map(|g| (g - closed0).abs()).unwrap_or(f64::INFINITY);
        let closed1 = (2.0 / c) * (1.0 + 1.0 / f64::sqrt(e)).ln();
        let t = mesh(1.5 * closed1, 300_000);
        let got = lifespan_bound(e, &t, &vec![1.0; t.len()], c).map(|l| l.t_guaranteed);
        let err1 = got.map(|g| (g - closed1).abs()).unwrap_or(f64::INFINITY);
        checks.push((err0 <= 1e-8 && err1 <= 1e-8, format!("C={c} e={e}: {err0:.0e}, {err1:.0e}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = mesh(30.0, 200);
    let mut violations = 0;
    for _ in 0..100 {
        let c = rng.gen_range(0.1..5.0);
        let e = 10f64.powf(rng.gen_range(-3.0..1.0));
        let f: Vec<f64> = (0..t.len()).map(|_| rng.gen_range(0.0..3.0)).collect();
        let more: Vec<f64> = f.iter().map(|v| v + rng.gen_range(0.0..1.0)).collect();
        let life = |e: f64, f: &[f64], c: f64| lifespan_bound(e, &t, f, c).unwrap().t_guaranteed;
        let base = life(e, &f, c);
        if life(e, &more, c) > base + 1e-12
            || life(e, &f, c * rng.gen_range(1.0..2.0)) > base + 1e-12
            || life(e * rng.gen_range(1.0..10.0), &f, c) > base + 1e-12
        {
            violations += 1;
        }
    }
    checks.push((violations == 0, format!("monotonicity violations {violations}/100")));
    all_of(&checks)
}

fn energy_balance() -> Verdict {
    let res = match sweep(ExperimentKind::SnsEnergy) {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, e),
    };
    let s = |k: &str| res.scalars.get(k).copied().unwrap_or(f64::NAN);
    let (r, se) = (s("energy_residual"), s("energy_std_error"));
    let mut checks = vec![
        (s("energy_paths") == 128.0, format!("{} paths at t={}", s("energy_paths"), s("energy_t"))),
        (r.abs() <= 3.0 * se, format!("residual {r:.3e} vs 3 SE {:.3e}", 3.0 * se)),
    ];
    for i in 0..3 {
        let z = s(&format!("isometry_{i}_z"));
        checks.push((z.abs() <= 3.0, format!("isometry {i} z {z:.2}")));
    }
    all_of(&checks)
}

fn stochastic_reconnection() -> Verdict {
    let res = match sweep(ExperimentKind::TheoremCStochastic) {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, e),
    };
    let mut checks = Vec::new();
    let rates: Vec<(f64, f64)> = res
        .rows_in("decay")
        .filter_map(|r| Some((r.eta?, r.get("rate")?)))
        .filter(|(e, _)| [1e-3, 1e-4, 1e-5].iter().any(|x| (e / x - 1.0).abs() < 1e-9))
        .collect();
    if rates.len() == 3 {
        let hi = rates.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let lo = rates.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let list: Vec<String> = rates.iter().map(|(e, r)| format!("{e:e}:{r:.3}")).collect();
        checks.push((hi / lo <= 2.0, format!("rate spread {:.2} [{}]", hi / lo, list.join(" "))));
    } else {
        checks.push((false, format!("{} of 3 decay rates", rates.len())));
    }
    match res.scaling.get("sns") {
        Some(s) => {
            let (fast, acc) = (s.model(ScalingModel::Fast).r2, s.model(ScalingModel::Accelerated).r2);
            checks.push((fast > acc, format!("R² fast {fast:.4} vs accelerated {acc:.4}")));
        }
        None => checks.push((false, format!("no scaling fit: {:?}", res.notes))),
    }
    all_of(&checks)
}

/// Random trigonometric field with modes `|kᵢ| ≤ 1` plus a constant offset.
fn random_field(g: &Grid, rng: &mut ChaCha8Rng, offset: [f64; 3], amp: f64) -> VectorField {
    let mut terms = Vec::new();
    for _ in 0..6 {
        let k: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(-1i32..=1) as f64);
        let a: [f64; 3] = [0, 1, 2].map(|_| amp * rng.gen_range(-1.0..1.0));
        terms.push((k, a, rng.gen_range(0.0..2.0 * PI)));
    }
    VectorField::from_fn(g, 3, |x| {
        let mut v = offset;
        for (k, a, ph) in &terms {
            let c = (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos();
            for i in 0..3 {
                v[i] += a[i] * c;
            }
        }
        v
    })
}

fn zero_finder_properties() -> Verdict {
    const FIELDS: usize = 200;
    let g = Grid::new(&[8, 8, 8]).unwrap();
    let periods = [2.0 * PI; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checks = Vec::new();

    let mut mismatched = 0;
    let mut zeros_seen = 0;
    for _ in 0..FIELDS {
        let b = random_field(&g, &mut rng, [0.0; 3], 1.0);
        let lambda = 10f64.powf(rng.gen_range(-3.0..3.0));
        let cfg = ZeroFinderConfig::default();
        let scaled_cfg = ZeroFinderConfig {
            zero_tol: cfg.zero_tol * lambda,
            ..cfg.clone()
        };
        let a = find_zeros(&b, &cfg).unwrap();
        let s = find_zeros(&b.scaled(lambda), &scaled_cfg).unwrap();
        zeros_seen += a.len();
        let same = a.len() == s.len()
            && a.iter().all(|z| {
                s.iter()
                    .any(|w| torus_distance(&z.location, &w.location, &periods) < 1e-7 && w.class == z.class)
            });
        if !same {
            mismatched += 1;
        }
    }
    checks.push((
        mismatched == 0,
        format!("scale invariance {mismatched}/{FIELDS} mismatches ({zeros_seen} zeros)"),
    ));

    let mut bad = 0;
    for _ in 0..FIELDS {
        let m = rng.gen_range(0.5..2.0);
        let b = random_field(&g, &mut rng, [0.0, 0.0, m], 0.1 * m);
        let p = positivity_criterion(b.comp(2), m, 0.01).unwrap();
        let zs = find_zeros(&b, &ZeroFinderConfig::for_datum(m, 0.0)).unwrap();
        if !p.holds || !zs.is_empty() {
            bad += 1;
        }
    }
    checks.push((bad == 0, format!("positivity => no zeros {bad}/{FIELDS} failures")));

    let mut bad = 0;
    for _ in 0..FIELDS {
        let m = rng.gen_range(0.5..2.0);
        let xs = [0, 1, 2].map(|_| rng.gen_range(0.0..2.0 * PI));
        let d = TheoremAData::new(m, 0.0, xs);
        let (_, b) = make_theorem_a_data(&d, &g).unwrap();
        let cfg = ZeroFinderConfig {
            scan_factor: 1,
            ..ZeroFinderConfig::for_datum(m, 0.0)
        };
        let it = TrigInterpolant::new(&b).unwrap();
        let line_ok = (0..8).all(|s| {
            let p = [xs[0], xs[1], s as f64 * 0.8];
            let (v, j) = it.eval(&p);
            v.iter().map(|c| c * c).sum::<f64>().sqrt() < 1e-12 && classify_zero(&j, &cfg.classify) == ZeroClass::Degenerate
        });
        let zs = find_zeros(&b, &cfg).unwrap();
        let planes = [xs[0], xs[0] + 2.0 * PI / 3.0];
        let on_planes = !zs.is_empty()
            && zs.iter().all(|z| {
                z.class == ZeroClass::Degenerate
                    && planes.iter().any(|p| {
                        let dd = (z.location[0] - p).rem_euclid(2.0 * PI);
                        dd.min(2.0 * PI - dd) < 1e-6
                    })
            });
        if !line_ok || !on_planes {
            bad += 1;
        }
    }
    checks.push((bad == 0, format!("eps=0 degenerate lines {bad}/{FIELDS} failures")));
    all_of(&checks)
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "spectral self-test", budget: Duration::from_secs(10), run: spectral_selftest },
        Criterion { id: 2, name: "heat oracle", budget: minutes(1), run: heat_oracle },
        Criterion { id: 3, name: "enhanced dissipation exponent", budget: minutes(15), run: enhanced_dissipation },
        Criterion { id: 4, name: "Hs decay constant", budget: minutes(20), run: hs_constant },
        Criterion { id: 5, name: "reference fidelity", budget: minutes(5), run: reference_fidelity },
        Criterion { id: 6, name: "desk-scale reconnection", budget: minutes(30), run: reconnection_sweep },
        Criterion { id: 7, name: "lifespan formula", budget: Duration::from_secs(10), run: lifespan },
        Criterion { id: 8, name: "stochastic energy balance", budget: minutes(10), run: energy_balance },
        Criterion { id: 9, name: "stochastic reconnection proxy", budget: minutes(30), run: stochastic_reconnection },
        Criterion { id: 10, name: "zero-finder properties", budget: minutes(2), run: zero_finder_properties },
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    // criterion 4 reuses the sweep of criterion 3; charge its time to both
    let mut sweep_time = Duration::ZERO;
    for c in criteria.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let v = (c.run)();
        let mut elapsed = start.elapsed();
        if c.id == 3 {
            sweep_time = elapsed;
        }
        if c.id == 4 && sweep_time.is_zero() {
            sweep_time = elapsed;
        } else if c.id == 4 {
            elapsed += sweep_time;
        }
        let in_time = elapsed <= c.budget;
        let passed = v.passed && in_time;
        if !passed {
            failed += 1;
        }
        println!(
            "{} {:>2} {}: {}; {:.1}s{}",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            v.detail,
            elapsed.as_secs_f64(),
            if in_time { String::new() } else { format!(" over {}s budget", c.budget.as_secs()) }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
