//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any criterion fails.
//!
//! Run with `cargo test --release -p holdclass-cli --test acceptance`.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use holdclass::bounds::{bound_contact, bound_contact_dmax, bound_reversible, bound_reversible_dmax, enumerate_classes};
use holdclass::census::{census_sweep, median_ratio_by_n, CensusSpec};
use holdclass::dynamics::{feature_row, holding_rate, signature, ThetaVector};
use holdclass::estimate::{class_rate_umvue, estimate_theta};
use holdclass::graph::{generate_complete, generate_er, generate_path, generate_star};
use holdclass::linalg::dot;
use holdclass::metrics::median;
use holdclass::simulate::{random_initial_configuration, rng_from_seed, sample_exponential, simulate, StopRule};
use holdclass::solve::{solve_lad, solve_nnls, solve_wls, ReducedSystem};
use holdclass::{Configuration, Estimator, Execution, Graph, Method, Model, ModelParams};

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn c1_bound_value() -> Outcome {
    let v = bound_contact(100);
    check(v == 166_751, format!("bound_contact(100) = {v}"), format!("bound_contact(100) = {v}, want 166751"))
}

fn c2_complete_graph() -> Outcome {
    for n in 2..=12 {
        let k = enumerate_classes(&generate_complete(n).unwrap(), Model::Contact).map_err(|e| e.to_string())?.k_exact;
        if k != n as u64 + 1 {
            return Err(format!("K_{n}: k_exact = {k}, want {}", n + 1));
        }
    }
    Ok("k_exact = n+1 for n = 2..12".into())
}

fn c3_census() -> Outcome {
    let spec = CensusSpec {
        seed: 20_240_601,
        ..CensusSpec::default()
    };
    let rows = census_sweep(&spec, Execution::Parallel).map_err(|e| e.to_string())?;
    let expected = spec.families.len() * spec.n_values.len() * spec.graphs_per_n * spec.models.len();
    if rows.len() != expected {
        return Err(format!("{} rows, want {expected}", rows.len()));
    }
    let mut violations = 0;
    for r in &rows {
        let c = &r.census;
        let ok = match c.model {
            Model::Contact => {
                let dm = bound_contact_dmax(c.n, c.dmax);
                (c.k_exact as u128) <= dm && dm <= bound_contact(c.n)
            }
            Model::Reversible => {
                let dm = bound_reversible_dmax(c.n, c.dmax);
                dm >= c.k_exact.into() && dm <= bound_reversible(c.n)
            }
        };
        if !ok || !(c.ratio > 0.0 && c.ratio <= 1.0) {
            violations += 1;
        }
    }
    let med = median_ratio_by_n(&rows, Model::Contact);
    let vals: Vec<f64> = med.values().copied().collect();
    let decreasing = vals.windows(2).all(|w| w[1] < w[0]);
    let trend = vals.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ");
    check(
        violations == 0 && decreasing,
        format!("{} rows, 0 violations, median contact ratio {trend}", rows.len()),
        format!("{violations} violations, strictly decreasing = {decreasing}, medians {trend}"),
    )
}

fn c4_reversible_edge() -> Outcome {
    for n in 2..=20usize {
        let v = bound_reversible_dmax(n, n - 1).to_string();
        if v != (1u64 << n).to_string() {
            return Err(format!("n = {n}: {v}"));
        }
    }
    Ok("bound_reversible_dmax(n, n-1) = 2^n for n = 2..20".into())
}

fn c5_single_node() -> Outcome {
    let g = Graph::from_edges(1, []).unwrap();
    let horizon = 1e5;
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, &(mu, beta)) in [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0)].iter().enumerate() {
        let p = ModelParams::new(Model::Contact, mu, beta, 1.0).unwrap();
        let tr = simulate(&g, &p, &Configuration::susceptible(1), StopRule::MaxTime(horizon), 500 + i as u64)
            .map_err(|e| e.to_string())?;
        let mut infected_time = 0.0;
        let mut state = tr.initial.get(0);
        let mut last = 0.0;
        for ev in &tr.events {
            if state {
                infected_time += ev.t - last;
            }
            state = ev.infected;
            last = ev.t;
        }
        if state {
            infected_time += tr.t_end - last;
        }
        let frac = infected_time / tr.t_end;
        let pi1 = beta / (beta + mu);
        let se = (2.0 * pi1 * (1.0 - pi1) / ((mu + beta) * horizon)).sqrt();
        let z = (frac - pi1) / se;
        ok &= z.abs() <= 3.0;
        lines.push(format!("(mu={mu},beta={beta}) frac={frac:.5} target={pi1:.5} z={z:+.2}"));
    }
    check(ok, lines.join("; "), lines.join("; "))
}

fn oracle_holding_rate(g: &Graph, x: &Configuration, p: &ModelParams) -> f64 {
    (0..g.n())
        .map(|k| {
            if x.get(k) {
                p.mu
            } else {
                let m = g.neighbors(k).iter().filter(|&&j| x.get(j)).count() as f64;
                match p.model {
                    Model::Contact => p.beta + p.delta * m,
                    Model::Reversible => p.beta * p.delta.powf(m),
                }
            }
        })
        .sum()
}

fn c6_class_rate_coherence() -> Outcome {
    let mut rng = rng_from_seed(6006);
    let mut violations = 0usize;
    let mut configs = 0usize;
    for t in 0..200 {
        let n = rng.random_range(1..=12usize);
        let g = generate_er(n, rng.random_range(0.1..0.9), 600 + t, false).map_err(|e| e.to_string())?;
        let model = if t % 2 == 0 { Model::Contact } else { Model::Reversible };
        let p = ModelParams::new(
            model,
            rng.random_range(0.05..3.0),
            rng.random_range(0.05..3.0),
            rng.random_range(0.05..3.0),
        )
        .unwrap();
        let theta = ThetaVector::from_params(&p, g.max_degree());
        let mut seen = HashMap::new();
        for code in 0..(1u64 << n) {
            let x = Configuration::from_index(code, n);
            let rate = holding_rate(&g, &x, &p);
            let oracle = oracle_holding_rate(&g, &x, &p);
            let sig = signature(&g, &x, model);
            let row = dot(&feature_row(&sig, n, g.max_degree()), theta.as_slice());
            if rel(rate, oracle) > 1e-12 || rel(row, rate) > 1e-12 {
                violations += 1;
            }
            let first = *seen.entry(sig).or_insert(rate);
            if rel(first, rate) > 1e-12 {
                violations += 1;
            }
            configs += 1;
        }
    }
    check(
        violations == 0,
        format!("200 triples, {configs} configurations, 0 violations"),
        format!("{violations} violations over {configs} configurations"),
    )
}

const SWEEP_LENGTHS: [usize; 4] = [1_000, 10_000, 100_000, 1_000_000];

struct Sweep {
    truth: Vec<[f64; 3]>,
    /// `est[seed][length]`, `None` when the estimate failed.
    est: Vec<Vec<Option<[f64; 3]>>>,
}

fn path_sweep() -> Result<Sweep, String> {
    let g = generate_path(5).unwrap();
    let mut truth = Vec::new();
    let mut est = Vec::new();
    for seed in 0..20u64 {
        let mut rng = rng_from_seed(7_000 + seed);
        let th = [0; 3].map(|_| rng.random_range(0.5..3.0));
        let p = ModelParams::new(Model::Contact, th[0], th[1], th[2]).unwrap();
        let x0 = random_initial_configuration(5, &mut rng);
        let full = simulate(&g, &p, &x0, StopRule::MaxEvents(*SWEEP_LENGTHS.last().unwrap()), 7_100 + seed)
            .map_err(|e| e.to_string())?;
        let row = SWEEP_LENGTHS
            .iter()
            .map(|&m| {
                estimate_theta(&full.truncated(m), &g, Model::Contact, Estimator::Mle, Method::Wls)
                    .ok()
                    .map(|e| [e.recovered.mu, e.recovered.beta, e.recovered.delta.unwrap_or(f64::NAN)])
            })
            .collect();
        truth.push(th);
        est.push(row);
    }
    Ok(Sweep { truth, est })
}

fn sweep_median(s: &Sweep, li: usize, comp: usize, relative: bool) -> (f64, usize) {
    let mut errs = Vec::new();
    let mut failures = 0;
    for (t, row) in s.truth.iter().zip(&s.est) {
        match row[li] {
            Some(e) if e[comp].is_finite() => {
                let d = (e[comp] - t[comp]).abs();
                errs.push(if relative { d / t[comp] } else { d });
            }
            _ => {
                failures += 1;
                errs.push(f64::INFINITY);
            }
        }
    }
    (median(&errs).unwrap_or(f64::INFINITY), failures)
}

fn c7_consistency(s: &Sweep) -> Outcome {
    let last = SWEEP_LENGTHS.len() - 1;
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, name) in ["mu", "beta", "delta"].iter().enumerate() {
        let (lo, f_lo) = sweep_median(s, 0, c, true);
        let (hi, f_hi) = sweep_median(s, last, c, true);
        ok &= hi < 0.10 && hi < lo;
        parts.push(format!("{name}: {lo:.4}@1e3 ({f_lo} fail) -> {hi:.4}@1e6 ({f_hi} fail)"));
    }
    check(ok, parts.join("; "), parts.join("; "))
}

fn c12_mu_vs_beta(s: &Sweep) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (li, m) in SWEEP_LENGTHS.iter().enumerate() {
        let (mu, _) = sweep_median(s, li, 0, false);
        let (beta, _) = sweep_median(s, li, 1, false);
        ok &= mu <= beta;
        parts.push(format!("M={m}: mu {mu:.4} beta {beta:.4}"));
    }
    check(ok, parts.join("; "), parts.join("; "))
}

fn random_system<R: Rng>(rng: &mut R, m: usize, b: usize) -> ReducedSystem {
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..b).map(|_| rng.random_range(0.0..5.0)).collect()).collect();
    let q = (0..m).map(|_| rng.random_range(-1.0..10.0)).collect();
    let w = (0..m).map(|_| rng.random_range(0.1..10.0)).collect();
    ReducedSystem::from_parts(&rows, q, w).unwrap()
}

/// Solves `F^T W F x = F^T W q` by Gaussian elimination with partial pivoting.
fn normal_equation_oracle(sys: &ReducedSystem) -> Vec<f64> {
    let b = sys.f.cols();
    let mut a = vec![vec![0.0; b + 1]; b];
    for i in 0..sys.m() {
        let r = sys.f.row(i);
        for j in 0..b {
            for k in 0..b {
                a[j][k] += sys.w[i] * r[j] * r[k];
            }
            a[j][b] += sys.w[i] * r[j] * sys.q[i];
        }
    }
    for col in 0..b {
        let piv = (col..b).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        for r in col + 1..b {
            let f = a[r][col] / a[col][col];
            for k in col..=b {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; b];
    for r in (0..b).rev() {
        let s: f64 = (r + 1..b).map(|k| a[r][k] * x[k]).sum();
        x[r] = (a[r][b] - s) / a[r][r];
    }
    x
}

fn c8_solver_oracles() -> Outcome {
    let mut rng = rng_from_seed(8008);
    let mut worst_wls: f64 = 0.0;
    for _ in 0..100 {
        let b = rng.random_range(2..=6);
        let m = rng.random_range(b + 2..=30);
        let sys = random_system(&mut rng, m, b);
        let fit = solve_wls(&sys).map_err(|e| e.to_string())?;
        let oracle = normal_equation_oracle(&sys);
        let err = fit.theta.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            / oracle.iter().map(|v| v.abs()).fold(f64::MIN_POSITIVE, f64::max);
        worst_wls = worst_wls.max(err);
    }

    let mut kkt_worst: f64 = 0.0;
    let mut beaten = 0usize;
    for _ in 0..20 {
        let sys = random_system(&mut rng, 25, 4);
        let fit = solve_nnls(&sys).map_err(|e| e.to_string())?;
        let (a, y) = sys.whitened();
        let scale = a.tmul_vec(&y).iter().map(|v| v.abs()).fold(0.0, f64::max);
        let g = sys.gradient(&fit.theta);
        for (t, gj) in fit.theta.iter().zip(&g) {
            let v = if *t < 0.0 {
                -t
            } else if *t > 0.0 {
                gj.abs()
            } else {
                (-gj).max(0.0)
            };
            kkt_worst = kkt_worst.max(v / scale);
        }
        let best = sys.objective_l2(&fit.theta);
        let hi = fit.theta.iter().fold(1.0f64, |a, &b| a.max(2.0 * b));
        for _ in 0..500 {
            let cand: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..hi)).collect();
            if sys.objective_l2(&cand) < best * (1.0 - 1e-12) {
                beaten += 1;
            }
        }
    }

    let mut worst_lad: f64 = 0.0;
    for _ in 0..50 {
        let sys = random_system(&mut rng, 10, 2);
        let fit = solve_lad(&sys).map_err(|e| e.to_string())?;
        let (a, y) = sys.whitened();
        let mut best = f64::INFINITY;
        for i in 0..10 {
            for j in i + 1..10 {
                let (r1, r2) = (a.row(i), a.row(j));
                let det = r1[0] * r2[1] - r1[1] * r2[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = [(y[i] * r2[1] - r1[1] * y[j]) / det, (r1[0] * y[j] - y[i] * r2[0]) / det];
                best = best.min(sys.objective_l1(&x));
            }
        }
        worst_lad = worst_lad.max((fit.residual_norm - best) / best);
    }
    let msg = format!(
        "WLS max rel dev {worst_wls:.2e}; NNLS max scaled KKT {kkt_worst:.2e}, {beaten}/10000 candidates better; LAD max rel excess {worst_lad:.2e}"
    );
    check(worst_wls <= 1e-8 && kkt_worst <= 1e-8 && beaten == 0 && worst_lad <= 1e-4, msg.clone(), msg)
}

fn c9_umvue() -> Outcome {
    let mut rng = rng_from_seed(9009);
    let reps = 10_000;
    let vals: Vec<f64> = (0..reps)
        .map(|_| {
            let r: f64 = (0..5).map(|_| sample_exponential(&mut rng, 3.0)).sum();
            class_rate_umvue(5, r).unwrap()
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / reps as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let se = (var / reps as f64).sqrt();
    let z = (mean - 3.0) / se;
    check(z.abs() <= 3.0, format!("mean {mean:.5}, se {se:.5}, z {z:+.2}"), format!("mean {mean:.5}, se {se:.5}, z {z:+.2}"))
}

fn c10_delta_recovery() -> Outcome {
    let g = generate_star(6).unwrap();
    let p = ModelParams::new(Model::Reversible, 1.0, 1.0, 2.0).unwrap();
    let mut errs = Vec::new();
    for seed in 0..10u64 {
        let mut rng = rng_from_seed(10_000 + seed);
        let x0 = random_initial_configuration(6, &mut rng);
        let tr = simulate(&g, &p, &x0, StopRule::MaxEvents(1_000_000), 10_100 + seed).map_err(|e| e.to_string())?;
        let e = estimate_theta(&tr, &g, Model::Reversible, Estimator::Mle, Method::Wls).map_err(|e| e.to_string())?;
        errs.push(e.recovered.delta.map_or(f64::INFINITY, |d| (d - 2.0).abs() / 2.0));
    }
    let med = median(&errs).unwrap();
    check(med < 0.15, format!("median |delta-2|/2 = {med:.4}"), format!("median |delta-2|/2 = {med:.4}"))
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_holdclass"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn run_pipeline(dir: &Path, sequential: bool) -> Result<Vec<(String, Vec<u8>)>, String> {
    let s = |p: &str| dir.join(p).to_string_lossy().into_owned();
    let mut files = Vec::new();
    cli(&["generate-graph", "--er", "12", "--p", "0.3", "--connected", "--seed", "11", "--out", &s("g.el")])?;
    cli(&["generate-graph", "--ws", "20", "--nei", "2", "--rewire", "0.3", "--seed", "11", "--out", &s("ws.el")])?;
    cli(&[
        "simulate", "--graph", &s("g.el"), "--model", "contact", "--mu", "1", "--beta", "0.5", "--delta", "0.7", "--events",
        "20000", "--seed", "5", "--out", &s("t.txt"),
    ])?;
    cli(&[
        "simulate", "--graph", &s("ws.el"), "--model", "reversible", "--mu", "1", "--beta", "0.5", "--delta", "1.5", "--time",
        "200", "--seed", "6", "--out", &s("t2.txt"),
    ])?;
    let est = cli(&["estimate", "--graph", &s("g.el"), "--trajectory", &s("t.txt")])?;
    let est2 = cli(&["estimate", "--graph", &s("ws.el"), "--trajectory", &s("t2.txt"), "--estimator", "umvue"])?;
    let mut census = vec!["enumerate-classes", "--n-min", "4", "--n-max", "8", "--graphs", "5", "--seed", "3"];
    if sequential {
        census.push("--sequential");
    }
    let census = cli(&census)?;
    std::fs::write(
        dir.join("exp.toml"),
        "model = \"contact\"\ngraph = \"er\"\nn = 15\nreplications = 4\nlengths = [500, 5000]\nseed = 9\n",
    )
    .map_err(|e| e.to_string())?;
    let (config, out_dir) = (s("exp.toml"), s("exp"));
    let mut exp = vec!["experiment", "--config", &config, "--out", &out_dir];
    if sequential {
        exp.push("--sequential");
    }
    cli(&exp)?;
    for name in ["g.el", "ws.el", "t.txt", "t2.txt", "exp/raw.csv", "exp/summary.csv"] {
        files.push((name.to_string(), std::fs::read(dir.join(name)).map_err(|e| e.to_string())?));
    }
    files.push(("estimate stdout".into(), est));
    files.push(("estimate umvue stdout".into(), est2));
    files.push(("enumerate-classes stdout".into(), census));
    Ok(files)
}

fn c11_reproducibility() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let c = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_pipeline(a.path(), false)?;
    let second = run_pipeline(b.path(), false)?;
    let sequential = run_pipeline(c.path(), true)?;
    let mut diffs = Vec::new();
    for ((name, x), ((_, y), (_, z))) in first.iter().zip(second.iter().zip(&sequential)) {
        if x != y {
            diffs.push(format!("{name} differs on rerun"));
        }
        if x != z {
            diffs.push(format!("{name} differs sequential vs parallel"));
        }
    }
    let bytes: usize = first.iter().map(|(_, v)| v.len()).sum();
    check(
        diffs.is_empty(),
        format!("{} outputs ({bytes} bytes) identical across reruns and execution modes", first.len()),
        diffs.join("; "),
    )
}

fn main() {
    // libtest flags such as --nocapture or a name filter are accepted and ignored.
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |id: u32, name: &str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {id:>2} {name}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {msg} [{secs:.1}s]");
            }
        }
    };
    report(1, "bound value", &c1_bound_value);
    report(2, "complete-graph class count", &c2_complete_graph);
    report(3, "bound soundness census", &c3_census);
    report(4, "reversible bound edge case", &c4_reversible_edge);
    report(5, "simulator exactness", &c5_single_node);
    report(6, "class/rate coherence", &c6_class_rate_coherence);
    let sweep = path_sweep();
    report(7, "estimator consistency", &|| sweep.as_ref().map_err(Clone::clone).and_then(c7_consistency));
    report(8, "solver oracles", &c8_solver_oracles);
    report(9, "UMVUE unbiasedness", &c9_umvue);
    report(10, "delta recovery", &c10_delta_recovery);
    report(11, "reproducibility", &c11_reproducibility);
    report(12, "healing rate has lowest error", &|| sweep.as_ref().map_err(Clone::clone).and_then(c12_mu_vs_beta));
    println!("acceptance: {} of 12 passed in {:.1}s", 12 - failed, started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
