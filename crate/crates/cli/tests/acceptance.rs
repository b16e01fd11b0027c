//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero when a criterion fails that is not listed in
//! `KNOWN_FAILURES`, or when a listed one unexpectedly passes.
//!
//! Run with `cargo test -p pathfunc-cli --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use pathfunc_cli::commands::{
    cmd_check, cmd_converge, cmd_price, scheme_at, build_model, BESSEL_H_GRID, BESSEL_PATHS, STRONG_NS, STRONG_PATHS,
};
use pathfunc_cli::config::RunConfig;
use pathfunc_cli::{run, EXIT_OK};
use pathfunc_core::analytic::{bessel3_mean, up_and_in_call_closed_form, up_and_in_call_reflection};
use pathfunc_core::counterexamples::{counterexample_bessel, counterexample_strong, counterexample_tangency};
use pathfunc_core::{check_local_consistency, CPartition, SchemeKind};

/// Criteria that fail on their merits, with the reason. The suite still runs
/// and prints them.
const KNOWN_FAILURES: &[(&str, &str)] = &[(
    "5b",
    "X = 1 + W + int ds/X is BES(3), a submartingale: E[X(1)] = 1.8493 by quadrature, \
     so neither the capped means nor the oracle can sit at or below 1",
)];

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn parse(text: &str) -> RunConfig {
    RunConfig::parse(text).unwrap_or_else(|e| panic!("bad acceptance config: {e}\n{text}"))
}

/// Data row of a single-row CSV report: (mean, stderr, ci_lo, ci_hi).
fn csv_row(text: &str) -> (f64, f64, f64, f64) {
    let line = text.lines().nth(1).expect("csv data row");
    let f: Vec<f64> = line.split(',').take(5).map(|v| v.parse().unwrap()).collect();
    (f[1], f[2], f[3], f[4])
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["pathfunc"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn timed(id: &'static str, title: &'static str, budget: f64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    let seconds = start.elapsed().as_secs_f64();
    let within = seconds <= budget;
    Outcome {
        id,
        title,
        pass: pass && within,
        detail: format!("{detail}; {seconds:.1}s (budget {budget:.0}s){}", if within { "" } else { " OVER BUDGET" }),
        seconds,
    }
}

/// Criterion 1 and 7: the monthly barrier call under constant volatility.
fn criterion_1_and_7() -> (Outcome, Outcome) {
    let cfg = workspace_root().join("configs/monthly_barrier.cfg");
    let cfg = cfg.to_str().unwrap();
    let args = |w: &'static str| ["--workers", w, "--format", "csv", "--no-timing", "price", cfg];
    let start = Instant::now();
    let (code, first, err) = cli(&args("1"));
    let seconds = start.elapsed().as_secs_f64();
    let c1 = if code != EXIT_OK {
        Outcome { id: "1", title: "monthly barrier call reproduction", pass: false, detail: format!("exit {code}: {err}"), seconds }
    } else {
        let (mean, se, lo, hi) = csv_row(&first);
        let overlap = lo <= 0.2364 && hi >= 0.2310;
        let in_range = (0.222..=0.245).contains(&mean);
        let within = seconds <= 300.0;
        Outcome {
            id: "1",
            title: "monthly barrier call reproduction",
            pass: overlap && in_range && within,
            detail: format!(
                "mean {mean:.6} se {se:.2e} CI [{lo:.6}, {hi:.6}] vs [0.2310, 0.2364]: overlap {overlap}, \
                 mean in [0.222, 0.245] {in_range}; {seconds:.1}s (budget 300s)"
            ),
            seconds,
        }
    };

    let start = Instant::now();
    let (c2, second, _) = cli(&args("1"));
    let (c4, four, _) = cli(&args("4"));
    let seconds = start.elapsed().as_secs_f64();
    let c7 = if code != EXIT_OK || c2 != EXIT_OK || c4 != EXIT_OK {
        Outcome { id: "7", title: "determinism across runs and workers", pass: false, detail: "a run failed".into(), seconds }
    } else {
        let same_bytes = first.as_bytes() == second.as_bytes();
        let (m1, s1, _, _) = csv_row(&first);
        let (m4, s4, _, _) = csv_row(&four);
        let rel = ((m1 - m4).abs() / m1.abs()).max((s1 - s4).abs() / s1.abs());
        Outcome {
            id: "7",
            title: "determinism across runs and workers",
            pass: same_bytes && rel <= 1e-12,
            detail: format!("workers 1 twice: identical bytes {same_bytes}; workers 1 vs 4: relative deviation {rel:.1e}"),
            seconds,
        }
    };
    (c1, c7)
}

const GBM: &str = "model.kind = gbm\nmodel.r = 0.1\nmodel.sigma = 0.3\nmodel.x0 = 0.8\n";

fn criterion_2() -> Outcome {
    timed("2", "local consistency on gbm", 60.0, || {
        let schemes = [
            ("euler", ""),
            ("binomial_fixed", ""),
            ("binomial_variable", "scheme.epsilon = 0.05\n"),
        ];
        let mut pass = true;
        let mut notes = Vec::new();
        for (name, extra) in schemes {
            let cfg = parse(&format!(
                "{GBM}scheme.kind = {name}\nscheme.h = 0.01\n{extra}payoff.kind = up_in_call\npayoff.strike = 0.5\n\
                 check.probe_y = 0.5, 1, 2\ncheck.probe_t = 0, 0.5\ncheck.n_draws = 1000000\nrun.seed = 2\n"
            ));
            let report = match cmd_check(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    pass = false;
                    notes.push(format!("{name}: error {e}"));
                    continue;
                }
            };
            pass &= report.pass;
            // residual magnitudes behind the report
            let model = build_model(&cfg).unwrap();
            let kind = SchemeKind::parse(name).unwrap();
            let scheme = scheme_at(&cfg, kind, cfg.scheme.h);
            let probes: Vec<(Vec<f64>, f64)> =
                [0.5, 1.0, 2.0].iter().flat_map(|&y| [0.0, 0.5].map(|t| (vec![y], t))).collect();
            let lc = check_local_consistency(&model, &scheme, &probes, cfg.check.n_draws, cfg.run.seed, cfg.check.c).unwrap();
            let worst = lc.probes.iter().flat_map(|p| p.r1.iter().chain(&p.r2)).fold(0.0f64, |a, r| a.max(r.abs()));
            match kind {
                SchemeKind::BinomialFixed => {
                    let exact = lc.probes.iter().all(|p| p.exact) && worst <= 1e-12;
                    pass &= exact;
                    notes.push(format!("{name} {} max|r| {worst:.1e}", if report.pass { "ok" } else { "FAIL" }));
                }
                SchemeKind::Euler => {
                    let within = lc.probes.iter().all(|p| {
                        p.r1.iter().zip(&p.r1_se).chain(p.r2.iter().zip(&p.r2_se)).all(|(r, se)| r.abs() <= 4.0 * se)
                    });
                    pass &= within;
                    notes.push(format!(
                        "{name} {} residuals within 4 se {within}",
                        if report.pass { "ok" } else { "FAIL" }
                    ));
                }
                _ => notes.push(format!("{name} {} max|r| {worst:.1e}", if report.pass { "ok" } else { "FAIL" })),
            }
        }
        (pass, notes.join(", "))
    })
}

fn criterion_3() -> Outcome {
    timed("3", "martingale check", 60.0, || {
        let cfg = parse(
            "model.kind = gbm\nmodel.r = 0\nmodel.sigma = 0.3\nmodel.x0 = 0.8\nscheme.kind = euler\nscheme.h = 1/1024\n\
             payoff.kind = custom_terminal\npayoff.terminal_kind = value\nrun.n_paths = 100000\nrun.seed = 3\n\
             output.format = csv\noutput.timing = false\n",
        );
        match cmd_price(&cfg) {
            Ok(rep) => {
                let (mean, se, _, _) = csv_row(&rep.text);
                let gap = (mean - 0.8).abs();
                (gap <= 3.0 * se, format!("mean {mean:.6} se {se:.2e} |mean - x0| = {gap:.2e} <= 3 se {}", gap <= 3.0 * se))
            }
            Err(e) => (false, format!("error {e}")),
        }
    })
}

fn criterion_4() -> Outcome {
    timed("4", "convergence to the closed-form up-and-in call", 600.0, || {
        let cfg = parse(&format!(
            "{GBM}scheme.kind = euler\nscheme.h = 1/2048\npayoff.kind = up_in_call\npayoff.strike = 0.5\n\
             payoff.barrier_level = 1\nrun.h_grid = 1/32, 1/128, 1/512, 1/2048\nrun.n_paths = 200000\nrun.seed = 4\n\
             run.oracle = up_in_closed_form\n"
        ));
        let closed = up_and_in_call_closed_form(0.8, 0.5, 1.0, 0.1, 0.3);
        let reflection = up_and_in_call_reflection(0.8, 0.5, 1.0, 0.1, 0.3);
        let oracles_agree = (closed - reflection).abs() <= 1e-8;
        let rep = match cmd_converge(&cfg) {
            Ok((_, rep)) => rep,
            Err(e) => return (false, format!("error {e}")),
        };
        let errors: Vec<String> = rep.rows.iter().map(|r| format!("{:.2e}", r.error.unwrap())).collect();
        let last = rep.rows.last().unwrap();
        let bound = 1.5 * (3.0 * last.estimate.stderr + rep.bias_c * last.h.sqrt());
        let err = last.error.unwrap();
        let monotone = rep.monotone == Some(true);
        (
            oracles_agree && monotone && err <= bound,
            format!(
                "oracle {closed:.6} (reflection {reflection:.6}); errors [{}]; nonincreasing with <= 1 inversion {monotone}; \
                 final {err:.2e} <= 1.5(3 se + {} sqrt h) = {bound:.2e} {}",
                errors.join(", "),
                rep.bias_c,
                err <= bound
            ),
        )
    })
}

fn criterion_5() -> Vec<Outcome> {
    let tangency = timed("5a", "tangency counter-example", 60.0, || match counterexample_tangency() {
        Ok(rep) => {
            let exact = rep.tau == 0.5 && rep.rows.iter().all(|r| r.1 == 1.0) && !rep.rows.is_empty();
            let c4 = rep.class == CPartition::C4;
            (exact && c4, format!("tau {} tau^h {:?} class {:?}", rep.tau, rep.rows.iter().map(|r| r.1).collect::<Vec<_>>(), rep.class))
        }
        Err(e) => (false, format!("error {e}")),
    });
    let bessel = timed("5b", "Bessel counter-example", 120.0, || {
        match counterexample_bessel(&BESSEL_H_GRID, BESSEL_PATHS, 5, 0) {
            Ok(rep) => {
                let last = rep.rows.last().unwrap();
                let (mean, se) = (last.estimate.mean, last.estimate.stderr);
                let near_one = (mean - 1.0).abs() <= 3.0 * se;
                let below = 1.0 - rep.oracle > 5.0 * se;
                (
                    near_one && below,
                    format!(
                        "capped mean at h = 2^-8: {mean:.4} (se {se:.1e}), within 3 se of 1 {near_one}; \
                         quadrature E[X(1)] = {:.4} (check {:.4}), below 1 by > 5 se {below}; \
                         E[1/X(1)] = {:.4}",
                        rep.oracle,
                        bessel3_mean(1.0),
                        rep.reciprocal_oracle
                    ),
                )
            }
            Err(e) => (false, format!("error {e}")),
        }
    });
    let strong = timed("5c", "strong-error growth", 60.0, || match counterexample_strong(&STRONG_NS, STRONG_PATHS, 5, 0) {
        Ok(rep) => {
            let rows: Vec<String> = rep.rows.iter().map(|r| format!("N={} {:.3}", r.n, r.scaled_error)).collect();
            (rep.increasing, format!("{}; strictly increasing {}", rows.join(", "), rep.increasing))
        }
        Err(e) => (false, format!("error {e}")),
    });
    let total: f64 = [&tangency, &bessel, &strong].iter().map(|o| o.seconds).sum();
    let mut out = vec![tangency, bessel, strong];
    if total > 180.0 {
        for o in &mut out {
            o.pass = false;
            o.detail.push_str("; criterion 5 total over 180s");
        }
    }
    out
}

/// Runs the property-test targets of the core crate in a separate target
/// directory (the enclosing cargo invocation holds the default one).
fn criterion_6() -> Outcome {
    timed("6", "property suites", 1800.0, || {
        let root = workspace_root();
        let output = Command::new(env!("CARGO"))
            .current_dir(&root)
            .args(["test", "-p", "pathfunc-core", "--tests", "--", "--test-threads", "1"])
            .env("CARGO_TARGET_DIR", root.join("target/acceptance"))
            .output();
        match output {
            Ok(o) => {
                let text = String::from_utf8_lossy(&o.stdout);
                let mut passed = 0usize;
                let mut failed = 0usize;
                for line in text.lines().filter(|l| l.starts_with("test result:")) {
                    let count = |key: &str| {
                        line.split(';')
                            .find(|p| p.trim_end().ends_with(key))
                            .and_then(|p| p.split_whitespace().rev().nth(1))
                            .and_then(|n| n.parse::<usize>().ok())
                            .unwrap_or(0)
                    };
                    passed += count("passed");
                    failed += count("failed");
                }
                let ok = o.status.success() && failed == 0 && passed > 0;
                let mut detail = format!("{passed} tests passed, {failed} failed (>= 200 cases per property, fixed seed)");
                if !ok {
                    detail.push_str(&format!("\n{}", String::from_utf8_lossy(&o.stderr)));
                }
                (ok, detail)
            }
            Err(e) => (false, format!("could not launch cargo: {e}")),
        }
    })
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    let (c1, c7) = criterion_1_and_7();
    outcomes.push(c1);
    outcomes.push(criterion_2());
    outcomes.push(criterion_3());
    outcomes.push(criterion_4());
    outcomes.extend(criterion_5());
    outcomes.push(criterion_6());
    outcomes.push(c7);

    let mut unexpected = 0;
    println!();
    for o in &outcomes {
        let known = KNOWN_FAILURES.iter().find(|(id, _)| *id == o.id);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {} ({}): {}", o.id, o.title, o.detail);
        match (o.pass, known) {
            (false, Some((_, why))) => println!("     known failure: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => {
                println!("     listed as a known failure but passed; update KNOWN_FAILURES");
                unexpected += 1;
            }
            (true, None) => {}
        }
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("\n{passed}/{} criteria passed, {unexpected} unexpected result(s)", outcomes.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
