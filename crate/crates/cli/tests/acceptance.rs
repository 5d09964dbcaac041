//! Runs the full profile twice and prints one PASS/FAIL line per criterion.
//!
//! Exits nonzero when a check outside `KNOWN_UNATTAINABLE` does not pass,
//! when a time limit is exceeded, or when the two runs disagree.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Duration;

use lmoment_cli::report::{CheckResult, Status, SuiteResult};
use lmoment_cli::suite::{run_suite_timed, Env, Goldens, Profile};
use lmoment_cli::RunConfig;
use lmoment_core::moments::with_threads;

/// Checks that fail for reasons documented in the README.
const KNOWN_UNATTAINABLE: [&str; 2] = ["identities.kloosterman_average_literal", "moments.chi3.trend"];

const DETERMINISM_TOL: f64 = 1e-12;

struct Criterion {
    id: u8,
    title: &'static str,
    family: &'static str,
    limit: Duration,
}

const CRITERIA: [Criterion; 6] = [
    Criterion { id: 1, title: "identities", family: "identities.", limit: Duration::from_secs(120) },
    Criterion { id: 2, title: "voronoi", family: "voronoi.", limit: Duration::from_secs(300) },
    Criterion { id: 3, title: "residues", family: "residues.", limit: Duration::from_secs(60) },
    Criterion { id: 4, title: "functional equation", family: "fe.", limit: Duration::from_secs(120) },
    Criterion { id: 5, title: "moments", family: "moments.", limit: Duration::from_secs(3600) },
    Criterion { id: 6, title: "shifted convolution", family: "shiftconv.", limit: Duration::from_secs(600) },
];

fn run(threads: usize) -> (SuiteResult, Vec<(String, Duration)>) {
    with_threads(threads, || {
        let env = Env::new(Goldens::builtin());
        run_suite_timed(Profile::Full, &[], &env, &RunConfig::new("suite"))
    })
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= DETERMINISM_TOL * a.abs().max(b.abs())
}

/// First disagreement between two reports, if any.
fn compare(a: &SuiteResult, b: &SuiteResult) -> Option<String> {
    if a.checks.len() != b.checks.len() {
        return Some(format!("{} vs {} checks", a.checks.len(), b.checks.len()));
    }
    for (x, y) in a.checks.iter().zip(&b.checks) {
        if x.name != y.name || x.status != y.status {
            return Some(format!("{}: {:?} vs {:?}", x.name, x.status, y.status));
        }
        if !close(x.residual, y.residual) || !close(x.tolerance, y.tolerance) {
            return Some(format!("{}: residual {:e} vs {:e}", x.name, x.residual, y.residual));
        }
        let keys = |c: &CheckResult| c.values.keys().cloned().collect::<Vec<_>>();
        if keys(x) != keys(y) {
            return Some(format!("{}: value keys differ", x.name));
        }
        for (k, v) in &x.values {
            if !close(*v, y.values[k]) {
                return Some(format!("{}: {k} = {v:e} vs {:e}", x.name, y.values[k]));
            }
        }
    }
    None
}

fn main() -> ExitCode {
    let (first, times) = run(1);
    let elapsed: BTreeMap<&str, Duration> = times.iter().map(|(n, t)| (n.as_str(), *t)).collect();
    let mut ok = true;

    for c in &CRITERIA {
        let checks: Vec<&CheckResult> = first.checks.iter().filter(|r| r.criterion == Some(c.id)).collect();
        let spent: Duration = elapsed.iter().filter(|(n, _)| n.starts_with(c.family)).map(|(_, t)| *t).sum();
        let failing: Vec<&str> = checks.iter().filter(|r| r.status != Status::Pass).map(|r| r.name.as_str()).collect();
        let in_time = spent <= c.limit;
        let pass = failing.is_empty() && in_time && !checks.is_empty();
        let mut line = format!(
            "{} criterion {} ({}): {} checks, {:.1}s (limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            checks.len(),
            spent.as_secs_f64(),
            c.limit.as_secs()
        );
        if !failing.is_empty() {
            line += &format!("; not passing: {}", failing.join(", "));
        }
        println!("{line}");
        ok &= in_time && !checks.is_empty();
        for name in failing {
            if !KNOWN_UNATTAINABLE.contains(&name) {
                ok = false;
            }
        }
    }

    // checks outside the numbered criteria must pass as well
    for r in first.checks.iter().filter(|r| r.criterion.is_none() && r.required && r.status != Status::Pass) {
        println!("FAIL supporting check {}: {:?}", r.name, r.status);
        ok = false;
    }

    let (second, _) = run(3);
    match compare(&first, &second) {
        None => println!("PASS criterion 7 (determinism): {} checks agree to {DETERMINISM_TOL:e} at 1 and 3 threads", first.checks.len()),
        Some(diff) => {
            println!("FAIL criterion 7 (determinism): {diff}");
            ok = false;
        }
    }

    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
