//! Runs every acceptance criterion at its stated tolerance and time limit and
//! prints one line per criterion. Criterion 8 also runs `ellreg selftest`
//! twice and requires byte-identical reports.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ellreg_core::acceptance::{run_criterion, CRITERIA};

fn limit(id: u32) -> Option<Duration> {
    let secs = match id {
        1 => 1,
        2 => 10,
        3 => 120,
        4 => 300,
        5 => 60,
        6 => 5,
        7 => 30,
        _ => return None,
    };
    Some(Duration::from_secs(secs))
}

fn selftest_bytes() -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_ellreg"))
        .arg("selftest")
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.code() != Some(0) {
        return Err(format!("selftest exited with {:?}", o.status.code()));
    }
    Ok(o.stdout)
}

fn main() -> ExitCode {
    let mut all = true;
    for &(id, title) in CRITERIA.iter() {
        let start = Instant::now();
        let report = run_criterion(id).expect("listed criterion");
        let elapsed = start.elapsed();
        let mut notes = Vec::new();
        for c in report.checks.iter().filter(|c| !c.passed) {
            notes.push(format!("{}: {:e} {} {:e}", c.name, c.value, c.relation, c.limit));
        }
        if let Some(l) = limit(id) {
            if elapsed > l {
                notes.push(format!("took {elapsed:.2?}, limit {l:?}"));
            }
        }
        if id == 8 {
            match (selftest_bytes(), selftest_bytes()) {
                (Ok(a), Ok(b)) if a == b => {}
                (Ok(_), Ok(_)) => notes.push("selftest reports differ between runs".into()),
                (Err(e), _) | (_, Err(e)) => notes.push(e),
            }
        }
        let passed = report.passed && notes.is_empty();
        all &= passed;
        println!(
            "criterion {id} ({title}): {} [{elapsed:.2?}]",
            if passed { "PASS" } else { "FAIL" }
        );
        for n in notes {
            println!("    {n}");
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
