//! Runs the full acceptance suite and prints one line per criterion.
//! Built without the libtest harness so the lines always reach the output.

use fsi_rebound::acceptance::{run_suite, Fault, Status, SuiteOptions, CRITERIA};
use std::process::ExitCode;

fn main() -> ExitCode {
    let start = std::time::Instant::now();
    let report = run_suite(&SuiteOptions::default());
    println!("{report}");
    println!("suite runtime {:.1} s", start.elapsed().as_secs_f64());
    let mut ok = report.passed();
    for id in CRITERIA {
        if report.get(id).is_none() {
            println!("criterion {id} missing");
            ok = false;
        }
    }
    ok &= report.get(10).map(|r| r.status) == Some(Status::Excluded);

    // the suite must notice a ledger accumulated at the wrong rate
    let faulty = run_suite(&SuiteOptions { only: Some(vec![2]), fault: Some(Fault::Ledger) });
    let caught = faulty.get(2).map(|r| r.status) == Some(Status::Fail);
    println!("[{}] injected ledger fault detected by criterion 2", if caught { "PASS" } else { "FAIL" });
    ok &= caught;

    if ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
