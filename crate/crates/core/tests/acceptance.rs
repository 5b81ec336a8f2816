//! Acceptance gate: runs the full verification matrix at a pinned seed and
//! requires every criterion to pass. One line is printed per criterion
//! (visible with `cargo test --test acceptance -- --nocapture`); failures
//! panic with the offending lines so CI output names the broken criterion
//! and its measured margin.
//!
//! Budget: the full profile covers n up to 6 and p up to 8 and runs in
//! roughly seven minutes on a desktop (bound: thirty).

use slicelab_core::{verify_suite, BudgetProfile};

#[test]
fn acceptance_gate() {
    let summary = verify_suite(7, BudgetProfile::Full);
    for line in summary.lines() {
        println!("{line}");
    }
    let failed: Vec<String> = summary
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.line())
        .collect();
    assert!(
        summary.all_passed && failed.is_empty(),
        "acceptance criteria failed:\n{}",
        failed.join("\n")
    );
    assert_eq!(summary.criteria.len(), 12, "expected the full 12-criterion matrix");
}
