use std::io::Write;

use fraccli::acceptance::run_all;

#[test]
fn acceptance_criteria() {
    let outcomes = run_all();
    // written to the raw handle so the report shows without --nocapture
    let mut err = std::io::stderr().lock();
    for o in &outcomes {
        writeln!(err, "{}", o.line()).unwrap();
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
