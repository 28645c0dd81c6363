//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. `AGGDIFF_SUITE` selects a suite (default `all`).

use aggdiff::harness::verify::verify;

fn main() {
    let suite = std::env::var("AGGDIFF_SUITE").unwrap_or_else(|_| "all".into());
    let results = match verify(&suite, |r| println!("{}", r.line())) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
