// Stability constants of the dofi-dofi and projected stabilizations as the
// degree grows and as an element degenerates.

use polyvem::mesh::generate_collapsing_quad;
use polyvem::oracle::OracleConfig;
use polyvem::space::{SpaceFamily, SpaceKind};
use polyvem::stab::StabKind;
use polyvem::stabilitylab::{collapse_sweep, decades, p_sweep, StabilityReport, SweepRow};

fn print_rows(rows: &[SweepRow]) {
    for r in rows {
        match r {
            Ok(r) => println!("{}", r.to_csv()),
            Err(s) => println!("# skipped: {}: {}", s.label, s.reason),
        }
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = OracleConfig::default();
    let square = generate_collapsing_quad(1.0)?;
    println!("{}", StabilityReport::CSV_HEADER);
    for stab in [StabKind::DofiDofi, StabKind::Projected] {
        print_rows(&p_sweep(&square, "square", SpaceFamily::ConformingStandard, stab, 1..=4, config));
    }
    print_rows(&collapse_sweep(&decades(1e-3), SpaceKind::conforming(2), StabKind::DofiDofi, config));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
