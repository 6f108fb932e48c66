// Interpolation error against the best polynomial approximation: the
// stability-based bound for conforming spaces and the constant-one bound
// for nonconforming spaces, both measured with the oracle.

use polyvem::mesh::{generate_collapsing_quad, Point2};
use polyvem::oracle::OracleConfig;
use polyvem::space::SpaceKind;
use polyvem::stab::StabKind;
use polyvem::stabilitylab::{interp_bound_check, quasi_optimality_check};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = OracleConfig::default();
    let v = |x: Point2| (x.x + x.y).exp();
    println!("{:<14} {:>2} {:>11} {:>11} {:>11} {:>11}", "element", "p", "|v-v_I|", "bound", "nc |v-v_I|", "best");
    for eps in [1.0, 0.1] {
        let poly = generate_collapsing_quad(eps)?;
        for p in 1..=3 {
            let c = interp_bound_check(&poly, SpaceKind::conforming(p), StabKind::DofiDofi, &v, config)?;
            let n = quasi_optimality_check(&poly, SpaceKind::nonconforming(p), &v, config)?;
            assert!(c.pass && n.pass);
            println!(
                "{:<14} {p:>2} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e}",
                format!("collapse:{eps}"),
                c.lhs,
                c.rhs,
                n.lhs,
                n.best_error
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
