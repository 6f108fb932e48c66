// Compute the virtual basis functions of one element as fine finite element
// solutions and compare their exact energies with the discrete local form.

use polyvem::mesh::{regular_polygon, Point2};
use polyvem::oracle::{solve_basis, OracleConfig};
use polyvem::solver::local_stiffness;
use polyvem::space::{LocalSpace, SpaceKind};
use polyvem::stab::StabKind;
use polyvem::stabilitylab::self_convergence;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let pentagon = regular_polygon(5, Point2::new(0.0, 0.0), 1.0, 0.0)?;
    let config = OracleConfig::default();
    for kind in [SpaceKind::conforming(2), SpaceKind::nonconforming(2)] {
        let space = LocalSpace::new(&pentagon, kind)?;
        let oracle = solve_basis(&space, config)?;
        let g = oracle.exact_gram();
        println!(
            "{} p=2 on a pentagon: {} fine nodes ({:?} base), unisolvence error {:.1e}",
            kind.family.tag(),
            oracle.fine.n_nodes(),
            oracle.fine.base(),
            oracle.unisolvence_error(&space)?
        );
        println!("  |G 1| = {:.1e}", (&g * space.dofs_of_one()).amax());

        // the discrete form agrees with the exact one on polynomials only
        let local = local_stiffness(&space, StabKind::DofiDofi);
        println!("  diag(G_exact) vs diag(A_h):");
        for i in 0..space.n_dofs().min(6) {
            println!("    {i}: {:>9.5} {:>9.5}", g[(i, i)], local.a[(i, i)]);
        }
        let sc = self_convergence(&pentagon, kind, StabKind::DofiDofi, config)?;
        println!(
            "  drift from level {} to {}: Gram {:.1e}, alpha_star {:.1e}",
            sc.coarse_level, sc.fine_level, sc.gram_drift, sc.alpha_star_drift
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
