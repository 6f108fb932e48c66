// Convergence of |u - Π∇u_h|_1 for u = sin(πx) sin(πy) on uniform square meshes.

use polyvem::mesh::{generate_square_mesh, Rect};
use polyvem::solver::{run_convergence_study, ConvergenceRow, Discretization, LinearSolver, Manufactured};
use polyvem::space::{SpaceFamily, SpaceKind};
use polyvem::stab::StabKind;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let meshes = [4, 8, 16]
        .into_iter()
        .map(|n| generate_square_mesh(n, Rect::UNIT))
        .collect::<Result<Vec<_>, _>>()?;
    let sol = Manufactured::SinSin.solution();
    println!("{}", ConvergenceRow::CSV_HEADER);
    for family in [SpaceFamily::ConformingStandard, SpaceFamily::Nonconforming] {
        for p in 1..=3 {
            let disc = Discretization::new(SpaceKind::new(family, p), StabKind::Projected);
            for row in run_convergence_study(&meshes, disc, &sol, LinearSolver::Direct)? {
                println!("{}", row.to_csv());
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
