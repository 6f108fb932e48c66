// Polynomial solutions of degree p are reproduced exactly by every space
// family and stabilization.

use polyvem::mesh::{generate_square_mesh, Rect};
use polyvem::solver::{solve_manufactured, Discretization, LinearSolver, Manufactured};
use polyvem::space::{SpaceFamily, SpaceKind};
use polyvem::stab::StabKind;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = generate_square_mesh(4, Rect::UNIT)?;
    println!("{:<12} {:<5} {:>2} {:>14} {:>14}", "space", "stab", "p", "max DoF error", "H1 proj error");
    for family in [SpaceFamily::ConformingStandard, SpaceFamily::ConformingEnhanced, SpaceFamily::Nonconforming] {
        for stab in [StabKind::DofiDofi, StabKind::Projected] {
            for p in 1..=3 {
                let sol = Manufactured::Poly(p).solution();
                let disc = Discretization::new(SpaceKind::new(family, p), stab);
                let (sys, res, err) = solve_manufactured(&mesh, disc, &sol, LinearSolver::default())?;
                let mut worst: f64 = 0.0;
                for (c, space) in sys.spaces.iter().enumerate() {
                    let exact = space.interpolate_dofs(&|x| sol.u(x))?;
                    worst = worst.max((res.local_dofs(&sys.dof_map, c) - exact).amax());
                }
                println!("{:<12} {:<5} {p:>2} {worst:>14.2e} {:>14.2e}", family.tag(), stab.tag(), err.global);
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
