// The computable parts of a virtual element: DoF layout, the energy
// projector and the L2 projectors, checked on hand-computable cases.

use nalgebra::DVector;
use polyvem::mesh::{generate_collapsing_quad, regular_polygon, Point2};
use polyvem::space::{LocalSpace, SpaceKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // unit square, p = 1: the projected hat function has gradient (-1/2, -1/2)
    let square = generate_collapsing_quad(1.0)?;
    let space = LocalSpace::new(&square, SpaceKind::conforming(1))?;
    let pi = &space.projectors().pi_nabla;
    let h = space.basis().scale();
    println!("grad Pi(phi_1) = ({:.6}, {:.6})", pi[(1, 0)] / h, pi[(2, 0)] / h);
    let hourglass = DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
    println!("|Pi(1,-1,1,-1)| = {:.1e}", (pi * hourglass).amax());

    // higher degree on a pentagon: every family reproduces P_p exactly
    let pentagon = regular_polygon(5, Point2::new(0.0, 0.0), 1.0, 0.2)?;
    for kind in [SpaceKind::conforming(3), SpaceKind::enhanced(3), SpaceKind::nonconforming(3)] {
        let space = LocalSpace::new(&pentagon, kind)?;
        let q = DVector::from_fn(space.basis().dim(), |i, _| (i as f64 + 1.0).recip());
        let dofs = space.dofs_of_polynomial(&q);
        let err = (&space.projectors().pi_nabla * &dofs - &q).amax();
        println!(
            "{:<12} p=3: {} DoFs ({} internal), cond(G) = {:.1e}, reproduction error {err:.1e}",
            kind.family.tag(),
            space.n_dofs(),
            space.dof_table().n_internal(),
            space.projectors().gram_condition
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
