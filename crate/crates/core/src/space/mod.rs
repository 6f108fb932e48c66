//! Local virtual element spaces: degrees of freedom and computable projectors.

mod dofs;
mod local;

pub use dofs::{DofDescriptor, DofTable, SpaceFamily, SpaceKind};
pub use local::{
    edge_moments, lagrange_basis, lobatto_params, ConstantFix, EdgeTrace, LocalSpace, ProjectorSet, DATA_QUADRATURE_DEGREE,
    DATA_QUADRATURE_LEVEL, SINGULAR_GRAM_CONDITION,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{random_convex_polygon, Point2, Polygon};
    use crate::polybasis::dim_p;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn unit_square() -> Polygon {
        Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    const FAMILIES: [SpaceFamily; 4] = [
        SpaceFamily::ConformingStandard,
        SpaceFamily::ConformingEnhanced,
        SpaceFamily::Nonconforming,
        SpaceFamily::NonconformingEnhanced,
    ];

    #[test]
    fn bilinear_hat_projection() {
        let ls = LocalSpace::new(&unit_square(), SpaceKind::conforming(1)).unwrap();
        let pi = &ls.projectors().pi_nabla;
        let h = 2f64.sqrt();
        let c = pi.column(0);
        assert!((c[1] / h + 0.5).abs() < 1e-14);
        assert!((c[2] / h + 0.5).abs() < 1e-14);
        // m_1, m_2 average to zero on the boundary of the square
        assert!((c[0] - 0.25).abs() < 1e-14);

        let checker = DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
        assert!((pi * checker).norm() < 1e-14);
    }

    #[test]
    fn nonconforming_edge_means() {
        let ls = LocalSpace::new(&unit_square(), SpaceKind::nonconforming(1)).unwrap();
        let col = ls.dof_matrix().column(1);
        let s = 0.5 / 2f64.sqrt();
        for (got, want) in col.iter().zip([0.0, s, 0.0, -s]) {
            assert!((got - want).abs() < 1e-15);
        }
        let x2 = ls.interpolate_dofs(&|p: Point2| p.x * p.x).unwrap();
        for (got, want) in x2.iter().zip([1.0 / 3.0, 1.0, 1.0 / 3.0, 0.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_fixes_agree_on_polynomials() {
        let poly = random_convex_polygon(6, 3).unwrap();
        for fix in [ConstantFix::BoundaryMean, ConstantFix::BulkMean, ConstantFix::VertexMean] {
            let ls = LocalSpace::with_constant_fix(&poly, SpaceKind::conforming(3), fix).unwrap();
            let r = &ls.projectors().pi_nabla * ls.dof_matrix();
            assert!((r - DMatrix::identity(10, 10)).amax() < 1e-10, "{fix:?}");
        }
        assert!(LocalSpace::with_constant_fix(&poly, SpaceKind::conforming(1), ConstantFix::BulkMean)
            .is_err());
        assert!(LocalSpace::with_constant_fix(
            &poly,
            SpaceKind::nonconforming(2),
            ConstantFix::VertexMean
        )
        .is_err());
    }

    #[test]
    fn interpolation_of_polynomials_matches_dof_matrix() {
        let poly = random_convex_polygon(5, 11).unwrap();
        for fam in FAMILIES {
            for p in 1..=4 {
                let ls = LocalSpace::new(&poly, SpaceKind::new(fam, p)).unwrap();
                let b = ls.basis().clone();
                let k = dim_p(p as isize) - 1;
                let mut q = vec![0.0; k + 1];
                q[k] = 1.0;
                q[0] = 0.5;
                let direct = ls.dofs_of_polynomial(&DVector::from_vec(q.clone()));
                let interp = ls.interpolate_dofs(&|x| b.eval_poly(&q, x)).unwrap();
                assert!((direct - interp).amax() < 1e-12, "{fam:?} p={p}");
            }
        }
    }

    #[test]
    fn singular_gram_is_reported() {
        let ls = LocalSpace::new(&unit_square(), SpaceKind::conforming(2)).unwrap();
        assert!(ls.projectors().gram_condition < 1e4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn projectors_reproduce_polynomials(
            seed in 0u64..10_000,
            n in 3usize..9,
            p in 1usize..=5,
            f in 0usize..4,
        ) {
            let poly = random_convex_polygon(n, seed).unwrap();
            let ls = LocalSpace::new(&poly, SpaceKind::new(FAMILIES[f], p)).unwrap();
            let pr = ls.projectors();
            let d = ls.dof_matrix();
            let nk = dim_p(p as isize);
            let eye = DMatrix::<f64>::identity(nk, nk);
            prop_assert!((&pr.pi_nabla * d - &eye).amax() < 1e-9);

            let pd = &pr.pi_nabla_dof;
            prop_assert!((pd * pd - pd).amax() < 1e-9);
            let rank = pd.clone().svd(false, false).rank(1e-8);
            prop_assert_eq!(rank, nk);

            let ni = dim_p(p as isize - 2);
            let p0 = &pr.pi0 * d;
            prop_assert!((p0.columns(0, ni) - DMatrix::<f64>::identity(ni, ni)).amax() < 1e-9);
            if let Some(full) = &pr.pi0_full {
                // the high moments pass through H_p^{-1}, so the monomial conditioning shows up here
                let sv = ls.mass().clone().singular_values();
                let tol = 1e-9f64.max(1e-15 * sv.max() / sv.min());
                prop_assert!((full * d - &eye).amax() < tol);
            }
            if let Some(edges) = &pr.pi0_edge {
                // moments of Π^{0,e} v reproduce the stored edge moments
                for e in 0..edges.len() {
                    let tr = &ls.traces()[e];
                    let len = poly.edges()[e].length;
                    for a in 0..p {
                        let j = ls.dof_table().edge_dof(e, a);
                        let mut m = 0.0;
                        for (q, (&t, &w)) in tr.params.iter().zip(&tr.weights).enumerate() {
                            m += w * (t - 0.5).powi(a as i32) * tr.values[(q, j)];
                        }
                        prop_assert!((m / len - 1.0).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
