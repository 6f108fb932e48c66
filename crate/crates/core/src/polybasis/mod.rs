//! Scaled monomial bases on polygons and edges, and quadrature rules.

mod monomials;
mod quadrature;

pub use monomials::{
    dim_p, multi_index_position, multi_indices, EdgeBasis, MonomialBasis2D,
};
pub use quadrature::{
    edge_quadrature, gauss_lobatto, gauss_lobatto_nodes, triangle_quadrature, GaussRule1D,
    TriangleRule, MAX_EDGE_DEGREE, MAX_TRIANGLE_DEGREE,
};

use nalgebra::DMatrix;

use crate::error::Result;
use crate::mesh::{subtriangulate, Polygon};

/// `∫_K m_α m_β` over the polygon for the given basis (exact quadrature on the centroid fan).
pub fn mass_matrix(poly: &Polygon, basis: &MonomialBasis2D) -> Result<DMatrix<f64>> {
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    if n == 0 {
        return Ok(m);
    }
    let rule = triangle_quadrature(2 * basis.degree() as usize)?;
    let fan = subtriangulate(poly, 0)?;
    let mut vals = vec![0.0; n];
    for t in 0..fan.n_triangles() {
        let [a, b, c] = fan.corners(t);
        for (x, w) in rule.on_triangle(a, b, c) {
            basis.eval_into(x, &mut vals);
            for i in 0..n {
                let wi = w * vals[i];
                for j in i..n {
                    m[(i, j)] += wi * vals[j];
                }
            }
        }
    }
    symmetrize_upper(&mut m);
    Ok(m)
}

/// `∫_K ∇m_α · ∇m_β` over the polygon.
pub fn grad_gram(poly: &Polygon, basis: &MonomialBasis2D) -> Result<DMatrix<f64>> {
    let n = basis.dim();
    let mut g = DMatrix::zeros(n, n);
    if basis.degree() < 1 {
        return Ok(g);
    }
    let rule = triangle_quadrature(2 * basis.degree() as usize - 2)?;
    let fan = subtriangulate(poly, 0)?;
    for t in 0..fan.n_triangles() {
        let [a, b, c] = fan.corners(t);
        for (x, w) in rule.on_triangle(a, b, c) {
            let d = basis.grad(x);
            g += w * d.transpose() * &d;
        }
    }
    Ok(0.5 * (&g + g.transpose()))
}

pub(crate) fn symmetrize_upper(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point2;
    use proptest::prelude::*;

    fn binom_int(a: u32, b: u32) -> f64 {
        // ∫_0^1 ∫_0^{1-x} x^a y^b = a! b! / (a+b+2)!
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn triangle_exactness() {
        for deg in [0, 1, 2, 5, 10, 18, 24] {
            let r = triangle_quadrature(deg).unwrap();
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = binom_int(a, b);
                    assert!(((q - exact) / exact).abs() < 1e-13, "deg {deg} a {a} b {b}");
                }
            }
        }
    }

    #[test]
    fn edge_exactness() {
        for deg in [0, 1, 3, 8, 17, 30] {
            let r = edge_quadrature(deg).unwrap();
            for k in 0..=deg as i32 {
                let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() <= 1e-13 * exact.max(1.0));
            }
        }
    }

    #[test]
    fn unit_square_mass() {
        let sq = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        let b = MonomialBasis2D::on_polygon(&sq, 1);
        let m = mass_matrix(&sq, &b).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(m[(0, 1)].abs() < 1e-15);
        // ∫ ((x-1/2)/√2)^2 = 1/24
        assert!((m[(1, 1)] - 1.0 / 24.0).abs() < 1e-15);
        let g = grad_gram(&sq, &b).unwrap();
        assert!((g[(1, 1)] - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn monomials_bounded_on_vertices(seed in 0u64..500, n in 3usize..9, p in 0isize..=6) {
            let poly = crate::mesh::random_convex_polygon(n, seed).unwrap();
            let b = MonomialBasis2D::on_polygon(&poly, p);
            for &v in poly.vertices() {
                for x in b.eval(v).iter() {
                    prop_assert!(x.abs() <= 1.0 + 1e-14);
                }
            }
        }
    }
}
