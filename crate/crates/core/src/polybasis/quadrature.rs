//! Gauss–Legendre, Gauss–Lobatto and triangle quadrature.

use std::sync::OnceLock;

use crate::error::{Result, VemError};
use crate::mesh::Point2;

/// Highest polynomial degree supported by the cached edge rules.
pub const MAX_EDGE_DEGREE: usize = 121;
/// Highest polynomial degree supported by the cached triangle rules.
pub const MAX_TRIANGLE_DEGREE: usize = 60;

/// A one-dimensional rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Polynomials up to this degree are integrated exactly.
    pub exactness: usize,
}

impl GaussRule1D {
    /// Nodes and weights mapped to the segment `[a, b]` of the plane.
    pub fn on_segment(&self, a: Point2, b: Point2) -> impl Iterator<Item = (Point2, f64)> + '_ {
        let half = 0.5 * a.dist(b);
        self.nodes.iter().zip(&self.weights).map(move |(&s, &w)| {
            let t = 0.5 * (s + 1.0);
            (a + t * (b - a), w * half)
        })
    }

    /// Nodes as parameters in `[0, 1]` with weights summing to 1.
    pub fn unit(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| (0.5 * (s + 1.0), 0.5 * w))
    }
}

/// A rule on the reference triangle `(0,0), (1,0), (0,1)` (area 1/2).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    /// Reference coordinates `(ξ, η)`.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl TriangleRule {
    /// Physical points and weights on the triangle `(a, b, c)`.
    pub fn on_triangle(
        &self,
        a: Point2,
        b: Point2,
        c: Point2,
    ) -> impl Iterator<Item = (Point2, f64)> + '_ {
        let jac = (b - a).cross(c - a).abs();
        self.points.iter().zip(&self.weights).map(move |(&[xi, eta], &w)| {
            (a + xi * (b - a) + eta * (c - a), w * jac)
        })
    }
}

/// Legendre polynomial values `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// `n`-point Gauss–Legendre rule, ascending nodes.
fn gauss_legendre(n: usize) -> GaussRule1D {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, pm1) = legendre_pair(n, x);
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, pm1) = legendre_pair(n, x);
        dp = if (x * x - 1.0).abs() > 0.0 {
            nf * (x * p - pm1) / (x * x - 1.0)
        } else {
            dp
        };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule1D {
        nodes,
        weights,
        exactness: 2 * n - 1,
    }
}

fn edge_table() -> &'static [GaussRule1D] {
    static TABLE: OnceLock<Vec<GaussRule1D>> = OnceLock::new();
    TABLE.get_or_init(|| (1..=MAX_EDGE_DEGREE / 2 + 1).map(gauss_legendre).collect())
}

/// Gauss–Legendre rule on `[-1, 1]` exact for polynomials of the given degree.
pub fn edge_quadrature(degree: usize) -> Result<&'static GaussRule1D> {
    if degree > MAX_EDGE_DEGREE {
        return Err(VemError::UnsupportedDegree(degree));
    }
    Ok(&edge_table()[degree / 2])
}

fn conical_product(degree: usize) -> TriangleRule {
    // Collapsed coordinates x = u, y = v(1-u): the Jacobian (1-u) adds one degree in u.
    let ru = gauss_legendre((degree + 3) / 2);
    let rv = gauss_legendre((degree + 2) / 2);
    let mut points = Vec::with_capacity(ru.nodes.len() * rv.nodes.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (u, wu) in ru.unit() {
        for (v, wv) in rv.unit() {
            points.push([u, v * (1.0 - u)]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    TriangleRule {
        points,
        weights,
        exactness: degree,
    }
}

fn triangle_table() -> &'static [TriangleRule] {
    static TABLE: OnceLock<Vec<TriangleRule>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=MAX_TRIANGLE_DEGREE).map(conical_product).collect())
}

/// Positive-weight triangle rule exact for polynomials of the given degree.
pub fn triangle_quadrature(degree: usize) -> Result<&'static TriangleRule> {
    triangle_table()
        .get(degree)
        .ok_or(VemError::UnsupportedDegree(degree))
}

/// The `p + 1` Gauss–Lobatto nodes on `[-1, 1]` in ascending order.
///
/// Interior nodes are the roots of `P_p'`. Returns an empty vector for `p = 0`.
pub fn gauss_lobatto_nodes(p: usize) -> Vec<f64> {
    gauss_lobatto(p).0
}

/// Gauss–Lobatto nodes and weights (`p + 1` points, exact to degree `2p - 1`).
pub fn gauss_lobatto(p: usize) -> (Vec<f64>, Vec<f64>) {
    if p == 0 {
        return (Vec::new(), Vec::new());
    }
    let n = p;
    let nf = n as f64;
    let mut nodes = vec![0.0; n + 1];
    let mut weights = vec![0.0; n + 1];
    for i in 0..=n / 2 {
        let mut x = (std::f64::consts::PI * i as f64 / nf).cos();
        if i > 0 {
            for _ in 0..100 {
                let (pn, pn1) = legendre_pair(n, x);
                let dx = (x * pn - pn1) / ((nf + 1.0) * pn);
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
        }
        let (pn, _) = legendre_pair(n, x);
        let w = 2.0 / (nf * (nf + 1.0) * pn * pn);
        nodes[i] = -x;
        nodes[n - i] = x;
        weights[i] = w;
        weights[n - i] = w;
    }
    if n % 2 == 0 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lobatto_nodes() {
        assert_eq!(gauss_lobatto_nodes(1), vec![-1.0, 1.0]);
        assert_eq!(gauss_lobatto_nodes(2), vec![-1.0, 0.0, 1.0]);
        let n3 = gauss_lobatto_nodes(3);
        let r = 1.0 / 5f64.sqrt();
        assert!((n3[1] + r).abs() < 1e-15 && (n3[2] - r).abs() < 1e-15);
        for p in 1..=12 {
            let n = gauss_lobatto_nodes(p);
            for i in 0..=p {
                assert!((n[i] + n[p - i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lobatto_interlaces_legendre() {
        for p in 2..=12 {
            let lob = gauss_lobatto_nodes(p);
            let leg = gauss_legendre(p);
            for i in 0..p {
                assert!(lob[i] < leg.nodes[i] && leg.nodes[i] < lob[i + 1]);
            }
        }
    }

    #[test]
    fn edge_rules() {
        let r = edge_quadrature(1).unwrap();
        assert_eq!(r.nodes.len(), 1);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
        let r = edge_quadrature(4).unwrap();
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((s - 0.4).abs() < 1e-15);
        assert!(edge_quadrature(MAX_EDGE_DEGREE + 1).is_err());
    }

    #[test]
    fn triangle_rule_area() {
        let r = triangle_quadrature(0).unwrap();
        let s: f64 = r.weights.iter().sum();
        assert!((s - 0.5).abs() < 1e-15);
        assert!(triangle_quadrature(MAX_TRIANGLE_DEGREE + 1).is_err());
    }
}
