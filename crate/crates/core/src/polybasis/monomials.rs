use nalgebra::{DMatrix, DVector};

use crate::mesh::{Point2, Polygon};

/// Dimension of `P_d` in two variables; zero for negative degree.
pub fn dim_p(d: isize) -> usize {
    if d < 0 {
        0
    } else {
        let d = d as usize;
        (d + 1) * (d + 2) / 2
    }
}

/// Multi-indices `(α1, α2)` with `|α| ≤ d` in graded lexicographic order:
/// `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`
pub fn multi_indices(d: isize) -> Vec<(usize, usize)> {
    if d < 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(dim_p(d));
    for k in 0..=d as usize {
        for a2 in 0..=k {
            out.push((k - a2, a2));
        }
    }
    out
}

/// Position of `(a1, a2)` in the graded lexicographic order.
pub fn multi_index_position(a1: usize, a2: usize) -> usize {
    let k = a1 + a2;
    k * (k + 1) / 2 + a2
}

/// Scaled and centred monomials `m_α(x) = ((x - x_K)/h_K)^α` of degree at most `degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis2D {
    degree: isize,
    center: Point2,
    scale: f64,
    indices: Vec<(usize, usize)>,
}

impl MonomialBasis2D {
    pub fn new(degree: isize, center: Point2, scale: f64) -> Self {
        Self {
            degree,
            center,
            scale,
            indices: multi_indices(degree),
        }
    }

    /// Basis on a polygon, centred at its centroid and scaled by its diameter.
    pub fn on_polygon(poly: &Polygon, degree: isize) -> Self {
        Self::new(degree, poly.centroid(), poly.diameter())
    }

    pub fn degree(&self) -> isize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn powers(&self, p: Point2) -> (Vec<f64>, Vec<f64>) {
        let n = self.degree.max(0) as usize + 1;
        let sx = (p.x - self.center.x) / self.scale;
        let sy = (p.y - self.center.y) / self.scale;
        let mut px = vec![1.0; n];
        let mut py = vec![1.0; n];
        for k in 1..n {
            px[k] = px[k - 1] * sx;
            py[k] = py[k - 1] * sy;
        }
        (px, py)
    }

    /// Values of all basis monomials at `p`.
    pub fn eval(&self, p: Point2) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.eval_into(p, out.as_mut_slice());
        out
    }

    pub fn eval_into(&self, p: Point2, out: &mut [f64]) {
        let (px, py) = self.powers(p);
        for (o, &(a1, a2)) in out.iter_mut().zip(&self.indices) {
            *o = px[a1] * py[a2];
        }
    }

    /// Gradients as a `2 × dim` matrix.
    pub fn grad(&self, p: Point2) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(2, self.dim());
        let (px, py) = self.powers(p);
        let inv = 1.0 / self.scale;
        for (j, &(a1, a2)) in self.indices.iter().enumerate() {
            if a1 > 0 {
                g[(0, j)] = a1 as f64 * px[a1 - 1] * py[a2] * inv;
            }
            if a2 > 0 {
                g[(1, j)] = a2 as f64 * px[a1] * py[a2 - 1] * inv;
            }
        }
        g
    }

    /// Value of the polynomial with coefficient vector `coeffs` at `p`.
    pub fn eval_poly(&self, coeffs: &[f64], p: Point2) -> f64 {
        let (px, py) = self.powers(p);
        coeffs
            .iter()
            .zip(&self.indices)
            .map(|(c, &(a1, a2))| c * px[a1] * py[a2])
            .sum()
    }

    /// Gradient of the polynomial with coefficient vector `coeffs` at `p`.
    pub fn grad_poly(&self, coeffs: &[f64], p: Point2) -> [f64; 2] {
        let g = self.grad(p);
        let mut out = [0.0; 2];
        for (j, c) in coeffs.iter().enumerate() {
            out[0] += c * g[(0, j)];
            out[1] += c * g[(1, j)];
        }
        out
    }

    /// `Δm_α` expanded in the basis of degree `degree - 2` (same centre and scale).
    ///
    /// Returns the zero vector for `|α| ≤ 1` and an empty vector when `degree < 2`.
    pub fn laplacian_in_basis(&self, alpha: (usize, usize)) -> DVector<f64> {
        let mut out = DVector::zeros(dim_p(self.degree - 2));
        let h2 = self.scale * self.scale;
        let (a1, a2) = alpha;
        if a1 >= 2 {
            out[multi_index_position(a1 - 2, a2)] += (a1 * (a1 - 1)) as f64 / h2;
        }
        if a2 >= 2 {
            out[multi_index_position(a1, a2 - 2)] += (a2 * (a2 - 1)) as f64 / h2;
        }
        out
    }
}

/// Shifted and scaled monomials `((s - s_mid)/h_e)^α` along an oriented edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeBasis {
    pub degree: isize,
    pub start: Point2,
    pub end: Point2,
}

impl EdgeBasis {
    pub fn new(degree: isize, start: Point2, end: Point2) -> Self {
        Self { degree, start, end }
    }

    pub fn dim(&self) -> usize {
        (self.degree + 1).max(0) as usize
    }

    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }

    /// Values at parameter `t ∈ [0, 1]` (arclength / edge length).
    pub fn eval_param(&self, t: f64) -> Vec<f64> {
        let s = t - 0.5;
        let mut out = vec![1.0; self.dim()];
        for k in 1..out.len() {
            out[k] = out[k - 1] * s;
        }
        out
    }

    /// Values at a point on the edge.
    pub fn eval(&self, p: Point2) -> Vec<f64> {
        let d = self.end - self.start;
        self.eval_param((p - self.start).dot(d) / d.dot(d))
    }

    /// `∫_e m_α m_β ds = h_e ∫_{-1/2}^{1/2} s^{α+β} ds`.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let h = self.length();
        DMatrix::from_fn(n, n, |a, b| {
            let k = a + b;
            if k % 2 == 1 {
                0.0
            } else {
                h * 2.0 * 0.5f64.powi(k as i32 + 1) / (k as f64 + 1.0)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_basis(p: isize) -> MonomialBasis2D {
        MonomialBasis2D::new(p, Point2::new(0.5, 0.5), 2f64.sqrt())
    }

    #[test]
    fn ordering() {
        assert_eq!(
            multi_indices(2),
            vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        );
        for (i, &(a, b)) in multi_indices(6).iter().enumerate() {
            assert_eq!(multi_index_position(a, b), i);
        }
        assert_eq!(dim_p(-1), 0);
        assert!(multi_indices(-1).is_empty());
    }

    #[test]
    fn values() {
        let b = square_basis(2);
        let v = b.eval(Point2::new(0.5, 0.5));
        assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = b.eval(Point2::new(1.0, 0.5));
        assert!((v[1] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        let v = b.eval(Point2::new(1.0, 1.0));
        assert!((v[4] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn gradients() {
        let b = square_basis(2);
        let h = 2f64.sqrt();
        let g = b.grad(Point2::new(0.3, 0.9));
        assert!((g[(0, 1)] - 1.0 / h).abs() < 1e-15 && g[(1, 1)] == 0.0);
        let g = b.grad(Point2::new(0.5, 0.5));
        assert_eq!((g[(0, 5)], g[(1, 5)]), (0.0, 0.0));
        let g = b.grad(Point2::new(1.0, 1.0));
        assert!((g[(0, 4)] - 0.25).abs() < 1e-15 && (g[(1, 4)] - 0.25).abs() < 1e-15);
        assert_eq!((g[(0, 0)], g[(1, 0)]), (0.0, 0.0));
    }

    #[test]
    fn laplacians() {
        let b = square_basis(4);
        let h2 = 2.0;
        let l = b.laplacian_in_basis((2, 0));
        assert!((l[0] - 2.0 / h2).abs() < 1e-15);
        assert!(l.iter().skip(1).all(|&x| x == 0.0));
        assert!(b.laplacian_in_basis((1, 1)).iter().all(|&x| x == 0.0));
        let l = b.laplacian_in_basis((3, 1));
        assert!((l[multi_index_position(1, 1)] - 6.0 / h2).abs() < 1e-15);
        assert_eq!(square_basis(1).laplacian_in_basis((1, 0)).len(), 0);
    }

    #[test]
    fn edge_mass() {
        let e = EdgeBasis::new(2, Point2::new(0.0, 0.0), Point2::new(2.0, 0.0));
        let m = e.mass_matrix();
        assert!((m[(0, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        assert!((m[(1, 1)] - 2.0 / 12.0).abs() < 1e-15);
    }
}
