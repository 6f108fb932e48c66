use nalgebra::DMatrix;

/// Continuous Lagrange element of degree `k` on the reference triangle
/// `(0,0), (1,0), (0,1)` with equispaced nodes.
///
/// Node order: the three vertices, then `k - 1` nodes along each edge
/// `0→1`, `1→2`, `2→0` (in that direction), then interior nodes.
#[derive(Debug, Clone)]
pub struct LagrangeTriangle {
    k: usize,
    nodes: Vec<[f64; 2]>,
    exps: Vec<(usize, usize)>,
    /// `φ_i = Σ_m coeffs[(m, i)] ξ^a η^b`
    coeffs: DMatrix<f64>,
}

impl LagrangeTriangle {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1);
        let kf = k as f64;
        let bary = |i: usize, j: usize| [i as f64 / kf, j as f64 / kf];
        let mut nodes = vec![bary(0, 0), bary(k, 0), bary(0, k)];
        for s in 1..k {
            nodes.push(bary(s, 0));
        }
        for s in 1..k {
            nodes.push(bary(k - s, s));
        }
        for s in 1..k {
            nodes.push(bary(0, k - s));
        }
        for j in 1..k {
            for i in 1..k - j {
                nodes.push(bary(i, j));
            }
        }
        let exps: Vec<(usize, usize)> = (0..=k)
            .flat_map(|d| (0..=d).map(move |b| (d - b, b)))
            .collect();
        let n = nodes.len();
        debug_assert_eq!(n, exps.len());
        let v = DMatrix::from_fn(n, n, |i, m| {
            let (a, b) = exps[m];
            nodes[i][0].powi(a as i32) * nodes[i][1].powi(b as i32)
        });
        let coeffs = v.try_inverse().expect("equispaced Vandermonde is invertible");
        Self {
            k,
            nodes,
            exps,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Local indices of the nodes on reference edge `e` (`0→1`, `1→2`, `2→0`),
    /// from its first vertex to its second.
    pub fn edge_nodes(&self, e: usize) -> Vec<usize> {
        let k = self.k;
        let mut out = vec![e];
        out.extend((0..k - 1).map(|s| 3 + e * (k - 1) + s));
        out.push((e + 1) % 3);
        out
    }

    /// Basis values at a reference point.
    pub fn eval(&self, xi: [f64; 2]) -> Vec<f64> {
        let mono: Vec<f64> = self
            .exps
            .iter()
            .map(|&(a, b)| xi[0].powi(a as i32) * xi[1].powi(b as i32))
            .collect();
        (0..self.n_nodes())
            .map(|i| mono.iter().enumerate().map(|(m, v)| self.coeffs[(m, i)] * v).sum())
            .collect()
    }

    /// Reference gradients at a reference point.
    pub fn grad(&self, xi: [f64; 2]) -> Vec<[f64; 2]> {
        let pw = |x: f64, e: usize| if e == 0 { 0.0 } else { e as f64 * x.powi(e as i32 - 1) };
        let dm: Vec<[f64; 2]> = self
            .exps
            .iter()
            .map(|&(a, b)| {
                [
                    pw(xi[0], a) * xi[1].powi(b as i32),
                    xi[0].powi(a as i32) * pw(xi[1], b),
                ]
            })
            .collect();
        (0..self.n_nodes())
            .map(|i| {
                let mut g = [0.0; 2];
                for (m, d) in dm.iter().enumerate() {
                    g[0] += self.coeffs[(m, i)] * d[0];
                    g[1] += self.coeffs[(m, i)] * d[1];
                }
                g
            })
            .collect()
    }
}

/// Equispaced 1D Lagrange basis of degree `k` on `[0, 1]` evaluated at `s`.
pub fn equispaced_1d(k: usize, s: f64) -> Vec<f64> {
    let nodes: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
    crate::space::lagrange_basis(&nodes, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_and_partition_of_unity() {
        for k in 1..=6 {
            let el = LagrangeTriangle::new(k);
            assert_eq!(el.n_nodes(), (k + 1) * (k + 2) / 2);
            for (i, &x) in el.nodes().iter().enumerate() {
                let v = el.eval(x);
                for (j, vj) in v.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((vj - want).abs() < 1e-10, "k={k}");
                }
            }
            let g = el.grad([0.21, 0.33]);
            let sx: f64 = g.iter().map(|g| g[0]).sum();
            let sy: f64 = g.iter().map(|g| g[1]).sum();
            assert!(sx.abs() < 1e-9 && sy.abs() < 1e-9);
            for e in 0..3 {
                let ids = el.edge_nodes(e);
                assert_eq!(ids.len(), k + 1);
            }
        }
    }

    #[test]
    fn edge_nodes_are_ordered() {
        let el = LagrangeTriangle::new(4);
        let ids = el.edge_nodes(1);
        let pts: Vec<_> = ids.iter().map(|&i| el.nodes()[i]).collect();
        for w in pts.windows(2) {
            assert!(w[1][1] > w[0][1]);
            assert!((w[0][0] + w[0][1] - 1.0).abs() < 1e-15);
        }
    }
}
