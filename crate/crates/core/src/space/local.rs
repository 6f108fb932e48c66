use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dofs::{DofDescriptor, DofTable, SpaceKind};
use crate::error::{Result, VemError};
use crate::mesh::{subtriangulate, Point2, Polygon};
use crate::polybasis::{
    dim_p, edge_quadrature, gauss_lobatto_nodes, grad_gram, mass_matrix, triangle_quadrature,
    EdgeBasis, MonomialBasis2D,
};

/// Condition number above which the projector Gram matrix is treated as singular.
pub const SINGULAR_GRAM_CONDITION: f64 = 1e14;

/// Minimum exactness used when integrating non-polynomial data against the basis.
pub const DATA_QUADRATURE_DEGREE: usize = 16;

/// Sub-triangulation level used when integrating non-polynomial data.
pub const DATA_QUADRATURE_LEVEL: usize = 2;

/// How the constant part of `Π∇_p` is fixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantFix {
    /// `∫_{∂K} (v - Π∇_p v) = 0`
    #[default]
    BoundaryMean,
    /// `∫_K (v - Π∇_p v) = 0` (needs `p ≥ 2`)
    BulkMean,
    /// Arithmetic mean of the vertex values (conforming spaces only).
    VertexMean,
}

/// Computable boundary trace of the DoF basis on one edge, sampled at Gauss points.
///
/// For conforming spaces this is the exact polynomial trace; for nonconforming
/// spaces it is `Π^{0,e}_{p-1}` of the trace, which integrates exactly against `P_{p-1}(e)`.
#[derive(Debug, Clone)]
pub struct EdgeTrace {
    pub points: Vec<Point2>,
    /// Parameters in `[0, 1]` along the CCW edge.
    pub params: Vec<f64>,
    /// Physical weights (summing to `h_e`).
    pub weights: Vec<f64>,
    /// `n_q × N_K`: trace values of each DoF basis function at the points.
    pub values: DMatrix<f64>,
}

/// Coefficient matrices of the computable projectors in the scaled monomial basis.
#[derive(Debug, Clone)]
pub struct ProjectorSet {
    /// `dim P_p × N_K`: DoFs → coefficients of `Π∇_p v`.
    pub pi_nabla: DMatrix<f64>,
    /// `N_K × N_K`: DoFs → DoFs of `Π∇_p v`.
    pub pi_nabla_dof: DMatrix<f64>,
    /// `dim P_{p-2} × N_K`: DoFs → coefficients of `Π0_{p-2} v`.
    pub pi0: DMatrix<f64>,
    /// `dim P_p × N_K` for `Π0_p v` (enhanced families only).
    pub pi0_full: Option<DMatrix<f64>>,
    /// Per edge, `p × N_K` for `Π^{0,e}_{p-1} v` in the edge monomials (nonconforming families only).
    pub pi0_edge: Option<Vec<DMatrix<f64>>>,
    /// Condition estimate of the Gram system solved for `Π∇_p`.
    pub gram_condition: f64,
}

/// Everything computable about one virtual element: DoFs, bases, projectors, traces.
#[derive(Debug, Clone)]
pub struct LocalSpace {
    poly: Polygon,
    dofs: DofTable,
    basis: MonomialBasis2D,
    mass: DMatrix<f64>,
    grad_gram: DMatrix<f64>,
    d: DMatrix<f64>,
    traces: Vec<EdgeTrace>,
    projectors: ProjectorSet,
    constant_fix: ConstantFix,
}

/// Lagrange basis through `nodes` evaluated at `t`.
pub fn lagrange_basis(nodes: &[f64], t: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|k| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, &tm)| (t - tm) / (nodes[k] - tm))
                .product()
        })
        .collect()
}

/// Gauss–Lobatto nodes of degree `p` mapped to `[0, 1]`.
pub fn lobatto_params(p: usize) -> Vec<f64> {
    gauss_lobatto_nodes(p)
        .into_iter()
        .map(|x| 0.5 * (x + 1.0))
        .collect()
}

impl LocalSpace {
    pub fn new(poly: &Polygon, kind: SpaceKind) -> Result<Self> {
        Self::with_constant_fix(poly, kind, ConstantFix::default())
    }

    pub fn with_constant_fix(poly: &Polygon, kind: SpaceKind, fix: ConstantFix) -> Result<Self> {
        let p = kind.p();
        match fix {
            ConstantFix::BulkMean if p < 2 => {
                return Err(VemError::Unsupported(
                    "bulk-mean constant fixing needs p >= 2".into(),
                ))
            }
            ConstantFix::VertexMean if !kind.family.is_conforming() => {
                return Err(VemError::Unsupported(
                    "vertex-mean constant fixing needs vertex DoFs".into(),
                ))
            }
            _ => {}
        }
        let dofs = DofTable::new(poly, kind);
        let basis = MonomialBasis2D::on_polygon(poly, p);
        let mass = mass_matrix(poly, &basis)?;
        let grad_gram = grad_gram(poly, &basis)?;
        let d = dof_matrix(poly, &dofs, &basis, &mass)?;

        let pi0_edge = if kind.family.is_conforming() {
            None
        } else {
            Some(edge_projectors(poly, &dofs))
        };
        let traces = edge_traces(poly, &dofs, pi0_edge.as_deref())?;

        let (pi_nabla, gram_condition) =
            compute_pinabla(poly, &dofs, &basis, &d, &traces, fix)?;
        let pi_nabla_dof = &d * &pi_nabla;
        let pi0 = compute_pi0(poly, &dofs, &mass);
        let pi0_full = kind
            .family
            .is_enhanced()
            .then(|| compute_pi0_full(poly, &dofs, &mass, &pi_nabla));

        Ok(Self {
            poly: poly.clone(),
            dofs,
            basis,
            mass,
            grad_gram,
            d,
            traces,
            projectors: ProjectorSet {
                pi_nabla,
                pi_nabla_dof,
                pi0,
                pi0_full,
                pi0_edge,
                gram_condition,
            },
            constant_fix: fix,
        })
    }

    pub fn polygon(&self) -> &Polygon {
        &self.poly
    }

    pub fn kind(&self) -> SpaceKind {
        self.dofs.kind()
    }

    pub fn dof_table(&self) -> &DofTable {
        &self.dofs
    }

    /// `N_K`
    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn basis(&self) -> &MonomialBasis2D {
        &self.basis
    }

    /// Mass matrix of `P_p(K)` in the scaled monomials.
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// `(∇m_α, ∇m_β)_K` for `|α|, |β| ≤ p`.
    pub fn grad_gram(&self) -> &DMatrix<f64> {
        &self.grad_gram
    }

    /// `N_K × dim P_p`: column `α` holds the DoFs of `m_α`.
    pub fn dof_matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn traces(&self) -> &[EdgeTrace] {
        &self.traces
    }

    pub fn projectors(&self) -> &ProjectorSet {
        &self.projectors
    }

    pub fn constant_fix(&self) -> ConstantFix {
        self.constant_fix
    }

    /// DoF vector of the polynomial with monomial coefficients `q` (degree ≤ p).
    pub fn dofs_of_polynomial(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.d * q
    }

    /// DoF vector of the constant function 1.
    pub fn dofs_of_one(&self) -> DVector<f64> {
        self.d.column(0).into_owned()
    }

    /// Applies the DoF functionals to a function given pointwise.
    ///
    /// Moments are integrated on the level-2 sub-triangulation (and on four
    /// sub-segments per edge) with exactness `max(2p + 2, 16)`.
    pub fn interpolate_dofs(&self, v: &dyn Fn(Point2) -> f64) -> Result<DVector<f64>> {
        let p = self.kind().degree;
        let n = self.poly.n_vertices();
        let qdeg = (2 * p + 2).max(DATA_QUADRATURE_DEGREE);
        let mut out = DVector::zeros(self.n_dofs());
        let gll = lobatto_params(p);

        for (i, desc) in self.dofs.descriptors().iter().enumerate() {
            match *desc {
                DofDescriptor::Vertex(k) => out[i] = v(self.poly.vertex(k)),
                DofDescriptor::EdgeNode { edge, node } => {
                    out[i] = v(self.poly.edge_point(edge, gll[node]))
                }
                _ => {}
            }
        }

        if !self.kind().family.is_conforming() {
            for e in 0..n {
                let edge = self.poly.edges()[e];
                let m = edge_moments(
                    self.poly.vertex(edge.start),
                    self.poly.vertex(edge.end),
                    p,
                    v,
                )?;
                for (a, ma) in m.into_iter().enumerate() {
                    out[self.dofs.edge_dof(e, a)] = ma;
                }
            }
        }

        let ni = self.dofs.n_internal();
        if ni > 0 {
            let moments = self.bulk_moments(v, p as isize - 2, qdeg)?;
            let off = self.dofs.internal_offset();
            for k in 0..ni {
                out[off + k] = moments[k] / self.poly.area();
            }
        }
        Ok(out)
    }

    /// `∫_K f m_α` for `|α| ≤ degree`, by quadrature on the level-2 sub-triangulation.
    pub fn bulk_moments(
        &self,
        f: &dyn Fn(Point2) -> f64,
        degree: isize,
        exactness: usize,
    ) -> Result<DVector<f64>> {
        let basis = MonomialBasis2D::on_polygon(&self.poly, degree);
        let mut acc = DVector::zeros(basis.dim());
        if basis.dim() == 0 {
            return Ok(acc);
        }
        let st = subtriangulate(&self.poly, DATA_QUADRATURE_LEVEL)?;
        let rule = triangle_quadrature(exactness)?;
        let mut vals = vec![0.0; basis.dim()];
        for t in 0..st.n_triangles() {
            let [a, b, c] = st.corners(t);
            for (x, w) in rule.on_triangle(a, b, c) {
                let fx = w * f(x);
                basis.eval_into(x, &mut vals);
                for (acc_k, m) in acc.iter_mut().zip(&vals) {
                    *acc_k += fx * m;
                }
            }
        }
        Ok(acc)
    }
}

/// Scaled edge moments `|e|^{-1} ∫_e m^e_α v`, `α < p`, along the segment `a → b`.
///
/// Integrated on four sub-segments with exactness `max(2p + 2, 16)` each, so
/// polynomial data of degree `≤ 2p + 1` is handled exactly.
pub fn edge_moments(a: Point2, b: Point2, p: usize, v: &dyn Fn(Point2) -> f64) -> Result<Vec<f64>> {
    let rule = edge_quadrature((2 * p + 2).max(DATA_QUADRATURE_DEGREE))?;
    let eb = EdgeBasis::new(p as isize - 1, a, b);
    let pieces = 1usize << DATA_QUADRATURE_LEVEL;
    let mut acc = vec![0.0; p];
    for s in 0..pieces {
        let t0 = s as f64 / pieces as f64;
        let t1 = (s + 1) as f64 / pieces as f64;
        for (tu, w) in rule.unit() {
            let t = t0 + (t1 - t0) * tu;
            let fx = v(a + t * (b - a));
            let m = eb.eval_param(t);
            for k in 0..p {
                acc[k] += w * (t1 - t0) * m[k] * fx;
            }
        }
    }
    Ok(acc)
}

/// `D_{iα} = dof_i(m_α)`.
fn dof_matrix(
    poly: &Polygon,
    dofs: &DofTable,
    basis: &MonomialBasis2D,
    mass: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p = dofs.kind().degree;
    let nk = basis.dim();
    let mut d = DMatrix::zeros(dofs.len(), nk);
    let gll = lobatto_params(p);
    let rule = edge_quadrature(2 * p)?;
    for (i, desc) in dofs.descriptors().iter().enumerate() {
        match *desc {
            DofDescriptor::Vertex(k) => {
                d.row_mut(i).copy_from(&basis.eval(poly.vertex(k)).transpose());
            }
            DofDescriptor::EdgeNode { edge, node } => {
                let x = poly.edge_point(edge, gll[node]);
                d.row_mut(i).copy_from(&basis.eval(x).transpose());
            }
            DofDescriptor::EdgeMoment { edge, alpha } => {
                let e = poly.edges()[edge];
                let eb = EdgeBasis::new(p as isize - 1, poly.vertex(e.start), poly.vertex(e.end));
                for (t, w) in rule.unit() {
                    let me = eb.eval_param(t)[alpha];
                    let m = basis.eval(poly.edge_point(edge, t));
                    for a in 0..nk {
                        d[(i, a)] += w * me * m[a];
                    }
                }
            }
            DofDescriptor::Internal { index, .. } => {
                for a in 0..nk {
                    d[(i, a)] = mass[(index, a)] / poly.area();
                }
            }
        }
    }
    Ok(d)
}

/// `Π^{0,e}_{p-1}` per edge: edge mass solve against the stored moments.
fn edge_projectors(poly: &Polygon, dofs: &DofTable) -> Vec<DMatrix<f64>> {
    let p = dofs.kind().degree;
    poly.edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let eb = EdgeBasis::new(p as isize - 1, poly.vertex(edge.start), poly.vertex(edge.end));
            let minv = eb
                .mass_matrix()
                .cholesky()
                .expect("edge mass matrix is SPD")
                .inverse();
            let mut rhs = DMatrix::zeros(p, dofs.len());
            for a in 0..p {
                rhs[(a, dofs.edge_dof(e, a))] = edge.length;
            }
            minv * rhs
        })
        .collect()
}

fn edge_traces(
    poly: &Polygon,
    dofs: &DofTable,
    pi0_edge: Option<&[DMatrix<f64>]>,
) -> Result<Vec<EdgeTrace>> {
    let p = dofs.kind().degree;
    let n = poly.n_vertices();
    let rule = edge_quadrature(2 * p)?;
    let gll = lobatto_params(p);
    let mut out = Vec::with_capacity(n);
    for (e, edge) in poly.edges().iter().enumerate() {
        let nq = rule.nodes.len();
        let mut values = DMatrix::zeros(nq, dofs.len());
        let mut points = Vec::with_capacity(nq);
        let mut params = Vec::with_capacity(nq);
        let mut weights = Vec::with_capacity(nq);
        for (q, (t, w)) in rule.unit().enumerate() {
            points.push(poly.edge_point(e, t));
            params.push(t);
            weights.push(w * edge.length);
            match pi0_edge {
                None => {
                    let l = lagrange_basis(&gll, t);
                    values[(q, dofs.vertex_dof(edge.start))] += l[0];
                    values[(q, dofs.vertex_dof(edge.end))] += l[p];
                    for k in 1..p {
                        values[(q, dofs.edge_dof(e, k - 1))] += l[k];
                    }
                }
                Some(proj) => {
                    let eb = EdgeBasis::new(
                        p as isize - 1,
                        poly.vertex(edge.start),
                        poly.vertex(edge.end),
                    );
                    let m = DVector::from_vec(eb.eval_param(t));
                    values.row_mut(q).copy_from(&(m.transpose() * &proj[e]));
                }
            }
        }
        out.push(EdgeTrace {
            points,
            params,
            weights,
            values,
        });
    }
    Ok(out)
}

/// Solves `G Π = B` where row 0 carries the constant fixing and rows `α ≥ 1`
/// carry `(∇m_α, ∇v) = -(Δm_α, v)_K + (n·∇m_α, v)_{∂K}`.
fn compute_pinabla(
    poly: &Polygon,
    dofs: &DofTable,
    basis: &MonomialBasis2D,
    d: &DMatrix<f64>,
    traces: &[EdgeTrace],
    fix: ConstantFix,
) -> Result<(DMatrix<f64>, f64)> {
    let nk = basis.dim();
    let ndof = dofs.len();
    let mut b = DMatrix::zeros(nk, ndof);

    match fix {
        ConstantFix::BoundaryMean => {
            let per = poly.perimeter();
            for tr in traces {
                for (q, w) in tr.weights.iter().enumerate() {
                    for j in 0..ndof {
                        b[(0, j)] += w * tr.values[(q, j)] / per;
                    }
                }
            }
        }
        ConstantFix::BulkMean => b[(0, dofs.internal_dof(0))] = 1.0,
        ConstantFix::VertexMean => {
            let nv = dofs.n_vertex_dofs();
            for v in 0..nv {
                b[(0, dofs.vertex_dof(v))] = 1.0 / nv as f64;
            }
        }
    }

    for (a, &alpha) in basis.indices().iter().enumerate().skip(1) {
        let lap = basis.laplacian_in_basis(alpha);
        for (k, c) in lap.iter().enumerate() {
            if *c != 0.0 {
                b[(a, dofs.internal_dof(k))] -= poly.area() * c;
            }
        }
    }
    for (tr, edge) in traces.iter().zip(poly.edges()) {
        for (q, (&x, &w)) in tr.points.iter().zip(&tr.weights).enumerate() {
            let g = basis.grad(x);
            for a in 1..nk {
                let dn = edge.normal.x * g[(0, a)] + edge.normal.y * g[(1, a)];
                if dn == 0.0 {
                    continue;
                }
                for j in 0..ndof {
                    b[(a, j)] += w * dn * tr.values[(q, j)];
                }
            }
        }
    }

    let g = &b * d;
    let sv = g.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < SINGULAR_GRAM_CONDITION) {
        return Err(VemError::SingularGram { condition });
    }
    let lu = g.lu();
    let pi = lu
        .solve(&b)
        .ok_or(VemError::SingularGram { condition })?;
    Ok((pi, condition))
}

/// `Π0_{p-2}` from the internal moments: `H Π = |K| I_internal`.
fn compute_pi0(poly: &Polygon, dofs: &DofTable, mass: &DMatrix<f64>) -> DMatrix<f64> {
    let ni = dofs.n_internal();
    let mut rhs = DMatrix::zeros(ni, dofs.len());
    if ni == 0 {
        return rhs;
    }
    for k in 0..ni {
        rhs[(k, dofs.internal_dof(k))] = poly.area();
    }
    let h = mass.view((0, 0), (ni, ni)).into_owned();
    h.cholesky().expect("monomial mass matrix is SPD").solve(&rhs)
}

/// `Π0_p` for enhanced spaces: moments of degree `≤ p-2` from the DoFs and
/// moments of degree `p-1, p` from `Π∇_p`.
fn compute_pi0_full(
    poly: &Polygon,
    dofs: &DofTable,
    mass: &DMatrix<f64>,
    pi_nabla: &DMatrix<f64>,
) -> DMatrix<f64> {
    let nk = mass.nrows();
    let ni = dofs.n_internal();
    let mut rhs = mass * pi_nabla;
    for k in 0..ni {
        rhs.row_mut(k).fill(0.0);
        rhs[(k, dofs.internal_dof(k))] = poly.area();
    }
    debug_assert_eq!(nk, dim_p(dofs.kind().p()));
    mass.clone()
        .cholesky()
        .expect("monomial mass matrix is SPD")
        .solve(&rhs)
}
