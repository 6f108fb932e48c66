//! Ground truth for virtual functions: each basis function is computed as a
//! high-order finite element solution of its defining local problem on a
//! refined triangulation of the element.

mod fine;
mod lagrange;

pub use fine::{BaseTriangulation, BoundarySegment, FineSpace, CDT_ANGLE_DEG, FAN_MIN_ANGLE_DEG};
pub use lagrange::{equispaced_1d, LagrangeTriangle};

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};
use crate::mesh::{Point2, Polygon};
use crate::polybasis::{dim_p, MonomialBasis2D};
use crate::space::{lagrange_basis, lobatto_params, DofDescriptor, LocalSpace};

/// DoF reproduction error above which an oracle basis is rejected.
pub const UNISOLVENCE_FAILURE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Refinement level of the sub-triangulation.
    pub level: usize,
    /// Minimum degree of the fine Lagrange space; raised to `p` when needed.
    pub fem_degree: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            level: 4,
            fem_degree: 2,
        }
    }
}

impl OracleConfig {
    pub fn with_level(self, level: usize) -> Self {
        Self { level, ..self }
    }

    /// Degree actually used for a space of degree `p`, so that `P_p` lies in the fine space.
    pub fn effective_degree(&self, p: usize) -> usize {
        self.fem_degree.max(p).max(1)
    }
}

type CacheKey = (Vec<u64>, usize, usize);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<FineSpace>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<FineSpace>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

const CACHE_CAPACITY: usize = 48;

/// Shared fine space (with its factorizations) for a polygon and configuration.
pub fn fine_space(poly: &Polygon, level: usize, degree: usize) -> Result<Arc<FineSpace>> {
    let key: CacheKey = (
        poly.vertices().iter().flat_map(|v| [v.x.to_bits(), v.y.to_bits()]).collect(),
        level,
        degree,
    );
    if let Some(fs) = cache().lock().unwrap().get(&key) {
        return Ok(fs.clone());
    }
    let fs = Arc::new(FineSpace::new(poly, level, degree)?);
    let mut c = cache().lock().unwrap();
    if c.len() >= CACHE_CAPACITY {
        c.clear();
    }
    Ok(c.entry(key).or_insert(fs).clone())
}

/// The virtual basis `{φ_j}` represented on the fine space.
#[derive(Debug, Clone)]
pub struct VirtualBasisOracle {
    pub config: OracleConfig,
    pub fine: Arc<FineSpace>,
    /// `n_fine × N_K`: column `j` holds the fine coefficients of `φ_j`.
    pub basis: DMatrix<f64>,
}

impl VirtualBasisOracle {
    /// Fine coefficients of the virtual function with the given DoFs.
    pub fn function(&self, dofs: &DVector<f64>) -> DVector<f64> {
        &self.basis * dofs
    }

    /// `(∇φ_i, ∇φ_j)_K`, symmetrized.
    pub fn exact_gram(&self) -> DMatrix<f64> {
        let aw = self.fine.stiffness().mul_dense(&self.basis);
        let g = self.basis.transpose() * aw;
        0.5 * (&g + g.transpose())
    }

    /// `max_ij |dof_i(φ_j) - δ_ij|`.
    pub fn unisolvence_error(&self, space: &LocalSpace) -> Result<f64> {
        let n = space.n_dofs();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let d = dofs_of_fine(space, &self.fine, &self.basis.column(j).into_owned())?;
            for i in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d[i] - want).abs());
            }
        }
        Ok(worst)
    }
}

/// Solves for the virtual basis of any space family.
pub fn solve_basis(space: &LocalSpace, config: OracleConfig) -> Result<VirtualBasisOracle> {
    let p = space.kind().degree;
    let fine = fine_space(space.polygon(), config.level, config.effective_degree(p))?;
    let basis = if space.kind().family.is_conforming() {
        conforming_basis(space, &fine)?
    } else {
        nonconforming_basis(space, &fine)?
    };
    let oracle = VirtualBasisOracle {
        config,
        fine,
        basis,
    };
    let err = oracle.unisolvence_error(space)?;
    if !(err <= UNISOLVENCE_FAILURE) {
        return Err(VemError::Oracle(format!(
            "DoFs of the computed basis deviate from the identity by {err:.3e}"
        )));
    }
    Ok(oracle)
}

pub fn solve_basis_conforming(space: &LocalSpace, config: OracleConfig) -> Result<VirtualBasisOracle> {
    if !space.kind().family.is_conforming() {
        return Err(VemError::Unsupported("expected a conforming space".into()));
    }
    solve_basis(space, config)
}

pub fn solve_basis_nonconforming(
    space: &LocalSpace,
    config: OracleConfig,
) -> Result<VirtualBasisOracle> {
    if space.kind().family.is_conforming() {
        return Err(VemError::Unsupported("expected a nonconforming space".into()));
    }
    solve_basis(space, config)
}

/// Bulk moment constraints: the multiplier space and the target moments
/// `∫_K φ_j m_α` (internal DoFs, plus `Π∇`-moments for enhanced spaces).
fn bulk_constraints(space: &LocalSpace) -> (MonomialBasis2D, DMatrix<f64>) {
    let p = space.kind().p();
    let enhanced = space.kind().family.is_enhanced();
    let deg = if enhanced { p } else { p - 2 };
    let basis = MonomialBasis2D::on_polygon(space.polygon(), deg);
    let n = space.n_dofs();
    let ni = space.dof_table().n_internal();
    let mut targets = DMatrix::zeros(basis.dim(), n);
    if enhanced {
        let hp = space.mass() * &space.projectors().pi_nabla;
        for a in ni..basis.dim() {
            targets.row_mut(a).copy_from(&hp.row(a));
        }
    }
    for k in 0..ni {
        targets[(k, space.dof_table().internal_dof(k))] = space.polygon().area();
    }
    (basis, targets)
}

/// Boundary values of each basis function at the fine boundary nodes.
fn conforming_traces(space: &LocalSpace, fine: &FineSpace) -> DMatrix<f64> {
    let p = space.kind().degree;
    let k = fine.degree();
    let gll = lobatto_params(p);
    let table = space.dof_table();
    let poly = space.polygon();
    let mut tb = DMatrix::zeros(fine.n_nodes(), space.n_dofs());
    for (e, edge) in poly.edges().iter().enumerate() {
        for seg in fine.segments(e) {
            for (l, &i) in seg.nodes.iter().enumerate() {
                let t = seg.t0 + (seg.t1 - seg.t0) * l as f64 / k as f64;
                let lb = lagrange_basis(&gll, t);
                let mut row = vec![0.0; space.n_dofs()];
                row[table.vertex_dof(edge.start)] += lb[0];
                row[table.vertex_dof(edge.end)] += lb[p];
                for node in 1..p {
                    row[table.edge_dof(e, node - 1)] += lb[node];
                }
                for (j, v) in row.into_iter().enumerate() {
                    tb[(i, j)] = v;
                }
            }
        }
    }
    tb
}

/// Harmonic-type extension with Dirichlet trace, bulk multiplier in `P_{p-2}`
/// (or `P_p`), solved by a Schur complement on the multiplier.
fn conforming_basis(space: &LocalSpace, fine: &FineSpace) -> Result<DMatrix<f64>> {
    let n = space.n_dofs();
    let tb = conforming_traces(space, fine);
    let (lbasis, targets) = bulk_constraints(space);
    let m = fine.moment_matrix(&lbasis)?;
    let interior = fine.interior_nodes();
    let factor = fine.interior_factor()?;

    let atb = fine.stiffness().mul_dense(&tb);
    let rows = |x: &DMatrix<f64>| x.select_rows(interior.iter());
    let y = factor.solve_dense(&rows(&atb));
    let mut w_i = -y.clone();
    if lbasis.dim() > 0 {
        let m_i = rows(&m);
        let wm = factor.solve_dense(&m_i);
        let schur = m_i.transpose() * &wm;
        let rhs = &targets - m.transpose() * &tb + m_i.transpose() * &y;
        let lambda = schur
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .or_else(|| schur.lu().solve(&rhs))
            .ok_or_else(|| VemError::Oracle("singular bulk constraint system".into()))?;
        w_i += wm * lambda;
    }
    let mut w = tb;
    for (r, &i) in interior.iter().enumerate() {
        w.row_mut(i).copy_from(&w_i.row(r));
    }
    debug_assert_eq!(w.ncols(), n);
    Ok(w)
}

/// Neumann-type problem with edge multipliers in `P_{p-1}(e)` and a bulk
/// multiplier; the constant is fixed by pinning node 0 and restoring it
/// through the compatibility row.
fn nonconforming_basis(space: &LocalSpace, fine: &FineSpace) -> Result<DMatrix<f64>> {
    let p = space.kind().degree;
    let n = space.n_dofs();
    let poly = space.polygon();
    let table = space.dof_table();
    let (lbasis, bulk_targets) = bulk_constraints(space);

    let ne = poly.n_vertices();
    let nc = ne * p + lbasis.dim();
    let nf = fine.n_nodes();
    let mut c = DMatrix::zeros(nc, nf);
    let mut t = DMatrix::zeros(nc, n);
    for e in 0..ne {
        let em = fine.edge_moment_matrix(e, p)?;
        for a in 0..p {
            c.row_mut(e * p + a).copy_from(&em.column(a).transpose());
            t[(e * p + a, table.edge_dof(e, a))] = poly.edges()[e].length;
        }
    }
    if lbasis.dim() > 0 {
        let m = fine.moment_matrix(&lbasis)?;
        for a in 0..lbasis.dim() {
            c.row_mut(ne * p + a).copy_from(&m.column(a).transpose());
            t.row_mut(ne * p + a).copy_from(&bulk_targets.row(a));
        }
    }

    let factor = fine.pinned_factor()?;
    let c_pinned = c.columns(1, nf - 1).into_owned();
    let w = factor.solve_dense(&c_pinned.transpose());
    let b1: DVector<f64> = c.column_sum();
    let mut kkt = DMatrix::zeros(nc + 1, nc + 1);
    kkt.view_mut((0, 0), (nc, nc)).copy_from(&(&c_pinned * &w));
    for r in 0..nc {
        kkt[(r, nc)] = b1[r];
        kkt[(nc, r)] = b1[r];
    }
    let mut rhs = DMatrix::zeros(nc + 1, n);
    rhs.view_mut((0, 0), (nc, n)).copy_from(&t);
    let sol = kkt
        .lu()
        .solve(&rhs)
        .ok_or_else(|| VemError::Oracle("singular nonconforming constraint system".into()))?;
    let nu = sol.rows(0, nc).into_owned();
    let shift = sol.row(nc).into_owned();
    let inner = w * nu;
    let mut out = DMatrix::zeros(nf, n);
    for j in 0..n {
        out[(0, j)] = shift[j];
        for i in 1..nf {
            out[(i, j)] = inner[(i - 1, j)] + shift[j];
        }
    }
    Ok(out)
}

/// Applies the DoF functionals of `space` to a fine function.
pub fn dofs_of_fine(space: &LocalSpace, fine: &FineSpace, u: &DVector<f64>) -> Result<DVector<f64>> {
    let p = space.kind().degree;
    let poly = space.polygon();
    let gll = lobatto_params(p);
    let mut out = DVector::zeros(space.n_dofs());
    let mut edge_cache: HashMap<usize, DVector<f64>> = HashMap::new();
    let internal = if space.dof_table().n_internal() > 0 {
        let b = MonomialBasis2D::on_polygon(poly, p as isize - 2);
        Some(fine.moment_matrix(&b)?.transpose() * u / poly.area())
    } else {
        None
    };
    for (i, d) in space.dof_table().descriptors().iter().enumerate() {
        out[i] = match *d {
            DofDescriptor::Vertex(k) => u[fine.vertex_node(k)],
            DofDescriptor::EdgeNode { edge, node } => fine.trace_at(edge, gll[node], u),
            DofDescriptor::EdgeMoment { edge, alpha } => {
                if !edge_cache.contains_key(&edge) {
                    let em = fine.edge_moment_matrix(edge, p)?;
                    edge_cache.insert(edge, em.transpose() * u / poly.edges()[edge].length);
                }
                edge_cache[&edge][alpha]
            }
            DofDescriptor::Internal { index, .. } => internal.as_ref().unwrap()[index],
        };
    }
    Ok(out)
}

/// `|v|_1`, `inf_q |v - q|_1` over `P_p` and the minimizer, for a fine function.
#[derive(Debug, Clone)]
pub struct BestApproximation {
    pub seminorm: f64,
    pub best_error: f64,
    /// Monomial coefficients of the minimizer, with the mean of `v` over `K`.
    pub q: DVector<f64>,
}

pub fn best_approximation(
    poly: &Polygon,
    p: usize,
    fine: &FineSpace,
    u: &DVector<f64>,
) -> Result<BestApproximation> {
    let basis = MonomialBasis2D::on_polygon(poly, p as isize);
    let g = crate::polybasis::grad_gram(poly, &basis)?;
    let h = crate::polybasis::mass_matrix(poly, &basis)?;
    let r = fine.grad_moments(&basis, u)?;
    let nk = basis.dim();
    let energy = fine.energy(u).max(0.0);
    let mut q = DVector::zeros(nk);
    if nk > 1 {
        let g1 = g.view((1, 1), (nk - 1, nk - 1)).into_owned();
        let r1 = r.rows(1, nk - 1).into_owned();
        let sol = g1
            .cholesky()
            .ok_or_else(|| VemError::Oracle("monomial gradient Gram is not SPD".into()))?
            .solve(&r1);
        q.rows_mut(1, nk - 1).copy_from(&sol);
    }
    let b0 = MonomialBasis2D::on_polygon(poly, 0);
    let mean_u = (fine.moment_matrix(&b0)?.transpose() * u)[0] / poly.area();
    let mean_q_rest: f64 = (1..nk).map(|a| h[(0, a)] * q[a]).sum::<f64>() / poly.area();
    q[0] = mean_u - mean_q_rest;
    // P_p lies in the fine space, so the error is measured without cancellation
    let qi = fine.interpolate(&|x| basis.eval_poly(q.as_slice(), x));
    let best2 = fine.energy(&(u - qi)).max(0.0);
    Ok(BestApproximation {
        seminorm: energy.sqrt(),
        best_error: best2.sqrt(),
        q,
    })
}

/// Interpolates `v` on the fine space of the configuration and measures it.
pub fn seminorm_and_best_approx(
    poly: &Polygon,
    v: &dyn Fn(Point2) -> f64,
    p: usize,
    config: OracleConfig,
) -> Result<BestApproximation> {
    let fine = fine_space(poly, config.level, config.effective_degree(p))?;
    let u = fine.interpolate(v);
    best_approximation(poly, p, &fine, &u)
}

/// `|v - v_I|_1` where `v_I` has the DoFs of the fine interpolant of `v`.
#[derive(Debug, Clone)]
pub struct InterpolationError {
    pub error: f64,
    pub dofs: DVector<f64>,
    pub best: BestApproximation,
}

pub fn interpolation_error(
    space: &LocalSpace,
    oracle: &VirtualBasisOracle,
    v: &dyn Fn(Point2) -> f64,
) -> Result<InterpolationError> {
    let fine = &oracle.fine;
    let u = fine.interpolate(v);
    let dofs = dofs_of_fine(space, fine, &u)?;
    let diff = &u - oracle.function(&dofs);
    let error = fine.energy(&diff).max(0.0).sqrt();
    let best = best_approximation(space.polygon(), space.kind().degree, fine, &u)?;
    Ok(InterpolationError { error, dofs, best })
}

/// Relative size of the polynomial reproduction error of the oracle on `P_p`:
/// `max_α |φ(dofs(m_α)) - m_α|` at the fine nodes.
pub fn polynomial_reproduction_error(space: &LocalSpace, oracle: &VirtualBasisOracle) -> f64 {
    let nk = dim_p(space.kind().p());
    let basis = space.basis();
    let mut worst: f64 = 0.0;
    for a in 0..nk {
        let mut q = DVector::zeros(nk);
        q[a] = 1.0;
        let w = oracle.function(&space.dofs_of_polynomial(&q));
        for (i, x) in oracle.fine.nodes().iter().enumerate() {
            worst = worst.max((w[i] - basis.eval_poly(q.as_slice(), *x)).abs());
        }
    }
    worst
}
