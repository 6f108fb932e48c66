//! Poisson solver: local forms, assembly with Dirichlet elimination, linear
//! solve, and the computable `H¹` error `|u - Π∇_p u_h|`.

mod mms;

pub use mms::{ExactSolution, Manufactured};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mesh::{subtriangulate, Point2, PolygonalMesh};
use crate::polybasis::triangle_quadrature;
use crate::space::{
    edge_moments, lobatto_params, ConstantFix, DofDescriptor, LocalSpace, SpaceKind,
    DATA_QUADRATURE_DEGREE, DATA_QUADRATURE_LEVEL,
};
use crate::sparse::{pcg, CsrMatrix, EnvelopeCholesky, TripletBuilder};
use crate::stab::{stabilization, StabKind};

/// Local stiffness split into its consistency and stability parts.
#[derive(Debug, Clone)]
pub struct LocalElementMatrices {
    /// `Π∇ᵀ G Π∇` with `G` the exact gradient Gram matrix of the monomials.
    pub consistency: DMatrix<f64>,
    pub stabilization: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

pub fn local_stiffness(space: &LocalSpace, stab: StabKind) -> LocalElementMatrices {
    let pi = &space.projectors().pi_nabla;
    let c = pi.transpose() * space.grad_gram() * pi;
    let consistency = 0.5 * (&c + c.transpose());
    let stabilization = stabilization(space, stab).s;
    let a = &consistency + &stabilization;
    LocalElementMatrices {
        consistency,
        stabilization,
        a,
    }
}

/// Load vector `(f, Π0_{p-2} v_h)_K`; for `p = 1` the one-point rule
/// `|K| f(x_K)` spread evenly over the vertex (or edge) DoFs.
pub fn local_load(space: &LocalSpace, f: &dyn Fn(Point2) -> f64) -> Result<DVector<f64>> {
    let p = space.kind().degree;
    let n = space.n_dofs();
    if p == 1 {
        let poly = space.polygon();
        let share = poly.area() * f(poly.centroid()) / n as f64;
        return Ok(DVector::from_element(n, share));
    }
    let exactness = (2 * p + 2).max(DATA_QUADRATURE_DEGREE);
    let moments = space.bulk_moments(f, p as isize - 2, exactness)?;
    Ok(space.projectors().pi0.transpose() * moments)
}

/// Local-to-global DoF numbering with orientation signs.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub kind: SpaceKind,
    pub n_global: usize,
    /// Per cell, `(global index, sign)` for each local DoF.
    pub cells: Vec<Vec<(usize, f64)>>,
    pub dirichlet: Vec<bool>,
}

/// Shared DoFs use the canonical edge orientation (lower vertex index first):
/// Gauss–Lobatto node `k` becomes `p - k` and edge moment `α` picks up `(-1)^α`
/// when a cell traverses the edge the other way.
pub fn build_dof_map(mesh: &PolygonalMesh, kind: SpaceKind) -> DofMap {
    let p = kind.degree;
    let nv = mesh.vertices().len();
    let ne = mesh.edges().len();
    let conforming = kind.family.is_conforming();
    let per_edge = if conforming { p - 1 } else { p };
    let skeleton = if conforming { nv } else { 0 } + ne * per_edge;
    let mut cells = Vec::with_capacity(mesh.n_cells());
    let mut n_internal = 0;
    for c in 0..mesh.n_cells() {
        let table = crate::space::DofTable::new(mesh.polygon(c), kind);
        let ni = table.n_internal();
        n_internal = ni;
        let verts = &mesh.cells()[c];
        let edges = mesh.cell_edges(c);
        let map = table
            .descriptors()
            .iter()
            .map(|d| match *d {
                DofDescriptor::Vertex(k) => (verts[k], 1.0),
                DofDescriptor::EdgeNode { edge, node } => {
                    let ge = edges[edge];
                    let node = if reversed(mesh, c, edge) { p - node } else { node };
                    (nv + ge * per_edge + node - 1, 1.0)
                }
                DofDescriptor::EdgeMoment { edge, alpha } => {
                    let ge = edges[edge];
                    let sign = if reversed(mesh, c, edge) && alpha % 2 == 1 { -1.0 } else { 1.0 };
                    (ge * per_edge + alpha, sign)
                }
                DofDescriptor::Internal { index, .. } => (skeleton + c * ni + index, 1.0),
            })
            .collect();
        cells.push(map);
    }
    let n_global = skeleton + mesh.n_cells() * n_internal;
    let mut dirichlet = vec![false; n_global];
    for (ge, e) in mesh.edges().iter().enumerate() {
        if !e.is_boundary() {
            continue;
        }
        if conforming {
            dirichlet[e.lo] = true;
            dirichlet[e.hi] = true;
        }
        let base = if conforming { nv } else { 0 } + ge * per_edge;
        for k in 0..per_edge {
            dirichlet[base + k] = true;
        }
    }
    DofMap {
        kind,
        n_global,
        cells,
        dirichlet,
    }
}

fn reversed(mesh: &PolygonalMesh, cell: usize, local_edge: usize) -> bool {
    let ge = mesh.cell_edges(cell)[local_edge];
    mesh.edges()[ge]
        .cells
        .iter()
        .find(|&&(c, k, _)| c == cell && k == local_edge)
        .map(|&(_, _, r)| r)
        .expect("edge adjacency is consistent")
}

/// Global DoF values of the Dirichlet data (zero at free DoFs).
pub fn dirichlet_values(
    mesh: &PolygonalMesh,
    map: &DofMap,
    g: &dyn Fn(Point2) -> f64,
) -> Result<Vec<f64>> {
    let p = map.kind.degree;
    let nv = mesh.vertices().len();
    let conforming = map.kind.family.is_conforming();
    let mut vals = vec![0.0; map.n_global];
    let gll = lobatto_params(p);
    let xs = mesh.vertices();
    for (ge, e) in mesh.edges().iter().enumerate() {
        if !e.is_boundary() {
            continue;
        }
        let (a, b) = (xs[e.lo], xs[e.hi]);
        if conforming {
            vals[e.lo] = g(a);
            vals[e.hi] = g(b);
            for k in 1..p {
                vals[nv + ge * (p - 1) + k - 1] = g(a + gll[k] * (b - a));
            }
        } else {
            for (alpha, m) in edge_moments(a, b, p, g)?.into_iter().enumerate() {
                vals[ge * p + alpha] = m;
            }
        }
    }
    Ok(vals)
}

/// How the eliminated system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum LinearSolver {
    /// Jacobi-preconditioned conjugate gradients.
    Cg { tol: f64, max_iter: usize },
    /// Envelope Cholesky after reverse Cuthill–McKee ordering.
    Direct,
}

impl Default for LinearSolver {
    fn default() -> Self {
        Self::Cg {
            tol: 1e-12,
            max_iter: 50_000,
        }
    }
}

/// Everything fixed before assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub kind: SpaceKind,
    pub stab: StabKind,
    #[serde(default)]
    pub constant_fix: ConstantFix,
}

impl Discretization {
    pub fn new(kind: SpaceKind, stab: StabKind) -> Self {
        Self {
            kind,
            stab,
            constant_fix: ConstantFix::default(),
        }
    }
}

/// The eliminated global system and the per-element data it was built from.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub disc: Discretization,
    pub dof_map: DofMap,
    pub spaces: Vec<LocalSpace>,
    /// Free-by-free block.
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Global index of each free unknown.
    pub free: Vec<usize>,
    /// Dirichlet values in global numbering (zero at free DoFs).
    pub boundary: Vec<f64>,
}

/// Builds local spaces and matrices in parallel, then accumulates them in
/// cell order so the result is bit-reproducible.
pub fn assemble(
    mesh: &PolygonalMesh,
    disc: Discretization,
    f: &dyn Fn(Point2) -> f64,
    g: &dyn Fn(Point2) -> f64,
) -> Result<GlobalSystem>
where
{
    let map = build_dof_map(mesh, disc.kind);
    let spaces: Vec<LocalSpace> = mesh
        .polygons()
        .par_iter()
        .map(|poly| LocalSpace::with_constant_fix(poly, disc.kind, disc.constant_fix))
        .collect::<Result<_>>()?;
    let locals: Vec<DMatrix<f64>> = spaces
        .par_iter()
        .map(|s| local_stiffness(s, disc.stab).a)
        .collect();
    let loads: Vec<DVector<f64>> = spaces
        .iter()
        .map(|s| local_load(s, f))
        .collect::<Result<_>>()?;
    let boundary = dirichlet_values(mesh, &map, g)?;

    let mut free_index = vec![usize::MAX; map.n_global];
    let mut free = Vec::new();
    for (i, &d) in map.dirichlet.iter().enumerate() {
        if !d {
            free_index[i] = free.len();
            free.push(i);
        }
    }
    let nf = free.len();
    let mut trip = TripletBuilder::new(nf, nf);
    let mut rhs = vec![0.0; nf];
    for (c, cell) in map.cells.iter().enumerate() {
        let a = &locals[c];
        for (i, &(gi, si)) in cell.iter().enumerate() {
            let fi = free_index[gi];
            if fi == usize::MAX {
                continue;
            }
            rhs[fi] += si * loads[c][i];
            for (j, &(gj, sj)) in cell.iter().enumerate() {
                let v = si * sj * a[(i, j)];
                let fj = free_index[gj];
                if fj == usize::MAX {
                    rhs[fi] -= v * boundary[gj];
                } else {
                    trip.push(fi, fj, v);
                }
            }
        }
    }
    Ok(GlobalSystem {
        disc,
        dof_map: map,
        spaces,
        matrix: trip.build(),
        rhs,
        free,
        boundary,
    })
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Global DoF vector including the Dirichlet values.
    pub u: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub n_free: usize,
}

impl SolveResult {
    /// Local DoF vector of cell `c` in the cell's own orientation.
    pub fn local_dofs(&self, map: &DofMap, c: usize) -> DVector<f64> {
        DVector::from_iterator(map.cells[c].len(), map.cells[c].iter().map(|&(g, s)| s * self.u[g]))
    }
}

pub fn solve(system: &GlobalSystem, method: LinearSolver) -> Result<SolveResult> {
    let nf = system.free.len();
    let (x, iterations, relative_residual) = if nf == 0 {
        (vec![], 0, 0.0)
    } else {
        match method {
            LinearSolver::Cg { tol, max_iter } => {
                let (x, rep) = pcg(&system.matrix, &system.rhs, tol, max_iter)?;
                (x, rep.iterations, rep.relative_residual)
            }
            LinearSolver::Direct => {
                let x = EnvelopeCholesky::factor(&system.matrix)?.solve(&system.rhs);
                let r = system.matrix.mul_vec(&x);
                let num: f64 = r.iter().zip(&system.rhs).map(|(a, b)| (a - b).powi(2)).sum();
                let den: f64 = system.rhs.iter().map(|b| b * b).sum();
                let rel = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
                (x, 1, rel)
            }
        }
    };
    let mut u = system.boundary.clone();
    for (k, &gi) in system.free.iter().enumerate() {
        u[gi] = x[k];
    }
    Ok(SolveResult {
        u,
        iterations,
        relative_residual,
        n_free: nf,
    })
}

/// Elementwise and global `|u - Π∇_p u_h|_1` (broken for nonconforming spaces).
#[derive(Debug, Clone)]
pub struct H1Error {
    pub per_element: Vec<f64>,
    pub global: f64,
}

pub fn h1_projection_error(
    system: &GlobalSystem,
    result: &SolveResult,
    grad_u: &(dyn Fn(Point2) -> [f64; 2] + Sync),
) -> Result<H1Error> {
    let p = system.disc.kind.degree;
    let rule = triangle_quadrature(2 * p + 2)?;
    let per_element: Vec<f64> = system
        .spaces
        .par_iter()
        .enumerate()
        .map(|(c, space)| -> Result<f64> {
            let coeffs = &space.projectors().pi_nabla * result.local_dofs(&system.dof_map, c);
            let st = subtriangulate(space.polygon(), DATA_QUADRATURE_LEVEL)?;
            let mut acc = 0.0;
            for t in 0..st.n_triangles() {
                let [a, b, cc] = st.corners(t);
                for (x, w) in rule.on_triangle(a, b, cc) {
                    let gh = space.basis().grad_poly(coeffs.as_slice(), x);
                    let gu = grad_u(x);
                    acc += w * ((gu[0] - gh[0]).powi(2) + (gu[1] - gh[1]).powi(2));
                }
            }
            Ok(acc.sqrt())
        })
        .collect::<Result<_>>()?;
    let global = per_element.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(H1Error {
        per_element,
        global,
    })
}

/// Assemble, solve and measure the error for a manufactured solution.
pub fn solve_manufactured(
    mesh: &PolygonalMesh,
    disc: Discretization,
    sol: &ExactSolution,
    method: LinearSolver,
) -> Result<(GlobalSystem, SolveResult, H1Error)> {
    let system = assemble(mesh, disc, &|x| sol.f(x), &|x| sol.u(x))?;
    let result = solve(&system, method)?;
    let err = h1_projection_error(&system, &result, &|x| sol.grad(x))?;
    Ok((system, result, err))
}

/// One line of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub run_id: String,
    pub kind: String,
    pub stab: String,
    pub p: usize,
    pub h_max: f64,
    pub n_dof: usize,
    pub err_h1_proj: f64,
    /// `log(e_{i-1}/e_i) / log(h_{i-1}/h_i)`, absent on the first mesh.
    pub rate: Option<f64>,
}

impl ConvergenceRow {
    pub const CSV_HEADER: &'static str = "run_id,kind,stab,p,h_max,n_dof,err_h1_proj,rate";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.12e},{},{:.12e},{}",
            self.run_id,
            self.kind,
            self.stab,
            self.p,
            self.h_max,
            self.n_dof,
            self.err_h1_proj,
            self.rate.map(|r| format!("{r:.6}")).unwrap_or_default()
        )
    }
}

/// Solves on each mesh in turn and reports errors with rates from consecutive pairs.
pub fn run_convergence_study(
    meshes: &[PolygonalMesh],
    disc: Discretization,
    sol: &ExactSolution,
    method: LinearSolver,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(meshes.len());
    for (i, mesh) in meshes.iter().enumerate() {
        let (system, _, err) = solve_manufactured(mesh, disc, sol, method)?;
        let h = mesh.h_max();
        let rate = rows.last().map(|prev| {
            (prev.err_h1_proj / err.global).ln() / (prev.h_max / h).ln()
        });
        rows.push(ConvergenceRow {
            run_id: format!("{}-{}-p{}-{i}", disc.kind.family.tag(), disc.stab.tag(), disc.kind.degree),
            kind: disc.kind.family.tag().to_string(),
            stab: disc.stab.tag().to_string(),
            p: disc.kind.degree,
            h_max: h,
            n_dof: system.dof_map.n_global,
            err_h1_proj: err.global,
            rate,
        });
    }
    Ok(rows)
}
