use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, RefinementParameters, Triangulation};

use super::lagrange::{equispaced_1d, LagrangeTriangle};
use crate::error::{Result, VemError};
use crate::mesh::{subtriangulate, Point2, Polygon, SubTriangulation};
use crate::polybasis::{edge_quadrature, triangle_quadrature, EdgeBasis, MonomialBasis2D};
use crate::sparse::{CsrMatrix, EnvelopeCholesky, TripletBuilder};

/// Smallest fan angle (degrees) for which the centroid fan is used as the base mesh.
pub const FAN_MIN_ANGLE_DEG: f64 = 15.0;
/// Angle bound requested from the quality Delaunay refinement.
pub const CDT_ANGLE_DEG: f64 = 25.0;

/// How the coarse triangulation underneath the quadrisections was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseTriangulation {
    /// Centroid fan, refined `L` times.
    Fan,
    /// Quality constrained Delaunay mesh at roughly fan-level-2 resolution, refined `L - 1` times:
    /// it is only chosen for poorly shaped elements, whose basis functions vary sharply.
    Cdt,
}

/// A piece of the polygon boundary carried by one fine triangle edge.
#[derive(Debug, Clone)]
pub struct BoundarySegment {
    /// Parameter range along the polygon edge, `t0 < t1`.
    pub t0: f64,
    pub t1: f64,
    /// The `k + 1` fine nodes on the segment, from `t0` to `t1`.
    pub nodes: Vec<usize>,
}

/// Continuous piecewise-`P_k` space on a refined triangulation of one polygon.
#[derive(Debug)]
pub struct FineSpace {
    poly: Polygon,
    level: usize,
    base: BaseTriangulation,
    element: LagrangeTriangle,
    tri: SubTriangulation,
    nodes: Vec<Point2>,
    tri_nodes: Vec<Vec<usize>>,
    vertex_nodes: Vec<usize>,
    segments: Vec<Vec<BoundarySegment>>,
    on_boundary: Vec<bool>,
    stiffness: CsrMatrix,
    interior_factor: OnceLock<std::result::Result<EnvelopeCholesky, String>>,
    pinned_factor: OnceLock<std::result::Result<EnvelopeCholesky, String>>,
}

fn base_triangulation(poly: &Polygon) -> Result<(SubTriangulation, BaseTriangulation)> {
    if let Ok(fan) = subtriangulate(poly, 0) {
        if fan.min_angle() >= FAN_MIN_ANGLE_DEG.to_radians() {
            return Ok((fan, BaseTriangulation::Fan));
        }
    }
    let n = poly.n_vertices();
    let mut cdt = ConstrainedDelaunayTriangulation::<spade::Point2<f64>>::new();
    let mut handles = Vec::with_capacity(n);
    for v in poly.vertices() {
        let h = cdt
            .insert(spade::Point2::new(v.x, v.y))
            .map_err(|e| VemError::Oracle(format!("triangulation insert failed: {e:?}")))?;
        handles.push(h);
    }
    for i in 0..n {
        cdt.add_constraint(handles[i], handles[(i + 1) % n]);
    }
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(CDT_ANGLE_DEG))
        .with_max_allowed_area(poly.area() / (16.0 * n as f64))
        .with_max_additional_vertices(100_000)
        .exclude_outer_faces(true);
    let res = cdt.refine(params);
    if !res.refinement_complete {
        return Err(VemError::Oracle("quality refinement did not complete".into()));
    }
    let excluded: HashSet<_> = res.excluded_faces.into_iter().collect();
    let points: Vec<Point2> = cdt
        .vertices()
        .map(|v| Point2::new(v.position().x, v.position().y))
        .collect();
    let triangles: Vec<[usize; 3]> = cdt
        .inner_faces()
        .filter(|f| !excluded.contains(&f.fix()))
        .map(|f| f.vertices().map(|v| v.fix().index()))
        .collect();
    let st = SubTriangulation::from_parts(points, triangles)?;
    let area = st.total_area();
    if (area - poly.area()).abs() > 1e-10 * poly.area() {
        return Err(VemError::Oracle(format!(
            "constrained triangulation covers area {area}, polygon has {}",
            poly.area()
        )));
    }
    Ok((st, BaseTriangulation::Cdt))
}

impl FineSpace {
    pub fn new(poly: &Polygon, level: usize, degree: usize) -> Result<Self> {
        let (mut tri, base) = base_triangulation(poly)?;
        let passes = match base {
            BaseTriangulation::Fan => level,
            BaseTriangulation::Cdt => level.saturating_sub(1),
        };
        for _ in 0..passes {
            tri = tri.quadrisect();
        }
        let element = LagrangeTriangle::new(degree);
        let k = degree;

        // P_k numbering: triangulation vertices, then k-1 nodes per edge (lo → hi), then interiors
        let mut nodes = tri.points.clone();
        let mut edge_base: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &tri.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
                edge_base.entry(key).or_insert_with(|| {
                    let start = nodes.len();
                    let (pa, pb) = (tri.points[key.0], tri.points[key.1]);
                    for s in 1..k {
                        nodes.push(pa + (s as f64 / k as f64) * (pb - pa));
                    }
                    start
                });
            }
        }
        let edge_ids = |a: usize, b: usize| -> Vec<usize> {
            let key = (a.min(b), a.max(b));
            let base = edge_base[&key];
            let mut ids: Vec<usize> = (0..k - 1).map(|s| base + s).collect();
            if a > b {
                ids.reverse();
            }
            ids
        };
        let ref_nodes = element.nodes().to_vec();
        let n_interior_local = element.n_nodes() - 3 * k;
        let mut tri_nodes = Vec::with_capacity(tri.triangles.len());
        for t in &tri.triangles {
            let mut ids = t.to_vec();
            for e in 0..3 {
                ids.extend(edge_ids(t[e], t[(e + 1) % 3]));
            }
            let [a, b, c] = [tri.points[t[0]], tri.points[t[1]], tri.points[t[2]]];
            for r in &ref_nodes[3 * k..] {
                ids.push(nodes.len());
                nodes.push(a + r[0] * (b - a) + r[1] * (c - a));
            }
            debug_assert_eq!(ids.len(), 3 * k + n_interior_local);
            tri_nodes.push(ids);
        }

        let tol = 1e-9 * poly.diameter();
        let vertex_nodes = poly
            .vertices()
            .iter()
            .map(|v| {
                tri.points
                    .iter()
                    .position(|p| p.dist(*v) <= tol)
                    .ok_or_else(|| VemError::Oracle("polygon vertex missing from the fine mesh".into()))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut segments: Vec<Vec<BoundarySegment>> = vec![Vec::new(); poly.n_vertices()];
        let mut on_boundary = vec![false; nodes.len()];
        let mut boundary_edges: Vec<(usize, usize)> = edge_count
            .iter()
            .filter(|&(_, &c)| c == 1)
            .map(|(&e, _)| e)
            .collect();
        boundary_edges.sort_unstable();
        for (a, b) in boundary_edges {
            let (pa, pb) = (tri.points[a], tri.points[b]);
            let owner = poly.edges().iter().enumerate().find_map(|(e, edge)| {
                let s = poly.vertex(edge.start);
                let d = poly.vertex(edge.end) - s;
                let len2 = d.dot(d);
                let on = |p: Point2| {
                    let t = (p - s).dot(d) / len2;
                    let off = (p - s).cross(d).abs() / len2.sqrt();
                    (off <= tol && t >= -1e-12 && t <= 1.0 + 1e-12).then_some(t)
                };
                Some((e, on(pa)?, on(pb)?))
            });
            let (e, ta, tb) =
                owner.ok_or_else(|| VemError::Oracle("boundary fine edge off the polygon".into()))?;
            let mut ids = vec![a];
            ids.extend(edge_ids(a, b));
            ids.push(b);
            let (t0, t1) = if ta < tb {
                (ta, tb)
            } else {
                ids.reverse();
                (tb, ta)
            };
            for &i in &ids {
                on_boundary[i] = true;
            }
            segments[e].push(BoundarySegment { t0, t1, nodes: ids });
        }
        for (e, segs) in segments.iter_mut().enumerate() {
            segs.sort_by(|x, y| x.t0.total_cmp(&y.t0));
            let covered: f64 = segs.iter().map(|s| s.t1 - s.t0).sum();
            if (covered - 1.0).abs() > 1e-9 {
                return Err(VemError::Oracle(format!(
                    "boundary segments cover {covered} of polygon edge {e}"
                )));
            }
        }

        let stiffness = assemble_stiffness(&element, &tri, &tri_nodes, nodes.len())?;
        Ok(Self {
            poly: poly.clone(),
            level,
            base,
            element,
            tri,
            nodes,
            tri_nodes,
            vertex_nodes,
            segments,
            on_boundary,
            stiffness,
            interior_factor: OnceLock::new(),
            pinned_factor: OnceLock::new(),
        })
    }

    pub fn polygon(&self) -> &Polygon {
        &self.poly
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn base(&self) -> BaseTriangulation {
        self.base
    }

    pub fn triangulation(&self) -> &SubTriangulation {
        &self.tri
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn on_boundary(&self) -> &[bool] {
        &self.on_boundary
    }

    /// Fine node sitting on polygon vertex `i`.
    pub fn vertex_node(&self, i: usize) -> usize {
        self.vertex_nodes[i]
    }

    pub fn segments(&self, edge: usize) -> &[BoundarySegment] {
        &self.segments[edge]
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// `u_fᵀ A u_f`
    pub fn energy(&self, u: &DVector<f64>) -> f64 {
        let au = self.stiffness.mul_vec(u.as_slice());
        au.iter().zip(u.iter()).map(|(a, b)| a * b).sum()
    }

    /// Nodal interpolant.
    pub fn interpolate(&self, f: &dyn Fn(Point2) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.nodes.len(), self.nodes.iter().map(|&x| f(x)))
    }

    pub(crate) fn interior_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| !self.on_boundary[i]).collect()
    }

    pub(crate) fn interior_factor(&self) -> Result<&EnvelopeCholesky> {
        self.interior_factor
            .get_or_init(|| {
                let keep = self.interior_nodes();
                EnvelopeCholesky::factor(&self.stiffness.principal_submatrix(&keep))
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| VemError::Oracle(e.clone()))
    }

    /// Factor of the stiffness with node 0 removed.
    pub(crate) fn pinned_factor(&self) -> Result<&EnvelopeCholesky> {
        self.pinned_factor
            .get_or_init(|| {
                let keep: Vec<usize> = (1..self.nodes.len()).collect();
                EnvelopeCholesky::factor(&self.stiffness.principal_submatrix(&keep))
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| VemError::Oracle(e.clone()))
    }

    /// `∫_K φ_i m_α` for every fine basis function and monomial.
    pub fn moment_matrix(&self, basis: &MonomialBasis2D) -> Result<DMatrix<f64>> {
        let dim = basis.dim();
        let mut out = DMatrix::zeros(self.nodes.len(), dim);
        if dim == 0 {
            return Ok(out);
        }
        let rule = triangle_quadrature(basis.degree() as usize + self.degree())?;
        let vals: Vec<Vec<f64>> = rule.points.iter().map(|&x| self.element.eval(x)).collect();
        let mut m = vec![0.0; dim];
        for (t, ids) in self.tri_nodes.iter().enumerate() {
            let [a, b, c] = self.tri.corners(t);
            let jac = (b - a).cross(c - a).abs();
            for (q, &xi) in rule.points.iter().enumerate() {
                let x = a + xi[0] * (b - a) + xi[1] * (c - a);
                basis.eval_into(x, &mut m);
                let w = rule.weights[q] * jac;
                for (l, &i) in ids.iter().enumerate() {
                    let wi = w * vals[q][l];
                    for (al, ma) in m.iter().enumerate() {
                        out[(i, al)] += wi * ma;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `∫_e φ_i m^e_α` (unscaled) for `α < p` on polygon edge `e`.
    pub fn edge_moment_matrix(&self, e: usize, p: usize) -> Result<DMatrix<f64>> {
        let k = self.degree();
        let mut out = DMatrix::zeros(self.nodes.len(), p);
        let edge = self.poly.edges()[e];
        let eb = EdgeBasis::new(p as isize - 1, self.poly.vertex(edge.start), self.poly.vertex(edge.end));
        let rule = edge_quadrature(p - 1 + k)?;
        for seg in &self.segments[e] {
            let span = seg.t1 - seg.t0;
            for (s, w) in rule.unit() {
                let phi = equispaced_1d(k, s);
                let m = eb.eval_param(seg.t0 + s * span);
                let w = w * span * edge.length;
                for (l, &i) in seg.nodes.iter().enumerate() {
                    for a in 0..p {
                        out[(i, a)] += w * phi[l] * m[a];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Trace of the fine function `u` at parameter `t` of polygon edge `e`.
    pub fn trace_at(&self, e: usize, t: f64, u: &DVector<f64>) -> f64 {
        let segs = &self.segments[e];
        let idx = segs.partition_point(|s| s.t1 < t).min(segs.len() - 1);
        let seg = &segs[idx];
        let s = ((t - seg.t0) / (seg.t1 - seg.t0)).clamp(0.0, 1.0);
        equispaced_1d(self.degree(), s)
            .iter()
            .zip(&seg.nodes)
            .map(|(l, &i)| l * u[i])
            .sum()
    }

    /// `(∇m_α, ∇u)_K` for every monomial of `basis`.
    pub fn grad_moments(&self, basis: &MonomialBasis2D, u: &DVector<f64>) -> Result<DVector<f64>> {
        let dim = basis.dim();
        let mut out = DVector::zeros(dim);
        if basis.degree() < 1 {
            return Ok(out);
        }
        let rule = triangle_quadrature(basis.degree() as usize + self.degree() - 2)?;
        let grads: Vec<Vec<[f64; 2]>> = rule.points.iter().map(|&x| self.element.grad(x)).collect();
        for (t, ids) in self.tri_nodes.iter().enumerate() {
            let [a, b, c] = self.tri.corners(t);
            let (jinv, det) = inverse_jacobian(a, b, c);
            for (q, &xi) in rule.points.iter().enumerate() {
                let x = a + xi[0] * (b - a) + xi[1] * (c - a);
                let mut gu = [0.0; 2];
                for (l, &i) in ids.iter().enumerate() {
                    let g = map_grad(&jinv, grads[q][l]);
                    gu[0] += u[i] * g[0];
                    gu[1] += u[i] * g[1];
                }
                let gm = basis.grad(x);
                let w = rule.weights[q] * det;
                for al in 0..dim {
                    out[al] += w * (gm[(0, al)] * gu[0] + gm[(1, al)] * gu[1]);
                }
            }
        }
        Ok(out)
    }
}

fn inverse_jacobian(a: Point2, b: Point2, c: Point2) -> ([[f64; 2]; 2], f64) {
    let (j00, j01, j10, j11) = (b.x - a.x, c.x - a.x, b.y - a.y, c.y - a.y);
    let det = j00 * j11 - j01 * j10;
    ([[j11 / det, -j01 / det], [-j10 / det, j00 / det]], det.abs())
}

/// Physical gradient `J^{-T} ĝ`.
fn map_grad(jinv: &[[f64; 2]; 2], g: [f64; 2]) -> [f64; 2] {
    [
        jinv[0][0] * g[0] + jinv[1][0] * g[1],
        jinv[0][1] * g[0] + jinv[1][1] * g[1],
    ]
}

fn assemble_stiffness(
    element: &LagrangeTriangle,
    tri: &SubTriangulation,
    tri_nodes: &[Vec<usize>],
    n: usize,
) -> Result<CsrMatrix> {
    let k = element.degree();
    let rule = triangle_quadrature(2 * k - 2)?;
    let grads: Vec<Vec<[f64; 2]>> = rule.points.iter().map(|&x| element.grad(x)).collect();
    let nl = element.n_nodes();
    let mut trip = TripletBuilder::new(n, n);
    let mut local = vec![0.0; nl * nl];
    let mut g = vec![[0.0; 2]; nl];
    for (t, ids) in tri_nodes.iter().enumerate() {
        let [a, b, c] = tri.corners(t);
        let (jinv, det) = inverse_jacobian(a, b, c);
        local.iter_mut().for_each(|x| *x = 0.0);
        for (q, w) in rule.weights.iter().enumerate() {
            for l in 0..nl {
                g[l] = map_grad(&jinv, grads[q][l]);
            }
            let w = w * det;
            for i in 0..nl {
                for j in i..nl {
                    local[i * nl + j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        for i in 0..nl {
            for j in i..nl {
                let v = local[i * nl + j];
                trip.push(ids[i], ids[j], v);
                if i != j {
                    trip.push(ids[j], ids[i], v);
                }
            }
        }
    }
    Ok(trip.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_collapsing_quad, regular_polygon};

    #[test]
    fn fan_and_cdt_bases() {
        let sq = generate_collapsing_quad(1.0).unwrap();
        let fs = FineSpace::new(&sq, 2, 2).unwrap();
        assert_eq!(fs.base(), BaseTriangulation::Fan);
        assert_eq!(fs.triangulation().n_triangles(), 4 * 16);
        let thin = generate_collapsing_quad(1e-3).unwrap();
        let fs = FineSpace::new(&thin, 2, 2).unwrap();
        assert_eq!(fs.base(), BaseTriangulation::Cdt);
        assert!(fs.triangulation().min_angle() > 20f64.to_radians());
        assert!((fs.triangulation().total_area() - thin.area()).abs() < 1e-12);
    }

    #[test]
    fn stiffness_reproduces_polynomial_energy() {
        let poly = regular_polygon(5, Point2::new(0.3, -0.2), 1.3, 0.1).unwrap();
        for k in 1..=4 {
            let fs = FineSpace::new(&poly, 1, k).unwrap();
            let one = DVector::from_element(fs.n_nodes(), 1.0);
            assert!(fs.energy(&one).abs() < 1e-12);
            // u = x^k y has |u|^2 computable by the monomial Gram on the polygon
            let u = fs.interpolate(&|x| x.x.powi(k as i32 - 1) * x.y);
            let basis = MonomialBasis2D::new(k as isize, Point2::new(0.0, 0.0), 1.0);
            let g = crate::polybasis::grad_gram(&poly, &basis).unwrap();
            let idx = crate::polybasis::multi_index_position(k - 1, 1);
            assert!((fs.energy(&u) - g[(idx, idx)]).abs() < 1e-10 * g[(idx, idx)]);
        }
    }

    #[test]
    fn traces_and_moments() {
        let poly = generate_collapsing_quad(0.3).unwrap();
        let fs = FineSpace::new(&poly, 2, 3).unwrap();
        let f = |x: Point2| x.x * x.x * x.y - 2.0 * x.y + 1.0;
        let u = fs.interpolate(&f);
        for e in 0..4 {
            for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
                assert!((fs.trace_at(e, t, &u) - f(poly.edge_point(e, t))).abs() < 1e-12);
            }
            let em = fs.edge_moment_matrix(e, 2).unwrap();
            let edge = poly.edges()[e];
            let exact = crate::space::edge_moments(
                poly.vertex(edge.start),
                poly.vertex(edge.end),
                2,
                &f,
            )
            .unwrap();
            let got = em.transpose() * &u / edge.length;
            assert!((got[0] - exact[0]).abs() < 1e-12 && (got[1] - exact[1]).abs() < 1e-12);
        }
        let basis = MonomialBasis2D::on_polygon(&poly, 2);
        let m = fs.moment_matrix(&basis).unwrap();
        assert!(((m.transpose() * DVector::from_element(fs.n_nodes(), 1.0))[0] - poly.area()).abs() < 1e-12);
    }
}
