use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Point2, Polygon, PolygonalMesh};
use crate::error::{Result, VemError};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };
}

/// Uniform `n × n` mesh of congruent rectangles.
pub fn generate_square_mesh(n: usize, domain: Rect) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(VemError::Geometry("square mesh needs n >= 1".into()));
    }
    if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
        return Err(VemError::Geometry("empty mesh domain".into()));
    }
    let hx = (domain.x1 - domain.x0) / n as f64;
    let hy = (domain.y1 - domain.y0) / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // Pin the far side exactly so boundary detection never sees round-off.
            let x = if i == n { domain.x1 } else { domain.x0 + i as f64 * hx };
            let y = if j == n { domain.y1 } else { domain.y0 + j as f64 * hy };
            vertices.push(Point2::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolygonalMesh::new(vertices, cells)
}

/// The quadrilateral `(0,0), (1,0), (1,eps), (0,1)`; the vertices `(1,0)` and
/// `(1,eps)` coalesce as `eps → 0`.
pub fn generate_collapsing_quad(eps: f64) -> Result<Polygon> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(VemError::Geometry(format!(
            "collapse parameter must lie in (0, 1], got {eps}"
        )));
    }
    Polygon::new(vec![
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.0, eps),
        Point2::new(0.0, 1.0),
    ])
}

/// Regular `n`-gon inscribed in the circle of given radius and center, first vertex at angle `phase`.
pub fn regular_polygon(n: usize, center: Point2, radius: f64, phase: f64) -> Result<Polygon> {
    let verts = (0..n)
        .map(|k| {
            let t = phase + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Point2::new(center.x + radius * t.cos(), center.y + radius * t.sin())
        })
        .collect();
    Polygon::new(verts)
}

/// A convex `n`-gon with vertices on the unit circle at jittered angles.
///
/// Angular jitter is bounded by `0.3·2π/n`, so consecutive vertices stay
/// separated by at least `0.4·2π/n` radians.
pub fn random_convex_polygon(n: usize, seed: u64) -> Result<Polygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let phase: f64 = rng.gen_range(0.0..step);
    let verts = (0..n)
        .map(|k| {
            let t = phase + step * (k as f64 + rng.gen_range(-0.3..0.3));
            Point2::new(t.cos(), t.sin())
        })
        .collect();
    Polygon::new(verts)
}
