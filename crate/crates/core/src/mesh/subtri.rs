use std::collections::HashMap;

use super::{triangle_area, Point2, Polygon};
use crate::error::{Result, VemError};

/// A conforming triangulation of one polygon.
#[derive(Debug, Clone)]
pub struct SubTriangulation {
    /// Owning cell id (0 for a standalone polygon).
    pub parent: usize,
    pub points: Vec<Point2>,
    /// Counterclockwise index triples into `points`.
    pub triangles: Vec<[usize; 3]>,
    /// Number of quadrisection passes applied to the base triangulation.
    pub level: usize,
}

/// Centroid fan refined `level` times by edge-midpoint quadrisection.
///
/// Produces `E·4^level` triangles for a polygon with `E` edges. Polygons that
/// are not star-shaped with respect to their centroid are rejected.
pub fn subtriangulate(poly: &Polygon, level: usize) -> Result<SubTriangulation> {
    if !poly.is_star_shaped_from_centroid() {
        return Err(VemError::Geometry(
            "polygon is not star-shaped with respect to its centroid".into(),
        ));
    }
    let n = poly.n_vertices();
    let mut points = poly.vertices().to_vec();
    points.push(poly.centroid());
    let triangles = (0..n).map(|i| [n, i, (i + 1) % n]).collect();
    let mut st = SubTriangulation {
        parent: 0,
        points,
        triangles,
        level: 0,
    };
    for _ in 0..level {
        st = st.quadrisect();
    }
    Ok(st)
}

impl SubTriangulation {
    pub fn from_parts(points: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let st = SubTriangulation {
            parent: 0,
            points,
            triangles,
            level: 0,
        };
        for k in 0..st.triangles.len() {
            if !(st.area(k) > 0.0) {
                return Err(VemError::Geometry(format!(
                    "sub-triangle {k} has non-positive area"
                )));
            }
        }
        Ok(st)
    }

    /// Splits every triangle into four through its edge midpoints.
    pub fn quadrisect(&self) -> SubTriangulation {
        let mut points = self.points.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, points: &mut Vec<Point2>| -> usize {
            let key = (a.min(b), a.max(b));
            *mids.entry(key).or_insert_with(|| {
                points.push(points[a].midpoint(points[b]));
                points.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut points);
            let bc = mid(b, c, &mut points);
            let ca = mid(c, a, &mut points);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        SubTriangulation {
            parent: self.parent,
            points,
            triangles,
            level: self.level + 1,
        }
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.points[a], self.points[b], self.points[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        triangle_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.corners(t);
            for i in 0..3 {
                let u = p[(i + 1) % 3] - p[i];
                let v = p[(i + 2) % 3] - p[i];
                let ang = u.cross(v).abs().atan2(u.dot(v));
                best = best.min(ang);
            }
        }
        best
    }

    /// Largest triangle diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dist(b).max(b.dist(c)).max(c.dist(a))
            })
            .fold(0.0, f64::max)
    }
}
