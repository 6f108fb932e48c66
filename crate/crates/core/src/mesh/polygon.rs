use std::collections::HashMap;

use super::{triangle_area, Point2};
use crate::error::{Result, VemError};

/// An oriented polygon edge from `vertices[start]` to `vertices[end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub start: usize,
    pub end: usize,
    pub length: f64,
    /// Outward unit normal.
    pub normal: Point2,
    /// Unit tangent in the counterclockwise direction.
    pub tangent: Point2,
}

/// Shape indicators reported alongside measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeMetrics {
    /// `min_e h_e / h_K`
    pub min_edge_ratio: f64,
    /// `|K| / h_K^2`
    pub area_ratio: f64,
}

/// A simple polygon with counterclockwise vertices and derived geometric data.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
    edges: Vec<Edge>,
    centroid: Point2,
    diameter: f64,
    area: f64,
}

impl Polygon {
    /// Validates the vertex loop and computes centroid, diameter, edges and normals.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(VemError::Geometry(format!(
                "a polygon needs at least 3 vertices, got {n}"
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(VemError::Geometry(format!("vertex {i} is not finite")));
        }

        let mut twice_area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let w = a.cross(b);
            twice_area += w;
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
        }
        let area = 0.5 * twice_area;
        if !(area > 0.0) {
            return Err(VemError::Geometry(format!(
                "vertices must be counterclockwise with positive area (signed area {area:e})"
            )));
        }
        let centroid = Point2::new(cx / (6.0 * area), cy / (6.0 * area));

        let mut edges = Vec::with_capacity(n);
        for i in 0..n {
            let j = (i + 1) % n;
            let d = vertices[j] - vertices[i];
            let length = d.norm();
            if !(length > 0.0) {
                return Err(VemError::Geometry(format!(
                    "edge {i} has zero length (repeated vertex)"
                )));
            }
            let tangent = (1.0 / length) * d;
            edges.push(Edge {
                start: i,
                end: j,
                length,
                normal: Point2::new(tangent.y, -tangent.x),
                tangent,
            });
        }

        // Non-adjacent edges must not touch.
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(VemError::Geometry(format!(
                        "polygon is self-intersecting (edges {i} and {j})"
                    )));
                }
            }
        }

        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                diameter = diameter.max(vertices[i].dist(vertices[j]));
            }
        }

        Ok(Self {
            vertices,
            edges,
            centroid,
            diameter,
            area,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn centroid(&self) -> Point2 {
        self.centroid
    }

    /// `h_K`, the largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn perimeter(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Point at parameter `t ∈ [0, 1]` along edge `e` (from its start vertex).
    pub fn edge_point(&self, e: usize, t: f64) -> Point2 {
        let edge = &self.edges[e];
        let a = self.vertices[edge.start];
        let b = self.vertices[edge.end];
        a + t * (b - a)
    }

    pub fn shape_metrics(&self) -> ShapeMetrics {
        let min_edge = self
            .edges
            .iter()
            .map(|e| e.length)
            .fold(f64::INFINITY, f64::min);
        ShapeMetrics {
            min_edge_ratio: min_edge / self.diameter,
            area_ratio: self.area / (self.diameter * self.diameter),
        }
    }

    /// The image of the polygon under `x ↦ scale·x + shift`.
    pub fn transformed(&self, scale: f64, shift: Point2) -> Result<Self> {
        Polygon::new(
            self.vertices
                .iter()
                .map(|&p| scale * p + shift)
                .collect(),
        )
    }

    /// True when every centroid fan triangle has positive area.
    pub fn is_star_shaped_from_centroid(&self) -> bool {
        self.edges.iter().all(|e| {
            triangle_area(self.centroid, self.vertices[e.start], self.vertices[e.end]) > 0.0
        })
    }
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// A unique mesh edge stored with canonical orientation `lo < hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshEdge {
    pub lo: usize,
    pub hi: usize,
    /// `(cell, local edge index, local edge runs hi → lo)` for each adjacent cell.
    pub cells: Vec<(usize, usize, bool)>,
}

impl MeshEdge {
    pub fn is_boundary(&self) -> bool {
        self.cells.len() == 1
    }
}

/// A conforming polygonal mesh.
#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    vertices: Vec<Point2>,
    cells: Vec<Vec<usize>>,
    polygons: Vec<Polygon>,
    edges: Vec<MeshEdge>,
    cell_edges: Vec<Vec<usize>>,
}

impl PolygonalMesh {
    /// Builds the mesh and its edge connectivity; every cell must be a valid CCW polygon.
    pub fn new(vertices: Vec<Point2>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(VemError::Schema {
                cell: None,
                msg: format!("vertex {i} is not finite"),
            });
        }
        let mut polygons = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if let Some(&bad) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(VemError::Schema {
                    cell: Some(c),
                    msg: format!(
                        "vertex index {bad} out of range ({} vertices)",
                        vertices.len()
                    ),
                });
            }
            let poly = Polygon::new(cell.iter().map(|&v| vertices[v]).collect()).map_err(
                |e| VemError::Schema {
                    cell: Some(c),
                    msg: e.to_string(),
                },
            )?;
            polygons.push(poly);
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<MeshEdge> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut ids = Vec::with_capacity(n);
            for k in 0..n {
                let (a, b) = (cell[k], cell[(k + 1) % n]);
                let key = (a.min(b), a.max(b));
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(MeshEdge {
                        lo: key.0,
                        hi: key.1,
                        cells: Vec::new(),
                    });
                    edges.len() - 1
                });
                edges[id].cells.push((c, k, a > b));
                ids.push(id);
            }
            cell_edges.push(ids);
        }
        for e in &edges {
            match e.cells.as_slice() {
                [_] => {}
                [(c0, _, r0), (c1, _, r1)] => {
                    if r0 == r1 {
                        return Err(VemError::Connectivity(format!(
                            "edge ({}, {}) traversed in the same direction by cells {c0} and {c1}",
                            e.lo, e.hi
                        )));
                    }
                }
                many => {
                    return Err(VemError::Connectivity(format!(
                        "edge ({}, {}) shared by {} cells",
                        e.lo,
                        e.hi,
                        many.len()
                    )));
                }
            }
        }

        Ok(Self {
            vertices,
            cells,
            polygons,
            edges,
            cell_edges,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn polygon(&self, cell: usize) -> &Polygon {
        &self.polygons[cell]
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    /// Global edge ids of a cell, in local (CCW) edge order.
    pub fn cell_edges(&self, cell: usize) -> &[usize] {
        &self.cell_edges[cell]
    }

    pub fn n_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    /// Flags per vertex: true if the vertex lies on a boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            flags[e.lo] = true;
            flags[e.hi] = true;
        }
        flags
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        self.polygons
            .iter()
            .map(Polygon::diameter)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn unit_square_geometry() {
        let p = Polygon::new(square()).unwrap();
        assert!((p.centroid().x - 0.5).abs() < 1e-15);
        assert!((p.centroid().y - 0.5).abs() < 1e-15);
        assert!((p.diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.area(), 1.0);
        assert_eq!(p.edges()[0].normal, Point2::new(0.0, -1.0));
        assert_eq!(p.edges()[1].normal, Point2::new(1.0, 0.0));
    }

    #[test]
    fn triangle_centroid() {
        let p = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        assert!((p.centroid().x - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.centroid().y - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.diameter() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clockwise_rejected() {
        let mut v = square();
        v.reverse();
        assert!(matches!(Polygon::new(v), Err(VemError::Geometry(_))));
    }

    #[test]
    fn bowtie_rejected() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(2.0, 1.0),
            Point2::new(1.0, 3.0),
        ];
        assert!(Polygon::new(v).is_err());
    }

    #[test]
    fn normals_close_up() {
        let p = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.3),
            Point2::new(2.5, 1.7),
            Point2::new(0.4, 2.2),
            Point2::new(-0.6, 1.0),
        ])
        .unwrap();
        let mut sum = Point2::default();
        for e in p.edges() {
            assert!(e.normal.dot(e.tangent).abs() < 1e-15);
            assert!((e.normal.norm() - 1.0).abs() < 1e-15);
            sum = sum + e.length * e.normal;
        }
        assert!(sum.norm() < 1e-12);
    }

    #[test]
    fn triple_shared_edge_rejected() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 1.0),
            Point2::new(0.5, -1.0),
            Point2::new(0.2, 2.0),
        ];
        let cells = vec![vec![0, 1, 2], vec![1, 0, 3], vec![0, 1, 4]];
        assert!(matches!(
            PolygonalMesh::new(v, cells),
            Err(VemError::Connectivity(_))
        ));
    }
}
