use serde::{Deserialize, Serialize};

use crate::mesh::Polygon;
use crate::polybasis::{dim_p, multi_indices};

/// The local virtual element families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceFamily {
    /// `Δv ∈ P_{p-2}`, polynomial continuous traces.
    ConformingStandard,
    /// `Δv ∈ P_p`, polynomial continuous traces, moments of degree `p-1, p` tied to `Π∇_p`.
    ConformingEnhanced,
    /// `Δv ∈ P_{p-2}`, polynomial normal derivatives of degree `p-1` on each edge.
    Nonconforming,
    /// Enhanced counterpart of [`SpaceFamily::Nonconforming`].
    NonconformingEnhanced,
}

impl SpaceFamily {
    pub fn is_conforming(self) -> bool {
        matches!(self, Self::ConformingStandard | Self::ConformingEnhanced)
    }

    pub fn is_enhanced(self) -> bool {
        matches!(self, Self::ConformingEnhanced | Self::NonconformingEnhanced)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::ConformingStandard => "conf",
            Self::ConformingEnhanced => "enh",
            Self::Nonconforming => "nonconf",
            Self::NonconformingEnhanced => "nonconf-enh",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "conf" => Self::ConformingStandard,
            "enh" => Self::ConformingEnhanced,
            "nonconf" => Self::Nonconforming,
            "nonconf-enh" => Self::NonconformingEnhanced,
            _ => return None,
        })
    }
}

/// A space family together with its polynomial degree `p ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceKind {
    pub family: SpaceFamily,
    pub degree: usize,
}

impl SpaceKind {
    pub fn new(family: SpaceFamily, degree: usize) -> Self {
        assert!(degree >= 1, "virtual element degree must be at least 1");
        Self { family, degree }
    }

    pub fn conforming(degree: usize) -> Self {
        Self::new(SpaceFamily::ConformingStandard, degree)
    }

    pub fn enhanced(degree: usize) -> Self {
        Self::new(SpaceFamily::ConformingEnhanced, degree)
    }

    pub fn nonconforming(degree: usize) -> Self {
        Self::new(SpaceFamily::Nonconforming, degree)
    }

    pub fn p(&self) -> isize {
        self.degree as isize
    }
}

/// One local degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofDescriptor {
    /// Point value at vertex `i`.
    Vertex(usize),
    /// Point value at interior Gauss–Lobatto node `node ∈ 1..p` of `edge` (counted along the CCW edge).
    EdgeNode { edge: usize, node: usize },
    /// Scaled moment `|e|^{-1} ∫_e m^e_α v` with `α ∈ 0..p`.
    EdgeMoment { edge: usize, alpha: usize },
    /// Scaled moment `|K|^{-1} ∫_K m_α v`, `|α| ≤ p - 2`, indexed in graded lex order.
    Internal { index: usize, alpha: (usize, usize) },
}

/// Ordered DoF layout: vertices, then edge DoFs edge by edge, then internal moments.
#[derive(Debug, Clone, PartialEq)]
pub struct DofTable {
    kind: SpaceKind,
    n_vertices: usize,
    per_edge: usize,
    descriptors: Vec<DofDescriptor>,
}

impl DofTable {
    pub fn new(poly: &Polygon, kind: SpaceKind) -> Self {
        let n = poly.n_vertices();
        let p = kind.degree;
        let mut descriptors = Vec::new();
        let per_edge = if kind.family.is_conforming() {
            descriptors.extend((0..n).map(DofDescriptor::Vertex));
            for edge in 0..n {
                descriptors.extend((1..p).map(|node| DofDescriptor::EdgeNode { edge, node }));
            }
            p - 1
        } else {
            for edge in 0..n {
                descriptors.extend((0..p).map(|alpha| DofDescriptor::EdgeMoment { edge, alpha }));
            }
            p
        };
        descriptors.extend(
            multi_indices(kind.p() - 2)
                .into_iter()
                .enumerate()
                .map(|(index, alpha)| DofDescriptor::Internal { index, alpha }),
        );
        Self {
            kind,
            n_vertices: if kind.family.is_conforming() { n } else { 0 },
            per_edge,
            descriptors,
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// `N_K`
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn descriptors(&self) -> &[DofDescriptor] {
        &self.descriptors
    }

    pub fn n_vertex_dofs(&self) -> usize {
        self.n_vertices
    }

    /// DoFs attached to the interior of each edge.
    pub fn dofs_per_edge(&self) -> usize {
        self.per_edge
    }

    pub fn n_internal(&self) -> usize {
        dim_p(self.kind.p() - 2)
    }

    pub fn vertex_dof(&self, v: usize) -> usize {
        debug_assert!(v < self.n_vertices);
        v
    }

    /// Index of the `k`-th interior DoF of `edge` (`k ∈ 0..dofs_per_edge`).
    pub fn edge_dof(&self, edge: usize, k: usize) -> usize {
        self.n_vertices + edge * self.per_edge + k
    }

    pub fn internal_dof(&self, index: usize) -> usize {
        self.len() - self.n_internal() + index
    }

    pub fn internal_offset(&self) -> usize {
        self.len() - self.n_internal()
    }
}
