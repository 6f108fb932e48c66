//! Stabilization forms, shipped both raw and composed with `I - Π∇_p`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::space::LocalSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabKind {
    /// Euclidean product of the DoF vectors.
    #[serde(rename = "dofi")]
    DofiDofi,
    /// Scaled `L²` products of the computable boundary traces and bulk projections.
    #[serde(rename = "proj")]
    Projected,
}

impl StabKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::DofiDofi => "dofi",
            Self::Projected => "proj",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "dofi" => Some(Self::DofiDofi),
            "proj" => Some(Self::Projected),
            _ => None,
        }
    }
}

/// A stabilization in the DoF basis.
#[derive(Debug, Clone)]
pub struct StabilizationMatrix {
    pub kind: StabKind,
    /// The bilinear form itself, before any projection.
    pub raw: DMatrix<f64>,
    /// `(I - Π)ᵀ raw (I - Π)`, the matrix assembly consumes.
    pub s: DMatrix<f64>,
}

/// Builds the stabilization of the requested kind; the projected variant
/// picks the conforming or nonconforming form from the space family.
pub fn stabilization(space: &LocalSpace, kind: StabKind) -> StabilizationMatrix {
    let raw = match kind {
        StabKind::DofiDofi => DMatrix::identity(space.n_dofs(), space.n_dofs()),
        StabKind::Projected if space.kind().family.is_conforming() => projected_conforming_raw(space),
        StabKind::Projected => projected_nonconforming_raw(space),
    };
    let s = compose(space, &raw);
    StabilizationMatrix { kind, raw, s }
}

pub fn stab_dofi(space: &LocalSpace) -> StabilizationMatrix {
    stabilization(space, StabKind::DofiDofi)
}

pub fn stab_projected(space: &LocalSpace) -> StabilizationMatrix {
    stabilization(space, StabKind::Projected)
}

/// `(I - Π)ᵀ R (I - Π)`, symmetrized.
pub fn compose(space: &LocalSpace, raw: &DMatrix<f64>) -> DMatrix<f64> {
    let n = space.n_dofs();
    let q = DMatrix::identity(n, n) - &space.projectors().pi_nabla_dof;
    let s = q.transpose() * raw * &q;
    0.5 * (&s + s.transpose())
}

/// `h_K^{-2} (Π0 u, Π0 v)_K` with `Π0_p` for enhanced spaces and `Π0_{p-2}` otherwise.
fn bulk_term(space: &LocalSpace) -> DMatrix<f64> {
    let n = space.n_dofs();
    let pr = space.projectors();
    let h = space.polygon().diameter();
    let (pi0, dim) = match &pr.pi0_full {
        Some(full) => (full, full.nrows()),
        None => (&pr.pi0, pr.pi0.nrows()),
    };
    if dim == 0 {
        return DMatrix::zeros(n, n);
    }
    let m = space.mass().view((0, 0), (dim, dim));
    pi0.transpose() * m * pi0 / (h * h)
}

fn projected_conforming_raw(space: &LocalSpace) -> DMatrix<f64> {
    let h = space.polygon().diameter();
    let mut r = bulk_term(space);
    for tr in space.traces() {
        let mut wt = tr.values.clone();
        for (q, w) in tr.weights.iter().enumerate() {
            wt.row_mut(q).scale_mut(*w);
        }
        r += tr.values.transpose() * wt / h;
    }
    0.5 * (&r + r.transpose())
}

fn projected_nonconforming_raw(space: &LocalSpace) -> DMatrix<f64> {
    let h = space.polygon().diameter();
    let p = space.kind().degree;
    let mut r = bulk_term(space);
    let edges = space
        .projectors()
        .pi0_edge
        .as_ref()
        .expect("nonconforming spaces carry edge projectors");
    for (pe, edge) in edges.iter().zip(space.polygon().edges()) {
        let eb = crate::polybasis::EdgeBasis::new(
            p as isize - 1,
            space.polygon().vertex(edge.start),
            space.polygon().vertex(edge.end),
        );
        r += pe.transpose() * eb.mass_matrix() * pe / h;
    }
    0.5 * (&r + r.transpose())
}
