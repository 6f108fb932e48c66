//! Mesh JSON: `{"vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...]}`.
//!
//! Indices are 0-based, cells are counterclockwise, and coordinates are written
//! with 17 significant digits so that a read/write cycle reproduces the file.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{Point2, PolygonalMesh};
use crate::error::{Result, VemError};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn mesh_to_json(mesh: &PolygonalMesh) -> String {
    let mut s = String::from("{\n  \"vertices\": [\n");
    let nv = mesh.vertices().len();
    for (i, p) in mesh.vertices().iter().enumerate() {
        let sep = if i + 1 < nv { "," } else { "" };
        let _ = writeln!(s, "    [{}, {}]{sep}", num(p.x), num(p.y));
    }
    s.push_str("  ],\n  \"cells\": [\n");
    let nc = mesh.cells().len();
    for (i, c) in mesh.cells().iter().enumerate() {
        let sep = if i + 1 < nc { "," } else { "" };
        let idx: Vec<String> = c.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "    [{}]{sep}", idx.join(", "));
    }
    s.push_str("  ]\n}\n");
    s
}

pub fn mesh_from_json(text: &str) -> Result<PolygonalMesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| VemError::Schema {
        cell: None,
        msg: e.to_string(),
    })?;
    let vertices = file.vertices.into_iter().map(Point2::from).collect();
    PolygonalMesh::new(vertices, file.cells)
}

pub fn write_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_json(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh> {
    mesh_from_json(&std::fs::read_to_string(path)?)
}
