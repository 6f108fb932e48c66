// Generate the test meshes and elements, print their shape metrics and
// round-trip a mesh through the JSON format.

use polyvem::mesh::{
    generate_collapsing_quad, generate_square_mesh, mesh_from_json, mesh_to_json, random_convex_polygon,
    regular_polygon, Point2, Rect,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = generate_square_mesh(4, Rect::UNIT)?;
    println!("square mesh: {} cells, {} vertices, h_max = {:.4}", mesh.n_cells(), mesh.vertices().len(), mesh.h_max());
    let boundary = mesh.edges().iter().filter(|e| e.is_boundary()).count();
    println!("  {} edges, {boundary} on the boundary", mesh.edges().len());

    let json = mesh_to_json(&mesh);
    let back = mesh_from_json(&json)?;
    assert_eq!(mesh_to_json(&back), json);
    println!("  JSON round trip is byte-identical ({} bytes)", json.len());

    println!("\n{:<16} {:>8} {:>10} {:>14}", "element", "area", "diameter", "min h_e/h_K");
    let mut elements = vec![
        ("pentagon".to_string(), regular_polygon(5, Point2::new(0.0, 0.0), 1.0, 0.0)?),
        ("hexagon:7".to_string(), random_convex_polygon(6, 7)?),
    ];
    for eps in [1.0, 1e-1, 1e-2, 1e-3, 1e-4] {
        elements.push((format!("collapse:{eps}"), generate_collapsing_quad(eps)?));
    }
    for (tag, poly) in &elements {
        let m = poly.shape_metrics();
        println!("{tag:<16} {:>8.4} {:>10.4} {:>14.3e}", poly.area(), poly.diameter(), m.min_edge_ratio);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
