#![allow(dead_code)]

use divfree::generate::{appendix_hexagon, generate_mesh, square_crisscross};
use divfree::{MeshKind, Point2, Triangulation};

/// Meshes satisfying Assumption 1 with no boundary chords.
pub fn suite() -> Vec<(String, Triangulation)> {
    let mut out = structured();
    out.extend(perturbed_suite());
    out
}

/// Members of the suite with parallel-edge patches.
pub fn structured() -> Vec<(String, Triangulation)> {
    vec![
        ("hexagon/1".to_string(), appendix_hexagon().unwrap().refined(1).unwrap()),
        ("hexagon/2".to_string(), appendix_hexagon().unwrap().refined(2).unwrap()),
        ("crisscross(3)".to_string(), square_crisscross(3).unwrap()),
    ]
}

pub fn perturbed_suite() -> Vec<(String, Triangulation)> {
    let perturbed = |base: MeshKind, r: usize, mag: f64, seed: u64| MeshKind::Perturbed {
        base: Box::new(base),
        base_refine: r,
        magnitude: mag,
        seed,
    };
    let kinds = [
        perturbed(MeshKind::AppendixHexagon, 1, 0.2, 7),
        perturbed(MeshKind::AppendixHexagon, 2, 0.25, 11),
        perturbed(MeshKind::SquareCrisscross(2), 1, 0.2, 3),
    ];
    kinds.into_iter().map(|k| (k.to_string(), generate_mesh(&k).unwrap())).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// A well-shaped random triangle, counterclockwise.
pub fn triangle(params: [f64; 6]) -> [Point2; 3] {
    let a = Point2::new(params[0], params[1]);
    let b = a + Point2::new(0.5 + params[2], 0.3 * params[3]);
    let c = a + Point2::new(0.4 * params[4], 0.5 + params[5]);
    [a, b, c]
}
