//! Symmetric 7-point rule on triangles, exact for polynomials of degree 5.

use crate::mesh::Point;

/// Barycentric points and weights (weights sum to one; scale by the area).
pub fn dunavant7() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    let b1 = 1.0 - 2.0 * a1;
    let b2 = 1.0 - 2.0 * a2;
    let t = 1.0 / 3.0;
    [
        ([t, t, t], 9.0 / 40.0),
        ([b1, a1, a1], w1),
        ([a1, b1, a1], w1),
        ([a1, a1, b1], w1),
        ([b2, a2, a2], w2),
        ([a2, b2, a2], w2),
        ([a2, a2, b2], w2),
    ]
}

pub fn map_to_triangle(corners: &[Point; 3], lam: &[f64; 3]) -> Point {
    let mut p = [0.0; 2];
    for k in 0..3 {
        p[0] += lam[k] * corners[k][0];
        p[1] += lam[k] * corners[k][1];
    }
    p
}

/// `∫_T g` with the 7-point rule.
pub fn integrate<F: FnMut(Point) -> f64>(corners: &[Point; 3], area: f64, mut g: F) -> f64 {
    dunavant7()
        .iter()
        .map(|(lam, w)| w * g(map_to_triangle(corners, lam)))
        .sum::<f64>()
        * area
}
