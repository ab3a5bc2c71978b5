//! Fixed quadrature rules: an order-4 (6-point) rule on triangles and a
//! 3-point Gauss rule on edges.

use crate::scalar::Real;

/// Barycentric points and weights (weights sum to 1, scale by triangle area).
pub fn tri_quad<T: Real>() -> [([T; 3], T); 6] {
    const A1: f64 = 0.445948490915965;
    const W1: f64 = 0.223381589678011;
    const A2: f64 = 0.091576213509771;
    const W2: f64 = 0.109951743655322;
    let mk = |a: f64, w: f64| -> [([T; 3], T); 3] {
        let a = T::of(a);
        let b = T::one() - a - a;
        let w = T::of(w);
        [([b, a, a], w), ([a, b, a], w), ([a, a, b], w)]
    };
    let [p0, p1, p2] = mk(A1, W1);
    let [p3, p4, p5] = mk(A2, W2);
    [p0, p1, p2, p3, p4, p5]
}

/// Parameters in [0, 1] and weights (sum 1, scale by edge length).
pub fn edge_quad<T: Real>() -> [(T, T); 3] {
    let s = T::of(0.5 * (0.6f64).sqrt());
    let half = T::of(0.5);
    [
        (half - s, T::of(5.0 / 18.0)),
        (half, T::of(8.0 / 18.0)),
        (half + s, T::of(5.0 / 18.0)),
    ]
}
