//! Plain 2D polygon and segment predicates (all in `f64`).
//!
//! The mesh generator and the crack-geometry reconstruction both work on
//! polygons; robustness here is tolerance based, which is adequate for the
//! well-separated inputs this toolkit handles.

pub type P2 = [f64; 2];

pub fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: P2) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: P2, b: P2) -> f64 {
    norm(sub(a, b))
}

/// Signed area of a closed polygon (positive for counterclockwise).
pub fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        s += cross(poly[i], poly[j]);
    }
    0.5 * s
}

/// Even-odd point-in-polygon test (crossing number).
pub fn point_in_polygon(p: P2, poly: &[P2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let t = (p[1] - a[1]) / (b[1] - a[1]);
            let x = a[0] + t * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn dist_point_segment(p: P2, a: P2, b: P2) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Distance from a point to a closed polygon boundary.
pub fn dist_point_polygon_boundary(p: P2, poly: &[P2]) -> f64 {
    let n = poly.len();
    let mut d = f64::INFINITY;
    for i in 0..n {
        d = d.min(dist_point_segment(p, poly[i], poly[(i + 1) % n]));
    }
    d
}

/// Distance from a point to an axis-aligned rectangle (zero inside).
pub fn dist_point_rect(p: P2, min: P2, max: P2) -> f64 {
    let dx = (min[0] - p[0]).max(0.0).max(p[0] - max[0]);
    let dy = (min[1] - p[1]).max(0.0).max(p[1] - max[1]);
    (dx * dx + dy * dy).sqrt()
}

/// Proper intersection of two open segments; returns the intersection point
/// and the two curve parameters if the segments cross in their interiors
/// (endpoint touches within `eps` are not reported).
pub fn seg_seg_intersection(a0: P2, a1: P2, b0: P2, b1: P2, eps: f64) -> Option<(P2, f64, f64)> {
    let r = sub(a1, a0);
    let s = sub(b1, b0);
    let denom = cross(r, s);
    let scale = norm(r).max(norm(s)).max(1e-300);
    if denom.abs() <= eps * scale * scale {
        return None; // parallel or collinear
    }
    let qp = sub(b0, a0);
    let t = cross(qp, s) / denom;
    let u = cross(qp, r) / denom;
    let tol = eps / scale.max(1e-300);
    if t > tol && t < 1.0 - tol && u > tol && u < 1.0 - tol {
        Some(([a0[0] + t * r[0], a0[1] + t * r[1]], t, u))
    } else {
        None
    }
}

/// Checks a closed polygon for self intersections; returns the location of
/// the first one found.
pub fn polygon_self_intersection(poly: &[P2], eps: f64) -> Option<P2> {
    let n = poly.len();
    for i in 0..n {
        let a0 = poly[i];
        let a1 = poly[(i + 1) % n];
        for j in (i + 1)..n {
            // skip adjacent edges (shared endpoint)
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let b0 = poly[j];
            let b1 = poly[(j + 1) % n];
            if let Some((p, _, _)) = seg_seg_intersection(a0, a1, b0, b1, eps) {
                return Some(p);
            }
        }
    }
    None
}

/// Uniform grid over a set of segments for fast point-to-set distance
/// queries (used by the size field and for point culling near constraints).
pub struct SegmentGrid {
    segs: Vec<(P2, P2)>,
    cell: f64,
    min: P2,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<u32>>,
}

impl SegmentGrid {
    pub fn new(segs: Vec<(P2, P2)>) -> Self {
        assert!(!segs.is_empty());
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        let mut total = 0.0;
        for (a, b) in &segs {
            for p in [a, b] {
                min[0] = min[0].min(p[0]);
                min[1] = min[1].min(p[1]);
                max[0] = max[0].max(p[0]);
                max[1] = max[1].max(p[1]);
            }
            total += dist(*a, *b);
        }
        let extent = (max[0] - min[0]).max(max[1] - min[1]).max(1e-12);
        let cell = (total / segs.len() as f64).max(extent / 512.0);
        let nx = (((max[0] - min[0]) / cell).ceil() as usize + 1).max(1);
        let ny = (((max[1] - min[1]) / cell).ceil() as usize + 1).max(1);
        let mut bins = vec![Vec::new(); nx * ny];
        for (k, (a, b)) in segs.iter().enumerate() {
            let lo_x = (((a[0].min(b[0]) - min[0]) / cell).floor() as isize).max(0) as usize;
            let hi_x = ((((a[0].max(b[0]) - min[0]) / cell).floor() as isize).max(0) as usize)
                .min(nx - 1);
            let lo_y = (((a[1].min(b[1]) - min[1]) / cell).floor() as isize).max(0) as usize;
            let hi_y = ((((a[1].max(b[1]) - min[1]) / cell).floor() as isize).max(0) as usize)
                .min(ny - 1);
            for ix in lo_x..=hi_x {
                for iy in lo_y..=hi_y {
                    bins[iy * nx + ix].push(k as u32);
                }
            }
        }
        SegmentGrid {
            segs,
            cell,
            min,
            nx,
            ny,
            bins,
        }
    }

    /// Exact distance from `p` to the nearest segment.
    pub fn distance(&self, p: P2) -> f64 {
        let cx = ((p[0] - self.min[0]) / self.cell).floor() as isize;
        let cy = ((p[1] - self.min[1]) / self.cell).floor() as isize;
        let mut best = f64::INFINITY;
        let max_ring = self.nx.max(self.ny) as isize + 1;
        for ring in 0..=max_ring {
            // once a hit is found, one extra ring guarantees correctness
            if best < (ring as f64 - 1.0) * self.cell {
                break;
            }
            let mut any_cell = false;
            for ix in (cx - ring)..=(cx + ring) {
                for iy in (cy - ring)..=(cy + ring) {
                    if ring > 0
                        && ix > cx - ring
                        && ix < cx + ring
                        && iy > cy - ring
                        && iy < cy + ring
                    {
                        continue; // interior of ring already visited
                    }
                    if ix < 0 || iy < 0 || ix >= self.nx as isize || iy >= self.ny as isize {
                        continue;
                    }
                    any_cell = true;
                    for &k in &self.bins[iy as usize * self.nx + ix as usize] {
                        let (a, b) = self.segs[k as usize];
                        best = best.min(dist_point_segment(p, a, b));
                    }
                }
            }
            if !any_cell && ring > 0 && best.is_finite() {
                break;
            }
        }
        if best.is_infinite() {
            // point far outside the grid: brute force
            for (a, b) in &self.segs {
                best = best.min(dist_point_segment(p, *a, *b));
            }
        }
        best
    }
}
