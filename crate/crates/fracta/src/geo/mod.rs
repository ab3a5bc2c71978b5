//! Sharp crack geometry from smoothed aperture profiles: boundary polygons
//! about known centerlines, polygon union for multiple cracks, and handoff
//! to the fitted mesher.

use crate::cod::CodProfile;
use crate::geom2d::{
    dist, dist_point_polygon_boundary, point_in_polygon, polygon_area, seg_seg_intersection, P2,
};
use crate::mesh::{triangulate_fitted, MeshError, Rect, SizeSpec, TriMesh};
use crate::scalar::Real;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("smoothed widths are positive outside the tips at station {station}")]
    TipsInconsistent { station: usize },
    #[error("tangential (zero-area) polygon contact; increase the width floor")]
    TangentialContact,
    #[error("polygon union failed: {0}")]
    UnionFailure(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Oriented straight crack centerline with its unit normal.
#[derive(Clone, Copy, Debug)]
pub struct Centerline<T> {
    pub a: [T; 2],
    pub b: [T; 2],
    pub dir: [T; 2],
    pub normal: [T; 2],
}

impl<T: Real> Centerline<T> {
    pub fn new(a: [T; 2], b: [T; 2]) -> Result<Self, GeoError> {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if !(len > T::zero()) {
            return Err(GeoError::InvalidInput("degenerate centerline".into()));
        }
        let dir = [d[0] / len, d[1] / len];
        Ok(Centerline {
            a,
            b,
            dir,
            normal: [-dir[1], dir[0]],
        })
    }

    pub fn length(&self) -> T {
        let d = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    }
}

/// Crack boundary polygons (counterclockwise, simple) with per-vertex
/// provenance: the station index a vertex came from, `None` for tips.
#[derive(Clone, Debug, Default)]
pub struct CrackGeometry<T> {
    pub polygons: Vec<Vec<[T; 2]>>,
    pub provenance: Vec<Vec<Option<usize>>>,
    /// Set when any width was raised to the floor `w_min`.
    pub clamped: bool,
}

impl<T: Real> CrackGeometry<T> {
    pub fn total_area(&self) -> T {
        self.polygons
            .iter()
            .map(|poly| {
                let p: Vec<P2> = poly.iter().map(|v| [v[0].as_f64(), v[1].as_f64()]).collect();
                T::of(polygon_area(&p).abs())
            })
            .sum()
    }

    /// ASCII dump: one `polygon n` header per loop followed by vertex lines.
    pub fn dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for poly in &self.polygons {
            writeln!(w, "polygon {}", poly.len())?;
            for v in poly {
                writeln!(w, "{:.17e} {:.17e}", v[0].as_f64(), v[1].as_f64())?;
            }
        }
        Ok(())
    }
}

/// Builds the crack polygon: station vertices at ±max(w_i, w_min)/2 about
/// the centerline, closed by single sharp vertices at the profile tips.
pub fn reconstruct<T: Real>(
    profile: &CodProfile<T>,
    line: &Centerline<T>,
    w_min: T,
) -> Result<CrackGeometry<T>, GeoError> {
    if !(w_min > T::zero()) {
        return Err(GeoError::InvalidInput("w_min must be positive".into()));
    }
    let [t0, t1] = profile.tips;
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(GeoError::InvalidInput("non-finite or inverted tips".into()));
    }
    for (i, (&s, &w)) in profile
        .stations
        .iter()
        .zip(&profile.smoothed_widths)
        .enumerate()
    {
        if w > T::zero() && (s < t0 || s > t1) {
            return Err(GeoError::TipsInconsistent { station: i });
        }
    }

    let inner: Vec<usize> = (0..profile.stations.len())
        .filter(|&i| profile.stations[i] > t0 && profile.stations[i] < t1)
        .collect();
    let mut clamped = false;
    let half_width = |i: usize| {
        let w = profile.smoothed_widths[i];
        w.max(w_min) * T::of(0.5)
    };
    for &i in &inner {
        if profile.smoothed_widths[i] < w_min {
            clamped = true;
        }
    }
    let at = |s: T, n: T| {
        [
            line.a[0] + s * line.dir[0] + n * line.normal[0],
            line.a[1] + s * line.dir[1] + n * line.normal[1],
        ]
    };

    let mut poly = Vec::with_capacity(2 * inner.len() + 2);
    let mut prov = Vec::with_capacity(2 * inner.len() + 2);
    poly.push(at(t0, T::zero()));
    prov.push(None);
    for &i in &inner {
        poly.push(at(profile.stations[i], -half_width(i)));
        prov.push(Some(i));
    }
    poly.push(at(t1, T::zero()));
    prov.push(None);
    for &i in inner.iter().rev() {
        poly.push(at(profile.stations[i], half_width(i)));
        prov.push(Some(i));
    }
    if poly.len() < 3 {
        return Err(GeoError::InvalidInput(
            "no stations between the tips".into(),
        ));
    }

    let f: Vec<P2> = poly.iter().map(|v| [v[0].as_f64(), v[1].as_f64()]).collect();
    if polygon_area(&f) < 0.0 {
        poly.reverse();
        prov.reverse();
    }
    Ok(CrackGeometry {
        polygons: vec![poly],
        provenance: vec![prov],
        clamped,
    })
}

const UNION_EPS: f64 = 1e-12;

fn to_f64<T: Real>(poly: &[[T; 2]]) -> Vec<P2> {
    poly.iter().map(|v| [v[0].as_f64(), v[1].as_f64()]).collect()
}

fn polys_identical(a: &[P2], b: &[P2], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len();
    (0..n).any(|shift| (0..n).all(|i| dist(a[i], b[(i + shift) % n]) <= tol))
}

fn strictly_inside(p: P2, poly: &[P2], tol: f64) -> bool {
    point_in_polygon(p, poly) && dist_point_polygon_boundary(p, poly) > tol
}

fn boundaries_touch(a: &[P2], b: &[P2], tol: f64) -> bool {
    a.iter().any(|&p| dist_point_polygon_boundary(p, b) <= tol)
        || b.iter().any(|&p| dist_point_polygon_boundary(p, a) <= tol)
        || proper_crossings(a, b) > 0
}

fn proper_crossings(a: &[P2], b: &[P2]) -> usize {
    let mut count = 0;
    for i in 0..a.len() {
        let (a0, a1) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            let (b0, b1) = (b[j], b[(j + 1) % b.len()]);
            if seg_seg_intersection(a0, a1, b0, b1, UNION_EPS).is_some() {
                count += 1;
            }
        }
    }
    count
}

/// Unions crack polygons. Disjoint cracks pass through unchanged; polygons
/// overlapping with positive area are merged by boundary tracing; duplicate
/// polygons collapse to one copy. Zero-area (tangential) contact is refused.
pub fn union_cracks<T: Real>(geoms: &[CrackGeometry<T>]) -> Result<CrackGeometry<T>, GeoError> {
    let mut polys: Vec<Vec<P2>> = Vec::new();
    let mut clamped = false;
    for g in geoms {
        clamped |= g.clamped;
        for p in &g.polygons {
            polys.push(to_f64(p));
        }
    }
    if polys.is_empty() {
        return Err(GeoError::InvalidInput("no polygons to union".into()));
    }
    let scale = polys
        .iter()
        .flatten()
        .fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()))
        .max(1.0);
    let tol = 1e-9 * scale;

    // drop exact duplicates first so shared boundaries don't read as contact
    let mut kept: Vec<Vec<P2>> = Vec::new();
    for p in polys {
        if !kept.iter().any(|q| polys_identical(&p, q, tol)) {
            kept.push(p);
        }
    }
    let polys = kept;
    let n = polys.len();

    // pairwise relations
    let mut overlap = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let crossings = proper_crossings(&polys[i], &polys[j]);
            let i_in_j = polys[i].iter().all(|&p| point_in_polygon(p, &polys[j]));
            let j_in_i = polys[j].iter().all(|&p| point_in_polygon(p, &polys[i]));
            let some_strict = polys[i].iter().any(|&p| strictly_inside(p, &polys[j], tol))
                || polys[j].iter().any(|&p| strictly_inside(p, &polys[i], tol));
            if crossings > 0 || i_in_j || j_in_i || some_strict {
                overlap[i][j] = true;
                overlap[j][i] = true;
            } else if boundaries_touch(&polys[i], &polys[j], tol) {
                return Err(GeoError::TangentialContact);
            }
        }
    }

    // connected components under the overlap relation
    let mut comp = vec![usize::MAX; n];
    let mut n_comp = 0;
    for i in 0..n {
        if comp[i] != usize::MAX {
            continue;
        }
        let mut stack = vec![i];
        while let Some(k) = stack.pop() {
            if comp[k] != usize::MAX {
                continue;
            }
            comp[k] = n_comp;
            for (j, &o) in overlap[k].iter().enumerate() {
                if o && comp[j] == usize::MAX {
                    stack.push(j);
                }
            }
        }
        n_comp += 1;
    }

    let mut out_polys = Vec::new();
    for c in 0..n_comp {
        let members: Vec<usize> = (0..n).filter(|&i| comp[i] == c).collect();
        if members.len() == 1 {
            out_polys.push(polys[members[0]].clone());
        } else {
            let cluster: Vec<&Vec<P2>> = members.iter().map(|&i| &polys[i]).collect();
            out_polys.extend(trace_union(&cluster, tol)?);
        }
    }

    let polygons: Vec<Vec<[T; 2]>> = out_polys
        .iter()
        .map(|p| p.iter().map(|v| [T::of(v[0]), T::of(v[1])]).collect())
        .collect();
    let provenance = polygons.iter().map(|p| vec![None; p.len()]).collect();
    Ok(CrackGeometry {
        polygons,
        provenance,
        clamped,
    })
}

/// Union of a cluster of pairwise-overlapping CCW polygons by keeping the
/// boundary pieces outside every other polygon and tracing closed loops.
fn trace_union(cluster: &[&Vec<P2>], tol: f64) -> Result<Vec<Vec<P2>>, GeoError> {
    // split every edge at intersections with edges of the other polygons
    let mut pieces: Vec<(P2, P2)> = Vec::new();
    for (pi, poly) in cluster.iter().enumerate() {
        let np = poly.len();
        for i in 0..np {
            let (a0, a1) = (poly[i], poly[(i + 1) % np]);
            let mut cuts = vec![0.0, 1.0];
            for (qi, other) in cluster.iter().enumerate() {
                if qi == pi {
                    continue;
                }
                let nq = other.len();
                for j in 0..nq {
                    let (b0, b1) = (other[j], other[(j + 1) % nq]);
                    if let Some((_, t, _)) = seg_seg_intersection(a0, a1, b0, b1, UNION_EPS) {
                        cuts.push(t);
                    }
                    // endpoint of the other polygon lying on this edge also splits it
                    for &q in [b0, b1].iter() {
                        let d = crate::geom2d::dist_point_segment(q, a0, a1);
                        if d <= tol {
                            let len = dist(a0, a1).max(1e-300);
                            let t = ((q[0] - a0[0]) * (a1[0] - a0[0])
                                + (q[1] - a0[1]) * (a1[1] - a0[1]))
                                / (len * len);
                            if t > 0.0 && t < 1.0 {
                                cuts.push(t);
                            }
                        }
                    }
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
            for w in cuts.windows(2) {
                let (t0, t1) = (w[0], w[1]);
                if t1 - t0 <= 1e-12 {
                    continue;
                }
                let p0 = [a0[0] + t0 * (a1[0] - a0[0]), a0[1] + t0 * (a1[1] - a0[1])];
                let p1 = [a0[0] + t1 * (a1[0] - a0[0]), a0[1] + t1 * (a1[1] - a0[1])];
                let mid = [(p0[0] + p1[0]) * 0.5, (p0[1] + p1[1]) * 0.5];
                // keep pieces on the union boundary: outside all other polygons
                let mut keep = true;
                for (qi, other) in cluster.iter().enumerate() {
                    if qi == pi {
                        continue;
                    }
                    if strictly_inside(mid, other, tol) {
                        keep = false;
                        break;
                    }
                    // shared boundary: keep only the lower-indexed copy
                    if dist_point_polygon_boundary(mid, other) <= tol && qi < pi {
                        keep = false;
                        break;
                    }
                }
                if keep {
                    pieces.push((p0, p1));
                }
            }
        }
    }

    // trace loops by matching piece endpoints
    let key = |p: P2| -> (i64, i64) {
        (
            (p[0] / tol).round() as i64,
            (p[1] / tol).round() as i64,
        )
    };
    let mut by_start: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, (a, _)) in pieces.iter().enumerate() {
        by_start.entry(key(*a)).or_default().push(i);
    }
    let mut used = vec![false; pieces.len()];
    let mut loops = Vec::new();
    for start in 0..pieces.len() {
        if used[start] {
            continue;
        }
        let mut loop_pts = vec![pieces[start].0];
        let mut cur = start;
        used[start] = true;
        loop {
            let end = pieces[cur].1;
            if key(end) == key(pieces[start].0) {
                break;
            }
            let candidates = by_start.get(&key(end)).cloned().unwrap_or_default();
            let next: Vec<usize> = candidates.into_iter().filter(|&i| !used[i]).collect();
            match next.len() {
                0 => {
                    return Err(GeoError::UnionFailure(format!(
                        "open boundary at ({}, {})",
                        end[0], end[1]
                    )))
                }
                1 => {
                    loop_pts.push(end);
                    cur = next[0];
                    used[cur] = true;
                }
                _ => return Err(GeoError::TangentialContact),
            }
        }
        if loop_pts.len() >= 3 {
            loops.push(loop_pts);
        }
    }

    // the union of overlapping CCW polygons has CCW outer loops; holes
    // (CW loops) cannot arise from crack slabs and indicate bad input
    let mut out = Vec::new();
    for l in loops {
        let a = polygon_area(&l);
        if a < 0.0 {
            return Err(GeoError::UnionFailure("union produced a hole".into()));
        }
        if a > tol * tol {
            out.push(l);
        }
    }
    if out.is_empty() {
        return Err(GeoError::UnionFailure("empty union".into()));
    }
    Ok(out)
}

/// Delegates to the fitted mesher with the domain box as outer boundary.
pub fn to_fitted_mesh<T: Real>(
    geom: &CrackGeometry<T>,
    domain: Rect<T>,
    sizes: &SizeSpec<T>,
) -> Result<TriMesh<T>, GeoError> {
    let outer = domain.corners();
    Ok(triangulate_fitted(&outer, &geom.polygons, sizes)?)
}
