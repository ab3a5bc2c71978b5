//! Graded constrained-Delaunay mesh generation.
//!
//! All loops (outer boundary, crack boxes, crack polygons) are pre-split to
//! the local target size and enter the triangulation as constraint edges.
//! Interior points come from a quadtree scatter driven by the size field,
//! culled near the constraints; a Ruppert-style angle refinement pass then
//! repairs the remaining bad triangles. Generation works in `f64` and the
//! result is converted to the requested scalar type.

use super::{MeshError, Rect, SizeSpec, Subdomain, TriMesh};
use crate::geom2d::{self, P2, SegmentGrid};
use crate::scalar::Real;
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, InsertionError, Point2, RefinementParameters,
    Triangulation,
};

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

/// Meshes an axis-aligned box with the crack boxes of `sizes` resolved as
/// interface loops; their interiors are tagged fluid.
pub fn build_background_mesh<T: Real>(
    domain: Rect<T>,
    sizes: &SizeSpec<T>,
) -> Result<TriMesh<T>, MeshError> {
    if !(domain.width() > T::zero() && domain.height() > T::zero()) {
        return Err(MeshError::InvalidInput("degenerate domain box".into()));
    }
    sizes.validate(&domain)?;
    let outer: Vec<P2> = domain
        .corners()
        .iter()
        .map(|p| [p[0].as_f64(), p[1].as_f64()])
        .collect();
    let boxes: Vec<(P2, P2)> = sizes
        .crack_boxes
        .iter()
        .map(|b| {
            (
                [b.min[0].as_f64(), b.min[1].as_f64()],
                [b.max[0].as_f64(), b.max[1].as_f64()],
            )
        })
        .collect();
    let mut loops = vec![outer];
    for (lo, hi) in &boxes {
        loops.push(vec![
            [lo[0], lo[1]],
            [hi[0], lo[1]],
            [hi[0], hi[1]],
            [lo[0], hi[1]],
        ]);
    }
    let h_max = sizes.h_max.as_f64();
    let h_cr = sizes.h_cr.as_f64();
    let grading = sizes.grading.as_f64();
    let size = move |p: P2| -> f64 {
        let mut d = f64::INFINITY;
        for (lo, hi) in &boxes {
            d = d.min(geom2d::dist_point_rect(p, *lo, *hi));
        }
        if d.is_finite() {
            (h_cr + grading * d).min(h_max)
        } else {
            h_max
        }
    };
    let in_box = {
        let boxes: Vec<(P2, P2)> = sizes
            .crack_boxes
            .iter()
            .map(|b| {
                (
                    [b.min[0].as_f64(), b.min[1].as_f64()],
                    [b.max[0].as_f64(), b.max[1].as_f64()],
                )
            })
            .collect();
        move |p: P2| {
            boxes
                .iter()
                .any(|(lo, hi)| p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1])
        }
    };
    let classify = |p: P2| -> Option<Subdomain> {
        Some(if in_box(p) {
            Subdomain::Fluid
        } else {
            Subdomain::Solid
        })
    };
    triangulate_core(&loops, &size, &classify)
}

/// Constrained triangulation of an outer polygon with crack polygons as
/// resolved interface loops; crack interiors are tagged fluid.
pub fn triangulate_fitted<T: Real>(
    outer: &[[T; 2]],
    cracks: &[Vec<[T; 2]>],
    sizes: &SizeSpec<T>,
) -> Result<TriMesh<T>, MeshError> {
    let to_f64 = |poly: &[[T; 2]]| -> Vec<P2> {
        poly.iter().map(|p| [p[0].as_f64(), p[1].as_f64()]).collect()
    };
    let mut outer = to_f64(outer);
    if outer.len() < 3 {
        return Err(MeshError::InvalidInput("outer polygon too small".into()));
    }
    if geom2d::polygon_area(&outer) < 0.0 {
        outer.reverse();
    }
    let eps = 1e-14;
    if let Some(p) = geom2d::polygon_self_intersection(&outer, eps) {
        return Err(MeshError::SelfIntersection(p[0], p[1]));
    }
    let mut crack_polys: Vec<Vec<P2>> = Vec::new();
    for c in cracks {
        let mut c = to_f64(c);
        if c.len() < 3 {
            return Err(MeshError::InvalidInput("crack polygon too small".into()));
        }
        if geom2d::polygon_area(&c) < 0.0 {
            c.reverse();
        }
        if let Some(p) = geom2d::polygon_self_intersection(&c, eps) {
            return Err(MeshError::SelfIntersection(p[0], p[1]));
        }
        for v in &c {
            if !geom2d::point_in_polygon(*v, &outer) {
                return Err(MeshError::InvalidInput(format!(
                    "crack vertex ({}, {}) outside the outer polygon",
                    v[0], v[1]
                )));
            }
        }
        crack_polys.push(c);
    }
    for i in 0..crack_polys.len() {
        for j in (i + 1)..crack_polys.len() {
            if polygons_overlap(&crack_polys[i], &crack_polys[j], eps) {
                return Err(MeshError::UnionFailure(format!(
                    "crack polygons {i} and {j} overlap; union them first"
                )));
            }
        }
    }

    let mut segs = Vec::new();
    for c in &crack_polys {
        for k in 0..c.len() {
            segs.push((c[k], c[(k + 1) % c.len()]));
        }
    }
    let h_max = sizes.h_max.as_f64();
    let h_cr = sizes.h_cr.as_f64();
    let grading = sizes.grading.as_f64();
    let grid = if segs.is_empty() {
        None
    } else {
        Some(SegmentGrid::new(segs))
    };
    let size = move |p: P2| -> f64 {
        match &grid {
            Some(g) => (h_cr + grading * g.distance(p)).min(h_max),
            None => h_max,
        }
    };
    let classify = {
        let outer = outer.clone();
        let crack_polys = crack_polys.clone();
        move |p: P2| -> Option<Subdomain> {
            if !geom2d::point_in_polygon(p, &outer) {
                return None;
            }
            Some(if crack_polys.iter().any(|c| geom2d::point_in_polygon(p, c)) {
                Subdomain::Fluid
            } else {
                Subdomain::Solid
            })
        }
    };
    let mut loops = vec![outer];
    loops.extend(crack_polys);
    triangulate_core(&loops, &size, &classify)
}

/// Splits every triangle into four; subdomain labels are inherited and the
/// size field is averaged onto edge midpoints.
pub fn refine_uniform<T: Real>(mesh: &TriMesh<T>) -> TriMesh<T> {
    let nv = mesh.n_vertices();
    let half = T::of(0.5);
    let mut vertices = mesh.vertices.clone();
    let mut size_field = mesh.size_field.clone();
    for e in &mesh.edges {
        let (a, b) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
        vertices.push([(a[0] + b[0]) * half, (a[1] + b[1]) * half]);
        if let (Some(s), Some(sf)) = (&mut size_field, &mesh.size_field) {
            s.push((sf[e[0]] + sf[e[1]]) * half);
        }
    }
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    let mut labels = Vec::with_capacity(4 * mesh.n_triangles());
    for (ti, t) in mesh.triangles.iter().enumerate() {
        // midpoint m[k] is opposite local vertex k
        let m = mesh.tri_edges[ti].map(|e| nv + e);
        triangles.push([t[0], m[2], m[1]]);
        triangles.push([t[1], m[0], m[2]]);
        triangles.push([t[2], m[1], m[0]]);
        triangles.push([m[0], m[1], m[2]]);
        for _ in 0..4 {
            labels.push(mesh.tri_label[ti]);
        }
    }
    TriMesh::new(vertices, triangles, labels, size_field).expect("refinement preserves validity")
}

fn polygons_overlap(a: &[P2], b: &[P2], eps: f64) -> bool {
    for i in 0..a.len() {
        for j in 0..b.len() {
            if geom2d::seg_seg_intersection(
                a[i],
                a[(i + 1) % a.len()],
                b[j],
                b[(j + 1) % b.len()],
                eps,
            )
            .is_some()
            {
                return true;
            }
        }
    }
    geom2d::point_in_polygon(a[0], b) || geom2d::point_in_polygon(b[0], a)
}

fn insert_point(cdt: &mut Cdt, p: P2) -> Result<spade::handles::FixedVertexHandle, MeshError> {
    cdt.insert(Point2::new(p[0], p[1])).map_err(|e| {
        let reason = match e {
            InsertionError::NAN => "coordinate is NaN",
            _ => "coordinate out of the representable range",
        };
        MeshError::MesherFailure {
            x: p[0],
            y: p[1],
            reason: reason.into(),
        }
    })
}

fn triangulate_core<T: Real>(
    loops: &[Vec<P2>],
    size: &dyn Fn(P2) -> f64,
    classify: &dyn Fn(P2) -> Option<Subdomain>,
) -> Result<TriMesh<T>, MeshError> {
    // resolve every loop to the local target size
    let mut split_loops: Vec<Vec<P2>> = Vec::with_capacity(loops.len());
    for poly in loops {
        let mut pts = Vec::new();
        for k in 0..poly.len() {
            let a = poly[k];
            let b = poly[(k + 1) % poly.len()];
            let mut seg = vec![a];
            split_edge(a, b, size, 0, &mut seg);
            seg.pop(); // drop b, owned by the next edge
            pts.extend(seg);
        }
        split_loops.push(pts);
    }

    let all_segs: Vec<(P2, P2)> = split_loops
        .iter()
        .flat_map(|l| (0..l.len()).map(|k| (l[k], l[(k + 1) % l.len()])))
        .collect();
    let seg_grid = SegmentGrid::new(all_segs);

    // quadtree scatter of interior points, culled near constraints
    let mut bbox_min = [f64::INFINITY; 2];
    let mut bbox_max = [f64::NEG_INFINITY; 2];
    for p in &split_loops[0] {
        for k in 0..2 {
            bbox_min[k] = bbox_min[k].min(p[k]);
            bbox_max[k] = bbox_max[k].max(p[k]);
        }
    }
    let mut interior = Vec::new();
    scatter(bbox_min, bbox_max, size, 0, &mut |c: P2, s: f64| {
        if classify(c).is_some() && seg_grid.distance(c) > 0.45 * s.min(size(c)) {
            interior.push(c);
        }
    });

    let mut cdt = Cdt::new();
    for l in &split_loops {
        let handles: Vec<_> = l
            .iter()
            .map(|p| insert_point(&mut cdt, *p))
            .collect::<Result<_, _>>()?;
        for k in 0..handles.len() {
            let (a, b) = (handles[k], handles[(k + 1) % handles.len()]);
            if a != b {
                cdt.add_constraint_and_split(a, b, |p| p);
            }
        }
    }
    for p in &interior {
        insert_point(&mut cdt, *p)?;
    }

    let cap = 4 * cdt.num_vertices() + 1000;
    cdt.refine(
        RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(25.0))
            .exclude_outer_faces(true)
            .with_max_additional_vertices(cap),
    );

    // extract and classify
    let mut positions = vec![[0.0f64; 2]; cdt.num_vertices()];
    for v in cdt.vertices() {
        let p = v.position();
        positions[v.index()] = [p.x, p.y];
    }
    let mut keep = vec![false; cdt.num_vertices()];
    let mut triangles = Vec::new();
    let mut labels = Vec::new();
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices().map(|v| v.index());
        let centroid = [
            (positions[a][0] + positions[b][0] + positions[c][0]) / 3.0,
            (positions[a][1] + positions[b][1] + positions[c][1]) / 3.0,
        ];
        if let Some(label) = classify(centroid) {
            triangles.push([a, b, c]);
            labels.push(label);
            keep[a] = true;
            keep[b] = true;
            keep[c] = true;
        }
    }
    if triangles.is_empty() {
        return Err(MeshError::MesherFailure {
            x: bbox_min[0],
            y: bbox_min[1],
            reason: "empty triangulation".into(),
        });
    }

    // compact vertex numbering over kept triangles
    let mut remap = vec![usize::MAX; cdt.num_vertices()];
    let mut vertices = Vec::new();
    let mut sizes_out = Vec::new();
    for (i, &k) in keep.iter().enumerate() {
        if k {
            remap[i] = vertices.len();
            vertices.push([T::of(positions[i][0]), T::of(positions[i][1])]);
            sizes_out.push(T::of(size(positions[i])));
        }
    }
    for t in triangles.iter_mut() {
        for v in t.iter_mut() {
            *v = remap[*v];
        }
    }
    TriMesh::new(vertices, triangles, labels, Some(sizes_out))
}

/// Appends interior split points of the segment `a`-`b` (recursively bisected
/// until no piece exceeds the local target) plus the endpoint `b`.
fn split_edge(a: P2, b: P2, size: &dyn Fn(P2) -> f64, depth: u32, out: &mut Vec<P2>) {
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    if depth < 24 && geom2d::dist(a, b) > size(mid) {
        split_edge(a, mid, size, depth + 1, out);
        split_edge(mid, b, size, depth + 1, out);
    } else {
        out.push(b);
    }
}

/// Quadtree scatter: subdivides the cell until it meets the local target size
/// and reports each leaf center with its cell size.
fn scatter(min: P2, max: P2, size: &dyn Fn(P2) -> f64, depth: u32, emit: &mut dyn FnMut(P2, f64)) {
    let c = [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])];
    let s = (max[0] - min[0]).max(max[1] - min[1]);
    if depth >= 24 || s <= size(c) {
        emit(c, s);
        return;
    }
    scatter(min, c, size, depth + 1, emit);
    scatter([c[0], min[1]], [max[0], c[1]], size, depth + 1, emit);
    scatter([min[0], c[1]], [c[0], max[1]], size, depth + 1, emit);
    scatter(c, max, size, depth + 1, emit);
}
