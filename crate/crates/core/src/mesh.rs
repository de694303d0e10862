//! Conforming P1 triangulations of tagged polygonal domains, graded
//! refinement by longest-edge bisection, and quadrature over the mesh, over
//! local-domain disks and along tagged boundary edges.

use std::collections::HashMap;

use spade::handles::{FixedFaceHandle, InnerTag};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::clip::{clip_halfplane, convex_disk_moments, polygon_moments, segment_disk_interval};
use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon, segment_distance, BoundaryTag, Domain, Point};

/// Default cap on the node count of generated meshes.
pub const DEFAULT_MAX_NODES: usize = 2_000_000;
/// Deepest grading accepted by [`Mesh::refine_toward`].
pub const MAX_REFINE_LEVELS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TagFilter {
    Dirichlet,
    Neumann,
    All,
}

impl TagFilter {
    pub fn accepts(self, tag: BoundaryTag) -> bool {
        match self {
            TagFilter::All => true,
            TagFilter::Dirichlet => tag == BoundaryTag::Dirichlet,
            TagFilter::Neumann => tag == BoundaryTag::Neumann,
        }
    }
}

/// Integration region; disks are implicitly intersected with the mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    All,
    Disk { center: Point, radius: f64 },
    /// The part of a disk with `(y − center)·normal ≥ 0`.
    HalfDisk { center: Point, radius: f64, normal: Point },
}

/// A weighted evaluation point; `nodes`/`bary` interpolate P1 fields.
/// `elem` is the triangle index (or the boundary-edge index for boundary
/// quadrature).
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub elem: usize,
    pub nodes: [usize; 3],
    pub bary: [f64; 3],
    pub point: Point,
    pub weight: f64,
}

/// Anything that can be sampled at quadrature points.
pub trait FieldEval {
    fn components(&self) -> usize;
    fn eval(&self, q: &QuadPoint, out: &mut [f64]);
}

/// A field given by a closure of position.
pub struct FnField<F> {
    m: usize,
    f: F,
}

impl<F: Fn(Point, &mut [f64])> FnField<F> {
    pub fn new(m: usize, f: F) -> Self {
        Self { m, f }
    }
}

impl<F: Fn(Point, &mut [f64])> FieldEval for FnField<F> {
    fn components(&self) -> usize {
        self.m
    }
    fn eval(&self, q: &QuadPoint, out: &mut [f64]) {
        (self.f)(q.point, out)
    }
}

#[derive(Clone, Debug)]
struct Locator {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl Locator {
    fn build(nodes: &[Point], triangles: &[[usize; 3]]) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in nodes {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let area = ((hi.x - lo.x) * (hi.y - lo.y)).max(f64::MIN_POSITIVE);
        let cell = (2.0 * area / triangles.len().max(1) as f64).sqrt().max(1e-300);
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).clamp(1, 4096);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).clamp(1, 4096);
        let cell = ((hi.x - lo.x) / nx as f64).max((hi.y - lo.y) / ny as f64).max(1e-300);
        let mut loc = Self {
            lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (t, tri) in triangles.iter().enumerate() {
            let ps = tri.map(|i| nodes[i]);
            let tlo = Point::new(ps[0].x.min(ps[1].x).min(ps[2].x), ps[0].y.min(ps[1].y).min(ps[2].y));
            let thi = Point::new(ps[0].x.max(ps[1].x).max(ps[2].x), ps[0].y.max(ps[1].y).max(ps[2].y));
            let (i0, j0) = loc.cell_of(tlo);
            let (i1, j1) = loc.cell_of(thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * nx + i].push(t as u32);
                }
            }
        }
        loc
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p.x - self.lo.x) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p.y - self.lo.y) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    h: f64,
    r0: f64,
    areas: Vec<f64>,
    grads: Vec<[[f64; 2]; 3]>,
    dirichlet_node: Vec<bool>,
    locator: Locator,
}

impl Mesh {
    /// Assembles a mesh from raw parts; rejects inverted or degenerate
    /// triangles and out-of-range indices.
    pub fn from_parts(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        r0: f64,
    ) -> Result<Self> {
        let n = nodes.len();
        if triangles.is_empty() {
            return Err(Error::Mesh("no triangles".into()));
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        let mut h = 0.0f64;
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::Mesh(format!("triangle {t} references a missing node")));
            }
            let [a, b, c] = tri.map(|i| nodes[i]);
            let area2 = (b - a).cross(c - a);
            if area2 <= 0.0 {
                return Err(Error::Mesh(format!("triangle {t} has non-positive area")));
            }
            areas.push(0.5 * area2);
            // ∇λ_k = rot(opposite edge) / (2|T|)
            let g = |p: Point, q: Point| [(p.y - q.y) / area2, (q.x - p.x) / area2];
            grads.push([g(b, c), g(c, a), g(a, b)]);
            h = h.max(a.dist(b)).max(b.dist(c)).max(c.dist(a));
        }
        let mut dirichlet_node = vec![false; n];
        for e in &boundary_edges {
            if e.nodes.iter().any(|&i| i >= n) {
                return Err(Error::Mesh("boundary edge references a missing node".into()));
            }
            if e.tag == BoundaryTag::Dirichlet {
                dirichlet_node[e.nodes[0]] = true;
                dirichlet_node[e.nodes[1]] = true;
            }
        }
        let locator = Locator::build(&nodes, &triangles);
        Ok(Self {
            nodes,
            triangles,
            boundary_edges,
            h,
            r0,
            areas,
            grads,
            dirichlet_node,
            locator,
        })
    }

    /// Constrained Delaunay mesh of `dom` with every edge no longer than `h`.
    pub fn triangulate(dom: &Domain, h: f64) -> Result<Self> {
        Self::triangulate_capped(dom, h, DEFAULT_MAX_NODES)
    }

    pub fn triangulate_capped(dom: &Domain, h: f64, max_nodes: usize) -> Result<Self> {
        if !(h > 0.0 && h < dom.r0()) {
            return Err(Error::Mesh(format!(
                "mesh size h = {h} must lie in (0, r0 = {})",
                dom.r0()
            )));
        }
        let spacing = 0.85 * h;
        let estimate = dom.area() / (0.433 * spacing * spacing) + dom.perimeter() / spacing;
        if estimate > max_nodes as f64 {
            return Err(Error::Mesh(format!(
                "h = {h} needs about {estimate:.0} nodes, above the cap of {max_nodes}"
            )));
        }
        let mut points: Vec<Point> = Vec::new();
        let mut constraints: Vec<[usize; 2]> = Vec::new();
        let nv = dom.num_edges();
        // boundary: every polygon vertex plus uniform splits of each edge
        let mut first_of_edge = Vec::with_capacity(nv);
        for e in 0..nv {
            let (a, b) = dom.edge(e);
            let k = (a.dist(b) / spacing).ceil().max(1.0) as usize;
            first_of_edge.push(points.len());
            for s in 0..k {
                points.push(a.lerp(b, s as f64 / k as f64));
            }
        }
        let nb = points.len();
        for i in 0..nb {
            constraints.push([i, (i + 1) % nb]);
        }
        // interior: equilateral lattice kept away from the boundary
        let (lo, hi) = dom.bounding_box();
        let dy = spacing * 3f64.sqrt() / 2.0;
        let rows = ((hi.y - lo.y) / dy).ceil() as usize + 1;
        let cols = ((hi.x - lo.x) / spacing).ceil() as usize + 2;
        for r in 0..rows {
            let y = lo.y + (r as f64 + 0.5) * dy;
            let shift = if r % 2 == 0 { 0.25 } else { 0.75 };
            for c in 0..cols {
                let p = Point::new(lo.x + (c as f64 + shift) * spacing, y);
                if p.x > hi.x || !point_in_polygon(p, dom.vertices()) {
                    continue;
                }
                if dom.closest_boundary_point(p).0 < 0.55 * spacing {
                    continue;
                }
                points.push(p);
            }
        }
        let verts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
        let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, constraints)
            .map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;
        let result = cdt.refine(
            RefinementParameters::<f64>::new()
                .exclude_outer_faces(true)
                .with_angle_limit(AngleLimit::from_deg(25.0))
                .with_max_additional_vertices(points.len() + 1000),
        );
        if !result.refinement_complete {
            return Err(Error::Mesh("quality refinement did not complete".into()));
        }
        let excluded: std::collections::HashSet<FixedFaceHandle<InnerTag>> =
            result.excluded_faces.into_iter().collect();
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut triangles = Vec::new();
        for face in cdt.inner_faces() {
            if excluded.contains(&face.fix()) {
                continue;
            }
            let vs = face.vertices();
            let mut tri = [0usize; 3];
            for (k, v) in vs.iter().enumerate() {
                let key = v.fix().index();
                let next = nodes.len();
                tri[k] = *index.entry(key).or_insert_with(|| {
                    let p = v.position();
                    nodes.push(Point::new(p.x, p.y));
                    next
                });
            }
            let [a, b, c] = tri.map(|i| nodes[i]);
            if (b - a).cross(c - a) < 0.0 {
                tri.swap(1, 2);
            }
            triangles.push(tri);
        }
        let boundary_edges = tag_boundary(dom, &nodes, &triangles)?;
        let mesh = Mesh::from_parts(nodes, triangles, boundary_edges, dom.r0())?;
        // the refinement may leave a few edges slightly longer than h
        let mut mesh = mesh;
        for _ in 0..8 {
            let marked: Vec<bool> = (0..mesh.triangles.len())
                .map(|t| mesh.longest_edge(t).2 > h)
                .collect();
            if !marked.contains(&true) {
                break;
            }
            mesh = mesh.bisect(&marked)?;
        }
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Longest edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Gradients of the three barycentric (hat) functions on triangle `t`.
    pub fn grads(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.grads[t]
    }

    pub fn is_dirichlet_node(&self, i: usize) -> bool {
        self.dirichlet_node[i]
    }

    pub fn has_dirichlet(&self) -> bool {
        self.dirichlet_node.contains(&true)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// (local index of the edge start, local index of the end, length); edge
    /// `k` joins vertices `k` and `k+1`. Ties go to the lowest global pair.
    fn longest_edge(&self, t: usize) -> (usize, usize, f64) {
        let tri = self.triangles[t];
        let mut best = (0, 1, -1.0f64);
        let mut best_key = (usize::MAX, usize::MAX);
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            let len = self.nodes[i].dist(self.nodes[j]);
            let key = (i.min(j), i.max(j));
            if len > best.2 || (len == best.2 && key < best_key) {
                best = (k, (k + 1) % 3, len);
                best_key = key;
            }
        }
        best
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut min = 180.0f64;
        for tri in &self.triangles {
            let p = tri.map(|i| self.nodes[i]);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let (u, v) = (b - a, c - a);
                let ang = u.cross(v).abs().atan2(u.dot(v)).to_degrees();
                min = min.min(ang);
            }
        }
        min
    }

    /// Longest edge of the triangles containing `p` (the local mesh size).
    pub fn local_h(&self, p: Point) -> Option<f64> {
        let (i, j) = self.locator.cell_of(p);
        let mut best: Option<f64> = None;
        for &t in &self.locator.buckets[j * self.locator.nx + i] {
            let t = t as usize;
            if let Some(b) = self.barycentric(t, p) {
                if b.iter().all(|&x| x >= -1e-10) {
                    let len = self.longest_edge(t).2;
                    best = Some(best.map_or(len, |v: f64| v.max(len)));
                }
            }
        }
        best
    }

    fn barycentric(&self, t: usize, p: Point) -> Option<[f64; 3]> {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        let det = (b - a).cross(c - a);
        if det == 0.0 {
            return None;
        }
        let l1 = (c - b).cross(p - b) / det;
        let l2 = (a - c).cross(p - c) / det;
        Some([l1, l2, 1.0 - l1 - l2])
    }

    /// Triangle containing `p` and the barycentric coordinates of `p`.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        if !p.x.is_finite() || !p.y.is_finite() {
            return None;
        }
        let (i, j) = self.locator.cell_of(p);
        let tol = 1e-10;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.locator.buckets[j * self.locator.nx + i] {
            let t = t as usize;
            if let Some(b) = self.barycentric(t, p) {
                let worst = b[0].min(b[1]).min(b[2]);
                if worst >= -tol && best.is_none_or(|(_, _, w)| worst > w) {
                    best = Some((t, b, worst));
                }
            }
        }
        best.map(|(t, b, _)| (t, b.map(|x| x.max(0.0))))
    }

    /// Point evaluation of a nodal P1 field with `m` components per node.
    pub fn interpolate(&self, values: &[f64], m: usize, p: Point) -> Option<Vec<f64>> {
        let (t, b) = self.locate(p)?;
        let tri = self.triangles[t];
        Some(
            (0..m)
                .map(|c| (0..3).map(|k| b[k] * values[tri[k] * m + c]).sum())
                .collect(),
        )
    }

    fn candidates(&self, center: Point, radius: f64) -> Vec<usize> {
        let (i0, j0) = self.locator.cell_of(center - Point::new(radius, radius));
        let (i1, j1) = self.locator.cell_of(center + Point::new(radius, radius));
        let mut seen = vec![false; self.triangles.len()];
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &t in &self.locator.buckets[j * self.locator.nx + i] {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        out.push(t as usize);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn push_three_point(&self, t: usize, out: &mut Vec<QuadPoint>) {
        // edge midpoints: exact for quadratics
        const B: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
        let tri = self.triangles[t];
        let w = self.areas[t] / 3.0;
        for bary in B {
            out.push(QuadPoint {
                elem: t,
                nodes: tri,
                bary,
                point: self.bary_point(t, bary),
                weight: w,
            });
        }
    }

    fn bary_point(&self, t: usize, b: [f64; 3]) -> Point {
        let [p, q, r] = self.triangles[t].map(|i| self.nodes[i]);
        Point::new(
            b[0] * p.x + b[1] * q.x + b[2] * r.x,
            b[0] * p.y + b[1] * q.y + b[2] * r.y,
        )
    }

    /// Quadrature for `region`. Triangles fully inside use the exact-for-
    /// quadratics midpoint rule; cut triangles are split into 16 pieces whose
    /// clipped area and centroid are computed exactly, so linear integrands
    /// and the region measure are exact.
    pub fn region_quadrature(&self, region: &Region) -> Vec<QuadPoint> {
        let mut out = Vec::new();
        match *region {
            Region::All => {
                for t in 0..self.triangles.len() {
                    self.push_three_point(t, &mut out);
                }
            }
            Region::Disk { center, radius } => {
                for t in self.candidates(center, radius) {
                    self.clip_triangle(t, center, radius, None, &mut out);
                }
            }
            Region::HalfDisk { center, radius, normal } => {
                for t in self.candidates(center, radius) {
                    self.clip_triangle(t, center, radius, Some(normal), &mut out);
                }
            }
        }
        out
    }

    fn clip_triangle(
        &self,
        t: usize,
        center: Point,
        radius: f64,
        normal: Option<Point>,
        out: &mut Vec<QuadPoint>,
    ) {
        let tri = self.triangles[t];
        let p = tri.map(|i| self.nodes[i]);
        let r2 = radius * radius;
        let in_disk = p.iter().all(|q| (*q - center).dot(*q - center) <= r2);
        let side = |q: Point| normal.map_or(1.0, |n| (q - center).dot(n));
        let in_half = p.iter().all(|&q| side(q) >= 0.0);
        if in_disk && in_half {
            self.push_three_point(t, out);
            return;
        }
        if normal.is_some() && p.iter().all(|&q| side(q) <= 0.0) {
            return;
        }
        let inside = self.barycentric(t, center).is_some_and(|b| b.iter().all(|&x| x >= 0.0));
        let dist = if inside {
            0.0
        } else {
            (0..3)
                .map(|k| segment_distance(center, p[k], p[(k + 1) % 3]))
                .fold(f64::INFINITY, f64::min)
        };
        if dist >= radius {
            return;
        }
        const LEVEL: usize = 4;
        let step = 1.0 / LEVEL as f64;
        let bp = |i: usize, j: usize| [1.0 - (i + j) as f64 * step, i as f64 * step, j as f64 * step];
        let mut emit = |bs: [[f64; 3]; 3]| {
            let poly: Vec<Point> = bs.iter().map(|&b| self.bary_point(t, b)).collect();
            let poly = match normal {
                Some(n) => clip_halfplane(&poly, center, n),
                None => poly,
            };
            if poly.is_empty() {
                return;
            }
            let m = convex_disk_moments(&poly, center, radius);
            if m.area <= 0.0 {
                return;
            }
            let c = m.centroid();
            let bary = self.barycentric(t, c).unwrap_or([1.0 / 3.0; 3]);
            out.push(QuadPoint {
                elem: t,
                nodes: tri,
                bary,
                point: c,
                weight: m.area,
            });
        };
        for i in 0..LEVEL {
            for j in 0..(LEVEL - i) {
                emit([bp(i, j), bp(i + 1, j), bp(i, j + 1)]);
                if i + j + 1 < LEVEL {
                    emit([bp(i + 1, j), bp(i + 1, j + 1), bp(i, j + 1)]);
                }
            }
        }
    }

    /// Area of `region ∩ Ω_h`.
    pub fn region_area(&self, region: &Region) -> f64 {
        match *region {
            Region::All => self.total_area(),
            Region::Disk { center, radius } => self
                .candidates(center, radius)
                .into_iter()
                .map(|t| {
                    let p: Vec<Point> = self.triangles[t].iter().map(|&i| self.nodes[i]).collect();
                    convex_disk_moments(&p, center, radius).area
                })
                .sum(),
            Region::HalfDisk { .. } => self.region_quadrature(region).iter().map(|q| q.weight).sum(),
        }
    }

    pub fn integrate(&self, region: &Region, g: impl Fn(Point) -> f64) -> f64 {
        self.region_quadrature(region)
            .iter()
            .map(|q| q.weight * g(q.point))
            .sum()
    }

    pub fn integrate_quad(&self, region: &Region, g: impl Fn(&QuadPoint) -> f64) -> f64 {
        self.region_quadrature(region).iter().map(|q| q.weight * g(q)).sum()
    }

    /// Two-point Gauss rule on every boundary edge accepted by `filter`;
    /// `elem` indexes [`Mesh::boundary_edges`].
    pub fn boundary_quadrature(&self, filter: TagFilter) -> Vec<QuadPoint> {
        self.boundary_quadrature_in(filter, None)
    }

    /// Boundary quadrature restricted to the closed disk `B_r(c)`.
    pub fn boundary_quadrature_in(&self, filter: TagFilter, disk: Option<(Point, f64)>) -> Vec<QuadPoint> {
        let g = 0.5 / 3f64.sqrt();
        let mut out = Vec::new();
        for (e, edge) in self.boundary_edges.iter().enumerate() {
            if !filter.accepts(edge.tag) {
                continue;
            }
            let [i, j] = edge.nodes;
            let (a, b) = (self.nodes[i], self.nodes[j]);
            let (t0, t1) = match disk {
                None => (0.0, 1.0),
                Some((c, r)) => match segment_disk_interval(a, b, c, r) {
                    Some(iv) if iv.1 > iv.0 => iv,
                    _ => continue,
                },
            };
            let len = a.dist(b) * (t1 - t0);
            for s in [0.5 - g, 0.5 + g] {
                let t = t0 + (t1 - t0) * s;
                out.push(QuadPoint {
                    elem: e,
                    nodes: [i, j, j],
                    bary: [1.0 - t, t, 0.0],
                    point: a.lerp(b, t),
                    weight: 0.5 * len,
                });
            }
        }
        out
    }

    pub fn boundary_integrate(&self, filter: TagFilter, g: impl Fn(Point) -> f64) -> f64 {
        self.boundary_quadrature(filter)
            .iter()
            .map(|q| q.weight * g(q.point))
            .sum()
    }

    pub fn boundary_length(&self, filter: TagFilter) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| filter.accepts(e.tag))
            .map(|e| self.nodes[e.nodes[0]].dist(self.nodes[e.nodes[1]]))
            .sum()
    }

    /// Graded refinement: afterwards every edge within `2^{-k}·r0` of `x` is
    /// no longer than `h·2^{-k}` for `k = 1..=levels`, `h` being the longest
    /// edge of `self`.
    pub fn refine_toward(&self, x: Point, levels: usize) -> Result<Mesh> {
        if levels == 0 {
            return Err(Error::Mesh("refine_toward needs levels ≥ 1".into()));
        }
        if levels > MAX_REFINE_LEVELS {
            return Err(Error::Mesh(format!(
                "levels = {levels} above the cap of {MAX_REFINE_LEVELS}"
            )));
        }
        if self.locate(x).is_none() {
            return Err(Error::Mesh(format!("refinement target {x} outside the mesh")));
        }
        let h = self.h;
        let r0 = self.r0;
        let mut mesh = self.clone();
        loop {
            let marked: Vec<bool> = (0..mesh.triangles.len())
                .map(|t| {
                    let tri = mesh.triangles[t];
                    (0..3).any(|k| {
                        let (a, b) = (mesh.nodes[tri[k]], mesh.nodes[tri[(k + 1) % 3]]);
                        let dist = segment_distance(x, a, b);
                        let len = a.dist(b);
                        (1..=levels).any(|lvl| {
                            let s = 0.5f64.powi(lvl as i32);
                            dist <= s * r0 && len > s * h * (1.0 + 1e-12)
                        })
                    })
                })
                .collect();
            if !marked.contains(&true) {
                break;
            }
            mesh = mesh.bisect(&marked)?;
        }
        Ok(mesh)
    }

    /// Longest-edge bisection of the marked triangles with conforming
    /// closure. Boundary edges keep their tags.
    pub fn bisect(&self, marked: &[bool]) -> Result<Mesh> {
        let key = |i: usize, j: usize| (i.min(j), i.max(j));
        let mut split: HashMap<(usize, usize), usize> = HashMap::new();
        let longest: Vec<(usize, usize)> = (0..self.triangles.len())
            .map(|t| {
                let (a, b, _) = self.longest_edge(t);
                key(self.triangles[t][a], self.triangles[t][b])
            })
            .collect();
        for (t, &m) in marked.iter().enumerate() {
            if m {
                split.insert(longest[t], usize::MAX);
            }
        }
        // closure: a triangle with any split edge must split its longest edge
        loop {
            let mut changed = false;
            for (t, tri) in self.triangles.iter().enumerate() {
                if split.contains_key(&longest[t]) {
                    continue;
                }
                let any = (0..3).any(|k| split.contains_key(&key(tri[k], tri[(k + 1) % 3])));
                if any {
                    split.insert(longest[t], usize::MAX);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut nodes = self.nodes.clone();
        // deterministic midpoint numbering: triangle order, then edge order
        for tri in &self.triangles {
            for k in 0..3 {
                let e = key(tri[k], tri[(k + 1) % 3]);
                if let Some(v) = split.get_mut(&e) {
                    if *v == usize::MAX {
                        *v = nodes.len();
                        nodes.push(nodes[e.0].lerp(nodes[e.1], 0.5));
                    }
                }
            }
        }
        let mid = |i: usize, j: usize| split.get(&key(i, j)).copied();
        let mut triangles = Vec::with_capacity(self.triangles.len() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            let Some(m) = split.get(&longest[t]).copied() else {
                triangles.push(*tri);
                continue;
            };
            // rotate so that the longest edge is (a, b)
            let (ka, _, _) = self.longest_edge(t);
            let a = tri[ka];
            let b = tri[(ka + 1) % 3];
            let c = tri[(ka + 2) % 3];
            match mid(b, c) {
                Some(m2) => {
                    triangles.push([m, b, m2]);
                    triangles.push([m, m2, c]);
                }
                None => triangles.push([m, b, c]),
            }
            match mid(c, a) {
                Some(m3) => {
                    triangles.push([a, m, m3]);
                    triangles.push([m, c, m3]);
                }
                None => triangles.push([a, m, c]),
            }
        }
        let mut boundary_edges = Vec::with_capacity(self.boundary_edges.len());
        for e in &self.boundary_edges {
            let [i, j] = e.nodes;
            match mid(i, j) {
                Some(m) => {
                    boundary_edges.push(BoundaryEdge { nodes: [i, m], tag: e.tag });
                    boundary_edges.push(BoundaryEdge { nodes: [m, j], tag: e.tag });
                }
                None => boundary_edges.push(*e),
            }
        }
        Mesh::from_parts(nodes, triangles, boundary_edges, self.r0)
    }

    /// Uniform refinement: every triangle is bisected at least once per pass.
    pub fn refine_uniform(&self, passes: usize) -> Result<Mesh> {
        let mut mesh = self.clone();
        for _ in 0..passes {
            mesh = mesh.bisect(&vec![true; mesh.triangles.len()])?;
        }
        Ok(mesh)
    }

    /// Red refinement: every triangle splits into four similar ones through
    /// its edge midpoints, so `h` halves exactly and meshes stay nested.
    pub fn refine_red(&self) -> Result<Mesh> {
        let key = |i: usize, j: usize| (i.min(j), i.max(j));
        let mut nodes = self.nodes.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |i: usize, j: usize, nodes: &mut Vec<Point>| -> usize {
            *mid.entry(key(i, j)).or_insert_with(|| {
                nodes.push(nodes[i].lerp(nodes[j], 0.5));
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let [i, j] = e.nodes;
            let m = midpoint(i, j, &mut nodes);
            boundary_edges.push(BoundaryEdge { nodes: [i, m], tag: e.tag });
            boundary_edges.push(BoundaryEdge { nodes: [m, j], tag: e.tag });
        }
        if nodes.len() > DEFAULT_MAX_NODES {
            return Err(Error::Mesh(format!("refinement exceeds {DEFAULT_MAX_NODES} nodes")));
        }
        Mesh::from_parts(nodes, triangles, boundary_edges, self.r0)
    }

    /// Plain-text mesh file: `n x y`, `t i j k`, `b i j TAG`.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.nodes.len() * 48);
        s.push_str(&format!("# r0 {:.17e}\n", self.r0));
        for p in &self.nodes {
            s.push_str(&format!("n {:.17e} {:.17e}\n", p.x, p.y));
        }
        for t in &self.triangles {
            s.push_str(&format!("t {} {} {}\n", t[0], t[1], t[2]));
        }
        for e in &self.boundary_edges {
            s.push_str(&format!("b {} {} {}\n", e.nodes[0], e.nodes[1], e.tag.as_str()));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Mesh> {
        let mut nodes = Vec::new();
        let mut triangles = Vec::new();
        let mut boundary_edges = Vec::new();
        let mut r0 = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix("# r0 ") {
                r0 = rest.trim().parse::<f64>().ok();
                continue;
            }
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Mesh(format!("line {}: cannot parse `{line}`", lineno + 1));
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
            match (f[0], f.len()) {
                ("n", 3) => nodes.push(Point::new(
                    f[1].parse().map_err(|_| bad())?,
                    f[2].parse().map_err(|_| bad())?,
                )),
                ("t", 4) => triangles.push([idx(f[1])?, idx(f[2])?, idx(f[3])?]),
                ("b", 4) => boundary_edges.push(BoundaryEdge {
                    nodes: [idx(f[1])?, idx(f[2])?],
                    tag: BoundaryTag::parse(f[3]).ok_or_else(bad)?,
                }),
                _ => return Err(bad()),
            }
        }
        let mesh = Mesh::from_parts(nodes, triangles, boundary_edges, 1.0)?;
        let r0 = r0.unwrap_or_else(|| {
            let (lo, hi) = (mesh.locator.lo, mesh.locator.lo);
            lo.dist(hi).max(mesh.h * 2.0)
        });
        Ok(Mesh { r0, ..mesh })
    }
}

fn tag_boundary(dom: &Domain, nodes: &[Point], triangles: &[[usize; 3]]) -> Result<Vec<BoundaryEdge>> {
    let mut count: HashMap<(usize, usize), (usize, usize, u32)> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            let e = count.entry((i.min(j), i.max(j))).or_insert((i, j, 0));
            e.2 += 1;
        }
    }
    let tol = 1e-9 * dom.diameter();
    let mut edges: Vec<BoundaryEdge> = Vec::new();
    // deterministic order: walk triangles again
    for tri in triangles {
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            let (_, _, c) = count[&(i.min(j), i.max(j))];
            if c != 1 {
                continue;
            }
            let mid = nodes[i].lerp(nodes[j], 0.5);
            let e = dom.edge_containing(mid, tol).ok_or_else(|| {
                Error::Mesh(format!("boundary edge {i}-{j} does not lie on the polygon"))
            })?;
            let (a, b) = dom.edge(e);
            if segment_distance(nodes[i], a, b) > tol || segment_distance(nodes[j], a, b) > tol {
                return Err(Error::Mesh(format!("boundary edge {i}-{j} straddles a corner")));
            }
            edges.push(BoundaryEdge {
                nodes: [i, j],
                tag: dom.edge_tags()[e],
            });
        }
    }
    Ok(edges)
}

/// Exact area of the polygon, for area-conservation checks.
pub fn shoelace_area(dom: &Domain) -> f64 {
    polygon_moments(dom.vertices()).area
}
