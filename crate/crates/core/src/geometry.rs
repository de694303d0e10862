//! Polygonal domains with a Dirichlet/Neumann boundary split, local domains
//! `Ω_ρ(x)`, the D-adapted average and the corkscrew check.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::mesh::{FieldEval, Mesh, Region};
use crate::report::VerificationReport;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Closest point on the segment `[a, b]` to `p`, with the segment parameter.
pub fn closest_on_segment(p: Point, a: Point, b: Point) -> (Point, f64) {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    (a + d * t, t)
}

pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    closest_on_segment(p, a, b).0.dist(p)
}

/// Signed area by the shoelace formula (positive for counterclockwise).
pub fn polygon_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// Even-odd point-in-polygon test; points on the boundary may go either way.
pub fn point_in_polygon(p: Point, vertices: &[Point]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "D",
            BoundaryTag::Neumann => "N",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "D" => Some(BoundaryTag::Dirichlet),
            "N" => Some(BoundaryTag::Neumann),
            _ => None,
        }
    }
}

/// A maximal run of polygon edges with one tag: edges `start, start+1, …`
/// up to (not including) vertex `end`, indices modulo the vertex count.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryArc {
    pub start: usize,
    pub end: usize,
    pub tag: BoundaryTag,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct Domain {
    vertices: Vec<Point>,
    edge_tags: Vec<BoundaryTag>,
    arcs: Vec<BoundaryArc>,
    m_const: f64,
    r0: f64,
    diameter: f64,
}

impl Domain {
    /// Builds a domain from counterclockwise vertices and one tag per edge
    /// (edge `i` joins vertex `i` to vertex `i+1`).
    pub fn new(
        vertices: Vec<Point>,
        edge_tags: Vec<BoundaryTag>,
        m_const: f64,
        r0: f64,
    ) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Domain("polygon needs at least 3 vertices".into()));
        }
        if edge_tags.len() != n {
            return Err(Error::Domain(format!(
                "expected {n} edge tags, got {}",
                edge_tags.len()
            )));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::Domain("non-finite vertex coordinate".into()));
        }
        for i in 0..n {
            if vertices[i].dist(vertices[(i + 1) % n]) == 0.0 {
                return Err(Error::Domain(format!("zero-length edge at vertex {i}")));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::Domain(format!(
                        "self-intersecting polygon: edges {i} and {j} cross"
                    )));
                }
            }
        }
        if polygon_area(&vertices) <= 0.0 {
            return Err(Error::Domain("polygon must be counterclockwise".into()));
        }
        if !(m_const > 0.0 && m_const.is_finite()) {
            return Err(Error::Domain("M must be positive".into()));
        }
        let mut diameter = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                diameter = diameter.max(vertices[i].dist(vertices[j]));
            }
        }
        if !(r0 > 0.0 && r0 <= diameter) {
            return Err(Error::Domain(format!(
                "r0 must lie in (0, d], got {r0} with d = {diameter}"
            )));
        }
        let arcs = maximal_runs(&vertices, &edge_tags);
        Ok(Self {
            vertices,
            edge_tags,
            arcs,
            m_const,
            r0,
            diameter,
        })
    }

    /// Parses the plain-text domain format: `v x y`, `arc i j TAG`,
    /// `M value`, `r0 value`, `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut arcs: Vec<(usize, usize, BoundaryTag, usize)> = Vec::new();
        let mut m_const = None;
        let mut r0 = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Domain(format!("line {}: cannot parse `{line}`", lineno + 1));
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            match fields[0] {
                "v" if fields.len() == 3 => {
                    vertices.push(Point::new(num(fields[1])?, num(fields[2])?));
                }
                "arc" if fields.len() == 4 => {
                    let i = fields[1].parse::<usize>().map_err(|_| bad())?;
                    let j = fields[2].parse::<usize>().map_err(|_| bad())?;
                    let tag = BoundaryTag::parse(fields[3]).ok_or_else(|| {
                        Error::Domain(format!(
                            "line {}: unknown tag `{}` (expected D or N)",
                            lineno + 1,
                            fields[3]
                        ))
                    })?;
                    arcs.push((i, j, tag, lineno + 1));
                }
                "M" if fields.len() == 2 => m_const = Some(num(fields[1])?),
                "r0" if fields.len() == 2 => r0 = Some(num(fields[1])?),
                _ => return Err(bad()),
            }
        }
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Domain("polygon needs at least 3 vertices".into()));
        }
        let mut tags: Vec<Option<BoundaryTag>> = vec![None; n];
        for &(i, j, tag, lineno) in &arcs {
            if i > n || j > n {
                return Err(Error::Domain(format!(
                    "line {lineno}: arc vertex index out of range"
                )));
            }
            if i == j {
                return Err(Error::Domain(format!("line {lineno}: zero-length arc")));
            }
            let (start, end) = (i % n, j % n);
            let count = if end > start { end - start } else { end + n - start };
            for k in 0..count {
                let e = (start + k) % n;
                if tags[e].is_some() {
                    return Err(Error::Domain(format!(
                        "line {lineno}: edge {e} tagged twice"
                    )));
                }
                tags[e] = Some(tag);
            }
        }
        let edge_tags = tags
            .iter()
            .enumerate()
            .map(|(e, t)| t.ok_or_else(|| Error::Domain(format!("untagged edge {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let m_const = m_const.ok_or_else(|| Error::Domain("missing `M` line".into()))?;
        let r0 = r0.ok_or_else(|| Error::Domain("missing `r0` line".into()))?;
        Self::new(vertices, edge_tags, m_const, r0)
    }

    /// Serialises back to the text format using the normalised arcs.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {:.17e} {:.17e}\n", v.x, v.y));
        }
        for a in &self.arcs {
            let end = if a.end == a.start { a.start + self.vertices.len() } else { a.end };
            s.push_str(&format!("arc {} {} {}\n", a.start, end, a.tag.as_str()));
        }
        s.push_str(&format!("M {:.17e}\nr0 {:.17e}\n", self.m_const, self.r0));
        s
    }

    /// Regular `n`-gon inscribed in the circle of radius `radius`.
    pub fn regular_polygon(
        center: Point,
        radius: f64,
        n: usize,
        tag: BoundaryTag,
        m_const: f64,
        r0: f64,
    ) -> Result<Self> {
        let vertices = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                center + Point::new(t.cos(), t.sin()) * radius
            })
            .collect();
        Self::new(vertices, vec![tag; n], m_const, r0)
    }

    /// Axis-aligned rectangle with edges tagged bottom, right, top, left.
    pub fn rectangle(
        lo: Point,
        hi: Point,
        tags: [BoundaryTag; 4],
        m_const: f64,
        r0: f64,
    ) -> Result<Self> {
        let vertices = vec![lo, Point::new(hi.x, lo.y), hi, Point::new(lo.x, hi.y)];
        Self::new(vertices, tags.to_vec(), m_const, r0)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edge_tags(&self) -> &[BoundaryTag] {
        &self.edge_tags
    }

    pub fn arcs(&self) -> &[BoundaryArc] {
        &self.arcs
    }

    pub fn m_const(&self) -> f64 {
        self.m_const
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b, _)| a.dist(b)).sum()
    }

    pub fn num_edges(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge(&self, e: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[e], self.vertices[(e + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point, BoundaryTag)> + '_ {
        (0..self.vertices.len()).map(|e| {
            let (a, b) = self.edge(e);
            (a, b, self.edge_tags[e])
        })
    }

    pub fn has_dirichlet(&self) -> bool {
        self.edge_tags.contains(&BoundaryTag::Dirichlet)
    }

    pub fn has_neumann(&self) -> bool {
        self.edge_tags.contains(&BoundaryTag::Neumann)
    }

    pub fn tagged_segments(&self, tag: BoundaryTag) -> Vec<(Point, Point)> {
        self.edges()
            .filter(|&(_, _, t)| t == tag)
            .map(|(a, b, _)| (a, b))
            .collect()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Distance from `p` to the boundary and the closest boundary point.
    pub fn closest_boundary_point(&self, p: Point) -> (f64, Point) {
        self.edges()
            .map(|(a, b, _)| {
                let q = closest_on_segment(p, a, b).0;
                (q.dist(p), q)
            })
            .fold((f64::INFINITY, p), |best, c| if c.0 < best.0 { c } else { best })
    }

    pub fn distance_to_tag(&self, p: Point, tag: BoundaryTag) -> f64 {
        self.edges()
            .filter(|&(_, _, t)| t == tag)
            .map(|(a, b, _)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// True for points of the closed domain (boundary within `1e-12·d`).
    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, &self.vertices)
            || self.closest_boundary_point(p).0 <= 1e-12 * self.diameter
    }

    /// Index of the polygon edge that contains `p` within `tol`, if any.
    pub fn edge_containing(&self, p: Point, tol: f64) -> Option<usize> {
        (0..self.num_edges())
            .map(|e| {
                let (a, b) = self.edge(e);
                (e, segment_distance(p, a, b))
            })
            .filter(|&(_, d)| d <= tol)
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(e, _)| e)
    }
}

fn maximal_runs(vertices: &[Point], tags: &[BoundaryTag]) -> Vec<BoundaryArc> {
    let n = tags.len();
    let len = |e: usize| vertices[e].dist(vertices[(e + 1) % n]);
    if tags.iter().all(|&t| t == tags[0]) {
        return vec![BoundaryArc {
            start: 0,
            end: 0,
            tag: tags[0],
            length: (0..n).map(len).sum(),
        }];
    }
    // start at an edge whose predecessor has a different tag
    let first = (0..n).find(|&e| tags[e] != tags[(e + n - 1) % n]).unwrap_or(0);
    let mut arcs = Vec::new();
    let mut k = 0;
    while k < n {
        let start = (first + k) % n;
        let tag = tags[start];
        let mut length = 0.0;
        while k < n && tags[(first + k) % n] == tag {
            length += len((first + k) % n);
            k += 1;
        }
        arcs.push(BoundaryArc {
            start,
            end: (first + k) % n,
            tag,
            length,
        });
    }
    arcs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalKind {
    Interior,
    Boundary,
}

/// `Ω_ρ(x) = B_ρ(x̂) ∩ Ω`, with `x̂ = x` for interior local domains and the
/// closest boundary point otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalDomain {
    pub center: Point,
    pub ball_center: Point,
    pub radius: f64,
    pub kind: LocalKind,
    pub touches_d: bool,
}

impl LocalDomain {
    pub fn region(&self) -> Region {
        Region::Disk {
            center: self.ball_center,
            radius: self.radius,
        }
    }

    /// Same center, radius scaled by `factor` (`Ω_{2ρ}` from `Ω_ρ`).
    pub fn scaled(&self, dom: &Domain, factor: f64) -> Result<LocalDomain> {
        local_domain(dom, self.center, self.radius * factor)
    }
}

pub fn local_domain(dom: &Domain, x: Point, rho: f64) -> Result<LocalDomain> {
    if !dom.contains(x) {
        return Err(Error::Domain(format!("point {x} outside the closed domain")));
    }
    if !(rho > 0.0 && rho < 4.0 * dom.r0()) {
        return Err(Error::Domain(format!(
            "radius {rho} outside (0, 4·r0) = (0, {})",
            4.0 * dom.r0()
        )));
    }
    let inside = point_in_polygon(x, dom.vertices());
    let (dist, xhat) = dom.closest_boundary_point(x);
    let dist = if inside { dist } else { 0.0 };
    if dist > rho {
        return Ok(LocalDomain {
            center: x,
            ball_center: x,
            radius: rho,
            kind: LocalKind::Interior,
            touches_d: false,
        });
    }
    let touches_d = dom.distance_to_tag(xhat, BoundaryTag::Dirichlet) <= rho;
    Ok(LocalDomain {
        center: x,
        ball_center: xhat,
        radius: rho,
        kind: LocalKind::Boundary,
        touches_d,
    })
}

/// The D-adapted average `[u]_{x,ρ}`: zero when the local domain touches `D`,
/// the mean over the local domain otherwise.
pub fn d_adapted_average(mesh: &Mesh, u: &dyn FieldEval, ld: &LocalDomain) -> Result<Vec<f64>> {
    let m = u.components();
    if ld.touches_d {
        return Ok(vec![0.0; m]);
    }
    let quad = mesh.region_quadrature(&ld.region());
    let area: f64 = quad.iter().map(|q| q.weight).sum();
    if area <= 0.0 {
        return Err(Error::Domain("empty local domain".into()));
    }
    let mut acc = vec![0.0; m];
    let mut buf = vec![0.0; m];
    for q in &quad {
        u.eval(q, &mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += q.weight * b;
        }
    }
    Ok(acc.into_iter().map(|a| a / area).collect())
}

/// Sampled check of `|x − x_r| ≤ r`, `dist(x_r, N) ≥ r/M` at every endpoint of
/// a Dirichlet arc and dyadic radii `r = r0/2^k`, `k = 1..=n_radii`.
pub fn check_corkscrew(dom: &Domain, n_radii: usize) -> Result<VerificationReport> {
    if !dom.has_dirichlet() {
        return Err(Error::Domain("corkscrew check needs a non-empty D".into()));
    }
    if n_radii == 0 {
        return Err(Error::Domain("n_radii must be at least 1".into()));
    }
    let n = dom.num_edges();
    let endpoints: Vec<Point> = if dom.has_neumann() {
        dom.arcs()
            .iter()
            .filter(|a| a.tag == BoundaryTag::Dirichlet)
            .flat_map(|a| [dom.vertices()[a.start], dom.vertices()[a.end % n]])
            .collect()
    } else {
        Vec::new()
    };
    let d_segments = dom.tagged_segments(BoundaryTag::Dirichlet);
    let n_segments = dom.tagged_segments(BoundaryTag::Neumann);
    let dist_to_n = |p: Point| {
        n_segments
            .iter()
            .map(|&(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    };
    const SAMPLES: usize = 64;
    let mut worst_ratio = f64::INFINITY;
    let mut violations = Vec::new();
    let mut trace = Vec::new();
    for (ei, &p) in endpoints.iter().enumerate() {
        for k in 1..=n_radii {
            let r = dom.r0() / 2f64.powi(k as i32);
            let mut best = 0.0f64;
            for &(a, b) in &d_segments {
                // the part of [a, b] inside the closed disk B_r(p)
                let Some((t0, t1)) = crate::clip::segment_disk_interval(a, b, p, r) else {
                    continue;
                };
                for s in 0..=SAMPLES {
                    let t = t0 + (t1 - t0) * s as f64 / SAMPLES as f64;
                    best = best.max(dist_to_n(a.lerp(b, t)));
                }
            }
            let ratio = best / r;
            trace.push(ratio);
            worst_ratio = worst_ratio.min(ratio);
            if ratio < 1.0 / dom.m_const() {
                violations.push(format!("endpoint {ei} {p} at r={r:.3e}"));
            }
        }
    }
    let mut report = VerificationReport::new("corkscrew");
    report.input("vertices", dom.num_edges());
    report.input("n_radii", n_radii);
    report.input("M", dom.m_const());
    report.quantity("endpoints", endpoints.len() as f64);
    if endpoints.is_empty() {
        report.note("D = ∂Ω: no relative endpoints, condition holds vacuously");
        report.quantity("feasible_inverse_M", 1.0);
    } else {
        report.quantity("feasible_inverse_M", worst_ratio);
        report.trace("witness_ratio", trace);
    }
    report.threshold("inverse_M", 1.0 / dom.m_const());
    for v in &violations {
        report.note(&format!("violation: {v}"));
    }
    report.set_pass(violations.is_empty());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use BoundaryTag::{Dirichlet as D, Neumann as N};

    fn square(tags: [BoundaryTag; 4]) -> Domain {
        Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), tags, 4.0, 0.5).unwrap()
    }

    #[test]
    fn square_all_dirichlet() {
        let dom = Domain::parse("v 0 0\nv 1 0\nv 1 1\nv 0 1\narc 0 4 D\nM 4\nr0 0.5\n").unwrap();
        assert_relative_eq!(dom.diameter(), 2f64.sqrt());
        assert_eq!(dom.arcs().len(), 1);
        assert_eq!(dom.arcs()[0].tag, D);
        assert!(!dom.has_neumann());
    }

    #[test]
    fn square_bottom_dirichlet() {
        let dom = Domain::parse(
            "# unit square\nv 0 0\nv 1 0\nv 1 1\nv 0 1\narc 0 1 D\narc 1 3 N\narc 3 0 N\nM 4\nr0 0.5",
        )
        .unwrap();
        let d_arcs: Vec<_> = dom.arcs().iter().filter(|a| a.tag == D).collect();
        assert_eq!(d_arcs.len(), 1);
        assert_relative_eq!(d_arcs[0].length, 1.0);
        // the two N arcs merge into one maximal run
        assert_eq!(dom.arcs().len(), 2);
    }

    #[test]
    fn l_shape_diameter() {
        let pts = [(0., 0.), (2., 0.), (2., 1.), (1., 1.), (1., 2.), (0., 2.)];
        let vs: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let mut brute = 0.0f64;
        for a in &vs {
            for b in &vs {
                brute = brute.max(a.dist(*b));
            }
        }
        let dom = Domain::new(vs, vec![D; 6], 4.0, 1.0).unwrap();
        assert_relative_eq!(dom.diameter(), brute);
        assert_relative_eq!(dom.diameter(), 2.0 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn parse_errors() {
        let bowtie = "v 0 0\nv 1 1\nv 1 0\nv 0 1\narc 0 4 D\nM 4\nr0 0.5";
        assert!(matches!(Domain::parse(bowtie), Err(Error::Domain(m)) if m.contains("self-intersecting")));
        let untagged = "v 0 0\nv 1 0\nv 1 1\nv 0 1\narc 0 2 D\nM 4\nr0 0.5";
        assert!(matches!(Domain::parse(untagged), Err(Error::Domain(m)) if m.contains("untagged")));
        let zero = "v 0 0\nv 1 0\nv 1 1\nv 0 1\narc 1 1 D\narc 0 4 N\nM 4\nr0 0.5";
        assert!(matches!(Domain::parse(zero), Err(Error::Domain(m)) if m.contains("zero-length")));
        let cw = "v 0 0\nv 0 1\nv 1 1\nv 1 0\narc 0 4 D\nM 4\nr0 0.5";
        assert!(Domain::parse(cw).is_err());
    }

    #[test]
    fn local_domains_on_square() {
        let dom = square([D, N, N, N]);
        let ld = local_domain(&dom, Point::new(0.5, 0.5), 0.25).unwrap();
        assert_eq!(ld.kind, LocalKind::Interior);
        assert!(!ld.touches_d);

        let ld = local_domain(&dom, Point::new(0.5, 0.1), 0.2).unwrap();
        assert_eq!(ld.kind, LocalKind::Boundary);
        assert_relative_eq!(ld.ball_center.x, 0.5);
        assert_relative_eq!(ld.ball_center.y, 0.0);
        assert!(ld.touches_d);

        let ld = local_domain(&dom, Point::new(0.5, 0.95), 0.2).unwrap();
        assert_eq!(ld.kind, LocalKind::Boundary);
        assert_relative_eq!(ld.ball_center.y, 1.0);
        // nearest D point is 1.0 away from x̂ = (0.5, 1)
        assert!(!ld.touches_d);

        assert!(local_domain(&dom, Point::new(1.5, 0.5), 0.1).is_err());
        assert!(local_domain(&dom, Point::new(0.5, 0.5), 2.0).is_err());
        assert!(local_domain(&dom, Point::new(0.5, 0.5), 0.0).is_err());
    }

    #[test]
    fn corkscrew_single_edge() {
        let dom = square([D, N, N, N]);
        let rep = check_corkscrew(&dom, 5).unwrap();
        assert!(rep.passed());
        // witness x_r = corner + r·e1 sits at distance ≥ r/2 from N for r ≤ 1/2
        assert!(rep.get("feasible_inverse_M").unwrap() >= 0.5);
    }

    #[test]
    fn corkscrew_vacuous_and_empty() {
        let dom = square([D, D, D, D]);
        let rep = check_corkscrew(&dom, 3).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.get("endpoints"), Some(0.0));
        let dom = square([N, N, N, N]);
        assert!(check_corkscrew(&dom, 3).is_err());
    }

    #[test]
    fn corkscrew_with_small_gap() {
        let eps = 1e-3;
        let vs = vec![
            Point::new(0.0, 0.0),
            Point::new(0.5 - eps / 2.0, 0.0),
            Point::new(0.5 + eps / 2.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let dom = Domain::new(vs, vec![D, N, D, N, N, N], 4.0, 0.5).unwrap();
        let rep = check_corkscrew(&dom, 4).unwrap();
        assert!(rep.passed(), "{}", rep.to_text());
    }
}
