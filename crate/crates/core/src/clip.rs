//! Exact area and first moments of convex polygons cut by disks and
//! half-planes. Cut cells of local domains are integrated with these, so the
//! measure of `Ω_ρ(x)` is exact up to round-off.

use crate::geometry::Point;

/// Area and first moments `∫x dA`, `∫y dA` of a planar region.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub area: f64,
    pub mx: f64,
    pub my: f64,
}

impl Moments {
    pub fn centroid(&self) -> Point {
        Point::new(self.mx / self.area, self.my / self.area)
    }

    fn add_segment(&mut self, p: Point, q: Point) {
        let c = p.cross(q);
        self.area += 0.5 * c;
        self.mx += (q.y - p.y) * (p.x * p.x + p.x * q.x + q.x * q.x) / 6.0;
        self.my -= (q.x - p.x) * (p.y * p.y + p.y * q.y + q.y * q.y) / 6.0;
    }

    /// Counterclockwise arc of the origin-centred circle from `t1` to `t2`.
    fn add_arc(&mut self, r: f64, t1: f64, t2: f64) {
        let r3 = r * r * r;
        let (s1, c1, s2, c2) = (t1.sin(), t1.cos(), t2.sin(), t2.cos());
        self.area += 0.5 * r * r * (t2 - t1);
        self.mx += 0.5 * r3 * ((s2 - s2 * s2 * s2 / 3.0) - (s1 - s1 * s1 * s1 / 3.0));
        self.my += 0.5 * r3 * ((-c2 + c2 * c2 * c2 / 3.0) - (-c1 + c1 * c1 * c1 / 3.0));
    }

    fn shifted(self, c: Point) -> Moments {
        Moments {
            area: self.area,
            mx: self.mx + c.x * self.area,
            my: self.my + c.y * self.area,
        }
    }
}

pub fn polygon_moments(poly: &[Point]) -> Moments {
    let mut m = Moments::default();
    let n = poly.len();
    for i in 0..n {
        m.add_segment(poly[i], poly[(i + 1) % n]);
    }
    m
}

/// Parameter interval `[t0, t1] ⊂ [0, 1]` of the segment `a + t(b − a)` lying
/// in the closed disk `B_r(c)`.
pub fn segment_disk_interval(a: Point, b: Point, c: Point, r: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let f = a - c;
    let qa = d.dot(d);
    if qa == 0.0 {
        return (f.norm() <= r).then_some((0.0, 1.0));
    }
    let qb = 2.0 * f.dot(d);
    let qc = f.dot(f) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable roots
    let q = -0.5 * (qb + qb.signum() * sq);
    let (mut r1, mut r2) = if q != 0.0 { (q / qa, qc / q) } else { (0.0, 0.0) };
    if q == 0.0 {
        // qb = 0 and disc = 0: tangent at the midpoint of the infinite line
        r1 = -qb / (2.0 * qa);
        r2 = r1;
    }
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let t0 = r1.max(0.0);
    let t1 = r2.min(1.0);
    (t0 <= t1).then_some((t0, t1))
}

fn point_in_convex(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    (0..n).all(|i| (poly[(i + 1) % n] - poly[i]).cross(p - poly[i]) >= 0.0)
}

/// Moments of `poly ∩ B_r(c)` for a counterclockwise convex polygon.
pub fn convex_disk_moments(poly: &[Point], c: Point, r: f64) -> Moments {
    let n = poly.len();
    if n < 3 {
        return Moments::default();
    }
    let local: Vec<Point> = poly.iter().map(|&p| p - c).collect();
    let r2 = r * r;
    if local.iter().all(|p| p.dot(*p) <= r2) {
        return polygon_moments(poly);
    }
    // pieces of each edge inside the disk, in boundary order
    let mut pieces: Vec<(Point, Point)> = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (local[i], local[(i + 1) % n]);
        if let Some((t0, t1)) = segment_disk_interval(a, b, Point::default(), r) {
            if t1 > t0 {
                pieces.push((a.lerp(b, t0), a.lerp(b, t1)));
            }
        }
    }
    if pieces.is_empty() {
        if point_in_convex(Point::default(), &local) {
            let full = Moments {
                area: std::f64::consts::PI * r2,
                mx: 0.0,
                my: 0.0,
            };
            return full.shifted(c);
        }
        return Moments::default();
    }
    let mut m = Moments::default();
    let k = pieces.len();
    for j in 0..k {
        let (entry, exit) = pieces[j];
        m.add_segment(entry, exit);
        let next_entry = pieces[(j + 1) % k].0;
        // the boundary leaves the disk at `exit` and re-enters at `next_entry`
        if exit.dist(next_entry) > 1e-14 * r {
            let t1 = exit.y.atan2(exit.x);
            let mut t2 = next_entry.y.atan2(next_entry.x);
            while t2 < t1 {
                t2 += 2.0 * std::f64::consts::PI;
            }
            m.add_arc(r, t1, t2);
        }
    }
    m.shifted(c)
}

/// Sutherland–Hodgman clip of a convex polygon to `(p − origin)·normal ≥ 0`.
pub fn clip_halfplane(poly: &[Point], origin: Point, normal: Point) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    let side = |p: Point| (p - origin).dot(normal);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (sa, sb) = (side(a), side(b));
        if sa >= 0.0 {
            out.push(a);
        }
        if (sa >= 0.0) != (sb >= 0.0) {
            let t = sa / (sa - sb);
            out.push(a.lerp(b, t));
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}
