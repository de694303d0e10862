use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{d_adapted_average, local_domain, Domain, Point};
use crate::mesh::FieldEval;
use crate::mixed::FemSolution;

use super::atoms::random_atoms;

/// Minimum number of sampled centers.
pub const MIN_CENTERS: usize = 16;

/// Sampling of the BMO supremum: an `n × n` grid over the bounding box
/// (points outside the domain dropped), optional extra centers, and dyadic
/// radii `4h·2^k < r0`.
#[derive(Clone, Debug)]
pub struct BmoSampling {
    pub grid: usize,
    pub h: f64,
    pub extra_centers: Vec<Point>,
    /// Number of random atoms for the pairing estimate; 0 skips it.
    pub atoms: usize,
    pub seed: u64,
}

impl BmoSampling {
    pub fn new(grid: usize, h: f64) -> Self {
        Self {
            grid,
            h,
            extra_centers: Vec::new(),
            atoms: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BmoEstimate {
    pub norm: f64,
    pub argmax: (Point, f64),
    pub centers: usize,
    pub radii: Vec<f64>,
    /// `max |∫ u·a|` over the atom family, when requested.
    pub atomic: Option<f64>,
}

/// Sampled `‖u‖_{*,D}`: the supremum of `(1/|Ω_ρ|) ∫_{Ω_ρ} |u − [u]_{x,ρ}|`
/// with the D-adapted average.
pub fn bmo_norm(u: &FemSolution, dom: &Domain, sampling: &BmoSampling) -> Result<BmoEstimate> {
    let (lo, hi) = dom.bounding_box();
    let n = sampling.grid.max(1);
    let mut centers: Vec<Point> = (0..n)
        .flat_map(|j| {
            (0..n).map(move |i| {
                Point::new(
                    lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / n as f64,
                    lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / n as f64,
                )
            })
        })
        .filter(|p| dom.contains(*p))
        .collect();
    if centers.len() < MIN_CENTERS {
        return Err(Error::Analysis(format!(
            "BMO sampling too coarse: {} centers, need at least {MIN_CENTERS}",
            centers.len()
        )));
    }
    centers.extend(sampling.extra_centers.iter().copied().filter(|p| dom.contains(*p)));
    let mut radii = Vec::new();
    let mut r = 4.0 * sampling.h;
    while r < dom.r0() {
        radii.push(r);
        r *= 2.0;
    }
    if radii.is_empty() {
        return Err(Error::Analysis(format!("no dyadic radius in [4h, r0) for h = {}", sampling.h)));
    }
    let mesh = u.mesh();
    let m = u.m();
    let mut best = (0.0, (centers[0], radii[0]));
    let mut buf = vec![0.0; m];
    for &x in &centers {
        for &rho in &radii {
            let ld = local_domain(dom, x, rho)?;
            let avg = d_adapted_average(mesh, u, &ld)?;
            let quad = mesh.region_quadrature(&ld.region());
            let area: f64 = quad.iter().map(|q| q.weight).sum();
            if area <= 0.0 {
                continue;
            }
            let mut osc = 0.0;
            for q in &quad {
                u.eval(q, &mut buf);
                let d: f64 = buf.iter().zip(&avg).map(|(a, b)| (a - b) * (a - b)).sum();
                osc += q.weight * d.sqrt();
            }
            osc /= area;
            if osc > best.0 {
                best = (osc, (x, rho));
            }
        }
    }
    let atomic = if sampling.atoms > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
        let rho_max = *radii.last().unwrap();
        let atoms = random_atoms(dom, &mut rng, sampling.atoms, m, radii[0], rho_max)?;
        let mut sup = 0.0f64;
        for a in &atoms {
            sup = sup.max(a.pair(u)?.abs());
        }
        Some(sup)
    } else {
        None
    };
    Ok(BmoEstimate {
        norm: best.0,
        argmax: best.1,
        centers: centers.len(),
        radii,
        atomic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryTag::{Dirichlet as D, Neumann as N};
    use crate::mesh::{Mesh, Region};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn square(tags: [crate::geometry::BoundaryTag; 4]) -> (Domain, Arc<Mesh>) {
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), tags, 4.0, 1.0).unwrap();
        let mesh = Arc::new(Mesh::triangulate(&dom, 0.05).unwrap());
        (dom, mesh)
    }

    #[test]
    fn constants_have_zero_norm_without_d() {
        let (dom, mesh) = square([N; 4]);
        let u = FemSolution::interpolate(mesh, 1, |_| vec![3.0]);
        let est = bmo_norm(&u, &dom, &BmoSampling::new(5, 0.05)).unwrap();
        assert!(est.norm < 1e-12);
    }

    #[test]
    fn constant_one_near_d_has_norm_at_least_one() {
        let (dom, mesh) = square([D, N, N, N]);
        let u = FemSolution::interpolate(mesh, 1, |_| vec![1.0]);
        let est = bmo_norm(&u, &dom, &BmoSampling::new(5, 0.05)).unwrap();
        assert!(est.norm >= 1.0 - 1e-12);
    }

    #[test]
    fn coarse_sampling_is_rejected() {
        let (dom, mesh) = square([N; 4]);
        let u = FemSolution::interpolate(mesh, 1, |_| vec![0.0]);
        assert!(bmo_norm(&u, &dom, &BmoSampling::new(3, 0.05)).is_err());
    }

    #[test]
    fn linear_field_matches_brute_force() {
        let (dom, mesh) = square([N; 4]);
        let u = FemSolution::interpolate(mesh.clone(), 1, |p| vec![p.x]);
        let s = BmoSampling::new(4, 0.05);
        let est = bmo_norm(&u, &dom, &s).unwrap();
        // independent oracle: grid quadrature of |y1 − mean| over the maximising local domain
        let (x, rho) = est.argmax;
        let ld = local_domain(&dom, x, rho).unwrap();
        let c = ld.ball_center;
        let n = 1200;
        let (mut sum, mut sum_abs, mut cnt) = (0.0, 0.0, 0usize);
        let mut pts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let p = Point::new((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                if p.dist(c) <= rho {
                    sum += p.x;
                    cnt += 1;
                    pts.push(p.x);
                }
            }
        }
        let mean = sum / cnt as f64;
        for v in pts {
            sum_abs += (v - mean).abs();
        }
        assert_relative_eq!(est.norm, sum_abs / cnt as f64, max_relative = 5e-3);
        assert!(mesh.region_area(&Region::Disk { center: c, radius: rho }) > 0.0);
    }

    #[test]
    fn norm_is_homogeneous() {
        let (dom, mesh) = square([D, N, N, N]);
        let u = FemSolution::interpolate(mesh, 1, |p| vec![(3.0 * p.x).sin() + p.y * p.y]);
        let v = u.with_values(u.values().iter().map(|x| -2.5 * x).collect(), "scaled");
        let s = BmoSampling::new(4, 0.05);
        let a = bmo_norm(&u, &dom, &s).unwrap().norm;
        let b = bmo_norm(&v, &dom, &s).unwrap().norm;
        assert_relative_eq!(b, 2.5 * a, max_relative = 1e-12);
    }
}
