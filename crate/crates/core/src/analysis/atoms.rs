use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{Domain, LocalDomain, Point};
use crate::mesh::{FieldEval, Mesh, Region};
use crate::mixed::FemSolution;
use crate::operators::AssembledSystem;

use super::fields::sample_local_domains;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AtomShape {
    /// `χ_{Ω_ρ}/|Ω_ρ|`; only an atom when the local domain touches `D`.
    Indicator,
    /// `c₊χ_{H₊} − c₋χ_{H₋}` on the two halves of `Ω_ρ` cut by the line
    /// through the ball center with this normal, scaled to mean zero and
    /// `|a| ≤ 1/|Ω_ρ|`.
    Split { normal: Point },
}

/// An atom `a = e·φ(y)` for `(Ω, D)` with direction `e ∈ R^m`, described
/// geometrically so the same atom can be realised on several meshes.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub ld: LocalDomain,
    pub shape: AtomShape,
    pub direction: Vec<f64>,
}

impl Atom {
    /// The pieces `(region, coefficient)` on `mesh`.
    pub fn pieces(&self, mesh: &Mesh) -> Result<Vec<(Region, f64)>> {
        let (c, r) = (self.ld.ball_center, self.ld.radius);
        let area = mesh.region_area(&Region::Disk { center: c, radius: r });
        if area <= 0.0 {
            return Err(Error::Analysis("atom support has no area".into()));
        }
        match self.shape {
            AtomShape::Indicator => {
                if !self.ld.touches_d {
                    return Err(Error::Analysis("indicator atoms need a local domain touching D".into()));
                }
                Ok(vec![(Region::Disk { center: c, radius: r }, 1.0 / area)])
            }
            AtomShape::Split { normal } => {
                let plus = Region::HalfDisk { center: c, radius: r, normal };
                let minus = Region::HalfDisk { center: c, radius: r, normal: normal * -1.0 };
                let (ap, am) = (mesh.region_area(&plus), mesh.region_area(&minus));
                if ap <= 0.0 || am <= 0.0 {
                    return Err(Error::Analysis("atom half has no area".into()));
                }
                let k = ap.min(am) / area;
                Ok(vec![(plus, k / ap), (minus, -k / am)])
            }
        }
    }

    /// Load vector `−∫ a·φ` on `sys`.
    pub fn load(&self, sys: &AssembledSystem) -> Result<Vec<f64>> {
        let mut load = vec![0.0; sys.n_dofs()];
        for (region, coef) in self.pieces(sys.mesh())? {
            let c: Vec<f64> = self.direction.iter().map(|e| e * coef).collect();
            for (l, v) in load.iter_mut().zip(sys.region_load(&region, &c)?) {
                *l += v;
            }
        }
        Ok(load)
    }

    /// `∫ u·a`.
    pub fn pair(&self, u: &FemSolution) -> Result<f64> {
        let mut buf = vec![0.0; u.m()];
        let mut acc = 0.0;
        for (region, coef) in self.pieces(u.mesh())? {
            for q in u.mesh().region_quadrature(&region) {
                u.eval(&q, &mut buf);
                acc += coef * q.weight * buf.iter().zip(&self.direction).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Ok(acc)
    }

    /// `(∫ a, sup |a|·|Ω_ρ|)` on `mesh`: zero and at most one for a split atom.
    pub fn moments(&self, mesh: &Mesh) -> Result<(f64, f64)> {
        let area = mesh.region_area(&self.ld.region());
        let pieces = self.pieces(mesh)?;
        let total = pieces.iter().map(|(r, c)| c * mesh.region_area(r)).sum();
        let sup = pieces.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max) * area;
        Ok((total, sup))
    }
}

/// `n` random atoms in `m` components with radii log-uniform in
/// `[rho_min, rho_max]`. Local domains touching `D` use a plain indicator
/// half of the time.
pub fn random_atoms(
    dom: &Domain,
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    rho_min: f64,
    rho_max: f64,
) -> Result<Vec<Atom>> {
    let lds = sample_local_domains(dom, rng, n, rho_min, rho_max, None, 0.0)?;
    Ok(lds
        .into_iter()
        .map(|ld| {
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let shape = if ld.touches_d && rng.random_bool(0.5) {
                AtomShape::Indicator
            } else {
                AtomShape::Split { normal: Point::new(t.cos(), t.sin()) }
            };
            let mut e: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            e.iter_mut().for_each(|v| *v /= norm);
            Atom { ld, shape, direction: e }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryTag::{Dirichlet as D, Neumann as N};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn atoms_have_mean_zero_and_unit_bound() {
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), [D, N, N, N], 4.0, 1.0).unwrap();
        let mesh = Mesh::triangulate(&dom, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let atoms = random_atoms(&dom, &mut rng, 20, 1, 0.1, 0.4).unwrap();
        for a in &atoms {
            let (total, sup) = a.moments(&mesh).unwrap();
            match a.shape {
                AtomShape::Split { .. } => assert!(total.abs() < 1e-12, "{total}"),
                AtomShape::Indicator => assert_relative_eq!(total, 1.0, epsilon = 1e-12),
            }
            assert!(sup <= 1.0 + 1e-12);
        }
    }
}
