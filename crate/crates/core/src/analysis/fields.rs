use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{local_domain, BoundaryTag, Domain, LocalDomain, LocalKind, Point};
use crate::mesh::{FieldEval, QuadPoint};

/// Random low-frequency trigonometric field, optionally multiplied by
/// `dist(y, D)` so that it vanishes on `D`.
#[derive(Clone, Debug)]
pub struct SmoothField {
    m: usize,
    /// Per component: `(k1, k2, phase, amplitude)`.
    terms: Vec<Vec<(f64, f64, f64, f64)>>,
    offset: Vec<f64>,
    mask: Option<Domain>,
}

impl SmoothField {
    /// `n_terms` modes per component with wave numbers up to `k_max`.
    pub fn random(rng: &mut impl Rng, m: usize, n_terms: usize, k_max: f64, mask: Option<&Domain>) -> Self {
        let mut terms = Vec::with_capacity(m);
        let mut offset = Vec::with_capacity(m);
        for _ in 0..m {
            let t = (0..n_terms)
                .map(|_| {
                    (
                        rng.random_range(-k_max..=k_max),
                        rng.random_range(-k_max..=k_max),
                        rng.random_range(0.0..std::f64::consts::TAU),
                        rng.random_range(-1.0..=1.0),
                    )
                })
                .collect();
            terms.push(t);
            offset.push(rng.random_range(-1.0..=1.0));
        }
        let mask = mask.filter(|d| d.has_dirichlet()).cloned();
        Self { m, terms, offset, mask }
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn value(&self, p: Point) -> Vec<f64> {
        let w = match &self.mask {
            Some(d) => d.distance_to_tag(p, BoundaryTag::Dirichlet),
            None => 1.0,
        };
        self.terms
            .iter()
            .zip(&self.offset)
            .map(|(ts, c)| {
                let s: f64 = ts.iter().map(|&(k1, k2, ph, a)| a * (k1 * p.x + k2 * p.y + ph).sin()).sum();
                w * (s + c)
            })
            .collect()
    }
}

impl FieldEval for SmoothField {
    fn components(&self) -> usize {
        self.m
    }

    fn eval(&self, q: &QuadPoint, out: &mut [f64]) {
        out.copy_from_slice(&self.value(q.point));
    }
}

/// Random local domains with `ρ` log-uniform in `[rho_min, rho_max]`.
/// `kind` restricts to interior or boundary local domains; `clearance`
/// additionally requires `dist(x, ∂Ω) ≥ clearance·ρ`.
pub fn sample_local_domains(
    dom: &Domain,
    rng: &mut impl Rng,
    n: usize,
    rho_min: f64,
    rho_max: f64,
    kind: Option<LocalKind>,
    clearance: f64,
) -> Result<Vec<LocalDomain>> {
    if !(rho_min > 0.0 && rho_max >= rho_min) {
        return Err(Error::Analysis(format!("bad radius range [{rho_min}, {rho_max}]")));
    }
    let (lo, hi) = dom.bounding_box();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > 10_000 * n.max(1) {
            return Err(Error::Analysis("could not sample the requested local domains".into()));
        }
        let rho = (rho_min.ln() + rng.random::<f64>() * (rho_max / rho_min).ln()).exp();
        let x = match kind {
            // points within ρ of the boundary, found by walking in from an edge
            Some(LocalKind::Boundary) => {
                let e = rng.random_range(0..dom.num_edges());
                let (a, b) = dom.edge(e);
                let p = a.lerp(b, rng.random::<f64>());
                let dir = Point::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
                p + dir * (0.7 * rho)
            }
            _ => Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y)),
        };
        if !dom.contains(x) {
            continue;
        }
        let (d, _) = dom.closest_boundary_point(x);
        if d < clearance * rho {
            continue;
        }
        let ld = local_domain(dom, x, rho)?;
        if kind.is_some_and(|k| k != ld.kind) {
            continue;
        }
        out.push(ld);
    }
    Ok(out)
}
