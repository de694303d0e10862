//! Coefficient tensors `a^{ij}_{αβ}`, ellipticity checks, and assembly of the
//! bilinear form `A(u, φ) = ∫ a^{ij}_{αβ} ∂_j u^β ∂_i φ^α` and of loads.
//!
//! Tensors are stored flat with index `((i·2 + j)·m + α)·m + β`, all indices
//! zero-based.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{Domain, Point};
use crate::linalg::{symmetric_eigen, Csr};
use crate::mesh::{FieldEval, Mesh, QuadPoint, Region, TagFilter};
use crate::report::VerificationReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientKind {
    ScalarLaplace,
    ConstantTensor,
    LameVariable,
}

impl CoefficientKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CoefficientKind::ScalarLaplace => "scalar_laplace",
            CoefficientKind::ConstantTensor => "constant_tensor",
            CoefficientKind::LameVariable => "lame_variable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scalar_laplace" | "laplace" => Some(CoefficientKind::ScalarLaplace),
            "constant_tensor" | "tensor" => Some(CoefficientKind::ConstantTensor),
            "lame_variable" | "lame" => Some(CoefficientKind::LameVariable),
            _ => None,
        }
    }
}

#[inline]
pub fn tensor_index(m: usize, i: usize, j: usize, a: usize, b: usize) -> usize {
    ((i * 2 + j) * m + a) * m + b
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Lamé tensor `μ(δ_ij δ_αβ + δ_jα δ_iβ) + λ δ_iα δ_jβ`.
pub fn lame_tensor(mu: f64, lambda: f64) -> Vec<f64> {
    let mut t = vec![0.0; 16];
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    t[tensor_index(2, i, j, a, b)] = mu * (delta(i, j) * delta(a, b) + delta(j, a) * delta(i, b))
                        + lambda * delta(i, a) * delta(j, b);
                }
            }
        }
    }
    t
}

#[derive(Clone, Debug)]
pub struct CoefficientField {
    kind: CoefficientKind,
    m: usize,
    tensor: Vec<f64>,
    mu: Option<Expr>,
    lambda: Option<Expr>,
    m_bound: f64,
    lame_margin: Option<f64>,
}

/// Sample grid used to check coefficient bounds: bounding-box lattice points
/// inside the domain plus the vertices.
pub fn sample_points(dom: &Domain, n: usize) -> Vec<Point> {
    let (lo, hi) = dom.bounding_box();
    let n = n.max(1);
    let mut pts: Vec<Point> = dom.vertices().to_vec();
    for a in 0..=n {
        for b in 0..=n {
            let p = Point::new(
                lo.x + (hi.x - lo.x) * a as f64 / n as f64,
                lo.y + (hi.y - lo.y) * b as f64 / n as f64,
            );
            if dom.contains(p) {
                pts.push(p);
            }
        }
    }
    pts
}

impl CoefficientField {
    pub fn laplace() -> Self {
        Self::from_tensor(CoefficientKind::ScalarLaplace, 1, vec![1.0, 0.0, 0.0, 1.0])
    }

    fn from_tensor(kind: CoefficientKind, m: usize, tensor: Vec<f64>) -> Self {
        let m_bound = tensor.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Self {
            kind,
            m,
            tensor,
            mu: None,
            lambda: None,
            m_bound,
            lame_margin: None,
        }
    }

    /// Constant tensor with `4m²` entries in [`tensor_index`] order.
    pub fn constant_tensor(m: usize, entries: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Coefficients("m must be at least 1".into()));
        }
        if entries.len() != 4 * m * m {
            return Err(Error::Coefficients(format!(
                "constant tensor with m = {m} needs {} entries, got {}",
                4 * m * m,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Coefficients("non-finite tensor entry".into()));
        }
        Ok(Self::from_tensor(CoefficientKind::ConstantTensor, m, entries))
    }

    /// Constant Lamé parameters; rejects `μ − λ⁻ ≤ 0`.
    pub fn lame_constant(mu: f64, lambda: f64) -> Result<Self> {
        Self::lame_on(Expr::Const(mu), Expr::Const(lambda), None, 1)
    }

    /// Lamé coefficients given by expressions of position. The condition
    /// `μ − λ⁻ ≥ c > 0` and the entry bound are sampled on a grid over `dom`.
    pub fn lame(mu: Expr, lambda: Expr, dom: &Domain, samples: usize) -> Result<Self> {
        Self::lame_on(mu, lambda, Some(dom), samples)
    }

    fn lame_on(mu: Expr, lambda: Expr, dom: Option<&Domain>, samples: usize) -> Result<Self> {
        let constant = mu.as_const().is_some() && lambda.as_const().is_some();
        let pts = match (constant, dom) {
            (true, _) => vec![Point::default()],
            (false, Some(d)) => sample_points(d, samples.max(2)),
            (false, None) => {
                return Err(Error::Coefficients(
                    "variable Lamé parameters need a domain to sample".into(),
                ))
            }
        };
        let mut margin = f64::INFINITY;
        let mut bound = 0.0f64;
        let mut witness = Point::default();
        for &p in &pts {
            let m = mu.eval_checked(p).map_err(|e| Error::Coefficients(e.to_string()))?;
            let l = lambda.eval_checked(p).map_err(|e| Error::Coefficients(e.to_string()))?;
            let c = m - (-l).max(0.0);
            if c < margin {
                margin = c;
                witness = p;
            }
            bound = bound.max((2.0 * m + l).abs()).max(m.abs()).max(l.abs());
        }
        if margin <= 0.0 {
            return Err(Error::Coefficients(format!(
                "Lamé condition μ − λ⁻ ≥ c > 0 fails at {witness} (μ − λ⁻ = {margin:.3e}); \
                 the pointwise strain bound needs it"
            )));
        }
        let tensor = if constant {
            lame_tensor(mu.as_const().unwrap(), lambda.as_const().unwrap())
        } else {
            Vec::new()
        };
        Ok(Self {
            kind: CoefficientKind::LameVariable,
            m: 2,
            tensor,
            mu: Some(mu),
            lambda: Some(lambda),
            m_bound: bound,
            lame_margin: Some(margin),
        })
    }

    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Sup-norm bound of the entries (sampled for variable fields).
    pub fn m_bound(&self) -> f64 {
        self.m_bound
    }

    /// Sampled `inf (μ − λ⁻)` for Lamé fields.
    pub fn lame_margin(&self) -> Option<f64> {
        self.lame_margin
    }

    pub fn is_constant(&self) -> bool {
        !self.tensor.is_empty()
    }

    pub fn lame_params(&self, x: Point) -> Option<(f64, f64)> {
        Some((self.mu.as_ref()?.eval(x), self.lambda.as_ref()?.eval(x)))
    }

    pub fn eval_tensor(&self, x: Point) -> Result<Vec<f64>> {
        if self.is_constant() {
            return Ok(self.tensor.clone());
        }
        let (Some(mu), Some(l)) = (&self.mu, &self.lambda) else {
            return Err(Error::Coefficients("tensor unavailable".into()));
        };
        let mu = mu.eval_checked(x).map_err(|e| Error::Coefficients(e.to_string()))?;
        let l = l.eval_checked(x).map_err(|e| Error::Coefficients(e.to_string()))?;
        Ok(lame_tensor(mu, l))
    }

    pub fn entry(&self, x: Point, i: usize, j: usize, a: usize, b: usize) -> Result<f64> {
        Ok(self.eval_tensor(x)?[tensor_index(self.m, i, j, a, b)])
    }

    /// True when `a^{ij}_{αβ} = a^{ji}_{βα}` everywhere (checked on the
    /// constant tensor; Lamé tensors always are).
    pub fn is_symmetric(&self) -> bool {
        if !self.is_constant() {
            return true;
        }
        let m = self.m;
        (0..2).all(|i| {
            (0..2).all(|j| {
                (0..m).all(|a| {
                    (0..m).all(|b| {
                        let x = self.tensor[tensor_index(m, i, j, a, b)];
                        let y = self.tensor[tensor_index(m, j, i, b, a)];
                        (x - y).abs() <= 1e-14 * self.m_bound.max(1.0)
                    })
                })
            })
        })
    }

    /// The coefficient field of `L*`: `a*^{ij}_{αβ} = a^{ji}_{βα}`.
    pub fn adjoint(&self) -> CoefficientField {
        let mut out = self.clone();
        if self.is_constant() {
            let m = self.m;
            for i in 0..2 {
                for j in 0..2 {
                    for a in 0..m {
                        for b in 0..m {
                            out.tensor[tensor_index(m, i, j, a, b)] = self.tensor[tensor_index(m, j, i, b, a)];
                        }
                    }
                }
            }
        }
        out
    }

    /// Strong ellipticity `a^{ij}_{αβ} ξ_j^β ξ_i^α ≥ c|ξ|²` for constant
    /// tensors (smallest eigenvalue of the symmetrised `2m × 2m` form, with
    /// the eigenvector as witness); for Lamé fields the pointwise strain bound
    /// `σ:∇u ≥ 2(μ − λ⁻)|ε(u)|²` sampled over `dom`.
    pub fn verify_ellipticity(&self, dom: &Domain, samples: usize) -> Result<VerificationReport> {
        let mut r = VerificationReport::new("ellipticity");
        r.input("kind", self.kind.as_str());
        r.input("m", self.m);
        r.input("samples", samples.max(1));
        r.quantity("M_bound", self.m_bound);
        match self.kind {
            CoefficientKind::LameVariable => {
                let pts = if self.is_constant() {
                    vec![Point::default()]
                } else {
                    sample_points(dom, samples.max(1))
                };
                let mut margin = f64::INFINITY;
                for p in pts {
                    let (mu, l) = self.lame_params(p).unwrap();
                    margin = margin.min(mu - (-l).max(0.0));
                }
                r.quantity("mu_minus_lambda_minus", margin);
                r.quantity("c", 2.0 * margin);
                r.threshold("c_min", 0.0);
                r.note("pointwise bound σ:∇u = 2μ|ε|² + λ(div u)² ≥ 2(μ − λ⁻)|ε|²");
                r.set_pass(margin > 0.0);
            }
            _ => {
                let n = 2 * self.m;
                let mut b = vec![0.0; n * n];
                let m = self.m;
                for i in 0..2 {
                    for j in 0..2 {
                        for a in 0..m {
                            for bb in 0..m {
                                b[(i * m + a) * n + (j * m + bb)] = self.tensor[tensor_index(m, i, j, a, bb)];
                            }
                        }
                    }
                }
                let (vals, vecs) = symmetric_eigen(&b, n)?;
                let c = vals[0];
                r.quantity("c", c);
                r.threshold("c_min", 0.0);
                if c <= 0.0 {
                    let xi: Vec<String> = (0..n).map(|k| format!("{:.6}", vecs[k * n])).collect();
                    r.note(&format!("witness ξ = ({}) (index i·m + α)", xi.join(", ")));
                }
                r.set_pass(c > 0.0);
            }
        }
        Ok(r)
    }
}

/// `L` or its adjoint `L*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    L,
    LStar,
}

impl Operator {
    pub fn as_str(self) -> &'static str {
        match self {
            Operator::L => "L",
            Operator::LStar => "L*",
        }
    }
}

/// How coefficients are sampled per element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientSampling {
    Centroid,
    /// Mean of the tensor at the three edge midpoints.
    ThreePoint,
}

#[derive(Clone, Debug)]
pub struct AssembledSystem {
    mesh: Arc<Mesh>,
    m: usize,
    stiffness: Csr,
    adjoint: Csr,
    boundary_mass: Csr,
}

impl AssembledSystem {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.num_nodes() * self.m
    }

    pub fn dof(&self, node: usize, comp: usize) -> usize {
        node * self.m + comp
    }

    /// Rows index test functions φ, columns index trial functions u:
    /// `K[φ, u] = A(u, φ)`.
    pub fn stiffness(&self) -> &Csr {
        &self.stiffness
    }

    /// `Kᵀ`, the matrix of the form of `L*`.
    pub fn adjoint_stiffness(&self) -> &Csr {
        &self.adjoint
    }

    pub fn matrix(&self, op: Operator) -> &Csr {
        match op {
            Operator::L => &self.stiffness,
            Operator::LStar => &self.adjoint,
        }
    }

    /// Component-wise `∫_{∂Ω} u·v dσ`.
    pub fn boundary_mass(&self) -> &Csr {
        &self.boundary_mass
    }

    /// `A(u, φ)` for nodal vectors.
    pub fn form(&self, u: &[f64], phi: &[f64]) -> f64 {
        self.stiffness.bilinear(phi, u)
    }

    /// `∫ f·φ_i` over the quadrature points, one entry per dof.
    pub fn volume_functional(&self, quad: &[QuadPoint], f: &dyn FieldEval) -> Result<Vec<f64>> {
        let m = self.m;
        if f.components() != m {
            return Err(Error::Coefficients(format!(
                "data has {} components, operator has {m}",
                f.components()
            )));
        }
        let mut out = vec![0.0; self.n_dofs()];
        let mut buf = vec![0.0; m];
        for q in quad {
            f.eval(q, &mut buf);
            if buf.iter().any(|v| !v.is_finite()) {
                return Err(Error::Coefficients(format!("non-finite data at {}", q.point)));
            }
            for k in 0..3 {
                let w = q.weight * q.bary[k];
                if w == 0.0 {
                    continue;
                }
                for (c, v) in buf.iter().enumerate() {
                    out[q.nodes[k] * m + c] += w * v;
                }
            }
        }
        Ok(out)
    }

    /// Load `ℓ(φ) = −∫ f·φ + ∫_N f_N·φ dσ`.
    pub fn assemble_load(&self, f: Option<&dyn FieldEval>, f_n: Option<&dyn FieldEval>) -> Result<Vec<f64>> {
        let mut load = vec![0.0; self.n_dofs()];
        if let Some(f) = f {
            let v = self.volume_functional(&self.mesh.region_quadrature(&Region::All), f)?;
            for (l, x) in load.iter_mut().zip(v) {
                *l -= x;
            }
        }
        if let Some(g) = f_n {
            let v = self.volume_functional(&self.mesh.boundary_quadrature(TagFilter::Neumann), g)?;
            for (l, x) in load.iter_mut().zip(v) {
                *l += x;
            }
        }
        Ok(load)
    }

    /// `−∫_region c·φ`, the load of the constant vector `c` on a region.
    pub fn region_load(&self, region: &Region, c: &[f64]) -> Result<Vec<f64>> {
        let m = self.m;
        let c = c.to_vec();
        let field = crate::mesh::FnField::new(m, move |_, out: &mut [f64]| out.copy_from_slice(&c));
        let v = self.volume_functional(&self.mesh.region_quadrature(region), &field)?;
        Ok(v.into_iter().map(|x| -x).collect())
    }
}

/// Assembles with coefficients sampled at element centroids.
pub fn assemble(mesh: Arc<Mesh>, cf: &CoefficientField) -> Result<AssembledSystem> {
    assemble_with(mesh, cf, CoefficientSampling::Centroid)
}

pub fn assemble_with(
    mesh: Arc<Mesh>,
    cf: &CoefficientField,
    sampling: CoefficientSampling,
) -> Result<AssembledSystem> {
    let m = cf.m();
    let n = mesh.num_nodes() * m;
    if mesh.num_triangles().saturating_mul(9 * m * m) > 400_000_000 {
        return Err(Error::Coefficients("assembly exceeds the memory cap".into()));
    }
    let mut trips = Vec::with_capacity(mesh.num_triangles() * 9 * m * m);
    let constant = cf.is_constant().then(|| cf.eval_tensor(Point::default())).transpose()?;
    for t in 0..mesh.num_triangles() {
        let tensor = match &constant {
            Some(c) => c.clone(),
            None => match sampling {
                CoefficientSampling::Centroid => cf.eval_tensor(mesh.centroid(t))?,
                CoefficientSampling::ThreePoint => {
                    let tri = mesh.triangles()[t];
                    let p = tri.map(|i| mesh.nodes()[i]);
                    let mut acc = vec![0.0; 4 * m * m];
                    for k in 0..3 {
                        let a = cf.eval_tensor(p[k].lerp(p[(k + 1) % 3], 0.5))?;
                        for (s, v) in acc.iter_mut().zip(a) {
                            *s += v / 3.0;
                        }
                    }
                    acc
                }
            },
        };
        let g = mesh.grads(t);
        let area = mesh.area(t);
        let tri = mesh.triangles()[t];
        // K[(r, α), (s, β)] = |T| a^{ij}_{αβ} ∂_j λ_s ∂_i λ_r
        for r in 0..3 {
            for s in 0..3 {
                for a in 0..m {
                    for b in 0..m {
                        let mut v = 0.0;
                        for i in 0..2 {
                            for j in 0..2 {
                                v += tensor[tensor_index(m, i, j, a, b)] * g[s][j] * g[r][i];
                            }
                        }
                        trips.push((tri[r] * m + a, tri[s] * m + b, area * v));
                    }
                }
            }
        }
    }
    let stiffness = Csr::from_triplets(n, n, &trips);
    let adjoint = stiffness.transpose();
    let mut btrips = Vec::with_capacity(mesh.boundary_edges().len() * 4 * m);
    for e in mesh.boundary_edges() {
        let [i, j] = e.nodes;
        let len = mesh.nodes()[i].dist(mesh.nodes()[j]);
        for c in 0..m {
            let (di, dj) = (i * m + c, j * m + c);
            btrips.push((di, di, len / 3.0));
            btrips.push((dj, dj, len / 3.0));
            btrips.push((di, dj, len / 6.0));
            btrips.push((dj, di, len / 6.0));
        }
    }
    let boundary_mass = Csr::from_triplets(n, n, &btrips);
    Ok(AssembledSystem {
        mesh,
        m,
        stiffness,
        adjoint,
        boundary_mass,
    })
}

/// Symmetric gradient of a vector P1 field on one element: `ε = (∇u + ∇uᵀ)/2`
/// with `(∇u)[β][j] = ∂_j u^β`.
pub fn element_gradient(mesh: &Mesh, values: &[f64], m: usize, t: usize) -> Vec<[f64; 2]> {
    let g = mesh.grads(t);
    let tri = mesh.triangles()[t];
    (0..m)
        .map(|c| {
            let mut d = [0.0; 2];
            for k in 0..3 {
                let v = values[tri[k] * m + c];
                d[0] += v * g[k][0];
                d[1] += v * g[k][1];
            }
            d
        })
        .collect()
}

/// Per-element strain and stress `σ = 2με + λ I div u` of a Lamé field.
pub fn strain_stress(
    cf: &CoefficientField,
    mesh: &Mesh,
    values: &[f64],
    t: usize,
) -> Result<([[f64; 2]; 2], [[f64; 2]; 2])> {
    if cf.kind() != CoefficientKind::LameVariable {
        return Err(Error::Coefficients("strain/stress needs a Lamé field".into()));
    }
    let du = element_gradient(mesh, values, 2, t);
    let mut eps = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            eps[a][b] = 0.5 * (du[a][b] + du[b][a]);
        }
    }
    let (mu, l) = cf.lame_params(mesh.centroid(t)).unwrap();
    let div = du[0][0] + du[1][1];
    let mut sigma = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            sigma[a][b] = 2.0 * mu * eps[a][b] + l * div * delta(a, b);
        }
    }
    Ok((eps, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryTag::{Dirichlet as D, Neumann as N};
    use crate::mesh::FnField;
    use approx::assert_relative_eq;

    fn square_mesh(h: f64, tags: [crate::geometry::BoundaryTag; 4]) -> (Domain, Arc<Mesh>) {
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), tags, 4.0, 1.0).unwrap();
        let mesh = Arc::new(Mesh::triangulate(&dom, h).unwrap());
        (dom, mesh)
    }

    fn interp(mesh: &Mesh, m: usize, f: impl Fn(Point) -> Vec<f64>) -> Vec<f64> {
        mesh.nodes().iter().flat_map(|&p| f(p)).take(mesh.num_nodes() * m).collect()
    }

    #[test]
    fn tensor_entries() {
        let lap = CoefficientField::laplace();
        assert_eq!(lap.m(), 1);
        assert_eq!(lap.entry(Point::default(), 0, 0, 0, 0).unwrap(), 1.0);
        assert_eq!(lap.entry(Point::default(), 0, 1, 0, 0).unwrap(), 0.0);
        let l = CoefficientField::lame_constant(1.0, 0.0).unwrap();
        assert_eq!(l.entry(Point::default(), 0, 0, 0, 0).unwrap(), 2.0);
        let l = CoefficientField::lame_constant(1.0, 1.0).unwrap();
        assert_eq!(l.entry(Point::default(), 0, 1, 1, 0).unwrap(), 1.0);
        assert_eq!(l.entry(Point::default(), 0, 0, 1, 1).unwrap(), 1.0);
        let l = CoefficientField::lame_constant(1.0, -0.5).unwrap();
        assert_relative_eq!(l.lame_margin().unwrap(), 0.5);
        assert!(CoefficientField::lame_constant(1.0, -1.5).is_err());
    }

    #[test]
    fn variable_lame() {
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), [D; 4], 4.0, 1.0).unwrap();
        let cf = CoefficientField::lame(Expr::parse("1 + y1").unwrap(), Expr::Const(0.0), &dom, 8).unwrap();
        assert_eq!(cf.entry(Point::new(0.5, 0.0), 0, 0, 0, 0).unwrap(), 3.0);
        assert!(cf.m_bound() >= 4.0);
        let bad = CoefficientField::lame(Expr::parse("0.5 - y1").unwrap(), Expr::Const(0.0), &dom, 8);
        assert!(bad.is_err());
    }

    #[test]
    fn ellipticity_reports() {
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), [D; 4], 4.0, 1.0).unwrap();
        let r = CoefficientField::laplace().verify_ellipticity(&dom, 4).unwrap();
        assert!(r.passed());
        assert_relative_eq!(r.get("c").unwrap(), 1.0, epsilon = 1e-14);
        let r = CoefficientField::lame_constant(1.0, 0.0).unwrap().verify_ellipticity(&dom, 4).unwrap();
        assert!(r.get("c").unwrap() >= 2.0);
        let bad = CoefficientField::constant_tensor(1, vec![-1.0, 0.0, 0.0, 1.0]).unwrap();
        let r = bad.verify_ellipticity(&dom, 4).unwrap();
        assert!(!r.passed());
        assert!(r.notes.iter().any(|n| n.contains("1.000000, 0.000000") || n.contains("-1.000000, 0.000000")));
    }

    #[test]
    fn laplace_stiffness_properties() {
        let (_, mesh) = square_mesh(0.5, [D; 4]);
        let sys = assemble(mesh.clone(), &CoefficientField::laplace()).unwrap();
        let ones = vec![1.0; mesh.num_nodes()];
        for r in sys.stiffness().matvec(&ones) {
            assert!(r.abs() < 1e-12);
        }
        let y1 = interp(&mesh, 1, |p| vec![p.x]);
        assert_relative_eq!(sys.form(&y1, &y1), 1.0, epsilon = 1e-12);
        let k = sys.stiffness();
        assert_eq!(k.transpose(), *sys.adjoint_stiffness());
        for (i, j, v) in k.triplets() {
            assert!((v - k.get(j, i)).abs() <= 1e-12 * k.max_abs());
        }
    }

    #[test]
    fn rigid_rotation_has_zero_energy() {
        let (_, mesh) = square_mesh(0.25, [D; 4]);
        let sys = assemble(mesh.clone(), &CoefficientField::lame_constant(1.0, 0.0).unwrap()).unwrap();
        let rot = interp(&mesh, 2, |p| vec![-p.y, p.x]);
        assert!(sys.form(&rot, &rot).abs() < 1e-12);
        let tr = interp(&mesh, 2, |_| vec![0.3, -0.7]);
        assert!(sys.stiffness().matvec(&tr).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn loads() {
        let (_, mesh) = square_mesh(0.25, [D, N, N, N]);
        let sys = assemble(mesh.clone(), &CoefficientField::laplace()).unwrap();
        let one = FnField::new(1, |_, o: &mut [f64]| o[0] = 1.0);
        let phi = vec![1.0; mesh.num_nodes()];
        let l = sys.assemble_load(None, None).unwrap();
        assert!(l.iter().all(|&v| v == 0.0));
        let l = sys.assemble_load(Some(&one), None).unwrap();
        assert_relative_eq!(crate::linalg::dot(&l, &phi), -1.0, epsilon = 1e-12);
        // f_N ≡ 1 on the top edge only
        let top = FnField::new(1, |p: Point, o: &mut [f64]| o[0] = if p.y > 1.0 - 1e-12 { 1.0 } else { 0.0 });
        let l = sys.assemble_load(None, Some(&top)).unwrap();
        assert_relative_eq!(crate::linalg::dot(&l, &phi), 1.0, epsilon = 1e-12);
        let bm = sys.boundary_mass();
        assert_relative_eq!(bm.bilinear(&phi, &phi), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn strain_and_stress() {
        let (_, mesh) = square_mesh(0.5, [D; 4]);
        let cf = CoefficientField::lame_constant(1.0, 0.0).unwrap();
        let u = interp(&mesh, 2, |p| vec![p.x, 0.0]);
        let (e, s) = strain_stress(&cf, &mesh, &u, 0).unwrap();
        assert_relative_eq!(e[0][0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(s[0][0], 2.0, epsilon = 1e-12);
        assert!(e[1][1].abs() < 1e-12 && s[1][1].abs() < 1e-12);
        let rot = interp(&mesh, 2, |p| vec![-p.y, p.x]);
        let (e, s) = strain_stress(&cf, &mesh, &rot, 1).unwrap();
        assert!(e.iter().flatten().chain(s.iter().flatten()).all(|v| v.abs() < 1e-12));
        let cf = CoefficientField::lame_constant(1.0, 1.0).unwrap();
        let dil = interp(&mesh, 2, |p| vec![p.x, p.y]);
        let (_, s) = strain_stress(&cf, &mesh, &dil, 0).unwrap();
        assert_relative_eq!(s[0][0], 4.0, epsilon = 1e-12);
        assert_relative_eq!(s[1][1], 4.0, epsilon = 1e-12);
        assert!(strain_stress(&CoefficientField::laplace(), &mesh, &dil, 0).is_err());
    }
}
