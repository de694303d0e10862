//! The pure Neumann problem: kernel spaces `V = ker K`, `V* = ker Kᵀ`, the
//! projection of a functional onto a boundary datum in the kernel, and the
//! constrained saddle-point solve.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dense_solve, dot, norm_inf, symmetric_eigen, thin_svd, Csr, DirectSolver};
use crate::mesh::Mesh;
use crate::mixed::FemSolution;
use crate::operators::{AssembledSystem, Operator};
use crate::report::VerificationReport;

/// Singular values below this fraction of `‖K‖₂` count as kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-8;
/// Required ratio between the first non-kernel singular value and the threshold.
pub const KERNEL_GAP: f64 = 10.0;
const BLOCK: usize = 6;
const SUBSPACE_ITERATIONS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelSide {
    V,
    VStar,
}

impl KernelSide {
    pub fn operator(self) -> Operator {
        match self {
            KernelSide::V => Operator::L,
            KernelSide::VStar => Operator::LStar,
        }
    }
}

/// Kernel basis orthonormal in `L²(∂Ω)`.
#[derive(Clone, Debug)]
pub struct KernelBasis {
    pub side: KernelSide,
    pub basis: Vec<FemSolution>,
    /// `∫_{∂Ω} v_i·v_j dσ`, row-major `dim × dim`.
    pub gram: Vec<f64>,
    /// Condition number of the boundary Gram matrix of the Euclidean-
    /// orthonormal kernel vectors, before boundary orthonormalisation.
    pub raw_gram_condition: f64,
    /// Relative singular values of the search block, ascending.
    pub singular_values: Vec<f64>,
    /// First non-kernel relative singular value over the threshold.
    pub gap: f64,
    /// `max ‖Kv‖ / (‖K‖‖v‖)` over the basis.
    pub kernel_residual: f64,
    pub norm_estimate: f64,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        self.basis[k].values()
    }

    /// Largest principal-angle sine between the spans (Euclidean), 0 when
    /// the spans agree.
    pub fn span_distance(&self, other: &KernelBasis) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let a = orthonormal_columns(self.basis.iter().map(|b| b.values().to_vec()).collect());
        let b = orthonormal_columns(other.basis.iter().map(|b| b.values().to_vec()).collect());
        // residual of projecting each a_i onto span(b)
        let mut worst = 0.0f64;
        for v in &a {
            let mut r = v.clone();
            for w in &b {
                let c = dot(&r, w);
                for (x, y) in r.iter_mut().zip(w) {
                    *x -= c * y;
                }
            }
            worst = worst.max(dot(&r, &r).sqrt());
        }
        worst
    }
}

fn orthonormal_columns(mut cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    // modified Gram–Schmidt, twice for stability
    for _ in 0..2 {
        for i in 0..cols.len() {
            for j in 0..i {
                let c = dot(&cols[i], &cols[j]);
                let (lo, hi) = cols.split_at_mut(i);
                for (x, y) in hi[0].iter_mut().zip(&lo[j]) {
                    *x -= c * y;
                }
            }
            let n = dot(&cols[i], &cols[i]).sqrt();
            if n > 0.0 {
                cols[i].iter_mut().for_each(|x| *x /= n);
            }
        }
    }
    cols
}

/// Power iteration for `‖K‖₂`.
fn norm2_estimate(k: &Csr) -> f64 {
    let n = k.n_cols();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let mut est = 0.0;
    for _ in 0..60 {
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        let y = k.matvec(&x);
        let z = k.matvec_t(&y);
        let new = dot(&z, &x).sqrt();
        if (new - est).abs() <= 1e-6 * new {
            est = new;
            break;
        }
        est = new;
        x = z;
    }
    est
}

fn lumped_mass(mesh: &Mesh, m: usize) -> Vec<f64> {
    let mut d = vec![0.0; mesh.num_nodes() * m];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.area(t) / 3.0;
        for &i in tri {
            for c in 0..m {
                d[i * m + c] += w;
            }
        }
    }
    d
}

/// Null space of `K` (side `V`) or `Kᵀ` (side `V*`) of the unconstrained
/// system, by shifted inverse subspace iteration followed by an SVD of the
/// block residual.
pub fn compute_kernel(sys: &AssembledSystem, side: KernelSide) -> Result<KernelBasis> {
    let k = match side {
        KernelSide::V => sys.stiffness().clone(),
        KernelSide::VStar => sys.adjoint_stiffness().clone(),
    };
    let n = k.n_rows();
    let q = BLOCK.min(n);
    let norm = norm2_estimate(&k);
    if !(norm > 0.0) {
        return Err(Error::Neumann("stiffness matrix is zero".into()));
    }
    let mass = lumped_mass(sys.mesh(), sys.m());
    let tr_k: f64 = (0..n).map(|i| k.get(i, i).abs()).sum();
    let tr_b: f64 = mass.iter().sum();
    let shift = 1e-6 * tr_k / tr_b;
    let mut trips = k.triplets();
    for (i, &b) in mass.iter().enumerate() {
        trips.push((i, i, shift * b));
    }
    let shifted = DirectSolver::new(Csr::from_triplets(n, n, &trips))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x6b65726e);
    let mut x: Vec<Vec<f64>> = (0..q)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    x = orthonormal_columns(x);
    for _ in 0..SUBSPACE_ITERATIONS {
        let mut next = Vec::with_capacity(q);
        for col in &x {
            let rhs: Vec<f64> = col.iter().zip(&mass).map(|(a, b)| a * b).collect();
            let (y, _) = shifted.solve(&rhs)?;
            next.push(y);
        }
        x = orthonormal_columns(next);
    }
    // SVD of K X (n × q)
    let kx: Vec<Vec<f64>> = x.iter().map(|c| k.matvec(c)).collect();
    let mut dense = vec![0.0; n * q];
    for (j, col) in kx.iter().enumerate() {
        for i in 0..n {
            dense[i * q + j] = col[i];
        }
    }
    let (sv, v) = thin_svd(&dense, n, q)?;
    // ascending
    let order: Vec<usize> = (0..q).rev().collect();
    let rel: Vec<f64> = order.iter().map(|&i| sv[i] / norm).collect();
    let dim = rel.iter().take_while(|&&s| s < KERNEL_THRESHOLD).count();
    if dim == q {
        return Err(Error::Neumann(format!(
            "kernel dimension is at least the search block size {q}"
        )));
    }
    let gap = rel[dim] / KERNEL_THRESHOLD;
    if gap < KERNEL_GAP {
        return Err(Error::Neumann(format!(
            "ill-separated spectrum: smallest non-kernel singular value {:.3e} is within {KERNEL_GAP}× of the threshold; refine the mesh",
            rel[dim]
        )));
    }
    let mut vecs: Vec<Vec<f64>> = order[..dim]
        .iter()
        .map(|&s| {
            let mut y = vec![0.0; n];
            for (j, col) in x.iter().enumerate() {
                let c = v[j * q + s];
                for (a, b) in y.iter_mut().zip(col) {
                    *a += c * b;
                }
            }
            y
        })
        .collect();
    vecs = orthonormal_columns(vecs);

    // orthonormalise in the boundary inner product: Y ← Y Q Λ^{-1/2}
    let bm = sys.boundary_mass();
    let gram_of = |vs: &[Vec<f64>]| {
        let d = vs.len();
        let mut g = vec![0.0; d * d];
        for i in 0..d {
            let mv = bm.matvec(&vs[i]);
            for j in 0..d {
                g[i * d + j] = dot(&mv, &vs[j]);
            }
        }
        g
    };
    let mut raw_cond = 1.0;
    if dim > 0 {
        let g = gram_of(&vecs);
        let (lam, qv) = symmetric_eigen(&g, dim)?;
        if lam[0] <= 0.0 {
            return Err(Error::Neumann("boundary Gram matrix is not positive definite".into()));
        }
        raw_cond = lam[dim - 1] / lam[0];
        let old = vecs.clone();
        for (c, out) in vecs.iter_mut().enumerate() {
            let s = 1.0 / lam[c].sqrt();
            out.iter_mut().for_each(|v| *v = 0.0);
            for (r, src) in old.iter().enumerate() {
                let coeff = qv[r * dim + c] * s;
                for (a, b) in out.iter_mut().zip(src) {
                    *a += coeff * b;
                }
            }
        }
        // fix signs for reproducibility: largest-magnitude entry positive
        for vct in vecs.iter_mut() {
            let imax = (0..n)
                .max_by(|&a, &b| vct[a].abs().total_cmp(&vct[b].abs()))
                .unwrap();
            if vct[imax] < 0.0 {
                vct.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    let gram = gram_of(&vecs);
    let mut kernel_residual = 0.0f64;
    for vct in &vecs {
        let r = k.matvec(vct);
        let nv = dot(vct, vct).sqrt();
        kernel_residual = kernel_residual.max(dot(&r, &r).sqrt() / (norm * nv));
    }
    let mesh = sys.mesh().clone();
    let m = sys.m();
    let op = side.operator();
    let basis = vecs
        .into_iter()
        .enumerate()
        .map(|(i, v)| FemSolution::new(mesh.clone(), m, v, op, 0.0, &format!("kernel {i}")))
        .collect();
    Ok(KernelBasis {
        side,
        basis,
        gram,
        raw_gram_condition: raw_cond,
        singular_values: rel,
        gap,
        kernel_residual,
        norm_estimate: norm,
    })
}

/// Result of representing a functional on the kernel through the boundary
/// inner product.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Nodal values of `λ_μ`.
    pub lambda: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// `max_k |∫ v_k dμ − ∫_{∂Ω} λ_μ·v_k dσ|`.
    pub residual: f64,
}

/// Finds `λ ∈ span(kb)` with `∫_{∂Ω} λ·v dσ = F·v` for every kernel vector
/// `v`, where `F` is a dof-vector representing the functional (so
/// `F·v = ∫ v dμ`).
pub fn compatibility_projection(kb: &KernelBasis, sys: &AssembledSystem, functional: &[f64]) -> Result<Projection> {
    let d = kb.dim();
    if d == 0 {
        return Err(Error::Neumann("kernel is trivial; nothing to project".into()));
    }
    let rhs: Vec<f64> = (0..d).map(|k| dot(functional, kb.vector(k))).collect();
    let coefficients = dense_solve(&kb.gram, d, &rhs)
        .map_err(|_| Error::Neumann("singular boundary Gram matrix".into()))?;
    let n = sys.n_dofs();
    let mut lambda = vec![0.0; n];
    for (k, c) in coefficients.iter().enumerate() {
        for (l, v) in lambda.iter_mut().zip(kb.vector(k)) {
            *l += c * v;
        }
    }
    let mb = sys.boundary_mass().matvec(&lambda);
    let residual = (0..d)
        .map(|k| (rhs[k] - dot(&mb, kb.vector(k))).abs())
        .fold(0.0, f64::max);
    Ok(Projection {
        lambda,
        coefficients,
        residual,
    })
}

/// Saddle-point solver for the constrained Neumann problems
///
/// ```text
/// [ K        M_b V* ] [u]   [ℓ]
/// [ (M_b V)ᵀ   0    ] [μ] = [0]
/// ```
///
/// whose transpose is the adjoint problem with the roles of `V` and `V*`
/// exchanged.
#[derive(Debug)]
pub struct NeumannSolver {
    sys: Arc<AssembledSystem>,
    v: KernelBasis,
    vstar: KernelBasis,
    solver: DirectSolver,
}

/// A constrained solve with its diagnostics.
#[derive(Clone, Debug)]
pub struct NeumannSolution {
    pub solution: FemSolution,
    /// Boundary datum in the kernel added to make the data compatible.
    pub datum: Vec<f64>,
    /// `max_k |∫_{∂Ω} u·v_k dσ|` over the constraint basis.
    pub constraint_residual: f64,
    /// Relative violation of the compatibility condition by the data before
    /// any datum was added.
    pub compatibility: f64,
    pub multipliers: Vec<f64>,
}

impl NeumannSolver {
    pub fn new(sys: Arc<AssembledSystem>) -> Result<Self> {
        if sys.mesh().has_dirichlet() {
            return Err(Error::Neumann("the mesh has D-tagged edges; use the mixed solver".into()));
        }
        let v = compute_kernel(&sys, KernelSide::V)?;
        let vstar = compute_kernel(&sys, KernelSide::VStar)?;
        if v.dim() != vstar.dim() {
            return Err(Error::Neumann(format!(
                "dim V = {} differs from dim V* = {}",
                v.dim(),
                vstar.dim()
            )));
        }
        let n = sys.n_dofs();
        let d = v.dim();
        let bm = sys.boundary_mass();
        let mut trips = sys.stiffness().triplets();
        for k in 0..d {
            let cs = bm.matvec(vstar.vector(k));
            let c = bm.matvec(v.vector(k));
            for i in 0..n {
                if cs[i] != 0.0 {
                    trips.push((i, n + k, cs[i]));
                }
                if c[i] != 0.0 {
                    trips.push((n + k, i, c[i]));
                }
            }
        }
        let solver = DirectSolver::new(Csr::from_triplets(n + d, n + d, &trips))?;
        Ok(Self { sys, v, vstar, solver })
    }

    pub fn system(&self) -> &Arc<AssembledSystem> {
        &self.sys
    }

    pub fn kernel(&self, side: KernelSide) -> &KernelBasis {
        match side {
            KernelSide::V => &self.v,
            KernelSide::VStar => &self.vstar,
        }
    }

    /// The kernel the data of `op` must be orthogonal to, and the one the
    /// solution is constrained against.
    fn sides(op: Operator) -> (KernelSide, KernelSide) {
        match op {
            Operator::L => (KernelSide::VStar, KernelSide::V),
            Operator::LStar => (KernelSide::V, KernelSide::VStar),
        }
    }

    /// `max_k |ℓ·v_k| / (‖ℓ‖₂‖v_k‖₂)` over the kernel that `op`'s data must
    /// annihilate.
    pub fn compatibility_violation(&self, load: &[f64], op: Operator) -> f64 {
        let kb = self.kernel(Self::sides(op).0);
        let nl = dot(load, load).sqrt();
        if nl == 0.0 {
            return 0.0;
        }
        (0..kb.dim())
            .map(|k| {
                let v = kb.vector(k);
                dot(load, v).abs() / (nl * dot(v, v).sqrt())
            })
            .fold(0.0, f64::max)
    }

    fn saddle_solve(&self, load: &[f64], op: Operator, datum: Vec<f64>, compat: f64, desc: &str) -> Result<NeumannSolution> {
        let n = self.sys.n_dofs();
        let d = self.v.dim();
        let mut rhs = load.to_vec();
        rhs.resize(n + d, 0.0);
        let (x, residual) = match op {
            Operator::L => self.solver.solve(&rhs)?,
            Operator::LStar => self.solver.solve_transpose(&rhs)?,
        };
        let values = x[..n].to_vec();
        let multipliers = x[n..].to_vec();
        let cons = self.kernel(Self::sides(op).1);
        let mb = self.sys.boundary_mass().matvec(&values);
        let constraint_residual = (0..d)
            .map(|k| dot(&mb, cons.vector(k)).abs())
            .fold(0.0, f64::max);
        let solution = FemSolution::new(self.sys.mesh().clone(), self.sys.m(), values, op, residual, desc);
        Ok(NeumannSolution {
            solution,
            datum,
            constraint_residual,
            compatibility: compat,
            multipliers,
        })
    }

    /// Solves with load `ℓ` as given; refuses data violating the
    /// compatibility condition by more than `1e−8`.
    pub fn solve(&self, load: &[f64], op: Operator) -> Result<NeumannSolution> {
        let compat = self.compatibility_violation(load, op);
        if compat > 1e-8 {
            return Err(Error::Neumann(format!(
                "data violate the compatibility condition (relative {compat:.3e}); project first"
            )));
        }
        self.saddle_solve(load, op, vec![0.0; load.len()], compat, "neumann")
    }

    /// Adds the boundary datum `λ` from the kernel so that `ℓ + M_b λ` is
    /// compatible, then solves.
    pub fn solve_projected(&self, load: &[f64], op: Operator) -> Result<(NeumannSolution, Projection)> {
        let compat = self.compatibility_violation(load, op);
        let kb = self.kernel(Self::sides(op).0);
        let neg: Vec<f64> = load.iter().map(|v| -v).collect();
        let proj = compatibility_projection(kb, &self.sys, &neg)?;
        let mb = self.sys.boundary_mass().matvec(&proj.lambda);
        let total: Vec<f64> = load.iter().zip(&mb).map(|(a, b)| a + b).collect();
        let sol = self.saddle_solve(&total, op, proj.lambda.clone(), compat, "neumann projected")?;
        Ok((sol, proj))
    }

    /// Summary report of the kernel computation.
    pub fn report(&self) -> VerificationReport {
        let mut r = VerificationReport::new("neumann_kernel");
        r.input("dofs", self.sys.n_dofs());
        r.quantity("dim_V", self.v.dim() as f64);
        r.quantity("dim_V_star", self.vstar.dim() as f64);
        r.quantity("gram_condition_V", self.v.raw_gram_condition);
        r.quantity("gram_condition_V_star", self.vstar.raw_gram_condition);
        r.quantity("gap_V", self.v.gap);
        r.quantity("gap_V_star", self.vstar.gap);
        r.quantity("kernel_residual", self.v.kernel_residual.max(self.vstar.kernel_residual));
        r.threshold("relative_singular_value", KERNEL_THRESHOLD);
        r.threshold("gap", KERNEL_GAP);
        r.trace("singular_values_V", self.v.singular_values.clone());
        r.set_pass(self.v.dim() == self.vstar.dim() && self.v.gap >= KERNEL_GAP && self.vstar.gap >= KERNEL_GAP);
        r
    }
}

/// Largest `|∫_{∂Ω} u·v dσ| / (‖u‖‖v‖)` over a kernel basis, norms in
/// `L²(∂Ω)`.
pub fn boundary_orthogonality(sys: &AssembledSystem, u: &[f64], kb: &KernelBasis) -> f64 {
    let bm = sys.boundary_mass();
    let mu = bm.matvec(u);
    let nu = dot(&mu, u).max(0.0).sqrt();
    if nu == 0.0 {
        return 0.0;
    }
    (0..kb.dim())
        .map(|k| {
            let v = kb.vector(k);
            let nv = bm.bilinear(v, v).max(0.0).sqrt();
            dot(&mu, v).abs() / (nu * nv)
        })
        .fold(0.0, f64::max)
}

/// `max_k |x_k|` helper for reports.
pub fn max_abs(x: &[f64]) -> f64 {
    norm_inf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryTag::Neumann as N, Domain, Point};
    use crate::mesh::FnField;
    use crate::operators::{assemble, CoefficientField};
    use approx::assert_relative_eq;

    fn system(h: f64, cf: &CoefficientField) -> Arc<AssembledSystem> {
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), [N; 4], 4.0, 1.0).unwrap();
        let mesh = Arc::new(Mesh::triangulate(&dom, h).unwrap());
        Arc::new(assemble(mesh, cf).unwrap())
    }

    #[test]
    fn laplace_kernel_is_constants() {
        let sys = system(0.1, &CoefficientField::laplace());
        let kb = compute_kernel(&sys, KernelSide::V).unwrap();
        assert_eq!(kb.dim(), 1);
        assert!(kb.gap >= KERNEL_GAP);
        let v = kb.vector(0);
        // boundary-normalised constant: 1/sqrt(|∂Ω|) = 0.5
        for &x in v {
            assert_relative_eq!(x, 0.5, epsilon = 1e-8);
        }
        assert_relative_eq!(kb.gram[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lame_kernel_is_rigid_motions() {
        let sys = system(0.1, &CoefficientField::lame_constant(1.0, 1.0).unwrap());
        let v = compute_kernel(&sys, KernelSide::V).unwrap();
        let vs = compute_kernel(&sys, KernelSide::VStar).unwrap();
        assert_eq!(v.dim(), 3);
        assert_eq!(vs.dim(), 3);
        assert!(v.span_distance(&vs) < 1e-8);
        assert!(v.kernel_residual < 1e-8);
        // the rotation lies in the span
        let rot: Vec<f64> = sys.mesh().nodes().iter().flat_map(|p| [-p.y, p.x]).collect();
        let a = orthonormal_columns(v.basis.iter().map(|b| b.values().to_vec()).collect());
        let mut r = orthonormal_columns(vec![rot]).remove(0);
        for w in &a {
            let c = dot(&r, w);
            r.iter_mut().zip(w).for_each(|(x, y)| *x -= c * y);
        }
        assert!(dot(&r, &r).sqrt() < 1e-8);
    }

    #[test]
    fn projection_of_area_measure() {
        let sys = system(0.1, &CoefficientField::laplace());
        let kb = compute_kernel(&sys, KernelSide::V).unwrap();
        let one = FnField::new(1, |_, o: &mut [f64]| o[0] = 1.0);
        let f = sys
            .volume_functional(&sys.mesh().region_quadrature(&crate::mesh::Region::All), &one)
            .unwrap();
        let p = compatibility_projection(&kb, &sys, &f).unwrap();
        assert!(p.residual <= 1e-10);
        for &l in &p.lambda {
            assert_relative_eq!(l, 0.25, epsilon = 1e-8);
        }
        let zero = compatibility_projection(&kb, &sys, &vec![0.0; sys.n_dofs()]).unwrap();
        assert!(zero.lambda.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn neumann_solve_matches_pinned_solve() {
        let sys = system(0.05, &CoefficientField::laplace());
        let ns = NeumannSolver::new(sys.clone()).unwrap();
        let g = FnField::new(1, |p: Point, o: &mut [f64]| o[0] = p.x - 0.5);
        let load = sys.assemble_load(None, Some(&g)).unwrap();
        let sol = ns.solve(&load, Operator::L).unwrap();
        assert!(sol.constraint_residual <= 1e-10);
        assert!(sol.multipliers[0].abs() <= 1e-10);
        // independent route: pin node 0, solve, shift to zero boundary mean
        let n = sys.n_dofs();
        let mut keep = vec![true; n];
        keep[0] = false;
        let (k, kept) = sys.stiffness().restrict(&keep);
        let b: Vec<f64> = kept.iter().map(|&i| load[i]).collect();
        let (x, _) = DirectSolver::new(k).unwrap().solve(&b).unwrap();
        let mut u = vec![0.0; n];
        for (c, &i) in kept.iter().enumerate() {
            u[i] = x[c];
        }
        let bm = sys.boundary_mass();
        let ones = vec![1.0; n];
        let mean = bm.bilinear(&ones, &u) / bm.bilinear(&ones, &ones);
        for (a, b) in u.iter().zip(sol.solution.values()) {
            assert!((a - mean - b).abs() < 1e-9);
        }
        // incompatible data are refused
        let one = FnField::new(1, |_, o: &mut [f64]| o[0] = 1.0);
        let bad = sys.assemble_load(Some(&one), None).unwrap();
        assert!(ns.solve(&bad, Operator::L).is_err());
        let (ok, proj) = ns.solve_projected(&bad, Operator::L).unwrap();
        assert!(proj.residual <= 1e-10);
        assert!(ok.constraint_residual <= 1e-10);
    }

    #[test]
    fn zero_data() {
        let sys = system(0.2, &CoefficientField::laplace());
        let ns = NeumannSolver::new(sys.clone()).unwrap();
        let sol = ns.solve(&vec![0.0; sys.n_dofs()], Operator::L).unwrap();
        assert_eq!(sol.solution.max_abs(), 0.0);
    }
}
