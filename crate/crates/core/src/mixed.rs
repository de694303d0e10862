//! The discrete mixed problem: find `u` vanishing on `D` with
//! `A(u, φ) = ℓ(φ)` for every P1 `φ` vanishing on `D`, and its adjoint
//! `A(φ, w) = ℓ(φ)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::{norm_inf, DirectSolver};
use crate::mesh::{FieldEval, Mesh, QuadPoint};
use crate::operators::{element_gradient, AssembledSystem};
use crate::report::fmt_f64;

pub use crate::operators::Operator;

/// A nodal P1 field with `m` components, laid out `node·m + component`.
#[derive(Clone, Debug)]
pub struct FemSolution {
    values: Vec<f64>,
    m: usize,
    mesh: Arc<Mesh>,
    operator: Operator,
    residual: f64,
    description: String,
}

impl FemSolution {
    pub fn new(mesh: Arc<Mesh>, m: usize, values: Vec<f64>, operator: Operator, residual: f64, description: &str) -> Self {
        assert_eq!(values.len(), mesh.num_nodes() * m);
        Self {
            values,
            m,
            mesh,
            operator,
            residual,
            description: description.to_string(),
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<Mesh>, m: usize, f: impl Fn(Point) -> Vec<f64>) -> Self {
        let values: Vec<f64> = mesh
            .nodes()
            .iter()
            .flat_map(|&p| {
                let v = f(p);
                assert_eq!(v.len(), m);
                v
            })
            .collect();
        Self::new(mesh, m, values, Operator::L, 0.0, "interpolant")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn operator(&self) -> Operator {
        self.operator
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn nodal(&self, node: usize, comp: usize) -> f64 {
        self.values[node * self.m + comp]
    }

    pub fn value_at(&self, p: Point) -> Result<Vec<f64>> {
        self.mesh
            .interpolate(&self.values, self.m, p)
            .ok_or_else(|| Error::Mesh(format!("point {p} outside the mesh")))
    }

    /// `∂_j u^c` on triangle `t`, one `[∂_1, ∂_2]` per component.
    pub fn gradient(&self, t: usize) -> Vec<[f64; 2]> {
        element_gradient(&self.mesh, &self.values, self.m, t)
    }

    /// Frobenius norm of the gradient on triangle `t`.
    pub fn gradient_norm(&self, t: usize) -> f64 {
        self.gradient(t)
            .iter()
            .map(|g| g[0] * g[0] + g[1] * g[1])
            .sum::<f64>()
            .sqrt()
    }

    /// `(∫ |∇u|²)^{1/2}`, exact for P1.
    pub fn energy_norm(&self) -> f64 {
        self.grad_lt_norm(2.0)
    }

    /// `(∫ |∇u|^t)^{1/t}`, exact per element.
    pub fn grad_lt_norm(&self, t: f64) -> f64 {
        (0..self.mesh.num_triangles())
            .map(|k| self.mesh.area(k) * self.gradient_norm(k).powf(t))
            .sum::<f64>()
            .powf(1.0 / t)
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.values)
    }

    /// CSV with `node,y1,y2,u1..um`; no header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.mesh.nodes().iter().enumerate() {
            s.push_str(&format!("{i},{},{}", fmt_f64(p.x), fmt_f64(p.y)));
            for c in 0..self.m {
                s.push(',');
                s.push_str(&fmt_f64(self.nodal(i, c)));
            }
            s.push('\n');
        }
        s
    }

    pub fn with_values(&self, values: Vec<f64>, description: &str) -> Self {
        Self::new(self.mesh.clone(), self.m, values, self.operator, self.residual, description)
    }
}

impl FieldEval for FemSolution {
    fn components(&self) -> usize {
        self.m
    }

    fn eval(&self, q: &QuadPoint, out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|k| q.bary[k] * self.values[q.nodes[k] * self.m + c]).sum();
        }
    }
}

/// Which boundary nodes carry the homogeneous Dirichlet constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Nodes on D-tagged edges.
    Mixed,
    /// Every boundary node.
    Dirichlet,
}

/// Factorised constrained system, reusable across right-hand sides and
/// across `L` / `L*`.
#[derive(Debug)]
pub struct MixedSolver {
    sys: Arc<AssembledSystem>,
    constraint: Constraint,
    free: Vec<usize>,
    is_free: Vec<bool>,
    solver: DirectSolver,
}

impl MixedSolver {
    /// Mixed problem with the D/N split of the mesh tags; needs D ≠ ∅.
    pub fn new(sys: Arc<AssembledSystem>) -> Result<Self> {
        Self::with_constraint(sys, Constraint::Mixed)
    }

    pub fn with_constraint(sys: Arc<AssembledSystem>, constraint: Constraint) -> Result<Self> {
        let mesh = sys.mesh().clone();
        let m = sys.m();
        let mut is_free = vec![true; sys.n_dofs()];
        let mut any = false;
        let mut fix = |node: usize| {
            for c in 0..m {
                is_free[node * m + c] = false;
            }
        };
        match constraint {
            Constraint::Mixed => {
                for i in 0..mesh.num_nodes() {
                    if mesh.is_dirichlet_node(i) {
                        fix(i);
                        any = true;
                    }
                }
            }
            Constraint::Dirichlet => {
                for e in mesh.boundary_edges() {
                    fix(e.nodes[0]);
                    fix(e.nodes[1]);
                    any = true;
                }
            }
        }
        if !any {
            return Err(Error::Singular(
                "D is empty; the pure Neumann problem needs the Neumann solver".into(),
            ));
        }
        let (k, free) = sys.stiffness().restrict(&is_free);
        if free.is_empty() {
            return Err(Error::Singular("no free degrees of freedom".into()));
        }
        let solver = DirectSolver::new(k).map_err(|e| match e {
            Error::Singular(s) => Error::Singular(format!("constrained stiffness: {s}; coercivity fails")),
            other => other,
        })?;
        Ok(Self {
            sys,
            constraint,
            free,
            is_free,
            solver,
        })
    }

    pub fn system(&self) -> &Arc<AssembledSystem> {
        &self.sys
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn is_free(&self, dof: usize) -> bool {
        self.is_free[dof]
    }

    /// Solves with the full-length load `ℓ(φ_i)`; entries on constrained
    /// dofs are ignored.
    pub fn solve(&self, load: &[f64], op: Operator, description: &str) -> Result<FemSolution> {
        assert_eq!(load.len(), self.sys.n_dofs());
        let b: Vec<f64> = self.free.iter().map(|&i| load[i]).collect();
        let (x, residual) = match op {
            Operator::L => self.solver.solve(&b)?,
            Operator::LStar => self.solver.solve_transpose(&b)?,
        };
        let mut values = vec![0.0; self.sys.n_dofs()];
        for (k, &i) in self.free.iter().enumerate() {
            values[i] = x[k];
        }
        Ok(FemSolution::new(
            self.sys.mesh().clone(),
            self.sys.m(),
            values,
            op,
            residual,
            description,
        ))
    }

    /// `max_φ |A(u, φ) − ℓ(φ)|` over free hat functions (or `A(φ, u)` for
    /// `L*`), relative to `‖K‖∞‖u‖∞ + ‖ℓ‖∞`.
    pub fn galerkin_residual(&self, u: &FemSolution, load: &[f64]) -> f64 {
        let ku = self.sys.matrix(u.operator()).matvec(u.values());
        let mut worst = 0.0f64;
        let mut lmax = 0.0f64;
        for &i in &self.free {
            worst = worst.max((ku[i] - load[i]).abs());
            lmax = lmax.max(load[i].abs());
        }
        let denom = self.sys.matrix(u.operator()).norm_inf() * u.max_abs() + lmax;
        if denom == 0.0 {
            0.0
        } else {
            worst / denom
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryTag, Domain};
    use crate::mesh::FnField;
    use crate::operators::{assemble, CoefficientField};
    use approx::assert_relative_eq;
    use BoundaryTag::{Dirichlet as D, Neumann as N};

    fn laplace_system(h: f64, tags: [BoundaryTag; 4]) -> Arc<AssembledSystem> {
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), tags, 4.0, 1.0).unwrap();
        let mesh = Arc::new(Mesh::triangulate(&dom, h).unwrap());
        Arc::new(assemble(mesh, &CoefficientField::laplace()).unwrap())
    }

    /// Series solution of Δu = 1 on the unit square with zero boundary
    /// values, at the centre.
    fn torsion_center() -> f64 {
        let mut s = 0.0;
        let pi = std::f64::consts::PI;
        for j in 0..200 {
            for k in 0..200 {
                let (a, b) = ((2 * j + 1) as f64, (2 * k + 1) as f64);
                let coeff = 16.0 / (pi * pi * a * b);
                let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
                s += coeff * sign / (pi * pi * (a * a + b * b));
            }
        }
        -s
    }

    #[test]
    fn torsion_problem_center_value() {
        let oracle = torsion_center();
        assert!((oracle + 0.07367).abs() < 1e-4);
        let sys = laplace_system(0.02, [D; 4]);
        let solver = MixedSolver::new(sys.clone()).unwrap();
        let one = FnField::new(1, |_, o: &mut [f64]| o[0] = 1.0);
        let load = sys.assemble_load(Some(&one), None).unwrap();
        let u = solver.solve(&load, Operator::L, "torsion").unwrap();
        assert!(u.residual() <= 1e-10);
        let c = u.value_at(Point::new(0.5, 0.5)).unwrap()[0];
        assert!((c - oracle).abs() < 0.01 * oracle.abs(), "{c} vs {oracle}");
        for (i, _) in u.mesh().nodes().iter().enumerate() {
            if u.mesh().is_dirichlet_node(i) {
                assert_eq!(u.nodal(i, 0), 0.0);
            }
        }
        assert!(solver.galerkin_residual(&u, &load) <= 1e-10);
    }

    #[test]
    fn zero_data_zero_solution() {
        let sys = laplace_system(0.1, [D, N, N, N]);
        let solver = MixedSolver::new(sys.clone()).unwrap();
        let u = solver.solve(&vec![0.0; sys.n_dofs()], Operator::L, "zero").unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn linear_solution_is_reproduced() {
        // u = y1, D = left edge, ∂u/∂ν = ν1: +1 on the right, 0 on top/bottom
        let sys = laplace_system(0.1, [N, N, N, D]);
        let solver = MixedSolver::new(sys.clone()).unwrap();
        let flux = FnField::new(1, |p: Point, o: &mut [f64]| o[0] = if p.x > 1.0 - 1e-12 { 1.0 } else { 0.0 });
        let load = sys.assemble_load(None, Some(&flux)).unwrap();
        let u = solver.solve(&load, Operator::L, "linear").unwrap();
        for (i, p) in u.mesh().nodes().iter().enumerate() {
            assert!((u.nodal(i, 0) - p.x).abs() <= 1e-10);
        }
        assert_relative_eq!(u.energy_norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn energy_norms_of_interpolants() {
        let sys = laplace_system(0.2, [D; 4]);
        let mesh = sys.mesh().clone();
        let z = FemSolution::interpolate(mesh.clone(), 1, |_| vec![0.0]);
        assert_eq!(z.energy_norm(), 0.0);
        let u = FemSolution::interpolate(mesh.clone(), 1, |p| vec![p.x + p.y]);
        assert_relative_eq!(u.energy_norm(), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn empty_dirichlet_set_is_rejected() {
        let sys = laplace_system(0.25, [N; 4]);
        assert!(matches!(MixedSolver::new(sys.clone()), Err(Error::Singular(_))));
        assert!(MixedSolver::with_constraint(sys, Constraint::Dirichlet).is_ok());
    }

    #[test]
    fn adjoint_solve_uses_transpose() {
        // non-symmetric tensor: a^{12} = 0.5, a^{21} = −0.5
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), [D, N, N, N], 4.0, 1.0).unwrap();
        let mesh = Arc::new(Mesh::triangulate(&dom, 0.1).unwrap());
        let cf = CoefficientField::constant_tensor(1, vec![1.0, 0.5, -0.5, 1.0]).unwrap();
        let sys = Arc::new(assemble(mesh, &cf).unwrap());
        let solver = MixedSolver::new(sys.clone()).unwrap();
        let f = FnField::new(1, |p: Point, o: &mut [f64]| o[0] = p.x * p.y);
        let load = sys.assemble_load(Some(&f), None).unwrap();
        let w = solver.solve(&load, Operator::LStar, "adjoint").unwrap();
        assert!(solver.galerkin_residual(&w, &load) <= 1e-10);
        let u = solver.solve(&load, Operator::L, "primal").unwrap();
        assert!((u.max_abs() - w.max_abs()).abs() > 1e-6);
    }
}
