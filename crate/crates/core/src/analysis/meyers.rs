use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::mesh::{FnField, Mesh};
use crate::mixed::MixedSolver;
use crate::operators::{assemble, CoefficientField, Operator};
use crate::report::VerificationReport;

use super::fits::least_squares;

/// A mixed problem with constant data, solved on a sequence of meshes.
#[derive(Clone, Debug)]
pub struct MeyersProblem {
    pub dom: Domain,
    pub cf: CoefficientField,
    pub f: Vec<f64>,
    pub f_n: Option<Vec<f64>>,
    /// Pass only when the estimate falls in this window.
    pub expected: Option<(f64, f64)>,
}

/// Meshes for the requested levels: a level that halves the previous one is
/// obtained by red refinement so the sequence stays nested.
fn level_meshes(dom: &Domain, h_levels: &[f64]) -> Result<Vec<Arc<Mesh>>> {
    let mut out: Vec<Arc<Mesh>> = Vec::with_capacity(h_levels.len());
    for (k, &h) in h_levels.iter().enumerate() {
        let mesh = match out.last() {
            Some(prev) if (h - 0.5 * h_levels[k - 1]).abs() <= 1e-9 * h => prev.refine_red()?,
            _ => Mesh::triangulate(dom, h)?,
        };
        out.push(Arc::new(mesh));
    }
    Ok(out)
}

/// Gradient-integrability diagnostic. For each `t`, `N_h(t) = ∫ |∇u_h|^t` is
/// computed on the last three levels and
/// `e(t) = log2 |N_{h/4} − N_{h/2}| / |N_{h/2} − N_h|`. A gradient singularity
/// `|∇u| ~ r^{−s}` gives `e(t) = st − 2`, which is negative exactly while
/// `∇u ∈ L^t`; the estimate `t₀` is the zero of the linear fit of `e`. Levels
/// whose differences change sign make that `t` inconclusive.
pub fn meyers_exponent(problem: &MeyersProblem, h_levels: &[f64], t_grid: &[f64]) -> Result<VerificationReport> {
    if h_levels.len() < 3 {
        return Err(Error::Analysis("the Meyers diagnostic needs at least 3 mesh levels".into()));
    }
    if t_grid.iter().any(|&t| !(t > 2.0 && t < 8.0)) {
        return Err(Error::Analysis("t grid must lie in (2, 8)".into()));
    }
    let m = problem.cf.m();
    if problem.f.len() != m || problem.f_n.as_ref().is_some_and(|g| g.len() != m) {
        return Err(Error::Analysis("data and operator sizes differ".into()));
    }
    let meshes = level_meshes(&problem.dom, h_levels)?;
    let mut norms: Vec<Vec<f64>> = Vec::with_capacity(meshes.len());
    for mesh in &meshes {
        let sys = Arc::new(assemble(mesh.clone(), &problem.cf)?);
        let f = problem.f.clone();
        let fv = FnField::new(m, move |_, o: &mut [f64]| o.copy_from_slice(&f));
        let gn = problem.f_n.clone().map(|g| FnField::new(m, move |_, o: &mut [f64]| o.copy_from_slice(&g)));
        let load = sys.assemble_load(Some(&fv), gn.as_ref().map(|g| g as &dyn crate::mesh::FieldEval))?;
        let solver = MixedSolver::new(sys)?;
        let u = solver.solve(&load, Operator::L, "meyers level")?;
        norms.push(t_grid.iter().map(|&t| u.grad_lt_norm(t).powf(t)).collect());
    }

    let k = norms.len();
    let (mut ts, mut es) = (Vec::new(), Vec::new());
    let mut e_trace = Vec::with_capacity(t_grid.len());
    let mut inconclusive = Vec::new();
    for (i, &t) in t_grid.iter().enumerate() {
        let d1 = norms[k - 2][i] - norms[k - 3][i];
        let d2 = norms[k - 1][i] - norms[k - 2][i];
        if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
            e_trace.push(f64::NAN);
            inconclusive.push(t);
            continue;
        }
        let e = (d2.abs() / d1.abs()).log2();
        e_trace.push(e);
        ts.push(t);
        es.push(e);
    }

    let mut rep = VerificationReport::new("meyers");
    rep.input("levels", h_levels.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","));
    rep.input("t_grid", t_grid.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","));
    rep.input("nodes_finest", meshes[k - 1].num_nodes());
    for (j, n) in norms.iter().enumerate() {
        rep.trace(&format!("grad_norm_t_power_level{j}"), n.clone());
    }
    rep.trace("increment_exponent", e_trace);
    rep.threshold("growth_zero_crossing", 0.0);

    let mut pass = inconclusive.is_empty() && ts.len() >= 2;
    if !inconclusive.is_empty() {
        rep.note(&format!("non-monotone differences at t = {inconclusive:?}; inconclusive"));
    }
    if ts.len() >= 2 {
        let fit = least_squares(&ts, &es)?;
        let t0 = if fit.slope > 1e-3 { -fit.intercept / fit.slope } else { f64::INFINITY };
        rep.quantity("slope", fit.slope);
        rep.quantity("intercept", fit.intercept);
        rep.quantity("r2", fit.r2);
        rep.quantity("t0", t0);
        let t_max = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if t0 > t_max {
            rep.note("every t in the grid is stable; t0 lies beyond the grid");
        }
        if let Some((lo, hi)) = problem.expected {
            rep.threshold("t0_min", lo);
            rep.threshold("t0_max", hi);
            pass &= t0 >= lo && t0 <= hi;
        }
    } else {
        rep.quantity("t0", f64::NAN);
    }
    rep.set_pass(pass);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryTag::{Dirichlet as D, Neumann as N};
    use crate::geometry::Point;

    #[test]
    fn smooth_problem_is_stable_on_the_grid() {
        // convex domain, full Dirichlet data: only mild r² log r corner terms
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), [D; 4], 4.0, 1.0).unwrap();
        let problem = MeyersProblem {
            dom,
            cf: CoefficientField::laplace(),
            f: vec![1.0],
            f_n: None,
            expected: None,
        };
        let rep = meyers_exponent(&problem, &[0.2, 0.1, 0.05], &[3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!(rep.get("t0").unwrap() > 6.0, "{}", rep.to_text());
    }

    #[test]
    fn argument_checks() {
        let dom = Domain::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), [D, N, N, N], 4.0, 1.0).unwrap();
        let problem = MeyersProblem {
            dom,
            cf: CoefficientField::laplace(),
            f: vec![1.0],
            f_n: None,
            expected: None,
        };
        assert!(meyers_exponent(&problem, &[0.2, 0.1], &[3.0]).is_err());
        assert!(meyers_exponent(&problem, &[0.2, 0.1, 0.05], &[9.0]).is_err());
    }
}
