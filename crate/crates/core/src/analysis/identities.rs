use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::green::{approximate_green, neumann_green, representation_solve, GreenField};
use crate::mesh::{FieldEval, Region, TagFilter};
use crate::mixed::{FemSolution, MixedSolver};
use crate::neumann::{boundary_orthogonality, NeumannSolver};
use crate::operators::Operator;
use crate::report::VerificationReport;

/// Tolerance for algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Tolerance for representation against a direct solve, relative to `‖u‖_∞`.
pub const REPRESENTATION_TOL: f64 = 0.02;

/// `∫ u·g − ∫_N u·g_N dσ` by quadrature.
fn pairing(u: &FemSolution, g: Option<&dyn FieldEval>, g_n: Option<&dyn FieldEval>) -> f64 {
    let m = u.m();
    let (mut ub, mut gb) = (vec![0.0; m], vec![0.0; m]);
    let mut dot = |quad: &[crate::mesh::QuadPoint], f: &dyn FieldEval| -> f64 {
        quad.iter()
            .map(|q| {
                u.eval(q, &mut ub);
                f.eval(q, &mut gb);
                q.weight * ub.iter().zip(&gb).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    };
    let mesh = u.mesh();
    let mut total = 0.0;
    if let Some(g) = g {
        total += dot(&mesh.region_quadrature(&Region::All), g);
    }
    if let Some(g) = g_n {
        total -= dot(&mesh.boundary_quadrature(TagFilter::Neumann), g);
    }
    total
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs() + 1e-14)
}

/// Solves `L u = (f, f_N)` and `L* w = (g, g_N)` and compares
/// `∫ u·g − ∫_N u·g_N` with `∫ w·f − ∫_N w·f_N`.
pub fn verify_green_identity(
    solver: &MixedSolver,
    f: Option<&dyn FieldEval>,
    f_n: Option<&dyn FieldEval>,
    g: Option<&dyn FieldEval>,
    g_n: Option<&dyn FieldEval>,
) -> Result<VerificationReport> {
    let sys = solver.system();
    let u = solver.solve(&sys.assemble_load(f, f_n)?, Operator::L, "green identity u")?;
    let w = solver.solve(&sys.assemble_load(g, g_n)?, Operator::LStar, "green identity w")?;
    let lhs = pairing(&u, g, g_n);
    let rhs = pairing(&w, f, f_n);
    let residual = relative_gap(lhs, rhs);
    let mut rep = VerificationReport::new("green_identity");
    rep.input("nodes", sys.mesh().num_nodes());
    rep.quantity("lhs", lhs);
    rep.quantity("rhs", rhs);
    rep.quantity("residual", residual);
    rep.quantity("solver_residual_u", u.residual());
    rep.quantity("solver_residual_w", w.residual());
    rep.threshold("residual", IDENTITY_TOL);
    rep.set_pass(residual <= IDENTITY_TOL);
    Ok(rep)
}

/// Neumann duality `∫ u·g = ∫ w·f` for the compatibility-projected pair:
/// `u` solves the `L` problem with data `f`, `w` the `L*` problem with `g`.
pub fn verify_neumann_duality(ns: &NeumannSolver, f: &dyn FieldEval, g: &dyn FieldEval) -> Result<VerificationReport> {
    let sys = ns.system();
    let (u, pu) = ns.solve_projected(&sys.assemble_load(Some(f), None)?, Operator::L)?;
    let (w, pw) = ns.solve_projected(&sys.assemble_load(Some(g), None)?, Operator::LStar)?;
    let lhs = pairing(&u.solution, Some(g), None);
    let rhs = pairing(&w.solution, Some(f), None);
    let residual = relative_gap(lhs, rhs);
    let orth_u = boundary_orthogonality(sys, u.solution.values(), ns.kernel(crate::neumann::KernelSide::V));
    let orth_w = boundary_orthogonality(sys, w.solution.values(), ns.kernel(crate::neumann::KernelSide::VStar));
    let mut rep = VerificationReport::new("neumann_duality");
    rep.input("nodes", sys.mesh().num_nodes());
    rep.quantity("lhs", lhs);
    rep.quantity("rhs", rhs);
    rep.quantity("residual", residual);
    rep.quantity("projection_residual", pu.residual.max(pw.residual));
    rep.quantity("orthogonality", orth_u.max(orth_w));
    rep.threshold("residual", IDENTITY_TOL);
    rep.set_pass(residual <= IDENTITY_TOL);
    Ok(rep)
}

fn compare_at_poles(u: &FemSolution, fields: &[GreenField], rep_values: &[Vec<f64>], rep: &mut VerificationReport) -> Result<()> {
    let scale = u.max_abs();
    let mut worst = 0.0f64;
    let mut trace = Vec::new();
    for (gf, r) in fields.iter().zip(rep_values) {
        let direct = u.value_at(gf.pole)?;
        let d = direct.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        trace.push(d);
        worst = worst.max(d);
    }
    let err = if scale > 0.0 { worst / scale } else { worst };
    rep.quantity("u_max", scale);
    rep.quantity("max_abs_difference", worst);
    rep.quantity("relative_error", err);
    rep.trace("abs_difference_per_pole", trace);
    rep.threshold("relative_error", REPRESENTATION_TOL);
    rep.set_pass(err <= REPRESENTATION_TOL);
    Ok(())
}

/// Direct mixed solve against the Green representation
/// `∫ G f − ∫_N G f_N` at each pole.
pub fn verify_representation(
    solver: &MixedSolver,
    dom: &Domain,
    f: Option<&dyn FieldEval>,
    f_n: Option<&dyn FieldEval>,
    poles: &[Point],
    rho: f64,
) -> Result<VerificationReport> {
    let sys = solver.system();
    let u = solver.solve(&sys.assemble_load(f, f_n)?, Operator::L, "direct solve")?;
    let fields = poles
        .iter()
        .map(|&x| approximate_green(solver, dom, x, rho))
        .collect::<Result<Vec<_>>>()?;
    let values = representation_solve(&fields, f, f_n)?;
    let mut rep = VerificationReport::new("representation");
    rep.input("poles", poles.len());
    rep.input("rho", rho);
    rep.input("nodes", sys.mesh().num_nodes());
    compare_at_poles(&u, &fields, &values, &mut rep)?;
    Ok(rep)
}

/// Neumann version: the data are projected to compatibility first, and the
/// solution is the boundary-orthogonal representative.
pub fn verify_representation_neumann(
    ns: &NeumannSolver,
    dom: &Domain,
    f: Option<&dyn FieldEval>,
    f_n: Option<&dyn FieldEval>,
    poles: &[Point],
    rho: f64,
) -> Result<VerificationReport> {
    let sys = ns.system();
    let (sol, proj) = ns.solve_projected(&sys.assemble_load(f, f_n)?, Operator::L)?;
    let fields = poles
        .iter()
        .map(|&x| neumann_green(ns, dom, x, rho, Operator::LStar))
        .collect::<Result<Vec<_>>>()?;
    let values = representation_solve(&fields, f, f_n)?;
    let mut rep = VerificationReport::new("representation_neumann");
    rep.input("poles", poles.len());
    rep.input("rho", rho);
    rep.input("nodes", sys.mesh().num_nodes());
    rep.quantity("projection_residual", proj.residual);
    compare_at_poles(&sol.solution, &fields, &values, &mut rep)?;
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryMode {
    /// `G^{αβ}(x, y)` against `G̃^{βα}(y, x)`.
    Direct,
    /// Mixed second differences over consecutive pairs, cancelling the
    /// additive constants of Neumann and free-space representatives.
    SecondDifference,
}

fn field_at<'a>(fields: &'a [GreenField], x: Point) -> Result<&'a GreenField> {
    fields
        .iter()
        .find(|g| g.pole.dist(x) <= 1e-12)
        .ok_or_else(|| Error::Analysis(format!("no Green field with pole {x}")))
}

/// Compares Green functions of `L*` solves (`lstar`) with Green functions of
/// `L` solves (`l`) at each pair `(x, y)`.
pub fn verify_symmetry(
    lstar: &[GreenField],
    l: &[GreenField],
    pairs: &[(Point, Point)],
    mode: SymmetryMode,
    tol: f64,
) -> Result<VerificationReport> {
    if pairs.is_empty() {
        return Err(Error::Analysis("no point pairs".into()));
    }
    let mut trace = Vec::new();
    for &(x, y) in pairs {
        let gx = field_at(lstar, x)?;
        if x.dist(y) < 4.0 * gx.rho {
            return Err(Error::Analysis(format!("pair {x}, {y} closer than 4ρ")));
        }
    }
    match mode {
        SymmetryMode::Direct => {
            for &(x, y) in pairs {
                let g = field_at(lstar, x)?.evaluate(y)?;
                let gt = field_at(l, y)?.evaluate(x)?;
                trace.push(entrywise_gap(&g.data, &gt.transpose().data));
            }
        }
        SymmetryMode::SecondDifference => {
            if pairs.len() < 2 {
                return Err(Error::Analysis("second differences need at least two pairs".into()));
            }
            for w in pairs.windows(2) {
                let ((x, y), (xp, yp)) = (w[0], w[1]);
                let second = |fs: &[GreenField], a: Point, ap: Point, b: Point, bp: Point| -> Result<Vec<f64>> {
                    let (fa, fap) = (field_at(fs, a)?, field_at(fs, ap)?);
                    let v = [fa.evaluate(b)?, fa.evaluate(bp)?, fap.evaluate(b)?, fap.evaluate(bp)?];
                    Ok((0..v[0].data.len())
                        .map(|k| v[0].data[k] - v[1].data[k] - v[2].data[k] + v[3].data[k])
                        .collect())
                };
                let d = second(lstar, x, xp, y, yp)?;
                let dt = second(l, y, yp, x, xp)?;
                let m = (d.len() as f64).sqrt() as usize;
                let dt_t: Vec<f64> = (0..m * m).map(|k| dt[(k % m) * m + k / m]).collect();
                trace.push(entrywise_gap(&d, &dt_t));
            }
        }
    }
    let worst = trace.iter().copied().fold(0.0, f64::max);
    let mut rep = VerificationReport::new("symmetry");
    rep.input("pairs", pairs.len());
    rep.input(
        "mode",
        match mode {
            SymmetryMode::Direct => "direct",
            SymmetryMode::SecondDifference => "second_difference",
        },
    );
    rep.quantity("max_discrepancy", worst);
    rep.trace("discrepancy_per_pair", trace);
    rep.threshold("max_discrepancy", tol);
    rep.set_pass(worst <= tol);
    Ok(rep)
}

fn entrywise_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
