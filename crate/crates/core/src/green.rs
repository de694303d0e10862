//! Approximate Green functions: mixed and Dirichlet (adjoint solves with
//! normalised indicator data), Neumann (with a kernel boundary datum), and the
//! planar fundamental solution (Dirichlet problems on large disks with
//! mean-zero data).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{local_domain, BoundaryTag, Domain, Point};
use crate::mesh::{FieldEval, Mesh, Region, TagFilter};
use crate::mixed::{Constraint, FemSolution, MixedSolver};
use crate::neumann::NeumannSolver;
use crate::operators::{assemble, AssembledSystem, CoefficientField, Operator};
use crate::report::fmt_f64;

/// Sides of the polygon standing in for the disk `B_R(x)`.
pub const FREE_SPACE_SIDES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenBc {
    Mixed,
    Dirichlet,
    Neumann,
    Free,
}

impl GreenBc {
    pub fn as_str(self) -> &'static str {
        match self {
            GreenBc::Mixed => "mixed",
            GreenBc::Dirichlet => "dirichlet",
            GreenBc::Neumann => "neumann",
            GreenBc::Free => "free",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mixed" => Some(GreenBc::Mixed),
            "dirichlet" => Some(GreenBc::Dirichlet),
            "neumann" => Some(GreenBc::Neumann),
            "free" => Some(GreenBc::Free),
            _ => None,
        }
    }
}

/// `m × m` values, `(α, β)` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenMatrix {
    pub m: usize,
    pub data: Vec<f64>,
}

impl GreenMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.m + b]
    }

    pub fn transpose(&self) -> GreenMatrix {
        let m = self.m;
        let mut data = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                data[b * m + a] = self.data[a * m + b];
            }
        }
        GreenMatrix { m, data }
    }
}

/// `G_ρ(x, ·)`: column `α` holds `G^{α·}_ρ(x, ·)`.
#[derive(Clone, Debug)]
pub struct GreenField {
    pub pole: Point,
    pub rho: f64,
    pub bc: GreenBc,
    /// `L*` for `G`, `L` for the Green function of the adjoint.
    pub operator: Operator,
    pub columns: Vec<FemSolution>,
    /// Neumann: the kernel boundary data `λ^{α·}_ρ`, one per column.
    pub lambdas: Vec<Vec<f64>>,
    /// Free space: radius of the computational disk.
    pub disk_radius: Option<f64>,
    /// `|Ω_ρ(x)|` as integrated on the mesh.
    pub region_area: f64,
    /// Free space: `∫ f_ρ` as integrated on the mesh.
    pub data_integral: Option<f64>,
    pub h_local: f64,
}

impl GreenField {
    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.columns[0].mesh()
    }

    /// Whether `y` is closer to the pole than `2ρ`, where values are
    /// dominated by the averaging.
    pub fn too_close(&self, y: Point) -> bool {
        self.pole.dist(y) < 2.0 * self.rho
    }

    /// `G^{αβ}_ρ(x, y)` by P1 interpolation.
    pub fn evaluate(&self, y: Point) -> Result<GreenMatrix> {
        let m = self.m();
        let mut data = vec![0.0; m * m];
        for (a, col) in self.columns.iter().enumerate() {
            let v = col
                .value_at(y)
                .map_err(|_| Error::Green(format!("evaluation point {y} outside the mesh")))?;
            data[a * m..(a + 1) * m].copy_from_slice(&v);
        }
        Ok(GreenMatrix { m, data })
    }

    /// `∫ G^{α·}(x, y)·a(y) dy` for every `α`, over the given quadrature
    /// region.
    pub fn pair(&self, region: &Region, a: &dyn FieldEval) -> Vec<f64> {
        let quad = self.mesh().region_quadrature(region);
        let m = self.m();
        let mut abuf = vec![0.0; m];
        let mut gbuf = vec![0.0; m];
        let mut out = vec![0.0; m];
        for q in &quad {
            a.eval(q, &mut abuf);
            for (alpha, col) in self.columns.iter().enumerate() {
                col.eval(q, &mut gbuf);
                out[alpha] += q.weight * gbuf.iter().zip(&abuf).map(|(g, f)| g * f).sum::<f64>();
            }
        }
        out
    }
}

/// Rejects `ρ` below twice the local mesh size at `x`.
pub fn check_rho(mesh: &Mesh, x: Point, rho: f64) -> Result<f64> {
    let h = mesh
        .local_h(x)
        .ok_or_else(|| Error::Green(format!("pole {x} outside the mesh")))?;
    if !(rho >= 2.0 * h) {
        return Err(Error::Green(format!(
            "rho under-resolved (rho = {rho} < 2·local h = {:.4})",
            2.0 * h
        )));
    }
    Ok(h)
}

fn unit(m: usize, a: usize, scale: f64) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[a] = scale;
    e
}

/// `G_ρ(x, ·)` for the mixed (or, with a Dirichlet-constrained solver, the
/// pure Dirichlet) problem: `m` adjoint solves with data
/// `e_α χ_{Ω_ρ(x)} / |Ω_ρ(x)|` and zero Neumann data.
pub fn approximate_green(solver: &MixedSolver, dom: &Domain, x: Point, rho: f64) -> Result<GreenField> {
    approximate_green_for(solver, dom, x, rho, Operator::LStar)
}

/// As [`approximate_green`], solving with `op`; `Operator::L` yields the
/// Green function of `L*`.
pub fn approximate_green_for(solver: &MixedSolver, dom: &Domain, x: Point, rho: f64, op: Operator) -> Result<GreenField> {
    let sys = solver.system();
    let mesh = sys.mesh();
    let h_local = check_rho(mesh, x, rho)?;
    let ld = local_domain(dom, x, rho)?;
    let region = ld.region();
    let area = mesh.region_area(&region);
    if area <= 0.0 {
        return Err(Error::Green("empty local domain".into()));
    }
    let m = sys.m();
    let mut columns = Vec::with_capacity(m);
    for a in 0..m {
        let load = sys.region_load(&region, &unit(m, a, 1.0 / area))?;
        columns.push(solver.solve(&load, op, &format!("green column {a} at {x}"))?);
    }
    let bc = match solver.constraint() {
        Constraint::Mixed => GreenBc::Mixed,
        Constraint::Dirichlet => GreenBc::Dirichlet,
    };
    Ok(GreenField {
        pole: x,
        rho,
        bc,
        operator: op,
        columns,
        lambdas: Vec::new(),
        disk_radius: None,
        region_area: area,
        data_integral: None,
        h_local,
    })
}

/// Neumann Green function: for each `α`, the kernel datum `λ^{α·}_ρ` makes
/// `e_α χ_{Ω_ρ(x)}/|Ω_ρ(x)|` compatible, then a constrained adjoint solve.
pub fn neumann_green(ns: &NeumannSolver, dom: &Domain, x: Point, rho: f64, op: Operator) -> Result<GreenField> {
    let sys = ns.system();
    let mesh = sys.mesh();
    let h_local = check_rho(mesh, x, rho)?;
    let ld = local_domain(dom, x, rho)?;
    let region = ld.region();
    let area = mesh.region_area(&region);
    let m = sys.m();
    let mut columns = Vec::with_capacity(m);
    let mut lambdas = Vec::with_capacity(m);
    for a in 0..m {
        let load = sys.region_load(&region, &unit(m, a, 1.0 / area))?;
        let (sol, proj) = ns.solve_projected(&load, op)?;
        lambdas.push(proj.lambda);
        columns.push(sol.solution);
    }
    Ok(GreenField {
        pole: x,
        rho,
        bc: GreenBc::Neumann,
        operator: op,
        columns,
        lambdas,
        disk_radius: None,
        region_area: area,
        data_integral: None,
        h_local,
    })
}

/// The mean-zero data `f_ρ = (1/πρ²)χ_{B_ρ} − (ρ²/3π)χ_{B_{2/ρ}∖B_{1/ρ}}` as a
/// function of the distance to the pole.
pub fn f_rho(rho: f64, r: f64) -> f64 {
    let mut v = 0.0;
    if r <= rho {
        v += 1.0 / (PI * rho * rho);
    }
    if r >= 1.0 / rho && r <= 2.0 / rho {
        v -= rho * rho / (3.0 * PI);
    }
    v
}

/// Options for the free-space construction.
#[derive(Clone, Copy, Debug)]
pub struct FreeSpaceOptions {
    /// Mesh size required on `B_core(x)`.
    pub h_near: f64,
    /// Radius of the uniformly fine core; at least 2.
    pub core: f64,
}

impl FreeSpaceOptions {
    pub fn new(h_near: f64) -> Self {
        Self { h_near, core: 2.0 }
    }
}

/// Graded mesh of the 256-gon `B_R(x)`: size `h_near` on `B_core(x)`,
/// doubling with each dyadic annulus outwards.
pub fn free_space_mesh(x: Point, radius: f64, opts: FreeSpaceOptions) -> Result<(Domain, Mesh)> {
    let dom = Domain::regular_polygon(x, radius, FREE_SPACE_SIDES, BoundaryTag::Dirichlet, 4.0, radius)?;
    let core = opts.core.max(2.0);
    if core >= radius {
        return Err(Error::Green(format!("disk radius {radius} must exceed the core radius {core}")));
    }
    let mut levels = (radius / core).log2().ceil().max(1.0) as usize;
    // the coarse size must stay below r0 = R
    while levels > 1 && opts.h_near * 2f64.powi(levels as i32) >= radius / 4.0 {
        levels -= 1;
    }
    let h_far = opts.h_near * 2f64.powi(levels as i32);
    let mesh = Mesh::triangulate(&dom, h_far)?.refine_toward(x, levels)?;
    Ok((dom, mesh))
}

/// Normalised approximation of the fundamental solution with pole `x`: for
/// each `α`, the Dirichlet problem on the 256-gon `B_R(x)` with data
/// `f_ρ e_α`, minus its mean over `B_1(x)`.
pub fn fundamental_solution(cf: &CoefficientField, x: Point, rho: f64, radius: f64, h_near: f64) -> Result<GreenField> {
    fundamental_solution_with(cf, x, rho, radius, FreeSpaceOptions::new(h_near))
}

pub fn fundamental_solution_with(
    cf: &CoefficientField,
    x: Point,
    rho: f64,
    radius: f64,
    opts: FreeSpaceOptions,
) -> Result<GreenField> {
    if !(rho > 0.0) {
        return Err(Error::Green("rho must be positive".into()));
    }
    if radius < 4.0 / rho * (1.0 - 1e-12) {
        return Err(Error::Green(format!(
            "disk radius R = {radius} too small for rho = {rho} (need R ≥ 4/rho = {})",
            4.0 / rho
        )));
    }
    let (_dom, mesh) = free_space_mesh(x, radius, opts)?;
    let mesh = Arc::new(mesh);
    let h_local = check_rho(&mesh, x, rho)?;
    let sys = Arc::new(assemble(mesh.clone(), cf)?);
    let solver = MixedSolver::with_constraint(sys.clone(), Constraint::Dirichlet)?;
    let m = cf.m();
    let inner = Region::Disk { center: x, radius: rho };
    let outer = Region::Disk { center: x, radius: 2.0 / rho };
    let hole = Region::Disk { center: x, radius: 1.0 / rho };
    let (c_in, c_out) = (1.0 / (PI * rho * rho), rho * rho / (3.0 * PI));
    let data_integral =
        c_in * mesh.region_area(&inner) - c_out * (mesh.region_area(&outer) - mesh.region_area(&hole));
    let unit_ball = Region::Disk { center: x, radius: 1.0 };
    let ball_area = mesh.region_area(&unit_ball);
    let mut columns = Vec::with_capacity(m);
    for a in 0..m {
        let mut load = sys.region_load(&inner, &unit(m, a, c_in))?;
        let l_out = sys.region_load(&outer, &unit(m, a, -c_out))?;
        let l_hole = sys.region_load(&hole, &unit(m, a, -c_out))?;
        for ((l, o), h) in load.iter_mut().zip(&l_out).zip(&l_hole) {
            *l += o - h;
        }
        let col = solver.solve(&load, Operator::LStar, &format!("fundamental column {a} at {x}"))?;
        let mean = mean_over(&col, &unit_ball, ball_area);
        let values: Vec<f64> = col
            .values()
            .chunks(m)
            .flat_map(|v| v.iter().zip(&mean).map(|(a, b)| a - b).collect::<Vec<_>>())
            .collect();
        columns.push(col.with_values(values, &format!("fundamental column {a}, B_1 mean removed")));
    }
    Ok(GreenField {
        pole: x,
        rho,
        bc: GreenBc::Free,
        operator: Operator::LStar,
        columns,
        lambdas: Vec::new(),
        disk_radius: Some(radius),
        region_area: mesh.region_area(&inner),
        data_integral: Some(data_integral),
        h_local,
    })
}

fn mean_over(u: &FemSolution, region: &Region, area: f64) -> Vec<f64> {
    let m = u.m();
    let mut acc = vec![0.0; m];
    let mut buf = vec![0.0; m];
    for q in u.mesh().region_quadrature(region) {
        u.eval(&q, &mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += q.weight * b;
        }
    }
    acc.into_iter().map(|a| a / area).collect()
}

/// `u^α(x) = ∫ G^{αβ}(x, y) f^β(y) dy − ∫_N G^{αβ}(x, y) f_N^β(y) dσ` for each
/// field; one `m`-vector per pole.
pub fn representation_solve(
    fields: &[GreenField],
    f: Option<&dyn FieldEval>,
    f_n: Option<&dyn FieldEval>,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(fields.len());
    for gf in fields {
        let m = gf.m();
        let mut u = vec![0.0; m];
        if let Some(f) = f {
            if f.components() != m {
                return Err(Error::Green("data and Green function sizes differ".into()));
            }
            let v = gf.pair(&Region::All, f);
            for (a, b) in u.iter_mut().zip(v) {
                *a += b;
            }
        }
        if let Some(g) = f_n {
            let quad = gf.mesh().boundary_quadrature(TagFilter::Neumann);
            let mut gb = vec![0.0; m];
            let mut cb = vec![0.0; m];
            for q in &quad {
                g.eval(q, &mut gb);
                for (a, col) in gf.columns.iter().enumerate() {
                    col.eval(q, &mut cb);
                    u[a] -= q.weight * cb.iter().zip(&gb).map(|(x, y)| x * y).sum::<f64>();
                }
            }
        }
        out.push(u);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreenEntry {
    pub pole: Point,
    pub y: Point,
    pub values: GreenMatrix,
}

/// Sampled values of one or more Green fields away from their poles.
#[derive(Clone, Debug)]
pub struct GreenTable {
    pub entries: Vec<GreenEntry>,
    pub rho: f64,
    pub h: f64,
    pub bc: GreenBc,
}

impl GreenTable {
    /// Tabulates every field at every point with `|x − y| ≥ 2ρ`; closer
    /// points are skipped.
    pub fn tabulate(fields: &[GreenField], points: &[Point]) -> Result<GreenTable> {
        let first = fields.first().ok_or_else(|| Error::Green("no Green fields".into()))?;
        let mut entries = Vec::new();
        for gf in fields {
            for &y in points {
                if gf.too_close(y) {
                    continue;
                }
                let values = gf.evaluate(y)?;
                if values.data.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Green(format!("non-finite value at {y}")));
                }
                entries.push(GreenEntry { pole: gf.pole, y, values });
            }
        }
        Ok(GreenTable {
            entries,
            rho: first.rho,
            h: first.mesh().h(),
            bc: first.bc,
        })
    }

    pub const CSV_HEADER: &'static str = "pole_x,pole_y,y1,y2,alpha,beta,value,rho,h,bc";

    /// Rows without the header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            for a in 0..e.values.m {
                for b in 0..e.values.m {
                    s.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{}\n",
                        fmt_f64(e.pole.x),
                        fmt_f64(e.pole.y),
                        fmt_f64(e.y.x),
                        fmt_f64(e.y.y),
                        a + 1,
                        b + 1,
                        fmt_f64(e.values.get(a, b)),
                        fmt_f64(self.rho),
                        fmt_f64(self.h),
                        self.bc.as_str()
                    ));
                }
            }
        }
        s
    }
}

/// Convenience: assemble and factor the mixed system on `mesh`.
pub fn mixed_setup(mesh: Arc<Mesh>, cf: &CoefficientField, constraint: Constraint) -> Result<MixedSolver> {
    let sys: Arc<AssembledSystem> = Arc::new(assemble(mesh, cf)?);
    MixedSolver::with_constraint(sys, constraint)
}
