//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 when a check fails or the computation
//! errors, 2 on usage or configuration errors. Every error is reported as a
//! single line on stderr.

use std::ffi::OsString;
use std::f64::consts::TAU;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    bmo_norm, fit_log_singularity, meyers_exponent, verify_green_identity, verify_inequality, verify_neumann_duality,
    verify_representation, verify_representation_neumann, verify_symmetry, BmoSampling, InequalityConfig,
    InequalityKind, MeyersProblem, SmoothField, SymmetryMode, IDENTITY_TOL,
};
use crate::config::{parse_point, RawConfig, RunConfig};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{check_corkscrew, BoundaryTag, Domain, Point};
use crate::green::{
    approximate_green_for, fundamental_solution, mixed_setup, neumann_green, GreenBc, GreenField, GreenTable,
};
use crate::io::{self, config_hash, Header, OutputDir};
use crate::mesh::{FieldEval, FnField, Mesh};
use crate::mixed::{Constraint, FemSolution, MixedSolver};
use crate::neumann::NeumannSolver;
use crate::operators::{assemble, CoefficientField, Operator};
use crate::report::VerificationReport;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Side of the default evaluation grid of `green`.
const GRID_POINTS: usize = 8;
const BMO_GRID: usize = 6;
const LOG_RADII: usize = 6;
const ELLIPTICITY_SAMPLES: usize = 32;
const CORKSCREW_RADII: usize = 6;

#[derive(Parser, Debug)]
#[command(name = "greenfem", version, about = "Finite-element Green functions and their estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the mixed problem (pure Neumann when D is empty) with the configured data.
    Solve(RunArgs),
    /// Tabulate approximate Green functions of a bounded domain.
    Green(RunArgs),
    /// Tabulate Green functions of the pure Neumann problem.
    NeumannGreen(RunArgs),
    /// Tabulate the normalised free-space fundamental solution.
    Fundamental(RunArgs),
    /// Run verification checks and write reports.
    Verify(RunArgs),
    /// Summarise the reports written by `verify`.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Domain file.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mesh size.
    #[arg(long)]
    h: Option<String>,
    /// Averaging radius, absolute or as a multiple of h (`4h`).
    #[arg(long)]
    rho: Option<String>,
    /// Pole `x,y`; repeat for several poles.
    #[arg(long = "pole", value_name = "X,Y", allow_hyphen_values = true)]
    poles: Vec<String>,
    /// mixed, dirichlet, neumann or free.
    #[arg(long)]
    bc: Option<String>,
    /// Comma-separated check names.
    #[arg(long)]
    checks: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated mesh sizes for the Meyers diagnostic.
    #[arg(long)]
    levels: Option<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory written by `verify`.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Errors in the inputs map to [`EXIT_USAGE`], the rest to [`EXIT_FAILED`].
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Precondition(_) | Error::Domain(_) | Error::Coefficients(_) | Error::Expr(_) => {
            EXIT_USAGE
        }
        _ => EXIT_FAILED,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run_command<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    let text = e.render().to_string();
                    let line = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                    eprintln!("usage: {line}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Green(a) => green(a, None),
        Command::NeumannGreen(a) => green(a, Some(GreenBc::Neumann)),
        Command::Fundamental(a) => fundamental(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_string().replace('\n', " "));
            exit_code(&e)
        }
    }
}

/// Everything a subcommand needs once the inputs are validated.
struct Setup {
    cfg: RunConfig,
    h: f64,
    rho: f64,
    domain: Option<Domain>,
    out: OutputDir,
}

fn load_raw(args: &RunArgs) -> Result<(RawConfig, Option<PathBuf>)> {
    let (mut raw, base) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::Config(format!("config file not found: {}", path.display())),
                _ => Error::Config(format!("cannot read config file {}: {e}", path.display())),
            })?;
            (RawConfig::parse(&text)?, path.parent().map(|p| p.to_path_buf()))
        }
        None => (RawConfig::default(), None),
    };
    let flags = [
        ("h", args.h.clone()),
        ("rho", args.rho.clone()),
        ("bc", args.bc.clone()),
        ("checks", args.checks.clone()),
        ("seed", args.seed.clone()),
        ("levels", args.levels.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("domain", args.domain.as_ref().map(|p| p.display().to_string())),
        ("poles", (!args.poles.is_empty()).then(|| args.poles.join("; "))),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            raw.set(k, &v)?;
        }
    }
    Ok((raw, base))
}

/// Validates the inputs in a fixed order: config, `ρ ≥ 4h`, domain file,
/// `h < r0`. The free-space construction measures `h` as `free.h_near`.
fn setup(args: &RunArgs, need_domain: bool, free_space: bool) -> Result<Setup> {
    let (raw, base) = load_raw(args)?;
    let mut cfg = RunConfig::from_raw(&raw, base.as_deref())?;
    if let Some(d) = &args.domain {
        cfg.domain = Some(d.clone());
    }
    let h = match (free_space, cfg.free_h_near) {
        (true, Some(h)) => h,
        _ => cfg.require_h()?,
    };
    let rho = cfg.rho.resolve(h)?;
    let (domain, text) = if need_domain {
        let (d, t) = cfg.load_domain()?;
        if h >= d.r0() {
            return Err(Error::Config(format!("h = {h} must lie below r0 = {}", d.r0())));
        }
        (Some(d), Some(t))
    } else {
        (None, None)
    };
    // the output location and the domain path do not enter the hash, the
    // domain contents do
    let mut hashed = raw.clone();
    hashed.remove("out");
    hashed.remove("domain");
    let header = Header::new(config_hash(&hashed.canonical(), text.as_deref()), cfg.seed);
    let out = OutputDir::create(&cfg.out, header)?;
    Ok(Setup {
        cfg,
        h,
        rho,
        domain,
        out,
    })
}

fn announce(path: PathBuf) {
    println!("wrote {}", path.display());
}

fn retagged(dom: &Domain, tag: BoundaryTag) -> Result<Domain> {
    Domain::new(dom.vertices().to_vec(), vec![tag; dom.num_edges()], dom.m_const(), dom.r0())
}

fn expr_field(exprs: &[Expr]) -> FnField<impl Fn(Point, &mut [f64]) + Sync + Send + '_> {
    FnField::new(exprs.len(), move |p: Point, o: &mut [f64]| {
        for (v, e) in o.iter_mut().zip(exprs) {
            *v = e.eval(p);
        }
    })
}

fn constants(exprs: &[Expr], key: &str) -> Result<Vec<f64>> {
    exprs
        .iter()
        .map(|e| e.as_const().ok_or_else(|| Error::Config(format!("`{key}` must be constant for this check"))))
        .collect()
}

/// Cell-centred `n × n` grid over the bounding box, restricted to the domain.
fn grid_points(dom: &Domain, n: usize) -> Vec<Point> {
    let (lo, hi) = dom.bounding_box();
    (0..n)
        .flat_map(|j| {
            (0..n).map(move |i| {
                Point::new(
                    lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / n as f64,
                    lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / n as f64,
                )
            })
        })
        .filter(|p| dom.contains(*p))
        .collect()
}

fn require_poles(cfg: &RunConfig) -> Result<&[Point]> {
    if cfg.poles.is_empty() {
        return Err(Error::Config("no poles given (--pole x,y)".into()));
    }
    Ok(&cfg.poles)
}

fn solve(args: RunArgs) -> Result<u8> {
    let s = setup(&args, true, false)?;
    let dom = s.domain.as_ref().unwrap();
    let cf = s.cfg.coeff.build(Some(dom))?;
    let mesh = Arc::new(Mesh::triangulate(dom, s.h)?);
    let sys = Arc::new(assemble(mesh.clone(), &cf)?);
    let f = s.cfg.f.as_deref().map(expr_field);
    let f_n = s.cfg.f_n.as_deref().map(expr_field);
    let load = sys.assemble_load(f.as_ref().map(|g| g as &dyn FieldEval), f_n.as_ref().map(|g| g as &dyn FieldEval))?;
    let mut rep = VerificationReport::new("solve");
    let u: FemSolution = if dom.has_dirichlet() {
        rep.input("problem", "mixed");
        MixedSolver::new(sys)?.solve(&load, Operator::L, "solve")?
    } else {
        rep.input("problem", "neumann");
        let (sol, proj) = NeumannSolver::new(sys)?.solve_projected(&load, Operator::L)?;
        rep.quantity("compatibility_violation", sol.compatibility);
        rep.quantity("kernel_datum_norm", proj.lambda.iter().map(|v| v * v).sum::<f64>().sqrt());
        sol.solution
    };
    rep.input("h", s.h);
    rep.input("nodes", mesh.num_nodes());
    rep.input("coefficients", cf.kind().as_str());
    rep.quantity("residual", u.residual());
    rep.quantity("max_abs", u.max_abs());
    for (i, &p) in s.cfg.points.iter().enumerate() {
        rep.input(&format!("point{i}"), p);
        for (a, v) in u.value_at(p)?.into_iter().enumerate() {
            rep.quantity(&format!("u{}_point{i}", a + 1), v);
        }
    }
    rep.set_pass(u.residual().is_finite() && u.values().iter().all(|v| v.is_finite()));
    announce(s.out.write("mesh.txt", &mesh.to_text())?);
    announce(s.out.write("solution.csv", &io::solution_csv(&u))?);
    announce(s.out.write("report.txt", &rep.to_text())?);
    Ok(if rep.passed() { EXIT_OK } else { EXIT_FAILED })
}

/// Green fields of `L*` solves (`op = LStar`) or `L` solves for every pole.
fn bounded_green(
    dom: &Domain,
    cf: &CoefficientField,
    h: f64,
    bc: GreenBc,
    poles: &[Point],
    rho: f64,
    op: Operator,
) -> Result<(Domain, Arc<Mesh>, Vec<GreenField>)> {
    let dom = match bc {
        GreenBc::Mixed => dom.clone(),
        GreenBc::Dirichlet => retagged(dom, BoundaryTag::Dirichlet)?,
        GreenBc::Neumann => retagged(dom, BoundaryTag::Neumann)?,
        GreenBc::Free => return Err(Error::Config("bc = free is served by the `fundamental` subcommand".into())),
    };
    if bc == GreenBc::Mixed && !dom.has_dirichlet() {
        return Err(Error::Config("the mixed problem needs a non-empty D; use bc = neumann".into()));
    }
    let mesh = Arc::new(Mesh::triangulate(&dom, h)?);
    let fields = match bc {
        GreenBc::Neumann => {
            let ns = NeumannSolver::new(Arc::new(assemble(mesh.clone(), cf)?))?;
            poles
                .iter()
                .map(|&x| neumann_green(&ns, &dom, x, rho, op))
                .collect::<Result<Vec<_>>>()?
        }
        _ => {
            let c = if bc == GreenBc::Dirichlet { Constraint::Dirichlet } else { Constraint::Mixed };
            let solver = mixed_setup(mesh.clone(), cf, c)?;
            poles
                .iter()
                .map(|&x| approximate_green_for(&solver, &dom, x, rho, op))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok((dom, mesh, fields))
}

fn green(args: RunArgs, force: Option<GreenBc>) -> Result<u8> {
    let s = setup(&args, true, false)?;
    let dom = s.domain.as_ref().unwrap();
    let bc = force.unwrap_or(s.cfg.bc);
    let cf = s.cfg.coeff.build(Some(dom))?;
    let poles = require_poles(&s.cfg)?;
    let (dom, mesh, fields) = bounded_green(dom, &cf, s.h, bc, poles, s.rho, Operator::LStar)?;
    let points = if s.cfg.points.is_empty() { grid_points(&dom, GRID_POINTS) } else { s.cfg.points.clone() };
    let table = GreenTable::tabulate(&fields, &points)?;
    announce(s.out.write("mesh.txt", &mesh.to_text())?);
    announce(s.out.write("green.csv", &io::green_csv(&table))?);
    Ok(EXIT_OK)
}

fn fundamental(args: RunArgs) -> Result<u8> {
    let mut s = setup(&args, false, true)?;
    let cf = s.cfg.coeff.build(None)?;
    let radius = s.cfg.free_radius.unwrap_or((4.0 / s.rho).max(16.0));
    if radius < 4.0 / s.rho * (1.0 - 1e-12) {
        return Err(Error::Config(format!("`free.radius` = {radius} must be at least 4/rho = {}", 4.0 / s.rho)));
    }
    if s.cfg.poles.is_empty() {
        s.cfg.poles.push(Point::default());
    }
    let fields = s
        .cfg
        .poles
        .iter()
        .map(|&x| fundamental_solution(&cf, x, s.rho, radius, s.h))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<Point> = if s.cfg.points.is_empty() {
        // rays through the first pole at dyadic radii inside B_{R/2}
        let x = s.cfg.poles[0];
        let mut pts = Vec::new();
        let mut r = 2.0 * s.rho;
        while r <= radius / 2.0 {
            for k in 0..4 {
                let t = TAU * k as f64 / 4.0;
                pts.push(x + Point::new(t.cos(), t.sin()) * r);
            }
            r *= 2.0;
        }
        pts
    } else {
        s.cfg.points.clone()
    };
    let table = GreenTable::tabulate(&fields, &points)?;
    let mut rep = VerificationReport::new("fundamental");
    rep.input("radius", radius);
    rep.input("h_near", s.h);
    rep.input("rho", s.rho);
    for (i, gf) in fields.iter().enumerate() {
        rep.quantity(&format!("data_integral_pole{i}"), gf.data_integral.unwrap_or(f64::NAN));
    }
    rep.set_pass(table.entries.iter().all(|e| e.values.data.iter().all(|v| v.is_finite())));
    announce(s.out.write("green.csv", &io::green_csv(&table))?);
    announce(s.out.write("report.txt", &rep.to_text())?);
    Ok(if rep.passed() { EXIT_OK } else { EXIT_FAILED })
}

/// Inputs shared by the individual checks.
struct CheckContext<'a> {
    cfg: &'a RunConfig,
    dom: &'a Domain,
    cf: &'a CoefficientField,
    h: f64,
    rho: f64,
}

impl CheckContext<'_> {
    fn draws(&self) -> usize {
        self.cfg.samples
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed)
    }

    fn run(&self, name: &str) -> Result<VerificationReport> {
        if let Some(kind) = InequalityKind::parse(name) {
            let icfg = InequalityConfig {
                dom: self.dom.clone(),
                cf: self.cf.clone(),
                h: self.h,
                samples: self.cfg.samples,
                seed: self.cfg.seed,
                t: self.cfg.lt_t,
            };
            return verify_inequality(kind, &icfg);
        }
        match name {
            "green_identity" => self.green_identity(),
            "neumann_duality" => self.neumann_duality(),
            "representation" => self.representation(),
            "symmetry" => self.symmetry(),
            "bmo" => self.bmo(),
            "log_singularity" => self.log_singularity(),
            "meyers" => self.meyers(),
            "ellipticity" => self.cf.verify_ellipticity(self.dom, ELLIPTICITY_SAMPLES),
            "corkscrew" => check_corkscrew(self.dom, CORKSCREW_RADII),
            _ => Err(Error::Config(format!("unknown check `{name}`"))),
        }
    }

    fn green_identity(&self) -> Result<VerificationReport> {
        if !self.dom.has_dirichlet() {
            return Err(Error::Analysis("green_identity needs a non-empty D; see neumann_duality".into()));
        }
        let mesh = Arc::new(Mesh::triangulate(self.dom, self.h)?);
        let solver = mixed_setup(mesh, self.cf, Constraint::Mixed)?;
        let mut rng = self.rng();
        let m = self.cf.m();
        let mut residuals = Vec::with_capacity(self.draws());
        for _ in 0..self.draws() {
            let d: Vec<SmoothField> = (0..4).map(|_| SmoothField::random(&mut rng, m, 3, 8.0, None)).collect();
            let rep = verify_green_identity(&solver, Some(&d[0]), Some(&d[1]), Some(&d[2]), Some(&d[3]))?;
            residuals.push(rep.get("residual").unwrap_or(f64::NAN));
        }
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        let mut rep = VerificationReport::new("green_identity");
        rep.input("draws", residuals.len());
        rep.input("seed", self.cfg.seed);
        rep.quantity("max_residual", worst);
        rep.threshold("max_residual", IDENTITY_TOL);
        rep.trace("residuals", residuals.clone());
        rep.set_pass(residuals.iter().all(|r| *r <= IDENTITY_TOL));
        Ok(rep)
    }

    fn neumann_duality(&self) -> Result<VerificationReport> {
        let dom = retagged(self.dom, BoundaryTag::Neumann)?;
        let mesh = Arc::new(Mesh::triangulate(&dom, self.h)?);
        let ns = NeumannSolver::new(Arc::new(assemble(mesh, self.cf)?))?;
        let mut rng = self.rng();
        let m = self.cf.m();
        let (mut worst, mut pass) = ([0.0f64; 3], true);
        for _ in 0..self.draws() {
            let f = SmoothField::random(&mut rng, m, 3, 8.0, None);
            let g = SmoothField::random(&mut rng, m, 3, 8.0, None);
            let rep = verify_neumann_duality(&ns, &f, &g)?;
            for (w, k) in worst.iter_mut().zip(["residual", "projection_residual", "orthogonality"]) {
                *w = w.max(rep.get(k).unwrap_or(f64::NAN));
            }
            pass &= rep.passed();
        }
        let mut rep = VerificationReport::new("neumann_duality");
        rep.input("draws", self.draws());
        rep.input("seed", self.cfg.seed);
        rep.quantity("max_residual", worst[0]);
        rep.quantity("max_projection_residual", worst[1]);
        rep.quantity("max_orthogonality", worst[2]);
        rep.threshold("max_residual", IDENTITY_TOL);
        rep.set_pass(pass);
        Ok(rep)
    }

    fn representation(&self) -> Result<VerificationReport> {
        let poles = require_poles(self.cfg)?;
        let f = self.cfg.f.as_deref().map(expr_field);
        let f_n = self.cfg.f_n.as_deref().map(expr_field);
        let (f, f_n) = (f.as_ref().map(|g| g as &dyn FieldEval), f_n.as_ref().map(|g| g as &dyn FieldEval));
        let mesh = Arc::new(Mesh::triangulate(self.dom, self.h)?);
        if self.dom.has_dirichlet() {
            let solver = mixed_setup(mesh, self.cf, Constraint::Mixed)?;
            verify_representation(&solver, self.dom, f, f_n, poles, self.rho)
        } else {
            let ns = NeumannSolver::new(Arc::new(assemble(mesh, self.cf)?))?;
            verify_representation_neumann(&ns, self.dom, f, f_n, poles, self.rho)
        }
    }

    fn symmetry(&self) -> Result<VerificationReport> {
        let poles = require_poles(self.cfg)?;
        let mut pairs = Vec::new();
        for (i, &x) in poles.iter().enumerate() {
            for &y in &poles[i + 1..] {
                if x.dist(y) >= 4.0 * self.rho {
                    pairs.push((x, y));
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::Analysis("symmetry needs two poles at least 4 rho apart".into()));
        }
        let bc = if self.dom.has_dirichlet() { GreenBc::Mixed } else { GreenBc::Neumann };
        let (_, _, lstar) = bounded_green(self.dom, self.cf, self.h, bc, poles, self.rho, Operator::LStar)?;
        let (_, _, l) = bounded_green(self.dom, self.cf, self.h, bc, poles, self.rho, Operator::L)?;
        let mode = if bc == GreenBc::Mixed { SymmetryMode::Direct } else { SymmetryMode::SecondDifference };
        verify_symmetry(&lstar, &l, &pairs, mode, self.cfg.symmetry_tol)
    }

    fn first_pole_field(&self) -> Result<GreenField> {
        let x = require_poles(self.cfg)?[0];
        let bc = if self.dom.has_dirichlet() { GreenBc::Mixed } else { GreenBc::Neumann };
        let (_, _, mut fields) = bounded_green(self.dom, self.cf, self.h, bc, &[x], self.rho, Operator::LStar)?;
        Ok(fields.remove(0))
    }

    fn bmo(&self) -> Result<VerificationReport> {
        let gf = self.first_pole_field()?;
        let mut sampling = BmoSampling::new(BMO_GRID, self.h);
        sampling.extra_centers.push(gf.pole);
        let mut rep = VerificationReport::new("bmo");
        rep.input("pole", gf.pole);
        rep.input("rho", self.rho);
        rep.input("grid", BMO_GRID);
        let mut pass = true;
        for (a, col) in gf.columns.iter().enumerate() {
            let est = bmo_norm(col, self.dom, &sampling)?;
            if a == 0 {
                rep.input("centers", est.centers);
                rep.trace("radii", est.radii.clone());
            }
            rep.quantity(&format!("norm_column{}", a + 1), est.norm);
            pass &= est.norm.is_finite();
        }
        rep.note("sampled supremum; finite values pass");
        rep.set_pass(pass);
        Ok(rep)
    }

    fn log_singularity(&self) -> Result<VerificationReport> {
        let gf = self.first_pole_field()?;
        let (dist, _) = self.dom.closest_boundary_point(gf.pole);
        let (r_min, r_max) = (2.0 * self.rho, 0.75 * dist);
        if r_max <= 1.5 * r_min {
            return Err(Error::Analysis(format!(
                "pole too close to the boundary for a log fit: radii [{r_min}, {r_max}]"
            )));
        }
        let q = (r_max / r_min).powf(1.0 / (LOG_RADII - 1) as f64);
        let radii: Vec<f64> = (0..LOG_RADII).map(|k| r_min * q.powi(k as i32)).collect();
        let fits = fit_log_singularity(&gf, &radii)?;
        let mut rep = VerificationReport::new("log_singularity");
        rep.input("pole", gf.pole);
        rep.trace("radii", radii);
        for (a, fit) in fits.iter().enumerate() {
            rep.quantity(&format!("slope{}", a + 1), fit.slope);
            rep.quantity(&format!("intercept{}", a + 1), fit.intercept);
            rep.quantity(&format!("r2_{}", a + 1), fit.r2);
        }
        rep.set_pass(fits.iter().all(|f| f.slope.is_finite() && f.intercept.is_finite()));
        Ok(rep)
    }

    fn meyers(&self) -> Result<VerificationReport> {
        let levels = if self.cfg.levels.is_empty() {
            vec![self.h, self.h / 2.0, self.h / 4.0]
        } else {
            self.cfg.levels.clone()
        };
        let problem = MeyersProblem {
            dom: self.dom.clone(),
            cf: self.cf.clone(),
            f: match &self.cfg.f {
                Some(f) => constants(f, "data.f")?,
                None => vec![1.0; self.cf.m()],
            },
            f_n: self.cfg.f_n.as_deref().map(|g| constants(g, "data.f_n")).transpose()?,
            expected: None,
        };
        meyers_exponent(&problem, &levels, &self.cfg.t_grid)
    }
}

fn verify(args: RunArgs) -> Result<u8> {
    let s = setup(&args, true, false)?;
    if s.cfg.checks.is_empty() {
        return Err(Error::Config("no checks given (--checks)".into()));
    }
    let dom = s.domain.as_ref().unwrap();
    let cf = s.cfg.coeff.build(Some(dom))?;
    let ctx = CheckContext {
        cfg: &s.cfg,
        dom,
        cf: &cf,
        h: s.h,
        rho: s.rho,
    };
    let mut reports = Vec::with_capacity(s.cfg.checks.len());
    for name in &s.cfg.checks {
        let rep = match ctx.run(name) {
            Ok(r) => r,
            Err(e) => {
                let mut r = VerificationReport::new(name);
                r.note(&format!("error: {e}"));
                r.set_pass(false);
                r
            }
        };
        println!("{} {}", rep.kind, if rep.passed() { "PASS" } else { "FAIL" });
        reports.push(rep);
    }
    announce(s.out.write("report.txt", &io::reports_text(&reports))?);
    announce(s.out.write("report.csv", &io::reports_csv(&reports))?);
    Ok(if reports.iter().all(|r| r.passed()) { EXIT_OK } else { EXIT_FAILED })
}

fn report(args: ReportArgs) -> Result<u8> {
    let (header, body) = io::read_output(&args.out.join("report.csv")).map_err(|e| match e {
        Error::Config(m) if m.starts_with("file not found") => Error::Config(format!("report {m}")),
        other => other,
    })?;
    let outcomes = io::report_outcomes(&body)?;
    let mut summary = String::from("check,pass\n");
    for (check, pass) in &outcomes {
        summary.push_str(&format!("{check},{}\n", u8::from(*pass)));
        println!("{check} {}", if *pass { "PASS" } else { "FAIL" });
    }
    let all = outcomes.iter().all(|(_, p)| *p);
    println!("overall {}", if all { "PASS" } else { "FAIL" });
    let out = OutputDir::create(&args.out, header)?;
    announce(out.write("summary.csv", &summary)?);
    Ok(if all { EXIT_OK } else { EXIT_FAILED })
}

/// Parses a `--pole` style `x,y` argument.
pub fn parse_pole(s: &str) -> Result<Point> {
    parse_point("pole", s)
}
