use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use occusynth::nalgebra::{DMatrix, DVector};
use occusynth::reach::{self, AutonomousSpec, ReachSolution};
use occusynth::sim::{self, GridReport, GridSpec, Outcome};
use occusynth::synth::{self, Diagnostics};
use occusynth::{
    conic, ControllerPoly, Error, ReachCertificate, RelaxationOptions, SolveStatus, SolverSettings, SystemFile,
    SystemSpec,
};

use crate::{Command, LevelsetArgs, LqrArgs, ReachArgs, RolloutArgs, SynthArgs, VerifyArgs};

pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl Failure {
    fn validation(kind: &str, message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.kind, "message": self.message}).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => EXIT_IO,
            Error::Solver { .. } => EXIT_SOLVER,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<String, Failure>;

pub fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Synth(a) => synth_cmd(a),
        Command::Reach(a) => reach_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Rollout(a) => rollout_cmd(a),
        Command::Levelset(a) => levelset_cmd(a),
        Command::Lqr(a) => lqr_cmd(a),
    }
}

fn settings() -> Result<SolverSettings, Failure> {
    let mut s = SolverSettings::default();
    fn var<T: std::str::FromStr>(name: &str) -> Result<Option<T>, Failure> {
        match std::env::var(name) {
            Ok(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Failure::validation("invalid_argument", format!("{name}={v:?} is not a valid value"))),
            Err(_) => Ok(None),
        }
    }
    if let Some(v) = var("OCCUSYNTH_FEAS_TOL")? {
        s.feas_tol = v;
    }
    if let Some(v) = var("OCCUSYNTH_GAP_TOL")? {
        s.gap_tol = v;
    }
    if let Some(v) = var("OCCUSYNTH_MAX_ITER")? {
        s.max_iter = v;
    }
    Ok(s)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_IO,
        kind: "io".into(),
        message: format!("{}: {e}", path.display()),
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        code: EXIT_IO,
        kind: "io".into(),
        message: format!("{}: {e}", path.display()),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        code: EXIT_IO,
        kind: "io".into(),
        message: format!("{}: {e}", path.display()),
    })
}

fn load_system(path: &Path) -> Result<(SystemFile, SystemSpec), Failure> {
    let file = SystemFile::from_json(&read(path)?)?;
    let spec = file.to_spec()?;
    Ok((file, spec))
}

fn load_controller(path: Option<&Path>, spec: &SystemSpec) -> Result<ControllerPoly, Failure> {
    let ctrl = match path {
        Some(p) => ControllerPoly::from_json(&read(p)?)?,
        None if spec.m() == 0 => ControllerPoly::zero(spec.n(), 0),
        None => return Err(Failure::validation("invalid_argument", "--controller is required for systems with inputs")),
    };
    if ctrl.n != spec.n() || ctrl.m() != spec.m() {
        return Err(Failure::validation(
            "dimension_mismatch",
            format!(
                "controller maps {} states to {} inputs, the system has {} states and {} inputs",
                ctrl.n,
                ctrl.m(),
                spec.n(),
                spec.m()
            ),
        ));
    }
    Ok(ctrl)
}

/// `C.json` → `C.report.json`.
fn report_path(out: &Path) -> PathBuf {
    out.with_extension("report.json")
}

fn write_report(out: &Path, report: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).map_err(Error::from)?;
    write_text(&report_path(out), &text)
}

fn status_failure(d: &Diagnostics) -> Option<Failure> {
    match d.status {
        SolveStatus::Optimal => None,
        SolveStatus::Inaccurate => {
            log::warn!(
                "order {}: solver finished inaccurately (gap {:.2e}): {}",
                d.order,
                d.relative_gap,
                d.message
            );
            None
        }
        status => Some(Failure {
            code: EXIT_SOLVER,
            kind: "solver".into(),
            message: format!("order {}: solver status {status:?}: {}", d.order, d.message),
        }),
    }
}

fn relaxation(mass_cap: Option<f64>) -> RelaxationOptions {
    RelaxationOptions { mass_cap }
}

fn synth_cmd(a: SynthArgs) -> CmdResult {
    let settings = settings()?;
    let (file, spec) = load_system(&a.system)?;
    if a.controller_degree > a.order {
        return Err(Failure::validation(
            "invalid_argument",
            format!("controller degree {} exceeds the order {}", a.controller_degree, a.order),
        ));
    }
    let problem = synth::build_synthesis_sdp_with(&spec, a.order, &relaxation(a.mass_cap))?;
    let sol = synth::solve_synthesis_best_effort(&problem, &conic::InteriorPointSolver, &settings)?;
    let d = &sol.diagnostics;
    let mut report = json!({
        "command": "synth",
        "system": file.name,
        "order": a.order,
        "controller_degree": a.controller_degree,
        "svd_tol": a.svd_tol,
        "mass_cap": a.mass_cap,
        "status": d.status,
        "primal_obj": d.primal_obj,
        "dual_obj": d.dual_obj,
        "relative_gap": d.relative_gap,
        "certificate_verified": sol.certificate.verified,
        "diagnostics": d,
    });
    if let Some(f) = status_failure(d) {
        write_report(&a.out, &report)?;
        return Err(f);
    }
    let ctrl = sol.controller(a.controller_degree, a.svd_tol, spec.input_scaling())?;
    write_text(&a.out, &ctrl.to_json()?)?;
    report["controller"] = json!(a.out.display().to_string());
    write_report(&a.out, &report)?;
    Ok(json!({
        "command": "synth",
        "status": d.status,
        "primal_obj": d.primal_obj,
        "relative_gap": d.relative_gap,
        "controller": a.out.display().to_string(),
        "report": report_path(&a.out).display().to_string(),
    })
    .to_string())
}

fn parse_range(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::validation("invalid_argument", format!("--hierarchy expects r0..r, got {text:?}"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn reach_cmd(a: ReachArgs) -> CmdResult {
    let settings = settings()?;
    let (file, spec) = load_system(&a.system)?;
    let (closed_loop, auto): (bool, AutonomousSpec) = match &a.controller {
        Some(path) => {
            let ctrl = load_controller(Some(path), &spec)?;
            (true, reach::compose_closed_loop(&spec, &ctrl)?)
        }
        None => (false, reach::autonomous_part(&spec)),
    };
    let orders = match (&a.hierarchy, a.order) {
        (Some(h), order) => {
            let (lo, hi) = parse_range(h)?;
            if order.is_some_and(|r| r != hi) {
                return Err(Failure::validation(
                    "invalid_argument",
                    format!("--order {} does not match the end of --hierarchy {h}", order.unwrap_or_default()),
                ));
            }
            lo..=hi
        }
        (None, Some(r)) => r..=r,
        (None, None) => return Err(Failure::validation("invalid_argument", "--order or --hierarchy is required")),
    };
    let sols: Vec<ReachSolution> =
        reach::solve_hierarchy_with(&auto, orders, &relaxation(a.mass_cap), &settings, true)?;
    let last = sols.last().expect("non-empty order range");
    let mut cert: ReachCertificate = last.certificate.clone();
    if a.hierarchy.is_none() {
        cert.history.clear();
    }
    let per_order: Vec<_> = sols
        .iter()
        .map(|s| {
            json!({
                "order": s.diagnostics.order,
                "status": s.diagnostics.status,
                "primal_obj": s.diagnostics.primal_obj,
                "dual_obj": s.diagnostics.dual_obj,
                "relative_gap": s.diagnostics.relative_gap,
                "certificate_verified": s.verified,
                "diagnostics": s.diagnostics,
            })
        })
        .collect();
    let report = json!({
        "command": "reach",
        "system": file.name,
        "closed_loop": closed_loop,
        "mass_cap": a.mass_cap,
        "orders": per_order,
    });
    write_report(&a.out, &report)?;
    if let Some(f) = sols.iter().find_map(|s| status_failure(&s.diagnostics)) {
        return Err(f);
    }
    write_text(&a.out, &cert.to_json()?)?;
    Ok(json!({
        "command": "reach",
        "order": cert.order,
        "history": cert.history.len(),
        "primal_obj": last.diagnostics.primal_obj,
        "status": last.diagnostics.status,
        "certificate": a.out.display().to_string(),
        "report": report_path(&a.out).display().to_string(),
    })
    .to_string())
}

fn parse_vector(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::validation("invalid_argument", format!("bad number {t:?} in {text:?}")))
        })
        .collect()
}

fn verify_cmd(a: VerifyArgs) -> CmdResult {
    let (_, spec) = load_system(&a.system)?;
    let ctrl = load_controller(a.controller.as_deref(), &spec)?;
    let report = match (&a.grid, &a.points) {
        (Some(g), _) => {
            let grid: GridSpec = g.parse()?;
            sim::grid_verify(&spec, &ctrl, &grid, a.steps)?
        }
        (None, Some(p)) => {
            let points = p.split(';').map(parse_vector).collect::<Result<Vec<_>, _>>()?;
            let labels = points
                .par_iter()
                .map(|x| sim::rollout_outcome(&spec, &ctrl, x, a.steps).map(|(o, _)| o))
                .collect::<Result<Vec<_>, _>>()?;
            GridReport { points, labels }
        }
        (None, None) => unreachable!("clap requires --grid or --points"),
    };
    sim::write_grid_csv(create(&a.out)?, &report)?;
    Ok(json!({
        "command": "verify",
        "points": report.points.len(),
        "reached": report.count("reached"),
        "left_X": report.count("left_X"),
        "timeout": report.count("timeout"),
        "outside_X": report.count("outside_X"),
        "out": a.out.display().to_string(),
    })
    .to_string())
}

fn rollout_cmd(a: RolloutArgs) -> CmdResult {
    let (_, spec) = load_system(&a.system)?;
    let ctrl = load_controller(a.controller.as_deref(), &spec)?;
    let x0 = parse_vector(&a.x0)?;
    if x0.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: spec.n(),
            found: x0.len(),
        }
        .into());
    }
    let result = match sim::rollout(&spec, &ctrl, &x0, a.steps) {
        Ok(r) => r,
        Err(Error::OutsideX) => sim::RolloutResult {
            outcome: Outcome::OutsideX,
            trajectory: Vec::new(),
            steps_used: 0,
        },
        Err(e) => return Err(e.into()),
    };
    sim::write_trajectory_csv(create(&a.out)?, &result, spec.n(), spec.m())?;
    let last = result.trajectory.last().map(|(x, _)| x.clone()).unwrap_or(x0);
    Ok(json!({
        "command": "rollout",
        "outcome": result.outcome.label(),
        "steps": result.steps_used,
        "final_state": last,
        "out": a.out.display().to_string(),
    })
    .to_string())
}

fn levelset_cmd(a: LevelsetArgs) -> CmdResult {
    let cert = ReachCertificate::from_json(&read(&a.cert)?)?;
    let bbox = match &a.system {
        Some(p) => {
            let (_, spec) = load_system(p)?;
            if spec.n() != cert.n() {
                return Err(Failure::validation("dimension_mismatch", "certificate and system dimensions differ"));
            }
            spec.x_set().bounding_box()
        }
        None => None,
    };
    let grid: GridSpec = a.grid.parse()?;
    if grid.axes.len() != cert.n() {
        return Err(Failure::validation(
            "dimension_mismatch",
            format!("grid has {} axes, the certificate has {} variables", grid.axes.len(), cert.n()),
        ));
    }
    let points = grid.points(bbox.as_deref())?;
    if a.intersection && !cert.has_history() {
        log::warn!("certificate has no history; --intersection uses w alone");
    }
    let members: Vec<bool> = points.par_iter().map(|x| reach::member(&cert, x, a.intersection)).collect();
    sim::write_levelset_csv(create(&a.out)?, &points, &members)?;
    Ok(json!({
        "command": "levelset",
        "points": points.len(),
        "members": members.iter().filter(|&&m| m).count(),
        "out": a.out.display().to_string(),
    })
    .to_string())
}

fn diag(text: Option<&str>, size: usize, what: &str) -> Result<DMatrix<f64>, Failure> {
    match text {
        None => Ok(DMatrix::identity(size, size)),
        Some(t) => {
            let v = parse_vector(t)?;
            if v.len() != size {
                return Err(Failure::validation(
                    "dimension_mismatch",
                    format!("{what} needs {size} diagonal entries, got {}", v.len()),
                ));
            }
            Ok(DMatrix::from_diagonal(&DVector::from_vec(v)))
        }
    }
}

fn lqr_cmd(a: LqrArgs) -> CmdResult {
    let (file, spec) = load_system(&a.system)?;
    let q = diag(a.q.as_deref(), spec.n(), "Q")?;
    let r = diag(a.r.as_deref(), spec.m(), "R")?;
    let (x_star, u_star) = match &file.fixed_point {
        Some(fp) => (fp.x.clone(), fp.u.clone()),
        None => (vec![0.0; spec.n()], None),
    };
    let lqr = sim::lqr_baseline(&spec, &q, &r, &x_star, u_star.as_deref())?;
    write_text(&a.out, &lqr.controller.to_json()?)?;
    let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    };
    let report = json!({
        "command": "lqr",
        "system": file.name,
        "gain_normalized": rows(&lqr.k),
        "riccati_solution": rows(&lqr.p),
        "spectral_radius": lqr.spectral_radius,
        "iterations": lqr.iterations,
    });
    write_report(&a.out, &report)?;
    Ok(json!({
        "command": "lqr",
        "spectral_radius": lqr.spectral_radius,
        "iterations": lqr.iterations,
        "controller": a.out.display().to_string(),
    })
    .to_string())
}
