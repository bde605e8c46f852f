//! Outer approximations of the backward reachable set of an autonomous
//! polynomial system, as superlevel sets `{x ∈ X : w_r(x) ≥ 1}` of the dual
//! polynomial of the moment relaxation.

use serde::{Deserialize, Serialize};

use crate::conic::{ConicSolver, InteriorPointSolver, SolverSettings};
use crate::error::{check_dim, Error, Result};
use crate::poly::Polynomial;
use crate::sets::{SemiAlgebraicSet, SystemSpec};
use crate::synth::{
    build_synthesis_sdp, build_synthesis_sdp_with, solve_synthesis_best_effort, solve_synthesis_with,
    ControllerPoly, Diagnostics, MomentSolution, RelaxationOptions, SynthesisProblem, SynthesisSolution,
};

/// `x⁺ = f(x)` with state constraints X and target Z.
#[derive(Clone, Debug)]
pub struct AutonomousSpec {
    pub f: Vec<Polynomial>,
    pub x_set: SemiAlgebraicSet,
    pub z_set: SemiAlgebraicSet,
}

impl AutonomousSpec {
    pub fn new(f: Vec<Polynomial>, x_set: SemiAlgebraicSet, z_set: SemiAlgebraicSet) -> Result<Self> {
        let n = f.len();
        if n == 0 {
            return Err(Error::InvalidArgument("state dimension must be positive".into()));
        }
        for fi in &f {
            check_dim("f component variables", n, fi.num_vars())?;
        }
        check_dim("X variables", n, x_set.num_vars())?;
        check_dim("Z variables", n, z_set.num_vars())?;
        Ok(AutonomousSpec { f, x_set, z_set })
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// `deg f`, at least 1.
    pub fn degree(&self) -> usize {
        self.f.iter().map(Polynomial::degree).max().unwrap_or(0).max(1)
    }

    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        self.f.iter().map(|p| p.eval_unchecked(x)).collect()
    }

    /// The same system viewed as a control system without inputs.
    pub fn as_system(&self) -> SystemSpec {
        SystemSpec::new(
            self.f.clone(),
            vec![Vec::new(); self.n()],
            self.x_set.clone(),
            None,
            self.z_set.clone(),
        )
        .expect("dimensions validated on construction")
    }
}

/// Treats a system's drift as autonomous dynamics (ignores inputs).
pub fn autonomous_part(spec: &SystemSpec) -> AutonomousSpec {
    AutonomousSpec {
        f: spec.f().to_vec(),
        x_set: spec.x_set().clone(),
        z_set: spec.z_set().clone(),
    }
}

/// `f_cl(x) = f(x) + g(x)·u(x)` with the unclipped controller polynomials.
pub fn compose_closed_loop(spec: &SystemSpec, ctrl: &ControllerPoly) -> Result<AutonomousSpec> {
    check_dim("controller states", spec.n(), ctrl.n)?;
    check_dim("controller inputs", spec.m(), ctrl.m())?;
    let spec = if spec.is_normalized() {
        spec.clone()
    } else {
        spec.rescale_inputs()?
    };
    let f = (0..spec.n())
        .map(|i| {
            let mut p = spec.f()[i].clone();
            for j in 0..spec.m() {
                p = p.checked_add(&spec.g()[i][j].checked_mul(&ctrl.coeffs[j])?)?;
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    AutonomousSpec::new(f, spec.x_set().clone(), spec.z_set().clone())
}

pub fn build_reach_sdp(spec: &AutonomousSpec, r: usize) -> Result<SynthesisProblem> {
    build_synthesis_sdp(&spec.as_system(), r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachCertificate {
    pub order: usize,
    pub w: Polynomial,
    pub v: Polynomial,
    /// `w` of every order solved so far, lowest first.
    #[serde(default)]
    pub history: Vec<Polynomial>,
}

impl ReachCertificate {
    pub fn n(&self) -> usize {
        self.w.num_vars()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ReachCertificate = serde_json::from_str(text)?;
        let n = c.w.num_vars();
        check_dim("certificate v variables", n, c.v.num_vars())?;
        for h in &c.history {
            check_dim("certificate history variables", n, h.num_vars())?;
        }
        Ok(c)
    }

    /// Whether the intersection form has any history to use.
    pub fn has_history(&self) -> bool {
        !self.history.is_empty()
    }
}

/// `w(x) ≥ 1`, or with `use_intersection`, `w(x) ≥ 1` and `w_k(x) ≥ 1` for
/// every history entry. An empty history reduces to the single test.
pub fn member(cert: &ReachCertificate, x: &[f64], use_intersection: bool) -> bool {
    if cert.w.eval_unchecked(x) < 1.0 {
        return false;
    }
    !use_intersection || cert.history.iter().all(|w| w.eval_unchecked(x) >= 1.0)
}

#[derive(Clone, Debug)]
pub struct ReachSolution {
    pub certificate: ReachCertificate,
    pub verified: bool,
    pub moments: MomentSolution,
    pub diagnostics: Diagnostics,
}

pub fn solve_reach(problem: &SynthesisProblem, settings: &SolverSettings) -> Result<ReachSolution> {
    solve_reach_with(problem, &InteriorPointSolver, settings)
}

pub fn solve_reach_with(
    problem: &SynthesisProblem,
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> Result<ReachSolution> {
    check_autonomous(problem)?;
    solve_synthesis_with(problem, solver, settings).map(|s| into_reach(problem, s))
}

/// Returns the certificate read off the solver's best iterate whatever the
/// status; the status is in the diagnostics.
pub fn solve_reach_best_effort(
    problem: &SynthesisProblem,
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> Result<ReachSolution> {
    check_autonomous(problem)?;
    solve_synthesis_best_effort(problem, solver, settings).map(|s| into_reach(problem, s))
}

fn check_autonomous(problem: &SynthesisProblem) -> Result<()> {
    if problem.spec.m() != 0 {
        return Err(Error::InvalidArgument(
            "reach relaxations are built for autonomous systems".into(),
        ));
    }
    Ok(())
}

fn into_reach(problem: &SynthesisProblem, s: SynthesisSolution) -> ReachSolution {
    ReachSolution {
        certificate: ReachCertificate {
            order: problem.r,
            w: s.certificate.w,
            v: s.certificate.v,
            history: Vec::new(),
        },
        verified: s.certificate.verified,
        moments: s.moments,
        diagnostics: s.diagnostics,
    }
}

/// Solves every order in `orders` (ascending) and returns the per-order
/// solutions; the last certificate carries the full `w` history.
pub fn solve_hierarchy(
    spec: &AutonomousSpec,
    orders: std::ops::RangeInclusive<usize>,
    settings: &SolverSettings,
) -> Result<Vec<ReachSolution>> {
    solve_hierarchy_with(spec, orders, &RelaxationOptions::default(), settings, false)
}

/// [`solve_hierarchy`] with relaxation options; `best_effort` skips the
/// status gate as in [`solve_reach_best_effort`].
pub fn solve_hierarchy_with(
    spec: &AutonomousSpec,
    orders: std::ops::RangeInclusive<usize>,
    options: &RelaxationOptions,
    settings: &SolverSettings,
    best_effort: bool,
) -> Result<Vec<ReachSolution>> {
    if orders.is_empty() {
        return Err(Error::InvalidArgument("empty order range".into()));
    }
    let system = spec.as_system();
    let mut out: Vec<ReachSolution> = Vec::new();
    for r in orders {
        let problem = build_synthesis_sdp_with(&system, r, options)?;
        let mut sol = if best_effort {
            solve_reach_best_effort(&problem, &InteriorPointSolver, settings)?
        } else {
            solve_reach_with(&problem, &InteriorPointSolver, settings)?
        };
        let mut history: Vec<Polynomial> = out
            .last()
            .map(|p| p.certificate.history.clone())
            .unwrap_or_default();
        history.push(sol.certificate.w.clone());
        sol.certificate.history = history;
        out.push(sol);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::InputScaling;

    fn di() -> SystemSpec {
        let x1 = Polynomial::var(2, 0);
        let x2 = Polynomial::var(2, 1);
        SystemSpec::new(
            vec![&x1 + &x2.scale(0.01), x2.clone()],
            vec![vec![Polynomial::zero(2)], vec![Polynomial::constant(2, 0.01)]],
            SemiAlgebraicSet::new_box(vec![(-1.0, 1.0); 2]).unwrap(),
            Some(SemiAlgebraicSet::new_box(vec![(-1.0, 1.0)]).unwrap()),
            SemiAlgebraicSet::ball(vec![0.0, 0.0], 0.05).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn closed_loop_substitution() {
        let spec = di();
        let u = &(-&Polynomial::var(2, 0)) - &Polynomial::var(2, 1);
        let ctrl = ControllerPoly::new(vec![u], 2, InputScaling::identity(1)).unwrap();
        let cl = compose_closed_loop(&spec, &ctrl).unwrap();
        let x1 = Polynomial::var(2, 0);
        let x2 = Polynomial::var(2, 1);
        assert_eq!(cl.f[0], &x1 + &x2.scale(0.01));
        assert_eq!(cl.f[1], &x2 + &(&(-&x1) - &x2).scale(0.01));
        let zero = compose_closed_loop(&spec, &ControllerPoly::zero(2, 1)).unwrap();
        assert_eq!(zero.f, spec.f().to_vec());
        assert!(compose_closed_loop(&spec, &ControllerPoly::zero(3, 1)).is_err());
    }

    #[test]
    fn membership_examples() {
        let w = Polynomial::var(2, 0).pow(2);
        let cert = ReachCertificate {
            order: 1,
            w: w.clone(),
            v: Polynomial::zero(2),
            history: vec![],
        };
        assert!(member(&cert, &[2.0, 0.0], false));
        assert!(!member(&cert, &[0.0, 0.0], false));
        // empty history falls back to w alone
        assert!(member(&cert, &[2.0, 0.0], true));
        let w2 = Polynomial::var(2, 1).pow(2);
        let with_hist = ReachCertificate {
            history: vec![w2.clone(), w.clone()],
            ..cert
        };
        assert!(with_hist.has_history());
        assert!(!member(&with_hist, &[2.0, 0.0], true));
        assert!(member(&with_hist, &[2.0, 0.0], false));
        assert!(member(&with_hist, &[2.0, 2.0], true));
    }

    #[test]
    fn certificate_json_round_trip() {
        let cert = ReachCertificate {
            order: 3,
            w: Polynomial::var(2, 0).scale(1.0 / 3.0),
            v: Polynomial::constant(2, 0.1),
            history: vec![Polynomial::var(2, 1)],
        };
        let back = ReachCertificate::from_json(&cert.to_json().unwrap()).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn reach_beta_zero_row_is_mass_conservation() {
        let p = build_reach_sdp(&autonomous_part(&di()), 2).unwrap();
        let l = &p.layout;
        assert_eq!(
            p.problem.equalities[0].lhs,
            crate::moments::LinearForm::new(vec![(l.y0, -1.0), (l.y1, 1.0)])
        );
        assert_eq!(p.basis_z.num_vars(), 2);
    }
}
