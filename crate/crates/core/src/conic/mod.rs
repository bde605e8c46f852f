//! Standard-form conic problems with linear equalities and PSD blocks, and
//! the solver interface.
//!
//! Problems are maximizations over a scalar vector `s`:
//!
//! ```text
//! maximize   cᵀs
//! subject to aᵢᵀs = eᵢ            (equalities)
//!            F_j(s) ⪰ 0           (PSD blocks, F_j linear and symmetric)
//! ```
//!
//! The dual is `minimize eᵀλ` subject to `Eᵀλ = c + Σ_j F_j*(S_j)`, `S_j ⪰ 0`,
//! i.e. the Lagrangian is `cᵀs − Σ λᵢ(aᵢᵀs − eᵢ) + Σ ⟨S_j, F_j(s)⟩`. Equality
//! multipliers returned in [`ConicSolution::dual_eq`] follow this sign.

mod ipm;
mod presolve;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{LinearForm, LinearMatrixOperator};

pub use ipm::InteriorPointSolver;

#[derive(Clone, Debug, PartialEq)]
pub struct Equality {
    pub lhs: LinearForm,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicProblem {
    pub num_scalars: usize,
    /// Maximized.
    pub objective: LinearForm,
    pub equalities: Vec<Equality>,
    pub psd_blocks: Vec<LinearMatrixOperator>,
}

impl ConicProblem {
    pub fn new(num_scalars: usize) -> Self {
        ConicProblem {
            num_scalars,
            objective: LinearForm::default(),
            equalities: Vec::new(),
            psd_blocks: Vec::new(),
        }
    }

    /// Checks that every referenced scalar index is in range.
    pub fn validate(&self) -> Result<()> {
        let check = |what: &str, idx: Option<usize>| match idx {
            Some(i) if i >= self.num_scalars => Err(Error::InvalidArgument(format!(
                "{what} references scalar {i}, problem has {}",
                self.num_scalars
            ))),
            _ => Ok(()),
        };
        check("objective", self.objective.max_index())?;
        for (k, e) in self.equalities.iter().enumerate() {
            check(&format!("equality {k}"), e.lhs.max_index())?;
        }
        for (k, b) in self.psd_blocks.iter().enumerate() {
            check(&format!("psd block {k}"), b.max_index())?;
        }
        Ok(())
    }

    pub fn objective_value(&self, s: &[f64]) -> f64 {
        self.objective.apply(s)
    }

    /// Largest absolute equality residual at `s`.
    pub fn equality_residual(&self, s: &[f64]) -> f64 {
        self.equalities
            .iter()
            .map(|e| (e.lhs.apply(s) - e.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Minimum eigenvalue of each PSD block at `s`.
    pub fn block_min_eigenvalues(&self, s: &[f64]) -> Vec<f64> {
        self.psd_blocks
            .iter()
            .map(|b| min_eigenvalue(b.apply(s)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ProblemJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ProblemJson = serde_json::from_str(text)?;
        let p = raw.into_problem()?;
        p.validate()?;
        Ok(p)
    }
}

/// Change of variables `s = diag(scalars)·s̃` together with a congruence
/// `D_j F_j D_j` of every block, `D_j = diag(block_rows[j])`. Equality rows
/// are left alone, so equality multipliers keep their meaning.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    pub scalars: Vec<f64>,
    pub block_rows: Vec<Vec<f64>>,
}

impl Scaling {
    pub fn apply(&self, p: &ConicProblem) -> ConicProblem {
        let scale_form = |f: &LinearForm| LinearForm {
            terms: f.terms.iter().map(|&(k, c)| (k, c * self.scalars[k])).collect(),
        };
        ConicProblem {
            num_scalars: p.num_scalars,
            objective: scale_form(&p.objective),
            equalities: p
                .equalities
                .iter()
                .map(|e| Equality {
                    lhs: scale_form(&e.lhs),
                    rhs: e.rhs,
                })
                .collect(),
            psd_blocks: p
                .psd_blocks
                .iter()
                .zip(&self.block_rows)
                .map(|(b, d)| b.scaled(&self.scalars, d))
                .collect(),
        }
    }

    /// Maps a solution of the scaled problem back to the original one.
    pub fn unscale(&self, mut sol: ConicSolution) -> ConicSolution {
        for (s, d) in sol.primal.iter_mut().zip(&self.scalars) {
            *s *= d;
        }
        for (x, d) in sol.dual_psd.iter_mut().zip(&self.block_rows) {
            for j in 0..x.ncols() {
                for i in 0..x.nrows() {
                    x[(i, j)] *= d[i] * d[j];
                }
            }
        }
        sol
    }
}

pub(crate) fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.symmetric_eigenvalues().min()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Inaccurate,
    Failed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            feas_tol: 1e-8,
            gap_tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    /// One multiplier per equality, in problem order.
    pub dual_eq: Vec<f64>,
    /// One PSD matrix per block.
    pub dual_psd: Vec<DMatrix<f64>>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub iterations: usize,
    pub message: String,
}

impl ConicSolution {
    pub(crate) fn failed(status: SolveStatus, problem: &ConicProblem, message: String) -> Self {
        ConicSolution {
            status,
            primal: vec![0.0; problem.num_scalars],
            dual_eq: vec![0.0; problem.equalities.len()],
            dual_psd: problem
                .psd_blocks
                .iter()
                .map(|b| DMatrix::zeros(b.size(), b.size()))
                .collect(),
            primal_obj: f64::NAN,
            dual_obj: f64::NAN,
            iterations: 0,
            message,
        }
    }

    /// `|primal_obj − dual_obj| / (1 + |primal_obj|)`.
    pub fn relative_gap(&self) -> f64 {
        (self.primal_obj - self.dual_obj).abs() / (1.0 + self.primal_obj.abs())
    }
}

/// A backend able to solve [`ConicProblem`]s. Implementations must not keep
/// global mutable state; one call owns its problem.
pub trait ConicSolver {
    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> ConicSolution;
}

/// Solves with the embedded interior-point backend.
pub fn solve(problem: &ConicProblem, settings: &SolverSettings) -> ConicSolution {
    InteriorPointSolver.solve(problem, settings)
}

type FormJson = Vec<(usize, f64)>;

#[derive(Serialize, Deserialize)]
struct EqualityJson {
    lhs: FormJson,
    rhs: f64,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    row: usize,
    col: usize,
    lhs: FormJson,
}

#[derive(Serialize, Deserialize)]
struct BlockJson {
    size: usize,
    entries: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    num_scalars: usize,
    objective: FormJson,
    equalities: Vec<EqualityJson>,
    psd_blocks: Vec<BlockJson>,
}

impl From<&ConicProblem> for ProblemJson {
    fn from(p: &ConicProblem) -> Self {
        ProblemJson {
            num_scalars: p.num_scalars,
            objective: p.objective.terms.clone(),
            equalities: p
                .equalities
                .iter()
                .map(|e| EqualityJson {
                    lhs: e.lhs.terms.clone(),
                    rhs: e.rhs,
                })
                .collect(),
            psd_blocks: p
                .psd_blocks
                .iter()
                .map(|b| {
                    let mut entries = Vec::new();
                    for i in 0..b.size() {
                        for j in i..b.size() {
                            let f = b.entry_form(i, j);
                            if !f.is_empty() {
                                entries.push(EntryJson {
                                    row: i,
                                    col: j,
                                    lhs: f.terms,
                                });
                            }
                        }
                    }
                    BlockJson {
                        size: b.size(),
                        entries,
                    }
                })
                .collect(),
        }
    }
}

impl ProblemJson {
    fn into_problem(self) -> Result<ConicProblem> {
        let mut blocks = Vec::with_capacity(self.psd_blocks.len());
        for (k, b) in self.psd_blocks.into_iter().enumerate() {
            let mut upper: std::collections::HashMap<(usize, usize), LinearForm> =
                std::collections::HashMap::new();
            for e in b.entries {
                if e.row >= b.size || e.col >= b.size {
                    return Err(Error::Format(format!(
                        "psd block {k}: entry ({}, {}) outside size {}",
                        e.row, e.col, b.size
                    )));
                }
                let key = (e.row.min(e.col), e.row.max(e.col));
                let form = LinearForm::new(e.lhs);
                if let Some(prev) = upper.get(&key) {
                    if *prev != form {
                        return Err(Error::Format(format!(
                            "psd block {k}: entries ({}, {}) and its transpose differ",
                            e.row, e.col
                        )));
                    }
                }
                upper.insert(key, form);
            }
            blocks.push(LinearMatrixOperator::from_fn(b.size, |i, j| {
                upper.remove(&(i, j)).unwrap_or_default()
            }));
        }
        Ok(ConicProblem {
            num_scalars: self.num_scalars,
            objective: LinearForm::new(self.objective),
            equalities: self
                .equalities
                .into_iter()
                .map(|e| Equality {
                    lhs: LinearForm::new(e.lhs),
                    rhs: e.rhs,
                })
                .collect(),
            psd_blocks: blocks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_block(index: usize) -> LinearMatrixOperator {
        LinearMatrixOperator::from_fn(1, |_, _| LinearForm::single(index, 1.0))
    }

    #[test]
    fn mass_splitting() {
        let mut p = ConicProblem::new(2);
        p.objective = LinearForm::single(0, 1.0);
        p.equalities.push(Equality {
            lhs: LinearForm::new(vec![(0, 1.0), (1, 1.0)]),
            rhs: 1.0,
        });
        p.psd_blocks = vec![scalar_block(0), scalar_block(1)];
        let sol = solve(&p, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Optimal, "{}", sol.message);
        assert!((sol.primal[0] - 1.0).abs() < 1e-6);
        assert!((sol.dual_obj - 1.0).abs() < 1e-6);
        assert!((sol.dual_eq[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn two_by_two_determinant() {
        let mut p = ConicProblem::new(1);
        p.objective = LinearForm::single(0, 1.0);
        // [[1, t], [t, 1]] needs a constant; carry it in a scalar pinned to 1.
        let mut p2 = ConicProblem::new(2);
        p2.objective = p.objective.clone();
        p2.equalities.push(Equality {
            lhs: LinearForm::single(1, 1.0),
            rhs: 1.0,
        });
        p2.psd_blocks.push(LinearMatrixOperator::from_fn(2, |i, j| {
            if i == j {
                LinearForm::single(1, 1.0)
            } else {
                LinearForm::single(0, 1.0)
            }
        }));
        let sol = solve(&p2, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Optimal, "{}", sol.message);
        assert!((sol.primal[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_toys() {
        let mut p = ConicProblem::new(1);
        p.objective = LinearForm::single(0, 1.0);
        p.equalities.push(Equality {
            lhs: LinearForm::single(0, 1.0),
            rhs: -1.0,
        });
        p.psd_blocks.push(scalar_block(0));
        assert_eq!(solve(&p, &SolverSettings::default()).status, SolveStatus::Infeasible);

        // y0 + y1 = -1 with both nonnegative: only detectable by the iteration
        let mut q = ConicProblem::new(2);
        q.objective = LinearForm::single(0, 1.0);
        q.equalities.push(Equality {
            lhs: LinearForm::new(vec![(0, 1.0), (1, 1.0)]),
            rhs: -1.0,
        });
        q.psd_blocks = vec![scalar_block(0), scalar_block(1)];
        assert_eq!(solve(&q, &SolverSettings::default()).status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_toy() {
        let mut p = ConicProblem::new(2);
        p.objective = LinearForm::single(0, 1.0);
        p.equalities.push(Equality {
            lhs: LinearForm::new(vec![(0, 1.0), (1, -1.0)]),
            rhs: 0.0,
        });
        p.psd_blocks = vec![scalar_block(0), scalar_block(1)];
        assert_eq!(solve(&p, &SolverSettings::default()).status, SolveStatus::Unbounded);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut p = ConicProblem::new(4);
        p.objective = LinearForm::new(vec![(0, 0.1), (3, -1.0 / 3.0)]);
        p.equalities.push(Equality {
            lhs: LinearForm::new(vec![(0, 1e-17), (2, std::f64::consts::PI)]),
            rhs: 2.0f64.sqrt(),
        });
        p.psd_blocks.push(crate::moments::moment_matrix_operator(1, 1, 2).unwrap().shifted(1));
        let text = p.to_json().unwrap();
        let back = ConicProblem::from_json(&text).unwrap();
        assert_eq!(back, p);
        let bad = text.replace("\"num_scalars\":4", "\"num_scalars\":2");
        assert!(ConicProblem::from_json(&bad).is_err());
    }
}
