//! Elimination of the linear equalities.
//!
//! Each equality picks one pivot scalar that is written as an affine function
//! of the remaining (free) scalars; substituting into the objective and the
//! PSD blocks leaves a pure LMI problem
//! `maximize bᵀt s.t. S_j = C_j − Σ tᵢ A_ij ⪰ 0` over the free scalars `t`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;

use super::ConicProblem;

/// Upper-triangle entries `(row, col, value)` of one coefficient matrix.
pub(crate) type SparseSym = Vec<(u32, u32, f64)>;

#[derive(Debug)]
pub(crate) struct PivotExpr {
    pub var: usize,
    pub row: usize,
    pub constant: f64,
    /// Coefficients over reduced variable positions.
    pub coeffs: Vec<(usize, f64)>,
}

#[derive(Debug)]
pub(crate) struct ReducedBlock {
    pub size: usize,
    pub constant: DMatrix<f64>,
    /// Reduced variables appearing in the block, ascending.
    pub vars: Vec<usize>,
    /// `A_ij` for each entry of `vars`.
    pub mats: Vec<SparseSym>,
}

#[derive(Debug)]
pub(crate) struct Reduced {
    pub num_scalars: usize,
    /// Original scalar index of each reduced variable.
    pub free_vars: Vec<usize>,
    pub pivots: Vec<PivotExpr>,
    pub objective: Vec<f64>,
    pub objective_const: f64,
    pub blocks: Vec<ReducedBlock>,
}

pub(crate) enum Presolved {
    Reduced(Reduced),
    Infeasible(String),
    Unbounded(String),
}

impl Reduced {
    pub fn num_free(&self) -> usize {
        self.free_vars.len()
    }

    /// Recovers the full scalar vector from reduced variables.
    pub fn expand(&self, t: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.num_scalars];
        for (k, &v) in self.free_vars.iter().enumerate() {
            s[v] = t[k];
        }
        for p in &self.pivots {
            s[p.var] = p.constant + p.coeffs.iter().map(|&(k, c)| c * t[k]).sum::<f64>();
        }
        s
    }
}

struct Pivot {
    var: usize,
    row: usize,
    constant: f64,
    // over original, non-pivot scalar indices, sorted
    expr: Vec<(usize, f64)>,
}

pub(crate) fn presolve(problem: &ConicProblem) -> Presolved {
    let n = problem.num_scalars;
    let mut eq_count = vec![0usize; n];
    for e in &problem.equalities {
        for &(k, _) in &e.lhs.terms {
            eq_count[k] += 1;
        }
    }

    let mut pivots: Vec<Pivot> = Vec::new();
    let mut pivot_of: HashMap<usize, usize> = HashMap::new();

    for (row_idx, eq) in problem.equalities.iter().enumerate() {
        let scale = eq
            .lhs
            .terms
            .iter()
            .fold(0.0f64, |m, t| m.max(t.1.abs()))
            .max(f64::MIN_POSITIVE);
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        let mut rhs = eq.rhs;
        for &(k, c) in &eq.lhs.terms {
            if let Some(&p) = pivot_of.get(&k) {
                rhs -= c * pivots[p].constant;
                for &(j, e) in &pivots[p].expr {
                    *acc.entry(j).or_insert(0.0) -= c * e;
                }
            } else {
                *acc.entry(k).or_insert(0.0) += c;
            }
        }
        acc.retain(|_, v| v.abs() > 1e-13 * scale);
        if acc.is_empty() {
            if rhs.abs() <= 1e-9 * (1.0 + eq.rhs.abs()) {
                continue;
            }
            return Presolved::Infeasible(format!(
                "equality {row_idx} reduces to 0 = {rhs}"
            ));
        }
        let max_abs = acc.values().fold(0.0f64, |m, v| m.max(v.abs()));
        let (&q, &cq) = acc
            .iter()
            .filter(|(_, v)| v.abs() >= 0.1 * max_abs)
            .min_by(|a, b| {
                eq_count[*a.0]
                    .cmp(&eq_count[*b.0])
                    .then(b.1.abs().partial_cmp(&a.1.abs()).unwrap())
            })
            .expect("row is non-empty");
        // s_q = rhs/c_q − Σ_{j≠q} (c_j/c_q) s_j
        let expr: Vec<(usize, f64)> = acc
            .iter()
            .filter(|(&j, _)| j != q)
            .map(|(&j, &c)| (j, -c / cq))
            .collect();
        let constant = rhs / cq;
        // keep earlier pivots expressed in non-pivot scalars only
        for p in pivots.iter_mut() {
            if let Ok(pos) = p.expr.binary_search_by_key(&q, |t| t.0) {
                let c = p.expr.remove(pos).1;
                p.constant += c * constant;
                let mut merged: BTreeMap<usize, f64> = p.expr.iter().copied().collect();
                for &(j, e) in &expr {
                    *merged.entry(j).or_insert(0.0) += c * e;
                }
                p.expr = merged.into_iter().filter(|t| t.1 != 0.0).collect();
            }
        }
        pivot_of.insert(q, pivots.len());
        pivots.push(Pivot {
            var: q,
            row: row_idx,
            constant,
            expr,
        });
    }

    // Reduced variable positions for the remaining scalars.
    let mut position = vec![usize::MAX; n];
    let mut free_vars = Vec::new();
    for v in 0..n {
        if !pivot_of.contains_key(&v) {
            position[v] = free_vars.len();
            free_vars.push(v);
        }
    }
    let m = free_vars.len();

    let mut objective = vec![0.0; m];
    let mut objective_const = 0.0;
    for &(k, c) in &problem.objective.terms {
        if let Some(&p) = pivot_of.get(&k) {
            objective_const += c * pivots[p].constant;
            for &(j, e) in &pivots[p].expr {
                objective[position[j]] += c * e;
            }
        } else {
            objective[position[k]] += c;
        }
    }

    let mut in_block = vec![false; m];
    let mut blocks = Vec::with_capacity(problem.psd_blocks.len());
    for op in &problem.psd_blocks {
        let size = op.size();
        let mut constant = DMatrix::zeros(size, size);
        let mut per_var: HashMap<usize, BTreeMap<(u32, u32), f64>> = HashMap::new();
        for (i, j, k, c) in op.upper_entries() {
            let mut add = |pos: usize, v: f64| {
                *per_var
                    .entry(pos)
                    .or_default()
                    .entry((i as u32, j as u32))
                    .or_insert(0.0) -= v;
            };
            if let Some(&p) = pivot_of.get(&k) {
                constant[(i, j)] += c * pivots[p].constant;
                for &(jj, e) in &pivots[p].expr {
                    add(position[jj], c * e);
                }
            } else {
                add(position[k], c);
            }
        }
        for i in 0..size {
            for j in 0..i {
                constant[(i, j)] = constant[(j, i)];
            }
        }
        let mut vars: Vec<usize> = per_var
            .iter()
            .filter(|(_, e)| e.values().any(|v| *v != 0.0))
            .map(|(&k, _)| k)
            .collect();
        vars.sort_unstable();
        let mats: Vec<SparseSym> = vars
            .iter()
            .map(|k| {
                per_var[k]
                    .iter()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(&(i, j), &v)| (i, j, v))
                    .collect()
            })
            .collect();
        for &k in &vars {
            in_block[k] = true;
        }
        blocks.push(ReducedBlock {
            size,
            constant,
            vars,
            mats,
        });
    }

    // Scalars untouched by every block are either free directions of the
    // objective (unbounded) or irrelevant (fixed at 0).
    for k in 0..m {
        if !in_block[k] && objective[k] != 0.0 {
            return Presolved::Unbounded(format!(
                "scalar {} enters the objective but no PSD block",
                free_vars[k]
            ));
        }
    }
    let mut renumber = vec![usize::MAX; m];
    let mut kept = Vec::new();
    for k in 0..m {
        if in_block[k] {
            renumber[k] = kept.len();
            kept.push(free_vars[k]);
        }
    }
    let objective: Vec<f64> = (0..m).filter(|&k| in_block[k]).map(|k| objective[k]).collect();
    for b in &mut blocks {
        for v in &mut b.vars {
            *v = renumber[*v];
        }
    }
    let pivots = pivots
        .into_iter()
        .map(|p| PivotExpr {
            var: p.var,
            row: p.row,
            constant: p.constant,
            coeffs: p
                .expr
                .iter()
                .filter(|(j, _)| in_block[position[*j]])
                .map(|&(j, e)| (renumber[position[j]], e))
                .collect(),
        })
        .collect();

    Presolved::Reduced(Reduced {
        num_scalars: n,
        free_vars: kept,
        pivots,
        objective,
        objective_const,
        blocks,
    })
}
