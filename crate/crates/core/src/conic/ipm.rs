//! Primal-dual path-following interior-point method (HKM direction with a
//! Mehrotra predictor-corrector) on the reduced LMI problem produced by the
//! presolve:
//!
//! ```text
//! maximize bᵀt                  minimize ⟨C, X⟩
//! s.t. C − 𝒜*(t) = S ⪰ 0        s.t. 𝒜(X) = b, X ⪰ 0
//! ```
//!
//! where `𝒜*(t)_j = Σ tᵢ A_ij` and `𝒜(X)_i = Σ_j ⟨A_ij, X_j⟩`.

use log::debug;
use nalgebra::{DMatrix, DVector};

use super::presolve::{presolve, Presolved, Reduced};
use super::{min_eigenvalue, ConicProblem, ConicSolution, ConicSolver, SolveStatus, SolverSettings};

const STAGNATION_ITERS: usize = 25;

/// Embedded dense interior-point backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct InteriorPointSolver;

impl ConicSolver for InteriorPointSolver {
    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> ConicSolution {
        if let Err(e) = problem.validate() {
            return ConicSolution::failed(SolveStatus::Failed, problem, e.to_string());
        }
        let reduced = match presolve(problem) {
            Presolved::Reduced(r) => r,
            Presolved::Infeasible(msg) => {
                return ConicSolution::failed(SolveStatus::Infeasible, problem, msg)
            }
            Presolved::Unbounded(msg) => {
                return ConicSolution::failed(SolveStatus::Unbounded, problem, msg)
            }
        };
        let lmi = Lmi::new(&reduced);
        let out = if lmi.m == 0 {
            constant_only(&lmi, settings)
        } else {
            lmi.run(settings)
        };
        finish(problem, &reduced, &lmi, out)
    }
}

struct Block {
    n: usize,
    c: DMatrix<f64>,
    vars: Vec<usize>,
    // flattened upper-triangle entries of all A_ij, tagged with the local var
    ent_k: Vec<u32>,
    ent_r: Vec<u32>,
    ent_c: Vec<u32>,
    ent_v: Vec<f64>,
    // per local var: range into the flattened entries and the touched rows
    ranges: Vec<(usize, usize)>,
    rows: Vec<Vec<usize>>,
}

struct Lmi {
    m: usize,
    b: DVector<f64>,
    b_const: f64,
    blocks: Vec<Block>,
    total_dim: usize,
}

struct IpmOutput {
    status: SolveStatus,
    t: Vec<f64>,
    x: Vec<DMatrix<f64>>,
    iterations: usize,
    message: String,
    dobj: f64,
}

impl Lmi {
    fn new(r: &Reduced) -> Self {
        let blocks = r
            .blocks
            .iter()
            .map(|rb| {
                let mut blk = Block {
                    n: rb.size,
                    c: rb.constant.clone(),
                    vars: rb.vars.clone(),
                    ent_k: Vec::new(),
                    ent_r: Vec::new(),
                    ent_c: Vec::new(),
                    ent_v: Vec::new(),
                    ranges: Vec::with_capacity(rb.vars.len()),
                    rows: Vec::with_capacity(rb.vars.len()),
                };
                for (k, mat) in rb.mats.iter().enumerate() {
                    let start = blk.ent_v.len();
                    let mut rows = Vec::new();
                    for &(i, j, v) in mat {
                        blk.ent_k.push(k as u32);
                        blk.ent_r.push(i);
                        blk.ent_c.push(j);
                        blk.ent_v.push(v);
                        rows.push(i as usize);
                        rows.push(j as usize);
                    }
                    rows.sort_unstable();
                    rows.dedup();
                    blk.ranges.push((start, blk.ent_v.len()));
                    blk.rows.push(rows);
                }
                blk
            })
            .collect::<Vec<_>>();
        let total_dim = blocks.iter().map(|b| b.n).sum();
        Lmi {
            m: r.num_free(),
            b: DVector::from_vec(r.objective.clone()),
            b_const: r.objective_const,
            blocks,
            total_dim,
        }
    }

    /// `𝒜*(t)` per block.
    fn adjoint(&self, t: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|b| {
                let mut out = DMatrix::zeros(b.n, b.n);
                for e in 0..b.ent_v.len() {
                    let (i, j) = (b.ent_r[e] as usize, b.ent_c[e] as usize);
                    let v = b.ent_v[e] * t[b.vars[b.ent_k[e] as usize]];
                    out[(i, j)] += v;
                    if i != j {
                        out[(j, i)] += v;
                    }
                }
                out
            })
            .collect()
    }

    /// `𝒜(Y)`; `Y` need not be symmetric.
    fn apply(&self, y: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (b, yj) in self.blocks.iter().zip(y) {
            for e in 0..b.ent_v.len() {
                let (i, j) = (b.ent_r[e] as usize, b.ent_c[e] as usize);
                let val = if i == j {
                    yj[(i, i)]
                } else {
                    yj[(i, j)] + yj[(j, i)]
                };
                out[b.vars[b.ent_k[e] as usize]] += b.ent_v[e] * val;
            }
        }
        out
    }

    /// Schur complement `M_ki = Σ_j tr(A_kj X_j A_ij Z_j⁻¹)`.
    fn schur(&self, x: &[DMatrix<f64>], zinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.m, self.m);
        for (j, b) in self.blocks.iter().enumerate() {
            let n = b.n;
            let nv = b.vars.len();
            if nv == 0 {
                continue;
            }
            let xj = &x[j];
            let zj = &zinv[j];
            let mut acc = vec![0.0; nv];
            let mut g = DMatrix::zeros(n, n);
            for i in 0..nv {
                let rows = &b.rows[i];
                let (s, e) = b.ranges[i];
                // Tt = (A_i[R,:] Z⁻¹)ᵀ, built column by column
                let mut tt = DMatrix::zeros(n, rows.len());
                for p in s..e {
                    let (r, c, v) = (b.ent_r[p] as usize, b.ent_c[p] as usize, b.ent_v[p]);
                    let ar = rows.binary_search(&r).unwrap();
                    tt.column_mut(ar).axpy(v, &zj.column(c), 1.0);
                    if r != c {
                        let ac = rows.binary_search(&c).unwrap();
                        tt.column_mut(ac).axpy(v, &zj.column(r), 1.0);
                    }
                }
                let xr = xj.select_columns(rows.iter());
                g.gemm(1.0, &xr, &tt.transpose(), 0.0);
                acc.iter_mut().for_each(|a| *a = 0.0);
                for p in 0..b.ent_v.len() {
                    let (r, c) = (b.ent_r[p] as usize, b.ent_c[p] as usize);
                    let val = if r == c {
                        g[(r, r)]
                    } else {
                        g[(r, c)] + g[(c, r)]
                    };
                    acc[b.ent_k[p] as usize] += b.ent_v[p] * val;
                }
                let gi = b.vars[i];
                for (k, a) in acc.iter().enumerate() {
                    m[(b.vars[k], gi)] += a;
                }
            }
        }
        let mt = m.transpose();
        (m + mt) * 0.5
    }

    fn initial_point(&self) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut xs = Vec::with_capacity(self.blocks.len());
        let mut zs = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let sqn = (b.n as f64).sqrt();
            let mut norms = vec![0.0f64; b.vars.len()];
            for e in 0..b.ent_v.len() {
                let w = if b.ent_r[e] == b.ent_c[e] { 1.0 } else { 2.0 };
                norms[b.ent_k[e] as usize] += w * b.ent_v[e] * b.ent_v[e];
            }
            let mut xi: f64 = 10.0f64.max(sqn);
            let mut eta: f64 = 10.0f64.max(sqn).max(b.c.norm());
            for (k, nsq) in norms.iter().enumerate() {
                let na = nsq.sqrt();
                xi = xi.max(sqn * (1.0 + self.b[b.vars[k]].abs()) / (1.0 + na));
                eta = eta.max(na);
            }
            xs.push(DMatrix::identity(b.n, b.n) * xi);
            zs.push(DMatrix::identity(b.n, b.n) * eta);
        }
        (xs, zs)
    }

    fn run(&self, settings: &SolverSettings) -> IpmOutput {
        let nb = self.blocks.len();
        let (mut x, mut z) = self.initial_point();
        let mut t = DVector::zeros(self.m);
        let c_norm = self.blocks.iter().map(|b| b.c.norm_squared()).sum::<f64>().sqrt();
        let b_norm = self.b.norm();
        let mut best: Option<(f64, DVector<f64>, Vec<DMatrix<f64>>, f64, f64)> = None;
        let mut message = String::from("iteration limit reached");
        let mut status = None;
        let mut iterations = 0;
        let mut stalls = 0;
        let mut best_iter = 0;

        for iter in 0..settings.max_iter {
            iterations = iter;
            let zinv: Option<Vec<DMatrix<f64>>> = z.iter().map(|zj| spd_inverse(zj)).collect();
            let Some(zinv) = zinv else {
                message = "dual slack lost definiteness".into();
                break;
            };
            let at = self.adjoint(&t);
            let rd: Vec<DMatrix<f64>> = (0..nb).map(|j| &self.blocks[j].c - &z[j] - &at[j]).collect();
            let ax = self.apply(&x);
            let rp = &self.b - &ax;
            let pobj = self.b.dot(&t) + self.b_const;
            let cx: f64 = (0..nb).map(|j| self.blocks[j].c.dot(&x[j])).sum();
            let dobj = cx + self.b_const;
            let xz: f64 = (0..nb).map(|j| x[j].dot(&z[j])).sum();
            let mu = xz / self.total_dim as f64;
            let rd_norm = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt();
            let pinf = rd_norm / (1.0 + c_norm);
            let dinf = rp.norm() / (1.0 + b_norm);
            let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs());
            debug!(
                "ipm {iter:3}: pobj {pobj:.9e} dobj {dobj:.9e} gap {relgap:.2e} pinf {pinf:.2e} dinf {dinf:.2e} mu {mu:.2e}"
            );
            let merit = relgap.max(pinf).max(dinf);
            if best.as_ref().map_or(true, |b| merit < b.0) {
                best = Some((merit, t.clone(), x.clone(), pobj, dobj));
                best_iter = iter;
            } else if iter - best_iter >= STAGNATION_ITERS {
                message = format!("no progress in {STAGNATION_ITERS} iterations");
                break;
            }
            if relgap <= settings.gap_tol && pinf <= settings.feas_tol && dinf <= settings.feas_tol {
                status = Some(SolveStatus::Optimal);
                message = format!("converged in {iter} iterations");
                break;
            }
            // certificates of infeasibility
            if cx < 0.0 && ax.norm() / (-cx) < settings.feas_tol * 1e-1 && cx.abs() > 1e6 * (1.0 + b_norm) {
                status = Some(SolveStatus::Infeasible);
                message = "dual ray: X ⪰ 0 with 𝒜(X) ≈ 0 and ⟨C,X⟩ < 0".into();
                break;
            }
            let bt = self.b.dot(&t);
            if bt > 0.0 {
                let ray: f64 = (0..nb)
                    .map(|j| (&self.blocks[j].c - &rd[j]).norm_squared())
                    .sum::<f64>()
                    .sqrt();
                if ray / bt < settings.feas_tol * 1e-1 && bt > 1e6 * (1.0 + c_norm) {
                    status = Some(SolveStatus::Unbounded);
                    message = "primal ray: 𝒜*(t) ⪯ 0 with bᵀt > 0".into();
                    break;
                }
            }

            let schur = self.schur(&x, &zinv);
            let Some(chol) = SchurFactor::new(schur) else {
                message = "Schur complement factorization failed".into();
                break;
            };

            // predictor
            let xrz: Vec<DMatrix<f64>> = (0..nb).map(|j| &x[j] * &rd[j] * &zinv[j]).collect();
            let base_rhs = &self.b + self.apply(&xrz);
            let dir = |rhs: DVector<f64>, sig_mu: f64, corr: Option<&[DMatrix<f64>]>| {
                let dt = chol.solve(&rhs);
                let adt = self.adjoint(&dt);
                let dz: Vec<DMatrix<f64>> = (0..nb).map(|j| &rd[j] - &adt[j]).collect();
                let dx: Vec<DMatrix<f64>> = (0..nb)
                    .map(|j| {
                        let mut d = &zinv[j] * sig_mu - &x[j] - &x[j] * &dz[j] * &zinv[j];
                        if let Some(c) = corr {
                            d -= &c[j];
                        }
                        symmetrize(d)
                    })
                    .collect();
                (dt, dx, dz)
            };
            let (_, dxp, dzp) = dir(base_rhs.clone(), 0.0, None);
            let ap = (0..nb).map(|j| max_step(&x[j], &dxp[j])).fold(f64::INFINITY, f64::min).min(1.0);
            let ad = (0..nb).map(|j| max_step(&z[j], &dzp[j])).fold(f64::INFINITY, f64::min).min(1.0);
            let xz_pred: f64 = (0..nb)
                .map(|j| (&x[j] + &dxp[j] * ap).dot(&(&z[j] + &dzp[j] * ad)))
                .sum();
            let ratio = (xz_pred / xz).clamp(0.0, 1.0);
            let expon = if mu > 1e-6 { 1.0f64.max(3.0 * ap.min(ad).powi(2)) } else { 3.0 };
            let sigma = ratio.powf(expon).min(1.0);

            // corrector
            let second: Vec<DMatrix<f64>> = (0..nb).map(|j| &dxp[j] * &dzp[j] * &zinv[j]).collect();
            let zinv_a = self.apply(&zinv);
            let rhs = &base_rhs - zinv_a * (sigma * mu) + self.apply(&second);
            let (dt, dx, dz) = dir(rhs, sigma * mu, Some(&second));
            let tau = 0.9 + 0.09 * ap.min(ad);
            let ax_step = (0..nb).map(|j| max_step(&x[j], &dx[j])).fold(f64::INFINITY, f64::min);
            let az_step = (0..nb).map(|j| max_step(&z[j], &dz[j])).fold(f64::INFINITY, f64::min);
            let ap = (tau * ax_step).min(1.0);
            let ad = (tau * az_step).min(1.0);
            for j in 0..nb {
                x[j] += &dx[j] * ap;
                z[j] += &dz[j] * ad;
            }
            t += &dt * ad;
            if ap.max(ad) < 1e-8 {
                stalls += 1;
                if stalls >= 3 {
                    message = "step lengths collapsed".into();
                    break;
                }
            } else {
                stalls = 0;
            }
        }

        if let Some(s) = status {
            let dobj: f64 = (0..nb).map(|j| self.blocks[j].c.dot(&x[j])).sum::<f64>() + self.b_const;
            return IpmOutput {
                status: s,
                t: t.as_slice().to_vec(),
                x,
                iterations,
                message,
                dobj,
            };
        }
        let (merit, bt, bx, _pobj, dobj) = best.expect("at least one iterate");
        let status = if merit <= 1e-4 {
            SolveStatus::Inaccurate
        } else {
            SolveStatus::Failed
        };
        IpmOutput {
            status,
            t: bt.as_slice().to_vec(),
            x: bx,
            iterations,
            message: format!("{message}; best merit {merit:.2e}"),
            dobj,
        }
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| symmetrize(c.inverse()))
}

/// Cholesky factor of the diagonally equilibrated Schur complement, with
/// iterative refinement against the unscaled matrix.
struct SchurFactor {
    m: DMatrix<f64>,
    d: DVector<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SchurFactor {
    fn new(m: DMatrix<f64>) -> Option<Self> {
        let d = m.diagonal().map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 });
        let mut scaled = m.clone();
        for j in 0..scaled.ncols() {
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= d[i] * d[j];
            }
        }
        if let Some(chol) = scaled.clone().cholesky() {
            return Some(SchurFactor { m, d, chol });
        }
        let mut delta = 1e-14;
        while delta <= 1e-4 {
            let mut r = scaled.clone();
            for i in 0..r.nrows() {
                r[(i, i)] += delta;
            }
            if let Some(chol) = r.cholesky() {
                debug!("schur regularized by {delta:.1e}");
                return Some(SchurFactor { m, d, chol });
            }
            delta *= 10.0;
        }
        None
    }

    fn solve_once(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let scaled = rhs.component_mul(&self.d);
        self.chol.solve(&scaled).component_mul(&self.d)
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.solve_once(rhs);
        let mut r = rhs - &self.m * &x;
        let mut r_norm = r.norm();
        for _ in 0..20 {
            let cand = &x + self.solve_once(&r);
            let cand_r = rhs - &self.m * &cand;
            let cand_norm = cand_r.norm();
            if cand_norm >= r_norm {
                break;
            }
            let done = cand_norm > 0.5 * r_norm;
            x = cand;
            r = cand_r;
            r_norm = cand_norm;
            if done {
                break;
            }
        }
        x
    }
}

/// Largest `α` with `x + α·dx ⪰ 0` (infinite if every direction is PSD).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    if n == 1 {
        return if dx[(0, 0)] < 0.0 {
            -x[(0, 0)] / dx[(0, 0)]
        } else {
            f64::INFINITY
        };
    }
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(w) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(v) = l.solve_lower_triangular(&w.transpose()) else {
        return 0.0;
    };
    let lam = min_eigenvalue(symmetrize(v));
    if lam < 0.0 {
        -1.0 / lam
    } else {
        f64::INFINITY
    }
}

fn constant_only(lmi: &Lmi, settings: &SolverSettings) -> IpmOutput {
    let worst = lmi
        .blocks
        .iter()
        .map(|b| min_eigenvalue(b.c.clone()))
        .fold(f64::INFINITY, f64::min);
    let feasible = worst >= -settings.feas_tol;
    IpmOutput {
        status: if feasible {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        },
        t: Vec::new(),
        x: lmi.blocks.iter().map(|b| DMatrix::zeros(b.n, b.n)).collect(),
        iterations: 0,
        message: if feasible {
            "no free scalars after elimination".into()
        } else {
            format!("constant block has eigenvalue {worst:.3e}")
        },
        dobj: lmi.b_const,
    }
}

/// Maps the reduced solution back and recovers equality multipliers from
/// stationarity on the pivot columns: `Eᵀλ = c + Σ F_j*(X_j)`.
fn finish(problem: &ConicProblem, reduced: &Reduced, _lmi: &Lmi, out: IpmOutput) -> ConicSolution {
    let primal = reduced.expand(&out.t);
    let mut g = vec![0.0; problem.num_scalars];
    for &(k, c) in &problem.objective.terms {
        g[k] += c;
    }
    for (op, xj) in problem.psd_blocks.iter().zip(&out.x) {
        for (i, j, k, c) in op.upper_entries() {
            g[k] += if i == j { c * xj[(i, i)] } else { 2.0 * c * xj[(i, j)] };
        }
    }
    // One column per eliminated row: a scalar occurring in that row only if
    // there is one (its dual constraint then holds exactly), else the pivot.
    let mut occurrences = vec![0usize; problem.num_scalars];
    for e in &problem.equalities {
        for &(k, _) in &e.lhs.terms {
            occurrences[k] += 1;
        }
    }
    let cols: Vec<(usize, usize)> = reduced
        .pivots
        .iter()
        .map(|piv| {
            let single = problem.equalities[piv.row]
                .lhs
                .terms
                .iter()
                .filter(|t| occurrences[t.0] == 1)
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
            (piv.row, single.map_or(piv.var, |t| t.0))
        })
        .collect();
    let p = cols.len();
    let mut dual_eq = vec![0.0; problem.equalities.len()];
    if p > 0 {
        let col_of: std::collections::HashMap<usize, usize> =
            cols.iter().enumerate().map(|(a, &(_, v))| (v, a)).collect();
        // et[(col, row)] = E[row, col]
        let mut et = DMatrix::zeros(p, p);
        let mut rhs = DVector::zeros(p);
        for (a, &(row, var)) in cols.iter().enumerate() {
            for &(k, c) in &problem.equalities[row].lhs.terms {
                if let Some(&col) = col_of.get(&k) {
                    et[(col, a)] += c;
                }
            }
            rhs[col_of[&var]] = g[var];
        }
        if let Some(lambda) = et.lu().solve(&rhs) {
            for (a, &(row, _)) in cols.iter().enumerate() {
                dual_eq[row] = lambda[a];
            }
        }
    }
    ConicSolution {
        status: out.status,
        primal_obj: problem.objective_value(&primal),
        primal,
        dual_eq,
        dual_psd: out.x,
        dual_obj: out.dobj,
        iterations: out.iterations,
        message: out.message,
    }
}
