//! Controller synthesis: the occupation-measure moment relaxation, recovery
//! of the polynomial dual certificate from equality multipliers, and
//! controller extraction from the occupation-measure moments.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conic::{self, ConicProblem, ConicSolver, Equality, SolveStatus, SolverSettings};
use crate::error::{check_dim, Error, Result};
use crate::moments::{localizing_in_basis, pushforward_rows, LinearForm, MomentVector};
use crate::poly::{MonomialBasis, MultiIndex, Polynomial};
use crate::sets::{InputScaling, SemiAlgebraicSet, SetShape, SystemSpec};

/// Number of uniform samples used to validate dual certificates.
pub const CERTIFICATE_SAMPLES: usize = 10_000;

/// Offsets of the moment vectors inside the concatenated scalar vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub y0: usize,
    pub y0_hat: usize,
    pub y1: usize,
    pub z: usize,
    /// Length of each of `y0`, `ŷ0`, `y1`.
    pub len_y: usize,
    pub len_z: usize,
    /// Slack of the optional occupation-mass cap.
    pub cap_slack: Option<usize>,
}

impl Layout {
    fn new(len_y: usize, len_z: usize) -> Self {
        Layout {
            y0: 0,
            y0_hat: len_y,
            y1: 2 * len_y,
            z: 3 * len_y,
            len_y,
            len_z,
            cap_slack: None,
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.z + self.len_z + usize::from(self.cap_slack.is_some())
    }
}

/// Assembled relaxation of order `r` together with the bookkeeping needed to
/// unpack its solution. Autonomous systems are the `m = 0` case.
#[derive(Clone, Debug)]
pub struct SynthesisProblem {
    pub spec: SystemSpec,
    pub r: usize,
    pub d: usize,
    pub layout: Layout,
    pub problem: ConicProblem,
    pub basis_y: Arc<MonomialBasis>,
    pub basis_z: Arc<MonomialBasis>,
    /// Lebesgue moments of X over `basis_y`.
    pub lebesgue: Vec<f64>,
    /// Per-measure coordinate scaling applied before the conic solve.
    pub scaling: conic::Scaling,
}

impl SynthesisProblem {
    /// Index of the domination row for `basis_y` monomial `k`; the Liouville
    /// row of the same monomial is `liouville_row(k)`.
    pub fn domination_row(&self, k: usize) -> usize {
        self.layout.len_y + k
    }

    pub fn liouville_row(&self, k: usize) -> usize {
        k
    }
}

/// Optional extras of the relaxation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelaxationOptions {
    /// Upper bound on the occupation-measure mass `z_0`. Needed when X
    /// contains an invariant set of the dynamics, along which `z` can carry
    /// unbounded mass.
    pub mass_cap: Option<f64>,
}

/// Builds the moment relaxation of order `r` for `spec`. Inputs are
/// normalized to `[−1,1]^m` first if needed.
pub fn build_synthesis_sdp(spec: &SystemSpec, r: usize) -> Result<SynthesisProblem> {
    build_synthesis_sdp_with(spec, r, &RelaxationOptions::default())
}

pub fn build_synthesis_sdp_with(
    spec: &SystemSpec,
    r: usize,
    options: &RelaxationOptions,
) -> Result<SynthesisProblem> {
    let spec = if spec.is_normalized() {
        spec.clone()
    } else {
        spec.rescale_inputs()?
    };
    let minimum = spec.min_order().max(1);
    if r < minimum {
        return Err(Error::OrderTooSmall { order: r, minimum });
    }
    let n = spec.n();
    let m = spec.m();
    let nz = n + m;
    let d = spec.degree();
    let basis_y = Arc::new(MonomialBasis::new(n, 2 * r));
    let basis_z = Arc::new(MonomialBasis::new(nz, 2 * r * d));
    let lebesgue = spec.x_set().lebesgue_moments(&basis_y)?;
    let mut layout = Layout::new(basis_y.len(), basis_z.len());
    if let Some(cap) = options.mass_cap {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidArgument(format!("mass cap must be positive, got {cap}")));
        }
        layout.cap_slack = Some(layout.z + layout.len_z);
    }
    let mut problem = ConicProblem::new(layout.num_scalars());
    problem.objective = LinearForm::single(layout.y0, 1.0);

    // Liouville rows: y1_β + z_(β,0) − ℓ_z(φ^β) − y0_β = 0
    let phi = spec.phi();
    let rows = pushforward_rows(&phi, basis_y.monomials(), &basis_z)?;
    for (k, (beta, push)) in basis_y.monomials().iter().zip(rows).enumerate() {
        let lifted = beta.concat(&MultiIndex::zeros(m));
        let zk = basis_z.index_of(&lifted).expect("2r ≤ 2rd");
        let mut terms = vec![(layout.y1 + k, 1.0), (layout.z + zk, 1.0), (layout.y0 + k, -1.0)];
        terms.extend(push.terms.iter().map(|&(i, c)| (layout.z + i, -c)));
        problem.equalities.push(Equality {
            lhs: LinearForm::new(terms),
            rhs: 0.0,
        });
    }
    // Domination rows: y0_β + ŷ0_β = ∫_X x^β dx
    for (k, &yx) in lebesgue.iter().enumerate() {
        problem.equalities.push(Equality {
            lhs: LinearForm::new(vec![(layout.y0 + k, 1.0), (layout.y0_hat + k, 1.0)]),
            rhs: yx,
        });
    }

    if let (Some(slack), Some(cap)) = (layout.cap_slack, options.mass_cap) {
        problem.equalities.push(Equality {
            lhs: LinearForm::new(vec![(layout.z, 1.0), (slack, 1.0)]),
            rhs: cap,
        });
        problem
            .psd_blocks
            .push(crate::moments::LinearMatrixOperator::from_fn(1, |_, _| LinearForm::single(slack, 1.0)));
    }

    let with_one = |set: &SemiAlgebraicSet| -> Vec<Polynomial> {
        std::iter::once(Polynomial::constant(set.num_vars(), 1.0))
            .chain(set.ineqs().iter().cloned())
            .collect()
    };
    // Moments of each measure are scaled by the extent of its support so
    // that the solver works with entries of comparable size.
    let rx = radii(spec.x_set(), None);
    let rz = rx.clone();
    let mut rxu = rx.clone();
    rxu.resize(nz, 1.0);
    let col_x = monomial_scales(&basis_y, &rx);
    let col_z = monomial_scales(&basis_y, &rz);
    let col_xu = monomial_scales(&basis_z, &rxu);
    let mut scalars = Vec::with_capacity(layout.num_scalars());
    scalars.extend_from_slice(&col_x);
    scalars.extend_from_slice(&col_x);
    scalars.extend_from_slice(&col_z);
    scalars.extend_from_slice(&col_xu);
    if layout.cap_slack.is_some() {
        scalars.push(1.0);
    }
    let mut block_rows: Vec<Vec<f64>> = problem.psd_blocks.iter().map(|b| vec![1.0; b.size()]).collect();
    let inv = |c: &[f64], len: usize| c[..len].iter().map(|v| 1.0 / v).collect::<Vec<f64>>();

    let half = |h: &Polynomial| h.degree().div_ceil(2);
    for h in with_one(spec.x_set()) {
        let op = localizing_in_basis(&h, r - half(&h), &basis_y);
        let rows = inv(&col_x, op.size());
        problem.psd_blocks.push(op.shifted(layout.y0));
        problem.psd_blocks.push(op.shifted(layout.y0_hat));
        block_rows.push(rows.clone());
        block_rows.push(rows);
    }
    for h in with_one(spec.x_set()) {
        let lifted = h.embed(nz, 0)?;
        let op = localizing_in_basis(&lifted, r * d - half(&h), &basis_z);
        block_rows.push(inv(&col_xu, op.size()));
        problem.psd_blocks.push(op.shifted(layout.z));
    }
    if let Some(u_set) = spec.u_set() {
        for h in u_set.ineqs() {
            let lifted = h.embed(nz, n)?;
            let op = localizing_in_basis(&lifted, r * d - half(h), &basis_z);
            block_rows.push(inv(&col_xu, op.size()));
            problem.psd_blocks.push(op.shifted(layout.z));
        }
    }
    for h in with_one(spec.z_set()) {
        let op = localizing_in_basis(&h, r - half(&h), &basis_y);
        block_rows.push(inv(&col_z, op.size()));
        problem.psd_blocks.push(op.shifted(layout.y1));
    }

    Ok(SynthesisProblem {
        spec,
        r,
        d,
        layout,
        problem,
        basis_y,
        basis_z,
        lebesgue,
        scaling: conic::Scaling { scalars, block_rows },
    })
}

/// Half-widths of the bounding box around the origin, one per coordinate.
fn radii(set: &SemiAlgebraicSet, fallback: Option<&[f64]>) -> Vec<f64> {
    let n = set.num_vars();
    match set.bounding_box() {
        Some(b) => b
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| {
                let r = lo.abs().max(hi.abs());
                if r.is_finite() && r > 0.0 {
                    r
                } else {
                    fallback.map_or(1.0, |f| f[i])
                }
            })
            .collect(),
        None => fallback.map_or_else(|| vec![1.0; n], <[f64]>::to_vec),
    }
}

fn monomial_scales(basis: &MonomialBasis, radii: &[f64]) -> Vec<f64> {
    basis
        .monomials()
        .iter()
        .map(|a| {
            a.exps()
                .iter()
                .zip(radii)
                .map(|(&e, &r)| r.powi(e as i32))
                .product()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct MomentSolution {
    pub y0: MomentVector,
    pub y0_hat: MomentVector,
    pub y1: MomentVector,
    /// Occupation-measure moments over `(x, u)`.
    pub z: MomentVector,
}

/// Worst sampled values of the certificate conditions; all should be ≥ `-eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub eps: f64,
    pub min_w: f64,
    pub min_w_minus_v_minus_1: f64,
    pub min_v_on_z: f64,
    pub min_v_decrease: f64,
    /// `Σ_β w_β y^X_β`.
    pub dual_objective: f64,
}

impl CertificateCheck {
    pub fn passes(&self) -> bool {
        [
            self.min_w,
            self.min_w_minus_v_minus_1,
            self.min_v_on_z,
            self.min_v_decrease,
        ]
        .iter()
        .all(|&v| v >= -self.eps)
    }
}

/// Polynomials `v`, `w` recovered from the equality multipliers.
#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub v: Polynomial,
    pub w: Polynomial,
    pub verified: bool,
    pub check: CertificateCheck,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    pub order: usize,
    pub status: SolveStatus,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    pub equality_residual: f64,
    pub min_block_eigenvalue: f64,
    /// `|y1_0 − y0_0|`.
    pub mass_conservation: f64,
    pub volume_x: f64,
    pub num_scalars: usize,
    pub num_equalities: usize,
    pub num_blocks: usize,
    pub largest_block: usize,
    pub solve_seconds: f64,
    pub certificate: CertificateCheck,
    pub certificate_verified: bool,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct SynthesisSolution {
    pub moments: MomentSolution,
    pub certificate: DualCertificate,
    pub diagnostics: Diagnostics,
}

impl SynthesisSolution {
    /// Extracts a controller of degree `d_u` (at most the relaxation order).
    pub fn controller(&self, d_u: usize, svd_tol: f64, scaling: &InputScaling) -> Result<ControllerPoly> {
        if d_u > self.diagnostics.order {
            return Err(Error::InvalidArgument(format!(
                "controller degree {d_u} exceeds the relaxation order {}",
                self.diagnostics.order
            )));
        }
        let n = self.moments.y0.num_vars();
        let mut c = extract_controller(&self.moments.z, n, d_u, svd_tol)?;
        c.input_scaling = scaling.clone();
        c.order = Some(self.diagnostics.order);
        Ok(c)
    }
}

/// Solves with the embedded interior-point backend.
pub fn solve_synthesis(problem: &SynthesisProblem, settings: &SolverSettings) -> Result<SynthesisSolution> {
    solve_synthesis_with(problem, &conic::InteriorPointSolver, settings)
}

/// Solves and unpacks; statuses other than optimal or inaccurate become
/// [`Error::Solver`].
pub fn solve_synthesis_with(
    problem: &SynthesisProblem,
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> Result<SynthesisSolution> {
    let sol = solve_synthesis_best_effort(problem, solver, settings)?;
    match sol.diagnostics.status {
        SolveStatus::Optimal | SolveStatus::Inaccurate => Ok(sol),
        status => Err(Error::Solver {
            status,
            message: format!(
                "order {}: {} (gap {:.2e}, equality residual {:.2e}, min eigenvalue {:.2e}, {} iterations)",
                problem.r,
                sol.diagnostics.message,
                sol.diagnostics.relative_gap,
                sol.diagnostics.equality_residual,
                sol.diagnostics.min_block_eigenvalue,
                sol.diagnostics.iterations
            ),
        }),
    }
}

/// Like [`solve_synthesis_with`] but unpacks whatever iterate the solver
/// returned, whatever its status. The status is in the diagnostics.
pub fn solve_synthesis_best_effort(
    problem: &SynthesisProblem,
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> Result<SynthesisSolution> {
    let started = Instant::now();
    let scaled = problem.scaling.apply(&problem.problem);
    let sol = problem.scaling.unscale(solver.solve(&scaled, settings));
    let solve_seconds = started.elapsed().as_secs_f64();
    let cp = &problem.problem;
    let eq_res = cp.equality_residual(&sol.primal);
    let min_eig = cp
        .block_min_eigenvalues(&sol.primal)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let l = &problem.layout;
    let slice = |off: usize, len: usize| sol.primal[off..off + len].to_vec();
    let by = problem.basis_y.clone();
    let moments = MomentSolution {
        y0: MomentVector::new(by.clone(), slice(l.y0, l.len_y))?,
        y0_hat: MomentVector::new(by.clone(), slice(l.y0_hat, l.len_y))?,
        y1: MomentVector::new(by.clone(), slice(l.y1, l.len_y))?,
        z: MomentVector::new(problem.basis_z.clone(), slice(l.z, l.len_z))?,
    };

    let n = problem.spec.n();
    let coeffs_of = |row: &dyn Fn(usize) -> usize| {
        Polynomial::from_terms(
            n,
            by.monomials()
                .iter()
                .enumerate()
                .map(|(k, a)| (a.clone(), sol.dual_eq[row(k)])),
        )
    };
    let w = coeffs_of(&|k| problem.domination_row(k))?;
    let v = coeffs_of(&|k| problem.liouville_row(k))?;
    let dual_objective: f64 = (0..l.len_y)
        .map(|k| sol.dual_eq[problem.domination_row(k)] * problem.lebesgue[k])
        .sum();
    let check = check_certificate(&problem.spec, &v, &w, dual_objective, CERTIFICATE_SAMPLES)?;
    let verified =
        check.passes() && (dual_objective - sol.dual_obj).abs() <= 1e-6 * (1.0 + sol.dual_obj.abs());
    let certificate = DualCertificate {
        v,
        w,
        verified,
        check: check.clone(),
    };
    let largest_block = cp.psd_blocks.iter().map(|b| b.size()).max().unwrap_or(0);
    let diagnostics = Diagnostics {
        order: problem.r,
        status: sol.status,
        primal_obj: sol.primal_obj,
        dual_obj: sol.dual_obj,
        relative_gap: sol.relative_gap(),
        iterations: sol.iterations,
        equality_residual: eq_res,
        min_block_eigenvalue: min_eig,
        mass_conservation: (moments.y1.mass() - moments.y0.mass()).abs(),
        volume_x: problem.lebesgue[0],
        num_scalars: cp.num_scalars,
        num_equalities: cp.equalities.len(),
        num_blocks: cp.psd_blocks.len(),
        largest_block,
        solve_seconds,
        certificate: check,
        certificate_verified: verified,
        message: sol.message,
    };
    Ok(SynthesisSolution {
        moments,
        certificate,
        diagnostics,
    })
}

fn sample_in(set: &SemiAlgebraicSet, fallback: &SemiAlgebraicSet, rng: &mut ChaCha8Rng) -> Result<Option<Vec<f64>>> {
    match set.shape() {
        SetShape::Box { .. } | SetShape::Ball { .. } => set.sample_uniform(rng).map(Some),
        SetShape::Generic => {
            // rejection from the carrier set; give up on (nearly) empty sets
            for _ in 0..1000 {
                let x = fallback.sample_uniform(rng)?;
                if set.contains(&x) {
                    return Ok(Some(x));
                }
            }
            Ok(None)
        }
    }
}

/// Evaluates the certificate conditions on uniform samples of X, Z and X×U.
pub(crate) fn check_certificate(
    spec: &SystemSpec,
    v: &Polynomial,
    w: &Polynomial,
    dual_objective: f64,
    samples: usize,
) -> Result<CertificateCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let n = spec.n();
    let m = spec.m();
    let mut max_w = 0.0f64;
    let mut min_w = f64::INFINITY;
    let mut min_wv = f64::INFINITY;
    let mut min_vz = f64::INFINITY;
    let mut min_dec = f64::INFINITY;
    let phi = spec.phi();
    for _ in 0..samples {
        let x = spec.x_set().sample_uniform(&mut rng)?;
        let wx = w.eval_unchecked(&x);
        let vx = v.eval_unchecked(&x);
        max_w = max_w.max(wx.abs());
        min_w = min_w.min(wx);
        min_wv = min_wv.min(wx - vx - 1.0);
        let xu = {
            let x2 = spec.x_set().sample_uniform(&mut rng)?;
            let mut p = x2;
            p.extend((0..m).map(|_| rand::Rng::gen_range(&mut rng, -1.0..=1.0)));
            p
        };
        let next: Vec<f64> = phi.iter().map(|p| p.eval_unchecked(&xu)).collect();
        min_dec = min_dec.min(v.eval_unchecked(&xu[..n]) - v.eval_unchecked(&next));
        if let Some(zs) = sample_in(spec.z_set(), spec.x_set(), &mut rng)? {
            min_vz = min_vz.min(v.eval_unchecked(&zs));
        }
    }
    Ok(CertificateCheck {
        eps: 1e-6 * (1.0 + max_w),
        min_w,
        min_w_minus_v_minus_1: min_wv,
        min_v_on_z: if min_vz.is_finite() { min_vz } else { 0.0 },
        min_v_decrease: min_dec,
        dual_objective,
    })
}

/// Clips every component to `[−1, 1]`.
pub fn clamp(u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
}

/// State feedback `u(x)` with one polynomial per normalized input.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerPoly {
    pub n: usize,
    pub degree: usize,
    pub coeffs: Vec<Polynomial>,
    pub input_scaling: InputScaling,
    /// Relaxation order the controller was extracted from.
    pub order: Option<usize>,
}

impl ControllerPoly {
    pub fn new(coeffs: Vec<Polynomial>, n: usize, input_scaling: InputScaling) -> Result<Self> {
        for c in &coeffs {
            check_dim("controller variables", n, c.num_vars())?;
        }
        check_dim("controller input scaling", coeffs.len(), input_scaling.scale.len())?;
        check_dim("controller input shift", coeffs.len(), input_scaling.shift.len())?;
        let degree = coeffs.iter().map(Polynomial::degree).max().unwrap_or(0);
        Ok(ControllerPoly {
            n,
            degree,
            coeffs,
            input_scaling,
            order: None,
        })
    }

    pub fn zero(n: usize, m: usize) -> Self {
        ControllerPoly::new(vec![Polynomial::zero(n); m], n, InputScaling::identity(m))
            .expect("consistent dimensions")
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    /// Normalized controller value without clipping.
    pub fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        self.coeffs.iter().map(|p| p.eval_unchecked(x)).collect()
    }

    /// Normalized value clipped to `[−1,1]^m`; this is what drives the plant.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        clamp(&self.eval_raw(x))
    }

    /// Clipped value in original input units.
    pub fn eval_physical(&self, x: &[f64]) -> Vec<f64> {
        self.input_scaling.to_physical(&self.eval(x))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ControllerFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ControllerFile = serde_json::from_str(text)?;
        check_dim("controller coefficient count", f.m, f.coeffs.len())?;
        let mut c = ControllerPoly::new(f.coeffs, f.n, f.input_scaling)?;
        if c.degree > f.degree {
            return Err(Error::Format(format!(
                "controller polynomials have degree {} above the declared {}",
                c.degree, f.degree
            )));
        }
        c.degree = f.degree;
        c.order = f.order;
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct ControllerFile {
    n: usize,
    m: usize,
    degree: usize,
    coeffs: Vec<Polynomial>,
    input_scaling: InputScaling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<usize>,
}

impl From<&ControllerPoly> for ControllerFile {
    fn from(c: &ControllerPoly) -> Self {
        ControllerFile {
            n: c.n,
            m: c.m(),
            degree: c.degree,
            coeffs: c.coeffs.clone(),
            input_scaling: c.input_scaling.clone(),
            order: c.order,
        }
    }
}

/// Least-squares fit `M_{d_u}(ρ)·u_i = τ_i` with a truncated-SVD
/// pseudo-inverse, where `ρ_α = z_(α,0)` and `τ_{i,α} = z_(α,eᵢ)`.
///
/// `z` lives over `(x, u)` with the first `n` variables being the state.
/// Singular values at or below `svd_tol·σ_max` are discarded.
pub fn extract_controller(z: &MomentVector, n: usize, d_u: usize, svd_tol: f64) -> Result<ControllerPoly> {
    let nz = z.num_vars();
    if nz <= n {
        return Err(Error::InvalidArgument(format!(
            "occupation measure has {nz} variables, expected more than the {n} states"
        )));
    }
    let m = nz - n;
    let needed = (2 * d_u).max(d_u + 1);
    if z.max_degree() < needed {
        return Err(Error::DegreeOverflow {
            degree: needed,
            max: z.max_degree(),
        });
    }
    let basis = MonomialBasis::new(n, d_u);
    let zeros_u = MultiIndex::zeros(m);
    let at = |alpha: &MultiIndex, u: &MultiIndex| z.get(&alpha.concat(u)).expect("degree checked");
    let s = basis.len();
    let rho = DMatrix::from_fn(s, s, |i, j| at(&basis.get(i).plus(basis.get(j)), &zeros_u));
    let svd = rho.svd(true, true);
    let sigma_max = svd.singular_values.max();
    if !(sigma_max > svd_tol) {
        return Err(Error::DegenerateMeasure);
    }
    let pinv = svd
        .pseudo_inverse(svd_tol * sigma_max)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut coeffs = Vec::with_capacity(m);
    for i in 0..m {
        let ei = MultiIndex::unit(m, i);
        let tau = DVector::from_fn(s, |k, _| at(basis.get(k), &ei));
        let u = &pinv * tau;
        coeffs.push(Polynomial::from_terms(
            n,
            basis.monomials().iter().cloned().zip(u.iter().copied()),
        )?);
    }
    let mut c = ControllerPoly::new(coeffs, n, InputScaling::identity(m))?;
    c.degree = d_u;
    Ok(c)
}
