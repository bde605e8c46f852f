//! Closed-loop simulation: rollouts, grid controllability maps, CSV export
//! and an LQR baseline.

use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::poly::{MultiIndex, Polynomial};
use crate::sets::SystemSpec;
use crate::synth::ControllerPoly;

pub const DEFAULT_STEPS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Entered Z at the given step.
    Reached(usize),
    /// Left X at the given step before reaching Z.
    LeftX(usize),
    Timeout,
    /// The initial state is not in X.
    OutsideX,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Reached(_) => "reached",
            Outcome::LeftX(_) => "left_X",
            Outcome::Timeout => "timeout",
            Outcome::OutsideX => "outside_X",
        }
    }

    pub fn is_reached(&self) -> bool {
        matches!(self, Outcome::Reached(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutResult {
    pub outcome: Outcome,
    /// `(x_t, u_t)` for every visited state, where `u_t` is the clamped
    /// normalized input the controller issues at `x_t`. The last entry is the
    /// terminal state.
    pub trajectory: Vec<(Vec<f64>, Vec<f64>)>,
    pub steps_used: usize,
}

/// Simulates `x⁺ = f(x) + g(x)·clamp(u(x))` from `x0` for at most `steps`
/// steps. The Z test precedes the X test at every step.
pub fn rollout(spec: &SystemSpec, ctrl: &ControllerPoly, x0: &[f64], steps: usize) -> Result<RolloutResult> {
    check_controller(spec, ctrl)?;
    check_dim("initial state", spec.n(), x0.len())?;
    if !spec.x_set().contains(x0) {
        return Err(Error::OutsideX);
    }
    let mut trajectory = Vec::new();
    let (outcome, steps_used) = simulate(spec, ctrl, x0, steps, |x, u| trajectory.push((x.to_vec(), u.to_vec())));
    Ok(RolloutResult {
        outcome,
        trajectory,
        steps_used,
    })
}

/// Outcome and step count only; skips recording the trajectory.
pub fn rollout_outcome(spec: &SystemSpec, ctrl: &ControllerPoly, x0: &[f64], steps: usize) -> Result<(Outcome, usize)> {
    check_controller(spec, ctrl)?;
    check_dim("initial state", spec.n(), x0.len())?;
    if !spec.x_set().contains(x0) {
        return Ok((Outcome::OutsideX, 0));
    }
    Ok(simulate(spec, ctrl, x0, steps, |_, _| {}))
}

fn check_controller(spec: &SystemSpec, ctrl: &ControllerPoly) -> Result<()> {
    check_dim("controller states", spec.n(), ctrl.n)?;
    check_dim("controller inputs", spec.m(), ctrl.m())
}

fn simulate(
    spec: &SystemSpec,
    ctrl: &ControllerPoly,
    x0: &[f64],
    steps: usize,
    mut record: impl FnMut(&[f64], &[f64]),
) -> (Outcome, usize) {
    let mut x = x0.to_vec();
    for t in 0..=steps {
        let u = ctrl.eval(&x);
        record(&x, &u);
        if spec.z_set().contains(&x) {
            return (Outcome::Reached(t), t);
        }
        if !spec.x_set().contains(&x) {
            return (Outcome::LeftX(t), t);
        }
        if t == steps {
            break;
        }
        x = spec.step(&x, &u);
    }
    (Outcome::Timeout, steps)
}

/// One axis of a grid: `N` evenly spaced values over a range, or a fixed value.
#[derive(Clone, Debug, PartialEq)]
pub enum Axis {
    Points { count: usize, range: Option<(f64, f64)> },
    Fixed(f64),
}

/// Axes joined by `x`. Each axis is `N` (over the bounding box of X),
/// `N[a:b]` (over `[a, b]`) or `=v` (fixed coordinate). For example `20x20`,
/// `40x40x=0` or `3[-2:2]x1[0:0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidArgument(format!("grid spec {s:?}: {why}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("bad number"));
        let axes = s
            .split('x')
            .map(|tok| {
                let tok = tok.trim();
                if let Some(v) = tok.strip_prefix('=') {
                    return Ok(Axis::Fixed(num(v)?));
                }
                let (count, range) = match tok.split_once('[') {
                    Some((c, rest)) => {
                        let body = rest.strip_suffix(']').ok_or_else(|| bad("missing ']'"))?;
                        let (a, b) = body.split_once(':').ok_or_else(|| bad("range needs a:b"))?;
                        (c, Some((num(a)?, num(b)?)))
                    }
                    None => (tok, None),
                };
                let count: usize = count.parse().map_err(|_| bad("bad count"))?;
                if count == 0 {
                    return Err(bad("counts must be positive"));
                }
                Ok(Axis::Points { count, range })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridSpec { axes })
    }
}

impl GridSpec {
    pub fn uniform(counts: &[usize]) -> Self {
        GridSpec {
            axes: counts.iter().map(|&count| Axis::Points { count, range: None }).collect(),
        }
    }

    /// Grid vertices in row-major order (last axis fastest). `bbox` supplies
    /// ranges for axes without one.
    pub fn points(&self, bbox: Option<&[(f64, f64)]>) -> Result<Vec<Vec<f64>>> {
        if let Some(b) = bbox {
            check_dim("grid axes", b.len(), self.axes.len())?;
        }
        let values: Vec<Vec<f64>> = self
            .axes
            .iter()
            .enumerate()
            .map(|(i, axis)| match axis {
                Axis::Fixed(v) => Ok(vec![*v]),
                Axis::Points { count, range } => {
                    let (a, b) = match (range, bbox) {
                        (Some(r), _) => *r,
                        (None, Some(bb)) => bb[i],
                        (None, None) => {
                            return Err(Error::InvalidArgument(format!(
                                "grid axis {} has no range and no bounding box is available",
                                i + 1
                            )))
                        }
                    };
                    Ok(linspace(a, b, *count))
                }
            })
            .collect::<Result<_>>()?;
        let total: usize = values.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        for mut k in 0..total {
            let mut p = vec![0.0; values.len()];
            for (i, vals) in values.iter().enumerate().rev() {
                p[i] = vals[k % vals.len()];
                k /= vals.len();
            }
            out.push(p);
        }
        Ok(out)
    }
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..count)
        .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridReport {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<Outcome>,
}

impl GridReport {
    pub fn count(&self, label: &str) -> usize {
        self.labels.iter().filter(|o| o.label() == label).count()
    }

    pub fn reached(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.points
            .iter()
            .zip(&self.labels)
            .filter(|(_, o)| o.is_reached())
            .map(|(p, _)| p)
    }
}

/// Rolls out from every grid vertex; ranges default to the bounding box of X.
pub fn grid_verify(spec: &SystemSpec, ctrl: &ControllerPoly, grid: &GridSpec, steps: usize) -> Result<GridReport> {
    check_controller(spec, ctrl)?;
    let bbox = spec.x_set().bounding_box();
    let points = grid.points(bbox.as_deref())?;
    check_dim("grid dimension", spec.n(), points.first().map_or(spec.n(), Vec::len))?;
    let labels = points
        .par_iter()
        .map(|p| rollout_outcome(spec, ctrl, p, steps).map(|(o, _)| o))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridReport { points, labels })
}

fn indexed_header(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}{i}"))
}

/// Shortest round-trip formatting, with `-0` printed as `0`.
fn fmt(v: f64) -> String {
    (v + 0.0).to_string()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// `t,x1..xn,u1..um`, one row per visited state.
pub fn write_trajectory_csv<W: Write>(out: W, result: &RolloutResult, n: usize, m: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(indexed_header("x", n))
        .chain(indexed_header("u", m))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for (t, (x, u)) in result.trajectory.iter().enumerate() {
        let row: Vec<String> = std::iter::once(t.to_string())
            .chain(x.iter().chain(u).map(|&v| fmt(v)))
            .collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `x1..xn,outcome,steps`, one row per grid vertex.
pub fn write_grid_csv<W: Write>(out: W, report: &GridReport) -> Result<()> {
    let n = report.points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = indexed_header("x", n)
        .chain(["outcome".to_string(), "steps".to_string()])
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for (p, o) in report.points.iter().zip(&report.labels) {
        let steps = match o {
            Outcome::Reached(t) | Outcome::LeftX(t) => *t,
            Outcome::Timeout | Outcome::OutsideX => 0,
        };
        let row: Vec<String> = p
            .iter()
            .map(|&v| fmt(v))
            .chain([o.label().to_string(), steps.to_string()])
            .collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `x1..xn,member`, one row per point.
pub fn write_levelset_csv<W: Write>(out: W, points: &[Vec<f64>], members: &[bool]) -> Result<()> {
    check_dim("level-set labels", points.len(), members.len())?;
    let n = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = indexed_header("x", n).chain(["member".to_string()]).collect();
    w.write_record(&header).map_err(csv_err)?;
    for (p, &m) in points.iter().zip(members) {
        let row: Vec<String> = p.iter().map(|&v| fmt(v)).chain([m.to_string()]).collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub const RICCATI_TOL: f64 = 1e-10;
pub const RICCATI_MAX_ITER: usize = 100_000;

#[derive(Clone, Debug)]
pub struct LqrBaseline {
    /// `u(x) = u* − K(x − x*)` in normalized input units.
    pub controller: ControllerPoly,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    /// Spectral radius of `A − BK`.
    pub spectral_radius: f64,
    pub iterations: usize,
}

/// Infinite-horizon discrete LQR around the fixed point `(x*, u*)`.
///
/// `q` and `r` weight the state and the input in original units; the input
/// weight is mapped through the system's input scaling. `u_star` is in
/// original units and defaults to 0.
pub fn lqr_baseline(
    spec: &SystemSpec,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x_star: &[f64],
    u_star: Option<&[f64]>,
) -> Result<LqrBaseline> {
    let (n, m) = (spec.n(), spec.m());
    check_dim("LQR state", n, x_star.len())?;
    check_dim("Q rows", n, q.nrows())?;
    check_dim("Q columns", n, q.ncols())?;
    check_dim("R rows", m, r.nrows())?;
    check_dim("R columns", m, r.ncols())?;
    let scaling = spec.input_scaling();
    let u_phys = u_star.map_or_else(|| vec![0.0; m], <[f64]>::to_vec);
    check_dim("LQR input", m, u_phys.len())?;
    let u_norm: Vec<f64> = (0..m).map(|j| (u_phys[j] - scaling.shift[j]) / scaling.scale[j]).collect();
    let next = spec.step(x_star, &u_norm);
    let drift = next.iter().zip(x_star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if drift > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "(x*, u*) is not a fixed point: |φ(x*, u*) − x*| = {drift:.3e}"
        )));
    }

    let a = DMatrix::from_fn(n, n, |i, k| {
        let mut v = spec.f()[i].derivative(k).eval_unchecked(x_star);
        for j in 0..m {
            v += spec.g()[i][j].derivative(k).eval_unchecked(x_star) * u_norm[j];
        }
        v
    });
    let b = DMatrix::from_fn(n, m, |i, j| spec.g()[i][j].eval_unchecked(x_star));
    let s = DMatrix::from_diagonal(&DVector::from_column_slice(&scaling.scale));
    let r_norm = &s * r * &s;
    let (p, k, iterations) = riccati(&a, &b, q, &r_norm)?;

    let closed = &a - &b * &k;
    let spectral_radius = closed
        .complex_eigenvalues()
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max);

    let coeffs = (0..m)
        .map(|j| {
            let mut terms = vec![(MultiIndex::zeros(n), u_norm[j])];
            for i in 0..n {
                terms[0].1 += k[(j, i)] * x_star[i];
                terms.push((MultiIndex::unit(n, i), -k[(j, i)]));
            }
            Polynomial::from_terms(n, terms)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut controller = ControllerPoly::new(coeffs, n, scaling.clone())?;
    controller.degree = 1;
    Ok(LqrBaseline {
        controller,
        a,
        b,
        k,
        p,
        spectral_radius,
        iterations,
    })
}

/// Fixed-point iteration `P ← Q + AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA` from `P = Q`,
/// returning `(P, K, iterations)` with `K = (R+BᵀPB)⁻¹BᵀPA`.
pub fn riccati(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, usize)> {
    let gain = |p: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let bt_p = b.transpose() * p;
        let lhs = r + &bt_p * b;
        lhs.lu()
            .solve(&(&bt_p * a))
            .ok_or_else(|| Error::Riccati("R + BᵀPB is singular".into()))
    };
    let mut p = q.clone();
    for it in 1..=RICCATI_MAX_ITER {
        let k = gain(&p)?;
        let at_p = a.transpose() * &p;
        let mut next = q + &at_p * a - &at_p * b * &k;
        next = (&next + next.transpose()) * 0.5;
        if !next.iter().all(|v| v.is_finite()) || next.norm() > 1e14 {
            return Err(Error::Riccati(format!("iterates diverged after {it} steps")));
        }
        let delta = (&next - &p).norm();
        p = next;
        if delta <= RICCATI_TOL {
            let k = gain(&p)?;
            return Ok((p, k, it));
        }
    }
    Err(Error::Riccati(format!(
        "no convergence to {RICCATI_TOL:e} within {RICCATI_MAX_ITER} iterations"
    )))
}
