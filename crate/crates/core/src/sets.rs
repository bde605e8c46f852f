//! Semi-algebraic sets, Lebesgue moments on boxes and balls, and the
//! control-affine system description.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::poly::{MonomialBasis, MultiIndex, Polynomial};

#[derive(Clone, Debug, PartialEq)]
pub enum SetShape {
    Box { bounds: Vec<(f64, f64)> },
    Ball { center: Vec<f64>, radius: f64 },
    Generic,
}

/// `{x : hᵢ(x) ≥ 0 for all i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiAlgebraicSet {
    num_vars: usize,
    ineqs: Vec<Polynomial>,
    shape: SetShape,
}

impl SemiAlgebraicSet {
    /// Box `Π [aᵢ, bᵢ]` described by `(xᵢ − aᵢ)(bᵢ − xᵢ) ≥ 0`.
    pub fn new_box(bounds: Vec<(f64, f64)>) -> Result<Self> {
        let n = bounds.len();
        let mut ineqs = Vec::with_capacity(n);
        for (i, &(a, b)) in bounds.iter().enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidSet(format!(
                    "box coordinate {i} has bounds [{a}, {b}]"
                )));
            }
            let xi = Polynomial::var(n, i);
            let lo = &xi - &Polynomial::constant(n, a);
            let hi = &Polynomial::constant(n, b) - &xi;
            ineqs.push(&lo * &hi);
        }
        Ok(SemiAlgebraicSet {
            num_vars: n,
            ineqs,
            shape: SetShape::Box { bounds },
        })
    }

    /// Closed ball described by `R² − ‖x − c‖² ≥ 0`.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = center.len();
        if n == 0 {
            return Err(Error::InvalidSet("ball needs at least one coordinate".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSet(format!("ball radius {radius}")));
        }
        let mut h = Polynomial::constant(n, radius * radius);
        for (i, &ci) in center.iter().enumerate() {
            let d = &Polynomial::var(n, i) - &Polynomial::constant(n, ci);
            h = &h - &(&d * &d);
        }
        Ok(SemiAlgebraicSet {
            num_vars: n,
            ineqs: vec![h],
            shape: SetShape::Ball { center, radius },
        })
    }

    pub fn generic(ineqs: Vec<Polynomial>) -> Result<Self> {
        let n = match ineqs.first() {
            Some(h) => h.num_vars(),
            None => return Err(Error::InvalidSet("no defining inequalities".into())),
        };
        for h in &ineqs {
            check_dim("set inequality", n, h.num_vars())?;
        }
        Ok(SemiAlgebraicSet {
            num_vars: n,
            ineqs,
            shape: SetShape::Generic,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn ineqs(&self) -> &[Polynomial] {
        &self.ineqs
    }

    pub fn shape(&self) -> &SetShape {
        &self.shape
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_with_tol(x, 0.0)
    }

    /// Membership with slack: every `hᵢ(x) ≥ −tol`.
    pub fn contains_with_tol(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.num_vars && self.ineqs.iter().all(|h| h.eval_unchecked(x) >= -tol)
    }

    /// `⌈deg hᵢ / 2⌉` per defining inequality.
    pub fn half_degrees(&self) -> Vec<usize> {
        self.ineqs.iter().map(|h| h.degree().div_ceil(2)).collect()
    }

    /// Smallest order for which every localizing matrix is defined.
    pub fn min_order(&self) -> usize {
        self.half_degrees().into_iter().max().unwrap_or(0)
    }

    /// SOS multiplier orders `r − rᵢ` for `h₀ = 1, h₁, …`.
    pub fn quadratic_module_degrees(&self, r: usize) -> Result<Vec<usize>> {
        let minimum = self.min_order();
        if r < minimum {
            return Err(Error::OrderTooSmall { order: r, minimum });
        }
        Ok(std::iter::once(r)
            .chain(self.half_degrees().into_iter().map(|ri| r - ri))
            .collect())
    }

    pub fn bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        match &self.shape {
            SetShape::Box { bounds } => Some(bounds.clone()),
            SetShape::Ball { center, radius } => {
                Some(center.iter().map(|&c| (c - radius, c + radius)).collect())
            }
            SetShape::Generic => None,
        }
    }

    /// `∫_set x^α dx`.
    pub fn lebesgue_moment(&self, alpha: &MultiIndex) -> Result<f64> {
        check_dim("Lebesgue moment", self.num_vars, alpha.len())?;
        match &self.shape {
            SetShape::Box { bounds } => Ok(bounds
                .iter()
                .zip(alpha.exps())
                .map(|(&(a, b), &e)| {
                    let p = e as i32 + 1;
                    (b.powi(p) - a.powi(p)) / p as f64
                })
                .product()),
            SetShape::Ball { center, radius } => Ok(ball_moment(center, *radius, alpha.exps())),
            SetShape::Generic => Err(Error::MomentsUnavailable),
        }
    }

    /// Lebesgue moments for every monomial of `basis`, in basis order.
    pub fn lebesgue_moments(&self, basis: &MonomialBasis) -> Result<Vec<f64>> {
        check_dim("Lebesgue moments", self.num_vars, basis.num_vars())?;
        basis
            .monomials()
            .iter()
            .map(|a| self.lebesgue_moment(a))
            .collect()
    }

    pub fn volume(&self) -> Result<f64> {
        self.lebesgue_moment(&MultiIndex::zeros(self.num_vars))
    }

    /// Uniform sample from a box or ball (rejection from the bounding box for balls).
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let bbox = self.bounding_box().ok_or(Error::MomentsUnavailable)?;
        loop {
            let x: Vec<f64> = bbox.iter().map(|&(a, b)| rng.gen_range(a..=b)).collect();
            if self.contains(&x) {
                return Ok(x);
            }
        }
    }
}

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half(k: u32) -> f64 {
    debug_assert!(k > 0);
    let (mut g, mut x) = if k % 2 == 0 {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    let target = k as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

fn unit_ball_moment(exps: &[u32]) -> f64 {
    if exps.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let n = exps.len() as u32;
    let total: u32 = exps.iter().sum::<u32>() + n;
    let num: f64 = exps.iter().map(|&e| gamma_half(e + 1)).product();
    2.0 * num / (total as f64 * gamma_half(total))
}

// ∫_{B(c,R)} x^α dx = R^n Σ_{γ≤α} Π C(αᵢ,γᵢ) cᵢ^{αᵢ−γᵢ} R^{γᵢ} · m_unit(γ)
fn ball_moment(center: &[f64], radius: f64, alpha: &[u32]) -> f64 {
    let n = alpha.len();
    let mut total = 0.0;
    let mut gamma = vec![0u32; n];
    loop {
        let mut w = 1.0;
        for i in 0..n {
            w *= binom_f(alpha[i], gamma[i])
                * center[i].powi((alpha[i] - gamma[i]) as i32)
                * radius.powi(gamma[i] as i32);
        }
        if w != 0.0 {
            total += w * unit_ball_moment(&gamma);
        }
        // odometer over 0 ≤ γ ≤ α
        let mut i = 0;
        loop {
            if i == n {
                return total * radius.powi(n as i32);
            }
            if gamma[i] < alpha[i] {
                gamma[i] += 1;
                break;
            }
            gamma[i] = 0;
            i += 1;
        }
    }
}

fn binom_f(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Affine map from normalized inputs `ũ ∈ [−1,1]^m` to physical inputs,
/// `u = scale ⊙ ũ + shift`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl InputScaling {
    pub fn identity(m: usize) -> Self {
        InputScaling {
            scale: vec![1.0; m],
            shift: vec![0.0; m],
        }
    }

    pub fn to_physical(&self, normalized: &[f64]) -> Vec<f64> {
        normalized
            .iter()
            .zip(self.scale.iter().zip(&self.shift))
            .map(|(&u, (&s, &t))| s * u + t)
            .collect()
    }
}

/// Discrete-time control-affine system `x⁺ = f(x) + g(x) u` with state
/// constraints `X`, input constraints `U` and target `Z`.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    n: usize,
    m: usize,
    f: Vec<Polynomial>,
    g: Vec<Vec<Polynomial>>,
    x_set: SemiAlgebraicSet,
    u_set: Option<SemiAlgebraicSet>,
    z_set: SemiAlgebraicSet,
    input_scaling: InputScaling,
}

impl SystemSpec {
    /// `u_set` may be `None` only for systems without inputs (`m = 0`).
    pub fn new(
        f: Vec<Polynomial>,
        g: Vec<Vec<Polynomial>>,
        x_set: SemiAlgebraicSet,
        u_set: Option<SemiAlgebraicSet>,
        z_set: SemiAlgebraicSet,
    ) -> Result<Self> {
        let n = f.len();
        if n == 0 {
            return Err(Error::InvalidArgument("state dimension must be positive".into()));
        }
        check_dim("g rows", n, g.len())?;
        let m = g.first().map(Vec::len).unwrap_or(0);
        for fi in &f {
            check_dim("f component variables", n, fi.num_vars())?;
        }
        for row in &g {
            check_dim("g columns", m, row.len())?;
            for gij in row {
                check_dim("g entry variables", n, gij.num_vars())?;
            }
        }
        check_dim("X variables", n, x_set.num_vars())?;
        check_dim("Z variables", n, z_set.num_vars())?;
        match &u_set {
            Some(u) => check_dim("U variables", m, u.num_vars())?,
            None if m > 0 => {
                return Err(Error::InvalidSet("input set U is required when m > 0".into()))
            }
            None => {}
        }
        Ok(SystemSpec {
            n,
            m,
            f,
            g,
            x_set,
            u_set,
            z_set,
            input_scaling: InputScaling::identity(m),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn f(&self) -> &[Polynomial] {
        &self.f
    }

    pub fn g(&self) -> &[Vec<Polynomial>] {
        &self.g
    }

    pub fn x_set(&self) -> &SemiAlgebraicSet {
        &self.x_set
    }

    pub fn u_set(&self) -> Option<&SemiAlgebraicSet> {
        self.u_set.as_ref()
    }

    pub fn z_set(&self) -> &SemiAlgebraicSet {
        &self.z_set
    }

    pub fn input_scaling(&self) -> &InputScaling {
        &self.input_scaling
    }

    /// `φ(x,u) = f(x) + g(x)u` as polynomials in the `n + m` variables `(x, u)`.
    pub fn phi(&self) -> Vec<Polynomial> {
        let nv = self.n + self.m;
        (0..self.n)
            .map(|i| {
                let mut p = self.f[i].embed(nv, 0).expect("f lives in n variables");
                for j in 0..self.m {
                    let gij = self.g[i][j].embed(nv, 0).expect("g lives in n variables");
                    p = &p + &(&gij * &Polynomial::var(nv, self.n + j));
                }
                p
            })
            .collect()
    }

    /// `d = deg φ`, at least 1.
    pub fn degree(&self) -> usize {
        self.phi().iter().map(Polynomial::degree).max().unwrap_or(0).max(1)
    }

    /// Minimum relaxation order over the defining polynomials of X, U and Z.
    pub fn min_order(&self) -> usize {
        let u = self.u_set.as_ref().map(|u| u.min_order()).unwrap_or(0);
        self.x_set.min_order().max(u).max(self.z_set.min_order())
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let mut v = self.f[i].eval_unchecked(x);
                for j in 0..self.m {
                    v += self.g[i][j].eval_unchecked(x) * u[j];
                }
                v
            })
            .collect()
    }

    pub fn is_normalized(&self) -> bool {
        match self.u_set.as_ref().map(|u| u.shape()) {
            None => true,
            Some(SetShape::Box { bounds }) => bounds.iter().all(|&(a, b)| a == -1.0 && b == 1.0),
            Some(_) => false,
        }
    }

    /// Equivalent system with `U = [−1,1]^m`, substituting
    /// `uᵢ = (bᵢ−aᵢ)/2 · ũᵢ + (bᵢ+aᵢ)/2`.
    pub fn rescale_inputs(&self) -> Result<SystemSpec> {
        let Some(u_set) = &self.u_set else {
            return Ok(self.clone());
        };
        let SetShape::Box { bounds } = u_set.shape() else {
            return Err(Error::InvalidSet("input rescaling needs a box U".into()));
        };
        let half_width: Vec<f64> = bounds.iter().map(|&(a, b)| (b - a) / 2.0).collect();
        let mid: Vec<f64> = bounds.iter().map(|&(a, b)| (b + a) / 2.0).collect();
        let mut f = self.f.clone();
        let mut g = self.g.clone();
        for i in 0..self.n {
            for j in 0..self.m {
                if mid[j] != 0.0 {
                    f[i] = &f[i] + &self.g[i][j].scale(mid[j]);
                }
                if half_width[j] != 1.0 {
                    g[i][j] = self.g[i][j].scale(half_width[j]);
                }
            }
        }
        let old = &self.input_scaling;
        let input_scaling = InputScaling {
            scale: old.scale.iter().zip(&half_width).map(|(s, h)| s * h).collect(),
            shift: (0..self.m).map(|j| old.scale[j] * mid[j] + old.shift[j]).collect(),
        };
        Ok(SystemSpec {
            n: self.n,
            m: self.m,
            f,
            g,
            x_set: self.x_set.clone(),
            u_set: Some(SemiAlgebraicSet::new_box(vec![(-1.0, 1.0); self.m])?),
            z_set: self.z_set.clone(),
            input_scaling,
        })
    }
}
