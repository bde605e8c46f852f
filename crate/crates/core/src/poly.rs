//! Sparse multivariate polynomials over the reals.
//!
//! Terms are kept in a `BTreeMap` keyed by [`MultiIndex`], whose ordering is
//! graded lexicographic: lower total degree first, then lexicographic on the
//! exponent tuple with larger leading exponents first. The same order indexes
//! every moment vector in the crate, so `monomials_up_to(n, d)[k]` is the
//! monomial attached to the `k`-th moment.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Exponent vector `α ∈ ℕⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        MultiIndex(exps)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit exponent `e_i` in `n` variables.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut exps = vec![0; n];
        exps[i] = 1;
        MultiIndex(exps)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree `|α| = Σ αᵢ`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Componentwise sum `α + β`. Both indices must have the same length.
    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Concatenation `(α, β)`, used to embed state exponents into `(x, u)` space.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut exps = self.0.clone();
        exps.extend_from_slice(&other.0);
        MultiIndex(exps)
    }

    /// Value of the monomial `x^α` at `point`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(exps: Vec<u32>) -> Self {
        MultiIndex(exps)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(exps: [u32; N]) -> Self {
        MultiIndex(exps.to_vec())
    }
}

/// All exponents of total degree at most `d` in `n` variables, in graded order.
///
/// The result has `binomial(n + d, n)` entries.
pub fn monomials_up_to(n: usize, d: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(binomial(n + d, n));
    let mut buf = vec![0u32; n];
    for deg in 0..=d {
        compositions(&mut buf, 0, deg as u32, &mut out);
    }
    out
}

// Writes every composition of `remaining` into buf[pos..], leading exponent descending.
fn compositions(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 >= buf.len() {
        if let Some(last) = buf.last_mut() {
            *last = remaining;
        } else if remaining != 0 {
            return;
        }
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e;
        compositions(buf, pos + 1, remaining - e, out);
    }
    buf[pos] = 0;
}

/// Binomial coefficient, exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// The monomials of degree ≤ `max_degree` together with a reverse lookup.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    num_vars: usize,
    max_degree: usize,
    monomials: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
}

impl MonomialBasis {
    pub fn new(num_vars: usize, max_degree: usize) -> Self {
        let monomials = monomials_up_to(num_vars, max_degree);
        let index = monomials
            .iter()
            .enumerate()
            .map(|(k, a)| (a.clone(), k))
            .collect();
        MonomialBasis {
            num_vars,
            max_degree,
            monomials,
            index,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub fn get(&self, k: usize) -> &MultiIndex {
        &self.monomials[k]
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Number of monomials of degree ≤ `d` (a prefix of the basis).
    pub fn prefix_len(&self, d: usize) -> usize {
        binomial(self.num_vars + d.min(self.max_degree), self.num_vars)
    }
}

/// Sparse polynomial `Σ_α p_α x^α` in a fixed number of variables.
///
/// Zero coefficients are never stored, so structurally equal polynomials have
/// identical term maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    num_vars: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        Self::monomial(MultiIndex::zeros(num_vars), c)
    }

    /// The coordinate polynomial `x_i`.
    pub fn var(num_vars: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(num_vars, i), 1.0)
    }

    pub fn monomial(alpha: MultiIndex, c: f64) -> Self {
        let mut p = Polynomial::zero(alpha.len());
        p.add_term(alpha, c);
        p
    }

    /// Builds a polynomial from terms; repeated exponents are summed.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Polynomial::zero(num_vars);
        for (alpha, c) in terms {
            check_dim("polynomial term", num_vars, alpha.len())?;
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(alpha) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest total degree among stored terms; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        check_dim("polynomial addition", self.num_vars, other.num_vars)?;
        let mut out = self.clone();
        for (a, &c) in &other.terms {
            out.add_term(a.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        check_dim("polynomial subtraction", self.num_vars, other.num_vars)?;
        let mut out = self.clone();
        for (a, &c) in &other.terms {
            out.add_term(a.clone(), -c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        check_dim("polynomial multiplication", self.num_vars, other.num_vars)?;
        let mut acc: HashMap<MultiIndex, f64> = HashMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                *acc.entry(a.plus(b)).or_insert(0.0) += ca * cb;
            }
        }
        let mut out = Polynomial::zero(self.num_vars);
        for (k, c) in acc {
            if c != 0.0 {
                out.terms.insert(k, c);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero(self.num_vars);
        }
        Polynomial {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|(a, &c)| (a.clone(), c * s))
                .filter(|(_, c)| *c != 0.0)
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.num_vars, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        check_dim("polynomial evaluation", self.num_vars, point.len())?;
        Ok(self.eval_unchecked(point))
    }

    /// Evaluation without the length check; `point` must have `num_vars` entries.
    pub fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(a, &c)| c * a.eval(point)).sum()
    }

    /// `p(maps₁(x), …, maps_k(x))` for `p` in `k` variables.
    pub fn compose(&self, maps: &[Polynomial]) -> Result<Polynomial> {
        check_dim("polynomial composition", self.num_vars, maps.len())?;
        let target = match maps.first() {
            Some(m) => m.num_vars,
            None => {
                // A polynomial in zero variables is a constant.
                return Ok(self.clone());
            }
        };
        for m in maps {
            check_dim("composition map", target, m.num_vars)?;
        }
        let mut powers = PowerCache::new(maps);
        let mut out = Polynomial::zero(target);
        for (alpha, &c) in &self.terms {
            let term = powers.power(alpha).scale(c);
            for (a, &tc) in &term.terms {
                out.add_term(a.clone(), tc);
            }
        }
        Ok(out)
    }

    /// Relabels the variables into a larger space: variable `i` becomes `offset + i`.
    pub fn embed(&self, total_vars: usize, offset: usize) -> Result<Polynomial> {
        if offset + self.num_vars > total_vars {
            return Err(Error::DimensionMismatch {
                context: "polynomial embedding",
                expected: total_vars,
                found: offset + self.num_vars,
            });
        }
        let terms = self.terms.iter().map(|(a, &c)| {
            let mut exps = vec![0u32; total_vars];
            exps[offset..offset + self.num_vars].copy_from_slice(a.exps());
            (MultiIndex(exps), c)
        });
        Ok(Polynomial {
            num_vars: total_vars,
            terms: terms.collect(),
        })
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.num_vars);
        for (a, &c) in &self.terms {
            let e = a.exps()[i];
            if e == 0 {
                continue;
            }
            let mut exps = a.exps().to_vec();
            exps[i] -= 1;
            out.add_term(MultiIndex(exps), c * e as f64);
        }
        out
    }
}

/// `Π φᵢ^{βᵢ}` for a polynomial map `φ`.
pub fn map_power(phi: &[Polynomial], beta: &MultiIndex) -> Result<Polynomial> {
    check_dim("map power", phi.len(), beta.len())?;
    let nv = phi.first().map(|p| p.num_vars).unwrap_or(0);
    for p in phi {
        check_dim("map component", nv, p.num_vars)?;
    }
    Ok(PowerCache::new(phi).power(beta))
}

/// Memoized products `Π φᵢ^{βᵢ}`, built from smaller products so that
/// sweeping all `β` of a basis costs one multiplication per exponent.
pub struct PowerCache<'a> {
    maps: &'a [Polynomial],
    cache: HashMap<MultiIndex, Polynomial>,
}

impl<'a> PowerCache<'a> {
    pub fn new(maps: &'a [Polynomial]) -> Self {
        PowerCache {
            maps,
            cache: HashMap::new(),
        }
    }

    pub fn power(&mut self, beta: &MultiIndex) -> Polynomial {
        if let Some(p) = self.cache.get(beta) {
            return p.clone();
        }
        let nv = self.maps.first().map(|p| p.num_vars).unwrap_or(0);
        let result = match beta.exps().iter().position(|&e| e > 0) {
            None => Polynomial::constant(nv, 1.0),
            Some(i) => {
                let mut lower = beta.exps().to_vec();
                lower[i] -= 1;
                let base = self.power(&MultiIndex(lower));
                &base * &self.maps[i]
            }
        };
        self.cache.insert(beta.clone(), result.clone());
        result
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&Polynomial> for &Polynomial {
            type Output = Polynomial;

            /// Panics if the operands live in different numbers of variables.
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                self.$checked(rhs).expect("polynomial operands must share num_vars")
            }
        }

        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;

            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (a, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, &e) in a.exps().iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exps: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolynomialJson {
    n: usize,
    terms: Vec<TermJson>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialJson {
            n: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|(a, &c)| TermJson {
                    exps: a.0.clone(),
                    coef: c,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PolynomialJson::deserialize(d)?;
        let mut p = Polynomial::zero(raw.n);
        for t in raw.terms {
            if t.exps.len() != raw.n {
                return Err(D::Error::custom(format!(
                    "term has {} exponents, polynomial has {} variables",
                    t.exps.len(),
                    raw.n
                )));
            }
            let alpha = MultiIndex(t.exps);
            if p.terms.contains_key(&alpha) {
                return Err(D::Error::custom(format!(
                    "duplicate exponent tuple {:?}",
                    alpha.0
                )));
            }
            if t.coef != 0.0 {
                p.terms.insert(alpha, t.coef);
            }
        }
        Ok(p)
    }
}
