//! Truncated moment sequences and the moment/localizing matrices built from
//! them, expressed as linear operators on a moment vector.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::poly::{MonomialBasis, MultiIndex, Polynomial, PowerCache};

/// Moments `y_α` for `|α| ≤ max_degree`, indexed in graded order.
#[derive(Clone, Debug)]
pub struct MomentVector {
    basis: Arc<MonomialBasis>,
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(basis: Arc<MonomialBasis>, values: Vec<f64>) -> Result<Self> {
        check_dim("moment vector length", basis.len(), values.len())?;
        Ok(MomentVector { basis, values })
    }

    /// Moments of `Σ_k w_k δ_{p_k}`.
    pub fn from_dirac_mixture(
        basis: Arc<MonomialBasis>,
        points: &[Vec<f64>],
        weights: &[f64],
    ) -> Result<Self> {
        check_dim("Dirac weights", points.len(), weights.len())?;
        let mut values = vec![0.0; basis.len()];
        for (p, &w) in points.iter().zip(weights) {
            check_dim("Dirac point", basis.num_vars(), p.len())?;
            for (v, a) in values.iter_mut().zip(basis.monomials()) {
                *v += w * a.eval(p);
            }
        }
        Ok(MomentVector { basis, values })
    }

    pub fn num_vars(&self) -> usize {
        self.basis.num_vars()
    }

    pub fn max_degree(&self) -> usize {
        self.basis.max_degree()
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `y_α`, or `None` when `α` lies beyond the truncation.
    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.basis.index_of(alpha).map(|k| self.values[k])
    }

    /// Total mass `y_0`.
    pub fn mass(&self) -> f64 {
        self.values[0]
    }
}

/// Riesz functional `ℓ_y(p) = Σ_α p_α y_α`.
pub fn riesz(y: &MomentVector, p: &Polynomial) -> Result<f64> {
    check_dim("Riesz functional", y.num_vars(), p.num_vars())?;
    if p.degree() > y.max_degree() {
        return Err(Error::DegreeOverflow {
            degree: p.degree(),
            max: y.max_degree(),
        });
    }
    Ok(p.terms()
        .map(|(a, c)| c * y.values[y.basis.index_of(a).expect("degree checked")])
        .sum())
}

/// Sparse linear form `Σ c_k s_{i_k}` over a scalar vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearForm {
    pub terms: Vec<(usize, f64)>,
}

impl LinearForm {
    pub fn new(terms: Vec<(usize, f64)>) -> Self {
        let mut f = LinearForm { terms };
        f.canonicalize();
        f
    }

    pub fn single(index: usize, coef: f64) -> Self {
        LinearForm::new(vec![(index, coef)])
    }

    /// Sorts by index, merges repeats and drops exact zeros.
    pub fn canonicalize(&mut self) {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(i, c) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * values[i]).sum()
    }

    pub fn shifted(&self, offset: usize) -> LinearForm {
        LinearForm {
            terms: self.terms.iter().map(|&(i, c)| (i + offset, c)).collect(),
        }
    }

    pub fn extend(&mut self, other: &LinearForm, scale: f64) {
        self.terms
            .extend(other.terms.iter().map(|&(i, c)| (i, c * scale)));
        self.canonicalize();
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

fn tri_len(size: usize) -> usize {
    size * (size + 1) / 2
}

fn tri_pos(size: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * size - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Symmetric matrix whose entries are linear forms in a scalar vector.
///
/// Only the upper triangle is stored (packed row-major, entry `(i, j)` with
/// `i ≤ j`); each entry's form is a contiguous slice of `indices`/`coeffs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMatrixOperator {
    size: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    coeffs: Vec<f64>,
}

impl LinearMatrixOperator {
    /// Builds the operator from a function giving the form of entry `(i, j)`, `i ≤ j`.
    pub fn from_fn<F>(size: usize, mut entry: F) -> Self
    where
        F: FnMut(usize, usize) -> LinearForm,
    {
        let mut offsets = Vec::with_capacity(tri_len(size) + 1);
        let mut indices = Vec::new();
        let mut coeffs = Vec::new();
        offsets.push(0);
        for i in 0..size {
            for j in i..size {
                let form = entry(i, j);
                for (k, c) in form.terms {
                    indices.push(k);
                    coeffs.push(c);
                }
                offsets.push(indices.len());
            }
        }
        LinearMatrixOperator {
            size,
            offsets,
            indices,
            coeffs,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// The form at `(i, j)`; symmetric in its arguments.
    pub fn entry(&self, i: usize, j: usize) -> (&[usize], &[f64]) {
        let p = tri_pos(self.size, i, j);
        let (a, b) = (self.offsets[p], self.offsets[p + 1]);
        (&self.indices[a..b], &self.coeffs[a..b])
    }

    pub fn entry_form(&self, i: usize, j: usize) -> LinearForm {
        let (idx, c) = self.entry(i, j);
        LinearForm {
            terms: idx.iter().copied().zip(c.iter().copied()).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.iter().copied().max()
    }

    /// Iterates `(i, j, index, coef)` over the stored upper triangle.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let size = self.size;
        (0..size)
            .flat_map(move |i| (i..size).map(move |j| (i, j)))
            .enumerate()
            .flat_map(move |(p, (i, j))| {
                (self.offsets[p]..self.offsets[p + 1])
                    .map(move |k| (i, j, self.indices[k], self.coeffs[k]))
            })
    }

    /// Evaluates the matrix at a scalar vector.
    pub fn apply(&self, values: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.size, self.size);
        let mut p = 0;
        for i in 0..self.size {
            for j in i..self.size {
                let v: f64 = (self.offsets[p]..self.offsets[p + 1])
                    .map(|k| self.coeffs[k] * values[self.indices[k]])
                    .sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
                p += 1;
            }
        }
        out
    }

    /// The same operator acting on a larger vector where this block starts at `offset`.
    /// Congruence-scaled operator `D F(S s) D` with `D = diag(row_scale)` and
    /// `S = diag(scalar_scale)`.
    pub fn scaled(&self, scalar_scale: &[f64], row_scale: &[f64]) -> Self {
        let mut coeffs = self.coeffs.clone();
        let mut pos = 0;
        for i in 0..self.size {
            for j in i..self.size {
                let (s, e) = (self.offsets[pos], self.offsets[pos + 1]);
                for t in s..e {
                    coeffs[t] *= row_scale[i] * row_scale[j] * scalar_scale[self.indices[t]];
                }
                pos += 1;
            }
        }
        LinearMatrixOperator {
            size: self.size,
            offsets: self.offsets.clone(),
            indices: self.indices.clone(),
            coeffs,
        }
    }

    pub fn shifted(&self, offset: usize) -> Self {
        LinearMatrixOperator {
            size: self.size,
            offsets: self.offsets.clone(),
            indices: self.indices.iter().map(|i| i + offset).collect(),
            coeffs: self.coeffs.clone(),
        }
    }
}

/// `[M_r(y)]_{α,β} = y_{α+β}` for `α, β ∈ ℕⁿ_r`, over a moment vector
/// truncated at `target_degree`.
pub fn moment_matrix_operator(n: usize, r: usize, target_degree: usize) -> Result<LinearMatrixOperator> {
    localizing_matrix_operator(&Polynomial::constant(n, 1.0), r, target_degree)
}

/// `[M_r(h y)]_{α,β} = Σ_γ h_γ y_{γ+α+β}` for `α, β ∈ ℕⁿ_{r_loc}`.
pub fn localizing_matrix_operator(
    h: &Polynomial,
    r_loc: usize,
    target_degree: usize,
) -> Result<LinearMatrixOperator> {
    let needed = 2 * r_loc + h.degree();
    if needed > target_degree {
        return Err(Error::DegreeOverflow {
            degree: needed,
            max: target_degree,
        });
    }
    let target = MonomialBasis::new(h.num_vars(), target_degree);
    Ok(localizing_in_basis(h, r_loc, &target))
}

/// Localizing operator against an already-built target basis.
pub(crate) fn localizing_in_basis(
    h: &Polynomial,
    r_loc: usize,
    target: &MonomialBasis,
) -> LinearMatrixOperator {
    let rows = &target.monomials()[..target.prefix_len(r_loc)];
    let h_terms: Vec<(&MultiIndex, f64)> = h.terms().collect();
    LinearMatrixOperator::from_fn(rows.len(), |i, j| {
        let ab = rows[i].plus(&rows[j]);
        LinearForm::new(
            h_terms
                .iter()
                .map(|(g, c)| {
                    let k = target
                        .index_of(&ab.plus(g))
                        .expect("localizing degree checked against truncation");
                    (k, *c)
                })
                .collect(),
        )
    })
}

/// Linear form `z ↦ ℓ_z(φ^β)` over the `z` moment indices of `basis`.
pub fn pushforward_row(phi: &[Polynomial], beta: &MultiIndex, basis: &MonomialBasis) -> Result<LinearForm> {
    check_dim("pushforward exponent", phi.len(), beta.len())?;
    let p = crate::poly::map_power(phi, beta)?;
    poly_to_form(&p, basis)
}

/// Rows `ℓ_z(φ^β)` for every `β` in order, sharing intermediate powers.
pub fn pushforward_rows(
    phi: &[Polynomial],
    betas: &[MultiIndex],
    basis: &MonomialBasis,
) -> Result<Vec<LinearForm>> {
    let mut cache = PowerCache::new(phi);
    betas
        .iter()
        .map(|b| {
            check_dim("pushforward exponent", phi.len(), b.len())?;
            poly_to_form(&cache.power(b), basis)
        })
        .collect()
}

/// Coefficient vector of `p` as a linear form over the moments of `basis`.
pub fn poly_to_form(p: &Polynomial, basis: &MonomialBasis) -> Result<LinearForm> {
    check_dim("polynomial vs moment basis", basis.num_vars(), p.num_vars())?;
    if p.degree() > basis.max_degree() {
        return Err(Error::DegreeOverflow {
            degree: p.degree(),
            max: basis.max_degree(),
        });
    }
    Ok(LinearForm::new(
        p.terms()
            .map(|(a, c)| (basis.index_of(a).expect("degree checked"), c))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(n: usize, d: usize) -> Arc<MonomialBasis> {
        Arc::new(MonomialBasis::new(n, d))
    }

    fn min_eig(m: DMatrix<f64>) -> f64 {
        SymmetricEigen::new(m).eigenvalues.min()
    }

    #[test]
    fn packed_triangle_positions() {
        let size = 5;
        let mut seen = vec![false; tri_len(size)];
        for i in 0..size {
            for j in i..size {
                let p = tri_pos(size, i, j);
                assert!(!seen[p]);
                seen[p] = true;
                assert_eq!(p, tri_pos(size, j, i));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn riesz_examples() {
        let b = basis(1, 4);
        let dirac = MomentVector::from_dirac_mixture(b.clone(), &[vec![2.0]], &[1.0]).unwrap();
        assert_eq!(dirac.values(), &[1.0, 2.0, 4.0, 8.0, 16.0]);
        let p = &Polynomial::constant(1, 3.0) + &Polynomial::var(1, 0).pow(2);
        assert_eq!(riesz(&dirac, &p).unwrap(), 7.0);
        assert_eq!(riesz(&dirac, &Polynomial::constant(1, 1.0)).unwrap(), dirac.mass());

        let leb: Vec<f64> = (0..=4)
            .map(|k| if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 })
            .collect();
        let y = MomentVector::new(b, leb).unwrap();
        let x2 = Polynomial::var(1, 0).pow(2);
        assert!((riesz(&y, &x2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(riesz(&y, &Polynomial::var(1, 0).pow(5)).is_err());
    }

    #[test]
    fn moment_matrix_examples() {
        let op = moment_matrix_operator(1, 1, 2).unwrap();
        let m = op.apply(&[1.0, 2.0, 4.0]);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        assert!(min_eig(m).abs() < 1e-12);
        let m2 = op.apply(&[1.0, 0.0, 1.0]);
        assert_eq!(m2, DMatrix::identity(2, 2));

        let op2 = moment_matrix_operator(2, 1, 2).unwrap();
        assert_eq!(op2.size(), 3);
        let b = MonomialBasis::new(2, 2);
        let k11 = b.index_of(&[1, 1].into()).unwrap();
        assert_eq!(op2.entry_form(1, 2), LinearForm::single(k11, 1.0));
        assert!(moment_matrix_operator(2, 2, 3).is_err());
    }

    #[test]
    fn localizing_examples() {
        let h = &Polynomial::constant(1, 1.0) - &Polynomial::var(1, 0).pow(2);
        let op = localizing_matrix_operator(&h, 0, 2).unwrap();
        assert_eq!(op.apply(&[1.0, 2.0, 4.0])[(0, 0)], -3.0);
        assert_eq!(op.apply(&[1.0, 0.0, 0.0])[(0, 0)], 1.0);
        let one = localizing_matrix_operator(&Polynomial::constant(2, 1.0), 1, 3).unwrap();
        assert_eq!(one, moment_matrix_operator(2, 1, 3).unwrap());
        assert!(localizing_matrix_operator(&h, 1, 3).is_err());
    }

    #[test]
    fn pushforward_double_integrator() {
        let x1 = Polynomial::var(3, 0);
        let x2 = Polynomial::var(3, 1);
        let u = Polynomial::var(3, 2);
        let phi = vec![&x1 + &x2.scale(0.01), &x2 + &u.scale(0.01)];
        let b = MonomialBasis::new(3, 4);
        let form = pushforward_row(&phi, &[2, 0].into(), &b).unwrap();
        let mut expected = vec![
            (b.index_of(&[2, 0, 0].into()).unwrap(), 1.0),
            (b.index_of(&[1, 1, 0].into()).unwrap(), 0.02),
            (b.index_of(&[0, 2, 0].into()).unwrap(), 0.01 * 0.01),
        ];
        expected.sort_by_key(|t| t.0);
        assert_eq!(form.terms.len(), 3);
        for ((i, c), (j, d)) in form.terms.iter().zip(&expected) {
            assert_eq!(i, j);
            assert!((c - d).abs() < 1e-15);
        }
        let zero = pushforward_row(&phi, &[0, 0].into(), &b).unwrap();
        assert_eq!(zero, LinearForm::single(0, 1.0));
        let tiny = MonomialBasis::new(3, 1);
        assert!(pushforward_row(&phi, &[2, 0].into(), &tiny).is_err());
    }

    #[test]
    fn pushforward_reproduces_dirac_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x1 = Polynomial::var(3, 0);
        let x2 = Polynomial::var(3, 1);
        let u = Polynomial::var(3, 2);
        let phi = vec![
            &(&x1 + &x2.scale(0.01)) + &(&x1 * &u).scale(0.3),
            &x2 + &(&u * &x1.pow(2)).scale(0.5),
        ];
        let b = basis(3, 9);
        let betas = crate::poly::monomials_up_to(2, 3);
        let rows = pushforward_rows(&phi, &betas, &b).unwrap();
        for _ in 0..20 {
            let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z = MomentVector::from_dirac_mixture(b.clone(), &[p.clone()], &[1.0]).unwrap();
            let fx: Vec<f64> = phi.iter().map(|q| q.eval(&p).unwrap()).collect();
            for (beta, row) in betas.iter().zip(&rows) {
                let direct = beta.eval(&fx);
                let via = row.apply(z.values());
                assert!((via - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn dirac_mixtures_give_psd_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = basis(2, 6);
        // h = 1 - x1² - x2² is nonnegative on the unit disk where points are drawn
        let h = &(&Polynomial::constant(2, 1.0) - &Polynomial::var(2, 0).pow(2))
            - &Polynomial::var(2, 1).pow(2);
        for _ in 0..10 {
            let k = rng.gen_range(1..8);
            let mut pts = Vec::new();
            while pts.len() < k {
                let p = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                if h.eval(&p).unwrap() >= 0.0 {
                    pts.push(p);
                }
            }
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..2.0)).collect();
            let y = MomentVector::from_dirac_mixture(b.clone(), &pts, &w).unwrap();
            let mm = moment_matrix_operator(2, 3, 6).unwrap().apply(y.values());
            assert!(min_eig(mm) >= -1e-9);
            let lm = localizing_matrix_operator(&h, 2, 6).unwrap().apply(y.values());
            assert!(min_eig(lm) >= -1e-9);
        }
    }

    #[test]
    fn riesz_is_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b = basis(2, 3);
        let rand_poly = |rng: &mut ChaCha8Rng| {
            Polynomial::from_terms(
                2,
                b.monomials().iter().map(|a| (a.clone(), rng.gen_range(-1.0..1.0))),
            )
            .unwrap()
        };
        let rand_y = |rng: &mut ChaCha8Rng| {
            MomentVector::new(b.clone(), (0..b.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap()
        };
        for _ in 0..20 {
            let (p, q) = (rand_poly(&mut rng), rand_poly(&mut rng));
            let (y1, y2) = (rand_y(&mut rng), rand_y(&mut rng));
            let a: f64 = rng.gen_range(-2.0..2.0);
            let pq = &p + &q.scale(a);
            let lhs = riesz(&y1, &pq).unwrap();
            let rhs = riesz(&y1, &p).unwrap() + a * riesz(&y1, &q).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
            let ysum: Vec<f64> = y1.values().iter().zip(y2.values()).map(|(u, v)| u + a * v).collect();
            let ys = MomentVector::new(b.clone(), ysum).unwrap();
            let lhs = riesz(&ys, &p).unwrap();
            let rhs = riesz(&y1, &p).unwrap() + a * riesz(&y2, &p).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
