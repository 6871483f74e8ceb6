//! Regular operators on `R^n` as dense matrices.
//!
//! Entry `(i, j)` is the coefficient of `e_i` in `T e_j`. In the atomic basis
//! the operator order is entrywise, so the lattice operations of the space of
//! regular operators are entrywise too. [`rk_oracle_meet`] evaluates the
//! Riesz–Kantorovich infimum directly as an independent check of that.

use crate::error::{Error, Result};
use crate::lattice::LatticeVector;
use crate::scalar::{Rational, Scalar};

/// Largest dimension for which [`rk_oracle_meet`] enumerates decompositions.
pub const RK_ORACLE_MAX_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularOperator<S = Rational> {
    n: usize,
    entries: Vec<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    Linf,
}

impl<S: Scalar> RegularOperator<S> {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        Ok(Self {
            n,
            entries: vec![S::zero(); n * n],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diagonal_mask(n, |_| true)
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> S) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(Self { n, entries })
    }

    pub fn diagonal(diag: Vec<S>) -> Result<Self> {
        let n = diag.len();
        let mut m = Self::zeros(n)?;
        for (i, d) in diag.into_iter().enumerate() {
            m.set(i, i, d);
        }
        Ok(m)
    }

    pub fn diagonal_mask(n: usize, keep: impl Fn(usize) -> bool) -> Result<Self> {
        Self::from_fn(n, |i, j| if i == j && keep(i) { S::one() } else { S::zero() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: S) {
        self.entries[i * self.n + j] = value;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.entries.chunks(self.n)
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = &S> {
        (0..self.n).map(move |i| self.get(i, j))
    }

    pub(crate) fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        self.check_dim(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect();
        Ok(Self { n: self.n, entries })
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    /// Keeps entry `(i, j)` where `keep(i, j)` holds, zeroing the rest.
    pub fn masked(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let n = self.n;
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, v)| if keep(k / n, k % n) { v.clone() } else { S::zero() })
            .collect();
        Self { n, entries }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|x| x.clone() * c.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x.clone())
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| self.get(j, i).clone()).expect("n >= 1")
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.n;
        let mut out = Self::zeros(n)?;
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * n + j;
                    out.entries[idx] = out.entries[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, x: &LatticeVector<S>) -> Result<LatticeVector<S>> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.dim(),
            });
        }
        let coords = self
            .rows()
            .map(|row| {
                row.iter()
                    .zip(x.coords())
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect();
        LatticeVector::new(coords)
    }

    /// `S ∧ T`: entrywise minimum.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, S::min_of)
    }

    /// `S ∨ T`: entrywise maximum.
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, S::max_of)
    }

    pub fn abs(&self) -> Self {
        self.map(S::abs)
    }

    /// `T⁺ = T ∨ 0`.
    pub fn positive_part(&self) -> Self {
        self.map(|x| x.max_of(&S::zero()))
    }

    /// `T⁻ = (−T) ∨ 0`.
    pub fn negative_part(&self) -> Self {
        self.map(|x| (-x.clone()).max_of(&S::zero()))
    }

    pub fn is_nonneg(&self) -> bool {
        self.entries.iter().all(S::is_nonneg)
    }

    pub fn is_nonpos(&self) -> bool {
        self.entries.iter().all(S::is_nonpos)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(S::is_zero)
    }

    /// Operator order: `self <= other` entrywise.
    pub fn le(&self, other: &Self) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| a.compare(b).is_le()))
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.n == other.n && self.entries.iter().zip(&other.entries).all(|(a, b)| a.approx_eq(b))
    }

    /// Indices `(i, j)` of entries that are not zero.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(move |(k, _)| (k / n, k % n))
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> RegularOperator<T> {
        RegularOperator {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }
}

/// `S ∧ T`, the closed form of the Riesz–Kantorovich infimum in the atomic
/// basis.
pub fn op_meet<S: Scalar>(s: &RegularOperator<S>, t: &RegularOperator<S>) -> Result<RegularOperator<S>> {
    s.meet(t)
}

pub fn op_join<S: Scalar>(s: &RegularOperator<S>, t: &RegularOperator<S>) -> Result<RegularOperator<S>> {
    s.join(t)
}

pub fn op_abs<S: Scalar>(t: &RegularOperator<S>) -> RegularOperator<S> {
    t.abs()
}

/// Brute-force `(S ∧ T)(x) = inf_{0 ≤ u ≤ x} S(u) + T(x − u)` for positive
/// `S`, `T` and `x`.
///
/// On an atomic lattice every `0 ≤ u ≤ x` has `u_j ∈ [0, x_j]`, and each output
/// coordinate is affine in every `u_j`, so the infimum is attained at one of
/// the `2^n` vertices `u_j ∈ {0, x_j}`. Each output coordinate is minimized
/// independently over those vertices.
pub fn rk_oracle_meet<S: Scalar>(
    s: &RegularOperator<S>,
    t: &RegularOperator<S>,
    x: &LatticeVector<S>,
) -> Result<LatticeVector<S>> {
    s.check_dim(t)?;
    let n = s.dim();
    if x.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.dim(),
        });
    }
    if n > RK_ORACLE_MAX_DIM {
        return Err(Error::TooLarge {
            what: "dimension",
            size: n,
            cap: RK_ORACLE_MAX_DIM,
        });
    }
    if !s.is_nonneg() || !t.is_nonneg() {
        return Err(Error::NegativeInput("operator"));
    }
    if !x.is_nonneg() {
        return Err(Error::NegativeInput("vector"));
    }
    let zero = S::zero();
    let mut best: Option<Vec<S>> = None;
    for vertex in 0u32..(1u32 << n) {
        let u: Vec<S> = (0..n)
            .map(|j| {
                if vertex & (1 << j) != 0 {
                    x.get(j).clone()
                } else {
                    zero.clone()
                }
            })
            .collect();
        let rest: Vec<S> = (0..n).map(|j| x.get(j).clone() - u[j].clone()).collect();
        let value = s
            .apply(&LatticeVector::new(u)?)?
            .add(&t.apply(&LatticeVector::new(rest)?)?)?;
        best = Some(match best {
            None => value.into_coords(),
            Some(b) => b.iter().zip(value.coords()).map(|(a, c)| a.min_of(c)).collect(),
        });
    }
    LatticeVector::new(best.expect("at least one vertex"))
}

/// Operator norm of `|T|`: maximum column sum for `L1`, maximum row sum for
/// `Linf`.
pub fn regular_norm<S: Scalar>(t: &RegularOperator<S>, norm: Norm) -> S {
    let n = t.dim();
    let add_abs = |acc: S, v: &S| if v.is_zero() { acc } else { acc + v.abs() };
    let sums = (0..n).map(|k| match norm {
        Norm::L1 => t.column(k).fold(S::zero(), add_abs),
        Norm::Linf => t.rows().nth(k).unwrap().iter().fold(S::zero(), add_abs),
    });
    sums.fold(S::zero(), |acc, s| acc.max_of(&s))
}

/// Matrix unit `E_ab = λ_b ⊗ a`, an atom of the operator lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementaryOperator {
    pub row: usize,
    pub col: usize,
}

impl ElementaryOperator {
    pub fn to_operator<S: Scalar>(self, n: usize) -> Result<RegularOperator<S>> {
        elementary(self.row, self.col, n)
    }
}

pub fn elementary<S: Scalar>(a: usize, b: usize, n: usize) -> Result<RegularOperator<S>> {
    for index in [a, b] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    let mut m = RegularOperator::zeros(n)?;
    m.set(a, b, S::one());
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomDomination<S> {
    pub is_multiple: bool,
    pub gamma: Option<S>,
}

/// For `0 ≤ T ≤ E_ab`, extracts `γ ∈ [0, 1]` with `T = γ E_ab`.
///
/// Inputs outside the order interval `[0, E_ab]` are reported as errors.
pub fn is_atom_dominated<S: Scalar>(t: &RegularOperator<S>, a: usize, b: usize) -> Result<AtomDomination<S>> {
    let e = elementary::<S>(a, b, t.dim())?;
    if !t.is_nonneg() {
        return Err(Error::Precondition("T must be positive".into()));
    }
    if !t.le(&e)? {
        return Err(Error::Precondition(format!("T must be dominated by E_{a}{b}")));
    }
    let gamma = t.get(a, b).clone();
    if e.scale(&gamma).approx_eq(t) {
        Ok(AtomDomination {
            is_multiple: true,
            gamma: Some(gamma),
        })
    } else {
        Ok(AtomDomination {
            is_multiple: false,
            gamma: None,
        })
    }
}
