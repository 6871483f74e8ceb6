//! The finite atomic lattice `R^n` with coordinatewise order.
//!
//! Atoms are the standard basis vectors. Band projections on `R^n` are the
//! coordinate masks, represented by [`BandProjectionX`].

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::operator::RegularOperator;
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector<S = Rational> {
    coords: Vec<S>,
}

impl<S: Scalar> LatticeVector<S> {
    pub fn new(coords: Vec<S>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyDimension);
        }
        Ok(Self { coords })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![S::zero(); n])
    }

    /// The atom `e_index`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
        let mut v = Self::zeros(n)?;
        v.coords[index] = S::one();
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<S> {
        self.coords
    }

    pub fn get(&self, i: usize) -> &S {
        &self.coords[i]
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        self.check_dim(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| f(a, b)).collect();
        Ok(Self { coords })
    }

    fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Self {
            coords: self.coords.iter().map(f).collect(),
        }
    }

    /// Coordinatewise minimum.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, S::min_of)
    }

    /// Coordinatewise maximum.
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, S::max_of)
    }

    pub fn abs(&self) -> Self {
        self.map(S::abs)
    }

    pub fn positive_part(&self) -> Self {
        self.map(|x| x.max_of(&S::zero()))
    }

    pub fn negative_part(&self) -> Self {
        self.map(|x| (-x.clone()).max_of(&S::zero()))
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

    pub fn is_nonneg(&self) -> bool {
        self.coords.iter().all(S::is_nonneg)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(S::is_zero)
    }

    /// Coordinatewise `self <= other`.
    pub fn le(&self, other: &Self) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.coords.iter().zip(&other.coords).all(|(a, b)| a.compare(b).is_le()))
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.coords.iter().zip(&other.coords).all(|(a, b)| a.approx_eq(b))
    }

    pub fn norm_l1(&self) -> S {
        self.coords.iter().fold(S::zero(), |acc, x| acc + x.abs())
    }

    pub fn norm_linf(&self) -> S {
        self.coords.iter().fold(S::zero(), |acc, x| acc.max_of(&x.abs()))
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LatticeVector<T> {
        LatticeVector {
            coords: self.coords.iter().map(f).collect(),
        }
    }
}

/// Band projection on `R^n`: the diagonal 0/1 matrix with ones on `support`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BandProjectionX {
    n: usize,
    support: BTreeSet<usize>,
}

impl BandProjectionX {
    pub fn new(n: usize, support: impl IntoIterator<Item = usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        let support: BTreeSet<usize> = support.into_iter().collect();
        if let Some(&index) = support.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index, n });
        }
        Ok(Self { n, support })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn contains(&self, i: usize) -> bool {
        self.support.contains(&i)
    }

    /// The complementary band projection `I - P`.
    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            support: (0..self.n).filter(|i| !self.support.contains(i)).collect(),
        }
    }

    pub fn to_operator<S: Scalar>(&self) -> RegularOperator<S> {
        RegularOperator::diagonal_mask(self.n, |i| self.support.contains(&i))
            .expect("dimension checked at construction")
    }

    /// Copies coordinates in the support and zeroes the rest. For `x >= 0`
    /// this is the largest element of the band below `x`.
    pub fn project<S: Scalar>(&self, x: &LatticeVector<S>) -> Result<LatticeVector<S>> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.dim(),
            });
        }
        let coords = x
            .coords()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if self.support.contains(&i) {
                    v.clone()
                } else {
                    S::zero()
                }
            })
            .collect();
        LatticeVector::new(coords)
    }
}

/// Decides whether `m` is a band projection of `R^n`, i.e. a diagonal matrix
/// with entries in {0, 1}. Returns the support when it is.
pub fn is_band_projection_x<S: Scalar>(m: &RegularOperator<S>) -> Option<BandProjectionX> {
    let n = m.dim();
    let mut support = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            if i != j {
                if !v.is_zero() {
                    return None;
                }
            } else if v.approx_eq(&S::one()) {
                support.insert(i);
            } else if !v.is_zero() {
                return None;
            }
        }
    }
    Some(BandProjectionX { n, support })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Float};

    fn v(xs: &[(i64, i64)]) -> LatticeVector {
        LatticeVector::new(xs.iter().map(|&(a, b)| q(a, b)).collect()).unwrap()
    }

    #[test]
    fn meet_is_coordinatewise_min() {
        let x = v(&[(1, 1), (-2, 1)]);
        let y = v(&[(0, 1), (3, 1)]);
        assert_eq!(x.meet(&y).unwrap(), v(&[(0, 1), (-2, 1)]));
        assert_eq!(x.join(&y).unwrap(), v(&[(1, 1), (3, 1)]));
        assert_eq!(x.meet(&x).unwrap(), x);
        assert_eq!(x.abs(), v(&[(1, 1), (2, 1)]));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let x = v(&[(1, 1)]);
        let y = v(&[(1, 1), (2, 1)]);
        assert!(matches!(x.meet(&y), Err(Error::DimensionMismatch { .. })));
        assert!(LatticeVector::<Rational>::new(vec![]).is_err());
    }

    #[test]
    fn band_project_masks_coordinates() {
        let p = BandProjectionX::new(2, [0]).unwrap();
        assert_eq!(p.project(&v(&[(3, 1), (5, 1)])).unwrap(), v(&[(3, 1), (0, 1)]));
        let empty = BandProjectionX::new(2, []).unwrap();
        assert!(empty.project(&v(&[(3, 1), (5, 1)])).unwrap().is_zero());
        assert!(BandProjectionX::new(2, [2]).is_err());
    }

    // Grid search over 0 <= y <= x with y vanishing off the support: the
    // coordinatewise supremum of all such y equals the projection.
    #[test]
    fn band_project_is_supremum_of_band_elements_below_x() {
        let x = v(&[(3, 1), (2, 1), (1, 1)]);
        for mask in 0u32..8 {
            let p = BandProjectionX::new(3, (0..3).filter(|i| mask & (1 << i) != 0)).unwrap();
            let mut sup = LatticeVector::<Rational>::zeros(3).unwrap();
            let steps = 4i64;
            for a in 0..=steps {
                for b in 0..=steps {
                    for c in 0..=steps {
                        let cand: Vec<Rational> = [a, b, c]
                            .iter()
                            .enumerate()
                            .map(|(i, &k)| {
                                if p.contains(i) {
                                    x.get(i).clone() * q(k, steps)
                                } else {
                                    q(0, 1)
                                }
                            })
                            .collect();
                        let y = LatticeVector::new(cand).unwrap();
                        assert!(y.le(&x).unwrap());
                        sup = sup.join(&y).unwrap();
                    }
                }
            }
            assert_eq!(sup, p.project(&x).unwrap());
        }
    }

    #[test]
    fn recognizes_diagonal_zero_one_matrices() {
        let m = RegularOperator::<Rational>::diagonal_mask(3, |i| i != 1).unwrap();
        let p = is_band_projection_x(&m).unwrap();
        assert_eq!(p.support().iter().copied().collect::<Vec<_>>(), vec![0, 2]);

        let half = RegularOperator::from_rows(vec![vec![q(1, 2), q(0, 1)], vec![q(0, 1), q(0, 1)]]).unwrap();
        assert!(is_band_projection_x(&half).is_none());

        let off = RegularOperator::from_rows(vec![vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(0, 1)]]).unwrap();
        assert!(is_band_projection_x(&off).is_none());
    }

    // Exhaustive at n = 3: every 0/1 diagonal satisfies M^2 = M and
    // 0 <= M <= I, is accepted, and the eight supports are distinct.
    #[test]
    fn all_zero_one_diagonals_accepted_at_n3() {
        let mut supports = BTreeSet::new();
        let id = RegularOperator::<Rational>::identity(3).unwrap();
        for mask in 0u32..8 {
            let m = RegularOperator::<Rational>::diagonal_mask(3, |i| mask & (1 << i) != 0).unwrap();
            assert_eq!(m.mul(&m).unwrap(), m);
            assert!(m.is_nonneg() && m.le(&id).unwrap());
            let p = is_band_projection_x(&m).expect("accepted");
            supports.insert(p.support().clone());
        }
        assert_eq!(supports.len(), 8);
    }

    #[test]
    fn float_mode_agrees_with_exact() {
        let x = v(&[(1, 3), (-2, 7), (5, 4)]);
        let y = v(&[(1, 2), (-1, 3), (5, 4)]);
        let xf = x.convert(Float::from_rational);
        let yf = y.convert(Float::from_rational);
        let exact = x.meet(&y).unwrap().convert(Float::from_rational);
        assert!(exact.approx_eq(&xf.meet(&yf).unwrap()));
    }

    #[test]
    fn norms() {
        let x = v(&[(1, 2), (-3, 1)]);
        assert_eq!(x.norm_l1(), q(7, 2));
        assert_eq!(x.norm_linf(), q(3, 1));
    }
}
