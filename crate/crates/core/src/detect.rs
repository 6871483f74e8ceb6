//! Recognizing band projections on the space of regular operators.
//!
//! A [`SuperOperator`] is a linear map on `n × n` matrices stored as an
//! `n² × n²` matrix acting on column-major vectorizations: position
//! `i + n·j` of `vec(T)` holds `T_ij`, so basis vector `i + n·j` is `E_ij`.
//!
//! On an atomic, order continuous lattice every band projection of the
//! operator space is inner. [`detect_band_projection`] checks the defining
//! properties on the cone generators `E_ab` and returns the canonical
//! relation `Γ = {(a, b) : 𝒫(E_ab) = E_ab}` over singleton blocks.

use std::fmt;

use crate::error::{Error, Result};
use crate::inner::{singleton_label, BlockFamily, IndexRelation, InnerProjection};
use crate::operator::{elementary, RegularOperator};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator<S = Rational> {
    n: usize,
    matrix: RegularOperator<S>,
}

/// Position of `E_ij` in the column-major vectorization.
pub fn vec_index(n: usize, i: usize, j: usize) -> usize {
    i + n * j
}

impl<S: Scalar> SuperOperator<S> {
    /// Wraps an `n² × n²` matrix.
    pub fn new(n: usize, matrix: RegularOperator<S>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        if matrix.dim() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: matrix.dim(),
            });
        }
        Ok(Self { n, matrix })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, RegularOperator::identity(n * n)?)
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(n, RegularOperator::zeros(n * n)?)
    }

    /// The superoperator of a linear map, read off its values on `E_ab`.
    pub fn from_map(n: usize, f: impl Fn(&RegularOperator<S>) -> Result<RegularOperator<S>>) -> Result<Self> {
        let big = n * n;
        let mut matrix = RegularOperator::zeros(big)?;
        for b in 0..n {
            for a in 0..n {
                let image = f(&elementary(a, b, n)?)?;
                if image.dim() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: image.dim(),
                    });
                }
                let col = vec_index(n, a, b);
                for (row, v) in vectorize(&image).into_iter().enumerate() {
                    matrix.set(row, col, v);
                }
            }
        }
        Self::new(n, matrix)
    }

    /// The diagonal entry-mask superoperator of an inner projection.
    pub fn from_inner(p: &InnerProjection) -> Self {
        let n = p.dim();
        let matrix = RegularOperator::from_fn(n * n, |r, c| {
            if r == c && p.keeps(r % n, r / n) {
                S::one()
            } else {
                S::zero()
            }
        })
        .expect("n >= 1");
        Self { n, matrix }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RegularOperator<S> {
        &self.matrix
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SuperOperator<T> {
        SuperOperator {
            n: self.n,
            matrix: self.matrix.convert(f),
        }
    }

    /// `unvec(M · vec(T))`.
    pub fn apply(&self, t: &RegularOperator<S>) -> Result<RegularOperator<S>> {
        if t.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: t.dim(),
            });
        }
        let v = crate::lattice::LatticeVector::new(vectorize(t))?;
        unvectorize(self.n, self.matrix.apply(&v)?.into_coords())
    }

    /// Image of `E_ab`, i.e. column `a + n·b` of the matrix.
    pub fn image_of_elementary(&self, a: usize, b: usize) -> RegularOperator<S> {
        let col = vec_index(self.n, a, b);
        let n = self.n;
        RegularOperator::from_fn(n, |i, j| self.matrix.get(vec_index(n, i, j), col).clone()).expect("n >= 1")
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        Self::new(self.n, self.matrix.mul(&other.matrix)?)
    }
}

/// Column-major `vec(T)`.
pub fn vectorize<S: Scalar>(t: &RegularOperator<S>) -> Vec<S> {
    let n = t.dim();
    (0..n * n).map(|k| t.get(k % n, k / n).clone()).collect()
}

pub fn unvectorize<S: Scalar>(n: usize, v: Vec<S>) -> Result<RegularOperator<S>> {
    if v.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: v.len(),
        });
    }
    RegularOperator::from_fn(n, |i, j| v[vec_index(n, i, j)].clone())
}

pub fn super_apply<S: Scalar>(p: &SuperOperator<S>, t: &RegularOperator<S>) -> Result<RegularOperator<S>> {
    p.apply(t)
}

/// `𝒫 ≥ 0`: every `𝒫(E_ab)` is a positive operator. The `E_ab` generate the
/// positive cone, so this is equivalent to all matrix entries being `≥ 0`.
pub fn is_positive_super<S: Scalar>(p: &SuperOperator<S>) -> bool {
    let n = p.dim();
    (0..n).all(|a| (0..n).all(|b| p.image_of_elementary(a, b).is_nonneg()))
}

/// The checks of [`detect_band_projection`], in the order they are run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Idempotence,
    Positivity,
    Domination,
    Dichotomy,
    Reconstruction,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Idempotence => "idempotence",
            Stage::Positivity => "positivity",
            Stage::Domination => "domination",
            Stage::Dichotomy => "dichotomy",
            Stage::Reconstruction => "reconstruction",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Detection {
    /// A band projection, equal to `𝒫_Γ` over singleton blocks.
    Accepted(IndexRelation),
    /// Not a band projection; the first failing check.
    Rejected(Stage),
    /// Idempotence, positivity and domination held but a later check failed.
    /// This cannot happen for a correct implementation.
    Inconsistent(Stage),
}

impl Detection {
    pub fn is_band_projection(&self) -> bool {
        matches!(self, Detection::Accepted(_))
    }

    pub fn gamma(&self) -> Option<&IndexRelation> {
        match self {
            Detection::Accepted(g) => Some(g),
            _ => None,
        }
    }

    pub fn rejection_stage(&self) -> Option<Stage> {
        match self {
            Detection::Accepted(_) => None,
            Detection::Rejected(s) | Detection::Inconsistent(s) => Some(*s),
        }
    }
}

/// Decides whether `p` is a band projection of the operator space and
/// recovers its canonical inner form.
///
/// The checks are idempotence, positivity, domination `𝒫(E_ab) ≤ E_ab`, the
/// dichotomy `𝒫(E_ab) ∈ {0, E_ab}`, and reconstruction `p = 𝒫_Γ`. The first
/// three imply the last two. In float mode the dichotomy snaps entries within
/// tolerance of 0 or 1.
pub fn detect_band_projection<S: Scalar>(p: &SuperOperator<S>) -> Detection {
    let n = p.dim();
    let m = p.matrix();
    match m.mul(m) {
        Ok(sq) if sq.approx_eq(m) => {}
        _ => return Detection::Rejected(Stage::Idempotence),
    }
    if !is_positive_super(p) {
        return Detection::Rejected(Stage::Positivity);
    }
    let mut pairs = Vec::new();
    let mut images = Vec::with_capacity(n * n);
    for b in 0..n {
        for a in 0..n {
            let image = p.image_of_elementary(a, b);
            let e = elementary::<S>(a, b, n).expect("in range");
            if !image.le(&e).expect("same dimension") {
                return Detection::Rejected(Stage::Domination);
            }
            images.push((a, b, image, e));
        }
    }
    for (a, b, image, e) in images {
        if image.approx_eq(&e) {
            pairs.push((singleton_label(a), singleton_label(b)));
        } else if !image.is_zero() {
            return Detection::Inconsistent(Stage::Dichotomy);
        }
    }
    let gamma = IndexRelation::new(pairs);
    let family = BlockFamily::singletons(n).expect("n >= 1");
    let inner = InnerProjection::new(family, gamma.clone()).expect("singleton labels");
    if !SuperOperator::<S>::from_inner(&inner).matrix().approx_eq(m) {
        return Detection::Inconsistent(Stage::Reconstruction);
    }
    Detection::Accepted(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Float};

    fn sample(n: usize) -> RegularOperator {
        RegularOperator::from_fn(n, |i, j| q(i as i64 * 5 - j as i64 * 2 + 1, j as i64 + 1)).unwrap()
    }

    #[test]
    fn vectorization_is_column_major() {
        let t = sample(3);
        let v = vectorize(&t);
        assert_eq!(v[vec_index(3, 2, 0)], *t.get(2, 0));
        assert_eq!(v[1], *t.get(1, 0));
        assert_eq!(v[3], *t.get(0, 1));
        assert_eq!(unvectorize(3, v).unwrap(), t);
    }

    #[test]
    fn identity_and_zero_superoperators() {
        let t = sample(3);
        assert_eq!(SuperOperator::identity(3).unwrap().apply(&t).unwrap(), t);
        assert!(SuperOperator::zero(3).unwrap().apply(&t).unwrap().is_zero());
        assert!(SuperOperator::identity(2).unwrap().apply(&t).is_err());
    }

    #[test]
    fn assembled_inner_projection_matches_apply() {
        let fam = BlockFamily::new(3, [("a", vec![0, 2]), ("b", vec![1])]).unwrap();
        let p = InnerProjection::new(fam, IndexRelation::new([("a", "b"), ("b", "b")])).unwrap();
        let sup = SuperOperator::from_inner(&p);
        let t = sample(3);
        assert_eq!(sup.apply(&t).unwrap(), p.apply(&t).unwrap());
        assert!(is_positive_super(&sup));
        let via_map = SuperOperator::from_map(3, |e| p.apply(e)).unwrap();
        assert_eq!(via_map, sup);
    }

    #[test]
    fn positivity() {
        assert!(!is_positive_super(
            &SuperOperator::<Rational>::identity(2).unwrap().convert(|x| -x.clone())
        ));
        // Σ c_ab vec(E_ab) vec(E_ab)ᵀ with c ≥ 0.
        let m = RegularOperator::from_fn(4, |r, c| if r == c { q(r as i64, 3) } else { q(0, 1) }).unwrap();
        assert!(is_positive_super(&SuperOperator::new(2, m).unwrap()));
    }

    #[test]
    fn all_masks_at_n2_are_recovered() {
        let fam = BlockFamily::singletons(2).unwrap();
        let all: Vec<_> = fam
            .full_relation()
            .pairs()
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        for mask in 0u32..16 {
            let gamma: IndexRelation = all
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, p)| p.clone())
                .collect();
            let p = InnerProjection::new(fam.clone(), gamma.clone()).unwrap();
            let sup = SuperOperator::<Rational>::from_inner(&p);
            assert_eq!(detect_band_projection(&sup), Detection::Accepted(gamma));
        }
    }

    #[test]
    fn coarse_family_is_canonicalized_to_singletons() {
        let fam = BlockFamily::new(2, [("all", vec![0, 1])]).unwrap();
        let p = InnerProjection::top(fam);
        let g = detect_band_projection(&SuperOperator::<Rational>::from_inner(&p));
        assert_eq!(g.gamma().unwrap().len(), 4);
    }

    #[test]
    fn half_identity_fails_idempotence() {
        let half = SuperOperator::new(2, RegularOperator::identity(4).unwrap().scale(&q(1, 2))).unwrap();
        assert_eq!(detect_band_projection(&half), Detection::Rejected(Stage::Idempotence));
    }

    #[test]
    fn transpose_is_an_involution_not_a_projection() {
        let tr = SuperOperator::<Rational>::from_map(2, |t| Ok(t.transpose())).unwrap();
        assert!(is_positive_super(&tr));
        assert_eq!(detect_band_projection(&tr), Detection::Rejected(Stage::Idempotence));
        let tr1 = SuperOperator::<Rational>::from_map(1, |t| Ok(t.transpose())).unwrap();
        assert!(detect_band_projection(&tr1).is_band_projection());
    }

    #[test]
    fn float_mode_snaps_near_integers() {
        let fam = BlockFamily::singletons(2).unwrap();
        let p = InnerProjection::new(fam, IndexRelation::from_index_pairs(&[(1, 2), (2, 2)])).unwrap();
        let sup: SuperOperator<Float> = SuperOperator::from_inner(&p);
        let mut m = sup.matrix().clone();
        let k = vec_index(2, 0, 1);
        m.set(k, k, Float(1.0 + 1e-12));
        let noisy = SuperOperator::new(2, m).unwrap();
        assert_eq!(detect_band_projection(&noisy).gamma(), Some(p.relation()));
    }
}
