//! Multiplication operators `L_A R_B : T ↦ ATB` on the operator space.
//!
//! `L_A R_B` is positive iff `A` and `B` are both positive or both negative,
//! a positive projection iff `λA` and `B/λ` are positive projections for some
//! `λ ≠ 0`, and a band projection iff `λA` and `B/λ` are band projections of
//! `X`. [`classify`] recovers `λ` from `B² = λB`.

use serde::Serialize;

use crate::detect::{detect_band_projection, SuperOperator};
use crate::error::{Error, Result};
use crate::lattice::is_band_projection_x;
use crate::operator::RegularOperator;
use crate::scalar::{Rational, Scalar};

/// Largest dimension accepted by [`brute_force_mult_band_check`].
pub const BRUTE_FORCE_MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignCase {
    BothPositive,
    BothNegative,
    Mixed,
}

impl SignCase {
    pub fn as_str(self) -> &'static str {
        match self {
            SignCase::BothPositive => "both_positive",
            SignCase::BothNegative => "both_negative",
            SignCase::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultClassification<S = Rational> {
    pub positive: bool,
    pub sign_case: SignCase,
    pub positive_projection: bool,
    pub band_projection: bool,
    /// Present exactly when `positive_projection` holds.
    pub lambda: Option<S>,
}

/// `A · T · B`.
pub fn mult_apply<S: Scalar>(
    a: &RegularOperator<S>,
    b: &RegularOperator<S>,
    t: &RegularOperator<S>,
) -> Result<RegularOperator<S>> {
    a.mul(t)?.mul(b)
}

/// `L_A R_B` as a superoperator.
pub fn mult_superoperator<S: Scalar>(a: &RegularOperator<S>, b: &RegularOperator<S>) -> Result<SuperOperator<S>> {
    a.check_dim(b)?;
    SuperOperator::from_map(a.dim(), |e| mult_apply(a, b, e))
}

fn check_nonzero<S: Scalar>(a: &RegularOperator<S>, b: &RegularOperator<S>) -> Result<()> {
    a.check_dim(b)?;
    if a.is_zero() {
        return Err(Error::ZeroOperator("A"));
    }
    if b.is_zero() {
        return Err(Error::ZeroOperator("B"));
    }
    Ok(())
}

/// The constant `λ` with `B² = λB`, taken from the first nonzero entry of
/// `B` and required to be the same ratio at every other nonzero entry. `None`
/// if no such nonzero `λ` exists.
fn projection_constant<S: Scalar>(b: &RegularOperator<S>) -> Option<S> {
    let b2 = b.mul(b).ok()?;
    let mut lambda: Option<S> = None;
    for (i, j) in b.support() {
        let ratio = b2.get(i, j).clone() / b.get(i, j).clone();
        match &lambda {
            None => lambda = Some(ratio),
            Some(l) if l.approx_eq(&ratio) => {}
            Some(_) => return None,
        }
    }
    let lambda = lambda?;
    if lambda.is_zero() || !b.scale(&lambda).approx_eq(&b2) {
        return None;
    }
    Some(lambda)
}

/// Classifies `L_A R_B` for nonzero `A`, `B`.
pub fn classify<S: Scalar>(a: &RegularOperator<S>, b: &RegularOperator<S>) -> Result<MultClassification<S>> {
    check_nonzero(a, b)?;
    let sign_case = if a.is_nonneg() && b.is_nonneg() {
        SignCase::BothPositive
    } else if a.is_nonpos() && b.is_nonpos() {
        SignCase::BothNegative
    } else {
        SignCase::Mixed
    };
    let positive = sign_case != SignCase::Mixed;
    let not_projection = MultClassification {
        positive,
        sign_case,
        positive_projection: false,
        band_projection: false,
        lambda: None,
    };
    if !positive {
        return Ok(not_projection);
    }
    let Some(lambda) = projection_constant(b) else {
        return Ok(not_projection);
    };
    let scaled_a = a.scale(&lambda);
    if !scaled_a.mul(&scaled_a)?.approx_eq(&scaled_a) {
        return Ok(not_projection);
    }
    let scaled_b = b.scale(&(S::one() / lambda.clone()));
    let band_projection = is_band_projection_x(&scaled_a).is_some() && is_band_projection_x(&scaled_b).is_some();
    Ok(MultClassification {
        positive,
        sign_case,
        positive_projection: true,
        band_projection,
        lambda: Some(lambda),
    })
}

/// Assembles `L_A R_B` from its values on the `E_ab` and runs the generic
/// band-projection detector on it.
pub fn brute_force_mult_band_check<S: Scalar>(a: &RegularOperator<S>, b: &RegularOperator<S>) -> Result<bool> {
    check_nonzero(a, b)?;
    if a.dim() > BRUTE_FORCE_MAX_DIM {
        return Err(Error::TooLarge {
            what: "dimension",
            size: a.dim(),
            cap: BRUTE_FORCE_MAX_DIM,
        });
    }
    Ok(detect_band_projection(&mult_superoperator(a, b)?).is_band_projection())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::vectorize;
    use crate::inner::IndexRelation;
    use crate::lattice::LatticeVector;
    use crate::operator::elementary;
    use crate::scalar::q;

    fn m(rows: &[&[(i64, i64)]]) -> RegularOperator {
        RegularOperator::from_rows(rows.iter().map(|r| r.iter().map(|&(a, b)| q(a, b)).collect()).collect()).unwrap()
    }

    fn id(n: usize) -> RegularOperator {
        RegularOperator::identity(n).unwrap()
    }

    fn kron(a: &RegularOperator, b: &RegularOperator) -> RegularOperator {
        let (n, p) = (a.dim(), b.dim());
        RegularOperator::from_fn(n * p, |r, c| a.get(r / p, c / p).clone() * b.get(r % p, c % p).clone()).unwrap()
    }

    #[test]
    fn identity_pair_is_identity() {
        let t = m(&[&[(1, 1), (2, 3)], &[(-1, 2), (4, 1)]]);
        assert_eq!(mult_apply(&id(2), &id(2), &t).unwrap(), t);
        let c = classify(&id(2), &id(2)).unwrap();
        assert!(c.band_projection);
        assert_eq!(c.lambda, Some(q(1, 1)));
    }

    // vec(ATB) = (Bᵀ ⊗ A) vec(T) for the column-major vectorization.
    #[test]
    fn superoperator_is_kronecker_product() {
        let a = m(&[
            &[(1, 1), (2, 1), (0, 1)],
            &[(0, 1), (-1, 1), (3, 1)],
            &[(1, 2), (0, 1), (1, 1)],
        ]);
        let b = m(&[
            &[(2, 1), (0, 1), (1, 1)],
            &[(1, 3), (1, 1), (0, 1)],
            &[(0, 1), (-2, 1), (1, 1)],
        ]);
        let sup = mult_superoperator(&a, &b).unwrap();
        assert_eq!(sup.matrix(), &kron(&b.transpose(), &a));
        let t = m(&[
            &[(1, 1), (0, 1), (2, 1)],
            &[(3, 1), (1, 1), (0, 1)],
            &[(0, 1), (5, 1), (1, 1)],
        ]);
        let via_kron = kron(&b.transpose(), &a)
            .apply(&LatticeVector::new(vectorize(&t)).unwrap())
            .unwrap();
        assert_eq!(
            via_kron.coords(),
            vectorize(&mult_apply(&a, &b, &t).unwrap()).as_slice()
        );
    }

    #[test]
    fn scaled_masks() {
        let a = m(&[&[(2, 1), (0, 1)], &[(0, 1), (0, 1)]]);
        let b = m(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]]);
        let c = classify(&a, &b).unwrap();
        assert!(c.positive && c.positive_projection && c.band_projection);
        assert_eq!(c.sign_case, SignCase::BothPositive);
        assert_eq!(c.lambda, Some(q(1, 2)));
    }

    #[test]
    fn mixed_signs_are_not_positive() {
        let b = m(&[&[(1, 1), (-1, 1)], &[(0, 1), (1, 1)]]);
        let c = classify(&id(2), &b).unwrap();
        assert!(!c.positive);
        assert_eq!(c.sign_case, SignCase::Mixed);
        assert_eq!(c.lambda, None);
    }

    #[test]
    fn positive_projection_that_is_not_a_band_projection() {
        let b = m(&[&[(1, 1), (1, 1)], &[(0, 1), (0, 1)]]);
        let c = classify(&id(2), &b).unwrap();
        assert!(c.positive_projection);
        assert!(!c.band_projection);
        assert_eq!(c.lambda, Some(q(1, 1)));
        assert!(!brute_force_mult_band_check(&id(2), &b).unwrap());
    }

    #[test]
    fn both_negative_gives_negative_lambda() {
        let p = m(&[&[(1, 1), (0, 1)], &[(0, 1), (0, 1)]]);
        let c = classify(&p.scale(&q(-3, 1)), &id(2).scale(&q(-1, 3))).unwrap();
        assert_eq!(c.sign_case, SignCase::BothNegative);
        assert!(c.band_projection);
        assert_eq!(c.lambda, Some(q(-1, 3)));
    }

    #[test]
    fn nilpotent_b_is_not_a_projection() {
        let b = elementary::<Rational>(0, 1, 2).unwrap();
        let c = classify(&id(2), &b).unwrap();
        assert!(c.positive && !c.positive_projection && c.lambda.is_none());
        assert!(!brute_force_mult_band_check(&id(2), &b).unwrap());
    }

    #[test]
    fn zero_operators_are_rejected() {
        let z = RegularOperator::<Rational>::zeros(2).unwrap();
        assert_eq!(classify(&z, &id(2)), Err(Error::ZeroOperator("A")));
        assert_eq!(classify(&id(2), &z), Err(Error::ZeroOperator("B")));
        assert_eq!(brute_force_mult_band_check(&z, &id(2)), Err(Error::ZeroOperator("A")));
        let big = RegularOperator::<Rational>::identity(5).unwrap();
        assert!(matches!(
            brute_force_mult_band_check(&big, &big),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn mask_pair_detects_product_relation() {
        let p = RegularOperator::<Rational>::diagonal_mask(3, |i| i != 1).unwrap();
        let qm = RegularOperator::<Rational>::diagonal_mask(3, |i| i == 1).unwrap();
        let det = detect_band_projection(&mult_superoperator(&p, &qm).unwrap());
        assert_eq!(det.gamma(), Some(&IndexRelation::from_index_pairs(&[(1, 2), (3, 2)])));
    }

    // The factorization maps J and δ: with x₄*(Bx₃) = 1 and x₂*(Ax₁) = 1,
    // δ_{x₃} ∘ L_A R_B ∘ J_{x₄*} = A and δ_{x₂*} ∘ L_A R_B ∘ J_{x₁} = Bᵀ.
    #[test]
    fn factorization_through_rank_one_operators() {
        let a = m(&[&[(1, 1), (2, 1)], &[(0, 1), (3, 1)]]);
        let b = m(&[&[(2, 1), (0, 1)], &[(1, 1), (1, 1)]]);
        let x3 = LatticeVector::basis(2, 0).unwrap();
        let bx3 = b.apply(&x3).unwrap();
        let x4 = LatticeVector::new(vec![q(1, 1) / bx3.get(0).clone(), q(0, 1)]).unwrap();
        let x1 = LatticeVector::basis(2, 1).unwrap();
        let ax1 = a.apply(&x1).unwrap();
        let x2 = LatticeVector::new(vec![q(0, 1), q(1, 1) / ax1.get(1).clone()]).unwrap();

        let outer = |u: &LatticeVector, w: &LatticeVector| {
            RegularOperator::from_fn(2, |i, j| u.get(i).clone() * w.get(j).clone()).unwrap()
        };
        for k in 0..2 {
            let x = LatticeVector::basis(2, k).unwrap();
            let j_x = outer(&x, &x4);
            let through = mult_apply(&a, &b, &j_x).unwrap().apply(&x3).unwrap();
            assert_eq!(through, a.apply(&x).unwrap());

            let j_star = outer(&x1, &x);
            let through = mult_apply(&a, &b, &j_star).unwrap().transpose().apply(&x2).unwrap();
            assert_eq!(through, b.transpose().apply(&x).unwrap());
        }
    }
}
