//! Dyadic step functions on `[0, 1]`.
//!
//! At level `n` the lattice is `R^{2^n}` in the basis of characteristic
//! functions `χ_k` of the intervals `I_k = [(k−1)/2^n, k/2^n]`, each of
//! Lebesgue measure `2^{-n}`. The averaging operator `f ↦ (∫f) χ_Ω` is
//! positive and idempotent, and its meet with the identity shrinks like
//! `2^{-n}` under refinement: the finite trace of an operator whose meet with
//! the identity vanishes on a non-atomic space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inner::{BlockFamily, IndexRelation, InnerProjection};
use crate::lattice::LatticeVector;
use crate::operator::{elementary, op_meet, regular_norm, Norm, RegularOperator};
use crate::scalar::{q, Rational, Scalar};

/// Largest refinement level accepted (dimension `2^16`).
pub const MAX_LEVEL: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicLevel {
    level: u32,
}

impl DyadicLevel {
    pub fn new(level: u32) -> Result<Self> {
        if level == 0 {
            return Err(Error::Precondition("dyadic level must be at least 1".into()));
        }
        if level > MAX_LEVEL {
            return Err(Error::TooLarge {
                what: "dyadic level",
                size: level as usize,
                cap: MAX_LEVEL as usize,
            });
        }
        Ok(Self { level })
    }

    pub fn level(self) -> u32 {
        self.level
    }

    pub fn dim(self) -> usize {
        1 << self.level
    }

    /// `μ(I_k) = 2^{-n}`.
    pub fn weight(self) -> Rational {
        Rational::new(1.into(), num_bigint::BigInt::from(1u64) << self.level)
    }

    pub fn finer(self) -> Self {
        Self { level: self.level + 1 }
    }

    /// Rewrites a level-`n` step function in the level-`n+1` basis: each
    /// `χ_k` splits into the characteristic functions of its two halves.
    pub fn embed<S: Scalar>(self, v: &LatticeVector<S>) -> Result<LatticeVector<S>> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.dim(),
            });
        }
        LatticeVector::new(v.coords().iter().flat_map(|c| [c.clone(), c.clone()]).collect())
    }

    /// `∫ f dμ` for the step function with the given coefficients.
    pub fn integral(self, v: &LatticeVector<Rational>) -> Rational {
        v.coords().iter().fold(q(0, 1), |acc, c| acc + c.clone()) * self.weight()
    }
}

/// `T χ_k = 2^{-n} Σ_j χ_j`: every entry equals `2^{-n}`.
pub fn averaging_operator(level: DyadicLevel) -> RegularOperator {
    let w = level.weight();
    RegularOperator::from_fn(level.dim(), |_, _| w.clone()).expect("dimension >= 2")
}

/// `‖T ∧ I‖` in the `L¹` operator norm at the given level, which is `2^{-n}`.
pub fn meet_with_identity_decay(level: DyadicLevel) -> Rational {
    let t = averaging_operator(level);
    let id = RegularOperator::identity(level.dim()).expect("dimension >= 2");
    let meet = op_meet(&t, &id).expect("same dimension");
    regular_norm(&meet, Norm::L1)
}

/// `embed(T_n v) = T_{n+1} embed(v)` for every basis vector `v` of level `n`.
pub fn refinement_consistency(level: DyadicLevel) -> bool {
    let coarse = averaging_operator(level);
    let fine = averaging_operator(level.finer());
    (0..level.dim()).all(|k| {
        let v = LatticeVector::basis(level.dim(), k).expect("in range");
        let lhs = level.embed(&coarse.apply(&v).expect("dim")).expect("dim");
        let rhs = fine.apply(&level.embed(&v).expect("dim")).expect("dim");
        lhs == rhs
    })
}

/// The four level-2 blocks `B_1..B_4` and `Γ = {(1,1),(2,1),(3,1),(1,2)}`.
pub fn demo_projection() -> InnerProjection {
    let family = BlockFamily::singletons(4).expect("n = 4");
    let gamma = IndexRelation::from_index_pairs(&[(1, 1), (2, 1), (3, 1), (1, 2)]);
    InnerProjection::new(family, gamma).expect("labels 1..4")
}

/// `(Tf)(x) = f(x/2) χ_{[0,1/2]}(x)` on level-2 step functions:
/// `χ_{I_1} ↦ χ_{I_1} + χ_{I_2}` and `χ_{I_k} ↦ 0` for `k ≥ 2`, since
/// `T χ_{I_k}` is the indicator of `[(k−1)/2, k/2] ∩ [0, 1/2]`.
pub fn stretching_operator() -> RegularOperator {
    RegularOperator::from_fn(4, |i, j| if j == 0 && i <= 1 { q(1, 1) } else { q(0, 1) }).expect("n = 4")
}

/// The three support conditions describing `B_Γ` for [`demo_projection`],
/// with 0-based coordinates:
/// 1. `T(B_1) ⊆ B_1 ⊕ B_2 ⊕ B_3`;
/// 2. `T(B_2) ⊆ B_1`;
/// 3. `T(B_3) = T(B_4) = 0`.
pub fn demo_conditions(t: &RegularOperator) -> [bool; 3] {
    let col_within = |j: usize, allowed: &[usize]| {
        t.column(j)
            .enumerate()
            .all(|(i, v)| v.is_zero() || allowed.contains(&i))
    };
    [
        col_within(0, &[0, 1, 2]),
        col_within(1, &[0]),
        col_within(2, &[]) && col_within(3, &[]),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElementaryVerdict {
    /// 1-based block indices of `E_ij`.
    pub row: usize,
    pub col: usize,
    pub member: bool,
    pub conditions_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MembershipReport {
    pub stretching_member: bool,
    pub stretching_conditions: [bool; 3],
    /// `E_13`: maps `χ_{I_3}` to `χ_{I_1}`, violating condition 3.
    pub violating_member: bool,
    pub violating_conditions: [bool; 3],
    pub zero_member: bool,
    pub elementary: Vec<ElementaryVerdict>,
    pub elementary_agreement: bool,
}

impl MembershipReport {
    /// Whether every verdict matches the expected outcome.
    pub fn all_consistent(&self) -> bool {
        self.stretching_member
            && self.stretching_conditions == [true; 3]
            && !self.violating_member
            && !self.violating_conditions[2]
            && self.zero_member
            && self.elementary_agreement
    }
}

pub fn dyadic_membership_demo() -> Result<MembershipReport> {
    let p = demo_projection();
    let stretch = stretching_operator();
    let violating = elementary::<Rational>(0, 2, 4)?;
    let zero = RegularOperator::<Rational>::zeros(4)?;
    let mut elementary_verdicts = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            let e = elementary::<Rational>(i, j, 4)?;
            elementary_verdicts.push(ElementaryVerdict {
                row: i + 1,
                col: j + 1,
                member: p.band_member(&e)?,
                conditions_hold: demo_conditions(&e).iter().all(|&c| c),
            });
        }
    }
    let elementary_agreement = elementary_verdicts.iter().all(|v| v.member == v.conditions_hold);
    Ok(MembershipReport {
        stretching_member: p.band_member(&stretch)?,
        stretching_conditions: demo_conditions(&stretch),
        violating_member: p.band_member(&violating)?,
        violating_conditions: demo_conditions(&violating),
        zero_member: p.band_member(&zero)?,
        elementary: elementary_verdicts,
        elementary_agreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mult::classify;

    fn lvl(n: u32) -> DyadicLevel {
        DyadicLevel::new(n).unwrap()
    }

    #[test]
    fn level_validation() {
        assert!(DyadicLevel::new(0).is_err());
        assert!(DyadicLevel::new(MAX_LEVEL + 1).is_err());
        assert_eq!(lvl(3).dim(), 8);
        assert_eq!(lvl(3).weight(), q(1, 8));
    }

    #[test]
    fn averaging_at_level_one() {
        let t = averaging_operator(lvl(1));
        let half = q(1, 2);
        let expected =
            RegularOperator::from_rows(vec![vec![half.clone(), half.clone()], vec![half.clone(), half]]).unwrap();
        assert_eq!(t, expected);
    }

    #[test]
    fn averaging_fixes_constants_and_is_idempotent() {
        for n in 1..=4 {
            let t = averaging_operator(lvl(n));
            let one = LatticeVector::new(vec![q(1, 1); lvl(n).dim()]).unwrap();
            assert_eq!(t.apply(&one).unwrap(), one);
            assert_eq!(t.mul(&t).unwrap(), t);
            assert!(t.is_nonneg());
            assert!(!t.le(&RegularOperator::identity(lvl(n).dim()).unwrap()).unwrap());
        }
    }

    #[test]
    fn averaging_is_a_positive_projection_but_not_a_band_projection() {
        let t = averaging_operator(lvl(2));
        let c = classify(&t, &RegularOperator::identity(4).unwrap()).unwrap();
        assert!(c.positive && c.positive_projection && !c.band_projection);
    }

    #[test]
    fn decay_values() {
        assert_eq!(meet_with_identity_decay(lvl(1)), q(1, 2));
        assert_eq!(meet_with_identity_decay(lvl(5)), q(1, 32));
        for n in 1..6 {
            let ratio = meet_with_identity_decay(lvl(n + 1)) / meet_with_identity_decay(lvl(n));
            assert_eq!(ratio, q(1, 2));
        }
    }

    #[test]
    fn refinement_preserves_functions_and_averages() {
        for n in 1..=5 {
            assert!(refinement_consistency(lvl(n)));
        }
        // A non-basis step function through the chain 1 → 4.
        let mut v = LatticeVector::new(vec![q(3, 1), q(-1, 2)]).unwrap();
        let mut level = lvl(1);
        let integral = level.integral(&v);
        while level.level() < 4 {
            let avg = averaging_operator(level).apply(&v).unwrap();
            let next = level.embed(&v).unwrap();
            assert_eq!(
                level.embed(&avg).unwrap(),
                averaging_operator(level.finer()).apply(&next).unwrap()
            );
            v = next;
            level = level.finer();
            assert_eq!(level.integral(&v), integral);
        }
        let omega = LatticeVector::new(vec![q(1, 1); 16]).unwrap();
        assert_eq!(averaging_operator(lvl(4)).apply(&omega).unwrap(), omega);
    }

    #[test]
    fn membership_demo() {
        let r = dyadic_membership_demo().unwrap();
        assert!(r.stretching_member);
        assert!(!r.violating_member);
        assert!(r.zero_member);
        assert_eq!(r.elementary.len(), 16);
        assert!(r.elementary_agreement);
        assert!(r.all_consistent());
        let members: Vec<(usize, usize)> = r
            .elementary
            .iter()
            .filter(|v| v.member)
            .map(|v| (v.row, v.col))
            .collect();
        assert_eq!(members, vec![(1, 1), (1, 2), (2, 1), (3, 1)]);
    }
}
