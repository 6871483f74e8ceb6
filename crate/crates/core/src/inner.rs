//! Inner band projections `𝒫_Γ` on the space of regular operators.
//!
//! A [`BlockFamily`] is a finite set of pairwise disjoint coordinate blocks,
//! each standing for the band projection `P_λ` onto those coordinates. For a
//! relation `Γ` between block labels, `𝒫_Γ(T) = Σ_{(α,β)∈Γ} P_α T P_β`, which
//! in matrix terms keeps the entries of `T` whose row lies in block `α` and
//! column in block `β` for some `(α, β) ∈ Γ`.
//!
//! Blocks need not cover every coordinate; uncovered rows and columns are
//! always zeroed, so the top element `𝒫_{Λ×Λ}` is the identity only for a
//! covering family.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::lattice::{BandProjectionX, LatticeVector};
use crate::operator::{ElementaryOperator, RegularOperator};
use crate::scalar::Scalar;

pub type Label = String;

/// Cap on `|Γ|` for [`InnerProjection::sup_over_finite_oracle`].
pub const SUP_ORACLE_MAX_PAIRS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockFamily {
    n: usize,
    blocks: BTreeMap<Label, BTreeSet<usize>>,
    owner: Vec<Option<Label>>,
}

impl BlockFamily {
    pub fn new<L, I>(n: usize, blocks: impl IntoIterator<Item = (L, I)>) -> Result<Self>
    where
        L: Into<Label>,
        I: IntoIterator<Item = usize>,
    {
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        let mut owner: Vec<Option<Label>> = vec![None; n];
        let mut map = BTreeMap::new();
        for (label, indices) in blocks {
            let label = label.into();
            let set: BTreeSet<usize> = indices.into_iter().collect();
            if set.is_empty() {
                return Err(Error::EmptyBlock(label));
            }
            for &index in &set {
                if index >= n {
                    return Err(Error::IndexOutOfRange { index, n });
                }
                if let Some(first) = &owner[index] {
                    return Err(Error::OverlappingBlocks {
                        index,
                        first: first.clone(),
                        second: label,
                    });
                }
                owner[index] = Some(label.clone());
            }
            if map.insert(label.clone(), set).is_some() {
                return Err(Error::Precondition(format!("duplicate block label {label:?}")));
            }
        }
        Ok(Self { n, blocks: map, owner })
    }

    /// One block per coordinate, coordinate `i` labelled `i + 1`.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (singleton_label(i), [i])))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.blocks.keys()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, label: &str) -> Option<&BTreeSet<usize>> {
        self.blocks.get(label)
    }

    pub fn blocks(&self) -> &BTreeMap<Label, BTreeSet<usize>> {
        &self.blocks
    }

    /// Label of the block containing coordinate `i`, if any.
    pub fn owner(&self, i: usize) -> Option<&Label> {
        self.owner.get(i).and_then(Option::as_ref)
    }

    pub fn covers_all(&self) -> bool {
        self.owner.iter().all(Option::is_some)
    }

    pub fn band_projection(&self, label: &str) -> Option<BandProjectionX> {
        let block = self.blocks.get(label)?;
        Some(BandProjectionX::new(self.n, block.iter().copied()).expect("validated block"))
    }

    /// `Λ × Λ`.
    pub fn full_relation(&self) -> IndexRelation {
        let labels: Vec<&Label> = self.labels().collect();
        IndexRelation::new(
            labels
                .iter()
                .flat_map(|a| labels.iter().map(move |b| ((*a).clone(), (*b).clone()))),
        )
    }
}

/// Label given to coordinate `i` by [`BlockFamily::singletons`].
pub fn singleton_label(i: usize) -> Label {
    (i + 1).to_string()
}

/// `Γ ⊆ Λ × Λ`, a set of ordered label pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexRelation {
    pairs: BTreeSet<(Label, Label)>,
}

impl IndexRelation {
    pub fn new<A: Into<Label>, B: Into<Label>>(pairs: impl IntoIterator<Item = (A, B)>) -> Self {
        Self {
            pairs: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Relation over singleton labels, from 1-based coordinate pairs.
    pub fn from_index_pairs(pairs: &[(usize, usize)]) -> Self {
        Self::new(pairs.iter().map(|&(a, b)| (a.to_string(), b.to_string())))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&Label, &Label)> {
        self.pairs.iter().map(|(a, b)| (a, b))
    }

    pub fn contains(&self, alpha: &str, beta: &str) -> bool {
        self.pairs.contains(&(alpha.to_owned(), beta.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `π₁(Γ)`.
    pub fn project_first(&self) -> BTreeSet<Label> {
        self.pairs.iter().map(|(a, _)| a.clone()).collect()
    }

    /// `π₂(Γ)`.
    pub fn project_second(&self) -> BTreeSet<Label> {
        self.pairs.iter().map(|(_, b)| b.clone()).collect()
    }

    /// `Γ_α = {β : (α, β) ∈ Γ}`.
    pub fn slice_row(&self, alpha: &str) -> BTreeSet<Label> {
        self.pairs
            .iter()
            .filter(|(a, _)| a == alpha)
            .map(|(_, b)| b.clone())
            .collect()
    }

    /// `Γ^β = {α : (α, β) ∈ Γ}`.
    pub fn slice_col(&self, beta: &str) -> BTreeSet<Label> {
        self.pairs
            .iter()
            .filter(|(_, b)| b == beta)
            .map(|(a, _)| a.clone())
            .collect()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            pairs: self.pairs.intersection(&other.pairs).cloned().collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            pairs: self.pairs.union(&other.pairs).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self {
            pairs: self.pairs.difference(&other.pairs).cloned().collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    pub fn validate(&self, family: &BlockFamily) -> Result<()> {
        for (a, b) in &self.pairs {
            for label in [a, b] {
                if family.block(label).is_none() {
                    return Err(Error::UnknownLabel(label.clone()));
                }
            }
        }
        Ok(())
    }
}

impl<A: Into<Label>, B: Into<Label>> FromIterator<(A, B)> for IndexRelation {
    fn from_iter<T: IntoIterator<Item = (A, B)>>(iter: T) -> Self {
        Self::new(iter)
    }
}

/// The inner band projection `𝒫_Γ` of a block family and relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerProjection {
    family: BlockFamily,
    relation: IndexRelation,
    mask: Vec<bool>,
}

impl InnerProjection {
    pub fn new(family: BlockFamily, relation: IndexRelation) -> Result<Self> {
        relation.validate(&family)?;
        let n = family.dim();
        let mask = (0..n * n)
            .map(|k| match (family.owner(k / n), family.owner(k % n)) {
                (Some(a), Some(b)) => relation.contains(a, b),
                _ => false,
            })
            .collect();
        Ok(Self { family, relation, mask })
    }

    pub fn top(family: BlockFamily) -> Self {
        let full = family.full_relation();
        Self::new(family, full).expect("full relation is valid")
    }

    pub fn bottom(family: BlockFamily) -> Self {
        Self::new(family, IndexRelation::empty()).expect("empty relation is valid")
    }

    pub fn family(&self) -> &BlockFamily {
        &self.family
    }

    pub fn relation(&self) -> &IndexRelation {
        &self.relation
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// Whether entry `(i, j)` survives the projection.
    pub fn keeps(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.dim() + j]
    }

    fn check_dim<S: Scalar>(&self, t: &RegularOperator<S>) -> Result<()> {
        if t.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: t.dim(),
            });
        }
        Ok(())
    }

    fn check_family(&self, other: &Self) -> Result<()> {
        if self.family != other.family {
            return Err(Error::FamilyMismatch);
        }
        Ok(())
    }

    /// `𝒫_Γ(T)`.
    pub fn apply<S: Scalar>(&self, t: &RegularOperator<S>) -> Result<RegularOperator<S>> {
        self.check_dim(t)?;
        Ok(t.masked(|i, j| self.keeps(i, j)))
    }

    /// `P_α T P_β` by explicit matrix products.
    pub fn compress<S: Scalar>(&self, t: &RegularOperator<S>, alpha: &str, beta: &str) -> Result<RegularOperator<S>> {
        self.check_dim(t)?;
        let pa = self
            .family
            .band_projection(alpha)
            .ok_or_else(|| Error::UnknownLabel(alpha.into()))?;
        let pb = self
            .family
            .band_projection(beta)
            .ok_or_else(|| Error::UnknownLabel(beta.into()))?;
        pa.to_operator().mul(t)?.mul(&pb.to_operator())
    }

    /// Coordinatewise supremum, over every subset `Φ ⊆ Γ`, of
    /// `Σ_{(α,β)∈Φ} P_α T P_β x`, with each term computed from matrix
    /// products. Checks along the way that the partial sums are monotone in
    /// `Φ`.
    pub fn sup_over_finite_oracle<S: Scalar>(
        &self,
        t: &RegularOperator<S>,
        x: &LatticeVector<S>,
    ) -> Result<LatticeVector<S>> {
        self.check_dim(t)?;
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        if !t.is_nonneg() {
            return Err(Error::NegativeInput("operator"));
        }
        if !x.is_nonneg() {
            return Err(Error::NegativeInput("vector"));
        }
        let k = self.relation.len();
        if k > SUP_ORACLE_MAX_PAIRS {
            return Err(Error::TooLarge {
                what: "relation size",
                size: k,
                cap: SUP_ORACLE_MAX_PAIRS,
            });
        }
        let terms = self
            .relation
            .pairs()
            .map(|(a, b)| self.compress(t, a, b)?.apply(x))
            .collect::<Result<Vec<_>>>()?;

        let mut partial: Vec<LatticeVector<S>> = Vec::with_capacity(1 << k);
        partial.push(LatticeVector::zeros(self.dim())?);
        for subset in 1usize..(1 << k) {
            let low = subset.trailing_zeros() as usize;
            let sum = partial[subset & (subset - 1)].add(&terms[low])?;
            partial.push(sum);
        }
        for (subset, sum) in partial.iter().enumerate() {
            for bit in (0..k).filter(|b| subset & (1 << b) != 0) {
                if !partial[subset ^ (1 << bit)].le(sum)? {
                    return Err(Error::Internal(format!(
                        "partial sums not monotone at subset {subset:#b}"
                    )));
                }
            }
        }
        let mut sup = partial[0].clone();
        for sum in &partial[1..] {
            sup = sup.join(sum)?;
        }
        Ok(sup)
    }

    /// `𝒫_Γ ∧ 𝒫_Δ = 𝒫_{Γ∩Δ}`.
    pub fn boolean_meet(&self, other: &Self) -> Result<Self> {
        self.check_family(other)?;
        Self::new(self.family.clone(), self.relation.intersection(&other.relation))
    }

    /// `𝒫_Γ ∨ 𝒫_Δ = 𝒫_{Γ∪Δ}`.
    pub fn boolean_join(&self, other: &Self) -> Result<Self> {
        self.check_family(other)?;
        Self::new(self.family.clone(), self.relation.union(&other.relation))
    }

    /// `𝒫_{(Λ×Λ)∖Γ}`.
    pub fn boolean_complement(&self) -> Self {
        let rel = self.family.full_relation().difference(&self.relation);
        Self::new(self.family.clone(), rel).expect("subset of the full relation")
    }

    /// `T ∈ B_Γ`, decided as the fixed-point condition `𝒫_Γ(T) = T` and
    /// cross-checked against [`Self::band_member_by_support`].
    pub fn band_member<S: Scalar>(&self, t: &RegularOperator<S>) -> Result<bool> {
        let fixed = self.apply(t)?.approx_eq(t);
        let by_support = self.band_member_by_support(t)?;
        if fixed != by_support {
            return Err(Error::Internal("membership characterizations disagree".into()));
        }
        Ok(fixed)
    }

    /// `T(B_β) ⊆ ⊕_{α∈Γ^β} B_α` for every block `β`, and `T` vanishes on
    /// uncovered coordinates.
    pub fn band_member_by_support<S: Scalar>(&self, t: &RegularOperator<S>) -> Result<bool> {
        self.check_dim(t)?;
        for j in 0..self.dim() {
            let allowed: BTreeSet<usize> = match self.family.owner(j) {
                Some(beta) => self
                    .relation
                    .slice_col(beta)
                    .iter()
                    .flat_map(|alpha| self.family.block(alpha).into_iter().flatten().copied())
                    .collect(),
                None => BTreeSet::new(),
            };
            let column_ok = t
                .column(j)
                .enumerate()
                .all(|(i, v)| v.is_zero() || allowed.contains(&i));
            if !column_ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `B_Γ` is left orthogonal to `B_Δ` iff `π₂(Γ) ∩ π₁(Δ) = ∅`.
    pub fn left_orthogonal(&self, other: &Self) -> Result<bool> {
        self.check_family(other)?;
        Ok(self.shared_block(other).is_none())
    }

    fn shared_block(&self, other: &Self) -> Option<Label> {
        let second = self.relation.project_second();
        other
            .relation
            .project_first()
            .into_iter()
            .find(|label| second.contains(label))
    }

    /// When `B_Γ` is not left orthogonal to `B_Δ`, returns `T ∈ B_Γ` and
    /// `S ∈ B_Δ` with `TS ≠ 0`.
    ///
    /// With `γ ∈ π₂(Γ) ∩ π₁(Δ)`, `(α, γ) ∈ Γ` and `(γ, β) ∈ Δ`, take
    /// `T = f ⊗ χ_α` and `S = g ⊗ e_c` where `c` and `d` are the first
    /// coordinates of blocks `γ` and `β`, and `f`, `g` are the coordinate
    /// functionals of `c` and `d`. Then `TS e_d = χ_α ≠ 0`.
    pub fn orthogonality_witness<S: Scalar>(
        &self,
        other: &Self,
    ) -> Result<Option<(RegularOperator<S>, RegularOperator<S>)>> {
        self.check_family(other)?;
        let Some(gamma) = self.shared_block(other) else {
            return Ok(None);
        };
        let alpha = self.relation.slice_col(&gamma).into_iter().next().expect("γ ∈ π₂(Γ)");
        let beta = other.relation.slice_row(&gamma).into_iter().next().expect("γ ∈ π₁(Δ)");
        let first = |label: &str| {
            *self
                .family
                .block(label)
                .and_then(|b| b.iter().next())
                .expect("non-empty")
        };
        let c = first(&gamma);
        let d = first(&beta);
        let alpha_block = self.family.block(&alpha).expect("validated");
        let n = self.dim();
        let t = RegularOperator::from_fn(n, |i, j| {
            if j == c && alpha_block.contains(&i) {
                S::one()
            } else {
                S::zero()
            }
        })?;
        let s = RegularOperator::from_fn(n, |i, j| if i == c && j == d { S::one() } else { S::zero() })?;
        Ok(Some((t, s)))
    }

    /// An elementary operator on which `self` and `other` differ, or `None`
    /// if the relations coincide.
    pub fn distinguishing_elementary(&self, other: &Self) -> Result<Option<ElementaryOperator>> {
        self.check_family(other)?;
        let diff = self
            .relation
            .difference(&other.relation)
            .union(&other.relation.difference(&self.relation));
        let Some((a, b)) = diff.pairs().next() else {
            return Ok(None);
        };
        let first = |label: &str| {
            *self
                .family
                .block(label)
                .and_then(|b| b.iter().next())
                .expect("non-empty")
        };
        Ok(Some(ElementaryOperator {
            row: first(a),
            col: first(b),
        }))
    }
}
