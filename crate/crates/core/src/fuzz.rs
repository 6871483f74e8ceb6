//! Seeded property runner.
//!
//! Every registered property draws its inputs from its own [`SplitMix64`]
//! stream (the run seed mixed with the property name), serializes them in the
//! crate's file formats and checks them. Reports are deterministic in the
//! configuration: properties run concurrently but are merged in registry
//! order, and each keeps the counterexample of its first failing trial, which
//! [`replay`] re-checks from the stored input alone.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::detect::{detect_band_projection, Detection, SuperOperator};
use crate::error::Error;
use crate::inner::{singleton_label, BlockFamily, IndexRelation, InnerProjection};
use crate::io;
use crate::lattice::{BandProjectionX, LatticeVector};
use crate::mult::{brute_force_mult_band_check, classify, mult_apply};
use crate::operator::{elementary, is_atom_dominated, rk_oracle_meet, RegularOperator};
use crate::rng::SplitMix64;
use crate::scalar::{epsilon, q, Float, Rational, Scalar};

pub const MAX_FUZZ_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FuzzModule {
    Lattice,
    Inner,
    Boolean,
    Orthogonality,
    Detect,
    Mult,
}

impl FuzzModule {
    pub const ALL: [FuzzModule; 6] = [
        FuzzModule::Lattice,
        FuzzModule::Inner,
        FuzzModule::Boolean,
        FuzzModule::Orthogonality,
        FuzzModule::Detect,
        FuzzModule::Mult,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FuzzModule::Lattice => "lattice",
            FuzzModule::Inner => "inner",
            FuzzModule::Boolean => "boolean",
            FuzzModule::Orthogonality => "orthogonality",
            FuzzModule::Detect => "detect",
            FuzzModule::Mult => "mult",
        }
    }
}

impl fmt::Display for FuzzModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FuzzModule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        FuzzModule::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown fuzz module {s:?}")))
    }
}

/// Deliberate defects used to check that the properties catch bugs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutant {
    /// Writes ½ into one entry of every assembled mask superoperator.
    StrayHalf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub seed: u64,
    pub trials: u64,
    pub max_dim: usize,
    pub modules: BTreeSet<FuzzModule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutant: Option<Mutant>,
}

impl FuzzConfig {
    /// All modules, no mutant.
    pub fn new(seed: u64, trials: u64, max_dim: usize) -> Result<Self, Error> {
        let config = Self {
            seed,
            trials,
            max_dim,
            modules: FuzzModule::ALL.into_iter().collect(),
            mutant: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.max_dim == 0 || self.max_dim > MAX_FUZZ_DIM {
            return Err(Error::Precondition(format!("max_dim must be in 1..={MAX_FUZZ_DIM}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub property: String,
    pub trial: u64,
    pub failure: String,
    /// The property input, as documents in the crate's file formats.
    pub input: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub module: FuzzModule,
    pub passed: u64,
    pub failed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: FuzzConfig,
    pub properties: Vec<PropertyOutcome>,
    pub passed: bool,
    /// SHA-256 of the compact JSON of the report with this field empty.
    pub digest: String,
}

impl RunReport {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyOutcome> {
        self.properties.iter().filter(|p| p.failed > 0)
    }

    fn compute_digest(&self) -> String {
        let mut blank = self.clone();
        blank.digest.clear();
        let bytes = serde_json::to_vec(&blank).expect("report serializes");
        let hash = Sha256::digest(&bytes);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn verify_digest(&self) -> bool {
        self.digest == self.compute_digest()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayOutcome {
    Passed,
    Failed(String),
}

/// Property failure message.
#[derive(Debug)]
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

type Check = Result<(), Failure>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(Failure(format!($($arg)+)));
        }
    };
}

#[derive(Debug, Clone, Copy)]
struct GenParams {
    max_dim: usize,
    mutant: Option<Mutant>,
}

impl GenParams {
    fn dim(&self, rng: &mut SplitMix64, lo: usize, cap: usize) -> usize {
        let hi = self.max_dim.min(cap).max(1);
        let lo = lo.min(hi);
        rng.range(lo as i64, hi as i64) as usize
    }
}

struct Property {
    name: &'static str,
    module: FuzzModule,
    generate: fn(&mut SplitMix64, &GenParams) -> Value,
    check: fn(&Value) -> Check,
}

macro_rules! property {
    ($name:literal, $module:ident, $gen:ident, $check:ident) => {
        Property {
            name: $name,
            module: FuzzModule::$module,
            generate: $gen,
            check: $check,
        }
    };
}

static PROPERTIES: &[Property] = &[
    property!("lattice.vector_axioms", Lattice, gen_three_vectors, check_vector_axioms),
    property!("lattice.band_project", Lattice, gen_band_project, check_band_project),
    property!(
        "lattice.exact_float_agreement",
        Lattice,
        gen_float_agreement,
        check_float_agreement
    ),
    property!(
        "lattice.operator_decomposition",
        Lattice,
        gen_three_matrices,
        check_operator_decomposition
    ),
    property!("lattice.rk_oracle", Lattice, gen_rk_oracle, check_rk_oracle),
    property!(
        "lattice.disjoint_compressions",
        Lattice,
        gen_disjoint_compressions,
        check_disjoint_compressions
    ),
    property!(
        "lattice.atom_domination",
        Lattice,
        gen_atom_domination,
        check_atom_domination
    ),
    property!(
        "inner.projection_laws",
        Inner,
        gen_projection_laws,
        check_projection_laws
    ),
    property!("inner.sup_oracle", Inner, gen_sup_oracle, check_sup_oracle),
    property!("inner.membership", Inner, gen_membership, check_membership),
    property!("inner.injectivity", Inner, gen_two_relations, check_injectivity),
    property!("boolean.homomorphism", Boolean, gen_homomorphism, check_homomorphism),
    property!("boolean.top_identity", Boolean, gen_covering_top, check_covering_top),
    property!(
        "orthogonality.criterion",
        Orthogonality,
        gen_orthogonality,
        check_orthogonality
    ),
    property!("detect.round_trip", Detect, gen_round_trip, check_round_trip),
    property!(
        "detect.permutation_invariance",
        Detect,
        gen_permutation,
        check_permutation
    ),
    property!(
        "detect.accepted_dominated",
        Detect,
        gen_accepted_dominated,
        check_accepted_dominated
    ),
    property!(
        "detect.stable_rejection",
        Detect,
        gen_arbitrary_superoperator,
        check_stable_rejection
    ),
    property!("mult.classify_oracle", Mult, gen_mult_pair, check_mult_oracle),
    property!("mult.scaling_invariance", Mult, gen_mult_scaling, check_mult_scaling),
    property!("mult.idempotence", Mult, gen_mult_with_operator, check_mult_idempotence),
    property!("mult.positivity_generators", Mult, gen_mult_pair, check_mult_positivity),
];

/// Names and modules of every registered property.
pub fn property_names() -> impl Iterator<Item = (&'static str, FuzzModule)> {
    PROPERTIES.iter().map(|p| (p.name, p.module))
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn run_property(property: &Property, config: &FuzzConfig) -> PropertyOutcome {
    let params = GenParams {
        max_dim: config.max_dim,
        mutant: config.mutant,
    };
    let mut rng = SplitMix64::new(config.seed ^ fnv1a(property.name));
    let mut outcome = PropertyOutcome {
        name: property.name.into(),
        module: property.module,
        passed: 0,
        failed: 0,
        counterexample: None,
    };
    for trial in 0..config.trials {
        let input = (property.generate)(&mut rng, &params);
        match (property.check)(&input) {
            Ok(()) => outcome.passed += 1,
            Err(Failure(failure)) => {
                outcome.failed += 1;
                if outcome.counterexample.is_none() {
                    outcome.counterexample = Some(Counterexample {
                        property: property.name.into(),
                        trial,
                        failure,
                        input,
                    });
                }
            }
        }
    }
    outcome
}

/// Runs every property of the selected modules for `config.trials` trials.
pub fn run(config: &FuzzConfig) -> Result<RunReport, Error> {
    config.validate()?;
    let selected: Vec<&Property> = if config.trials == 0 {
        Vec::new()
    } else {
        PROPERTIES
            .iter()
            .filter(|p| config.modules.contains(&p.module))
            .collect()
    };
    let properties: Vec<PropertyOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = selected
            .iter()
            .map(|&p| scope.spawn(move || run_property(p, config)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("property thread panicked"))
            .collect()
    });
    let passed = properties.iter().all(|p| p.failed == 0);
    let mut report = RunReport {
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        properties,
        passed,
        digest: String::new(),
    };
    report.digest = report.compute_digest();
    Ok(report)
}

/// Re-checks a stored counterexample.
pub fn replay(counterexample: &Counterexample) -> Result<ReplayOutcome, Error> {
    let property = PROPERTIES
        .iter()
        .find(|p| p.name == counterexample.property)
        .ok_or_else(|| Error::Parse(format!("unknown property {:?}", counterexample.property)))?;
    Ok(match (property.check)(&counterexample.input) {
        Ok(()) => ReplayOutcome::Passed,
        Err(Failure(msg)) => ReplayOutcome::Failed(msg),
    })
}

// ---------------------------------------------------------------------------
// Generators

fn rand_entries(rng: &mut SplitMix64, n: usize, lo: i64, hi: i64) -> RegularOperator {
    let rows = (0..n).map(|_| (0..n).map(|_| rng.rational(lo, hi)).collect()).collect();
    RegularOperator::from_rows(rows).expect("square")
}

fn rand_vector(rng: &mut SplitMix64, n: usize, lo: i64, hi: i64) -> LatticeVector {
    LatticeVector::new((0..n).map(|_| rng.rational(lo, hi)).collect()).expect("n >= 1")
}

fn rand_subset(rng: &mut SplitMix64, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.chance(1, 2)).collect()
}

/// Singletons half the time; otherwise a random partition of a random subset
/// of the coordinates into at most `n` blocks.
fn rand_family(rng: &mut SplitMix64, n: usize, covering: bool) -> BlockFamily {
    if rng.chance(1, 2) {
        return BlockFamily::singletons(n).expect("n >= 1");
    }
    let k = rng.range(1, n as i64) as usize;
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..n {
        if !covering && rng.chance(1, 5) {
            continue;
        }
        blocks[rng.below(k)].push(i);
    }
    let named = blocks
        .into_iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(i, b)| (format!("b{}", i + 1), b));
    BlockFamily::new(n, named).expect("disjoint by construction")
}

fn rand_relation(rng: &mut SplitMix64, family: &BlockFamily, max_pairs: usize) -> IndexRelation {
    let all: Vec<(String, String)> = family
        .full_relation()
        .pairs()
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect();
    if all.is_empty() {
        return IndexRelation::empty();
    }
    let k = rng.range(0, max_pairs.min(all.len()) as i64) as usize;
    (0..k).map(|_| rng.pick(&all).clone()).collect()
}

fn rand_positive_matrix(rng: &mut SplitMix64, n: usize) -> RegularOperator {
    rand_entries(rng, n, 0, 6)
}

fn nonzero_scalar(rng: &mut SplitMix64) -> Rational {
    let fixed = [q(1, 1), q(-1, 1), q(2, 1), q(-2, 1), q(1, 3), q(-1, 3), q(5, 7)];
    if rng.chance(1, 2) {
        return rng.pick(&fixed).clone();
    }
    loop {
        let c = rng.rational(-5, 5);
        if !Scalar::is_zero(&c) {
            return c;
        }
    }
}

fn rand_mask(rng: &mut SplitMix64, n: usize) -> RegularOperator {
    let mut support = rand_subset(rng, n);
    if support.is_empty() {
        support.push(rng.below(n));
    }
    RegularOperator::diagonal_mask(n, |i| support.contains(&i)).expect("n >= 1")
}

/// `x φᵀ / (φᵀ x)` with `x, φ ≥ 0`.
fn rand_rank_one_projection(rng: &mut SplitMix64, n: usize) -> RegularOperator {
    loop {
        let x: Vec<Rational> = (0..n).map(|_| q(rng.range(0, 2), 1)).collect();
        let phi: Vec<Rational> = (0..n).map(|_| q(rng.range(0, 2), 1)).collect();
        let dot = x
            .iter()
            .zip(&phi)
            .fold(q(0, 1), |acc, (a, b)| acc + a.clone() * b.clone());
        if Scalar::is_zero(&dot) {
            continue;
        }
        return RegularOperator::from_fn(n, |i, j| x[i].clone() * phi[j].clone() / dot.clone()).expect("n >= 1");
    }
}

fn ensure_nonzero(mut m: RegularOperator, rng: &mut SplitMix64) -> RegularOperator {
    if m.is_zero() {
        let n = m.dim();
        m.set(rng.below(n), rng.below(n), q(1, 1));
    }
    m
}

/// Pairs `(A, B)` biased towards the interesting cases: scaled band
/// projection pairs, positive projections that are not band projections,
/// near misses, negated pairs and unstructured matrices.
fn rand_mult_pair(rng: &mut SplitMix64, n: usize) -> (RegularOperator, RegularOperator) {
    let c = nonzero_scalar(rng);
    let inv = q(1, 1) / c.clone();
    let (a, b) = match rng.below(6) {
        0 => (rand_entries(rng, n, -2, 2), rand_entries(rng, n, -2, 2)),
        1 => (rand_mask(rng, n).scale(&c), rand_mask(rng, n).scale(&inv)),
        2 => {
            let a = if rng.chance(1, 2) {
                rand_mask(rng, n)
            } else {
                rand_rank_one_projection(rng, n)
            };
            (a.scale(&c), rand_rank_one_projection(rng, n).scale(&inv))
        }
        3 => {
            let mut a = rand_mask(rng, n);
            let (i, j) = (rng.below(n), rng.below(n));
            let bumped = a.get(i, j).clone() + rng.rational(1, 2);
            a.set(i, j, bumped);
            (a, rand_mask(rng, n))
        }
        4 => (
            rand_mask(rng, n).scale(&-c.clone()),
            rand_rank_one_projection(rng, n).scale(&-inv),
        ),
        _ => (rand_entries(rng, n, 0, 2), rand_entries(rng, n, 0, 2)),
    };
    (ensure_nonzero(a, rng), ensure_nonzero(b, rng))
}

fn family_doc(f: &BlockFamily) -> Value {
    io::family_to_json(f)
}

fn mat(m: &RegularOperator) -> Value {
    io::matrix_to_json(m)
}

fn vector(v: &LatticeVector) -> Value {
    io::vector_to_json(v)
}

fn gen_three_vectors(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 6);
    json!({
        "x": vector(&rand_vector(rng, n, -6, 6)),
        "y": vector(&rand_vector(rng, n, -6, 6)),
        "z": vector(&rand_vector(rng, n, -6, 6)),
    })
}

fn gen_band_project(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 6);
    json!({ "x": vector(&rand_vector(rng, n, -6, 6)), "support": rand_subset(rng, n) })
}

fn gen_float_agreement(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 6);
    json!({
        "x": vector(&rand_vector(rng, n, -9, 9)),
        "y": vector(&rand_vector(rng, n, -9, 9)),
        "a": mat(&rand_entries(rng, n, -9, 9)),
    })
}

fn gen_three_matrices(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 5);
    json!({
        "s": mat(&rand_entries(rng, n, -6, 6)),
        "t": mat(&rand_entries(rng, n, -6, 6)),
        "u": mat(&rand_entries(rng, n, -6, 6)),
    })
}

fn gen_rk_oracle(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 4);
    json!({
        "s": mat(&rand_positive_matrix(rng, n)),
        "t": mat(&rand_positive_matrix(rng, n)),
        "x": vector(&rand_vector(rng, n, 0, 6)),
    })
}

fn gen_disjoint_compressions(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 2, 6);
    let family = rand_family(rng, n, true);
    let labels: Vec<String> = family.labels().cloned().collect();
    let (alpha, beta) = if labels.len() >= 2 {
        let a = rng.below(labels.len());
        let b = (a + 1 + rng.below(labels.len() - 1)) % labels.len();
        (labels[a].clone(), labels[b].clone())
    } else {
        (labels[0].clone(), labels[0].clone())
    };
    json!({
        "n": n,
        "family": family_doc(&family),
        "alpha": alpha,
        "beta": beta,
        "s1": mat(&rand_positive_matrix(rng, n)),
        "s2": mat(&rand_positive_matrix(rng, n)),
    })
}

fn gen_atom_domination(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 6);
    let (a, b) = (rng.below(n), rng.below(n));
    let den = rng.range(1, 12);
    let gamma = q(rng.range(0, den), den);
    let t = elementary::<Rational>(a, b, n).expect("in range").scale(&gamma);
    json!({ "a": a, "b": b, "gamma": gamma.to_json(), "t": mat(&t) })
}

fn gen_projection_laws(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 6);
    let family = rand_family(rng, n, false);
    let relation = rand_relation(rng, &family, 12);
    json!({
        "n": n,
        "family": family_doc(&family),
        "relation": io::relation_to_json(&relation),
        "s": mat(&rand_entries(rng, n, -6, 6)),
        "t": mat(&rand_entries(rng, n, -6, 6)),
        "p": mat(&rand_positive_matrix(rng, n)),
    })
}

fn gen_sup_oracle(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 4);
    let family = rand_family(rng, n, false);
    let relation = rand_relation(rng, &family, 6);
    json!({
        "n": n,
        "family": family_doc(&family),
        "relation": io::relation_to_json(&relation),
        "t": mat(&rand_positive_matrix(rng, n)),
        "x": vector(&rand_vector(rng, n, 0, 6)),
    })
}

fn gen_membership(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 6);
    let family = rand_family(rng, n, false);
    let relation = rand_relation(rng, &family, 12);
    let proj = InnerProjection::new(family.clone(), relation.clone()).expect("valid");
    let raw = rand_entries(rng, n, -3, 3);
    let t = if rng.chance(1, 2) {
        proj.apply(&raw).expect("dim")
    } else {
        raw
    };
    json!({
        "n": n,
        "family": family_doc(&family),
        "relation": io::relation_to_json(&relation),
        "t": mat(&t),
    })
}

fn gen_two_relations(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 6);
    let family = rand_family(rng, n, false);
    let gamma = rand_relation(rng, &family, 8);
    let delta = if rng.chance(1, 4) {
        gamma.clone()
    } else {
        rand_relation(rng, &family, 8)
    };
    json!({
        "n": n,
        "family": family_doc(&family),
        "gamma": io::relation_to_json(&gamma),
        "delta": io::relation_to_json(&delta),
    })
}

fn gen_homomorphism(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let mut v = gen_two_relations(rng, p);
    let n = v["n"].as_u64().expect("n") as usize;
    v["t"] = mat(&rand_entries(rng, n, -6, 6));
    v
}

fn gen_covering_top(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 6);
    let family = rand_family(rng, n, true);
    json!({ "n": n, "family": family_doc(&family), "t": mat(&rand_entries(rng, n, -6, 6)) })
}

fn gen_orthogonality(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 3);
    let family = if rng.chance(3, 4) {
        BlockFamily::singletons(n).expect("n")
    } else {
        rand_family(rng, n, false)
    };
    let gamma = rand_relation(rng, &family, 4);
    let delta = rand_relation(rng, &family, 4);
    let members = |rng: &mut SplitMix64| -> Vec<Value> {
        (0..6)
            .map(|k| {
                if k < 3 {
                    mat(&rand_entries(rng, n, 1, 9))
                } else {
                    mat(&rand_entries(rng, n, -9, 9))
                }
            })
            .collect()
    };
    let left = members(rng);
    let right = members(rng);
    json!({
        "n": n,
        "family": family_doc(&family),
        "gamma": io::relation_to_json(&gamma),
        "delta": io::relation_to_json(&delta),
        "left": left,
        "right": right,
    })
}

fn canonical_relation(p: &InnerProjection) -> IndexRelation {
    let n = p.dim();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| p.keeps(i, j))
        .map(|(i, j)| (singleton_label(i), singleton_label(j)))
        .collect()
}

fn gen_round_trip(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 4);
    let family = rand_family(rng, n, false);
    let relation = rand_relation(rng, &family, 16);
    let proj = InnerProjection::new(family.clone(), relation.clone()).expect("valid");
    let sup = SuperOperator::<Rational>::from_inner(&proj);
    let sup = match p.mutant {
        None => sup,
        Some(Mutant::StrayHalf) => {
            let mut m = sup.matrix().clone();
            let k = rng.below(n * n);
            if Scalar::is_zero(m.get(k, k)) {
                m.set(k, k, q(1, 2));
            } else {
                m.set(k, (k + 1) % (n * n), q(1, 2));
                if n == 1 {
                    m.set(0, 0, q(1, 2));
                }
            }
            SuperOperator::new(n, m).expect("shape")
        }
    };
    json!({
        "n": n,
        "family": family_doc(&family),
        "relation": io::relation_to_json(&relation),
        "superoperator": io::superoperator_to_json(&sup),
        "expected_gamma": io::relation_to_json(&canonical_relation(&proj)),
    })
}

/// Mask superoperators half the time, otherwise one of several kinds of
/// maps that are not band projections.
fn rand_superoperator(rng: &mut SplitMix64, n: usize) -> SuperOperator {
    let family = BlockFamily::singletons(n).expect("n");
    let relation = rand_relation(rng, &family, n * n);
    let proj = InnerProjection::new(family, relation).expect("valid");
    let mask = SuperOperator::<Rational>::from_inner(&proj);
    let big = n * n;
    let k = rng.below(big);
    let mut m = mask.matrix().clone();
    match rng.below(8) {
        0..=3 => {}
        4 => m = rand_entries(rng, big, -1, 2),
        5 => {
            // Positive idempotent that is not dominated: copy entry k to l.
            let l = (k + 1 + rng.below(big.max(2) - 1)) % big;
            if l != k {
                m = RegularOperator::identity(big).expect("big");
                m.set(l, l, q(0, 1));
                m.set(l, k, q(1, 1));
            } else {
                m.set(k, k, q(1, 2));
            }
        }
        6 => m = m.neg(),
        _ => m.set(k, k, q(rng.range(2, 5), rng.range(3, 7))),
    }
    SuperOperator::new(n, m).expect("shape")
}

fn gen_permutation(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 4);
    let sup = rand_superoperator(rng, n);
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    json!({ "n": n, "superoperator": io::superoperator_to_json(&sup), "perm": perm })
}

fn gen_accepted_dominated(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 4);
    let family = rand_family(rng, n, false);
    let relation = rand_relation(rng, &family, 16);
    let proj = InnerProjection::new(family, relation).expect("valid");
    let sup = SuperOperator::<Rational>::from_inner(&proj);
    json!({ "n": n, "superoperator": io::superoperator_to_json(&sup), "t": mat(&rand_positive_matrix(rng, n)) })
}

fn gen_arbitrary_superoperator(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 3);
    json!({ "n": n, "superoperator": io::superoperator_to_json(&rand_superoperator(rng, n)) })
}

fn gen_mult_pair(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let n = p.dim(rng, 1, 3);
    let (a, b) = rand_mult_pair(rng, n);
    json!({ "a": mat(&a), "b": mat(&b) })
}

fn gen_mult_scaling(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let mut v = gen_mult_pair(rng, p);
    v["c"] = nonzero_scalar(rng).to_json();
    v
}

fn gen_mult_with_operator(rng: &mut SplitMix64, p: &GenParams) -> Value {
    let mut v = gen_mult_pair(rng, p);
    let n = v["a"]["n"].as_u64().expect("n") as usize;
    v["t"] = mat(&rand_entries(rng, n, -6, 6));
    v
}

// ---------------------------------------------------------------------------
// Checks

fn read_mat(v: &Value, key: &str) -> Result<RegularOperator, Failure> {
    Ok(io::parse_matrix(&v[key])?)
}

fn read_vec(v: &Value, key: &str) -> Result<LatticeVector, Failure> {
    Ok(io::parse_vector(&v[key])?)
}

fn read_dim(v: &Value) -> Result<usize, Failure> {
    v["n"]
        .as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Failure("missing n".into()))
}

fn read_family(v: &Value) -> Result<BlockFamily, Failure> {
    Ok(io::parse_family(&v["family"], read_dim(v)?)?)
}

fn read_projection(v: &Value, family: &BlockFamily, key: &str) -> Result<InnerProjection, Failure> {
    Ok(InnerProjection::new(family.clone(), io::parse_relation(&v[key])?)?)
}

fn read_scalar(v: &Value, key: &str) -> Result<Rational, Failure> {
    let text = v[key]
        .as_str()
        .ok_or_else(|| Failure(format!("missing scalar {key}")))?;
    Ok(crate::scalar::parse_rational(text)?)
}

fn read_index(v: &Value, key: &str) -> Result<usize, Failure> {
    v[key]
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Failure(format!("missing index {key}")))
}

fn check_vector_axioms(v: &Value) -> Check {
    let (x, y, z) = (read_vec(v, "x")?, read_vec(v, "y")?, read_vec(v, "z")?);
    ensure!(x.meet(&y)? == y.meet(&x)?, "meet not commutative");
    ensure!(x.join(&y)? == y.join(&x)?, "join not commutative");
    ensure!(x.meet(&y)?.meet(&z)? == x.meet(&y.meet(&z)?)?, "meet not associative");
    ensure!(x.join(&y)?.join(&z)? == x.join(&y.join(&z)?)?, "join not associative");
    ensure!(x.meet(&x.join(&y)?)? == x, "absorption x ∧ (x ∨ y) fails");
    ensure!(x.join(&x.meet(&y)?)? == x, "absorption x ∨ (x ∧ y) fails");
    ensure!(x.abs() == x.join(&x.neg())?, "|x| != x ∨ −x");
    ensure!(x.positive_part().sub(&x.negative_part())? == x, "x != x⁺ − x⁻");
    Ok(())
}

fn check_band_project(v: &Value) -> Check {
    let x = read_vec(v, "x")?;
    let support: Vec<usize> = serde_json::from_value(v["support"].clone()).map_err(|e| Failure(e.to_string()))?;
    let p = BandProjectionX::new(x.dim(), support)?;
    let px = p.project(&x)?;
    ensure!(p.project(&px)? == px, "band projection not idempotent");
    let ax = x.abs();
    let pa = p.project(&ax)?;
    ensure!(pa.is_nonneg(), "band projection not positive");
    ensure!(pa.le(&ax)?, "band projection not dominated by the identity");
    ensure!(
        p.project(&x)?.add(&p.complement().project(&x)?)? == x,
        "P + (I − P) != I"
    );
    Ok(())
}

fn check_float_agreement(v: &Value) -> Check {
    let (x, y, a) = (read_vec(v, "x")?, read_vec(v, "y")?, read_mat(v, "a")?);
    let to_f = |r: &Rational| Float::from_rational(r);
    let (xf, yf, af) = (x.convert(to_f), y.convert(to_f), a.convert(to_f));
    let tol = 10.0 * epsilon();
    let close = |exact: &LatticeVector, float: &LatticeVector<Float>| {
        exact
            .coords()
            .iter()
            .zip(float.coords())
            .all(|(e, f)| (Scalar::to_f64(e) - f.0).abs() <= tol)
    };
    ensure!(close(&x.meet(&y)?, &xf.meet(&yf)?), "meet disagrees across modes");
    ensure!(close(&x.join(&y)?, &xf.join(&yf)?), "join disagrees across modes");
    ensure!(close(&x.abs(), &xf.abs()), "abs disagrees across modes");
    ensure!(
        close(&a.apply(&x)?, &af.apply(&xf)?),
        "matrix action disagrees across modes"
    );
    Ok(())
}

fn check_operator_decomposition(v: &Value) -> Check {
    let (s, t, u) = (read_mat(v, "s")?, read_mat(v, "t")?, read_mat(v, "u")?);
    let (tp, tn) = (t.positive_part(), t.negative_part());
    ensure!(tp.sub(&tn)? == t, "T != T⁺ − T⁻");
    ensure!(tp.add(&tn)? == t.abs(), "|T| != T⁺ + T⁻");
    ensure!(tp.meet(&tn)?.is_zero(), "T⁺ ∧ T⁻ != 0");
    ensure!(tp == t.join(&RegularOperator::zeros(t.dim())?)?, "T⁺ != T ∨ 0");
    ensure!(s.meet(&t)? == t.meet(&s)?, "operator meet not commutative");
    ensure!(
        s.meet(&t)?.meet(&u)? == s.meet(&t.meet(&u)?)?,
        "operator meet not associative"
    );
    ensure!(
        s.join(&t)?.join(&u)? == s.join(&t.join(&u)?)?,
        "operator join not associative"
    );
    ensure!(s.meet(&s.join(&t)?)? == s, "operator absorption fails");
    ensure!(s.abs() == s.join(&s.neg())?, "|S| != S ∨ −S");
    Ok(())
}

fn check_rk_oracle(v: &Value) -> Check {
    let (s, t, x) = (read_mat(v, "s")?, read_mat(v, "t")?, read_vec(v, "x")?);
    let meet = s.meet(&t)?;
    for j in 0..s.dim() {
        let e = LatticeVector::basis(s.dim(), j)?;
        ensure!(
            rk_oracle_meet(&s, &t, &e)? == meet.apply(&e)?,
            "oracle disagrees on e_{j}"
        );
    }
    ensure!(rk_oracle_meet(&s, &t, &x)? == meet.apply(&x)?, "oracle disagrees on x");
    Ok(())
}

fn check_disjoint_compressions(v: &Value) -> Check {
    let family = read_family(v)?;
    let alpha = v["alpha"].as_str().unwrap_or_default();
    let beta = v["beta"].as_str().unwrap_or_default();
    if alpha == beta {
        return Ok(());
    }
    let pa = family
        .band_projection(alpha)
        .ok_or_else(|| Failure("unknown alpha".into()))?;
    let pb = family
        .band_projection(beta)
        .ok_or_else(|| Failure("unknown beta".into()))?;
    let left = pa.to_operator().mul(&read_mat(v, "s1")?)?;
    let right = pb.to_operator().mul(&read_mat(v, "s2")?)?;
    ensure!(left.meet(&right)?.is_zero(), "P_α S₁ ∧ P_β S₂ != 0 for disjoint blocks");
    Ok(())
}

fn check_atom_domination(v: &Value) -> Check {
    let t = read_mat(v, "t")?;
    let (a, b) = (read_index(v, "a")?, read_index(v, "b")?);
    let gamma = read_scalar(v, "gamma")?;
    let r = is_atom_dominated(&t, a, b)?;
    ensure!(r.is_multiple, "T is not a multiple of E_ab");
    ensure!(r.gamma.as_ref() == Some(&gamma), "recovered γ {:?} != {gamma}", r.gamma);
    ensure!(t.support().all(|ij| ij == (a, b)), "support escapes entry ({a},{b})");
    Ok(())
}

fn check_projection_laws(v: &Value) -> Check {
    let family = read_family(v)?;
    let proj = read_projection(v, &family, "relation")?;
    let (s, t, pos) = (read_mat(v, "s")?, read_mat(v, "t")?, read_mat(v, "p")?);
    let pt = proj.apply(&t)?;
    ensure!(proj.apply(&pt)? == pt, "𝒫_Γ not idempotent");
    let pp = proj.apply(&pos)?;
    ensure!(pp.is_nonneg() && pp.le(&pos)?, "0 <= 𝒫_Γ(T) <= T fails");
    ensure!(
        proj.apply(&s.add(&t)?)? == proj.apply(&s)?.add(&pt)?,
        "𝒫_Γ not additive"
    );
    let sup = SuperOperator::<Rational>::from_inner(&proj);
    ensure!(sup.apply(&t)? == pt, "assembled superoperator disagrees with apply");
    Ok(())
}

fn check_sup_oracle(v: &Value) -> Check {
    let family = read_family(v)?;
    let proj = read_projection(v, &family, "relation")?;
    let (t, x) = (read_mat(v, "t")?, read_vec(v, "x")?);
    ensure!(
        proj.sup_over_finite_oracle(&t, &x)? == proj.apply(&t)?.apply(&x)?,
        "finite-subset supremum != 𝒫_Γ(T)x"
    );
    Ok(())
}

fn check_membership(v: &Value) -> Check {
    let family = read_family(v)?;
    let proj = read_projection(v, &family, "relation")?;
    let t = read_mat(v, "t")?;
    let member = proj.band_member(&t)?;
    ensure!(member == (proj.apply(&t)? == t), "membership != fixed point");
    Ok(())
}

fn check_injectivity(v: &Value) -> Check {
    let family = read_family(v)?;
    let g = read_projection(v, &family, "gamma")?;
    let d = read_projection(v, &family, "delta")?;
    match g.distinguishing_elementary(&d)? {
        None => ensure!(
            g.relation() == d.relation(),
            "distinct relations without a distinguishing operator"
        ),
        Some(e) => {
            let op = e.to_operator::<Rational>(family.dim())?;
            ensure!(
                g.apply(&op)? != d.apply(&op)?,
                "E_{}{} does not distinguish 𝒫_Γ and 𝒫_Δ",
                e.row,
                e.col
            );
        }
    }
    Ok(())
}

fn check_homomorphism(v: &Value) -> Check {
    let family = read_family(v)?;
    let g = read_projection(v, &family, "gamma")?;
    let d = read_projection(v, &family, "delta")?;
    let t = read_mat(v, "t")?;
    let meet = g.boolean_meet(&d)?;
    let join = g.boolean_join(&d)?;
    let comp = g.boolean_complement();
    let top = InnerProjection::top(family.clone());
    ensure!(g.apply(&d.apply(&t)?)? == meet.apply(&t)?, "𝒫_Γ𝒫_Δ != 𝒫_{{Γ∩Δ}}");
    ensure!(d.apply(&g.apply(&t)?)? == meet.apply(&t)?, "𝒫_Δ𝒫_Γ != 𝒫_{{Γ∩Δ}}");
    let lhs = g.apply(&t)?.add(&d.apply(&t)?)?.sub(&meet.apply(&t)?)?;
    ensure!(lhs == join.apply(&t)?, "𝒫_Γ + 𝒫_Δ − 𝒫_{{Γ∩Δ}} != 𝒫_{{Γ∪Δ}}");
    ensure!(
        top.apply(&t)?.sub(&g.apply(&t)?)? == comp.apply(&t)?,
        "complement law fails"
    );
    ensure!(comp.boolean_meet(&g)?.apply(&t)?.is_zero(), "𝒫_Γ ∧ 𝒫_Γ̄ != 0");
    Ok(())
}

fn check_covering_top(v: &Value) -> Check {
    let family = read_family(v)?;
    let t = read_mat(v, "t")?;
    let top = InnerProjection::top(family.clone());
    ensure!(family.covers_all(), "generator produced a non-covering family");
    ensure!(top.apply(&t)? == t, "𝒫_{{Λ×Λ}} != I for a covering family");
    Ok(())
}

fn check_orthogonality(v: &Value) -> Check {
    let family = read_family(v)?;
    let g = read_projection(v, &family, "gamma")?;
    let d = read_projection(v, &family, "delta")?;
    let members = |key: &str, p: &InnerProjection| -> Result<Vec<RegularOperator>, Failure> {
        let docs = v[key].as_array().ok_or_else(|| Failure(format!("missing {key}")))?;
        docs.iter()
            .map(|doc| Ok(p.apply(&io::parse_matrix::<Rational>(doc)?)?))
            .collect()
    };
    let left = members("left", &g)?;
    let right = members("right", &d)?;
    let sampled_orthogonal = left
        .iter()
        .all(|t| right.iter().all(|s| t.mul(s).map(|p| p.is_zero()).unwrap_or(false)));
    let predicate = g.left_orthogonal(&d)?;
    ensure!(
        predicate == sampled_orthogonal,
        "π-criterion says {predicate}, sampled members say {sampled_orthogonal}"
    );
    match g.orthogonality_witness::<Rational>(&d)? {
        None => ensure!(predicate, "no witness for a non-orthogonal pair"),
        Some((t, s)) => {
            ensure!(!predicate, "witness for an orthogonal pair");
            ensure!(g.band_member(&t)? && d.band_member(&s)?, "witness outside the bands");
            ensure!(!t.mul(&s)?.is_zero(), "witness product vanishes");
        }
    }
    Ok(())
}

fn check_round_trip(v: &Value) -> Check {
    let sup: SuperOperator = io::parse_superoperator(&v["superoperator"])?;
    let expected = io::parse_relation(&v["expected_gamma"])?;
    let det = detect_band_projection(&sup);
    ensure!(
        det == Detection::Accepted(expected.clone()),
        "assembled mask not recovered: {det:?}"
    );
    Ok(())
}

fn permute(sup: &SuperOperator, perm: &[usize]) -> Result<SuperOperator, Error> {
    let n = sup.dim();
    let pi = RegularOperator::<Rational>::from_fn(n, |i, j| if perm[j] == i { q(1, 1) } else { q(0, 1) })?;
    let pi_inv = pi.transpose();
    SuperOperator::from_map(n, |t| pi.mul(&sup.apply(&pi_inv.mul(t)?.mul(&pi)?)?)?.mul(&pi_inv))
}

fn check_permutation(v: &Value) -> Check {
    let sup: SuperOperator = io::parse_superoperator(&v["superoperator"])?;
    let perm: Vec<usize> = serde_json::from_value(v["perm"].clone()).map_err(|e| Failure(e.to_string()))?;
    let n = sup.dim();
    let mut sorted = perm.clone();
    sorted.sort_unstable();
    ensure!(sorted == (0..n).collect::<Vec<_>>(), "perm is not a permutation");
    let conj = permute(&sup, &perm)?;
    let label_index = |l: &str| {
        l.parse::<usize>()
            .map(|k| k - 1)
            .map_err(|_| Failure(format!("bad label {l}")))
    };
    match (detect_band_projection(&sup), detect_band_projection(&conj)) {
        (Detection::Accepted(g), Detection::Accepted(h)) => {
            let relabeled = g
                .pairs()
                .map(|(a, b)| {
                    Ok((
                        singleton_label(perm[label_index(a)?]),
                        singleton_label(perm[label_index(b)?]),
                    ))
                })
                .collect::<Result<IndexRelation, Failure>>()?;
            ensure!(relabeled == h, "conjugated relation {h:?} != relabeled {relabeled:?}");
        }
        (Detection::Rejected(a), Detection::Rejected(b)) => ensure!(a == b, "stages differ: {a} vs {b}"),
        (x, y) => return Err(Failure(format!("verdicts differ under conjugation: {x:?} vs {y:?}"))),
    }
    Ok(())
}

fn check_accepted_dominated(v: &Value) -> Check {
    let sup: SuperOperator = io::parse_superoperator(&v["superoperator"])?;
    let t = read_mat(v, "t")?;
    ensure!(
        detect_band_projection(&sup).is_band_projection(),
        "mask superoperator rejected"
    );
    let image = sup.apply(&t)?;
    ensure!(image.is_nonneg() && image.le(&t)?, "0 <= 𝒫(T) <= T fails");
    Ok(())
}

fn check_stable_rejection(v: &Value) -> Check {
    let sup: SuperOperator = io::parse_superoperator(&v["superoperator"])?;
    let first = detect_band_projection(&sup);
    let second = detect_band_projection(&sup.clone());
    ensure!(first == second, "detector not deterministic");
    ensure!(
        !matches!(first, Detection::Inconsistent(_)),
        "internal inconsistency: {first:?}"
    );
    if let Detection::Accepted(g) = &first {
        let p = InnerProjection::new(BlockFamily::singletons(sup.dim())?, g.clone())?;
        ensure!(
            SuperOperator::<Rational>::from_inner(&p) == sup,
            "accepted map is not 𝒫_Γ"
        );
    }
    Ok(())
}

fn check_mult_oracle(v: &Value) -> Check {
    let (a, b) = (read_mat(v, "a")?, read_mat(v, "b")?);
    let c = classify(&a, &b)?;
    let brute = brute_force_mult_band_check(&a, &b)?;
    ensure!(
        c.band_projection == brute,
        "classify says {}, detector says {brute}",
        c.band_projection
    );
    ensure!(
        !c.band_projection || c.positive_projection,
        "band projection without positive projection"
    );
    ensure!(
        !c.positive_projection || c.positive,
        "positive projection without positivity"
    );
    ensure!(
        c.lambda.is_some() == c.positive_projection,
        "λ present iff positive projection"
    );
    if let Some(l) = &c.lambda {
        ensure!(!Scalar::is_zero(l), "λ = 0");
        let la = a.scale(l);
        let bl = b.scale(&(q(1, 1) / l.clone()));
        ensure!(la.mul(&la)? == la && bl.mul(&bl)? == bl, "λA or B/λ not idempotent");
        ensure!(la.is_nonneg() && bl.is_nonneg(), "λA or B/λ not positive");
    }
    Ok(())
}

fn check_mult_scaling(v: &Value) -> Check {
    let (a, b) = (read_mat(v, "a")?, read_mat(v, "b")?);
    let c = read_scalar(v, "c")?;
    let base = classify(&a, &b)?;
    let scaled = classify(&a.scale(&c), &b.scale(&(q(1, 1) / c.clone())))?;
    ensure!(base.positive == scaled.positive, "positivity changed under scaling");
    ensure!(
        base.positive_projection == scaled.positive_projection,
        "positive projection changed under scaling"
    );
    ensure!(
        base.band_projection == scaled.band_projection,
        "band projection changed under scaling"
    );
    let expected = base.lambda.map(|l| l / c.clone());
    ensure!(
        scaled.lambda == expected,
        "λ {:?} != {:?} after scaling",
        scaled.lambda,
        expected
    );
    Ok(())
}

fn check_mult_idempotence(v: &Value) -> Check {
    let (a, b, t) = (read_mat(v, "a")?, read_mat(v, "b")?, read_mat(v, "t")?);
    let c = classify(&a, &b)?;
    let once = mult_apply(&a, &b, &t)?;
    let twice = mult_apply(&a, &b, &once)?;
    if c.positive_projection {
        ensure!(
            twice == once,
            "L_A R_B not idempotent although classified as a projection"
        );
    }
    Ok(())
}

fn check_mult_positivity(v: &Value) -> Check {
    let (a, b) = (read_mat(v, "a")?, read_mat(v, "b")?);
    let n = a.dim();
    let c = classify(&a, &b)?;
    let mut on_generators = true;
    for i in 0..n {
        for j in 0..n {
            on_generators &= mult_apply(&a, &b, &elementary(i, j, n)?)?.is_nonneg();
        }
    }
    ensure!(
        c.positive == on_generators,
        "classify positivity {} != generator test {on_generators}",
        c.positive
    );
    Ok(())
}
