//! Subcommands of the `riesz` binary as plain functions.
//!
//! Each command reads JSON documents from paths, returns the text it would
//! print, and reports failures as a [`CliError`] carrying the process exit
//! code. `main.rs` only parses arguments and forwards.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use riesz_core::dyadic::{dyadic_membership_demo, meet_with_identity_decay, DyadicLevel, MAX_LEVEL};
use riesz_core::fuzz::{self, Counterexample, FuzzConfig, FuzzModule, Mutant, ReplayOutcome, RunReport};
use riesz_core::io::{self, SCALAR_MODE_ENV};
use riesz_core::{
    classify, detect_band_projection, BlockFamily, Detection, Error, Float, IndexRelation, InnerProjection, Rational,
    RegularOperator, Scalar, ScalarMode, SuperOperator,
};
use serde_json::{json, Value};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_SHAPE: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable file, malformed JSON or invalid content.
    Parse(String),
    /// Dimensions or labels that do not fit together.
    Shape(String),
    /// A checked property does not hold; the output is still printed.
    Property { output: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Shape(_) => EXIT_SHAPE,
            CliError::Property { .. } => EXIT_PROPERTY,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Shape(m) => write!(f, "shape error: {m}"),
            CliError::Property { message, .. } => write!(f, "property failure: {message}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_shape() {
            CliError::Shape(e.to_string())
        } else {
            CliError::Parse(e.to_string())
        }
    }
}

pub type CliResult<T = String> = Result<T, CliError>;

/// Scalar mode override: an explicit value, else `RIESZ_SCALAR_MODE`.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub scalar_mode: Option<String>,
}

impl Env {
    pub fn from_process() -> Self {
        Self {
            scalar_mode: std::env::var(SCALAR_MODE_ENV).ok(),
        }
    }

    fn mode(&self, docs: &[&Value]) -> CliResult<ScalarMode> {
        Ok(io::resolve_mode(self.scalar_mode.as_deref(), docs)?)
    }
}

pub fn read_doc(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    io::parse_json(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn projection_for(family_doc: &Value, relation_doc: &Value, n: usize) -> CliResult<InnerProjection> {
    if io::family_extent(family_doc)? > n {
        return Err(CliError::Shape(format!("family indexes coordinates beyond n = {n}")));
    }
    let family = io::parse_family(family_doc, n)?;
    let relation = io::parse_relation(relation_doc)?;
    Ok(InnerProjection::new(family, relation)?)
}

fn project_in<S: Scalar>(family: &Value, relation: &Value, matrix: &Value) -> CliResult {
    let t: RegularOperator<S> = io::parse_matrix(matrix)?;
    let p = projection_for(family, relation, t.dim())?;
    Ok(pretty(&io::matrix_to_json(&p.apply(&t)?)))
}

/// `project`: applies `𝒫_Γ` to a matrix.
pub fn cmd_project(env: &Env, family: &Path, relation: &Path, matrix: &Path) -> CliResult {
    let (f, r, m) = (read_doc(family)?, read_doc(relation)?, read_doc(matrix)?);
    match env.mode(&[&m])? {
        ScalarMode::Exact => project_in::<Rational>(&f, &r, &m),
        ScalarMode::Float => project_in::<Float>(&f, &r, &m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BooleanOp {
    Meet,
    Join,
    Complement,
}

impl std::str::FromStr for BooleanOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "meet" => Ok(BooleanOp::Meet),
            "join" => Ok(BooleanOp::Join),
            "complement" => Ok(BooleanOp::Complement),
            _ => Err(format!("unknown operation {s:?} (expected meet, join or complement)")),
        }
    }
}

/// `boolean`: meet, join or complement of relations, as a relation. The
/// dimension defaults to the smallest one covering the family.
pub fn cmd_boolean(family: &Path, op: BooleanOp, left: &Path, right: Option<&Path>, n: Option<usize>) -> CliResult {
    let family_doc = read_doc(family)?;
    let n = match n {
        Some(n) => n,
        None => io::family_extent(&family_doc)?.max(1),
    };
    let left = projection_for(&family_doc, &read_doc(left)?, n)?;
    let result = match op {
        BooleanOp::Complement => left.boolean_complement(),
        BooleanOp::Meet | BooleanOp::Join => {
            let right = right.ok_or_else(|| CliError::Parse("--right is required for meet and join".into()))?;
            let right = projection_for(&family_doc, &read_doc(right)?, n)?;
            if op == BooleanOp::Meet {
                left.boolean_meet(&right)?
            } else {
                left.boolean_join(&right)?
            }
        }
    };
    Ok(pretty(&io::relation_to_json(result.relation())))
}

pub fn detection_to_json(d: &Detection) -> Value {
    match d {
        Detection::Accepted(g) => {
            json!({ "is_band_projection": true, "gamma": io::relation_to_json(g), "rejection_stage": null })
        }
        Detection::Rejected(s) => json!({ "is_band_projection": false, "gamma": null, "rejection_stage": s.as_str() }),
        Detection::Inconsistent(s) => json!({
            "is_band_projection": false,
            "gamma": null,
            "rejection_stage": s.as_str(),
            "inconsistent": true,
        }),
    }
}

fn detect_in<S: Scalar>(doc: &Value) -> CliResult {
    let p: SuperOperator<S> = io::parse_superoperator(doc)?;
    let d = detect_band_projection(&p);
    let output = pretty(&detection_to_json(&d));
    match d {
        Detection::Inconsistent(stage) => Err(CliError::Property {
            output,
            message: format!("stages 1-3 passed but {stage} failed"),
        }),
        _ => Ok(output),
    }
}

/// `detect`: decides whether a superoperator is a band projection.
pub fn cmd_detect(env: &Env, superop: &Path) -> CliResult {
    let doc = read_doc(superop)?;
    match env.mode(&[&doc])? {
        ScalarMode::Exact => detect_in::<Rational>(&doc),
        ScalarMode::Float => detect_in::<Float>(&doc),
    }
}

fn classify_in<S: Scalar>(a: &Value, b: &Value) -> CliResult {
    let a: RegularOperator<S> = io::parse_matrix(a)?;
    let b: RegularOperator<S> = io::parse_matrix(b)?;
    let c = classify(&a, &b)?;
    Ok(pretty(&json!({
        "scalar_mode": S::MODE.as_str(),
        "positive": c.positive,
        "sign_case": c.sign_case.as_str(),
        "positive_projection": c.positive_projection,
        "band_projection": c.band_projection,
        "lambda": c.lambda.as_ref().map(Scalar::to_json),
    })))
}

/// `classify-mult`: classifies `T ↦ ATB`.
pub fn cmd_classify_mult(env: &Env, a: &Path, b: &Path) -> CliResult {
    let (a, b) = (read_doc(a)?, read_doc(b)?);
    match env.mode(&[&a, &b])? {
        ScalarMode::Exact => classify_in::<Rational>(&a, &b),
        ScalarMode::Float => classify_in::<Float>(&a, &b),
    }
}

/// Levels above this build matrices too large to be useful from the CLI.
pub const DYADIC_CLI_MAX_LEVEL: u32 = 12;

/// `dyadic`: the decay table for levels `1..=max_level` and the level-2
/// membership verdicts.
pub fn cmd_dyadic(max_level: u32) -> CliResult {
    if max_level == 0 || max_level > DYADIC_CLI_MAX_LEVEL.min(MAX_LEVEL) {
        return Err(CliError::Parse(format!(
            "--max-level must be in 1..={DYADIC_CLI_MAX_LEVEL}"
        )));
    }
    let mut out = String::new();
    writeln!(out, "{:>5}  {:>9}  {:>12}", "level", "dimension", "norm(T^I)").unwrap();
    for level in 1..=max_level {
        let lvl = DyadicLevel::new(level)?;
        writeln!(
            out,
            "{:>5}  {:>9}  {:>12}",
            level,
            lvl.dim(),
            meet_with_identity_decay(lvl).to_string()
        )
        .unwrap();
    }
    let r = dyadic_membership_demo()?;
    let mark = |b: bool| if b { "yes" } else { "no" };
    writeln!(out).unwrap();
    writeln!(
        out,
        "membership in B_Gamma at level 2, Gamma = {{(1,1),(2,1),(3,1),(1,2)}}"
    )
    .unwrap();
    writeln!(
        out,
        "  stretching operator: {} (conditions {:?})",
        mark(r.stretching_member),
        r.stretching_conditions
    )
    .unwrap();
    writeln!(
        out,
        "  E_13:                {} (conditions {:?})",
        mark(r.violating_member),
        r.violating_conditions
    )
    .unwrap();
    writeln!(out, "  zero operator:       {}", mark(r.zero_member)).unwrap();
    let members: Vec<String> = r
        .elementary
        .iter()
        .filter(|v| v.member)
        .map(|v| format!("E_{}{}", v.row, v.col))
        .collect();
    writeln!(out, "  elementary members:  {}", members.join(" ")).unwrap();
    writeln!(
        out,
        "  conditions agree on all 16 elementary operators: {}",
        mark(r.elementary_agreement)
    )
    .unwrap();
    if r.all_consistent() {
        Ok(out)
    } else {
        Err(CliError::Property {
            output: out,
            message: "membership verdicts disagree with the support conditions".into(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct FuzzArgs {
    pub seed: u64,
    pub trials: u64,
    pub max_dim: usize,
    pub modules: Option<Vec<String>>,
    pub mutant: Option<String>,
    pub counterexample_dir: Option<PathBuf>,
}

pub fn fuzz_config(args: &FuzzArgs) -> CliResult<FuzzConfig> {
    let mut config = FuzzConfig::new(args.seed, args.trials, args.max_dim)?;
    if let Some(modules) = &args.modules {
        config.modules = modules
            .iter()
            .map(|m| m.parse::<FuzzModule>())
            .collect::<Result<_, _>>()?;
    }
    config.mutant = match args.mutant.as_deref() {
        None => None,
        Some("stray-half" | "stray_half") => Some(Mutant::StrayHalf),
        Some(other) => return Err(CliError::Parse(format!("unknown mutant {other:?}"))),
    };
    Ok(config)
}

pub fn counterexample_file(dir: &Path, property: &str) -> PathBuf {
    dir.join(format!("{property}.json"))
}

/// `fuzz`: runs the property registry and prints the report. Counterexamples
/// of failing properties are written to `counterexample_dir` if given.
pub fn cmd_fuzz(args: &FuzzArgs) -> CliResult {
    let config = fuzz_config(args)?;
    let report: RunReport = fuzz::run(&config)?;
    if let Some(dir) = &args.counterexample_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Parse(format!("{}: {e}", dir.display())))?;
        for cx in report.properties.iter().filter_map(|p| p.counterexample.as_ref()) {
            let path = counterexample_file(dir, &cx.property);
            let text = pretty(&serde_json::to_value(cx).expect("json"));
            fs::write(&path, text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        }
    }
    let output = pretty(&serde_json::to_value(&report).expect("json"));
    if report.passed {
        Ok(output)
    } else {
        let failing: Vec<&str> = report.failures().map(|p| p.name.as_str()).collect();
        Err(CliError::Property {
            output,
            message: format!("failing properties: {}", failing.join(", ")),
        })
    }
}

/// `fuzz --replay`: re-checks a counterexample file.
pub fn cmd_replay(path: &Path) -> CliResult {
    let cx: Counterexample =
        serde_json::from_value(read_doc(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    match fuzz::replay(&cx)? {
        ReplayOutcome::Passed => Ok(format!("{}: passes\n", cx.property)),
        ReplayOutcome::Failed(msg) => {
            let output = format!("{}: {msg}\n", cx.property);
            let message = if msg == cx.failure {
                "reproduced".to_string()
            } else {
                format!("failure changed: {msg}")
            };
            Err(CliError::Property { output, message })
        }
    }
}

/// Family document with singleton blocks `"1".."n"`.
pub fn singleton_family_doc(n: usize) -> CliResult<Value> {
    Ok(io::family_to_json(&BlockFamily::singletons(n)?))
}

pub fn relation_doc(pairs: &[(usize, usize)]) -> Value {
    io::relation_to_json(&IndexRelation::from_index_pairs(pairs))
}
