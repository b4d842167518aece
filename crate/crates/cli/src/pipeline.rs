//! build → complete → verify pipelines and the result bundle.

use std::collections::BTreeMap;
use std::time::Instant;

use dbcomp::completion::{default_probes, CompletionResult, StabilityReport};
use dbcomp::space::{QuadratureParams, SampleParams};
use dbcomp::verification::{
    finite_dim_oracle, minimal_uniqueness, parseval_defect, prop1_check, MinimalityReport, Prop1Report, RankReport,
};
use dbcomp::{complete, AmbientSpace, CoreError, ErrorClass, RestrictedSpace, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::spec::{FieldError, Problem, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reports {
    pub prop1: Option<Prop1Report>,
    pub minimality: Option<MinimalityReport>,
    pub parseval_defect: f64,
    pub oracle: Option<RankReport>,
    pub stability: Option<StabilityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// The input specification, verbatim.
    pub config_echo: String,
    pub versions: BTreeMap<String, String>,
    /// Wall-clock milliseconds per stage; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub completion: CompletionResult,
    pub reports: Reports,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

#[derive(Debug)]
pub enum Failure {
    Validation(FieldError),
    Io(String),
    Core(CoreError),
}

/// A failed stage, named by module and operation.
#[derive(Debug)]
pub struct PipelineError {
    pub module: &'static str,
    pub op: &'static str,
    pub failure: Failure,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match &self.failure {
            Failure::Validation(_) | Failure::Io(_) => 2,
            Failure::Core(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Numerical => 3,
                ErrorClass::ExceptionalAlpha => 4,
            },
        }
    }
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}::{} failed: ", self.module, self.op)?;
        match &self.failure {
            Failure::Validation(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PipelineError {}

fn stage<T>(module: &'static str, op: &'static str, r: dbcomp::Result<T>) -> Result<T, PipelineError> {
    r.map_err(|e| PipelineError {
        module,
        op,
        failure: Failure::Core(e),
    })
}

pub fn io_error(op: &'static str, msg: String) -> PipelineError {
    PipelineError {
        module: "cli",
        op,
        failure: Failure::Io(msg),
    }
}

fn validation(op: &'static str, e: FieldError) -> PipelineError {
    PipelineError {
        module: "cli",
        op,
        failure: Failure::Validation(e),
    }
}

/// Progress sink; silent under `--quiet`.
pub struct Progress {
    pub quiet: bool,
}

impl Progress {
    pub fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

struct Clock {
    timings: BTreeMap<String, f64>,
    start: Instant,
}

impl Clock {
    fn new() -> Self {
        Self {
            timings: BTreeMap::new(),
            start: Instant::now(),
        }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.timings
            .insert(name.to_string(), (now - self.start).as_secs_f64() * 1e3);
        self.start = now;
    }
}

fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("dbcomp-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("dbcomp".to_string(), dbcomp::VERSION.to_string()),
    ])
}

fn load(text: &str) -> Result<Problem, PipelineError> {
    let spec = ProblemSpec::parse(text).map_err(|e| validation("parse_spec", e))?;
    spec.validate().map_err(|e| validation("validate_spec", e))
}

fn build(problem: &Problem) -> Result<RestrictedSpace, PipelineError> {
    let ambient = AmbientSpace::with_params(
        problem.e.clone(),
        QuadratureParams::default(),
        SampleParams {
            half_range: problem.trunc_n,
            ..SampleParams::default()
        },
    );
    stage(
        "restricted_space",
        "build",
        RestrictedSpace::build_with(ambient, problem.lambda.clone(), problem.ridge),
    )
}

fn verify_all(
    rs: &RestrictedSpace,
    problem: &Problem,
    points: &[f64],
    anchor: Option<f64>,
    clock: &mut Clock,
) -> Result<Reports, PipelineError> {
    let union = stage("verification", "prop1_check", problem.lambda.union_real(points))?;
    let prop1 = stage("verification", "prop1_check", prop1_check(rs.ambient(), &union))?;
    clock.lap("prop1_check");
    let minimality = stage("verification", "minimal_uniqueness", minimal_uniqueness(rs, points, anchor))?;
    clock.lap("minimal_uniqueness");
    let x0 = anchor.unwrap_or(points[0]);
    let probes = default_probes(rs, x0, points, problem.completion.seed);
    let defect = stage("verification", "parseval_defect", parseval_defect(rs, points, &probes))?;
    clock.lap("parseval_defect");
    let oracle = match problem.e.dimension() {
        Some(n) if problem.lambda.len() + points.len() == n => Some(stage(
            "verification",
            "finite_dim_oracle",
            finite_dim_oracle(&problem.e, &problem.lambda, points),
        )?),
        _ => None,
    };
    clock.lap("finite_dim_oracle");
    Ok(Reports {
        prop1: Some(prop1),
        minimality: Some(minimality),
        parseval_defect: defect,
        oracle,
        stability: None,
    })
}

/// Full pipeline on a specification document.
pub fn run_complete(spec_text: &str, progress: &Progress) -> Result<ResultBundle, PipelineError> {
    let mut clock = Clock::new();
    let problem = load(spec_text)?;
    progress.note(&format!("building restricted space over {} nodes", problem.lambda.len()));
    let rs = build(&problem)?;
    clock.lap("build");
    progress.note("completing");
    let completion = stage("completion", "complete", complete(&rs, &problem.completion))?;
    clock.lap("complete");
    progress.note(&format!("verifying |S| = {}", completion.points.len()));
    let reports = verify_all(&rs, &problem, &completion.points, Some(completion.anchor), &mut clock)?;
    Ok(ResultBundle {
        completion,
        reports,
        warnings: rs.warnings().to_vec(),
        provenance: Provenance {
            config_echo: spec_text.to_string(),
            versions: versions(),
            timings: clock.timings,
        },
    })
}

/// Re-runs verification on the `S` stored in a result document.
pub fn run_verify(result_text: &str, spec_text: &str, progress: &Progress) -> Result<ResultBundle, PipelineError> {
    let mut clock = Clock::new();
    let value: Value =
        serde_json::from_str(result_text).map_err(|e| validation("parse_result", field("<result>", e.to_string())))?;
    let completion: CompletionResult = serde_json::from_value(value.get("completion").cloned().unwrap_or(Value::Null))
        .map_err(|e| validation("parse_result", field("completion", e.to_string())))?;
    let points = &completion.points;
    if points.is_empty() {
        return Err(validation("verify", field("completion.points", "S is empty".into())));
    }
    if let Some(s) = points.iter().find(|s| !s.is_finite()) {
        return Err(validation("verify", field("completion.points", format!("{s} is not finite"))));
    }
    let problem = load(spec_text)?;
    for &s in points {
        if problem.lambda.contains_within(C64::new(s, 0.0), 1e-8 * (1.0 + s.abs())) {
            return Err(validation("verify", field("completion.points", format!("S point {s} belongs to Λ"))));
        }
    }
    let rs = build(&problem)?;
    clock.lap("build");
    progress.note(&format!("verifying |S| = {}", points.len()));
    let anchor = points.contains(&completion.anchor).then_some(completion.anchor);
    let reports = verify_all(&rs, &problem, points, anchor, &mut clock)?;
    Ok(ResultBundle {
        completion,
        reports,
        warnings: rs.warnings().to_vec(),
        provenance: Provenance {
            config_echo: spec_text.to_string(),
            versions: versions(),
            timings: clock.timings,
        },
    })
}

fn field(name: &str, message: String) -> FieldError {
    FieldError {
        field: name.into(),
        message,
    }
}

pub const DEMOS: [&str; 5] = ["pw-one-gap", "pw-three-gaps", "findim-2", "findim-6", "harmonic-reject"];

pub fn demo_spec(name: &str) -> Option<&'static str> {
    Some(match name {
        "pw-one-gap" => {
            r#"{"space":{"kind":"pw"},"lambda":{"generator":{"id":"integers","params":{"exclude":[0]},"radius":500}},"params":{"seed":1}}"#
        }
        "pw-three-gaps" => {
            r#"{"space":{"kind":"pw"},"lambda":{"generator":{"id":"integers","params":{"exclude":[-1,0,1]},"radius":500}},"params":{"seed":1}}"#
        }
        "findim-2" => r#"{"space":{"kind":"hb","type_a":0,"zeros":[[0,-1],[0.5,-1.5]]},"lambda":{"explicit":[[0,1]]},"params":{"seed":1}}"#,
        "findim-6" => {
            r#"{"space":{"kind":"hb","type_a":0,"zeros":[[0,-1],[1,-0.8],[-1.2,-1.1],[2,-2],[-0.4,-0.5],[0.7,-1.6]]},"lambda":{"explicit":[[0.3,0.9],[-1,0.4],[1.5,-0.6]]},"params":{"seed":1}}"#
        }
        "harmonic-reject" => {
            r#"{"space":{"kind":"pw"},"lambda":{"generator":{"id":"imaginary_harmonic","params":{"sign":-1},"radius":100000}},"params":{"seed":1}}"#
        }
        _ => return None,
    })
}

/// Rounds every float to 12 significant digits.
pub fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = format!("{x:.11e}").parse().unwrap();
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(o) => o.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn to_json(bundle: &ResultBundle) -> String {
    let mut v = serde_json::to_value(bundle).expect("bundle serializes");
    round_numbers(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

fn fmt12(x: f64) -> String {
    let r: f64 = format!("{x:.11e}").parse().unwrap();
    format!("{r}")
}

pub const CSV_HEADER: &str = "index,s_point,kappa_diag,orth_residual,minimality_margin";

pub fn to_csv(result: &CompletionResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (i, p) in result.diagnostics.points.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{},{}\n",
            fmt12(p.s),
            fmt12(p.kappa_diag),
            fmt12(p.orth_residual),
            fmt12(p.minimality_margin)
        ));
    }
    out
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &std::path::Path, contents: &str) -> Result<(), PipelineError> {
    use std::io::Write;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| std::path::Path::new("."));
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error("write_output", format!("{}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| io_error("write_output", e.to_string()))?;
    tmp.persist(path)
        .map_err(|e| io_error("write_output", format!("{}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dbcomp::verification::Verdict;

    const QUIET: Progress = Progress { quiet: true };

    fn without_timings(mut b: ResultBundle) -> String {
        b.provenance.timings.clear();
        to_json(&b)
    }

    #[test]
    fn complete_is_deterministic() {
        let spec = demo_spec("findim-2").unwrap();
        let a = without_timings(run_complete(spec, &QUIET).unwrap());
        let b = without_timings(run_complete(spec, &QUIET).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn bundle_round_trips_through_json() {
        let bundle = run_complete(demo_spec("findim-6").unwrap(), &QUIET).unwrap();
        let once = to_json(&bundle);
        let parsed: ResultBundle = serde_json::from_str(&once).unwrap();
        assert_eq!(to_json(&parsed), once);
        assert_eq!(parsed.provenance.config_echo, demo_spec("findim-6").unwrap());
    }

    #[test]
    fn findim_demo_reports_oracle_and_uniqueness() {
        let b = run_complete(demo_spec("findim-2").unwrap(), &QUIET).unwrap();
        let oracle = b.reports.oracle.unwrap();
        assert_eq!((oracle.rank, oracle.leave_one_out.clone()), (2, vec![1, 1]));
        assert_eq!(b.reports.minimality.unwrap().uniqueness, Verdict::Pass);
        assert!(b.reports.parseval_defect < 1e-6);
        let csv = to_csv(&b.completion);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 1 + b.completion.points.len());
    }

    #[test]
    fn validation_failures_exit_2() {
        let zero_tol = r#"{"space":{"kind":"pw"},"lambda":{"explicit":[[1,0]]},"params":{"tol":0}}"#;
        let e = run_complete(zero_tol, &QUIET).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("tol"), "{e}");

        let repeated = r#"{"space":{"kind":"hb","type_a":0,"zeros":[[0,-1],[0,-1],[1,-2]]},"lambda":{"explicit":[]}}"#;
        let e = run_complete(repeated, &QUIET).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("space.zeros"), "{e}");

        let e = run_complete("{not json", &QUIET).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn numerical_failures_exit_3() {
        let e = run_complete(demo_spec("harmonic-reject").unwrap(), &QUIET).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().starts_with("restricted_space::build failed"), "{e}");
    }

    #[test]
    fn verify_rejects_points_of_lambda() {
        let spec = demo_spec("findim-2").unwrap();
        let mut b = run_complete(spec, &QUIET).unwrap();
        b.completion.points.push(0.0);
        let spec_real = r#"{"space":{"kind":"hb","type_a":0,"zeros":[[0,-1],[0.5,-1.5]]},"lambda":{"explicit":[[0,0]]}}"#;
        let e = run_verify(&to_json(&b), spec_real, &QUIET).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("belongs to"), "{e}");
    }

    #[test]
    fn verify_reports_a_dropped_point() {
        let spec = demo_spec("findim-6").unwrap();
        let b = run_complete(spec, &QUIET).unwrap();
        let ok = run_verify(&to_json(&b), spec, &QUIET).unwrap();
        assert_eq!(ok.reports.minimality.unwrap().uniqueness, Verdict::Pass);

        let mut dropped = b.clone();
        dropped.completion.points.pop();
        let r = run_verify(&to_json(&dropped), spec, &QUIET).unwrap();
        assert_eq!(r.reports.minimality.unwrap().uniqueness, Verdict::Fail);
        assert!(r.reports.oracle.is_none());
    }

    #[test]
    fn unknown_demo() {
        assert!(demo_spec("nope").is_none());
        assert!(DEMOS.iter().all(|d| demo_spec(d).is_some()));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let e = write_atomic(&dir.path().join("missing/out.json"), "x").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
