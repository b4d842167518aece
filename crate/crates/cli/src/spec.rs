//! Problem descriptions: the JSON schema, validation and node generators.

use std::f64::consts::PI;

use dbcomp::entire::make_structure_function;
use dbcomp::{CompletionParams, NodeSequence, RidgePolicy, StructureFunction, Truncation, C64};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub space: SpaceSpec,
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub params: ParamsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpaceSpec {
    /// Paley–Wiener space of type π.
    Pw,
    Hb {
        type_a: f64,
        zeros: Vec<[f64; 2]>,
        #[serde(default)]
        phase: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaSpec {
    Explicit(Vec<[f64; 2]>),
    Generator(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub id: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub radius: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc_n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A validation failure naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

fn bad(field: &str, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.into(),
        message: message.into(),
    }
}

/// Everything a pipeline needs, checked.
#[derive(Debug, Clone)]
pub struct Problem {
    pub e: StructureFunction,
    pub lambda: NodeSequence,
    pub completion: CompletionParams,
    pub ridge: RidgePolicy,
    pub trunc_n: usize,
}

fn positive(field: &str, v: f64) -> Result<f64, FieldError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad(field, format!("must be positive and finite, got {v}")))
    }
}

fn interval(field: &str, w: [f64; 2], allow_point: bool) -> Result<(f64, f64), FieldError> {
    let ok = w[0].is_finite() && w[1].is_finite() && (w[0] < w[1] || (allow_point && w[0] == w[1]));
    if ok {
        Ok((w[0], w[1]))
    } else {
        Err(bad(field, format!("[{}, {}] is not a finite interval", w[0], w[1])))
    }
}

fn complex_list(field: &str, v: &[[f64; 2]]) -> Result<Vec<C64>, FieldError> {
    let out: Vec<C64> = v.iter().map(|p| C64::new(p[0], p[1])).collect();
    if let Some(z) = out.iter().find(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(bad(field, format!("{z} is not finite")));
    }
    for (i, a) in out.iter().enumerate() {
        if out[..i].contains(a) {
            return Err(bad(field, format!("{a} appears more than once (points must be distinct)")));
        }
    }
    Ok(out)
}

impl ProblemSpec {
    pub fn parse(text: &str) -> Result<Self, FieldError> {
        serde_json::from_str(text).map_err(|e| bad("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<Problem, FieldError> {
        let e = match &self.space {
            SpaceSpec::Pw => StructureFunction::paley_wiener(),
            SpaceSpec::Hb { type_a, zeros, phase } => {
                if !(type_a.is_finite() && *type_a >= 0.0) {
                    return Err(bad("space.type_a", format!("must be finite and nonnegative, got {type_a}")));
                }
                if !(phase.is_finite() && (0.0..2.0 * PI).contains(phase)) {
                    return Err(bad("space.phase", format!("must lie in [0, 2π), got {phase}")));
                }
                let zs = complex_list("space.zeros", zeros)?;
                make_structure_function(*type_a, zs, *phase).map_err(|e| bad("space", e.to_string()))?
            }
        };
        let lambda = match &self.lambda {
            LambdaSpec::Explicit(v) => {
                let nodes = complex_list("lambda.explicit", v)?;
                NodeSequence::exact(nodes).map_err(|e| bad("lambda.explicit", e.to_string()))?
            }
            LambdaSpec::Generator(g) => {
                let r = positive("lambda.generator.radius", g.radius)?;
                let nodes = generate(&g.id, &g.params, r)?;
                NodeSequence::new(nodes, Truncation::Radius(r)).map_err(|e| bad("lambda.generator", e.to_string()))?
            }
        };
        let p = &self.params;
        let mut completion = CompletionParams::default();
        if let Some(w) = p.anchor_window {
            completion.anchor_window = interval("params.anchor_window", w, true)?;
        }
        if let Some(w) = p.scan_window {
            completion.scan_window = Some(interval("params.scan_window", w, false)?);
        }
        if let Some(s) = p.step {
            completion.step = positive("params.step", s)?;
        }
        if let Some(t) = p.tol {
            completion.tol = positive("params.tol", t)?;
        }
        if let Some(seed) = p.seed {
            completion.seed = seed;
        }
        let ridge = match p.ridge {
            None => RidgePolicy::default(),
            Some(r) if r == 0.0 => RidgePolicy::Reject,
            Some(r) => RidgePolicy::Regularize {
                relative: positive("params.ridge", r)?,
            },
        };
        let trunc_n = match p.trunc_n {
            None => 4096,
            Some(n) if (16..=1 << 22).contains(&n) => n as usize,
            Some(n) => return Err(bad("params.trunc_n", format!("must lie in [16, 4194304], got {n}"))),
        };
        Ok(Problem {
            e,
            lambda,
            completion,
            ridge,
            trunc_n,
        })
    }
}

fn param_f64(params: &Map<String, Value>, key: &str, default: f64) -> Result<f64, FieldError> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(&format!("lambda.generator.params.{key}"), "must be a finite number")),
    }
}

fn param_ints(params: &Map<String, Value>, key: &str) -> Result<Vec<i64>, FieldError> {
    let field = format!("lambda.generator.params.{key}");
    match params.get(key) {
        None => Ok(vec![]),
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| v.as_i64().ok_or_else(|| bad(&field, "must be a list of integers")))
            .collect(),
        Some(_) => Err(bad(&field, "must be a list of integers")),
    }
}

const GENERATOR_IDS: [&str; 4] = ["integers", "imaginary_harmonic", "perturbed_integers", "line_offset"];

/// Nodes of a named pattern inside the disc of the given radius.
///
/// - `integers` (`exclude`): `n ∈ ℤ`, `|n| ≤ R`.
/// - `imaginary_harmonic` (`sign`, default −1): `sign·i·n`, `1 ≤ n ≤ R`.
/// - `perturbed_integers` (`amplitude`, `exclude`): `n + (−1)ⁿ·amplitude`.
/// - `line_offset` (`offset`, `exclude`): `n + i·offset`.
pub fn generate(id: &str, params: &Map<String, Value>, radius: f64) -> Result<Vec<C64>, FieldError> {
    let allowed: &[&str] = match id {
        "integers" => &["exclude"],
        "imaginary_harmonic" => &["sign"],
        "perturbed_integers" => &["amplitude", "exclude"],
        "line_offset" => &["offset", "exclude"],
        _ => {
            return Err(bad(
                "lambda.generator.id",
                format!("unknown generator `{id}`; expected one of {}", GENERATOR_IDS.join(", ")),
            ))
        }
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(bad(&format!("lambda.generator.params.{k}"), format!("not a parameter of `{id}`")));
    }
    let m = radius.floor() as i64;
    let inside = |z: C64| z.norm() <= radius;
    let out = match id {
        "integers" => {
            let ex = param_ints(params, "exclude")?;
            (-m..=m).filter(|n| !ex.contains(n)).map(|n| C64::new(n as f64, 0.0)).collect()
        }
        "imaginary_harmonic" => {
            let sign = param_f64(params, "sign", -1.0)?;
            if sign != 1.0 && sign != -1.0 {
                return Err(bad("lambda.generator.params.sign", "must be 1 or -1"));
            }
            (1..=m).map(|n| C64::new(0.0, sign * n as f64)).collect()
        }
        "perturbed_integers" => {
            let amp = param_f64(params, "amplitude", 0.1)?;
            if amp.abs() >= 0.5 {
                return Err(bad("lambda.generator.params.amplitude", "must be below 0.5 in modulus"));
            }
            let ex = param_ints(params, "exclude")?;
            (-m - 1..=m + 1)
                .filter(|n| !ex.contains(n))
                .map(|n| C64::new(n as f64 + if n % 2 == 0 { amp } else { -amp }, 0.0))
                .filter(|&z| inside(z))
                .collect()
        }
        _ => {
            let off = param_f64(params, "offset", 0.0)?;
            let ex = param_ints(params, "exclude")?;
            (-m..=m)
                .filter(|n| !ex.contains(n))
                .map(|n| C64::new(n as f64, off))
                .filter(|&z| inside(z))
                .collect()
        }
    };
    Ok(out)
}
