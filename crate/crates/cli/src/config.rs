//! Run configuration: JSON schema, loading, and whole-file validation.
//!
//! The loader is deliberately a hand-rolled walker over `serde_json::Value`
//! rather than a derive: validation must report *every* violation in one
//! pass (unknown keys by name, type errors, bad decimals, inconsistent
//! cross-field constraints), where a derive stops at the first.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use muntzlab_core::numerics::Scalar;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::Value;

/// Precision at which decimal literals are sanity-checked during
/// validation. Checks here are about well-formedness and signs, never about
/// conditioning, so a modest fixed precision is enough.
const CHECK_BITS: u32 = 192;

/// The six pipeline stages, in the vocabulary of the `commands` list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Gram,
    Biorth,
    BoundFit,
    Expand,
    Hereditary,
    Operator,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Gram,
        Stage::Biorth,
        Stage::BoundFit,
        Stage::Expand,
        Stage::Hereditary,
        Stage::Operator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Gram => "gram",
            Stage::Biorth => "biorth",
            Stage::BoundFit => "bound-fit",
            Stage::Expand => "expand",
            Stage::Hereditary => "hereditary",
            Stage::Operator => "operator",
        }
    }

    fn parse(text: &str) -> Option<Stage> {
        Stage::ALL.iter().copied().find(|s| s.name() == text)
    }
}

impl Serialize for Stage {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// How the exponent sequence is described.
#[derive(Clone, Debug)]
pub enum ExponentSpec {
    /// Literal decimal values.
    Explicit(Vec<String>),
    /// lambda_n = n^2 for n = 1..=count.
    Squares { count: usize },
    /// lambda_n = scale * ratio^n for n = 1..=count.
    Geometric {
        scale: String,
        ratio: String,
        count: usize,
    },
}

impl ExponentSpec {
    /// Number of exponents when it is knowable without building them.
    pub fn count(&self) -> usize {
        match self {
            ExponentSpec::Explicit(values) => values.len(),
            ExponentSpec::Squares { count } | ExponentSpec::Geometric { count, .. } => *count,
        }
    }
}

impl Serialize for ExponentSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        match self {
            ExponentSpec::Explicit(values) => {
                map.serialize_entry("kind", "explicit")?;
                map.serialize_entry("values", values)?;
            }
            ExponentSpec::Squares { count } => {
                map.serialize_entry("kind", "n^2")?;
                map.serialize_entry("count", count)?;
            }
            ExponentSpec::Geometric {
                scale,
                ratio,
                count,
            } => {
                map.serialize_entry("kind", "geometric")?;
                map.serialize_entry("scale", scale)?;
                map.serialize_entry("ratio", ratio)?;
                map.serialize_entry("count", count)?;
            }
        }
        map.end()
    }
}

/// Operator weights: the canonical shift family e^(-delta lambda_n), or an
/// explicit list of complex decimals (still validated against the decay
/// bound at run time).
#[derive(Clone, Debug)]
pub enum WeightSpec {
    Shift,
    Explicit(Vec<(String, String)>),
}

impl Serialize for WeightSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            WeightSpec::Shift => serializer.serialize_str("shift"),
            WeightSpec::Explicit(entries) => {
                let mut seq = serializer.serialize_seq(Some(entries.len()))?;
                for (re, im) in entries {
                    #[derive(Serialize)]
                    struct Entry<'a> {
                        re: &'a str,
                        im: &'a str,
                    }
                    seq.serialize_element(&Entry { re, im })?;
                }
                seq.end()
            }
        }
    }
}

/// Which partitions the hereditary sweep visits.
#[derive(Clone, Copy, Debug)]
pub enum PartitionSpec {
    Exhaustive,
    Sample { count: usize, seed: u64 },
}

impl Serialize for PartitionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PartitionSpec::Exhaustive => serializer.serialize_str("exhaustive"),
            PartitionSpec::Sample { count, seed } => {
                let mut map = serializer.serialize_map(Some(2))?;
                map.serialize_entry("sample", count)?;
                map.serialize_entry("seed", seed)?;
                map.end()
            }
        }
    }
}

/// A fully validated run configuration with defaults resolved. Serializes
/// back to the same schema it was read from, so the echo inside a report is
/// itself a loadable config.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub exponents: ExponentSpec,
    pub interval: IntervalSpec,
    pub precision: PrecisionSpec,
    pub delta: String,
    pub weights: WeightSpec,
    pub partitions: PartitionSpec,
    pub commands: Vec<Stage>,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntervalSpec {
    pub a: String,
    pub b: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrecisionSpec {
    pub mantissa_bits: u32,
    pub escalation_limit: u32,
}

/// Every violation found in one validation pass, never just the first.
#[derive(Debug)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "invalid configuration ({} violation{}):",
            self.violations.len(),
            if self.violations.len() == 1 { "" } else { "s" }
        )?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Reads and validates a configuration file, reporting every violation.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError {
        violations: vec![format!("cannot read {}: {e}", path.display())],
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| ConfigError {
        violations: vec![format!("not valid JSON: {e}")],
    })?;
    validate(&value)
}

/// Validates a parsed JSON document and resolves defaults.
pub fn validate(value: &Value) -> Result<RunConfig, ConfigError> {
    let mut violations = Vec::new();
    let root = match value.as_object() {
        Some(map) => map,
        None => {
            return Err(ConfigError {
                violations: vec!["top level must be a JSON object".into()],
            })
        }
    };

    const KNOWN: [&str; 8] = [
        "exponents",
        "interval",
        "precision",
        "delta",
        "weights",
        "partitions",
        "commands",
        "output_dir",
    ];
    for key in root.keys() {
        if !KNOWN.contains(&key.as_str()) {
            violations.push(format!("unknown key {key:?}"));
        }
    }

    let exponents = parse_exponents(root.get("exponents"), &mut violations);
    let interval = parse_interval(root.get("interval"), &mut violations);
    let precision = parse_precision(root.get("precision"), &mut violations);
    let delta = parse_delta(root.get("delta"), &mut violations);
    let weights = parse_weights(root.get("weights"), &mut violations);
    let partitions = parse_partitions(root.get("partitions"), &mut violations);
    let commands = parse_commands(root.get("commands"), &mut violations);
    let output_dir = parse_output_dir(root.get("output_dir"), &mut violations);

    // Cross-field: an explicit weight list must match the exponent count.
    if let (Some(exp), Some(WeightSpec::Explicit(entries))) = (&exponents, &weights) {
        if entries.len() != exp.count() {
            violations.push(format!(
                "weights: explicit list has {} entries but there are {} exponents",
                entries.len(),
                exp.count()
            ));
        }
    }

    if !violations.is_empty() {
        return Err(ConfigError { violations });
    }
    Ok(RunConfig {
        exponents: exponents.expect("validated"),
        interval: interval.expect("validated"),
        precision: precision.expect("validated"),
        delta: delta.expect("validated"),
        weights: weights.expect("validated"),
        partitions: partitions.expect("validated"),
        commands: commands.expect("validated"),
        output_dir: output_dir.expect("validated"),
    })
}

/// A decimal literal: must parse to a finite value.
fn check_decimal(field: &str, text: &str, violations: &mut Vec<String>) -> Option<Scalar> {
    match Scalar::parse_decimal(text, CHECK_BITS) {
        Ok(v) => Some(v),
        Err(_) => {
            violations.push(format!("{field}: {text:?} is not a finite decimal number"));
            None
        }
    }
}

fn check_positive_decimal(field: &str, text: &str, violations: &mut Vec<String>) -> Option<Scalar> {
    let v = check_decimal(field, text, violations)?;
    if !v.is_sign_positive() || v.is_zero() {
        violations.push(format!("{field}: {text:?} must be strictly positive"));
        return None;
    }
    Some(v)
}

fn string_list(field: &str, value: &Value, violations: &mut Vec<String>) -> Option<Vec<String>> {
    let array = match value.as_array() {
        Some(a) => a,
        None => {
            violations.push(format!("{field}: expected an array"));
            return None;
        }
    };
    let mut out = Vec::with_capacity(array.len());
    for (i, item) in array.iter().enumerate() {
        match item.as_str() {
            Some(s) => out.push(s.to_owned()),
            None => violations.push(format!("{field}[{i}]: expected a decimal string")),
        }
    }
    (out.len() == array.len()).then_some(out)
}

fn reject_unknown(
    field: &str,
    map: &serde_json::Map<String, Value>,
    known: &[&str],
    violations: &mut Vec<String>,
) {
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            violations.push(format!("{field}: unknown key {key:?}"));
        }
    }
}

fn usize_field(
    field: &str,
    map: &serde_json::Map<String, Value>,
    key: &str,
    violations: &mut Vec<String>,
) -> Option<usize> {
    match map.get(key) {
        Some(v) => match v.as_u64() {
            Some(n) if n >= 1 => Some(n as usize),
            Some(_) => {
                violations.push(format!("{field}.{key}: must be at least 1"));
                None
            }
            None => {
                violations.push(format!("{field}.{key}: expected a positive integer"));
                None
            }
        },
        None => {
            violations.push(format!("{field}: missing key {key:?}"));
            None
        }
    }
}

fn parse_exponents(value: Option<&Value>, violations: &mut Vec<String>) -> Option<ExponentSpec> {
    let value = match value {
        Some(v) => v,
        None => {
            violations.push("missing key \"exponents\"".into());
            return None;
        }
    };
    // A bare array is shorthand for the explicit form.
    if value.is_array() {
        let values = string_list("exponents", value, violations)?;
        return finish_explicit(values, violations);
    }
    let map = match value.as_object() {
        Some(m) => m,
        None => {
            violations.push(
                "exponents: expected an array of decimals or a family descriptor object".into(),
            );
            return None;
        }
    };
    let kind = match map.get("kind").and_then(Value::as_str) {
        Some(k) => k,
        None => {
            violations.push("exponents: descriptor needs a string key \"kind\"".into());
            return None;
        }
    };
    match kind {
        "explicit" => {
            reject_unknown("exponents", map, &["kind", "values"], violations);
            let values = match map.get("values") {
                Some(v) => string_list("exponents.values", v, violations)?,
                None => {
                    violations.push("exponents: missing key \"values\"".into());
                    return None;
                }
            };
            finish_explicit(values, violations)
        }
        "n^2" => {
            reject_unknown("exponents", map, &["kind", "count"], violations);
            let count = usize_field("exponents", map, "count", violations)?;
            Some(ExponentSpec::Squares { count })
        }
        "geometric" => {
            reject_unknown(
                "exponents",
                map,
                &["kind", "scale", "ratio", "count"],
                violations,
            );
            let count = usize_field("exponents", map, "count", violations);
            let scale = match map.get("scale").and_then(Value::as_str) {
                Some(s) => {
                    check_positive_decimal("exponents.scale", s, violations)?;
                    Some(s.to_owned())
                }
                None => {
                    violations.push("exponents: missing decimal string \"scale\"".into());
                    None
                }
            };
            let ratio = match map.get("ratio").and_then(Value::as_str) {
                Some(r) => {
                    if let Some(v) = check_decimal("exponents.ratio", r, violations) {
                        if v <= Scalar::one(CHECK_BITS) {
                            violations.push(format!("exponents.ratio: {r:?} must exceed 1"));
                        }
                    }
                    Some(r.to_owned())
                }
                None => {
                    violations.push("exponents: missing decimal string \"ratio\"".into());
                    None
                }
            };
            Some(ExponentSpec::Geometric {
                scale: scale?,
                ratio: ratio?,
                count: count?,
            })
        }
        other => {
            violations.push(format!(
                "exponents.kind: {other:?} is not one of \"explicit\", \"n^2\", \"geometric\""
            ));
            None
        }
    }
}

fn finish_explicit(values: Vec<String>, violations: &mut Vec<String>) -> Option<ExponentSpec> {
    if values.is_empty() {
        violations.push("exponents: list must not be empty".into());
        return None;
    }
    let mut parsed = Vec::with_capacity(values.len());
    for v in &values {
        if let Some(scalar) = check_positive_decimal("exponents", v, violations) {
            parsed.push(scalar);
        }
    }
    if parsed.len() == values.len() {
        for i in 0..parsed.len() {
            for j in (i + 1)..parsed.len() {
                if parsed[i] == parsed[j] {
                    violations.push(format!("exponents: duplicate value {:?}", values[j]));
                }
            }
        }
    }
    Some(ExponentSpec::Explicit(values))
}

fn parse_interval(value: Option<&Value>, violations: &mut Vec<String>) -> Option<IntervalSpec> {
    let map = match value {
        Some(Value::Object(m)) => m,
        Some(_) => {
            violations.push("interval: expected an object {\"a\": ..., \"b\": ...}".into());
            return None;
        }
        None => {
            violations.push("missing key \"interval\"".into());
            return None;
        }
    };
    reject_unknown("interval", map, &["a", "b"], violations);
    let mut endpoint = |key: &str| -> Option<(String, Scalar)> {
        match map.get(key) {
            Some(Value::String(s)) => {
                let v = check_decimal(&format!("interval.{key}"), s, violations)?;
                Some((s.clone(), v))
            }
            Some(_) => {
                violations.push(format!("interval.{key}: expected a decimal string"));
                None
            }
            None => {
                violations.push(format!("interval: missing key {key:?}"));
                None
            }
        }
    };
    let a = endpoint("a");
    let b = endpoint("b");
    let (a, b) = (a?, b?);
    if a.1 >= b.1 {
        violations.push(format!(
            "interval: a = {:?} must be strictly less than b = {:?}",
            a.0, b.0
        ));
        return None;
    }
    Some(IntervalSpec { a: a.0, b: b.0 })
}

fn parse_precision(value: Option<&Value>, violations: &mut Vec<String>) -> Option<PrecisionSpec> {
    const MIN_BITS: u64 = 128;
    const MAX_BITS: u64 = 1 << 20;
    let check_bits = |field: &str, n: u64, violations: &mut Vec<String>| -> Option<u32> {
        if !(MIN_BITS..=MAX_BITS).contains(&n) {
            violations.push(format!("{field}: {n} must lie in [{MIN_BITS}, {MAX_BITS}]"));
            None
        } else {
            Some(n as u32)
        }
    };
    match value {
        // Bare integer shorthand: mantissa bits with the default headroom.
        Some(Value::Number(n)) => {
            let bits = n.as_u64().or_else(|| {
                violations.push("precision: expected a positive integer".into());
                None
            })?;
            let mantissa_bits = check_bits("precision", bits, violations)?;
            Some(PrecisionSpec {
                mantissa_bits,
                escalation_limit: mantissa_bits.saturating_mul(8),
            })
        }
        Some(Value::Object(map)) => {
            reject_unknown(
                "precision",
                map,
                &["mantissa_bits", "escalation_limit"],
                violations,
            );
            let mantissa_bits = match map.get("mantissa_bits").and_then(Value::as_u64) {
                Some(n) => check_bits("precision.mantissa_bits", n, violations)?,
                None => {
                    violations.push("precision: missing integer key \"mantissa_bits\"".into());
                    return None;
                }
            };
            let escalation_limit = match map.get("escalation_limit") {
                Some(v) => match v.as_u64() {
                    Some(n) => {
                        let limit = check_bits("precision.escalation_limit", n, violations)?;
                        if limit < mantissa_bits {
                            violations.push(format!(
                                "precision.escalation_limit: {limit} is below mantissa_bits = {mantissa_bits}"
                            ));
                            return None;
                        }
                        limit
                    }
                    None => {
                        violations
                            .push("precision.escalation_limit: expected a positive integer".into());
                        return None;
                    }
                },
                None => mantissa_bits.saturating_mul(8).min(MAX_BITS as u32),
            };
            Some(PrecisionSpec {
                mantissa_bits,
                escalation_limit,
            })
        }
        Some(_) => {
            violations.push("precision: expected an integer or {\"mantissa_bits\": ...}".into());
            None
        }
        None => {
            violations.push("missing key \"precision\"".into());
            None
        }
    }
}

fn parse_delta(value: Option<&Value>, violations: &mut Vec<String>) -> Option<String> {
    match value {
        Some(Value::String(s)) => {
            check_positive_decimal("delta", s, violations)?;
            Some(s.clone())
        }
        Some(_) => {
            violations.push("delta: expected a decimal string".into());
            None
        }
        None => Some("0.5".into()),
    }
}

fn parse_weights(value: Option<&Value>, violations: &mut Vec<String>) -> Option<WeightSpec> {
    match value {
        Some(Value::String(s)) if s == "shift" => Some(WeightSpec::Shift),
        Some(Value::String(s)) => {
            violations.push(format!(
                "weights: {s:?} is not \"shift\" (use an array for explicit weights)"
            ));
            None
        }
        Some(Value::Array(items)) => {
            if items.is_empty() {
                violations.push("weights: explicit list must not be empty".into());
                return None;
            }
            let mut entries = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                match item {
                    // A bare decimal string is a real weight.
                    Value::String(s) => {
                        check_decimal(&format!("weights[{i}]"), s, violations);
                        entries.push((s.clone(), "0".to_owned()));
                    }
                    Value::Object(map) => {
                        reject_unknown(&format!("weights[{i}]"), map, &["re", "im"], violations);
                        let mut part = |key: &str| -> Option<String> {
                            match map.get(key) {
                                Some(Value::String(s)) => {
                                    check_decimal(&format!("weights[{i}].{key}"), s, violations);
                                    Some(s.clone())
                                }
                                Some(_) => {
                                    violations.push(format!(
                                        "weights[{i}].{key}: expected a decimal string"
                                    ));
                                    None
                                }
                                None => Some("0".to_owned()),
                            }
                        };
                        let re = part("re");
                        let im = part("im");
                        if let (Some(re), Some(im)) = (re, im) {
                            entries.push((re, im));
                        }
                    }
                    _ => violations.push(format!(
                        "weights[{i}]: expected a decimal string or {{\"re\", \"im\"}} object"
                    )),
                }
            }
            (entries.len() == items.len()).then_some(WeightSpec::Explicit(entries))
        }
        Some(_) => {
            violations.push("weights: expected \"shift\" or an array of complex decimals".into());
            None
        }
        None => Some(WeightSpec::Shift),
    }
}

fn parse_partitions(value: Option<&Value>, violations: &mut Vec<String>) -> Option<PartitionSpec> {
    match value {
        Some(Value::String(s)) if s == "exhaustive" => Some(PartitionSpec::Exhaustive),
        Some(Value::String(s)) => {
            violations.push(format!(
                "partitions: {s:?} is not \"exhaustive\" (use {{\"sample\": ..., \"seed\": ...}} to sample)"
            ));
            None
        }
        Some(Value::Object(map)) => {
            reject_unknown("partitions", map, &["sample", "seed"], violations);
            let count = usize_field("partitions", map, "sample", violations);
            let seed = match map.get("seed") {
                Some(v) => match v.as_u64() {
                    Some(n) => Some(n),
                    None => {
                        violations.push("partitions.seed: expected a non-negative integer".into());
                        None
                    }
                },
                None => {
                    violations.push("partitions: missing key \"seed\"".into());
                    None
                }
            };
            Some(PartitionSpec::Sample {
                count: count?,
                seed: seed?,
            })
        }
        Some(_) => {
            violations.push(
                "partitions: expected \"exhaustive\" or {\"sample\": ..., \"seed\": ...}".into(),
            );
            None
        }
        None => Some(PartitionSpec::Exhaustive),
    }
}

fn parse_commands(value: Option<&Value>, violations: &mut Vec<String>) -> Option<Vec<Stage>> {
    let array = match value {
        Some(Value::Array(a)) => a,
        Some(_) => {
            violations.push("commands: expected an array of stage names".into());
            return None;
        }
        None => {
            violations.push("missing key \"commands\"".into());
            return None;
        }
    };
    if array.is_empty() {
        violations.push("commands: must list at least one stage".into());
        return None;
    }
    let mut stages = Vec::with_capacity(array.len());
    for (i, item) in array.iter().enumerate() {
        match item.as_str().and_then(Stage::parse) {
            Some(stage) => stages.push(stage),
            None => {
                let names: Vec<&str> = Stage::ALL.iter().map(|s| s.name()).collect();
                violations.push(format!("commands[{i}]: {item} is not one of {names:?}"));
            }
        }
    }
    (stages.len() == array.len()).then_some(stages)
}

fn parse_output_dir(value: Option<&Value>, violations: &mut Vec<String>) -> Option<PathBuf> {
    match value {
        Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
        Some(_) => {
            violations.push("output_dir: expected a non-empty path string".into());
            None
        }
        None => Some(PathBuf::from("out")),
    }
}
