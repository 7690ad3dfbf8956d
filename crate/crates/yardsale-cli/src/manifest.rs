//! Run manifests: every experiment parameter, resolved from command-line
//! flags, environment variables, an optional key=value config file, and
//! built-in defaults — in that precedence order — and validated before any
//! computation starts.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;
use yardsale::{ExchangeRule, RedistributionMode};

pub const ENV_PREFIX: &str = "YARDSALE_";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{key}: expected {expected}, got `{value}`")]
    Invalid {
        key: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("{key}: {value} is out of range ({expected})")]
    OutOfRange {
        key: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("config file {path}: unknown key `{key}`")]
    UnknownConfigKey { path: String, key: String },
    #[error("config file {path}: line {line} is not `key = value`")]
    MalformedConfigLine { path: String, line: usize },
    #[error("cannot read config file {path}: {source}")]
    UnreadableConfig {
        path: String,
        source: std::io::Error,
    },
    #[error("{key}: grid would be empty ({detail})")]
    EmptyGrid { key: &'static str, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SingleRun,
    SweepF,
    SweepLambda,
    GridLambdaP,
    PStar,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Experiment::SingleRun => "single-run",
            Experiment::SweepF => "sweep-f",
            Experiment::SweepLambda => "sweep-lambda",
            Experiment::GridLambdaP => "grid-lambda-p",
            Experiment::PStar => "p-star",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Universal,
    Targeted,
}

/// The fully resolved run configuration. Serialized into the output sidecar
/// and echoed to stdout for provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub n: usize,
    pub seed: u64,
    pub replicas: usize,
    pub rule: ExchangeRule,
    pub f: f64,
    pub lambda: f64,
    pub mode: ModeKind,
    pub p: f64,
    pub max_steps: usize,
    pub equil_window: usize,
    pub equil_tol: f64,
    pub metric_stride: usize,
    pub zwa_threshold: f64,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub workers: usize,
    pub paper_scale: bool,
    pub f_min: f64,
    pub f_max: f64,
    pub f_step: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub lambda_values: Option<Vec<f64>>,
    pub p_values: Option<Vec<f64>>,
}

impl RunManifest {
    pub fn redistribution_mode(&self) -> RedistributionMode {
        match self.mode {
            ModeKind::Universal => RedistributionMode::Universal,
            ModeKind::Targeted => RedistributionMode::Targeted { p: self.p },
        }
    }

    /// Deterministic key=value listing, one line per field.
    pub fn echo(&self) -> String {
        fn opt_list(values: &Option<Vec<f64>>) -> String {
            match values {
                None => "-".to_string(),
                Some(v) => v
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            }
        }
        let mut s = String::new();
        s.push_str(&format!("experiment = {}\n", self.experiment));
        s.push_str(&format!("n = {}\n", self.n));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("replicas = {}\n", self.replicas));
        s.push_str(&format!(
            "rule = {}\n",
            match self.rule {
                ExchangeRule::Fair => "fair",
                ExchangeRule::Loser => "loser",
            }
        ));
        s.push_str(&format!("f = {}\n", self.f));
        s.push_str(&format!("lambda = {}\n", self.lambda));
        s.push_str(&format!(
            "mode = {}\n",
            match self.mode {
                ModeKind::Universal => "universal",
                ModeKind::Targeted => "targeted",
            }
        ));
        s.push_str(&format!("p = {}\n", self.p));
        s.push_str(&format!("max-steps = {}\n", self.max_steps));
        s.push_str(&format!("equil-window = {}\n", self.equil_window));
        s.push_str(&format!("equil-tol = {}\n", self.equil_tol));
        s.push_str(&format!("metric-stride = {}\n", self.metric_stride));
        s.push_str(&format!("zwa-threshold = {}\n", self.zwa_threshold));
        s.push_str(&format!("out = {}\n", self.out.display()));
        s.push_str(&format!(
            "format = {}\n",
            match self.format {
                OutputFormat::Csv => "csv",
                OutputFormat::Jsonl => "jsonl",
            }
        ));
        s.push_str(&format!("workers = {}\n", self.workers));
        s.push_str(&format!("paper-scale = {}\n", self.paper_scale));
        s.push_str(&format!("f-min = {}\n", self.f_min));
        s.push_str(&format!("f-max = {}\n", self.f_max));
        s.push_str(&format!("f-step = {}\n", self.f_step));
        s.push_str(&format!("lambda-min = {}\n", self.lambda_min));
        s.push_str(&format!("lambda-max = {}\n", self.lambda_max));
        s.push_str(&format!("lambda-step = {}\n", self.lambda_step));
        s.push_str(&format!(
            "lambda-values = {}\n",
            opt_list(&self.lambda_values)
        ));
        s.push_str(&format!("p-values = {}\n", opt_list(&self.p_values)));
        s
    }
}

/// Option bag before defaults: one slot per flag, filled by whichever of
/// flag, environment, or config file wins.
#[derive(Debug, Default, Clone)]
pub struct RawOptions {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub rule: Option<ExchangeRule>,
    pub f: Option<f64>,
    pub lambda: Option<f64>,
    pub mode: Option<ModeKind>,
    pub p: Option<f64>,
    pub max_steps: Option<usize>,
    pub equil_window: Option<usize>,
    pub equil_tol: Option<f64>,
    pub metric_stride: Option<usize>,
    pub zwa_threshold: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub workers: Option<usize>,
    pub paper_scale: Option<bool>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub f_step: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_step: Option<f64>,
    pub lambda_values: Option<Vec<f64>>,
    pub p_values: Option<Vec<f64>>,
}

/// Keys accepted in config files and as environment-variable suffixes.
const KEYS: &[&str] = &[
    "n",
    "seed",
    "replicas",
    "rule",
    "f",
    "lambda",
    "mode",
    "p",
    "max-steps",
    "equil-window",
    "equil-tol",
    "metric-stride",
    "zwa-threshold",
    "out",
    "format",
    "workers",
    "paper-scale",
    "f-min",
    "f-max",
    "f-step",
    "lambda-min",
    "lambda-max",
    "lambda-step",
    "lambda-values",
    "p-values",
];

pub fn env_key(flag: &str) -> String {
    format!("{ENV_PREFIX}{}", flag.replace('-', "_").to_uppercase())
}

fn parse_value<T: std::str::FromStr>(
    key: &'static str,
    value: &str,
    expected: &'static str,
) -> Result<T, ManifestError> {
    value.trim().parse().map_err(|_| ManifestError::Invalid {
        key,
        value: value.to_string(),
        expected,
    })
}

fn parse_rule(key: &'static str, value: &str) -> Result<ExchangeRule, ManifestError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "fair" => Ok(ExchangeRule::Fair),
        "loser" => Ok(ExchangeRule::Loser),
        _ => Err(ManifestError::Invalid {
            key,
            value: value.to_string(),
            expected: "fair|loser",
        }),
    }
}

fn parse_mode(key: &'static str, value: &str) -> Result<ModeKind, ManifestError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "universal" => Ok(ModeKind::Universal),
        "targeted" => Ok(ModeKind::Targeted),
        _ => Err(ManifestError::Invalid {
            key,
            value: value.to_string(),
            expected: "universal|targeted",
        }),
    }
}

fn parse_format(key: &'static str, value: &str) -> Result<OutputFormat, ManifestError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "csv" => Ok(OutputFormat::Csv),
        "jsonl" | "json-lines" => Ok(OutputFormat::Jsonl),
        _ => Err(ManifestError::Invalid {
            key,
            value: value.to_string(),
            expected: "csv|jsonl",
        }),
    }
}

fn parse_bool(key: &'static str, value: &str) -> Result<bool, ManifestError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ManifestError::Invalid {
            key,
            value: value.to_string(),
            expected: "true|false",
        }),
    }
}

pub fn parse_float_list(key: &'static str, value: &str) -> Result<Vec<f64>, ManifestError> {
    value
        .split(',')
        .map(|tok| parse_value::<f64>(key, tok, "comma-separated reals"))
        .collect()
}

impl RawOptions {
    /// Set one slot from its flag/config key; `Ok(false)` flags an unknown
    /// key.
    pub fn set_from_kv(&mut self, key: &str, value: &str) -> Result<bool, ManifestError> {
        match key {
            "n" => self.n = Some(parse_value("n", value, "positive integer")?),
            "seed" => self.seed = Some(parse_value("seed", value, "unsigned 64-bit integer")?),
            "replicas" => self.replicas = Some(parse_value("replicas", value, "positive integer")?),
            "rule" => self.rule = Some(parse_rule("rule", value)?),
            "f" => self.f = Some(parse_value("f", value, "real in [0, 0.5]")?),
            "lambda" => self.lambda = Some(parse_value("lambda", value, "real in [0, 1]")?),
            "mode" => self.mode = Some(parse_mode("mode", value)?),
            "p" => self.p = Some(parse_value("p", value, "real in (0, 1]")?),
            "max-steps" => {
                self.max_steps = Some(parse_value("max-steps", value, "positive integer")?)
            }
            "equil-window" => {
                self.equil_window = Some(parse_value("equil-window", value, "positive integer")?)
            }
            "equil-tol" => self.equil_tol = Some(parse_value("equil-tol", value, "positive real")?),
            "metric-stride" => {
                self.metric_stride = Some(parse_value("metric-stride", value, "positive integer")?)
            }
            "zwa-threshold" => {
                self.zwa_threshold = Some(parse_value("zwa-threshold", value, "positive real")?)
            }
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "format" => self.format = Some(parse_format("format", value)?),
            "workers" => {
                self.workers = Some(parse_value("workers", value, "non-negative integer")?)
            }
            "paper-scale" => self.paper_scale = Some(parse_bool("paper-scale", value)?),
            "f-min" => self.f_min = Some(parse_value("f-min", value, "real in [0, 0.5]")?),
            "f-max" => self.f_max = Some(parse_value("f-max", value, "real in [0, 0.5]")?),
            "f-step" => self.f_step = Some(parse_value("f-step", value, "positive real")?),
            "lambda-min" => {
                self.lambda_min = Some(parse_value("lambda-min", value, "real in [0, 1]")?)
            }
            "lambda-max" => {
                self.lambda_max = Some(parse_value("lambda-max", value, "real in [0, 1]")?)
            }
            "lambda-step" => {
                self.lambda_step = Some(parse_value("lambda-step", value, "positive real")?)
            }
            "lambda-values" => self.lambda_values = Some(parse_float_list("lambda-values", value)?),
            "p-values" => self.p_values = Some(parse_float_list("p-values", value)?),
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Fill any unset slot from the environment (`YARDSALE_<FLAG>`).
    pub fn fill_from_env(
        &mut self,
        lookup: &dyn Fn(&str) -> Option<String>,
    ) -> Result<(), ManifestError> {
        let mut layer = RawOptions::default();
        for key in KEYS {
            if let Some(value) = lookup(&env_key(key)) {
                layer.set_from_kv(key, &value)?;
            }
        }
        self.merge_missing_from(layer);
        Ok(())
    }

    /// Fill any unset slot from a flat `key = value` config file.
    pub fn fill_from_config(&mut self, path: &str, text: &str) -> Result<(), ManifestError> {
        let mut layer = RawOptions::default();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ManifestError::MalformedConfigLine {
                    path: path.to_string(),
                    line: lineno + 1,
                });
            };
            let key = key.trim();
            if !layer.set_from_kv(key, value)? {
                return Err(ManifestError::UnknownConfigKey {
                    path: path.to_string(),
                    key: key.to_string(),
                });
            }
        }
        self.merge_missing_from(layer);
        Ok(())
    }

    fn merge_missing_from(&mut self, layer: RawOptions) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if self.$field.is_none() { self.$field = layer.$field; })*
            };
        }
        take!(
            n,
            seed,
            replicas,
            rule,
            f,
            lambda,
            mode,
            p,
            max_steps,
            equil_window,
            equil_tol,
            metric_stride,
            zwa_threshold,
            out,
            format,
            workers,
            paper_scale,
            f_min,
            f_max,
            f_step,
            lambda_min,
            lambda_max,
            lambda_step,
            lambda_values,
            p_values
        );
    }

    /// Apply the paper-scale preset and built-in defaults, then validate.
    pub fn finalize(self, experiment: Experiment) -> Result<RunManifest, ManifestError> {
        let paper_scale = self.paper_scale.unwrap_or(false);
        let n = self.n.unwrap_or(if paper_scale {
            match experiment {
                Experiment::SingleRun => 100_000,
                _ => 10_000,
            }
        } else {
            1_000
        });
        let replicas = self
            .replicas
            .unwrap_or(if paper_scale { 1_000 } else { 100 });

        let manifest = RunManifest {
            experiment,
            n,
            seed: self.seed.unwrap_or(42),
            replicas,
            rule: self.rule.unwrap_or(ExchangeRule::Fair),
            f: self.f.unwrap_or(0.0),
            lambda: self.lambda.unwrap_or(0.0),
            mode: self.mode.unwrap_or(ModeKind::Universal),
            p: self.p.unwrap_or(0.1),
            max_steps: self.max_steps.unwrap_or(1_000_000),
            equil_window: self.equil_window.unwrap_or(1_000),
            equil_tol: self.equil_tol.unwrap_or(1e-3),
            metric_stride: self.metric_stride.unwrap_or(1),
            zwa_threshold: self.zwa_threshold.unwrap_or(1e-7),
            out: self.out.unwrap_or_else(|| PathBuf::from("results.csv")),
            format: self.format.unwrap_or(OutputFormat::Csv),
            workers: self.workers.unwrap_or(0),
            paper_scale,
            f_min: self.f_min.unwrap_or(0.0),
            f_max: self.f_max.unwrap_or(0.5),
            f_step: self.f_step.unwrap_or(0.01),
            lambda_min: self.lambda_min.unwrap_or(0.0),
            lambda_max: self.lambda_max.unwrap_or(1.0),
            lambda_step: self.lambda_step.unwrap_or(0.05),
            lambda_values: self.lambda_values,
            p_values: self.p_values,
        };
        manifest.validate()?;
        Ok(manifest)
    }
}

impl RunManifest {
    fn validate(&self) -> Result<(), ManifestError> {
        fn range(
            key: &'static str,
            value: f64,
            ok: bool,
            expected: &'static str,
        ) -> Result<(), ManifestError> {
            if ok {
                Ok(())
            } else {
                Err(ManifestError::OutOfRange {
                    key,
                    value,
                    expected,
                })
            }
        }

        range("n", self.n as f64, self.n >= 2, "at least 2")?;
        range(
            "replicas",
            self.replicas as f64,
            self.replicas >= 1,
            "at least 1",
        )?;
        range(
            "f",
            self.f,
            (0.0..=0.5).contains(&self.f),
            "within [0, 0.5]",
        )?;
        range(
            "lambda",
            self.lambda,
            (0.0..=1.0).contains(&self.lambda),
            "within [0, 1]",
        )?;
        range("p", self.p, self.p > 0.0 && self.p <= 1.0, "within (0, 1]")?;
        range(
            "max-steps",
            self.max_steps as f64,
            self.max_steps >= 2,
            "at least 2",
        )?;
        range(
            "equil-window",
            self.equil_window as f64,
            self.equil_window >= 1 && self.equil_window < self.max_steps,
            "within [1, max-steps)",
        )?;
        range(
            "equil-tol",
            self.equil_tol,
            self.equil_tol > 0.0,
            "positive",
        )?;
        range(
            "metric-stride",
            self.metric_stride as f64,
            self.metric_stride >= 1 && self.metric_stride <= self.equil_window,
            "within [1, equil-window]",
        )?;
        range(
            "zwa-threshold",
            self.zwa_threshold,
            self.zwa_threshold > 0.0,
            "positive",
        )?;
        range(
            "f-min",
            self.f_min,
            (0.0..=0.5).contains(&self.f_min),
            "within [0, 0.5]",
        )?;
        range(
            "f-max",
            self.f_max,
            (0.0..=0.5).contains(&self.f_max) && self.f_max >= self.f_min,
            "within [f-min, 0.5]",
        )?;
        range("f-step", self.f_step, self.f_step > 0.0, "positive")?;
        range(
            "lambda-min",
            self.lambda_min,
            (0.0..=1.0).contains(&self.lambda_min),
            "within [0, 1]",
        )?;
        range(
            "lambda-max",
            self.lambda_max,
            (0.0..=1.0).contains(&self.lambda_max) && self.lambda_max >= self.lambda_min,
            "within [lambda-min, 1]",
        )?;
        range(
            "lambda-step",
            self.lambda_step,
            self.lambda_step > 0.0,
            "positive",
        )?;
        if let Some(values) = &self.lambda_values {
            for &v in values {
                range(
                    "lambda-values",
                    v,
                    (0.0..=1.0).contains(&v),
                    "within [0, 1]",
                )?;
            }
        }
        if let Some(values) = &self.p_values {
            for &v in values {
                range("p-values", v, v > 0.0 && v <= 1.0, "within (0, 1]")?;
            }
        }
        Ok(())
    }

    /// Inclusive arithmetic grid for the f sweep.
    pub fn f_grid(&self) -> Result<Vec<f64>, ManifestError> {
        linear_grid("f-step", self.f_min, self.f_max, self.f_step)
    }

    /// λ grid: explicit values when given, else the inclusive min/max/step
    /// range.
    pub fn lambda_grid(&self) -> Result<Vec<f64>, ManifestError> {
        if let Some(values) = &self.lambda_values {
            if values.is_empty() {
                return Err(ManifestError::EmptyGrid {
                    key: "lambda-values",
                    detail: "no values given".to_string(),
                });
            }
            return Ok(values.clone());
        }
        linear_grid(
            "lambda-step",
            self.lambda_min,
            self.lambda_max,
            self.lambda_step,
        )
    }
}

fn linear_grid(
    key: &'static str,
    min: f64,
    max: f64,
    step: f64,
) -> Result<Vec<f64>, ManifestError> {
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    if count == 0 {
        return Err(ManifestError::EmptyGrid {
            key,
            detail: format!("min {min}, max {max}, step {step}"),
        });
    }
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

/// Resolve a manifest from pre-parsed flag options, the environment, and an
/// optional config file, with precedence flags > environment > config file >
/// defaults.
pub fn resolve_manifest(
    experiment: Experiment,
    mut from_flags: RawOptions,
    config: Option<(&str, &str)>,
    env_lookup: &dyn Fn(&str) -> Option<String>,
) -> Result<RunManifest, ManifestError> {
    from_flags.fill_from_env(env_lookup)?;
    if let Some((path, text)) = config {
        from_flags.fill_from_config(path, text)?;
    }
    from_flags.finalize(experiment)
}

/// Environment lookup over a fixed map, for tests.
pub fn env_from_map(map: HashMap<String, String>) -> impl Fn(&str) -> Option<String> {
    move |key: &str| map.get(key).cloned()
}
