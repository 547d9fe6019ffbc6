//! Run configuration: a single JSON document with defaults for every field.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use critflow::flow::FlowConfig;
use critflow::spectrum::SpectrumResult;
use critflow::{Grading, ModelParams};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// λ given as a number or relative to the spectrum. Index 0 is λ₀, index k ≥ 1
/// is λ_k counted with multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Value(f64),
    /// Midpoint of `(λ_i, λ_j)`.
    Mid(usize, usize),
    /// `λ_i + x(λ_j − λ_i)`.
    Frac(usize, usize, f64),
    /// `x·λ_k`.
    Scale(usize, f64),
}

impl LambdaSpec {
    pub fn resolve(&self, spec: &SpectrumResult) -> Result<f64, CliError> {
        let at = |k: usize| -> Result<f64, CliError> {
            if k == 0 {
                Ok(spec.spectral_shift)
            } else {
                spec.lambda_counted(k).map_err(CliError::from)
            }
        };
        match *self {
            LambdaSpec::Value(x) => Ok(x),
            LambdaSpec::Mid(i, j) => Ok(0.5 * (at(i)? + at(j)?)),
            LambdaSpec::Frac(i, j, x) => {
                let a = at(i)?;
                Ok(a + x * (at(j)? - a))
            }
            LambdaSpec::Scale(k, x) => Ok(x * at(k)?),
        }
    }

    /// Largest eigenvalue index referenced.
    pub fn max_index(&self) -> usize {
        match *self {
            LambdaSpec::Value(_) => 0,
            LambdaSpec::Mid(i, j) | LambdaSpec::Frac(i, j, _) => i.max(j),
            LambdaSpec::Scale(k, _) => k,
        }
    }
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpec::Value(x) => write!(f, "{x}"),
            LambdaSpec::Mid(i, j) => write!(f, "mid({i},{j})"),
            LambdaSpec::Frac(i, j, x) => write!(f, "frac({i},{j},{x})"),
            LambdaSpec::Scale(k, x) => write!(f, "scale({k},{x})"),
        }
    }
}

impl FromStr for LambdaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(x) = s.parse::<f64>() {
            return if x.is_finite() {
                Ok(LambdaSpec::Value(x))
            } else {
                Err(format!("λ must be finite, got {s}"))
            };
        }
        let open = s
            .find('(')
            .filter(|_| s.ends_with(')'))
            .ok_or_else(|| grammar_error(s))?;
        let name = &s[..open];
        let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').map(str::trim).collect();
        let index = |a: &str| {
            a.parse::<usize>()
                .map_err(|_| format!("bad eigenvalue index `{a}` in `{s}`"))
        };
        let real = |a: &str| {
            a.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("bad number `{a}` in `{s}`"))
        };
        match (name, args.as_slice()) {
            ("mid", [i, j]) => Ok(LambdaSpec::Mid(index(i)?, index(j)?)),
            ("frac", [i, j, x]) => Ok(LambdaSpec::Frac(index(i)?, index(j)?, real(x)?)),
            ("scale", [k, x]) => Ok(LambdaSpec::Scale(index(k)?, real(x)?)),
            _ => Err(grammar_error(s)),
        }
    }
}

fn grammar_error(s: &str) -> String {
    format!("cannot parse λ `{s}`: expected a number, mid(i,j), frac(i,j,x) or scale(k,x)")
}

impl Serialize for LambdaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LambdaSpec::Value(x) => s.serialize_f64(*x),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(LambdaSpec::Value(x)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub grading: Grading,
    pub l_max: usize,
    pub k_per_mode: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 512,
            grading: Grading::Uniform,
            l_max: 2,
            k_per_mode: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleConfig {
    pub epsilon_list: Vec<f64>,
    /// Outer cutoff radius as a fraction of the ball radius.
    pub cutoff_outer: f64,
    /// Width of the starting bubble for `flow --from bubble`, as a fraction of the ball radius.
    pub start_epsilon: f64,
    /// Grid for the ε-sweep, which needs refinement at the origin.
    pub n: usize,
    pub grading: Grading,
}

impl Default for BubbleConfig {
    fn default() -> Self {
        Self {
            epsilon_list: vec![0.01, 0.0075, 0.005, 0.0035, 0.0025],
            cutoff_outer: 0.9,
            start_epsilon: 0.1,
            n: 2048,
            grading: Grading::OriginRefined { stretch: 10.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Sphere,
    Joined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub kind: SurfaceKind,
    pub n_t: usize,
    pub n_radial: usize,
    pub n_theta: usize,
    pub grading: Grading,
    /// Number of highest-energy samples to start flows from; 0 skips the harvest.
    pub top_k: usize,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            kind: SurfaceKind::Sphere,
            n_t: 9,
            n_radial: 768,
            n_theta: 256,
            grading: Grading::OriginRefined { stretch: 8.0 },
            top_k: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub grid: GridConfig,
    pub lambda: LambdaSpec,
    pub flow: FlowConfig,
    pub bubbles: BubbleConfig,
    pub surface: SurfaceConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::new(4, 0.5).expect("valid default model"),
            grid: GridConfig::default(),
            lambda: LambdaSpec::Mid(0, 1),
            flow: FlowConfig {
                step: 1.0,
                max_steps: 20000,
                ..FlowConfig::default()
            },
            bubbles: BubbleConfig::default(),
            surface: SurfaceConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Parses a JSON document, reporting the field path and position of errors.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path.is_empty() || path == "." {
                CliError::Config(inner.to_string())
            } else {
                CliError::Config(format!("field `{path}`: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.require_solver_dimension()?;
        self.flow.validate()?;
        if self.grid.n < 16 || self.bubbles.n < 16 || self.surface.n_radial < 16 {
            return Err(CliError::Config("grid sizes must be at least 16".into()));
        }
        if self.grid.k_per_mode == 0 {
            return Err(CliError::Config("grid.k_per_mode must be positive".into()));
        }
        if self.surface.n_theta < 8 || self.surface.n_t < 2 {
            return Err(CliError::Config(
                "surface needs n_theta >= 8 and n_t >= 2".into(),
            ));
        }
        if !(self.bubbles.cutoff_outer > 0.0 && self.bubbles.cutoff_outer <= 1.0) {
            return Err(CliError::Config(
                "bubbles.cutoff_outer must lie in (0, 1]".into(),
            ));
        }
        if !(self.bubbles.start_epsilon > 0.0)
            || self.bubbles.epsilon_list.iter().any(|&e| !(e > 0.0))
        {
            return Err(CliError::Config("bubble widths must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_grammar() {
        assert_eq!(
            "mid(0,1)".parse::<LambdaSpec>().unwrap(),
            LambdaSpec::Mid(0, 1)
        );
        assert_eq!(
            " frac(1, 2, 0.25) ".parse::<LambdaSpec>().unwrap(),
            LambdaSpec::Frac(1, 2, 0.25)
        );
        assert_eq!(
            "scale(1,1.01)".parse::<LambdaSpec>().unwrap(),
            LambdaSpec::Scale(1, 1.01)
        );
        assert_eq!("3.5".parse::<LambdaSpec>().unwrap(), LambdaSpec::Value(3.5));
        for bad in [
            "mid(0)",
            "frac(0,1)",
            "top(1,2)",
            "mid(a,1)",
            "scale(1,x)",
            "inf",
            "mid(0,1",
        ] {
            assert!(bad.parse::<LambdaSpec>().is_err(), "{bad}");
        }
        for spec in [
            LambdaSpec::Mid(0, 1),
            LambdaSpec::Frac(1, 2, 0.5),
            LambdaSpec::Scale(1, 1.01),
        ] {
            assert_eq!(spec.to_string().parse::<LambdaSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let err =
            RunConfig::from_json(r#"{"model": {"dimension": 4, "ball_radius": 1.2}}"#).unwrap_err();
        assert!(err.to_string().contains("ball_radius must be < 1"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::from_json(r#"{"lambda": "middle(0,1)"}"#).unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");
        let err = RunConfig::from_json("{\n  \"grid\": {\"n\": \"many\"}\n}").unwrap_err();
        assert!(
            err.to_string().contains("grid.n") && err.to_string().contains("line 2"),
            "{err}"
        );
        let err = RunConfig::from_json(r#"{"flow": {"step": -1.0}}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(RunConfig::from_json(r#"{"colour": 1}"#).is_err());
    }
}
