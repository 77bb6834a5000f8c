//! Run configuration: a JSON document checked key by key so that every
//! schema violation names its JSON pointer.

use std::path::PathBuf;

use fracwave_core::dynamics::MassConvention;
use fracwave_core::{PotentialSpec, Preset};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

pub const DEFAULT_ALPHA: f64 = 0.9;

/// Where the potential came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialSource {
    Preset(String),
    Coeffs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    pub source: PotentialSource,
    /// Coefficients `a_0..a_m`, already tuned for presets.
    pub coeffs: Vec<f64>,
}

impl PotentialConfig {
    pub fn preset(p: Preset, alpha: f64) -> Self {
        Self {
            source: PotentialSource::Preset(p.name().to_string()),
            coeffs: p.spec(alpha).coeffs().to_vec(),
        }
    }

    pub fn degree(&self) -> usize {
        2 * (self.coeffs.len() - 1)
    }

    pub fn spec(&self) -> Result<PotentialSpec, CliError> {
        Ok(PotentialSpec::new(self.coeffs.clone())?)
    }

    /// `preset:NAME`, a bare preset name, or `coeffs:a0,a1,...`.
    pub fn parse_flag(s: &str, alpha: f64) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Config {
            pointer: "/potential".into(),
            message: m,
        };
        if let Some(list) = s.strip_prefix("coeffs:") {
            let coeffs = list
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("bad coefficient list '{list}': {e}")))?;
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(bad(format!("bad coefficient list '{list}'")));
            }
            return Ok(Self {
                source: PotentialSource::Coeffs,
                coeffs,
            });
        }
        let name = s.strip_prefix("preset:").unwrap_or(s);
        let p: Preset = name.parse().map_err(|e: fracwave_core::Error| bad(e.to_string()))?;
        Ok(Self::preset(p, alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSettings {
    pub samples: usize,
    pub ess_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsSettings {
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
    /// Sobolev index of the convergence norm; `None` picks `α - 1 - 0.05`.
    pub sigma: Option<f64>,
    pub mass_convention: MassConvention,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub potential: PotentialConfig,
    pub n_ladder: Vec<usize>,
    pub seeds: Vec<u64>,
    pub mc: McSettings,
    pub dynamics: DynamicsSettings,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            potential: PotentialConfig::preset(Preset::TunedQuartic, DEFAULT_ALPHA),
            n_ladder: vec![8, 16, 32, 64],
            seeds: vec![1],
            mc: McSettings {
                samples: 10_000,
                ess_min: 0.01,
            },
            dynamics: DynamicsSettings {
                dt: 1e-3,
                t_final: 1.0,
                stride: 10,
                sigma: None,
                mass_convention: MassConvention::Shifted,
            },
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    /// Canonical JSON form. Preset potentials are written out as their
    /// tuned coefficients so that the document re-parses to the same run.
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "alpha": self.alpha,
            "potential": {
                "degree": self.potential.degree(),
                "coeffs": self.potential.coeffs,
            },
            "n_ladder": self.n_ladder,
            "seeds": self.seeds,
            "mc": self.mc,
            "dynamics": self.dynamics,
            "output_dir": self.output_dir,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let root = object(v, "")?;
        check_keys(
            root,
            "",
            &["alpha", "potential", "n_ladder", "seeds", "mc", "dynamics", "output_dir"],
        )?;
        if let Some(a) = root.get("alpha") {
            cfg.alpha = number(a, "/alpha")?;
        }
        check_alpha(cfg.alpha, "/alpha")?;
        cfg.potential = match root.get("potential") {
            Some(p) => potential(p, cfg.alpha)?,
            None => PotentialConfig::preset(Preset::TunedQuartic, cfg.alpha),
        };
        if let Some(l) = root.get("n_ladder") {
            cfg.n_ladder = positive_list(l, "/n_ladder")?;
        }
        if let Some(s) = root.get("seeds") {
            let arr = array(s, "/seeds")?;
            if arr.is_empty() {
                return Err(schema("/seeds", "needs at least one seed"));
            }
            cfg.seeds = arr
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    x.as_u64()
                        .ok_or_else(|| schema(&format!("/seeds/{i}"), "expected a non-negative integer"))
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(mc) = root.get("mc") {
            let m = object(mc, "/mc")?;
            check_keys(m, "/mc", &["samples", "ess_min"])?;
            if let Some(s) = m.get("samples") {
                cfg.mc.samples = positive(s, "/mc/samples")?;
            }
            if let Some(e) = m.get("ess_min") {
                let e_val = number(e, "/mc/ess_min")?;
                if !(0.0..=1.0).contains(&e_val) {
                    return Err(schema("/mc/ess_min", "expected a fraction in [0, 1]"));
                }
                cfg.mc.ess_min = e_val;
            }
        }
        if let Some(d) = root.get("dynamics") {
            let m = object(d, "/dynamics")?;
            check_keys(m, "/dynamics", &["dt", "t_final", "stride", "sigma", "mass_convention"])?;
            let dy = &mut cfg.dynamics;
            if let Some(x) = m.get("dt") {
                dy.dt = positive_number(x, "/dynamics/dt")?;
            }
            if let Some(x) = m.get("t_final") {
                dy.t_final = positive_number(x, "/dynamics/t_final")?;
            }
            if let Some(x) = m.get("stride") {
                dy.stride = positive(x, "/dynamics/stride")?;
            }
            if let Some(x) = m.get("sigma") {
                dy.sigma = if x.is_null() { None } else { Some(number(x, "/dynamics/sigma")?) };
            }
            if let Some(x) = m.get("mass_convention") {
                dy.mass_convention = match x.as_str() {
                    Some("shifted") => MassConvention::Shifted,
                    Some("unshifted") => MassConvention::Unshifted,
                    _ => {
                        return Err(schema(
                            "/dynamics/mass_convention",
                            "expected \"shifted\" or \"unshifted\"",
                        ))
                    }
                };
            }
        }
        if let Some(o) = root.get("output_dir") {
            cfg.output_dir = o
                .as_str()
                .map(PathBuf::from)
                .ok_or_else(|| schema("/output_dir", "expected a string"))?;
        }
        Ok(cfg)
    }
}

pub fn check_alpha(alpha: f64, pointer: &str) -> Result<(), CliError> {
    if alpha > 0.5 && alpha < 1.0 {
        Ok(())
    } else {
        Err(schema(pointer, &format!("alpha = {alpha} is outside (1/2, 1)")))
    }
}

fn potential(v: &Value, alpha: f64) -> Result<PotentialConfig, CliError> {
    let m = object(v, "/potential")?;
    check_keys(m, "/potential", &["degree", "coeffs", "preset"])?;
    match (m.get("preset"), m.get("coeffs")) {
        (Some(_), Some(_)) => Err(schema("/potential", "give either preset or coeffs, not both")),
        (None, None) => Err(schema("/potential", "needs preset or coeffs")),
        (Some(p), None) => {
            let name = p
                .as_str()
                .ok_or_else(|| schema("/potential/preset", "expected a string"))?;
            let preset: Preset = name
                .parse()
                .map_err(|e: fracwave_core::Error| schema("/potential/preset", &e.to_string()))?;
            let cfg = PotentialConfig::preset(preset, alpha);
            if let Some(d) = m.get("degree") {
                let d = positive(d, "/potential/degree")?;
                if d != cfg.degree() {
                    return Err(schema(
                        "/potential/degree",
                        &format!("preset {name} has degree {}", cfg.degree()),
                    ));
                }
            }
            Ok(cfg)
        }
        (None, Some(c)) => {
            let arr = array(c, "/potential/coeffs")?;
            if arr.is_empty() {
                return Err(schema("/potential/coeffs", "needs at least one coefficient"));
            }
            let coeffs = arr
                .iter()
                .enumerate()
                .map(|(i, x)| number(x, &format!("/potential/coeffs/{i}")))
                .collect::<Result<Vec<_>, _>>()?;
            let degree = match m.get("degree") {
                Some(d) => positive(d, "/potential/degree")?,
                None => 2 * (coeffs.len() - 1),
            };
            PotentialSpec::with_degree(degree, coeffs.clone())
                .map_err(|e| schema("/potential/degree", &e.to_string()))?;
            Ok(PotentialConfig {
                source: PotentialSource::Coeffs,
                coeffs,
            })
        }
    }
}

fn schema(pointer: &str, message: &str) -> CliError {
    CliError::Config {
        pointer: if pointer.is_empty() { "/".into() } else { pointer.into() },
        message: message.into(),
    }
}

fn object<'a>(v: &'a Value, pointer: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object().ok_or_else(|| schema(pointer, "expected an object"))
}

fn array<'a>(v: &'a Value, pointer: &str) -> Result<&'a Vec<Value>, CliError> {
    v.as_array().ok_or_else(|| schema(pointer, "expected an array"))
}

fn check_keys(m: &Map<String, Value>, pointer: &str, allowed: &[&str]) -> Result<(), CliError> {
    match m.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(&format!("{pointer}/{k}"), "unknown key")),
        None => Ok(()),
    }
}

fn number(v: &Value, pointer: &str) -> Result<f64, CliError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| schema(pointer, "expected a number"))
}

fn positive_number(v: &Value, pointer: &str) -> Result<f64, CliError> {
    let x = number(v, pointer)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(schema(pointer, "expected a positive number"))
    }
}

fn positive(v: &Value, pointer: &str) -> Result<usize, CliError> {
    v.as_u64()
        .filter(|x| *x > 0)
        .map(|x| x as usize)
        .ok_or_else(|| schema(pointer, "expected a positive integer"))
}

fn positive_list(v: &Value, pointer: &str) -> Result<Vec<usize>, CliError> {
    let arr = array(v, pointer)?;
    if arr.is_empty() {
        return Err(schema(pointer, "needs at least one entry"));
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| positive(x, &format!("{pointer}/{i}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn pointer_of(v: Value) -> String {
        match RunConfig::from_json(&v) {
            Err(CliError::Config { pointer, .. }) => pointer,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn pointers_name_the_offending_key() {
        assert_eq!(pointer_of(json!({"mc": {"samples": -3}})), "/mc/samples");
        assert_eq!(pointer_of(json!({"n_ladder": [8, "x"]})), "/n_ladder/1");
        assert_eq!(pointer_of(json!({"dynamics": {"bogus": 1}})), "/dynamics/bogus");
        assert_eq!(pointer_of(json!({"potential": {"coeffs": [0, 0, "a"]}})), "/potential/coeffs/2");
        assert_eq!(pointer_of(json!({"alpha": 1.2})), "/alpha");
        assert_eq!(pointer_of(json!([1])), "/");
    }

    #[test]
    fn canonical_form_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.potential = PotentialConfig::preset(Preset::TunedSextic, 0.9);
        cfg.dynamics.sigma = Some(-0.2);
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back.potential.coeffs, cfg.potential.coeffs);
        assert_eq!(back.dynamics, cfg.dynamics);
        assert_eq!(back.n_ladder, cfg.n_ladder);
    }

    #[test]
    fn flag_forms() {
        let p = PotentialConfig::parse_flag("preset:quartic", 0.9).unwrap();
        assert_eq!(p.source, PotentialSource::Preset("tuned-quartic".into()));
        let c = PotentialConfig::parse_flag("coeffs:0,0,1", 0.9).unwrap();
        assert_eq!(c.coeffs, vec![0.0, 0.0, 1.0]);
        assert!(PotentialConfig::parse_flag("preset:nope", 0.9).is_err());
    }
}
