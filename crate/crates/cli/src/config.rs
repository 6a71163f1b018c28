//! Experiment configuration: flat `key = value` lines under `[section]`
//! headers, `#` comments. Every field has a default; the defaults are the
//! Henyey–Greenstein scattering experiment (λ = 0.3, T = 10, g = 0.9).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use so3_decompound::decompound::{EstimatorConfig, Mode};
use so3_decompound::processes::{CompoundModel, JumpLaw, Sampling};
use so3_decompound::scattering::LayerModel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    /// 1-based line of the offending entry; 0 when not tied to a line.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub lambda: f64,
    pub horizon: f64,
    pub sigma2: f64,
    pub jump: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSection {
    pub cutoff: usize,
    pub smoothing: f64,
    pub mode: Mode,
    pub prior_bounds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub n: usize,
    pub seed: u64,
    pub replications: usize,
    pub sampling: Sampling,
    pub gs: Vec<f64>,
    pub ns: Vec<usize>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSection {
    pub thickness: f64,
    pub mean_free_path: f64,
    pub g: f64,
    pub delta_max: usize,
    pub mc_samples: usize,
    pub nmax: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub estimator: EstimatorSection,
    pub experiment: ExperimentSection,
    pub layer: LayerSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSection {
                lambda: 0.3,
                horizon: 10.0,
                sigma2: 0.0,
                jump: "hg:0.9".into(),
            },
            estimator: EstimatorSection {
                cutoff: 31,
                smoothing: 0.0,
                mode: Mode::ZonalScalar,
                prior_bounds: None,
            },
            experiment: ExperimentSection {
                n: 50_000,
                seed: 1,
                replications: 1,
                sampling: Sampling::Noisy,
                gs: vec![0.85, 0.9, 0.95, 0.99],
                ns: vec![500, 5_000, 50_000],
                output_dir: PathBuf::from("out"),
            },
            layer: LayerSection {
                thickness: 3.0,
                mean_free_path: 1.0,
                g: 0.9,
                delta_max: 400,
                mc_samples: 100_000,
                nmax: 80,
            },
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse()
        .map_err(|_| err(line, format!("cannot parse {key} = '{raw}'")))
}

fn parse_list<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<Vec<T>, ConfigError> {
    raw.split(',').map(|s| parse_value(line, key, s.trim())).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut section = String::new();
        let mut seen = BTreeMap::new();
        let mut step = None;
        let mut sampling_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                if !["model", "estimator", "experiment", "layer"].contains(&section.as_str()) {
                    return Err(err(line, format!("unknown section [{section}]")));
                }
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'key = value', found '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if section.is_empty() {
                return Err(err(line, format!("key '{key}' outside any section")));
            }
            if let Some(prev) = seen.insert(format!("{section}.{key}"), line) {
                return Err(err(line, format!("duplicate key '{key}' (first set on line {prev})")));
            }
            match (section.as_str(), key) {
                ("model", "lambda") => cfg.model.lambda = parse_value(line, key, value)?,
                ("model", "horizon") => cfg.model.horizon = parse_value(line, key, value)?,
                ("model", "sigma2") => cfg.model.sigma2 = parse_value(line, key, value)?,
                ("model", "jump") => {
                    JumpLaw::parse(value).map_err(|e| err(line, e.to_string()))?;
                    cfg.model.jump = value.to_string();
                }
                ("model", "g") => {
                    let g: f64 = parse_value(line, key, value)?;
                    cfg.model.jump = format!("hg:{g}");
                    JumpLaw::parse(&cfg.model.jump).map_err(|e| err(line, e.to_string()))?;
                }
                ("estimator", "cutoff") => cfg.estimator.cutoff = parse_value(line, key, value)?,
                ("estimator", "smoothing") => cfg.estimator.smoothing = parse_value(line, key, value)?,
                ("estimator", "mode") => {
                    cfg.estimator.mode = Mode::parse(value).map_err(|e| err(line, e.to_string()))?
                }
                ("estimator", "prior_bounds") => cfg.estimator.prior_bounds = Some(parse_list(line, key, value)?),
                ("experiment", "n") => cfg.experiment.n = parse_value(line, key, value)?,
                ("experiment", "seed") => cfg.experiment.seed = parse_value(line, key, value)?,
                ("experiment", "replications") => cfg.experiment.replications = parse_value(line, key, value)?,
                ("experiment", "sampling") => {
                    sampling_line = line;
                    cfg.experiment.sampling = match value {
                        "noisy" => Sampling::Noisy,
                        "interlaced" => Sampling::Interlaced { step: 0.0 },
                        other => return Err(err(line, format!("unknown sampling '{other}' (noisy | interlaced)"))),
                    }
                }
                ("experiment", "step") => step = Some((line, parse_value::<f64>(line, key, value)?)),
                ("experiment", "gs") => cfg.experiment.gs = parse_list(line, key, value)?,
                ("experiment", "ns") => cfg.experiment.ns = parse_list(line, key, value)?,
                ("experiment", "output_dir") => cfg.experiment.output_dir = PathBuf::from(value),
                ("layer", "thickness") => cfg.layer.thickness = parse_value(line, key, value)?,
                ("layer", "mean_free_path") => cfg.layer.mean_free_path = parse_value(line, key, value)?,
                ("layer", "g") => cfg.layer.g = parse_value(line, key, value)?,
                ("layer", "delta_max") => cfg.layer.delta_max = parse_value(line, key, value)?,
                ("layer", "mc_samples") => cfg.layer.mc_samples = parse_value(line, key, value)?,
                ("layer", "nmax") => cfg.layer.nmax = parse_value(line, key, value)?,
                _ => return Err(err(line, format!("unknown key '{key}' in [{section}]"))),
            }
        }
        if let Sampling::Interlaced { .. } = cfg.experiment.sampling {
            let (_, s) = step.ok_or_else(|| err(sampling_line, "interlaced sampling needs 'step'"))?;
            cfg.experiment.sampling = Sampling::Interlaced { step: s };
        } else if let Some((line, _)) = step {
            return Err(err(line, "'step' is only valid with sampling = interlaced"));
        }
        cfg.validate(&seen)?;
        Ok(cfg)
    }

    fn validate(&self, lines: &BTreeMap<String, usize>) -> Result<(), ConfigError> {
        let at = |k: &str| lines.get(k).copied().unwrap_or(0);
        self.compound_model(&self.model.jump).map_err(|e| {
            let key = ["model.lambda", "model.horizon", "model.sigma2"]
                .into_iter()
                .find(|k| lines.contains_key(*k))
                .unwrap_or("");
            err(at(key), e)
        })?;
        self.estimator_config().map_err(|e| {
            let key = ["estimator.prior_bounds", "estimator.smoothing", "estimator.cutoff"]
                .into_iter()
                .find(|k| lines.contains_key(*k))
                .unwrap_or("");
            err(at(key), e)
        })?;
        if self.experiment.replications == 0 {
            return Err(err(at("experiment.replications"), "replications must be ≥ 1"));
        }
        if let Sampling::Interlaced { step } = self.experiment.sampling {
            if step.is_nan() || step <= 0.0 {
                return Err(err(at("experiment.step"), format!("step must be > 0, got {step}")));
            }
        }
        for &g in &self.experiment.gs {
            JumpLaw::henyey_greenstein(g).map_err(|e| err(at("experiment.gs"), e.to_string()))?;
        }
        if self.experiment.gs.is_empty() || self.experiment.ns.is_empty() {
            return Err(err(0, "gs and ns must be non-empty"));
        }
        self.layer_model().map_err(|e| {
            err(
                at("layer.thickness").max(at("layer.mean_free_path")).max(at("layer.g")),
                e,
            )
        })?;
        if self.layer.nmax == 0 {
            return Err(err(at("layer.nmax"), "nmax must be ≥ 1"));
        }
        Ok(())
    }

    pub fn compound_model(&self, jump: &str) -> Result<CompoundModel, String> {
        let jump = JumpLaw::parse(jump).map_err(|e| e.to_string())?;
        CompoundModel::new(self.model.lambda, self.model.horizon, self.model.sigma2, jump).map_err(|e| e.to_string())
    }

    pub fn estimator_config(&self) -> Result<EstimatorConfig, String> {
        let e = &self.estimator;
        let mut cfg = EstimatorConfig::new(self.model.lambda, self.model.horizon, self.model.sigma2, e.cutoff)
            .map_err(|e| e.to_string())?
            .with_mode(e.mode)
            .with_smoothing(e.smoothing)
            .map_err(|e| e.to_string())?;
        if let Some(k) = &e.prior_bounds {
            let k = if k.len() == 1 { vec![k[0]; e.cutoff] } else { k.clone() };
            cfg = cfg.with_prior_bounds(k).map_err(|e| e.to_string())?;
        }
        Ok(cfg)
    }

    pub fn layer_model(&self) -> Result<LayerModel, String> {
        LayerModel::new(self.layer.thickness, self.layer.mean_free_path, self.layer.g).map_err(|e| e.to_string())
    }

    /// Canonical text form; parsing it gives back an equal configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let _ = writeln!(
            s,
            "[model]\nlambda = {}\nhorizon = {}\nsigma2 = {}\njump = {}",
            m.lambda, m.horizon, m.sigma2, m.jump
        );
        let e = &self.estimator;
        let _ = writeln!(
            s,
            "\n[estimator]\ncutoff = {}\nsmoothing = {}\nmode = {}",
            e.cutoff,
            e.smoothing,
            e.mode.as_str()
        );
        if let Some(k) = &e.prior_bounds {
            let _ = writeln!(s, "prior_bounds = {}", join(k));
        }
        let x = &self.experiment;
        let _ = writeln!(
            s,
            "\n[experiment]\nn = {}\nseed = {}\nreplications = {}",
            x.n, x.seed, x.replications
        );
        match x.sampling {
            Sampling::Noisy => {
                let _ = writeln!(s, "sampling = noisy");
            }
            Sampling::Interlaced { step } => {
                let _ = writeln!(s, "sampling = interlaced\nstep = {step}");
            }
        }
        let _ = writeln!(
            s,
            "gs = {}\nns = {}\noutput_dir = {}",
            join(&x.gs),
            join(&x.ns),
            x.output_dir.display()
        );
        let l = &self.layer;
        let _ = writeln!(
            s,
            "\n[layer]\nthickness = {}\nmean_free_path = {}\ng = {}\ndelta_max = {}\nmc_samples = {}\nnmax = {}",
            l.thickness, l.mean_free_path, l.g, l.delta_max, l.mc_samples, l.nmax
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(ExperimentConfig::parse("").unwrap(), cfg);
    }

    #[test]
    fn full_round_trip() {
        let text = "[model]\nlambda = 0.5\ng = 0.95  # forward\nsigma2=0.05\n[estimator]\nmode = general\nprior_bounds = 0.1\ncutoff = 4\n[experiment]\nsampling = interlaced\nstep = 0.25\nns = 10,20\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.model.jump, "hg:0.95");
        assert_eq!(cfg.experiment.sampling, Sampling::Interlaced { step: 0.25 });
        assert_eq!(cfg.experiment.ns, vec![10, 20]);
        assert_eq!(cfg.estimator_config().unwrap().prior_bounds, Some(vec![0.1; 4]));
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn errors_carry_lines() {
        let cases = [
            ("[model]\nlambda = abc\n", 2),
            ("lambda = 1\n", 1),
            ("[model]\n\n[bogus]\n", 3),
            ("[model]\nlambda = 1\nlambda = 2\n", 3),
            ("[model]\nfoo = 1\n", 2),
            ("[model]\nlambda = -1\n", 2),
            ("[model]\ng = 1.5\n", 2),
            ("[estimator]\nsmoothing = -2\n", 2),
            ("[estimator]\ncutoff = 3\nprior_bounds = 0.5,0.5\n", 3),
            ("[experiment]\nsampling = interlaced\n", 2),
            ("[experiment]\nstep = 0.1\n", 2),
            ("[experiment]\n\nreplications = 0\n", 3),
            ("[layer]\ng = 1\n", 2),
            ("[model]\njust words\n", 2),
        ];
        for (text, line) in cases {
            let e = ExperimentConfig::parse(text).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
        }
    }
}
