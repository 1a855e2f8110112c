//! Flat key-value run configuration: file + flag merging and the run
//! manifest that makes any invocation reproducible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use s2df_core::error::{Error, Result};
use s2df_core::loss::{LossWeights, SecondOrderTerm, DEFAULT_ALPHA, DEFAULT_K};
use s2df_core::sampler::SamplerConfig;
use s2df_core::train::TrainConfig;

/// Every key a config file or manifest may carry.
const KNOWN_KEYS: &[&str] = &[
    "input",
    "dim",
    "out",
    "checkpoint",
    "transform",
    "iterations",
    "lr0",
    "decay_factor",
    "decay_iters",
    "k",
    "alpha",
    "weight_dirichlet",
    "weight_neumann",
    "weight_ma",
    "weight_nonmanifold",
    "weights",
    "loss",
    "batch",
    "sigma",
    "hidden",
    "omega0",
    "seed",
    "deterministic",
    "checkpoint_every",
    "res",
    "iso",
    "format",
    "dump_field",
    "recon",
    "truth",
    "tau",
    "n_samples",
    "shape",
    "mode",
    "k_values",
    "threads",
];

/// Fully-resolved flat configuration: file keys overlaid by flags.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    map: BTreeMap<String, String>,
}

impl RunConfig {
    /// Loads `path` (a `key = value` file, or a `run.json` manifest when the
    /// extension is `.json`), then applies `overrides` on top; flags win.
    pub fn resolve(path: Option<&Path>, overrides: Vec<(&'static str, String)>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(p) = path {
            if p.extension().is_some_and(|e| e == "json") {
                cfg.load_manifest(p)?;
            } else {
                cfg.load_flat(p)?;
            }
        }
        for (key, value) in overrides {
            cfg.map.insert(key.to_string(), value);
        }
        Ok(cfg)
    }

    fn check_key(path: &Path, key: &str) -> Result<()> {
        if KNOWN_KEYS.contains(&key) {
            Ok(())
        } else {
            Err(Error::Parse {
                path: path.display().to_string(),
                detail: format!("unknown config key `{key}`"),
            })
        }
    }

    fn load_flat(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    detail: format!("line {}: expected `key = value`", lineno + 1),
                });
            };
            let key = key.trim();
            Self::check_key(path, key)?;
            self.map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(())
    }

    fn load_manifest(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let parsed: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                detail: e.to_string(),
            })?;
        let Some(config) = parsed.get("config").and_then(|c| c.as_object()) else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                detail: "manifest lacks a `config` object".into(),
            });
        };
        for (key, value) in config {
            Self::check_key(path, key)?;
            let Some(s) = value.as_str() else {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    detail: format!("config value for `{key}` is not a string"),
                });
            };
            self.map.insert(key.clone(), s.to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.map.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn get_string(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    /// A key whose absence is a configuration error.
    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::InvalidConfig(format!("missing required setting `{key}`")))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        let path = PathBuf::from(self.require(key)?);
        if !path.exists() {
            return Err(Error::InvalidConfig(format!(
                "{key} path {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, raw: &str) -> Result<T> {
        raw.parse().map_err(|_| {
            Error::InvalidConfig(format!("setting `{key}` has unreadable value `{raw}`"))
        })
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(raw) => self.parse(key, raw),
            None => Ok(default),
        }
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(raw) => self.parse(key, raw),
            None => Ok(default),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(raw) => self.parse(key, raw),
            None => Ok(default),
        }
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            Some(raw) => self.parse(key, raw),
            None => Ok(default),
        }
    }

    /// Comma-separated list; an empty value is an empty list.
    pub fn get_list<T: std::str::FromStr>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T: Clone,
    {
        match self.get(key) {
            Some(raw) if raw.trim().is_empty() => Ok(Vec::new()),
            Some(raw) => raw
                .split(',')
                .map(|part| self.parse(key, part.trim()))
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    /// Assembles the trainer configuration, folding in the loss variant,
    /// weight preset, and per-term overrides.
    pub fn train_config(&self, out: &Path) -> Result<TrainConfig> {
        let preset = self.get_string("weights", "open");
        let mut weights = LossWeights::preset(&preset)?;
        weights.dirichlet = self.get_f64("weight_dirichlet", weights.dirichlet)?;
        weights.neumann = self.get_f64("weight_neumann", weights.neumann)?;
        weights.ma = self.get_f64("weight_ma", weights.ma)?;
        weights.nonmanifold = self.get_f64("weight_nonmanifold", weights.nonmanifold)?;

        let second_order = match self.get_string("loss", "ma").as_str() {
            "ma" => SecondOrderTerm::MongeAmpere,
            "eikonal-prime" | "eikonal_prime" => SecondOrderTerm::EikonalPrime,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown loss variant `{other}` (expected `ma` or `eikonal-prime`)"
                )))
            }
        };

        let defaults = TrainConfig::default();
        let mut cfg = TrainConfig {
            iterations: self.get_u64("iterations", defaults.iterations)?,
            lr0: self.get_f64("lr0", defaults.lr0)?,
            decay_factor: self.get_f64("decay_factor", defaults.decay_factor)?,
            decay_iters: self.get_list("decay_iters", &defaults.decay_iters)?,
            k: self.get_f64("k", DEFAULT_K)?,
            alpha: self.get_f64("alpha", DEFAULT_ALPHA)?,
            weights,
            second_order,
            sampler: SamplerConfig {
                batch_size: self.get_usize("batch", defaults.sampler.batch_size)?,
                sigma: self.get_f64("sigma", defaults.sampler.sigma)?,
                seed: self.get_u64("seed", defaults.seed)?,
            },
            hidden: self.get_list("hidden", &defaults.hidden)?,
            omega0: self.get_f64("omega0", defaults.omega0)?,
            seed: self.get_u64("seed", defaults.seed)?,
            deterministic: self.get_bool("deterministic", defaults.deterministic)?,
            checkpoint_dir: Some(out.to_path_buf()),
            checkpoint_every: self.get_u64("checkpoint_every", defaults.checkpoint_every)?,
        };
        // A decay scheduled at or past the last iteration can never fire;
        // dropping such entries lets short runs reuse the default schedule.
        cfg.decay_iters.retain(|&it| it < cfg.iterations);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Echoes the trainer settings back into the map so the manifest carries
    /// the fully-resolved values rather than what the user happened to type.
    pub fn record_train_config(&mut self, cfg: &TrainConfig) {
        self.set("iterations", cfg.iterations.to_string());
        self.set("lr0", cfg.lr0.to_string());
        self.set("decay_factor", cfg.decay_factor.to_string());
        self.set("decay_iters", join(&cfg.decay_iters));
        self.set("k", cfg.k.to_string());
        self.set("alpha", cfg.alpha.to_string());
        self.set("weight_dirichlet", cfg.weights.dirichlet.to_string());
        self.set("weight_neumann", cfg.weights.neumann.to_string());
        self.set("weight_ma", cfg.weights.ma.to_string());
        self.set("weight_nonmanifold", cfg.weights.nonmanifold.to_string());
        self.set(
            "loss",
            match cfg.second_order {
                SecondOrderTerm::MongeAmpere => "ma".to_string(),
                SecondOrderTerm::EikonalPrime => "eikonal-prime".to_string(),
            },
        );
        self.set("batch", cfg.sampler.batch_size.to_string());
        self.set("sigma", cfg.sampler.sigma.to_string());
        self.set("hidden", join(&cfg.hidden));
        self.set("omega0", cfg.omega0.to_string());
        self.set("seed", cfg.seed.to_string());
        self.set("deterministic", cfg.deterministic.to_string());
        self.set("checkpoint_every", cfg.checkpoint_every.to_string());
        self.map.remove("weights");
    }

    /// Writes the `run.json` manifest: the command plus every resolved key.
    pub fn write_manifest(&self, path: &Path, command: &str) -> Result<()> {
        let manifest = serde_json::json!({
            "command": command,
            "config": self.map,
        });
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::InvalidConfig(format!("manifest serialization: {e}")))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "seed = 5\niterations = 100\n# comment\n\n").unwrap();
        let cfg = RunConfig::resolve(Some(&path), vec![("seed", "9".into())]).unwrap();
        assert_eq!(cfg.get("seed"), Some("9"));
        assert_eq!(cfg.get("iterations"), Some("100"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "iterations = 100\nbathc = 32\n").unwrap();
        let err = RunConfig::resolve(Some(&path), vec![]).unwrap_err();
        assert!(err.to_string().contains("bathc"), "{err}");
    }

    #[test]
    fn malformed_lines_are_rejected_with_the_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "iterations = 100\nnonsense\n").unwrap();
        let err = RunConfig::resolve(Some(&path), vec![]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn manifest_round_trips_through_resolve() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let mut cfg = RunConfig::default();
        cfg.set("seed", "3".into());
        cfg.set("iterations", "250".into());
        cfg.write_manifest(&path, "train").unwrap();
        let reread = RunConfig::resolve(Some(&path), vec![]).unwrap();
        assert_eq!(reread.get("seed"), Some("3"));
        assert_eq!(reread.get("iterations"), Some("250"));
    }

    #[test]
    fn train_config_applies_presets_variant_and_overrides() {
        let mut cfg = RunConfig::default();
        cfg.set("weights", "watertight".into());
        cfg.set("weight_neumann", "123.0".into());
        cfg.set("loss", "eikonal-prime".into());
        cfg.set("hidden", "16,16".into());
        cfg.set("decay_iters", "".into());
        cfg.set("iterations", "50".into());
        let out = PathBuf::from("/tmp/out");
        let tc = cfg.train_config(&out).unwrap();
        assert_eq!(tc.weights.ma, LossWeights::watertight_preset().ma);
        assert_eq!(tc.weights.neumann, 123.0);
        assert!(matches!(tc.second_order, SecondOrderTerm::EikonalPrime));
        assert_eq!(tc.hidden, vec![16, 16]);
        assert!(tc.decay_iters.is_empty());
        assert_eq!(tc.checkpoint_dir.as_deref(), Some(out.as_path()));
    }

    #[test]
    fn resolved_echo_drops_the_preset_shorthand() {
        let mut cfg = RunConfig::default();
        cfg.set("weights", "open".into());
        let tc = cfg.train_config(Path::new("/tmp/x")).unwrap();
        cfg.record_train_config(&tc);
        assert_eq!(cfg.get("weights"), None);
        assert_eq!(
            cfg.get("weight_dirichlet"),
            Some(tc.weights.dirichlet.to_string().as_str())
        );
    }

    #[test]
    fn decays_past_the_run_length_are_dropped() {
        let mut cfg = RunConfig::default();
        cfg.set("iterations", "500".into());
        let tc = cfg.train_config(Path::new("/tmp/x")).unwrap();
        assert!(tc.decay_iters.is_empty());
        cfg.set("iterations", "5000".into());
        let tc = cfg.train_config(Path::new("/tmp/x")).unwrap();
        assert_eq!(tc.decay_iters, vec![4500]);
    }

    #[test]
    fn invalid_loss_variant_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.set("loss", "hessian".into());
        assert!(cfg.train_config(Path::new("/tmp/x")).is_err());
    }
}
