//! Builds a [`RunConfig`] from defaults, an optional JSON file and flags, in
//! that order of precedence.

use std::path::Path;
use std::str::FromStr;

use gfe_core::config::ComboPolicy;
use gfe_core::optim::LossKind;
use gfe_core::preprocess::{BalanceMode, FitStatsOn};
use gfe_core::structnet::{Preset, XavierFans};
use gfe_core::train::BatchSize;
use gfe_core::RunConfig;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::{CommonArgs, DataArgs, ModelArgs, SyntheticArgs};
use crate::exit::{CliResult, Failure};

#[derive(Debug, Default)]
pub struct Overrides(Map<String, Value>);

impl Overrides {
    pub fn put(&mut self, key: &str, value: impl Serialize) {
        self.0.insert(key.to_string(), serde_json::to_value(value).expect("flag value serializes"));
    }

    fn opt(&mut self, key: &str, value: Option<impl Serialize>) {
        if let Some(v) = value {
            self.put(key, v);
        }
    }

    /// Parses with the core type first so bad values fail with its message.
    fn parsed<T>(&mut self, key: &str, value: Option<&String>) -> CliResult<()>
    where
        T: FromStr<Err = gfe_core::Error> + Serialize,
    {
        if let Some(text) = value {
            let v: T = text.parse().map_err(|e: gfe_core::Error| Failure::config(format!("{key}: {e}")))?;
            self.put(key, v);
        }
        Ok(())
    }

    pub fn common(&mut self, a: &CommonArgs) -> CliResult<()> {
        self.opt("out", a.out.as_ref());
        self.opt("marker", a.marker.as_ref());
        self.opt("user", a.user.as_ref());
        self.opt("seed", a.seed);
        for item in &a.set {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Failure::config(format!("--set expects KEY=VALUE, got {item:?}")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            self.0.insert(key.trim().to_string(), value);
        }
        Ok(())
    }

    pub fn data(&mut self, a: &DataArgs) {
        self.opt("data_root", a.data_root.as_ref());
        if a.synthetic {
            self.put("synthetic", true);
        }
        self.opt("jobs", a.jobs);
    }

    pub fn synthetic(&mut self, a: &SyntheticArgs) {
        self.opt("synthetic.positives", a.positives);
        self.opt("synthetic.negatives", a.negatives);
        self.opt("synthetic.regions", a.regions.as_ref());
        self.opt("synthetic.shift", a.shift);
        self.opt("synthetic.placeholder_fraction", a.placeholder_fraction);
    }

    /// `--multiclass` is left to the caller because bench takes a list.
    pub fn model(&mut self, a: &ModelArgs) -> CliResult<()> {
        self.parsed::<Preset>("preset", a.preset.as_ref())?;
        self.parsed::<LossKind>("loss.kind", a.loss.as_ref())?;
        self.opt("loss.reg_beta", a.reg_beta);
        self.opt("train.epochs", a.epochs);
        self.parsed::<BatchSize>("train.batch", a.batch.as_ref())?;
        self.parsed::<BalanceMode>("preprocess.balance", a.balance.as_ref())?;
        self.parsed::<FitStatsOn>("preprocess.fit_stats_on", a.fit_stats_on.as_ref())?;
        self.parsed::<XavierFans>("init.xavier_fans", a.xavier_fans.as_ref())?;
        if let Some(c) = &a.combos {
            ComboPolicy::from_str(c).map_err(|e| Failure::config(format!("multiclass.combos: {e}")))?;
            self.put("multiclass.combos", c);
        }
        Ok(())
    }
}

fn read_config_file(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    // a report carries its config snapshot under "config"
    let value = match (value.get("id"), value.get("config")) {
        (Some(_), Some(inner)) => inner.clone(),
        _ => value,
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(Failure::config(format!("{}: expected a JSON object", path.display()))),
    }
}

/// Layers `file` and `overrides` over `base`. Unknown keys are rejected.
pub fn build(base: RunConfig, file: Option<&Path>, overrides: Overrides) -> CliResult<RunConfig> {
    let Value::Object(mut map) = serde_json::to_value(&base).expect("config serializes") else {
        unreachable!("config serializes to an object")
    };
    if let Some(path) = file {
        map.extend(read_config_file(path)?);
    }
    map.extend(overrides.0);
    serde_json::from_value(Value::Object(map)).map_err(|e| Failure::config(format!("invalid configuration: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = std::env::temp_dir().join(format!("gfe-overlay-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("c.json");
        std::fs::write(&file, r#"{"train.epochs": 9, "seed": 3, "loss.kind": "mse"}"#).unwrap();
        let mut o = Overrides::default();
        o.put("seed", 5u64);
        let cfg = build(RunConfig::default(), Some(&file), o).unwrap();
        assert_eq!((cfg.epochs, cfg.seed, cfg.loss), (9, 5, LossKind::Mse));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut o = Overrides::default();
        o.0.insert("train.epoch".into(), Value::from(3));
        assert!(build(RunConfig::default(), None, o).is_err());
    }

    #[test]
    fn set_parses_json_or_string() {
        let mut o = Overrides::default();
        let args = CommonArgs {
            config: None,
            set: vec!["loss.reg_beta=0.01".into(), "synthetic.regions=mouth,nose".into()],
            out: None,
            marker: None,
            user: None,
            seed: None,
        };
        o.common(&args).unwrap();
        let cfg = build(RunConfig::default(), None, o).unwrap();
        assert_eq!(cfg.reg_beta, 0.01);
        assert_eq!(cfg.synthetic_regions, "mouth,nose");
    }
}
