//! Optional TOML configuration. Command-line flags override these values,
//! which override the built-in defaults.
//!
//! ```toml
//! rho = 0.5
//! smoothing = 1.0
//! max_len = 400
//! workers = 4
//!
//! [miner]
//! min_support = 5
//! max_window = 15
//! max_nodes = 5
//! classes = ["serial", "general"]
//! ```

use std::path::Path;

use minwin::miner::ClassSet;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub rho: Option<f64>,
    pub smoothing: Option<f64>,
    pub max_len: Option<usize>,
    pub state_cap: Option<usize>,
    pub workers: Option<usize>,
    pub miner: MinerSection,
}

#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MinerSection {
    pub min_support: Option<usize>,
    pub max_window: Option<usize>,
    pub max_nodes: Option<usize>,
    pub classes: Option<Vec<String>>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, String> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// `serial,parallel,general` (any subset, any order).
pub fn parse_classes<S: AsRef<str>>(names: &[S]) -> Result<ClassSet, String> {
    let mut set = ClassSet { serial: false, parallel: false, general: false };
    for n in names {
        match n.as_ref().trim() {
            "serial" => set.serial = true,
            "parallel" => set.parallel = true,
            "general" => set.general = true,
            other => return Err(format!("unknown episode class `{other}`")),
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let c: Config = toml::from_str(
            "rho = 0.25\nmax_len = 50\n[miner]\nmin_support = 3\nclasses = [\"serial\"]\n",
        )
        .unwrap();
        assert_eq!(c.rho, Some(0.25));
        assert_eq!(c.max_len, Some(50));
        assert_eq!(c.miner.min_support, Some(3));
        assert_eq!(c.miner.max_window, None);
        let set = parse_classes(c.miner.classes.as_deref().unwrap()).unwrap();
        assert!(set.serial && !set.parallel && !set.general);
    }

    #[test]
    fn rejects_unknown_keys_and_classes() {
        assert!(toml::from_str::<Config>("rhoo = 1").is_err());
        assert!(parse_classes(&["serial", "cyclic"]).is_err());
    }
}
