//! Flat `key = value` run configuration layered under command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::ArgMatches;

use crate::exit::{Failure, USAGE};

/// Keys accepted in a config file; each mirrors the long flag of the same name.
pub const KEYS: &[&str] = &[
    "data",
    "out",
    "seed",
    "jobs",
    "model",
    "epochs",
    "lr",
    "batch-size",
    "state-size",
    "frames",
    "hand-frames",
    "patch",
    "patch-out",
    "layers",
    "l2-beta",
    "dropout-keep",
    "clip-norm",
    "classes",
    "subjects",
    "samples-per-class",
    "min-frames",
    "max-frames",
    "noise-sigma",
    "twin-pairs",
    "relation-pairs",
    "hands",
    "protocol",
    "subject",
    "fractions",
    "checkpoint",
    "stream",
    "velocity-threshold",
    "smoothing-window",
    "min-segment-len",
    "merge-gap",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str, origin: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::new(USAGE, format!("{}:{}: expected key = value", origin.display(), n + 1)))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Failure::new(USAGE, format!("{}:{}: unknown key {key:?}", origin.display(), n + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Resolves settings: explicit flag, then config file, then flag default.
pub struct Settings<'a> {
    matches: &'a ArgMatches,
    file: BTreeMap<String, String>,
}

impl<'a> Settings<'a> {
    pub fn new(matches: &'a ArgMatches) -> Result<Self, Failure> {
        let file = match matches.get_one::<std::path::PathBuf>("config") {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Failure::new(USAGE, format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text, p)?
            }
            None => BTreeMap::new(),
        };
        Ok(Settings { matches, file })
    }

    fn id(key: &str) -> String {
        key.replace('-', "_")
    }

    fn has_arg(&self, key: &str) -> bool {
        self.matches.ids().any(|i| i.as_str() == Self::id(key))
    }

    /// Value set on the command line or in the config file.
    pub fn explicit<T>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T: FromStr + Clone + Send + Sync + 'static,
        T::Err: std::fmt::Display,
    {
        let id = Self::id(key);
        if self.has_arg(key) && self.matches.value_source(&id) == Some(ValueSource::CommandLine) {
            return Ok(self.matches.get_one::<T>(&id).cloned());
        }
        match self.file.get(key) {
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Failure::new(USAGE, format!("config key {key}: cannot parse {v:?}: {e}"))),
            None => Ok(None),
        }
    }

    /// Explicit value, else the flag's default.
    pub fn value<T>(&self, key: &str) -> Result<T, Failure>
    where
        T: FromStr + Clone + Send + Sync + 'static,
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.explicit(key)? {
            return Ok(v);
        }
        self.matches
            .get_one::<T>(&Self::id(key))
            .cloned()
            .ok_or_else(|| Failure::new(USAGE, format!("missing required setting --{key}")))
    }

    /// All values of a repeatable flag, else a comma-separated config entry.
    pub fn list<T>(&self, key: &str) -> Result<Vec<T>, Failure>
    where
        T: FromStr + Clone + Send + Sync + 'static,
        T::Err: std::fmt::Display,
    {
        let id = Self::id(key);
        if self.has_arg(key) && self.matches.value_source(&id) == Some(ValueSource::CommandLine) {
            return Ok(self.matches.get_many::<T>(&id).map(|v| v.cloned().collect()).unwrap_or_default());
        }
        match self.file.get(key) {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<T>().map_err(|e| Failure::new(USAGE, format!("config key {key}: cannot parse {s:?}: {e}"))))
                .collect(),
            None => Ok(self.matches.get_many::<T>(&id).map(|v| v.cloned().collect()).unwrap_or_default()),
        }
    }
}

/// Parses `"0-1,2-3"` into class pairs.
pub fn parse_pairs(s: &str) -> Result<Vec<(usize, usize)>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let bad = || Failure::new(USAGE, format!("class pair {p:?} is not of the form a-b"));
            let (a, b) = p.split_once('-').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_unknown_keys() {
        let p = Path::new("run.cfg");
        let m = parse_config("# run\nepochs = 3\nbatch_size=8  # small\n\n", p).unwrap();
        assert_eq!(m["epochs"], "3");
        assert_eq!(m["batch-size"], "8");
        assert!(parse_config("bogus = 1", p).is_err());
        assert!(parse_config("epochs", p).is_err());
    }

    #[test]
    fn pairs() {
        assert_eq!(parse_pairs("0-1, 4-5").unwrap(), vec![(0, 1), (4, 5)]);
        assert_eq!(parse_pairs("").unwrap(), vec![]);
        assert!(parse_pairs("0:1").is_err());
    }
}
