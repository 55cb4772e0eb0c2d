//! Flat `key = value` run configuration. Command-line flags override file
//! values, and every resolved value is echoed so a run can be repeated from
//! the echo alone.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys accepted in a config file, across all commands.
pub const KNOWN_KEYS: &[&str] = &[
    "command",
    "alpha",
    "lambda",
    "gamma",
    "gamma1",
    "gamma2",
    "eta",
    "seed",
    "out",
    "jobs",
    "alpha_min",
    "alpha_max",
    "alpha_step",
    "lambda_min",
    "lambda_max",
    "lambda_step",
    "t_final",
    "dt",
    "trajectories",
    "record_every",
    "unravelling",
    "scheme",
    "initial",
    "write_trajectories",
    "state",
    "n_theta",
    "n_phi",
    "grid_step",
    "ratios",
    "n_fock",
    "norm_tol",
    "experimental_mapping",
];

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected key = value",
                n + 1
            )));
        };
        let key = normalize(k);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key '{key}'",
                n + 1
            )));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!(
                "config line {}: duplicate key '{key}'",
                n + 1
            )));
        }
    }
    Ok(out)
}

/// Values resolved so far, in key order, for the config echo.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(config: Option<&Path>) -> Result<Self, CliError> {
        let file = match config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                parse(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            ..Default::default()
        })
    }

    /// Flag, then file, then `default`. Missing value and no default is a
    /// usage error.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = if let Some(v) = flag {
            v
        } else if let Some(raw) = self.file.get(key) {
            raw.parse::<T>()
                .map_err(|e| CliError::Usage(format!("config key '{key}' = '{raw}': {e}")))?
        } else if let Some(d) = default {
            d
        } else {
            return Err(CliError::Usage(format!("missing value for '{key}'")));
        };
        self.echo.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Flag, then file, else `None`. Only a present value is echoed.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        if flag.is_none() && !self.file.contains_key(key) {
            return Ok(None);
        }
        self.get(key, flag, None).map(Some)
    }

    /// Raw value from the config file.
    pub fn file_value(&self, key: &str) -> Option<&str> {
        self.file.get(key).map(String::as_str)
    }

    pub fn record(&mut self, key: &str, value: impl Display) {
        self.echo.insert(key.to_string(), value.to_string());
    }

    /// The echo in config-file syntax.
    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(cmd) = self.echo.get("command") {
            s.push_str(&format!("command = {cmd}\n"));
        }
        for (k, v) in self.echo.iter().filter(|(k, _)| *k != "command") {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

/// Comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct NumList(pub Vec<f64>);

impl FromStr for NumList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(NumList)
    }
}

impl Display for NumList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}
