//! Model parameters from flags, environment and a key=value file.
//!
//! Precedence is flags, then `AMSFLUID_*` variables, then the file named by
//! `--config` (or `AMSFLUID_CONFIG`).  At each level the drain rate may be
//! given as `c` or as `gamma`, not both.

use std::fs;
use std::path::{Path, PathBuf};

use amsfluid::model::{DerivedParams, ModelParams};
use clap::Args;

use crate::CliError;

pub const ENV_PREFIX: &str = "AMSFLUID_";

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Number of sources
    #[arg(long)]
    pub n: Option<usize>,
    /// Off-to-on rate of a source (on-to-off rate is 1)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Drain rate of the buffer
    #[arg(long, conflicts_with = "gamma")]
    pub c: Option<f64>,
    /// Drain rate per source, c/N
    #[arg(long)]
    pub gamma: Option<f64>,
    /// key=value parameter file (keys n, lambda, c, gamma; # starts a comment)
    #[arg(long, alias = "params-from-file")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Drain {
    C(f64),
    Gamma(f64),
}

#[derive(Debug, Default, Clone, Copy, PartialEq)]
struct Level {
    n: Option<usize>,
    lambda: Option<f64>,
    drain: Option<Drain>,
}

impl Level {
    fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), CliError> {
        let bad = |what: &str| CliError::Usage(format!("{origin}: cannot parse {what} from '{value}'"));
        let real = |what: &str| value.parse::<f64>().map_err(|_| bad(what));
        match key.to_ascii_lowercase().as_str() {
            "n" => self.n = Some(value.parse().map_err(|_| bad("n"))?),
            "lambda" => self.lambda = Some(real("lambda")?),
            "c" | "gamma" => {
                if self.drain.is_some() {
                    return Err(CliError::Usage(format!("{origin}: give c or gamma, not both")));
                }
                let v = real(key)?;
                self.drain = Some(if key.eq_ignore_ascii_case("c") { Drain::C(v) } else { Drain::Gamma(v) });
            }
            other => return Err(CliError::Usage(format!("{origin}: unknown key '{other}'"))),
        }
        Ok(())
    }

    fn from_file(path: &Path) -> Result<Level, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut level = Level::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = format!("{}:{}", path.display(), i + 1);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}: expected key=value")))?;
            level.set(k.trim(), v.trim(), &origin)?;
        }
        Ok(level)
    }

    fn from_env() -> Result<Level, CliError> {
        let mut level = Level::default();
        for key in ["n", "lambda", "c", "gamma"] {
            let var = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
            if let Ok(v) = std::env::var(&var) {
                level.set(key, v.trim(), &var)?;
            }
        }
        Ok(level)
    }

    fn or(self, lower: Level) -> Level {
        Level { n: self.n.or(lower.n), lambda: self.lambda.or(lower.lambda), drain: self.drain.or(lower.drain) }
    }
}

impl ParamArgs {
    /// Merges the three sources and validates the model.
    pub fn resolve(&self) -> Result<DerivedParams, CliError> {
        let flags = Level {
            n: self.n,
            lambda: self.lambda,
            drain: self.c.map(Drain::C).or(self.gamma.map(Drain::Gamma)),
        };
        let config = self.config.clone().or_else(|| std::env::var_os(format!("{ENV_PREFIX}CONFIG")).map(PathBuf::from));
        let file = match config {
            Some(path) => Level::from_file(&path)?,
            None => Level::default(),
        };
        let merged = flags.or(Level::from_env()?).or(file);
        let n = merged.n.ok_or_else(|| CliError::Usage("missing --n".into()))?;
        let lambda = merged.lambda.ok_or_else(|| CliError::Usage("missing --lambda".into()))?;
        let raw = match merged.drain {
            Some(Drain::C(c)) => ModelParams::new(n, lambda, c),
            Some(Drain::Gamma(g)) => ModelParams::from_gamma(n, lambda, g),
            None => return Err(CliError::Usage("missing --c or --gamma".into())),
        };
        raw.validated().map_err(CliError::Numeric)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing_and_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.conf");
        fs::write(&path, "# reference set\nn = 20\nlambda=0.0122448  # rate\n\ngamma=0.37987897\n").unwrap();
        let file = Level::from_file(&path).unwrap();
        assert_eq!(file.n, Some(20));
        assert_eq!(file.drain, Some(Drain::Gamma(0.37987897)));
        let flags = Level { n: Some(10), lambda: None, drain: Some(Drain::C(3.5)) };
        let m = flags.or(file);
        assert_eq!((m.n, m.lambda, m.drain), (Some(10), Some(0.0122448), Some(Drain::C(3.5))));
    }

    #[test]
    fn file_errors_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        for body in ["n=20\nbogus=1\n", "n=twenty\n", "c=7.5\ngamma=0.3\n", "n 20\n"] {
            let path = dir.path().join("bad.conf");
            fs::write(&path, body).unwrap();
            assert!(matches!(Level::from_file(&path), Err(CliError::Usage(_))), "{body}");
        }
    }
}
