use std::path::{Path, PathBuf};

use super::pipeline::SolveSettings;
use crate::error::{Error, Result};
use crate::hodge::HodgeDesign;
use crate::stokes::LoadStrategy;

pub const CONFIG_KEYS: [&str; 7] = ["design", "beta", "load", "tol", "maxit", "seed", "output"];

/// Settings read from a `key = value` file. Absent keys stay `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub design: Option<HodgeDesign>,
    pub beta: Option<f64>,
    pub load: Option<LoadStrategy>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    /// `origin` only labels errors.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                location: format!("line {}", i + 1),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let bad = |what: &str| err(format!("invalid {what} '{value}'"));
            match key {
                "design" => cfg.design = Some(value.parse().map_err(|_| bad("design"))?),
                "beta" => {
                    let b: f64 = value.parse().map_err(|_| bad("beta"))?;
                    if !(b > 0.0 && b.is_finite()) {
                        return Err(bad("beta"));
                    }
                    cfg.beta = Some(b);
                }
                "load" => cfg.load = Some(value.parse().map_err(|_| bad("load strategy"))?),
                "tol" => {
                    let t: f64 = value.parse().map_err(|_| bad("tolerance"))?;
                    if !(t > 0.0) {
                        return Err(bad("tolerance"));
                    }
                    cfg.tol = Some(t);
                }
                "maxit" => cfg.maxit = Some(value.parse().map_err(|_| bad("maxit"))?),
                "seed" => cfg.seed = Some(value.parse().map_err(|_| bad("seed"))?),
                "output" => cfg.output = Some(PathBuf::from(value)),
                other => {
                    return Err(err(format!(
                        "unknown key '{other}' (known: {})",
                        CONFIG_KEYS.join(", ")
                    )))
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Overrides the matching fields of `settings`.
    pub fn apply(&self, settings: &mut SolveSettings) {
        if let Some(d) = self.design {
            settings.design = d;
        }
        if let Some(b) = self.beta {
            settings.beta = b;
        }
        if let Some(l) = self.load {
            settings.load = l;
        }
        if let Some(t) = self.tol {
            settings.tol = t;
        }
        if let Some(m) = self.maxit {
            settings.maxit = m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# run\ndesign = diagonal\nbeta=2.5\nload = raw\ntol = 1e-9 # tight\nmaxit = 50\nseed = 7\noutput = out/dir\n";
        let cfg = RunConfig::parse(text, Path::new("c.cfg")).unwrap();
        assert_eq!(cfg.design, Some(HodgeDesign::Diagonal));
        assert_eq!(cfg.beta, Some(2.5));
        assert_eq!(cfg.load, Some(LoadStrategy::Raw));
        assert_eq!(cfg.tol, Some(1e-9));
        assert_eq!(cfg.maxit, Some(50));
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.output, Some(PathBuf::from("out/dir")));
        let mut s = SolveSettings::default();
        cfg.apply(&mut s);
        assert_eq!((s.design, s.beta, s.load, s.maxit), (HodgeDesign::Diagonal, 2.5, LoadStrategy::Raw, 50));
    }

    #[test]
    fn reports_line_of_bad_entries() {
        for text in ["design = diagonal\nsolver = lu\n", "tol = -1\n", "beta\n"] {
            match RunConfig::parse(text, Path::new("c.cfg")) {
                Err(Error::Parse { location, .. }) => assert!(location.starts_with("line")),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        let e = RunConfig::parse("x = 1\ny = 2\nsolver = lu", Path::new("c")).unwrap_err();
        assert!(e.to_string().contains("line 1"));
    }
}
