//! Line-oriented `key = value` configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;
use twistlab::error::{Error, Result};

pub const KEYS: &[(&str, &str)] = &[
    ("field", "base field; only `Q` is wired to the experiments"),
    ("s_set", "comma-separated real points s for residue reports"),
    ("coeff_cache", "directory of coefficient caches (overrides TWISTLAB_CACHE)"),
    ("precision_bits", "floating-point precision; only 53 is supported"),
    ("x_ladder", "nonvanishing cutoffs x"),
    ("y_ladder", "mean-square cutoffs Y"),
    ("probe_ladder", "Euler-product probe cutoffs"),
    ("r_range", "prime range lo..hi for the determination table"),
    ("weight_tol", "D-sum cut where e^{-D/x} drops below this weight"),
    ("v_tol", "AFE cutoff-function tolerance"),
    ("max_coefficients", "largest coefficient table the experiments may build"),
    ("workers", "worker count (the numerics are single-threaded and deterministic)"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub field: String,
    pub s_set: Vec<f64>,
    pub coeff_cache: Option<PathBuf>,
    pub precision_bits: u32,
    pub x_ladder: Vec<u64>,
    pub y_ladder: Vec<u64>,
    pub probe_ladder: Vec<u64>,
    pub r_range: (u64, u64),
    pub weight_tol: f64,
    pub v_tol: f64,
    pub max_coefficients: u64,
    pub workers: usize,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            field: "Q".into(),
            s_set: vec![0.5],
            coeff_cache: None,
            precision_bits: 53,
            x_ladder: vec![1000, 3000, 10000],
            y_ladder: vec![500, 1000, 2000, 4000],
            probe_ladder: vec![100, 1000, 3000, 10000],
            r_range: (3, 300),
            weight_tol: 1e-3,
            v_tol: 1e-6,
            max_coefficients: 40_000_000,
            workers: 1,
            tolerances: BTreeMap::new(),
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|x| x.trim())
        .filter(|x| !x.is_empty())
        .map(|x| parse_num::<T>(key, x))
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    let v = v.trim();
    if let Ok(x) = v.parse::<T>() {
        return Ok(x);
    }
    // integers written as 1e4
    if let Ok(f) = v.parse::<f64>() {
        if f.fract() == 0.0 && f >= 0.0 {
            if let Ok(x) = format!("{}", f as u64).parse::<T>() {
                return Ok(x);
            }
        }
    }
    Err(Error::Config(format!("{key}: cannot parse `{v}`")))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, k: &str, v: &str) -> Result<()> {
        match k {
            "field" => self.field = v.to_string(),
            "s_set" => self.s_set = list(k, v)?,
            "coeff_cache" => self.coeff_cache = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "precision_bits" => self.precision_bits = parse_num(k, v)?,
            "x_ladder" => self.x_ladder = list(k, v)?,
            "y_ladder" => self.y_ladder = list(k, v)?,
            "probe_ladder" => self.probe_ladder = list(k, v)?,
            "r_range" => {
                let (a, b) = v.split_once("..").ok_or_else(|| Error::Config(format!("r_range: expected lo..hi, got `{v}`")))?;
                self.r_range = (parse_num(k, a)?, parse_num(k, b)?);
            }
            "weight_tol" => self.weight_tol = parse_num(k, v)?,
            "v_tol" => self.v_tol = parse_num(k, v)?,
            "max_coefficients" => self.max_coefficients = parse_num(k, v)?,
            "workers" => self.workers = parse_num(k, v)?,
            _ => match k.strip_prefix("tol.") {
                Some(name) if !name.is_empty() => {
                    self.tolerances.insert(name.to_string(), parse_num(k, v)?);
                }
                _ => return Err(Error::Config(format!("unknown key `{k}`"))),
            },
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.precision_bits != 53 {
            return Err(Error::Config(format!("precision_bits = {} unsupported; only 53", self.precision_bits)));
        }
        if self.field != "Q" {
            return Err(Error::Unsupported(format!("field `{}`: experiments run over Q only", self.field)));
        }
        for (name, l) in [("x_ladder", &self.x_ladder), ("y_ladder", &self.y_ladder), ("probe_ladder", &self.probe_ladder)] {
            if l.is_empty() || l.windows(2).any(|w| w[1] <= w[0]) || l[0] == 0 {
                return Err(Error::Config(format!("{name} must be positive and strictly increasing")));
            }
        }
        if self.r_range.0 > self.r_range.1 {
            return Err(Error::Config("r_range: lo > hi".into()));
        }
        if !(self.weight_tol > 0.0 && self.weight_tol < 1.0) || !(self.v_tol > 0.0 && self.v_tol < 1.0) {
            return Err(Error::Config("weight_tol and v_tol must lie in (0, 1)".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        if let Some(dir) = &self.coeff_cache {
            if dir.exists() && !dir.is_dir() {
                return Err(Error::Config(format!("coeff_cache {} is not a directory", dir.display())));
            }
        }
        Ok(())
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("field", self.field.clone());
        put("s_set", join(&self.s_set));
        put("coeff_cache", self.coeff_cache.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        put("precision_bits", self.precision_bits.to_string());
        put("x_ladder", join(&self.x_ladder));
        put("y_ladder", join(&self.y_ladder));
        put("probe_ladder", join(&self.probe_ladder));
        put("r_range", format!("{}..{}", self.r_range.0, self.r_range.1));
        put("weight_tol", self.weight_tol.to_string());
        put("v_tol", self.v_tol.to_string());
        put("max_coefficients", self.max_coefficients.to_string());
        put("workers", self.workers.to_string());
        for (k, v) in &self.tolerances {
            put(&format!("tol.{k}"), v.to_string());
        }
        out
    }

    pub fn cache_dir(&self) -> Option<&std::path::Path> {
        self.coeff_cache.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let text = "field = Q\n# comment\nx_ladder = 1e3, 3000\nr_range = 3..101\ntol.switching = 1e-5\ns_set = 0.5,0.75\n";
        let a = ExperimentConfig::parse(text).unwrap();
        assert_eq!(a.x_ladder, vec![1000, 3000]);
        assert_eq!(a.tol("switching", 1.0), 1e-5);
        let b = ExperimentConfig::parse(&a.to_text()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["precision_bits = 64", "nope = 1", "x_ladder = 3,2", "field = Q\nfield = Q", "garbage", "field = Q(sqrt5)"] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
        assert_eq!(ExperimentConfig::parse("precision_bits = 113").unwrap_err().code(), "E_CONFIG");
    }
}
