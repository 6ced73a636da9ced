//! Flat `key=value` run configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use stoprox_core::degradation::DegradationConfig;
use stoprox_core::oracles::CachePolicy;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    /// The bundled piecewise-constant scene at `width × height`.
    Synthetic,
    Pgm(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub image: ImageSource,
    pub output: PathBuf,
    /// Replay this manifest instead of drawing an unbounded stream.
    pub manifest: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
    pub master_seed: u64,
    pub blur_size: usize,
    pub keep_prob: f64,
    pub noise_sigma: f64,
    pub tv_weight: f64,
    pub box_lo: f64,
    pub box_hi: f64,
    /// Primal step; derived from the dual step and the Lipschitz constant when absent.
    pub rho: Option<f64>,
    /// Dual step; `theta / ‖L‖²` when absent.
    pub sigma: Option<f64>,
    pub theta: f64,
    pub lambda_pivot: f64,
    pub lambda_exp: f64,
    pub batch_exp: f64,
    pub max_iterations: usize,
    pub checkpoint_stride: usize,
    pub rel_tol: Option<f64>,
    pub power_iterations: usize,
    pub oracle: CachePolicy,
    /// Fill the `wall_ms` trace column. Off by default so traces are byte-stable.
    pub wall_clock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            image: ImageSource::Synthetic,
            output: PathBuf::from("out"),
            manifest: None,
            width: 64,
            height: 64,
            master_seed: 0,
            blur_size: 5,
            keep_prob: 0.3,
            noise_sigma: 5.0,
            tv_weight: 0.5,
            box_lo: 0.0,
            box_hi: 255.0,
            rho: None,
            sigma: None,
            theta: 1.0,
            lambda_pivot: 500.0,
            lambda_exp: 0.95,
            batch_exp: 1.1,
            max_iterations: 2000,
            checkpoint_stride: 10,
            rel_tol: None,
            power_iterations: 200,
            oracle: CachePolicy::Incremental,
            wall_clock: false,
        }
    }
}

fn parse_opt(v: &str) -> std::result::Result<Option<f64>, ()> {
    if v == "auto" || v == "none" {
        Ok(None)
    } else {
        v.parse().map(Some).map_err(|_| ())
    }
}

fn show_opt(v: Option<f64>, absent: &str) -> String {
    v.map_or_else(|| absent.to_string(), |x| format!("{x:?}"))
}

impl RunConfig {
    pub fn degradation(&self) -> DegradationConfig {
        DegradationConfig {
            blur_size: self.blur_size,
            keep_prob: self.keep_prob,
            noise_sigma: self.noise_sigma,
            width: self.width,
            height: self.height,
            master_seed: self.master_seed,
        }
    }

    /// Parses `text`; relative paths are resolved against `base`.
    pub fn parse(text: &str, path: &Path, base: &Path) -> Result<Self> {
        let mut cfg = RunConfig { output: base.join("out"), ..RunConfig::default() };
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, no, format!("expected key=value, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::parse(path, no, format!("duplicate key `{key}`")));
            }
            let bad = || Error::parse(path, no, format!("bad value `{value}` for `{key}`"));
            macro_rules! num {
                ($t:ty) => {
                    value.parse::<$t>().map_err(|_| bad())?
                };
            }
            match key {
                "image" => {
                    cfg.image = if value == "synthetic" {
                        ImageSource::Synthetic
                    } else {
                        ImageSource::Pgm(base.join(value))
                    }
                }
                "output" => cfg.output = base.join(value),
                "manifest" => cfg.manifest = (value != "none").then(|| base.join(value)),
                "width" => cfg.width = num!(usize),
                "height" => cfg.height = num!(usize),
                "masterSeed" => cfg.master_seed = num!(u64),
                "blurSize" => cfg.blur_size = num!(usize),
                "keepProb" => cfg.keep_prob = num!(f64),
                "noiseSigma" => cfg.noise_sigma = num!(f64),
                "tvWeight" => cfg.tv_weight = num!(f64),
                "boxLo" => cfg.box_lo = num!(f64),
                "boxHi" => cfg.box_hi = num!(f64),
                "rho" => cfg.rho = parse_opt(value).map_err(|_| bad())?,
                "sigma" => cfg.sigma = parse_opt(value).map_err(|_| bad())?,
                "theta" => cfg.theta = num!(f64),
                "lambdaPivot" => cfg.lambda_pivot = num!(f64),
                "lambdaExp" => cfg.lambda_exp = num!(f64),
                "batchExp" => cfg.batch_exp = num!(f64),
                "maxIterations" => cfg.max_iterations = num!(usize),
                "checkpointStride" => cfg.checkpoint_stride = num!(usize),
                "relTol" => cfg.rel_tol = parse_opt(value).map_err(|_| bad())?,
                "powerIterations" => cfg.power_iterations = num!(usize),
                "oracle" => {
                    cfg.oracle = match value {
                        "incremental" => CachePolicy::Incremental,
                        "recompute" => CachePolicy::RecomputeAll,
                        _ => return Err(bad()),
                    }
                }
                "wallClock" => cfg.wall_clock = num!(bool),
                _ => return Err(Error::parse(path, no, format!("unknown key `{key}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        Self::parse(&text, path, &base)
    }

    /// Every key, with paths as given (absolute once resolved).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let image = match &self.image {
            ImageSource::Synthetic => "synthetic".to_string(),
            ImageSource::Pgm(p) => p.display().to_string(),
        };
        let _ = writeln!(s, "image={image}");
        let _ = writeln!(s, "output={}", self.output.display());
        let _ = writeln!(s, "manifest={}", self.manifest.as_ref().map_or("none".into(), |p| p.display().to_string()));
        let _ = writeln!(s, "width={}", self.width);
        let _ = writeln!(s, "height={}", self.height);
        let _ = writeln!(s, "masterSeed={}", self.master_seed);
        let _ = writeln!(s, "blurSize={}", self.blur_size);
        let _ = writeln!(s, "keepProb={:?}", self.keep_prob);
        let _ = writeln!(s, "noiseSigma={:?}", self.noise_sigma);
        let _ = writeln!(s, "tvWeight={:?}", self.tv_weight);
        let _ = writeln!(s, "boxLo={:?}", self.box_lo);
        let _ = writeln!(s, "boxHi={:?}", self.box_hi);
        let _ = writeln!(s, "rho={}", show_opt(self.rho, "auto"));
        let _ = writeln!(s, "sigma={}", show_opt(self.sigma, "auto"));
        let _ = writeln!(s, "theta={:?}", self.theta);
        let _ = writeln!(s, "lambdaPivot={:?}", self.lambda_pivot);
        let _ = writeln!(s, "lambdaExp={:?}", self.lambda_exp);
        let _ = writeln!(s, "batchExp={:?}", self.batch_exp);
        let _ = writeln!(s, "maxIterations={}", self.max_iterations);
        let _ = writeln!(s, "checkpointStride={}", self.checkpoint_stride);
        let _ = writeln!(s, "relTol={}", show_opt(self.rel_tol, "none"));
        let _ = writeln!(s, "powerIterations={}", self.power_iterations);
        let oracle = match self.oracle {
            CachePolicy::Incremental => "incremental",
            CachePolicy::RecomputeAll => "recompute",
        };
        let _ = writeln!(s, "oracle={oracle}");
        let _ = writeln!(s, "wallClock={}", self.wall_clock);
        s
    }
}
