//! Run configuration: defaults, a key=value file with sections, then flags.
//!
//! ```text
//! # comment
//! [lattice]
//! size = 8
//! spacing = 1.0
//! flux = 2,0,0,0,0,2        # m01,m02,m03,m12,m13,m23
//!
//! [functional]
//! kappa = 1.0
//! eta_amplitude = 0.0
//!
//! [solver]
//! tol = 1e-8
//! max_iters = 20000
//! amplitude = 0.5           # amplitude of the random initial fields
//! gauge_fix_every = 50
//!
//! [verify]
//! sizes = 8,16,32
//! samples = 50
//!
//! [topology]
//! bound = 2
//!
//! [run]
//! seed = 1
//! threads = 0               # 0 = all cores
//! out = out
//! ```
//!
//! Each key belongs to exactly one section; keys before the first section
//! header are accepted as well. Unknown sections or keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use ini::Ini;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub size: usize,
    pub spacing: f64,
    pub flux: Vec<i64>,
    pub kappa: f64,
    pub eta_amplitude: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub amplitude: f64,
    pub gauge_fix_every: usize,
    pub sizes: Vec<usize>,
    pub samples: usize,
    pub bound: i64,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            size: 8,
            spacing: 1.0,
            flux: vec![0; 6],
            kappa: 1.0,
            eta_amplitude: 0.0,
            tol: 1e-8,
            max_iters: 20_000,
            amplitude: 0.5,
            gauge_fix_every: 50,
            sizes: vec![8, 16, 32],
            samples: 50,
            bound: 2,
            seed: 1,
            threads: 0,
            out: PathBuf::from("out"),
        }
    }
}

const KEYS: &[(&str, &str)] = &[
    ("lattice", "size"),
    ("lattice", "spacing"),
    ("lattice", "flux"),
    ("functional", "kappa"),
    ("functional", "eta_amplitude"),
    ("solver", "tol"),
    ("solver", "max_iters"),
    ("solver", "amplitude"),
    ("solver", "gauge_fix_every"),
    ("verify", "sizes"),
    ("verify", "samples"),
    ("topology", "bound"),
    ("run", "seed"),
    ("run", "threads"),
    ("run", "out"),
];

/// Command-line overrides; every flag wins over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Sites per direction.
    #[arg(long)]
    pub size: Option<usize>,
    /// Lattice spacing.
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Flux entries m01,m02,m03,m12,m13,m23 (3d suites read the first three).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub flux: Option<Vec<i64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Amplitude of the constant self-dual perturbation η.
    #[arg(long, allow_hyphen_values = true)]
    pub eta_amplitude: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Refinement sizes for the Weitzenböck study.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Random draws per verification check.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Amplitude of the random initial fields.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Box half-width for the basic-class search.
    #[arg(long)]
    pub bound: Option<i64>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.trim().parse().map_err(|_| format!("cannot parse {key} = '{v}'"))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, String> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "size" => self.size = parse(key, v)?,
            "spacing" => self.spacing = parse(key, v)?,
            "flux" => self.flux = parse_list(key, v)?,
            "kappa" => self.kappa = parse(key, v)?,
            "eta_amplitude" => self.eta_amplitude = parse(key, v)?,
            "tol" => self.tol = parse(key, v)?,
            "max_iters" => self.max_iters = parse(key, v)?,
            "amplitude" => self.amplitude = parse(key, v)?,
            "gauge_fix_every" => self.gauge_fix_every = parse(key, v)?,
            "sizes" => self.sizes = parse_list(key, v)?,
            "samples" => self.samples = parse(key, v)?,
            "bound" => self.bound = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            "out" => self.out = PathBuf::from(v.trim()),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        let ini = Ini::load_from_str(text).map_err(|e| format!("malformed config: {e}"))?;
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let home = KEYS.iter().find(|(_, k)| *k == key).map(|(s, _)| *s);
                match (section, home) {
                    (_, None) => return Err(format!("unknown key '{key}'")),
                    (Some(s), Some(h)) if s != h => return Err(format!("key '{key}' belongs in [{h}], found in [{s}]")),
                    _ => self.set(key, value)?,
                }
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        self.apply_text(&text)
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { self.$f = v.clone(); } )* };
        }
        take!(size, spacing, flux, kappa, eta_amplitude, seed, tol, max_iters, sizes, samples, amplitude, bound);
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.size < 4 {
            return Err("size must be at least 4".into());
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err("spacing must be positive".into());
        }
        if !matches!(self.flux.len(), 0 | 3 | 6) {
            return Err(format!("flux needs 3 or 6 entries, got {}", self.flux.len()));
        }
        if !(self.tol > 0.0) {
            return Err("tol must be positive".into());
        }
        if self.sizes.iter().any(|&n| n < 4) {
            return Err("every refinement size must be at least 4".into());
        }
        if self.bound < 0 {
            return Err("bound must be non-negative".into());
        }
        Ok(())
    }

    /// Flux entries padded with zeros to `n`.
    pub fn flux_upper(&self, n: usize) -> Vec<i64> {
        (0..n).map(|i| self.flux.get(i).copied().unwrap_or(0)).collect()
    }

    /// The configuration in file syntax, so a run can be repeated with `--config`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[lattice]\nsize = {}\nspacing = {}\nflux = {}\n", self.size, self.spacing, join(&self.flux));
        let _ = writeln!(s, "[functional]\nkappa = {}\neta_amplitude = {}\n", self.kappa, self.eta_amplitude);
        let _ = writeln!(
            s,
            "[solver]\ntol = {:e}\nmax_iters = {}\namplitude = {}\ngauge_fix_every = {}\n",
            self.tol, self.max_iters, self.amplitude, self.gauge_fix_every
        );
        let _ = writeln!(s, "[verify]\nsizes = {}\nsamples = {}\n", join(&self.sizes), self.samples);
        let _ = writeln!(s, "[topology]\nbound = {}\n", self.bound);
        let _ = writeln!(s, "[run]\nseed = {}\nthreads = {}\nout = {}", self.seed, self.threads, self.out.display());
        s
    }
}
