use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::lattice::{parse_cycle_line, BoxRegion, Cutoffs, Permutation, Site};
use crate::potentials::{check_alpha, Potential, TablePotential};
use crate::sampler::ClanCaps;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "CYCLEGAS_OUT";

/// One run's parameters, read from TOML and overridden by flags.
///
/// ```toml
/// dim = 2
/// seed = 7
/// alpha = 2.5
/// alphas = [2.5, 3.0, 4.0]   # bounds grid; defaults to [alpha]
/// shift = "(1,0)"            # shift boundary condition
/// window = "-1,-1:1,1"
/// regions = ["-3,-3:3,3", "-5,-5:5,5"]
/// replicas = 1000
/// t_back = [0.5, 1.0, 2.0]   # uniqueness coupling times
/// initial = ["(0,0) (1,0)"]  # initial permutation for the uniqueness coupling
///
/// [potential]
/// kind = "gaussian"          # gaussian | power | nearest-neighbor | table
///
/// [cutoffs]
/// max_len = 6
/// max_jump = 2.0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dim: usize,
    pub seed: u64,
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub shift: Option<String>,
    /// Defaults to the cube of radius 1 around the origin.
    pub window: Option<BoxRegion>,
    pub regions: Vec<BoxRegion>,
    pub replicas: usize,
    pub t_back: Vec<f64>,
    pub initial: Vec<String>,
    pub allow_uncertified: bool,
    pub compare_oracle: bool,
    pub state_cap: usize,
    pub horizon: u32,
    pub threads: Option<usize>,
    /// Samples file read by `stats`.
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub potential: PotentialConfig,
    pub cutoffs: Cutoffs,
    pub caps: CapsConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub kind: String,
    pub scale: f64,
    pub exponent: u32,
    pub table: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapsConfig {
    pub max_nodes: usize,
    pub max_radius: i32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 2,
            seed: 1,
            alpha: 2.5,
            alphas: Vec::new(),
            shift: None,
            window: None,
            regions: Vec::new(),
            replicas: 100,
            t_back: Vec::new(),
            initial: Vec::new(),
            allow_uncertified: false,
            compare_oracle: false,
            state_cap: 10_000_000,
            horizon: crate::dynamics::DEFAULT_HORIZON,
            threads: None,
            input: None,
            output_dir: None,
            potential: PotentialConfig::default(),
            cutoffs: Cutoffs::new(6, 2.0),
            caps: CapsConfig::default(),
        }
    }
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            kind: "gaussian".into(),
            scale: 1.0,
            exponent: 4,
            table: None,
        }
    }
}

impl Default for CapsConfig {
    fn default() -> Self {
        let c = ClanCaps::default();
        CapsConfig {
            max_nodes: c.max_nodes,
            max_radius: c.max_radius,
        }
    }
}

/// Flags overriding config file values.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $CYCLEGAS_OUT or ./cyclegas-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Comma-separated alpha grid for `bounds`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Shift `v` of the boundary condition, e.g. `1,0`.
    #[arg(long, global = true)]
    pub shift: Option<String>,
    /// Window box, e.g. `-1,-1:1,1`.
    #[arg(long, global = true)]
    pub window: Option<BoxRegion>,
    /// Nested boxes for the coupling experiment (repeatable).
    #[arg(long = "region", global = true)]
    pub regions: Option<Vec<BoxRegion>>,
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub t_back: Option<Vec<f64>>,
    /// Cycle of the initial permutation, e.g. `"(0,0) (1,0)"` (repeatable).
    #[arg(long = "initial", global = true)]
    pub initial: Option<Vec<String>>,
    /// gaussian | power | nearest-neighbor | table
    #[arg(long, global = true)]
    pub potential: Option<String>,
    #[arg(long, global = true)]
    pub exponent: Option<u32>,
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    #[arg(long, global = true)]
    pub max_len: Option<usize>,
    #[arg(long, global = true)]
    pub max_jump: Option<f64>,
    #[arg(long, global = true)]
    pub min_weight: Option<f64>,
    #[arg(long, global = true)]
    pub max_classes: Option<usize>,
    #[arg(long, global = true)]
    pub max_nodes: Option<usize>,
    #[arg(long, global = true)]
    pub state_cap: Option<usize>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run `sample-perfect` without a subcriticality certificate.
    #[arg(long, global = true)]
    pub allow_uncertified: bool,
    /// Compare `sample-finite` draws with the enumerated table.
    #[arg(long, global = true)]
    pub compare_oracle: bool,
    /// Samples file for `stats`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
}

/// A validated configuration with its parsed objects.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub potential: Potential,
    pub shift: Option<Site>,
    pub window: BoxRegion,
    pub initial: Permutation,
    pub caps: ClanCaps,
    pub out_dir: PathBuf,
    /// sha256 of the effective config text.
    pub hash: String,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(self.dim, o.dim);
        set!(self.seed, o.seed);
        set!(self.alpha, o.alpha);
        set!(self.alphas, o.alphas);
        if o.window.is_some() {
            self.window = o.window;
        }
        set!(self.regions, o.regions);
        set!(self.replicas, o.replicas);
        set!(self.t_back, o.t_back);
        set!(self.initial, o.initial);
        set!(self.potential.kind, o.potential);
        set!(self.potential.exponent, o.exponent);
        set!(self.potential.scale, o.scale);
        set!(self.cutoffs.max_len, o.max_len);
        set!(self.cutoffs.max_jump, o.max_jump);
        set!(self.cutoffs.min_weight, o.min_weight);
        set!(self.cutoffs.max_classes, o.max_classes);
        set!(self.caps.max_nodes, o.max_nodes);
        set!(self.state_cap, o.state_cap);
        if o.shift.is_some() {
            self.shift = o.shift.clone();
        }
        if o.table.is_some() {
            self.potential.table = o.table.clone();
        }
        if o.threads.is_some() {
            self.threads = o.threads;
        }
        if o.input.is_some() {
            self.input = o.input.clone();
        }
        if o.out.is_some() {
            self.output_dir = o.out.clone();
        }
        self.allow_uncertified |= o.allow_uncertified;
        self.compare_oracle |= o.compare_oracle;
    }

    /// The config as written next to outputs; the output directory is left
    /// out so that moving a run does not change its hash.
    pub fn effective_text(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        toml::to_string(&c).expect("config serializes")
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        let bad = |m: String| CliError::Config(m);
        if self.dim == 0 || self.dim > crate::lattice::MAX_DIM {
            return Err(bad(format!("dim must be in 1..={}", crate::lattice::MAX_DIM)));
        }
        check_alpha(self.alpha).map_err(|e| bad(e.to_string()))?;
        for a in &self.alphas {
            check_alpha(*a).map_err(|e| bad(e.to_string()))?;
        }
        self.cutoffs.validate().map_err(|e| bad(e.to_string()))?;
        let window = self
            .window
            .unwrap_or_else(|| BoxRegion::cube(Site::origin(self.dim), 1));
        for r in std::iter::once(&window).chain(&self.regions) {
            let BoxRegion::Finite { lower, .. } = r else {
                return Err(bad("boxes must be finite".into()));
            };
            if lower.dim() != self.dim {
                return Err(bad(format!("box {r} is not {}-dimensional", self.dim)));
            }
        }
        if self.replicas == 0 {
            return Err(bad("replicas must be positive".into()));
        }
        if self.t_back.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(bad("t_back values must be finite and nonnegative".into()));
        }
        if self.caps.max_nodes == 0 || self.caps.max_radius <= 0 || self.horizon == 0 {
            return Err(bad("caps must be positive".into()));
        }
        let shift = match &self.shift {
            Some(s) => {
                let v: Site = s.parse().map_err(|e| bad(format!("shift: {e}")))?;
                if v.dim() != self.dim {
                    return Err(bad(format!("shift {v} is not {}-dimensional", self.dim)));
                }
                Some(v)
            }
            None => None,
        };
        let base = match self.potential.kind.as_str() {
            "gaussian" if self.potential.scale == 1.0 => Potential::gaussian(self.dim),
            "gaussian" => {
                Potential::scaled_gaussian(self.dim, self.potential.scale).map_err(|e| bad(e.to_string()))?
            }
            "power" => {
                Potential::power_law(self.dim, self.potential.exponent).map_err(|e| bad(e.to_string()))?
            }
            "nearest-neighbor" => Potential::nearest_neighbor(self.dim),
            "table" => {
                let path = self
                    .potential
                    .table
                    .as_ref()
                    .ok_or_else(|| bad("table potential needs `table`".into()))?;
                let t = TablePotential::load(path).map_err(|e| bad(e.to_string()))?;
                if t.dim() != self.dim {
                    return Err(bad(format!("table is {}-dimensional", t.dim())));
                }
                Potential::table(t)
            }
            k => return Err(bad(format!("unknown potential kind `{k}`"))),
        };
        let potential = match shift {
            Some(v) if !v.is_origin() => base.shifted(v).map_err(|e| bad(e.to_string()))?,
            _ => base,
        };
        let mut cycles = Vec::new();
        for line in &self.initial {
            let (c, _) = parse_cycle_line(line).map_err(|e| bad(format!("initial: {e}")))?;
            if c.dim() != self.dim {
                return Err(bad(format!("initial cycle `{line}` has the wrong dimension")));
            }
            cycles.push(c);
        }
        let initial = Permutation::new(cycles).map_err(|e| bad(format!("initial: {e}")))?;
        let out_dir = self
            .output_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("cyclegas-out"));
        let hash = sha256_hex(self.effective_text().as_bytes());
        Ok(Resolved {
            caps: ClanCaps {
                max_nodes: self.caps.max_nodes,
                max_radius: self.caps.max_radius,
            },
            config: self,
            potential,
            shift,
            window,
            initial,
            out_dir,
            hash,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
