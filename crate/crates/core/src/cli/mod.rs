//! Command line front end: configuration, experiment orchestration and
//! persistence of results.

mod config;
mod report;

pub use config::{sha256_hex, CapsConfig, Overrides, PotentialConfig, Resolved, RunConfig, OUT_ENV};
pub use report::{
    agreement_curve, emit_plotdata, read_samples, samples_text, AgreementRow, ClanStats, PlotCurve,
    Provenance, StatsReport, UniquenessRow,
};

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{
    alpha_star_beta_truncated, alpha_star_shift_strongly_convex, alpha_star_upper_rho, certificate,
    dominating_potential, gaussian_alpha_star_explicit, rho, rho0, AlphaStarBound,
};
use crate::dynamics::{
    detailed_balance_check, enumerate_g_lambda, sample_g_lambda_exact, DynamicsError, PoissonField,
};
use crate::hexfloat::format_f64;
use crate::lattice::{enumerate_cycles, Cycle, CycleCatalog, LatticeError, Permutation};
use crate::potentials::PotentialKind;
use crate::rng::replica_seed;
use crate::sampler::{ClanSummary, PerfectSampler, SamplerError, WindowSample};
use crate::stats::{cycle_length_histogram, mean_jump};
use report::{num, write_json};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("refusing to sample: {0}")]
    NotCertified(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::NotCertified(_) => 3,
            CliError::CapExceeded(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Other(format!("{}: {e}", path.display()))
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::CatalogTooLarge(_) => CliError::CapExceeded(e.to_string()),
            LatticeError::Io(_) => CliError::Other(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Lattice(l) => l.into(),
            DynamicsError::StateSpaceTooLarge(_) | DynamicsError::HorizonExceeded(_) => {
                CliError::CapExceeded(e.to_string())
            }
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::NotCertifiedSubcritical(_) => CliError::NotCertified(e.to_string()),
            SamplerError::ClanCapExceeded(_) | SamplerError::HaloCapExceeded(_) => {
                CliError::CapExceeded(e.to_string())
            }
            SamplerError::ShiftMismatch(_) => CliError::Config(e.to_string()),
            SamplerError::Dynamics(d) => d.into(),
            SamplerError::Lattice(l) => l.into(),
            SamplerError::UnlabeledNode(_) => CliError::Other(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cyclegas",
    version,
    about = "Gibbs measures on permutations of Z^d as loss networks of cycles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// rho, rho0, the beta interval and alpha* bounds over an alpha grid.
    Bounds {
        #[arg(long, value_enum, default_value_t = TableFormat::Pretty)]
        format: TableFormat,
    },
    /// Enumerate the finite-volume measure on the window and check detailed balance.
    Oracle,
    /// Exact finite-volume draws on the window.
    SampleFinite,
    /// Infinite-volume window samples through the clan of ancestors.
    SamplePerfect,
    /// Statistics of a samples file.
    Stats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Pretty,
    Csv,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bounds { .. } => "bounds",
            Command::Oracle => "oracle",
            Command::SampleFinite => "sample-finite",
            Command::SamplePerfect => "sample-perfect",
            Command::Stats => "stats",
        }
    }
}

/// Parses arguments, runs, reports errors on stderr, returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cyclegas: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut config = match &cli.overrides.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.apply(&cli.overrides);
    let r = config.resolve()?;
    std::fs::create_dir_all(&r.out_dir).map_err(|e| CliError::io(&r.out_dir, e))?;
    let effective = r.out_dir.join("config.toml");
    std::fs::write(&effective, r.config.effective_text()).map_err(|e| CliError::io(&effective, e))?;
    let body = || match &cli.command {
        Command::Bounds { format } => bounds(&r, *format),
        Command::Oracle => oracle(&r),
        Command::SampleFinite => sample_finite(&r),
        Command::SamplePerfect => sample_perfect(&r),
        Command::Stats => stats(&r, cli.command.name()),
    };
    match r.config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Other(e.to_string()))?
            .install(body),
        None => body(),
    }
}

fn catalog_at(r: &Resolved, alpha: f64) -> Result<CycleCatalog, CliError> {
    Ok(enumerate_cycles(
        r.config.dim,
        r.config.cutoffs,
        &r.potential,
        alpha,
    )?)
}

#[derive(Serialize)]
struct BoundsRow {
    alpha: f64,
    #[serde(serialize_with = "report::ser_f64")]
    rho: f64,
    rho0: f64,
    truncated_sum: f64,
    #[serde(serialize_with = "report::ser_f64")]
    tail_bound: f64,
    #[serde(serialize_with = "report::ser_f64")]
    beta_upper: f64,
    certificate_method: String,
    subcritical: bool,
    classes: usize,
}

#[derive(Serialize)]
struct BoundsReport {
    provenance: Provenance,
    alpha_star: BTreeMap<&'static str, AlphaStarBound>,
    alpha_star_unavailable: BTreeMap<&'static str, String>,
    rows: Vec<BoundsRow>,
}

fn bounds(r: &Resolved, format: TableFormat) -> Result<(), CliError> {
    let mut alphas = if r.config.alphas.is_empty() {
        vec![r.config.alpha]
    } else {
        r.config.alphas.clone()
    };
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let dom = dominating_potential(&r.potential);
    let mut rows = Vec::new();
    let mut first = None;
    for &a in &alphas {
        let cat = catalog_at(r, a)?;
        let cert = certificate(&cat);
        rows.push(BoundsRow {
            alpha: a,
            rho: dom.as_ref().and_then(|d| rho(d, a).ok()).unwrap_or(f64::INFINITY),
            rho0: rho0(),
            truncated_sum: cat.truncated_beta(),
            tail_bound: cat.tail_bound(),
            beta_upper: cert.beta_upper,
            certificate_method: cert.method.clone(),
            subcritical: cert.is_subcritical(),
            classes: cat.len(),
        });
        first.get_or_insert((cat, cert));
    }
    let mut alpha_star = BTreeMap::new();
    let mut unavailable = BTreeMap::new();
    let mut put = |name: &'static str, b: Result<AlphaStarBound, crate::bounds::BoundsError>| match b {
        Ok(b) => {
            alpha_star.insert(name, b);
        }
        Err(e) => {
            unavailable.insert(name, e.to_string());
        }
    };
    put("rho_root", alpha_star_upper_rho(&r.potential));
    if r.potential.shift().is_none() {
        if let PotentialKind::Gaussian { scale } = r.potential.kind() {
            let mut b = gaussian_alpha_star_explicit(r.config.dim);
            b.value /= scale;
            put("gaussian_explicit", Ok(b));
        }
    } else {
        put(
            "strongly_convex_shift",
            alpha_star_shift_strongly_convex(&r.potential),
        );
    }
    put(
        "beta_truncated",
        alpha_star_beta_truncated(&r.potential, r.config.cutoffs),
    );

    let (cat, cert) = first.expect("alpha grid is nonempty");
    let prov = Provenance::new("bounds", r, &cat, &cert);
    let mut table = String::new();
    match format {
        TableFormat::Csv => {
            let _ = writeln!(
                table,
                "alpha,rho,rho0,truncated_sum,tail_bound,beta_upper,certificate,subcritical"
            );
            for row in &rows {
                let _ = writeln!(
                    table,
                    "{},{},{},{},{},{},{},{}",
                    num(row.alpha),
                    num(row.rho),
                    num(row.rho0),
                    num(row.truncated_sum),
                    num(row.tail_bound),
                    num(row.beta_upper),
                    row.certificate_method,
                    row.subcritical
                );
            }
        }
        TableFormat::Pretty => {
            let _ = writeln!(
                table,
                "potential {}  dim {}  rho0 {:.10}",
                prov.potential,
                r.config.dim,
                rho0()
            );
            let _ = writeln!(
                table,
                "{:>10} {:>12} {:>12} {:>12} {:>12}  certificate",
                "alpha", "rho", "beta_sum", "tail", "beta_upper"
            );
            for row in &rows {
                let _ = writeln!(
                    table,
                    "{:>10.4} {:>12.6e} {:>12.6e} {:>12.6e} {:>12.6e}  {}{}",
                    row.alpha,
                    row.rho,
                    row.truncated_sum,
                    row.tail_bound,
                    row.beta_upper,
                    row.certificate_method,
                    if row.subcritical { "" } else { " (not subcritical)" }
                );
            }
        }
    }
    for (name, b) in &alpha_star {
        let _ = writeln!(table, "alpha* <= {:.6}  [{name}]", b.value);
    }
    for (name, e) in &unavailable {
        let _ = writeln!(table, "alpha* [{name}] unavailable: {e}");
    }
    print!("{table}");

    let curve = PlotCurve {
        file: "beta_vs_alpha.csv",
        description: "certified upper bound on beta over the alpha grid",
        columns: vec![
            ("alpha", "inverse temperature"),
            ("beta_upper", "certified upper bound on beta"),
            (
                "truncated_sum",
                "catalog sum of |gamma| w(gamma) over cycles through 0",
            ),
            ("tail_bound", "bound on the mass the cutoffs leave out"),
        ],
        rows: rows
            .iter()
            .map(|x| {
                vec![
                    num(x.alpha),
                    num(x.beta_upper),
                    num(x.truncated_sum),
                    num(x.tail_bound),
                ]
            })
            .collect(),
    };
    emit_plotdata(&r.out_dir, &prov, &[curve])?;
    write_json(
        &r.out_dir.join("bounds.json"),
        &BoundsReport {
            provenance: prov,
            alpha_star,
            alpha_star_unavailable: unavailable,
            rows,
        },
    )
}

#[derive(Serialize)]
struct OracleReport {
    provenance: Provenance,
    region: crate::lattice::BoxRegion,
    states: usize,
    partition_function: f64,
    detailed_balance_max_violation: f64,
}

fn oracle(r: &Resolved) -> Result<(), CliError> {
    let cat = catalog_at(r, r.config.alpha)?;
    let cert = certificate(&cat);
    let prov = Provenance::new("oracle", r, &cat, &cert);
    let region = cat.restrict(&r.window)?;
    let table = enumerate_g_lambda(&region, r.config.state_cap)?;
    let violation = detailed_balance_check(&table, &region);
    let mut text = String::from("# cyclegas oracle states v1\n");
    text.push_str(&prov.header_lines());
    let _ = writeln!(text, "# window {}", r.window);
    for (i, (s, p)) in table.states.iter().zip(&table.probabilities).enumerate() {
        let _ = writeln!(text, "state {i} {} {}", s.cycles().len(), format_f64(*p));
        for c in s.cycles() {
            let _ = writeln!(text, "{c}");
        }
    }
    let path = r.out_dir.join("oracle_states.txt");
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    println!(
        "{} states, Z = {}, max detailed-balance violation {:e}",
        table.len(),
        table.partition_function,
        violation
    );
    write_json(
        &r.out_dir.join("oracle.json"),
        &OracleReport {
            provenance: prov,
            region: r.window,
            states: table.len(),
            partition_function: table.partition_function,
            detailed_balance_max_violation: violation,
        },
    )
}

#[derive(Serialize)]
struct FiniteReport {
    provenance: Provenance,
    region: crate::lattice::BoxRegion,
    replicas: usize,
    distinct_states: usize,
    /// State (cycles joined by `;`) to count.
    counts: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tv_distance_to_oracle: Option<f64>,
    cycle_length_histogram: crate::stats::CycleLengthHistogram,
}

fn state_key(p: &Permutation) -> String {
    p.cycles()
        .iter()
        .map(Cycle::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn sample_finite(r: &Resolved) -> Result<(), CliError> {
    let cat = catalog_at(r, r.config.alpha)?;
    let cert = certificate(&cat);
    let prov = Provenance::new("sample-finite", r, &cat, &cert);
    let window = r.window;
    let draws: Vec<Permutation> = (0..r.config.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut field = PoissonField::new(&cat, replica_seed(r.config.seed, i));
            sample_g_lambda_exact(&mut field, &window, r.config.horizon)
        })
        .collect::<Result<_, _>>()?;
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut by_cycles: HashMap<Vec<Cycle>, u64> = HashMap::new();
    for p in &draws {
        *counts.entry(state_key(p)).or_default() += 1;
        *by_cycles.entry(p.cycles().to_vec()).or_default() += 1;
    }
    let tv = if r.config.compare_oracle {
        let table = enumerate_g_lambda(&cat.restrict(&window)?, r.config.state_cap)?;
        Some(table.tv_distance(&by_cycles))
    } else {
        None
    };
    let samples: Vec<WindowSample> = draws
        .iter()
        .map(|p| WindowSample {
            window,
            permutation: p.clone(),
            shift: None,
            clan: None,
        })
        .collect();
    let refs: Vec<&Permutation> = draws.iter().collect();
    let path = r.out_dir.join("samples.txt");
    std::fs::write(&path, samples_text(&prov, &window, None, &refs, &cat))
        .map_err(|e| CliError::io(&path, e))?;
    if let Some(tv) = tv {
        println!(
            "{} draws, {} distinct states, TV to oracle {tv:.5}",
            draws.len(),
            counts.len()
        );
    } else {
        println!("{} draws, {} distinct states", draws.len(), counts.len());
    }
    write_json(
        &r.out_dir.join("summary.json"),
        &FiniteReport {
            provenance: prov,
            region: window,
            replicas: draws.len(),
            distinct_states: counts.len(),
            counts,
            tv_distance_to_oracle: tv,
            cycle_length_histogram: cycle_length_histogram(&samples),
        },
    )
}

fn sample_perfect(r: &Resolved) -> Result<(), CliError> {
    let cat = catalog_at(r, r.config.alpha)?;
    let sampler = if r.config.allow_uncertified {
        PerfectSampler::uncertified(&cat, r.caps)
    } else {
        PerfectSampler::new(&cat, r.caps)?
    };
    let cert = sampler.certificate().clone();
    let mut prov = Provenance::new("sample-perfect", r, &cat, &cert);
    if !sampler.is_certified() {
        prov.label = Some("UNCERTIFIED");
        eprintln!(
            "cyclegas: warning: beta upper bound {} >= 1, outputs are UNCERTIFIED",
            cert.beta_upper
        );
    }
    let window = r.window;
    let seed = r.config.seed;
    let n = r.config.replicas as u64;
    let samples: Vec<WindowSample> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = replica_seed(seed, i);
            match r.shift {
                Some(v) => sampler.sample_mu_v_window(s, &window, v),
                None => sampler.sample_mu_window(s, &window),
            }
        })
        .collect::<Result<_, _>>()?;
    let agreement = if r.config.regions.is_empty() {
        Vec::new()
    } else {
        let per: Vec<_> = (0..n)
            .into_par_iter()
            .map(|i| sampler.thermodynamic_coupling(replica_seed(seed, i), &window, &r.config.regions))
            .collect::<Result<_, _>>()?;
        agreement_curve(&r.config.regions, &per)
    };
    let mut uniqueness = Vec::new();
    for &t in &r.config.t_back {
        let outs: Vec<_> = (0..n)
            .into_par_iter()
            .map(|i| sampler.uniqueness_forward_coupling(replica_seed(seed, i), &window, &r.initial, t))
            .collect::<Result<_, _>>()?;
        uniqueness.push(UniquenessRow {
            t_back: t,
            disagreement: outs.iter().filter(|o| !o.agrees).count() as f64 / n as f64,
            mean_differing_cycles: outs.iter().map(|o| o.differing_cycles as f64).sum::<f64>() / n as f64,
        });
    }
    let clans: Vec<ClanSummary> = samples.iter().filter_map(|s| s.clan.clone()).collect();
    let clan_stats = ClanStats::of(&clans);
    let hist = cycle_length_histogram(&samples);
    let report = StatsReport {
        provenance: prov.clone(),
        window,
        shift: r.shift.map(|v| v.coords().to_vec()),
        replicas: samples.len(),
        fraction_non_fixed: hist.fraction_non_fixed(),
        cycle_length_histogram: hist,
        mean_jump: mean_jump(&samples).ok(),
        clans: Some(clan_stats.clone()),
        agreement,
        uniqueness,
    };

    let perms: Vec<&Permutation> = samples.iter().map(|s| &s.permutation).collect();
    let path = r.out_dir.join("samples.txt");
    std::fs::write(&path, samples_text(&prov, &window, r.shift, &perms, &cat))
        .map_err(|e| CliError::io(&path, e))?;
    let mut curves = vec![PlotCurve {
        file: "clan_size.csv",
        description: "histogram of clan sizes over replicas",
        columns: vec![
            ("size", "number of clan nodes"),
            ("count", "replicas with that size"),
        ],
        rows: clan_stats
            .size_histogram
            .iter()
            .map(|(k, v)| vec![k.to_string(), v.to_string()])
            .collect(),
    }];
    if !report.agreement.is_empty() {
        curves.push(PlotCurve {
            file: "agreement.csv",
            description: "thermodynamic coupling: disagreement on the window per region",
            columns: vec![
                ("region", "box as lower:upper"),
                ("volume", "number of sites in the box"),
                (
                    "disagreement",
                    "fraction of replicas whose window restriction differs",
                ),
                ("contains_clan", "fraction of replicas whose clan lies in the box"),
            ],
            rows: report
                .agreement
                .iter()
                .map(|a| {
                    vec![
                        a.region.to_string(),
                        a.region.volume().unwrap_or(0).to_string(),
                        num(a.disagreement),
                        num(a.contains_clan),
                    ]
                })
                .collect(),
        });
    }
    if !report.uniqueness.is_empty() {
        curves.push(PlotCurve {
            file: "uniqueness.csv",
            description: "forward coupling from the initial permutation",
            columns: vec![
                ("t_back", "start time before 0"),
                (
                    "disagreement",
                    "fraction of replicas disagreeing on the window at 0",
                ),
            ],
            rows: report
                .uniqueness
                .iter()
                .map(|u| vec![num(u.t_back), num(u.disagreement)])
                .collect(),
        });
    }
    emit_plotdata(&r.out_dir, &prov, &curves)?;
    print_summary(&report);
    write_json(&r.out_dir.join("stats.json"), &report)
}

fn stats(r: &Resolved, command: &str) -> Result<(), CliError> {
    let input = r
        .config
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("stats needs an input samples file".into()))?;
    let text = std::fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
    let samples = read_samples(&text)?;
    if samples.is_empty() {
        return Err(CliError::Config("samples file holds no samples".into()));
    }
    let cat = catalog_at(r, r.config.alpha)?;
    let cert = certificate(&cat);
    let prov = Provenance::new(command, r, &cat, &cert);
    let hist = cycle_length_histogram(&samples);
    let report = StatsReport {
        provenance: prov,
        window: samples[0].window,
        shift: samples[0].shift.map(|v| v.coords().to_vec()),
        replicas: samples.len(),
        fraction_non_fixed: hist.fraction_non_fixed(),
        cycle_length_histogram: hist,
        mean_jump: mean_jump(&samples).ok(),
        clans: None,
        agreement: Vec::new(),
        uniqueness: Vec::new(),
    };
    print_summary(&report);
    write_json(&r.out_dir.join("stats.json"), &report)
}

fn print_summary(report: &StatsReport) {
    println!(
        "{} samples on {}, non-fixed fraction {:.6}",
        report.replicas, report.window, report.fraction_non_fixed
    );
    if let Some(m) = &report.mean_jump {
        println!("mean jump {:?} +- {:?}", m.mean, m.std_error);
    }
    if let Some(c) = &report.clans {
        println!("mean clan size {:.4}, max radius {}", c.mean_size, c.max_radius);
    }
    for a in &report.agreement {
        println!("region {}: disagreement {:.4}", a.region, a.disagreement);
    }
    for u in &report.uniqueness {
        println!("t_back {}: disagreement {:.4}", u.t_back, u.disagreement);
    }
}
