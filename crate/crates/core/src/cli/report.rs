use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Serialize, Serializer};

use super::config::Resolved;
use super::CliError;
use crate::bounds::Certificate;
use crate::hexfloat::format_f64;
use crate::lattice::{parse_cycle_line, BoxRegion, CycleCatalog, Permutation, Site};
use crate::sampler::{ClanSummary, CouplingPoint, WindowSample};
use crate::stats::{CycleLengthHistogram, GenerationRatio, MeanJump};

/// Finite numbers as JSON numbers, others as the strings `inf`, `-inf`,
/// `nan` (JSON has no encoding for them).
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&format_f64(*x))
    }
}

/// Where every number of a run comes from.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub potential: String,
    pub alpha: f64,
    #[serde(serialize_with = "ser_f64")]
    pub tail_bound: f64,
    /// Exact bits of `tail_bound`.
    pub tail_bound_hex: String,
    #[serde(serialize_with = "ser_f64")]
    pub beta_upper: f64,
    pub certificate_method: String,
    pub certified: bool,
    /// `UNCERTIFIED` when sampling ran without a certificate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<&'static str>,
}

impl Provenance {
    pub fn new(command: &str, r: &Resolved, catalog: &CycleCatalog, cert: &Certificate) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config_hash: r.hash.clone(),
            seed: r.config.seed,
            potential: catalog.potential().id(),
            alpha: catalog.alpha(),
            tail_bound: catalog.tail_bound(),
            tail_bound_hex: format_f64(catalog.tail_bound()),
            beta_upper: cert.beta_upper,
            certificate_method: cert.method.clone(),
            certified: cert.is_subcritical(),
            label: None,
        }
    }

    /// `# key value` lines for text outputs.
    pub fn header_lines(&self) -> String {
        let mut out = String::new();
        if let Some(l) = self.label {
            let _ = writeln!(out, "# {l}");
        }
        let _ = writeln!(out, "# tool {} {}", self.tool, self.version);
        let _ = writeln!(out, "# command {}", self.command);
        let _ = writeln!(out, "# config_hash {}", self.config_hash);
        let _ = writeln!(out, "# seed {}", self.seed);
        let _ = writeln!(out, "# potential {}", self.potential);
        let _ = writeln!(out, "# alpha {}", format_f64(self.alpha));
        let _ = writeln!(out, "# tail_bound {}", self.tail_bound_hex);
        let _ = writeln!(out, "# beta_upper {}", format_f64(self.beta_upper));
        let _ = writeln!(out, "# certificate {}", self.certificate_method);
        out
    }
}

/// Per-Λ agreement of the thermodynamic coupling.
#[derive(Clone, Debug, Serialize)]
pub struct AgreementRow {
    pub region: BoxRegion,
    pub disagreement: f64,
    pub contains_clan: f64,
    pub disagreement_given_contained: u64,
}

pub fn agreement_curve(regions: &[BoxRegion], per_replica: &[Vec<CouplingPoint>]) -> Vec<AgreementRow> {
    let n = per_replica.len() as f64;
    regions
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let pts = per_replica.iter().map(|v| &v[k]);
            AgreementRow {
                region: *r,
                disagreement: pts.clone().filter(|p| !p.agrees).count() as f64 / n,
                contains_clan: pts.clone().filter(|p| p.contains_clan).count() as f64 / n,
                disagreement_given_contained: pts.filter(|p| p.contains_clan && !p.agrees).count() as u64,
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessRow {
    pub t_back: f64,
    pub disagreement: f64,
    pub mean_differing_cycles: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ClanStats {
    pub size_histogram: BTreeMap<usize, u64>,
    pub depth_histogram: BTreeMap<u32, u64>,
    pub max_radius: i32,
    pub mean_size: f64,
    pub generation_ratios: Vec<GenerationRatio>,
    pub generation_mass_ratios: Vec<GenerationRatio>,
}

impl ClanStats {
    pub fn of(clans: &[ClanSummary]) -> Self {
        let mut s = ClanStats::default();
        for c in clans {
            *s.size_histogram.entry(c.size).or_default() += 1;
            *s.depth_histogram.entry(c.depth).or_default() += 1;
            s.max_radius = s.max_radius.max(c.radius);
        }
        s.mean_size = clans.iter().map(|c| c.size as f64).sum::<f64>() / clans.len().max(1) as f64;
        s.generation_ratios = crate::stats::generation_ratios(clans, false, 30.0);
        s.generation_mass_ratios = crate::stats::generation_ratios(clans, true, 30.0);
        s
    }
}

/// Summary of a batch of window samples.
#[derive(Clone, Debug, Serialize)]
pub struct StatsReport {
    pub provenance: Provenance,
    pub window: BoxRegion,
    pub shift: Option<Vec<i32>>,
    pub replicas: usize,
    pub cycle_length_histogram: CycleLengthHistogram,
    pub fraction_non_fixed: f64,
    pub mean_jump: Option<MeanJump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clans: Option<ClanStats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub agreement: Vec<AgreementRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub uniqueness: Vec<UniquenessRow>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Sample blocks: `sample <i> <number of cycles>` followed by one cycle per
/// line in the catalog format.
pub fn samples_text(
    prov: &Provenance,
    window: &BoxRegion,
    shift: Option<Site>,
    perms: &[&Permutation],
    catalog: &CycleCatalog,
) -> String {
    let mut out = String::from("# cyclegas samples v1\n");
    out.push_str(&prov.header_lines());
    let _ = writeln!(out, "# window {window}");
    if let Some(v) = shift {
        let _ = writeln!(out, "# shift {v}");
    }
    for (i, p) in perms.iter().enumerate() {
        let _ = writeln!(out, "sample {i} {}", p.cycles().len());
        for c in p.cycles() {
            let w = catalog.potential().weight(catalog.alpha(), c).unwrap_or(0.0);
            let _ = writeln!(out, "{c} {}", format_f64(w));
        }
    }
    out
}

/// Reads a samples file back into window samples.
pub fn read_samples(text: &str) -> Result<Vec<WindowSample>, CliError> {
    let bad = |m: String| CliError::Config(format!("samples file: {m}"));
    let mut window = None;
    let mut shift = None;
    for line in text.lines() {
        if let Some(w) = line.strip_prefix("# window ") {
            window = Some(w.parse::<BoxRegion>().map_err(|e| bad(e.to_string()))?);
        } else if let Some(v) = line.strip_prefix("# shift ") {
            shift = Some(v.parse::<Site>().map_err(|e| bad(e.to_string()))?);
        }
    }
    let window = window.ok_or_else(|| bad("no `# window` line".into()))?;
    let mut out = Vec::new();
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    while let Some(head) = lines.next() {
        let mut parts = head.split_whitespace();
        let n: usize = match (parts.next(), parts.next(), parts.next()) {
            (Some("sample"), Some(_), Some(n)) => n.parse().map_err(|_| bad(format!("bad line `{head}`")))?,
            _ => return Err(bad(format!("expected `sample`, found `{head}`"))),
        };
        let mut cycles = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines.next().ok_or_else(|| bad("truncated sample".into()))?;
            cycles.push(parse_cycle_line(line).map_err(|e| bad(e.to_string()))?.0);
        }
        out.push(WindowSample {
            window,
            permutation: Permutation::new(cycles).map_err(|e| bad(e.to_string()))?,
            shift,
            clan: None,
        });
    }
    Ok(out)
}

/// One curve of plot data: a CSV file and its column documentation.
pub struct PlotCurve {
    pub file: &'static str,
    pub description: &'static str,
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct SchemaEntry {
    description: &'static str,
    columns: BTreeMap<&'static str, &'static str>,
    column_order: Vec<&'static str>,
}

/// Writes each curve as CSV and documents them all in
/// `plotdata_schema.json`.
pub fn emit_plotdata(dir: &Path, prov: &Provenance, curves: &[PlotCurve]) -> Result<(), CliError> {
    let mut schema: BTreeMap<&str, SchemaEntry> = BTreeMap::new();
    for c in curves {
        let path = dir.join(c.file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Other(e.to_string()))?;
        w.write_record(c.columns.iter().map(|(n, _)| *n))
            .map_err(|e| CliError::Other(e.to_string()))?;
        for row in &c.rows {
            w.write_record(row).map_err(|e| CliError::Other(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        schema.insert(
            c.file,
            SchemaEntry {
                description: c.description,
                columns: c.columns.iter().copied().collect(),
                column_order: c.columns.iter().map(|(n, _)| *n).collect(),
            },
        );
    }
    #[derive(Serialize)]
    struct Sidecar<'a> {
        provenance: &'a Provenance,
        files: BTreeMap<&'a str, SchemaEntry>,
    }
    write_json(
        &dir.join("plotdata_schema.json"),
        &Sidecar {
            provenance: prov,
            files: schema,
        },
    )
}

/// Full-precision decimal form of a float for CSV cells.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        format_f64(x)
    }
}
