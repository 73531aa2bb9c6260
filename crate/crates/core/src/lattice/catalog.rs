use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoxRegion, Cycle, LatticeError, Site};
use crate::bounds;
use crate::hexfloat::{format_f64, parse_f64};
use crate::potentials::{check_alpha, parse_potential_id, Potential};

/// Truncation parameters of a catalog.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cutoffs {
    /// Longest cycle kept.
    pub max_len: usize,
    /// Largest Euclidean jump norm `||gamma(x) - x||` kept.
    pub max_jump: f64,
    /// Cycles lighter than this are dropped; `0` keeps everything.
    #[serde(default)]
    pub min_weight: f64,
    /// Hard cap on the number of translation classes.
    #[serde(default = "default_max_classes")]
    pub max_classes: usize,
}

fn default_max_classes() -> usize {
    2_000_000
}

impl Cutoffs {
    pub fn new(max_len: usize, max_jump: f64) -> Self {
        Cutoffs {
            max_len,
            max_jump,
            min_weight: 0.0,
            max_classes: default_max_classes(),
        }
    }

    pub fn with_min_weight(mut self, w: f64) -> Self {
        self.min_weight = w;
        self
    }

    pub fn with_max_classes(mut self, cap: usize) -> Self {
        self.max_classes = cap;
        self
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.max_len < 2 {
            return Err(LatticeError::BadCutoffs(format!(
                "max_len must be >= 2, got {}",
                self.max_len
            )));
        }
        if !(self.max_jump.is_finite() && self.max_jump >= 1.0) {
            return Err(LatticeError::BadCutoffs(format!(
                "max_jump must be finite and >= 1, got {}",
                self.max_jump
            )));
        }
        if !(0.0..1.0).contains(&self.min_weight) {
            return Err(LatticeError::BadCutoffs(format!(
                "min_weight must lie in [0, 1), got {}",
                self.min_weight
            )));
        }
        if self.max_classes == 0 {
            return Err(LatticeError::BadCutoffs("max_classes must be positive".into()));
        }
        Ok(())
    }

    /// Squared jump radius with a little slack for `sqrt(2)`-style inputs.
    pub(crate) fn max_jump_sq(&self) -> f64 {
        self.max_jump * self.max_jump + 1e-9
    }
}

/// One translation class: a cycle whose lexicographically smallest site is
/// the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleClass {
    pub cycle: Cycle,
    pub energy: f64,
    pub weight: f64,
}

/// A class translated so that its smallest site sits at `anchor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlacedCycle {
    pub anchor: Site,
    pub class: u32,
}

/// Metadata recorded in catalog files.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogHeader {
    pub dim: usize,
    pub potential: String,
    pub alpha: f64,
    pub cutoffs: Cutoffs,
    pub tail_bound: f64,
}

/// All admissible cycles up to translation, with weights and a certified
/// bound on the weighted mass the cutoffs leave out.
#[derive(Clone, Debug)]
pub struct CycleCatalog {
    dim: usize,
    potential: Potential,
    alpha: f64,
    cutoffs: Cutoffs,
    classes: Vec<CycleClass>,
    tail_bound: f64,
    // offset -> classes having a site at that offset from their anchor
    containing: BTreeMap<Site, Vec<u32>>,
    total_weight: f64,
}

/// Enumerates every canonical cycle through the origin obeying `cutoffs`.
///
/// Depth-first over self-avoiding paths from the origin that only visit
/// sites lexicographically above it, so each translation class is found
/// exactly once, at its anchor.
pub fn enumerate_cycles(
    dim: usize,
    cutoffs: Cutoffs,
    potential: &Potential,
    alpha: f64,
) -> Result<CycleCatalog, LatticeError> {
    cutoffs.validate()?;
    check_alpha(alpha)?;
    if potential.dim() != dim {
        return Err(LatticeError::DimensionMismatch {
            expected: dim,
            found: potential.dim(),
        });
    }
    let origin = Site::origin(dim);
    let r_sq = cutoffs.max_jump_sq();
    let r = cutoffs.max_jump.floor() as i32;
    let mut jumps: Vec<(Site, f64)> = BoxRegion::cube(origin, r)
        .sites()
        .into_iter()
        .filter(|y| !y.is_origin() && (y.norm_sq() as f64) <= r_sq)
        .map(|y| (y, potential.evaluate(&y)))
        .filter(|(_, v)| v.is_finite())
        .collect();
    jumps.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let prune_energy = potential.is_nonnegative() && cutoffs.min_weight > 0.0;
    let max_energy = if cutoffs.min_weight > 0.0 {
        -cutoffs.min_weight.ln() / alpha
    } else {
        f64::INFINITY
    };
    let min_jump_energy = jumps.iter().map(|j| j.1).fold(f64::INFINITY, f64::min);

    let mut search = Search {
        jumps: &jumps,
        potential,
        alpha,
        cutoffs: &cutoffs,
        r_sq,
        prune_energy,
        max_energy: max_energy * (1.0 + 1e-12) + 1e-12,
        min_jump_energy,
        path: vec![origin],
        found: Vec::new(),
    };
    search.extend(0.0)?;
    let mut classes = search.found;
    classes.sort_by(|a, b| a.cycle.cmp(&b.cycle));

    let tail_bound = bounds::catalog_tail_bound(potential, alpha, &cutoffs);
    Ok(CycleCatalog::from_parts(
        dim,
        potential.clone(),
        alpha,
        cutoffs,
        classes,
        tail_bound,
    ))
}

struct Search<'a> {
    jumps: &'a [(Site, f64)],
    potential: &'a Potential,
    alpha: f64,
    cutoffs: &'a Cutoffs,
    r_sq: f64,
    prune_energy: bool,
    max_energy: f64,
    min_jump_energy: f64,
    path: Vec<Site>,
    found: Vec<CycleClass>,
}

impl Search<'_> {
    fn extend(&mut self, energy: f64) -> Result<(), LatticeError> {
        let last = *self.path.last().unwrap();
        if self.path.len() >= 2 {
            let close = -last;
            if (close.norm_sq() as f64) <= self.r_sq {
                let v = self.potential.evaluate(&close);
                if v.is_finite() {
                    let cycle = Cycle::from_canonical_unchecked(self.path.clone());
                    let e = self.potential.cycle_energy(&cycle);
                    let w = (-self.alpha * e).exp();
                    if w > 0.0 && w >= self.cutoffs.min_weight {
                        if self.found.len() >= self.cutoffs.max_classes {
                            return Err(LatticeError::CatalogTooLarge(self.cutoffs.max_classes));
                        }
                        self.found.push(CycleClass {
                            cycle,
                            energy: e,
                            weight: w,
                        });
                    }
                }
            }
        }
        if self.path.len() >= self.cutoffs.max_len {
            return Ok(());
        }
        // jumps still available after this one, including the closing jump
        let remaining = (self.cutoffs.max_len - self.path.len()) as f64;
        let reach_sq = remaining * remaining * self.r_sq;
        for &(y, v) in self.jumps {
            if self.prune_energy && energy + v + self.min_jump_energy > self.max_energy {
                // jumps are sorted by energy
                break;
            }
            let next = last + y;
            if next <= self.path[0] || self.path.contains(&next) {
                continue;
            }
            if next.norm_sq() as f64 > reach_sq {
                continue;
            }
            self.path.push(next);
            self.extend(energy + v)?;
            self.path.pop();
        }
        Ok(())
    }
}

impl CycleCatalog {
    fn from_parts(
        dim: usize,
        potential: Potential,
        alpha: f64,
        cutoffs: Cutoffs,
        classes: Vec<CycleClass>,
        tail_bound: f64,
    ) -> Self {
        let mut containing: BTreeMap<Site, Vec<u32>> = BTreeMap::new();
        for (i, c) in classes.iter().enumerate() {
            for s in c.cycle.sites() {
                containing.entry(*s).or_default().push(i as u32);
            }
        }
        // fixed summation order keeps totals bit-stable
        let total_weight = classes.iter().map(|c| c.weight).sum();
        CycleCatalog {
            dim,
            potential,
            alpha,
            cutoffs,
            classes,
            tail_bound,
            containing,
            total_weight,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cutoffs(&self) -> &Cutoffs {
        &self.cutoffs
    }

    /// Certified bound on `sum |gamma| w(gamma)` over excluded cycles through
    /// the origin. May be `+inf` when the series argument does not converge.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn classes(&self) -> &[CycleClass] {
        &self.classes
    }

    pub fn class(&self, i: u32) -> &CycleClass {
        &self.classes[i as usize]
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Sum of class weights: the birth rate of cycles anchored at one site.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Every site `o` such that some class has a site at offset `o` from its
    /// anchor.
    pub fn offsets(&self) -> impl Iterator<Item = &Site> {
        self.containing.keys()
    }

    /// Classes with a site at `offset` from their anchor.
    pub fn classes_containing(&self, offset: &Site) -> &[u32] {
        self.containing.get(offset).map_or(&[], |v| v.as_slice())
    }

    /// The translates of all classes that pass through the origin.
    pub fn cycles_through_origin(&self) -> Vec<Cycle> {
        self.cycles_through(&Site::origin(self.dim))
    }

    /// The catalog's cycles that pass through `x`.
    pub fn cycles_through(&self, x: &Site) -> Vec<Cycle> {
        let mut out: Vec<Cycle> = self
            .placed_through(x)
            .into_iter()
            .map(|p| self.cycle_of(&p))
            .collect();
        out.sort();
        out
    }

    /// Placed cycles containing `x`.
    pub fn placed_through(&self, x: &Site) -> Vec<PlacedCycle> {
        let mut out = Vec::new();
        for (o, classes) in &self.containing {
            for &class in classes {
                out.push(PlacedCycle {
                    anchor: *x - *o,
                    class,
                });
            }
        }
        out
    }

    pub fn cycle_of(&self, p: &PlacedCycle) -> Cycle {
        self.classes[p.class as usize].cycle.translate(p.anchor)
    }

    pub fn weight_of(&self, p: &PlacedCycle) -> f64 {
        self.classes[p.class as usize].weight
    }

    pub fn len_of(&self, p: &PlacedCycle) -> usize {
        self.classes[p.class as usize].cycle.len()
    }

    /// Sites of a placed cycle in canonical order.
    pub fn sites_of<'a>(&'a self, p: &'a PlacedCycle) -> impl Iterator<Item = Site> + 'a {
        self.classes[p.class as usize]
            .cycle
            .sites()
            .iter()
            .map(move |s| *s + p.anchor)
    }

    /// Looks up the class and anchor of a cycle, if the catalog has it.
    pub fn locate(&self, cycle: &Cycle) -> Option<PlacedCycle> {
        let anchor = cycle.sites()[0];
        let anchored = cycle.translate(-anchor);
        self.classes
            .binary_search_by(|c| c.cycle.cmp(&anchored))
            .ok()
            .map(|i| PlacedCycle {
                anchor,
                class: i as u32,
            })
    }

    /// `sum_{gamma through 0} |gamma| w(gamma)` over the catalog. Each class
    /// has `|gamma|` translates through the origin.
    pub fn truncated_beta(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| {
                let n = c.cycle.len() as f64;
                n * n * c.weight
            })
            .sum()
    }

    /// Cycles of the catalog with support inside the finite box `region`.
    pub fn restrict(&self, region: &BoxRegion) -> Result<RegionCatalog<'_>, LatticeError> {
        if !region.is_finite() {
            return Err(LatticeError::UnboundedRegion);
        }
        let mut placed = Vec::new();
        for anchor in region.sites() {
            for (i, c) in self.classes.iter().enumerate() {
                if c.cycle.sites().iter().all(|s| region.contains(&(*s + anchor))) {
                    placed.push(PlacedCycle {
                        anchor,
                        class: i as u32,
                    });
                }
            }
        }
        placed.sort_by_cached_key(|p| self.cycle_of(p));
        Ok(RegionCatalog {
            catalog: self,
            region: *region,
            placed,
        })
    }

    pub fn header(&self) -> CatalogHeader {
        CatalogHeader {
            dim: self.dim,
            potential: self.potential.id(),
            alpha: self.alpha,
            cutoffs: self.cutoffs,
            tail_bound: self.tail_bound,
        }
    }

    /// Text form: `#`-prefixed header, then one class per line as its sites
    /// followed by the weight as a hex float.
    pub fn to_text(&self) -> String {
        let mut out = write_header(&self.header());
        for c in &self.classes {
            let _ = writeln!(out, "{} {}", c.cycle, format_f64(c.weight));
        }
        out
    }

    /// Reads the format written by [`CycleCatalog::to_text`]. Energies are
    /// recomputed from the potential; stored weights must match them exactly.
    pub fn from_text(text: &str) -> Result<CycleCatalog, LatticeError> {
        let header = parse_header(text)?;
        let potential = parse_potential_id(&header.potential, header.dim)?;
        let mut classes = Vec::new();
        for line in text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        {
            let (cycle, weight) = parse_cycle_line(line)?;
            let weight = weight.ok_or_else(|| LatticeError::Parse(format!("missing weight in `{line}`")))?;
            if !cycle.sites()[0].is_origin() {
                return Err(LatticeError::Parse(format!(
                    "class not anchored at origin: `{line}`"
                )));
            }
            let energy = potential.cycle_energy(&cycle);
            if (-header.alpha * energy).exp() != weight {
                return Err(LatticeError::Parse(format!(
                    "stored weight disagrees with the potential: `{line}`"
                )));
            }
            classes.push(CycleClass {
                cycle,
                energy,
                weight,
            });
        }
        classes.sort_by(|a, b| a.cycle.cmp(&b.cycle));
        Ok(CycleCatalog::from_parts(
            header.dim,
            potential,
            header.alpha,
            header.cutoffs,
            classes,
            header.tail_bound,
        ))
    }

    pub fn save(&self, path: &Path) -> Result<(), LatticeError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CycleCatalog, LatticeError> {
        CycleCatalog::from_text(&std::fs::read_to_string(path)?)
    }
}

pub(crate) fn write_header(h: &CatalogHeader) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# cyclegas catalog v1");
    let _ = writeln!(out, "# dim {}", h.dim);
    let _ = writeln!(out, "# potential {}", h.potential);
    let _ = writeln!(out, "# alpha {}", format_f64(h.alpha));
    let _ = writeln!(out, "# max_len {}", h.cutoffs.max_len);
    let _ = writeln!(out, "# max_jump {}", format_f64(h.cutoffs.max_jump));
    let _ = writeln!(out, "# min_weight {}", format_f64(h.cutoffs.min_weight));
    let _ = writeln!(out, "# max_classes {}", h.cutoffs.max_classes);
    let _ = writeln!(out, "# tail_bound {}", format_f64(h.tail_bound));
    out
}

pub(crate) fn parse_header(text: &str) -> Result<CatalogHeader, LatticeError> {
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for line in text.lines() {
        let Some(rest) = line.strip_prefix('#') else {
            continue;
        };
        if let Some((k, v)) = rest.trim().split_once(' ') {
            fields.insert(k, v.trim());
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| LatticeError::Parse(format!("header field `{k}` missing")))
    };
    let num = |k: &str| -> Result<f64, LatticeError> {
        parse_f64(get(k)?).ok_or_else(|| LatticeError::Parse(format!("header field `{k}`")))
    };
    let int = |k: &str| -> Result<usize, LatticeError> {
        get(k)?
            .parse()
            .map_err(|_| LatticeError::Parse(format!("header field `{k}`")))
    };
    Ok(CatalogHeader {
        dim: int("dim")?,
        potential: get("potential")?.to_string(),
        alpha: num("alpha")?,
        cutoffs: Cutoffs {
            max_len: int("max_len")?,
            max_jump: num("max_jump")?,
            min_weight: num("min_weight")?,
            max_classes: int("max_classes")?,
        },
        tail_bound: num("tail_bound")?,
    })
}

/// Parses `(x,y) (x,y) ... [weight]`.
pub(crate) fn parse_cycle_line(line: &str) -> Result<(Cycle, Option<f64>), LatticeError> {
    let mut sites = Vec::new();
    let mut weight = None;
    for tok in line.split_whitespace() {
        if tok.starts_with('(') {
            sites.push(tok.parse::<Site>()?);
        } else {
            weight = Some(parse_f64(tok).ok_or_else(|| LatticeError::Parse(format!("bad number `{tok}`")))?);
        }
    }
    Ok((Cycle::canonicalize(&sites)?, weight))
}

/// The catalog's cycles with support inside a finite box.
#[derive(Clone, Debug)]
pub struct RegionCatalog<'a> {
    catalog: &'a CycleCatalog,
    region: BoxRegion,
    placed: Vec<PlacedCycle>,
}

impl<'a> RegionCatalog<'a> {
    pub fn catalog(&self) -> &'a CycleCatalog {
        self.catalog
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    /// Placed cycles, sorted by canonical cycle.
    pub fn placed(&self) -> &[PlacedCycle] {
        &self.placed
    }

    pub fn len(&self) -> usize {
        self.placed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placed.is_empty()
    }

    pub fn cycles(&self) -> Vec<Cycle> {
        self.placed.iter().map(|p| self.catalog.cycle_of(p)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.placed.iter().map(|p| self.catalog.weight_of(p)).collect()
    }

    /// Further restriction to `inner`; equal to restricting the catalog
    /// directly when `inner` lies inside this region.
    pub fn restrict(&self, inner: &BoxRegion) -> Result<RegionCatalog<'a>, LatticeError> {
        if !inner.is_finite() {
            return Err(LatticeError::UnboundedRegion);
        }
        let placed = self
            .placed
            .iter()
            .filter(|p| self.catalog.sites_of(p).all(|s| inner.contains(&s)))
            .copied()
            .collect();
        let region = if self.region.contains_region(inner) {
            *inner
        } else {
            self.region
        };
        Ok(RegionCatalog {
            catalog: self.catalog,
            region,
            placed,
        })
    }

    pub fn support(&self) -> BTreeSet<Site> {
        self.placed
            .iter()
            .flat_map(|p| self.catalog.sites_of(p).collect::<Vec<_>>())
            .collect()
    }
}
