//! Infinite-volume perfect sampling through the clan of ancestors.

mod clan;

pub use clan::{build_clan, Clan, ClanCaps, ClanNode, ExtraCylinder, Label, NodeKey};

use std::collections::BTreeMap;

use rand::distr::Distribution;
use rand_distr::Exp1;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{certificate, Certificate};
use crate::dynamics::{sample_g_lambda_exact, DynamicsError, PoissonField};
use crate::lattice::{BoxRegion, CycleCatalog, LatticeError, Permutation, Site};
use crate::rng::{stream, TAG_INITIAL};
use clan::{build_clan_with, ClanSpec};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("no certificate of subcriticality: beta upper bound is {0}")]
    NotCertifiedSubcritical(f64),
    #[error("clan exceeded {0} nodes")]
    ClanCapExceeded(usize),
    #[error("clan reached beyond {0} sites from the window")]
    HaloCapExceeded(i32),
    #[error("node {0} was reached before its ancestors were labeled")]
    UnlabeledNode(usize),
    #[error("shift {0} does not match the catalog's potential")]
    ShiftMismatch(Site),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Shape of one clan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClanSummary {
    pub size: usize,
    pub roots: usize,
    pub depth: u32,
    pub radius: i32,
    pub generation_sizes: Vec<usize>,
    pub generation_masses: Vec<usize>,
}

impl ClanSummary {
    pub fn of(clan: &Clan) -> Self {
        ClanSummary {
            size: clan.len(),
            roots: clan.roots.len(),
            depth: clan.depth(),
            radius: clan.radius(),
            generation_sizes: clan.generation_sizes(),
            generation_masses: clan.generation_masses(),
        }
    }
}

/// The restriction to a window of one sample: the cycles meeting the
/// window, and for shift boundary conditions the shift `v`, so that the
/// sampled map is `x -> zeta(x) + v`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample {
    pub window: BoxRegion,
    pub permutation: Permutation,
    pub shift: Option<Site>,
    pub clan: Option<ClanSummary>,
}

impl WindowSample {
    /// `zeta(x) + v`.
    pub fn image(&self, x: &Site) -> Site {
        let y = self.permutation.image(x);
        match self.shift {
            Some(v) => y + v,
            None => y,
        }
    }

    pub fn jump(&self, x: &Site) -> Site {
        self.image(x) - *x
    }

    /// `x -> image(x)` for every window site that moves.
    pub fn restricted_map(&self) -> BTreeMap<Site, Site> {
        self.window
            .sites()
            .into_iter()
            .map(|x| (x, self.image(&x)))
            .filter(|(x, y)| x != y)
            .collect()
    }
}

/// Agreement of the window restriction for one Λ of a nested family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingPoint {
    pub region: BoxRegion,
    pub agrees: bool,
    pub contains_clan: bool,
}

/// Outcome of the forward coupling from an initial permutation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessOutcome {
    pub t_back: f64,
    pub agrees: bool,
    /// Cycles meeting the window present in exactly one of the two states.
    pub differing_cycles: usize,
}

/// Clan-of-ancestors sampler over a fixed catalog, gated by a
/// subcriticality certificate.
pub struct PerfectSampler<'a> {
    catalog: &'a CycleCatalog,
    certificate: Certificate,
    certified: bool,
    caps: ClanCaps,
}

impl<'a> PerfectSampler<'a> {
    /// Refuses unless the catalog's certificate gives `beta < 1`.
    pub fn new(catalog: &'a CycleCatalog, caps: ClanCaps) -> Result<Self, SamplerError> {
        let cert = certificate(catalog);
        if !cert.is_subcritical() {
            return Err(SamplerError::NotCertifiedSubcritical(cert.beta_upper));
        }
        Ok(PerfectSampler {
            catalog,
            certificate: cert,
            certified: true,
            caps,
        })
    }

    /// Runs without a certificate; clans may then hit the caps.
    pub fn uncertified(catalog: &'a CycleCatalog, caps: ClanCaps) -> Self {
        let cert = certificate(catalog);
        PerfectSampler {
            certified: cert.is_subcritical(),
            catalog,
            certificate: cert,
            caps,
        }
    }

    pub fn catalog(&self) -> &'a CycleCatalog {
        self.catalog
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub fn caps(&self) -> &ClanCaps {
        &self.caps
    }

    pub fn field(&self, seed: u64) -> PoissonField<'a> {
        PoissonField::new(self.catalog, seed)
    }

    /// Builds and classifies the clan of `window`.
    pub fn clan(&self, field: &mut PoissonField<'_>, window: &BoxRegion) -> Result<Clan, SamplerError> {
        let mut clan = build_clan(field, window, &self.caps)?;
        clan.classify()?;
        Ok(clan)
    }

    /// A draw of the infinite-volume measure restricted to `window`.
    pub fn sample_mu_window(&self, seed: u64, window: &BoxRegion) -> Result<WindowSample, SamplerError> {
        let mut field = self.field(seed);
        let clan = self.clan(&mut field, window)?;
        Ok(window_sample(&clan, None))
    }

    /// A draw under the shift boundary condition `x -> x + v`. The catalog
    /// must carry the `v`-shifted potential.
    pub fn sample_mu_v_window(
        &self,
        seed: u64,
        window: &BoxRegion,
        v: Site,
    ) -> Result<WindowSample, SamplerError> {
        let expected = self.catalog.potential().shift().unwrap_or(Site::origin(v.dim()));
        if expected != v {
            return Err(SamplerError::ShiftMismatch(v));
        }
        let mut s = self.sample_mu_window(seed, window)?;
        s.shift = (!v.is_origin()).then_some(v);
        Ok(s)
    }

    /// For each box of `regions`, whether the window restriction of the
    /// finite-volume process driven by the same field agrees with the
    /// infinite-volume one.
    pub fn thermodynamic_coupling(
        &self,
        seed: u64,
        window: &BoxRegion,
        regions: &[BoxRegion],
    ) -> Result<Vec<CouplingPoint>, SamplerError> {
        let mut field = self.field(seed);
        let clan = self.clan(&mut field, window)?;
        let full = window_sample(&clan, None).restricted_map();
        let support = clan.spatial_support();
        regions
            .iter()
            .map(|r| {
                let labels = clan.labels_within(Some(r))?;
                let perm = Permutation::new(clan.kept_roots(&labels))?;
                let local = WindowSample {
                    window: *window,
                    permutation: perm,
                    shift: None,
                    clan: None,
                };
                Ok(CouplingPoint {
                    region: *r,
                    agrees: local.restricted_map() == full,
                    contains_clan: clan.is_empty() || r.contains_region(&support),
                })
            })
            .collect()
    }

    /// Runs the loss network from `initial` at time `-t_back` on the points
    /// of the same field born after `-t_back`, and compares with the
    /// stationary state on the window at time 0.
    pub fn uniqueness_forward_coupling(
        &self,
        seed: u64,
        window: &BoxRegion,
        initial: &Permutation,
        t_back: f64,
    ) -> Result<UniquenessOutcome, SamplerError> {
        let mut field = self.field(seed);
        let stationary = self.clan(&mut field, window)?;
        let extra: Vec<ExtraCylinder> = initial
            .cycles()
            .iter()
            .map(|c| {
                let mut words: Vec<i64> = Vec::new();
                for s in c.sites() {
                    words.extend(s.coords().iter().map(|&x| x as i64));
                }
                let life: f64 = Exp1.sample(&mut stream(seed, TAG_INITIAL, &words));
                ExtraCylinder {
                    cycle: c.clone(),
                    birth: -t_back,
                    death: -t_back + life,
                }
            })
            .collect();
        let mut coupled = build_clan_with(
            &mut field,
            window,
            &self.caps,
            &ClanSpec {
                earliest: -t_back,
                extra: &extra,
            },
        )?;
        coupled.classify()?;
        let a = window_sample(&stationary, None);
        let b = window_sample(&coupled, None);
        let differing = a
            .permutation
            .cycles()
            .iter()
            .filter(|c| !b.permutation.cycles().contains(c))
            .count()
            + b.permutation
                .cycles()
                .iter()
                .filter(|c| !a.permutation.cycles().contains(c))
                .count();
        Ok(UniquenessOutcome {
            t_back,
            agrees: a.restricted_map() == b.restricted_map(),
            differing_cycles: differing,
        })
    }

    /// Recomputes the window sample by brute force: cuts a slab of the same
    /// field over the clan's bounding box, finds an empty time, and runs the
    /// loss network forward to 0. Returns the lazy and the slab answers.
    pub fn slab_cross_validation(
        &self,
        seed: u64,
        window: &BoxRegion,
        horizon: u32,
    ) -> Result<(WindowSample, WindowSample), SamplerError> {
        let mut field = self.field(seed);
        let clan = self.clan(&mut field, window)?;
        let lazy = window_sample(&clan, None);
        let perm = sample_g_lambda_exact(&mut field, &clan.spatial_support(), horizon)?;
        let meeting: Vec<_> = perm
            .cycles()
            .iter()
            .filter(|c| window.meets_cycle(c))
            .cloned()
            .collect();
        let slab_sample = WindowSample {
            window: *window,
            permutation: Permutation::new(meeting)?,
            shift: None,
            clan: None,
        };
        Ok((lazy, slab_sample))
    }
}

fn window_sample(clan: &Clan, shift: Option<Site>) -> WindowSample {
    let labels: Vec<Option<Label>> = clan.nodes.iter().map(|n| Some(n.label)).collect();
    WindowSample {
        window: clan.window,
        permutation: Permutation::new(clan.kept_roots(&labels))
            .expect("kept roots alive at the same time are disjoint"),
        shift,
        clan: Some(ClanSummary::of(clan)),
    }
}
