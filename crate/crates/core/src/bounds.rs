//! Subcriticality bounds: `rho(V, alpha)`, the threshold `rho0`, certified
//! intervals for `beta(V, alpha)`, upper bounds on `alpha*`, and iterates of
//! the branching mean matrix.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{BoxRegion, Cutoffs, Cycle, CycleCatalog, PlacedCycle, Site};
use crate::potentials::{check_alpha, Potential, PotentialError, PotentialKind};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("series does not converge fast enough to certify a tail at alpha = {0}")]
    DivergentSeries(f64),
    #[error("rho = {0} is outside [0, 1)")]
    RhoOutOfRange(f64),
    #[error("no finite alpha brings rho below rho0")]
    NoFiniteBound,
    #[error("potential has no uniform strong-convexity modulus")]
    NoModulus,
    #[error("tail bound is infinite (rho = {0} >= 1)")]
    DivergentTail(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

// Largest cube (in sites) scanned for a direct lattice sum.
const MAX_SCAN: usize = 20_000_000;

/// `sum_{k in Z} exp(-a k^2) - 1`, as an upper bound with certified tail.
fn theta_minus_one(a: f64) -> f64 {
    let mut s = 0.0;
    let mut k: f64 = 1.0;
    loop {
        let t = (-a * k * k).exp();
        s += 2.0 * t;
        if t < 1e-17 * (1.0 + s) {
            break;
        }
        k += 1.0;
    }
    // sum_{j > k} e^{-a j^2} <= e^{-a (k+1)^2} / (1 - e^{-a (2k+3)})
    let tail = (-a * (k + 1.0) * (k + 1.0)).exp() / -(-a * (2.0 * k + 3.0)).exp_m1();
    s + 2.0 * tail
}

/// Lower bound `f(n)` on `V` over the sup-norm shell `|x|_inf = n`, for the
/// unbounded-range kinds.
fn shell_lower(pot: &Potential, n: f64) -> Option<f64> {
    match pot.kind() {
        PotentialKind::Gaussian { scale } => Some(scale * n * n),
        PotentialKind::PowerLaw { exponent } => Some(n.powi(*exponent as i32)),
        _ => None,
    }
}

/// Upper bound on `sum_{|x|_inf > m} exp(-alpha V(x))` by a geometric series
/// over shells; `+inf` if the shell terms are not yet decreasing.
fn shell_tail(pot: &Potential, alpha: f64, m: i64) -> f64 {
    let d = pot.dim() as i32;
    let term = |n: f64| {
        let count = 2.0 * d as f64 * (2.0 * n + 1.0).powi(d - 1);
        count * (-alpha * shell_lower(pot, n).unwrap()).exp()
    };
    let n = (m + 1) as f64;
    let first = term(n);
    let poly = ((2.0 * n + 3.0) / (2.0 * n + 1.0)).powi(d - 1);
    let q = poly * (-alpha * (shell_lower(pot, n + 1.0).unwrap() - shell_lower(pot, n).unwrap())).exp();
    if q >= 1.0 {
        return f64::INFINITY;
    }
    first / (1.0 - q)
}

/// Certified upper bound on `sum_{x != 0, keep(x)} exp(-alpha V(x))`.
pub fn lattice_sum(pot: &Potential, alpha: f64, keep: &dyn Fn(&Site) -> bool) -> Result<f64, BoundsError> {
    check_alpha(alpha)?;
    let dim = pot.dim();
    let finite_support: Option<Vec<Site>> = match pot.kind() {
        PotentialKind::NearestNeighbor => Some(
            (0..dim)
                .flat_map(|i| [Site::unit(dim, i), -Site::unit(dim, i)])
                .chain(std::iter::once(Site::origin(dim)))
                .collect(),
        ),
        PotentialKind::Table(t) => Some(t.entries().map(|(k, _)| *k).collect()),
        _ => None,
    };
    if let Some(support) = finite_support {
        let shift = pot.shift().unwrap_or(Site::origin(dim));
        let mut ys: Vec<Site> = support.into_iter().map(|z| z - shift).collect();
        ys.sort();
        return Ok(ys
            .iter()
            .filter(|y| !y.is_origin() && keep(y))
            .map(|y| (-alpha * pot.evaluate(y)).exp())
            .sum());
    }
    if pot.shift().is_some() {
        return Err(BoundsError::Unsupported(
            "lattice sums of shifted unbounded-range potentials".into(),
        ));
    }
    // pick the scan radius so the shell tail is negligible against the
    // first shell, subject to the scan budget
    let scale = (-alpha * shell_lower(pot, 1.0).unwrap()).exp();
    let mut m: i64 = 1;
    loop {
        let next_cube = (2 * (m + 1) + 1) as f64;
        if shell_tail(pot, alpha, m) <= 1e-17 * scale || next_cube.powi(dim as i32) > MAX_SCAN as f64 {
            break;
        }
        m += 1;
    }
    let tail = shell_tail(pot, alpha, m);
    if !tail.is_finite() {
        return Err(BoundsError::DivergentSeries(alpha));
    }
    let sum: f64 = BoxRegion::cube(Site::origin(dim), m as i32)
        .sites()
        .iter()
        .filter(|x| !x.is_origin() && keep(x))
        .map(|x| (-alpha * pot.evaluate(x)).exp())
        .sum();
    Ok(sum + tail)
}

/// `rho(V, alpha) = sum_{x != 0} exp(-alpha V(x))`, rounded up by the
/// certified truncation error.
pub fn rho(pot: &Potential, alpha: f64) -> Result<f64, BoundsError> {
    check_alpha(alpha)?;
    if let PotentialKind::Gaussian { scale } = pot.kind() {
        let t = theta_minus_one(alpha * scale);
        let d = pot.dim() as f64;
        // (1 + t)^d - 1 without cancellation
        let base = (d * t.ln_1p()).exp_m1();
        return Ok(match pot.shift() {
            None => base,
            // sum_y e^{-a(|y+v|^2 - |v|^2)} = e^{a|v|^2} theta^d, minus y = 0
            Some(v) => {
                let g = alpha * scale * v.norm_sq() as f64;
                (g + d * t.ln_1p()).exp() - 1.0
            }
        });
    }
    lattice_sum(pot, alpha, &|_| true)
}

/// The unique root in `[0, 1]` of `r/(1-r)^2 - r = 1`.
pub fn rho0() -> f64 {
    let f = |r: f64| r / ((1.0 - r) * (1.0 - r)) - r - 1.0;
    let (mut lo, mut hi) = (0.0f64, 0.9f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `beta <= rho/(1-rho)^2 - rho`.
pub fn beta_upper_from_rho(rho: f64) -> Result<f64, BoundsError> {
    if !(0.0..1.0).contains(&rho) {
        return Err(BoundsError::RhoOutOfRange(rho));
    }
    Ok(rho / ((1.0 - rho) * (1.0 - rho)) - rho)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaStarMethod {
    RhoRoot,
    GaussianExplicit,
    BetaTruncated,
    StronglyConvexShift,
}

impl AlphaStarMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            AlphaStarMethod::RhoRoot => "rho_root",
            AlphaStarMethod::GaussianExplicit => "gaussian_explicit",
            AlphaStarMethod::BetaTruncated => "beta_truncated",
            AlphaStarMethod::StronglyConvexShift => "strongly_convex_shift",
        }
    }
}

/// A certified upper bound on `alpha*`. For bisection methods `bracket`
/// holds both final endpoints; `value` is the upper one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaStarBound {
    pub value: f64,
    pub method: AlphaStarMethod,
    pub bracket: Option<(f64, f64)>,
}

/// Upper end of `{alpha : rho(V, alpha) <= rho0}` by bisection.
pub fn alpha_star_upper_rho(pot: &Potential) -> Result<AlphaStarBound, BoundsError> {
    let target = rho0();
    bisect_decreasing(|a| rho(pot, a), target, AlphaStarMethod::RhoRoot)
}

fn bisect_decreasing(
    f: impl Fn(f64) -> Result<f64, BoundsError>,
    target: f64,
    method: AlphaStarMethod,
) -> Result<AlphaStarBound, BoundsError> {
    // a divergent series counts as "above target"
    let above = |a: f64| match f(a) {
        Ok(v) => Ok(v > target),
        Err(BoundsError::DivergentSeries(_)) => Ok(true),
        Err(e) => Err(e),
    };
    let mut hi = 1.0;
    while above(hi)? {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(BoundsError::NoFiniteBound);
        }
    }
    let mut lo = hi / 2.0;
    while !above(lo)? {
        lo /= 2.0;
        if lo < 1e-12 {
            return Ok(AlphaStarBound {
                value: lo,
                method,
                bracket: Some((0.0, lo)),
            });
        }
    }
    for _ in 0..200 {
        if (f(hi)? - target).abs() < 1e-9 && hi - lo < 1e-9 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(AlphaStarBound {
        value: hi,
        method,
        bracket: Some((lo, hi)),
    })
}

/// `pi ((rho0 + 1)^{1/d} - 1)^{-2}`, from comparing the Gaussian theta sum
/// with its integral.
pub fn gaussian_alpha_star_explicit(dim: usize) -> AlphaStarBound {
    let root = ((1.0 + rho0()).ln() / dim as f64).exp_m1();
    AlphaStarBound {
        value: PI / (root * root),
        method: AlphaStarMethod::GaussianExplicit,
        bracket: None,
    }
}

/// Bound for `alpha*_v` through `V_v(cycle) >= m sum |jump|^2`.
pub fn alpha_star_shift_strongly_convex(pot: &Potential) -> Result<AlphaStarBound, BoundsError> {
    let m = pot.strong_convexity_modulus().ok_or(BoundsError::NoModulus)?;
    Ok(AlphaStarBound {
        value: gaussian_alpha_star_explicit(pot.dim()).value / m,
        method: AlphaStarMethod::StronglyConvexShift,
        bracket: None,
    })
}

/// Smallest grid value of alpha at which the catalog interval certifies
/// `beta < 1`; rebuilds a catalog per probe.
pub fn alpha_star_beta_truncated(pot: &Potential, cutoffs: Cutoffs) -> Result<AlphaStarBound, BoundsError> {
    let upper = |a: f64| -> Result<f64, BoundsError> {
        let cat = crate::lattice::enumerate_cycles(pot.dim(), cutoffs, pot, a)
            .map_err(|e| BoundsError::Unsupported(e.to_string()))?;
        let est = beta_truncated(&cat);
        Ok(est.map(|e| e.upper()).unwrap_or(f64::INFINITY))
    };
    let mut b = bisect_decreasing(
        |a| {
            let u = upper(a)?;
            if u.is_finite() {
                Ok(u)
            } else {
                Err(BoundsError::DivergentSeries(a))
            }
        },
        1.0 - 1e-12,
        AlphaStarMethod::BetaTruncated,
    )?;
    // the bisection tolerance is loose for this expensive function; keep the
    // certified side
    if upper(b.value)? >= 1.0 {
        return Err(BoundsError::NoFiniteBound);
    }
    b.method = AlphaStarMethod::BetaTruncated;
    Ok(b)
}

/// The potential whose walk sums dominate the weights of `pot`: itself when
/// unshifted or of finite range, the Gaussian of the strong-convexity
/// modulus when shifted.
pub fn dominating_potential(pot: &Potential) -> Option<Potential> {
    if pot.shift().is_none() || pot.finite_range_sq().is_some() {
        return Some(pot.clone());
    }
    let m = pot.strong_convexity_modulus()?;
    Potential::scaled_gaussian(pot.dim(), m).ok()
}

/// Certified upper bound on `sum |gamma| w(gamma)` over cycles through the
/// origin that `cutoffs` exclude. Splits the excluded set into long cycles,
/// cycles with an over-long jump, and light cycles, each bounded by walk
/// sums; `+inf` when no bound is available.
pub fn catalog_tail_bound(pot: &Potential, alpha: f64, cutoffs: &Cutoffs) -> f64 {
    tail_parts(pot, alpha, cutoffs)
        .map(|(a, b, c)| {
            let t = a + b + c;
            if t.is_nan() {
                f64::INFINITY
            } else {
                t
            }
        })
        .unwrap_or(f64::INFINITY)
}

fn tail_parts(pot: &Potential, alpha: f64, cutoffs: &Cutoffs) -> Option<(f64, f64, f64)> {
    let dom = dominating_potential(pot)?;
    let r_sq = cutoffs.max_jump_sq();
    let big_l = cutoffs.max_len as i32;
    let rho_all = rho(&dom, alpha).ok()?;
    let rho_out = lattice_sum(&dom, alpha, &|x| x.norm_sq() as f64 > r_sq).ok()?;
    let inner_jumps: Vec<f64> = BoxRegion::cube(Site::origin(pot.dim()), cutoffs.max_jump.floor() as i32)
        .sites()
        .iter()
        .filter(|x| !x.is_origin() && x.norm_sq() as f64 <= r_sq)
        .map(|x| dom.evaluate(x))
        .filter(|v| v.is_finite())
        .collect();
    let rho_in_at = |a: f64| -> f64 { inner_jumps.iter().map(|v| (-a * v).exp()).sum() };
    let rho_in = rho_in_at(alpha);

    // long cycles: sum_{n > L} n rho^n
    let long = if rho_all < 1.0 {
        let l = big_l as f64;
        rho_all.powi(big_l + 1) * ((l + 1.0) - l * rho_all) / ((1.0 - rho_all) * (1.0 - rho_all))
    } else {
        f64::INFINITY
    };

    // walks of length n <= L with at least one excluded jump:
    // rho^n - rho_in^n = rho_out sum_k rho^k rho_in^{n-1-k}
    let mut jump = 0.0;
    if rho_out > 0.0 {
        for n in 2..=big_l {
            let mut s = 0.0;
            for k in 0..n {
                s += rho_all.powi(k) * rho_in.powi(n - 1 - k);
            }
            jump += n as f64 * rho_out * s;
        }
    }

    // light cycles: w 1{E > E*} <= e^{-lambda alpha E*} e^{-(1-lambda) alpha E}
    let mut light = 0.0;
    if cutoffs.min_weight > 0.0 {
        let e_star = -cutoffs.min_weight.ln() / alpha;
        let grid: Vec<(f64, f64)> = (0..=40)
            .map(|i| {
                let lambda = i as f64 / 40.0;
                let r = if lambda < 1.0 {
                    rho_in_at((1.0 - lambda) * alpha)
                } else {
                    inner_jumps.len() as f64
                };
                (lambda, r)
            })
            .collect();
        for n in 2..=big_l {
            let best = grid
                .iter()
                .map(|(lambda, r)| (-lambda * alpha * e_star).exp() * r.powi(n))
                .fold(f64::INFINITY, f64::min);
            light += n as f64 * best;
        }
    }
    Some((long, jump, light))
}

/// Interval for `beta(V, alpha)` from a catalog.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub truncated_sum: f64,
    pub tail_bound: f64,
    pub alpha: f64,
    pub cutoffs: Cutoffs,
}

impl BetaEstimate {
    pub fn upper(&self) -> f64 {
        self.truncated_sum + self.tail_bound
    }
}

pub fn beta_truncated(catalog: &CycleCatalog) -> Result<BetaEstimate, BoundsError> {
    let tail = catalog.tail_bound();
    if !tail.is_finite() {
        let r = dominating_potential(catalog.potential())
            .and_then(|d| rho(&d, catalog.alpha()).ok())
            .unwrap_or(f64::INFINITY);
        return Err(BoundsError::DivergentTail(r));
    }
    Ok(BetaEstimate {
        truncated_sum: catalog.truncated_beta(),
        tail_bound: tail,
        alpha: catalog.alpha(),
        cutoffs: *catalog.cutoffs(),
    })
}

/// Best available certified upper bound on `beta` for the catalog's
/// potential and temperature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub beta_upper: f64,
    pub method: String,
}

impl Certificate {
    pub fn is_subcritical(&self) -> bool {
        self.beta_upper < 1.0
    }
}

pub fn certificate(catalog: &CycleCatalog) -> Certificate {
    let from_catalog = beta_truncated(catalog)
        .map(|e| e.upper())
        .unwrap_or(f64::INFINITY);
    let from_rho = dominating_potential(catalog.potential())
        .and_then(|d| rho(&d, catalog.alpha()).ok())
        .and_then(|r| beta_upper_from_rho(r).ok())
        .unwrap_or(f64::INFINITY);
    if from_catalog <= from_rho {
        Certificate {
            beta_upper: from_catalog,
            method: "beta_truncated".into(),
        }
    } else {
        Certificate {
            beta_upper: from_rho,
            method: "rho_series".into(),
        }
    }
}

/// Row `theta -> m(gamma, theta) = w(theta) 1{gamma !~ theta}` over the
/// catalog's translates; only the nonzero entries.
pub fn mean_matrix_row(gamma: &Cycle, catalog: &CycleCatalog) -> Vec<(PlacedCycle, f64)> {
    let mut seen: HashMap<PlacedCycle, f64> = HashMap::new();
    for x in gamma.sites() {
        for p in catalog.placed_through(x) {
            seen.entry(p).or_insert_with(|| catalog.weight_of(&p));
        }
    }
    let mut row: Vec<(PlacedCycle, f64)> = seen.into_iter().collect();
    row.sort_by_key(|e| e.0);
    row
}

/// `sum_theta m^n(gamma, theta)` and the `|theta|`-weighted version, for
/// `n = 1..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchingSums {
    pub plain: Vec<f64>,
    pub weighted: Vec<f64>,
}

/// Iterated sparse products of the mean matrix. The weighted sums obey
/// `S_{n+1} <= beta S_n` exactly; the plain ones are what a clan's generation
/// sizes estimate.
pub fn branching_row_sums(gamma: &Cycle, catalog: &CycleCatalog, n_max: usize) -> BranchingSums {
    let mut plain = Vec::with_capacity(n_max);
    let mut weighted = Vec::with_capacity(n_max);
    let mut v: Vec<(PlacedCycle, f64)> = mean_matrix_row(gamma, catalog);
    for n in 1..=n_max {
        plain.push(v.iter().map(|(_, x)| x).sum());
        weighted.push(v.iter().map(|(p, x)| x * catalog.len_of(p) as f64).sum());
        if n == n_max || v.is_empty() {
            continue;
        }
        // chunked so the reduction order, hence the bits, is fixed
        let parts: Vec<HashMap<PlacedCycle, f64>> = v
            .par_chunks(256)
            .map(|chunk| {
                let mut acc: HashMap<PlacedCycle, f64> = HashMap::new();
                for (p, mass) in chunk {
                    let cyc = catalog.cycle_of(p);
                    for (q, w) in mean_matrix_row(&cyc, catalog) {
                        *acc.entry(q).or_insert(0.0) += mass * w;
                    }
                }
                acc
            })
            .collect();
        let mut next: HashMap<PlacedCycle, f64> = HashMap::new();
        for part in parts {
            let mut entries: Vec<_> = part.into_iter().collect();
            entries.sort_by_key(|e| e.0);
            for (q, x) in entries {
                *next.entry(q).or_insert(0.0) += x;
            }
        }
        v = next.into_iter().collect();
        v.sort_by_key(|e| e.0);
    }
    BranchingSums { plain, weighted }
}
