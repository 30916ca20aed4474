//! Cluster representation of the time-evolved hard-core model.
//!
//! A two-layer configuration pairs the time-0 spins with the spins at time t.
//! The dynamics never creates or removes particles, so both layers share one
//! occupation pattern and a configuration is stored as a single spin field:
//! 0 for an empty site, ±1 for the sign carried by the layer in question.
//!
//! In the hard-core model every occupied cluster has one sign at time 0.
//! Summing that sign out cluster by cluster gives the conditional law of the
//! evolved spins on a small set Δ as a product of per-cluster factors
//!
//! ```text
//! 1(+ allowed) α_r^{|C∩Δ|} Π_{C∩Δ} p_t(+1, σ̂) + 1(- allowed) Π_{C∩Δ} p_t(-1, σ̂) exp(-S_C),
//! S_C = Σ_{i ∈ C∩Λ∖Δ} (log α_r + σ̂_i log q_t),
//! ```
//!
//! with α_r = α(1)/α(-1) and q_t = coth t, times α(0) per empty and α(-1)
//! per occupied site of Δ. Only clusters meeting Δ or its outer boundary
//! depend on the spins in Δ.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::dynamics::{q_t, transition_matrix};
use crate::error::{Error, Result};
use crate::lattice::{neighbors, LatticeBox, Site};
use crate::model::{slot, AprioriMeasure, Spin, SpinConfiguration};
use crate::output::fmt_f64;
use crate::union_find::UnionFind;

/// Largest kernel volume accepted; the enumeration is 3^|Δ|.
pub const MAX_DELTA: usize = 8;

/// Ratio α_r = α(1)/α(-1) and q_t = coth t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedConstants {
    pub alpha_r: f64,
    pub q_t: f64,
}

impl DerivedConstants {
    pub fn new(alpha: &AprioriMeasure, t: f64) -> Result<Self> {
        if !(alpha.plus() > 0.0 && alpha.minus() > 0.0) {
            return Err(Error::InvalidParameter(
                "the cluster kernels need positive mass on both signs".into(),
            ));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("time must be finite and positive, got {t}")));
        }
        Ok(Self {
            alpha_r: alpha.plus() / alpha.minus(),
            q_t: q_t(t),
        })
    }
}

/// Occupied clusters of a box and its outer boundary, joined through bonds
/// with at least one endpoint in the box.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterDecomposition {
    /// Sites of each cluster, lexicographic; clusters ordered by first site.
    pub clusters: Vec<Vec<Site>>,
    /// Cluster meets Δ or the outer boundary of Δ.
    pub delta_contact: Vec<bool>,
    /// Cluster contains an occupied site of the outer boundary of the box.
    pub window_escape: Vec<bool>,
}

pub fn cluster_decompose(occupation: &SpinConfiguration, delta: &[Site]) -> Result<ClusterDecomposition> {
    let geometry = Geometry::new(occupation, delta)?;
    let occupied: Vec<bool> = occupation.raw().iter().map(|&s| s != 0).collect();
    let mut uf = UnionFind::new(occupied.len());
    let summary = geometry.clusters(&occupied, occupation.raw(), &mut uf, None);
    let frame = occupation.frame();
    let mut clusters = Vec::with_capacity(summary.len());
    let mut delta_contact = Vec::with_capacity(summary.len());
    let mut window_escape = Vec::with_capacity(summary.len());
    for c in summary {
        clusters.push(c.members.iter().map(|&i| frame.site_at(i)).collect());
        delta_contact.push(c.delta_contact);
        window_escape.push(c.escapes);
    }
    Ok(ClusterDecomposition {
        clusters,
        delta_contact,
        window_escape,
    })
}

/// Conditional law of the evolved spins on Δ, indexed in base 3 with the
/// first Δ site as the most significant digit (digit k encodes spin k - 1).
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaDistribution {
    pub sites: Vec<Site>,
    pub probs: Vec<f64>,
}

impl DeltaDistribution {
    pub fn prob(&self, spins: &[Spin]) -> f64 {
        self.probs[spins.iter().fold(0, |acc, &s| acc * 3 + slot(s))]
    }

    /// Probability that the k-th Δ site carries `spin`.
    pub fn marginal(&self, k: usize, spin: Spin) -> f64 {
        let n = self.sites.len();
        let stride = 3usize.pow((n - 1 - k) as u32);
        self.probs
            .iter()
            .enumerate()
            .filter(|(idx, _)| (idx / stride) % 3 == slot(spin))
            .map(|(_, p)| p)
            .sum()
    }
}

/// How a cluster's sign at time 0 is restricted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Weighting {
    /// Boundary spins on the outer boundary are time-0 signs and pin the
    /// sign of every cluster they belong to.
    FiniteVolume,
    /// Window kernel that refuses clusters reaching the window edge.
    FiniteClusters,
    /// Window kernel in which clusters reaching the window edge count as
    /// infinite and keep only the +1 branch.
    InfiniteNeutralized,
}

/// Conditional law on Δ of the evolved spins for the hard-core model in a
/// box Λ. `config` carries the time-0 boundary on the outer boundary of Λ and
/// the evolved spins on Λ∖Δ; its values on Δ are ignored.
pub fn kernel_finite_volume(
    config: &SpinConfiguration,
    delta: &[Site],
    alpha: &AprioriMeasure,
    t: f64,
) -> Result<DeltaDistribution> {
    conditional(config, delta, alpha, t, Weighting::FiniteVolume)
}

/// Window kernel seeing finite clusters only. `window` carries the evolved
/// spins on the window and its outer layer; every cluster meeting Δ must stay
/// off the outer layer.
pub fn kernel_gamma_f(
    window: &SpinConfiguration,
    delta: &[Site],
    alpha: &AprioriMeasure,
    t: f64,
) -> Result<DeltaDistribution> {
    conditional(window, delta, alpha, t, Weighting::FiniteClusters)
}

/// Window kernel in which clusters meeting the outer layer of the window are
/// treated as infinite: they contribute only α_r^{|C∩Δ|} Π p_t(+1, σ̂).
pub fn kernel_gamma_inf(
    window: &SpinConfiguration,
    delta: &[Site],
    alpha: &AprioriMeasure,
    t: f64,
) -> Result<DeltaDistribution> {
    conditional(window, delta, alpha, t, Weighting::InfiniteNeutralized)
}

/// Per-cluster data gathered in one pass.
struct ClusterSummary {
    members: Vec<usize>,
    delta_contact: bool,
    escapes: bool,
    boundary_plus: bool,
    boundary_minus: bool,
    /// Σ over box sites outside Δ of (log α_r + σ̂ log q_t).
    exponent: f64,
    /// Positions in Δ of the cluster's Δ sites.
    delta_members: Vec<usize>,
}

struct Geometry {
    delta_index: Vec<usize>,
    /// Position in Δ for every frame cell, if any.
    delta_pos: Vec<Option<usize>>,
    /// Frame cell lies in Δ or on its outer boundary.
    near_delta: Vec<bool>,
    in_box: Vec<bool>,
    on_boundary: Vec<bool>,
    bonds: Vec<(usize, usize)>,
}

impl Geometry {
    fn new(config: &SpinConfiguration, delta: &[Site]) -> Result<Self> {
        let frame = config.frame();
        let region = config.region();
        let n = frame.storage_len();
        let mut delta_index = Vec::with_capacity(delta.len());
        let mut delta_pos = vec![None; n];
        for (k, site) in delta.iter().enumerate() {
            if !region.contains(site) {
                return Err(Error::InvalidParameter(format!(
                    "site {:?} of the kernel volume is outside the box",
                    site.coords()
                )));
            }
            let i = frame.index_of(site).expect("box site lies in its frame");
            if delta_pos[i].is_some() {
                return Err(Error::InvalidParameter("kernel volume lists a site twice".into()));
            }
            delta_pos[i] = Some(k);
            delta_index.push(i);
        }
        let mut near_delta = vec![false; n];
        for site in delta {
            near_delta[frame.index_of(site).unwrap()] = true;
            for nb in neighbors(site) {
                if let Some(i) = frame.index_of(&nb) {
                    near_delta[i] = true;
                }
            }
        }
        let mut in_box = vec![false; n];
        for &i in frame.interior() {
            in_box[i] = true;
        }
        let mut on_boundary = vec![false; n];
        for &i in frame.boundary() {
            on_boundary[i] = true;
        }
        Ok(Self {
            delta_index,
            delta_pos,
            near_delta,
            in_box,
            on_boundary,
            bonds: frame.bonds().to_vec(),
        })
    }

    /// Clusters of the occupied cells; `log_terms` supplies (log α_r, log q_t)
    /// when exponents are wanted.
    fn clusters(
        &self,
        occupied: &[bool],
        signs: &[Spin],
        uf: &mut UnionFind,
        log_terms: Option<(f64, f64)>,
    ) -> Vec<ClusterSummary> {
        uf.reset();
        for &(i, j) in &self.bonds {
            if occupied[i] && occupied[j] {
                uf.union(i, j);
            }
        }
        let n = occupied.len();
        let mut slot_of_root = vec![usize::MAX; n];
        let mut out: Vec<ClusterSummary> = Vec::new();
        for i in 0..n {
            if !occupied[i] || !(self.in_box[i] || self.on_boundary[i]) {
                continue;
            }
            let r = uf.find(i);
            if slot_of_root[r] == usize::MAX {
                slot_of_root[r] = out.len();
                out.push(ClusterSummary {
                    members: Vec::new(),
                    delta_contact: false,
                    escapes: false,
                    boundary_plus: false,
                    boundary_minus: false,
                    exponent: 0.0,
                    delta_members: Vec::new(),
                });
            }
            let c = &mut out[slot_of_root[r]];
            c.members.push(i);
            c.delta_contact |= self.near_delta[i];
            if self.on_boundary[i] {
                c.escapes = true;
                c.boundary_plus |= signs[i] == 1;
                c.boundary_minus |= signs[i] == -1;
            }
            if let Some(k) = self.delta_pos[i] {
                c.delta_members.push(k);
            } else if self.in_box[i] {
                if let Some((log_r, log_q)) = log_terms {
                    c.exponent += log_r + signs[i] as f64 * log_q;
                }
            }
        }
        out
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn ln0(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn conditional(
    config: &SpinConfiguration,
    delta: &[Site],
    alpha: &AprioriMeasure,
    t: f64,
    mode: Weighting,
) -> Result<DeltaDistribution> {
    if delta.is_empty() || delta.len() > MAX_DELTA {
        return Err(Error::InvalidParameter(format!(
            "kernel volume must have between 1 and {MAX_DELTA} sites, got {}",
            delta.len()
        )));
    }
    let consts = DerivedConstants::new(alpha, t)?;
    let (log_r, log_q) = (consts.alpha_r.ln(), consts.q_t.ln());
    let p = transition_matrix(t)?;
    // log p_t(s, σ̂) for s = +1 / -1 and σ̂ = ±1.
    let log_p = |s: Spin, target: Spin| p.prob(s, target).ln();
    let (log_empty, log_occupied) = (ln0(alpha.zero()), alpha.minus().ln());

    let geometry = Geometry::new(config, delta)?;
    let m = delta.len();
    let mut signs = config.raw().to_vec();
    let mut occupied: Vec<bool> = signs.iter().map(|&s| s != 0).collect();
    let mut uf = UnionFind::new(signs.len());
    let mut log_w = vec![f64::NEG_INFINITY; 3usize.pow(m as u32)];

    for pattern in 0..(1usize << m) {
        for (k, &i) in geometry.delta_index.iter().enumerate() {
            occupied[i] = pattern >> (m - 1 - k) & 1 == 1;
            signs[i] = 0;
        }
        let clusters = geometry.clusters(&occupied, &signs, &mut uf, Some((log_r, log_q)));
        let mut relevant = Vec::new();
        for c in clusters {
            let mixed = c.boundary_plus && c.boundary_minus;
            if !c.delta_contact {
                if mode == Weighting::FiniteVolume && mixed {
                    return Err(Error::Degenerate(
                        "a cluster away from the kernel volume joins opposite boundary signs".into(),
                    ));
                }
                continue;
            }
            if mode == Weighting::FiniteClusters && c.escapes {
                return Err(Error::WindowEscape);
            }
            let (plus_ok, minus_ok) = match mode {
                Weighting::FiniteVolume => (!c.boundary_minus, !c.boundary_plus),
                Weighting::FiniteClusters => (true, true),
                Weighting::InfiniteNeutralized => (true, !c.escapes),
            };
            relevant.push((c, plus_ok, minus_ok));
        }
        let occupied_delta: Vec<usize> = (0..m).filter(|k| pattern >> (m - 1 - k) & 1 == 1).collect();
        let empties = m - occupied_delta.len();
        // Written out so that 0 * log 0 never appears.
        let base = if empties > 0 { empties as f64 * log_empty } else { 0.0 }
            + occupied_delta.len() as f64 * log_occupied;
        if base == f64::NEG_INFINITY {
            continue;
        }
        for sign_bits in 0..(1usize << occupied_delta.len()) {
            let mut spins = vec![0 as Spin; m];
            for (b, &k) in occupied_delta.iter().enumerate() {
                spins[k] = if sign_bits >> b & 1 == 1 { -1 } else { 1 };
            }
            let mut total = base;
            for (c, plus_ok, minus_ok) in &relevant {
                let mut plus = f64::NEG_INFINITY;
                let mut minus = f64::NEG_INFINITY;
                if *plus_ok {
                    plus = c.delta_members.len() as f64 * log_r
                        + c.delta_members.iter().map(|&k| log_p(1, spins[k])).sum::<f64>();
                }
                if *minus_ok {
                    minus = c.delta_members.iter().map(|&k| log_p(-1, spins[k])).sum::<f64>() - c.exponent;
                }
                total += log_add(plus, minus);
                if total == f64::NEG_INFINITY {
                    break;
                }
            }
            let idx = spins.iter().fold(0, |acc, &s| acc * 3 + slot(s));
            log_w[idx] = total;
        }
    }
    if log_w.iter().all(|&w| w == f64::NEG_INFINITY) {
        return Err(Error::Degenerate("every configuration of the kernel volume has zero weight".into()));
    }
    crate::model::normalize_log_weights(&mut log_w);
    Ok(DeltaDistribution {
        sites: delta.to_vec(),
        probs: log_w,
    })
}

/// Sign pattern placed on a segment of the line connector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decoration {
    Plus,
    Minus,
    /// +1 on odd distances from the origin, -1 on even ones.
    Alternating,
}

impl Decoration {
    fn spin_at(&self, distance: usize) -> Spin {
        match self {
            Decoration::Plus => 1,
            Decoration::Minus => -1,
            Decoration::Alternating => {
                if distance % 2 == 1 {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

/// Straight occupied line from the origin along the first axis. Sites at
/// distance 1..=inner_radius carry the inner decoration, sites at distance
/// inner_radius+1..=outer_radius form the annulus whose sign is switched.
/// Without a connector the inner sites are left empty, which cuts Δ = {0}
/// off from the annulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeGeometry {
    pub d: usize,
    pub inner_radius: usize,
    pub outer_radius: usize,
    pub inner_decoration: Decoration,
    pub connector: bool,
}

impl ProbeGeometry {
    /// Line of `length` sites with one inner site.
    pub fn line(d: usize, length: usize) -> Self {
        Self {
            d,
            inner_radius: 1,
            outer_radius: length,
            inner_decoration: Decoration::Plus,
            connector: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.inner_radius == 0 || self.outer_radius <= self.inner_radius {
            return Err(Error::InvalidParameter(format!(
                "probe needs d >= 1 and 1 <= inner radius < outer radius, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Window holding the line; the line stays clear of the window's outer layer.
    fn window(&self, annulus: Spin) -> SpinConfiguration {
        let mut upper = vec![0; self.d];
        upper[0] = self.outer_radius as i64;
        let region = LatticeBox::new(vec![0; self.d], upper).expect("valid corners");
        let mut w = SpinConfiguration::filled(&region, 0);
        for dist in 1..=self.outer_radius {
            let s = if dist <= self.inner_radius {
                if !self.connector {
                    continue;
                }
                self.inner_decoration.spin_at(dist)
            } else {
                annulus
            };
            let mut c = vec![0; self.d];
            c[0] = dist as i64;
            w.set(&Site::new(c), s).expect("site lies in the window");
        }
        w
    }

    /// JSON-style description; the outer radius is left out because sweeps vary it.
    pub fn describe(&self) -> String {
        format!(
            "{{\"shape\":\"line\",\"d\":{},\"inner_radius\":{},\"inner_decoration\":\"{:?}\",\"connector\":{}}}",
            self.d, self.inner_radius, self.inner_decoration, self.connector
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeResult {
    /// P(σ̂₀ = +1) with the annulus all +1.
    pub p_plus_annulus: f64,
    /// P(σ̂₀ = +1) with the annulus all -1.
    pub p_minus_annulus: f64,
    pub gap: f64,
    /// No connector: the annulus cannot influence the origin.
    pub degenerate: bool,
}

/// Response of the finite-cluster window kernel at the origin to switching
/// the sign of a distant part of an occupied line.
pub fn badness_probe(geometry: &ProbeGeometry, alpha: &AprioriMeasure, t: f64) -> Result<ProbeResult> {
    geometry.validate()?;
    let delta = [Site::origin(geometry.d)];
    let p_plus = kernel_gamma_f(&geometry.window(1), &delta, alpha, t)?.prob(&[1]);
    let p_minus = kernel_gamma_f(&geometry.window(-1), &delta, alpha, t)?.prob(&[1]);
    Ok(ProbeResult {
        p_plus_annulus: p_plus,
        p_minus_annulus: p_minus,
        gap: (p_plus - p_minus).abs(),
        degenerate: !geometry.connector,
    })
}

/// Gaps over a (t, L) grid, evaluated in parallel, rows ordered t-major.
pub fn badness_sweep(
    template: &ProbeGeometry,
    alpha: &AprioriMeasure,
    times: &[f64],
    lengths: &[usize],
) -> Result<Vec<(f64, usize, f64)>> {
    let grid: Vec<(f64, usize)> = times
        .iter()
        .flat_map(|&t| lengths.iter().map(move |&l| (t, l)))
        .collect();
    grid.par_iter()
        .map(|&(t, l)| {
            let g = ProbeGeometry {
                outer_radius: l,
                ..*template
            };
            badness_probe(&g, alpha, t).map(|r| (t, l, r.gap))
        })
        .collect()
}

/// Time in `[lo, hi]` at which the gap falls through `threshold`, by
/// bisection; the gap must be above the threshold at `lo` and below at `hi`.
pub fn find_gap_crossover(
    geometry: &ProbeGeometry,
    alpha: &AprioriMeasure,
    threshold: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let gap = |t: f64| badness_probe(geometry, alpha, t).map(|r| r.gap);
    let (mut lo, mut hi) = (lo, hi);
    if !(gap(lo)? > threshold && gap(hi)? < threshold) {
        return Err(Error::InvalidParameter(format!(
            "gap does not cross {threshold} between t={lo} and t={hi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn write_csv<W: Write>(geometry: &ProbeGeometry, rows: &[(f64, usize, f64)], mut out: W) -> io::Result<()> {
    writeln!(out, "# geometry={}", geometry.describe())?;
    writeln!(out, "t,L,gap")?;
    for (t, l, g) in rows {
        writeln!(out, "{},{},{}", fmt_f64(*t), l, fmt_f64(*g))?;
    }
    Ok(())
}
