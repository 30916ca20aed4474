//! Heat-bath Gibbs sampler with frozen boundary spins, origin observables and
//! a percolation probe.
//!
//! Chains start from the all-zero box, sweep it in lexicographic order and
//! draw every site from the single-site kernel. Chain `k` of a run uses the
//! ChaCha8 stream `k` of the run seed, so parallel runs are reproducible.

use std::io::{self, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Site};
use crate::model::{single_site_kernel, BoundaryCondition, ModelParams, NeighborCounts, Spin, SpinConfiguration};
use crate::output::fmt_f64;
use crate::union_find::UnionFind;

/// Minimum number of batches pooled across chains for error bars.
pub const MIN_BATCHES: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    pub region: LatticeBox,
    pub params: ModelParams,
    pub boundary: BoundaryCondition,
    pub sweeps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub chains: usize,
}

impl ChainSpec {
    fn validate(&self) -> Result<()> {
        if self.region.is_empty() {
            return Err(Error::Size("the box has no interior sites".into()));
        }
        if !self.region.contains(&Site::origin(self.region.dimension())) {
            return Err(Error::Size("the box does not contain the origin".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidParameter("at least one chain is needed".into()));
        }
        if self.sweeps <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "sweeps ({}) must exceed burn-in ({})",
                self.sweeps, self.burn_in
            )));
        }
        let kept = self.sweeps - self.burn_in;
        if kept < batches_per_chain(self.chains) as u64 {
            return Err(Error::InvalidParameter(format!(
                "{kept} recorded sweeps per chain cannot fill {} batches",
                batches_per_chain(self.chains)
            )));
        }
        Ok(())
    }
}

fn batches_per_chain(chains: usize) -> usize {
    MIN_BATCHES.div_ceil(chains)
}

/// Cumulative conditional probabilities of (-1, 0) for every neighbour
/// count pair (n+, n-).
struct KernelTable {
    degree: usize,
    cumulative: Vec<[f64; 2]>,
}

impl KernelTable {
    fn new(params: &ModelParams, degree: usize) -> Self {
        let alpha = params.apriori();
        let coupling = params.coupling();
        let mut cumulative = Vec::with_capacity((degree + 1) * (degree + 1));
        for plus in 0..=degree {
            for minus in 0..=degree {
                if plus + minus > degree {
                    cumulative.push([1.0, 1.0]);
                    continue;
                }
                let zero = degree - plus - minus;
                let p = single_site_kernel(
                    NeighborCounts::new(plus as u32, zero as u32, minus as u32),
                    &alpha,
                    coupling,
                );
                // Exact endpoints keep zero-probability spins unreachable.
                let c1 = if p[2] == 0.0 { 1.0 } else { p[0] + p[1] };
                cumulative.push([p[0], c1]);
            }
        }
        Self { degree, cumulative }
    }

    fn draw<R: Rng>(&self, plus: usize, minus: usize, rng: &mut R) -> Spin {
        let c = self.cumulative[plus * (self.degree + 1) + minus];
        let u: f64 = rng.gen();
        if u < c[0] {
            -1
        } else if u < c[1] {
            0
        } else {
            1
        }
    }
}

fn sweep_with<R: Rng>(config: &mut SpinConfiguration, table: &KernelTable, rng: &mut R) {
    let frame = config.frame().clone();
    let offsets = frame.offsets();
    let values = config.raw_mut();
    for &i in frame.interior() {
        let (mut plus, mut minus) = (0, 0);
        for &o in offsets {
            match values[(i as isize + o) as usize] {
                1 => plus += 1,
                -1 => minus += 1,
                _ => {}
            }
        }
        values[i] = table.draw(plus, minus, rng);
    }
}

/// One lexicographic heat-bath sweep of the box; boundary spins are untouched.
pub fn heat_bath_sweep<R: Rng>(config: &mut SpinConfiguration, params: &ModelParams, rng: &mut R) {
    let table = KernelTable::new(params, 2 * config.region().dimension());
    sweep_with(config, &table, rng);
}

/// Single chain with its own random stream.
pub struct Chain {
    config: SpinConfiguration,
    table: KernelTable,
    rng: ChaCha8Rng,
}

impl Chain {
    pub fn new(spec: &ChainSpec, index: usize) -> Result<Self> {
        let config = SpinConfiguration::with_boundary(&spec.region, &spec.boundary)?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index as u64);
        Ok(Self {
            table: KernelTable::new(&spec.params, 2 * spec.region.dimension()),
            config,
            rng,
        })
    }

    pub fn sweep(&mut self) {
        sweep_with(&mut self.config, &self.table, &mut self.rng);
    }

    pub fn config(&self) -> &SpinConfiguration {
        &self.config
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OriginEstimate {
    pub p_minus: f64,
    pub p_zero: f64,
    pub p_plus: f64,
    /// Batch-means standard errors for (minus, zero, plus).
    pub stderr: [f64; 3],
    pub n_effective: f64,
}

impl OriginEstimate {
    pub fn probs(&self) -> [f64; 3] {
        [self.p_minus, self.p_zero, self.p_plus]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub chain: usize,
    pub sweep: u64,
    pub obs_name: &'static str,
    pub value: f64,
}

/// Everything a run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainRun {
    pub estimate: OriginEstimate,
    /// Last configuration of every chain, in chain order.
    pub final_configs: Vec<SpinConfiguration>,
    pub trace: Vec<TraceRow>,
}

/// Pooled batch means of K observables.
struct Batches<const K: usize> {
    means: Vec<[f64; K]>,
    samples: u64,
}

impl<const K: usize> Batches<K> {
    fn mean_and_stderr(&self) -> ([f64; K], [f64; K]) {
        let n = self.means.len() as f64;
        let mut mean = [0.0; K];
        let mut err = [0.0; K];
        for k in 0..K {
            mean[k] = self.means.iter().map(|b| b[k]).sum::<f64>() / n;
            let var = self.means.iter().map(|b| (b[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0);
            err[k] = (var / n).sqrt();
        }
        (mean, err)
    }
}

struct ChainOutcome<const K: usize> {
    batch_means: Vec<[f64; K]>,
    final_config: SpinConfiguration,
    trace: Vec<TraceRow>,
}

fn run_observed<const K: usize, F>(
    spec: &ChainSpec,
    names: [&'static str; K],
    observe: F,
    trace_every: Option<u64>,
) -> Result<(Batches<K>, Vec<SpinConfiguration>, Vec<TraceRow>)>
where
    F: Fn(&SpinConfiguration) -> [f64; K] + Sync,
{
    spec.validate()?;
    let per_chain = batches_per_chain(spec.chains);
    let kept = spec.sweeps - spec.burn_in;
    let batch_len = kept / per_chain as u64;
    // Leftover sweeps are dropped at the start so every batch has equal length.
    let skip = spec.burn_in + kept % per_chain as u64;
    let outcomes: Vec<ChainOutcome<K>> = (0..spec.chains)
        .into_par_iter()
        .map(|index| {
            let mut chain = Chain::new(spec, index)?;
            let mut batch_means = Vec::with_capacity(per_chain);
            let mut acc = [0.0; K];
            let mut trace = Vec::new();
            for sweep in 1..=spec.sweeps {
                chain.sweep();
                if sweep <= skip {
                    continue;
                }
                let obs = observe(chain.config());
                for k in 0..K {
                    acc[k] += obs[k];
                }
                if let Some(every) = trace_every {
                    if (sweep - skip).is_multiple_of(every) {
                        for k in 0..K {
                            trace.push(TraceRow {
                                chain: index,
                                sweep,
                                obs_name: names[k],
                                value: obs[k],
                            });
                        }
                    }
                }
                if (sweep - skip).is_multiple_of(batch_len) {
                    batch_means.push(acc.map(|a| a / batch_len as f64));
                    acc = [0.0; K];
                }
            }
            Ok(ChainOutcome {
                batch_means,
                final_config: chain.config,
                trace,
            })
        })
        .collect::<Result<_>>()?;
    let mut means = Vec::new();
    let mut finals = Vec::new();
    let mut trace = Vec::new();
    for o in outcomes {
        means.extend(o.batch_means);
        finals.push(o.final_config);
        trace.extend(o.trace);
    }
    let samples = batch_len * means.len() as u64;
    Ok((Batches { means, samples }, finals, trace))
}

fn origin_indicator(config: &SpinConfiguration) -> [f64; 3] {
    let d = config.region().dimension();
    let mut out = [0.0; 3];
    let s = config.get(&Site::origin(d)).expect("origin lies in the box");
    out[(s + 1) as usize] = 1.0;
    out
}

/// Origin marginal estimated from all chains of `spec`.
pub fn run_chain(spec: &ChainSpec) -> Result<OriginEstimate> {
    run_chain_detailed(spec, None).map(|r| r.estimate)
}

/// As [`run_chain`], also keeping final configurations and, when
/// `trace_every` is set, the origin indicators every that many recorded sweeps.
pub fn run_chain_detailed(spec: &ChainSpec, trace_every: Option<u64>) -> Result<ChainRun> {
    if trace_every == Some(0) {
        return Err(Error::InvalidParameter("trace interval must be positive".into()));
    }
    let (batches, final_configs, trace) = run_three(spec, trace_every)?;
    let (mean, stderr) = batches.mean_and_stderr();
    let n_effective = {
        let ratios: Vec<f64> = (0..3)
            .filter(|&k| stderr[k] > 0.0)
            .map(|k| mean[k] * (1.0 - mean[k]) / (stderr[k] * stderr[k]))
            .collect();
        if ratios.is_empty() {
            batches.samples as f64
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        }
    };
    Ok(ChainRun {
        estimate: OriginEstimate {
            p_minus: mean[0],
            p_zero: mean[1],
            p_plus: mean[2],
            stderr,
            n_effective,
        },
        final_configs,
        trace,
    })
}

fn run_three(
    spec: &ChainSpec,
    trace_every: Option<u64>,
) -> Result<(Batches<3>, Vec<SpinConfiguration>, Vec<TraceRow>)> {
    run_observed(spec, ["origin_minus", "origin_zero", "origin_plus"], origin_indicator, trace_every)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PercolationProbe {
    /// The occupied cluster of the origin contains a site of the inner layer.
    pub origin_connected: bool,
    pub largest_cluster_size: usize,
}

/// Occupied clusters of the box under nearest-neighbour adjacency. Boundary
/// spins are ignored.
pub fn percolation_probe(config: &SpinConfiguration) -> PercolationProbe {
    let frame = config.frame();
    let values = config.raw();
    let mut uf = UnionFind::new(values.len());
    let mut in_box = vec![false; values.len()];
    for &i in frame.interior() {
        in_box[i] = true;
    }
    for &(i, j) in frame.bonds() {
        if in_box[i] && in_box[j] && values[i] != 0 && values[j] != 0 {
            uf.union(i, j);
        }
    }
    let mut largest = 0;
    for &i in frame.interior() {
        if values[i] != 0 {
            largest = largest.max(uf.component_size(i));
        }
    }
    let region = config.region();
    let origin = frame
        .index_of(&Site::origin(region.dimension()))
        .filter(|&i| in_box[i] && values[i] != 0);
    let origin_connected = origin.is_some_and(|o| {
        let root = uf.find(o);
        region
            .inner_layer()
            .iter()
            .any(|s| {
                let i = frame.index_of(s).expect("box site lies in its frame");
                values[i] != 0 && uf.find(i) == root
            })
    });
    PercolationProbe {
        origin_connected,
        largest_cluster_size: largest,
    }
}

/// Fraction of recorded sweeps in which the origin's cluster reaches the
/// inner layer, with its batch-means standard error.
pub fn estimate_percolation_probability(spec: &ChainSpec) -> Result<(f64, f64)> {
    let (batches, _, _) = run_observed(
        spec,
        ["origin_connected"],
        |c| [percolation_probe(c).origin_connected as u8 as f64],
        None,
    )?;
    let (mean, err) = batches.mean_and_stderr();
    Ok((mean[0], err[0]))
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> io::Result<()> {
    writeln!(out, "chain,sweep,obs_name,value")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.chain, r.sweep, r.obs_name, fmt_f64(r.value))?;
    }
    Ok(())
}

/// One line per box site, `x[,y[,z]],spin`, after a comment header with the
/// box corners and the boundary condition.
pub fn write_snapshot<W: Write>(config: &SpinConfiguration, boundary: &str, mut out: W) -> io::Result<()> {
    let region = config.region();
    let join = |c: &[i64]| c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(
        out,
        "# lower={} upper={} boundary={boundary}",
        join(region.lower()),
        join(region.upper())
    )?;
    for site in region.sites() {
        let coords = site.coords().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        writeln!(out, "{coords},{}", config.get(&site).expect("box site"))?;
    }
    Ok(())
}

/// Parses the output of [`write_snapshot`]. Boundary spins are restored from
/// the `AllPlus`/`AllMinus`/`AllZero` labels and left at 0 otherwise; the label
/// is returned as written.
pub fn read_snapshot(text: &str) -> Result<(SpinConfiguration, String)> {
    let bad = |msg: &str| Error::InvalidParameter(format!("malformed snapshot: {msg}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty input"))?;
    let header = header.strip_prefix("# lower=").ok_or_else(|| bad("missing header"))?;
    let (lower, rest) = header.split_once(" upper=").ok_or_else(|| bad("missing upper corner"))?;
    let (upper, label) = rest.split_once(" boundary=").ok_or_else(|| bad("missing boundary label"))?;
    let corner = |s: &str| -> Result<Vec<i64>> {
        s.split(' ')
            .map(|x| x.parse().map_err(|_| bad("corner coordinate")))
            .collect()
    };
    let region = LatticeBox::new(corner(lower)?, corner(upper)?)?;
    let bc = match label {
        "AllPlus" => BoundaryCondition::AllPlus,
        "AllMinus" => BoundaryCondition::AllMinus,
        _ => BoundaryCondition::AllZero,
    };
    let mut config = SpinConfiguration::with_boundary(&region, &bc)?;
    let mut seen = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let fields: Vec<i64> = line
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| bad(line)))
            .collect::<Result<_>>()?;
        let (spin, coords) = fields.split_last().ok_or_else(|| bad(line))?;
        let site = Site::new(coords.to_vec());
        if !region.contains(&site) || !(-1..=1).contains(spin) {
            return Err(bad(line));
        }
        config.set(&site, *spin as Spin)?;
        seen += 1;
    }
    if seen != region.len() {
        return Err(bad("site count does not match the box"));
    }
    Ok((config, label.to_string()))
}
