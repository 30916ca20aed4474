//! Dobrushin interdependence entries for nearest-neighbour graphs of
//! degree `B`, uniqueness verdicts, simplex scans and the comparison matrix.
//!
//! Single-site kernels depend on the boundary only through the neighbour
//! counts, so every supremum over boundary conditions is a maximum over
//! count patterns (n+, n0, n-) with n+ + n0 + n- = B.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Frame, LatticeBox};
use crate::model::{single_site_kernel, total_variation, AprioriMeasure, Coupling, NeighborCounts};
use crate::output::fmt_f64;

/// Largest entry over the three kinds of single-neighbour change.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChangeMaxima {
    pub zero_plus: f64,
    pub zero_minus: f64,
    pub minus_plus: f64,
}

impl ChangeMaxima {
    pub fn max(&self) -> f64 {
        self.zero_plus.max(self.zero_minus).max(self.minus_plus)
    }
}

/// Exhaustive maximum of the total-variation distance between single-site
/// kernels whose neighbourhoods differ at one site.
pub fn bruteforce_change_maxima(alpha: &AprioriMeasure, coupling: Coupling, degree: u32) -> ChangeMaxima {
    let mut best = ChangeMaxima {
        zero_plus: 0.0,
        zero_minus: 0.0,
        minus_plus: 0.0,
    };
    let kernel = |plus: u32, minus: u32| {
        single_site_kernel(
            NeighborCounts::new(plus, degree - plus - minus, minus),
            alpha,
            coupling,
        )
    };
    // Each change is visited from the side where the moved neighbour holds
    // the first state; total variation is symmetric so one side suffices.
    for plus in 0..=degree {
        for minus in 0..=degree - plus {
            let zero = degree - plus - minus;
            let here = kernel(plus, minus);
            if zero > 0 {
                let tv = total_variation(&here, &kernel(plus + 1, minus));
                best.zero_plus = best.zero_plus.max(tv);
                let tv = total_variation(&here, &kernel(plus, minus + 1));
                best.zero_minus = best.zero_minus.max(tv);
            }
            if minus > 0 {
                let tv = total_variation(&here, &kernel(plus + 1, minus - 1));
                best.minus_plus = best.minus_plus.max(tv);
            }
        }
    }
    best
}

pub fn cij_hardcore_bruteforce(alpha: &AprioriMeasure, degree: u32) -> f64 {
    bruteforce_change_maxima(alpha, Coupling::HardCore, degree).max()
}

pub fn cij_softcore_bruteforce(alpha: &AprioriMeasure, beta: f64, degree: u32) -> f64 {
    bruteforce_change_maxima(alpha, Coupling::SoftCore { beta }, degree).max()
}

/// Vertex degree of the graph; `Infinite` only matters for the hard-core
/// classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    Finite(u32),
    Infinite,
}

/// Closed-form hard-core uniqueness condition.
///
/// Degree 1: unique unless α is δ₊₁ or δ₋₁. Finite degree B ≥ 2: unique iff
/// max(α(-1), α(1)) < α(0)/(B-1). Infinite degree: unique iff α(0) = 1.
pub fn hardcore_uniqueness_classifier(alpha: &AprioriMeasure, degree: Degree) -> bool {
    match degree {
        Degree::Finite(0) => true,
        Degree::Finite(1) => alpha.plus() != 1.0 && alpha.minus() != 1.0,
        Degree::Finite(b) => alpha.plus().max(alpha.minus()) * ((b - 1) as f64) < alpha.zero(),
        Degree::Infinite => alpha.zero() == 1.0,
    }
}

/// The four maxima of the closed-form soft-core entry, in the order
/// (0 to +1 change, 0 to -1 change, -1 to +1 change on the set where the +1
/// mass dominates, the same change on its complement).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftCoreEntry {
    pub value: f64,
    pub branch_maxima: [f64; 4],
}

/// Closed-form soft-core entry C_ij for a vertex of degree `degree`.
pub fn cij_softcore(alpha: &AprioriMeasure, beta: f64, degree: u32) -> Result<SoftCoreEntry> {
    if degree == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    let (am, a0, ap) = (alpha.minus(), alpha.zero(), alpha.plus());
    let e = |k: i64| (-beta * k as f64).exp();
    let mut branches = [0.0f64; 4];
    for plus in 0..=degree as i64 {
        for minus in 0..=degree as i64 - plus {
            let base = a0 + ap * e(minus) + am * e(plus);
            let occupied = plus + minus;
            if occupied < degree as i64 {
                let num = am * (a0 * (e(plus) - e(plus + 1)) + ap * (e(occupied) - e(occupied + 1)));
                let den = base * (a0 + ap * e(minus) + am * e(plus + 1));
                branches[0] = branches[0].max(num / den);
                let num = ap * (a0 * (e(minus) - e(minus + 1)) + am * (e(occupied) - e(occupied + 1)));
                let den = base * (a0 + ap * e(minus + 1) + am * e(plus));
                branches[1] = branches[1].max(num / den);
            }
            if minus > 0 {
                let den = base * (a0 + ap * e(minus - 1) + am * e(plus + 1));
                // Membership of (plus, minus) in the set where the +1 weight
                // wins, written without dividing by α(-1).
                let in_set = ap * e(minus - plus - 1) > am;
                if in_set {
                    let num = ap * (a0 * (e(minus - 1) - e(minus)) + am * (e(occupied - 1) - e(occupied + 1)));
                    branches[2] = branches[2].max(num / den);
                } else {
                    let num = am * (a0 * (e(plus) - e(plus + 1)) + ap * (e(occupied - 1) - e(occupied + 1)));
                    branches[3] = branches[3].max(num / den);
                }
            }
        }
    }
    let value = branches.iter().copied().fold(0.0, f64::max);
    Ok(SoftCoreEntry {
        value,
        branch_maxima: branches,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchMaxima {
    SoftCore([f64; 4]),
    HardCore(ChangeMaxima),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DobrushinReport {
    pub c_entry: f64,
    /// `degree * c_entry`.
    pub c_constant: f64,
    pub branch_maxima: BranchMaxima,
    /// Strict `c_constant < 1`.
    pub unique: bool,
}

/// Entry, constant and verdict on a degree-regular graph. Hard-core entries
/// come from exhaustive maximisation, soft-core ones from the closed form.
pub fn dobrushin_report(alpha: &AprioriMeasure, coupling: Coupling, degree: u32) -> Result<DobrushinReport> {
    if degree == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    let (c_entry, branch_maxima) = match coupling {
        Coupling::HardCore => {
            let m = bruteforce_change_maxima(alpha, coupling, degree);
            (m.max(), BranchMaxima::HardCore(m))
        }
        Coupling::SoftCore { beta } => {
            let entry = cij_softcore(alpha, beta, degree)?;
            (entry.value, BranchMaxima::SoftCore(entry.branch_maxima))
        }
    };
    let c_constant = degree as f64 * c_entry;
    Ok(DobrushinReport {
        c_entry,
        c_constant,
        branch_maxima,
        unique: c_constant < 1.0,
    })
}

/// Barycentric grid on the 2-simplex with resolution N. Point (i, j, k) with
/// i + j + k = N is α = (i/N, j/N, k/N) on (-1, 0, +1); i runs slowest.
#[derive(Clone, Debug)]
pub struct SimplexGrid {
    pub resolution: u32,
    pub indices: Vec<[u32; 3]>,
    pub points: Vec<AprioriMeasure>,
    pub c_values: Vec<f64>,
    pub verdicts: Vec<bool>,
}

pub fn simplex_points(resolution: u32) -> Vec<([u32; 3], AprioriMeasure)> {
    let n = resolution as f64;
    let mut out = Vec::new();
    for i in 0..=resolution {
        for j in 0..=resolution - i {
            let k = resolution - i - j;
            // The last mass absorbs rounding so the point is exactly normalised.
            let (m, z) = (i as f64 / n, j as f64 / n);
            let p = if k == 0 { 0.0 } else { 1.0 - m - z };
            let alpha = AprioriMeasure::new(m, z, p).expect("grid point lies on the simplex");
            out.push(([i, j, k], alpha));
        }
    }
    out
}

/// Dobrushin constant and verdict at every grid point.
pub fn region_scan(coupling: Coupling, degree: u32, resolution: u32) -> Result<SimplexGrid> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "simplex resolution must be at least 2, got {resolution}"
        )));
    }
    if degree == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    let pts = simplex_points(resolution);
    let reports: Vec<DobrushinReport> = pts
        .par_iter()
        .map(|(_, a)| dobrushin_report(a, coupling, degree))
        .collect::<Result<_>>()?;
    Ok(SimplexGrid {
        resolution,
        indices: pts.iter().map(|(ix, _)| *ix).collect(),
        points: pts.iter().map(|(_, a)| *a).collect(),
        c_values: reports.iter().map(|r| r.c_constant).collect(),
        verdicts: reports.iter().map(|r| r.unique).collect(),
    })
}

impl SimplexGrid {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "alpha_minus,alpha_zero,alpha_plus,c_value,unique")?;
        for ((a, c), u) in self.points.iter().zip(&self.c_values).zip(&self.verdicts) {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(a.minus()),
                fmt_f64(a.zero()),
                fmt_f64(a.plus()),
                fmt_f64(*c),
                u
            )?;
        }
        Ok(())
    }
}

/// β from which the closed-form α(0) = 0 threshold applies: log((B+1)/(B-1)).
pub fn edge_regime_start(degree: u32) -> f64 {
    if degree < 2 {
        f64::INFINITY
    } else {
        ((degree as f64 + 1.0) / (degree as f64 - 1.0)).ln()
    }
}

/// g(β, B) = -e^{-βB} (e^{2β}(1-B) + B + 1 + sqrt((e^{2β}(1-B) + B + 1)² - 4e^{2β})).
///
/// The discriminant vanishes exactly at β = log((B+1)/(B-1)), is negative
/// below it and positive above it, so g is real precisely on
/// [log((B+1)/(B-1)), ∞). Below that point, or for B < 2, `None`.
pub fn g_function(beta: f64, degree: u32) -> Option<f64> {
    if degree < 2 || !(beta >= edge_regime_start(degree)) {
        return None;
    }
    let b = degree as f64;
    // Work with the factor e^{-2β} pulled out of the square root to keep the
    // terms bounded: u = e^{-2β}.
    let u = (-2.0 * beta).exp();
    let inner = (1.0 - b) + (b + 1.0) * u;
    let mut disc = inner * inner - 4.0 * u;
    if disc < 0.0 {
        // At the regime start the discriminant is an exact zero computed with
        // rounding; anything beyond a few ulps is a genuine complex root.
        if disc < -1e-12 * (inner * inner + 4.0 * u) {
            return None;
        }
        disc = 0.0;
    }
    Some(-(beta * (2.0 - b)).exp() * (inner + disc.sqrt()))
}

/// Threshold 2/(2 + g(β, B)) on max(α(1), α(-1)) for α(0) = 0. Below the
/// regime start every such α is unique and the threshold is 0.
pub fn threshold_alpha(beta: f64, degree: u32) -> Option<f64> {
    if beta < edge_regime_start(degree) {
        return Some(0.0);
    }
    g_function(beta, degree).map(|g| 2.0 / (2.0 + g))
}

/// Truncated series D = Σ_n Cⁿ for the interdependence matrix C with entry
/// `c_entry` on nearest-neighbour pairs of a box (frozen boundary).
#[derive(Clone, Debug)]
pub struct ComparisonMatrix {
    pub size: usize,
    /// Row-major, sites in lexicographic order.
    pub entries: Vec<f64>,
    pub terms: usize,
    pub tail_bound: f64,
}

impl ComparisonMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries[i * self.size..(i + 1) * self.size].iter().sum()
    }
}

pub const COMPARISON_TAIL: f64 = 1e-12;

pub fn comparison_matrix(c_entry: f64, region: &LatticeBox, order_cap: usize) -> Result<ComparisonMatrix> {
    if !(0.0..=1.0).contains(&c_entry) {
        return Err(Error::InvalidParameter(format!("entry {c_entry} outside [0, 1]")));
    }
    let c = 2.0 * region.dimension() as f64 * c_entry;
    if c >= 1.0 {
        return Err(Error::Divergent(c));
    }
    let frame = Frame::new(region);
    let n = region.len();
    // Neighbour lists in box indices.
    let pos: std::collections::HashMap<usize, usize> =
        frame.interior().iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let adj: Vec<Vec<usize>> = frame
        .interior()
        .iter()
        .map(|&i| {
            frame
                .offsets()
                .iter()
                .filter_map(|&o| pos.get(&((i as isize + o) as usize)).copied())
                .collect()
        })
        .collect();

    let mut total = vec![0.0; n * n];
    let mut term = vec![0.0; n * n];
    for i in 0..n {
        total[i * n + i] = 1.0;
        term[i * n + i] = 1.0;
    }
    let mut terms = 1;
    let mut tail = c / (1.0 - c);
    let mut next = vec![0.0; n * n];
    while tail >= COMPARISON_TAIL {
        if terms > order_cap {
            return Err(Error::Truncated { order: order_cap, tail });
        }
        // next = term · C, using that C is c_entry on the adjacency.
        for i in 0..n {
            for j in 0..n {
                let s: f64 = adj[j].iter().map(|&k| term[i * n + k]).sum();
                next[i * n + j] = c_entry * s;
            }
        }
        std::mem::swap(&mut term, &mut next);
        for (t, x) in total.iter_mut().zip(&term) {
            *t += x;
        }
        terms += 1;
        tail = c.powi(terms as i32) / (1.0 - c);
    }
    Ok(ComparisonMatrix {
        size: n,
        entries: total,
        terms,
        tail_bound: tail,
    })
}
