//! Test-only oracles written from the model definitions, sharing no code with
//! the library beyond plain data types.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;

pub type Coord = Vec<i64>;

pub fn neighbours(c: &[i64]) -> Vec<Coord> {
    let mut out = Vec::new();
    for k in 0..c.len() {
        for step in [-1, 1] {
            let mut n = c.to_vec();
            n[k] += step;
            out.push(n);
        }
    }
    out
}

pub fn box_sites(lower: &[i64], upper: &[i64]) -> Vec<Coord> {
    let mut out = vec![Vec::new()];
    for k in 0..lower.len() {
        out = out
            .into_iter()
            .flat_map(|prefix: Coord| {
                (lower[k]..=upper[k]).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// Sites outside `sites` adjacent to one of them.
pub fn outer_boundary(sites: &[Coord]) -> Vec<Coord> {
    let mut out: Vec<Coord> = Vec::new();
    for s in sites {
        for n in neighbours(s) {
            if !sites.contains(&n) && !out.contains(&n) {
                out.push(n);
            }
        }
    }
    out.sort();
    out
}

/// Spin-flip transition probability from `a` to `b` in time t.
pub fn flip_kernel(a: i8, b: i8, t: f64) -> f64 {
    let e = (-2.0 * t).exp();
    match (a, b) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ if a == b => 0.5 * (1.0 + e),
        _ => 0.5 * (1.0 - e),
    }
}

fn mass(alpha: &[f64; 3], s: i8) -> f64 {
    alpha[(s + 1) as usize]
}

/// Two-layer hard-core instance: time-0 boundary spins on the outer boundary
/// of `sites`, evolved spins on `sites` minus `delta`.
pub struct TwoLayer {
    pub sites: Vec<Coord>,
    pub boundary: HashMap<Coord, i8>,
    pub evolved: HashMap<Coord, i8>,
    pub delta: Vec<Coord>,
    pub alpha: [f64; 3],
    pub t: f64,
}

/// Law of the evolved spins on Δ given everything else, by summing the joint
/// weight 1(hard-core) Π α(σ_i) Π p_t(σ_i, σ̂_i) over every time-0
/// configuration of the box. Base-3 index, first Δ site most significant.
/// `None` when every weight vanishes.
pub fn two_layer_conditional(inst: &TwoLayer) -> Option<Vec<f64>> {
    let n = inst.sites.len();
    let pos: HashMap<&Coord, usize> = inst.sites.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let delta_pos: Vec<usize> = inst.delta.iter().map(|d| pos[d]).collect();
    // Neighbour lists: Ok(index in box) or Err(boundary spin).
    let adj: Vec<Vec<Result<usize, i8>>> = inst
        .sites
        .iter()
        .map(|s| {
            neighbours(s)
                .into_iter()
                .map(|nb| match pos.get(&nb) {
                    Some(&j) => Ok(j),
                    None => Err(*inst.boundary.get(&nb).unwrap_or(&0)),
                })
                .collect()
        })
        .collect();
    let m = inst.delta.len();
    let mut weights = vec![0.0; 3usize.pow(m as u32)];
    let mut sigma = vec![-1i8; n];
    loop {
        let admissible = (0..n).all(|i| {
            adj[i].iter().all(|nb| {
                let other = match nb {
                    Ok(j) => sigma[*j],
                    Err(s) => *s,
                };
                sigma[i] as i32 * other as i32 != -1
            })
        });
        if admissible {
            let mut w: f64 = sigma.iter().map(|&s| mass(&inst.alpha, s)).product();
            for (i, s) in inst.sites.iter().enumerate() {
                if !delta_pos.contains(&i) {
                    w *= flip_kernel(sigma[i], inst.evolved[s], inst.t);
                }
            }
            if w > 0.0 {
                for (idx, slot) in weights.iter_mut().enumerate() {
                    let mut rest = idx;
                    let mut f = w;
                    for k in (0..m).rev() {
                        let target = (rest % 3) as i8 - 1;
                        rest /= 3;
                        f *= flip_kernel(sigma[delta_pos[k]], target, inst.t);
                    }
                    *slot += f;
                }
            }
        }
        // Odometer over {-1, 0, 1}^n.
        let mut k = 0;
        while k < n && sigma[k] == 1 {
            sigma[k] = -1;
            k += 1;
        }
        if k == n {
            break;
        }
        sigma[k] += 1;
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        Some(weights.iter().map(|w| w / total).collect())
    } else {
        None
    }
}

/// Single-site conditional law given neighbour spins. `beta = None` is the
/// hard-core exclusion; a site whose every spin is excluded falls back to 0.
pub fn single_site_law(alpha: &[f64; 3], beta: Option<f64>, neighbour_spins: &[i8]) -> [f64; 3] {
    let mut w = [0.0; 3];
    for s in [-1i8, 0, 1] {
        let conflicts = neighbour_spins.iter().filter(|&&x| x as i32 * s as i32 == -1).count();
        let factor = match beta {
            None => {
                if conflicts == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Some(b) => (-b * conflicts as f64).exp(),
        };
        w[(s + 1) as usize] = mass(alpha, s) * factor;
    }
    let z: f64 = w.iter().sum();
    if z == 0.0 {
        return [0.0, 1.0, 0.0];
    }
    w.map(|x| x / z)
}

/// max over neighbour patterns differing at one neighbour of the total
/// variation between the two single-site laws.
pub fn dobrushin_entry(alpha: &[f64; 3], beta: Option<f64>, degree: usize) -> f64 {
    let others = 3usize.pow(degree as u32 - 1);
    let mut best: f64 = 0.0;
    for code in 0..others {
        let mut pattern = vec![0i8; degree];
        let mut c = code;
        for slot in pattern.iter_mut().skip(1) {
            *slot = (c % 3) as i8 - 1;
            c /= 3;
        }
        for a in [-1i8, 0, 1] {
            for b in [-1i8, 0, 1] {
                if a >= b {
                    continue;
                }
                pattern[0] = a;
                let la = single_site_law(alpha, beta, &pattern);
                pattern[0] = b;
                let lb = single_site_law(alpha, beta, &pattern);
                let tv = 0.5 * la.iter().zip(&lb).map(|(x, y)| (x - y).abs()).sum::<f64>();
                best = best.max(tv);
            }
        }
    }
    best
}

/// Uniform point of the open 2-simplex.
pub fn random_simplex<R: Rng>(rng: &mut R) -> [f64; 3] {
    let e: Vec<f64> = (0..3).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    [e[0] / s, e[1] / s, 1.0 - e[0] / s - e[1] / s]
}
