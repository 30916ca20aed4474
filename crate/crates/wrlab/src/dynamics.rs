//! Independent spin-flip dynamics: every occupied site exchanges + and - at
//! rate one, empty sites stay empty. Transition times of the evolved
//! measures and the constrained single-site measures used to test Dobrushin's
//! condition for the evolved kernels.

use std::io::{self, Write};

use rand::Rng;

use crate::dobrushin::{cij_softcore, g_function, DobrushinReport, BranchMaxima};
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::model::{slot, AprioriMeasure, Spin, SpinConfiguration};
use crate::output::fmt_f64;

/// p_t on the states (-1, 0, +1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionKernel {
    pub t: f64,
    pub matrix: [[f64; 3]; 3],
}

impl TransitionKernel {
    pub fn prob(&self, from: Spin, to: Spin) -> f64 {
        self.matrix[slot(from)][slot(to)]
    }

    /// Matrix product, the kernel of running `self` then `other`.
    pub fn then(&self, other: &Self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| self.matrix[i][k] * other.matrix[k][j]).sum();
            }
        }
        out
    }
}

/// Probability that an occupied site keeps its sign up to time t.
fn stay(t: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * t).exp())
}

/// Probability that an occupied site has switched sign at time t.
pub fn flip_probability(t: f64) -> f64 {
    // -expm1 keeps accuracy for small t.
    -0.5 * (-2.0 * t).exp_m1()
}

pub fn transition_matrix(t: f64) -> Result<TransitionKernel> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
    }
    let (s, f) = (stay(t), flip_probability(t));
    Ok(TransitionKernel {
        t,
        matrix: [[s, 0.0, f], [0.0, 1.0, 0.0], [f, 0.0, s]],
    })
}

/// Flips every nonzero box spin independently with probability
/// ½(1 - e^{-2t}). Boundary spins are left as they are.
pub fn evolve_config<R: Rng + ?Sized>(config: &SpinConfiguration, t: f64, rng: &mut R) -> Result<SpinConfiguration> {
    let p = transition_matrix(t)?.prob(1, -1);
    let mut out = config.clone();
    let interior = out.frame().interior().to_vec();
    let values = out.raw_mut();
    for i in interior {
        if values[i] != 0 && rng.gen::<f64>() < p {
            values[i] = -values[i];
        }
    }
    Ok(out)
}

/// t_G = ½ log((α(1)+α(-1))/(α(1)-α(-1))), after orienting α so that α(1) ≥ α(-1).
/// Symmetric measures give +∞, a measure without one of the signs gives 0.
pub fn t_g(alpha: &AprioriMeasure) -> f64 {
    let (hi, lo) = (alpha.plus().max(alpha.minus()), alpha.plus().min(alpha.minus()));
    if hi == lo {
        return f64::INFINITY;
    }
    0.5 * ((hi + lo) / (hi - lo)).ln()
}

/// arccoth(r) = atanh(1/r) for r ≥ 1; equals t_G with r = α(1)/α(-1).
pub fn arccoth(r: f64) -> f64 {
    (1.0 / r).atanh()
}

/// q_t = p_t(1,1)/p_t(1,-1) = coth t.
pub fn q_t(t: f64) -> f64 {
    if t == 0.0 {
        return f64::INFINITY;
    }
    1.0 / t.tanh()
}

/// h_t = ½ log q_t = atanh(e^{-2t}).
pub fn h_t(t: f64) -> f64 {
    if t == 0.0 {
        return f64::INFINITY;
    }
    0.5 * q_t(t).ln()
}

/// β below log((2d+1)/(2d-1)) keeps the evolved soft-core measure Gibbs for
/// all times.
pub fn gibbs_all_times(beta: f64, d: u32) -> bool {
    let b = 2.0 * d as f64;
    beta < ((b + 1.0) / (b - 1.0)).ln()
}

fn atanh_or_inf(x: f64) -> f64 {
    if x >= 1.0 {
        f64::INFINITY
    } else {
        x.atanh()
    }
}

/// Short-time bound t_0 = min(atanh(r g/2), atanh(g/(2r))) with r = α(1)/α(-1)
/// and g = g(β, 2d); +∞ when β is below the all-time threshold.
pub fn t0_softcore(alpha: &AprioriMeasure, beta: f64, d: u32) -> Result<f64> {
    if !(alpha.plus() > 0.0 && alpha.minus() > 0.0) {
        return Err(Error::InvalidParameter(
            "t_0 needs positive mass on both signs".into(),
        ));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if gibbs_all_times(beta, d) {
        return Ok(f64::INFINITY);
    }
    let g = g_function(beta, 2 * d).ok_or_else(|| {
        Error::Degenerate(format!("g(beta={beta}, B={}) is not real", 2 * d))
    })?;
    let r = alpha.plus() / alpha.minus();
    Ok(atanh_or_inf(r * g / 2.0).min(atanh_or_inf(g / (2.0 * r))))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionTimes {
    pub t_g: f64,
    pub t_0: f64,
    pub gibbs_all_times: bool,
}

/// All three times for a soft-core interaction at β in dimension d.
pub fn transition_times(alpha: &AprioriMeasure, beta: f64, d: u32) -> Result<TransitionTimes> {
    Ok(TransitionTimes {
        t_g: t_g(alpha),
        t_0: t0_softcore(alpha, beta, d)?,
        gibbs_all_times: gibbs_all_times(beta, d),
    })
}

/// Single-site measure at time 0 given the evolved spin `eta` at time t,
/// α̃(ω) ∝ p_t(ω, η) α(ω).
pub fn alpha_tilde(t: f64, eta: Spin, alpha: &AprioriMeasure) -> Result<AprioriMeasure> {
    let p = transition_matrix(t)?;
    let w: Vec<f64> = [-1, 0, 1].iter().map(|&w| p.prob(w, eta) * alpha.mass(w)).collect();
    AprioriMeasure::from_weights(w[0], w[1], w[2]).map_err(|_| {
        Error::Degenerate(format!("no a priori mass is compatible with the evolved spin {eta}"))
    })
}

/// The checkerboard configuration on a box and its boundary: +1 on sites
/// with even coordinate sum, -1 elsewhere.
pub fn checkerboard(region: &LatticeBox) -> SpinConfiguration {
    let mut config = SpinConfiguration::filled(region, 0);
    let sites: Vec<_> = region.sites().chain(region.outer_boundary()).collect();
    for site in sites {
        let s = if site.is_even() { 1 } else { -1 };
        config.set(&site, s).expect("site is covered");
    }
    config
}

/// Dobrushin check for the evolved soft-core kernel with the first layer
/// constrained by the evolved spins: c = 2d max_{η=±1} C(α̃^η). Empty evolved
/// sites pin the first layer to 0 and contribute nothing.
pub fn first_layer_constrained_check(alpha: &AprioriMeasure, beta: f64, d: u32, t: f64) -> Result<DobrushinReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("time must be positive, got {t}")));
    }
    let degree = 2 * d;
    let mut worst = None;
    for eta in [1, -1] {
        let entry = cij_softcore(&alpha_tilde(t, eta, alpha)?, beta, degree)?;
        if worst.as_ref().is_none_or(|w: &crate::dobrushin::SoftCoreEntry| entry.value > w.value) {
            worst = Some(entry);
        }
    }
    let worst = worst.expect("two candidates");
    let c_constant = degree as f64 * worst.value;
    Ok(DobrushinReport {
        c_entry: worst.value,
        c_constant,
        branch_maxima: BranchMaxima::SoftCore(worst.branch_maxima),
        unique: c_constant < 1.0,
    })
}

/// Locates by bisection the time in `[lo, hi]` where the constrained check
/// changes verdict. This is an empirical probe, not a rigorous bound; it
/// returns `None` when both ends give the same verdict.
pub fn empirical_flip_time(alpha: &AprioriMeasure, beta: f64, d: u32, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>> {
    let verdict = |t: f64| first_layer_constrained_check(alpha, beta, d, t).map(|r| r.unique);
    let (mut lo, mut hi) = (lo, hi);
    let at_lo = verdict(lo)?;
    if verdict(hi)? == at_lo {
        return Ok(None);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if verdict(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// One row per (t, quantity) of a time sweep.
pub fn write_csv<W: Write>(rows: &[(f64, &str, f64)], mut out: W) -> io::Result<()> {
    writeln!(out, "t,quantity,value")?;
    for (t, q, v) in rows {
        writeln!(out, "{},{},{}", fmt_f64(*t), q, fmt_f64(*v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;
    use crate::dobrushin::threshold_alpha;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alpha(m: f64, z: f64, p: f64) -> AprioriMeasure {
        AprioriMeasure::new(m, z, p).unwrap()
    }

    #[test]
    fn kernel_limits() {
        let k = transition_matrix(0.0).unwrap();
        assert_eq!(k.matrix, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let k = transition_matrix(40.0).unwrap();
        assert!((k.prob(1, 1) - 0.5).abs() < 1e-15 && (k.prob(1, -1) - 0.5).abs() < 1e-15);
        assert!(transition_matrix(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn coth_and_atanh_identities(t in 1e-3f64..10.0) {
            prop_assert!((q_t(t) * t.tanh() - 1.0).abs() < 1e-12);
            prop_assert!((h_t(t) - (-2.0 * t).exp().atanh()).abs() < 1e-12);
            prop_assert!(q_t(t) > 1.0);
        }

        #[test]
        fn tilde_is_supported_on_signs(t in 1e-3f64..5.0, a in 0.01f64..0.98, b in 0.01f64..0.98) {
            prop_assume!(a + b < 0.99);
            let al = alpha(a, 1.0 - a - b, b);
            for eta in [1, -1] {
                let tilde = alpha_tilde(t, eta, &al).unwrap();
                prop_assert_eq!(tilde.zero(), 0.0);
                prop_assert!((tilde.minus() + tilde.plus() - 1.0).abs() < 1e-12);
            }
            prop_assert_eq!(alpha_tilde(t, 0, &al).unwrap(), AprioriMeasure::delta(0));
        }
    }

    #[test]
    fn q_and_h_at_zero_are_infinite() {
        assert_eq!(q_t(0.0), f64::INFINITY);
        assert_eq!(h_t(0.0), f64::INFINITY);
        assert!((q_t(30.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn t_g_examples() {
        let a = alpha(1.0 / 3.0, 0.0, 2.0 / 3.0);
        assert!((t_g(&a) - 0.549_306_144_334_054_9).abs() < 1e-12);
        assert_eq!(t_g(&alpha(0.0, 0.5, 0.5)), 0.0);
        assert_eq!(t_g(&alpha(0.3, 0.4, 0.3)), f64::INFINITY);
        assert_eq!(t_g(&a), t_g(&a.flipped()));
    }

    #[test]
    fn all_time_threshold() {
        assert!(gibbs_all_times(0.4, 2));
        assert!(!gibbs_all_times(0.6, 2));
        assert!(!gibbs_all_times(0.01, 500));
    }

    #[test]
    fn t0_cases() {
        let a = alpha(0.3, 0.2, 0.5);
        assert_eq!(t0_softcore(&a, 0.4, 2).unwrap(), f64::INFINITY);
        let sym = alpha(0.4, 0.2, 0.4);
        let g = g_function(2.0, 4).unwrap();
        assert!((t0_softcore(&sym, 2.0, 2).unwrap() - (g / 2.0).atanh()).abs() < 1e-15);
        assert!(t0_softcore(&alpha(0.0, 0.5, 0.5), 2.0, 2).is_err());
    }

    #[test]
    fn t0_monotone_in_beta() {
        let a = alpha(0.35, 0.2, 0.45);
        let start = ((5.0f64) / 3.0).ln();
        let mut last = f64::INFINITY;
        for k in 0..100 {
            let t0 = t0_softcore(&a, start + 0.05 * k as f64, 2).unwrap();
            assert!(t0 <= last);
            last = t0;
        }
    }

    /// Just below t_0 both constrained measures clear the α(0) = 0 threshold;
    /// just above, one of them does not.
    #[test]
    fn t0_matches_threshold_crossing() {
        for (m, p, beta) in [(0.3, 0.5, 1.5), (0.4, 0.4, 2.0), (0.2, 0.3, 3.0), (0.45, 0.35, 0.9)] {
            let a = alpha(m, 1.0 - m - p, p);
            let t0 = t0_softcore(&a, beta, 2).unwrap();
            let thr = threshold_alpha(beta, 4).unwrap();
            let clears = |t: f64| {
                [1, -1].iter().all(|&eta| {
                    let x = alpha_tilde(t, eta, &a).unwrap();
                    x.plus().max(x.minus()) > thr
                })
            };
            assert!(clears(t0 * (1.0 - 1e-6)));
            assert!(!clears(t0 * (1.0 + 1e-6)));
        }
    }

    #[test]
    fn constrained_check_cases() {
        let a = alpha(0.3, 0.2, 0.5);
        for t in [0.1, 1.0, 10.0] {
            assert!(first_layer_constrained_check(&a, 0.4, 2, t).unwrap().unique);
        }
        let t0 = t0_softcore(&a, 2.0, 2).unwrap();
        assert!(first_layer_constrained_check(&a, 2.0, 2, 0.9 * t0).unwrap().unique);
        let sym = alpha(0.4, 0.2, 0.4);
        assert!(!first_layer_constrained_check(&sym, 3.0, 2, 5.0).unwrap().unique);
        let flip = empirical_flip_time(&sym, 3.0, 2, 1e-8, 5.0, 1e-12).unwrap().unwrap();
        assert!(flip >= t0_softcore(&sym, 3.0, 2).unwrap() - 1e-6);
    }

    #[test]
    fn checkerboard_parity() {
        let b = LatticeBox::cube(2, 4).unwrap();
        let cb = checkerboard(&b);
        assert_eq!(cb.get(&Site::origin(2)), Some(1));
        assert_eq!(cb.get(&Site::from([1, 0])), Some(-1));
        for site in b.sites() {
            let s = cb.get(&site).unwrap();
            assert_ne!(s, 0);
            for n in crate::lattice::neighbors(&site) {
                assert_eq!(cb.get(&n), Some(-s));
            }
        }
    }

    #[test]
    fn evolution_preserves_occupation() {
        let b = LatticeBox::cube(2, 6).unwrap();
        let mut c = checkerboard(&b);
        c.set(&Site::origin(2), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(evolve_config(&c, 0.0, &mut rng).unwrap(), c);
        let zero = SpinConfiguration::filled(&b, 0);
        assert_eq!(evolve_config(&zero, 3.0, &mut rng).unwrap(), zero);
        let e = evolve_config(&c, 0.8, &mut rng).unwrap();
        for (x, y) in e.interior_values().iter().zip(c.interior_values()) {
            assert_eq!(x.abs(), y.abs());
        }
        assert_eq!(e.boundary_values(), c.boundary_values());
    }

    #[test]
    fn flip_frequency() {
        let b = LatticeBox::new(vec![0, 0], vec![99, 999]).unwrap();
        let c = SpinConfiguration::filled(&b, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = evolve_config(&c, 0.5, &mut rng).unwrap();
        let n = e.interior_values().len() as f64;
        let flipped = e.interior_values().iter().filter(|&&s| s == -1).count() as f64;
        let p = 0.5 * (1.0 - (-1.0f64).exp());
        let sigma = (p * (1.0 - p) / n).sqrt();
        assert!((flipped / n - p).abs() < 3.0 * sigma);
    }
}
