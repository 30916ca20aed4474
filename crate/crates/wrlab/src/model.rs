//! A priori measures, model parameters, configurations and exact
//! finite-volume kernels for both variants.

use crate::error::{Error, Result};
use crate::lattice::{Frame, LatticeBox, Site};

/// A spin value in {-1, 0, +1}.
pub type Spin = i8;

/// Spin values in the order used for every 3-vector in the crate.
pub const SPINS: [Spin; 3] = [-1, 0, 1];

/// Position of `s` in [`SPINS`].
#[inline]
pub fn slot(s: Spin) -> usize {
    (s + 1) as usize
}

/// Single-site distribution over {-1, 0, +1}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriMeasure {
    masses: [f64; 3],
}

impl AprioriMeasure {
    /// Masses must be nonnegative and sum to one within 1e-12.
    pub fn new(minus: f64, zero: f64, plus: f64) -> Result<Self> {
        let masses = [minus, zero, plus];
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "a priori masses must be finite and nonnegative, got {masses:?}"
            )));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "a priori masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { masses })
    }

    /// Normalises nonnegative weights with a positive total.
    pub fn from_weights(minus: f64, zero: f64, plus: f64) -> Result<Self> {
        let w = [minus, zero, plus];
        let total: f64 = w.iter().sum();
        if w.iter().any(|m| !m.is_finite() || *m < 0.0) || !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "weights {w:?} cannot be normalised"
            )));
        }
        Ok(Self {
            masses: w.map(|m| m / total),
        })
    }

    pub fn uniform() -> Self {
        Self {
            masses: [1.0 / 3.0; 3],
        }
    }

    pub fn delta(s: Spin) -> Self {
        let mut masses = [0.0; 3];
        masses[slot(s)] = 1.0;
        Self { masses }
    }

    pub fn mass(&self, s: Spin) -> f64 {
        self.masses[slot(s)]
    }

    pub fn masses(&self) -> [f64; 3] {
        self.masses
    }

    pub fn minus(&self) -> f64 {
        self.masses[0]
    }

    pub fn zero(&self) -> f64 {
        self.masses[1]
    }

    pub fn plus(&self) -> f64 {
        self.masses[2]
    }

    /// Same measure with the roles of +1 and -1 exchanged.
    pub fn flipped(&self) -> Self {
        Self {
            masses: [self.masses[2], self.masses[1], self.masses[0]],
        }
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        total_variation(&self.masses, &other.masses)
    }
}

pub(crate) fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Normalises log-weights in place into probabilities; `-inf` entries get 0.
pub(crate) fn normalize_log_weights(w: &mut [f64]) {
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in w.iter_mut() {
        *x = if *x == f64::NEG_INFINITY { 0.0 } else { (*x - max).exp() };
        total += *x;
    }
    for x in w.iter_mut() {
        *x /= total;
    }
}

/// α(±1) ∝ λ e^{±h}, α(0) ∝ 1.
pub fn alpha_from_lambda_h(lambda: f64, h: f64) -> Result<AprioriMeasure> {
    if !(lambda > 0.0) || !lambda.is_finite() || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need finite lambda > 0 and finite h, got lambda={lambda}, h={h}"
        )));
    }
    let ln = lambda.ln();
    let mut w = [ln - h, 0.0, ln + h];
    normalize_log_weights(&mut w);
    Ok(AprioriMeasure { masses: w })
}

/// Inverse of [`alpha_from_lambda_h`]; needs all three masses positive.
pub fn alpha_to_lambda_h(alpha: &AprioriMeasure) -> Result<(f64, f64)> {
    let [m, z, p] = alpha.masses;
    if m <= 0.0 || z <= 0.0 || p <= 0.0 {
        return Err(Error::Unrepresentable(m, z, p));
    }
    Ok(((p * m).sqrt() / z, 0.5 * (p / m).ln()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    HardCore,
    SoftCore,
}

/// How opposite signs on a bond interact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    /// Opposite neighbouring signs are forbidden.
    HardCore,
    /// Each conflicting bond costs `beta`.
    SoftCore { beta: f64 },
}

impl Coupling {
    pub fn soft(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "soft-core beta must be finite and >= 0, got {beta}"
            )));
        }
        Ok(Coupling::SoftCore { beta })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub variant: Variant,
    /// `f64::INFINITY` for the hard-core variant.
    pub beta: f64,
    pub lambda: f64,
    pub h: f64,
}

impl ModelParams {
    pub fn hard_core(lambda: f64, h: f64) -> Result<Self> {
        alpha_from_lambda_h(lambda, h)?;
        Ok(Self {
            variant: Variant::HardCore,
            beta: f64::INFINITY,
            lambda,
            h,
        })
    }

    /// `beta = 0` is allowed and gives the decoupled product measure.
    pub fn soft_core(beta: f64, lambda: f64, h: f64) -> Result<Self> {
        Coupling::soft(beta)?;
        alpha_from_lambda_h(lambda, h)?;
        Ok(Self {
            variant: Variant::SoftCore,
            beta,
            lambda,
            h,
        })
    }

    pub fn coupling(&self) -> Coupling {
        match self.variant {
            Variant::HardCore => Coupling::HardCore,
            Variant::SoftCore => Coupling::SoftCore { beta: self.beta },
        }
    }

    pub fn apriori(&self) -> AprioriMeasure {
        alpha_from_lambda_h(self.lambda, self.h).expect("validated at construction")
    }

    /// Log of the unnormalised single-site weight, log(λ) s² + h s.
    fn site_log_weight(&self, s: Spin) -> f64 {
        match s {
            0 => 0.0,
            _ => self.lambda.ln() + self.h * s as f64,
        }
    }
}

/// Numbers of +1, 0 and -1 spins among the neighbours of a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NeighborCounts {
    pub plus: u32,
    pub zero: u32,
    pub minus: u32,
}

impl NeighborCounts {
    pub fn new(plus: u32, zero: u32, minus: u32) -> Self {
        Self { plus, zero, minus }
    }

    pub fn from_spins(spins: &[Spin]) -> Self {
        let mut c = Self::new(0, 0, 0);
        for &s in spins {
            match s {
                1 => c.plus += 1,
                -1 => c.minus += 1,
                _ => c.zero += 1,
            }
        }
        c
    }

    pub fn degree(&self) -> u32 {
        self.plus + self.zero + self.minus
    }
}

/// Conditional law of one spin given its neighbours, as masses on (-1, 0, +1).
///
/// For the hard-core variant an a priori measure with no mass on the allowed
/// states (for example δ₋₁ next to a +1) falls back to δ₀, the only state that
/// is always admissible.
pub fn single_site_kernel(counts: NeighborCounts, alpha: &AprioriMeasure, coupling: Coupling) -> [f64; 3] {
    let [am, a0, ap] = alpha.masses;
    match coupling {
        Coupling::SoftCore { beta } => {
            let ln = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
            let mut w = [
                ln(am) - beta * counts.plus as f64,
                ln(a0),
                ln(ap) - beta * counts.minus as f64,
            ];
            normalize_log_weights(&mut w);
            w
        }
        Coupling::HardCore => {
            let restrict = |keep: [bool; 3]| {
                let total: f64 = (0..3).filter(|&k| keep[k]).map(|k| alpha.masses[k]).sum();
                if total > 0.0 {
                    std::array::from_fn(|k| if keep[k] { alpha.masses[k] / total } else { 0.0 })
                } else {
                    [0.0, 1.0, 0.0]
                }
            };
            match (counts.plus > 0, counts.minus > 0) {
                (true, true) => [0.0, 1.0, 0.0],
                (false, false) => alpha.masses,
                (true, false) => restrict([false, true, true]),
                (false, true) => restrict([true, true, false]),
            }
        }
    }
}

/// Rule for the frozen spins on the outer boundary.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    AllPlus,
    AllMinus,
    AllZero,
    /// Boundary values copied from a configuration on the same box.
    Custom(SpinConfiguration),
}

/// Spins on a box and its outer boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinConfiguration {
    frame: Frame,
    values: Vec<Spin>,
}

impl SpinConfiguration {
    /// Every site of the box and its boundary set to `fill`.
    pub fn filled(region: &LatticeBox, fill: Spin) -> Self {
        let frame = Frame::new(region);
        let mut values = vec![0; frame.storage_len()];
        for &i in frame.interior().iter().chain(frame.boundary()) {
            values[i] = fill;
        }
        Self { frame, values }
    }

    /// All-zero interior with the requested boundary.
    pub fn with_boundary(region: &LatticeBox, bc: &BoundaryCondition) -> Result<Self> {
        let mut config = Self::filled(region, 0);
        let fill = match bc {
            BoundaryCondition::AllPlus => 1,
            BoundaryCondition::AllMinus => -1,
            BoundaryCondition::AllZero => 0,
            BoundaryCondition::Custom(source) => {
                if source.region() != region {
                    return Err(Error::InvalidParameter(
                        "custom boundary configuration lives on a different box".into(),
                    ));
                }
                for &i in config.frame.boundary() {
                    config.values[i] = source.values[i];
                }
                return Ok(config);
            }
        };
        for &i in config.frame.boundary() {
            config.values[i] = fill;
        }
        Ok(config)
    }

    pub fn region(&self) -> &LatticeBox {
        self.frame.region()
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Spin at a site of the box or its outer boundary.
    pub fn get(&self, site: &Site) -> Option<Spin> {
        let i = self.frame.index_of(site)?;
        self.covers(i).then(|| self.values[i])
    }

    pub fn set(&mut self, site: &Site, s: Spin) -> Result<()> {
        if !(-1..=1).contains(&s) {
            return Err(Error::InvalidParameter(format!("spin {s} not in {{-1,0,1}}")));
        }
        match self.frame.index_of(site) {
            Some(i) if self.covers(i) => {
                self.values[i] = s;
                Ok(())
            }
            _ => Err(Error::InvalidParameter(format!(
                "site {:?} is neither in the box nor on its boundary",
                site.coords()
            ))),
        }
    }

    fn covers(&self, i: usize) -> bool {
        let site = self.frame.site_at(i);
        let region = self.frame.region();
        region.contains(&site) || region.on_outer_boundary(&site)
    }

    /// Box spins in lexicographic order.
    pub fn interior_values(&self) -> Vec<Spin> {
        self.frame.interior().iter().map(|&i| self.values[i]).collect()
    }

    pub fn set_interior(&mut self, spins: &[Spin]) -> Result<()> {
        if spins.len() != self.frame.interior().len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} box spins, got {}",
                self.frame.interior().len(),
                spins.len()
            )));
        }
        for (k, &i) in self.frame.interior().iter().enumerate() {
            self.values[i] = spins[k];
        }
        Ok(())
    }

    /// Boundary spins in lexicographic order of the boundary sites.
    pub fn boundary_values(&self) -> Vec<Spin> {
        self.frame.boundary().iter().map(|&i| self.values[i]).collect()
    }

    /// Configuration on a sub-box whose spins (box and boundary) are read from `self`.
    pub fn restrict(&self, sub: &LatticeBox) -> Result<Self> {
        let mut out = Self::filled(sub, 0);
        for &i in out.frame.interior().iter().chain(out.frame.boundary()) {
            let site = out.frame.site_at(i);
            out.values[i] = self.get(&site).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "site {:?} of the sub-box frame is not covered",
                    site.coords()
                ))
            })?;
        }
        Ok(out)
    }

    pub(crate) fn raw(&self) -> &[Spin] {
        &self.values
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [Spin] {
        &mut self.values
    }
}

/// 1 unless some bond touching the box joins opposite signs.
pub fn hardcore_indicator(config: &SpinConfiguration) -> u8 {
    let v = config.raw();
    let clash = config.frame().bonds().iter().any(|&(i, j)| v[i] * v[j] == -1);
    u8::from(!clash)
}

/// Soft-core energy of the box spins given the boundary.
pub fn hamiltonian_sc(config: &SpinConfiguration, params: &ModelParams) -> Result<f64> {
    if params.variant != Variant::SoftCore {
        return Err(Error::UnsupportedVariant("the soft-core Hamiltonian"));
    }
    Ok(-log_weight(config.frame(), config.raw(), params))
}

/// Unnormalised log-weight of the box spins: minus the energy for the soft-core
/// model, the indicator path for the hard-core model.
fn log_weight(frame: &Frame, v: &[Spin], params: &ModelParams) -> f64 {
    let conflicts = frame.bonds().iter().filter(|&&(i, j)| v[i] * v[j] == -1).count();
    let field: f64 = frame.interior().iter().map(|&i| params.site_log_weight(v[i])).sum();
    match params.variant {
        Variant::HardCore if conflicts > 0 => f64::NEG_INFINITY,
        Variant::HardCore => field,
        Variant::SoftCore if conflicts == 0 => field,
        Variant::SoftCore => field - params.beta * conflicts as f64,
    }
}

/// Default cap on the number of box sites for exact enumeration.
pub const ENUMERATION_CAP: usize = 16;

/// Exact conditional law on all box configurations.
///
/// States are indexed in base 3 with the first box site (lexicographic) as
/// the most significant digit; digit `k` encodes spin `k - 1`.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    region: LatticeBox,
    probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn region(&self) -> &LatticeBox {
        &self.region
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn decode(&self, mut index: usize) -> Vec<Spin> {
        let n = self.region.len();
        let mut spins = vec![0; n];
        for k in (0..n).rev() {
            spins[k] = (index % 3) as Spin - 1;
            index /= 3;
        }
        spins
    }

    pub fn encode(spins: &[Spin]) -> usize {
        spins.iter().fold(0, |acc, &s| acc * 3 + slot(s))
    }

    pub fn prob(&self, spins: &[Spin]) -> f64 {
        self.probs[Self::encode(spins)]
    }

    /// Marginal law at one box site, masses on (-1, 0, +1).
    pub fn marginal(&self, site: &Site) -> Option<[f64; 3]> {
        let k = self.region.index_of(site)?;
        let n = self.region.len();
        let stride = 3usize.pow((n - 1 - k) as u32);
        let mut out = [0.0; 3];
        for (idx, p) in self.probs.iter().enumerate() {
            out[(idx / stride) % 3] += p;
        }
        Some(out)
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        total_variation(&self.probs, &other.probs)
    }
}

/// Exact finite-volume Gibbs kernel on `config.region()` given the boundary spins
/// of `config`. The box spins of `config` are ignored.
pub fn gibbs_kernel(config: &SpinConfiguration, params: &ModelParams) -> Result<ExactDistribution> {
    gibbs_kernel_capped(config, params, ENUMERATION_CAP)
}

pub fn gibbs_kernel_capped(
    config: &SpinConfiguration,
    params: &ModelParams,
    cap: usize,
) -> Result<ExactDistribution> {
    let n = config.region().len();
    if n > cap {
        return Err(Error::EnumerationCap { sites: n, cap });
    }
    let frame = config.frame();
    let mut v = config.raw().to_vec();
    let total = 3usize.pow(n as u32);
    let mut logw = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    for _ in 0..total {
        for (k, &i) in frame.interior().iter().enumerate() {
            v[i] = digits[k] as Spin - 1;
        }
        logw.push(log_weight(frame, &v, params));
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < 3 {
                break;
            }
            *d = 0;
        }
    }
    normalize_log_weights(&mut logw);
    Ok(ExactDistribution {
        region: config.region().clone(),
        probs: logw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lambda_h_examples() {
        let a = alpha_from_lambda_h(1.0, 0.0).unwrap();
        assert!(a.masses().iter().all(|m| close(*m, 1.0 / 3.0, 1e-15)));
        let (l, h) = alpha_to_lambda_h(&AprioriMeasure::uniform()).unwrap();
        assert!(close(l, 1.0, 1e-15) && close(h, 0.0, 1e-15));
        let (l, h) = alpha_to_lambda_h(&AprioriMeasure::new(0.25, 0.5, 0.25).unwrap()).unwrap();
        assert!(close(l, 0.5, 1e-15) && h == 0.0);
        let tiny = alpha_from_lambda_h(1e-12, 0.0).unwrap();
        assert!(tiny.zero() > 1.0 - 1e-11);
        assert!(matches!(
            alpha_to_lambda_h(&AprioriMeasure::delta(1)),
            Err(Error::Unrepresentable(..))
        ));
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(AprioriMeasure::new(0.5, 0.5, 0.5).is_err());
        assert!(AprioriMeasure::new(-0.1, 0.6, 0.5).is_err());
        assert!(ModelParams::hard_core(0.0, 0.0).is_err());
        assert!(ModelParams::soft_core(-1.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn lambda_h_roundtrip(lambda in 1e-3f64..1e3, h in -5.0f64..5.0) {
            let a = alpha_from_lambda_h(lambda, h).unwrap();
            let (l, hh) = alpha_to_lambda_h(&a).unwrap();
            prop_assert!(((l - lambda) / lambda).abs() < 1e-12);
            prop_assert!((hh - h).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let region = LatticeBox::cube(2, 3).unwrap();
        let p = ModelParams::soft_core(0.7, 2.5, 0.3).unwrap();
        let mut c = SpinConfiguration::filled(&region, 0);
        assert_eq!(hamiltonian_sc(&c, &p).unwrap(), 0.0);
        c.set(&Site::origin(2), 1).unwrap();
        assert!(close(hamiltonian_sc(&c, &p).unwrap(), -(2.5f64.ln()) - 0.3, 1e-14));
        let p0 = ModelParams::soft_core(0.7, 2.5, 0.0).unwrap();
        c.set(&Site::from([1, 0]), -1).unwrap();
        assert!(close(hamiltonian_sc(&c, &p0).unwrap(), 0.7 - 2.0 * 2.5f64.ln(), 1e-14));
        let hc = ModelParams::hard_core(1.0, 0.0).unwrap();
        assert!(matches!(hamiltonian_sc(&c, &hc), Err(Error::UnsupportedVariant(_))));
    }

    #[test]
    fn indicator_sees_boundary_bonds() {
        let region = LatticeBox::cube(2, 3).unwrap();
        let mut c = SpinConfiguration::filled(&region, 0);
        assert_eq!(hardcore_indicator(&c), 1);
        c.set(&Site::from([1, 1]), 1).unwrap();
        c.set(&Site::from([1, 0]), -1).unwrap();
        assert_eq!(hardcore_indicator(&c), 0);
        c.set(&Site::from([1, 0]), 0).unwrap();
        c.set(&Site::from([2, 1]), -1).unwrap();
        assert_eq!(hardcore_indicator(&c), 0);
        // Two boundary sites are never joined by a touching bond.
        let mut d = SpinConfiguration::filled(&region, 0);
        d.set(&Site::from([2, 1]), -1).unwrap();
        d.set(&Site::from([2, 0]), 1).unwrap();
        assert_eq!(hardcore_indicator(&d), 1);
    }

    #[test]
    fn single_site_examples() {
        let u = AprioriMeasure::uniform();
        let both = NeighborCounts::new(1, 2, 1);
        assert_eq!(single_site_kernel(both, &u, Coupling::HardCore), [0.0, 1.0, 0.0]);
        let none = NeighborCounts::new(0, 4, 0);
        assert_eq!(single_site_kernel(none, &u, Coupling::HardCore), u.masses());
        let k = single_site_kernel(
            NeighborCounts::new(1, 3, 0),
            &u,
            Coupling::SoftCore { beta: 2f64.ln() },
        );
        for (got, want) in k.iter().zip([0.2, 0.4, 0.4]) {
            assert!(close(*got, want, 1e-15));
        }
        let k = single_site_kernel(NeighborCounts::new(1, 0, 0), &AprioriMeasure::delta(-1), Coupling::HardCore);
        assert_eq!(k, [0.0, 1.0, 0.0]);
    }

    fn all_neighbour_patterns(d: usize) -> Vec<Vec<Spin>> {
        let n = 2 * d;
        (0..3usize.pow(n as u32))
            .map(|mut idx| {
                let mut v = vec![0; n];
                for x in v.iter_mut() {
                    *x = (idx % 3) as Spin - 1;
                    idx /= 3;
                }
                v
            })
            .collect()
    }

    #[test]
    fn single_site_matches_exact_kernel() {
        let region = LatticeBox::singleton(&Site::origin(2));
        for params in [
            ModelParams::hard_core(1.7, 0.4).unwrap(),
            ModelParams::soft_core(0.9, 0.6, -0.3).unwrap(),
        ] {
            for pattern in all_neighbour_patterns(2) {
                let mut c = SpinConfiguration::filled(&region, 0);
                for (n, s) in crate::lattice::neighbors(&Site::origin(2)).iter().zip(&pattern) {
                    c.set(n, *s).unwrap();
                }
                let exact = gibbs_kernel(&c, &params).unwrap();
                let local = single_site_kernel(
                    NeighborCounts::from_spins(&pattern),
                    &params.apriori(),
                    params.coupling(),
                );
                for (e, l) in exact.probabilities().iter().zip(local) {
                    assert!(close(*e, l, 1e-14));
                }
            }
        }
    }

    #[test]
    fn single_site_with_zero_boundary_is_alpha() {
        let region = LatticeBox::singleton(&Site::origin(2));
        let p = ModelParams::soft_core(1.3, 3.0, 0.2).unwrap();
        let c = SpinConfiguration::filled(&region, 0);
        let k = gibbs_kernel(&c, &p).unwrap();
        for (a, b) in k.probabilities().iter().zip(p.apriori().masses()) {
            assert!(close(*a, b, 1e-15));
        }
    }

    fn mixed_boundary(region: &LatticeBox) -> SpinConfiguration {
        let mut c = SpinConfiguration::filled(region, 0);
        for (k, site) in region.outer_boundary().iter().enumerate() {
            c.set(site, [1, -1, 0][k % 3]).unwrap();
        }
        c
    }

    #[test]
    fn zero_beta_is_product_measure() {
        let region = LatticeBox::new(vec![0, 0], vec![1, 1]).unwrap();
        let p = ModelParams::soft_core(0.0, 1.8, 0.5).unwrap();
        let k = gibbs_kernel(&mixed_boundary(&region), &p).unwrap();
        let alpha = p.apriori();
        for (idx, prob) in k.probabilities().iter().enumerate() {
            let product: f64 = k.decode(idx).iter().map(|&s| alpha.mass(s)).product();
            assert!(close(*prob, product, 1e-15));
        }
    }

    #[test]
    fn large_beta_approaches_hard_core() {
        let region = LatticeBox::new(vec![0, 0], vec![1, 1]).unwrap();
        let c = mixed_boundary(&region);
        let hc = gibbs_kernel(&c, &ModelParams::hard_core(1.5, 0.2).unwrap()).unwrap();
        let mut last = f64::INFINITY;
        for beta in [1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
            let sc = gibbs_kernel(&c, &ModelParams::soft_core(beta, 1.5, 0.2).unwrap()).unwrap();
            let tv = sc.total_variation(&hc);
            assert!(tv <= last);
            last = tv;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn hard_core_excludes_conflicts() {
        let region = LatticeBox::new(vec![0, 0], vec![1, 1]).unwrap();
        let c = mixed_boundary(&region);
        let k = gibbs_kernel(&c, &ModelParams::hard_core(2.0, 0.0).unwrap()).unwrap();
        let mut probe = c.clone();
        let total: f64 = k.probabilities().iter().sum();
        assert!(close(total, 1.0, 1e-12));
        for (idx, prob) in k.probabilities().iter().enumerate() {
            probe.set_interior(&k.decode(idx)).unwrap();
            if hardcore_indicator(&probe) == 0 {
                assert_eq!(*prob, 0.0);
            }
        }
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let region = LatticeBox::cube(2, 5).unwrap();
        let c = SpinConfiguration::filled(&region, 0);
        let p = ModelParams::hard_core(1.0, 0.0).unwrap();
        assert!(matches!(gibbs_kernel(&c, &p), Err(Error::EnumerationCap { sites: 25, cap: 16 })));
    }

    #[test]
    fn spin_flip_symmetry_at_zero_field() {
        let region = LatticeBox::new(vec![0, 0], vec![1, 1]).unwrap();
        let c = mixed_boundary(&region);
        let mut flipped = c.clone();
        for site in region.outer_boundary() {
            flipped.set(&site, -c.get(&site).unwrap()).unwrap();
        }
        for p in [ModelParams::soft_core(1.1, 2.0, 0.0).unwrap(), ModelParams::hard_core(2.0, 0.0).unwrap()] {
            let a = gibbs_kernel(&c, &p).unwrap();
            let b = gibbs_kernel(&flipped, &p).unwrap();
            for (idx, prob) in a.probabilities().iter().enumerate() {
                let mirror: Vec<Spin> = a.decode(idx).iter().map(|s| -s).collect();
                assert!(close(*prob, b.prob(&mirror), 1e-15));
            }
        }
    }

    /// Integrating the kernel of a sub-box against the kernel of the whole box
    /// leaves the latter unchanged.
    #[test]
    fn kernels_are_consistent() {
        let outer = LatticeBox::new(vec![0, 0], vec![1, 1]).unwrap();
        let inner = LatticeBox::new(vec![0, 0], vec![0, 1]).unwrap();
        let bc = mixed_boundary(&outer);
        for p in [ModelParams::soft_core(0.8, 1.4, 0.3).unwrap(), ModelParams::hard_core(1.4, -0.2).unwrap()] {
            let big = gibbs_kernel(&bc, &p).unwrap();
            let mut mixed = vec![0.0; big.probabilities().len()];
            let mut xi = bc.clone();
            for (idx, weight) in big.probabilities().iter().enumerate() {
                if *weight == 0.0 {
                    continue;
                }
                xi.set_interior(&big.decode(idx)).unwrap();
                let small = gibbs_kernel(&xi.restrict(&inner).unwrap(), &p).unwrap();
                for (sidx, sp) in small.probabilities().iter().enumerate() {
                    let mut omega = xi.clone();
                    for (site, s) in inner.sites().zip(small.decode(sidx)) {
                        omega.set(&site, s).unwrap();
                    }
                    mixed[ExactDistribution::encode(&omega.interior_values())] += weight * sp;
                }
            }
            for (a, b) in mixed.iter().zip(big.probabilities()) {
                assert!(close(*a, *b, 1e-14));
            }
        }
    }

    #[test]
    fn marginal_sums_to_one() {
        let region = LatticeBox::cube(2, 2).unwrap();
        let c = mixed_boundary(&region);
        let k = gibbs_kernel(&c, &ModelParams::soft_core(1.0, 1.0, 0.0).unwrap()).unwrap();
        let m = k.marginal(&Site::origin(2)).unwrap();
        assert!(close(m.iter().sum::<f64>(), 1.0, 1e-14));
        assert!(k.marginal(&Site::from([5, 5])).is_none());
    }
}
