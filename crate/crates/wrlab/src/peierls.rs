//! Peierls constant and the contour bound a(β, λ) that certifies a phase
//! transition of the symmetric model (h = 0) in d ≥ 2.
//!
//! With x = e^{-ρ}(2d)², the bound is a = x/(1-x)² + 1/(1-x) - 1 for x < 1
//! and infinite otherwise. A bound below 1/2 certifies coexistence.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::output::fmt_f64;

/// ρ = min(β, log λ)/(2d+1). Pass `f64::INFINITY` as β for the hard-core model.
pub fn peierls_constant(beta: f64, lambda: f64, d: u32) -> f64 {
    beta.min(lambda.ln()) / (2 * d + 1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ABound {
    Finite(f64),
    Diverged,
}

impl ABound {
    pub fn value(&self) -> f64 {
        match self {
            ABound::Finite(a) => *a,
            ABound::Diverged => f64::INFINITY,
        }
    }
}

/// a as a function of the Peierls constant.
pub fn bound_from_rho(rho: f64, d: u32) -> ABound {
    let x = (-rho).exp() * (4 * d * d) as f64;
    if x < 1.0 {
        ABound::Finite(x / ((1.0 - x) * (1.0 - x)) + 1.0 / (1.0 - x) - 1.0)
    } else {
        ABound::Diverged
    }
}

pub fn upper_bound_a(beta: f64, lambda: f64, d: u32) -> ABound {
    bound_from_rho(peierls_constant(beta, lambda, d), d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeierlsCertificate {
    pub beta: f64,
    pub lambda: f64,
    pub d: u32,
    pub rho: f64,
    pub a_value: ABound,
    pub certified: bool,
}

impl PeierlsCertificate {
    /// Lower bound 1 - 2a on the probability of a +1 at the origin under the
    /// all-plus boundary, when certified.
    pub fn origin_lower_bound(&self) -> Option<f64> {
        self.certified.then(|| 1.0 - 2.0 * self.a_value.value())
    }
}

fn check_inputs(beta: f64, lambda: f64, d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "the Peierls certificate needs d >= 2, got d={d}"
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and positive, got {lambda}"
        )));
    }
    Ok(())
}

/// Certificate for the symmetric model at (β, λ) in dimension d.
pub fn certify_phase_transition(beta: f64, lambda: f64, d: u32) -> Result<PeierlsCertificate> {
    check_inputs(beta, lambda, d)?;
    let rho = peierls_constant(beta, lambda, d);
    let a_value = bound_from_rho(rho, d);
    let certified = matches!(a_value, ABound::Finite(a) if a < 0.5);
    Ok(PeierlsCertificate {
        beta,
        lambda,
        d,
        rho,
        a_value,
        certified,
    })
}

/// Smallest certified λ at fixed β, bracketed by bisection in log λ until
/// the bracket's relative width is below `tol`. Returns the certified end.
pub fn find_critical_lambda(beta: f64, d: u32, tol: f64) -> Result<f64> {
    check_inputs(beta, 1.0, d)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if beta.is_finite() && !matches!(bound_from_rho(beta / (2 * d + 1) as f64, d), ABound::Finite(a) if a < 0.5)
    {
        return Err(Error::NoCertificate(format!(
            "beta={beta} caps the Peierls constant at {} in d={d}",
            beta / (2 * d + 1) as f64
        )));
    }
    let certified = |lambda: f64| {
        certify_phase_transition(beta, lambda, d)
            .map(|c| c.certified)
            .unwrap_or(false)
    };
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while !certified(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi / lo - 1.0 > tol {
        let mid = (lo * hi).sqrt();
        if certified(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn write_csv<W: Write>(rows: &[PeierlsCertificate], mut out: W) -> io::Result<()> {
    writeln!(out, "beta,lambda,rho,a_value,certified")?;
    for c in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(c.beta),
            fmt_f64(c.lambda),
            fmt_f64(c.rho),
            fmt_f64(c.a_value.value()),
            c.certified
        )?;
    }
    Ok(())
}
