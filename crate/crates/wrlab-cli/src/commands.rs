use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wrlab::cluster::{self, badness_sweep, find_gap_crossover, Decoration, ProbeGeometry};
use wrlab::dobrushin::region_scan;
use wrlab::dynamics::{self, checkerboard, evolve_config, first_layer_constrained_check, t0_softcore, t_g};
use wrlab::model::{alpha_to_lambda_h, BoundaryCondition};
use wrlab::output::fmt_f64;
use wrlab::peierls::{self, certify_phase_transition, find_critical_lambda};
use wrlab::sampler::{self, estimate_percolation_probability, read_snapshot, run_chain_detailed, ChainSpec};
use wrlab::{AprioriMeasure, Coupling, LatticeBox, ModelParams};

use crate::args::{BadnessArgs, BoundaryArg, EvolveArgs, MeasureArgs, PeierlsArgs, SampleArgs, ScanArgs, TimesArgs};
use crate::CliError;

type Out<'a> = &'a mut dyn Write;

fn triple(v: &[f64]) -> Result<AprioriMeasure, CliError> {
    if v.len() != 3 {
        return Err(CliError::Usage(format!("--alpha needs three masses, got {}", v.len())));
    }
    Ok(AprioriMeasure::new(v[0], v[1], v[2])?)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn dobrushin_scan(a: &ScanArgs, out: Out) -> Result<(), CliError> {
    let coupling = match a.beta {
        Some(beta) => Coupling::soft(beta)?,
        None => Coupling::HardCore,
    };
    region_scan(coupling, a.degree, a.res)?.write_csv(out)?;
    Ok(())
}

pub fn peierls(a: &PeierlsArgs, out: Out) -> Result<(), CliError> {
    if a.find_lambda_c {
        writeln!(out, "beta,lambda_c")?;
        for &beta in &a.beta {
            let lc = find_critical_lambda(beta, a.d, a.tol)?;
            writeln!(out, "{},{}", fmt_f64(beta), fmt_f64(lc))?;
        }
        return Ok(());
    }
    let mut rows = Vec::new();
    for &beta in &a.beta {
        for &lambda in &a.lambda {
            rows.push(certify_phase_transition(beta, lambda, a.d)?);
        }
    }
    peierls::write_csv(&rows, out)?;
    Ok(())
}

fn model_params(hardcore: bool, beta: Option<f64>, m: &MeasureArgs) -> Result<ModelParams, CliError> {
    let (lambda, h) = match &m.alpha {
        Some(v) => alpha_to_lambda_h(&triple(v)?)?,
        None => (
            m.lambda
                .ok_or_else(|| CliError::Usage("give either --lambda [--h] or --alpha".into()))?,
            m.h.unwrap_or(0.0),
        ),
    };
    Ok(if hardcore {
        ModelParams::hard_core(lambda, h)?
    } else {
        ModelParams::soft_core(beta.expect("clap requires beta without --hardcore"), lambda, h)?
    })
}

pub fn sample(a: &SampleArgs, out: Out) -> Result<(), CliError> {
    let params = model_params(a.hardcore, a.beta, &a.measure)?;
    let (boundary, label) = match a.boundary {
        BoundaryArg::Plus => (BoundaryCondition::AllPlus, "AllPlus"),
        BoundaryArg::Minus => (BoundaryCondition::AllMinus, "AllMinus"),
        BoundaryArg::Zero => (BoundaryCondition::AllZero, "AllZero"),
    };
    let spec = ChainSpec {
        region: LatticeBox::cube(a.d, a.side)?,
        params,
        boundary,
        sweeps: a.sweeps,
        burn_in: a.burn_in,
        seed: a.seed,
        chains: a.chains,
    };
    let run = run_chain_detailed(&spec, a.trace.as_ref().map(|_| a.trace_every.unwrap_or(1)))?;
    let e = run.estimate;
    writeln!(out, "quantity,value,stderr")?;
    for (name, v, s) in [
        ("p_minus", e.p_minus, e.stderr[0]),
        ("p_zero", e.p_zero, e.stderr[1]),
        ("p_plus", e.p_plus, e.stderr[2]),
    ] {
        writeln!(out, "{name},{},{}", fmt_f64(v), fmt_f64(s))?;
    }
    writeln!(out, "n_effective,{},", fmt_f64(e.n_effective))?;
    if a.percolation {
        let (p, s) = estimate_percolation_probability(&spec)?;
        writeln!(out, "percolation,{},{}", fmt_f64(p), fmt_f64(s))?;
    }
    if let Some(path) = &a.trace {
        let mut w = create(path)?;
        sampler::write_trace_csv(&run.trace, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = &a.snapshot {
        let mut w = create(path)?;
        sampler::write_snapshot(&run.final_configs[0], label, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

pub fn evolve(a: &EvolveArgs, out: Out) -> Result<(), CliError> {
    let (config, label) = match (&a.input, a.checkerboard) {
        (Some(path), _) => read_snapshot(&fs::read_to_string(path)?)?,
        (None, Some(side)) => (checkerboard(&LatticeBox::cube(a.d, side)?), "checkerboard".to_string()),
        (None, None) => unreachable!("clap requires an input"),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let evolved = evolve_config(&config, a.t, &mut rng)?;
    sampler::write_snapshot(&evolved, &label, out)?;
    Ok(())
}

pub fn badness(a: &BadnessArgs, out: Out) -> Result<(), CliError> {
    let alpha = match (&a.alpha, a.alpha_r) {
        (Some(v), _) => triple(v)?,
        (None, Some(r)) => {
            let minus = (1.0 - a.alpha_zero) / (1.0 + r);
            AprioriMeasure::new(minus, a.alpha_zero, r * minus)?
        }
        (None, None) => unreachable!("clap requires a measure"),
    };
    let template = ProbeGeometry {
        d: a.d,
        inner_radius: a.inner_radius,
        outer_radius: 0,
        inner_decoration: Decoration::Plus,
        connector: !a.no_connector,
    };
    if let Some(threshold) = a.crossover {
        let lo = a.t.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = a.t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        writeln!(out, "L,gap_threshold,t_crossover,t_G")?;
        for &l in &a.lengths {
            let g = ProbeGeometry { outer_radius: l, ..template };
            let t = find_gap_crossover(&g, &alpha, threshold, lo, hi, 1e-9)?;
            writeln!(out, "{l},{},{},{}", fmt_f64(threshold), fmt_f64(t), fmt_f64(t_g(&alpha)))?;
        }
        return Ok(());
    }
    let rows = badness_sweep(&template, &alpha, &a.t, &a.lengths)?;
    cluster::write_csv(&template, &rows, out)?;
    Ok(())
}

pub fn transition_times(a: &TimesArgs, out: Out) -> Result<(), CliError> {
    let alpha = triple(&a.alpha)?;
    if let Some(sweep) = &a.sweep {
        if sweep.len() != 3 {
            return Err(CliError::Usage("--sweep expects start,stop,count".into()));
        }
        let beta = *a
            .beta
            .first()
            .ok_or_else(|| CliError::Usage("--sweep needs at least one --beta".into()))?;
        let (start, stop, count) = (sweep[0], sweep[1], sweep[2]);
        if !(count >= 2.0 && count.fract() == 0.0 && start > 0.0 && stop > start) {
            return Err(CliError::Usage("--sweep expects start>0, stop>start and an integer count >= 2".into()));
        }
        let n = count as usize;
        let mut rows = Vec::with_capacity(2 * n);
        for k in 0..n {
            let t = start + (stop - start) * k as f64 / (n - 1) as f64;
            let report = first_layer_constrained_check(&alpha, beta, a.d, t)?;
            rows.push((t, "c_constant", report.c_constant));
            rows.push((t, "unique", report.unique as u8 as f64));
        }
        dynamics::write_csv(&rows, out)?;
        return Ok(());
    }
    writeln!(out, "quantity,beta,value")?;
    writeln!(out, "t_G,,{}", fmt_f64(t_g(&alpha)))?;
    for &beta in &a.beta {
        writeln!(out, "t_0,{},{}", fmt_f64(beta), fmt_f64(t0_softcore(&alpha, beta, a.d)?))?;
        writeln!(
            out,
            "gibbs_all_times,{},{}",
            fmt_f64(beta),
            dynamics::gibbs_all_times(beta, a.d)
        )?;
    }
    Ok(())
}
