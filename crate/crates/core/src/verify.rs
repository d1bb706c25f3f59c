//! Seeded oracle-equivalence sweeps.
//!
//! Trials are independent and seeded from `(seed, trial index)`, so the
//! verdict and the first counterexample do not depend on how rayon splits
//! the work.

use rayon::prelude::*;
use serde::Serialize;

use crate::cnn_model::{infer, infer_oracle, model_cycles, ModelSpec};
use crate::error::{Error, Result};
use crate::fxp::FxpFormat;
use crate::gemm_core::GemmConfig;
use crate::lut_arch::{build_lut, AnyLut, LutImpl};
use crate::obc_ipc::{ipc_oracle, merged_offset, sa_run, IpcProblem, LutEval, Scheme};
use crate::tensor_io::{gen_input, SplitMix64, WeightBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IpcSweep {
    pub seed: u64,
    pub trials: u64,
    pub scheme: Scheme,
    pub lut: LutImpl,
    pub k: usize,
    pub b1: u32,
    pub b2: u32,
    /// Corrupts odd table addresses; used to check that the harness bites.
    pub inject_fault: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub trial: u64,
    pub trial_seed: u64,
    pub weights: Vec<i64>,
    pub inputs: Vec<i64>,
    pub bias: i64,
    pub expected: i128,
    pub got: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub sweep: IpcSweep,
    pub mismatches: u64,
    pub first: Option<Counterexample>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Seed of trial `i` within a sweep.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut rng = SplitMix64::new(seed ^ trial.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    rng.next_u64()
}

struct FaultyLut(AnyLut);

impl LutEval for FaultyLut {
    fn k(&self) -> usize {
        self.0.k()
    }

    fn eval(&self, address: u32) -> i64 {
        self.0.eval(address) + if address & 1 == 1 { 2 } else { 0 }
    }
}

/// Draws one trial and runs it; `None` when the DA result matches.
pub fn run_trial(sweep: &IpcSweep, trial: u64) -> Result<Option<Counterexample>> {
    let fi = FxpFormat::input(sweep.b1)?;
    let fw = FxpFormat::weight(sweep.b2)?;
    let ts = trial_seed(sweep.seed, trial);
    let mut rng = SplitMix64::new(ts);
    let weights: Vec<i64> = (0..sweep.k).map(|_| rng.next_in_fmt(fw)).collect();
    let inputs: Vec<i64> = (0..sweep.k).map(|_| rng.next_in_fmt(fi)).collect();
    let bound = 1i64 << (sweep.b1 + sweep.b2 - 2).min(62);
    let bias = rng.next_in_range(-bound, bound - 1);
    let problem = IpcProblem::new(&weights, &inputs, bias, sweep.scheme, fi, fw)?;
    let lut = build_lut(sweep.lut, problem.coeffs())?;
    let init = merged_offset(problem.coeffs(), bias);
    let (got, _) = if sweep.inject_fault {
        sa_run(&FaultyLut(lut), problem.serial_operands(), problem.serial_fmt(), init)?
    } else {
        sa_run(&lut, problem.serial_operands(), problem.serial_fmt(), init)?
    };
    let expected = ipc_oracle(&weights, &inputs, bias);
    Ok((got != expected).then_some(Counterexample {
        trial,
        trial_seed: ts,
        weights,
        inputs,
        bias,
        expected,
        got,
    }))
}

pub fn run_ipc_sweep(sweep: &IpcSweep) -> Result<SweepReport> {
    if sweep.trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    // Surface configuration errors once, before fanning out.
    run_trial(sweep, 0)?;
    let failures: Vec<Counterexample> = (0..sweep.trials)
        .into_par_iter()
        .map(|t| run_trial(sweep, t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(SweepReport {
        sweep: *sweep,
        mismatches: failures.len() as u64,
        first: failures.into_iter().min_by_key(|c| c.trial),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InferenceMismatch {
    pub input_seed: u64,
    pub da: Vec<i64>,
    pub oracle: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InferenceReport {
    pub inputs: u64,
    pub mismatches: Vec<InferenceMismatch>,
    /// Inputs whose measured cycle total differs from the closed form.
    pub cycle_mismatches: u64,
    pub expected_cycles: u64,
}

impl InferenceReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.cycle_mismatches == 0
    }
}

/// Runs DA and oracle inference on `gen_input(seed)` for every seed.
pub fn verify_inference(
    model: &ModelSpec,
    weights: &WeightBundle,
    cfg: &GemmConfig,
    seeds: std::ops::Range<u64>,
) -> Result<InferenceReport> {
    let expected_cycles = model_cycles(model, cfg);
    let n = seeds.end.saturating_sub(seeds.start);
    let results: Vec<(Option<InferenceMismatch>, bool)> = seeds
        .into_par_iter()
        .map(|seed| {
            let x = gen_input(seed, model);
            let da = infer(model, weights, &x, cfg)?;
            let oracle = infer_oracle(model, weights, &x)?;
            let cycles_ok = da.total_cycles == expected_cycles;
            let mismatch = (da.logits != oracle).then(|| InferenceMismatch {
                input_seed: seed,
                da: da.logits,
                oracle,
            });
            Ok((mismatch, cycles_ok))
        })
        .collect::<Result<_>>()?;
    Ok(InferenceReport {
        inputs: n,
        cycle_mismatches: results.iter().filter(|(_, ok)| !ok).count() as u64,
        mismatches: results.into_iter().filter_map(|(m, _)| m).collect(),
        expected_cycles,
    })
}
