//! Offset-binary inner products: table construction, offset/bias merge and
//! the bit-serial shift-accumulate unit.
//!
//! Scheme A keeps the weights on the table side and streams the inputs one
//! bit-slice per cycle; Scheme B swaps the two roles. Either way the SA unit
//! runs once per serial bit and the table is addressed by one slice of every
//! serial operand, operand 0 on the most significant address bit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fxp::{bit_at, slice_sign, FxpFormat};
use crate::lut_arch::{build_lut, LutImpl};

/// Largest table the naive builder will materialize (`2^24` entries).
pub const NAIVE_MAX_K: usize = 24;

/// Address width of one slice; bounds the IPC length for every table flavor.
pub const MAX_K: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Inputs bit-serial over `B1`, weights build the table.
    A,
    /// Weights bit-serial over `B2`, inputs build the table.
    B,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::A => f.write_str("A"),
            Scheme::B => f.write_str("B"),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Scheme::A),
            "b" | "B" => Ok(Scheme::B),
            other => Err(Error::InvalidConfig(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Anything that can answer a table lookup in the doubled domain.
pub trait LutEval {
    /// Number of address bits.
    fn k(&self) -> usize;

    /// `sum_i coeff_i * (2 b_i - 1)` for the address `b`.
    fn eval(&self, address: u32) -> i64;
}

/// One K-length inner product, already split into table and serial sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpcProblem {
    coeffs: Vec<i64>,
    serial: Vec<i64>,
    bias: i64,
    scheme: Scheme,
    coeff_fmt: FxpFormat,
    serial_fmt: FxpFormat,
}

impl IpcProblem {
    /// Arranges `weights . inputs + bias` for the given scheme.
    pub fn new(
        weights: &[i64],
        inputs: &[i64],
        bias: i64,
        scheme: Scheme,
        fmt_in: FxpFormat,
        fmt_wt: FxpFormat,
    ) -> Result<Self> {
        if weights.len() != inputs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights vs {} inputs",
                weights.len(),
                inputs.len()
            )));
        }
        let k = weights.len();
        if k == 0 || k > MAX_K {
            return Err(Error::TooLong { k, limit: MAX_K });
        }
        for &w in weights {
            fmt_wt.check(w)?;
        }
        for &x in inputs {
            fmt_in.check(x)?;
        }
        let (coeffs, serial, coeff_fmt, serial_fmt) = match scheme {
            Scheme::A => (weights.to_vec(), inputs.to_vec(), fmt_wt, fmt_in),
            Scheme::B => (inputs.to_vec(), weights.to_vec(), fmt_in, fmt_wt),
        };
        Ok(Self {
            coeffs,
            serial,
            bias,
            scheme,
            coeff_fmt,
            serial_fmt,
        })
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    /// Table-side operands.
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Bit-serial operands.
    pub fn serial_operands(&self) -> &[i64] {
        &self.serial
    }

    pub fn bias(&self) -> i64 {
        self.bias
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn coeff_fmt(&self) -> FxpFormat {
        self.coeff_fmt
    }

    pub fn serial_fmt(&self) -> FxpFormat {
        self.serial_fmt
    }

    pub fn serial_bits(&self) -> u32 {
        self.serial_fmt.bits()
    }
}

/// Full `2^K` offset-binary table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObcLut {
    k: usize,
    entries: Vec<i64>,
}

impl ObcLut {
    pub fn entries(&self) -> &[i64] {
        &self.entries
    }
}

impl LutEval for ObcLut {
    fn k(&self) -> usize {
        self.k
    }

    #[inline]
    fn eval(&self, address: u32) -> i64 {
        self.entries[address as usize]
    }
}

pub fn build_naive_lut(coeffs: &[i64]) -> Result<ObcLut> {
    let k = coeffs.len();
    if k > NAIVE_MAX_K {
        return Err(Error::TooLong {
            k,
            limit: NAIVE_MAX_K,
        });
    }
    let mut entries = vec![0i64; 1usize << k];
    entries[0] = -coeffs.iter().sum::<i64>();
    // Each address differs from the one with its lowest set bit cleared by a
    // single digit flip from -1 to +1, i.e. by twice that coefficient.
    for addr in 1..entries.len() {
        let low = addr.trailing_zeros() as usize;
        let coeff = coeffs[k - 1 - low];
        entries[addr] = entries[addr & (addr - 1)] + 2 * coeff;
    }
    Ok(ObcLut { k, entries })
}

/// Doubled-domain accumulator seed: `-sum(coeffs) + 2 * bias`.
pub fn merged_offset(coeffs: &[i64], bias: i64) -> i128 {
    -coeffs.iter().map(|&c| c as i128).sum::<i128>() + 2 * bias as i128
}

/// Packs slice `r` of every operand into a table address, operand 0 first.
#[inline]
pub fn slice_address(operands: &[i64], r: usize, bits: u32) -> u32 {
    operands
        .iter()
        .fold(0u32, |addr, &v| (addr << 1) | bit_at(v, r, bits) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SaStep {
    pub r: usize,
    pub address: u32,
    pub lut_output: i64,
    pub accumulator: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SaTrace {
    pub k: usize,
    pub init: i128,
    pub steps: Vec<SaStep>,
    pub cycles: usize,
}

impl SaTrace {
    pub const CSV_HEADER: &'static str = "r,address_bits,lut_output,accumulator";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for step in &self.steps {
            let _ = writeln!(
                out,
                "{},{:0width$b},{},{}",
                step.r,
                step.address,
                step.lut_output,
                step.accumulator,
                width = self.k
            );
        }
        out
    }
}

fn check_serial(lut_k: usize, operands: &[i64], fmt: FxpFormat) -> Result<()> {
    if lut_k != operands.len() {
        return Err(Error::ShapeMismatch(format!(
            "table has {lut_k} address bits but {} serial operands were given",
            operands.len()
        )));
    }
    for &v in operands {
        fmt.check(v)?;
    }
    Ok(())
}

/// Runs the shift-accumulate unit and returns `Y` with its per-slice trace.
///
/// Slices are consumed LSB first. Slice `r` adds `lut(addr_r) * 2^(B-1-r)`,
/// negated for the sign slice; the final accumulator holds `2Y`.
pub fn sa_run<L: LutEval + ?Sized>(
    lut: &L,
    serial_operands: &[i64],
    fmt: FxpFormat,
    init: i128,
) -> Result<(i128, SaTrace)> {
    check_serial(lut.k(), serial_operands, fmt)?;
    let bits = fmt.bits();
    let b = bits as usize;
    let mut acc = init;
    let mut steps = Vec::with_capacity(b);
    for r in (0..b).rev() {
        let address = slice_address(serial_operands, r, bits);
        let lut_output = lut.eval(address);
        acc += (slice_sign(r) * lut_output) as i128 * (1i128 << (b - 1 - r));
        steps.push(SaStep {
            r,
            address,
            lut_output,
            accumulator: acc,
        });
    }
    debug_assert_eq!(acc & 1, 0, "doubled-domain accumulator must be even");
    let trace = SaTrace {
        k: lut.k(),
        init,
        steps,
        cycles: b,
    };
    Ok((acc >> 1, trace))
}

/// Same datapath as [`sa_run`] without recording a trace. Operands must
/// already be validated.
#[inline]
pub(crate) fn sa_accumulate<L: LutEval + ?Sized>(
    lut: &L,
    serial_operands: &[i64],
    bits: u32,
    init: i128,
) -> i128 {
    let b = bits as usize;
    let mut acc = init;
    for r in (0..b).rev() {
        let address = slice_address(serial_operands, r, bits);
        acc += (slice_sign(r) * lut.eval(address)) as i128 * (1i128 << (b - 1 - r));
    }
    acc >> 1
}

/// Direct multiply-accumulate reference.
pub fn ipc_oracle(weights: &[i64], inputs: &[i64], bias: i64) -> i128 {
    weights
        .iter()
        .zip(inputs)
        .map(|(&w, &x)| w as i128 * x as i128)
        .sum::<i128>()
        + bias as i128
}

/// Evaluates one inner product through the DA datapath.
pub fn ipc_obc(problem: &IpcProblem, lut_impl: LutImpl) -> Result<(i128, SaTrace)> {
    let lut = build_lut(lut_impl, problem.coeffs())?;
    let init = merged_offset(problem.coeffs(), problem.bias());
    sa_run(&lut, problem.serial_operands(), problem.serial_fmt(), init)
}
