//! Structural emulation of the four runtime LUT generators and their
//! closed-form hardware cost.
//!
//! Every architecture factors the IPC length as `K = p * q`: `p` identical
//! groups of `q` coefficients each produce a partial entry, and an adder tree
//! of depth `ceil(log2 p)` joins the groups. Within a group:
//!
//! * **Parallel** builds the half table (`b_1 = 0`) from the address-0
//!   content with one adder per entry, reusing a chain of tail partial sums.
//!   The other half is the two's complement of the mirrored entry.
//! * **Shared** keeps only `2^(q-2)` nodes `theta_2 +/- theta_3 ...`; the
//!   entries of both `b_2` halves come from the same node with a sign mux.
//! * **Split** runs two independent half-width tables and joins them with
//!   one adder.
//! * **Hybrid** pairs consecutive coefficients into `sum`/`diff` nodes and
//!   picks one per pair with XOR/AND select logic on the address bits.
//!
//! Internal node values are kept so that sharing claims can be checked
//! directly, not just final entries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::obc_ipc::{build_naive_lut, LutEval, ObcLut, MAX_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LutKind {
    Parallel,
    Shared,
    Split,
    Hybrid,
}

impl LutKind {
    pub const ALL: [LutKind; 4] = [
        LutKind::Parallel,
        LutKind::Shared,
        LutKind::Split,
        LutKind::Hybrid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LutKind::Parallel => "parallel",
            LutKind::Shared => "shared",
            LutKind::Split => "split",
            LutKind::Hybrid => "hybrid",
        }
    }
}

impl std::fmt::Display for LutKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "parallel" => Ok(LutKind::Parallel),
            "shared" => Ok(LutKind::Shared),
            "split" => Ok(LutKind::Split),
            "hybrid" => Ok(LutKind::Hybrid),
            other => Err(Error::InvalidConfig(format!("unknown LUT architecture {other:?}"))),
        }
    }
}

/// Table flavor used by an IPC: the full stored table or a runtime generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum LutImpl {
    Naive,
    Structural(LutKind),
}

impl std::fmt::Display for LutImpl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LutImpl::Naive => f.write_str("naive"),
            LutImpl::Structural(kind) => kind.fmt(f),
        }
    }
}

impl From<LutImpl> for String {
    fn from(l: LutImpl) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for LutImpl {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl std::str::FromStr for LutImpl {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("naive") {
            Ok(LutImpl::Naive)
        } else {
            s.parse().map(LutImpl::Structural)
        }
    }
}

/// A LUT architecture together with its `K = p * q` factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LutArch {
    kind: LutKind,
    k: usize,
    p: usize,
    q: usize,
}

impl LutArch {
    pub fn new(kind: LutKind, k: usize, p: usize, q: usize) -> Result<Self> {
        if k == 0 || p == 0 || q == 0 || p.checked_mul(q) != Some(k) {
            return Err(Error::BadFactorization(format!(
                "K = {k} is not p * q = {p} * {q}"
            )));
        }
        if k > MAX_K {
            return Err(Error::TooLong { k, limit: MAX_K });
        }
        match kind {
            LutKind::Split if !q.is_multiple_of(2) => Err(Error::BadFactorization(format!(
                "split needs an even group size, got q = {q}"
            ))),
            LutKind::Shared | LutKind::Hybrid if q < 2 => Err(Error::BadFactorization(format!(
                "{kind} needs q >= 2, got q = {q}"
            ))),
            _ => Ok(Self { kind, k, p, q }),
        }
    }

    /// Picks the legal group size closest to 4 (ties go to the smaller one).
    pub fn auto(kind: LutKind, k: usize) -> Result<Self> {
        let q = (1..=k)
            .filter(|q| k.is_multiple_of(*q))
            .filter(|&q| match kind {
                LutKind::Parallel => true,
                LutKind::Shared | LutKind::Hybrid => q >= 2,
                LutKind::Split => q % 2 == 0,
            })
            .min_by_key(|&q| (q.abs_diff(4), q))
            .ok_or_else(|| {
                Error::BadFactorization(format!("no valid group size for {kind} with K = {k}"))
            })?;
        Self::new(kind, k, k / q, q)
    }

    pub fn kind(&self) -> LutKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }
}

/// Adders, 2-to-1 muxes and critical path of one LUT generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LutCost {
    pub adders: u64,
    pub muxes_2to1: u64,
    /// Adder delays on the critical path, `log2 p` kept exact.
    pub cpd_adders: f64,
    /// Same with `ceil(log2 p)`.
    pub cpd_adders_ceil: u64,
    pub cpd_muxes: u64,
    pub and_gates: u64,
    pub xor_gates: u64,
}

fn ceil_log2(p: usize) -> u64 {
    (usize::BITS - (p - 1).leading_zeros()) as u64
}

/// Closed-form complexity for `arch`.
pub fn lut_cost(arch: &LutArch) -> LutCost {
    let p = arch.p as u64;
    let q = arch.q as u64;
    let log2p = (arch.p as f64).log2();
    let clog2p = ceil_log2(arch.p);
    let tree = p - 1;
    match arch.kind {
        LutKind::Parallel => LutCost {
            adders: ((1u64 << (q - 1)) + q - 2) * p + tree,
            muxes_2to1: ((1u64 << (q - 1)) - 1) * p,
            cpd_adders: q as f64 + log2p,
            cpd_adders_ceil: q + clog2p,
            cpd_muxes: 0,
            and_gates: 0,
            xor_gates: 0,
        },
        LutKind::Shared => LutCost {
            adders: ((1u64 << (q - 2)) + q - 2) * p + tree,
            muxes_2to1: (1u64 << (q - 2)) * p,
            cpd_adders: q as f64 + log2p,
            cpd_adders_ceil: q + clog2p,
            cpd_muxes: 0,
            and_gates: 0,
            xor_gates: 0,
        },
        LutKind::Split => LutCost {
            adders: (2 * ((1u64 << (q / 2 - 1)) - 1) + 1) * p + tree,
            muxes_2to1: 2 * (1u64 << (q / 2)) * p,
            cpd_adders: (q / 2 + 1) as f64 + log2p,
            cpd_adders_ceil: q / 2 + 1 + clog2p,
            cpd_muxes: 1,
            and_gates: 0,
            xor_gates: 0,
        },
        // The mux count is the printed closed form; it does not scale with p.
        LutKind::Hybrid => LutCost {
            adders: q * p + tree,
            muxes_2to1: 3 * (q - 2) + 1,
            cpd_adders: 2.0 + log2p,
            cpd_adders_ceil: 2 + clog2p,
            cpd_muxes: 2,
            and_gates: (q * p).div_ceil(2),
            xor_gates: (q * p).div_ceil(4),
        },
    }
}

/// Adders of a two-way split at point `split` (first `split` terms in one
/// parallel sub-table, the remaining `k - split` in the other, one join).
pub fn split_total_adders(k: usize, split: usize) -> u64 {
    assert!(split >= 1 && split < k, "split point must leave both parts non-empty");
    let a = 1u64 << (split - 1);
    let b = 1u64 << (k - split - 1);
    (a + b - 2) + (k as u64 - 2)
}

/// `sum_{i: b_i = 1} 2 c_i` stepping from the all-minus entry.
fn grow_table(base: i64, coeffs: &[i64], len: usize) -> Vec<i64> {
    let n = coeffs.len();
    let mut table = Vec::with_capacity(len);
    table.push(base);
    for j in 1..len {
        let low = j.trailing_zeros() as usize;
        table.push(table[j & (j - 1)] + 2 * coeffs[n - 1 - low]);
    }
    table
}

#[inline]
fn sign(bit: u32) -> i64 {
    if bit != 0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct HalfNodes {
    chain: Vec<i64>,
    /// Entries whose leading address bit is 1.
    table: Vec<i64>,
}

impl HalfNodes {
    fn build(coeffs: &[i64]) -> Self {
        let mut chain = Vec::with_capacity(coeffs.len().saturating_sub(1));
        let mut acc = coeffs[0];
        for &c in &coeffs[1..] {
            acc -= c;
            chain.push(acc);
        }
        let table = grow_table(acc, &coeffs[1..], 1 << (coeffs.len() - 1));
        Self { chain, table }
    }

    #[inline]
    fn lookup(&self, width: usize, addr: u32) -> (i64, u32, bool) {
        let low_mask = (1u32 << (width - 1)) - 1;
        if (addr >> (width - 1)) & 1 == 1 {
            let sel = addr & low_mask;
            (self.table[sel as usize], sel, false)
        } else {
            let sel = !addr & low_mask;
            (-self.table[sel as usize], sel, true)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairNodes {
    /// `theta_{j+1} + theta_j`
    pub sum: i64,
    /// `theta_{j+1} - theta_j`
    pub diff: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum GroupNodes {
    Parallel { chain: Vec<i64>, table: Vec<i64> },
    Shared { chain: Vec<i64>, lead: i64, shared: Vec<i64> },
    Split { left: HalfNodes, right: HalfNodes },
    Hybrid { pairs: Vec<PairNodes>, single: Option<i64> },
}

impl GroupNodes {
    fn build(kind: LutKind, c: &[i64]) -> Self {
        let q = c.len();
        match kind {
            LutKind::Parallel => {
                // Tail partial sums: c[q-2]+c[q-1], then c[q-3]+that, ...
                let mut chain = Vec::with_capacity(q - 1);
                let mut acc = c[q - 1];
                for &x in c[..q - 1].iter().rev() {
                    acc += x;
                    chain.push(acc);
                }
                let table = grow_table(-acc, &c[1..], 1 << (q - 1));
                GroupNodes::Parallel { chain, table }
            }
            LutKind::Shared => {
                let mut chain = Vec::with_capacity(q - 2);
                let mut acc = c[1];
                for &x in &c[2..] {
                    acc -= x;
                    chain.push(acc);
                }
                let shared = grow_table(acc, &c[2..], 1 << (q - 2));
                GroupNodes::Shared {
                    chain,
                    lead: c[0],
                    shared,
                }
            }
            LutKind::Split => GroupNodes::Split {
                left: HalfNodes::build(&c[..q / 2]),
                right: HalfNodes::build(&c[q / 2..]),
            },
            LutKind::Hybrid => GroupNodes::Hybrid {
                pairs: c
                    .chunks_exact(2)
                    .map(|w| PairNodes {
                        sum: w[1] + w[0],
                        diff: w[1] - w[0],
                    })
                    .collect(),
                single: (q % 2 == 1).then(|| c[q - 1]),
            },
        }
    }

    #[inline]
    fn eval(&self, q: usize, addr: u32) -> i64 {
        let mask = (1u32 << q) - 1;
        match self {
            GroupNodes::Parallel { table, .. } => {
                let low_mask = mask >> 1;
                if (addr >> (q - 1)) & 1 == 0 {
                    table[addr as usize]
                } else {
                    -table[(!addr & low_mask) as usize]
                }
            }
            GroupNodes::Shared { lead, shared, .. } => {
                let a = if (addr >> (q - 1)) & 1 == 1 { !addr & mask } else { addr };
                let rest_mask = (1u32 << (q - 2)) - 1;
                let v = if (a >> (q - 2)) & 1 == 1 {
                    -lead + shared[(a & rest_mask) as usize]
                } else {
                    -lead - shared[(!a & rest_mask) as usize]
                };
                if a == addr {
                    v
                } else {
                    -v
                }
            }
            GroupNodes::Split { left, right } => {
                let h = q / 2;
                let half_mask = (1u32 << h) - 1;
                left.lookup(h, (addr >> h) & half_mask).0 + right.lookup(h, addr & half_mask).0
            }
            GroupNodes::Hybrid { pairs, single } => {
                let mut total = 0;
                for (m, pair) in pairs.iter().enumerate() {
                    let shift = q - 2 - 2 * m;
                    let ba = (addr >> (shift + 1)) & 1;
                    let bb = (addr >> shift) & 1;
                    let node = if ba ^ bb == 0 { pair.sum } else { pair.diff };
                    total += if bb == 1 { node } else { -node };
                }
                if let Some(c) = single {
                    total += sign(addr & 1) * c;
                }
                total
            }
        }
    }

    fn eval_traced(&self, q: usize, addr: u32) -> GroupTrace {
        let mask = (1u32 << q) - 1;
        let out = self.eval(q, addr);
        match self {
            GroupNodes::Parallel { chain, table } => {
                let mirrored = (addr >> (q - 1)) & 1 == 1;
                let select = if mirrored { !addr & (mask >> 1) } else { addr };
                GroupTrace::Parallel {
                    chain: chain.clone(),
                    table: table.clone(),
                    select,
                    mirrored,
                    out,
                }
            }
            GroupNodes::Shared {
                chain,
                lead,
                shared,
            } => {
                let mirrored = (addr >> (q - 1)) & 1 == 1;
                let a = if mirrored { !addr & mask } else { addr };
                let rest_mask = (1u32 << (q - 2)) - 1;
                let add = (a >> (q - 2)) & 1 == 1;
                let select = if add { a & rest_mask } else { !a & rest_mask };
                GroupTrace::Shared {
                    chain: chain.clone(),
                    lead: *lead,
                    shared: shared.clone(),
                    select,
                    add,
                    mirrored,
                    out,
                }
            }
            GroupNodes::Split { left, right } => {
                let h = q / 2;
                let half_mask = (1u32 << h) - 1;
                let half = |nodes: &HalfNodes, a: u32| {
                    let (value, select, mirrored) = nodes.lookup(h, a);
                    HalfTrace {
                        chain: nodes.chain.clone(),
                        table: nodes.table.clone(),
                        select,
                        mirrored,
                        out: value,
                    }
                };
                GroupTrace::Split {
                    left: half(left, (addr >> h) & half_mask),
                    right: half(right, addr & half_mask),
                    out,
                }
            }
            GroupNodes::Hybrid { pairs, single } => {
                let pairs = pairs
                    .iter()
                    .enumerate()
                    .map(|(m, pair)| {
                        let shift = q - 2 - 2 * m;
                        let ba = (addr >> (shift + 1)) & 1;
                        let bb = (addr >> shift) & 1;
                        // XOR picks the difference node, a low second bit negates.
                        let select_diff = ba ^ bb == 1;
                        let negate = bb == 0;
                        let node = if select_diff { pair.diff } else { pair.sum };
                        PairTrace {
                            nodes: *pair,
                            select_diff,
                            negate,
                            out: if negate { -node } else { node },
                        }
                    })
                    .collect();
                GroupTrace::Hybrid {
                    pairs,
                    single: single.map(|c| sign(addr & 1) * c),
                    out,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HalfTrace {
    pub chain: Vec<i64>,
    pub table: Vec<i64>,
    pub select: u32,
    pub mirrored: bool,
    pub out: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairTrace {
    pub nodes: PairNodes,
    pub select_diff: bool,
    pub negate: bool,
    pub out: i64,
}

/// Node values of one group for one lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum GroupTrace {
    Parallel {
        /// Running tail sums, `theta_{q-1} + theta_q` first.
        chain: Vec<i64>,
        /// Entries with leading bit 0, entry 0 is `-sum(theta)`.
        table: Vec<i64>,
        select: u32,
        mirrored: bool,
        out: i64,
    },
    Shared {
        chain: Vec<i64>,
        lead: i64,
        /// `theta_2 +/- theta_3 +/- ...` indexed by the trailing `q - 2` bits.
        shared: Vec<i64>,
        select: u32,
        /// `+` when the second address bit is set, `-` otherwise.
        add: bool,
        mirrored: bool,
        out: i64,
    },
    Split {
        left: HalfTrace,
        right: HalfTrace,
        out: i64,
    },
    Hybrid {
        pairs: Vec<PairTrace>,
        single: Option<i64>,
        out: i64,
    },
}

impl GroupTrace {
    pub fn out(&self) -> i64 {
        match self {
            GroupTrace::Parallel { out, .. }
            | GroupTrace::Shared { out, .. }
            | GroupTrace::Split { out, .. }
            | GroupTrace::Hybrid { out, .. } => *out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructTrace {
    pub arch: LutArch,
    pub address: u32,
    pub groups: Vec<GroupTrace>,
    /// Adder-tree levels joining the group outputs, leaves excluded.
    pub tree: Vec<Vec<i64>>,
    pub value: i64,
}

/// A runtime-generated table for one coefficient vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructLut {
    arch: LutArch,
    groups: Vec<GroupNodes>,
}

impl StructLut {
    pub fn build(arch: LutArch, coeffs: &[i64]) -> Result<Self> {
        if coeffs.len() != arch.k {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for a K = {} architecture",
                coeffs.len(),
                arch.k
            )));
        }
        let groups = coeffs
            .chunks_exact(arch.q)
            .map(|c| GroupNodes::build(arch.kind, c))
            .collect();
        Ok(Self { arch, groups })
    }

    pub fn arch(&self) -> &LutArch {
        &self.arch
    }

    #[inline]
    fn group_addr(&self, address: u32, g: usize) -> u32 {
        let q = self.arch.q;
        let shift = (self.arch.p - 1 - g) * q;
        (address >> shift) & ((1u32 << q) - 1)
    }

    pub fn eval_traced(&self, address: u32) -> (i64, StructTrace) {
        let q = self.arch.q;
        let groups: Vec<GroupTrace> = self
            .groups
            .iter()
            .enumerate()
            .map(|(g, nodes)| nodes.eval_traced(q, self.group_addr(address, g)))
            .collect();
        let mut tree = Vec::new();
        let mut level: Vec<i64> = groups.iter().map(GroupTrace::out).collect();
        while level.len() > 1 {
            level = level.chunks(2).map(|w| w.iter().sum()).collect();
            tree.push(level.clone());
        }
        let value = level[0];
        let trace = StructTrace {
            arch: self.arch,
            address,
            groups,
            tree,
            value,
        };
        (value, trace)
    }
}

impl LutEval for StructLut {
    fn k(&self) -> usize {
        self.arch.k
    }

    #[inline]
    fn eval(&self, address: u32) -> i64 {
        let q = self.arch.q;
        self.groups
            .iter()
            .enumerate()
            .map(|(g, nodes)| nodes.eval(q, self.group_addr(address, g)))
            .sum()
    }
}

fn check_address(k: usize, address: u32) -> Result<()> {
    if k < 32 && address >> k != 0 {
        return Err(Error::InvalidConfig(format!(
            "address {address:#b} has more than {k} bits"
        )));
    }
    Ok(())
}

/// Evaluates one address with an explicit architecture.
pub fn eval_with(arch: LutArch, coeffs: &[i64], address: u32) -> Result<(i64, StructTrace)> {
    check_address(arch.k, address)?;
    Ok(StructLut::build(arch, coeffs)?.eval_traced(address))
}

fn eval_auto(kind: LutKind, coeffs: &[i64], address: u32) -> Result<(i64, StructTrace)> {
    eval_with(LutArch::auto(kind, coeffs.len())?, coeffs, address)
}

pub fn eval_parallel(coeffs: &[i64], address: u32) -> Result<(i64, StructTrace)> {
    eval_auto(LutKind::Parallel, coeffs, address)
}

pub fn eval_shared(coeffs: &[i64], address: u32) -> Result<(i64, StructTrace)> {
    eval_auto(LutKind::Shared, coeffs, address)
}

pub fn eval_split(coeffs: &[i64], address: u32) -> Result<(i64, StructTrace)> {
    eval_auto(LutKind::Split, coeffs, address)
}

pub fn eval_hybrid(coeffs: &[i64], address: u32) -> Result<(i64, StructTrace)> {
    eval_auto(LutKind::Hybrid, coeffs, address)
}

/// Either flavor of table, ready for the SA unit.
#[derive(Debug, Clone)]
pub enum AnyLut {
    Naive(ObcLut),
    Structural(StructLut),
}

impl LutEval for AnyLut {
    fn k(&self) -> usize {
        match self {
            AnyLut::Naive(l) => l.k(),
            AnyLut::Structural(l) => l.k(),
        }
    }

    #[inline]
    fn eval(&self, address: u32) -> i64 {
        match self {
            AnyLut::Naive(l) => l.eval(address),
            AnyLut::Structural(l) => l.eval(address),
        }
    }
}

pub fn build_lut(lut_impl: LutImpl, coeffs: &[i64]) -> Result<AnyLut> {
    match lut_impl {
        LutImpl::Naive => build_naive_lut(coeffs).map(AnyLut::Naive),
        LutImpl::Structural(kind) => {
            let arch = LutArch::auto(kind, coeffs.len())?;
            StructLut::build(arch, coeffs).map(AnyLut::Structural)
        }
    }
}
