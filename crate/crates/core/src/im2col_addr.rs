//! im2col address generation driven by a hierarchy of counters.
//!
//! `cntr0` walks the fetch cycles of one tile. The read group ripples
//! `tile -> spatial position -> output channel -> layer`; each wrap raises the
//! matching carry (1 to 4). Compute and write groups never ripple: on every
//! tile boundary the read context that just finished is handed to `cal`, and
//! the previous `cal` context moves on to `wr`.
//!
//! RAM images are flat row-major arrays: `x[c][h][w]`, `theta[n][k]` with
//! `k` the channel-major patch index, `beta[n]` and `y[n][h_out][w_out]`.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-layer configuration word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerConfigWord {
    /// Input channels.
    pub c: usize,
    /// Kernel height.
    pub kh: usize,
    /// Kernel width.
    pub kw: usize,
    /// 1 for plain convolution, 2 for down-sampling.
    pub stride: usize,
    /// 1 appends one zero row and one zero column (bottom/right).
    pub pad: usize,
    /// Output channels.
    pub n: usize,
    /// Serial bit-width.
    pub bits: u32,
    pub h: usize,
    pub w: usize,
}

impl LayerConfigWord {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.c == 0 || self.kh == 0 || self.kw == 0 || self.n == 0 || self.h == 0 || self.w == 0
        {
            return bad(format!("zero-sized dimension in {self:?}"));
        }
        if !matches!(self.stride, 1 | 2) {
            return bad(format!("stride must be 1 or 2, got {}", self.stride));
        }
        if self.pad > 1 {
            return bad(format!("padding must be 0 or 1, got {}", self.pad));
        }
        if self.kh > self.h + self.pad || self.kw > self.w + self.pad {
            return bad(format!(
                "{}x{} kernel larger than the {}x{} padded frame",
                self.kh,
                self.kw,
                self.h + self.pad,
                self.w + self.pad
            ));
        }
        Ok(())
    }

    pub fn out_h(&self) -> usize {
        (self.h + self.pad - self.kh) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.w + self.pad - self.kw) / self.stride + 1
    }

    /// Output positions per channel, `H_out * W_out`.
    pub fn positions(&self) -> usize {
        self.out_h() * self.out_w()
    }

    /// Patch length `Np = C * Kk * Lk`.
    pub fn patch_len(&self) -> usize {
        self.c * self.kh * self.kw
    }

    pub fn input_len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn output_len(&self) -> usize {
        self.n * self.positions()
    }

    /// Input coordinate feeding patch element `k` of output position `pos`,
    /// or `None` when it lands in the zero pad.
    pub fn source(&self, pos: usize, k: usize) -> Option<usize> {
        let (ch, rem) = (k / (self.kh * self.kw), k % (self.kh * self.kw));
        let (kr, kc) = (rem / self.kw, rem % self.kw);
        let (oh, ow) = (pos / self.out_w(), pos % self.out_w());
        let (row, col) = (oh * self.stride + kr, ow * self.stride + kc);
        (row < self.h && col < self.w).then(|| ch * self.h * self.w + row * self.w + col)
    }
}

/// One level-indexed counter group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Counters {
    pub tile: usize,
    pub pos: usize,
    pub chan: usize,
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CounterState {
    pub cntr0: usize,
    pub rd: Counters,
    pub cal: Option<Counters>,
    pub wr: Option<Counters>,
    pub cycle: u64,
    pub reading_done: bool,
}

fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

impl CounterState {
    pub fn describe(&self) -> String {
        format!(
            "fetching the {} group of data in the {} tile, spatial position {}, output channel {}, layer {}",
            ordinal(self.cntr0 + 1),
            ordinal(self.rd.tile + 1),
            self.rd.pos,
            self.rd.chan,
            self.rd.layer
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stage {
    Cal,
    Wr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AddrEvent {
    ReadX(usize),
    ReadXPad,
    ReadTheta(usize),
    ReadBeta(usize),
    WriteY(usize),
    Carry(u8),
    Handoff(Stage),
}

impl AddrEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            AddrEvent::ReadX(_) => "read_x",
            AddrEvent::ReadXPad => "read_x_pad",
            AddrEvent::ReadTheta(_) => "read_theta",
            AddrEvent::ReadBeta(_) => "read_beta",
            AddrEvent::WriteY(_) => "write_y",
            AddrEvent::Carry(_) => "carry",
            AddrEvent::Handoff(_) => "handoff",
        }
    }

    /// Address, carry level, or nothing.
    pub fn operand(&self) -> String {
        match self {
            AddrEvent::ReadX(a)
            | AddrEvent::ReadTheta(a)
            | AddrEvent::ReadBeta(a)
            | AddrEvent::WriteY(a) => a.to_string(),
            AddrEvent::Carry(level) => level.to_string(),
            AddrEvent::Handoff(Stage::Cal) => "cal".into(),
            AddrEvent::Handoff(Stage::Wr) => "wr".into(),
            AddrEvent::ReadXPad => String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XRead {
    Ram(usize),
    PadZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadAddrs {
    /// `None` on the zero tail of the last tile.
    pub x: Option<XRead>,
    pub theta: Option<usize>,
    pub beta: Option<usize>,
}

/// Address generator for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddrGen {
    cfg: LayerConfigWord,
    k_hw: usize,
    layer: usize,
}

impl AddrGen {
    pub fn new(cfg: LayerConfigWord, k_hw: usize, layer: usize) -> Result<Self> {
        cfg.validate()?;
        if k_hw == 0 {
            return Err(Error::InvalidConfig("fetch cycles per tile must be >= 1".into()));
        }
        Ok(Self { cfg, k_hw, layer })
    }

    pub fn cfg(&self) -> &LayerConfigWord {
        &self.cfg
    }

    pub fn k_hw(&self) -> usize {
        self.k_hw
    }

    pub fn tiles(&self) -> usize {
        self.cfg.patch_len().div_ceil(self.k_hw)
    }

    pub fn initial_state(&self) -> CounterState {
        CounterState {
            rd: Counters {
                layer: self.layer,
                ..Counters::default()
            },
            ..CounterState::default()
        }
    }

    pub fn is_done(&self, state: &CounterState) -> bool {
        state.reading_done && state.cal.is_none()
    }

    fn check(&self, state: &CounterState) -> Result<()> {
        let in_bounds = |c: &Counters| {
            c.tile < self.tiles()
                && c.pos < self.cfg.positions()
                && c.chan < self.cfg.n
                && c.layer == self.layer
        };
        if state.cntr0 >= self.k_hw {
            return Err(Error::InconsistentState(format!(
                "cntr0 = {} with {} fetch cycles per tile",
                state.cntr0, self.k_hw
            )));
        }
        if !state.reading_done && !in_bounds(&state.rd) {
            return Err(Error::InconsistentState(format!("read counters {:?}", state.rd)));
        }
        for c in state.cal.iter().chain(state.wr.iter()) {
            if !in_bounds(c) {
                return Err(Error::InconsistentState(format!("pipeline counters {c:?}")));
            }
        }
        Ok(())
    }

    pub fn read_addresses(&self, state: &CounterState) -> ReadAddrs {
        let rd = &state.rd;
        let np = self.cfg.patch_len();
        let k = rd.tile * self.k_hw + state.cntr0;
        let beta = (rd.tile + 1 == self.tiles() && state.cntr0 == 0).then_some(rd.chan);
        if k >= np {
            return ReadAddrs {
                x: None,
                theta: None,
                beta,
            };
        }
        let x = match self.cfg.source(rd.pos, k) {
            Some(addr) => XRead::Ram(addr),
            None => XRead::PadZero,
        };
        ReadAddrs {
            x: Some(x),
            theta: Some(rd.chan * np + k),
            beta,
        }
    }

    pub fn write_address(&self, wr: &Counters) -> usize {
        wr.chan * self.cfg.positions() + wr.pos
    }

    /// Whether the tile in the compute stage should fold in the bias.
    pub fn bias_enable(&self, state: &CounterState) -> bool {
        state
            .cal
            .map(|c| c.tile + 1 == self.tiles())
            .unwrap_or(false)
    }

    fn advance_pipeline(&self, completed: Option<Counters>, next: &mut CounterState, ev: &mut Vec<AddrEvent>) {
        if let Some(c) = next.cal.take() {
            next.wr = Some(c);
            ev.push(AddrEvent::Handoff(Stage::Wr));
            if c.tile + 1 == self.tiles() {
                ev.push(AddrEvent::WriteY(self.write_address(&c)));
            }
        }
        if let Some(c) = completed {
            next.cal = Some(c);
            ev.push(AddrEvent::Handoff(Stage::Cal));
        }
    }

    /// One clock of the generator. After the last read it keeps stepping to
    /// drain the compute and write stages, one tile period per step.
    pub fn step(&self, state: &CounterState) -> Result<(CounterState, Vec<AddrEvent>)> {
        self.check(state)?;
        if self.is_done(state) {
            return Err(Error::InconsistentState("generator already drained".into()));
        }
        let mut next = state.clone();
        let mut ev = Vec::with_capacity(8);

        if state.reading_done {
            next.cycle += self.k_hw as u64;
            self.advance_pipeline(None, &mut next, &mut ev);
            return Ok((next, ev));
        }

        let reads = self.read_addresses(state);
        if let Some(beta) = reads.beta {
            ev.push(AddrEvent::ReadBeta(beta));
        }
        match reads.x {
            Some(XRead::Ram(a)) => ev.push(AddrEvent::ReadX(a)),
            Some(XRead::PadZero) => ev.push(AddrEvent::ReadXPad),
            None => {}
        }
        if let Some(t) = reads.theta {
            ev.push(AddrEvent::ReadTheta(t));
        }

        next.cycle += 1;
        next.cntr0 += 1;
        if next.cntr0 < self.k_hw {
            return Ok((next, ev));
        }

        ev.push(AddrEvent::Carry(1));
        next.cntr0 = 0;
        self.advance_pipeline(Some(state.rd), &mut next, &mut ev);

        let rd = &mut next.rd;
        rd.tile += 1;
        if rd.tile == self.tiles() {
            ev.push(AddrEvent::Carry(2));
            rd.tile = 0;
            rd.pos += 1;
            if rd.pos == self.cfg.positions() {
                ev.push(AddrEvent::Carry(3));
                rd.pos = 0;
                rd.chan += 1;
                if rd.chan == self.cfg.n {
                    ev.push(AddrEvent::Carry(4));
                    rd.chan = 0;
                    rd.layer += 1;
                    next.reading_done = true;
                }
            }
        }
        Ok((next, ev))
    }

    /// Runs the generator over the whole layer, recording every event with
    /// the counter state it was raised from.
    pub fn run(&self) -> Result<AddrStream> {
        let mut state = self.initial_state();
        let mut records = Vec::new();
        while !self.is_done(&state) {
            let (next, events) = self.step(&state)?;
            records.extend(events.into_iter().map(|event| EventRecord {
                cycle: state.cycle,
                cntr0: state.cntr0,
                rd: state.rd,
                event,
            }));
            state = next;
        }
        Ok(AddrStream {
            gen: *self,
            records,
            cycles: state.cycle,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EventRecord {
    pub cycle: u64,
    pub cntr0: usize,
    pub rd: Counters,
    pub event: AddrEvent,
}

#[derive(Debug, Clone)]
pub struct AddrStream {
    gen: AddrGen,
    pub records: Vec<EventRecord>,
    pub cycles: u64,
}

impl AddrStream {
    pub const CSV_HEADER: &'static str = "cycle,event,operand,cntr0,rd_tile,rd_pos,rd_chan,rd_layer";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.cycle,
                r.event.kind(),
                r.event.operand(),
                r.cntr0,
                r.rd.tile,
                r.rd.pos,
                r.rd.chan,
                r.rd.layer
            );
        }
        out
    }

    pub fn count(&self, pred: impl Fn(&AddrEvent) -> bool) -> usize {
        self.records.iter().filter(|r| pred(&r.event)).count()
    }

    pub fn carries(&self, level: u8) -> usize {
        self.count(|e| *e == AddrEvent::Carry(level))
    }

    pub fn write_addresses(&self) -> Vec<usize> {
        self.records
            .iter()
            .filter_map(|r| match r.event {
                AddrEvent::WriteY(a) => Some(a),
                _ => None,
            })
            .collect()
    }

    /// Materializes the x-read stream of output channel `chan` against the
    /// flat input image, giving the `Np x positions` patch matrix row-major.
    pub fn materialize_x(&self, x: &[i64], chan: usize) -> Result<Vec<i64>> {
        let cfg = self.gen.cfg;
        if x.len() != cfg.input_len() {
            return Err(Error::ShapeMismatch(format!(
                "input image has {} elements, layer expects {}",
                x.len(),
                cfg.input_len()
            )));
        }
        let np = cfg.patch_len();
        let positions = cfg.positions();
        let mut out = vec![0i64; np * positions];
        let mut filled = vec![false; np * positions];
        for r in self.records.iter().filter(|r| r.rd.chan == chan) {
            let value = match r.event {
                AddrEvent::ReadX(a) => x[a],
                AddrEvent::ReadXPad => 0,
                _ => continue,
            };
            let k = r.rd.tile * self.gen.k_hw + r.cntr0;
            let slot = k * positions + r.rd.pos;
            if filled[slot] {
                return Err(Error::InconsistentState(format!(
                    "patch element {k} of position {} read twice",
                    r.rd.pos
                )));
            }
            filled[slot] = true;
            out[slot] = value;
        }
        if let Some(missing) = filled.iter().position(|f| !f) {
            return Err(Error::InconsistentState(format!(
                "patch element {} of position {} never read",
                missing / positions,
                missing % positions
            )));
        }
        Ok(out)
    }
}

/// Closed-form event counts for a full layer run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CarryCounts {
    pub carry1: usize,
    pub carry2: usize,
    pub carry3: usize,
    pub carry4: usize,
}

pub fn expected_carries(gen: &AddrGen) -> CarryCounts {
    let cfg = gen.cfg();
    CarryCounts {
        carry1: cfg.positions() * cfg.n * gen.tiles(),
        carry2: cfg.positions() * cfg.n,
        carry3: cfg.n,
        carry4: 1,
    }
}

/// Checks that every compute context was read before and every write
/// context was computed before, replaying the stream in order.
pub fn check_handoff_causality(stream: &AddrStream) -> Result<()> {
    let mut read_done: HashSet<Counters> = HashSet::new();
    let mut computed: HashSet<Counters> = HashSet::new();
    let mut cal: Option<Counters> = None;
    for r in &stream.records {
        match r.event {
            AddrEvent::Carry(1) => {
                read_done.insert(r.rd);
            }
            AddrEvent::Handoff(Stage::Wr) => {
                let c = cal.ok_or_else(|| {
                    Error::InconsistentState("write handoff with empty compute stage".into())
                })?;
                if !computed.contains(&c) {
                    return Err(Error::InconsistentState(format!("{c:?} written before compute")));
                }
            }
            AddrEvent::Handoff(Stage::Cal) => {
                if !read_done.contains(&r.rd) {
                    return Err(Error::InconsistentState(format!("{:?} computed before read", r.rd)));
                }
                computed.insert(r.rd);
                cal = Some(r.rd);
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(c: usize, hw: usize, k: usize, stride: usize, pad: usize, n: usize) -> LayerConfigWord {
        LayerConfigWord {
            c,
            kh: k,
            kw: k,
            stride,
            pad,
            n,
            bits: 8,
            h: hw,
            w: hw,
        }
    }

    #[test]
    fn output_dims() {
        assert_eq!(cfg(1, 32, 5, 1, 0, 6).out_h(), 28);
        assert_eq!(cfg(6, 28, 3, 2, 1, 6).out_h(), 14);
        assert_eq!(cfg(6, 14, 5, 1, 0, 16).out_w(), 10);
        assert_eq!(cfg(16, 10, 3, 2, 1, 16).out_w(), 5);
        assert_eq!(cfg(1, 4, 3, 2, 1, 1).positions(), 4);
        assert!(cfg(1, 4, 3, 3, 0, 1).validate().is_err());
        assert!(cfg(1, 2, 5, 1, 0, 1).validate().is_err());
    }

    #[test]
    fn carry_one_at_tile_boundary() {
        let gen = AddrGen::new(cfg(1, 6, 3, 1, 0, 2), 4, 0).unwrap();
        let mut state = gen.initial_state();
        state.cntr0 = 3;
        let (next, ev) = gen.step(&state).unwrap();
        assert!(ev.contains(&AddrEvent::Carry(1)));
        assert_eq!(next.cntr0, 0);
        assert_eq!(next.rd.tile, 1);
    }

    #[test]
    fn describes_context() {
        let state = CounterState {
            cntr0: 11,
            rd: Counters {
                tile: 2,
                pos: 5,
                chan: 1,
                layer: 0,
            },
            ..CounterState::default()
        };
        assert_eq!(
            state.describe(),
            "fetching the 12th group of data in the 3rd tile, spatial position 5, output channel 1, layer 0"
        );
    }

    #[test]
    fn rejects_inconsistent_state() {
        let gen = AddrGen::new(cfg(1, 6, 3, 1, 0, 2), 4, 0).unwrap();
        let mut state = gen.initial_state();
        state.cntr0 = 4;
        assert!(gen.step(&state).is_err());
        let mut state = gen.initial_state();
        state.rd.chan = 2;
        assert!(gen.step(&state).is_err());
    }

    #[test]
    fn interior_reads_have_no_pads() {
        let gen = AddrGen::new(cfg(2, 8, 3, 1, 0, 1), 4, 0).unwrap();
        let stream = gen.run().unwrap();
        assert_eq!(stream.count(|e| *e == AddrEvent::ReadXPad), 0);
        let len = gen.cfg().input_len();
        assert!(stream
            .records
            .iter()
            .all(|r| !matches!(r.event, AddrEvent::ReadX(a) if a >= len)));
    }

    #[test]
    fn bottom_right_pads() {
        // 28x28 input, one-sided pad to 29x29, 3x3 stride-2: last position
        // reads row/col 28 which is outside the frame.
        let c = cfg(1, 28, 3, 2, 1, 1);
        let gen = AddrGen::new(c, 9, 0).unwrap();
        let last = c.positions() - 1;
        let mut state = gen.initial_state();
        state.rd.pos = last;
        let mut pads = Vec::new();
        for k in 0..9 {
            state.cntr0 = k;
            if gen.read_addresses(&state).x == Some(XRead::PadZero) {
                pads.push(k);
            }
        }
        // Taps (2, *) and (*, 2) of the 3x3 window: 5 of them.
        assert_eq!(pads, vec![2, 5, 6, 7, 8]);
    }

    #[test]
    fn beta_only_on_last_tile() {
        let gen = AddrGen::new(cfg(6, 14, 5, 1, 0, 16), 16, 0).unwrap();
        assert_eq!(gen.tiles(), 10);
        let stream = gen.run().unwrap();
        for r in &stream.records {
            if let AddrEvent::ReadBeta(n) = r.event {
                assert_eq!(r.rd.tile, 9);
                assert_eq!(n, r.rd.chan);
            }
        }
        assert_eq!(
            stream.count(|e| matches!(e, AddrEvent::ReadBeta(_))),
            16 * 100
        );
    }

    #[test]
    fn bias_enable_pattern() {
        let single = AddrGen::new(cfg(1, 4, 2, 1, 0, 1), 4, 0).unwrap();
        assert_eq!(single.tiles(), 1);
        let three = AddrGen::new(cfg(3, 4, 2, 1, 0, 1), 4, 0).unwrap();
        assert_eq!(three.tiles(), 3);
        for (gen, want) in [(single, vec![true; 6]), (three, vec![false, false, true, false, false, true])] {
            let mut state = gen.initial_state();
            let mut seen = Vec::new();
            while seen.len() < want.len() {
                let (next, ev) = gen.step(&state).unwrap();
                if ev.contains(&AddrEvent::Handoff(Stage::Cal)) {
                    seen.push(gen.bias_enable(&next));
                }
                state = next;
            }
            assert_eq!(seen, want);
        }
    }

    #[test]
    fn write_addresses_are_bijective() {
        let c = cfg(6, 28, 3, 2, 1, 6);
        let gen = AddrGen::new(c, 16, 1).unwrap();
        let stream = gen.run().unwrap();
        let writes = stream.write_addresses();
        assert_eq!(writes.first(), Some(&0));
        assert_eq!(writes.last(), Some(&1175));
        let unique: HashSet<usize> = writes.iter().copied().collect();
        assert_eq!(unique.len(), writes.len());
        assert_eq!(writes.len(), c.output_len());
        assert!(writes.iter().all(|&a| a < c.output_len()));
    }

    #[test]
    fn carry_counts_and_causality() {
        let gen = AddrGen::new(cfg(2, 7, 3, 2, 1, 3), 4, 2).unwrap();
        let stream = gen.run().unwrap();
        let want = expected_carries(&gen);
        assert_eq!(stream.carries(1), want.carry1);
        assert_eq!(stream.carries(2), want.carry2);
        assert_eq!(stream.carries(3), want.carry3);
        assert_eq!(stream.carries(4), want.carry4);
        check_handoff_causality(&stream).unwrap();
        assert_eq!(stream.cycles, (want.carry1 as u64 + 1) * 4);
    }

    #[test]
    fn stream_reconstructs_patches() {
        let c = cfg(2, 5, 3, 2, 1, 2);
        let gen = AddrGen::new(c, 4, 0).unwrap();
        let x: Vec<i64> = (0..c.input_len() as i64).map(|v| v + 1).collect();
        let stream = gen.run().unwrap();
        let m0 = stream.materialize_x(&x, 0).unwrap();
        let m1 = stream.materialize_x(&x, 1).unwrap();
        assert_eq!(m0, m1);
        // Direct patch extraction.
        let positions = c.positions();
        for pos in 0..positions {
            let (oh, ow) = (pos / c.out_w(), pos % c.out_w());
            let mut k = 0;
            for ch in 0..c.c {
                for kr in 0..3 {
                    for kc in 0..3 {
                        let (row, col) = (oh * 2 + kr, ow * 2 + kc);
                        let want = if row < 5 && col < 5 { x[ch * 25 + row * 5 + col] } else { 0 };
                        assert_eq!(m0[k * positions + pos], want);
                        k += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let gen = AddrGen::new(cfg(1, 3, 2, 1, 0, 1), 4, 0).unwrap();
        let stream = gen.run().unwrap();
        let csv = stream.to_csv();
        assert!(csv.starts_with(AddrStream::CSV_HEADER));
        assert_eq!(csv.lines().count(), stream.records.len() + 1);
    }
}
