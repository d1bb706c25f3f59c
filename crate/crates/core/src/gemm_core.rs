//! GEMM on an array of `L` DA lanes, each an IPC unit of length `K_hw`.
//!
//! Patches longer than `K_hw` are cut into zero-padded tiles. Every tile
//! runs its own shift-accumulate pass seeded with that tile's offset, and
//! the bias is folded only into the last tile's seed. Output channels are
//! dealt to lanes in round-robin blocks of `L`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fxp::{bit_at, FxpFormat};
use crate::im2col_addr::LayerConfigWord;
use crate::lut_arch::{build_lut, AnyLut, LutArch, LutImpl};
use crate::obc_ipc::{merged_offset, sa_accumulate, sa_run, SaTrace, Scheme, MAX_K, NAIVE_MAX_K};
use crate::tensor_io::Tensor;

pub const DEFAULT_K_HW: usize = 16;
pub const DEFAULT_LANES: usize = 10;

/// Named `(K_hw, L)` presets.
pub const PRESETS: [(&str, usize, usize); 3] = [
    ("default", DEFAULT_K_HW, DEFAULT_LANES),
    ("k16l1", 16, 1),
    ("k4l4", 4, 4),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GemmConfig {
    pub k_hw: usize,
    pub lanes: usize,
    pub scheme: Scheme,
    pub lut: LutImpl,
    pub fmt_in: FxpFormat,
    pub fmt_wt: FxpFormat,
    /// Only used for metric reporting.
    pub f_clk: f64,
}

impl GemmConfig {
    pub fn new(
        k_hw: usize,
        lanes: usize,
        scheme: Scheme,
        lut: LutImpl,
        b1: u32,
        b2: u32,
    ) -> Result<Self> {
        let cfg = Self {
            k_hw,
            lanes,
            scheme,
            lut,
            fmt_in: FxpFormat::input(b1)?,
            fmt_wt: FxpFormat::weight(b2)?,
            f_clk: 100e6,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn preset(name: &str, scheme: Scheme, lut: LutImpl, b1: u32, b2: u32) -> Result<Self> {
        let (_, k_hw, lanes) = PRESETS
            .iter()
            .find(|(n, _, _)| *n == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown GEMM preset {name:?}")))?;
        Self::new(*k_hw, *lanes, scheme, lut, b1, b2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes == 0 {
            return Err(Error::InvalidConfig("lane count must be >= 1".into()));
        }
        if self.k_hw == 0 || self.k_hw > MAX_K {
            return Err(Error::TooLong {
                k: self.k_hw,
                limit: MAX_K,
            });
        }
        match self.lut {
            LutImpl::Naive if self.k_hw > NAIVE_MAX_K => Err(Error::TooLong {
                k: self.k_hw,
                limit: NAIVE_MAX_K,
            }),
            LutImpl::Naive => Ok(()),
            LutImpl::Structural(kind) => LutArch::auto(kind, self.k_hw).map(|_| ()),
        }
    }

    pub fn serial_fmt(&self) -> FxpFormat {
        match self.scheme {
            Scheme::A => self.fmt_in,
            Scheme::B => self.fmt_wt,
        }
    }

    pub fn serial_bits(&self) -> u32 {
        self.serial_fmt().bits()
    }

    /// `M * ceil(Np / K_hw) * B_serial * ceil(N / L)`
    pub fn cycles(&self, n: usize, np: usize, m: usize) -> u64 {
        m as u64
            * np.div_ceil(self.k_hw) as u64
            * self.serial_bits() as u64
            * n.div_ceil(self.lanes) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TilePlan {
    pub np: usize,
    pub k_hw: usize,
    pub tiles: usize,
    pub tail_pad: usize,
}

impl TilePlan {
    pub fn new(np: usize, k_hw: usize) -> Self {
        let tiles = np.div_ceil(k_hw);
        Self {
            np,
            k_hw,
            tiles,
            tail_pad: tiles * k_hw - np,
        }
    }

    pub fn padded_len(&self) -> usize {
        self.tiles * self.k_hw
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Copy + Default> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} elements for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }
}

/// Lowers a `C x H x W` tensor to the `Np x (H_out W_out)` patch matrix.
pub fn im2col(x: &Tensor, cfg: &LayerConfigWord) -> Result<Matrix<i64>> {
    cfg.validate()?;
    if x.dims() != [cfg.c, cfg.h, cfg.w] {
        return Err(Error::ShapeMismatch(format!(
            "input {:?} does not match layer input {}x{}x{}",
            x.dims(),
            cfg.c,
            cfg.h,
            cfg.w
        )));
    }
    let (np, m) = (cfg.patch_len(), cfg.positions());
    let (out_w, s) = (cfg.out_w(), cfg.stride);
    let src = x.data();
    let mut data = vec![0i64; np * m];
    for ch in 0..cfg.c {
        for kr in 0..cfg.kh {
            for kc in 0..cfg.kw {
                let k = (ch * cfg.kh + kr) * cfg.kw + kc;
                for pos in 0..m {
                    let (row, col) = ((pos / out_w) * s + kr, (pos % out_w) * s + kc);
                    if row < cfg.h && col < cfg.w {
                        data[k * m + pos] = src[(ch * cfg.h + row) * cfg.w + col];
                    }
                }
            }
        }
    }
    Matrix::new(np, m, data)
}

/// Direct integer GEMM reference: `Theta * Xcols + bias`.
pub fn gemm_direct(theta: &Matrix<i64>, xcols: &Matrix<i64>, bias: &[i64]) -> Result<Matrix<i128>> {
    check_shapes(theta, xcols, bias)?;
    let mut y = Matrix::zeros(theta.rows, xcols.cols);
    for n in 0..theta.rows {
        for m in 0..xcols.cols {
            let mut acc = bias[n] as i128;
            for k in 0..theta.cols {
                acc += theta.get(n, k) as i128 * xcols.get(k, m) as i128;
            }
            y.data[n * xcols.cols + m] = acc;
        }
    }
    Ok(y)
}

fn check_shapes(theta: &Matrix<i64>, xcols: &Matrix<i64>, bias: &[i64]) -> Result<()> {
    if theta.cols != xcols.rows || bias.len() != theta.rows {
        return Err(Error::ShapeMismatch(format!(
            "Theta {}x{}, Xcols {}x{}, bias {}",
            theta.rows,
            theta.cols,
            xcols.rows,
            xcols.cols,
            bias.len()
        )));
    }
    Ok(())
}

fn check_fmt(values: &[i64], fmt: FxpFormat) -> Result<()> {
    values.iter().try_for_each(|&v| fmt.check(v).map(|_| ()))
}

#[derive(Debug, Clone, Serialize)]
pub struct GemmOutput {
    pub y: Matrix<i128>,
    pub plan: TilePlan,
    /// SA cycles summed over every `(block, column, tile)` pass.
    pub cycles: u64,
    /// Per-tile SA traces for output element `(0, 0)`.
    pub sample_traces: Vec<SaTrace>,
}

/// Rows of `src` (`rows x np`) copied into zero-padded rows of `padded` length.
fn pad_rows(src: &[i64], rows: usize, np: usize, padded: usize) -> Vec<i64> {
    let mut out = vec![0i64; rows * padded];
    for r in 0..rows {
        out[r * padded..r * padded + np].copy_from_slice(&src[r * np..(r + 1) * np]);
    }
    out
}

pub fn gemm_obc(
    theta: &Matrix<i64>,
    xcols: &Matrix<i64>,
    bias: &[i64],
    cfg: &GemmConfig,
) -> Result<GemmOutput> {
    cfg.validate()?;
    check_shapes(theta, xcols, bias)?;
    check_fmt(&theta.data, cfg.fmt_wt)?;
    check_fmt(&xcols.data, cfg.fmt_in)?;
    if theta.cols == 0 {
        return Err(Error::ShapeMismatch("empty inner dimension".into()));
    }

    let (n_out, m_out) = (theta.rows, xcols.cols);
    let plan = TilePlan::new(theta.cols, cfg.k_hw);
    let (kh, padded) = (cfg.k_hw, plan.padded_len());
    let w = pad_rows(&theta.data, n_out, plan.np, padded);
    let x = pad_rows(&xcols.transpose().data, m_out, plan.np, padded);
    let tile = |r: usize, t: usize| r * padded + t * kh..r * padded + (t + 1) * kh;

    // One table per coefficient tile: weights under Scheme A, patch columns
    // under Scheme B.
    let (coeff_src, coeff_rows) = match cfg.scheme {
        Scheme::A => (&w, n_out),
        Scheme::B => (&x, m_out),
    };
    let mut luts: Vec<AnyLut> = Vec::with_capacity(coeff_rows * plan.tiles);
    let mut offsets: Vec<i128> = Vec::with_capacity(coeff_rows * plan.tiles);
    for r in 0..coeff_rows {
        for t in 0..plan.tiles {
            let c = &coeff_src[tile(r, t)];
            luts.push(build_lut(cfg.lut, c)?);
            offsets.push(merged_offset(c, 0));
        }
    }

    let bits = cfg.serial_bits();
    let last = plan.tiles - 1;
    let mut y = Matrix::<i128>::zeros(n_out, m_out);
    let mut cycles = 0u64;
    let mut sample_traces = Vec::new();
    for block in 0..n_out.div_ceil(cfg.lanes) {
        let lanes = block * cfg.lanes..((block + 1) * cfg.lanes).min(n_out);
        for m in 0..m_out {
            for t in 0..plan.tiles {
                cycles += bits as u64;
                for n in lanes.clone() {
                    let (lut_idx, serial) = match cfg.scheme {
                        Scheme::A => (n * plan.tiles + t, &x[tile(m, t)]),
                        Scheme::B => (m * plan.tiles + t, &w[tile(n, t)]),
                    };
                    let mut init = offsets[lut_idx];
                    if t == last {
                        init += 2 * bias[n] as i128;
                    }
                    let part = if n == 0 && m == 0 {
                        let (part, trace) = sa_run(&luts[lut_idx], serial, cfg.serial_fmt(), init)?;
                        sample_traces.push(trace);
                        part
                    } else {
                        sa_accumulate(&luts[lut_idx], serial, bits, init)
                    };
                    y.data[n * m_out + m] += part;
                }
            }
        }
    }
    Ok(GemmOutput {
        y,
        plan,
        cycles,
        sample_traces,
    })
}

/// PISO transpose: address `j` packs slice `B-1-j` of every operand
/// (operand 0 in the MSB), so the LSB slice comes out first.
pub fn piso_schedule(operands: &[i64], bits: u32) -> Vec<u32> {
    let b = bits as usize;
    (0..b)
        .rev()
        .map(|r| {
            operands
                .iter()
                .fold(0u32, |addr, &v| (addr << 1) | bit_at(v, r, bits) as u32)
        })
        .collect()
}

/// Inverse of [`piso_schedule`].
pub fn piso_unschedule(addresses: &[u32], k: usize, bits: u32) -> Vec<i64> {
    let b = bits as usize;
    (0..k)
        .map(|i| {
            let raw = addresses.iter().enumerate().fold(0i64, |acc, (j, &a)| {
                acc | ((((a >> (k - 1 - i)) & 1) as i64) << j)
            });
            // Sign-extend from `bits`.
            (raw << (64 - b)) >> (64 - b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lut_arch::LutKind;
    use crate::tensor_io::SplitMix64;
    use proptest::prelude::*;

    fn all_impls() -> Vec<LutImpl> {
        let mut v = vec![LutImpl::Naive];
        v.extend(LutKind::ALL.iter().map(|&k| LutImpl::Structural(k)));
        v
    }

    fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize, fmt: FxpFormat) -> Matrix<i64> {
        let data = (0..rows * cols).map(|_| rng.next_in_fmt(fmt)).collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn degenerate_single_element() {
        let theta = Matrix::new(1, 1, vec![-3]).unwrap();
        let x = Matrix::new(1, 1, vec![7]).unwrap();
        for scheme in [Scheme::A, Scheme::B] {
            let cfg = GemmConfig::new(1, 1, scheme, LutImpl::Naive, 8, 8).unwrap();
            let out = gemm_obc(&theta, &x, &[5], &cfg).unwrap();
            assert_eq!(out.y.data, vec![-16]);
            assert_eq!(out.cycles, 8);
        }
    }

    #[test]
    fn matches_direct_with_padded_tail() {
        let mut rng = SplitMix64::new(2024);
        let fi = FxpFormat::input(8).unwrap();
        let fw = FxpFormat::weight(8).unwrap();
        let theta = random_matrix(&mut rng, 4, 10, fw);
        let x = random_matrix(&mut rng, 10, 9, fi);
        let bias: Vec<i64> = (0..4).map(|_| rng.next_in_range(-300, 300)).collect();
        let want = gemm_direct(&theta, &x, &bias).unwrap();
        assert_eq!(TilePlan::new(10, 4).tail_pad, 2);
        for scheme in [Scheme::A, Scheme::B] {
            for lut in all_impls() {
                for lanes in [1, 3, 4] {
                    let cfg = GemmConfig::new(4, lanes, scheme, lut, 8, 8).unwrap();
                    let out = gemm_obc(&theta, &x, &bias, &cfg).unwrap();
                    assert_eq!(out.y, want, "{scheme} {lut} L={lanes}");
                    assert_eq!(out.cycles, cfg.cycles(4, 10, 9));
                    assert_eq!(out.sample_traces.len(), 3);
                    assert!(out.sample_traces.iter().all(|t| t.cycles == 8));
                }
            }
        }
    }

    #[test]
    fn cycle_formula() {
        let cfg = GemmConfig::new(25, 6, Scheme::A, LutImpl::Naive, 8, 8);
        assert!(cfg.is_err(), "naive table of 2^25 entries is refused");
        let cfg = GemmConfig {
            k_hw: 25,
            lanes: 6,
            scheme: Scheme::A,
            lut: LutImpl::Structural(LutKind::Parallel),
            fmt_in: FxpFormat::input(8).unwrap(),
            fmt_wt: FxpFormat::weight(8).unwrap(),
            f_clk: 100e6,
        };
        assert_eq!(cfg.cycles(6, 25, 784), 6272);
    }

    #[test]
    fn scheme_b_halves_cycles_for_16_8() {
        let a = GemmConfig::new(16, 10, Scheme::A, LutImpl::Naive, 16, 8).unwrap();
        let b = GemmConfig::new(16, 10, Scheme::B, LutImpl::Naive, 16, 8).unwrap();
        assert_eq!(a.cycles(16, 150, 100), 2 * b.cycles(16, 150, 100));
    }

    #[test]
    fn rejects_bad_operands() {
        let theta = Matrix::new(1, 2, vec![1, 200]).unwrap();
        let x = Matrix::new(2, 1, vec![1, 1]).unwrap();
        let cfg = GemmConfig::new(2, 1, Scheme::A, LutImpl::Naive, 8, 8).unwrap();
        assert!(matches!(gemm_obc(&theta, &x, &[0], &cfg), Err(Error::OutOfRange { .. })));
        let x = Matrix::new(3, 1, vec![1, 1, 1]).unwrap();
        assert!(matches!(gemm_obc(&theta, &x, &[0], &cfg), Err(Error::ShapeMismatch(_))));
        assert!(GemmConfig::new(6, 1, Scheme::A, LutImpl::Structural(LutKind::Split), 8, 8).is_ok());
        assert!(GemmConfig::new(5, 1, Scheme::A, LutImpl::Structural(LutKind::Split), 8, 8).is_err());
        assert!(GemmConfig::new(4, 0, Scheme::A, LutImpl::Naive, 8, 8).is_err());
    }

    #[test]
    fn im2col_examples() {
        let x = Tensor::new(vec![1, 3, 3], (0..9).collect()).unwrap();
        let cfg = LayerConfigWord {
            c: 1,
            kh: 2,
            kw: 2,
            stride: 1,
            pad: 0,
            n: 1,
            bits: 8,
            h: 3,
            w: 3,
        };
        let m = im2col(&x, &cfg).unwrap();
        assert_eq!((m.rows, m.cols), (4, 4));
        assert_eq!((0..4).map(|k| m.get(k, 0)).collect::<Vec<_>>(), vec![0, 1, 3, 4]);

        let x = Tensor::new(vec![1, 4, 4], (1..=16).collect()).unwrap();
        let cfg = LayerConfigWord {
            kh: 3,
            kw: 3,
            stride: 2,
            pad: 1,
            h: 4,
            w: 4,
            ..cfg
        };
        let m = im2col(&x, &cfg).unwrap();
        assert_eq!((m.rows, m.cols), (9, 4));
        // Bottom-right window hangs over the padded row and column.
        let last: Vec<i64> = (0..9).map(|k| m.get(k, 3)).collect();
        assert_eq!(last, vec![11, 12, 0, 15, 16, 0, 0, 0, 0]);

        let x = Tensor::new(vec![3, 2, 2], (0..12).collect()).unwrap();
        let cfg = LayerConfigWord {
            c: 3,
            kh: 1,
            kw: 1,
            stride: 1,
            pad: 0,
            h: 2,
            w: 2,
            ..cfg
        };
        let m = im2col(&x, &cfg).unwrap();
        assert_eq!(m.data, x.data());
        let bad = Tensor::new(vec![2, 2, 2], vec![0; 8]).unwrap();
        assert!(im2col(&bad, &cfg).is_err());
    }

    #[test]
    fn piso_examples() {
        assert_eq!(piso_schedule(&[0, 0, 0], 4), vec![0; 4]);
        assert_eq!(piso_schedule(&[1, -2], 2), vec![0b10, 0b01]);
    }

    proptest! {
        #[test]
        fn piso_round_trip(seed in any::<u64>(), k in 1usize..=16, bits in 2u32..=16) {
            let mut rng = SplitMix64::new(seed);
            let f = FxpFormat::input(bits).unwrap();
            let ops: Vec<i64> = (0..k).map(|_| rng.next_in_fmt(f)).collect();
            let addrs = piso_schedule(&ops, bits);
            prop_assert_eq!(addrs.len(), bits as usize);
            prop_assert_eq!(piso_unschedule(&addrs, k, bits), ops);
        }

        #[test]
        fn gemm_exact_random(
            seed in any::<u64>(),
            n in 1usize..6,
            np in 1usize..20,
            m in 1usize..5,
            k_hw in prop::sample::select(vec![2usize, 4, 6, 8]),
            lanes in 1usize..4,
            scheme_b in any::<bool>(),
            kind in 0usize..4,
        ) {
            let mut rng = SplitMix64::new(seed);
            let fi = FxpFormat::input(8).unwrap();
            let fw = FxpFormat::weight(6).unwrap();
            let theta = random_matrix(&mut rng, n, np, fw);
            let x = random_matrix(&mut rng, np, m, fi);
            let bias: Vec<i64> = (0..n).map(|_| rng.next_in_range(-1000, 1000)).collect();
            let scheme = if scheme_b { Scheme::B } else { Scheme::A };
            let cfg = GemmConfig::new(k_hw, lanes, scheme, LutImpl::Structural(LutKind::ALL[kind]), 8, 6).unwrap();
            let out = gemm_obc(&theta, &x, &bias, &cfg).unwrap();
            prop_assert_eq!(out.y, gemm_direct(&theta, &x, &bias).unwrap());
            prop_assert_eq!(out.cycles, cfg.cycles(n, np, m));
        }
    }
}
