//! The modified LeNet-5 as a fixed-point pipeline.
//!
//! Every conv and FC layer is a GEMM; FC layers are 1x1 convolutions over a
//! 1x1 frame. After exact accumulation each layer applies ReLU, a rounding
//! right shift (half away from zero) and saturation back to `B1` bits. The
//! last layer keeps its logits unsaturated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fxp::{quantize_saturate, FxpFormat};
use crate::gemm_core::{gemm_direct, gemm_obc, im2col, GemmConfig, Matrix, TilePlan};
use crate::im2col_addr::LayerConfigWord;
use crate::obc_ipc::SaTrace;
use crate::tensor_io::{LayerParams, Tensor, WeightBundle};

pub const LENET5M: &str = "lenet5m";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
    /// Unsaturated logits followed by arg-max classification.
    Argmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LayerOp {
    Conv(LayerConfigWord),
    Gap { c: usize, h: usize, w: usize },
    Fc(LayerConfigWord),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Layer {
    pub name: String,
    pub op: LayerOp,
    pub act: Activation,
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self.op {
            LayerOp::Conv(_) => "conv",
            LayerOp::Gap { .. } => "gap",
            LayerOp::Fc(_) => "fc",
        }
    }

    pub fn gemm_cfg(&self) -> Option<&LayerConfigWord> {
        match &self.op {
            LayerOp::Conv(cfg) | LayerOp::Fc(cfg) => Some(cfg),
            LayerOp::Gap { .. } => None,
        }
    }

    pub fn in_dims(&self) -> Vec<usize> {
        match self.op {
            LayerOp::Conv(cfg) => vec![cfg.c, cfg.h, cfg.w],
            LayerOp::Gap { c, h, w } => vec![c, h, w],
            LayerOp::Fc(cfg) => vec![cfg.c],
        }
    }

    pub fn out_dims(&self) -> Vec<usize> {
        match self.op {
            LayerOp::Conv(cfg) => vec![cfg.n, cfg.out_h(), cfg.out_w()],
            LayerOp::Gap { c, .. } => vec![c],
            LayerOp::Fc(cfg) => vec![cfg.n],
        }
    }

    pub fn weight_dims(&self) -> Option<Vec<usize>> {
        match self.op {
            LayerOp::Conv(cfg) => Some(vec![cfg.n, cfg.c, cfg.kh, cfg.kw]),
            LayerOp::Fc(cfg) => Some(vec![cfg.n, cfg.c]),
            LayerOp::Gap { .. } => None,
        }
    }

    /// `(N, Np, M)` of the lowered GEMM.
    pub fn gemm_shape(&self) -> Option<(usize, usize, usize)> {
        self.gemm_cfg()
            .map(|c| (c.n, c.patch_len(), c.positions()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelSpec {
    pub name: String,
    pub b1: u32,
    pub b2: u32,
    pub input: Vec<usize>,
    pub layers: Vec<Layer>,
}

impl ModelSpec {
    pub fn fmt_in(&self) -> FxpFormat {
        FxpFormat::input(self.b1).expect("validated width")
    }

    pub fn fmt_wt(&self) -> FxpFormat {
        FxpFormat::weight(self.b2).expect("validated width")
    }

    pub fn validate(&self) -> Result<()> {
        FxpFormat::input(self.b1)?;
        FxpFormat::weight(self.b2)?;
        if self.layers.is_empty() {
            return Err(Error::InvalidConfig("model has no layers".into()));
        }
        let mut dims = self.input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some(cfg) = layer.gemm_cfg() {
                cfg.validate()?;
            }
            if let LayerOp::Fc(cfg) = layer.op {
                if (cfg.h, cfg.w, cfg.kh, cfg.kw, cfg.stride, cfg.pad) != (1, 1, 1, 1, 1, 0) {
                    return Err(Error::InvalidConfig(format!(
                        "layer {}: FC must be a 1x1 GEMM",
                        layer.name
                    )));
                }
            }
            let want = layer.in_dims();
            if want.iter().product::<usize>() != dims.iter().product::<usize>()
                || (want.len() == dims.len() && want != dims)
            {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i} ({}) expects {want:?}, previous layer produces {dims:?}",
                    layer.name
                )));
            }
            let last = i + 1 == self.layers.len();
            if (layer.act == Activation::Argmax) != last {
                return Err(Error::InvalidConfig(
                    "arg-max belongs on the last layer only".into(),
                ));
            }
            dims = layer.out_dims();
        }
        Ok(())
    }

    pub fn output_dims(&self) -> Vec<usize> {
        self.layers.last().map(Layer::out_dims).unwrap_or_default()
    }
}

fn conv(name: &str, c: usize, hw: usize, k: usize, stride: usize, pad: usize, n: usize, b1: u32) -> Layer {
    Layer {
        name: name.into(),
        op: LayerOp::Conv(LayerConfigWord {
            c,
            kh: k,
            kw: k,
            stride,
            pad,
            n,
            bits: b1,
            h: hw,
            w: hw,
        }),
        act: Activation::Relu,
    }
}

fn fc(name: &str, inputs: usize, outputs: usize, b1: u32, act: Activation) -> Layer {
    Layer {
        name: name.into(),
        op: LayerOp::Fc(LayerConfigWord {
            c: inputs,
            kh: 1,
            kw: 1,
            stride: 1,
            pad: 0,
            n: outputs,
            bits: b1,
            h: 1,
            w: 1,
        }),
        act,
    }
}

pub fn build_modified_lenet5(b1: u32, b2: u32) -> Result<ModelSpec> {
    let model = ModelSpec {
        name: LENET5M.into(),
        b1,
        b2,
        input: vec![1, 32, 32],
        layers: vec![
            conv("conv1", 1, 32, 5, 1, 0, 6, b1),
            conv("conv2", 6, 28, 3, 2, 1, 6, b1),
            conv("conv3", 6, 14, 5, 1, 0, 16, b1),
            conv("conv4", 16, 10, 3, 2, 1, 16, b1),
            Layer {
                name: "gap".into(),
                op: LayerOp::Gap { c: 16, h: 5, w: 5 },
                act: Activation::None,
            },
            fc("fc1", 16, 32, b1, Activation::Relu),
            fc("fc2", 32, 10, b1, Activation::Argmax),
        ],
    };
    model.validate()?;
    Ok(model)
}

/// `acc / 2^shift`, rounded half away from zero.
pub fn requantize(acc: i128, shift: u32) -> i128 {
    if shift == 0 {
        return acc;
    }
    let half = 1i128 << (shift - 1);
    if acc >= 0 {
        (acc + half) >> shift
    } else {
        -((-acc + half) >> shift)
    }
}

/// Integer mean rounded half away from zero.
pub fn gap_mean(values: &[i64]) -> i64 {
    let n = values.len() as i128;
    let sum: i128 = values.iter().map(|&v| v as i128).sum();
    let q = (2 * sum.abs() + n) / (2 * n);
    (if sum < 0 { -q } else { q }) as i64
}

/// Index of the largest logit; the lowest index wins ties.
pub fn argmax(logits: &[i64]) -> usize {
    logits
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > logits[best] { i } else { best })
}

/// Direct nested-loop convolution with one-sided zero padding, returning
/// the pre-shift accumulators in `n, h_out, w_out` order.
pub fn conv_accumulate_direct(
    x: &Tensor,
    weight: &Tensor,
    bias: &[i64],
    cfg: &LayerConfigWord,
) -> Result<Vec<i128>> {
    cfg.validate()?;
    if x.len() != cfg.input_len()
        || weight.len() != cfg.n * cfg.patch_len()
        || bias.len() != cfg.n
    {
        return Err(Error::ShapeMismatch(format!(
            "direct conv: x {:?}, weight {:?}, bias {} against {cfg:?}",
            x.dims(),
            weight.dims(),
            bias.len()
        )));
    }
    let (xs, ws) = (x.data(), weight.data());
    let mut out = Vec::with_capacity(cfg.output_len());
    for n in 0..cfg.n {
        for oh in 0..cfg.out_h() {
            for ow in 0..cfg.out_w() {
                let mut acc = bias[n] as i128;
                for c in 0..cfg.c {
                    for i in 0..cfg.kh {
                        for j in 0..cfg.kw {
                            let (row, col) = (oh * cfg.stride + i, ow * cfg.stride + j);
                            if row >= cfg.h || col >= cfg.w {
                                continue;
                            }
                            let xv = xs[(c * cfg.h + row) * cfg.w + col];
                            let wv = ws[((n * cfg.c + c) * cfg.kh + i) * cfg.kw + j];
                            acc += xv as i128 * wv as i128;
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    Ok(out)
}

/// How conv/FC accumulators are produced.
#[derive(Debug, Clone, Copy)]
pub enum Backend<'a> {
    Obc(&'a GemmConfig),
    DirectGemm,
    NestedLoop,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerTrace {
    pub name: String,
    pub kind: &'static str,
    pub out_dims: Vec<usize>,
    pub tiles: Option<TilePlan>,
    pub cycles: u64,
    pub zero_activations: usize,
    /// Per-tile SA traces of output element `(0, 0)`.
    pub sa_traces: Vec<SaTrace>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InferOutput {
    pub logits: Vec<i64>,
    pub class: usize,
    pub layers: Vec<LayerTrace>,
    pub total_cycles: u64,
}

fn params<'b>(weights: &'b WeightBundle, idx: usize, layer: &Layer) -> Result<&'b LayerParams> {
    weights
        .layers
        .get(idx)
        .and_then(Option::as_ref)
        .ok_or_else(|| Error::ShapeMismatch(format!("no parameters for layer {}", layer.name)))
}

pub fn run(
    model: &ModelSpec,
    weights: &WeightBundle,
    input: &Tensor,
    backend: Backend<'_>,
) -> Result<InferOutput> {
    model.validate()?;
    weights.validate(model)?;
    if input.dims() != model.input.as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "input {:?}, model expects {:?}",
            input.dims(),
            model.input
        )));
    }
    let fmt_in = model.fmt_in();
    input.data().iter().try_for_each(|&v| fmt_in.check(v).map(|_| ()))?;
    if let Backend::Obc(cfg) = backend {
        if cfg.fmt_in != fmt_in || cfg.fmt_wt != model.fmt_wt() {
            return Err(Error::InvalidConfig(format!(
                "GEMM formats B1={} B2={} differ from the model's B1={} B2={}",
                cfg.fmt_in.bits(),
                cfg.fmt_wt.bits(),
                model.b1,
                model.b2
            )));
        }
    }

    let mut act = input.clone();
    let mut traces = Vec::with_capacity(model.layers.len());
    for (idx, layer) in model.layers.iter().enumerate() {
        let out_dims = layer.out_dims();
        let mut trace = LayerTrace {
            name: layer.name.clone(),
            kind: layer.kind_name(),
            out_dims: out_dims.clone(),
            tiles: None,
            cycles: 0,
            zero_activations: 0,
            sa_traces: Vec::new(),
        };
        let values: Vec<i64> = match layer.op {
            LayerOp::Gap { c, h, w } => act
                .data()
                .chunks_exact(h * w)
                .take(c)
                .map(gap_mean)
                .collect(),
            LayerOp::Conv(cfg) | LayerOp::Fc(cfg) => {
                let p = params(weights, idx, layer)?;
                let x = Tensor::new(vec![cfg.c, cfg.h, cfg.w], act.data().to_vec())?;
                let acc: Vec<i128> = match backend {
                    Backend::NestedLoop => conv_accumulate_direct(&x, &p.weight, &p.bias, &cfg)?,
                    Backend::DirectGemm => {
                        let theta = Matrix::new(cfg.n, cfg.patch_len(), p.weight.data().to_vec())?;
                        gemm_direct(&theta, &im2col(&x, &cfg)?, &p.bias)?.data
                    }
                    Backend::Obc(gcfg) => {
                        let theta = Matrix::new(cfg.n, cfg.patch_len(), p.weight.data().to_vec())?;
                        let mut out = gemm_obc(&theta, &im2col(&x, &cfg)?, &p.bias, gcfg)?;
                        trace.tiles = Some(out.plan);
                        trace.cycles = out.cycles;
                        trace.sa_traces = std::mem::take(&mut out.sample_traces);
                        out.y.data
                    }
                };
                acc.into_iter()
                    .map(|a| {
                        let mut v = requantize(a, p.shift);
                        if layer.act == Activation::Relu {
                            v = v.max(0);
                        }
                        if layer.act == Activation::Argmax {
                            i64::try_from(v).map_err(|_| {
                                Error::Overflow(format!("logit {v} does not fit 64 bits"))
                            })
                        } else {
                            Ok(quantize_saturate(v, fmt_in))
                        }
                    })
                    .collect::<Result<_>>()?
            }
        };
        trace.zero_activations = values.iter().filter(|&&v| v == 0).count();
        act = Tensor::new(out_dims, values)?;
        traces.push(trace);
    }

    let logits = act.data().to_vec();
    Ok(InferOutput {
        class: argmax(&logits),
        total_cycles: traces.iter().map(|t| t.cycles).sum(),
        logits,
        layers: traces,
    })
}

/// DA inference: every conv/FC layer through `im2col` and `gemm_obc`.
pub fn infer(
    model: &ModelSpec,
    weights: &WeightBundle,
    input: &Tensor,
    cfg: &GemmConfig,
) -> Result<InferOutput> {
    run(model, weights, input, Backend::Obc(cfg))
}

/// Reference inference with direct nested-loop convolutions.
pub fn infer_oracle(model: &ModelSpec, weights: &WeightBundle, input: &Tensor) -> Result<Vec<i64>> {
    Ok(run(model, weights, input, Backend::NestedLoop)?.logits)
}

/// Second reference: `im2col` followed by a direct matrix product.
pub fn infer_direct_gemm(model: &ModelSpec, weights: &WeightBundle, input: &Tensor) -> Result<Vec<i64>> {
    Ok(run(model, weights, input, Backend::DirectGemm)?.logits)
}

/// Closed-form SA cycles summed over the GEMM layers.
pub fn model_cycles(model: &ModelSpec, cfg: &GemmConfig) -> u64 {
    model
        .layers
        .iter()
        .filter_map(Layer::gemm_shape)
        .map(|(n, np, m)| cfg.cycles(n, np, m))
        .sum()
}
