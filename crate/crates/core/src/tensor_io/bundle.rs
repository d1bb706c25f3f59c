//! Weight bundles on disk: a JSON manifest next to one CBT file per weight
//! tensor and per bias vector.
//!
//! ```json
//! {
//!   "format": "comet-model", "version": 1, "name": "lenet5m",
//!   "b1": 8, "b2": 8, "input": [1, 32, 32],
//!   "layers": [
//!     {"name": "conv1", "kind": "conv", "in": [1, 32, 32], "out": [6, 28, 28],
//!      "kernel": [5, 5], "stride": 1, "pad": 0, "act": "relu", "shift": 8,
//!      "weight": "conv1.weight.cbt", "bias": "conv1.bias.cbt"},
//!     {"name": "gap", "kind": "gap", "in": [16, 5, 5], "out": [16], "act": "none"},
//!     ...
//!   ]
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cbt::{decode_cbt_checked, encode_cbt, Dtype};
use super::{SplitMix64, Tensor};
use crate::cnn_model::{Activation, Layer, LayerOp, ModelSpec};
use crate::error::{Error, Result};
use crate::fxp::FxpFormat;
use crate::im2col_addr::LayerConfigWord;

pub const MANIFEST_FORMAT: &str = "comet-model";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerParams {
    /// `N x C x Kk x Lk` for conv layers, `N x C` for FC layers.
    pub weight: Tensor,
    pub bias: Vec<i64>,
    /// Rounding right shift applied after accumulation.
    pub shift: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightBundle {
    pub b2: u32,
    /// Indexed like the model's layers; `None` for layers without weights.
    pub layers: Vec<Option<LayerParams>>,
}

impl WeightBundle {
    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        if self.b2 != model.b2 {
            return Err(Error::ShapeMismatch(format!(
                "bundle holds B2={} weights, model expects B2={}",
                self.b2, model.b2
            )));
        }
        if self.layers.len() != model.layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "bundle has {} layers, model has {}",
                self.layers.len(),
                model.layers.len()
            )));
        }
        let fmt = model.fmt_wt();
        for (layer, params) in model.layers.iter().zip(&self.layers) {
            match (layer.weight_dims(), params) {
                (None, None) => {}
                (Some(dims), Some(p)) => {
                    let n = dims[0];
                    if p.weight.dims() != dims.as_slice() || p.bias.len() != n {
                        return Err(Error::ShapeMismatch(format!(
                            "layer {}: weight {:?} bias {}, expected {dims:?} and {n}",
                            layer.name,
                            p.weight.dims(),
                            p.bias.len()
                        )));
                    }
                    for &v in p.weight.data().iter().chain(&p.bias) {
                        fmt.check(v)?;
                    }
                    if p.shift > 96 {
                        return Err(Error::InvalidConfig(format!(
                            "layer {}: shift {} is out of range",
                            layer.name, p.shift
                        )));
                    }
                }
                _ => {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {}: parameters present where none are expected or missing",
                        layer.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Canonical byte image: per weighted layer, its index (`u32`), the
    /// weight and bias CBT images, then the shift (`u32`).
    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        let dtype = Dtype::for_bits(self.b2)?;
        let mut out = Vec::new();
        for (i, p) in self.layers.iter().enumerate() {
            let Some(p) = p else { continue };
            out.extend_from_slice(&(i as u32).to_le_bytes());
            out.extend(encode_cbt(&p.weight, dtype)?);
            out.extend(encode_cbt(&Tensor::new(vec![p.bias.len()], p.bias.clone())?, dtype)?);
            out.extend_from_slice(&p.shift.to_le_bytes());
        }
        Ok(out)
    }

    /// SHA-256 of [`Self::canonical_bytes`], lowercase hex.
    pub fn digest_hex(&self) -> Result<String> {
        let digest = Sha256::digest(self.canonical_bytes()?);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

fn ceil_log2(n: usize) -> u32 {
    usize::BITS - n.saturating_sub(1).leading_zeros()
}

/// Fixture shift `(B2 - 3) + ceil(ceil(log2 Np) / 2)`: with uniform random
/// weights it keeps post-ReLU activations at roughly the input's scale, so
/// the logits of a seeded network are neither all zero nor saturated.
pub fn default_shift(b2: u32, np: usize) -> u32 {
    (b2 + ceil_log2(np).div_ceil(2)).saturating_sub(3)
}

/// Uniform weights and biases over the `B2` range, layer by layer, weights
/// before biases, from a single SplitMix64 stream.
pub fn gen_weights(seed: u64, model: &ModelSpec, b2: u32) -> WeightBundle {
    let fmt = FxpFormat::weight(b2).expect("B2 within 2..=32");
    let mut rng = SplitMix64::new(seed);
    let layers = model
        .layers
        .iter()
        .map(|layer| {
            let dims = layer.weight_dims()?;
            let (n, np, _) = layer.gemm_shape()?;
            let weight: Vec<i64> = (0..n * np).map(|_| rng.next_in_fmt(fmt)).collect();
            let bias = (0..n).map(|_| rng.next_in_fmt(fmt)).collect();
            Some(LayerParams {
                weight: Tensor::new(dims, weight).expect("dims match"),
                bias,
                shift: default_shift(b2, np),
            })
        })
        .collect();
    WeightBundle { b2, layers }
}

/// Uniform input image over the full `B1` range.
pub fn gen_input(seed: u64, model: &ModelSpec) -> Tensor {
    let fmt = model.fmt_in();
    let mut rng = SplitMix64::new(seed);
    let n = model.input.iter().product();
    Tensor::new(model.input.clone(), (0..n).map(|_| rng.next_in_fmt(fmt)).collect())
        .expect("dims match")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLayer {
    pub name: String,
    pub kind: String,
    #[serde(rename = "in")]
    pub in_dims: Vec<usize>,
    pub out: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pad: Option<usize>,
    pub act: Activation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub b1: u32,
    pub b2: u32,
    pub input: Vec<usize>,
    pub layers: Vec<ManifestLayer>,
}

fn merr(msg: impl Into<String>) -> Error {
    Error::Manifest(msg.into())
}

fn dims_n<const N: usize>(layer: &ManifestLayer, dims: &[usize], what: &str) -> Result<[usize; N]> {
    dims.try_into()
        .map_err(|_| merr(format!("layer {}: {what} must have {N} dimensions", layer.name)))
}

impl ManifestLayer {
    fn to_layer(&self, b1: u32) -> Result<Layer> {
        let op = match self.kind.as_str() {
            "conv" => {
                let [c, h, w] = dims_n(self, &self.in_dims, "in")?;
                let [n, _, _] = dims_n(self, &self.out, "out")?;
                let [kh, kw] = self
                    .kernel
                    .ok_or_else(|| merr(format!("layer {}: conv needs a kernel", self.name)))?;
                LayerOp::Conv(LayerConfigWord {
                    c,
                    kh,
                    kw,
                    stride: self.stride.unwrap_or(1),
                    pad: self.pad.unwrap_or(0),
                    n,
                    bits: b1,
                    h,
                    w,
                })
            }
            "fc" => {
                let [c] = dims_n(self, &self.in_dims, "in")?;
                let [n] = dims_n(self, &self.out, "out")?;
                if self.kernel.is_some() || self.stride.is_some() || self.pad.is_some() {
                    return Err(merr(format!("layer {}: fc takes no kernel/stride/pad", self.name)));
                }
                LayerOp::Fc(LayerConfigWord {
                    c,
                    kh: 1,
                    kw: 1,
                    stride: 1,
                    pad: 0,
                    n,
                    bits: b1,
                    h: 1,
                    w: 1,
                })
            }
            "gap" => {
                let [c, h, w] = dims_n(self, &self.in_dims, "in")?;
                LayerOp::Gap { c, h, w }
            }
            other => return Err(merr(format!("layer {}: unknown kind {other:?}", self.name))),
        };
        let layer = Layer {
            name: self.name.clone(),
            op,
            act: self.act,
        };
        if let Some(cfg) = layer.gemm_cfg() {
            cfg.validate()?;
        }
        if layer.out_dims() != self.out {
            return Err(merr(format!(
                "layer {}: declared output {:?}, computed {:?}",
                self.name,
                self.out,
                layer.out_dims()
            )));
        }
        Ok(layer)
    }
}

impl Manifest {
    pub fn to_model(&self) -> Result<ModelSpec> {
        if self.format != MANIFEST_FORMAT || self.version != MANIFEST_VERSION {
            return Err(merr(format!(
                "unsupported format {:?} version {}",
                self.format, self.version
            )));
        }
        FxpFormat::input(self.b1)?;
        let layers = self
            .layers
            .iter()
            .map(|l| l.to_layer(self.b1))
            .collect::<Result<Vec<_>>>()?;
        let model = ModelSpec {
            name: self.name.clone(),
            b1: self.b1,
            b2: self.b2,
            input: self.input.clone(),
            layers,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_model(model: &ModelSpec, bundle: &WeightBundle) -> Result<Self> {
        bundle.validate(model)?;
        let layers = model
            .layers
            .iter()
            .zip(&bundle.layers)
            .map(|(layer, params)| {
                let (kernel, stride, pad) = match layer.op {
                    LayerOp::Conv(c) => (Some([c.kh, c.kw]), Some(c.stride), Some(c.pad)),
                    _ => (None, None, None),
                };
                ManifestLayer {
                    name: layer.name.clone(),
                    kind: layer.kind_name().into(),
                    in_dims: layer.in_dims(),
                    out: layer.out_dims(),
                    kernel,
                    stride,
                    pad,
                    act: layer.act,
                    shift: params.as_ref().map(|p| p.shift),
                    weight: params.as_ref().map(|_| format!("{}.weight.cbt", layer.name)),
                    bias: params.as_ref().map(|_| format!("{}.bias.cbt", layer.name)),
                }
            })
            .collect();
        Ok(Self {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            name: model.name.clone(),
            b1: model.b1,
            b2: model.b2,
            input: model.input.clone(),
            layers,
        })
    }
}

/// Parses and structurally validates a manifest.
pub fn parse_manifest(text: &str) -> Result<(Manifest, ModelSpec)> {
    let manifest: Manifest = serde_json::from_str(text)?;
    let model = manifest.to_model()?;
    for (layer, ml) in model.layers.iter().zip(&manifest.layers) {
        let files = [&ml.weight, &ml.bias, &ml.shift.map(|s| s.to_string())];
        let present = files.iter().filter(|f| f.is_some()).count();
        let wants = layer.gemm_cfg().is_some();
        if (wants && present != 3) || (!wants && present != 0) {
            return Err(merr(format!(
                "layer {}: weight, bias and shift must all be given for conv/fc layers and omitted otherwise",
                layer.name
            )));
        }
        for name in [&ml.weight, &ml.bias].into_iter().flatten() {
            check_file_name(name)?;
        }
    }
    Ok((manifest, model))
}

fn check_file_name(name: &str) -> Result<()> {
    let plain = Path::new(name)
        .file_name()
        .map(|f| f == name)
        .unwrap_or(false);
    if !plain || name.contains(['/', '\\']) {
        return Err(merr(format!("{name:?} must be a plain file name")));
    }
    Ok(())
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Writes `manifest.json` and the CBT files into `dir`.
pub fn save_bundle(dir: &Path, model: &ModelSpec, bundle: &WeightBundle) -> Result<PathBuf> {
    let manifest = Manifest::from_model(model, bundle)?;
    let dtype = Dtype::for_bits(bundle.b2)?;
    std::fs::create_dir_all(dir)?;
    for (ml, params) in manifest.layers.iter().zip(&bundle.layers) {
        if let (Some(p), Some(w), Some(b)) = (params, &ml.weight, &ml.bias) {
            std::fs::write(dir.join(w), encode_cbt(&p.weight, dtype)?)?;
            let bias = Tensor::new(vec![p.bias.len()], p.bias.clone())?;
            std::fs::write(dir.join(b), encode_cbt(&bias, dtype)?)?;
        }
    }
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

/// Loads a bundle from a manifest file or a directory holding one.
pub fn load_bundle(path: &Path) -> Result<(ModelSpec, WeightBundle)> {
    let path = manifest_path(path);
    let (manifest, model) = parse_manifest(&std::fs::read_to_string(&path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let fmt = model.fmt_wt();
    let mut layers = Vec::with_capacity(model.layers.len());
    for ml in &manifest.layers {
        let params = match (&ml.weight, &ml.bias, ml.shift) {
            (Some(w), Some(b), Some(shift)) => {
                let weight = decode_cbt_checked(&std::fs::read(base.join(w))?, fmt)?;
                let bias = decode_cbt_checked(&std::fs::read(base.join(b))?, fmt)?;
                if bias.dims().len() != 1 {
                    return Err(merr(format!("{b}: bias must be rank 1")));
                }
                Some(LayerParams {
                    weight,
                    bias: bias.into_data(),
                    shift,
                })
            }
            _ => None,
        };
        layers.push(params);
    }
    let bundle = WeightBundle {
        b2: model.b2,
        layers,
    };
    bundle.validate(&model)?;
    Ok((model, bundle))
}
