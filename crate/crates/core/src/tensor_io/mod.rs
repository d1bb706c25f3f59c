//! Tensors, the CBT container, weight bundles and seeded fixtures.

mod bundle;
mod cbt;
mod rng;

pub use bundle::{
    gen_input, gen_weights, load_bundle, parse_manifest, save_bundle, default_shift, LayerParams,
    Manifest, ManifestLayer, WeightBundle, MANIFEST_FORMAT, MANIFEST_VERSION,
};
pub use cbt::{
    decode_cbt, decode_cbt_checked, encode_cbt, header_len, read_cbt, write_cbt, Dtype, MAGIC,
    MAX_RANK, VERSION,
};
pub use rng::SplitMix64;

use serde::Serialize;

use crate::error::{Error, Result};

/// Row-major integer tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<i64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<i64>) -> Result<Self> {
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::ShapeMismatch(format!("{dims:?} overflows")))?;
        if count != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} elements for dims {dims:?}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            data: vec![0; n],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_data(self) -> Vec<i64> {
        self.data
    }
}
