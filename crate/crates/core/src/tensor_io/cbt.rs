//! CBT container: `"CBT1"`, version `u16`, dtype `u8`, rank `u8`, `rank`
//! dimensions as `u32`, then the row-major payload. Everything little-endian.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};
use crate::fxp::FxpFormat;

pub const MAGIC: &[u8; 4] = b"CBT1";
pub const VERSION: u16 = 1;
pub const MAX_RANK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    I8,
    I16,
    I32,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::I8 => 1,
            Dtype::I16 => 2,
            Dtype::I32 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Dtype::I8),
            2 => Some(Dtype::I16),
            3 => Some(Dtype::I32),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::I8 => 1,
            Dtype::I16 => 2,
            Dtype::I32 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::I8 => "i8",
            Dtype::I16 => "i16",
            Dtype::I32 => "i32",
        }
    }

    pub fn min(self) -> i64 {
        -(1i64 << (8 * self.size() - 1))
    }

    pub fn max(self) -> i64 {
        (1i64 << (8 * self.size() - 1)) - 1
    }

    /// Narrowest container holding a `bits`-wide word.
    pub fn for_bits(bits: u32) -> Result<Self> {
        match bits {
            2..=8 => Ok(Dtype::I8),
            9..=16 => Ok(Dtype::I16),
            17..=32 => Ok(Dtype::I32),
            _ => Err(Error::InvalidWidth(bits)),
        }
    }
}

pub fn header_len(rank: usize) -> usize {
    4 + 2 + 1 + 1 + 4 * rank
}

pub fn encode_cbt(tensor: &Tensor, dtype: Dtype) -> Result<Vec<u8>> {
    let dims = tensor.dims();
    if dims.len() > MAX_RANK {
        return Err(Error::Malformed {
            offset: 7,
            reason: format!("rank {} exceeds {MAX_RANK}", dims.len()),
        });
    }
    let header = header_len(dims.len());
    let mut out = Vec::with_capacity(header + tensor.len() * dtype.size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dtype.code());
    out.push(dims.len() as u8);
    for (i, &d) in dims.iter().enumerate() {
        let d = u32::try_from(d).map_err(|_| Error::Malformed {
            offset: 8 + 4 * i,
            reason: format!("dimension {d} does not fit u32"),
        })?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for (i, &v) in tensor.data().iter().enumerate() {
        let offset = header + i * dtype.size();
        if v < dtype.min() || v > dtype.max() {
            return Err(Error::RangeViolation {
                offset,
                dtype: dtype.name(),
                value: v,
            });
        }
        match dtype {
            Dtype::I8 => out.push(v as i8 as u8),
            Dtype::I16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
            Dtype::I32 => out.extend_from_slice(&(v as i32).to_le_bytes()),
        }
    }
    Ok(out)
}

fn take<'a>(bytes: &'a [u8], offset: usize, n: usize, what: &'static str) -> Result<&'a [u8]> {
    bytes
        .get(offset..offset + n)
        .ok_or(Error::Truncated { offset: bytes.len(), what })
}

/// Decodes a container, returning the tensor and its stored dtype.
pub fn decode_cbt(bytes: &[u8]) -> Result<(Tensor, Dtype)> {
    let magic = take(bytes, 0, 4, "magic")?;
    if magic != MAGIC {
        return Err(Error::MagicMismatch { offset: 0 });
    }
    let version = u16::from_le_bytes(take(bytes, 4, 2, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Malformed {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let code = take(bytes, 6, 1, "dtype")?[0];
    let dtype = Dtype::from_code(code).ok_or_else(|| Error::Malformed {
        offset: 6,
        reason: format!("unknown dtype code {code}"),
    })?;
    let rank = take(bytes, 7, 1, "rank")?[0] as usize;
    if rank > MAX_RANK {
        return Err(Error::Malformed {
            offset: 7,
            reason: format!("rank {rank} exceeds {MAX_RANK}"),
        });
    }
    let mut dims = Vec::with_capacity(rank);
    let mut count: usize = 1;
    for i in 0..rank {
        let offset = 8 + 4 * i;
        let d = u32::from_le_bytes(take(bytes, offset, 4, "dims")?.try_into().unwrap()) as usize;
        count = count.checked_mul(d).ok_or_else(|| Error::Malformed {
            offset,
            reason: "element count overflows".into(),
        })?;
        dims.push(d);
    }
    let header = header_len(rank);
    let payload_len = count.checked_mul(dtype.size()).ok_or_else(|| Error::Malformed {
        offset: header,
        reason: "payload size overflows".into(),
    })?;
    let payload = take(bytes, header, payload_len, "payload")?;
    if bytes.len() > header + payload_len {
        return Err(Error::Malformed {
            offset: header + payload_len,
            reason: format!("{} trailing bytes", bytes.len() - header - payload_len),
        });
    }
    let data = match dtype {
        Dtype::I8 => payload.iter().map(|&b| b as i8 as i64).collect(),
        Dtype::I16 => payload
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as i64)
            .collect(),
        Dtype::I32 => payload
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as i64)
            .collect(),
    };
    Ok((Tensor::new(dims, data)?, dtype))
}

/// Decodes and checks every element against a narrower fixed-point format.
pub fn decode_cbt_checked(bytes: &[u8], fmt: FxpFormat) -> Result<Tensor> {
    let (tensor, dtype) = decode_cbt(bytes)?;
    let header = header_len(tensor.dims().len());
    if let Some(i) = tensor.data().iter().position(|&v| !fmt.contains(v)) {
        return Err(Error::RangeViolation {
            offset: header + i * dtype.size(),
            dtype: dtype.name(),
            value: tensor.data()[i],
        });
    }
    Ok(tensor)
}

pub fn read_cbt(path: impl AsRef<Path>) -> Result<Tensor> {
    Ok(decode_cbt(&std::fs::read(path)?)?.0)
}

pub fn write_cbt(tensor: &Tensor, dtype: Dtype, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_cbt(tensor, dtype)?;
    std::fs::write(path, bytes)?;
    Ok(())
}
