//! Fixed-point words, two's-complement bit slicing and offset-binary digits.
//!
//! Values are carried as plain integers. A `B`-bit word `v` is sliced MSB
//! first, so slice `r = 0` is the sign bit with weight `-2^(B-1)` and slice
//! `r` (for `r >= 1`) has weight `2^(B-1-r)`.
//!
//! Offset-binary coding maps every bit `b` to a digit `2b - 1` in `{-1, +1}`.
//! Folding the sign weight into the digit gives the identity
//!
//! ```text
//! 2v = sum_r delta_r * 2^(B-1-r) - 1
//! ```
//!
//! which the DA datapaths rely on. All quantities built from it are kept in
//! this "doubled" integer domain so the global factor one half becomes one
//! exact arithmetic shift at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 32;

/// Which operand family a format describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    /// Feature-map activations, `B1` bits.
    Input,
    /// Filter coefficients, `B2` bits.
    Weight,
}

/// A signed two's-complement word of `bits` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FxpFormat {
    bits: u32,
    role: Role,
}

impl FxpFormat {
    pub fn new(bits: u32, role: Role) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(Error::InvalidWidth(bits));
        }
        Ok(Self { bits, role })
    }

    pub fn input(bits: u32) -> Result<Self> {
        Self::new(bits, Role::Input)
    }

    pub fn weight(bits: u32) -> Result<Self> {
        Self::new(bits, Role::Weight)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn min(&self) -> i64 {
        -(1i64 << (self.bits - 1))
    }

    pub fn max(&self) -> i64 {
        (1i64 << (self.bits - 1)) - 1
    }

    pub fn contains(&self, value: i64) -> bool {
        (self.min()..=self.max()).contains(&value)
    }

    pub fn check(&self, value: i64) -> Result<i64> {
        if self.contains(value) {
            Ok(value)
        } else {
            Err(Error::OutOfRange {
                value,
                bits: self.bits,
                min: self.min(),
                max: self.max(),
            })
        }
    }
}

/// Clamps `value` into the representable range of `fmt`.
pub fn quantize_saturate(value: i128, fmt: FxpFormat) -> i64 {
    value.clamp(fmt.min() as i128, fmt.max() as i128) as i64
}

/// Two's-complement bits of one word, sign bit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitSlices(Vec<u8>);

impl BitSlices {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        let width = bits.len() as u32;
        if !(MIN_BITS..=MAX_BITS).contains(&width) {
            return Err(Error::InvalidWidth(width));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidConfig("bit slices must be 0 or 1".into()));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn width(&self) -> u32 {
        self.0.len() as u32
    }

    /// Bit at slice index `r` (0 = sign).
    pub fn slice(&self, r: usize) -> u8 {
        self.0[r]
    }

    /// `-b0 * 2^(B-1) + sum_{r>=1} b_r * 2^(B-1-r)`
    pub fn reassemble(&self) -> i64 {
        let top = self.0.len() - 1;
        self.0.iter().enumerate().fold(0i64, |acc, (r, &b)| {
            let weight = 1i64 << (top - r);
            if r == 0 {
                acc - b as i64 * weight
            } else {
                acc + b as i64 * weight
            }
        })
    }
}

pub fn bit_slice(value: i64, fmt: FxpFormat) -> Result<BitSlices> {
    fmt.check(value)?;
    let b = fmt.bits() as usize;
    let bits = (0..b).map(|r| bit_at(value, r, fmt.bits())).collect();
    Ok(BitSlices(bits))
}

/// Slice `r` of a `bits`-wide two's-complement word without materializing
/// the whole slice vector. The value must already be in range.
#[inline]
pub fn bit_at(value: i64, r: usize, bits: u32) -> u8 {
    ((value >> (bits as usize - 1 - r)) & 1) as u8
}

/// Sign applied to slice `r`'s digit: the sign slice carries negative weight.
#[inline]
pub fn slice_sign(r: usize) -> i64 {
    if r == 0 {
        -1
    } else {
        1
    }
}

/// Offset-binary digits of one slice across a vector of operands:
/// `s_r * (b_i - !b_i)` with `s_0 = -1` and `s_r = +1` otherwise.
pub fn obc_delta(slice_bits: &[u8], r: usize, bits: u32) -> Vec<i8> {
    debug_assert!(r < bits as usize);
    let s = slice_sign(r) as i8;
    slice_bits
        .iter()
        .map(|&b| {
            let digit = if b != 0 { 1 } else { -1 };
            s * digit
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fmt(bits: u32) -> FxpFormat {
        FxpFormat::input(bits).unwrap()
    }

    #[test]
    fn width_bounds() {
        assert!(FxpFormat::input(1).is_err());
        assert!(FxpFormat::input(33).is_err());
        let f = fmt(8);
        assert_eq!((f.min(), f.max()), (-128, 127));
        let f = fmt(32);
        assert_eq!((f.min(), f.max()), (i32::MIN as i64, i32::MAX as i64));
    }

    #[test]
    fn saturation() {
        assert_eq!(quantize_saturate(5, fmt(4)), 5);
        assert_eq!(quantize_saturate(200, fmt(8)), 127);
        assert_eq!(quantize_saturate(-200, fmt(8)), -128);
    }

    #[test]
    fn slicing_examples() {
        assert_eq!(bit_slice(-2, fmt(2)).unwrap().bits(), &[1, 0]);
        assert_eq!(bit_slice(1, fmt(2)).unwrap().bits(), &[0, 1]);
        assert_eq!(bit_slice(-3, fmt(4)).unwrap().bits(), &[1, 1, 0, 1]);
        assert!(bit_slice(8, fmt(4)).is_err());
        assert!(bit_slice(-9, fmt(4)).is_err());
    }

    #[test]
    fn delta_examples() {
        assert_eq!(obc_delta(&[0; 5], 1, 8), vec![-1; 5]);
        assert_eq!(obc_delta(&[1; 5], 0, 8), vec![-1; 5]);
        assert_eq!(obc_delta(&[1, 0], 2, 8), vec![1, -1]);
    }

    fn obc_identity_holds(v: i64, f: FxpFormat) -> bool {
        let s = bit_slice(v, f).unwrap();
        let b = f.bits() as usize;
        let sum: i64 = (0..b)
            .map(|r| obc_delta(&[s.slice(r)], r, f.bits())[0] as i64 * (1i64 << (b - 1 - r)))
            .sum();
        2 * v == sum - 1
    }

    #[test]
    fn round_trip_and_identity_exhaustive_small_widths() {
        for bits in 2..=10 {
            let f = fmt(bits);
            for v in f.min()..=f.max() {
                assert_eq!(bit_slice(v, f).unwrap().reassemble(), v);
                assert!(obc_identity_holds(v, f), "v={v} B={bits}");
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_identity_wide(bits in 11u32..=32, seed in any::<i64>()) {
            let f = fmt(bits);
            let span = (f.max() - f.min() + 1) as i128;
            let v = (f.min() as i128 + (seed as i128).rem_euclid(span)) as i64;
            prop_assert_eq!(bit_slice(v, f).unwrap().reassemble(), v);
            prop_assert!(obc_identity_holds(v, f));
        }

        #[test]
        fn saturate_is_identity_in_range(bits in 2u32..=32, v in any::<i32>()) {
            let f = fmt(bits);
            let q = quantize_saturate(v as i128, f);
            prop_assert!(f.contains(q));
            if f.contains(v as i64) {
                prop_assert_eq!(q, v as i64);
            }
        }
    }
}
