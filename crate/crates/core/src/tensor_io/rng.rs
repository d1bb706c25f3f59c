use crate::fxp::FxpFormat;

/// SplitMix64 with the usual golden-ratio increment and finalizer constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform over the whole `fmt` range, taken from the top `B` bits.
    pub fn next_in_fmt(&mut self, fmt: FxpFormat) -> i64 {
        let b = fmt.bits();
        (self.next_u64() >> (64 - b)) as i64 + fmt.min()
    }

    /// Value in `lo..=hi` by multiply-high range reduction.
    pub fn next_in_range(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "empty range {lo}..={hi}");
        let span = (hi as i128 - lo as i128 + 1) as u128;
        let offset = (self.next_u64() as u128 * span) >> 64;
        (lo as i128 + offset as i128) as i64
    }
}
