//! Throughput and resource-efficiency figures for FPGA designs.
//!
//! Throughput in MAC form is `(K * L / B) * f_clk`: `L` lanes each finish a
//! `K`-term inner product every `B` clocks. ENS folds LUTs, DSPs and BRAMs
//! into one slice-equivalent count; EPS is watts per GOP/s and AEP is
//! GOP/s per (GHz x kENS).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ENS_PER_LUT: f64 = 0.25;
pub const ENS_PER_DSP: f64 = 102.4;
pub const ENS_PER_BRAM: f64 = 116.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceReport {
    pub luts: u64,
    #[serde(default)]
    pub ffs: u64,
    #[serde(default)]
    pub dsps: u64,
    #[serde(default)]
    pub brams: u64,
    #[serde(default)]
    pub power_w: Option<f64>,
}

/// MAC operations per second.
pub fn throughput_mac(k: usize, lanes: usize, bits: u32, f_clk: f64) -> Result<f64> {
    if bits == 0 {
        return Err(Error::InvalidConfig("bit-width must be positive".into()));
    }
    if k == 0 || lanes == 0 || !(f_clk > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "K={k}, L={lanes} and f_clk={f_clk} must be positive"
        )));
    }
    Ok((k * lanes) as f64 / bits as f64 * f_clk)
}

/// Inner products per second (the MAC figure divided by `K`).
pub fn throughput_ipc(k: usize, lanes: usize, bits: u32, f_clk: f64) -> Result<f64> {
    Ok(throughput_mac(k, lanes, bits, f_clk)? / k as f64)
}

pub fn ens(r: &ResourceReport) -> f64 {
    r.luts as f64 * ENS_PER_LUT + r.dsps as f64 * ENS_PER_DSP + r.brams as f64 * ENS_PER_BRAM
}

/// ENS rounded half up, computed exactly in twentieths of a slice.
pub fn ens_rounded(r: &ResourceReport) -> u64 {
    let twentieths = r.luts * 5 + r.dsps * 2048 + r.brams * 2324;
    (twentieths + 10) / 20
}

/// Watts per GOP/s.
pub fn eps(power_w: f64, t_mac_gops: f64) -> Result<f64> {
    if !(t_mac_gops > 0.0) {
        return Err(Error::InvalidConfig("throughput must be positive".into()));
    }
    Ok(power_w / t_mac_gops)
}

/// `t_mac / (f_clk * ens / 1000)` with `t_mac` in GOP/s and `f_clk` in GHz
/// units as printed; equivalently ops/cycle per thousand ENS.
pub fn aep(t_mac_ops: f64, f_clk: f64, ens: f64) -> Result<f64> {
    if !(f_clk > 0.0) || !(ens > 0.0) {
        return Err(Error::InvalidConfig("f_clk and ENS must be positive".into()));
    }
    Ok(t_mac_ops / (f_clk * ens / 1000.0))
}

/// One column of a design comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub name: String,
    pub luts: u64,
    pub ffs: u64,
    pub dsps: u64,
    pub brams: u64,
    pub f_clk_hz: f64,
    pub power_w: Option<f64>,
    pub t_mac_gops: f64,
    pub ens: f64,
    pub ens_rounded: u64,
    pub eps: Option<f64>,
    pub aep: f64,
}

/// Builds a row from a resource report, a throughput in GOP/s and a clock.
/// AEP uses the rounded ENS, as reported tables do.
pub fn metric_row(name: &str, r: &ResourceReport, t_mac_gops: f64, f_clk_hz: f64) -> Result<MetricRow> {
    if !(t_mac_gops > 0.0) {
        return Err(Error::InvalidConfig("throughput must be positive".into()));
    }
    let ens_r = ens_rounded(r);
    Ok(MetricRow {
        name: name.into(),
        luts: r.luts,
        ffs: r.ffs,
        dsps: r.dsps,
        brams: r.brams,
        f_clk_hz,
        power_w: r.power_w,
        t_mac_gops,
        ens: ens(r),
        ens_rounded: ens_r,
        eps: r.power_w.map(|p| eps(p, t_mac_gops)).transpose()?,
        aep: aep(t_mac_gops * 1e9, f_clk_hz, ens_r as f64)?,
    })
}

/// Published figures for one of the proposed designs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceDesign {
    pub name: &'static str,
    pub b1: u32,
    pub b2: u32,
    /// Serial width that sets throughput.
    pub serial_bits: u32,
    pub f_mhz: f64,
    pub luts: u64,
    pub power_w: f64,
    pub t_mac_gops: f64,
    pub ens: u64,
    pub eps: f64,
    pub aep: f64,
}

/// `K * L` of the reference designs.
pub const REFERENCE_KL: usize = 16;

const fn design(
    name: &'static str,
    b2: u32,
    serial_bits: u32,
    f_mhz: f64,
    luts: u64,
    power_w: f64,
    t_mac_gops: f64,
    ens: u64,
    eps: f64,
    aep: f64,
) -> ReferenceDesign {
    ReferenceDesign {
        name,
        b1: 8,
        b2,
        serial_bits,
        f_mhz,
        luts,
        power_w,
        t_mac_gops,
        ens,
        eps,
        aep,
    }
}

pub const REFERENCE_DESIGNS: [ReferenceDesign; 6] = [
    design("Hybrid_AB", 8, 8, 100.0, 16406, 0.835, 0.2, 4102, 4.175, 0.488),
    design("Hybrid_A", 4, 8, 100.0, 14724, 0.824, 0.2, 3681, 4.120, 0.543),
    design("Hybrid_B", 4, 4, 95.0, 23019, 0.976, 0.38, 5755, 2.568, 0.695),
    design("Split_AB", 8, 8, 100.0, 16310, 0.832, 0.2, 4078, 4.160, 0.490),
    design("Split_A", 4, 8, 100.0, 14741, 0.826, 0.2, 3685, 4.130, 0.543),
    design("Split_B", 4, 4, 95.0, 23071, 0.949, 0.38, 5768, 2.497, 0.694),
];

/// Recomputes a reference column from its resources, clock and width.
pub fn reproduce(d: &ReferenceDesign) -> Result<MetricRow> {
    let f = d.f_mhz * 1e6;
    let t = throughput_mac(REFERENCE_KL, 1, d.serial_bits, f)? / 1e9;
    let report = ResourceReport {
        luts: d.luts,
        ffs: 0,
        dsps: 0,
        brams: 0,
        power_w: Some(d.power_w),
    };
    metric_row(d.name, &report, t, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report(luts: u64, dsps: u64, brams: u64) -> ResourceReport {
        ResourceReport {
            luts,
            ffs: 0,
            dsps,
            brams,
            power_w: None,
        }
    }

    #[test]
    fn throughput_examples() {
        let t = throughput_mac(16, 1, 8, 100e6).unwrap();
        assert!((t / 1e9 - 0.2).abs() < 1e-12);
        let t = throughput_mac(4, 4, 4, 95e6).unwrap();
        assert!((t / 1e9 - 0.38).abs() < 1e-12);
        assert_eq!(throughput_mac(3, 2, 1, 10.0).unwrap(), 60.0);
        assert!(throughput_mac(16, 1, 0, 1.0).is_err());
        assert_eq!(throughput_ipc(16, 1, 8, 100e6).unwrap(), 12.5e6);
    }

    #[test]
    fn ens_examples() {
        assert!((ens(&report(16406, 0, 0)) - 4101.5).abs() < 1e-9);
        assert_eq!(ens_rounded(&report(16406, 0, 0)), 4102);
        assert!((ens(&report(0, 1, 0)) - 102.4).abs() < 1e-9);
        assert!((ens(&report(514000, 512, 1024)) - 299917.6).abs() < 1e-6);
        assert_eq!(ens_rounded(&report(514000, 512, 1024)), 299918);
        assert_eq!(ens_rounded(&report(1, 0, 0)), 0);
        assert_eq!(ens_rounded(&report(2, 0, 0)), 1);
        assert_eq!(ens_rounded(&report(3, 0, 0)), 1);
    }

    #[test]
    fn eps_aep_examples() {
        assert!((eps(0.976, 0.38).unwrap() - 2.568).abs() < 1e-3);
        assert!((eps(0.835, 0.2).unwrap() - 4.175).abs() < 1e-9);
        assert_eq!(eps(0.0, 0.5).unwrap(), 0.0);
        assert!(eps(1.0, 0.0).is_err());
        assert!((aep(0.2e9, 100e6, 4102.0).unwrap() - 0.488).abs() < 1e-3);
        assert!((aep(0.38e9, 95e6, 5755.0).unwrap() - 0.695).abs() < 1e-3);
        assert!(aep(1.0, 1.0, 1e300).unwrap() < 1e-290);
        assert!(aep(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn reference_columns_reproduce() {
        for d in &REFERENCE_DESIGNS {
            let row = reproduce(d).unwrap();
            assert!((row.t_mac_gops - d.t_mac_gops).abs() <= d.t_mac_gops * 0.005, "{}", d.name);
            assert_eq!(row.ens_rounded, d.ens, "{}", d.name);
            assert!((row.eps.unwrap() - d.eps).abs() <= 1e-3, "{}", d.name);
            assert!((row.aep - d.aep).abs() <= 1e-3, "{} {}", d.name, row.aep);
        }
    }

    proptest! {
        #[test]
        fn aep_independent_of_clock(k in 1usize..64, l in 1usize..16, b in 1u32..32, f1 in 1e6f64..1e9, f2 in 1e6f64..1e9, e in 1.0f64..1e6) {
            let a1 = aep(throughput_mac(k, l, b, f1).unwrap(), f1, e).unwrap();
            let a2 = aep(throughput_mac(k, l, b, f2).unwrap(), f2, e).unwrap();
            prop_assert!((a1 - a2).abs() <= 1e-9 * a1.abs().max(1.0));
        }

        #[test]
        fn ens_is_linear(l1 in 0u64..1_000_000, l2 in 0u64..1_000_000, d in 0u64..5000, b in 0u64..5000) {
            let sum = ens(&report(l1 + l2, d, b));
            let parts = ens(&report(l1, d, 0)) + ens(&report(l2, 0, b));
            prop_assert!((sum - parts).abs() <= 1e-6 * sum.max(1.0));
        }
    }
}
