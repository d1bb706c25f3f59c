//! Acceptance gate. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use comet_core::cnn_model::{build_modified_lenet5, infer, Layer};
use comet_core::fxp::FxpFormat;
use comet_core::gemm_core::{im2col, GemmConfig};
use comet_core::im2col_addr::{check_handoff_causality, expected_carries, AddrEvent, AddrGen};
use comet_core::lut_arch::{
    eval_hybrid, eval_parallel, eval_shared, eval_split, lut_cost, GroupTrace, LutArch, LutImpl,
    LutKind, StructTrace,
};
use comet_core::metrics::{aep, ens, ens_rounded, eps, throughput_mac, ResourceReport};
use comet_core::obc_ipc::{build_naive_lut, Scheme};
use comet_core::tensor_io::{decode_cbt, encode_cbt, gen_input, gen_weights, Dtype, SplitMix64, Tensor};
use comet_core::verify::{run_ipc_sweep, verify_inference, IpcSweep};

/// SHA-256 of the canonical image of `gen_weights(42, lenet5m, 8)`.
const GOLDEN_LENET5M_42_B2_8: &str =
    "3813bf22768a1dc682184684b6578b2df64921992a932278e4570962582cc9b4";

type Outcome = Result<String, String>;

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    if took > limit {
        Err(format!(
            "{detail}; took {:.1} s, limit {} s",
            took.as_secs_f64(),
            limit.as_secs()
        ))
    } else {
        Ok(format!("{detail}; {:.2} s", took.as_secs_f64()))
    }
}

fn all_impls() -> [LutImpl; 4] {
    LutKind::ALL.map(LutImpl::Structural)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut trials = 0;
    for (k, b1, b2) in [(4, 8, 8), (8, 16, 8), (16, 16, 4), (16, 8, 4)] {
        for scheme in [Scheme::A, Scheme::B] {
            for lut in all_impls() {
                let sweep = IpcSweep {
                    seed: 0xC0FFEE ^ (k as u64) << 8 ^ (b1 as u64) << 16 ^ (b2 as u64) << 24,
                    trials: 10_000,
                    scheme,
                    lut,
                    k,
                    b1,
                    b2,
                    inject_fault: false,
                };
                let report = run_ipc_sweep(&sweep).map_err(|e| e.to_string())?;
                if let Some(c) = report.first {
                    return Err(format!(
                        "{scheme} {lut} K={k} B1={b1} B2={b2}: {} mismatches, first at trial {} (seed {:#x}): got {} expected {}",
                        report.mismatches, c.trial, c.trial_seed, c.got, c.expected
                    ));
                }
                trials += report.sweep.trials;
            }
        }
    }
    within(Duration::from_secs(60), start, format!("{trials} trials, 0 mismatches"))
}

/// `sum_i c_i (2 b_i - 1)`, coefficient 0 on the address MSB.
fn entry(coeffs: &[i64], addr: u32) -> i64 {
    let k = coeffs.len();
    coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (2 * ((addr >> (k - 1 - i)) & 1) as i64 - 1))
        .sum()
}

fn check_trace(coeffs: &[i64], trace: &StructTrace) -> Result<(), String> {
    let q = trace.arch.q();
    let p = trace.arch.p();
    let mut group_sum = 0;
    for (g, gt) in trace.groups.iter().enumerate() {
        let c = &coeffs[g * q..(g + 1) * q];
        let ga = (trace.address >> ((p - 1 - g) * q)) & ((1 << q) - 1);
        if gt.out() != entry(c, ga) {
            return Err(format!(
                "group {g} of address {} evaluates to {}",
                trace.address,
                gt.out()
            ));
        }
        group_sum += gt.out();
        match gt {
            GroupTrace::Split { left, right, out } => {
                let h = q / 2;
                let (la, ra) = (ga >> h, ga & ((1 << h) - 1));
                if left.out != entry(&c[..h], la) || right.out != entry(&c[h..], ra) {
                    return Err(format!("split halves wrong at address {}", trace.address));
                }
                if *out != left.out + right.out {
                    return Err(format!("split join is not the half sum at {}", trace.address));
                }
            }
            GroupTrace::Hybrid { pairs, single, out } => {
                let mut total = 0;
                for (m, pt) in pairs.iter().enumerate() {
                    let (a, b) = (c[2 * m], c[2 * m + 1]);
                    if pt.nodes.sum != a + b || pt.nodes.diff != b - a {
                        return Err(format!("pair {m} nodes {:?} for ({a}, {b})", pt.nodes));
                    }
                    let pa = (ga >> (q - 2 - 2 * m)) & 0b11;
                    if pt.out != entry(&[a, b], pa) {
                        return Err(format!("pair {m} output {} at sub-address {pa}", pt.out));
                    }
                    total += pt.out;
                }
                total += single.unwrap_or(0);
                if total != *out {
                    return Err(format!("hybrid pair outputs do not sum to {out}"));
                }
            }
            _ => {}
        }
    }
    let root = trace.tree.last().map(|l| l[0]).unwrap_or(group_sum);
    if group_sum != trace.value || root != trace.value {
        return Err(format!("adder tree disagrees at {}", trace.address));
    }
    Ok(())
}

type EvalFn = fn(&[i64], u32) -> comet_core::Result<(i64, StructTrace)>;

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(1 << 40);
    let evals: [(LutKind, EvalFn); 4] = [
        (LutKind::Parallel, eval_parallel),
        (LutKind::Shared, eval_shared),
        (LutKind::Split, eval_split),
        (LutKind::Hybrid, eval_hybrid),
    ];
    let mut checked = 0u64;
    for k in [2usize, 4, 6, 8, 10] {
        for _ in 0..3 {
            let coeffs: Vec<i64> = (0..k)
                .map(|_| rng.next_in_range(-(1 << 15), (1 << 15) - 1))
                .collect();
            let naive = build_naive_lut(&coeffs).map_err(|e| e.to_string())?;
            let full = (1u32 << k) - 1;
            for addr in 0..=full {
                let want = naive.entries()[addr as usize];
                if want != entry(&coeffs, addr) {
                    return Err(format!("naive table disagrees with enumeration at K={k} addr={addr}"));
                }
                if naive.entries()[(full ^ addr) as usize] != -want {
                    return Err(format!("naive table not mirror antisymmetric at K={k} addr={addr}"));
                }
                for (kind, eval) in &evals {
                    let (v, trace) = eval(&coeffs, addr).map_err(|e| e.to_string())?;
                    let (mirror, _) = eval(&coeffs, full ^ addr).map_err(|e| e.to_string())?;
                    if v != want || mirror != -v {
                        return Err(format!(
                            "{kind} K={k} addr={addr}: {v} (mirror {mirror}), want {want}"
                        ));
                    }
                    check_trace(&coeffs, &trace).map_err(|e| format!("{kind} K={k}: {e}"))?;
                    checked += 1;
                }
            }
        }
    }
    within(Duration::from_secs(30), start, format!("{checked} traced lookups exact"))
}

fn criterion_3() -> Outcome {
    let pow = |e: u32| 1u64 << e;
    let log2 = |p: u64| p.trailing_zeros() as u64;
    let q = 4u64;
    let mut problems = Vec::new();
    let mut ordering = Vec::new();
    for k in [4u64, 8, 16, 32] {
        let p = k / q;
        // (kind, adders, muxes, CPD adders, CPD muxes) with q = 4 substituted.
        let want = [
            (LutKind::Parallel, (pow(3) + q - 2) * p + p - 1, (pow(3) - 1) * p, q + log2(p), 0),
            (LutKind::Shared, (pow(2) + q - 2) * p + p - 1, pow(2) * p, q + log2(p), 0),
            (LutKind::Split, (2 * (pow(1) - 1) + 1) * p + p - 1, 2 * pow(2) * p, q / 2 + 1 + log2(p), 1),
            (LutKind::Hybrid, q * p + p - 1, 3 * (q - 2) + 1, 2 + log2(p), 2),
        ];
        let mut adders = HashMap::new();
        for (kind, add, mux, cpd_a, cpd_m) in want {
            let arch = LutArch::new(kind, k as usize, p as usize, q as usize)
                .map_err(|e| e.to_string())?;
            let c = lut_cost(&arch);
            if (c.adders, c.muxes_2to1, c.cpd_adders, c.cpd_muxes as u64)
                != (add, mux, cpd_a as f64, cpd_m)
            {
                problems.push(format!("{kind} K={k}: got {c:?}"));
            }
            adders.insert(kind, c.adders);
        }
        let (h, s, sh, pa) = (
            adders[&LutKind::Hybrid],
            adders[&LutKind::Split],
            adders[&LutKind::Shared],
            adders[&LutKind::Parallel],
        );
        if !(h <= s && s <= sh && sh <= pa) {
            ordering.push(format!("K={k}: Hybrid {h}, Split {s}, Shared {sh}, Parallel {pa}"));
        }
    }
    let p4 = lut_cost(&LutArch::new(LutKind::Parallel, 4, 1, 4).unwrap());
    let h4 = lut_cost(&LutArch::new(LutKind::Hybrid, 4, 1, 4).unwrap());
    if (p4.adders, p4.muxes_2to1, h4.adders, h4.muxes_2to1) != (10, 7, 4, 7) {
        problems.push(format!("K=4 anchors: Parallel {p4:?}, Hybrid {h4:?}"));
    }
    if !problems.is_empty() {
        return Err(format!("closed forms differ: {}", problems.join("; ")));
    }
    if !ordering.is_empty() {
        return Err(format!(
            "closed forms match at all 16 (arch, K) points, but Hybrid <= Split <= Shared <= Parallel does not hold: {}",
            ordering.join("; ")
        ));
    }
    Ok("closed forms and ordering hold".into())
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let model = build_modified_lenet5(8, 8).map_err(|e| e.to_string())?;
    let mut rng = SplitMix64::new(4);
    let fmt = FxpFormat::input(8).unwrap();
    let k_hw = 16;
    let mut layers = 0;
    for (idx, layer) in model.layers.iter().enumerate() {
        let Some(cfg) = layer.gemm_cfg() else {
            continue;
        };
        let gen = AddrGen::new(*cfg, k_hw, idx).map_err(|e| e.to_string())?;
        let stream = gen.run().map_err(|e| e.to_string())?;
        let x: Vec<i64> = (0..cfg.input_len()).map(|_| rng.next_in_fmt(fmt)).collect();
        let image = Tensor::new(vec![cfg.c, cfg.h, cfg.w], x.clone()).unwrap();
        let reference = im2col(&image, cfg).map_err(|e| e.to_string())?;
        for chan in 0..cfg.n {
            let got = stream
                .materialize_x(&x, chan)
                .map_err(|e| format!("{}: {e}", layer.name))?;
            if got != reference.data {
                return Err(format!(
                    "{}: channel {chan} read stream differs from im2col",
                    layer.name
                ));
            }
        }
        let want = expected_carries(&gen);
        let got = [1, 2, 3, 4].map(|l| stream.carries(l));
        if got != [want.carry1, want.carry2, want.carry3, want.carry4] {
            return Err(format!("{}: carries {got:?}, want {want:?}", layer.name));
        }
        let writes = stream.write_addresses();
        let unique: HashSet<usize> = writes.iter().copied().collect();
        if writes.len() != cfg.output_len()
            || unique.len() != writes.len()
            || writes.iter().any(|&a| a >= cfg.output_len())
        {
            return Err(format!("{}: write addresses are not a bijection", layer.name));
        }
        let np = cfg.patch_len();
        for r in &stream.records {
            if let AddrEvent::ReadTheta(a) = r.event {
                if a != r.rd.chan * np + r.rd.tile * k_hw + r.cntr0 {
                    return Err(format!("{}: weight address {a} out of order", layer.name));
                }
            }
        }
        check_handoff_causality(&stream).map_err(|e| format!("{}: {e}", layer.name))?;
        layers += 1;
    }
    within(Duration::from_secs(10), start, format!("{layers} GEMM layers"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    for (b1, b2) in [(8, 8), (16, 8)] {
        let model = build_modified_lenet5(b1, b2).map_err(|e| e.to_string())?;
        let weights = gen_weights(42, &model, b2);
        for scheme in [Scheme::A, Scheme::B] {
            for lut in all_impls() {
                let cfg = GemmConfig::preset("default", scheme, lut, b1, b2)
                    .map_err(|e| e.to_string())?;
                let report = verify_inference(&model, &weights, &cfg, 1000..1100)
                    .map_err(|e| e.to_string())?;
                if let Some(m) = report.mismatches.first() {
                    return Err(format!(
                        "B1={b1} B2={b2} {scheme} {lut}: input seed {} DA {:?} oracle {:?}",
                        m.input_seed, m.da, m.oracle
                    ));
                }
                if report.cycle_mismatches != 0 {
                    return Err(format!(
                        "B1={b1} B2={b2} {scheme} {lut}: cycle totals differ from the closed form"
                    ));
                }
                runs += report.inputs;
            }
        }
    }
    within(
        Duration::from_secs(120),
        start,
        format!("{runs} inferences bit-exact, cycles match"),
    )
}

fn criterion_6() -> Outcome {
    let report = |luts| ResourceReport {
        luts,
        ffs: 0,
        dsps: 0,
        brams: 0,
        power_w: None,
    };
    let checks = [
        ("ENS(16406,0,0)", ens(&report(16406)), 4102.0, 0.5),
        ("EPS(0.976,0.38)", eps(0.976, 0.38).unwrap(), 2.568, 0.001),
        ("AEP(0.2 GOP/s,100 MHz,4102)", aep(0.2e9, 100e6, 4102.0).unwrap(), 0.488, 0.001),
        ("T_MAC(KL=16,B=8,100 MHz)", throughput_mac(16, 1, 8, 100e6).unwrap() / 1e9, 0.2, 0.2 * 0.005),
        ("T_MAC(KL=16,B=4,95 MHz)", throughput_mac(16, 1, 4, 95e6).unwrap() / 1e9, 0.38, 0.38 * 0.005),
    ];
    let mut parts = Vec::new();
    for (name, got, want, tol) in checks {
        if (got - want).abs() > tol {
            return Err(format!("{name} = {got}, want {want} +/- {tol}"));
        }
        parts.push(format!("{name}={got:.4}"));
    }
    if ens_rounded(&report(16406)) != 4102 {
        return Err("rounded ENS is not 4102".into());
    }
    Ok(parts.join(", "))
}

fn criterion_7() -> Outcome {
    let model = build_modified_lenet5(16, 8).map_err(|e| e.to_string())?;
    let weights = gen_weights(7, &model, 8);
    let x = gen_input(7, &model);
    let mut detail = Vec::new();
    for lut in all_impls() {
        let run = |scheme| {
            let cfg = GemmConfig::preset("default", scheme, lut, 16, 8).unwrap();
            infer(&model, &weights, &x, &cfg).map_err(|e| e.to_string())
        };
        let (a, b) = (run(Scheme::A)?, run(Scheme::B)?);
        if a.logits != b.logits {
            return Err(format!("{lut}: schemes disagree on the logits"));
        }
        if a.total_cycles != 2 * b.total_cycles {
            return Err(format!(
                "{lut}: Scheme A {} cycles, Scheme B {}",
                a.total_cycles, b.total_cycles
            ));
        }
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            if la.cycles != 2 * lb.cycles {
                return Err(format!("{lut} layer {}: {} vs {}", la.name, la.cycles, lb.cycles));
            }
        }
        detail.push(format!("{lut} {}/{}", a.total_cycles, b.total_cycles));
    }
    let gemm_layers = model.layers.iter().filter_map(Layer::gemm_shape).count();
    Ok(format!(
        "A/B cycles over {gemm_layers} GEMM layers: {}",
        detail.join(", ")
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = SplitMix64::new(8);
    for i in 0..300 {
        let dtype = Dtype::from_code(1 + (i % 3) as u8).unwrap();
        let rank = rng.next_in_range(0, 4) as usize;
        let dims: Vec<usize> = (0..rank).map(|_| rng.next_in_range(1, 6) as usize).collect();
        let n = dims.iter().product();
        let data = (0..n)
            .map(|_| rng.next_in_range(dtype.min(), dtype.max()))
            .collect();
        let t = Tensor::new(dims, data).unwrap();
        let bytes = encode_cbt(&t, dtype).map_err(|e| e.to_string())?;
        let (back, d) = decode_cbt(&bytes).map_err(|e| e.to_string())?;
        if back != t || d != dtype || encode_cbt(&back, d).map_err(|e| e.to_string())? != bytes {
            return Err(format!("CBT round trip {i} not byte-identical"));
        }
    }
    let model = build_modified_lenet5(8, 8).map_err(|e| e.to_string())?;
    let digest = gen_weights(42, &model, 8)
        .digest_hex()
        .map_err(|e| e.to_string())?;
    if digest != GOLDEN_LENET5M_42_B2_8 {
        return Err(format!(
            "golden hash {digest}, committed {GOLDEN_LENET5M_42_B2_8}"
        ));
    }
    Ok(format!(
        "300 CBT round trips byte-identical, golden hash reproduced on {}-{} (other targets must run this suite themselves)",
        std::env::consts::ARCH,
        std::env::consts::OS
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence (IPC)", criterion_1),
        ("LUT structural equivalence", criterion_2),
        ("LUT cost closed forms and ordering", criterion_3),
        ("address-generator equivalence", criterion_4),
        ("end-to-end inference", criterion_5),
        ("metric reproduction", criterion_6),
        ("scheme cycle asymmetry", criterion_7),
        ("format stability", criterion_8),
    ];
    // `cargo test -- <filter>` selects criteria by number or name.
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id == *f || name.contains(f.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("{id} [{name}]: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("{id} [{name}]: FAIL ({detail})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
