//! Fraction-bit sweep for the fixed-point component decoder.
//!
//! Decodes one polar code (syndrome check + fast SC) under every `Q`/`f`
//! split and the float min-sum reference on the same noise realisations,
//! and prints block error counts per Es/N0.
//!
//! With `--product K_sub`, runs the full iterative decoder on the
//! `n × n` product code instead and prints BLER per Es/N0, stopping each
//! point at `--errors` block errors.
//!
//! ```text
//! cargo run --release -p gncoset --example frac_sweep -- \
//!     --n 128 --k 115 --design 6.3 --esn0 5.0:0.5:6.5 --frames 20000
//! cargo run --release -p gncoset --example frac_sweep -- \
//!     --n 64 --product 48 --design 5.0 --esn0 6.25:0.25:6.75 --frames 200000
//! ```
//!
//! `--quant float,Q6F2,...` restricts the formats.

use std::collections::HashMap;
use std::sync::Arc;

use gncoset::construction::{gaussian_approx_order, product_code_ga};
use gncoset::gn::gn_transform;
use gncoset::quant::{FixedPoint, FloatLlr, LlrArithmetic};
use gncoset::sc::{ScDecoder, ScMode, SubCode};
use gncoset::sim::{draw_frame, esn0_at_bler, modulate, noise_variance, parse_snr_range, run_sweep, SimConfig};
use gncoset::QuantSpec;

fn block_errors<A: LlrArithmetic>(
    arith: A,
    sub: &SubCode,
    info: &[usize],
    esn0: f64,
    frames: u64,
    seed: u64,
) -> u64 {
    let n = sub.len();
    let sigma2 = noise_variance(esn0);
    let mut dec = ScDecoder::new(arith, n);
    let mut llr = vec![A::Llr::default(); n];
    let mut out = vec![0u8; n];
    let mut errors = 0;
    for f in 0..frames {
        let draw = draw_frame(seed, f, info.len(), n);
        let mut u = vec![0u8; n];
        for (&p, &b) in info.iter().zip(&draw.message) {
            u[p] = b;
        }
        let x = gn_transform(&u).expect("power-of-two length");
        for ((l, s), z) in llr.iter_mut().zip(modulate(&x)).zip(&draw.noise) {
            *l = arith.channel_llr(s + sigma2.sqrt() * z, sigma2);
        }
        dec.subdecode(sub, &llr, &mut out);
        errors += u64::from(out != x);
    }
    errors
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut opts: HashMap<&str, &str> = HashMap::new();
    for pair in args.chunks(2) {
        let key = pair[0].trim_start_matches("--");
        opts.insert(key, pair.get(1).map(String::as_str).ok_or("missing value")?);
    }
    let get = |k: &str, d: &str| opts.get(k).copied().unwrap_or(d).to_string();
    let n: usize = get("n", "128").parse()?;
    let k: usize = get("k", "115").parse()?;
    let design: f64 = get("design", "6.3").parse()?;
    let snrs = parse_snr_range(&get("esn0", "5.0:0.5:6.5"))?;
    let frames: u64 = get("frames", "20000").parse()?;
    let seed: u64 = get("seed", "99").parse()?;

    let mut formats = vec![QuantSpec::float()];
    for q in 4u8..=8 {
        for f in 0..=q - 2 {
            formats.push(QuantSpec::fixed(q, f)?);
        }
    }
    if let Some(list) = opts.get("quant") {
        formats = list.split(',').map(str::parse).collect::<Result<_, _>>()?;
    }

    if let Some(k_sub) = opts.get("product") {
        let k_sub: usize = k_sub.parse()?;
        let errors: u64 = get("errors", "200").parse()?;
        let t_max: usize = get("tmax", "5").parse()?;
        let spec = Arc::new(product_code_ga(n, k_sub, design)?);
        println!("# {n}x{n} product, K_sub={k_sub}, GA@{design} dB, t_max={t_max}, BLER (Es/N0 at 1e-2 last)");
        for quant in formats {
            let mut cfg = SimConfig::new(spec.clone(), quant, t_max, snrs.clone());
            cfg.max_frames = frames;
            cfg.target_block_errors = errors;
            cfg.seed = seed;
            let report = run_sweep(&cfg)?;
            print!("{quant}");
            for p in &report.points {
                print!(",{:.4e}", p.bler());
            }
            match esn0_at_bler(&report.points, 1e-2) {
                Some(x) => println!(",{x:.3}"),
                None => println!(",-"),
            }
        }
        return Ok(());
    }

    let frozen = gaussian_approx_order(n, design)?.frozen_set(n - k)?;
    let info: Vec<usize> = (0..n).filter(|&i| !frozen.contains(i)).collect();
    let sub = SubCode::new(frozen, ScMode::default());

    println!("# ({n},{k}) GA@{design} dB, {frames} frames per point, block errors");
    print!("format");
    for e in &snrs {
        print!(",{e}");
    }
    println!();
    for quant in formats {
        print!("{quant}");
        for &e in &snrs {
            let errs = match quant {
                QuantSpec::Float { exact } => block_errors(
                    FloatLlr {
                        exact,
                        ..FloatLlr::default()
                    },
                    &sub,
                    &info,
                    e,
                    frames,
                    seed,
                ),
                QuantSpec::Fixed {
                    total_bits,
                    frac_bits,
                } => block_errors(FixedPoint::new(total_bits, frac_bits)?, &sub, &info, e, frames, seed),
            };
            print!(",{errs}");
        }
        println!();
    }
    Ok(())
}
