//! BPSK over AWGN and seeded Monte-Carlo BLER/BER sweeps.
//!
//! Es/N0 convention: unit-energy BPSK symbols (`0 → +1`, `1 → -1`) and noise
//! variance `σ² = 10^(-Es/N0 / 10)` per real dimension.
//!
//! Frame `f` of a sweep draws its message and noise from a ChaCha8 stream
//! selected by `f` under the sweep seed, and the noise is scaled by `σ` only
//! at the end. Every SNR point (and every decoder configuration sharing a
//! seed) therefore sees the same messages and the same unit-variance noise
//! realisations. Frames are decoded in fixed-size batches on a worker pool
//! and tallied strictly in frame order, so the stopping frame and all
//! counters are independent of the worker count.

use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::construction::CodeSpec;
use crate::error::{Error, Result};
use crate::pdf::{DampingSchedule, DecoderConfig, EarlyTermination, FrameDecoder, PreparedCode};
use crate::quant::{FixedPoint, FloatLlr, LlrArithmetic, NoiseScaling, QuantSpec};
use crate::sc::ScMode;

/// Frames decoded between two tally/cancellation checkpoints.
pub const BATCH_FRAMES: u64 = 64;

pub const CSV_HEADER: [&str; 10] = [
    "esn0_db", "frames", "blk_err", "bit_err", "bler", "ber", "mean_iters", "et_rate", "skip_frac", "seconds",
];

/// Per-dimension noise variance at `esn0_db`.
pub fn noise_variance(esn0_db: f64) -> f64 {
    10f64.powf(-esn0_db / 10.0)
}

pub fn modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| if b & 1 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Adds white Gaussian noise of variance [`noise_variance`]`(esn0_db)`.
pub fn awgn<R: Rng + ?Sized>(symbols: &[f64], esn0_db: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !esn0_db.is_finite() {
        return Err(Error::invalid(format!("Es/N0 must be finite, got {esn0_db}")));
    }
    let sigma = noise_variance(esn0_db).sqrt();
    Ok(symbols
        .iter()
        .map(|&s| s + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Parses `start:step:stop` (inclusive, dB) or a single value.
pub fn parse_snr_range(text: &str) -> Result<Vec<f64>> {
    let ctx = "Es/N0 range";
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(ctx, format!("{p:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if parts.iter().any(|v| !v.is_finite()) {
        return Err(Error::parse(ctx, format!("{text:?}: values must be finite")));
    }
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, step, stop] => {
            if step <= 0.0 {
                return Err(Error::parse(ctx, format!("{text:?}: step must be positive")));
            }
            if stop < start {
                return Err(Error::parse(ctx, format!("{text:?}: stop is below start")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 10_000 {
                return Err(Error::parse(ctx, format!("{text:?}: more than 10000 points")));
            }
            // Round to 1e-9 dB so 6.0 + 3*0.1 prints as 6.3.
            Ok((0..count)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        _ => Err(Error::parse(ctx, format!("{text:?}: expected start:step:stop or a single value"))),
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub spec: Arc<CodeSpec>,
    pub quant: QuantSpec,
    pub schedule: DampingSchedule,
    pub t_max: usize,
    pub esn0_db: Vec<f64>,
    pub max_frames: u64,
    pub target_block_errors: u64,
    pub seed: u64,
    /// Worker threads; 0 means one per available core.
    pub worker_count: usize,
    pub sc_mode: ScMode,
    pub early_termination: EarlyTermination,
}

impl SimConfig {
    pub fn new(spec: Arc<CodeSpec>, quant: QuantSpec, t_max: usize, esn0_db: Vec<f64>) -> Self {
        Self {
            spec,
            quant,
            schedule: DampingSchedule::default(),
            t_max,
            esn0_db,
            max_frames: 10_000,
            target_block_errors: 100,
            seed: 1,
            worker_count: 1,
            sc_mode: ScMode::default(),
            early_termination: EarlyTermination::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_frames == 0 {
            return Err(Error::invalid("max_frames must be at least 1"));
        }
        if self.target_block_errors == 0 {
            return Err(Error::invalid("target_block_errors must be at least 1"));
        }
        if self.t_max == 0 {
            return Err(Error::invalid("t_max must be at least 1"));
        }
        if self.esn0_db.is_empty() {
            return Err(Error::invalid("no Es/N0 points"));
        }
        if let Some(v) = self.esn0_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("Es/N0 must be finite, got {v}")));
        }
        Ok(())
    }
}

/// Tallies of one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPoint {
    pub esn0_db: f64,
    pub frames: u64,
    pub block_errors: u64,
    pub bit_errors: u64,
    pub info_bits_per_frame: u64,
    pub iterations: u64,
    pub early_terminations: u64,
    pub subdecode_calls: u64,
    pub sc_invocations: u64,
    pub seconds: f64,
    /// The budget was not exhausted because the sweep was cancelled.
    pub partial: bool,
}

impl SimPoint {
    fn empty(esn0_db: f64, info_bits_per_frame: u64) -> Self {
        Self {
            esn0_db,
            frames: 0,
            block_errors: 0,
            bit_errors: 0,
            info_bits_per_frame,
            iterations: 0,
            early_terminations: 0,
            subdecode_calls: 0,
            sc_invocations: 0,
            seconds: 0.0,
            partial: false,
        }
    }

    fn ratio(num: u64, den: u64) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn bler(&self) -> f64 {
        Self::ratio(self.block_errors, self.frames)
    }

    pub fn ber(&self) -> f64 {
        Self::ratio(self.bit_errors, self.frames * self.info_bits_per_frame)
    }

    pub fn mean_iterations(&self) -> f64 {
        Self::ratio(self.iterations, self.frames)
    }

    pub fn et_rate(&self) -> f64 {
        Self::ratio(self.early_terminations, self.frames)
    }

    /// Share of sub-decoder calls resolved by the syndrome check alone.
    pub fn skip_fraction(&self) -> f64 {
        Self::ratio(self.subdecode_calls - self.sc_invocations, self.subdecode_calls)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub points: Vec<SimPoint>,
    /// The sweep was interrupted; the last point may be incomplete and later
    /// points are missing.
    pub partial: bool,
}

impl SimReport {
    /// Writes the results table. The `seconds` column is left empty unless
    /// `with_timing` is set, so reports stay byte-identical across reruns.
    pub fn write_csv<W: Write>(&self, out: W, with_timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for p in &self.points {
            w.write_record([
                format!("{}", p.esn0_db),
                p.frames.to_string(),
                p.block_errors.to_string(),
                p.bit_errors.to_string(),
                format!("{:.6e}", p.bler()),
                format!("{:.6e}", p.ber()),
                format!("{:.4}", p.mean_iterations()),
                format!("{:.4}", p.et_rate()),
                format!("{:.4}", p.skip_fraction()),
                if with_timing {
                    format!("{:.3}", p.seconds)
                } else {
                    String::new()
                },
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, with_timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_timing).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Es/N0 at which the BLER curve crosses `target`, interpolating linearly in
/// `log10(BLER)` between the bracketing points. Points with zero errors are
/// skipped.
pub fn esn0_at_bler(points: &[SimPoint], target: f64) -> Option<f64> {
    let curve: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.block_errors > 0)
        .map(|p| (p.esn0_db, p.bler().log10()))
        .collect();
    let t = target.log10();
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if (y0 - t) * (y1 - t) <= 0.0 && y0 != y1 {
            Some(x0 + (t - y0) * (x1 - x0) / (y1 - y0))
        } else if y0 == t {
            Some(x0)
        } else {
            None
        }
    })
}

/// Unit-variance realisation of frame `index`: message bits and noise.
pub struct FrameDraw {
    pub message: Vec<u8>,
    pub noise: Vec<f64>,
}

/// The message and unit-variance noise of frame `index` under `seed`.
pub fn draw_frame(seed: u64, index: u64, k: usize, n: usize) -> FrameDraw {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut message = Vec::with_capacity(k);
    while message.len() < k {
        let word = rng.next_u64();
        let take = (k - message.len()).min(64);
        message.extend((0..take).map(|b| ((word >> b) & 1) as u8));
    }
    let noise = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    FrameDraw { message, noise }
}

#[derive(Default, Clone, Copy)]
struct FrameTally {
    block_error: bool,
    bit_errors: u64,
    iterations: u64,
    early_terminated: bool,
    subdecode_calls: u64,
    sc_invocations: u64,
}

fn simulate_frame<A: LlrArithmetic>(
    dec: &mut FrameDecoder<A>,
    spec: &CodeSpec,
    seed: u64,
    index: u64,
    sigma2: f64,
) -> Result<FrameTally> {
    let draw = draw_frame(seed, index, spec.k_total(), spec.n());
    let x = spec.encode(&draw.message)?;
    let sigma = sigma2.sqrt();
    let y: Vec<f64> = modulate(&x)
        .into_iter()
        .zip(&draw.noise)
        .map(|(s, z)| s + sigma * z)
        .collect();
    let (msg, stats) = dec.decode_message(&y, sigma2)?;
    let bit_errors = msg.iter().zip(&draw.message).filter(|(a, b)| a != b).count() as u64;
    Ok(FrameTally {
        block_error: bit_errors > 0,
        bit_errors,
        iterations: stats.iterations_used as u64,
        early_terminated: stats.early_terminated,
        subdecode_calls: stats.subdecode_calls,
        sc_invocations: stats.total_sc_invocations(),
    })
}

/// Runs the sweep to completion.
pub fn run_sweep(cfg: &SimConfig) -> Result<SimReport> {
    run_sweep_with(cfg, &AtomicBool::new(false), |_| {})
}

/// Runs the sweep, checking `cancel` between batches and calling `on_point`
/// after each finished SNR point. A cancelled sweep returns what it has,
/// flagged partial.
pub fn run_sweep_with(
    cfg: &SimConfig,
    cancel: &AtomicBool,
    on_point: impl FnMut(&SimPoint),
) -> Result<SimReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    match cfg.quant {
        QuantSpec::Float { exact } => sweep(
            cfg,
            &pool,
            FloatLlr {
                exact,
                scaling: NoiseScaling::Channel,
            },
            cancel,
            on_point,
        ),
        QuantSpec::Fixed {
            total_bits,
            frac_bits,
        } => sweep(cfg, &pool, FixedPoint::new(total_bits, frac_bits)?, cancel, on_point),
    }
}

fn sweep<A: LlrArithmetic>(
    cfg: &SimConfig,
    pool: &rayon::ThreadPool,
    arith: A,
    cancel: &AtomicBool,
    mut on_point: impl FnMut(&SimPoint),
) -> Result<SimReport> {
    let dec_cfg = DecoderConfig {
        t_max: cfg.t_max,
        schedule: cfg.schedule.clone(),
        sc_mode: cfg.sc_mode,
        early_termination: cfg.early_termination,
        parallel_subcodes: false,
        record_trace: false,
    };
    let code = Arc::new(PreparedCode::new(cfg.spec.clone(), cfg.sc_mode));
    let spec = &*cfg.spec;
    let mut report = SimReport {
        points: Vec::with_capacity(cfg.esn0_db.len()),
        partial: false,
    };
    for &esn0 in &cfg.esn0_db {
        let sigma2 = noise_variance(esn0);
        let started = Instant::now();
        let mut point = SimPoint::empty(esn0, spec.k_total() as u64);
        let mut next = 0u64;
        'point: while next < cfg.max_frames {
            if cancel.load(Ordering::Relaxed) {
                point.partial = true;
                report.partial = true;
                break;
            }
            let end = (next + BATCH_FRAMES).min(cfg.max_frames);
            let tallies: Vec<Result<FrameTally>> = pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map_init(
                        || FrameDecoder::new(code.clone(), arith, dec_cfg.clone()),
                        |dec, f| match dec {
                            Ok(dec) => simulate_frame(dec, spec, cfg.seed, f, sigma2),
                            Err(e) => Err(Error::invalid(e.to_string())),
                        },
                    )
                    .collect()
            });
            for t in tallies {
                let t = t?;
                point.frames += 1;
                point.block_errors += u64::from(t.block_error);
                point.bit_errors += t.bit_errors;
                point.iterations += t.iterations;
                point.early_terminations += u64::from(t.early_terminated);
                point.subdecode_calls += t.subdecode_calls;
                point.sc_invocations += t.sc_invocations;
                if point.block_errors >= cfg.target_block_errors {
                    break 'point;
                }
            }
            next = end;
        }
        point.seconds = started.elapsed().as_secs_f64();
        on_point(&point);
        let stop = point.partial;
        report.points.push(point);
        if stop {
            break;
        }
    }
    Ok(report)
}
