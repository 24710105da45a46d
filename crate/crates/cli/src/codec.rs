use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use gncoset::construction::load_spec;
use gncoset::quant::{FixedPoint, FloatLlr, LlrArithmetic};
use gncoset::sim::{modulate, noise_variance};
use gncoset::{CodeSpec, DecoderConfig, FrameDecoder, QuantSpec};

use crate::bits::{from_text, to_text};
use crate::{BitFormat, CodecCommand, FrameFormat};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(text: String, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn decode_with<A: LlrArithmetic>(spec: Arc<CodeSpec>, arith: A, t_max: usize, y: &[f64], sigma2: f64) -> Result<Vec<u8>> {
    let mut dec = FrameDecoder::for_spec(spec, arith, DecoderConfig::new(t_max))?;
    let (msg, stats) = dec.decode_message(y, sigma2)?;
    eprintln!(
        "iterations {} (early stop: {}), SC runs {}",
        stats.iterations_used,
        stats.early_terminated,
        stats.total_sc_invocations()
    );
    Ok(msg)
}

pub fn run(cmd: CodecCommand) -> Result<ExitCode> {
    match cmd {
        CodecCommand::Encode {
            spec,
            msg,
            format,
            out,
        } => {
            let spec = load_spec(&spec).with_context(|| format!("loading {}", spec.display()))?;
            let message = from_text(&read(&msg)?, format, spec.k_total()).context("message")?;
            let x = spec.encode(&message)?;
            emit(to_text(&x, format), out.as_deref())?;
        }
        CodecCommand::Decode {
            spec,
            frame,
            format,
            msg_format,
            tmax,
            quant,
            esn0,
            out,
        } => {
            let spec = Arc::new(load_spec(&spec).with_context(|| format!("loading {}", spec.display()))?);
            let text = read(&frame)?;
            let y: Vec<f64> = match format {
                FrameFormat::Hex => modulate(&from_text(&text, BitFormat::Hex, spec.n()).context("frame")?),
                FrameFormat::Bin => modulate(&from_text(&text, BitFormat::Bin, spec.n()).context("frame")?),
                FrameFormat::Soft => text
                    .split_whitespace()
                    .enumerate()
                    .map(|(i, t)| t.parse::<f64>().with_context(|| format!("sample {i}: {t:?}")))
                    .collect::<Result<_>>()?,
            };
            if y.len() != spec.n() {
                bail!("frame has {} samples, code length is {}", y.len(), spec.n());
            }
            let sigma2 = noise_variance(esn0);
            let msg = match quant {
                QuantSpec::Float { exact } => decode_with(
                    spec,
                    FloatLlr {
                        exact,
                        ..FloatLlr::default()
                    },
                    tmax,
                    &y,
                    sigma2,
                )?,
                QuantSpec::Fixed {
                    total_bits,
                    frac_bits,
                } => decode_with(spec, FixedPoint::new(total_bits, frac_bits)?, tmax, &y, sigma2)?,
            };
            emit(to_text(&msg, msg_format), out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
