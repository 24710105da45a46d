//! Text encodings of bit vectors: hex (MSB first, zero padded to whole
//! bytes) and plain `0`/`1` strings.

use anyhow::{bail, Context, Result};

use crate::BitFormat;

pub fn to_text(bits: &[u8], format: BitFormat) -> String {
    match format {
        BitFormat::Bin => bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect(),
        BitFormat::Hex => {
            let mut bytes = vec![0u8; bits.len().div_ceil(8)];
            for (i, &b) in bits.iter().enumerate() {
                bytes[i / 8] |= (b & 1) << (7 - i % 8);
            }
            hex::encode(bytes)
        }
    }
}

/// Parses exactly `len` bits; whitespace is ignored.
pub fn from_text(text: &str, format: BitFormat, len: usize) -> Result<Vec<u8>> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    match format {
        BitFormat::Bin => {
            if compact.len() != len {
                bail!("expected {len} bits, found {}", compact.len());
            }
            compact
                .chars()
                .enumerate()
                .map(|(i, c)| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => bail!("character {i}: {other:?} is not 0 or 1"),
                })
                .collect()
        }
        BitFormat::Hex => {
            let bytes = hex::decode(&compact).context("invalid hex")?;
            if bytes.len() != len.div_ceil(8) {
                bail!("expected {} hex bytes for {len} bits, found {}", len.div_ceil(8), bytes.len());
            }
            let bits: Vec<u8> = (0..bytes.len() * 8).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect();
            if bits[len..].iter().any(|&b| b != 0) {
                bail!("padding bits after bit {len} must be zero");
            }
            Ok(bits[..len].to_vec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip_with_padding() {
        let bits = vec![1, 0, 1, 1, 0, 0, 0, 0, 1, 1];
        let text = to_text(&bits, BitFormat::Hex);
        assert_eq!(text, "b0c0");
        assert_eq!(from_text(&text, BitFormat::Hex, 10).unwrap(), bits);
        assert!(from_text("b0c1", BitFormat::Hex, 10).is_err());
        assert!(from_text("b0", BitFormat::Hex, 10).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let bits = vec![0, 1, 1];
        assert_eq!(to_text(&bits, BitFormat::Bin), "011");
        assert_eq!(from_text(" 0 1\n1 ", BitFormat::Bin, 3).unwrap(), bits);
        assert!(from_text("012", BitFormat::Bin, 3).is_err());
        assert!(from_text("01", BitFormat::Bin, 3).is_err());
    }
}
