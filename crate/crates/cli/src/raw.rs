//! Raw ternary weight files: `TSARRAW1`, M and K as u32 little-endian, then
//! M*K signed bytes row-major.

use tsar_core::quant::TernaryMatrix;

use crate::error::CliError;

pub const RAW_MAGIC: &[u8; 8] = b"TSARRAW1";
pub const RAW_HEADER_BYTES: usize = 16;

pub fn parse_raw(bytes: &[u8]) -> Result<TernaryMatrix, CliError> {
    let bad = |msg: String| CliError::Config(format!("raw weights: {msg}"));
    if bytes.len() < RAW_HEADER_BYTES {
        return Err(bad(format!(
            "header needs {RAW_HEADER_BYTES} bytes, file has {}",
            bytes.len()
        )));
    }
    if &bytes[..8] != RAW_MAGIC {
        return Err(bad("bad magic, expected TSARRAW1".into()));
    }
    let word = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize;
    let (m, k) = (word(8), word(12));
    if m == 0 || k == 0 {
        return Err(bad(format!("empty weight matrix ({m}x{k})")));
    }
    let body = &bytes[RAW_HEADER_BYTES..];
    let expected = m.checked_mul(k).ok_or_else(|| bad(format!("{m}x{k} overflows")))?;
    if body.len() != expected {
        return Err(bad(format!(
            "expected {expected} weight bytes for {m}x{k}, found {}",
            body.len()
        )));
    }
    let mut values = Vec::with_capacity(expected);
    for (i, &b) in body.iter().enumerate() {
        let v = b as i8;
        if !(-1..=1).contains(&v) {
            return Err(bad(format!(
                "byte {b:#04x} at offset {} is not a ternary weight",
                RAW_HEADER_BYTES + i
            )));
        }
        values.push(v);
    }
    Ok(TernaryMatrix::new(m, k, values, 1.0)?)
}

pub fn write_raw(w: &TernaryMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_HEADER_BYTES + w.values().len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(w.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(w.cols() as u32).to_le_bytes());
    out.extend(w.values().iter().map(|&v| v as u8));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let w = TernaryMatrix::new(2, 3, vec![1, 0, -1, -1, 1, 0], 1.0).unwrap();
        assert_eq!(parse_raw(&write_raw(&w)).unwrap(), w);
    }

    #[test]
    fn bad_byte_names_offset() {
        let w = TernaryMatrix::new(1, 3, vec![1, 0, -1], 1.0).unwrap();
        let mut bytes = write_raw(&w);
        bytes[17] = 0x02;
        let msg = parse_raw(&bytes).unwrap_err().to_string();
        assert!(msg.contains("offset 17"), "{msg}");
    }

    #[test]
    fn empty_and_short_files() {
        let mut empty = RAW_MAGIC.to_vec();
        empty.extend_from_slice(&[0; 8]);
        assert!(parse_raw(&empty).unwrap_err().to_string().contains("empty"));
        assert!(parse_raw(b"TSARRAW1").is_err());
        assert!(parse_raw(b"NOTRAW00\x01\0\0\0\x01\0\0\0\x01").is_err());
    }
}
