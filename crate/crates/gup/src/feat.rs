//! `FEAT h w c` feature files: an ASCII header line followed by row-major,
//! channel-fastest little-endian `f32` values.

use std::fs;
use std::path::Path;

use gup_core::FeatureMap;

use crate::FormatError;

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMap, FormatError> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::Header("missing FEAT header line".into()))?;
    let line = std::str::from_utf8(&bytes[..nl]).map_err(|_| FormatError::Header("non-ASCII header".into()))?;
    let mut parts = line.split_ascii_whitespace();
    if parts.next() != Some("FEAT") {
        return Err(FormatError::Unsupported("not a FEAT file".into()));
    }
    let mut dim = |name: &str| -> Result<usize, FormatError> {
        let t = parts.next().ok_or_else(|| FormatError::Header(format!("missing {name}")))?;
        t.parse().map_err(|_| FormatError::Header(format!("bad {name}: {t:?}")))
    };
    let (h, w, c) = (dim("height")?, dim("width")?, dim("channels")?);
    if parts.next().is_some() {
        return Err(FormatError::Header("trailing tokens in FEAT header".into()));
    }
    if h == 0 || w == 0 || c == 0 {
        return Err(FormatError::Header("FEAT dimensions must be positive".into()));
    }
    let payload = &bytes[nl + 1..];
    let expected = h.checked_mul(w).and_then(|n| n.checked_mul(c)).and_then(|n| n.checked_mul(4));
    if expected != Some(payload.len()) {
        return Err(FormatError::Payload(format!(
            "header declares {h}x{w}x{c} floats but payload has {} bytes",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| {
            let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if v.is_finite() {
                Ok(f64::from(v))
            } else {
                Err(FormatError::NonFinite)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureMap::new(h, w, c, data)?)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMap, FormatError> {
    decode_features(&fs::read(path)?)
}

pub fn encode_features(map: &FeatureMap) -> Vec<u8> {
    let mut out = format!("FEAT {} {} {}\n", map.height(), map.width(), map.channels()).into_bytes();
    for &v in map.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn save_features(map: &FeatureMap, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, encode_features(map))?;
    Ok(())
}
