//! Small shared helpers: exact percentages, hashing and JSONL I/O.

use std::fmt;
use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// A percentage stored in hundredths of a point (`4618` is 46.18%).
///
/// Ratios are rounded half-up in integer arithmetic, so reports never depend
/// on binary floating-point representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent(i64);

impl Percent {
    pub const ZERO: Percent = Percent(0);

    pub const fn from_hundredths(h: i64) -> Self {
        Percent(h)
    }

    /// `100 * num / den` rounded half-up to two decimals. `None` when `den == 0`.
    pub fn ratio(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        // round(10_000 * num / den), half-up; num <= den in practice but not required
        let n = 10_000u128 * num as u128;
        let d = den as u128;
        Some(Percent(((2 * n + d) / (2 * d)) as i64))
    }

    /// Rounds an arbitrary real percentage half-up to two decimals.
    pub fn from_f64(value: f64) -> Self {
        let scaled = value * 100.0;
        // absorb representation error such as 36.355 -> 3635.4999999
        let nudged = scaled + scaled.signum() * 1e-7;
        let r = if nudged >= 0.0 {
            (nudged + 0.5).floor()
        } else {
            -((-nudged + 0.5).floor())
        };
        Percent(r as i64)
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn complement(self) -> Self {
        Percent(10_000 - self.0)
    }
}

impl std::ops::Sub for Percent {
    type Output = Percent;
    fn sub(self, rhs: Percent) -> Percent {
        Percent(self.0 - rhs.0)
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}%", a / 100, a % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Percent::from_f64(f64::deserialize(d)?))
    }
}

/// Rounds half-up to two decimals (for scores expressed as percentages).
pub fn round2(value: f64) -> f64 {
    Percent::from_f64(value).as_f64()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes one compact JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, rows: &[T]) -> io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn to_jsonl_string<T: Serialize>(rows: &[T]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, rows).expect("in-memory write");
    String::from_utf8(buf).expect("serde_json emits utf-8")
}

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads JSONL, skipping blank lines. Line numbers are 1-based.
pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line: i + 1, source })?,
        );
    }
    Ok(out)
}
