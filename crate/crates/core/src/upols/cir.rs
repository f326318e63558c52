//! CIR files.
//!
//! Text form: a `cir v1 <L> <n_out> <n_in>` header line, then
//! `L · n_out · n_in` rows of `re im`, ordered by output, input, tap.
//! Blank lines and lines starting with `#` are ignored.
//!
//! Anything that does not start with the text header is read as raw
//! interleaved little-endian f32 I/Q and taken as a single channel.

use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::device::read_complex64;

#[derive(Debug, Error, PartialEq)]
pub enum CirError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("expected {expected} taps, found {found}")]
    Count { expected: usize, found: usize },
    #[error("binary CIR: {0}")]
    Binary(String),
    #[error("CIR must have at least one tap and one port")]
    Empty,
}

/// `taps[out][in]` is the impulse response from input `in` to output `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub taps: Vec<Vec<Vec<Complex64>>>,
}

impl ChannelMatrix {
    pub fn siso(h: Vec<Complex64>) -> Self {
        ChannelMatrix { taps: vec![vec![h]] }
    }

    pub fn n_out(&self) -> usize {
        self.taps.len()
    }

    pub fn n_in(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.taps.iter().flatten().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, out: usize, input: usize) -> &[Complex64] {
        &self.taps[out][input]
    }

    /// Copy with every channel cast to `T`.
    pub fn to_precision<T: super::Real>(&self) -> Vec<Vec<Vec<num_complex::Complex<T>>>> {
        self.taps
            .iter()
            .map(|row| row.iter().map(|h| h.iter().map(|c| super::from_c64(*c)).collect()).collect())
            .collect()
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, CirError> {
        if bytes.starts_with(b"cir v1") {
            let text = std::str::from_utf8(bytes).map_err(|e| CirError::Parse { line: 1, msg: e.to_string() })?;
            Self::parse_text(text)
        } else {
            let h = read_complex64(bytes).map_err(|e| CirError::Binary(e.to_string()))?;
            if h.is_empty() {
                return Err(CirError::Empty);
            }
            Ok(Self::siso(h))
        }
    }

    pub fn parse_text(text: &str) -> Result<Self, CirError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (n, header) = lines.next().ok_or(CirError::Empty)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "cir" || fields[1] != "v1" {
            return Err(CirError::Parse { line: n, msg: format!("bad header {header:?}") });
        }
        let dim = |s: &str| {
            s.parse::<usize>().map_err(|e| CirError::Parse { line: n, msg: format!("{s:?}: {e}") })
        };
        let (l, n_out, n_in) = (dim(fields[2])?, dim(fields[3])?, dim(fields[4])?);
        if l == 0 || n_out == 0 || n_in == 0 {
            return Err(CirError::Empty);
        }

        let mut flat = Vec::with_capacity(l * n_out * n_in);
        for (n, line) in lines {
            let mut it = line.split_whitespace();
            let mut num = || -> Result<f64, CirError> {
                let s = it.next().ok_or(CirError::Parse { line: n, msg: "expected `re im`".into() })?;
                s.parse().map_err(|e| CirError::Parse { line: n, msg: format!("{s:?}: {e}") })
            };
            let c = Complex64::new(num()?, num()?);
            if it.next().is_some() {
                return Err(CirError::Parse { line: n, msg: "trailing fields".into() });
            }
            flat.push(c);
        }
        if flat.len() != l * n_out * n_in {
            return Err(CirError::Count { expected: l * n_out * n_in, found: flat.len() });
        }
        let mut chunks = flat.chunks(l);
        let taps = (0..n_out)
            .map(|_| (0..n_in).map(|_| chunks.next().unwrap().to_vec()).collect())
            .collect();
        Ok(ChannelMatrix { taps })
    }

    /// Text form. Channels shorter than the longest are zero-padded.
    pub fn to_text(&self) -> String {
        let l = self.len();
        let mut s = format!("cir v1 {l} {} {}\n", self.n_out(), self.n_in());
        for h in self.taps.iter().flatten() {
            for k in 0..l {
                let c = h.get(k).copied().unwrap_or_default();
                writeln!(s, "{:e} {:e}", c.re, c.im).unwrap();
            }
        }
        s
    }
}
