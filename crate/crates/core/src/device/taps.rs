use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::transport::Tick;

/// Per-tick recordings at the device's analog input and output planes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalogTaps {
    pub input_trace: Vec<Complex64>,
    pub output_trace: Vec<Complex64>,
}

impl AnalogTaps {
    pub fn input_at(&self, t: Tick) -> Complex64 {
        self.input_trace.get(t as usize).copied().unwrap_or_default()
    }

    pub fn output_at(&self, t: Tick) -> Complex64 {
        self.output_trace.get(t as usize).copied().unwrap_or_default()
    }
}

/// Writes a trace as interleaved little-endian f32 I/Q (complex64).
pub fn write_complex64<W: Write>(mut w: W, trace: &[Complex64]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(trace.len() * 8);
    for s in trace {
        buf.extend_from_slice(&(s.re as f32).to_le_bytes());
        buf.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_complex64<R: Read>(mut r: R) -> io::Result<Vec<Complex64>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() % 8 != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("complex64 stream of {} bytes is not a multiple of 8", buf.len()),
        ));
    }
    Ok(buf
        .chunks_exact(8)
        .map(|c| {
            Complex64::new(
                f32::from_le_bytes(c[..4].try_into().unwrap()) as f64,
                f32::from_le_bytes(c[4..].try_into().unwrap()) as f64,
            )
        })
        .collect())
}
