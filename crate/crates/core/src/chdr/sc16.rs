//! sc16 wire samples: 16-bit signed I then Q, little-endian, 32767 full scale.

use num_complex::Complex64;

use super::CodecError;

pub const BYTES_PER_SAMPLE: usize = 4;
pub const FULL_SCALE: f64 = 32767.0;

/// Quantizes one component, saturating outside [-1, 1]. NaN maps to 0.
#[inline]
pub fn quantize(v: f64) -> i16 {
    (v * FULL_SCALE).round().clamp(-32768.0, 32767.0) as i16
}

#[inline]
pub fn dequantize(q: i16) -> f64 {
    q as f64 / FULL_SCALE
}

pub fn samples_to_wire(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * BYTES_PER_SAMPLE);
    write_samples(samples, &mut out);
    out
}

/// Appends the wire form of `samples` to `out`.
pub fn write_samples(samples: &[Complex64], out: &mut Vec<u8>) {
    for s in samples {
        out.extend_from_slice(&quantize(s.re).to_le_bytes());
        out.extend_from_slice(&quantize(s.im).to_le_bytes());
    }
}

pub fn wire_to_samples(bytes: &[u8]) -> Result<Vec<Complex64>, CodecError> {
    if bytes.len() % BYTES_PER_SAMPLE != 0 {
        return Err(CodecError::OddLength(bytes.len()));
    }
    Ok(bytes
        .chunks_exact(BYTES_PER_SAMPLE)
        .map(|c| {
            Complex64::new(
                dequantize(i16::from_le_bytes([c[0], c[1]])),
                dequantize(i16::from_le_bytes([c[2], c[3]])),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_scale_and_zero() {
        assert_eq!(samples_to_wire(&[Complex64::new(1.0, 0.0)]), vec![0xff, 0x7f, 0, 0]);
        assert_eq!(samples_to_wire(&[Complex64::new(0.0, 0.0)]), vec![0, 0, 0, 0]);
        assert_eq!(samples_to_wire(&[Complex64::new(-1.0, 2.0)]), vec![0x01, 0x80, 0xff, 0x7f]);
        assert_eq!(quantize(-5.0), -32768);
        assert_eq!(quantize(f64::NAN), 0);
    }

    #[test]
    fn odd_wire_length() {
        assert_eq!(wire_to_samples(&[0, 0, 0]), Err(CodecError::OddLength(3)));
        assert!(wire_to_samples(&[]).unwrap().is_empty());
    }

    #[test]
    fn requantizing_wire_values_is_exact() {
        for q in [i16::MIN, -12345, -1, 0, 1, 777, i16::MAX] {
            assert_eq!(quantize(dequantize(q)), q);
        }
    }

    proptest! {
        #[test]
        fn roundtrip_within_one_lsb(re in -1.0f64..=1.0, im in -1.0f64..=1.0) {
            let x = Complex64::new(re, im);
            let y = wire_to_samples(&samples_to_wire(&[x])).unwrap()[0];
            prop_assert!((y.re - re).abs() <= 1.0 / FULL_SCALE);
            prop_assert!((y.im - im).abs() <= 1.0 / FULL_SCALE);
        }

        #[test]
        fn quantize_is_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantize(lo) <= quantize(hi));
        }
    }
}
