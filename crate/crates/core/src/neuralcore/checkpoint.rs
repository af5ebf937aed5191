//! Binary network checkpoints.
//!
//! Byte layout, all integers little-endian:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 8 | magic `CSNETMLP` |
//! | 8 | 4 | version (`u32`, currently 1) |
//! | 12 | 1 | activation tag (0 relu, 1 tanh, 2 sin, 3 sigmoid, 4 shifted sigmoid) |
//! | 13 | 4 | number of dims `d` (`u32`) |
//! | 17 | 4·d | dims `[in, h1, ..., out]` (`u32` each) |
//! | .. | 8·P | parameters as `f64`, per layer `w` row-major (`out × in`) then `b` |
//! | .. | 8 | FNV-1a 64 hash of every preceding byte of this record |

use super::{Activation, Mlp};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CSNETMLP";
pub const CHECKPOINT_VERSION: u32 = 1;

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Appends one checkpoint record for `net` to `out`.
pub fn write_mlp(net: &Mlp, out: &mut Vec<u8>) {
    let start = out.len();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(net.activation().tag());
    let dims = net.dims();
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let mut params = Vec::with_capacity(net.param_count());
    net.write_params(&mut params);
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let sum = fnv1a(&out[start..]);
    out.extend_from_slice(&sum.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::BadCheckpoint("unexpected end of data".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Reads one record from the front of `buf`; returns the network and the
/// number of bytes consumed.
pub fn read_mlp(buf: &[u8]) -> Result<(Mlp, usize)> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::BadCheckpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::BadCheckpoint(format!("unsupported version {version}")));
    }
    let tag = r.take(1)?[0];
    let activation = Activation::from_tag(tag).ok_or_else(|| Error::BadCheckpoint(format!("unknown activation tag {tag}")))?;
    let nd = r.u32()? as usize;
    if !(2..=64).contains(&nd) {
        return Err(Error::BadCheckpoint(format!("implausible layer count {nd}")));
    }
    let dims = (0..nd).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    if dims.iter().any(|&d| d == 0 || d > 1 << 24) {
        return Err(Error::BadCheckpoint(format!("implausible dims {dims:?}")));
    }
    let count: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let params = (0..count).map(|_| r.u64().map(f64::from_bits)).collect::<Result<Vec<_>>>()?;
    let computed = fnv1a(&buf[..r.pos]);
    let stored = r.u64()?;
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let layers = dims
        .windows(2)
        .map(|w| super::Dense { w: ndarray::Array2::zeros((w[1], w[0])), b: ndarray::Array1::zeros(w[1]) })
        .collect();
    let mut net = Mlp::from_layers(layers, activation)?;
    net.read_params(&params);
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::BadCheckpoint("non-finite parameter".into()));
    }
    Ok((net, r.pos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_and_corruption() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::new(&[4, 6, 3], Activation::ShiftedSigmoid, &mut rng).unwrap();
        let mut buf = vec![];
        write_mlp(&net, &mut buf);
        assert_eq!(buf.len(), 8 + 4 + 1 + 4 + 12 + 8 * net.param_count() + 8);
        let (back, used) = read_mlp(&buf).unwrap();
        assert_eq!(back, net);
        assert_eq!(used, buf.len());

        let mut bad = buf.clone();
        bad[40] ^= 1;
        assert!(matches!(read_mlp(&bad), Err(Error::Checksum { .. })));
        assert!(read_mlp(&buf[..buf.len() - 3]).is_err());
        bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_mlp(&bad), Err(Error::BadCheckpoint(_))));
    }
}
