//! `ZTIS1` snapshot files.
//!
//! Layout: one ASCII header line
//!
//! ```text
//! ZTIS1 <width> <height> <torus|free> <time> <master_seed> <stream_id>\n
//! ```
//!
//! followed by `ceil(width * height / 8)` bytes holding the spins in row-major
//! order, site `i` at bit `i % 8` (least significant first) of byte `i / 8`,
//! with 1 meaning +1. Unused trailing bits are zero. `time` is printed in the
//! shortest form that parses back to the same `f64`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, LatticeGeometry, PackedBits, SpinConfig};
use crate::rng::RngSpec;

pub const MAGIC: &str = "ZTIS1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub config: SpinConfig,
    pub time: f64,
    pub rng: RngSpec,
}

impl Snapshot {
    pub fn new(config: SpinConfig, time: f64, rng: RngSpec) -> Self {
        Self { config, time, rng }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.config.geometry();
        let mut out = format!(
            "{MAGIC} {} {} {} {} {} {}\n",
            g.width(),
            g.height(),
            g.boundary(),
            self.time,
            self.rng.master_seed,
            self.rng.stream_id
        )
        .into_bytes();
        let n = g.n_sites();
        let mut body = vec![0u8; n.div_ceil(8)];
        for i in self.config.bits().iter_ones() {
            body[i / 8] |= 1 << (i % 8);
        }
        out.extend_from_slice(&body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Snapshot(msg.to_string());
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing header line"))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not UTF-8"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 7 || fields[0] != MAGIC {
            return Err(bad("header must be 'ZTIS1 width height boundary time seed stream'"));
        }
        let parse_usize = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Snapshot(format!("bad {what} '{s}'")))
        };
        let width = parse_usize(fields[1], "width")?;
        let height = parse_usize(fields[2], "height")?;
        let boundary = match fields[3] {
            "torus" => Boundary::Torus,
            "free" => Boundary::Free,
            other => return Err(Error::Snapshot(format!("bad boundary '{other}'"))),
        };
        let time: f64 = fields[4]
            .parse()
            .map_err(|_| Error::Snapshot(format!("bad time '{}'", fields[4])))?;
        let master_seed: u64 = fields[5]
            .parse()
            .map_err(|_| Error::Snapshot(format!("bad seed '{}'", fields[5])))?;
        let stream_id: u64 = fields[6]
            .parse()
            .map_err(|_| Error::Snapshot(format!("bad stream id '{}'", fields[6])))?;

        let geometry = LatticeGeometry::new(width, height, boundary)?;
        let n = geometry.n_sites();
        let body = &bytes[nl + 1..];
        if body.len() != n.div_ceil(8) {
            return Err(Error::Snapshot(format!(
                "expected {} data bytes, found {}",
                n.div_ceil(8),
                body.len()
            )));
        }
        let mut bits = PackedBits::zeros(n);
        for (bi, &byte) in body.iter().enumerate() {
            for k in 0..8 {
                if byte >> k & 1 == 1 {
                    let i = bi * 8 + k;
                    if i >= n {
                        return Err(bad("nonzero padding bits"));
                    }
                    bits.set(i, true);
                }
            }
        }
        Ok(Self {
            config: SpinConfig::from_bits(geometry, bits),
            time,
            rng: RngSpec::new(master_seed, stream_id),
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::init_random;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = LatticeGeometry::torus(4, 4).unwrap();
        let c = SpinConfig::constant(g, 1);
        let bytes = Snapshot::new(c, 0.5, RngSpec::new(42, 3)).to_bytes();
        let header_len = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(&bytes[..header_len], b"ZTIS1 4 4 torus 0.5 42 3");
        assert_eq!(&bytes[header_len + 1..], &[0xff, 0xff]);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(Snapshot::from_bytes(b"ZTIS2 4 4 torus 0 0 0\n\0\0").is_err());
        assert!(Snapshot::from_bytes(b"ZTIS1 4 4 torus 0 0 0\n\0").is_err());
        assert!(Snapshot::from_bytes(b"ZTIS1 4 4 klein 0 0 0\n\0\0").is_err());
        // 5x5 = 25 sites; bit 25 of the padding set
        assert!(Snapshot::from_bytes(b"ZTIS1 5 5 free 0 0 0\n\0\0\0\x02").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            w in 4usize..20, h in 4usize..20, free in any::<bool>(),
            time in 0.0f64..1e6, seed in any::<u64>(), stream in any::<u64>(),
        ) {
            let b = if free { Boundary::Free } else { Boundary::Torus };
            let g = LatticeGeometry::new(w, h, b).unwrap();
            let c = init_random(g, 0.5, &RngSpec::new(seed, stream)).unwrap();
            let snap = Snapshot::new(c, time, RngSpec::new(seed, stream));
            let bytes = snap.to_bytes();
            let back = Snapshot::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.time.to_bits(), time.to_bits());
            prop_assert_eq!(&back, &snap);
            prop_assert_eq!(back.to_bytes(), bytes);
        }
    }
}
