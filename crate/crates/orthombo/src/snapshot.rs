//! Binary field snapshots (`MBOF`, version 1, little-endian).
//!
//! Layout: magic `MBOF`, `u32` version, `u32` n, `u8` flavor (0 grid,
//! 1 cloud). A grid continues with `u32` d, d × `u64` sizes and d × `f64`
//! extents; a cloud with a `u64` point count and, per point, three `f64`
//! coordinates and an `f64` weight. Then n² `f64` entries per point in
//! row-major order.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::field::{Cloud, GridSpec, Layout, MatrixField};
use crate::matgeom::SmallMatrix;
use crate::{Error, Real, Result};

pub const MAGIC: &[u8; 4] = b"MBOF";
pub const VERSION: u32 = 1;

pub fn write_snapshot<T: Real, W: Write>(f: &MatrixField<T>, mut w: W) -> Result<()> {
    let n = f.n();
    let mut buf = Vec::with_capacity(32 + f.len() * (n * n + 4) * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    match f.layout().as_ref() {
        Layout::Grid(g) => {
            buf.push(0);
            buf.extend_from_slice(&(g.d() as u32).to_le_bytes());
            for &s in g.sizes() {
                buf.extend_from_slice(&(s as u64).to_le_bytes());
            }
            for &e in g.extent() {
                buf.extend_from_slice(&e.as_f64().to_le_bytes());
            }
        }
        Layout::Cloud(c) => {
            buf.push(1);
            buf.extend_from_slice(&(c.points.len() as u64).to_le_bytes());
            for (p, w) in c.points.iter().zip(&c.weights) {
                for x in p.iter().chain(std::iter::once(w)) {
                    buf.extend_from_slice(&x.as_f64().to_le_bytes());
                }
            }
        }
    }
    for m in f.data() {
        for k in 0..n * n {
            buf.extend_from_slice(&m.entry(k).as_f64().to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn save_snapshot<T: Real>(f: &MatrixField<T>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(f, std::io::BufWriter::new(file))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let x = f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes"));
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::Format(format!("non-finite {what}")))
        }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Parses a snapshot. Orthogonality is not checked here.
pub fn parse_snapshot(bytes: &[u8]) -> Result<MatrixField<f64>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = c.u32("n")? as usize;
    if !(1..=3).contains(&n) {
        return Err(Error::Format(format!("matrix dimension {n}")));
    }
    let per_point = |rest: usize| rest.checked_div(8 * n * n).unwrap_or(0);
    let layout = match c.u8("flavor")? {
        0 => {
            let d = c.u32("dimension")? as usize;
            if !(1..=3).contains(&d) {
                return Err(Error::Format(format!("grid dimension {d}")));
            }
            let sizes = (0..d)
                .map(|_| c.u64("grid size").map(|s| s as usize))
                .collect::<Result<Vec<_>>>()?;
            let extent = (0..d).map(|_| c.f64("grid extent")).collect::<Result<Vec<_>>>()?;
            let g = GridSpec::new(sizes, extent).map_err(|e| Error::Format(e.to_string()))?;
            if per_point(c.remaining()) < g.len() {
                return Err(Error::Format("truncated matrix data".into()));
            }
            Layout::Grid(g)
        }
        1 => {
            let count = c.u64("point count")? as usize;
            if c.remaining() / 32 < count {
                return Err(Error::Format("truncated point data".into()));
            }
            let mut points = Vec::with_capacity(count);
            let mut weights = Vec::with_capacity(count);
            for _ in 0..count {
                points.push([c.f64("coordinate")?, c.f64("coordinate")?, c.f64("coordinate")?]);
                weights.push(c.f64("weight")?);
            }
            Layout::Cloud(Cloud { points, weights })
        }
        other => return Err(Error::Format(format!("unknown flavor {other}"))),
    };
    let mut data = Vec::with_capacity(layout.len());
    let mut entries = vec![0.0; n * n];
    for _ in 0..layout.len() {
        for e in entries.iter_mut() {
            *e = c.f64("matrix entry")?;
        }
        data.push(SmallMatrix::from_rows(n, &entries)?);
    }
    if c.remaining() != 0 {
        return Err(Error::Format(format!("{} trailing bytes", c.remaining())));
    }
    MatrixField::new(Arc::new(layout), n, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<MatrixField<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse_snapshot(&bytes)
}

pub fn load_snapshot(path: &Path) -> Result<MatrixField<f64>> {
    parse_snapshot(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(a: f64) -> SmallMatrix<f64> {
        let (s, c) = a.sin_cos();
        SmallMatrix::from_rows(2, &[c, -s, s, c]).unwrap()
    }

    fn grid_field() -> MatrixField<f64> {
        let l = Arc::new(Layout::Grid(GridSpec::unit_torus(8).unwrap()));
        MatrixField::from_fn(l, 2, |p, _| rot(3.0 * p[0] + p[1])).unwrap()
    }

    fn bytes(f: &MatrixField<f64>) -> Vec<u8> {
        let mut b = Vec::new();
        write_snapshot(f, &mut b).unwrap();
        b
    }

    #[test]
    fn header_layout_is_exact() {
        let f = grid_field();
        let b = bytes(&f);
        assert_eq!(&b[..4], b"MBOF");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &2u32.to_le_bytes());
        assert_eq!(b[12], 0);
        assert_eq!(&b[13..17], &2u32.to_le_bytes());
        assert_eq!(&b[17..25], &8u64.to_le_bytes());
        assert_eq!(&b[33..41], &1.0f64.to_le_bytes());
        assert_eq!(b.len(), 17 + 2 * 16 + 64 * 4 * 8);
        let first = f.data()[0].entry(0);
        assert_eq!(&b[49..57], &first.to_le_bytes());
    }

    #[test]
    fn grid_round_trip() {
        let f = grid_field();
        assert_eq!(parse_snapshot(&bytes(&f)).unwrap(), f);
    }

    #[test]
    fn cloud_round_trip() {
        let l = Arc::new(Layout::Cloud(Cloud {
            points: vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]],
            weights: vec![0.5, 0.25, 2.0],
        }));
        let f = MatrixField::constant(l, SmallMatrix::reflector(3));
        let b = bytes(&f);
        assert_eq!(b.len(), 13 + 8 + 3 * 32 + 3 * 72);
        assert_eq!(parse_snapshot(&b).unwrap(), f);
    }

    #[test]
    fn f32_fields_widen() {
        let l = Arc::new(Layout::Grid(GridSpec::<f32>::unit_torus(8).unwrap()));
        let f = MatrixField::constant(l, SmallMatrix::<f32>::identity(2));
        let mut b = Vec::new();
        write_snapshot(&f, &mut b).unwrap();
        let g = parse_snapshot(&b).unwrap();
        assert_eq!(g.data()[5], SmallMatrix::identity(2));
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let good = bytes(&grid_field());
        let mut b = good.clone();
        b[0] = b'X';
        assert!(matches!(parse_snapshot(&b), Err(Error::Format(_))));
        let mut b = good.clone();
        b[4] = 2;
        assert!(parse_snapshot(&b).is_err());
        let mut b = good.clone();
        b[12] = 7;
        assert!(parse_snapshot(&b).is_err());
        assert!(parse_snapshot(&good[..good.len() - 3]).is_err());
        let mut b = good.clone();
        b.push(0);
        assert!(parse_snapshot(&b).is_err());
        let mut b = good;
        b[41..49].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(parse_snapshot(&b).is_err());
        assert!(parse_snapshot(b"MB").is_err());
    }
}
