//! Flat binary container for field snapshots.
//!
//! Layout, all little endian:
//!
//! ```text
//! magic      8 bytes   b"VXLFIELD"
//! version    u32       1
//! kind       u32       0 = lattice, 1 = sphere
//! dims       3 × u64   lattice: (nx, ny, nz); sphere: (nθ, nφ, 1)
//! spacing    3 × f64   lattice: (hx, hy, hz); sphere: (Δθ, Δφ, R)
//! origin     3 × f64   lattice: corner node; sphere: grid pole (unit vector)
//! values     n × (f64 re, f64 im), first index fastest
//! ```

use super::{GeometryError, Lattice, SphereGrid, Stencil, Vec3, VectorField};
use crate::C64;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"VXLFIELD";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Lattice,
    Sphere,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldHeader {
    pub kind: GridKind,
    pub dims: [u64; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl FieldHeader {
    pub fn for_lattice(lat: &Lattice) -> Self {
        let d = lat.dims();
        FieldHeader {
            kind: GridKind::Lattice,
            dims: [d[0] as u64, d[1] as u64, d[2] as u64],
            spacing: lat.spacing(),
            origin: lat.origin(),
        }
    }

    pub fn for_sphere(g: &SphereGrid) -> Self {
        FieldHeader {
            kind: GridKind::Sphere,
            dims: [g.n_theta() as u64, g.n_phi() as u64, 1],
            spacing: [g.dtheta(), g.dphi(), g.radius()],
            origin: g.frame().cols[2],
        }
    }

    pub fn len(&self) -> usize {
        (self.dims[0] * self.dims[1] * self.dims[2]) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn io_err(e: std::io::Error) -> GeometryError {
    GeometryError::Io(e.to_string())
}

pub fn write_field(path: &Path, header: &FieldHeader, u: &[C64]) -> Result<(), GeometryError> {
    if u.len() != header.len() {
        return Err(GeometryError::LengthMismatch {
            got: u.len(),
            expected: header.len(),
        });
    }
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let kind: u32 = match header.kind {
        GridKind::Lattice => 0,
        GridKind::Sphere => 1,
    };
    let mut buf = Vec::with_capacity(8 + 8 + 72 + 16 * u.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&kind.to_le_bytes());
    for d in header.dims {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for x in header.spacing.iter().chain(header.origin.iter()) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for z in u {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn read_field(path: &Path) -> Result<(FieldHeader, VectorField), GeometryError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err)?;
    let bad = |m: &str| GeometryError::Io(format!("{}: {m}", path.display()));
    if bytes.len() < 88 || &bytes[..8] != MAGIC {
        return Err(bad("not a field snapshot"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(8) != VERSION {
        return Err(bad("unsupported version"));
    }
    let kind = match u32_at(12) {
        0 => GridKind::Lattice,
        1 => GridKind::Sphere,
        _ => return Err(bad("unknown grid kind")),
    };
    let dims = [u64_at(16), u64_at(24), u64_at(32)];
    let spacing = [f64_at(40), f64_at(48), f64_at(56)];
    let origin = [f64_at(64), f64_at(72), f64_at(80)];
    let header = FieldHeader {
        kind,
        dims,
        spacing,
        origin,
    };
    let n = header.len();
    if bytes.len() != 88 + 16 * n {
        return Err(GeometryError::LengthMismatch {
            got: (bytes.len().saturating_sub(88)) / 16,
            expected: n,
        });
    }
    let values = (0..n)
        .map(|i| C64::new(f64_at(88 + 16 * i), f64_at(96 + 16 * i)))
        .collect();
    Ok((header, VectorField(values)))
}

/// Plain-text snapshot with columns `x,y,z,re,im`, one row per active node.
pub fn write_field_csv<S: Stencil>(path: &Path, grid: &S, u: &[C64]) -> Result<(), GeometryError> {
    if u.len() != grid.len() {
        return Err(GeometryError::LengthMismatch {
            got: u.len(),
            expected: grid.len(),
        });
    }
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "x,y,z,re,im").map_err(io_err)?;
    for (i, z) in u.iter().enumerate() {
        if !grid.is_active(i) {
            continue;
        }
        let p: Vec3 = grid.node_position(i);
        writeln!(w, "{},{},{},{},{}", p[0], p[1], p[2], z.re, z.im).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lat = Lattice::disc(1.0, 0.25).unwrap();
        let u = lat.field_from_fn(|p| C64::new(p[0], -p[1]));
        let path = dir.path().join("u.bin");
        let h = FieldHeader::for_lattice(&lat);
        write_field(&path, &h, &u).unwrap();
        let (h2, v) = read_field(&path).unwrap();
        assert_eq!(h, h2);
        assert_eq!(u, v);
    }

    #[test]
    fn length_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = SphereGrid::full(1.0, 4, 8).unwrap();
        let h = FieldHeader::for_sphere(&g);
        let err = write_field(&dir.path().join("x"), &h, &[C64::new(0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, GeometryError::LengthMismatch { .. }));
    }
}
