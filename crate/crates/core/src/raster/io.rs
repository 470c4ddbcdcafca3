//! Mask file formats: binary PGM (P5, maxval 255) and the RGF1 float grid.

use std::fs;
use std::path::Path;

use super::{GeoTransform, GridKind, Mask, RasterGrid};
use crate::error::{Error, Result};

const RGF_MAGIC: &[u8; 4] = b"RGF1";

fn data_err(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}

/// Reads a P5 PGM. Probability grids map `v / 255`; binary grids set `v >= 128`.
pub fn read_pgm(bytes: &[u8], kind: GridKind, transform: GeoTransform) -> Result<RasterGrid> {
    let mut pos = 0usize;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(data_err("truncated PGM header"));
        }
        fields
            .push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| data_err("bad PGM header"))?);
    }
    if fields[0] != "P5" {
        return Err(data_err(format!("unsupported PGM magic {:?}", fields[0])));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| data_err(format!("bad PGM {what} {s:?}")))
    };
    let width = parse(fields[1], "width")?;
    let height = parse(fields[2], "height")?;
    let maxval = parse(fields[3], "maxval")?;
    if maxval != 255 {
        return Err(data_err(format!(
            "PGM maxval {maxval} unsupported (need 255)"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width * height;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| data_err(format!("PGM raster truncated: need {n} bytes")))?;
    let values = match kind {
        GridKind::Probability => raster.iter().map(|&v| f32::from(v) / 255.0).collect(),
        GridKind::Binary => raster
            .iter()
            .map(|&v| f32::from(u8::from(v >= 128)))
            .collect(),
    };
    RasterGrid::new(width, height, values, transform, kind)
}

pub fn write_pgm(grid: &RasterGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    out.extend(grid.values().iter().map(|&v| match grid.kind() {
        GridKind::Binary => {
            if v != 0.0 {
                255
            } else {
                0
            }
        }
        GridKind::Probability => (v * 255.0).round().clamp(0.0, 255.0) as u8,
    }));
    out
}

pub fn write_mask_pgm(mask: &Mask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend(mask.data.iter().map(|&v| if v != 0 { 255u8 } else { 0 }));
    out
}

/// Reads an RGF1 grid: magic, LE u32 width, LE u32 height, LE f32 values.
pub fn read_rgf(bytes: &[u8], kind: GridKind, transform: GeoTransform) -> Result<RasterGrid> {
    if bytes.len() < 12 || &bytes[..4] != RGF_MAGIC {
        return Err(data_err("missing RGF1 magic"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let n = width * height;
    let body = &bytes[12..];
    if body.len() != 4 * n {
        return Err(data_err(format!(
            "RGF1 {width}x{height} needs {} value bytes, found {}",
            4 * n,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    RasterGrid::new(width, height, values, transform, kind)
}

pub fn write_rgf(grid: &RasterGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * grid.values().len());
    out.extend_from_slice(RGF_MAGIC);
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    for v in grid.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Reads a `.pgm` or `.rgf` file, picking up a `.wld` sidecar when present.
pub fn read_grid_file(path: &Path, kind: GridKind, fallback: GeoTransform) -> Result<RasterGrid> {
    let bytes = fs::read(path)?;
    let wld = super::world_file_path(path);
    let transform = if wld.exists() {
        GeoTransform::read_world_file(&wld)?
    } else {
        fallback
    };
    if bytes.starts_with(RGF_MAGIC) {
        read_rgf(&bytes, kind, transform)
    } else {
        read_pgm(&bytes, kind, transform)
    }
}

/// Writes by extension (`.rgf` or PGM otherwise) plus a `.wld` sidecar.
pub fn write_grid_file(path: &Path, grid: &RasterGrid) -> Result<()> {
    let bytes = match path.extension().and_then(|e| e.to_str()) {
        Some("rgf") => write_rgf(grid),
        _ => write_pgm(grid),
    };
    fs::write(path, bytes)?;
    grid.transform()
        .write_world_file(&super::world_file_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_kinds() {
        let bytes = b"P5\n# comment\n3 1\n255\n\x00\x80\xff".to_vec();
        let p = read_pgm(&bytes, GridKind::Probability, GeoTransform::identity()).unwrap();
        assert_eq!(p.values(), &[0.0, 128.0 / 255.0, 1.0]);
        let b = read_pgm(&bytes, GridKind::Binary, GeoTransform::identity()).unwrap();
        assert_eq!(b.values(), &[0.0, 1.0, 1.0]);
        assert_eq!(write_pgm(&b), b"P5\n3 1\n255\n\x00\xff\xff".to_vec());
    }

    #[test]
    fn pgm_errors() {
        assert!(read_pgm(
            b"P2\n1 1\n255\n0",
            GridKind::Binary,
            GeoTransform::identity()
        )
        .is_err());
        assert!(read_pgm(
            b"P5\n2 2\n255\n\x00",
            GridKind::Binary,
            GeoTransform::identity()
        )
        .is_err());
        assert!(read_pgm(
            b"P5\n1 1\n65535\n\x00\x00",
            GridKind::Binary,
            GeoTransform::identity()
        )
        .is_err());
    }

    #[test]
    fn rgf_layout_is_exact() {
        let g = RasterGrid::new(
            2,
            1,
            vec![0.25, 1.0],
            GeoTransform::identity(),
            GridKind::Probability,
        )
        .unwrap();
        let bytes = write_rgf(&g);
        let mut expected = b"RGF1".to_vec();
        expected.extend_from_slice(&[2, 0, 0, 0, 1, 0, 0, 0]);
        expected.extend_from_slice(&0.25f32.to_le_bytes());
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        assert_eq!(bytes, expected);
        assert_eq!(
            read_rgf(&bytes, GridKind::Probability, GeoTransform::identity()).unwrap(),
            g
        );
        assert!(read_rgf(
            &bytes[..15],
            GridKind::Probability,
            GeoTransform::identity()
        )
        .is_err());
    }

    #[test]
    fn files_carry_world_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let t = GeoTransform::north_up(500_000.0, 4_000_000.0, 0.3).unwrap();
        let g = RasterGrid::new(2, 2, vec![0.0, 0.5, 0.75, 1.0], t, GridKind::Probability).unwrap();
        let path = dir.path().join("m.rgf");
        write_grid_file(&path, &g).unwrap();
        let back = read_grid_file(&path, GridKind::Probability, GeoTransform::identity()).unwrap();
        assert_eq!(back, g);
    }
}
