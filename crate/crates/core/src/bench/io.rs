//! File formats for replaying benchmark inputs outside this process.
//!
//! * text — plain UTF-8.
//! * RGB raster — an 8-byte header (width, height as little-endian `u32`)
//!   followed by `width * height` 24-bit RGB triples, row-major.
//! * square integer matrix — row-major 64-bit little-endian integers, no
//!   header (the dimension is the square root of the element count).
//! * points — 64-bit little-endian floats, flattened.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

pub fn dump_text(path: &Path, text: &str) -> io::Result<()> {
    std::fs::write(path, text)
}

pub fn load_text(path: &Path) -> io::Result<String> {
    std::fs::read_to_string(path)
}

pub fn dump_rgb(path: &Path, width: u32, height: u32, pixels: &[u8]) -> io::Result<()> {
    assert_eq!(
        pixels.len(),
        width as usize * height as usize * 3,
        "pixel buffer must hold width * height RGB triples"
    );
    let mut f = File::create(path)?;
    f.write_all(&width.to_le_bytes())?;
    f.write_all(&height.to_le_bytes())?;
    f.write_all(pixels)
}

pub fn load_rgb(path: &Path) -> io::Result<(u32, u32, Vec<u8>)> {
    let mut f = File::open(path)?;
    let mut header = [0u8; 8];
    f.read_exact(&mut header)?;
    let width = u32::from_le_bytes(header[0..4].try_into().unwrap());
    let height = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let mut pixels = Vec::new();
    f.read_to_end(&mut pixels)?;
    if pixels.len() != width as usize * height as usize * 3 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!(
                "expected {} RGB bytes for {width}x{height}, found {}",
                width as usize * height as usize * 3,
                pixels.len()
            ),
        ));
    }
    Ok((width, height, pixels))
}

pub fn dump_matrix_i64(path: &Path, elems: &[i64]) -> io::Result<()> {
    let n = (elems.len() as f64).sqrt() as usize;
    assert_eq!(n * n, elems.len(), "matrix must be square");
    let mut f = File::create(path)?;
    for e in elems {
        f.write_all(&e.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_matrix_i64(path: &Path) -> io::Result<Vec<i64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "matrix file length is not a multiple of 8",
        ));
    }
    let elems: Vec<i64> = bytes
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let n = (elems.len() as f64).sqrt() as usize;
    if n * n != elems.len() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{} elements do not form a square matrix", elems.len()),
        ));
    }
    Ok(elems)
}

pub fn dump_f64s(path: &Path, values: &[f64]) -> io::Result<()> {
    let mut f = File::create(path)?;
    for v in values {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_f64s(path: &Path) -> io::Result<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "float file length is not a multiple of 8",
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trips() {
        let dir = std::env::temp_dir().join("mapfold-io-text");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.txt");
        dump_text(&p, "the cat\nsat\n").unwrap();
        assert_eq!(load_text(&p).unwrap(), "the cat\nsat\n");
    }

    #[test]
    fn rgb_round_trips_with_header() {
        let dir = std::env::temp_dir().join("mapfold-io-rgb");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("img.rgb");
        let pixels: Vec<u8> = (0..2 * 3 * 3).map(|i| i as u8).collect();
        dump_rgb(&p, 2, 3, &pixels).unwrap();
        assert_eq!(load_rgb(&p).unwrap(), (2, 3, pixels));
    }

    #[test]
    fn matrix_round_trips() {
        let dir = std::env::temp_dir().join("mapfold-io-mat");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("m.i64");
        let m: Vec<i64> = vec![1, -2, 3, i64::MAX];
        dump_matrix_i64(&p, &m).unwrap();
        assert_eq!(load_matrix_i64(&p).unwrap(), m);
    }

    #[test]
    fn floats_round_trip() {
        let dir = std::env::temp_dir().join("mapfold-io-f64");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("p.f64");
        let v = vec![0.0, -1.5, f64::MAX, 1.0 / 64.0];
        dump_f64s(&p, &v).unwrap();
        assert_eq!(load_f64s(&p).unwrap(), v);
    }

    #[test]
    fn truncated_rgb_is_rejected() {
        let dir = std::env::temp_dir().join("mapfold-io-bad");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.rgb");
        std::fs::write(&p, [4u8, 0, 0, 0, 4, 0, 0, 0, 1, 2, 3]).unwrap();
        assert!(load_rgb(&p).is_err());
    }
}
