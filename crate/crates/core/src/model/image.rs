use std::io::Write;
use std::path::Path;

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{param, Error, Result};
use crate::linalg::{norm, rng};

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

/// Parses a binary (P5) PGM with maxval ≤ 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Pgm("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::Pgm("only binary P5 files are supported".into()));
    }
    let mut number = |what: &str| -> Result<usize> {
        token()?
            .parse()
            .map_err(|_| Error::Pgm(format!("invalid {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Pgm(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let len = width * height;
    if bytes.len() < start + len {
        return Err(Error::Pgm("truncated raster".into()));
    }
    Ok(GrayImage {
        width,
        height,
        pixels: bytes[start..start + len].to_vec(),
    })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    parse_pgm(&std::fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "P5\n{} {}\n255\n", image.width, image.height)?;
    f.write_all(&image.pixels)?;
    f.flush()?;
    Ok(())
}

const TEXTURE: f64 = 30.0;

/// Piecewise-smooth test image: smooth shaded regions separated by sharp
/// edges, with mild noise and 8-bit quantization.
pub fn synthetic_image(size: usize, seed: u64) -> GrayImage {
    let mut r = rng(seed, 0);
    let s = size as f64;
    struct Blob {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        rect: bool,
        base: f64,
        gx: f64,
        gy: f64,
    }
    let blobs: Vec<Blob> = (0..12)
        .map(|_| Blob {
            cx: r.random_range(0.0..s),
            cy: r.random_range(0.0..s),
            rx: r.random_range(0.05..0.3) * s,
            ry: r.random_range(0.05..0.3) * s,
            rect: r.random_bool(0.5),
            base: r.random_range(30.0..220.0),
            gx: r.random_range(-60.0..60.0) / s,
            gy: r.random_range(-60.0..60.0) / s,
        })
        .collect();
    // 1/f texture: random plane waves with amplitude inversely proportional to frequency
    let waves: Vec<(f64, f64, f64, f64)> = (0..64)
        .map(|_| {
            let f = r.random_range(1.0..s / 4.0);
            let angle = r.random_range(0.0..std::f64::consts::TAU);
            let phase = r.random_range(0.0..std::f64::consts::TAU);
            let w = std::f64::consts::TAU * f / s;
            (w * angle.cos(), w * angle.sin(), phase, TEXTURE / f)
        })
        .collect();
    let noise = Normal::new(0.0, 2.0).unwrap();
    let mut pixels = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let (x, y) = (col as f64, row as f64);
            let mut v = 120.0 + 40.0 * (x / s) - 30.0 * (y / s);
            for b in &blobs {
                let (dx, dy) = ((x - b.cx) / b.rx, (y - b.cy) / b.ry);
                let inside = if b.rect {
                    dx.abs() <= 1.0 && dy.abs() <= 1.0
                } else {
                    dx * dx + dy * dy <= 1.0
                };
                if inside {
                    v = b.base + b.gx * (x - b.cx) + b.gy * (y - b.cy);
                }
            }
            v += waves.iter().map(|(wx, wy, ph, a)| a * (wx * x + wy * y + ph).cos()).sum::<f64>();
            v += noise.sample(&mut r);
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage {
        width: size,
        height: size,
        pixels,
    }
}

/// `count` random `size × size` patches, row-major, mean removed and scaled
/// to unit norm. Constant patches are skipped.
pub fn extract_patches(
    image: &GrayImage,
    size: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Array1<f64>>> {
    if size == 0 || size > image.width || size > image.height {
        return Err(param(format!(
            "patch size {size} does not fit a {}x{} image",
            image.width, image.height
        )));
    }
    let mut r = rng(seed, 0);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count.max(1) {
            return Err(param("image has too few non-constant patches"));
        }
        let top = r.random_range(0..=image.height - size);
        let left = r.random_range(0..=image.width - size);
        let mut p = Array1::from_shape_fn(size * size, |i| {
            image.get(top + i / size, left + i % size) as f64
        });
        let mean = p.mean().unwrap_or(0.0);
        p -= mean;
        let n = norm(p.view());
        if n > 1e-9 {
            out.push(p / n);
        }
    }
    Ok(out)
}

/// Indices sorted by decreasing magnitude, ties to the lower index.
pub fn energy_order(c: ArrayView1<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..c.len()).collect();
    idx.sort_by(|&a, &b| c[b].abs().total_cmp(&c[a].abs()).then(a.cmp(&b)));
    idx
}

/// Largest-magnitude coefficients whose residual norm ratio
/// `‖c − c_S‖/‖c‖` is closest to `1 − fraction` (the shorter set on ties), in
/// order of decreasing magnitude.
pub fn oracle_energy_subset(c: ArrayView1<f64>, fraction: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(param(format!("energy fraction {fraction} outside [0, 1]")));
    }
    let order = energy_order(c);
    let total = c.dot(&c);
    if total == 0.0 {
        return Ok(Vec::new());
    }
    let target = 1.0 - fraction;
    // residual energies from the tail so that small remainders are exact
    let mut tail = vec![0.0; order.len() + 1];
    for i in (0..order.len()).rev() {
        tail[i] = tail[i + 1] + c[order[i]].powi(2);
    }
    let ratio = |n: usize| (tail[n] / total).sqrt();
    let mut taken = 0;
    while taken < order.len() && ratio(taken) > target {
        taken += 1;
    }
    if taken > 0 && (ratio(taken - 1) - target).abs() <= (ratio(taken) - target).abs() {
        taken -= 1;
    }
    Ok(order[..taken].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = synthetic_image(40, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_pgm(&path, &img).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
    }

    #[test]
    fn pgm_header_comments_and_errors() {
        let bytes = b"P5\n# note\n2 1\n255\n\x01\x02";
        let img = parse_pgm(bytes).unwrap();
        assert_eq!(img.pixels, vec![1, 2]);
        assert!(parse_pgm(b"P2\n2 1\n255\n1 2").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x01").is_err());
    }

    #[test]
    fn patches_are_centered_and_normalized() {
        let img = synthetic_image(64, 2);
        for p in extract_patches(&img, 32, 10, 0).unwrap() {
            assert!(p.sum().abs() < 1e-9);
            assert!((norm(p.view()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_subset_is_closest_prefix() {
        // residual ratios by prefix length: 1, .387, .235, .1146, .0512, 0
        let c = Array1::from(vec![0.1, -0.9, 0.3, 0.05, 0.2]);
        assert_eq!(oracle_energy_subset(c.view(), 0.9).unwrap(), vec![1, 2, 4]);
        assert_eq!(oracle_energy_subset(c.view(), 0.95).unwrap(), vec![1, 2, 4, 0]);
        assert_eq!(oracle_energy_subset(c.view(), 1.0).unwrap(), vec![1, 2, 4, 0, 3]);
        assert!(oracle_energy_subset(c.view(), 0.0).unwrap().is_empty());
        assert!(oracle_energy_subset(c.view(), 1.5).is_err());
    }
}
