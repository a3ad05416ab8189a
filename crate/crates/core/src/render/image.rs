use std::io::{self, Write};

use crate::error::{Error, Result};

/// RGB raster with channels in `[0, 1]`, row-major from the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image { width, height, data: vec![0.0; width * height * 3] }
    }

    /// Builds an image from interleaved RGB values, clamping into `[0, 1]`.
    pub fn from_rgb(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::dims(width * height * 3, data.len()));
        }
        let data = data.into_iter().map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }).collect();
        Ok(Image { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Image { width, height, data: vec![value.clamp(0.0, 1.0); width * height * 3] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Interleaved RGB values.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        for c in 0..3 {
            self.data[i + c] = rgb[c].clamp(0.0, 1.0);
        }
    }

    /// Channel `c` as a row-major plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    /// 8-bit quantization, `round(255·v)`.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v * 255.0).round() as u8).collect()
    }

    pub fn to_rgba8(&self) -> Vec<u8> {
        self.to_rgb8()
            .chunks_exact(3)
            .flat_map(|p| [p[0], p[1], p[2], 255])
            .collect()
    }

    /// Binary PPM (P6, maxval 255).
    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.to_rgb8())
    }

    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.data.len() + 20);
        self.write_ppm(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// Parses a binary P6 file with maxval 255.
    pub fn from_ppm_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidConfig(format!("bad PPM: {msg}"));
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
        }
        if fields[0] != "P6" {
            return Err(bad("only P6 is supported"));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("non-numeric header field"));
        let (width, height, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
        if maxval != 255 {
            return Err(bad("maxval must be 255"));
        }
        let body = &bytes[pos + 1..];
        if body.len() != width * height * 3 {
            return Err(bad("pixel data length does not match header"));
        }
        let data = body.iter().map(|&b| b as f64 / 255.0).collect();
        Ok(Image { width, height, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_layout() {
        let mut img = Image::new(2, 1);
        img.set_pixel(0, 0, [1.0, 0.0, 0.5]);
        img.set_pixel(1, 0, [0.0, 2.0, -1.0]);
        let bytes = img.to_ppm_bytes();
        assert_eq!(&bytes[..11], b"P6\n2 1\n255\n");
        assert_eq!(&bytes[11..], &[255, 0, 128, 0, 255, 0]);
        let back = Image::from_ppm_bytes(&bytes).unwrap();
        assert_eq!(back.to_rgb8(), img.to_rgb8());
        assert!(Image::from_ppm_bytes(b"P3\n1 1\n255\n").is_err());
    }

    #[test]
    fn channel_planes() {
        let img = Image::from_rgb(2, 1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_eq!(img.channel(1), vec![0.2, 0.5]);
        assert!(Image::from_rgb(2, 2, vec![0.0; 3]).is_err());
    }
}
