//! Dense multichannel float maps and their on-disk format.
//!
//! File layout: one line of JSON header terminated by `\n`, then
//! `channels * height * width` little-endian `f32` values in channel-major
//! (CHW) order. The header is
//! `{"format":"cellbench-dense","version":1,"height":H,"width":W,"channels":C,"dtype":"float32","layout":"chw"}`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DENSE_FORMAT: &str = "cellbench-dense";
pub const DENSE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl DenseMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidDimensions { height, width });
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    /// Stacks equally sized single-channel planes.
    pub fn from_planes(height: usize, width: usize, planes: &[&[f32]]) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * planes.len());
        for p in planes {
            if p.len() != height * width {
                return Err(Error::BufferSize {
                    expected: height * width,
                    actual: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Self::new(height, width, planes.len(), data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn plane(&self, channel: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f32] {
        let n = self.height * self.width;
        &mut self.data[channel * n..(channel + 1) * n]
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[(channel * self.height + row) * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f32) {
        self.data[(channel * self.height + row) * self.width + col] = value;
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let header = DenseHeader {
            format: DENSE_FORMAT.into(),
            version: DENSE_VERSION,
            height: self.height,
            width: self.width,
            channels: self.channels,
            dtype: "float32".into(),
            layout: "chw".into(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)
            .map_err(|e| Error::DenseFormat(e.to_string()))?;
        let header: DenseHeader = serde_json::from_slice(&line)
            .map_err(|e| Error::DenseFormat(format!("bad header: {e}")))?;
        if header.format != DENSE_FORMAT || header.dtype != "float32" || header.layout != "chw" {
            return Err(Error::DenseFormat(format!(
                "unsupported format {}/{}/{}",
                header.format, header.dtype, header.layout
            )));
        }
        if header.version != DENSE_VERSION {
            return Err(Error::DenseFormat(format!("unsupported version {}", header.version)));
        }
        let n = header.height * header.width * header.channels;
        let mut bytes = Vec::with_capacity(n * 4);
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::DenseFormat(e.to_string()))?;
        if bytes.len() != n * 4 {
            return Err(Error::DenseFormat(format!(
                "payload has {} bytes, header implies {}",
                bytes.len(),
                n * 4
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Self::new(header.height, header.width, header.channels, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(f)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DenseHeader {
    format: String,
    version: u32,
    height: usize,
    width: usize,
    channels: usize,
    dtype: String,
    layout: String,
}
