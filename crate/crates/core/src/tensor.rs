//! Raw tensor container shared by dataset items, heatmaps and geo grids.
//!
//! Layout (before zlib compression): magic `GSTN`, then `W`, `H`, `C` as
//! little-endian `u32`, a one-byte dtype code, then `W*H*C` little-endian
//! values in row-major `(row, col, channel)` order.

use std::io::{Read, Write};
use std::path::Path;

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GSTN";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    U8 = 0,
    F32 = 1,
    F64 = 2,
}

impl DType {
    fn size(self) -> usize {
        match self {
            DType::U8 => 1,
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(DType::U8),
            1 => Ok(DType::F32),
            2 => Ok(DType::F64),
            other => Err(Error::Format(format!("unknown dtype code {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    U8(Vec<u8>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub data: TensorData,
}

impl Tensor {
    pub fn new(width: u32, height: u32, channels: u32, data: TensorData) -> Result<Self> {
        let expected = width as usize * height as usize * channels as usize;
        let got = match &data {
            TensorData::U8(v) => v.len(),
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        };
        if expected != got {
            return Err(Error::InputShapeMismatch {
                expected: format!("{width}x{height}x{channels} = {expected} values"),
                got: format!("{got} values"),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn dtype(&self) -> DType {
        match self.data {
            TensorData::U8(_) => DType::U8,
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.width as usize * self.height as usize * self.channels as usize;
        let mut raw = Vec::with_capacity(17 + n * self.dtype().size());
        raw.extend_from_slice(MAGIC);
        raw.extend_from_slice(&self.width.to_le_bytes());
        raw.extend_from_slice(&self.height.to_le_bytes());
        raw.extend_from_slice(&self.channels.to_le_bytes());
        raw.push(self.dtype() as u8);
        match &self.data {
            TensorData::U8(v) => raw.extend_from_slice(v),
            TensorData::F32(v) => v
                .iter()
                .for_each(|x| raw.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v
                .iter()
                .for_each(|x| raw.extend_from_slice(&x.to_le_bytes())),
        }
        raw
    }

    pub fn from_bytes(raw: &[u8]) -> Result<Self> {
        if raw.len() < 17 || &raw[..4] != MAGIC {
            return Err(Error::Format("missing tensor header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(raw[i..i + 4].try_into().unwrap());
        let (width, height, channels) = (word(4), word(8), word(12));
        let dtype = DType::from_code(raw[16])?;
        let n = width as usize * height as usize * channels as usize;
        let body = &raw[17..];
        if body.len() != n * dtype.size() {
            return Err(Error::Format(format!(
                "tensor body has {} bytes, header implies {}",
                body.len(),
                n * dtype.size()
            )));
        }
        let data = match dtype {
            DType::U8 => TensorData::U8(body.to_vec()),
            DType::F32 => TensorData::F32(
                body.chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            ),
            DType::F64 => TensorData::F64(
                body.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            ),
        };
        Tensor::new(width, height, channels, data)
    }

    /// Zlib-compressed encoding, deterministic for identical tensors.
    pub fn to_compressed(&self) -> Result<Vec<u8>> {
        let mut enc = ZlibEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&self.to_bytes())?;
        Ok(enc.finish()?)
    }

    pub fn from_compressed(bytes: &[u8]) -> Result<Self> {
        let mut raw = Vec::new();
        ZlibDecoder::new(bytes).read_to_end(&mut raw)?;
        Self::from_bytes(&raw)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_compressed()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_compressed(&std::fs::read(path)?)
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            TensorData::F32(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match &self.data {
            TensorData::F64(v) => Some(v),
            _ => None,
        }
    }
}
