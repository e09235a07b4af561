//! Checkpoint layout: magic `GSCK`, a little-endian `u32` header length,
//! the JSON header, then every weight array as little-endian `f64` in
//! declaration order.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::network::{Architecture, ConvLayer, ModelMeta, ModelParams, INPUT_CHANNELS, OUTPUTS};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GSCK";

#[derive(Debug, Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: u32,
    architecture: Architecture,
    meta: ModelMeta,
    arrays: Vec<ArrayEntry>,
}

pub fn to_bytes(m: &ModelParams) -> Result<Vec<u8>> {
    let mut arrays = Vec::new();
    for (i, c) in m.convs.iter().enumerate() {
        arrays.push(ArrayEntry {
            name: format!("conv{i}.weight"),
            shape: c.weight.shape().to_vec(),
        });
        arrays.push(ArrayEntry {
            name: format!("conv{i}.bias"),
            shape: c.bias.shape().to_vec(),
        });
    }
    arrays.push(ArrayEntry {
        name: "fc.weight".into(),
        shape: m.fc_weight.shape().to_vec(),
    });
    arrays.push(ArrayEntry {
        name: "fc.bias".into(),
        shape: m.fc_bias.shape().to_vec(),
    });
    let header = serde_json::to_vec(&Header {
        format: 1,
        architecture: m.arch.clone(),
        meta: m.meta.clone(),
        arrays,
    })?;

    let mut out = Vec::with_capacity(8 + header.len() + m.parameter_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for s in m.slices() {
        for v in s {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelParams> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a model checkpoint".into()));
    }
    let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let header: Header = serde_json::from_slice(
        bytes
            .get(8..8 + hlen)
            .ok_or_else(|| Error::Format("truncated checkpoint header".into()))?,
    )?;
    header.architecture.validate()?;
    let mut body = bytes[8 + hlen..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = |n: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = body.by_ref().take(n).collect();
        if v.len() != n {
            return Err(Error::Format("truncated checkpoint weights".into()));
        }
        Ok(v)
    };

    let arch = header.architecture;
    let mut convs = Vec::new();
    let mut in_ch = INPUT_CHANNELS;
    for spec in &arch.convs {
        let k = in_ch * spec.kernel * spec.kernel;
        let weight = Array2::from_shape_vec((spec.out_channels, k), take(spec.out_channels * k)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        let bias = Array1::from(take(spec.out_channels)?);
        convs.push(ConvLayer {
            spec: *spec,
            in_channels: in_ch,
            weight,
            bias,
        });
        in_ch = spec.out_channels;
    }
    let e = arch.embedding_width();
    let fc_weight = Array2::from_shape_vec((OUTPUTS, e), take(OUTPUTS * e)?)
        .map_err(|err| Error::Format(err.to_string()))?;
    let fc_bias = Array1::from(take(OUTPUTS)?);
    if body.next().is_some() {
        return Err(Error::Format(
            "trailing bytes after checkpoint weights".into(),
        ));
    }
    let m = ModelParams {
        arch,
        convs,
        fc_weight,
        fc_bias,
        meta: header.meta,
    };
    if !m.is_finite() {
        return Err(Error::Format("checkpoint holds non-finite weights".into()));
    }
    Ok(m)
}

pub fn save(m: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_bytes(m)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<ModelParams> {
    from_bytes(&std::fs::read(path)?)
}
