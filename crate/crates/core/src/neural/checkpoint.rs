//! Binary model checkpoints.
//!
//! Layout: the magic `DGMLP1`, a little-endian `u32` layer count, then per
//! layer `u32` input width, `u32` output width, a `u8` activation tag, the
//! weights row-major and the bias, all as little-endian `f64`.

use super::mlp::{Activation, Dense, MlpModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MAGIC: &[u8; 6] = b"DGMLP1";

pub fn save_model(model: &MlpModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + model.param_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for layer in model.layers() {
        out.extend_from_slice(&(layer.input_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.output_dim() as u32).to_le_bytes());
        out.push(layer.activation.tag());
        for v in layer.weights.values().iter().chain(&layer.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::format("checkpoint", "truncated"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::format("checkpoint", "size overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn load_model(bytes: &[u8]) -> Result<MlpModel> {
    let mut r = Reader { buf: bytes };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::format("checkpoint", "bad magic"));
    }
    let count = r.u32()?;
    let mut layers = Vec::new();
    for _ in 0..count {
        let (inp, out) = (r.u32()?, r.u32()?);
        let tag = r.take(1)?[0];
        let activation =
            Activation::from_tag(tag).ok_or_else(|| Error::format("checkpoint", format!("unknown activation tag {tag}")))?;
        let weights = Matrix::new(out, inp, r.f64s(inp * out)?)?;
        let bias = r.f64s(out)?;
        layers.push(Dense { weights, bias, activation });
    }
    if !r.buf.is_empty() {
        return Err(Error::format("checkpoint", "trailing bytes"));
    }
    MlpModel::new(layers)
}
