//! Binary parameter checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "EBMMLP\0\0"
//! version    u32      currently 1
//! n_layers   u32
//! per layer:
//!   in_dim   u32
//!   out_dim  u32
//!   act      u8       0 = swish, 1 = tanh, 2 = identity
//!   weights  out_dim * in_dim f64, row-major
//!   bias     out_dim f64
//! ```
//!
//! Values are stored as raw IEEE-754 bits, so a round trip is bit-exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, Dense, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"EBMMLP\0\0";
const VERSION: u32 = 1;

pub fn write_to<W: Write>(mlp: &Mlp, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(mlp.layers().len() as u32).to_le_bytes())?;
    for layer in mlp.layers() {
        w.write_all(&(layer.in_dim() as u32).to_le_bytes())?;
        w.write_all(&(layer.out_dim() as u32).to_le_bytes())?;
        w.write_all(&[layer.activation.code()])?;
        for v in layer.weights.iter().chain(layer.bias.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_from<R: Read>(mut r: R) -> Result<Mlp> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n_layers = read_u32(&mut r)? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let in_dim = read_u32(&mut r)? as usize;
        let out_dim = read_u32(&mut r)? as usize;
        let mut code = [0u8; 1];
        r.read_exact(&mut code)?;
        let activation = Activation::from_code(code[0])
            .ok_or_else(|| Error::Checkpoint(format!("unknown activation code {}", code[0])))?;
        let weights = read_f64s(&mut r, in_dim * out_dim)?;
        let bias = read_f64s(&mut r, out_dim)?;
        layers.push(Dense {
            weights: Array2::from_shape_vec((out_dim, in_dim), weights)
                .map_err(|e| Error::Checkpoint(e.to_string()))?,
            bias: Array1::from_vec(bias),
            activation,
        });
    }
    Mlp::new(layers).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save(mlp: &Mlp, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_to(mlp, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Mlp> {
    let bytes = fs::read(path)?;
    read_from(bytes.as_slice())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}
