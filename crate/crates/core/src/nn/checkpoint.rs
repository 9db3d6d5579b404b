//! Binary checkpoint format for a single network.
//!
//! All integers are little-endian `u32`, all reals little-endian IEEE-754 `f64`:
//!
//! ```text
//! magic      b"MLPK"
//! version    u32 = 1
//! n_layers   u32
//! per layer:
//!   out      u32
//!   in       u32
//!   act      u32   (0 = relu, 1 = sigmoid, 2 = identity)
//!   weight   out*in f64, row-major
//!   bias     out f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::mlp::{Activation, Layer, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MLPK";
const VERSION: u32 = 1;

pub fn write_mlp<W: Write>(net: &Mlp, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(net.layers().len() as u32).to_le_bytes())?;
    for layer in net.layers() {
        w.write_all(&(layer.out_dim() as u32).to_le_bytes())?;
        w.write_all(&(layer.in_dim() as u32).to_le_bytes())?;
        w.write_all(&u32::from(layer.activation.code()).to_le_bytes())?;
        for v in layer.weight.iter().chain(layer.bias.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = [0u8; 8];
    (0..n)
        .map(|_| {
            r.read_exact(&mut buf)?;
            Ok(f64::from_le_bytes(buf))
        })
        .collect()
}

pub fn read_mlp<R: Read>(mut r: R) -> Result<Mlp> {
    let mut magic = [0u8; 4];
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
        let out = read_u32(&mut r)? as usize;
        let inp = read_u32(&mut r)? as usize;
        let code = read_u32(&mut r)?;
        let activation = u8::try_from(code)
            .ok()
            .and_then(Activation::from_code)
            .ok_or_else(|| Error::Checkpoint(format!("unknown activation code {code}")))?;
        let weight = Array2::from_shape_vec((out, inp), read_f64s(&mut r, out * inp)?)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let bias = Array1::from(read_f64s(&mut r, out)?);
        layers.push(Layer { weight, bias, activation });
    }
    Mlp::from_layers(layers).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save_mlp(net: &Mlp, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mlp(net, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_mlp(path: impl AsRef<Path>) -> Result<Mlp> {
    read_mlp(BufReader::new(File::open(path)?))
}
