//! Network checkpoint file: magic "AISL", format version u32 LE, layer count
//! u32, then per layer (in_dim u32, out_dim u32, activation tag u8, weights
//! then biases as little-endian f64, row-major).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::matrix::Matrix;
use super::network::{Activation, LayerSpec, Network};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"AISL";
const VERSION: u32 = 1;

pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(net.layers().len() as u32).to_le_bytes())?;
    for (li, spec) in net.layers().iter().enumerate() {
        w.write_all(&(spec.in_dim as u32).to_le_bytes())?;
        w.write_all(&(spec.out_dim as u32).to_le_bytes())?;
        w.write_all(&[spec.activation.tag()])?;
        for &v in net.weights()[li].data() {
            w.write_all(&v.to_le_bytes())?;
        }
        for &v in &net.biases()[li] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn load_network(path: &Path) -> Result<Network> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n_layers = read_u32(&mut r)? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    let mut weights = Vec::with_capacity(n_layers);
    let mut biases = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let in_dim = read_u32(&mut r)? as usize;
        let out_dim = read_u32(&mut r)? as usize;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let activation = Activation::from_tag(tag[0])?;
        layers.push(LayerSpec::new(in_dim, out_dim, activation));
        weights.push(Matrix::from_vec(in_dim, out_dim, read_f64s(&mut r, in_dim * out_dim)?)?);
        biases.push(read_f64s(&mut r, out_dim)?);
    }
    Network::from_parts(layers, weights, biases)
}
