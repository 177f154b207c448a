//! IDX file ingestion (MNIST/Fashion layout): big-endian magic 0x00000803
//! for images (count, rows, cols, unsigned bytes scaled to [0,1] by /255)
//! and 0x00000801 for labels.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use crate::gin::Image;
use crate::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

pub fn load_idx_images(path: &Path) -> Result<Vec<Image>> {
    let mut r = BufReader::new(File::open(path)?);
    let magic = read_u32_be(&mut r)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Idx(format!("image magic {magic:#010x}")));
    }
    let count = read_u32_be(&mut r)? as usize;
    let rows = read_u32_be(&mut r)? as usize;
    let cols = read_u32_be(&mut r)? as usize;
    let mut images = Vec::with_capacity(count);
    let mut buf = vec![0u8; rows * cols];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        images.push(Image {
            width: cols,
            height: rows,
            pixels: buf.iter().map(|&b| b as f64 / 255.0).collect(),
        });
    }
    Ok(images)
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let mut r = BufReader::new(File::open(path)?);
    let magic = read_u32_be(&mut r)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Idx(format!("label magic {magic:#010x}")));
    }
    let count = read_u32_be(&mut r)? as usize;
    let mut buf = vec![0u8; count];
    r.read_exact(&mut buf)?;
    Ok(buf.into_iter().map(|b| b as usize).collect())
}
