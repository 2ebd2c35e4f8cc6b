use crate::error::{Error, Result};

/// Largest block handled by the 8-bit index representation.
pub const MAX_BLOCK: usize = 8;

/// Dense/sparse index pair for one ternary block, LSB-first.
///
/// Dense bit `i` is 0 iff weight `i` is -1; sparse bit `i` is 1 iff weight
/// `i` is 0. A zero weight is dense +1 minus sparse 1, so every sparse bit
/// must also be set in the dense index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockIndices {
    width: u8,
    dense: u8,
    sparse: u8,
}

impl BlockIndices {
    pub fn new(width: usize, dense: u8, sparse: u8) -> Result<Self> {
        if width == 0 || width > MAX_BLOCK {
            return Err(Error::InvalidShape(format!("block width {width} not in 1..=8")));
        }
        let mask = mask(width);
        if dense & !mask != 0 || sparse & !mask != 0 || sparse & !dense != 0 {
            return Err(Error::Containment { dense, sparse });
        }
        Ok(Self {
            width: width as u8,
            dense,
            sparse,
        })
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn dense(&self) -> u8 {
        self.dense
    }

    pub fn sparse(&self) -> u8 {
        self.sparse
    }

    pub fn recompose(&self) -> Vec<i8> {
        (0..self.width())
            .map(|i| {
                let d = if self.dense >> i & 1 == 1 { 1 } else { -1 };
                d - (self.sparse >> i & 1) as i8
            })
            .collect()
    }
}

fn mask(width: usize) -> u8 {
    (((1u16) << width) - 1) as u8
}

pub fn decompose_block(w: &[i8]) -> Result<BlockIndices> {
    if w.is_empty() || w.len() > MAX_BLOCK {
        return Err(Error::InvalidShape(format!("block width {} not in 1..=8", w.len())));
    }
    let mut dense = 0u8;
    let mut sparse = 0u8;
    for (i, &v) in w.iter().enumerate() {
        match v {
            -1 => {}
            0 => {
                dense |= 1 << i;
                sparse |= 1 << i;
            }
            1 => dense |= 1 << i,
            value => return Err(Error::NotTernary { index: i, value }),
        }
    }
    Ok(BlockIndices {
        width: w.len() as u8,
        dense,
        sparse,
    })
}

/// Inverse of [`decompose_block`]; rejects a sparse bit without its dense bit.
pub fn recompose_block(width: usize, dense: u8, sparse: u8) -> Result<Vec<i8>> {
    BlockIndices::new(width, dense, sparse).map(|b| b.recompose())
}
