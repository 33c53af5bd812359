//! Binary file holding the known coefficients of an image and its mask.
//!
//! ```text
//! "DCTK"  u16 version  u16 N  u32 width  u32 height  u8 bit_depth
//! u16 count  count × (u8 k, u8 l)
//! f64 × (blocks × (N² − count))   block-raster order, masked entries omitted
//! ```
//!
//! All integers and floats are little-endian. Masked coefficients are not
//! stored, so a reader cannot see them.

use std::path::Path;

use crate::dct::CoeffGrid;
use crate::error::{Error, Result};
use crate::image::{BlockLayout, IntensityRange};
use crate::mask::EraseMask;

const MAGIC: &[u8; 4] = b"DCTK";
const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Sidecar {
    pub bit_depth: u8,
    pub mask: EraseMask,
    /// Masked entries are zero.
    pub known: CoeffGrid,
}

impl Sidecar {
    /// Copy `grid` with the masked entries dropped.
    pub fn new(grid: &CoeffGrid, mask: &EraseMask, bit_depth: u8) -> Result<Self> {
        if mask.block_size() != grid.layout().block_size {
            return Err(Error::DimensionMismatch(format!(
                "mask block size {} vs grid block size {}",
                mask.block_size(),
                grid.layout().block_size
            )));
        }
        let mut known = grid.clone();
        for b in 0..known.layout().block_count() {
            for &(k, l) in mask.positions() {
                known.set(b, k, l, 0.0);
            }
        }
        Ok(Sidecar {
            bit_depth,
            mask: mask.clone(),
            known,
        })
    }

    pub fn layout(&self) -> &BlockLayout {
        self.known.layout()
    }

    pub fn range(&self) -> IntensityRange {
        IntensityRange::for_bit_depth(self.bit_depth)
    }

    pub fn encode(&self) -> Vec<u8> {
        let layout = self.layout();
        let n = layout.block_size;
        let flags = self.mask.flags();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u16).to_le_bytes());
        out.extend_from_slice(&(layout.width() as u32).to_le_bytes());
        out.extend_from_slice(&(layout.height() as u32).to_le_bytes());
        out.push(self.bit_depth);
        out.extend_from_slice(&(self.mask.len() as u16).to_le_bytes());
        for &(k, l) in self.mask.positions() {
            out.push(k as u8);
            out.push(l as u8);
        }
        for b in 0..layout.block_count() {
            for (pos, &v) in self.known.block(b).iter().enumerate() {
                if !flags[pos] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::CorruptFile("bad magic".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::CorruptFile(format!("unsupported version {version}")));
        }
        let n = r.u16()? as usize;
        let width = r.u32()? as usize;
        let height = r.u32()? as usize;
        let bit_depth = r.take(1)?[0];
        if !(1..=8).contains(&bit_depth) {
            return Err(Error::CorruptFile(format!("bit depth {bit_depth}")));
        }
        let count = r.u16()? as usize;
        if n < 2 || n > 255 {
            return Err(Error::CorruptFile(format!("block size {n}")));
        }
        let layout = BlockLayout::new(width, height, n)
            .map_err(|e| Error::CorruptFile(format!("header: {e}")))?;
        let mut positions = Vec::with_capacity(count);
        for _ in 0..count {
            let kl = r.take(2)?;
            positions.push((kl[0] as usize, kl[1] as usize));
        }
        let mask = EraseMask::new(n, positions)?;
        if mask.is_empty() {
            return Err(Error::InvalidMask("no missing coefficients".into()));
        }
        let flags = mask.flags();
        let expected = layout.block_count() * (n * n - mask.len()) * 8;
        if r.remaining() != expected {
            return Err(Error::CorruptFile(format!(
                "{} coefficient bytes, expected {expected}",
                r.remaining()
            )));
        }
        let mut known = CoeffGrid::zeros(layout);
        for b in 0..layout.block_count() {
            let block = known.block_mut(b);
            for (pos, slot) in block.iter_mut().enumerate() {
                if flags[pos] {
                    continue;
                }
                let v = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
                if !v.is_finite() {
                    return Err(Error::CorruptFile(format!("non-finite coefficient in block {b}")));
                }
                *slot = v;
            }
        }
        Ok(Sidecar {
            bit_depth,
            mask,
            known,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(Error::CorruptFile("truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}
