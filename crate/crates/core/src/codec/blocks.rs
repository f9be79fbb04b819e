//! B×B block tiling of `[3, h, w]` images.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Geometry of an image padded on the right and bottom to a multiple of the
/// block size. Blocks are numbered row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub width: usize,
    pub height: usize,
    pub block: usize,
    pub pad_right: usize,
    pub pad_bottom: usize,
}

pub fn plan_blocks(width: usize, height: usize, block: usize) -> BlockLayout {
    assert!(width >= 1 && height >= 1 && block >= 1, "empty image or block");
    BlockLayout {
        width,
        height,
        block,
        pad_right: width.div_ceil(block) * block - width,
        pad_bottom: height.div_ceil(block) * block - height,
    }
}

impl BlockLayout {
    pub fn cols(&self) -> usize {
        (self.width + self.pad_right) / self.block
    }

    pub fn rows(&self) -> usize {
        (self.height + self.pad_bottom) / self.block
    }

    pub fn block_count(&self) -> usize {
        self.cols() * self.rows()
    }

    /// Top-left pixel `(x, y)` of every block, row-major.
    pub fn coords(&self) -> Vec<(usize, usize)> {
        (0..self.rows())
            .flat_map(|r| (0..self.cols()).map(move |c| (c * self.block, r * self.block)))
            .collect()
    }

    /// Whether block `i` lies entirely inside the unpadded image.
    pub fn is_interior(&self, i: usize) -> bool {
        let (c, r) = (i % self.cols(), i / self.cols());
        (c + 1) * self.block <= self.width && (r + 1) * self.block <= self.height
    }

    /// Row-major indices of the blocks that carry payload.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.block_count()).filter(|&i| self.is_interior(i)).collect()
    }

    fn check_image(&self, img: &Tensor) -> Result<()> {
        if img.shape() != [3, self.height, self.width] {
            return Err(Error::dim(format!(
                "image shape {:?} does not match layout {}x{}",
                img.shape(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }
}

/// Cuts `img` (`[3, h, w]`) into `[n, 3, B, B]`, replicating edge pixels
/// into the padding.
pub fn tile(img: &Tensor, layout: &BlockLayout) -> Result<Tensor> {
    layout.check_image(img)?;
    let (w, h, b) = (layout.width, layout.height, layout.block);
    let src = img.data();
    let coords = layout.coords();
    let mut out = Vec::with_capacity(coords.len() * 3 * b * b);
    for &(x0, y0) in &coords {
        for ch in 0..3 {
            for y in y0..y0 + b {
                let row = &src[(ch * h + y.min(h - 1)) * w..][..w];
                out.extend((x0..x0 + b).map(|x| row[x.min(w - 1)]));
            }
        }
    }
    Tensor::new(&[coords.len(), 3, b, b], out)
}

/// Inverse of [`tile`]: reassembles blocks and crops the padding away.
pub fn untile(blocks: &Tensor, layout: &BlockLayout) -> Result<Tensor> {
    let (w, h, b) = (layout.width, layout.height, layout.block);
    if blocks.shape() != [layout.block_count(), 3, b, b] {
        return Err(Error::dim(format!(
            "block tensor {:?} does not match layout of {} blocks of {b}",
            blocks.shape(),
            layout.block_count()
        )));
    }
    let mut out = Tensor::zeros(&[3, h, w]);
    let dst = out.data_mut();
    for (i, (x0, y0)) in layout.coords().into_iter().enumerate() {
        let blk = blocks.sample(i);
        let x1 = (x0 + b).min(w);
        for ch in 0..3 {
            for y in y0..(y0 + b).min(h) {
                let src = &blk[(ch * b + y - y0) * b..][..x1 - x0];
                dst[(ch * h + y) * w + x0..(ch * h + y) * w + x1].copy_from_slice(src);
            }
        }
    }
    Ok(out)
}
