//! Neighbourhood encoding of raster bands with a single-hidden-layer
//! autoencoder: `p = σ(W_e x + b)`, `x' = σ(W_d p + b_d)`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::PixelCoord;
use crate::nn::{self, sigmoid, Checkpoint, Dense, Parameters, SgdConfig, TensorView, INIT_SCALE};
use crate::raster::{RasterGrid, RepGrid};

pub const DEFAULT_CODE_LEN: usize = 8;
pub const DEFAULT_PATCH_RADIUS: usize = 1;

/// Band-major, then row-major flattening of the `(2r+1)²` window around `p`.
/// Neighbours outside the grid are 0.
pub fn extract_patch(raster: &RasterGrid, p: PixelCoord, radius: usize) -> Result<Vec<f64>> {
    let gt = &raster.transform;
    if !gt.contains_pixel(p) {
        return Err(Error::OutOfExtent(format!(
            "pixel ({}, {}) outside a {}x{} grid",
            p.row, p.col, gt.n_rows, gt.n_cols
        )));
    }
    let side = 2 * radius + 1;
    let mut out = Vec::with_capacity(raster.n_bands() * side * side);
    let r = radius as isize;
    for band in raster.bands() {
        for dr in -r..=r {
            for dc in -r..=r {
                let row = p.row as isize + dr;
                let col = p.col as isize + dc;
                let inside = row >= 0 && col >= 0 && (row as usize) < gt.n_rows && (col as usize) < gt.n_cols;
                out.push(if inside {
                    band[row as usize * gt.n_cols + col as usize]
                } else {
                    0.0
                });
            }
        }
    }
    Ok(out)
}

/// Patches of every cell in row-major order.
pub fn extract_patches(raster: &RasterGrid, radius: usize) -> Vec<Vec<f64>> {
    (0..raster.transform.n_cells())
        .into_par_iter()
        .map(|i| {
            extract_patch(raster, raster.transform.pixel_at(i), radius).expect("in-grid pixel")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchAutoencoder {
    pub encoder: Dense,
    pub decoder: Dense,
    pub radius: usize,
}

impl PatchAutoencoder {
    pub fn zeros(n_bands: usize, radius: usize, code_len: usize) -> Result<Self> {
        if n_bands == 0 || code_len == 0 {
            return Err(Error::Config(format!(
                "patch autoencoder needs at least one band and one code unit, got {n_bands} and {code_len}"
            )));
        }
        let dim = n_bands * (2 * radius + 1).pow(2);
        Ok(Self {
            encoder: Dense::zeros("encoder", dim, code_len, true),
            decoder: Dense::zeros("decoder", code_len, dim, true),
            radius,
        })
    }

    pub fn random<R: Rng>(n_bands: usize, radius: usize, code_len: usize, rng: &mut R) -> Result<Self> {
        let mut ae = Self::zeros(n_bands, radius, code_len)?;
        ae.init_uniform(rng, INIT_SCALE);
        Ok(ae)
    }

    pub fn patch_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn code_len(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn n_bands(&self) -> usize {
        self.patch_dim() / (2 * self.radius + 1).pow(2)
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.encoder.forward(x)?.into_iter().map(sigmoid).collect())
    }

    pub fn decode(&self, code: &[f64]) -> Result<Vec<f64>> {
        Ok(self.decoder.forward(code)?.into_iter().map(sigmoid).collect())
    }

    /// `|x' − x|²` of one patch.
    pub fn loss(&self, x: &[f64]) -> Result<f64> {
        let rec = self.decode(&self.encode(x)?)?;
        Ok(rec.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    pub fn loss_and_gradients(&self, x: &[f64]) -> Result<(f64, PatchAutoencoder)> {
        let p = self.encode(x)?;
        let rec = self.decode(&p)?;
        let mut grad = self.zeros_like();
        let mut loss = 0.0;
        let d_pre_dec: Vec<f64> = rec
            .iter()
            .zip(x)
            .map(|(&y, &t)| {
                loss += (y - t) * (y - t);
                2.0 * (y - t) * y * (1.0 - y)
            })
            .collect();
        let dp = self.decoder.backward(&p, &d_pre_dec, &mut grad.decoder);
        let d_pre_enc: Vec<f64> = dp.iter().zip(&p).map(|(d, &s)| d * s * (1.0 - s)).collect();
        self.encoder.backward(x, &d_pre_enc, &mut grad.encoder);
        Ok((loss, grad))
    }

    pub fn mean_loss(&self, patches: &[Vec<f64>]) -> Result<f64> {
        if patches.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let losses: Vec<f64> = patches.par_iter().map(|x| self.loss(x)).collect::<Result<_>>()?;
        Ok(losses.iter().sum::<f64>() / patches.len() as f64)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::from_params(self)
            .with_meta("model", "patch-ae")
            .with_meta("radius", self.radius)
            .with_meta("n_bands", self.n_bands())
            .with_meta("code_len", self.code_len())
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.meta.get("model").map(String::as_str) != Some("patch-ae") {
            return Err(Error::Validation("checkpoint does not hold a patch autoencoder".into()));
        }
        let mut ae = Self::zeros(
            ckpt.meta_value("n_bands")?,
            ckpt.meta_value("radius")?,
            ckpt.meta_value("code_len")?,
        )?;
        ckpt.load_into(&mut ae)?;
        Ok(ae)
    }
}

impl Parameters for PatchAutoencoder {
    fn tensors(&self) -> Vec<TensorView<'_>> {
        let mut v = self.encoder.tensors();
        v.extend(self.decoder.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.encoder.tensors_mut();
        v.extend(self.decoder.tensors_mut());
        v
    }
}

/// Mini-batch SGD on the mean patch reconstruction loss. Returns the mean
/// loss of every epoch.
pub fn train_patch_ae(ae: &mut PatchAutoencoder, patches: &[Vec<f64>], cfg: &SgdConfig) -> Result<Vec<f64>> {
    if patches.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(bad) = patches.iter().find(|p| p.len() != ae.patch_dim()) {
        return Err(Error::DimensionMismatch(format!(
            "patch of length {} for an autoencoder expecting {}",
            bad.len(),
            ae.patch_dim()
        )));
    }
    nn::train_sgd(ae, patches, cfg, |m, x| m.loss_and_gradients(x), |_, _| {})
}

/// Code of every cell's patch. `raster` should already be normalized.
pub fn encode_raster(ae: &PatchAutoencoder, raster: &RasterGrid) -> Result<RepGrid> {
    if raster.n_bands() != ae.n_bands() {
        return Err(Error::DimensionMismatch(format!(
            "raster has {} bands, encoder expects {}",
            raster.n_bands(),
            ae.n_bands()
        )));
    }
    let patches = extract_patches(raster, ae.radius);
    let codes: Vec<Vec<f64>> = patches.par_iter().map(|x| ae.encode(x)).collect::<Result<_>>()?;
    let gt = &raster.transform;
    RepGrid::from_values(gt.n_rows, gt.n_cols, ae.code_len(), codes.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoTransform;

    fn raster(n: usize, bands: usize) -> RasterGrid {
        let gt = GeoTransform::new(0.0, n as f64, 1.0, 1.0, n, n).unwrap();
        let data = (0..bands)
            .map(|b| (0..n * n).map(|i| (i + 10 * b) as f64).collect())
            .collect();
        RasterGrid::new(gt, data, -9999.0).unwrap()
    }

    #[test]
    fn radius_zero_is_the_cell() {
        let r = raster(3, 2);
        assert_eq!(extract_patch(&r, PixelCoord::new(1, 2), 0).unwrap(), vec![5.0, 15.0]);
    }

    #[test]
    fn corner_patch_zero_fills() {
        let r = raster(3, 1);
        let p = extract_patch(&r, PixelCoord::new(0, 0), 1).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 3.0, 4.0]);
        assert_eq!(p.iter().filter(|&&v| v == 0.0).count(), 6);
        assert!(extract_patch(&r, PixelCoord::new(3, 0), 1).is_err());
    }

    #[test]
    fn zero_model_outputs_half() {
        let ae = PatchAutoencoder::zeros(1, 1, 4).unwrap();
        assert_eq!(ae.encode(&[0.3; 9]).unwrap(), vec![0.5; 4]);
        assert_eq!(ae.decode(&[0.1; 4]).unwrap(), vec![0.5; 9]);
        assert!(ae.encode(&[0.0; 8]).is_err());
    }

    #[test]
    fn zero_rate_and_empty_corpus() {
        let mut ae = PatchAutoencoder::random(1, 0, 2, &mut nn::rng_from_seed(1)).unwrap();
        let before = ae.clone();
        let cfg = SgdConfig { epochs: 2, learning_rate: 0.0, ..Default::default() };
        train_patch_ae(&mut ae, &[vec![0.2], vec![0.7]], &cfg).unwrap();
        assert_eq!(ae, before);
        assert!(matches!(train_patch_ae(&mut ae, &[], &cfg), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn encode_raster_shape() {
        let r = raster(4, 2).normalized();
        let ae = PatchAutoencoder::random(2, 1, 8, &mut nn::rng_from_seed(2)).unwrap();
        let reps = encode_raster(&ae, &r).unwrap();
        assert_eq!(reps.dim, 8);
        let p = PixelCoord::new(2, 1);
        let direct = ae.encode(&extract_patch(&r, p, 1).unwrap()).unwrap();
        assert_eq!(reps.get(p), &direct[..]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let ae = PatchAutoencoder::random(3, 1, 5, &mut nn::rng_from_seed(3)).unwrap();
        let bytes = ae.to_checkpoint().to_bytes().unwrap();
        assert_eq!(PatchAutoencoder::from_checkpoint(&Checkpoint::read(&bytes).unwrap()).unwrap(), ae);
    }
}
