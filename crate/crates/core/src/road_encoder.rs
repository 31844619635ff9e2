//! Sequence autoencoders that turn clipped road fragments into fixed-length
//! codes.
//!
//! A [`Drnnae`] encodes one coordinate axis: an LSTM reads the scalar sequence
//! and its final hidden state is the code. The decoder LSTM receives the
//! bridged code at every step and a linear readout reconstructs the sequence.
//! [`Sdrnnae`] pairs a y-axis (`lat`) and an x-axis (`lon`) model; a pixel's
//! representation is the mean over its fragments of `[lat code, lon code]`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{GeoCoord, GeoTransform, PixelCoord};
use crate::index::{PbrSet, DEFAULT_MAX_PBR_LEN};
use crate::nn::{self, Checkpoint, Dense, LstmCell, Parameters, SgdConfig, TensorView, INIT_SCALE};
use crate::raster::RepGrid;

/// How the encoder's hidden units interact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StreamLayout {
    /// One LSTM with `n_hidden` fully coupled units.
    #[default]
    Coupled,
    /// `n_hidden` independent single-unit LSTMs sharing the input: every
    /// unit's recurrent weights only see its own previous output.
    Independent,
}

impl StreamLayout {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamLayout::Coupled => "coupled",
            StreamLayout::Independent => "independent",
        }
    }
}

impl std::str::FromStr for StreamLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(StreamLayout::Coupled),
            "independent" => Ok(StreamLayout::Independent),
            _ => Err(Error::Config(format!("unknown stream layout {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrnnaeConfig {
    pub n_hidden: usize,
    pub max_len: usize,
    pub streams: StreamLayout,
}

impl Default for DrnnaeConfig {
    fn default() -> Self {
        Self {
            n_hidden: 3,
            max_len: DEFAULT_MAX_PBR_LEN,
            streams: StreamLayout::Coupled,
        }
    }
}

impl DrnnaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_hidden == 0 {
            return Err(Error::Config("n_hidden must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max sequence length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Single-axis sequence autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Drnnae {
    pub encoder: LstmCell,
    pub bridge: Dense,
    pub decoder: LstmCell,
    pub readout: Dense,
    pub config: DrnnaeConfig,
}

impl Drnnae {
    pub fn zeros(config: DrnnaeConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_hidden;
        Ok(Self {
            encoder: LstmCell::zeros("encoder", 1, n),
            bridge: Dense::zeros("bridge", n, n, true),
            decoder: LstmCell::zeros("decoder", n, n),
            readout: Dense::zeros("readout", n, 1, false),
            config,
        })
    }

    /// Parameters drawn from U(-0.08, 0.08).
    pub fn random<R: Rng>(config: DrnnaeConfig, rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(config)?;
        m.init_uniform(rng, INIT_SCALE);
        m.apply_stream_mask();
        Ok(m)
    }

    pub fn n_hidden(&self) -> usize {
        self.config.n_hidden
    }

    /// Zeroes the cross-unit recurrent encoder weights when the units are
    /// independent streams.
    fn apply_stream_mask(&mut self) {
        if self.config.streams != StreamLayout::Independent {
            return;
        }
        let n = self.config.n_hidden;
        for w in self.encoder.w.iter_mut() {
            for r in 0..n {
                for c in 0..n {
                    if r != c {
                        w.data[r * w.cols + 1 + c] = 0.0;
                    }
                }
            }
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == 0 {
            return Err(Error::EmptySequence);
        }
        if len > self.config.max_len {
            return Err(Error::LengthExceeded {
                len,
                max: self.config.max_len,
            });
        }
        Ok(())
    }

    /// Final encoder hidden state.
    pub fn encode(&self, seq: &[f64]) -> Result<Vec<f64>> {
        self.check_len(seq.len())?;
        let inputs: Vec<Vec<f64>> = seq.iter().map(|&v| vec![v]).collect();
        let states = self.encoder.forward(&inputs)?;
        Ok(states.last().expect("non-empty").h.clone())
    }

    /// Reconstructs `len` values from a code.
    pub fn decode(&self, code: &[f64], len: usize) -> Result<Vec<f64>> {
        if len == 0 {
            return Err(Error::EmptySequence);
        }
        let bridged = self.bridge.forward(code)?;
        let states = self.decoder.forward(&vec![bridged; len])?;
        states
            .iter()
            .map(|s| Ok(self.readout.forward(&s.h)?[0]))
            .collect()
    }

    pub fn reconstruct(&self, seq: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(seq)?, seq.len())
    }

    /// Mean squared reconstruction error of one sequence.
    pub fn reconstruction_loss(&self, seq: &[f64]) -> Result<f64> {
        let rec = self.reconstruct(seq)?;
        Ok(mse(&rec, seq))
    }

    /// Loss of one sequence and its exact gradient.
    pub fn loss_and_gradients(&self, seq: &[f64]) -> Result<(f64, Drnnae)> {
        self.check_len(seq.len())?;
        let m = seq.len();
        let inputs: Vec<Vec<f64>> = seq.iter().map(|&v| vec![v]).collect();
        let (enc_states, enc_caches) = self.encoder.forward_cached(&inputs)?;
        let code = enc_states.last().expect("non-empty").h.clone();
        let bridged = self.bridge.forward(&code)?;
        let (dec_states, dec_caches) = self.decoder.forward_cached(&vec![bridged; m])?;

        let mut grad = self.zeros_like();
        let mut loss = 0.0;
        let mut dh_dec = Vec::with_capacity(m);
        for (s, &target) in dec_states.iter().zip(seq) {
            let y = self.readout.forward(&s.h)?[0];
            let r = y - target;
            loss += r * r;
            let dy = 2.0 * r / m as f64;
            dh_dec.push(self.readout.backward(&s.h, &[dy], &mut grad.readout));
        }
        loss /= m as f64;

        let dx_dec = self.decoder.backward(&dec_caches, &dh_dec, &mut grad.decoder);
        let mut d_bridged = vec![0.0; self.n_hidden()];
        for dx in &dx_dec {
            for (a, b) in d_bridged.iter_mut().zip(dx) {
                *a += b;
            }
        }
        let d_code = self.bridge.backward(&code, &d_bridged, &mut grad.bridge);

        let mut dh_enc = vec![vec![0.0; self.n_hidden()]; m];
        dh_enc[m - 1] = d_code;
        self.encoder.backward(&enc_caches, &dh_enc, &mut grad.encoder);
        grad.apply_stream_mask();
        Ok((loss, grad))
    }

    /// Mean reconstruction loss over a corpus.
    pub fn mean_loss(&self, seqs: &[Vec<f64>]) -> Result<f64> {
        if seqs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let losses: Vec<f64> = seqs
            .par_iter()
            .map(|s| self.reconstruction_loss(s))
            .collect::<Result<_>>()?;
        Ok(losses.iter().sum::<f64>() / seqs.len() as f64)
    }

    /// Mini-batch SGD on the mean reconstruction loss. Returns the mean loss
    /// of every epoch.
    pub fn train<E>(&mut self, seqs: &[Vec<f64>], cfg: &SgdConfig, after_epoch: E) -> Result<Vec<f64>>
    where
        E: FnMut(usize, &Drnnae),
    {
        if seqs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        for s in seqs {
            self.check_len(s.len())?;
        }
        nn::train_sgd(self, seqs, cfg, |m, s| m.loss_and_gradients(s), after_epoch)
    }
}

impl Parameters for Drnnae {
    fn tensors(&self) -> Vec<TensorView<'_>> {
        let mut v = self.encoder.tensors();
        v.extend(self.bridge.tensors());
        v.extend(self.decoder.tensors());
        v.extend(self.readout.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.encoder.tensors_mut();
        v.extend(self.bridge.tensors_mut());
        v.extend(self.decoder.tensors_mut());
        v.extend(self.readout.tensors_mut());
        v
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Per-axis min-max scaling of coordinates to `[0, 1]` over a fixed extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl Normalizer {
    pub fn new(min_x: f64, max_x: f64, min_y: f64, max_y: f64) -> Result<Self> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && hi > lo;
        if !ok(min_x, max_x) || !ok(min_y, max_y) {
            return Err(Error::Value(format!(
                "degenerate normalizer range x [{min_x}, {max_x}], y [{min_y}, {max_y}]"
            )));
        }
        Ok(Self { min_x, max_x, min_y, max_y })
    }

    /// Scaling over the full extent of a grid.
    pub fn from_transform(gt: &GeoTransform) -> Self {
        let e = gt.extent();
        Self {
            min_x: e.min_x,
            max_x: e.max_x,
            min_y: e.min_y,
            max_y: e.max_y,
        }
    }

    pub fn normalize_x(&self, x: f64) -> f64 {
        (x - self.min_x) / (self.max_x - self.min_x)
    }

    pub fn normalize_y(&self, y: f64) -> f64 {
        (y - self.min_y) / (self.max_y - self.min_y)
    }

    pub fn denormalize_x(&self, v: f64) -> f64 {
        self.min_x + v * (self.max_x - self.min_x)
    }

    pub fn denormalize_y(&self, v: f64) -> f64 {
        self.min_y + v * (self.max_y - self.min_y)
    }

    pub fn normalize(&self, c: GeoCoord) -> GeoCoord {
        GeoCoord::new(self.normalize_x(c.x), self.normalize_y(c.y))
    }

    pub fn denormalize(&self, c: GeoCoord) -> GeoCoord {
        GeoCoord::new(self.denormalize_x(c.x), self.denormalize_y(c.y))
    }

    /// Splits a coordinate sequence into normalized `(y, x)` axis sequences.
    pub fn split_axes(&self, seq: &[GeoCoord]) -> (Vec<f64>, Vec<f64>) {
        let ys = seq.iter().map(|c| self.normalize_y(c.y)).collect();
        let xs = seq.iter().map(|c| self.normalize_x(c.x)).collect();
        (ys, xs)
    }
}

/// Per-axis loss histories of a training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub lat: Vec<f64>,
    pub lon: Vec<f64>,
}

/// A y-axis and an x-axis autoencoder with their shared coordinate scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Sdrnnae {
    pub lat: Drnnae,
    pub lon: Drnnae,
    pub normalizer: Normalizer,
}

const LAT_PREFIX: &str = "lat.";
const LON_PREFIX: &str = "lon.";

impl Sdrnnae {
    /// Both axis models initialised from one seeded generator, `lat` first.
    pub fn new(config: DrnnaeConfig, normalizer: Normalizer, seed: u64) -> Result<Self> {
        let mut rng = nn::rng_from_seed(seed);
        let lat = Drnnae::random(config, &mut rng)?;
        let lon = Drnnae::random(config, &mut rng)?;
        Ok(Self { lat, lon, normalizer })
    }

    pub fn n_hidden(&self) -> usize {
        self.lat.n_hidden()
    }

    pub fn rep_size(&self) -> usize {
        2 * self.n_hidden()
    }

    /// Normalized `(lat, lon)` training corpora from every fragment.
    pub fn corpus(&self, pbr: &PbrSet) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        pbr.sequences().map(|s| self.normalizer.split_axes(s)).unzip()
    }

    /// Trains both axis models independently (and concurrently). The `lon`
    /// model uses `cfg.seed + 1` for its batch order.
    pub fn train(&mut self, pbr: &PbrSet, cfg: &SgdConfig) -> Result<TrainHistory> {
        self.train_with(pbr, cfg, |_, _| {})
    }

    /// As [`Sdrnnae::train`], calling `after_epoch` with a snapshot of the
    /// pair after every epoch.
    pub fn train_with<E>(&mut self, pbr: &PbrSet, cfg: &SgdConfig, mut after_epoch: E) -> Result<TrainHistory>
    where
        E: FnMut(usize, &Sdrnnae),
    {
        if pbr.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let (lat_seqs, lon_seqs) = self.corpus(pbr);
        let lon_cfg = SgdConfig {
            seed: cfg.seed.wrapping_add(1),
            ..*cfg
        };
        let mut lat_snaps = Vec::new();
        let mut lon_snaps = Vec::new();
        let (lat_model, lon_model) = (&mut self.lat, &mut self.lon);
        let (lat_hist, lon_hist) = rayon::join(
            || lat_model.train(&lat_seqs, cfg, |_, m| lat_snaps.push(m.clone())),
            || lon_model.train(&lon_seqs, &lon_cfg, |_, m| lon_snaps.push(m.clone())),
        );
        let history = TrainHistory {
            lat: lat_hist?,
            lon: lon_hist?,
        };
        for (epoch, (lat, lon)) in lat_snaps.into_iter().zip(lon_snaps).enumerate() {
            let snap = Sdrnnae {
                lat,
                lon,
                normalizer: self.normalizer,
            };
            after_epoch(epoch + 1, &snap);
        }
        Ok(history)
    }

    /// `[lat code, lon code]` of one fragment.
    pub fn encode_sequence(&self, seq: &[GeoCoord]) -> Result<Vec<f64>> {
        let (ys, xs) = self.normalizer.split_axes(seq);
        let mut code = self.lat.encode(&ys)?;
        code.extend(self.lon.encode(&xs)?);
        Ok(code)
    }

    /// Reconstructs a fragment in map coordinates.
    pub fn reconstruct(&self, seq: &[GeoCoord]) -> Result<Vec<GeoCoord>> {
        let (ys, xs) = self.normalizer.split_axes(seq);
        let ry = self.lat.reconstruct(&ys)?;
        let rx = self.lon.reconstruct(&xs)?;
        Ok(rx
            .into_iter()
            .zip(ry)
            .map(|(x, y)| self.normalizer.denormalize(GeoCoord::new(x, y)))
            .collect())
    }

    /// Per-pixel representation: mean fragment code, zero where a pixel has
    /// no fragments.
    pub fn encode_pixels(&self, pbr: &PbrSet, n_rows: usize, n_cols: usize) -> Result<RepGrid> {
        let dim = self.rep_size();
        let entries: Vec<(PixelCoord, &[Vec<GeoCoord>])> = pbr.iter().collect();
        for (p, _) in &entries {
            if p.row >= n_rows || p.col >= n_cols {
                return Err(Error::OutOfExtent(format!(
                    "fragment pixel ({}, {}) outside a {n_rows}x{n_cols} grid",
                    p.row, p.col
                )));
            }
        }
        let codes: Vec<Vec<f64>> = entries
            .par_iter()
            .map(|(_, seqs)| {
                let mut mean = vec![0.0; dim];
                for s in seqs.iter() {
                    for (m, v) in mean.iter_mut().zip(self.encode_sequence(s)?) {
                        *m += v;
                    }
                }
                let k = seqs.len() as f64;
                mean.iter_mut().for_each(|m| *m /= k);
                Ok(mean)
            })
            .collect::<Result<_>>()?;
        let mut grid = RepGrid::zeros(n_rows, n_cols, dim);
        for ((p, _), code) in entries.iter().zip(codes) {
            grid.get_mut(*p).copy_from_slice(&code);
        }
        Ok(grid)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::from_params(&self.lat);
        for t in ckpt.tensors.iter_mut() {
            t.name.insert_str(0, LAT_PREFIX);
        }
        let mut lon = Checkpoint::from_params(&self.lon);
        for t in lon.tensors.iter_mut() {
            t.name.insert_str(0, LON_PREFIX);
        }
        ckpt.tensors.extend(lon.tensors);
        let c = &self.lat.config;
        let n = &self.normalizer;
        ckpt.with_meta("model", "sdrnnae")
            .with_meta("n_hidden", c.n_hidden)
            .with_meta("max_len", c.max_len)
            .with_meta("streams", c.streams.as_str())
            .with_meta("norm_min_x", n.min_x)
            .with_meta("norm_max_x", n.max_x)
            .with_meta("norm_min_y", n.min_y)
            .with_meta("norm_max_y", n.max_y)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.meta.get("model").map(String::as_str) != Some("sdrnnae") {
            return Err(Error::Validation("checkpoint does not hold a road encoder".into()));
        }
        let config = DrnnaeConfig {
            n_hidden: ckpt.meta_value("n_hidden")?,
            max_len: ckpt.meta_value("max_len")?,
            streams: ckpt.meta_value::<String>("streams")?.parse()?,
        };
        let normalizer = Normalizer::new(
            ckpt.meta_value("norm_min_x")?,
            ckpt.meta_value("norm_max_x")?,
            ckpt.meta_value("norm_min_y")?,
            ckpt.meta_value("norm_max_y")?,
        )?;
        let mut lat = Drnnae::zeros(config)?;
        let mut lon = Drnnae::zeros(config)?;
        let split = |prefix: &str| -> Checkpoint {
            Checkpoint {
                meta: Default::default(),
                tensors: ckpt
                    .tensors
                    .iter()
                    .filter_map(|t| {
                        t.name.strip_prefix(prefix).map(|name| {
                            let mut t = t.clone();
                            t.name = name.to_string();
                            t
                        })
                    })
                    .collect(),
            }
        };
        split(LAT_PREFIX).load_into(&mut lat)?;
        split(LON_PREFIX).load_into(&mut lon)?;
        Ok(Self { lat, lon, normalizer })
    }
}
