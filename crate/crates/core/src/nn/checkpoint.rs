//! Parameter checkpoints: a text header naming every tensor and its shape,
//! followed by the raw values as little-endian `f64`.
//!
//! ```text
//! roadgrowth-checkpoint 1
//! meta n_hidden 3
//! tensor lat.encoder.w_f 3 4
//! ...
//! end
//! <binary payload>
//! ```

use std::collections::BTreeMap;
use std::io::Write;

use super::tensor::Parameters;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "roadgrowth-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn from_params<P: Parameters>(params: &P) -> Self {
        Self {
            meta: BTreeMap::new(),
            tensors: params
                .tensors()
                .into_iter()
                .map(|t| TensorRecord {
                    name: t.name,
                    rows: t.rows,
                    cols: t.cols,
                    data: t.data.to_vec(),
                })
                .collect(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn meta_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .meta
            .get(key)
            .ok_or_else(|| Error::Validation(format!("checkpoint has no {key:?} entry")))?;
        raw.parse()
            .map_err(|_| Error::Validation(format!("checkpoint entry {key}={raw:?} is invalid")))
    }

    /// Copies the stored values into `params`, checking names and shapes.
    pub fn load_into<P: Parameters>(&self, params: &mut P) -> Result<()> {
        let expected = params.tensors();
        if expected.len() != self.tensors.len() {
            return Err(Error::Validation(format!(
                "checkpoint holds {} tensors, model has {}",
                self.tensors.len(),
                expected.len()
            )));
        }
        for (e, t) in expected.iter().zip(&self.tensors) {
            if e.name != t.name || e.rows != t.rows || e.cols != t.cols {
                return Err(Error::Validation(format!(
                    "checkpoint tensor {} {}x{} does not match model tensor {} {}x{}",
                    t.name, t.rows, t.cols, e.name, e.rows, e.cols
                )));
            }
        }
        drop(expected);
        for (dst, t) in params.tensors_mut().into_iter().zip(&self.tensors) {
            dst.copy_from_slice(&t.data);
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n");
        for (k, v) in &self.meta {
            if k.contains(char::is_whitespace) || v.contains(char::is_whitespace) || v.is_empty() {
                return Err(Error::Value(format!("checkpoint meta {k:?}={v:?} contains whitespace")));
            }
            header.push_str(&format!("meta {k} {v}\n"));
        }
        for t in &self.tensors {
            header.push_str(&format!("tensor {} {} {}\n", t.name, t.rows, t.cols));
        }
        header.push_str("end\n");
        out.write_all(header.as_bytes())?;
        for t in &self.tensors {
            for v in &t.data {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    pub fn read(data: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut line_no = 0;
        let mut next_line = |pos: &mut usize| -> Result<(usize, String)> {
            let rest = &data[*pos..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::parse(line_no + 1, "unterminated checkpoint header"))?;
            let line = std::str::from_utf8(&rest[..end])
                .map_err(|_| Error::parse(line_no + 1, "header is not UTF-8"))?
                .to_string();
            *pos += end + 1;
            line_no += 1;
            Ok((line_no, line))
        };

        let (ln, first) = next_line(&mut pos)?;
        let mut toks = first.split_whitespace();
        if toks.next() != Some(CHECKPOINT_MAGIC) {
            return Err(Error::parse(ln, "not a checkpoint file"));
        }
        match toks.next().and_then(|v| v.parse::<u32>().ok()) {
            Some(CHECKPOINT_VERSION) => {}
            other => {
                return Err(Error::parse(ln, format!("unsupported checkpoint version {other:?}")));
            }
        }

        let mut ckpt = Checkpoint::default();
        let mut shapes = Vec::new();
        loop {
            let (ln, line) = next_line(&mut pos)?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["end"] => break,
                ["meta", k, v] => {
                    ckpt.meta.insert(k.to_string(), v.to_string());
                }
                ["tensor", name, rows, cols] => {
                    let rows: usize = rows.parse().map_err(|_| Error::parse(ln, "bad row count"))?;
                    let cols: usize = cols.parse().map_err(|_| Error::parse(ln, "bad column count"))?;
                    shapes.push((name.to_string(), rows, cols));
                }
                _ => return Err(Error::parse(ln, format!("unexpected header line {line:?}"))),
            }
        }

        let total: usize = shapes.iter().map(|(_, r, c)| r * c).sum();
        let payload = &data[pos..];
        if payload.len() != total * 8 {
            return Err(Error::parse(
                line_no + 1,
                format!("payload holds {} bytes, header declares {}", payload.len(), total * 8),
            ));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of 8")));
        for (name, rows, cols) in shapes {
            let data: Vec<f64> = values.by_ref().take(rows * cols).collect();
            ckpt.tensors.push(TensorRecord { name, rows, cols, data });
        }
        Ok(ckpt)
    }
}
