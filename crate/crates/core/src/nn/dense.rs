use super::tensor::{Matrix, Parameters, TensorView};
use crate::error::{Error, Result};

/// Affine map `y = W x + b`; the bias is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Option<Vec<f64>>,
    name: &'static str,
}

impl Dense {
    pub fn zeros(name: &'static str, input: usize, output: usize, bias: bool) -> Self {
        Self {
            w: Matrix::zeros(output, input),
            b: bias.then(|| vec![0.0; output]),
            name,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}: input of length {} for a layer expecting {}",
                self.name,
                x.len(),
                self.input_dim()
            )));
        }
        let mut y = match &self.b {
            Some(b) => b.clone(),
            None => vec![0.0; self.output_dim()],
        };
        self.w.mul_vec_add(x, &mut y);
        Ok(y)
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense) -> Vec<f64> {
        grad.w.add_outer(dy, x);
        if let Some(gb) = grad.b.as_mut() {
            for (g, d) in gb.iter_mut().zip(dy) {
                *g += d;
            }
        }
        let mut dx = vec![0.0; self.input_dim()];
        self.w.mul_t_vec_add(dy, &mut dx);
        dx
    }
}

impl Parameters for Dense {
    fn tensors(&self) -> Vec<TensorView<'_>> {
        let mut v = vec![TensorView {
            name: format!("{}.w", self.name),
            rows: self.w.rows,
            cols: self.w.cols,
            data: &self.w.data,
        }];
        if let Some(b) = &self.b {
            v.push(TensorView {
                name: format!("{}.b", self.name),
                rows: b.len(),
                cols: 1,
                data: b,
            });
        }
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![&mut self.w.data];
        if let Some(b) = self.b.as_mut() {
            v.push(b);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_loss_gradient_is_two_residual() {
        // y = w x + b, L = (y - t)^2, so dL/db = 2 (y - t) and dL/dw = 2 (y - t) x
        let mut layer = Dense::zeros("toy", 1, 1, true);
        layer.w.data[0] = 0.7;
        layer.b.as_mut().unwrap()[0] = -0.2;
        let (x, t) = (1.5, 0.4);
        let y = layer.forward(&[x]).unwrap()[0];
        let mut grad = layer.zeros_like();
        let dx = layer.backward(&[x], &[2.0 * (y - t)], &mut grad);
        assert!((grad.b.as_ref().unwrap()[0] - 2.0 * (y - t)).abs() < 1e-15);
        assert!((grad.w.data[0] - 2.0 * (y - t) * x).abs() < 1e-15);
        assert!((dx[0] - 2.0 * (y - t) * 0.7).abs() < 1e-15);
    }

    #[test]
    fn wrong_input_length() {
        let layer = Dense::zeros("d", 3, 2, false);
        assert!(matches!(layer.forward(&[1.0]), Err(Error::DimensionMismatch(_))));
    }
}
