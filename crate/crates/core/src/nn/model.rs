use rand::Rng;
use rand_distr::Uniform;
use serde::{Deserialize, Serialize};

use super::loss::{ce_with_grad, check_labels};
use super::{argmax, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub n_classes: usize,
    /// Initialization seed. Not part of config files: experiments derive it
    /// from their master seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: 10,
            hidden_sizes: vec![400, 400, 400],
            n_classes: 10,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.is_empty() {
            return Err(Error::Config("hidden_sizes must not be empty".into()));
        }
        if self.input_dim == 0 || self.n_classes == 0 || self.hidden_sizes.contains(&0) {
            return Err(Error::Config(format!(
                "all layer sizes must be positive (input {}, hidden {:?}, classes {})",
                self.input_dim, self.hidden_sizes, self.n_classes
            )));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_sizes.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_sizes);
        dims.push(self.n_classes);
        dims
    }

    pub fn param_count(&self) -> usize {
        self.dims().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Location of one dense layer inside the flat parameter vector.
///
/// The weight block is `rows × cols` row-major (`rows` = outputs), followed
/// immediately by `rows` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn bias_offset(&self) -> usize {
        self.offset + self.weight_len()
    }

    pub fn end(&self) -> usize {
        self.bias_offset() + self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatParams {
    pub values: Vec<f64>,
    pub layout: Vec<LayerShape>,
}

/// Multi-layer perceptron with ReLU hidden layers.
///
/// Parameters live in one contiguous vector so strategies can treat them,
/// and gradients, as plain vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layout: Vec<LayerShape>,
    params: Vec<f64>,
}

/// Everything a single backward pass produces.
#[derive(Debug, Clone)]
pub struct Backward {
    /// Data loss plus all extra terms.
    pub loss: f64,
    pub data_loss: f64,
    /// Gradient of `loss`.
    pub grad: Vec<f64>,
    /// Gradient of `data_loss` alone.
    pub data_grad: Vec<f64>,
    pub logits: Matrix,
}

/// View handed to extra loss terms during a backward pass.
///
/// A term adds its gradient either with respect to the batch logits
/// (`d_logits`) or directly with respect to parameters (`d_params`), and
/// returns its value.
pub struct TermContext<'a> {
    pub model: &'a Mlp,
    pub inputs: &'a [&'a [f64]],
    pub logits: &'a Matrix,
    pub d_logits: &'a mut Matrix,
    pub d_params: &'a mut [f64],
}

/// A differentiable addition to the data loss.
pub trait LossTerm {
    fn accumulate(&mut self, ctx: &mut TermContext<'_>) -> Result<f64>;
}

/// Layer activations kept for backprop. `acts[0]` is the input batch,
/// `acts[l + 1]` the output of layer `l` (post-ReLU for hidden layers).
struct Cache {
    batch: usize,
    acts: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let dims = config.dims();
        let layout = layout_for(&dims);
        let mut params = vec![0.0; config.param_count()];
        let mut rng = crate::seed::rng(config.seed, crate::seed::MODEL_INIT, &[]);
        for shape in &layout {
            let bound = (6.0 / (shape.cols + shape.rows) as f64).sqrt();
            let dist = Uniform::new(-bound, bound)
                .map_err(|e| Error::Internal(format!("init distribution: {e}")))?;
            for w in &mut params[shape.offset..shape.bias_offset()] {
                *w = rng.sample(dist);
            }
        }
        Ok(Self { layout, params })
    }

    /// A network with every weight and bias set to zero.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = layout_for(&config.dims());
        Ok(Self {
            params: vec![0.0; config.param_count()],
            layout,
        })
    }

    pub fn from_flat(flat: FlatParams) -> Result<Self> {
        let FlatParams { values, layout } = flat;
        if layout.is_empty() {
            return Err(Error::Shape("empty layout".into()));
        }
        let mut offset = 0;
        for (i, shape) in layout.iter().enumerate() {
            if shape.rows == 0 || shape.cols == 0 || shape.offset != offset {
                return Err(Error::Shape(format!("layer {i} descriptor {shape:?} is invalid")));
            }
            if i > 0 && layout[i - 1].rows != shape.cols {
                return Err(Error::Shape(format!(
                    "layer {i} expects {} inputs but layer {} produces {}",
                    shape.cols,
                    i - 1,
                    layout[i - 1].rows
                )));
            }
            offset = shape.end();
        }
        if offset != values.len() {
            return Err(Error::Shape(format!(
                "layout needs {offset} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            layout,
            params: values,
        })
    }

    pub fn flatten(&self) -> FlatParams {
        FlatParams {
            values: self.params.clone(),
            layout: self.layout.clone(),
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn layout(&self) -> &[LayerShape] {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layout[0].cols
    }

    pub fn n_classes(&self) -> usize {
        self.layout[self.layout.len() - 1].rows
    }

    pub fn forward(&self, inputs: &[&[f64]]) -> Result<Matrix> {
        let cache = self.forward_cached(inputs)?;
        let logits = cache.acts.last().expect("at least one layer").clone();
        Ok(Matrix::from_vec(cache.batch, self.n_classes(), logits))
    }

    /// Argmax class per row; no task information is consumed.
    pub fn predict(&self, inputs: &[&[f64]]) -> Result<Vec<usize>> {
        let logits = self.forward(inputs)?;
        Ok(logits.iter_rows().map(argmax).collect())
    }

    /// Data loss and its gradient, no extra terms.
    pub fn data_gradient(&self, inputs: &[&[f64]], labels: &[usize]) -> Result<(f64, Vec<f64>)> {
        let cache = self.forward_cached(inputs)?;
        let logits = Matrix::from_vec(cache.batch, self.n_classes(), cache.acts.last().unwrap().clone());
        let (loss, d_logits) = ce_with_grad(&logits, labels)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backprop(&cache, d_logits.as_slice(), &mut grad)?;
        Ok((loss, grad))
    }

    /// Gradient of mean cross-entropy plus every extra term.
    pub fn backward(
        &self,
        inputs: &[&[f64]],
        labels: &[usize],
        terms: &mut [&mut dyn LossTerm],
    ) -> Result<Backward> {
        let cache = self.forward_cached(inputs)?;
        let logits = Matrix::from_vec(cache.batch, self.n_classes(), cache.acts.last().unwrap().clone());
        check_labels(&logits, labels)?;
        let (data_loss, d_data) = ce_with_grad(&logits, labels)?;
        let mut data_grad = vec![0.0; self.params.len()];
        self.backprop(&cache, d_data.as_slice(), &mut data_grad)?;

        if terms.is_empty() {
            return Ok(Backward {
                loss: data_loss,
                data_loss,
                grad: data_grad.clone(),
                data_grad,
                logits,
            });
        }

        let mut d_extra = Matrix::zeros(logits.rows(), logits.cols());
        let mut grad = vec![0.0; self.params.len()];
        let mut extra_loss = 0.0;
        for term in terms.iter_mut() {
            let mut ctx = TermContext {
                model: self,
                inputs,
                logits: &logits,
                d_logits: &mut d_extra,
                d_params: &mut grad,
            };
            extra_loss += term.accumulate(&mut ctx)?;
        }
        if d_extra.as_slice().iter().any(|&g| g != 0.0) {
            self.backprop(&cache, d_extra.as_slice(), &mut grad)?;
        }
        for (g, d) in grad.iter_mut().zip(&data_grad) {
            *g += d;
        }
        let loss = data_loss + extra_loss;
        if !loss.is_finite() {
            return Err(Error::Numeric {
                layer: self.layout.len(),
                message: format!("training loss is {loss}"),
            });
        }
        Ok(Backward {
            loss,
            data_loss,
            grad,
            data_grad,
            logits,
        })
    }

    fn forward_cached(&self, inputs: &[&[f64]]) -> Result<Cache> {
        let batch = inputs.len();
        let in_dim = self.input_dim();
        let mut x = Vec::with_capacity(batch * in_dim);
        for (i, row) in inputs.iter().enumerate() {
            if row.len() != in_dim {
                return Err(Error::Shape(format!(
                    "input {i} has {} features, expected {in_dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: 0,
                    message: format!("input {i} has a non-finite feature"),
                });
            }
            x.extend_from_slice(row);
        }

        let n_layers = self.layout.len();
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x);
        for (l, shape) in self.layout.iter().enumerate() {
            let input = &acts[l];
            let w = &self.params[shape.offset..shape.bias_offset()];
            let b = &self.params[shape.bias_offset()..shape.end()];
            let mut out = vec![0.0; batch * shape.rows];
            let hidden = l + 1 < n_layers;
            for s in 0..batch {
                let xin = &input[s * shape.cols..(s + 1) * shape.cols];
                let o = &mut out[s * shape.rows..(s + 1) * shape.rows];
                for r in 0..shape.rows {
                    let wr = &w[r * shape.cols..(r + 1) * shape.cols];
                    let mut acc = b[r];
                    for (wv, xv) in wr.iter().zip(xin) {
                        acc += wv * xv;
                    }
                    o[r] = if hidden { acc.max(0.0) } else { acc };
                }
            }
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: l,
                    message: "non-finite activation in forward pass".into(),
                });
            }
            acts.push(out);
        }
        Ok(Cache { batch, acts })
    }

    /// Accumulate into `grad` the parameter gradient for output gradient `d_out`.
    fn backprop(&self, cache: &Cache, d_out: &[f64], grad: &mut [f64]) -> Result<()> {
        let batch = cache.batch;
        let mut delta = d_out.to_vec();
        for (l, shape) in self.layout.iter().enumerate().rev() {
            let input = &cache.acts[l];
            let (gw, gb) = grad[shape.offset..shape.end()].split_at_mut(shape.weight_len());
            for s in 0..batch {
                let d = &delta[s * shape.rows..(s + 1) * shape.rows];
                let xin = &input[s * shape.cols..(s + 1) * shape.cols];
                for (r, &dr) in d.iter().enumerate() {
                    if dr == 0.0 {
                        continue;
                    }
                    gb[r] += dr;
                    let row = &mut gw[r * shape.cols..(r + 1) * shape.cols];
                    for (g, xv) in row.iter_mut().zip(xin) {
                        *g += dr * xv;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[shape.offset..shape.bias_offset()];
            let mut prev = vec![0.0; batch * shape.cols];
            for s in 0..batch {
                let d = &delta[s * shape.rows..(s + 1) * shape.rows];
                let p = &mut prev[s * shape.cols..(s + 1) * shape.cols];
                for (r, &dr) in d.iter().enumerate() {
                    if dr == 0.0 {
                        continue;
                    }
                    for (pv, wv) in p.iter_mut().zip(&w[r * shape.cols..(r + 1) * shape.cols]) {
                        *pv += dr * wv;
                    }
                }
                // ReLU mask from the stored post-activation
                for (pv, &a) in p.iter_mut().zip(&input[s * shape.cols..(s + 1) * shape.cols]) {
                    if a <= 0.0 {
                        *pv = 0.0;
                    }
                }
            }
            if prev.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: l,
                    message: "non-finite gradient in backward pass".into(),
                });
            }
            delta = prev;
        }
        Ok(())
    }
}

fn layout_for(dims: &[usize]) -> Vec<LayerShape> {
    let mut offset = 0;
    dims.windows(2)
        .map(|w| {
            let shape = LayerShape {
                rows: w[1],
                cols: w[0],
                offset,
            };
            offset = shape.end();
            shape
        })
        .collect()
}
