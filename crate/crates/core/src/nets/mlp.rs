use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

/// Fully connected layer, `y = x W + b` with `W` stored input-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    /// Orthogonal weights scaled by `gain`, zero bias.
    pub fn orthogonal<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, gain: f64, rng: &mut R) -> Self {
        Self {
            weight: orthogonal(fan_in, fan_out, rng) * gain,
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }
}

/// Random matrix with orthonormal rows or columns (whichever is shorter),
/// via modified Gram-Schmidt on a Gaussian draw.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let transpose = rows < cols;
    let (long, short) = if transpose { (cols, rows) } else { (rows, cols) };
    let mut m: Array2<f64> = Array2::from_shape_fn((long, short), |_| rng.sample(StandardNormal));
    for j in 0..short {
        for k in 0..j {
            let dot = m.column(j).dot(&m.column(k));
            let prev = m.column(k).to_owned();
            m.column_mut(j).scaled_add(-dot, &prev);
        }
        let norm = m.column(j).dot(&m.column(j)).sqrt();
        m.column_mut(j).mapv_inplace(|v| v / norm);
    }
    if transpose {
        m.reversed_axes().as_standard_layout().to_owned()
    } else {
        m
    }
}

/// Multi-layer perceptron with tanh hidden units and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations recorded during a forward pass: `activations[0]` is the
/// input, `activations[k + 1]` the output of layer `k`.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub activations: Vec<Array2<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("trace has an input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `sizes` lists input, hidden and output widths.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden_gain: f64, output_gain: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let gain = if k == last { output_gain } else { hidden_gain };
                Dense::orthogonal(w[0], w[1], gain, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(Dense::fan_out).unwrap_or(0)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Dense::fan_out));
        s
    }

    pub fn forward(&self, input: ArrayView2<f64>) -> MlpTrace {
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_owned());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = activations[k].dot(&layer.weight);
            z += &layer.bias;
            if k != last {
                z.mapv_inplace(f64::tanh);
            }
            activations.push(z);
        }
        MlpTrace { activations }
    }

    /// Reverse-mode pass. `d_output` is the loss gradient w.r.t. the network
    /// output, one row per input row; gradients are summed over rows.
    pub fn backward(&self, trace: &MlpTrace, d_output: Array2<f64>) -> MlpGrad {
        let n = self.layers.len();
        let mut grads: Vec<Dense> = Vec::with_capacity(n);
        let mut delta = d_output;
        for k in (0..n).rev() {
            if k != n - 1 {
                let a = &trace.activations[k + 1];
                delta.zip_mut_with(a, |d, &y| *d *= 1.0 - y * y);
            }
            let weight = trace.activations[k].t().dot(&delta).as_standard_layout().into_owned();
            let bias = delta.sum_axis(Axis(0));
            if k > 0 {
                delta = delta.dot(&self.layers[k].weight.t());
            }
            grads.push(Dense { weight, bias });
        }
        grads.reverse();
        MlpGrad { layers: grads }
    }

    pub fn zero_grad(&self) -> MlpGrad {
        MlpGrad {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.fan_in(), l.fan_out()))
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }
}

pub(crate) fn dense_slices(layers: &[Dense]) -> impl Iterator<Item = &[f64]> {
    layers.iter().flat_map(|l| {
        [
            l.weight.as_slice().expect("standard layout"),
            l.bias.as_slice().expect("standard layout"),
        ]
    })
}

pub(crate) fn dense_slices_mut(layers: &mut [Dense]) -> impl Iterator<Item = &mut [f64]> {
    layers.iter_mut().flat_map(|l| {
        [
            l.weight.as_slice_mut().expect("standard layout"),
            l.bias.as_slice_mut().expect("standard layout"),
        ]
    })
}
