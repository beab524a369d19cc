use rand::Rng;

/// One-hidden-layer perceptron with ReLU, stored as flat row-major buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    /// `hidden x input`
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `output x hidden`
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub out: Vec<f64>,
}

impl Mlp {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Mlp {
            input,
            hidden,
            output,
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; output * hidden],
            b2: vec![0.0; output],
        }
    }

    /// Xavier-uniform weights, zero biases.
    pub fn xavier(input: usize, hidden: usize, output: usize, rng: &mut impl Rng) -> Self {
        let mut m = Mlp::zeros(input, hidden, output);
        let a1 = (6.0 / (input + hidden) as f64).sqrt();
        m.w1.iter_mut().for_each(|w| *w = rng.gen_range(-a1..=a1));
        let a2 = (6.0 / (hidden + output) as f64).sqrt();
        m.w2.iter_mut().for_each(|w| *w = rng.gen_range(-a2..=a2));
        m
    }

    pub fn zeros_like(&self) -> Self {
        Mlp::zeros(self.input, self.hidden, self.output)
    }

    pub fn tensors(&self) -> [&Vec<f64>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn forward(&self, x: &[f64]) -> MlpTrace {
        debug_assert_eq!(x.len(), self.input);
        let pre: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.input..(h + 1) * self.input];
                self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        let hidden: Vec<f64> = pre.iter().map(|&z| if z > 0.0 || z.is_nan() { z } else { 0.0 }).collect();
        let out = (0..self.output)
            .map(|o| {
                let row = &self.w2[o * self.hidden..(o + 1) * self.hidden];
                self.b2[o] + row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        MlpTrace { pre, hidden, out }
    }

    /// Accumulates parameter gradients into `grads` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], trace: &MlpTrace, d_out: &[f64], grads: &mut Mlp) -> Vec<f64> {
        let mut d_hidden = vec![0.0; self.hidden];
        for (o, &g) in d_out.iter().enumerate() {
            grads.b2[o] += g;
            let row = o * self.hidden;
            for h in 0..self.hidden {
                grads.w2[row + h] += g * trace.hidden[h];
                d_hidden[h] += g * self.w2[row + h];
            }
        }
        let mut d_x = vec![0.0; self.input];
        for h in 0..self.hidden {
            if trace.pre[h] <= 0.0 {
                continue;
            }
            let g = d_hidden[h];
            grads.b1[h] += g;
            let row = h * self.input;
            for i in 0..self.input {
                grads.w1[row + i] += g * x[i];
                d_x[i] += g * self.w1[row + i];
            }
        }
        d_x
    }
}
