//! Model parameter storage. Both Siamese branches read the same structs, so
//! weight sharing is a property of the layout rather than a copy discipline.

use rand::Rng;

use super::matrix::{real, Mat, Real};
use super::vocab::PAD;

/// Size configuration of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab: usize,
    /// Embedding width d; the fused branch input is 2d wide.
    pub embed: usize,
    /// Hidden width per direction; a branch representation is 2H wide.
    pub hidden: usize,
    /// Fixed sequence length h after truncation/padding.
    pub max_len: usize,
}

/// One gate: contribution from the input column, the previous hidden state,
/// and a bias.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams<T> {
    pub w_x: Mat<T>,
    pub w_h: Mat<T>,
    pub b: Vec<T>,
}

impl<T: Real> GateParams<T> {
    fn zeros(hidden: usize, input: usize) -> Self {
        GateParams {
            w_x: Mat::zeros(hidden, input),
            w_h: Mat::zeros(hidden, hidden),
            b: vec![T::zero(); hidden],
        }
    }

    fn cast<U: Real>(&self) -> GateParams<U> {
        GateParams {
            w_x: self.w_x.cast(),
            w_h: self.w_h.cast(),
            b: self.b.iter().map(|&x| U::from(x).unwrap()).collect(),
        }
    }
}

/// LSTM cell weights for one direction: input gate, forget gate, output gate
/// and cell candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    pub input: GateParams<T>,
    pub forget: GateParams<T>,
    pub output: GateParams<T>,
    pub cell: GateParams<T>,
}

impl<T: Real> LstmParams<T> {
    fn zeros(hidden: usize, input: usize) -> Self {
        LstmParams {
            input: GateParams::zeros(hidden, input),
            forget: GateParams::zeros(hidden, input),
            output: GateParams::zeros(hidden, input),
            cell: GateParams::zeros(hidden, input),
        }
    }

    pub fn gates(&self) -> [(&'static str, &GateParams<T>); 4] {
        [
            ("input", &self.input),
            ("forget", &self.forget),
            ("output", &self.output),
            ("cell", &self.cell),
        ]
    }

    fn cast<U: Real>(&self) -> LstmParams<U> {
        LstmParams {
            input: self.input.cast(),
            forget: self.forget.cast(),
            output: self.output.cast(),
            cell: self.cell.cast(),
        }
    }
}

/// Classifier head: one tanh hidden layer over the concatenated branch
/// representations, then a scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    pub w1: Mat<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub dims: ModelDims,
    /// vocab × embed; the `<PAD>` row is pinned to zero.
    pub embedding: Mat<T>,
    pub fwd: LstmParams<T>,
    pub bwd: LstmParams<T>,
    pub mlp: MlpParams<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn zeros(dims: ModelDims) -> Self {
        let input_width = 2 * dims.embed;
        ModelParams {
            dims,
            embedding: Mat::zeros(dims.vocab, dims.embed),
            fwd: LstmParams::zeros(dims.hidden, input_width),
            bwd: LstmParams::zeros(dims.hidden, input_width),
            mlp: MlpParams {
                w1: Mat::zeros(2 * dims.hidden, 4 * dims.hidden),
                b1: vec![T::zero(); 2 * dims.hidden],
                w2: vec![T::zero(); 2 * dims.hidden],
                b2: T::zero(),
            },
        }
    }

    /// Fresh weights: embeddings uniform in [-0.05, 0.05] (PAD row zero),
    /// recurrent and head weights uniform at 1/sqrt(fan-in) scale, forget
    /// gate bias 1.
    pub fn init<R: Rng>(dims: ModelDims, rng: &mut R) -> Self {
        let mut params = Self::zeros(dims);
        let mut uniform = |limit: f64| -> T { real(rng.gen_range(-limit..=limit)) };

        for row in 1..dims.vocab {
            for w in params.embedding.row_mut(row) {
                *w = uniform(0.05);
            }
        }
        debug_assert!(params.embedding.row(PAD).iter().all(|w| w.is_zero()));

        let input_width = 2 * dims.embed;
        let wx_scale = 1.0 / (input_width as f64).sqrt();
        let wh_scale = 1.0 / (dims.hidden as f64).sqrt();
        for dir in [&mut params.fwd, &mut params.bwd] {
            for gate in [
                &mut dir.input,
                &mut dir.forget,
                &mut dir.output,
                &mut dir.cell,
            ] {
                for w in gate.w_x.as_mut_slice() {
                    *w = uniform(wx_scale);
                }
                for w in gate.w_h.as_mut_slice() {
                    *w = uniform(wh_scale);
                }
            }
            for b in &mut dir.forget.b {
                *b = T::one();
            }
        }

        let head_in = 4 * dims.hidden;
        let w1_scale = 1.0 / (head_in as f64).sqrt();
        for w in params.mlp.w1.as_mut_slice() {
            *w = uniform(w1_scale);
        }
        let w2_scale = 1.0 / (2.0 * dims.hidden as f64).sqrt();
        for w in &mut params.mlp.w2 {
            *w = uniform(w2_scale);
        }
        params
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            dims: self.dims,
            embedding: self.embedding.cast(),
            fwd: self.fwd.cast(),
            bwd: self.bwd.cast(),
            mlp: MlpParams {
                w1: self.mlp.w1.cast(),
                b1: self.mlp.b1.iter().map(|&x| U::from(x).unwrap()).collect(),
                w2: self.mlp.w2.iter().map(|&x| U::from(x).unwrap()).collect(),
                b2: U::from(self.mlp.b2).unwrap(),
            },
        }
    }

    /// Named tensors in a fixed order; the order defines the checkpoint
    /// layout and the optimizer state pairing.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[T])> {
        let mut out: Vec<(String, Vec<usize>, &[T])> = Vec::with_capacity(29);
        out.push((
            "embedding".into(),
            vec![self.embedding.rows(), self.embedding.cols()],
            self.embedding.as_slice(),
        ));
        for (dir_name, dir) in [("fwd", &self.fwd), ("bwd", &self.bwd)] {
            for (gate_name, gate) in dir.gates() {
                out.push((
                    format!("lstm.{dir_name}.{gate_name}.w_x"),
                    vec![gate.w_x.rows(), gate.w_x.cols()],
                    gate.w_x.as_slice(),
                ));
                out.push((
                    format!("lstm.{dir_name}.{gate_name}.w_h"),
                    vec![gate.w_h.rows(), gate.w_h.cols()],
                    gate.w_h.as_slice(),
                ));
                out.push((
                    format!("lstm.{dir_name}.{gate_name}.b"),
                    vec![gate.b.len()],
                    &gate.b,
                ));
            }
        }
        out.push((
            "mlp.w1".into(),
            vec![self.mlp.w1.rows(), self.mlp.w1.cols()],
            self.mlp.w1.as_slice(),
        ));
        out.push(("mlp.b1".into(), vec![self.mlp.b1.len()], &self.mlp.b1));
        out.push(("mlp.w2".into(), vec![self.mlp.w2.len()], &self.mlp.w2));
        out.push((
            "mlp.b2".into(),
            vec![1],
            std::slice::from_ref(&self.mlp.b2),
        ));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [T])> {
        let mut out: Vec<(String, &mut [T])> = Vec::with_capacity(29);
        out.push(("embedding".into(), self.embedding.as_mut_slice()));
        for (dir_name, dir) in [("fwd", &mut self.fwd), ("bwd", &mut self.bwd)] {
            for (gate_name, gate) in [
                ("input", &mut dir.input),
                ("forget", &mut dir.forget),
                ("output", &mut dir.output),
                ("cell", &mut dir.cell),
            ] {
                out.push((
                    format!("lstm.{dir_name}.{gate_name}.w_x"),
                    gate.w_x.as_mut_slice(),
                ));
                out.push((
                    format!("lstm.{dir_name}.{gate_name}.w_h"),
                    gate.w_h.as_mut_slice(),
                ));
                out.push((format!("lstm.{dir_name}.{gate_name}.b"), gate.b.as_mut_slice()));
            }
        }
        out.push(("mlp.w1".into(), self.mlp.w1.as_mut_slice()));
        out.push(("mlp.b1".into(), self.mlp.b1.as_mut_slice()));
        out.push(("mlp.w2".into(), self.mlp.w2.as_mut_slice()));
        out.push(("mlp.b2".into(), std::slice::from_mut(&mut self.mlp.b2)));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, _, d)| d.len()).sum()
    }

    /// Name of the first tensor containing a non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<String> {
        self.tensors()
            .into_iter()
            .find(|(_, _, data)| data.iter().any(|x| !x.is_finite()))
            .map(|(name, _, _)| name)
    }
}
