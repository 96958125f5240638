use ndarray::{s, Array1, Array2, Axis};

use super::{MultitaskParams, Weights};
use crate::corpus::{decode_iob, repair_iob, AnnotatedUtterance, DecodeMode, Span, Tag};
use crate::neural::{
    add_regularization_grad, bilstm_backward, bilstm_forward, dropout_mask, log_softmax, regularization_penalty,
    BiLstmTrace, RegularizationConfig,
};
use crate::{Error, Result};

/// Model input for one utterance: vocabulary ids plus the frozen
/// pre-trained rows and optional gazetteer bits.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub ids: Vec<usize>,
    /// `T x pretrained_dim`
    pub pretrained: Array2<f64>,
    /// `T x G`, present iff the towers take gazetteer inputs.
    pub gaz: Option<Array2<f64>>,
}

impl Encoded {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Gold label indices for one utterance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gold {
    pub intent: usize,
    pub tags: Vec<usize>,
}

/// Everything the backward pass needs, plus the output distributions.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub ids: Vec<usize>,
    pub common: BiLstmTrace,
    /// Inverted-dropout masks; `None` in evaluation mode.
    common_mask: Option<Array2<f64>>,
    slot_mask: Option<Array2<f64>>,
    intent_mask: Option<Array1<f64>>,
    pub slot: BiLstmTrace,
    pub intent: BiLstmTrace,
    /// `T x 2h`, before dropout.
    pub r_slot: Array2<f64>,
    /// `2h`, before dropout.
    pub r_intent: Array1<f64>,
    /// `T x |tags|`
    pub slot_log_probs: Array2<f64>,
    pub intent_log_probs: Array1<f64>,
}

impl ForwardTrace {
    /// `T x 2h` common-layer outputs `r^c_t`.
    pub fn r_common(&self) -> Array2<f64> {
        self.common.concat()
    }

    pub fn slot_probs(&self) -> Array2<f64> {
        self.slot_log_probs.mapv(f64::exp)
    }

    pub fn intent_probs(&self) -> Array1<f64> {
        self.intent_log_probs.mapv(f64::exp)
    }
}

/// Per-task multipliers on the cross-entropy terms. The joint objective uses
/// 1 and 1; zeroing one isolates the other task's gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskWeights {
    pub slot: f64,
    pub intent: f64,
}

impl TaskWeights {
    pub const JOINT: TaskWeights = TaskWeights { slot: 1.0, intent: 1.0 };
    pub const SLOT_ONLY: TaskWeights = TaskWeights { slot: 1.0, intent: 0.0 };
    pub const INTENT_ONLY: TaskWeights = TaskWeights { slot: 0.0, intent: 1.0 };
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub slot: f64,
    pub intent: f64,
    pub reg: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.slot + self.intent + self.reg
    }

    fn accumulate(&mut self, other: LossParts) {
        self.slot += other.slot;
        self.intent += other.intent;
        self.reg += other.reg;
    }
}

/// Decoded output for one utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub intent: String,
    pub tags: Vec<Tag>,
    pub spans: Vec<Span>,
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn mask2(shape: (usize, usize), rate: f64, rng: &mut Option<&mut dyn rand::RngCore>) -> Option<Array2<f64>> {
    match rng {
        Some(r) if rate > 0.0 => Some(dropout_mask(ndarray::Dim(shape), rate, r)),
        _ => None,
    }
}

fn masked(a: &Array2<f64>, mask: &Option<Array2<f64>>) -> Array2<f64> {
    match mask {
        Some(m) => a * m,
        None => a.clone(),
    }
}

impl MultitaskParams {
    /// Looks up ids and pre-trained rows. `gaz` must be given exactly when
    /// the towers take gazetteer inputs.
    pub fn encode_tokens(&self, tokens: &[String], gaz: Option<Array2<f64>>) -> Result<Encoded> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput);
        }
        let g = self.gazetteer_input_dim();
        match &gaz {
            None if g > 0 => return Err(Error::MissingGazFeatures(g)),
            Some(f) if f.dim() != (tokens.len(), g) => {
                return Err(Error::DimensionMismatch(format!(
                    "gazetteer features are {:?}, expected ({}, {g})",
                    f.dim(),
                    tokens.len()
                )))
            }
            _ => {}
        }
        let vocab = &self.embeddings.vocab;
        let mut pretrained = Array2::zeros((tokens.len(), self.embeddings.pretrained_dim()));
        for (t, tok) in tokens.iter().enumerate() {
            pretrained.row_mut(t).assign(&Array1::from(self.embeddings.pretrained_vector(tok)));
        }
        Ok(Encoded {
            ids: tokens.iter().map(|t| vocab.lookup(t)).collect(),
            pretrained,
            gaz: if g > 0 { gaz } else { None },
        })
    }

    /// Encodes with the model's own gazetteer featurizer, if it has one.
    pub fn encode(&self, tokens: &[String]) -> Result<Encoded> {
        self.encode_tokens(tokens, self.featurize(tokens))
    }

    pub fn gold(&self, utt: &AnnotatedUtterance) -> Result<Gold> {
        let (intent, tags) = self.labels.encode(utt)?;
        Ok(Gold { intent, tags })
    }

    /// Evaluation-mode forward pass.
    pub fn forward(&self, input: &Encoded) -> Result<ForwardTrace> {
        self.forward_with(input, 0.0, None)
    }

    /// Forward pass; dropout at `rate` is applied to each bi-LSTM layer's
    /// outputs when an rng is supplied.
    pub fn forward_with(
        &self,
        input: &Encoded,
        rate: f64,
        mut rng: Option<&mut dyn rand::RngCore>,
    ) -> Result<ForwardTrace> {
        let w = &self.weights;
        let t_len = input.len();
        if t_len == 0 {
            return Err(Error::EmptyInput);
        }
        if input.ids.iter().any(|&i| i >= w.embeddings.nrows()) {
            return Err(Error::DimensionMismatch("token id outside the embedding table".into()));
        }
        let de = w.embeddings.ncols();
        let mut x = Array2::zeros((t_len, de + input.pretrained.ncols()));
        for (t, &id) in input.ids.iter().enumerate() {
            x.slice_mut(s![t, ..de]).assign(&w.embeddings.row(id));
        }
        x.slice_mut(s![.., de..]).assign(&input.pretrained);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let common = bilstm_forward(x.view(), &w.common)?;
        let rc = common.concat();
        let common_mask = mask2(rc.dim(), rate, &mut rng);
        let rc = masked(&rc, &common_mask);
        let g = self.gazetteer_input_dim();
        let tower_in = match (&input.gaz, g) {
            (_, 0) => rc,
            (Some(f), _) => ndarray::concatenate(Axis(1), &[rc.view(), f.view()]).unwrap(),
            (None, _) => return Err(Error::MissingGazFeatures(g)),
        };
        let slot = bilstm_forward(tower_in.view(), &w.slot_tower)?;
        let intent = bilstm_forward(tower_in.view(), &w.intent_tower)?;

        let r_slot = slot.concat();
        let slot_mask = mask2(r_slot.dim(), rate, &mut rng);
        let slot_in = masked(&r_slot, &slot_mask);
        let mut slot_logits = slot_in.dot(&w.slot_head.weight.t());
        slot_logits += &w.slot_head.bias;
        let mut slot_log_probs = Array2::zeros(slot_logits.raw_dim());
        for (mut out, row) in slot_log_probs.rows_mut().into_iter().zip(slot_logits.rows()) {
            out.assign(&log_softmax(row)?);
        }

        let hi = w.intent_tower.hidden_dim();
        let mut r_intent = Array1::zeros(2 * hi);
        r_intent.slice_mut(s![..hi]).assign(&intent.forward_states().row(t_len - 1));
        r_intent.slice_mut(s![hi..]).assign(&intent.backward_states().row(0));
        let intent_mask = match &mut rng {
            Some(r) if rate > 0.0 => Some(dropout_mask(r_intent.raw_dim(), rate, r)),
            _ => None,
        };
        let intent_in = match &intent_mask {
            Some(m) => &r_intent * m,
            None => r_intent.clone(),
        };
        let intent_logits = w.intent_head.weight.dot(&intent_in) + &w.intent_head.bias;
        let intent_log_probs = log_softmax(intent_logits.view())?;

        Ok(ForwardTrace {
            ids: input.ids.clone(),
            common,
            common_mask,
            slot_mask,
            intent_mask,
            slot,
            intent,
            r_slot,
            r_intent,
            slot_log_probs,
            intent_log_probs,
        })
    }

    /// Accumulates the gradient of the weighted cross-entropy terms (no
    /// regularization) into `grads`.
    pub fn backward(&self, input: &Encoded, trace: &ForwardTrace, gold: &Gold, tw: TaskWeights, grads: &mut Weights) {
        let w = &self.weights;
        let t_len = trace.ids.len();
        let hc = w.common.hidden_dim();
        let g = self.gazetteer_input_dim();
        let mut d_tower_in = Array2::<f64>::zeros((t_len, 2 * hc + g));

        if tw.slot != 0.0 {
            let mut d_logits = trace.slot_probs();
            for (t, &tag) in gold.tags.iter().enumerate() {
                d_logits[[t, tag]] -= 1.0;
            }
            d_logits *= tw.slot;
            let slot_in = masked(&trace.r_slot, &trace.slot_mask);
            grads.slot_head.weight += &d_logits.t().dot(&slot_in);
            grads.slot_head.bias += &d_logits.sum_axis(Axis(0));
            let d_r = masked(&d_logits.dot(&w.slot_head.weight), &trace.slot_mask);
            let hs = w.slot_tower.hidden_dim();
            d_tower_in += &bilstm_backward(
                &w.slot_tower,
                &trace.slot,
                d_r.slice(s![.., ..hs]),
                d_r.slice(s![.., hs..]),
                &mut grads.slot_tower,
            );
        }

        if tw.intent != 0.0 {
            let mut d_logits = trace.intent_probs();
            d_logits[gold.intent] -= 1.0;
            d_logits *= tw.intent;
            let intent_in = match &trace.intent_mask {
                Some(m) => &trace.r_intent * m,
                None => trace.r_intent.clone(),
            };
            let d_col = d_logits.view().insert_axis(Axis(1));
            grads.intent_head.weight += &d_col.dot(&intent_in.view().insert_axis(Axis(0)));
            grads.intent_head.bias += &d_logits;
            let mut d_r = w.intent_head.weight.t().dot(&d_logits);
            if let Some(m) = &trace.intent_mask {
                d_r *= m;
            }
            let hi = w.intent_tower.hidden_dim();
            let mut d_f = Array2::zeros((t_len, hi));
            let mut d_b = Array2::zeros((t_len, hi));
            d_f.row_mut(t_len - 1).assign(&d_r.slice(s![..hi]));
            d_b.row_mut(0).assign(&d_r.slice(s![hi..]));
            d_tower_in += &bilstm_backward(&w.intent_tower, &trace.intent, d_f.view(), d_b.view(), &mut grads.intent_tower);
        }

        let d_rc = masked(&d_tower_in.slice(s![.., ..2 * hc]).to_owned(), &trace.common_mask);
        let d_x = bilstm_backward(
            &w.common,
            &trace.common,
            d_rc.slice(s![.., ..hc]),
            d_rc.slice(s![.., hc..]),
            &mut grads.common,
        );
        let de = w.embeddings.ncols();
        for (t, &id) in input.ids.iter().enumerate() {
            let mut row = grads.embeddings.row_mut(id);
            row += &d_x.slice(s![t, ..de]);
        }
    }

    /// Decodes an utterance; `gaz` as in [`MultitaskParams::encode_tokens`].
    pub fn predict_with(&self, tokens: &[String], gaz: Option<Array2<f64>>) -> Result<Prediction> {
        let trace = self.forward(&self.encode_tokens(tokens, gaz)?)?;
        Ok(self.decode(&trace))
    }

    /// Decodes with the model's own gazetteer featurizer.
    pub fn predict(&self, tokens: &[String]) -> Result<Prediction> {
        self.predict_with(tokens, self.featurize(tokens))
    }

    pub fn decode(&self, trace: &ForwardTrace) -> Prediction {
        let intent = argmax(trace.intent_log_probs.iter().copied());
        let raw: Vec<Tag> = trace
            .slot_log_probs
            .rows()
            .into_iter()
            .map(|row| self.labels.tag(argmax(row.iter().copied())).clone())
            .collect();
        let tags = repair_iob(&raw);
        let spans = decode_iob(&tags, DecodeMode::Strict).expect("repaired tags are valid");
        Prediction {
            intent: self.labels.intent(intent).to_string(),
            tags,
            spans,
        }
    }
}

/// Cross-entropy terms for one trace plus the penalty on `params`.
pub fn joint_loss(trace: &ForwardTrace, gold: &Gold, reg: &RegularizationConfig, params: &MultitaskParams) -> Result<LossParts> {
    if gold.tags.len() != trace.ids.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} gold tags for {} tokens",
            gold.tags.len(),
            trace.ids.len()
        )));
    }
    if gold.intent >= trace.intent_log_probs.len() || gold.tags.iter().any(|&t| t >= trace.slot_log_probs.ncols()) {
        return Err(Error::UnknownLabel("gold label index outside the label space".into()));
    }
    let slot = -gold.tags.iter().enumerate().map(|(t, &k)| trace.slot_log_probs[[t, k]]).sum::<f64>();
    let intent = -trace.intent_log_probs[gold.intent];
    Ok(LossParts {
        slot,
        intent,
        reg: regularization_penalty(&params.weights, reg),
    })
}

/// Summed loss and gradient over a batch. The penalty is counted once per
/// batch. Pass an rng to train with dropout.
pub fn compute_gradients(
    params: &MultitaskParams,
    batch: &[(Encoded, Gold)],
    reg: &RegularizationConfig,
    tw: TaskWeights,
    mut rng: Option<&mut dyn rand::RngCore>,
) -> Result<(LossParts, Weights)> {
    let mut grads = params.weights.zeros_like();
    let mut loss = LossParts::default();
    for (input, gold) in batch {
        let trace = match rng.as_deref_mut() {
            Some(r) => params.forward_with(input, reg.dropout, Some(r))?,
            None => params.forward(input)?,
        };
        let mut parts = joint_loss(&trace, gold, &RegularizationConfig::NONE, params)?;
        parts.slot *= tw.slot;
        parts.intent *= tw.intent;
        loss.accumulate(parts);
        params.backward(input, &trace, gold, tw, &mut grads);
    }
    loss.reg = regularization_penalty(&params.weights, reg);
    add_regularization_grad(&params.weights, &mut grads, reg);
    if !loss.total().is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok((loss, grads))
}

impl MultitaskParams {
    /// Mean over tokens of the common-layer outputs `r^c_t`.
    pub fn sentence_representation(&self, tokens: &[String]) -> Result<Array1<f64>> {
        let g = self.gazetteer_input_dim();
        // the common layer never sees gazetteer inputs, so zeros suffice
        let gaz = (g > 0).then(|| Array2::zeros((tokens.len(), g)));
        let trace = self.forward(&self.encode_tokens(tokens, gaz)?)?;
        Ok(trace.r_common().mean_axis(Axis(0)).expect("non-empty"))
    }
}
