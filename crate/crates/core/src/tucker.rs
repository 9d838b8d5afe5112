//! Linear Tucker-style factorization of the adjacency tensor: one shared
//! entity matrix for subjects and objects, a relation matrix, and a core
//! tensor. A triple is scored by contracting the core with the three
//! embeddings and squashing through the logistic sigmoid. Training is plain
//! SGD on per-triple binary cross-entropy against sampled negatives; the
//! model stays strictly multilinear, which is what the downstream causal
//! analysis assumes.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use ndarray::{Array1, Array2, Array3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::kg::{AdjacencyTensor, Triple};
use crate::rng::substream;

/// Trained factorization: entity matrix (n_e x d_e), relation matrix
/// (n_r x d_r), core tensor (d_e x d_r x d_e).
#[derive(Debug, Clone)]
pub struct TuckerModel {
    pub entity: Array2<f64>,
    pub relation: Array2<f64>,
    pub core: Array3<f64>,
}

impl TuckerModel {
    pub fn n_e(&self) -> usize {
        self.entity.nrows()
    }

    pub fn n_r(&self) -> usize {
        self.relation.nrows()
    }

    pub fn d_e(&self) -> usize {
        self.entity.ncols()
    }

    pub fn d_r(&self) -> usize {
        self.relation.ncols()
    }

    pub fn all_finite(&self) -> bool {
        self.entity.iter().all(|x| x.is_finite())
            && self.relation.iter().all(|x| x.is_finite())
            && self.core.iter().all(|x| x.is_finite())
    }

    fn check_ids(&self, s: usize, r: usize, o: usize) -> Result<()> {
        if s >= self.n_e() {
            return Err(Error::OutOfBounds { what: "entity", id: s, bound: self.n_e() });
        }
        if o >= self.n_e() {
            return Err(Error::OutOfBounds { what: "entity", id: o, bound: self.n_e() });
        }
        if r >= self.n_r() {
            return Err(Error::OutOfBounds { what: "relation", id: r, bound: self.n_r() });
        }
        Ok(())
    }

    /// Raw trilinear score of a triple (before the sigmoid).
    pub fn phi(&self, s: usize, r: usize, o: usize) -> Result<f64> {
        self.check_ids(s, r, o)?;
        let (de, dr) = (self.d_e(), self.d_r());
        let mut acc = 0.0;
        for a in 0..de {
            let ea = self.entity[[s, a]];
            for b in 0..dr {
                let eb = ea * self.relation[[r, b]];
                for c in 0..de {
                    acc += eb * self.core[[a, b, c]] * self.entity[[o, c]];
                }
            }
        }
        Ok(acc)
    }

    /// Probability-like score in (0, 1): sigmoid of the trilinear form.
    pub fn score(&self, s: usize, r: usize, o: usize) -> Result<f64> {
        Ok(sigmoid(self.phi(s, r, o)?))
    }
}

/// Trainer knobs. `negatives_per_positive` corruptions are drawn for every
/// observed triple each epoch, replacing the head or the tail with equal
/// probability.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub d_e: usize,
    pub d_r: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives_per_positive: usize,
    pub seed: u64,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            d_e: 5,
            d_r: 5,
            epochs: 200,
            learning_rate: 1.0,
            negatives_per_positive: 5,
            seed: 42,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_e < 1 || self.d_r < 1 {
            return Err(Error::InvalidValue("embedding dims must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidValue("learning rate must be > 0".into()));
        }
        if self.negatives_per_positive < 1 {
            return Err(Error::InvalidValue(
                "negatives per positive must be >= 1".into(),
            ));
        }
        if self.l2 < 0.0 {
            return Err(Error::InvalidValue("l2 must be >= 0".into()));
        }
        Ok(())
    }
}

/// One labelled training example: an index triple plus a 0/1 target.
#[derive(Debug, Clone, Copy)]
pub struct Example {
    pub triple: Triple,
    pub label: f64,
}

/// Exact analytic gradients of the batch loss, aggregated per touched row.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub entity_rows: BTreeMap<usize, Array1<f64>>,
    pub relation_rows: BTreeMap<usize, Array1<f64>>,
    pub core: Array3<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// ln(1 + e^x) without overflow
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean binary cross-entropy of the batch plus l2 penalties, with exact
/// analytic gradients. The penalty covers the core tensor once and the
/// embedding rows of each example (so a row used twice is penalized twice,
/// matching the returned derivatives exactly).
pub fn loss_and_grad(
    model: &TuckerModel,
    batch: &[Example],
    l2: f64,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::InvalidValue("empty batch".into()));
    }
    let (de, dr) = (model.d_e(), model.d_r());
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grads = Gradients {
        entity_rows: BTreeMap::new(),
        relation_rows: BTreeMap::new(),
        core: Array3::zeros((de, dr, de)),
    };

    for ex in batch {
        let Triple { head: s, rel: r, tail: o } = ex.triple;
        model.check_ids(s, r, o)?;
        let e_s = model.entity.row(s);
        let w_r = model.relation.row(r);
        let e_o = model.entity.row(o);

        // phi plus its partials w.r.t. each embedding row
        let mut phi = 0.0;
        let mut d_es = Array1::zeros(de);
        let mut d_wr = Array1::zeros(dr);
        let mut d_eo = Array1::zeros(de);
        for a in 0..de {
            for b in 0..dr {
                for c in 0..de {
                    let w = model.core[[a, b, c]];
                    let (ea, rb, ec) = (e_s[a], w_r[b], e_o[c]);
                    phi += w * ea * rb * ec;
                    d_es[a] += w * rb * ec;
                    d_wr[b] += w * ea * ec;
                    d_eo[c] += w * ea * rb;
                }
            }
        }

        loss += inv_b * (softplus(phi) - ex.label * phi);
        let dphi = inv_b * (sigmoid(phi) - ex.label);

        for a in 0..de {
            for b in 0..dr {
                for c in 0..de {
                    grads.core[[a, b, c]] += dphi * e_s[a] * w_r[b] * e_o[c];
                }
            }
        }
        let es_grad = grads
            .entity_rows
            .entry(s)
            .or_insert_with(|| Array1::zeros(de));
        es_grad.scaled_add(dphi, &d_es);
        es_grad.scaled_add(2.0 * l2 * inv_b, &e_s);
        let wr_grad = grads
            .relation_rows
            .entry(r)
            .or_insert_with(|| Array1::zeros(dr));
        wr_grad.scaled_add(dphi, &d_wr);
        wr_grad.scaled_add(2.0 * l2 * inv_b, &w_r);
        let eo_grad = grads
            .entity_rows
            .entry(o)
            .or_insert_with(|| Array1::zeros(de));
        eo_grad.scaled_add(dphi, &d_eo);
        eo_grad.scaled_add(2.0 * l2 * inv_b, &e_o);

        loss += l2 * inv_b * (e_s.dot(&e_s) + w_r.dot(&w_r) + e_o.dot(&e_o));
    }

    loss += l2 * model.core.iter().map(|w| w * w).sum::<f64>();
    grads.core.scaled_add(2.0 * l2, &model.core);

    Ok((loss, grads))
}

/// Outcome of a training run: the model plus the loss trace needed to judge
/// whether optimization made progress.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TuckerModel,
    /// Mean loss over the fixed evaluation batch before any update.
    pub initial_loss: f64,
    /// Same quantity after the last epoch.
    pub final_loss: f64,
    /// Mean per-step training loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

fn init_model(n_e: usize, n_r: usize, cfg: &TrainConfig, rng: &mut impl Rng) -> TuckerModel {
    // uniform init keeps the parameters (and anything linear in them)
    // non-Gaussian from the very first epoch
    let mut uniform = |_| rng.gen_range(-0.1..0.1);
    TuckerModel {
        entity: Array2::from_shape_simple_fn((n_e, cfg.d_e), || uniform(())),
        relation: Array2::from_shape_simple_fn((n_r, cfg.d_r), || uniform(())),
        core: Array3::from_shape_simple_fn((cfg.d_e, cfg.d_r, cfg.d_e), || uniform(())),
    }
}

/// Draws a corruption of `positive` that is not itself a stored triple
/// (rejection-sampled; gives up after a bounded number of tries on nearly
/// dense graphs and returns the last draw).
fn corrupt(positive: Triple, tensor: &AdjacencyTensor, rng: &mut impl Rng) -> Triple {
    let n_e = tensor.n_e();
    let mut candidate = positive;
    for _ in 0..64 {
        candidate = if rng.gen_bool(0.5) {
            Triple { head: rng.gen_range(0..n_e), ..positive }
        } else {
            Triple { tail: rng.gen_range(0..n_e), ..positive }
        };
        if !tensor.contains(candidate.head, candidate.rel, candidate.tail) {
            return candidate;
        }
    }
    candidate
}

/// Trains a factorization of `tensor` by SGD. Deterministic given the seed:
/// initialization, shuffling, and negative sampling each draw from their own
/// named sub-stream.
pub fn train(tensor: &AdjacencyTensor, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if tensor.n_e() < 2 || tensor.n_r() < 1 || tensor.is_empty() {
        return Err(Error::Degenerate(format!(
            "need >= 2 entities, >= 1 relation and >= 1 triple, got {} entities, {} relations, {} triples",
            tensor.n_e(),
            tensor.n_r(),
            tensor.len()
        )));
    }

    let positives = tensor.sorted_triples();
    let mut init_rng = substream(cfg.seed, "tucker-init");
    let mut shuffle_rng = substream(cfg.seed, "tucker-shuffle");
    let mut neg_rng = substream(cfg.seed, "tucker-negatives");
    let mut eval_rng = substream(cfg.seed, "tucker-eval");

    let mut model = init_model(tensor.n_e(), tensor.n_r(), cfg, &mut init_rng);

    // fixed evaluation batch: all positives plus k held negatives apiece
    let mut eval_batch: Vec<Example> = Vec::with_capacity(
        positives.len() * (1 + cfg.negatives_per_positive),
    );
    for &p in &positives {
        eval_batch.push(Example { triple: p, label: 1.0 });
        for _ in 0..cfg.negatives_per_positive {
            eval_batch.push(Example {
                triple: corrupt(p, tensor, &mut eval_rng),
                label: 0.0,
            });
        }
    }
    let (initial_loss, _) = loss_and_grad(&model, &eval_batch, cfg.l2)?;

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut batch: Vec<Example> = Vec::with_capacity(1 + cfg.negatives_per_positive);
    let mut order: Vec<usize> = (0..positives.len()).collect();
    for _epoch in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            order.swap(i, shuffle_rng.gen_range(0..=i));
        }
        let mut epoch_loss = 0.0;
        for &idx in &order {
            let positive = positives[idx];
            batch.clear();
            batch.push(Example { triple: positive, label: 1.0 });
            for _ in 0..cfg.negatives_per_positive {
                batch.push(Example {
                    triple: corrupt(positive, tensor, &mut neg_rng),
                    label: 0.0,
                });
            }
            let (loss, grads) = loss_and_grad(&model, &batch, cfg.l2)?;
            epoch_loss += loss;
            let lr = cfg.learning_rate;
            for (row, g) in &grads.entity_rows {
                let mut r = model.entity.row_mut(*row);
                r.scaled_add(-lr, g);
            }
            for (row, g) in &grads.relation_rows {
                let mut r = model.relation.row_mut(*row);
                r.scaled_add(-lr, g);
            }
            model.core.scaled_add(-lr, &grads.core);
        }
        epoch_losses.push(epoch_loss / positives.len() as f64);
        if !model.all_finite() {
            return Err(Error::NumericalFailure(
                "non-finite parameters after epoch; lower the learning rate".into(),
            ));
        }
    }

    let (final_loss, _) = loss_and_grad(&model, &eval_batch, cfg.l2)?;
    Ok(TrainOutcome {
        model,
        initial_loss,
        final_loss,
        epoch_losses,
    })
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_f64_array<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    w.write_all(b"[")?;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            w.write_all(b",")?;
        }
        w.write_all(fmt17(*v).as_bytes())?;
    }
    w.write_all(b"]")
}

/// Serializes a checkpoint as a single JSON document. Floats are written with
/// 17 significant digits so reloading reproduces them bit for bit.
pub fn save_checkpoint<W: Write>(
    model: &TuckerModel,
    seed: u64,
    epochs: usize,
    mut w: W,
) -> std::io::Result<()> {
    let (de, dr) = (model.d_e(), model.d_r());
    write!(w, "{{\"d_e\":{de},\"d_r\":{dr},\"E\":[")?;
    for i in 0..model.n_e() {
        if i > 0 {
            w.write_all(b",")?;
        }
        write_f64_array(&mut w, model.entity.row(i).as_slice().unwrap())?;
    }
    w.write_all(b"],\"R\":[")?;
    for i in 0..model.n_r() {
        if i > 0 {
            w.write_all(b",")?;
        }
        write_f64_array(&mut w, model.relation.row(i).as_slice().unwrap())?;
    }
    w.write_all(b"],\"W\":[")?;
    for a in 0..de {
        if a > 0 {
            w.write_all(b",")?;
        }
        w.write_all(b"[")?;
        for b in 0..dr {
            if b > 0 {
                w.write_all(b",")?;
            }
            let row: Vec<f64> = (0..de).map(|c| model.core[[a, b, c]]).collect();
            write_f64_array(&mut w, &row)?;
        }
        w.write_all(b"]")?;
    }
    writeln!(w, "],\"seed\":{seed},\"epochs\":{epochs}}}")
}

#[derive(serde::Deserialize)]
struct CheckpointDoc {
    d_e: usize,
    d_r: usize,
    #[serde(rename = "E")]
    entity: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    relation: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    core: Vec<Vec<Vec<f64>>>,
    seed: u64,
    epochs: usize,
}

/// Reads a checkpoint written by [`save_checkpoint`]. Returns the model plus
/// the recorded `(seed, epochs)`.
pub fn load_checkpoint<R: Read>(mut r: R) -> Result<(TuckerModel, u64, usize)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let doc: CheckpointDoc = serde_json::from_str(&text)?;
    let n_e = doc.entity.len();
    let n_r = doc.relation.len();
    let (de, dr) = (doc.d_e, doc.d_r);
    let shape_err = || Error::InvalidValue("checkpoint arrays disagree with dims".into());
    let mut entity = Array2::zeros((n_e, de));
    for (i, row) in doc.entity.iter().enumerate() {
        if row.len() != de {
            return Err(shape_err());
        }
        for (j, v) in row.iter().enumerate() {
            entity[[i, j]] = *v;
        }
    }
    let mut relation = Array2::zeros((n_r, dr));
    for (i, row) in doc.relation.iter().enumerate() {
        if row.len() != dr {
            return Err(shape_err());
        }
        for (j, v) in row.iter().enumerate() {
            relation[[i, j]] = *v;
        }
    }
    if doc.core.len() != de {
        return Err(shape_err());
    }
    let mut core = Array3::zeros((de, dr, de));
    for (a, plane) in doc.core.iter().enumerate() {
        if plane.len() != dr {
            return Err(shape_err());
        }
        for (b, row) in plane.iter().enumerate() {
            if row.len() != de {
                return Err(shape_err());
            }
            for (c, v) in row.iter().enumerate() {
                core[[a, b, c]] = *v;
            }
        }
    }
    Ok((TuckerModel { entity, relation, core }, doc.seed, doc.epochs))
}
