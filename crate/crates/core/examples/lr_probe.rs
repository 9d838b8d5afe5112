use kgcausal::kg::{build_tensor, KgIndex, Triple};
use kgcausal::tucker::{train, TrainConfig};
use rand::Rng;

fn main() {
    let mut rng = kgcausal::rng::substream(13, "probe");
    let mut index = KgIndex::new();
    for i in 0..30 { index.entity_id(&format!("e{i}")); }
    for i in 0..4 { index.relation_id(&format!("r{i}")); }
    let triples: Vec<Triple> = (0..150).map(|_| Triple {
        head: rng.gen_range(0..30), rel: rng.gen_range(0..4), tail: rng.gen_range(0..30) }).collect();
    let tensor = build_tensor(&triples, &index).unwrap();
    for l2 in [0.0, 1e-3, 1e-2] {
        for lr in [1.0, 1.5, 2.0, 3.0, 5.0] {
            let cfg = TrainConfig { d_e: 5, d_r: 5, epochs: 150, learning_rate: lr, negatives_per_positive: 5, seed: 5, l2 };
            match train(&tensor, &cfg) {
                Ok(out) => {
                    let w = |r: std::ops::Range<usize>| out.epoch_losses[r.clone()].iter().sum::<f64>() / r.len() as f64;
                    println!("lr={lr} l2={l2}: init={:.4} final={:.4} w0={:.4} w5={:.4} w9={:.4} w14={:.4}",
                        out.initial_loss, out.final_loss, w(0..10), w(50..60), w(90..100), w(140..150));
                }
                Err(e) => println!("lr={lr} l2={l2}: ERROR {e}"),
            }
        }
    }
}
