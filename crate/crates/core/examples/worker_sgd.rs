//! One satellite's local computation: minibatch SGD with an optional
//! proximal term, starting from the model received from the ground station.
//!
//! ```text
//! cargo run --example worker_sgd
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satfl::learning::{
    evaluate, local_train, param_count, synth_dataset, ParamVector, TrainConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_dataset(10, 60, 16, 3)?;
    let test = synth_dataset(10, 20, 16, 3)?;
    let received = ParamVector::zeros(param_count(data.dim(), data.class_count()));
    let before = evaluate(&received, &test)?;
    println!(
        "received model: accuracy {:.3}, loss {:.4}",
        before.accuracy, before.loss
    );

    for prox_weight in [0.0, 0.5] {
        let cfg = TrainConfig {
            learning_rate: 0.1,
            prox_weight,
            batch_size: 10,
            local_epochs: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let update = local_train(&received, 0, &data, &cfg, &mut rng)?;
        let after = evaluate(&update, &test)?;
        let drift: f64 = update.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!(
            "lambda {prox_weight}: {} steps, accuracy {:.3}, loss {:.4}, |theta - theta_received| {:.3}",
            cfg.steps_for(data.len()),
            after.accuracy,
            after.loss,
            drift
        );
    }
    Ok(())
}
