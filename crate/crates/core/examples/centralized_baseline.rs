//! Centralized reference: the same model trained on the pooled training set.
//!
//! Uses MNIST when the IDX files are found under `$SATFL_DATA_DIR/mnist`
//! (default `data/mnist`), synthetic blobs otherwise.
//!
//! ```text
//! SATFL_DATA_DIR=data cargo run --release --example centralized_baseline -- 20
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satfl::config::data_dir;
use satfl::learning::{
    evaluate, load_idx, local_train, param_count, synth_dataset, ParamVector, TrainConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args().nth(1).map_or(Ok(5), |s| s.parse())?;
    let mnist = data_dir().join("mnist");
    let (train, test, name) = if mnist.join("train-images-idx3-ubyte").is_file() {
        let train = load_idx(
            mnist.join("train-images-idx3-ubyte"),
            mnist.join("train-labels-idx1-ubyte"),
        )?;
        let test = load_idx(
            mnist.join("t10k-images-idx3-ubyte"),
            mnist.join("t10k-labels-idx1-ubyte"),
        )?;
        (train, test, "MNIST")
    } else {
        (
            synth_dataset(10, 500, 20, 1)?,
            synth_dataset(10, 100, 20, 1)?,
            "synthetic blobs",
        )
    };
    let cfg = TrainConfig {
        learning_rate: 0.1,
        prox_weight: 0.0,
        batch_size: 10,
        local_epochs: 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!(
        "{name}: {} train / {} test samples",
        train.len(),
        test.len()
    );
    let mut model = ParamVector::zeros(param_count(train.dim(), train.class_count()));
    for e in 0..=epochs {
        if e > 0 {
            model = local_train(&model, 0, &train, &cfg, &mut rng)?;
        }
        let eval = evaluate(&model, &test)?;
        println!(
            "  {e:>3} epochs: accuracy {:.4}, loss {:.4}",
            eval.accuracy, eval.loss
        );
    }
    Ok(())
}
