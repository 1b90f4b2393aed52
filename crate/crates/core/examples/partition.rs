//! IID and shell-wise class split of a training set across ten satellites.
//!
//! ```text
//! cargo run --example partition
//! ```

use satfl::learning::{partition, synth_dataset, PartitionMode, PartitionSpec, ShellClasses};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_dataset(10, 301, 8, 4)?;
    let satellites: Vec<(u32, u32)> = (0..10).map(|id| (id, id / 5)).collect();
    let modes = [
        ("iid", PartitionMode::Iid),
        (
            "class split",
            PartitionMode::ClassSplit {
                class_sets: vec![
                    ShellClasses {
                        shell: 0,
                        classes: vec![0, 1, 2, 3, 4],
                    },
                    ShellClasses {
                        shell: 1,
                        classes: vec![5, 6, 7, 8, 9],
                    },
                ],
            },
        ),
    ];
    for (name, mode) in modes {
        let parts = partition(&data, &satellites, &PartitionSpec { mode, seed: 1 })?;
        println!("{name}:");
        for ((id, shell), local) in satellites.iter().zip(parts.values()) {
            println!(
                "  sat {id} (shell {shell}): {:>4} samples  {:?}",
                local.len(),
                local.class_histogram()
            );
        }
    }
    Ok(())
}
