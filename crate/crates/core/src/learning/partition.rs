use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, LearningError};

/// Classes held by the satellites of one orbital shell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellClasses {
    pub shell: u32,
    pub classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PartitionMode {
    Iid,
    ClassSplit { class_sets: Vec<ShellClasses> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    #[serde(flatten)]
    pub mode: PartitionMode,
    pub seed: u64,
}

fn fail<T>(msg: String) -> Result<T, LearningError> {
    Err(LearningError::Partition(msg))
}

/// Splits `data` into equally sized, pairwise disjoint local datasets.
///
/// `satellites` lists `(satellite id, shell id)`. Remainder samples are
/// dropped so every satellite holds exactly the same number of samples.
pub fn partition(
    data: &Dataset,
    satellites: &[(u32, u32)],
    spec: &PartitionSpec,
) -> Result<BTreeMap<u32, Dataset>, LearningError> {
    if satellites.is_empty() {
        return Ok(BTreeMap::new());
    }
    let ids: BTreeSet<u32> = satellites.iter().map(|s| s.0).collect();
    if ids.len() != satellites.len() {
        return fail("duplicate satellite ids".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = BTreeMap::new();
    match &spec.mode {
        PartitionMode::Iid => {
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut rng);
            let per = data.len() / satellites.len();
            if per == 0 {
                return fail(format!(
                    "{} samples cannot be split over {} satellites",
                    data.len(),
                    satellites.len()
                ));
            }
            for (k, &(id, _)) in satellites.iter().enumerate() {
                out.insert(id, data.subset(&order[k * per..(k + 1) * per])?);
            }
        }
        PartitionMode::ClassSplit { class_sets } => {
            let shell_of_class = validate_class_sets(class_sets, data.class_count())?;
            let mut members: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
            for &(id, shell) in satellites {
                members.entry(shell).or_default().push(id);
            }
            for shell in members.keys() {
                if !class_sets.iter().any(|s| s.shell == *shell) {
                    return fail(format!("shell {shell} has no class assignment"));
                }
            }
            for set in class_sets {
                if !members.contains_key(&set.shell) {
                    return fail(format!(
                        "classes {:?} are assigned to shell {} which has no satellites",
                        set.classes, set.shell
                    ));
                }
            }
            let mut pools: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for (i, &label) in data.labels().iter().enumerate() {
                pools.entry(shell_of_class[label]).or_default().push(i);
            }
            let per = members
                .iter()
                .map(|(shell, sats)| pools.get(shell).map_or(0, Vec::len) / sats.len())
                .min()
                .unwrap_or(0);
            if per == 0 {
                return fail(
                    "not enough samples per class set for the satellites of every shell".into(),
                );
            }
            for (shell, sats) in &members {
                let pool = pools.get_mut(shell).expect("non-empty pool");
                pool.shuffle(&mut rng);
                for (k, id) in sats.iter().enumerate() {
                    out.insert(*id, data.subset(&pool[k * per..(k + 1) * per])?);
                }
            }
        }
    }
    Ok(out)
}

/// Checks that the class sets are disjoint and cover every class; returns
/// the owning shell per class.
fn validate_class_sets(
    sets: &[ShellClasses],
    class_count: usize,
) -> Result<Vec<u32>, LearningError> {
    let mut owner: Vec<Option<u32>> = vec![None; class_count];
    let mut shells = BTreeSet::new();
    for set in sets {
        if !shells.insert(set.shell) {
            return fail(format!("shell {} listed twice", set.shell));
        }
        for &c in &set.classes {
            if c >= class_count {
                return fail(format!("class {c} outside [0, {class_count})"));
            }
            if let Some(prev) = owner[c].replace(set.shell) {
                return fail(format!(
                    "class {c} assigned to shells {prev} and {}",
                    set.shell
                ));
            }
        }
    }
    owner
        .into_iter()
        .enumerate()
        .map(|(c, o)| {
            o.ok_or_else(|| LearningError::Partition(format!("class {c} is not assigned")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::synth_dataset;

    fn split(a: &[usize], b: &[usize]) -> PartitionSpec {
        PartitionSpec {
            mode: PartitionMode::ClassSplit {
                class_sets: vec![
                    ShellClasses {
                        shell: 0,
                        classes: a.to_vec(),
                    },
                    ShellClasses {
                        shell: 1,
                        classes: b.to_vec(),
                    },
                ],
            },
            seed: 3,
        }
    }

    fn iid() -> PartitionSpec {
        PartitionSpec {
            mode: PartitionMode::Iid,
            seed: 1,
        }
    }

    #[test]
    fn iid_equal_sizes_with_truncation() {
        let data = synth_dataset(10, 10, 2, 0).unwrap();
        let sats: Vec<(u32, u32)> = (0..7).map(|i| (i, 0)).collect();
        let parts = partition(&data, &sats, &iid()).unwrap();
        assert_eq!(parts.len(), 7);
        assert!(parts.values().all(|d| d.len() == 14));
    }

    #[test]
    fn single_satellite_gets_everything() {
        let data = synth_dataset(3, 5, 2, 0).unwrap();
        let parts = partition(&data, &[(4, 0)], &iid()).unwrap();
        let mut got = parts[&4].class_histogram();
        got.sort();
        assert_eq!(parts[&4].len(), 15);
        assert_eq!(got, vec![5, 5, 5]);
    }

    #[test]
    fn class_split_respects_shells() {
        let data = synth_dataset(10, 20, 2, 0).unwrap();
        let sats: Vec<(u32, u32)> = (0..10).map(|i| (i, i / 5)).collect();
        let parts = partition(&data, &sats, &split(&[0, 1, 2, 3, 4], &[5, 6, 7, 8, 9])).unwrap();
        for (id, d) in &parts {
            assert_eq!(d.len(), 20);
            let allowed = if *id < 5 { 0..5 } else { 5..10 };
            assert!(d.labels().iter().all(|l| allowed.contains(l)));
        }
    }

    #[test]
    fn class_split_errors() {
        let data = synth_dataset(4, 2, 2, 0).unwrap();
        let sats: Vec<(u32, u32)> = (0..4).map(|i| (i, i / 2)).collect();
        // Missing class 3.
        assert!(partition(&data, &sats, &split(&[0, 1], &[2])).is_err());
        // Overlap.
        assert!(partition(&data, &sats, &split(&[0, 1, 2], &[2, 3])).is_err());
        // Shell without satellites.
        let one_shell: Vec<(u32, u32)> = (0..4).map(|i| (i, 0)).collect();
        assert!(partition(&data, &one_shell, &split(&[0, 1], &[2, 3])).is_err());
        // Too few samples: 2 classes x 2 samples over 5 satellites in one shell.
        let crowded: Vec<(u32, u32)> = (0..6).map(|i| (i, if i < 5 { 0 } else { 1 })).collect();
        assert!(partition(&data, &crowded, &split(&[0, 1], &[2, 3])).is_err());
    }
}
