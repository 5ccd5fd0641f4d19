use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ClassId, LabeledDataset};

/// Default M-set proportions for the arriving-data experiments.
pub const MSET_FRACTIONS: [f64; 3] = [0.50, 0.30, 0.20];

/// Positions into the dataset the fold was cut from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn shuffled_class_positions(
    data: &LabeledDataset,
    rng: &mut ChaCha8Rng,
) -> Vec<(ClassId, Vec<usize>)> {
    data.class_index()
        .iter()
        .map(|(&c, ps)| {
            let mut ps = ps.clone();
            ps.shuffle(rng);
            (c, ps)
        })
        .collect()
}

/// Stratified k-fold split: per class, fold sizes differ by at most one.
pub fn stratified_folds(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    for (&class, ps) in data.class_index() {
        if ps.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                size: ps.len(),
                required: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); k];
    // The rotation carries over between classes so total fold sizes stay balanced too.
    let mut offset = 0usize;
    for (_, ps) in shuffled_class_positions(data, &mut rng) {
        for (i, p) in ps.iter().enumerate() {
            buckets[(offset + i) % k].push(*p);
        }
        offset = (offset + ps.len()) % k;
    }
    let folds = (0..k)
        .map(|f| {
            let mut test = buckets[f].clone();
            test.sort_unstable();
            let mut train: Vec<usize> = buckets
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, b)| b.iter().copied())
                .collect();
            train.sort_unstable();
            Fold { train, test }
        })
        .collect();
    Ok(folds)
}

/// Per-class set sizes by largest remainder; each is within one of `n * fraction`.
fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut remaining = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

/// Stratified split into consecutive sets with the given proportions.
/// Returns positions into `train`, one list per set.
pub fn split_msets(
    train: &LabeledDataset,
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() || fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::InvalidParameter(format!(
            "invalid M-set fractions {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "M-set fractions sum to {total}, expected 1"
        )));
    }
    let required = fractions.len();
    for (&class, ps) in train.class_index() {
        if ps.len() < required {
            return Err(Error::ClassTooSmall {
                class,
                size: ps.len(),
                required,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); fractions.len()];
    for (_, ps) in shuffled_class_positions(train, &mut rng) {
        let mut start = 0;
        for (set, count) in sets.iter_mut().zip(apportion(ps.len(), fractions)) {
            set.extend_from_slice(&ps[start..start + count]);
            start += count;
        }
    }
    sets.iter_mut().for_each(|s| s.sort_unstable());
    Ok(sets)
}

/// Most frequent class first; ties by ascending original label.
pub fn order_classes_by_frequency(data: &LabeledDataset) -> Vec<ClassId> {
    let mut classes = data.class_ids();
    classes.sort_by(|&a, &b| {
        data.class_count(b)
            .cmp(&data.class_count(a))
            .then_with(|| data.label_name(a).cmp(data.label_name(b)))
    });
    classes
}
