//! Stratified train/test splitting of labeled windows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detect::Window;
use crate::error::{Error, Result};

/// Splits `windows` into disjoint, exhaustive train and test sets with the
/// attack/normal proportions preserved within one window. Seeded shuffle;
/// outputs keep the original stream order within each side.
pub fn split_dataset(
    windows: &[Window],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<Window>, Vec<Window>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut per_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, w) in windows.iter().enumerate() {
        per_class[w.label as usize].push(i);
    }
    for (class, idx) in per_class.iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::Dataset(format!(
                "stratified split needs at least 2 windows of each class, class {} has {}",
                if class == 1 { "attack" } else { "normal" },
                idx.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for idx in per_class.iter_mut() {
        for i in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        // Round, then clamp so both sides keep at least one window.
        let take = ((train_fraction * idx.len() as f64).round() as usize)
            .clamp(1, idx.len() - 1);
        train_idx.extend_from_slice(&idx[..take]);
        test_idx.extend_from_slice(&idx[take..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((
        train_idx.into_iter().map(|i| windows[i]).collect(),
        test_idx.into_iter().map(|i| windows[i]).collect(),
    ))
}
