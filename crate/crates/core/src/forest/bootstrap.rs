//! Per-tree sampling schemes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// How minority rows enter a balanced sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinorityMode {
    /// `N_min` minority draws with replacement.
    #[default]
    Bootstrap,
    /// Every minority row exactly once.
    All,
}

/// `n` draws with replacement from `0..n`.
pub fn standard_bootstrap(n: usize, rng: &mut seed::Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Equal-size minority and majority sample of `2 * N_min` indices.
///
/// Under [`MinorityMode::All`] the majority half is drawn without
/// replacement; under [`MinorityMode::Bootstrap`] both halves are drawn
/// with replacement. Minority indices come first.
pub fn balanced_bootstrap(y: &[u8], mode: MinorityMode, seed: u64) -> Result<Vec<usize>> {
    balanced_bootstrap_with(y, mode, &mut seed::rng(seed))
}

pub(crate) fn balanced_bootstrap_with(y: &[u8], mode: MinorityMode, rng: &mut seed::Rng) -> Result<Vec<usize>> {
    let ones: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let zeros: Vec<usize> = (0..y.len()).filter(|&i| y[i] != 1).collect();
    if ones.is_empty() || zeros.is_empty() {
        return Err(Error::DegenerateLabels(format!(
            "balanced sampling needs both classes (c0 = {}, c1 = {})",
            zeros.len(),
            ones.len()
        )));
    }
    let (minority, majority) = if ones.len() <= zeros.len() { (ones, zeros) } else { (zeros, ones) };
    let n_min = minority.len();
    let mut out = Vec::with_capacity(2 * n_min);
    match mode {
        MinorityMode::All => {
            out.extend_from_slice(&minority);
            out.extend(rand::seq::index::sample(rng, majority.len(), n_min).into_iter().map(|k| majority[k]));
        }
        MinorityMode::Bootstrap => {
            out.extend((0..n_min).map(|_| minority[rng.random_range(0..n_min)]));
            out.extend((0..n_min).map(|_| majority[rng.random_range(0..majority.len())]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(c1: usize, c0: usize) -> Vec<u8> {
        let mut y = vec![1u8; c1];
        y.extend(std::iter::repeat_n(0u8, c0));
        y
    }

    #[test]
    fn all_mode_keeps_every_minority_row() {
        let y = labels(3, 10);
        let s = balanced_bootstrap(&y, MinorityMode::All, 4).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(&s[..3], &[0, 1, 2]);
        let mut maj = s[3..].to_vec();
        maj.sort_unstable();
        maj.dedup();
        assert_eq!(maj.len(), 3);
        assert!(maj.iter().all(|&i| y[i] == 0));
    }

    #[test]
    fn one_by_one() {
        let y = vec![0u8, 1];
        let mut s = balanced_bootstrap(&y, MinorityMode::All, 0).unwrap();
        s.sort_unstable();
        assert_eq!(s, vec![0, 1]);
    }

    #[test]
    fn bootstrap_mode_size_and_classes() {
        let y = labels(7, 40);
        let s = balanced_bootstrap(&y, MinorityMode::Bootstrap, 1).unwrap();
        assert_eq!(s.len(), 14);
        assert_eq!(s.iter().filter(|&&i| y[i] == 1).count(), 7);
    }

    #[test]
    fn empty_class_is_rejected() {
        assert!(matches!(
            balanced_bootstrap(&[0, 0, 0], MinorityMode::All, 0),
            Err(Error::DegenerateLabels(_))
        ));
    }

    #[test]
    fn standard_bootstrap_range() {
        let mut rng = seed::rng(3);
        let s = standard_bootstrap(50, &mut rng);
        assert_eq!(s.len(), 50);
        assert!(s.iter().all(|&i| i < 50));
    }
}
