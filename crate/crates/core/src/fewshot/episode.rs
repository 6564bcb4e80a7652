use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{FewShotError, LabeledItem, Result, SkillClass};

/// One k-shot trial over a list of items: `shot` support indices per class
/// and every other index as query. Both lists are sorted within a class
/// (support) or overall (query).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Episode {
    pub shot: usize,
    pub support: Vec<usize>,
    pub query: Vec<usize>,
    pub seed: u64,
}

impl Episode {
    /// Checks disjointness, coverage of `0..labels.len()` and exactly `shot`
    /// support items per class.
    pub fn is_valid_partition(&self, labels: &[SkillClass]) -> bool {
        let mut seen = vec![false; labels.len()];
        for &i in self.support.iter().chain(&self.query) {
            if i >= labels.len() || std::mem::replace(&mut seen[i], true) {
                return false;
            }
        }
        seen.iter().all(|&s| s) && SkillClass::ALL.iter().all(|&c| self.support.iter().filter(|&&i| labels[i] == c).count() == self.shot)
    }
}

/// Seed of episode `index` under `master_seed`: the first word of the
/// ChaCha8 stream `index` keyed by the master seed.
pub fn episode_seed(master_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Draws `n_episodes` episodes, each with support sampled uniformly without
/// replacement per class from its own derived seed.
pub fn sample_episodes(items: &[LabeledItem], shot: usize, n_episodes: usize, master_seed: u64) -> Result<Vec<Episode>> {
    let labels: Vec<SkillClass> = items.iter().map(|it| it.label).collect();
    sample_episodes_for_labels(&labels, shot, n_episodes, master_seed)
}

pub(crate) fn sample_episodes_for_labels(labels: &[SkillClass], shot: usize, n_episodes: usize, master_seed: u64) -> Result<Vec<Episode>> {
    if shot == 0 {
        return Err(FewShotError::InvalidArgument("shot must be at least 1".into()));
    }
    let members: Vec<Vec<usize>> = SkillClass::ALL.iter().map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect()).collect();
    for (&class, m) in SkillClass::ALL.iter().zip(&members) {
        if m.len() < shot + 1 {
            return Err(FewShotError::InsufficientClassSize { class, size: m.len(), shot });
        }
    }
    Ok((0..n_episodes).map(|e| draw(&members, labels.len(), shot, episode_seed(master_seed, e))).collect())
}

fn draw(members: &[Vec<usize>], total: usize, shot: usize, seed: u64) -> Episode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = Vec::with_capacity(shot * members.len());
    let mut in_support = vec![false; total];
    for m in members {
        let mut picked: Vec<usize> = index::sample(&mut rng, m.len(), shot).into_iter().map(|j| m[j]).collect();
        picked.sort_unstable();
        for &i in &picked {
            in_support[i] = true;
        }
        support.extend(picked);
    }
    let query = (0..total).filter(|&i| !in_support[i]).collect();
    Episode { shot, support, query, seed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SkillClass::{Expert as E, Proficient as P};

    #[test]
    fn three_and_three_two_shot() {
        let labels = [P, E, P, E, P, E];
        let eps = sample_episodes_for_labels(&labels, 2, 25, 7).unwrap();
        assert_eq!(eps.len(), 25);
        for ep in &eps {
            assert_eq!(ep.support.len(), 4);
            assert_eq!(ep.query.len(), 2);
            assert!(ep.is_valid_partition(&labels));
        }
    }

    #[test]
    fn class_without_query_is_rejected() {
        let labels = [P, P, E, E, E, E, E];
        match sample_episodes_for_labels(&labels, 2, 1, 0) {
            Err(FewShotError::InsufficientClassSize { class, size, shot }) => {
                assert_eq!((class, size, shot), (P, 2, 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn same_master_seed_same_episodes() {
        let labels: Vec<_> = (0..20).map(|i| if i % 3 == 0 { E } else { P }).collect();
        let a = sample_episodes_for_labels(&labels, 3, 50, 42).unwrap();
        let b = sample_episodes_for_labels(&labels, 3, 50, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_episodes_for_labels(&labels, 3, 50, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn episode_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| episode_seed(5, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn support_covers_every_member_over_many_episodes() {
        let labels: Vec<_> = (0..12).map(|i| if i < 5 { P } else { E }).collect();
        let eps = sample_episodes_for_labels(&labels, 1, 400, 1).unwrap();
        let mut hits = [0usize; 12];
        for ep in &eps {
            for &i in &ep.support {
                hits[i] += 1;
            }
        }
        // 400 draws of one from five (or seven): every member shows up.
        assert!(hits.iter().all(|&h| h > 20), "{hits:?}");
    }

    #[test]
    fn zero_shot_is_invalid() {
        assert!(sample_episodes_for_labels(&[P, E], 0, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_invariant(
            n_p in 2usize..15,
            n_e in 2usize..15,
            shot in prop::sample::select(vec![1usize, 2, 5]),
            seed in any::<u64>(),
            swaps in prop::collection::vec((0usize..30, 0usize..30), 0..10),
        ) {
            let mut labels: Vec<_> = std::iter::repeat(P).take(n_p).chain(std::iter::repeat(E).take(n_e)).collect();
            let n = labels.len();
            for (a, b) in swaps {
                labels.swap(a % n, b % n);
            }
            let res = sample_episodes_for_labels(&labels, shot, 10, seed);
            if n_p.min(n_e) < shot + 1 {
                prop_assert!(
                    matches!(res, Err(FewShotError::InsufficientClassSize { .. })),
                    "expected InsufficientClassSize, got {:?}",
                    res
                );
            } else {
                for ep in res.unwrap() {
                    prop_assert!(ep.is_valid_partition(&labels));
                    prop_assert_eq!(ep.query.len(), n - 2 * shot);
                }
            }
        }
    }
}
