use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::embedding::TokenId;

/// Unigram and bigram counts over training method names. Every name is
/// followed by EON, so EON counts as a successor.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BigramStats {
    unigram: BTreeMap<TokenId, u64>,
    bigram: BTreeMap<(TokenId, TokenId), u64>,
}

impl BigramStats {
    /// `names` holds vocabulary ids without the trailing EON.
    pub fn build<S: AsRef<[TokenId]>>(names: &[S]) -> Self {
        let mut stats = BigramStats::default();
        for name in names {
            let ids = name.as_ref();
            for (k, &t) in ids.iter().enumerate() {
                *stats.unigram.entry(t).or_default() += 1;
                let next = ids.get(k + 1).copied().unwrap_or(TokenId::EON);
                *stats.bigram.entry((t, next)).or_default() += 1;
            }
            *stats.unigram.entry(TokenId::EON).or_default() += 1;
        }
        stats
    }

    pub fn from_counts(
        unigram: BTreeMap<TokenId, u64>,
        bigram: BTreeMap<(TokenId, TokenId), u64>,
    ) -> Self {
        BigramStats { unigram, bigram }
    }

    pub fn count(&self, t: TokenId) -> u64 {
        self.unigram.get(&t).copied().unwrap_or(0)
    }

    pub fn count_after(&self, prev: TokenId, next: TokenId) -> u64 {
        self.bigram.get(&(prev, next)).copied().unwrap_or(0)
    }

    pub fn unigrams(&self) -> impl Iterator<Item = (TokenId, u64)> + '_ {
        self.unigram.iter().map(|(&t, &c)| (t, c))
    }

    pub fn bigrams(&self) -> impl Iterator<Item = (TokenId, TokenId, u64)> + '_ {
        self.bigram.iter().map(|(&(a, b), &c)| (a, b, c))
    }

    /// Successors of `prev` with their counts.
    pub(crate) fn successors(&self, prev: TokenId) -> impl Iterator<Item = (TokenId, u64)> + '_ {
        self.bigram
            .range((prev, TokenId(0))..=(prev, TokenId(u32::MAX)))
            .map(|(&(_, b), &c)| (b, c))
    }
}

/// Whether a candidate id is a training-vocabulary token able to follow
/// another (EON and real tokens; not PAD, UNK or copied out-of-vocabulary
/// tokens).
#[inline]
pub(crate) fn in_dictionary(id: TokenId, vocab_len: usize) -> bool {
    id.index() >= TokenId::EON.index() && id.index() < vocab_len
}

/// Probability that `cand` does not follow `prev`:
/// `1 − count(cand | prev) / count(prev)` when both are vocabulary tokens,
/// 0 when `prev` is absent or outside the vocabulary, and 1 otherwise.
pub fn prob_noncopy(
    prev: Option<TokenId>,
    cand: TokenId,
    stats: &BigramStats,
    vocab_len: usize,
) -> f64 {
    let Some(prev) = prev.filter(|p| in_dictionary(*p, vocab_len)) else {
        return 0.0;
    };
    if !in_dictionary(cand, vocab_len) {
        return 1.0;
    }
    let total = stats.count(prev);
    if total == 0 {
        return 1.0;
    }
    1.0 - stats.count_after(prev, cand) as f64 / total as f64
}

/// [`prob_noncopy`] for every candidate id below `candidates`.
pub(crate) fn noncopy_row(
    prev: Option<TokenId>,
    stats: &BigramStats,
    vocab_len: usize,
    candidates: usize,
) -> Vec<f64> {
    let Some(prev) = prev.filter(|p| in_dictionary(*p, vocab_len)) else {
        return alloc::vec![0.0; candidates];
    };
    let mut row = alloc::vec![1.0; candidates];
    let total = stats.count(prev);
    if total > 0 {
        for (next, c) in stats.successors(prev) {
            if in_dictionary(next, vocab_len) && next.index() < candidates {
                row[next.index()] = 1.0 - c as f64 / total as f64;
            }
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const GET: TokenId = TokenId(3);
    const SIZE: TokenId = TokenId(4);
    const NAME: TokenId = TokenId(5);

    #[test]
    fn counts_include_eon() {
        let s = BigramStats::build(&[vec![GET, SIZE], vec![GET, NAME]]);
        assert_eq!(s.count(GET), 2);
        assert_eq!(s.count_after(GET, SIZE), 1);
        assert_eq!(s.count_after(SIZE, TokenId::EON), 1);
    }

    #[test]
    fn formula_and_branches() {
        let mut names = vec![vec![GET, SIZE]; 4];
        names.extend(vec![vec![GET, NAME]; 6]);
        let s = BigramStats::build(&names);
        assert!((prob_noncopy(Some(GET), SIZE, &s, 8) - 0.6).abs() < 1e-15);
        assert_eq!(prob_noncopy(Some(TokenId::UNK), SIZE, &s, 8), 0.0);
        assert_eq!(prob_noncopy(Some(TokenId(9)), SIZE, &s, 8), 0.0);
        assert_eq!(prob_noncopy(None, SIZE, &s, 8), 0.0);
        assert_eq!(prob_noncopy(Some(GET), TokenId(6), &s, 8), 1.0);
        assert_eq!(prob_noncopy(Some(GET), TokenId::UNK, &s, 8), 1.0);
        assert_eq!(prob_noncopy(Some(GET), TokenId(9), &s, 8), 1.0);
    }

    proptest! {
        #[test]
        fn row_matches_pointwise_and_brute_force(
            names in prop::collection::vec(prop::collection::vec(prop::sample::select(vec![1u32, 3, 4, 5, 6]), 0..5), 1..12),
            prev in 0u32..9,
        ) {
            let names: Vec<Vec<TokenId>> = names.into_iter().map(|n| n.into_iter().map(TokenId).collect()).collect();
            let s = BigramStats::build(&names);
            let row = noncopy_row(Some(TokenId(prev)), &s, 7, 9);
            // occurrences of prev and of prev → c by direct scan
            let mut n_prev = 0u64;
            for n in &names {
                n_prev += n.iter().filter(|t| t.0 == prev).count() as u64;
            }
            if prev == 2 {
                n_prev = names.len() as u64;
            }
            for c in 0..9u32 {
                let mut n_pair = 0u64;
                for n in &names {
                    let mut ext = n.clone();
                    ext.push(TokenId::EON);
                    n_pair += ext.windows(2).filter(|w| w[0].0 == prev && w[1].0 == c).count() as u64;
                }
                prop_assert!(n_pair <= n_prev);
                let want = if !(2..7).contains(&prev) {
                    0.0
                } else if !(2..7).contains(&c) || n_prev == 0 {
                    1.0
                } else {
                    1.0 - n_pair as f64 / n_prev as f64
                };
                prop_assert_eq!(row[c as usize], want);
                prop_assert_eq!(prob_noncopy(Some(TokenId(prev)), TokenId(c), &s, 7), want);
            }
        }
    }

    #[test]
    fn decreases_with_bigram_count() {
        let mut last = f64::INFINITY;
        for k in 0..=6 {
            let names: Vec<Vec<TokenId>> = (0..6)
                .map(|i| vec![GET, if i < k { SIZE } else { NAME }])
                .collect();
            let p = prob_noncopy(Some(GET), SIZE, &BigramStats::build(&names), 8);
            assert!(p <= last);
            last = p;
        }
        assert_eq!(last, 0.0);
    }
}
