use alloc::collections::BTreeMap;

use super::TokenId;

/// Sparse symmetric co-occurrence counts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CooccurrenceTable {
    entries: BTreeMap<(TokenId, TokenId), f64>,
}

impl CooccurrenceTable {
    pub fn get(&self, i: TokenId, j: TokenId) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, TokenId, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x))
    }

    /// Number of distinct token ids appearing in any pair.
    pub fn distinct_tokens(&self) -> usize {
        let mut ids: alloc::vec::Vec<TokenId> =
            self.entries.keys().flat_map(|&(i, j)| [i, j]).collect();
        ids.sort();
        ids.dedup();
        ids.len()
    }

    fn add(&mut self, i: TokenId, j: TokenId, x: f64) {
        *self.entries.entry((i, j)).or_insert(0.0) += x;
    }
}

/// Accumulates `1/k` for every pair of tokens `k ≤ window` apart, into both
/// `(i, j)` and `(j, i)`; a token paired with itself is counted once. PAD
/// slots are removed before distances are measured.
pub fn build_cooccurrence<S: AsRef<[TokenId]>>(
    sequences: &[S],
    window: usize,
) -> CooccurrenceTable {
    assert!(window >= 1, "window must be at least 1");
    let mut table = CooccurrenceTable::default();
    for seq in sequences {
        let ids: alloc::vec::Vec<TokenId> = seq
            .as_ref()
            .iter()
            .copied()
            .filter(|&t| t != TokenId::PAD)
            .collect();
        for (p, &a) in ids.iter().enumerate() {
            for k in 1..=window {
                let Some(&b) = ids.get(p + k) else { break };
                let x = 1.0 / k as f64;
                table.add(a, b, x);
                if a != b {
                    table.add(b, a, x);
                }
            }
        }
    }
    table
}
