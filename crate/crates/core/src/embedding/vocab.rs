use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::context::{ContextBundle, ContextKind, Slot};
use crate::subtoken::SubToken;

/// Dense token index. Ids are stable for a given build input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const PAD: TokenId = TokenId(0);
    pub const UNK: TokenId = TokenId(1);
    pub const EON: TokenId = TokenId(2);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub const SPECIAL_TOKENS: [&str; 3] = ["<pad>", "<unk>", "<eon>"];

/// Token ↔ index map with frequency counts. PAD, UNK and EON occupy ids
/// 0, 1, 2; the rest follow by descending frequency, then text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: BTreeMap<String, TokenId>,
}

impl Vocabulary {
    /// Builds from token occurrences, dropping tokens seen fewer than
    /// `min_count` times.
    pub fn build<'a, I>(occurrences: I, min_count: u64) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
        for t in occurrences {
            *freq.entry(t).or_default() += 1;
        }
        let mut kept: Vec<(&str, u64)> = freq
            .into_iter()
            .filter(|(_, c)| *c >= min_count.max(1))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let entries = kept.into_iter().map(|(t, c)| (t.to_string(), c));
        Self::from_entries(entries)
    }

    /// Builds from the real tokens of every active context of every bundle
    /// plus the method-name sub-tokens.
    pub fn from_bundles(
        bundles: &[ContextBundle],
        names: &[Vec<SubToken>],
        min_count: u64,
    ) -> Self {
        let ctx = bundles.iter().flat_map(|b| {
            ContextKind::ALL
                .into_iter()
                .flat_map(move |k| b.get(k).real().map(SubToken::as_str))
        });
        let nm = names.iter().flat_map(|n| n.iter().map(SubToken::as_str));
        Self::build(ctx.chain(nm), min_count)
    }

    /// Rebuilds from non-special tokens in id order, e.g. after loading.
    pub fn from_entries<I: IntoIterator<Item = (String, u64)>>(entries: I) -> Self {
        let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        let mut counts = alloc::vec![0; SPECIAL_TOKENS.len()];
        let mut index = BTreeMap::new();
        for (t, c) in entries {
            index.insert(t.clone(), TokenId(tokens.len() as u32));
            tokens.push(t);
            counts.push(c);
        }
        Vocabulary {
            tokens,
            counts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == SPECIAL_TOKENS.len()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(TokenId::UNK)
    }

    pub fn slot_id(&self, slot: &Slot) -> TokenId {
        match slot {
            Slot::Pad => TokenId::PAD,
            Slot::Token(t) => self.id_or_unk(t.as_str()),
        }
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id.index()]
    }

    pub fn count(&self, id: TokenId) -> u64 {
        self.counts[id.index()]
    }

    pub fn is_special(id: TokenId) -> bool {
        id.index() < SPECIAL_TOKENS.len()
    }

    /// Non-special `(token, count)` pairs in id order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.tokens
            .iter()
            .zip(&self.counts)
            .skip(SPECIAL_TOKENS.len())
            .map(|(t, c)| (t.as_str(), *c))
    }

    /// 64-bit FNV-1a over the token list; checkpoints record it so a model
    /// is never paired with a different vocabulary.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.tokens {
            for b in t.bytes().chain(core::iter::once(0xff)) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}
