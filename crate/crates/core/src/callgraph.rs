//! Static call graph by simple-name and arity resolution.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Corpus;

/// Caller/callee edges over method indices of a [`Corpus`].
///
/// A call site resolves to every corpus method with the same simple name and
/// parameter count; receiver types and inheritance are ignored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CallGraph {
    /// Resolved callees per method, in call-site order without repeats.
    pub callees: Vec<Vec<usize>>,
    pub callers: Vec<BTreeSet<usize>>,
    /// Call sites that matched no corpus method.
    pub unresolved: usize,
}

impl CallGraph {
    pub fn build(corpus: &Corpus) -> Self {
        let mut by_signature: BTreeMap<(&str, usize), Vec<usize>> = BTreeMap::new();
        for (i, m) in corpus.methods.iter().enumerate() {
            by_signature
                .entry((m.name.as_str(), m.arity()))
                .or_default()
                .push(i);
        }
        let n = corpus.methods.len();
        let mut callees = Vec::with_capacity(n);
        let mut callers = alloc::vec![BTreeSet::new(); n];
        let mut unresolved = 0;
        for (i, m) in corpus.methods.iter().enumerate() {
            let mut seen = BTreeSet::new();
            let mut list = Vec::new();
            for site in &m.callee_sites {
                let Some(targets) = by_signature.get(&(site.name.as_str(), site.args)) else {
                    unresolved += 1;
                    continue;
                };
                // several targets are listed in id order
                let mut ordered: Vec<usize> = targets.clone();
                ordered.sort_by(|a, b| corpus.methods[*a].id.cmp(&corpus.methods[*b].id));
                for t in ordered {
                    if seen.insert(t) {
                        list.push(t);
                        callers[t].insert(i);
                    }
                }
            }
            callees.push(list);
        }
        CallGraph {
            callees,
            callers,
            unresolved,
        }
    }

    /// Callers of `m` ordered by method id.
    pub fn callers_by_id(&self, corpus: &Corpus, m: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.callers[m].iter().copied().collect();
        v.sort_by(|a, b| corpus.methods[*a].id.cmp(&corpus.methods[*b].id));
        v
    }

    pub fn edge_count(&self) -> usize {
        self.callees.iter().map(Vec::len).sum()
    }

    /// The callee map keyed by method id, for export.
    pub fn callee_ids(&self, corpus: &Corpus) -> BTreeMap<String, Vec<String>> {
        corpus
            .methods
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let ids = self.callees[i]
                    .iter()
                    .map(|&c| corpus.methods[c].id.clone())
                    .collect();
                (m.id.clone(), ids)
            })
            .collect()
    }
}
