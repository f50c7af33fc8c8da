//! Embedded BM25 ranking.
//!
//! Scoring, for each distinct query term `t` present in document `d`:
//!
//! ```text
//! idf(t)    = ln(1 + (N - df(t) + 0.5) / (df(t) + 0.5))
//! score(d) += idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
//! ```
//!
//! The `1 +` inside the logarithm keeps idf positive even for a term that
//! occurs in every document (otherwise a one-document corpus could never
//! match anything). Results are sorted by descending score, ties by
//! ascending doc id; documents scoring zero are left out.
//!
//! The corpus is generic over the float type so callers can trade precision
//! for memory; the crate root exports `f64` aliases.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::Float;

/// Lower-cased tokens, split on anything non-alphanumeric (underscores
/// included) and on camelCase boundaries. Digits stay attached to the
/// letters before them, so `node1` is a single token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for run in text.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let chars: Vec<char> = run.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let prev = chars[i - 1];
            let cur = chars[i];
            let next = chars.get(i + 1).copied();
            // fooBar / foo1Bar
            let lower_to_upper = (prev.is_lowercase() || prev.is_ascii_digit()) && cur.is_uppercase();
            // HTTPServer: split before the `S`
            let acronym_end = prev.is_uppercase() && cur.is_uppercase() && next.is_some_and(char::is_lowercase);
            if lower_to_upper || acronym_end {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        out.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params<F> {
    pub k1: F,
    pub b: F,
}

impl<F: Float> Default for Bm25Params<F> {
    fn default() -> Self {
        Bm25Params {
            k1: F::from(1.2).expect("1.2 representable"),
            b: F::from(0.75).expect("0.75 representable"),
        }
    }
}

impl<F: Float> Bm25Params<F> {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(k1: F, b: F) -> Result<Self, IndexError> {
        if !(k1 >= F::zero()) || !(b >= F::zero() && b <= F::one()) {
            return Err(IndexError::BadParams);
        }
        Ok(Bm25Params { k1, b })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("duplicate document id {0:?}")]
    DuplicateDoc(String),
    #[error("BM25 parameters out of range (need k1 >= 0 and 0 <= b <= 1)")]
    BadParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit<F> {
    pub doc: String,
    pub score: F,
}

#[derive(Debug, Clone)]
struct Doc {
    id: String,
    len: usize,
    tf: HashMap<String, usize>,
}

/// A named, immutable collection of documents with precomputed statistics.
#[derive(Debug, Clone)]
pub struct Corpus<F> {
    name: String,
    params: Bm25Params<F>,
    docs: Vec<Doc>,
    df: HashMap<String, usize>,
    postings: HashMap<String, Vec<usize>>,
    avgdl: F,
}

impl<F: Float> Corpus<F> {
    pub fn build<I, S, T>(name: impl Into<String>, docs: I, params: Bm25Params<F>) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut postings: HashMap<String, Vec<usize>> = HashMap::new();
        let mut total = 0usize;
        for (id, text) in docs {
            let id = id.into();
            if !seen.insert(id.clone()) {
                return Err(IndexError::DuplicateDoc(id));
            }
            let toks = tokenize(text.as_ref());
            let mut tf: HashMap<String, usize> = HashMap::new();
            for t in &toks {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for t in tf.keys() {
                *df.entry(t.clone()).or_default() += 1;
                postings.entry(t.clone()).or_default().push(out.len());
            }
            total += toks.len();
            out.push(Doc { id, len: toks.len(), tf });
        }
        let avgdl = if out.is_empty() {
            F::zero()
        } else {
            F::from(total).unwrap() / F::from(out.len()).unwrap()
        };
        Ok(Corpus {
            name: name.into(),
            params,
            docs: out,
            df,
            postings,
            avgdl,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn avgdl(&self) -> F {
        self.avgdl
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn idf(&self, term: &str) -> F {
        let n = F::from(self.docs.len()).unwrap();
        let df = F::from(self.doc_freq(term)).unwrap();
        let half = F::from(0.5).unwrap();
        let idf = (F::one() + (n - df + half) / (df + half)).ln();
        idf.max(F::zero())
    }

    /// Score of every document with at least one query term, ranked.
    pub fn rank(&self, query: &str, limit: usize) -> Vec<Hit<F>> {
        if self.docs.is_empty() || limit == 0 {
            return Vec::new();
        }
        let mut terms = tokenize(query);
        terms.sort();
        terms.dedup();
        let Bm25Params { k1, b } = self.params;
        let mut scores: BTreeMap<usize, F> = BTreeMap::new();
        for t in &terms {
            let Some(post) = self.postings.get(t) else { continue };
            let idf = self.idf(t);
            for &d in post {
                let doc = &self.docs[d];
                let tf = F::from(doc.tf[t]).unwrap();
                let dl = F::from(doc.len).unwrap();
                let norm = F::one() - b + b * dl / self.avgdl;
                let s = idf * tf * (k1 + F::one()) / (tf + k1 * norm);
                let acc = scores.entry(d).or_insert_with(F::zero);
                *acc = *acc + s;
            }
        }
        let mut hits: Vec<Hit<F>> = scores
            .into_iter()
            .filter(|(_, s)| *s > F::zero())
            .map(|(d, score)| Hit {
                doc: self.docs[d].id.clone(),
                score,
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.doc.cmp(&b.doc))
        });
        hits.truncate(limit);
        hits
    }
}
