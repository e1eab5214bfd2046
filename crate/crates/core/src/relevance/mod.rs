//! Course relevance: TF-IDF vectors over syllabus text, cosine similarity
//! and the thresholded relevance graph drawn as layer 1.

mod tokenize;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tokenize::{is_cjk, tokenize, TokenizeMode, Tokenizer};

use crate::ingestion::CurriculumLayout;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelevanceError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document {0:?} appears more than once")]
    DuplicateDocument(String),
}

/// Sparse TF-IDF vector; only strictly positive weights are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DocumentVector<T> {
    pub course_id: String,
    pub weights: BTreeMap<String, T>,
}

impl<T: Scalar> DocumentVector<T> {
    pub fn norm(&self) -> T {
        self.weights.values().fold(T::zero(), |acc, &w| acc + w * w).sqrt()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `(course_id, overview + " " + lecture plan)` for every course in the layout.
pub fn corpus_from_layout(layout: &CurriculumLayout) -> Vec<(String, String)> {
    layout.courses.iter().map(|c| (c.course_id.clone(), c.syllabus_text())).collect()
}

/// Raw-count tf times `ln(N / df)`. Terms present in every document get
/// zero weight and are dropped.
pub fn build_tfidf<T: Scalar>(
    corpus: &[(String, String)],
    tokenizer: &Tokenizer,
) -> Result<Vec<DocumentVector<T>>, RelevanceError> {
    if corpus.is_empty() {
        return Err(RelevanceError::EmptyCorpus);
    }
    let mut ids = BTreeSet::new();
    let mut counts: Vec<BTreeMap<String, usize>> = Vec::with_capacity(corpus.len());
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for (id, text) in corpus {
        if !ids.insert(id.as_str()) {
            return Err(RelevanceError::DuplicateDocument(id.clone()));
        }
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        for term in tokenizer.tokenize(text) {
            *tf.entry(term).or_default() += 1;
        }
        for term in tf.keys() {
            *df.entry(term.clone()).or_default() += 1;
        }
        counts.push(tf);
    }
    let n = T::from_count(corpus.len());
    let idf: BTreeMap<&str, T> = df
        .iter()
        .filter(|&(_, &d)| d < corpus.len())
        .map(|(t, &d)| (t.as_str(), (n / T::from_count(d)).ln()))
        .collect();
    Ok(corpus
        .iter()
        .zip(counts)
        .map(|((id, _), tf)| {
            let weights = tf
                .into_iter()
                .filter_map(|(term, count)| {
                    let w = *idf.get(term.as_str())?;
                    Some((term, T::from_count(count) * w))
                })
                .collect();
            DocumentVector { course_id: id.clone(), weights }
        })
        .collect())
}

/// Cosine of the angle between two weight vectors; 0 when either is empty.
///
/// The dot product is accumulated in term order, so the result is exactly
/// symmetric in its arguments.
pub fn cosine_similarity<T: Scalar>(u: &DocumentVector<T>, v: &DocumentVector<T>) -> T {
    if u.is_empty() || v.is_empty() {
        return T::zero();
    }
    let mut dot = T::zero();
    let mut a = u.weights.iter().peekable();
    let mut b = v.weights.iter().peekable();
    while let (Some(&(ta, wa)), Some(&(tb, wb))) = (a.peek(), b.peek()) {
        match ta.cmp(tb) {
            Ordering::Less => {
                a.next();
            }
            Ordering::Greater => {
                b.next();
            }
            Ordering::Equal => {
                dot = dot + *wa * *wb;
                a.next();
                b.next();
            }
        }
    }
    let denom = u.norm() * v.norm();
    if denom <= T::zero() {
        return T::zero();
    }
    (dot / denom).max(T::zero()).min(T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RenderPolicy<T> {
    /// Edges below this similarity are not drawn.
    pub min_similarity: T,
    /// Keep only each course's strongest `top_k` edges.
    pub top_k: Option<usize>,
}

impl<T: Scalar> Default for RenderPolicy<T> {
    fn default() -> Self {
        Self { min_similarity: T::lit(0.2), top_k: None }
    }
}

/// Undirected edge with `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RelevanceEdge<T> {
    pub a: String,
    pub b: String,
    pub similarity: T,
}

impl<T> RelevanceEdge<T> {
    /// The endpoint opposite `course_id`, if the edge touches it.
    pub fn other(&self, course_id: &str) -> Option<&str> {
        if self.a == course_id {
            Some(&self.b)
        } else if self.b == course_id {
            Some(&self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RelevanceGraph<T> {
    pub policy: RenderPolicy<T>,
    /// Descending similarity, ties broken by `(a, b)`.
    pub edges: Vec<RelevanceEdge<T>>,
}

fn edge_order<T: Scalar>(x: &RelevanceEdge<T>, y: &RelevanceEdge<T>) -> Ordering {
    y.similarity.partial_cmp(&x.similarity).unwrap_or(Ordering::Equal).then_with(|| (&x.a, &x.b).cmp(&(&y.a, &y.b)))
}

/// Scores every pair and keeps the edges allowed by `policy`.
///
/// With `top_k` set, an edge survives when it is among the `top_k`
/// strongest edges of either endpoint.
pub fn build_graph<T: Scalar>(vectors: &[DocumentVector<T>], policy: RenderPolicy<T>) -> RelevanceGraph<T> {
    let mut edges = Vec::new();
    for (i, u) in vectors.iter().enumerate() {
        for v in &vectors[i + 1..] {
            let similarity = cosine_similarity(u, v);
            if similarity < policy.min_similarity {
                continue;
            }
            let (a, b) = if u.course_id <= v.course_id {
                (u.course_id.clone(), v.course_id.clone())
            } else {
                (v.course_id.clone(), u.course_id.clone())
            };
            edges.push(RelevanceEdge { a, b, similarity });
        }
    }
    edges.sort_by(edge_order);

    if let Some(k) = policy.top_k {
        let mut taken: BTreeMap<&str, usize> = BTreeMap::new();
        let mut keep = vec![false; edges.len()];
        // edges are in rank order, so each endpoint's first k are its top k
        for (idx, e) in edges.iter().enumerate() {
            for end in [e.a.as_str(), e.b.as_str()] {
                let count = taken.entry(end).or_default();
                if *count < k {
                    keep[idx] = true;
                }
                *count += 1;
            }
        }
        let mut flags = keep.into_iter();
        edges.retain(|_| flags.next().unwrap_or(false));
    }
    RelevanceGraph { policy, edges }
}

/// Line weight in `[0, 1]`: `(s - τ) / (1 - τ)`, clamped.
pub fn thickness_for<T: Scalar>(similarity: T, policy: &RenderPolicy<T>) -> T {
    let tau = policy.min_similarity;
    if tau >= T::one() {
        return if similarity >= tau { T::one() } else { T::zero() };
    }
    ((similarity - tau) / (T::one() - tau)).max(T::zero()).min(T::one())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ExportedEdge<T> {
    pub a: String,
    pub b: String,
    pub similarity: T,
    pub thickness: T,
}

/// JSON shape of an exported graph: policy plus edges with line weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GraphExport<T> {
    pub policy: RenderPolicy<T>,
    pub edges: Vec<ExportedEdge<T>>,
}

impl<T: Scalar> From<&RelevanceGraph<T>> for GraphExport<T> {
    fn from(g: &RelevanceGraph<T>) -> Self {
        GraphExport {
            policy: g.policy,
            edges: g
                .edges
                .iter()
                .map(|e| ExportedEdge {
                    a: e.a.clone(),
                    b: e.b.clone(),
                    similarity: e.similarity,
                    thickness: thickness_for(e.similarity, &g.policy),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(texts: &[&str]) -> Vec<(String, String)> {
        texts.iter().enumerate().map(|(i, t)| (format!("d{}", i + 1), t.to_string())).collect()
    }

    fn word() -> Tokenizer {
        Tokenizer::new(TokenizeMode::Word)
    }

    #[test]
    fn identical_documents_have_empty_vectors() {
        let v = build_tfidf::<f64>(&docs(&["x y z", "x y z"]), &word()).unwrap();
        assert!(v.iter().all(DocumentVector::is_empty));
        let single = build_tfidf::<f64>(&docs(&["only one doc"]), &word()).unwrap();
        assert!(single[0].is_empty());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(build_tfidf::<f64>(&[], &word()), Err(RelevanceError::EmptyCorpus));
    }

    #[test]
    fn cosine_edge_cases() {
        let v = build_tfidf::<f64>(&docs(&["a b", "c d", "a b b"]), &word()).unwrap();
        assert!((cosine_similarity(&v[0], &v[0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&v[0], &v[1]), 0.0);
        let empty = DocumentVector::<f64> { course_id: "e".into(), weights: BTreeMap::new() };
        assert_eq!(cosine_similarity(&v[0], &empty), 0.0);
    }

    #[test]
    fn thickness_rescales_linearly() {
        let p = RenderPolicy { min_similarity: 0.2_f64, top_k: None };
        assert_eq!(thickness_for(0.2, &p), 0.0);
        assert_eq!(thickness_for(1.0, &p), 1.0);
        assert!((thickness_for(0.6, &p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn complete_graph_at_zero_threshold() {
        let v = build_tfidf::<f64>(&docs(&["a b", "b c", "c d"]), &word()).unwrap();
        let g = build_graph(&v, RenderPolicy { min_similarity: 0.0, top_k: None });
        assert_eq!(g.edges.len(), 3);
        let g = build_graph(&v, RenderPolicy { min_similarity: 1.1, top_k: None });
        assert!(g.edges.is_empty());
    }

    #[test]
    fn edges_are_canonical_and_sorted() {
        let v = build_tfidf::<f64>(&docs(&["a b c", "a b", "c e", "e f"]), &word()).unwrap();
        let g = build_graph(&v, RenderPolicy { min_similarity: 0.0, top_k: None });
        for e in &g.edges {
            assert!(e.a < e.b);
        }
        for w in g.edges.windows(2) {
            assert!(w[0].similarity >= w[1].similarity);
        }
    }
}
