//! Acoustic embedding selection.
//!
//! Single sentences take the training record with the highest linguistic
//! similarity. Paragraphs are handled greedily left to right: the first
//! sentence is chosen the same way (its acoustic distance is fixed at 0),
//! and every later sentence minimizes
//!
//! ```text
//! loss = lsw * (1 - ls) + (1 - lsw) * d
//! ```
//!
//! where `d` is the projected acoustic distance to the embedding chosen for
//! the previous sentence. Ties go to the smallest record id.

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::projector::{Projector, ProjectorError, Scale};
use crate::simil::{similarity, ReprRef, SentenceRepr, Side, SimilarityError, SimilarityMode};
use crate::store::Corpus;

pub const DEFAULT_LSW: f64 = 0.9;
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("paragraph has no sentences")]
    EmptyParagraph,
    #[error("linguistic similarity weight {0} outside [0, 1]")]
    InvalidLsw(f64),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Projector(#[from] ProjectorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionConfig {
    pub mode: SimilarityMode,
    /// Linguistic similarity weight; the acoustic term gets `1 - lsw`.
    pub lsw: f64,
    pub normalize_d: bool,
    pub top_k: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            mode: SimilarityMode::default(),
            lsw: DEFAULT_LSW,
            normalize_d: true,
            top_k: DEFAULT_TOP_K,
        }
    }
}

impl SelectionConfig {
    pub fn with_lsw(self, lsw: f64) -> Self {
        SelectionConfig { lsw, ..self }
    }

    pub fn validate(&self) -> Result<(), SelectError> {
        if !(0.0..=1.0).contains(&self.lsw) {
            return Err(SelectError::InvalidLsw(self.lsw));
        }
        Ok(())
    }
}

/// The weighted objective.
pub fn loss(lsw: f64, ls: f64, d: f64) -> f64 {
    lsw * (1.0 - ls) + (1.0 - lsw) * d
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunnerUp {
    pub id: String,
    pub ls: f64,
    pub d: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub chosen_id: String,
    /// Position of the chosen record in the corpus.
    #[serde(skip)]
    pub index: usize,
    pub ls: f64,
    pub d: f64,
    pub loss: f64,
    /// Set when LS was computed against a zero-norm vector.
    pub degenerate: bool,
    pub runner_ups: Vec<RunnerUp>,
}

#[derive(Debug, Clone, Copy)]
struct Scored {
    index: usize,
    ls: f64,
    d: f64,
    loss: f64,
    degenerate: bool,
}

fn by_similarity(corpus: &Corpus) -> impl Fn(&Scored, &Scored) -> Ordering + '_ {
    move |a, b| {
        b.ls.total_cmp(&a.ls)
            .then_with(|| corpus.records()[a.index].id.cmp(&corpus.records()[b.index].id))
    }
}

// LS breaks exact loss ties before the id does, so that lsw = 1 orders
// candidates exactly like pure similarity ranking even where 1 - ls rounds
// two different scores to the same value.
fn by_loss(corpus: &Corpus) -> impl Fn(&Scored, &Scored) -> Ordering + '_ {
    let sim = by_similarity(corpus);
    move |a, b| a.loss.total_cmp(&b.loss).then_with(|| sim(a, b))
}

fn score_all(
    corpus: &Corpus,
    query: &SentenceRepr,
    mode: SimilarityMode,
) -> Result<Vec<Scored>, SelectError> {
    if corpus.is_empty() {
        return Err(SelectError::EmptyCorpus);
    }
    query.check(mode, Side::Query)?;
    let q = ReprRef::from(query);
    (0..corpus.len())
        .map(|i| {
            let s = similarity(mode, q, corpus.repr(i))?;
            if s.degenerate {
                log::warn!("zero-norm representation against record `{}`", corpus.records()[i].id);
            }
            Ok(Scored {
                index: i,
                ls: s.value,
                d: 0.0,
                loss: 0.0,
                degenerate: s.degenerate,
            })
        })
        .collect()
}

fn finish(corpus: &Corpus, ranked: &[Scored], top_k: usize) -> SelectionResult {
    let best = ranked[0];
    let runner_ups = ranked[1..]
        .iter()
        .take(top_k)
        .map(|s| RunnerUp {
            id: corpus.records()[s.index].id.clone(),
            ls: s.ls,
            d: s.d,
            loss: s.loss,
        })
        .collect();
    SelectionResult {
        chosen_id: corpus.records()[best.index].id.clone(),
        index: best.index,
        ls: best.ls,
        d: best.d,
        loss: best.loss,
        degenerate: best.degenerate,
        runner_ups,
    }
}

/// Picks the record most similar to `query`, with the default number of
/// runner-ups.
pub fn select_sentence(
    corpus: &Corpus,
    query: &SentenceRepr,
    mode: SimilarityMode,
) -> Result<SelectionResult, SelectError> {
    select_sentence_top_k(corpus, query, mode, DEFAULT_TOP_K)
}

pub fn select_sentence_top_k(
    corpus: &Corpus,
    query: &SentenceRepr,
    mode: SimilarityMode,
    top_k: usize,
) -> Result<SelectionResult, SelectError> {
    first_sentence(corpus, query, mode, 1.0, top_k)
}

/// Similarity ranking with D fixed at 0; losses reported under `lsw`.
fn first_sentence(
    corpus: &Corpus,
    query: &SentenceRepr,
    mode: SimilarityMode,
    lsw: f64,
    top_k: usize,
) -> Result<SelectionResult, SelectError> {
    let mut scored = score_all(corpus, query, mode)?;
    for s in &mut scored {
        s.loss = loss(lsw, s.ls, 0.0);
    }
    scored.sort_by(by_similarity(corpus));
    Ok(finish(corpus, &scored, top_k))
}

/// Greedy paragraph selection.
pub fn select_paragraph(
    corpus: &Corpus,
    queries: &[SentenceRepr],
    cfg: &SelectionConfig,
    projector: &Projector,
) -> Result<Vec<SelectionResult>, SelectError> {
    cfg.validate()?;
    let (first, rest) = queries.split_first().ok_or(SelectError::EmptyParagraph)?;
    for q in queries {
        q.check(cfg.mode, Side::Query)?;
    }
    let points = project_corpus(corpus, projector)?;
    let scale = Scale::from_normalize(cfg.normalize_d);

    let mut out = Vec::with_capacity(queries.len());
    out.push(first_sentence(corpus, first, cfg.mode, cfg.lsw, cfg.top_k)?);
    for query in rest {
        let prev = points[out.last().expect("first pushed").index];
        let mut scored = score_all(corpus, query, cfg.mode)?;
        for s in &mut scored {
            s.d = projector.point_distance(points[s.index], prev, scale);
            s.loss = loss(cfg.lsw, s.ls, s.d);
        }
        scored.sort_by(by_loss(corpus));
        out.push(finish(corpus, &scored, cfg.top_k));
    }
    Ok(out)
}

/// Projects every corpus acoustic embedding.
pub fn project_corpus(corpus: &Corpus, projector: &Projector) -> Result<Vec<[f64; 2]>, SelectError> {
    corpus
        .records()
        .iter()
        .map(|r| projector.project(&r.acoustic).map_err(SelectError::from))
        .collect()
}
