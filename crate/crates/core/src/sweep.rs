//! LSW trade-off curves: mean linguistic distance (1 - LS) and mean acoustic
//! distance D over all sentence transitions, for each weight on a grid.
//! First sentences of paragraphs are excluded since their D is fixed at 0.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::projector::Projector;
use crate::select::{select_paragraph, SelectError, SelectionConfig, SelectionResult};
use crate::simil::SentenceRepr;
use crate::store::Corpus;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("empty lsw grid")]
    EmptyGrid,
    #[error("grid value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("bad grid spec `{0}`: expected start:end:step with step > 0")]
    BadSpec(String),
    #[error("no paragraphs to sweep")]
    NoParagraphs,
    #[error("no sentence transitions (every paragraph has a single sentence)")]
    NoTransitions,
    #[error(transparent)]
    Select(#[from] SelectError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lsw: f64,
    pub mean_linguistic_distance: f64,
    pub mean_acoustic_distance: f64,
}

/// Largest fall in mean acoustic distance between adjacent grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxDrop {
    pub from_lsw: f64,
    pub to_lsw: f64,
    pub drop: f64,
}

/// 1.00 down to 0.70 in steps of 0.05.
pub fn default_grid() -> Vec<f64> {
    parse_grid("1.0:0.7:0.05").expect("static spec")
}

/// Parses `start:end:step`, inclusive of both ends, in either direction.
/// Values come back sorted descending.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, SweepError> {
    let bad = || SweepError::BadSpec(spec.to_owned());
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    let span = (end - start).abs();
    let steps = ((span / step) + 1e-9).floor() as usize;
    let dir = if end < start { -1.0 } else { 1.0 };
    let grid = (0..=steps)
        .map(|i| round12(start + dir * i as f64 * step))
        .collect();
    check_grid(grid)
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn check_grid(mut grid: Vec<f64>) -> Result<Vec<f64>, SweepError> {
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(SweepError::OutOfRange(bad));
    }
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    Ok(grid)
}

/// Runs paragraph selection for every (lsw, paragraph) pair. `template`
/// supplies everything but the weight.
pub fn sweep(
    corpus: &Corpus,
    paragraphs: &[Vec<SentenceRepr>],
    template: &SelectionConfig,
    projector: &Projector,
    grid: &[f64],
) -> Result<Vec<SweepPoint>, SweepError> {
    let grid = check_grid(grid.to_vec())?;
    if paragraphs.is_empty() {
        return Err(SweepError::NoParagraphs);
    }
    if paragraphs.iter().all(|p| p.len() < 2) {
        return Err(SweepError::NoTransitions);
    }
    grid.par_iter()
        .map(|&lsw| {
            let cfg = template.with_lsw(lsw);
            let runs: Vec<Vec<SelectionResult>> = paragraphs
                .par_iter()
                .map(|p| select_paragraph(corpus, p, &cfg, projector))
                .collect::<Result<_, _>>()?;
            let mut ling = Neumaier::default();
            let mut acou = Neumaier::default();
            let mut count = 0usize;
            for r in runs.iter().flat_map(|run| run.iter().skip(1)) {
                ling.add(1.0 - r.ls);
                acou.add(r.d);
                count += 1;
            }
            Ok(SweepPoint {
                lsw,
                mean_linguistic_distance: ling.total() / count as f64,
                mean_acoustic_distance: acou.total() / count as f64,
            })
        })
        .collect()
}

/// Segment of the (descending-lsw) curve with the biggest acoustic drop.
pub fn max_drop(points: &[SweepPoint]) -> Option<MaxDrop> {
    points
        .windows(2)
        .map(|w| MaxDrop {
            from_lsw: w[0].lsw,
            to_lsw: w[1].lsw,
            drop: w[0].mean_acoustic_distance - w[1].mean_acoustic_distance,
        })
        .fold(None, |best: Option<MaxDrop>, m| match best {
            Some(b) if b.drop >= m.drop => Some(b),
            _ => Some(m),
        })
}

/// CSV with header `lsw,linguistic,acoustic`.
pub fn to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("lsw,linguistic,acoustic\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.lsw, p.mean_linguistic_distance, p.mean_acoustic_distance
        ));
    }
    out
}

/// Compensated summation; order-dependent but deterministic for a fixed order.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
