//! Linguistic similarity (LS) between two sentence representations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syndist::DistanceVector;

/// Cosine score plus a flag raised when either operand had zero norm, in
/// which case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub value: f64,
    pub degenerate: bool,
}

impl Similarity {
    fn of(value: f64) -> Self {
        Similarity {
            value,
            degenerate: false,
        }
    }

    const DEGENERATE: Similarity = Similarity {
        value: 0.0,
        degenerate: true,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty vector")]
    Empty,
    #[error("missing `{field}` representation on {side} operand")]
    Missing { field: &'static str, side: Side },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Query,
    Candidate,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Query => "query",
            Side::Candidate => "candidate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMode {
    #[default]
    Syntactic,
    Cwe,
    Combined,
}

impl SimilarityMode {
    pub const ALL: [SimilarityMode; 3] = [
        SimilarityMode::Syntactic,
        SimilarityMode::Cwe,
        SimilarityMode::Combined,
    ];

    pub fn needs_cwe(self) -> bool {
        matches!(self, SimilarityMode::Cwe | SimilarityMode::Combined)
    }

    pub fn needs_syndist(self) -> bool {
        matches!(self, SimilarityMode::Syntactic | SimilarityMode::Combined)
    }
}

impl fmt::Display for SimilarityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityMode::Syntactic => "syntactic",
            SimilarityMode::Cwe => "cwe",
            SimilarityMode::Combined => "combined",
        })
    }
}

impl FromStr for SimilarityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "syntactic" => Ok(SimilarityMode::Syntactic),
            "cwe" => Ok(SimilarityMode::Cwe),
            "combined" => Ok(SimilarityMode::Combined),
            other => Err(format!(
                "unknown mode `{other}` (expected syntactic, cwe or combined)"
            )),
        }
    }
}

/// Linguistic representation of one sentence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SentenceRepr {
    pub cwe: Option<Vec<f64>>,
    pub syndist: Option<DistanceVector>,
}

impl SentenceRepr {
    pub fn new(cwe: Option<Vec<f64>>, syndist: Option<DistanceVector>) -> Self {
        SentenceRepr { cwe, syndist }
    }

    /// Checks that this representation carries what `mode` needs.
    pub fn check(&self, mode: SimilarityMode, side: Side) -> Result<(), SimilarityError> {
        if mode.needs_cwe() && self.cwe.is_none() {
            return Err(SimilarityError::Missing { field: "cwe", side });
        }
        if mode.needs_syndist() && self.syndist.is_none() {
            return Err(SimilarityError::Missing { field: "tree", side });
        }
        Ok(())
    }
}

/// Borrowed view used on hot paths so corpus records need not be cloned.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReprRef<'a> {
    pub cwe: Option<&'a [f64]>,
    pub syndist: Option<&'a DistanceVector>,
}

impl<'a> From<&'a SentenceRepr> for ReprRef<'a> {
    fn from(r: &'a SentenceRepr) -> Self {
        ReprRef {
            cwe: r.cwe.as_deref(),
            syndist: r.syndist.as_ref(),
        }
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<Similarity, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(SimilarityError::Empty);
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(Similarity::DEGENERATE);
    }
    // sqrt(x * x) == x exactly, so self-similarity comes out as 1.0.
    Ok(Similarity::of((dot / (na * nb).sqrt()).clamp(-1.0, 1.0)))
}

/// Cosine of two distance vectors, the shorter one zero-padded.
pub fn syntactic_similarity(
    a: &DistanceVector,
    b: &DistanceVector,
) -> Result<Similarity, SimilarityError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimilarityError::Empty);
    }
    // Integer sums are exact; values are tree heights so they stay small.
    let (mut dot, mut na, mut nb) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.values().iter().zip(b.values()) {
        dot += u64::from(x) * u64::from(y);
    }
    for &x in a.values() {
        na += u64::from(x) * u64::from(x);
    }
    for &y in b.values() {
        nb += u64::from(y) * u64::from(y);
    }
    if na == 0 || nb == 0 {
        return Ok(Similarity::DEGENERATE);
    }
    let v = dot as f64 / (na as f64 * nb as f64).sqrt();
    Ok(Similarity::of(v.clamp(-1.0, 1.0)))
}

/// Unweighted mean of the CWE and syntactic channels.
pub fn combined_similarity(
    a: &SentenceRepr,
    b: &SentenceRepr,
) -> Result<Similarity, SimilarityError> {
    similarity(SimilarityMode::Combined, a.into(), b.into())
}

/// LS under `mode`. `query` and `candidate` only differ in how a missing
/// representation is reported.
pub fn similarity(
    mode: SimilarityMode,
    query: ReprRef<'_>,
    candidate: ReprRef<'_>,
) -> Result<Similarity, SimilarityError> {
    let cwe_pair = || -> Result<(&[f64], &[f64]), SimilarityError> {
        Ok((
            query.cwe.ok_or(SimilarityError::Missing {
                field: "cwe",
                side: Side::Query,
            })?,
            candidate.cwe.ok_or(SimilarityError::Missing {
                field: "cwe",
                side: Side::Candidate,
            })?,
        ))
    };
    let syn_pair = || -> Result<(&DistanceVector, &DistanceVector), SimilarityError> {
        Ok((
            query.syndist.ok_or(SimilarityError::Missing {
                field: "tree",
                side: Side::Query,
            })?,
            candidate.syndist.ok_or(SimilarityError::Missing {
                field: "tree",
                side: Side::Candidate,
            })?,
        ))
    };
    match mode {
        SimilarityMode::Cwe => {
            let (a, b) = cwe_pair()?;
            cosine(a, b)
        }
        SimilarityMode::Syntactic => {
            let (a, b) = syn_pair()?;
            syntactic_similarity(a, b)
        }
        SimilarityMode::Combined => {
            let (ca, cb) = cwe_pair()?;
            let (sa, sb) = syn_pair()?;
            let c = cosine(ca, cb)?;
            let s = syntactic_similarity(sa, sb)?;
            Ok(Similarity {
                value: 0.5 * (c.value + s.value),
                degenerate: c.degenerate || s.degenerate,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dv(v: &[u32]) -> DistanceVector {
        DistanceVector::from_raw(v.to_vec())
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().value - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap().value, 0.0);
        let v = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap().value;
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn cosine_errors_and_degenerate() {
        assert_eq!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(SimilarityError::LengthMismatch { left: 1, right: 2 })
        );
        assert_eq!(cosine(&[], &[]), Err(SimilarityError::Empty));
        let s = cosine(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(s, Similarity::DEGENERATE);
    }

    #[test]
    fn syntactic_examples() {
        assert_eq!(syntactic_similarity(&dv(&[0, 2, 1]), &dv(&[0, 2, 1])).unwrap().value, 1.0);
        let padded = syntactic_similarity(&dv(&[0, 2, 1, 3]), &dv(&[0, 2, 1])).unwrap();
        let expected = 5.0 / (14f64.sqrt() * 5f64.sqrt());
        assert!((padded.value - expected).abs() < 1e-12);
        assert!((padded.value - 0.5976).abs() < 1e-4);
        let zero = syntactic_similarity(&dv(&[0]), &dv(&[0])).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!(zero.degenerate);
    }

    #[test]
    fn combined_is_mean() {
        // cwe cosine 0.8: (1, 0) vs (0.8, 0.6); syntactic 0.6: (0,1,0) vs (0,3,4) → 3/5.
        let a = SentenceRepr::new(Some(vec![1.0, 0.0]), Some(dv(&[0, 1, 0])));
        let b = SentenceRepr::new(Some(vec![0.8, 0.6]), Some(dv(&[0, 3, 4])));
        let s = combined_similarity(&a, &b).unwrap().value;
        assert!((s - 0.7).abs() < 1e-12, "{s}");
        assert!((combined_similarity(&a, &a).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn combined_reports_missing_field() {
        let a = SentenceRepr::new(Some(vec![1.0]), None);
        let b = SentenceRepr::new(Some(vec![1.0]), Some(dv(&[0, 1])));
        let err = combined_similarity(&a, &b).unwrap_err();
        assert_eq!(
            err,
            SimilarityError::Missing {
                field: "tree",
                side: Side::Query
            }
        );
        assert!(err.to_string().contains("tree"));
        let err = combined_similarity(&b, &SentenceRepr::new(None, Some(dv(&[0])))).unwrap_err();
        assert!(err.to_string().contains("cwe") && err.to_string().contains("candidate"));
    }

    #[test]
    fn mode_parsing() {
        for m in SimilarityMode::ALL {
            assert_eq!(m.to_string().parse::<SimilarityMode>().unwrap(), m);
        }
        assert!("bert".parse::<SimilarityMode>().is_err());
    }

    fn vec_pair(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-10.0f64..10.0, len),
            prop::collection::vec(-10.0f64..10.0, len),
        )
    }

    proptest! {
        #[test]
        fn cosine_symmetric_bounded((a, b) in (1usize..12).prop_flat_map(vec_pair)) {
            let ab = cosine(&a, &b).unwrap().value;
            let ba = cosine(&b, &a).unwrap().value;
            prop_assert_eq!(ab, ba);
            prop_assert!((-1.0..=1.0).contains(&ab));
        }

        #[test]
        fn cosine_scale_invariant((a, b) in (1usize..12).prop_flat_map(vec_pair), k in 0.01f64..100.0) {
            let base = cosine(&a, &b).unwrap();
            let scaled: Vec<f64> = a.iter().map(|x| x * k).collect();
            let s = cosine(&scaled, &b).unwrap();
            prop_assert_eq!(base.degenerate, s.degenerate);
            prop_assert!((base.value - s.value).abs() < 1e-12);
        }

        #[test]
        fn self_similarity_is_one(a in prop::collection::vec(0u32..20, 1..15)) {
            let d = dv(&a);
            let s = syntactic_similarity(&d, &d).unwrap();
            if a.iter().any(|&x| x > 0) {
                prop_assert!((s.value - 1.0).abs() < 1e-12);
            } else {
                prop_assert!(s.degenerate);
            }
        }

        #[test]
        fn syntactic_symmetric(
            a in prop::collection::vec(0u32..20, 1..15),
            b in prop::collection::vec(0u32..20, 1..15),
        ) {
            let ab = syntactic_similarity(&dv(&a), &dv(&b)).unwrap();
            let ba = syntactic_similarity(&dv(&b), &dv(&a)).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab.value));
        }
    }
}
