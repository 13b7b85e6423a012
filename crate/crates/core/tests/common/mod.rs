//! Generators and brute-force oracles shared by the integration suites. The
//! oracles only read public data (trees, vectors, projector parameters) and
//! recompute everything with their own arithmetic.

#![allow(dead_code)]

use psel::{Corpus, CorpusRecord, ParseTree, Projector, SentenceRepr, SimilarityMode};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub const WORKED_SENTENCE: &str = "The brown fox is quick and it is jumping over the lazy dog";

/// Constituency tree for the worked example sentence, with POS preterminals.
pub const WORKED_TREE: &str = "(ROOT (S (S (NP (DT The) (JJ brown) (NN fox)) \
    (VP (VBZ is) (ADJP (JJ quick)))) (CC and) (S (NP (PRP it)) (VP (VBZ is) \
    (VP (VBG jumping) (PP (IN over) (NP (DT the) (JJ lazy) (NN dog))))))))";

pub const WORKED_DISTANCES: [u32; 13] = [0, 2, 1, 3, 1, 8, 7, 6, 5, 4, 3, 2, 1];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

const LABELS: [&str; 8] = ["S", "NP", "VP", "PP", "DT", "NN", "JJ", "SBAR"];

/// Random tree with exactly `leaves` tokens. Unary chains and wide nodes
/// both occur.
pub fn random_tree(rng: &mut StdRng, leaves: usize) -> ParseTree {
    let label = LABELS[rng.random_range(0..LABELS.len())];
    if leaves == 1 {
        let leaf = ParseTree::leaf(label, format!("w{}", rng.random_range(0..100)));
        return if rng.random_bool(0.25) {
            ParseTree::node(LABELS[rng.random_range(0..LABELS.len())], vec![leaf])
        } else {
            leaf
        };
    }
    if rng.random_bool(0.15) {
        return ParseTree::node(label, vec![random_tree(rng, leaves)]);
    }
    let k = rng.random_range(2..=leaves.min(4));
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, leaves - 1, k - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut sizes = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(leaves)) {
        sizes.push(c - prev);
        prev = c;
    }
    ParseTree::node(label, sizes.into_iter().map(|s| random_tree(rng, s)).collect())
}

/// Brute-force syntactic distances on the raw tree. For every adjacent pair
/// of leaves it walks both root-to-leaf paths to the point where they split,
/// then evaluates the height that node would have after unary chains are
/// merged and wide nodes are split right-branching.
pub fn oracle_distances(tree: &ParseTree) -> Vec<u32> {
    let mut paths: Vec<Vec<usize>> = Vec::new();
    collect_paths(tree, &mut Vec::new(), &mut paths);
    let mut out = vec![0u32; paths.len()];
    for i in 1..paths.len() {
        let (a, b) = (&paths[i - 1], &paths[i]);
        let split = a.iter().zip(b).take_while(|(x, y)| x == y).count();
        let mut node = tree;
        for &c in &a[..split] {
            node = &node.children()[c];
        }
        let j = a[split];
        assert_eq!(b[split], j + 1, "adjacent leaves must sit in adjacent subtrees");
        out[i] = cascade_height(node, j);
    }
    out
}

fn collect_paths(node: &ParseTree, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if node.is_leaf() {
        out.push(prefix.clone());
        return;
    }
    for (i, c) in node.children().iter().enumerate() {
        prefix.push(i);
        collect_paths(c, prefix, out);
        prefix.pop();
    }
}

fn effective_height(node: &ParseTree) -> u32 {
    match node.children() {
        [] => 0,
        [only] => effective_height(only),
        _ => cascade_height(node, 0),
    }
}

/// Height of the binarized sub-node of `node` that covers children `j..`.
fn cascade_height(node: &ParseTree, j: usize) -> u32 {
    let cs = node.children();
    let k = cs.len();
    if j + 2 == k {
        1 + effective_height(&cs[j]).max(effective_height(&cs[j + 1]))
    } else {
        1 + effective_height(&cs[j]).max(cascade_height(node, j + 1))
    }
}

pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let dot: f64 = (0..n).map(|i| get(a, i) * get(b, i)).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn as_f64(v: &[u32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

/// Oracle-side representation of a query: raw tree plus CWE vector.
#[derive(Debug, Clone)]
pub struct OracleQuery {
    pub tree: ParseTree,
    pub cwe: Vec<f64>,
}

impl OracleQuery {
    pub fn repr(&self) -> SentenceRepr {
        SentenceRepr::new(Some(self.cwe.clone()), Some(psel::distance_vector(&self.tree)))
    }
}

pub fn oracle_ls(mode: SimilarityMode, q: &OracleQuery, r: &CorpusRecord) -> f64 {
    let syn = || oracle_cosine(&as_f64(&oracle_distances(&q.tree)), &as_f64(&oracle_distances(&r.tree)));
    let cwe = || oracle_cosine(&q.cwe, &r.cwe);
    match mode {
        SimilarityMode::Syntactic => syn(),
        SimilarityMode::Cwe => cwe(),
        SimilarityMode::Combined => (syn() + cwe()) / 2.0,
    }
}

fn oracle_project(p: &Projector, x: &[f64]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (k, c) in p.components().iter().enumerate() {
        out[k] = (0..x.len()).map(|i| (x[i] - p.mean()[i]) * c[i]).sum();
    }
    out
}

/// Projected distances between every record and `prev`, optionally divided
/// by the projected diameter recomputed here from scratch.
pub fn oracle_d(p: &Projector, corpus: &Corpus, prev: &[f64], normalize: bool) -> Vec<f64> {
    let pts: Vec<[f64; 2]> = corpus.records().iter().map(|r| oracle_project(p, &r.acoustic)).collect();
    let q = oracle_project(p, prev);
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let mut diam = 0.0f64;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            diam = diam.max(dist(pts[i], pts[j]));
        }
    }
    pts.iter()
        .map(|&a| {
            let d = dist(a, q);
            if normalize {
                d / diam
            } else {
                d
            }
        })
        .collect()
}

const TIE: f64 = 1e-9;

/// Exhaustive argmin of `loss` over all candidates. Values within `TIE` of
/// the minimum count as tied; among those the highest LS wins, then the
/// smallest id.
pub fn oracle_argmin(corpus: &Corpus, ls: &[f64], loss: &[f64]) -> usize {
    let best = loss.iter().copied().fold(f64::INFINITY, f64::min);
    let group: Vec<usize> = (0..loss.len()).filter(|&i| loss[i] <= best + TIE).collect();
    let top_ls = group.iter().map(|&i| ls[i]).fold(f64::NEG_INFINITY, f64::max);
    group
        .into_iter()
        .filter(|&i| ls[i] >= top_ls - TIE)
        .min_by(|&a, &b| corpus.records()[a].id.cmp(&corpus.records()[b].id))
        .expect("non-empty corpus")
}

/// Exhaustive argmax of LS with the same tie rule.
pub fn oracle_argmax_ls(corpus: &Corpus, ls: &[f64]) -> usize {
    let neg: Vec<f64> = ls.iter().map(|x| -x).collect();
    oracle_argmin(corpus, ls, &neg)
}

pub fn normal_vec(rng: &mut StdRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Random corpus. Some records copy an earlier record's tree and CWE so
/// that exact similarity ties occur; ids are shuffled relative to file order.
pub fn random_corpus(rng: &mut StdRng, n: usize, d_cwe: usize, d_ac: usize) -> Corpus {
    let mut ids: Vec<String> = (0..n).map(|i| format!("r{i:02}")).collect();
    ids.shuffle(rng);
    let mut records: Vec<CorpusRecord> = Vec::with_capacity(n);
    for id in ids {
        let (tree, cwe) = if !records.is_empty() && rng.random_bool(0.2) {
            let src = &records[rng.random_range(0..records.len())];
            (src.tree.clone(), src.cwe.clone())
        } else {
            let leaves = rng.random_range(1..=8);
            (random_tree(rng, leaves), normal_vec(rng, d_cwe))
        };
        let acoustic = normal_vec(rng, d_ac);
        records.push(CorpusRecord {
            text: tree.tokens().join(" "),
            id,
            tree,
            cwe,
            acoustic,
        });
    }
    Corpus::from_records(records).expect("generated corpus is valid")
}

/// Random query; sometimes a copy of a corpus record's linguistics.
pub fn random_query(rng: &mut StdRng, corpus: &Corpus) -> OracleQuery {
    if rng.random_bool(0.2) {
        let r = &corpus.records()[rng.random_range(0..corpus.len())];
        return OracleQuery {
            tree: r.tree.clone(),
            cwe: r.cwe.clone(),
        };
    }
    let leaves = rng.random_range(1..=8);
    OracleQuery {
        tree: random_tree(rng, leaves),
        cwe: normal_vec(rng, corpus.d_cwe()),
    }
}

/// Long-form-reading style workload: acoustic embeddings live near a few
/// prosodic "styles" and the style correlates loosely with sentence length.
pub struct Workload {
    pub corpus: Corpus,
    pub paragraphs: Vec<Vec<SentenceRepr>>,
}

pub fn lfr_workload(seed: u64, records: usize, paragraphs: usize, sentences: usize) -> Workload {
    let mut rng = rng(seed);
    let d_ac = 64;
    let styles: Vec<Vec<f64>> = (0..6).map(|_| normal_vec(&mut rng, d_ac)).collect();
    let mut recs = Vec::with_capacity(records);
    for i in 0..records {
        let leaves = rng.random_range(2..=12);
        let tree = random_tree(&mut rng, leaves);
        let style = &styles[(leaves + rng.random_range(0..3)) % styles.len()];
        let acoustic: Vec<f64> = style
            .iter()
            .map(|s| 2.0 * s + rng.sample::<f64, _>(StandardNormal))
            .collect();
        recs.push(CorpusRecord {
            id: format!("utt{i:04}"),
            text: tree.tokens().join(" "),
            tree,
            cwe: normal_vec(&mut rng, 16),
            acoustic,
        });
    }
    let corpus = Corpus::from_records(recs).expect("valid");
    let paragraphs = (0..paragraphs)
        .map(|_| {
            (0..sentences)
                .map(|_| {
                    let leaves = rng.random_range(2..=12);
                    OracleQuery {
                        tree: random_tree(&mut rng, leaves),
                        cwe: normal_vec(&mut rng, 16),
                    }
                    .repr()
                })
                .collect()
        })
        .collect();
    Workload { corpus, paragraphs }
}
