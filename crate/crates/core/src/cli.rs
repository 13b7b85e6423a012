//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on data errors, 2 on usage errors. Results go
//! to stdout (JSON Lines, or CSV for `sweep`), diagnostics to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::projector::Projector;
use crate::select::{
    select_paragraph, select_sentence_top_k, SelectionConfig, SelectionResult, DEFAULT_LSW,
    DEFAULT_TOP_K,
};
use crate::simil::{SentenceRepr, SimilarityMode};
use crate::store::{ingest, Corpus, Index, INDEX_VERSION};
use crate::sweep::{default_grid, max_drop, parse_grid, sweep, to_csv};
use crate::syndist::distance_vector;
use crate::treebank::parse_tree;

#[derive(Debug, Parser)]
#[command(name = "psel", version, about = "Linguistically driven acoustic embedding selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSONL corpus and write a binary index.
    BuildIndex {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select one embedding per query sentence (JSONL in, JSONL out).
    Select {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: Common,
        /// Query file: JSONL, corpus schema without `acoustic`.
        queries: PathBuf,
    },
    /// Greedy per-paragraph selection with acoustic smoothing.
    SelectParagraph {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: Common,
        #[command(flatten)]
        weights: Weights,
        /// JSON file: one paragraph (array of queries) or an array of them.
        paragraphs: PathBuf,
    },
    /// Trade-off curves over a grid of linguistic similarity weights.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: Common,
        /// start:end:step, inclusive.
        #[arg(long, value_parser = parse_grid_arg)]
        grid: Option<Grid>,
        #[arg(long = "no-normalize-d")]
        no_normalize_d: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        paragraphs: PathBuf,
    },
    /// Print the syntactic distance vector of a bracketed tree.
    Distances { tree: String },
    /// Summarize an index or corpus.
    Inspect {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// JSONL corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Binary index written by `build-index`.
    #[arg(long)]
    index: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_enum, default_value_t = ModeArg::Syntactic)]
    mode: ModeArg,
    #[arg(long = "top-k", default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Weights {
    #[arg(long, default_value_t = DEFAULT_LSW, value_parser = parse_lsw)]
    lsw: f64,
    #[arg(long = "no-normalize-d")]
    no_normalize_d: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Syntactic,
    Cwe,
    Combined,
}

impl From<ModeArg> for SimilarityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Syntactic => SimilarityMode::Syntactic,
            ModeArg::Cwe => SimilarityMode::Cwe,
            ModeArg::Combined => SimilarityMode::Combined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn parse_lsw(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("{v} is outside [0, 1]"));
    }
    Ok(v)
}

// Newtype so clap treats the grid as a single value, not a repeated arg.
#[derive(Debug, Clone)]
pub struct Grid(pub Vec<f64>);

fn parse_grid_arg(s: &str) -> Result<Grid, String> {
    parse_grid(s).map(Grid).map_err(|e| e.to_string())
}

/// A query sentence: the corpus line schema minus `acoustic`. Either `tree`
/// or `cwe` may be omitted when the selected mode does not need it.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub id: String,
    #[serde(default)]
    pub text: String,
    pub tree: Option<String>,
    pub cwe: Option<Vec<f64>>,
}

impl QueryRecord {
    pub fn to_repr(&self) -> Result<SentenceRepr> {
        let syndist = match &self.tree {
            Some(t) => Some(distance_vector(
                &parse_tree(t).with_context(|| format!("query `{}`: bad tree", self.id))?,
            )),
            None => None,
        };
        if let Some(cwe) = &self.cwe {
            if cwe.iter().any(|x| !x.is_finite()) {
                bail!("query `{}`: non-finite value in cwe", self.id);
            }
        }
        if syndist.is_none() && self.cwe.is_none() {
            bail!("query `{}` has neither `tree` nor `cwe`", self.id);
        }
        Ok(SentenceRepr::new(self.cwe.clone(), syndist))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ParagraphFile {
    Many(Vec<Vec<QueryRecord>>),
    One(Vec<QueryRecord>),
}

fn read_paragraphs(path: &Path) -> Result<Vec<Vec<QueryRecord>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: ParagraphFile = serde_json::from_str(&text)
        .with_context(|| format!("{}: expected an array of queries or of paragraphs", path.display()))?;
    Ok(match parsed {
        ParagraphFile::Many(ps) => ps,
        ParagraphFile::One(p) => vec![p],
    })
}

fn read_queries(path: &Path) -> Result<Vec<QueryRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{}: line {}", path.display(), i + 1))
        })
        .collect()
}

fn to_reprs(records: &[QueryRecord]) -> Result<Vec<SentenceRepr>> {
    records.iter().map(QueryRecord::to_repr).collect()
}

impl Source {
    fn load(&self) -> Result<Index> {
        match (&self.corpus, &self.index) {
            (Some(c), None) => {
                let corpus = ingest(c)?;
                let projector = fit_or_warn(&corpus);
                Ok(Index::new(corpus, projector))
            }
            (None, Some(i)) => Ok(Index::load(i)?),
            _ => Err(anyhow!("exactly one of --corpus or --index is required")),
        }
    }
}

fn fit_or_warn(corpus: &Corpus) -> Option<Projector> {
    match Projector::fit(corpus) {
        Ok(p) => Some(p),
        Err(e) => {
            log::warn!("no acoustic projector: {e}");
            None
        }
    }
}

fn need_projector(index: &Index) -> Result<&Projector> {
    index
        .projector
        .as_ref()
        .ok_or_else(|| anyhow!("no acoustic projector available for this corpus"))
}

#[derive(Serialize)]
struct QueryRow<'a> {
    query_id: &'a str,
    #[serde(flatten)]
    result: &'a SelectionResult,
}

#[derive(Serialize)]
struct ParagraphRow<'a> {
    paragraph: usize,
    sentence: usize,
    query_id: &'a str,
    #[serde(flatten)]
    result: &'a SelectionResult,
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => stdout.write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn json_line<T: Serialize>(buf: &mut String, value: &T) {
    buf.push_str(&serde_json::to_string(value).expect("plain data serializes"));
    buf.push('\n');
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}

fn execute(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Distances { tree } => {
            let t = parse_tree(&tree)?;
            let d = distance_vector(&t);
            let line: Vec<String> = d.values().iter().map(u32::to_string).collect();
            writeln!(stdout, "{}", line.join(" "))?;
        }
        Command::BuildIndex { corpus, out } => {
            let c = ingest(&corpus)?;
            let projector = fit_or_warn(&c);
            let idx = Index::new(c, projector);
            idx.save(&out)?;
            let mut buf = String::new();
            json_line(&mut buf, &summary(&idx));
            stdout.write_all(buf.as_bytes())?;
        }
        Command::Inspect { source } => {
            let idx = source.load()?;
            let mut buf = String::new();
            json_line(&mut buf, &summary(&idx));
            stdout.write_all(buf.as_bytes())?;
        }
        Command::Select {
            source,
            opts,
            queries,
        } => {
            let queries = read_queries(&queries)?;
            let reprs = to_reprs(&queries)?;
            let idx = source.load()?;
            let mut buf = String::new();
            for (q, r) in queries.iter().zip(&reprs) {
                let result = select_sentence_top_k(&idx.corpus, r, opts.mode.into(), opts.top_k)
                    .with_context(|| format!("query `{}`", q.id))?;
                json_line(
                    &mut buf,
                    &QueryRow {
                        query_id: &q.id,
                        result: &result,
                    },
                );
            }
            emit(opts.out.as_deref(), stdout, &buf)?;
        }
        Command::SelectParagraph {
            source,
            opts,
            weights,
            paragraphs,
        } => {
            let paragraphs = read_paragraphs(&paragraphs)?;
            let reprs: Vec<Vec<SentenceRepr>> =
                paragraphs.iter().map(|p| to_reprs(p)).collect::<Result<_>>()?;
            let idx = source.load()?;
            let projector = need_projector(&idx)?;
            let cfg = SelectionConfig {
                mode: opts.mode.into(),
                lsw: weights.lsw,
                normalize_d: !weights.no_normalize_d,
                top_k: opts.top_k,
            };
            let mut buf = String::new();
            for (pi, (para, rs)) in paragraphs.iter().zip(&reprs).enumerate() {
                let results = select_paragraph(&idx.corpus, rs, &cfg, projector)
                    .with_context(|| format!("paragraph {pi}"))?;
                for (si, (q, r)) in para.iter().zip(&results).enumerate() {
                    json_line(
                        &mut buf,
                        &ParagraphRow {
                            paragraph: pi,
                            sentence: si,
                            query_id: &q.id,
                            result: r,
                        },
                    );
                }
            }
            emit(opts.out.as_deref(), stdout, &buf)?;
        }
        Command::Sweep {
            source,
            opts,
            grid,
            no_normalize_d,
            format,
            paragraphs,
        } => {
            let paragraphs = read_paragraphs(&paragraphs)?;
            let reprs: Vec<Vec<SentenceRepr>> =
                paragraphs.iter().map(|p| to_reprs(p)).collect::<Result<_>>()?;
            let idx = source.load()?;
            let projector = need_projector(&idx)?;
            let template = SelectionConfig {
                mode: opts.mode.into(),
                lsw: DEFAULT_LSW,
                normalize_d: !no_normalize_d,
                top_k: 0,
            };
            let grid = grid.map_or_else(default_grid, |g| g.0);
            let points = sweep(&idx.corpus, &reprs, &template, projector, &grid)?;
            let drop = max_drop(&points);
            if let Some(m) = drop {
                writeln!(
                    stderr,
                    "max acoustic drop {:.6} between lsw {} and {}",
                    m.drop, m.from_lsw, m.to_lsw
                )?;
            }
            let text = match format {
                Format::Csv => to_csv(&points),
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&serde_json::json!({
                        "points": points,
                        "max_drop": drop,
                    }))?;
                    s.push('\n');
                    s
                }
            };
            emit(opts.out.as_deref(), stdout, &text)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    version: u16,
    records: usize,
    d_cwe: usize,
    d_ac: usize,
    projector: Option<ProjectorSummary>,
}

#[derive(Serialize)]
struct ProjectorSummary {
    explained_variance: [f64; 2],
    diameter: f64,
}

fn summary(idx: &Index) -> Summary {
    Summary {
        version: INDEX_VERSION,
        records: idx.corpus.len(),
        d_cwe: idx.corpus.d_cwe(),
        d_ac: idx.corpus.d_ac(),
        projector: idx.projector.as_ref().map(|p| ProjectorSummary {
            explained_variance: p.explained_variance(),
            diameter: p.diameter(),
        }),
    }
}
