//! Bracketed (Penn-Treebank-style) constituency trees.
//!
//! Grammar accepted by [`parse_tree`]:
//!
//! ```text
//! tree  := "(" LABEL child+ ")"
//! child := tree | TOKEN
//! ```
//!
//! `(LABEL token)` is a leaf. A bare token that appears next to other
//! children becomes a leaf carrying its parent's label, so `(NP the dog)`
//! reads the same as `(NP (NP the) (NP dog))`.

use std::fmt;

use thiserror::Error;

/// A labeled constituency tree. Leaves carry the surface tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParseTree {
    Leaf { label: String, token: String },
    Node { label: String, children: Vec<ParseTree> },
}

/// Errors from [`parse_tree`]. Offsets count characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty input")]
    Empty,
    #[error("unbalanced brackets at offset {offset}")]
    Unbalanced { offset: usize },
    #[error("empty label at offset {offset}")]
    EmptyLabel { offset: usize },
    #[error("node with no children at offset {offset}")]
    NoChildren { offset: usize },
    #[error("expected '(' at offset {offset}")]
    ExpectedOpen { offset: usize },
    #[error("trailing input at offset {offset}")]
    Trailing { offset: usize },
}

impl ParseTree {
    pub fn leaf(label: impl Into<String>, token: impl Into<String>) -> Self {
        ParseTree::Leaf {
            label: label.into(),
            token: token.into(),
        }
    }

    /// Builds an internal node. Panics if `children` is empty, since such a
    /// node cannot be represented in bracketed form.
    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Self {
        assert!(!children.is_empty(), "internal node needs at least one child");
        ParseTree::Node {
            label: label.into(),
            children,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ParseTree::Leaf { label, .. } | ParseTree::Node { label, .. } => label,
        }
    }

    pub fn children(&self) -> &[ParseTree] {
        match self {
            ParseTree::Leaf { .. } => &[],
            ParseTree::Node { children, .. } => children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, ParseTree::Leaf { .. })
    }

    /// In-order leaf tokens.
    pub fn tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_tokens(&mut out);
        out
    }

    fn collect_tokens<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ParseTree::Leaf { token, .. } => out.push(token),
            ParseTree::Node { children, .. } => {
                for c in children {
                    c.collect_tokens(out);
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            ParseTree::Leaf { .. } => 1,
            ParseTree::Node { children, .. } => children.iter().map(ParseTree::leaf_count).sum(),
        }
    }

    /// Height with leaves at 0.
    pub fn height(&self) -> u32 {
        match self {
            ParseTree::Leaf { .. } => 0,
            ParseTree::Node { children, .. } => {
                1 + children.iter().map(ParseTree::height).max().unwrap_or(0)
            }
        }
    }

    /// Applies `f` to every label, keeping the shape.
    pub fn map_labels(&self, f: &mut impl FnMut(&str) -> String) -> ParseTree {
        match self {
            ParseTree::Leaf { label, token } => ParseTree::Leaf {
                label: f(label),
                token: token.clone(),
            },
            ParseTree::Node { label, children } => ParseTree::Node {
                label: f(label),
                children: children.iter().map(|c| c.map_labels(f)).collect(),
            },
        }
    }
}

/// Convenience wrapper around [`ParseTree::tokens`].
pub fn tokens(tree: &ParseTree) -> Vec<&str> {
    tree.tokens()
}

/// Renders the tree in single-line bracketed form.
pub fn serialize_tree(tree: &ParseTree) -> String {
    tree.to_string()
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseTree::Leaf { label, token } => write!(f, "({label} {token})"),
            ParseTree::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl std::str::FromStr for ParseTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_tree(s)
    }
}

#[derive(Debug, PartialEq)]
enum Lexeme<'a> {
    Open,
    Close,
    Atom(&'a str),
}

/// Splits input into brackets and whitespace-delimited atoms, tagging each
/// with its character offset.
fn lex(text: &str) -> Vec<(usize, Lexeme<'_>)> {
    let mut out = Vec::new();
    let mut atom_start: Option<(usize, usize)> = None;
    let mut chars = 0usize;
    for (byte, ch) in text.char_indices() {
        let boundary = ch == '(' || ch == ')' || ch.is_whitespace();
        if boundary {
            if let Some((b0, c0)) = atom_start.take() {
                out.push((c0, Lexeme::Atom(&text[b0..byte])));
            }
            match ch {
                '(' => out.push((chars, Lexeme::Open)),
                ')' => out.push((chars, Lexeme::Close)),
                _ => {}
            }
        } else if atom_start.is_none() {
            atom_start = Some((byte, chars));
        }
        chars += 1;
    }
    if let Some((b0, c0)) = atom_start {
        out.push((c0, Lexeme::Atom(&text[b0..])));
    }
    out.push((chars, Lexeme::Close)); // sentinel, never consumed as a real bracket
    out
}

/// A node under construction.
struct Frame {
    open_at: usize,
    label: String,
    children: Vec<Child>,
}

enum Child {
    Tree(ParseTree),
    Token(String),
}

impl Frame {
    fn finish(self) -> Result<ParseTree, TreeError> {
        let Frame {
            open_at,
            label,
            mut children,
        } = self;
        match children.len() {
            0 => Err(TreeError::NoChildren { offset: open_at }),
            1 => Ok(match children.pop() {
                Some(Child::Token(token)) => ParseTree::Leaf { label, token },
                Some(Child::Tree(t)) => ParseTree::Node {
                    label,
                    children: vec![t],
                },
                None => unreachable!(),
            }),
            _ => {
                let children = children
                    .into_iter()
                    .map(|c| match c {
                        Child::Tree(t) => t,
                        Child::Token(token) => ParseTree::Leaf {
                            label: label.clone(),
                            token,
                        },
                    })
                    .collect();
                Ok(ParseTree::Node { label, children })
            }
        }
    }
}

/// Parses a single bracketed tree.
pub fn parse_tree(text: &str) -> Result<ParseTree, TreeError> {
    let lexemes = lex(text);
    let (end_offset, _) = lexemes[lexemes.len() - 1];
    let body = &lexemes[..lexemes.len() - 1];
    if body.is_empty() {
        return Err(TreeError::Empty);
    }

    let mut stack: Vec<Frame> = Vec::new();
    let mut root: Option<ParseTree> = None;
    let mut i = 0;
    while i < body.len() {
        let (offset, ref lexeme) = body[i];
        if root.is_some() {
            return Err(match lexeme {
                Lexeme::Close => TreeError::Unbalanced { offset },
                _ => TreeError::Trailing { offset },
            });
        }
        match lexeme {
            Lexeme::Open => {
                let label = match body.get(i + 1) {
                    Some((_, Lexeme::Atom(l))) => {
                        i += 1;
                        (*l).to_owned()
                    }
                    _ => return Err(TreeError::EmptyLabel { offset }),
                };
                stack.push(Frame {
                    open_at: offset,
                    label,
                    children: Vec::new(),
                });
            }
            Lexeme::Close => {
                let frame = stack.pop().ok_or(TreeError::Unbalanced { offset })?;
                let tree = frame.finish()?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(Child::Tree(tree)),
                    None => root = Some(tree),
                }
            }
            Lexeme::Atom(tok) => match stack.last_mut() {
                Some(parent) => parent.children.push(Child::Token((*tok).to_owned())),
                None => return Err(TreeError::ExpectedOpen { offset }),
            },
        }
        i += 1;
    }
    root.ok_or(TreeError::Unbalanced { offset: end_offset })
}
