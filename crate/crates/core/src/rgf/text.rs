//! Prefix s-expression text format.
//!
//! `(add x0 1.5)`, `(sin (mul x1 x1))`; leaves are `x<index>` or a finite
//! decimal constant. Batch files start with `rgf-v1 d=<dim>` followed by one tree
//! per line.

use std::fmt;

use super::{BinaryOp, ExprTree, Node, UnaryOp};
use crate::error::{Error, Result};

pub const BATCH_HEADER: &str = "rgf-v1";

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Var(i) => write!(f, "x{i}"),
            // `{}` on f64 prints the shortest representation that parses back exactly.
            Node::Const(c) => write!(f, "{c}"),
            Node::Unary(op, a) => write!(f, "({} {a})", op.name()),
            Node::Binary(op, a, b) => write!(f, "({} {a} {b})", op.name()),
        }
    }
}

pub fn serialize_tree(tree: &ExprTree) -> String {
    tree.to_string()
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Token<'_>)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push((i, Token::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Token::Close));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b'(' | b')') && !bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                out.push((start, Token::Atom(&text[start..i])));
            }
        }
    }
    out
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
    end: usize,
}

fn err(position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position,
        message: message.into(),
    }
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<(usize, Token<'a>)> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| err(self.end, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn node(&mut self) -> Result<Node> {
        let (at, tok) = self.next()?;
        match tok {
            Token::Close => Err(err(at, "unexpected ')'")),
            Token::Atom(a) => leaf(at, a),
            Token::Open => {
                let (op_at, op_tok) = self.next()?;
                let name = match op_tok {
                    Token::Atom(a) => a,
                    _ => return Err(err(op_at, "expected operator name")),
                };
                let node = if let Some(op) = UnaryOp::ALL.iter().find(|o| o.name() == name) {
                    Node::Unary(*op, Box::new(self.node()?))
                } else if let Some(op) = BinaryOp::ALL.iter().find(|o| o.name() == name) {
                    let a = self.node()?;
                    let b = self.node()?;
                    Node::Binary(*op, Box::new(a), Box::new(b))
                } else {
                    return Err(err(op_at, format!("unknown operator '{name}'")));
                };
                match self.next()? {
                    (_, Token::Close) => Ok(node),
                    (p, _) => Err(err(p, "expected ')' (wrong operator arity)")),
                }
            }
        }
    }
}

fn leaf(at: usize, atom: &str) -> Result<Node> {
    if let Some(idx) = atom.strip_prefix('x') {
        return idx
            .parse::<usize>()
            .map(Node::Var)
            .map_err(|_| err(at, format!("bad coordinate '{atom}'")));
    }
    match atom.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Node::Const(v)),
        _ => Err(err(at, format!("bad operand '{atom}'"))),
    }
}

/// Parse one tree in `dimension` variables.
pub fn deserialize_tree(text: &str, dimension: usize) -> Result<ExprTree> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
        end: text.len(),
    };
    let root = p.node()?;
    if let Some((at, _)) = p.tokens.get(p.pos) {
        return Err(err(*at, "trailing input after expression"));
    }
    ExprTree::new(root, dimension).map_err(|e| err(0, e.to_string()))
}

pub fn write_batch(trees: &[ExprTree], dimension: usize) -> String {
    let mut out = format!("{BATCH_HEADER} d={dimension}\n");
    for t in trees {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

pub fn read_batch(text: &str) -> Result<(usize, Vec<ExprTree>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(0, "empty batch"))?;
    let dim = header
        .strip_prefix(BATCH_HEADER)
        .and_then(|rest| rest.trim().strip_prefix("d="))
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| err(0, format!("bad batch header '{header}'")))?;
    let mut offset = header.len() + 1;
    let mut trees = Vec::new();
    for line in lines {
        if !line.trim().is_empty() {
            let t = deserialize_tree(line, dim).map_err(|e| match e {
                Error::Parse { position, message } => err(offset + position, message),
                other => other,
            })?;
            trees.push(t);
        }
        offset += line.len() + 1;
    }
    Ok((dim, trees))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_round_trips() {
        for s in ["(add x0 1.5)", "(sin (mul x1 x1))", "x3", "-2.25", "(neg (div x0 1e-7))"] {
            let t = deserialize_tree(s, 4).unwrap();
            let again = deserialize_tree(&serialize_tree(&t), 4).unwrap();
            assert_eq!(t, again);
        }
        assert_eq!(serialize_tree(&deserialize_tree("(add x0 1.5)", 1).unwrap()), "(add x0 1.5)");
    }

    #[test]
    fn parse_errors_carry_positions() {
        let cases = [
            ("(add x0)", 7),
            ("(foo x0 x1)", 1),
            ("(add x0 x1) x2", 12),
            ("(add x0 x1", 10),
            ("(sin x0 x1)", 8),
            ("(add x0 nan)", 8),
            ("(add xq 1)", 5),
        ];
        for (text, pos) in cases {
            match deserialize_tree(text, 3) {
                Err(Error::Parse { position, .. }) => assert_eq!(position, pos, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(deserialize_tree("x5", 3).is_err());
    }

    #[test]
    fn batch_round_trip() {
        let trees: Vec<_> = ["(add x0 1.5)", "(cos x1)"]
            .iter()
            .map(|s| deserialize_tree(s, 2).unwrap())
            .collect();
        let text = write_batch(&trees, 2);
        assert!(text.starts_with("rgf-v1 d=2\n"));
        let (d, back) = read_batch(&text).unwrap();
        assert_eq!(d, 2);
        assert_eq!(back, trees);
        assert!(read_batch("rgf-v2 d=2\nx0\n").is_err());
    }
}
