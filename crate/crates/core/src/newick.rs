//! Newick import and export for binary trees.
//!
//! The outermost Newick node becomes the progenitor of a planted tree.
//! Labels are accepted and discarded; branch lengths can be kept.

use thiserror::Error;

use crate::canonical::ShapeIds;
use crate::tree::{Tree, TreeBuilder, VertexId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NewickError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("node closing at byte {position} has {arity} children; only binary nodes are supported")]
    UnsupportedArity { position: usize, arity: usize },
    #[error("the empty tree has no Newick representation")]
    EmptyTree,
}

fn syntax(position: usize, message: impl Into<String>) -> NewickError {
    NewickError::Syntax {
        position,
        message: message.into(),
    }
}

/// Parses one Newick tree terminated by `;`.
pub fn parse_newick(text: &str) -> Result<Tree, NewickError> {
    parse_newick_with_lengths(text).map(|(t, _)| t)
}

/// Parses a tree and the optional length of every edge, indexed by the
/// child vertex of the edge. The root entry is always `None`.
pub fn parse_newick_with_lengths(text: &str) -> Result<(Tree, Vec<Option<f64>>), NewickError> {
    let bytes = text.as_bytes();
    let mut b = TreeBuilder::new();
    let mut lengths: Vec<Option<f64>> = vec![None];
    // Open internal nodes with the number of children seen so far and the
    // position of their opening parenthesis.
    let mut open: Vec<(VertexId, usize, usize)> = Vec::new();
    let mut pos = skip_ws(bytes, 0);
    let mut current: Option<VertexId> = None;
    let mut expect_node = true;

    loop {
        if pos >= bytes.len() {
            return Err(syntax(pos, "unexpected end of input, missing ';'"));
        }
        let ch = bytes[pos];
        if expect_node {
            let parent = open.last().map_or(b.root(), |o| o.0);
            if let Some(o) = open.last_mut() {
                o.1 += 1;
                if o.1 > 2 {
                    return Err(NewickError::UnsupportedArity {
                        position: pos,
                        arity: o.1,
                    });
                }
            } else if current.is_some() {
                return Err(syntax(pos, "more than one top-level node"));
            }
            let v = b.add_child(parent);
            lengths.push(None);
            if ch == b'(' {
                open.push((v, 0, pos));
                pos = skip_ws(bytes, pos + 1);
                continue;
            }
            pos = skip_label(bytes, pos)?;
            current = Some(v);
            expect_node = false;
            pos = parse_length(bytes, pos, &mut lengths[v.index()])?;
            continue;
        }
        match ch {
            b',' => {
                if open.is_empty() {
                    return Err(syntax(pos, "',' outside parentheses"));
                }
                expect_node = true;
                pos = skip_ws(bytes, pos + 1);
            }
            b')' => {
                let Some((v, arity, _)) = open.pop() else {
                    return Err(syntax(pos, "unbalanced ')'"));
                };
                if arity != 2 {
                    return Err(NewickError::UnsupportedArity { position: pos, arity });
                }
                pos = skip_label(bytes, pos + 1)?;
                pos = parse_length(bytes, pos, &mut lengths[v.index()])?;
                current = Some(v);
            }
            b';' => {
                if let Some(&(_, _, at)) = open.last() {
                    return Err(syntax(at, "unclosed '('"));
                }
                let rest = skip_ws(bytes, pos + 1);
                if rest != bytes.len() {
                    return Err(syntax(rest, "trailing input after ';'"));
                }
                let tree = b.finish().map_err(|e| syntax(pos, e.to_string()))?;
                return Ok((tree, lengths));
            }
            _ => return Err(syntax(pos, format!("unexpected character '{}'", ch as char))),
        }
    }
}

/// Skips whitespace and complete bracketed comments.
fn skip_ws(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if bytes.get(pos) != Some(&b'[') {
            return pos;
        }
        match bytes[pos..].iter().position(|&c| c == b']') {
            Some(end) => pos += end + 1,
            None => return pos,
        }
    }
}

/// Skips an optional label, quoted or bare.
fn skip_label(bytes: &[u8], pos: usize) -> Result<usize, NewickError> {
    let mut p = skip_ws(bytes, pos);
    if p < bytes.len() && bytes[p] == b'\'' {
        let start = p;
        p += 1;
        loop {
            match bytes.get(p) {
                None => return Err(syntax(start, "unterminated quoted label")),
                Some(b'\'') if bytes.get(p + 1) == Some(&b'\'') => p += 2,
                Some(b'\'') => {
                    p += 1;
                    break;
                }
                Some(_) => p += 1,
            }
        }
    } else {
        while p < bytes.len() && !b"(),:;[".contains(&bytes[p]) && !bytes[p].is_ascii_whitespace() {
            p += 1;
        }
    }
    skip_comment(bytes, skip_ws(bytes, p))
}

/// Skips a bracketed comment such as `[&R]`.
fn skip_comment(bytes: &[u8], pos: usize) -> Result<usize, NewickError> {
    if bytes.get(pos) != Some(&b'[') {
        return Ok(pos);
    }
    match bytes[pos..].iter().position(|&c| c == b']') {
        Some(end) => Ok(skip_ws(bytes, pos + end + 1)),
        None => Err(syntax(pos, "unterminated comment")),
    }
}

fn parse_length(bytes: &[u8], pos: usize, slot: &mut Option<f64>) -> Result<usize, NewickError> {
    if bytes.get(pos) != Some(&b':') {
        return Ok(pos);
    }
    let start = skip_ws(bytes, pos + 1);
    let mut end = start;
    while end < bytes.len() && !b"(),:;[".contains(&bytes[end]) && !bytes[end].is_ascii_whitespace() {
        end += 1;
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ASCII delimiters keep UTF-8 intact");
    let value: f64 = text
        .parse()
        .map_err(|_| syntax(start, format!("invalid branch length '{text}'")))?;
    *slot = Some(value);
    skip_comment(bytes, skip_ws(bytes, end))
}

/// Unlabeled Newick with `x` for leaves and children in canonical-code
/// order, so isomorphic trees produce identical text.
pub fn emit_newick(tree: &Tree) -> Result<String, NewickError> {
    let progenitor = tree.progenitor().ok_or(NewickError::EmptyTree)?;
    let mut out = String::with_capacity(tree.len() * 2 + 1);
    ShapeIds::new(tree).write(tree, progenitor, "x", &mut out);
    out.push(';');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_code;
    use crate::order::{branch_statistics, compute_orders};

    #[test]
    fn small_trees() {
        assert_eq!(canonical_code(&parse_newick("(x,x);").unwrap()).as_str(), "(L,L)");
        assert_eq!(canonical_code(&parse_newick("x;").unwrap()).as_str(), "L");
        let t = parse_newick("((x,x),x);").unwrap();
        let ot = compute_orders(&t);
        assert_eq!(ot.tree_order(), 2);
        assert_eq!(branch_statistics(&ot).n_side(1, 2), 1);
    }

    #[test]
    fn emission() {
        assert_eq!(emit_newick(&Tree::cherry()).unwrap(), "(x,x);");
        assert_eq!(emit_newick(&Tree::single_edge()).unwrap(), "x;");
        assert_eq!(emit_newick(&Tree::empty()), Err(NewickError::EmptyTree));
        let a = parse_newick("(x,(x,x));").unwrap();
        let b = parse_newick("((x,x),x);").unwrap();
        assert_eq!(emit_newick(&a).unwrap(), emit_newick(&b).unwrap());
        assert_eq!(emit_newick(&a).unwrap(), "((x,x),x);");
    }

    #[test]
    fn labels_lengths_and_comments() {
        let (t, l) = parse_newick_with_lengths("((A:1,'b c':2.5)n1:0.5,C:3e0)root:1;").unwrap();
        assert_eq!(t.leaf_count(), 3);
        let mut got: Vec<f64> = l.iter().flatten().copied().collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![0.5, 1.0, 1.0, 2.5, 3.0]);
        assert!(l[0].is_none());
        assert!(parse_newick("[&R] (a , b) ;").is_ok());
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(
            parse_newick("(x,x,x);"),
            Err(NewickError::UnsupportedArity { arity: 3, .. })
        ));
        assert!(matches!(
            parse_newick("((x),x);"),
            Err(NewickError::UnsupportedArity { arity: 1, .. })
        ));
        assert_eq!(
            parse_newick("(x,x)"),
            Err(NewickError::Syntax {
                position: 5,
                message: "unexpected end of input, missing ';'".into()
            })
        );
        assert!(matches!(
            parse_newick("(x,x));"),
            Err(NewickError::Syntax { position: 5, .. })
        ));
        assert!(matches!(
            parse_newick("(x:abc,x);"),
            Err(NewickError::Syntax { position: 3, .. })
        ));
        assert!(parse_newick("x; y").is_err());
        assert!(parse_newick("(x,x").is_err());
    }

    #[test]
    fn deep_caterpillars_do_not_overflow() {
        let depth = 5_000;
        let mut s = String::new();
        for _ in 0..depth {
            s.push_str("(x,");
        }
        s.push('x');
        for _ in 0..depth {
            s.push(')');
        }
        s.push(';');
        let t = parse_newick(&s).unwrap();
        assert_eq!(t.leaf_count(), depth + 1);
        let back = emit_newick(&t).unwrap();
        assert_eq!(back.len(), s.len());
    }
}
