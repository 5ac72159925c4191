//! Newick reading and writing.
//!
//! Newick is rooted; trees here are not. A root with two children is
//! suppressed by merging its two edges, internal node names are dropped, and
//! every branch except the root's must carry a positive length.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{Edge, VertexId, WeightedTree};

struct Node<S> {
    children: Vec<usize>,
    name: Option<String>,
    length: Option<S>,
    pos: usize,
}

struct Parser<'a, S> {
    text: &'a [u8],
    pos: usize,
    nodes: Vec<Node<S>>,
}

const DELIMITERS: &[u8] = b"(),:;[]'";

impl<'a, S: Scalar> Parser<'a, S> {
    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn skip_ws(&mut self) -> Result<()> {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => {
                    let start = self.pos;
                    while self.peek().is_some_and(|c| c != b']') {
                        self.pos += 1;
                    }
                    if self.peek().is_none() {
                        self.pos = start;
                        return self.error("unterminated comment");
                    }
                    self.pos += 1;
                }
                _ => return Ok(()),
            }
        }
    }

    fn label(&mut self) -> Result<Option<String>> {
        self.skip_ws()?;
        if self.peek() == Some(b'\'') {
            let start = self.pos;
            self.pos += 1;
            let mut out = Vec::new();
            loop {
                match self.peek() {
                    None => {
                        self.pos = start;
                        return self.error("unterminated quoted label");
                    }
                    Some(b'\'') if self.text.get(self.pos + 1) == Some(&b'\'') => {
                        out.push(b'\'');
                        self.pos += 2;
                    }
                    Some(b'\'') => {
                        self.pos += 1;
                        break;
                    }
                    Some(c) => {
                        out.push(c);
                        self.pos += 1;
                    }
                }
            }
            return String::from_utf8(out)
                .map(Some)
                .or_else(|_| self.error("label is not valid UTF-8"));
        }
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| !c.is_ascii_whitespace() && !DELIMITERS.contains(&c))
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        match std::str::from_utf8(&self.text[start..self.pos]) {
            Ok(s) => Ok(Some(s.to_string())),
            Err(_) => self.error("label is not valid UTF-8"),
        }
    }

    fn length(&mut self) -> Result<Option<S>> {
        self.skip_ws()?;
        if self.peek() != Some(b':') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_ws()?;
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| !c.is_ascii_whitespace() && !b"(),:;[".contains(&c))
        {
            self.pos += 1;
        }
        let token = std::str::from_utf8(&self.text[start..self.pos]).unwrap_or("");
        match S::parse_literal(token) {
            Some(v) => Ok(Some(v)),
            None => {
                self.pos = start;
                self.error(format!("invalid branch length `{token}`"))
            }
        }
    }

    fn subtree(&mut self) -> Result<usize> {
        self.skip_ws()?;
        let pos = self.pos;
        let mut children = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                children.push(self.subtree()?);
                self.skip_ws()?;
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    Some(c) => return self.error(format!("expected `,` or `)`, found `{}`", c as char)),
                    None => return self.error("unexpected end of input inside `(`"),
                }
            }
        }
        let name = self.label()?;
        let length = self.length()?;
        self.nodes.push(Node {
            children,
            name,
            length,
            pos,
        });
        Ok(self.nodes.len() - 1)
    }
}

/// Parses one Newick tree terminated by `;`.
pub fn parse_newick<S: Scalar>(text: &str) -> Result<WeightedTree<S>> {
    let mut p = Parser::<S> {
        text: text.as_bytes(),
        pos: 0,
        nodes: Vec::new(),
    };
    let root = p.subtree()?;
    p.skip_ws()?;
    if p.peek() != Some(b';') {
        return p.error("expected `;`");
    }
    p.pos += 1;
    p.skip_ws()?;
    if p.peek().is_some() {
        return p.error("trailing characters after `;`");
    }
    build(p.nodes, root)
}

fn build<S: Scalar>(nodes: Vec<Node<S>>, root: usize) -> Result<WeightedTree<S>> {
    if nodes[root].length.is_some() {
        return Err(Error::BranchLength("the root branch must not carry a length".into()));
    }
    let mut labels = Vec::new();
    let mut leaf_count = 0;
    for (id, node) in nodes.iter().enumerate() {
        if node.children.is_empty() {
            leaf_count += 1;
            match &node.name {
                Some(name) if !name.is_empty() => labels.push((id, name.clone())),
                _ => {
                    return Err(Error::Syntax {
                        pos: node.pos,
                        msg: "leaf without a label".into(),
                    })
                }
            }
        }
        if id != root {
            match &node.length {
                None => {
                    return Err(Error::BranchLength(format!(
                        "missing branch length at byte {}",
                        node.pos
                    )))
                }
                Some(w) if *w <= S::zero() => {
                    return Err(Error::BranchLength(format!(
                        "non-positive branch length {} at byte {}",
                        w.format_literal(),
                        node.pos
                    )))
                }
                _ => {}
            }
            if node.children.len() == 1 {
                return Err(Error::InvalidTree(format!(
                    "node at byte {} has a single child (degree 2)",
                    node.pos
                )));
            }
        }
    }
    {
        let mut sorted: Vec<&String> = labels.iter().map(|(_, l)| l).collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateLabel(w[0].clone()));
        }
    }
    if leaf_count < 3 {
        return Err(Error::InvalidTree(format!(
            "need at least 3 leaves, got {leaf_count}"
        )));
    }
    let root_children = &nodes[root].children;
    if root_children.len() == 1 {
        return Err(Error::InvalidTree("root has a single child".into()));
    }
    let suppress_root = root_children.len() == 2;

    let mut edges = Vec::new();
    for (id, node) in nodes.iter().enumerate() {
        for &c in &node.children {
            if id == root && suppress_root {
                continue;
            }
            edges.push(Edge {
                a: id,
                b: c,
                weight: nodes[c].length.clone().expect("checked above"),
            });
        }
    }
    // compact vertex ids (the suppressed root disappears)
    let keep: Vec<bool> = (0..nodes.len()).map(|v| !(suppress_root && v == root)).collect();
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut next = 0;
    for v in 0..nodes.len() {
        if keep[v] {
            remap[v] = next;
            next += 1;
        }
    }
    let mut edges: Vec<Edge<S>> = edges
        .into_iter()
        .map(|e| Edge {
            a: remap[e.a],
            b: remap[e.b],
            weight: e.weight,
        })
        .collect();
    if suppress_root {
        let (x, y) = (root_children[0], root_children[1]);
        let merged = nodes[x].length.clone().unwrap() + nodes[y].length.clone().unwrap();
        edges.push(Edge {
            a: remap[x],
            b: remap[y],
            weight: merged,
        });
    }
    let labels: Vec<(VertexId, String)> = labels.into_iter().map(|(v, l)| (remap[v], l)).collect();
    WeightedTree::new(next, edges, labels)
}

fn quote_label(label: &str) -> String {
    let plain = label
        .bytes()
        .all(|c| !c.is_ascii_whitespace() && !DELIMITERS.contains(&c));
    if plain {
        label.to_string()
    } else {
        format!("'{}'", label.replace('\'', "''"))
    }
}

/// Canonical Newick text: rooted at the internal vertex next to the smallest
/// label, children ordered by their smallest leaf label.
pub fn write_newick<S: Scalar>(tree: &WeightedTree<S>) -> String {
    fn min_leaf<S: Scalar>(t: &WeightedTree<S>, v: VertexId, from: VertexId, memo: &mut [usize]) -> usize {
        let mut best = t.leaf_of_vertex(v).unwrap_or(usize::MAX);
        for &(w, _) in t.neighbors(v) {
            if w != from {
                best = best.min(min_leaf(t, w, v, memo));
            }
        }
        memo[v] = best;
        best
    }
    fn emit<S: Scalar>(t: &WeightedTree<S>, v: VertexId, from: VertexId, memo: &[usize], out: &mut String) {
        if let Some(l) = t.leaf_of_vertex(v) {
            out.push_str(&quote_label(&t.labels()[l]));
            return;
        }
        let mut kids: Vec<(usize, VertexId, usize)> = t
            .neighbors(v)
            .iter()
            .filter(|&&(w, _)| w != from)
            .map(|&(w, e)| (memo[w], w, e))
            .collect();
        kids.sort_unstable();
        out.push('(');
        for (i, &(_, w, e)) in kids.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            emit(t, w, v, memo, out);
            out.push(':');
            out.push_str(&t.edge(e).weight.format_literal());
        }
        out.push(')');
    }
    let root = tree.root();
    let mut memo = vec![usize::MAX; tree.vertex_count()];
    min_leaf(tree, root, usize::MAX, &mut memo);
    let mut out = String::new();
    emit(tree, root, usize::MAX, &memo, &mut out);
    out.push(';');
    out
}
