//! Undirected edge sets and their text format (`i j` per line, sorted).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        let mut s = Self::new();
        for (i, j) in pairs {
            s.insert(i, j);
        }
        s
    }

    /// Inserts `{i, j}`; self-loops are ignored.
    pub fn insert(&mut self, i: usize, j: usize) {
        if i != j {
            self.edges.insert((i.min(j), i.max(j)));
        }
    }

    /// Inserts every edge among `vertices`.
    pub fn insert_clique(&mut self, vertices: &[usize]) {
        for (a, &i) in vertices.iter().enumerate() {
            for &j in &vertices[a + 1..] {
                self.insert(i, j);
            }
        }
    }

    pub fn extend(&mut self, other: &EdgeSet) {
        self.edges.extend(other.edges.iter().copied());
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn incident_to(&self, v: usize) -> bool {
        self.edges.iter().any(|&(i, j)| i == v || j == v)
    }

    /// Fraction of `self` present in `truth`; 1 when `self` is empty.
    pub fn precision(&self, truth: &EdgeSet) -> f64 {
        if self.is_empty() {
            return 1.0;
        }
        let hit = self.edges.intersection(&truth.edges).count();
        hit as f64 / self.len() as f64
    }

    /// Fraction of `truth` present in `self`; 1 when `truth` is empty.
    pub fn recall(&self, truth: &EdgeSet) -> f64 {
        truth.precision(self)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (i, j) in &self.edges {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut s = Self::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok()).ok_or(Error::Parse {
                    line: ln + 1,
                    msg: format!("expected two vertex indices, got {line:?}"),
                })
            };
            let mut it = line.split_whitespace();
            let i = parse(it.next())?;
            let j = parse(it.next())?;
            s.insert(i, j);
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clique_and_text_round_trip() {
        let mut e = EdgeSet::new();
        e.insert_clique(&[2, 0, 1]);
        e.insert(5, 3);
        assert_eq!(e.to_edge_list(), "0 1\n0 2\n1 2\n3 5\n");
        assert_eq!(EdgeSet::parse_edge_list(&e.to_edge_list()).unwrap(), e);
    }

    #[test]
    fn precision_recall() {
        let truth = EdgeSet::from_pairs([(0, 1), (1, 2)]);
        let est = EdgeSet::from_pairs([(0, 1), (2, 3)]);
        assert_eq!(est.precision(&truth), 0.5);
        assert_eq!(est.recall(&truth), 0.5);
        assert_eq!(EdgeSet::new().precision(&truth), 1.0);
        assert_eq!(EdgeSet::new().recall(&truth), 0.0);
    }

    #[test]
    fn bad_edge_line_is_reported() {
        let err = EdgeSet::parse_edge_list("0 1\n2 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
