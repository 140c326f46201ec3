//! Fixed directed network on `n` nodes.
//!
//! Nodes are indexed `0..n`. Arcs are stored twice, as sorted out- and
//! in-neighbour lists, so degree and neighbourhood queries are O(1) and arc
//! lookups are a binary search.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{AlaamError, Result};

/// Labelling convention used by an edge-list file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexBase {
    #[default]
    Zero,
    One,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    arcs: usize,
}

impl DirectedGraph {
    /// Empty graph on `n` nodes.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            out: vec![Vec::new(); n],
            inn: vec![Vec::new(); n],
            arcs: 0,
        }
    }

    /// Builds a graph from ordered pairs. Duplicates collapse; self-loops and
    /// out-of-range indices are rejected.
    pub fn from_arcs<I>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (k, (i, j)) in arcs.into_iter().enumerate() {
            for idx in [i, j] {
                if idx >= n {
                    return Err(AlaamError::Bounds {
                        line: k + 1,
                        index: idx,
                        n,
                    });
                }
            }
            if i == j {
                return Err(AlaamError::SelfLoop {
                    line: k + 1,
                    node: i,
                });
            }
            set.insert((i, j));
        }
        Ok(Self::from_sorted_set(n, set))
    }

    fn from_sorted_set(n: usize, set: BTreeSet<(usize, usize)>) -> Self {
        let mut g = Self::empty(n);
        for &(i, j) in &set {
            g.out[i].push(j);
            g.inn[j].push(i);
        }
        for list in &mut g.inn {
            list.sort_unstable();
        }
        g.arcs = set.len();
        g
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs
    }

    /// `x_{i+}`
    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    /// `x_{+i}`
    pub fn in_degree(&self, i: usize) -> usize {
        self.inn[i].len()
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.inn[i]
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.out[i].binary_search(&j).is_ok()
    }

    /// All arcs in lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
    }

    /// Adds every reverse arc, turning the graph into the directed encoding
    /// of an undirected one.
    pub fn symmetrized(&self) -> Self {
        let set: BTreeSet<_> = self.arcs().flat_map(|(i, j)| [(i, j), (j, i)]).collect();
        Self::from_sorted_set(self.n, set)
    }

    /// True when every arc is reciprocated.
    pub fn is_symmetric(&self) -> bool {
        self.arcs().all(|(i, j)| self.has_arc(j, i))
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length must equal n");
        let set: BTreeSet<_> = self.arcs().map(|(i, j)| (perm[i], perm[j])).collect();
        Self::from_sorted_set(self.n, set)
    }

    /// Parses the edge-list text format: optional `n=<N>` header, then one
    /// arc per line as `i j` or `i,j`. Blank lines and `#` comments are
    /// ignored.
    pub fn parse_edge_list(text: &str, base: IndexBase) -> Result<Self> {
        parse_edge_list(text, base, Path::new("<input>"))
    }

    /// Serialises in the format read by [`load_graph`], always 0-based and
    /// with an explicit header.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("n={}\n", self.n);
        for (i, j) in self.arcs() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }
}

pub fn load_graph(path: impl AsRef<Path>, base: IndexBase) -> Result<DirectedGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text, base, path)
}

pub fn write_graph(graph: &DirectedGraph, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(graph.to_edge_list().as_bytes())?;
    Ok(())
}

fn parse_edge_list(text: &str, base: IndexBase, path: &Path) -> Result<DirectedGraph> {
    let parse_err = |line: usize, message: String| AlaamError::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };

    let mut declared_n: Option<usize> = None;
    let mut arcs: Vec<(usize, usize, usize)> = Vec::new();
    let mut seen_arc = false;

    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("n=").or_else(|| line.strip_prefix("n =")) {
            if seen_arc || declared_n.is_some() {
                return Err(parse_err(
                    lineno,
                    "node-count header must precede all arcs".into(),
                ));
            }
            let n = rest
                .trim()
                .parse::<usize>()
                .map_err(|e| parse_err(lineno, format!("bad node count {rest:?}: {e}")))?;
            declared_n = Some(n);
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(parse_err(
                lineno,
                format!("expected two node labels, got {line:?}"),
            ));
        }
        let mut ends = [0usize; 2];
        for (slot, field) in ends.iter_mut().zip(&fields) {
            let v = field
                .parse::<usize>()
                .map_err(|_| parse_err(lineno, format!("invalid node label {field:?}")))?;
            *slot = match base {
                IndexBase::Zero => v,
                IndexBase::One => v
                    .checked_sub(1)
                    .ok_or_else(|| parse_err(lineno, "label 0 in a 1-based edge list".into()))?,
            };
        }
        if ends[0] == ends[1] {
            return Err(AlaamError::SelfLoop {
                line: lineno,
                node: ends[0],
            });
        }
        seen_arc = true;
        arcs.push((ends[0], ends[1], lineno));
    }

    let n = match declared_n {
        Some(n) => n,
        None => arcs
            .iter()
            .map(|&(i, j, _)| i.max(j) + 1)
            .max()
            .unwrap_or(0),
    };

    let mut set = BTreeSet::new();
    let mut duplicates = 0usize;
    for (i, j, lineno) in arcs {
        for idx in [i, j] {
            if idx >= n {
                return Err(AlaamError::Bounds {
                    line: lineno,
                    index: idx,
                    n,
                });
            }
        }
        if !set.insert((i, j)) {
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        log::warn!(
            "{}: collapsed {duplicates} duplicate arc(s)",
            path.display()
        );
    }
    Ok(DirectedGraph::from_sorted_set(n, set))
}
