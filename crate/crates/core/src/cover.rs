//! Exact cover by dancing links.
//!
//! Rows are the constraints to be covered exactly once; columns are the
//! candidate sets. Branching always picks the uncovered row with the fewest
//! live columns (lowest row index on ties) and tries its columns in ascending
//! id, so node counts are reproducible.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::subspace::KMInstance;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoverError {
    #[error("column {0} has empty support")]
    EmptyColumn(u64),
    #[error("column {id} mentions row {row}, but there are only {rows} rows")]
    RowOutOfRange { id: u64, row: usize, rows: usize },
    #[error("column {0} repeats a row")]
    RepeatedRow(u64),
    #[error("column {0} appears twice with the same support")]
    DuplicateColumn(u64),
    #[error("{0} ids given for {1} columns")]
    IdCountMismatch(usize, usize),
    #[error("only right-hand side 1 is supported, got {0}")]
    UnsupportedRhs(String),
    #[error("malformed cover file at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverInstance {
    pub rows: usize,
    /// Supports, each a sorted list of row indices.
    pub columns: Vec<Vec<usize>>,
    pub column_ids: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMode {
    Count,
    First,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverOutcome {
    pub mode: CoverMode,
    pub count: u64,
    /// Column ids of each solution, ascending; empty in Count mode.
    pub solutions: Vec<Vec<u64>>,
    pub nodes_explored: u64,
    pub wall_ms: u64,
}

impl CoverInstance {
    pub fn new(rows: usize, mut columns: Vec<Vec<usize>>, column_ids: Vec<u64>) -> Result<Self, CoverError> {
        if columns.len() != column_ids.len() {
            return Err(CoverError::IdCountMismatch(column_ids.len(), columns.len()));
        }
        let mut seen = HashSet::new();
        for (support, &id) in columns.iter_mut().zip(&column_ids) {
            if support.is_empty() {
                return Err(CoverError::EmptyColumn(id));
            }
            support.sort_unstable();
            if let Some(&row) = support.iter().find(|&&r| r >= rows) {
                return Err(CoverError::RowOutOfRange { id, row, rows });
            }
            if support.windows(2).any(|w| w[0] == w[1]) {
                return Err(CoverError::RepeatedRow(id));
            }
            if !seen.insert((id, support.clone())) {
                return Err(CoverError::DuplicateColumn(id));
            }
        }
        Ok(CoverInstance { rows, columns, column_ids })
    }

    /// Columns renumbered 0.. in the given order.
    pub fn from_supports(rows: usize, columns: Vec<Vec<usize>>) -> Result<Self, CoverError> {
        let ids = (0..columns.len() as u64).collect();
        Self::new(rows, columns, ids)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("cover rows={} cols={}\n", self.rows, self.columns.len());
        for (id, support) in self.column_ids.iter().zip(&self.columns) {
            let _ = write!(s, "{id}:");
            for r in support {
                let _ = write!(s, " {r}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CoverError> {
        let bad = |line: usize, reason: &str| CoverError::Parse { line, reason: reason.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
        let mut words = header.split_whitespace();
        if words.next() != Some("cover") {
            return Err(bad(1, "header must start with \"cover\""));
        }
        let (mut rows, mut cols) = (None, None);
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| bad(1, "expected key=value"))?;
            match k {
                "rows" => rows = Some(v.parse::<usize>().map_err(|_| bad(1, "bad rows"))?),
                "cols" => cols = Some(v.parse::<usize>().map_err(|_| bad(1, "bad cols"))?),
                "lambda" | "rhs" if v != "1" => return Err(CoverError::UnsupportedRhs(v.to_string())),
                _ => {}
            }
        }
        let rows = rows.ok_or_else(|| bad(1, "missing rows"))?;
        let cols = cols.ok_or_else(|| bad(1, "missing cols"))?;
        let mut columns = Vec::with_capacity(cols);
        let mut ids = Vec::with_capacity(cols);
        for (n, line) in lines {
            let (id, rest) = line.split_once(':').ok_or_else(|| bad(n + 1, "expected \"id: rows\""))?;
            ids.push(id.trim().parse::<u64>().map_err(|_| bad(n + 1, "bad column id"))?);
            let support: Result<Vec<usize>, _> = rest.split_whitespace().map(str::parse).collect();
            columns.push(support.map_err(|_| bad(n + 1, "bad row index"))?);
        }
        if columns.len() != cols {
            return Err(bad(0, &format!("header says {cols} columns, found {}", columns.len())));
        }
        Self::new(rows, columns, ids)
    }

    /// True iff the chosen columns (by position) partition the rows.
    pub fn is_exact_cover(&self, chosen: &[usize]) -> bool {
        let mut hit = vec![false; self.rows];
        for &j in chosen {
            for &r in &self.columns[j] {
                if std::mem::replace(&mut hit[r], true) {
                    return false;
                }
            }
        }
        hit.into_iter().all(|h| h)
    }
}

/// Compatible KM columns as cover columns: support = rows with entry 1, id = orbit index.
pub fn from_km(inst: &KMInstance) -> CoverInstance {
    let mut supports: Vec<Vec<usize>> = vec![Vec::new(); inst.cols()];
    for &(i, j, m) in &inst.entries {
        if m == 1 {
            supports[j].push(i);
        }
    }
    let columns = inst.compatible_cols.iter().map(|&j| std::mem::take(&mut supports[j])).collect();
    let ids = inst.compatible_cols.iter().map(|&j| j as u64).collect();
    CoverInstance::new(inst.rows(), columns, ids).expect("km columns are nonempty and in range")
}

/// Nodes 0..=rows are headers (0 is the root); the rest are column entries.
struct Links {
    l: Vec<usize>,
    r: Vec<usize>,
    u: Vec<usize>,
    d: Vec<usize>,
    top: Vec<usize>,
    len: Vec<usize>,
    option: Vec<usize>,
}

impl Links {
    fn new(inst: &CoverInstance) -> Self {
        let h = inst.rows + 1;
        let entries: usize = inst.columns.iter().map(Vec::len).sum();
        let n = h + entries;
        let mut x = Links {
            l: vec![0; n],
            r: vec![0; n],
            u: (0..n).collect(),
            d: (0..n).collect(),
            top: vec![0; n],
            len: vec![0; h],
            option: vec![usize::MAX; n],
        };
        for i in 0..h {
            x.l[i] = if i == 0 { h - 1 } else { i - 1 };
            x.r[i] = if i == h - 1 { 0 } else { i + 1 };
        }
        let mut order: Vec<usize> = (0..inst.columns.len()).collect();
        order.sort_by_key(|&j| inst.column_ids[j]);
        let mut next = h;
        for j in order {
            let first = next;
            let support = &inst.columns[j];
            for (t, &row) in support.iter().enumerate() {
                let node = next;
                next += 1;
                let item = row + 1;
                x.top[node] = item;
                x.option[node] = j;
                x.u[node] = x.u[item];
                x.d[node] = item;
                x.d[x.u[item]] = node;
                x.u[item] = node;
                x.len[item] += 1;
                x.l[node] = if t == 0 { first + support.len() - 1 } else { node - 1 };
                x.r[node] = if t + 1 == support.len() { first } else { node + 1 };
            }
        }
        x
    }

    fn cover(&mut self, c: usize) {
        let (l, r) = (self.l[c], self.r[c]);
        self.r[l] = r;
        self.l[r] = l;
        let mut i = self.d[c];
        while i != c {
            let mut j = self.r[i];
            while j != i {
                let (u, d) = (self.u[j], self.d[j]);
                self.d[u] = d;
                self.u[d] = u;
                self.len[self.top[j]] -= 1;
                j = self.r[j];
            }
            i = self.d[i];
        }
    }

    fn uncover(&mut self, c: usize) {
        let mut i = self.u[c];
        while i != c {
            let mut j = self.l[i];
            while j != i {
                self.len[self.top[j]] += 1;
                let (u, d) = (self.u[j], self.d[j]);
                self.d[u] = j;
                self.u[d] = j;
                j = self.l[j];
            }
            i = self.u[i];
        }
        let (l, r) = (self.l[c], self.r[c]);
        self.r[l] = c;
        self.l[r] = c;
    }

    /// Fewest live columns, lowest row on ties; None when every row is covered.
    fn choose(&self) -> Option<usize> {
        let mut best = None;
        let mut c = self.r[0];
        while c != 0 {
            if best.is_none_or(|b: usize| self.len[c] < self.len[b]) {
                best = Some(c);
            }
            c = self.r[c];
        }
        best
    }

    fn select(&mut self, node: usize) {
        let mut j = self.r[node];
        while j != node {
            self.cover(self.top[j]);
            j = self.r[j];
        }
    }

    fn deselect(&mut self, node: usize) {
        let mut j = self.l[node];
        while j != node {
            self.uncover(self.top[j]);
            j = self.l[j];
        }
    }
}

struct Run<'a> {
    inst: &'a CoverInstance,
    mode: CoverMode,
    count: u64,
    nodes: u64,
    stack: Vec<usize>,
    solutions: Vec<Vec<u64>>,
}

impl Run<'_> {
    /// Returns true when the search should stop.
    fn search(&mut self, x: &mut Links) -> bool {
        self.nodes += 1;
        let Some(c) = x.choose() else {
            self.count += 1;
            if self.mode != CoverMode::Count {
                let mut ids: Vec<u64> = self.stack.iter().map(|&j| self.inst.column_ids[j]).collect();
                ids.sort_unstable();
                self.solutions.push(ids);
            }
            return self.mode == CoverMode::First;
        };
        if x.len[c] == 0 {
            return false;
        }
        x.cover(c);
        let mut node = x.d[c];
        while node != c {
            self.stack.push(x.option[node]);
            x.select(node);
            let stop = self.search(x);
            x.deselect(node);
            self.stack.pop();
            if stop {
                x.uncover(c);
                return true;
            }
            node = x.d[node];
        }
        x.uncover(c);
        false
    }
}

pub fn solve(inst: &CoverInstance, mode: CoverMode) -> CoverOutcome {
    let start = Instant::now();
    let mut x = Links::new(inst);
    let mut run = Run { inst, mode, count: 0, nodes: 0, stack: Vec::new(), solutions: Vec::new() };
    run.search(&mut x);
    CoverOutcome {
        mode,
        count: run.count,
        solutions: run.solutions,
        nodes_explored: run.nodes,
        wall_ms: start.elapsed().as_millis() as u64,
    }
}

/// Same answer, solutions and node count as [`solve`], with the first-level branches run on the rayon pool.
pub fn solve_parallel(inst: &CoverInstance, mode: CoverMode) -> CoverOutcome {
    let start = Instant::now();
    let root = Links::new(inst);
    let Some(c) = root.choose().filter(|&c| root.len[c] > 0) else {
        return solve(inst, mode);
    };
    let mut branches = Vec::new();
    let mut node = root.d[c];
    while node != c {
        branches.push(node);
        node = root.d[node];
    }
    let results: Vec<Run> = branches
        .par_iter()
        .map(|&node| {
            let mut x = Links::new(inst);
            x.cover(c);
            x.select(node);
            let mut run = Run { inst, mode, count: 0, nodes: 0, stack: vec![x.option[node]], solutions: Vec::new() };
            run.search(&mut x);
            run
        })
        .collect();
    let mut out = CoverOutcome { mode, count: 0, solutions: Vec::new(), nodes_explored: 1, wall_ms: 0 };
    for run in results {
        out.count += run.count;
        out.nodes_explored += run.nodes;
        out.solutions.extend(run.solutions);
        if mode == CoverMode::First && out.count > 0 {
            break;
        }
    }
    out.wall_ms = start.elapsed().as_millis() as u64;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let n = 6;
        let inst = CoverInstance::from_supports(n, (0..n).map(|i| vec![i]).collect()).unwrap();
        let out = solve(&inst, CoverMode::All);
        assert_eq!(out.count, 1);
        assert_eq!(out.solutions, vec![(0..n as u64).collect::<Vec<_>>()]);
    }

    #[test]
    fn knuth_example() {
        // Knuth's seven-item example, items a..g = rows 0..6
        let cols = vec![vec![2, 4, 5], vec![0, 3, 6], vec![1, 2, 5], vec![0, 3], vec![1, 6], vec![3, 4, 6]];
        let inst = CoverInstance::from_supports(7, cols).unwrap();
        let out = solve(&inst, CoverMode::All);
        assert_eq!(out.solutions, vec![vec![0, 3, 4]]);
        assert!(inst.is_exact_cover(&[0, 3, 4]));
        let par = solve_parallel(&inst, CoverMode::All);
        assert_eq!((par.count, &par.solutions, par.nodes_explored), (out.count, &out.solutions, out.nodes_explored));
    }

    #[test]
    fn zero_rows_has_the_empty_solution() {
        let inst = CoverInstance::from_supports(0, vec![]).unwrap();
        assert_eq!(solve(&inst, CoverMode::Count).count, 1);
    }

    #[test]
    fn load_errors() {
        assert_eq!(CoverInstance::from_supports(3, vec![vec![]]).unwrap_err(), CoverError::EmptyColumn(0));
        assert!(matches!(CoverInstance::from_supports(3, vec![vec![3]]), Err(CoverError::RowOutOfRange { .. })));
        assert_eq!(CoverInstance::from_supports(3, vec![vec![1, 1]]).unwrap_err(), CoverError::RepeatedRow(0));
        assert_eq!(
            CoverInstance::new(3, vec![vec![1], vec![1]], vec![4, 4]).unwrap_err(),
            CoverError::DuplicateColumn(4)
        );
        assert!(matches!(CoverInstance::parse("cover rows=2 cols=1 lambda=2\n0: 1\n"), Err(CoverError::UnsupportedRhs(_))));
        assert!(matches!(CoverInstance::parse("cover rows=2 cols=2\n0: 1\n"), Err(CoverError::Parse { .. })));
    }

    #[test]
    fn text_round_trip() {
        let inst = CoverInstance::new(4, vec![vec![0, 1], vec![2, 3], vec![1, 2]], vec![10, 3, 7]).unwrap();
        assert_eq!(CoverInstance::parse(&inst.to_text()).unwrap(), inst);
        assert!(inst.to_text().starts_with("cover rows=4 cols=3\n10: 0 1\n"));
    }
}
