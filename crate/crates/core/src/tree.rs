//! Multiscale interval trees of regular sets, their powers, and hit/miss pruning of triples.

use std::fmt::Write as _;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::sets::IntervalCover;

/// Rooted tree with all leaves at height `depth`; vertex 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    pub height: Vec<u32>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub depth: u32,
}

impl Tree {
    /// Builds from a parent list where every parent precedes its children.
    pub fn from_parents(parent: Vec<Option<usize>>) -> Result<Tree> {
        if parent.first() != Some(&None) {
            return input("vertex 0 must be the root");
        }
        let mut height = vec![0u32; parent.len()];
        let mut children = vec![Vec::new(); parent.len()];
        for (v, p) in parent.iter().enumerate().skip(1) {
            let Some(p) = *p else { return input(format!("vertex {v} has no parent")) };
            if p >= v {
                return input(format!("parent of vertex {v} does not precede it"));
            }
            height[v] = height[p] + 1;
            children[p].push(v);
        }
        let depth = height.iter().copied().max().unwrap_or(0);
        Ok(Tree { height, parent, children, depth })
    }

    /// Perfect b-ary tree of height h.
    pub fn perfect(b: usize, h: u32) -> Tree {
        let mut parent = vec![None];
        let mut level = vec![0usize];
        for _ in 0..h {
            let mut next = Vec::with_capacity(level.len() * b);
            for &v in &level {
                for _ in 0..b {
                    parent.push(Some(v));
                    next.push(parent.len() - 1);
                }
            }
            level = next;
        }
        Tree::from_parents(parent).expect("perfect tree is well formed")
    }

    /// A single chain of height h.
    pub fn path(h: u32) -> Tree {
        let parent = (0..=h as usize).map(|v| if v == 0 { None } else { Some(v - 1) }).collect();
        Tree::from_parents(parent).expect("path is well formed")
    }

    pub fn len(&self) -> usize {
        self.height.len()
    }

    pub fn is_empty(&self) -> bool {
        self.height.is_empty()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.height[v] == self.depth
    }

    /// |𝓛(T_v)| for every vertex.
    pub fn leaf_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.len()];
        for v in (0..self.len()).rev() {
            if self.is_leaf(v) {
                counts[v] = 1;
            }
            if let Some(p) = self.parent[v] {
                counts[p] += counts[v];
            }
        }
        counts
    }

    pub fn leaf_count(&self) -> u64 {
        self.height.iter().filter(|&&h| h == self.depth).count() as u64
    }

    /// Keeps the vertices flagged in `keep` (must contain the root and be closed under parents).
    pub fn subtree(&self, keep: &[bool]) -> Result<Tree> {
        if keep.len() != self.len() || !keep[0] {
            return input("subtree mask must cover every vertex and keep the root");
        }
        let mut index = vec![usize::MAX; self.len()];
        let mut parent = Vec::new();
        for v in 0..self.len() {
            if !keep[v] {
                continue;
            }
            let p = match self.parent[v] {
                None => None,
                Some(p) if keep[p] => Some(index[p]),
                Some(_) => return input(format!("vertex {v} is kept but its parent is not")),
            };
            index[v] = parent.len();
            parent.push(p);
        }
        let mut t = Tree::from_parents(parent)?;
        t.depth = self.depth;
        Ok(t)
    }
}

/// Checks C⁻¹B^{N−h(v)} ≤ |𝓛(T_v)| ≤ C·B^{N−h(v)} for all v; returns the flag and the worst ratio.
pub fn tree_regularity(t: &Tree, b: f64, c: f64) -> (bool, f64) {
    let counts = t.leaf_counts();
    let mut worst = 1.0f64;
    for v in 0..t.len() {
        let expected = b.powi((t.depth - t.height[v]) as i32);
        let r = counts[v] as f64 / expected;
        let r = if r > 0.0 { r.max(1.0 / r) } else { f64::INFINITY };
        worst = worst.max(r);
    }
    (worst <= c * (1.0 + 1e-12), worst)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundPrecondition {
    NotRegular { worst_ratio_bits: u64 },
    NotPruned { vertex: usize },
}

impl std::fmt::Display for BoundPrecondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundPrecondition::NotRegular { worst_ratio_bits } => {
                write!(f, "tree is not regular at the given constants (worst ratio {})", f64::from_bits(*worst_ratio_bits))
            }
            BoundPrecondition::NotPruned { vertex } => write!(f, "vertex {vertex} keeps all of its children"),
        }
    }
}

/// Returns (|𝓛(T′)|, (1 − C⁻²B⁻¹)^N |𝓛(T)|) for the subtree T′ given by `keep`, provided T is
/// (B, C)-regular and every kept non-leaf vertex lost at least one child.
pub fn pruned_leaf_bound(t: &Tree, keep: &[bool], b: f64, c: f64) -> std::result::Result<(f64, f64), BoundPrecondition> {
    let (regular, worst) = tree_regularity(t, b, c);
    if !regular {
        return Err(BoundPrecondition::NotRegular { worst_ratio_bits: worst.to_bits() });
    }
    for v in 0..t.len() {
        if keep[v] && !t.is_leaf(v) && t.children[v].iter().all(|&w| keep[w]) {
            return Err(BoundPrecondition::NotPruned { vertex: v });
        }
    }
    let lhs = (0..t.len()).filter(|&v| keep[v] && t.is_leaf(v)).count() as f64;
    let rhs = (1.0 - 1.0 / (c * c * b)).powi(t.depth as i32) * t.leaf_count() as f64;
    Ok((lhs, rhs))
}

/// Lazy view of the j-th power: vertices are j-tuples of same-height vertices.
pub struct PowerTree<'a> {
    pub base: &'a Tree,
    pub j: usize,
}

pub fn tree_power(t: &Tree, j: usize) -> Result<PowerTree<'_>> {
    if j < 1 {
        return input("tree power must be at least 1");
    }
    Ok(PowerTree { base: t, j })
}

impl PowerTree<'_> {
    pub fn root(&self) -> Vec<usize> {
        vec![0; self.j]
    }

    pub fn parent(&self, v: &[usize]) -> Option<Vec<usize>> {
        v.iter().map(|&x| self.base.parent[x]).collect()
    }

    pub fn children(&self, v: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::with_capacity(self.j)];
        for &x in v {
            let mut next = Vec::new();
            for prefix in &out {
                for &c in &self.base.children[x] {
                    let mut p = prefix.clone();
                    p.push(c);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    pub fn leaf_count(&self) -> u128 {
        (self.base.leaf_count() as u128).pow(self.j as u32)
    }

    /// Materializes breadth first; fails beyond `budget` vertices.
    pub fn materialize(&self, budget: usize) -> Result<Tree> {
        let mut parent = vec![None];
        let mut frontier = vec![(self.root(), 0usize)];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (v, idx) in &frontier {
                for c in self.children(v) {
                    parent.push(Some(*idx));
                    if parent.len() > budget {
                        return Err(Error::Resource(format!("power tree exceeds {budget} vertices")));
                    }
                    next.push((c, parent.len() - 1));
                }
            }
            frontier = next;
        }
        let mut t = Tree::from_parents(parent)?;
        t.depth = self.base.depth;
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeWarning {
    pub level: u32,
    pub lo: f64,
    pub hi: f64,
    pub cells: u64,
}

/// Discretization tree of a set at scales M^{−j}, j = 0..=N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiscaleTree {
    pub m: u32,
    pub n: u32,
    /// Intervals [lo, hi) per vertex, indexed like `tree`.
    pub intervals: Vec<(f64, f64)>,
    /// Grid cell range [first, last] at the vertex height.
    pub cells: Vec<(u64, u64)>,
    /// Vertex indices per height.
    pub levels: Vec<Vec<usize>>,
    pub tree: Tree,
    pub warnings: Vec<MergeWarning>,
}

const CELL_SNAP: f64 = 1e-9;

/// Marks grid cells [iM^{−j}, (i+1)M^{−j}) meeting the closed intervals of X, merges runs of
/// consecutive marked cells, and links each run to the run containing it one level up.
/// Runs longer than `c1` cells produce warnings.
pub fn discretize(x: &IntervalCover, m: u32, n: u32, c1: Option<f64>) -> Result<MultiscaleTree> {
    if m < 2 {
        return input(format!("tree base M must be at least 2, got {m}"));
    }
    if x.is_empty() {
        return input("cannot discretize an empty set");
    }
    if (m as f64).powi(n as i32) * f64::EPSILON >= 1.0 || (n as f64) * (m as f64).log2() > 62.0 {
        return Err(Error::Size(format!("M^N = {m}^{n} is beyond double precision")));
    }
    if x.min().unwrap() < -1e-12 || x.max().unwrap() > 1.0 + 1e-12 {
        return input("set must lie in [0, 1]");
    }
    let mut intervals = vec![(0.0, 1.0)];
    let mut cells = vec![(0u64, 0u64)];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut levels = vec![vec![0usize]];
    let mut warnings = Vec::new();
    for j in 1..=n {
        let count = (m as u64).pow(j);
        let w = (count as f64).recip();
        let mut runs: Vec<(u64, u64)> = Vec::new();
        for &(lo, hi) in &x.intervals {
            let k0 = ((lo / w + CELL_SNAP).floor().max(0.0) as u64).min(count - 1);
            let k1 = ((hi / w + CELL_SNAP).floor().max(0.0) as u64).min(count - 1);
            match runs.last_mut() {
                Some(r) if k0 <= r.1 + 1 => r.1 = r.1.max(k1),
                _ => runs.push((k0, k1)),
            }
        }
        let prev = &levels[j as usize - 1];
        let mut level = Vec::with_capacity(runs.len());
        for (k0, k1) in runs {
            let (p0, p1) = (k0 / m as u64, k1 / m as u64);
            let pos = prev.partition_point(|&v| cells[v].1 < p0);
            let Some(&pv) = prev.get(pos) else {
                return Err(Error::Geometry(format!("level {j} run has no parent")));
            };
            if cells[pv].0 > p0 || cells[pv].1 < p1 {
                return Err(Error::Geometry(format!("level {j} run straddles two parents")));
            }
            let len = k1 - k0 + 1;
            if let Some(c1) = c1 {
                if len as f64 > c1 {
                    warnings.push(MergeWarning { level: j, lo: k0 as f64 * w, hi: (k1 + 1) as f64 * w, cells: len });
                }
            }
            intervals.push((k0 as f64 * w, (k1 + 1) as f64 * w));
            cells.push((k0, k1));
            parent.push(Some(pv));
            level.push(parent.len() - 1);
        }
        levels.push(level);
    }
    let mut tree = Tree::from_parents(parent)?;
    tree.depth = n;
    Ok(MultiscaleTree { m, n, intervals, cells, levels, tree, warnings })
}

impl MultiscaleTree {
    pub fn leaf_count(&self) -> u64 {
        self.levels[self.n as usize].len() as u64
    }

    /// One vertex per line: index height lo hi parent (−1 for the root).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# M={} N={}", self.m, self.n);
        for w in &self.warnings {
            let _ = writeln!(s, "# warn level={} lo={:.16e} hi={:.16e} cells={}", w.level, w.lo, w.hi, w.cells);
        }
        for v in 0..self.tree.len() {
            let p = self.tree.parent[v].map(|p| p as i64).unwrap_or(-1);
            let (lo, hi) = self.intervals[v];
            let _ = writeln!(s, "{v} {} {lo:.16e} {hi:.16e} {p}", self.tree.height[v]);
        }
        s
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<MultiscaleTree> {
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let (mut m, mut n) = (None, None);
        let mut warnings = Vec::new();
        let mut intervals = Vec::new();
        let mut parent = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let ln = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let kv: Vec<(&str, &str)> = rest.split_whitespace().filter_map(|t| t.split_once('=')).collect();
                let get = |k: &str| kv.iter().find(|p| p.0 == k).map(|p| p.1);
                if rest.trim_start().starts_with("warn") {
                    let f = |k: &str| get(k).ok_or_else(|| perr(ln, "incomplete warning"));
                    warnings.push(MergeWarning {
                        level: f("level")?.parse().map_err(|_| perr(ln, "bad level"))?,
                        lo: f("lo")?.parse().map_err(|_| perr(ln, "bad lo"))?,
                        hi: f("hi")?.parse().map_err(|_| perr(ln, "bad hi"))?,
                        cells: f("cells")?.parse().map_err(|_| perr(ln, "bad cells"))?,
                    });
                } else {
                    if let Some(v) = get("M") {
                        m = Some(v.parse::<u32>().map_err(|_| perr(ln, "bad M"))?);
                    }
                    if let Some(v) = get("N") {
                        n = Some(v.parse::<u32>().map_err(|_| perr(ln, "bad N"))?);
                    }
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(perr(ln, "expected: index height lo hi parent"));
            }
            let idx: usize = f[0].parse().map_err(|_| perr(ln, "bad index"))?;
            if idx != intervals.len() {
                return Err(perr(ln, "vertices must be listed in index order"));
            }
            let lo: f64 = f[2].parse().map_err(|_| perr(ln, "bad lo"))?;
            let hi: f64 = f[3].parse().map_err(|_| perr(ln, "bad hi"))?;
            let p: i64 = f[4].parse().map_err(|_| perr(ln, "bad parent"))?;
            intervals.push((lo, hi));
            parent.push(if p < 0 { None } else { Some(p as usize) });
        }
        let m = m.ok_or_else(|| perr(1, "missing M"))?;
        let n = n.ok_or_else(|| perr(1, "missing N"))?;
        let mut tree = Tree::from_parents(parent)?;
        tree.depth = n;
        let mut levels = vec![Vec::new(); n as usize + 1];
        let mut cells = Vec::with_capacity(intervals.len());
        for v in 0..tree.len() {
            let h = tree.height[v];
            if h > n {
                return Err(perr(v + 1, "vertex deeper than N"));
            }
            levels[h as usize].push(v);
            let count = (m as f64).powi(h as i32);
            let (lo, hi) = intervals[v];
            cells.push(((lo * count).round() as u64, ((hi * count).round() as u64).saturating_sub(1)));
        }
        Ok(MultiscaleTree { m, n, intervals, cells, levels, tree, warnings })
    }
}

/// A vertex of the third power of a multiscale tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleVertex {
    pub ids: [usize; 3],
    pub height: u32,
    pub parent: Option<usize>,
    pub hit: bool,
    /// All T³-children for hitting vertices below height N; missing children are stored unexpanded.
    pub children: Vec<usize>,
}

/// Hit-pruned part of T³ together with the first missing triples below it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleTree {
    pub n: u32,
    pub vertices: Vec<TripleVertex>,
}

pub const DEFAULT_TRIPLE_BUDGET: usize = 10_000_000;

/// Whether [lo₁ − hi₂ + lo₃, hi₁ − lo₂ + hi₃) meets the open α-neighborhood of X.
pub fn triple_hits(x: &IntervalCover, i1: (f64, f64), i2: (f64, f64), i3: (f64, f64), alpha: f64) -> bool {
    let p = i1.0 - i2.1 + i3.0;
    let q = i1.1 - i2.0 + i3.1;
    let k = x.intervals.partition_point(|iv| iv.1 + alpha <= p);
    k < x.intervals.len() && x.intervals[k].0 - alpha < q
}

/// Descends from the root triple, expanding only triples whose combination I₁ − I₂ + I₃ hits
/// the M^{−h}-neighborhood of X. The root is always kept.
pub fn prune_triples(t: &MultiscaleTree, x: &IntervalCover, budget: usize) -> Result<TripleTree> {
    let mut vertices = vec![TripleVertex { ids: [0, 0, 0], height: 0, parent: None, hit: true, children: Vec::new() }];
    let mut frontier = vec![0usize];
    for h in 1..=t.n {
        let alpha = (t.m as f64).powi(-(h as i32));
        let ch = &t.tree.children;
        let blocks: Vec<Vec<([usize; 3], bool)>> = frontier
            .par_iter()
            .map(|&pv| {
                let [a, b, c] = vertices[pv].ids;
                let mut out = Vec::with_capacity(ch[a].len() * ch[b].len() * ch[c].len());
                for &u in &ch[a] {
                    for &v in &ch[b] {
                        for &w in &ch[c] {
                            let hit = triple_hits(x, t.intervals[u], t.intervals[v], t.intervals[w], alpha);
                            out.push(([u, v, w], hit));
                        }
                    }
                }
                out
            })
            .collect();
        let total: usize = blocks.iter().map(|b| b.len()).sum();
        if vertices.len() + total > budget {
            return Err(Error::Resource(format!("triple tree exceeds {budget} vertices at height {h}")));
        }
        let mut next = Vec::new();
        for (&pv, block) in frontier.iter().zip(blocks) {
            for (ids, hit) in block {
                let idx = vertices.len();
                vertices.push(TripleVertex { ids, height: h, parent: Some(pv), hit, children: Vec::new() });
                vertices[pv].children.push(idx);
                if hit {
                    next.push(idx);
                }
            }
        }
        frontier = next;
    }
    Ok(TripleTree { n: t.n, vertices })
}

impl TripleTree {
    /// |𝓛(T′)|: hitting triples at height N.
    pub fn leaf_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.hit && v.height == self.n).count()
    }

    pub fn hitting(&self) -> usize {
        self.vertices.iter().filter(|v| v.hit).count()
    }

    /// Lines: index height i j k hit parent.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# N={}", self.n);
        for (idx, v) in self.vertices.iter().enumerate() {
            let p = v.parent.map(|p| p as i64).unwrap_or(-1);
            let _ = writeln!(s, "{idx} {} {} {} {} {} {p}", v.height, v.ids[0], v.ids[1], v.ids[2], v.hit as u8);
        }
        s
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<TripleTree> {
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let mut n = None;
        let mut vertices: Vec<TripleVertex> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let ln = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("N=") {
                    n = Some(v.parse::<u32>().map_err(|_| perr(ln, "bad N"))?);
                }
                continue;
            }
            let f: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(ln, "expected integers"))?;
            if f.len() != 7 || f[0] as usize != vertices.len() {
                return Err(perr(ln, "expected: index height i j k hit parent, in index order"));
            }
            let parent = if f[6] < 0 { None } else { Some(f[6] as usize) };
            if let Some(p) = parent {
                if p >= vertices.len() {
                    return Err(perr(ln, "parent must precede child"));
                }
                let idx = vertices.len();
                vertices[p].children.push(idx);
            }
            vertices.push(TripleVertex {
                ids: [f[2] as usize, f[3] as usize, f[4] as usize],
                height: f[1] as u32,
                parent,
                hit: f[5] != 0,
                children: Vec::new(),
            });
        }
        Ok(TripleTree { n: n.ok_or_else(|| perr(1, "missing N"))?, vertices })
    }
}

/// Fraction of retained non-leaf triples having at least one missing child, and the retained
/// non-leaf triples whose children all hit.
pub fn verify_miss_prop(tt: &TripleTree) -> (f64, Vec<usize>) {
    let mut internal = 0usize;
    let mut violating = Vec::new();
    for (i, v) in tt.vertices.iter().enumerate() {
        if !v.hit || v.height == tt.n {
            continue;
        }
        internal += 1;
        if v.children.iter().all(|&c| tt.vertices[c].hit) {
            violating.push(i);
        }
    }
    let frac = if internal == 0 { 0.0 } else { (internal - violating.len()) as f64 / internal as f64 };
    (frac, violating)
}

/// Pruned-leaf bound for the triple tree: T³ is (B³, C³)-regular when T is (B, C)-regular, so the
/// bound reads |𝓛(T′)| ≤ (1 − C⁻⁶B⁻³)^N |𝓛(T)|³.
pub fn pruned_triple_bound(
    t: &MultiscaleTree,
    tt: &TripleTree,
    b: f64,
    c: f64,
) -> std::result::Result<(f64, f64), BoundPrecondition> {
    let (regular, worst) = tree_regularity(&t.tree, b, c);
    if !regular {
        return Err(BoundPrecondition::NotRegular { worst_ratio_bits: worst.to_bits() });
    }
    let (_, violating) = verify_miss_prop(tt);
    if let Some(&v) = violating.first() {
        return Err(BoundPrecondition::NotPruned { vertex: v });
    }
    let (b3, c3) = (b.powi(3), c.powi(3));
    let rhs = (1.0 - 1.0 / (c3 * c3 * b3)).powi(t.n as i32) * (t.leaf_count() as f64).powi(3);
    Ok((tt.leaf_count() as f64, rhs))
}
