//! Boundary strata of the compactified configuration space as laminar cluster trees.
//!
//! A tree on `{1..k}` is a laminar family of subsets (bitmasks here) containing the
//! root.  Plain trees use only subsets of size at least two; augmented trees may
//! also carry singleton leaves.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num::complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

pub const MAX_K: usize = 12;

pub type Mask = u32;

fn full(k: usize) -> Mask {
    if k == 32 {
        u32::MAX
    } else {
        (1u32 << k) - 1
    }
}

fn check_k(k: usize) -> Result<()> {
    if !(2..=MAX_K).contains(&k) {
        return Err(Error::Argument(format!("k = {k} outside 2..={MAX_K}")));
    }
    Ok(())
}

fn laminar(a: Mask, b: Mask) -> bool {
    a & b == 0 || a & b == a || a & b == b
}

/// A rooted laminar family.  Vertices are sorted by decreasing size, then by
/// their smallest element, so the root is vertex 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ClusterTree {
    pub k: usize,
    pub vertices: Vec<Mask>,
    /// Hasse relation: index of the smallest strictly containing vertex.
    pub parent: Vec<Option<usize>>,
}

impl ClusterTree {
    /// Builds a tree from its vertex sets. The root is added if missing.
    pub fn from_clusters(k: usize, clusters: &[Mask]) -> Result<Self> {
        if k == 0 || k > MAX_K {
            return Err(Error::Argument(format!("k = {k} outside 1..={MAX_K}")));
        }
        let root = full(k);
        let mut set: BTreeSet<Mask> = clusters.iter().copied().collect();
        set.insert(root);
        for &c in &set {
            if c == 0 || c & !root != 0 {
                return Err(Error::Argument(format!("cluster {c:#b} not a nonempty subset of 1..{k}")));
            }
        }
        let mut vertices: Vec<Mask> = set.into_iter().collect();
        for (i, &a) in vertices.iter().enumerate() {
            for &b in &vertices[i + 1..] {
                if !laminar(a, b) {
                    return Err(Error::Argument(format!("clusters {a:#b} and {b:#b} cross")));
                }
            }
        }
        vertices.sort_by_key(|&m| (std::cmp::Reverse(m.count_ones()), m.trailing_zeros(), m));
        let parent = vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                (0..i)
                    .rev()
                    .find(|&j| vertices[j] & v == v && vertices[j] != v)
            })
            .collect();
        Ok(Self { k, vertices, parent })
    }

    pub fn root_only(k: usize) -> Self {
        Self::from_clusters(k, &[]).expect("root-only tree is always laminar")
    }

    /// The root-only tree labels the open stratum.
    pub fn is_interior(&self) -> bool {
        self.vertices.len() == 1
    }

    /// Number of vertices, which is the codimension of the corner it labels.
    pub fn codimension(&self) -> usize {
        self.vertices.len()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&j| self.parent[j] == Some(i)).collect()
    }

    /// Length of the longest root-to-leaf path, counted in edges.
    pub fn height(&self) -> usize {
        let mut depth = vec![0usize; self.vertices.len()];
        for i in 1..self.vertices.len() {
            depth[i] = depth[self.parent[i].expect("non-root vertex has a parent")] + 1;
        }
        depth.into_iter().max().unwrap_or(0)
    }

    /// Vertices on the path from the root to vertex `i`, inclusive.
    pub fn path_to(&self, i: usize) -> Vec<usize> {
        let mut path = vec![i];
        let mut cur = i;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn index_of(&self, mask: Mask) -> Option<usize> {
        self.vertices.iter().position(|&v| v == mask)
    }

    /// True when `self` labels a stratum in the closure of `other`'s stratum.
    pub fn is_face_of(&self, other: &ClusterTree) -> bool {
        self.k == other.k && other.vertices.iter().all(|v| self.vertices.contains(v))
    }

    /// Nested-parentheses encoding.  A vertex prints as its child groups and
    /// loose points in order of smallest element, e.g. `((1 2) 3 4)`.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        self.encode_vertex(0, &mut out);
        out
    }

    fn encode_vertex(&self, i: usize, out: &mut String) {
        let children = self.children(i);
        let covered: Mask = children.iter().fold(0, |m, &c| m | self.vertices[c]);
        let mut items: Vec<(u32, Option<usize>)> = children
            .iter()
            .map(|&c| (self.vertices[c].trailing_zeros(), Some(c)))
            .collect();
        let loose = self.vertices[i] & !covered;
        for b in 0..self.k as u32 {
            if loose & (1 << b) != 0 {
                items.push((b, None));
            }
        }
        items.sort();
        out.push('(');
        for (n, (b, child)) in items.iter().enumerate() {
            if n > 0 {
                out.push(' ');
            }
            match child {
                Some(c) => self.encode_vertex(*c, out),
                None => out.push_str(&(b + 1).to_string()),
            }
        }
        out.push(')');
    }

    /// Inverse of [`ClusterTree::encode`].
    pub fn decode(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::Argument(format!("bad tree encoding `{s}`: {m}"));
        let mut stack: Vec<Mask> = Vec::new();
        let mut clusters = Vec::new();
        let mut num = String::new();
        let mut max_pt = 0u32;
        let flush = |num: &mut String, stack: &mut Vec<Mask>, max_pt: &mut u32| -> Result<()> {
            if num.is_empty() {
                return Ok(());
            }
            let p: u32 = num.parse().map_err(|_| bad("point label"))?;
            if p == 0 || p as usize > MAX_K {
                return Err(bad("point label out of range"));
            }
            *max_pt = (*max_pt).max(p);
            let top = stack.last_mut().ok_or_else(|| bad("point outside parentheses"))?;
            *top |= 1 << (p - 1);
            num.clear();
            Ok(())
        };
        for c in s.chars() {
            match c {
                '(' => {
                    flush(&mut num, &mut stack, &mut max_pt)?;
                    stack.push(0);
                }
                ')' => {
                    flush(&mut num, &mut stack, &mut max_pt)?;
                    let m = stack.pop().ok_or_else(|| bad("unbalanced"))?;
                    if m == 0 {
                        return Err(bad("empty group"));
                    }
                    if let Some(top) = stack.last_mut() {
                        if *top & m != 0 {
                            return Err(bad("repeated point"));
                        }
                        *top |= m;
                    }
                    clusters.push(m);
                }
                ' ' | ',' => flush(&mut num, &mut stack, &mut max_pt)?,
                d if d.is_ascii_digit() => num.push(d),
                _ => return Err(bad("unexpected character")),
            }
        }
        if !stack.is_empty() || !num.is_empty() || clusters.is_empty() {
            return Err(bad("unbalanced"));
        }
        let k = max_pt as usize;
        let root = *clusters.last().expect("nonempty");
        if root != full(k) {
            return Err(bad("root must contain every point"));
        }
        Self::from_clusters(k, &clusters)
    }
}

impl fmt::Display for ClusterTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

/// All trees rooted at `mask` whose non-root vertices have size at least `min_size`.
fn trees_on(mask: Mask, min_size: u32, memo: &mut HashMap<Mask, Vec<Vec<Mask>>>) -> Vec<Vec<Mask>> {
    if let Some(v) = memo.get(&mask) {
        return v.clone();
    }
    let mut out = Vec::new();
    // Choose the maximal proper children as a set of disjoint subsets, each
    // carrying its own subtree.  Children are picked in order of their lowest
    // element to avoid duplicates.
    fn pick(
        rest: Mask,
        parent: Mask,
        min_size: u32,
        acc: &mut Vec<Mask>,
        out: &mut Vec<Vec<Mask>>,
        memo: &mut HashMap<Mask, Vec<Vec<Mask>>>,
    ) {
        if rest == 0 {
            out.push(acc.clone());
            return;
        }
        let low = rest & rest.wrapping_neg();
        // Lowest remaining point is loose.
        pick(rest & !low, parent, min_size, acc, out, memo);
        // Or it starts a child C with low in C, C within rest, C != parent.
        let others = rest & !low;
        let mut sub = others;
        loop {
            let c = sub | low;
            if c != parent && c.count_ones() >= min_size {
                for t in trees_on(c, min_size, memo) {
                    let n = acc.len();
                    acc.extend(t);
                    pick(rest & !c, parent, min_size, acc, out, memo);
                    acc.truncate(n);
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
    }
    let mut acc = vec![mask];
    pick(mask, mask, min_size, &mut acc, &mut out, memo);
    memo.insert(mask, out.clone());
    out
}

fn sort_trees(mut trees: Vec<ClusterTree>) -> Vec<ClusterTree> {
    trees.sort_by_cached_key(|t| (t.codimension(), t.encode()));
    trees
}

/// Strata of the maximal face, one per tree, including the open stratum.
/// Output is sorted by codimension, then encoding.
pub fn enumerate_fmax_strata(k: usize) -> Result<Vec<ClusterTree>> {
    check_k(k)?;
    let mut memo = HashMap::new();
    let trees = trees_on(full(k), 2, &mut memo)
        .into_iter()
        .map(|c| ClusterTree::from_clusters(k, &c))
        .collect::<Result<Vec<_>>>()?;
    Ok(sort_trees(trees))
}

/// Augmented trees: as above, but singleton leaves are allowed as vertices.
pub fn enumerate_augmented_strata(k: usize) -> Result<Vec<ClusterTree>> {
    check_k(k)?;
    let mut memo = HashMap::new();
    let trees = trees_on(full(k), 1, &mut memo)
        .into_iter()
        .map(|c| ClusterTree::from_clusters(k, &c))
        .collect::<Result<Vec<_>>>()?;
    Ok(sort_trees(trees))
}

/// Strata of the maximal collision face: a tree together with a marked vertex
/// (the cluster the extra point has fallen into).
pub fn enumerate_cmax_pairs(k: usize) -> Result<Vec<(ClusterTree, usize)>> {
    Ok(enumerate_fmax_strata(k)?
        .into_iter()
        .flat_map(|t| (0..t.vertices.len()).map(move |i| (t.clone(), i)))
        .collect())
}

/// Number of trees without materializing them.
pub fn count_fmax_strata(k: usize) -> Result<u128> {
    check_k(k)?;
    fn count(mask: Mask, memo: &mut HashMap<Mask, u128>) -> u128 {
        if let Some(&v) = memo.get(&mask) {
            return v;
        }
        // forests[r] = number of ways to place disjoint subtrees inside r,
        // each of size >= 2 and different from `mask`.
        fn forests(rest: Mask, parent: Mask, memo: &mut HashMap<Mask, u128>, fm: &mut HashMap<Mask, u128>) -> u128 {
            if rest == 0 {
                return 1;
            }
            if let Some(&v) = fm.get(&rest) {
                return v;
            }
            let low = rest & rest.wrapping_neg();
            let others = rest & !low;
            let mut total = forests(others, parent, memo, fm);
            let mut sub = others;
            loop {
                let c = sub | low;
                if c != parent && c.count_ones() >= 2 {
                    total += count(c, memo) * forests(rest & !c, parent, memo, fm);
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & others;
            }
            fm.insert(rest, total);
            total
        }
        let mut fm = HashMap::new();
        let v = forests(mask, mask, memo, &mut fm);
        memo.insert(mask, v);
        v
    }
    Ok(count(full(k), &mut HashMap::new()))
}

/// Single-linkage clusters at threshold `eps`: points closer than `eps` are
/// joined, and blocks are the connected components.  Blocks are sorted and the
/// list is ordered by smallest member.
pub fn cluster_decomposition(points: &[Complex64], eps: f64) -> Result<Vec<Vec<usize>>> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Argument(format!("threshold {eps} must be positive")));
    }
    if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::Argument("non-finite point".into()));
    }
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        let mut c = i;
        while label[c] != r {
            let next = label[c];
            label[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() < eps {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let r = find(&mut label, i);
        let b = *index.entry(r).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(i);
    }
    Ok(blocks)
}

pub fn tree_height(tree: &ClusterTree) -> usize {
    tree.height()
}

pub fn mask_members(mask: Mask) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

pub fn mask_of(members: &[usize]) -> Mask {
    members.iter().fold(0, |m, &i| m | (1 << i))
}
