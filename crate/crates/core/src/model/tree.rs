//! Complete binary trees in heap layout.
//!
//! Nodes are addressed by 0-based index `i`; index `i` is heap node `i + 1`,
//! so the root is index 0 and the children of `i` are `2i + 1` and `2i + 2`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    levels: usize,
}

impl Tree {
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 || levels > 30 {
            return Err(param(format!("tree depth must be in 1..=30, got {levels}")));
        }
        Ok(Self { levels })
    }

    /// Tree whose node count is exactly `d`; `d` must be `2^L - 1`.
    pub fn from_dim(d: usize) -> Result<Self> {
        let levels = (d + 1).trailing_zeros() as usize;
        if d == 0 || (d + 1) != 1 << levels {
            return Err(param(format!("dimension {d} is not of the form 2^L - 1")));
        }
        Self::new(levels)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        (1 << self.levels) - 1
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        (i > 0).then(|| (i - 1) / 2)
    }

    pub fn children(&self, i: usize) -> Option<(usize, usize)> {
        let l = 2 * i + 1;
        (l + 1 < self.dim()).then_some((l, l + 1))
    }

    /// Depth of node `i`, with the root at depth 1.
    pub fn depth(&self, i: usize) -> usize {
        (usize::BITS - (i + 1).leading_zeros()) as usize
    }

    /// Number of nodes in the smallest rooted subtree containing `support`.
    pub fn closure_size(&self, support: impl IntoIterator<Item = usize>) -> usize {
        let mut mark = vec![false; self.dim()];
        let mut count = 0;
        for mut i in support {
            loop {
                if mark[i] {
                    break;
                }
                mark[i] = true;
                count += 1;
                match self.parent(i) {
                    Some(p) => i = p,
                    None => break,
                }
            }
        }
        count
    }

    /// True when `support` is itself a rooted subtree (closed under parents).
    pub fn is_rooted(&self, support: &[usize]) -> bool {
        if support.is_empty() {
            return true;
        }
        let mut mark = vec![false; self.dim()];
        for &i in support {
            mark[i] = true;
        }
        mark[0] && support.iter().all(|&i| self.parent(i).is_none_or(|p| mark[p]))
    }

    /// All rooted subtrees with between 1 and `max_size` nodes, each sorted.
    ///
    /// Exponential in the tree size; meant for brute-force checks.
    pub fn rooted_subtrees(&self, max_size: usize) -> Vec<Vec<usize>> {
        let mut out = self.subtrees_at(0, max_size);
        for s in &mut out {
            s.sort_unstable();
        }
        out
    }

    fn subtrees_at(&self, node: usize, budget: usize) -> Vec<Vec<usize>> {
        if budget == 0 {
            return Vec::new();
        }
        let Some((l, r)) = self.children(node) else {
            return vec![vec![node]];
        };
        let mut left = vec![Vec::new()];
        left.extend(self.subtrees_at(l, budget - 1));
        let mut right = vec![Vec::new()];
        right.extend(self.subtrees_at(r, budget - 1));
        let mut out = Vec::new();
        for a in &left {
            for b in &right {
                if a.len() + b.len() < budget {
                    let mut s = Vec::with_capacity(1 + a.len() + b.len());
                    s.push(node);
                    s.extend_from_slice(a);
                    s.extend_from_slice(b);
                    out.push(s);
                }
            }
        }
        out
    }

    /// Rooted subtree with at most `budget` nodes maximising the summed
    /// nonnegative `weights`. Exact bottom-up dynamic program, O(d·budget²).
    pub fn best_rooted_subtree(&self, weights: &[f64], budget: usize) -> (f64, Vec<usize>) {
        let d = self.dim();
        debug_assert_eq!(weights.len(), d);
        let kmax = budget.min(d);
        if kmax == 0 {
            return (0.0, Vec::new());
        }
        let width = kmax + 1;
        // best[i * width + j]: best weight of a subtree rooted at i using at most j nodes
        let mut best = vec![0.0f64; d * width];
        let mut split = vec![0u16; d * width];
        for i in (0..d).rev() {
            match self.children(i) {
                None => {
                    for j in 1..width {
                        best[i * width + j] = weights[i];
                    }
                }
                Some((l, r)) => {
                    for j in 1..width {
                        let rest = j - 1;
                        let mut top = f64::NEG_INFINITY;
                        let mut arg = 0;
                        for a in 0..=rest {
                            let v = best[l * width + a] + best[r * width + rest - a];
                            if v > top {
                                top = v;
                                arg = a;
                            }
                        }
                        best[i * width + j] = weights[i] + top;
                        split[i * width + j] = arg as u16;
                    }
                }
            }
        }
        let mut support = Vec::with_capacity(kmax);
        let mut stack = vec![(0usize, kmax)];
        while let Some((i, j)) = stack.pop() {
            if j == 0 {
                continue;
            }
            support.push(i);
            if let Some((l, r)) = self.children(i) {
                let a = split[i * width + j] as usize;
                stack.push((l, a));
                stack.push((r, j - 1 - a));
            }
        }
        support.sort_unstable();
        (best[kmax], support)
    }

    /// Union of two rooted subtrees, each with at most `k` nodes, maximising
    /// the summed nonnegative `weights`. Exact, O(d·k⁴).
    pub fn best_union_of_two(&self, weights: &[f64], k: usize) -> (f64, Vec<usize>) {
        let d = self.dim();
        let k = k.min(d);
        if k == 0 {
            return (0.0, Vec::new());
        }
        let w = k + 1;
        let cells = w * w;
        let mut best = vec![0.0f64; d * cells];
        let mut split = vec![(0u16, 0u16); d * cells];
        for i in (0..d).rev() {
            for a in 0..w {
                for b in 0..w {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let ra = a.saturating_sub(1);
                    let rb = b.saturating_sub(1);
                    let (value, arg) = match self.children(i) {
                        None => (0.0, (0, 0)),
                        Some((l, r)) => {
                            let mut top = f64::NEG_INFINITY;
                            let mut arg = (0, 0);
                            for a1 in 0..=ra {
                                for b1 in 0..=rb {
                                    let v = best[l * cells + a1 * w + b1]
                                        + best[r * cells + (ra - a1) * w + (rb - b1)];
                                    if v > top {
                                        top = v;
                                        arg = (a1 as u16, b1 as u16);
                                    }
                                }
                            }
                            (top, arg)
                        }
                    };
                    best[i * cells + a * w + b] = weights[i] + value;
                    split[i * cells + a * w + b] = arg;
                }
            }
        }
        let mut support = Vec::new();
        let mut stack = vec![(0usize, k, k)];
        while let Some((i, a, b)) = stack.pop() {
            if a == 0 && b == 0 {
                continue;
            }
            support.push(i);
            if let Some((l, r)) = self.children(i) {
                let (a1, b1) = split[i * cells + a * w + b];
                let (a1, b1) = (a1 as usize, b1 as usize);
                let ra = a.saturating_sub(1);
                let rb = b.saturating_sub(1);
                stack.push((l, a1, b1));
                stack.push((r, ra - a1, rb - b1));
            }
        }
        support.sort_unstable();
        (best[k * w + k], support)
    }
}
