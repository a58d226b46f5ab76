//! Agglomerative clustering with Ward's linkage.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Node ids: leaves are `0..n`, the node created by merge `m` is `n + m`.
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone)]
pub struct Dendrogram {
    pub n: usize,
    /// Merges in nondecreasing height order.
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn root(&self) -> usize {
        if self.n <= 1 {
            0
        } else {
            self.n + self.merges.len() - 1
        }
    }

    pub fn size(&self, node: usize) -> usize {
        if node < self.n {
            1
        } else {
            self.merges[node - self.n].size
        }
    }

    fn height(&self, node: usize) -> f64 {
        if node < self.n {
            0.0
        } else {
            self.merges[node - self.n].height
        }
    }

    /// Leaves under `node`, ascending.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < self.n {
                out.push(v);
            } else {
                let m = self.merges[v - self.n];
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    }

    /// Smallest cluster with at least n/2 members, reached by cutting from the
    /// top: follow the child that still holds half of the cases until no
    /// internal child does.
    pub fn clean_cluster(&self) -> Vec<usize> {
        let mut node = self.root();
        while node >= self.n {
            let m = self.merges[node - self.n];
            let big = |c: usize| c >= self.n && 2 * self.size(c) >= self.n;
            let next = match (big(m.left), big(m.right)) {
                (true, false) => m.left,
                (false, true) => m.right,
                (true, true) => {
                    let (hl, hr) = (self.height(m.left), self.height(m.right));
                    if hl < hr || (hl == hr && self.members(m.left)[0] < self.members(m.right)[0]) {
                        m.left
                    } else {
                        m.right
                    }
                }
                (false, false) => break,
            };
            node = next;
        }
        self.members(node)
    }
}

/// Agglomerative clustering with the Lance-Williams recursion and Ward's
/// coefficients, applied to the dissimilarities as given (R's `ward.D`).
/// Merge heights are on the scale of the input.
pub fn ward_hclust(dissimilarity: &DMatrix<f64>) -> Result<Dendrogram> {
    let n = dissimilarity.nrows();
    if dissimilarity.ncols() != n {
        return Err(Error::InvalidArgument("dissimilarity matrix must be square".into()));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = dissimilarity[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument("dissimilarities must be finite and nonnegative".into()));
            }
            d[i * n + j] = v;
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = n;
    // height of the cluster currently held in each slot, to keep parents at
    // or above their children despite rounding
    let mut floor = vec![0.0_f64; n];

    // nearest-neighbour chain; Ward's linkage is reducible so this yields the
    // same hierarchy as greedy closest-pair merging
    while remaining > 1 {
        if chain.is_empty() {
            chain.push((0..n).find(|&i| active[i]).expect("an active cluster remains"));
        }
        let a = *chain.last().unwrap();
        let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for k in 0..n {
            if k == a || !active[k] {
                continue;
            }
            let dk = d[a * n + k];
            if dk < best_d {
                best_d = dk;
                best = k;
            }
        }
        if let Some(pv) = prev {
            if d[a * n + pv] <= best_d {
                best = pv;
            }
        }
        if Some(best) == prev {
            chain.pop();
            chain.pop();
            let (i, j) = (a.min(best), a.max(best));
            let dij = d[i * n + j];
            let h = dij.max(floor[i]).max(floor[j]);
            floor[i] = h;
            raw.push((i, j, h));
            let (ni, nj) = (size[i] as f64, size[j] as f64);
            for k in 0..n {
                if !active[k] || k == i || k == j {
                    continue;
                }
                let nk = size[k] as f64;
                let v = ((ni + nk) * d[i * n + k] + (nj + nk) * d[j * n + k] - nk * dij) / (ni + nj + nk);
                d[i * n + k] = v;
                d[k * n + i] = v;
            }
            size[i] += size[j];
            active[j] = false;
            remaining -= 1;
        } else {
            chain.push(best);
        }
    }

    // order merges by height (stable in discovery order), then relabel
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&x, &y| raw[x].2.total_cmp(&raw[y].2).then(x.cmp(&y)));
    let mut parent: Vec<usize> = (0..n).collect();
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merges = Vec::with_capacity(raw.len());
    for (m, &r) in order.iter().enumerate() {
        let (i, j, h) = raw[r];
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        let (li, lj) = (node_of[ri], node_of[rj]);
        let (left, right) = if li < lj { (li, lj) } else { (lj, li) };
        let s = sizes[ri] + sizes[rj];
        let root = ri.min(rj);
        parent[ri.max(rj)] = root;
        sizes[root] = s;
        node_of[root] = n + m;
        merges.push(Merge {
            left,
            right,
            height: h.max(0.0),
            size: s,
        });
    }
    Ok(Dendrogram { n, merges })
}
