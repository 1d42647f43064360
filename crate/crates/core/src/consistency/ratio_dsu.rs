//! Union-find over components where each node carries its scale relative to
//! its parent, so a merge can be checked against an existing ratio.

use crate::rational::Rational;

#[derive(Debug, Clone)]
pub(crate) struct RatioUnionFind {
    parent: Vec<usize>,
    /// `scale(x) / scale(parent(x))`
    ratio: Vec<Rational>,
    rank: Vec<u8>,
}

pub(crate) enum Merge {
    Joined,
    Consistent,
    /// The existing value of `scale(a) / scale(b)`.
    Conflict(#[allow(dead_code)] Rational),
}

impl RatioUnionFind {
    pub fn new(n: usize) -> Self {
        RatioUnionFind {
            parent: (0..n).collect(),
            ratio: vec![Rational::one(); n],
            rank: vec![0; n],
        }
    }

    /// Root of `x` and `scale(x) / scale(root)`.
    pub fn find(&mut self, x: usize) -> (usize, Rational) {
        let p = self.parent[x];
        if p == x {
            return (x, Rational::one());
        }
        let (root, to_root) = self.find(p);
        let r = &self.ratio[x] * &to_root;
        self.parent[x] = root;
        self.ratio[x] = r.clone();
        (root, r)
    }

    /// Imposes `scale(a) / scale(b) = want`.
    pub fn relate(&mut self, a: usize, b: usize, want: &Rational) -> Merge {
        let (ra, xa) = self.find(a);
        let (rb, xb) = self.find(b);
        if ra == rb {
            let have = xa.checked_div(&xb).expect("positive scales");
            return if &have == want {
                Merge::Consistent
            } else {
                Merge::Conflict(have)
            };
        }
        // scale(ra)/scale(rb) = want * xb / xa
        let root_ratio = (want * &xb).checked_div(&xa).expect("positive scales");
        if self.rank[ra] < self.rank[rb] {
            self.parent[ra] = rb;
            self.ratio[ra] = root_ratio;
        } else {
            self.parent[rb] = ra;
            self.ratio[rb] = root_ratio.recip().expect("positive scales");
            if self.rank[ra] == self.rank[rb] {
                self.rank[ra] += 1;
            }
        }
        Merge::Joined
    }
}
