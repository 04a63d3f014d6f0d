//! Test-side oracles that share no code with the library search engines.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use subtower::abvass::Abvass;
use subtower::formulas::{BinOp, Formula, Sequent};

/// Exhaustive cut-free search for implicational BCK sequents with no depth
/// bound. Returns the least number of rule applications other than
/// weakening in a proof, or `None` when there is no proof.
#[derive(Default)]
pub struct NaiveBck {
    memo: HashMap<(Vec<Formula>, Formula), Option<usize>>,
}

impl NaiveBck {
    pub fn min_proof(&mut self, s: &Sequent) -> Option<usize> {
        let goal = s.stoup().expect("BCK sequents have a succedent").clone();
        let mut ctx = s.antecedent().to_vec();
        ctx.sort();
        self.go(ctx, goal)
    }

    fn go(&mut self, ctx: Vec<Formula>, goal: Formula) -> Option<usize> {
        let key = (ctx, goal);
        if let Some(r) = self.memo.get(&key) {
            return *r;
        }
        let (ctx, goal) = key.clone();
        let mut best: Option<usize> = None;
        let mut offer = |n: usize| best = Some(best.map_or(n, |b: usize| b.min(n)));
        // axiom, with the rest of the context weakened away
        if ctx.contains(&goal) {
            offer(1);
        }
        if let Formula::Bin(BinOp::Lolli, a, b) = &goal {
            let mut c = ctx.clone();
            c.push((**a).clone());
            c.sort();
            if let Some(n) = self.go(c, (**b).clone()) {
                offer(n + 1);
            }
        }
        let mut seen = HashSet::new();
        for (i, f) in ctx.iter().enumerate() {
            let Formula::Bin(BinOp::Lolli, a, b) = f else { continue };
            if !seen.insert(f.clone()) {
                continue;
            }
            let rest: Vec<Formula> = ctx.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, g)| g.clone()).collect();
            for mask in 0u32..(1 << rest.len()) {
                let left: Vec<Formula> = (0..rest.len()).filter(|k| mask >> k & 1 == 1).map(|k| rest[k].clone()).collect();
                let mut right: Vec<Formula> = (0..rest.len()).filter(|k| mask >> k & 1 == 0).map(|k| rest[k].clone()).collect();
                right.push((**b).clone());
                right.sort();
                let Some(l) = self.go(left, (**a).clone()) else { continue };
                if let Some(r) = self.go(right, goal.clone()) {
                    offer(l + r + 1);
                }
            }
        }
        self.memo.insert(key, best);
        best
    }
}

/// Lossy reachability in a BVASS (no forks, no zero tests) as a bottom-up
/// fixpoint over the box `[0, cap]^d`. The set of derivable configurations
/// is upward closed; the answer is exact once it no longer changes with `cap`.
pub fn lossy_reachable(m: &Abvass, leaves: &[usize], cap: u32) -> HashSet<(usize, Vec<u32>)> {
    assert!(m.fork.is_empty() && m.zero.is_empty());
    let d = m.dim;
    let mut all: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..d {
        all = all.into_iter().flat_map(|v| (0..=cap).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    let n = m.names.len();
    let mut reach: HashSet<(usize, Vec<u32>)> = HashSet::new();
    for &l in leaves {
        for v in &all {
            reach.insert((l, v.clone()));
        }
    }
    loop {
        let mut new = Vec::new();
        for q in 0..n {
            for v in &all {
                if reach.contains(&(q, v.clone())) {
                    continue;
                }
                let by_unary = m.unary.iter().any(|(p, u, t)| {
                    *p == q && {
                        let w: Option<Vec<u32>> = v.iter().zip(u).map(|(&x, &k)| u32::try_from(x as i64 + k).ok()).collect();
                        w.is_some_and(|w| w.iter().all(|&x| x <= cap) && reach.contains(&(*t, w)))
                    }
                });
                let by_split = || {
                    m.split.iter().any(|(p, a, b)| {
                        *p == q
                            && all.iter().any(|v1| {
                                v1.iter().zip(v).all(|(x, y)| x <= y) && {
                                    let v2: Vec<u32> = v.iter().zip(v1).map(|(y, x)| y - x).collect();
                                    reach.contains(&(*a, v1.clone())) && reach.contains(&(*b, v2))
                                }
                            })
                    })
                };
                // losses: any smaller configuration in the same state
                let by_loss = || (0..d).any(|i| v[i] > 0 && reach.contains(&(q, { let mut w = v.clone(); w[i] -= 1; w })));
                if by_unary || by_split() || by_loss() {
                    new.push((q, v.clone()));
                }
            }
        }
        if new.is_empty() {
            return reach;
        }
        reach.extend(new);
    }
}

/// Ordinary BVASSs with at most 3 states and dimension at most 2, each with
/// its leaf states and a root configuration.
pub const HAND_BUILT: [(&str, &str); 20] = [
    ("dim 1\nleaf a\nstate r", "a"),
    ("dim 1\nleaf a\nunary r -> b : +e1\nunary b -> a : -e1", "r"),
    ("dim 1\nleaf a\nunary r -> a : -e1", "r"),
    ("dim 1\nleaf a\nunary r -> a : +e1", "r"),
    ("dim 1\nleaf a\nunary r -> r : +e1", "r"),
    ("dim 1\nleaf a\nsplit r -> a + a", "r"),
    ("dim 1\nleaf a\nstate s\nsplit r -> a + s", "r"),
    ("dim 1\nleaf a\nsplit r -> a + b\nunary b -> a : -e1", "r:[1]"),
    ("dim 1\nleaf a\nsplit r -> b + b\nunary b -> a : -e1", "r:[1]"),
    ("dim 1\nleaf a\nsplit r -> b + b\nunary b -> a : -e1", "r:[2]"),
    ("dim 2\nleaf a\nunary r -> b : +e1\nunary b -> a : -e2", "r"),
    ("dim 2\nleaf a\nunary r -> b : -e1\nunary b -> a : +e2", "r:[1,0]"),
    ("dim 2\nleaf a\nunary r -> r : +e1\nunary r -> b : -e2\nunary b -> a : +e1", "r"),
    ("dim 2\nleaf a\nunary r -> r : +e2\nsplit r -> b + b\nunary b -> a : -e2", "r"),
    ("dim 2\nleaf a\nunary r -> r : +e1\nunary r -> a : -e2", "r"),
    ("dim 1\nleaf a\nsplit r -> r + b\nunary b -> a : -e1\nunary r -> a : +e1", "r"),
    ("dim 1\nleaf a\nsplit r -> r + r", "r"),
    ("dim 2\nleaf a\nunary r -> r : +e1\nunary r -> b : -e1\nunary b -> a : -e2", "r:[0,1]"),
    ("dim 2\nleaf a\nunary r -> b : -e1\nunary b -> a : +e1", "r"),
    ("dim 2\nleaf a\nleaf b\nsplit r -> a + b", "r:[1,1]"),
];
