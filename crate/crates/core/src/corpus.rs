//! Formula and sequent generators: exhaustive by size and seeded random.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formulas::{BinOp, Const, Formula, Sequent, UnOp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Atoms and connectives to build formulas from.
#[derive(Clone, Debug)]
pub struct Grammar {
    pub atoms: Vec<Formula>,
    pub bins: Vec<BinOp>,
    pub uns: Vec<UnOp>,
}

impl Grammar {
    pub fn new(atoms: Vec<Formula>, bins: &[BinOp], uns: &[UnOp]) -> Self {
        Grammar { atoms, bins: bins.to_vec(), uns: uns.to_vec() }
    }

    pub fn vars(names: &[&str]) -> Vec<Formula> {
        names.iter().map(|n| Formula::var(n)).collect()
    }

    /// Variables and their duals.
    pub fn literals(names: &[&str]) -> Vec<Formula> {
        names.iter().flat_map(|n| [Formula::var(n), Formula::dual_var(n)]).collect()
    }

    pub fn constants() -> Vec<Formula> {
        vec![Formula::Const(Const::One), Formula::Const(Const::Bot), Formula::Const(Const::Top), Formula::Const(Const::Zero)]
    }

    pub fn implicational(vars: &[&str]) -> Self {
        Grammar::new(Grammar::vars(vars), &[BinOp::Lolli], &[])
    }

    pub fn multiplicative(vars: &[&str]) -> Self {
        Grammar::new(Grammar::literals(vars), &[BinOp::Tensor, BinOp::Par], &[])
    }

    /// `by_size[n]` holds every formula of size `n`, for `n <= max`.
    pub fn exhaustive(&self, max: usize) -> Vec<Vec<Formula>> {
        let mut by_size: Vec<Vec<Formula>> = vec![Vec::new(); max + 1];
        if max >= 1 {
            by_size[1] = self.atoms.clone();
        }
        for n in 2..=max {
            let mut out = Vec::new();
            for &u in &self.uns {
                out.extend(by_size[n - 1].iter().map(|a| Formula::un(u, a.clone())));
            }
            for l in 1..n - 1 {
                let r = n - 1 - l;
                for &op in &self.bins {
                    for a in &by_size[l] {
                        for b in &by_size[r] {
                            out.push(Formula::bin(op, a.clone(), b.clone()));
                        }
                    }
                }
            }
            by_size[n] = out;
        }
        by_size
    }

    /// Every formula whose subformula closure has at most `k` elements.
    pub fn closure_bounded(&self, k: usize) -> Vec<Formula> {
        // formulas with closure <= j are built from children with closure <= j - 1
        let mut forms: Vec<Formula> = Vec::new();
        let mut closures: Vec<Vec<u32>> = Vec::new();
        let mut ids: HashMap<Formula, u32> = HashMap::new();
        let mut intern = |f: Formula, cl: Vec<u32>, forms: &mut Vec<Formula>, closures: &mut Vec<Vec<u32>>| {
            if ids.contains_key(&f) {
                return;
            }
            let id = forms.len() as u32;
            let mut cl = cl;
            cl.push(id);
            ids.insert(f.clone(), id);
            forms.push(f);
            closures.push(cl);
        };
        if k == 0 {
            return Vec::new();
        }
        for a in &self.atoms {
            intern(a.clone(), Vec::new(), &mut forms, &mut closures);
        }
        for j in 2..=k {
            let prev: Vec<u32> = (0..forms.len() as u32).filter(|&i| closures[i as usize].len() < j).collect();
            for &a in &prev {
                for &u in &self.uns {
                    let cl = closures[a as usize].clone();
                    if cl.len() < j {
                        intern(Formula::un(u, forms[a as usize].clone()), cl, &mut forms, &mut closures);
                    }
                }
                for &b in &prev {
                    let cl = union(&closures[a as usize], &closures[b as usize]);
                    if cl.len() < j {
                        for &op in &self.bins {
                            intern(Formula::bin(op, forms[a as usize].clone(), forms[b as usize].clone()), cl.clone(), &mut forms, &mut closures);
                        }
                    }
                }
            }
        }
        forms.sort();
        forms
    }

    /// A random formula of size at most `size` (exactly `size` when the
    /// grammar allows it).
    pub fn random(&self, r: &mut impl Rng, size: usize) -> Formula {
        let size = size.max(1);
        let can_un = !self.uns.is_empty() && size >= 2;
        let can_bin = !self.bins.is_empty() && size >= 3;
        if !can_un && !can_bin {
            return self.atoms.choose(r).expect("grammar has atoms").clone();
        }
        if can_un && (!can_bin || r.gen_bool(0.25)) {
            let u = *self.uns.choose(r).unwrap();
            return Formula::un(u, self.random(r, size - 1));
        }
        let op = *self.bins.choose(r).unwrap();
        let mut inner = size - 1;
        if self.uns.is_empty() && inner % 2 == 1 {
            inner -= 1;
        }
        let l = if self.uns.is_empty() { 2 * r.gen_range(0..inner / 2) + 1 } else { r.gen_range(1..inner) };
        Formula::bin(op, self.random(r, l), self.random(r, inner - l))
    }

    /// Between one and `max_len` random formulas of total size at most `max`.
    pub fn random_list(&self, r: &mut impl Rng, max: usize, max_len: usize) -> Vec<Formula> {
        let k = r.gen_range(1..=max_len.max(1)).min(max.max(1));
        let mut budget = max.max(1);
        let mut out = Vec::new();
        for i in 0..k {
            let left = k - i - 1;
            let room = budget.saturating_sub(left).max(1);
            let n = r.gen_range(1..=room);
            let f = self.random(r, n);
            budget = budget.saturating_sub(f.size());
            out.push(f);
            if budget == 0 {
                break;
            }
        }
        out
    }
}

fn union(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Multisets (as sorted lists) over `by_size` with total size in
/// `1..=max`, the empty multiset included.
pub fn multisets(by_size: &[Vec<Formula>], max: usize) -> Vec<Vec<Formula>> {
    let items: Vec<&Formula> = by_size.iter().skip(1).flatten().collect();
    let mut out = Vec::new();
    fn go<'a>(items: &[&'a Formula], start: usize, room: usize, cur: &mut Vec<&'a Formula>, out: &mut Vec<Vec<Formula>>) {
        out.push(cur.iter().map(|f| (*f).clone()).collect());
        for i in start..items.len() {
            let s = items[i].size();
            if s <= room {
                cur.push(items[i]);
                go(items, i, room - s, cur, out);
                cur.pop();
            }
        }
    }
    go(&items, 0, max, &mut Vec::new(), &mut out);
    out
}

/// All intuitionistic sequents `Γ ⊢ A` of total size at most `max`.
pub fn intuitionistic_sequents(g: &Grammar, max: usize) -> Vec<Sequent> {
    let by_size = g.exhaustive(max);
    let mut out = Vec::new();
    for n in 1..=max {
        for a in &by_size[n] {
            for ctx in multisets(&by_size, max - n) {
                out.push(Sequent::intuitionistic(ctx, Some(a.clone())));
            }
        }
    }
    out.sort_by_key(|s| s.to_string());
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let g = Grammar::implicational(&["p", "q"]);
        let by = g.exhaustive(7);
        assert_eq!(by.iter().map(Vec::len).collect::<Vec<_>>(), vec![0, 2, 0, 4, 0, 16, 0, 80]);
        let m = Grammar::multiplicative(&["p"]);
        assert_eq!(m.exhaustive(3)[3].len(), 2 * 2 * 2);
    }

    #[test]
    fn closure_bound() {
        let g = Grammar::new(Grammar::vars(&["p"]), &[BinOp::Tensor], &[UnOp::Bang]);
        let fs = g.closure_bounded(2);
        assert_eq!(fs.len(), 3);
        assert!(fs.contains(&Formula::bang(Formula::var("p"))));
    }

    #[test]
    fn random_is_deterministic() {
        let g = Grammar::multiplicative(&["p", "q"]);
        let a: Vec<Formula> = (0..5).map(|i| g.random(&mut rng(i), 9)).collect();
        let b: Vec<Formula> = (0..5).map(|i| g.random(&mut rng(i), 9)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|f| f.size() <= 9));
    }

    #[test]
    fn small_sequents() {
        let g = Grammar::implicational(&["p"]);
        let s = intuitionistic_sequents(&g, 2);
        assert_eq!(s.len(), 2);
    }
}
