//! Congruences of a finite algebra as canonical partitions.
//!
//! A partition is stored as a least-representative map: `rep[e]` is the
//! smallest element of the block containing `e`. Two values are equal as
//! partitions iff the maps are equal, so congruences can be hashed and
//! ordered directly.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::algebra::{Element, FiniteAlgebra};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Congruence {
    rep: Vec<usize>,
}

impl Congruence {
    /// The equality congruence on a carrier of the given size.
    pub fn equality(size: usize) -> Congruence {
        Congruence {
            rep: (0..size).collect(),
        }
    }

    /// The full congruence: one block.
    pub fn full(size: usize) -> Congruence {
        Congruence {
            rep: vec![0; size],
        }
    }

    /// Build from an arbitrary representative map, canonicalizing to least
    /// representatives.
    pub fn from_reps(mut rep: Vec<usize>) -> Congruence {
        // path-compress to roots first
        for i in 0..rep.len() {
            let mut r = i;
            while rep[r] != r {
                r = rep[r];
            }
            rep[i] = r;
        }
        // roots are not necessarily least; remap every block to its minimum
        let mut least: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, &r) in rep.iter().enumerate() {
            let entry = least.entry(r).or_insert(i);
            if i < *entry {
                *entry = i;
            }
        }
        let rep = rep.iter().map(|r| least[r]).collect();
        Congruence { rep }
    }

    /// Parse the block text form, e.g. `0 2|1 3`. Every element of
    /// `0..size` must appear exactly once.
    pub fn parse(text: &str, size: usize) -> Result<Congruence> {
        let mut rep = vec![usize::MAX; size];
        for block in text.split('|') {
            let mut members: Vec<usize> = Vec::new();
            for tok in block.split_whitespace() {
                let e: usize = tok.parse().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("block element `{tok}` is not a number"),
                })?;
                if e >= size {
                    return Err(Error::ElementRange { element: e, size });
                }
                members.push(e);
            }
            if members.is_empty() {
                return Err(Error::Parse {
                    line: 1,
                    msg: "empty block".into(),
                });
            }
            let least = *members.iter().min().unwrap();
            for &m in &members {
                if rep[m] != usize::MAX {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("element {m} appears in two blocks"),
                    });
                }
                rep[m] = least;
            }
        }
        if let Some(missing) = rep.iter().position(|&r| r == usize::MAX) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("element {missing} missing from partition"),
            });
        }
        Ok(Congruence { rep })
    }

    pub fn size(&self) -> usize {
        self.rep.len()
    }

    pub fn related(&self, a: Element, b: Element) -> bool {
        self.rep[a.0] == self.rep[b.0]
    }

    pub fn rep_of(&self, a: Element) -> usize {
        self.rep[a.0]
    }

    /// Blocks sorted by least element; elements ascending inside each.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &r) in self.rep.iter().enumerate() {
            map.entry(r).or_default().push(i);
        }
        map.into_values().collect()
    }

    pub fn block_count(&self) -> usize {
        self.blocks().len()
    }

    /// Canonical text form: blocks separated by `|`, elements by spaces.
    pub fn to_text(&self) -> String {
        self.blocks()
            .iter()
            .map(|b| {
                b.iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Refinement order: self <= other when every block of self sits inside
    /// a block of other.
    pub fn leq(&self, other: &Congruence) -> bool {
        debug_assert_eq!(self.size(), other.size());
        (0..self.rep.len()).all(|i| other.rep[i] == other.rep[self.rep[i]])
    }

    pub fn join(&self, other: &Congruence) -> Congruence {
        let mut rep: Vec<usize> = (0..self.size()).collect();
        fn find(rep: &mut [usize], mut a: usize) -> usize {
            while rep[a] != a {
                rep[a] = rep[rep[a]];
                a = rep[a];
            }
            a
        }
        for i in 0..self.size() {
            for seed in [self.rep[i], other.rep[i]] {
                let (ra, rb) = (find(&mut rep, i), find(&mut rep, seed));
                if ra != rb {
                    rep[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        Congruence::from_reps(rep)
    }

    pub fn meet(&self, other: &Congruence) -> Congruence {
        let mut key_to_rep: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut rep = vec![0usize; self.size()];
        for i in 0..self.size() {
            let key = (self.rep[i], other.rep[i]);
            rep[i] = *key_to_rep.entry(key).or_insert(i);
        }
        Congruence { rep }
    }

    /// All pairs (a, b) with a < b in the same block.
    pub fn pairs(&self) -> Vec<(Element, Element)> {
        let mut out = Vec::new();
        for b in self.blocks() {
            for i in 0..b.len() {
                for j in i + 1..b.len() {
                    out.push((Element(b[i]), Element(b[j])));
                }
            }
        }
        out
    }

    /// Is this partition compatible with every operation of `alg`?
    pub fn is_congruence(&self, alg: &FiniteAlgebra) -> bool {
        if self.size() != alg.size() {
            return false;
        }
        // one argument at a time suffices for an equivalence
        for (op_idx, op) in alg.ops().iter().enumerate() {
            if op.arity == 0 {
                continue;
            }
            let n = alg.size().pow(op.arity as u32);
            let mut args = vec![Element(0); op.arity];
            for flat in 0..n {
                let mut rem = flat;
                for slot in args.iter_mut() {
                    *slot = Element(rem % alg.size());
                    rem /= alg.size();
                }
                let base = self.rep[alg.apply(op_idx, &args).0];
                for pos in 0..op.arity {
                    let orig = args[pos];
                    for b in alg.elements() {
                        if b != orig && self.related(orig, b) {
                            args[pos] = b;
                            if self.rep[alg.apply(op_idx, &args).0] != base {
                                return false;
                            }
                        }
                    }
                    args[pos] = orig;
                }
            }
        }
        true
    }
}

/// Smallest congruence of `alg` containing the given pairs.
pub fn cg(alg: &FiniteAlgebra, pairs: &[(Element, Element)]) -> Congruence {
    let size = alg.size();
    let mut rep: Vec<usize> = (0..size).collect();
    fn find(rep: &mut [usize], mut a: usize) -> usize {
        while rep[a] != a {
            rep[a] = rep[rep[a]];
            a = rep[a];
        }
        a
    }
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    let union = |rep: &mut Vec<usize>, queue: &mut VecDeque<(usize, usize)>, a: usize, b: usize| {
        let (ra, rb) = (find(rep, a), find(rep, b));
        if ra != rb {
            rep[ra.max(rb)] = ra.min(rb);
            queue.push_back((ra, rb));
        }
    };
    for &(a, b) in pairs {
        union(&mut rep, &mut queue, a.0, b.0);
    }
    // propagate through every basic translation until stable
    while let Some((a, b)) = queue.pop_front() {
        for (op_idx, op) in alg.ops().iter().enumerate() {
            if op.arity == 0 {
                continue;
            }
            let rest = size.pow(op.arity as u32 - 1);
            let mut args = vec![Element(0); op.arity];
            for pos in 0..op.arity {
                for flat in 0..rest {
                    let mut rem = flat;
                    for (i, slot) in args.iter_mut().enumerate() {
                        if i == pos {
                            continue;
                        }
                        *slot = Element(rem % size);
                        rem /= size;
                    }
                    args[pos] = Element(a);
                    let fa = alg.apply(op_idx, &args).0;
                    args[pos] = Element(b);
                    let fb = alg.apply(op_idx, &args).0;
                    union(&mut rep, &mut queue, fa, fb);
                }
            }
        }
    }
    Congruence::from_reps(rep)
}

/// The whole congruence lattice, sorted. Principal congruences are closed
/// under binary joins until a fixpoint; the join of congruences is a
/// congruence, so this reaches everything.
pub fn all_congruences(alg: &FiniteAlgebra, cap: usize) -> Result<Vec<Congruence>> {
    let mut found: HashSet<Congruence> = HashSet::new();
    found.insert(Congruence::equality(alg.size()));
    for a in 0..alg.size() {
        for b in a + 1..alg.size() {
            found.insert(cg(alg, &[(Element(a), Element(b))]));
            if found.len() > cap {
                return Err(Error::ResourceCap {
                    what: "congruence lattice",
                    reached: found.len(),
                    cap,
                });
            }
        }
    }
    let mut worklist: Vec<Congruence> = found.iter().cloned().collect();
    while let Some(c) = worklist.pop() {
        let snapshot: Vec<Congruence> = found.iter().cloned().collect();
        for d in snapshot {
            let j = c.join(&d);
            if !found.contains(&j) {
                if found.len() >= cap {
                    return Err(Error::ResourceCap {
                        what: "congruence lattice",
                        reached: found.len() + 1,
                        cap,
                    });
                }
                found.insert(j.clone());
                worklist.push(j);
            }
        }
    }
    let mut out: Vec<Congruence> = found.into_iter().collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn cg_on_z4_pair_0_2() {
        let a = corpus::z(4);
        let c = cg(&a, &[(Element(0), Element(2))]);
        assert_eq!(c.to_text(), "0 2|1 3");
    }

    #[test]
    fn cg_on_z3_any_pair_is_full() {
        let a = corpus::z(3);
        let c = cg(&a, &[(Element(0), Element(1))]);
        assert_eq!(c, Congruence::full(3));
    }

    #[test]
    fn cg_of_nothing_is_equality() {
        let a = corpus::z(4);
        assert_eq!(cg(&a, &[]), Congruence::equality(4));
    }

    #[test]
    fn join_meet_text_and_order() {
        let a = corpus::z2xz2();
        let lat = all_congruences(&a, 64).unwrap();
        assert_eq!(lat.len(), 5);
        let zero = Congruence::equality(4);
        let one = Congruence::full(4);
        assert!(lat.contains(&zero) && lat.contains(&one));
        for c in &lat {
            assert!(zero.leq(c) && c.leq(&one));
            assert!(c.is_congruence(&a));
            assert_eq!(Congruence::parse(&c.to_text(), 4).unwrap(), *c);
        }
        // the three proper congruences pairwise meet to zero, join to one
        let proper: Vec<_> = lat
            .iter()
            .filter(|c| **c != zero && **c != one)
            .collect();
        assert_eq!(proper.len(), 3);
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(proper[i].meet(proper[j]), zero);
                assert_eq!(proper[i].join(proper[j]), one);
            }
        }
    }

    #[test]
    fn s3_lattice_is_a_three_chain() {
        let a = corpus::s3();
        let lat = all_congruences(&a, 64).unwrap();
        assert_eq!(lat.len(), 3);
        // the middle one is the alternating subgroup partition
        let mid = lat
            .iter()
            .find(|c| c.block_count() == 2)
            .expect("A3 congruence");
        assert_eq!(mid.to_text(), "0 4 5|1 2 3");
    }

    #[test]
    fn set_algebra_has_all_partitions() {
        let a = corpus::two_element_set();
        let lat = all_congruences(&a, 64).unwrap();
        assert_eq!(lat.len(), 2);
    }

    #[test]
    fn parse_rejects_bad_partitions() {
        assert!(Congruence::parse("0 1|1", 2).is_err());
        assert!(Congruence::parse("0", 2).is_err());
        assert!(Congruence::parse("0 5", 2).is_err());
        assert!(Congruence::parse("0 x", 2).is_err());
    }

    #[test]
    fn incompatible_partition_is_detected() {
        let a = corpus::z(4);
        let c = Congruence::parse("0 1|2|3", 4).unwrap();
        assert!(!c.is_congruence(&a));
        assert!(Congruence::parse("0 2|1 3", 4).unwrap().is_congruence(&a));
    }
}
