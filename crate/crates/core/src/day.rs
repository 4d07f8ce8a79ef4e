//! Quaternary term chains witnessing congruence modularity, and the
//! associated Mal'cev term and shifting lemma checks.
//!
//! A chain `m_0, .., m_k` qualifies when, as operations of the algebra:
//!
//! * `m_0(x,y,z,w) = x` and `m_k(x,y,z,w) = w`,
//! * `m_i(x,y,y,x) = x` for every `i`,
//! * `m_i(x,x,w,w) = m_{i+1}(x,x,w,w)` for even `i`,
//! * `m_i(x,y,y,w) = m_{i+1}(x,y,y,w)` for odd `i`.
//!
//! The search is seeded from a Mal'cev term when one exists (then
//! `m_1(x,y,z,w) = p(y,z,w)` always works, giving `k = 2`); otherwise it
//! runs breadth-first over enumerated quaternary term operations, so the
//! reported `k` is minimal for the enumerated fragment.

use std::collections::HashMap;

use crate::algebra::{Element, FiniteAlgebra};
use crate::congruence::Congruence;
use crate::error::{Error, Result};
use crate::term::{enumerate_term_operations, term_table, TermTree};

/// A verified chain of quaternary terms, with their tables cached for
/// pointwise application.
#[derive(Debug, Clone)]
pub struct DaySequence {
    size: usize,
    pub terms: Vec<TermTree>,
    tables: Vec<Vec<Element>>,
}

impl DaySequence {
    /// Number of steps `k` (the chain has `k + 1` terms).
    pub fn k(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Apply `m_e` to four elements.
    pub fn apply(&self, e: usize, a: Element, b: Element, c: Element, d: Element) -> Element {
        let s = self.size;
        self.tables[e][a.0 + s * (b.0 + s * (c.0 + s * d.0))]
    }

    /// Re-check every defining identity exhaustively.
    pub fn verify(&self, alg: &FiniteAlgebra) -> Result<()> {
        if alg.size() != self.size {
            return Err(Error::CarrierMismatch {
                expected: self.size,
                got: alg.size(),
            });
        }
        for (i, t) in self.terms.iter().enumerate() {
            let table = term_table(alg, t, 4)?;
            if table != self.tables[i] {
                return Err(Error::Precondition(format!(
                    "cached table for m_{i} does not match its term"
                )));
            }
        }
        let s = self.size;
        let k = self.k();
        let at = |e: usize, a: usize, b: usize, c: usize, d: usize| {
            self.tables[e][a + s * (b + s * (c + s * d))].0
        };
        for x in 0..s {
            for y in 0..s {
                for w in 0..s {
                    for z in 0..s {
                        if at(0, x, y, z, w) != x {
                            return Err(Error::Precondition(format!(
                                "m_0({x},{y},{z},{w}) != {x}"
                            )));
                        }
                        if at(k, x, y, z, w) != w {
                            return Err(Error::Precondition(format!(
                                "m_{k}({x},{y},{z},{w}) != {w}"
                            )));
                        }
                    }
                    for e in 0..=k {
                        if at(e, x, y, y, x) != x {
                            return Err(Error::Precondition(format!(
                                "m_{e}({x},{y},{y},{x}) != {x}"
                            )));
                        }
                    }
                    for e in 0..k {
                        let ok = if e % 2 == 0 {
                            at(e, x, x, w, w) == at(e + 1, x, x, w, w)
                        } else {
                            at(e, x, y, y, w) == at(e + 1, x, y, y, w)
                        };
                        if !ok {
                            return Err(Error::Precondition(format!(
                                "chain link m_{e} -> m_{} broken at ({x},{y},{w})",
                                e + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Search for a ternary term `p` with `p(x,x,y) = p(y,x,x) = y`.
/// Scans the canonical enumeration, so the result is deterministic.
pub fn find_malcev_term(
    alg: &FiniteAlgebra,
    depth_cap: usize,
    count_cap: usize,
) -> Option<TermTree> {
    let s = alg.size();
    let e = enumerate_term_operations(alg, 3, depth_cap, count_cap);
    for op in &e.terms {
        let at = |a: usize, b: usize, c: usize| op.table[a + s * (b + s * c)].0;
        let ok = (0..s).all(|x| (0..s).all(|y| at(x, x, y) == y && at(y, x, x) == y));
        if ok {
            return Some(op.term.clone());
        }
    }
    None
}

/// Find a modularity chain. Mal'cev seed first, then breadth-first search
/// over the enumerated quaternary term operations. `None` when the
/// enumerated fragment has no chain (e.g. an algebra with no operations).
pub fn find_day_terms(
    alg: &FiniteAlgebra,
    depth_cap: usize,
    count_cap: usize,
) -> Option<DaySequence> {
    let s = alg.size();
    if let Some(p) = find_malcev_term(alg, depth_cap.min(3), count_cap) {
        let m1 = p.substitute(&[TermTree::var(1), TermTree::var(2), TermTree::var(3)]);
        let terms = vec![TermTree::var(0), m1, TermTree::var(3)];
        let tables: Vec<Vec<Element>> = terms
            .iter()
            .map(|t| term_table(alg, t, 4).expect("4-ary table"))
            .collect();
        let seq = DaySequence {
            size: s,
            terms,
            tables,
        };
        if seq.verify(alg).is_ok() {
            return Some(seq);
        }
    }

    let e = enumerate_term_operations(alg, 4, depth_cap, count_cap);
    let n = s.pow(4);
    let pi_x: Vec<Element> = (0..n).map(|i| Element(i % s)).collect();
    let pi_w: Vec<Element> = (0..n).map(|i| Element(i / (s * s * s))).collect();

    // admissible terms: m(x,y,y,x) = x
    let mut admissible: Vec<usize> = Vec::new();
    for (idx, op) in e.terms.iter().enumerate() {
        let ok = (0..s).all(|x| {
            (0..s).all(|y| op.table[x + s * (y + s * (y + s * x))].0 == x)
        });
        if ok {
            admissible.push(idx);
        }
    }

    // bucket by the two restriction signatures
    let restrict = |table: &Vec<Element>, odd: bool| -> Vec<Element> {
        let mut out = Vec::with_capacity(s * s * s);
        for w in 0..s {
            for y in 0..s {
                for x in 0..s {
                    let idx = if odd {
                        x + s * (y + s * (y + s * w))
                    } else {
                        x + s * (x + s * (w + s * w))
                    };
                    out.push(table[idx]);
                }
            }
        }
        out
    };
    let mut even_sig: HashMap<Vec<Element>, Vec<usize>> = HashMap::new();
    let mut odd_sig: HashMap<Vec<Element>, Vec<usize>> = HashMap::new();
    for &idx in &admissible {
        even_sig
            .entry(restrict(&e.terms[idx].table, false))
            .or_default()
            .push(idx);
        odd_sig
            .entry(restrict(&e.terms[idx].table, true))
            .or_default()
            .push(idx);
    }
    for bucket in even_sig.values_mut().chain(odd_sig.values_mut()) {
        bucket.sort_unstable();
    }

    let start = admissible
        .iter()
        .copied()
        .find(|&i| e.terms[i].table == pi_x)?;
    let goal_table = &pi_w;

    // BFS over (term, parity of the next link)
    let mut prev: HashMap<(usize, u8), Option<(usize, u8)>> = HashMap::new();
    let mut queue: std::collections::VecDeque<(usize, u8)> = std::collections::VecDeque::new();
    prev.insert((start, 0), None);
    queue.push_back((start, 0));
    let mut goal_state: Option<(usize, u8)> = None;
    while let Some((idx, par)) = queue.pop_front() {
        if &e.terms[idx].table == goal_table {
            goal_state = Some((idx, par));
            break;
        }
        let sig = restrict(&e.terms[idx].table, par == 1);
        let bucket = if par == 0 {
            even_sig.get(&sig)
        } else {
            odd_sig.get(&sig)
        };
        if let Some(bucket) = bucket {
            for &nxt in bucket {
                let state = (nxt, 1 - par);
                if !prev.contains_key(&state) {
                    prev.insert(state, Some((idx, par)));
                    queue.push_back(state);
                }
            }
        }
    }
    let mut chain_idx = Vec::new();
    let mut cur = goal_state?;
    loop {
        chain_idx.push(cur.0);
        match prev[&cur] {
            Some(p) => cur = p,
            None => break,
        }
    }
    chain_idx.reverse();
    let terms: Vec<TermTree> = chain_idx.iter().map(|&i| e.terms[i].term.clone()).collect();
    let tables: Vec<Vec<Element>> = chain_idx.iter().map(|&i| e.terms[i].table.clone()).collect();
    let seq = DaySequence {
        size: s,
        terms,
        tables,
    };
    seq.verify(alg).ok()?;
    Some(seq)
}

/// Outcome of the shifting lemma sweep.
#[derive(Debug, Clone)]
pub struct ShiftingReport {
    pub holds: bool,
    /// On failure: ((alpha, beta, delta), (x, y, u, v)).
    pub witness: Option<((Congruence, Congruence, Congruence), [Element; 4])>,
    pub triples_checked: usize,
}

/// For every congruence triple (alpha, beta, delta) with
/// `alpha meet beta <= delta`: whenever x alpha y, u alpha v, x beta u,
/// y beta v and u delta v, then x delta y must follow.
pub fn shifting_lemma_check(alg: &FiniteAlgebra, lattice: &[Congruence]) -> ShiftingReport {
    let s = alg.size();
    let mut triples = 0usize;
    for alpha in lattice {
        for beta in lattice {
            let ab = alpha.meet(beta);
            for delta in lattice {
                if !ab.leq(delta) {
                    continue;
                }
                triples += 1;
                for x in 0..s {
                    for y in 0..s {
                        if !alpha.related(Element(x), Element(y)) {
                            continue;
                        }
                        for u in 0..s {
                            if !beta.related(Element(x), Element(u)) {
                                continue;
                            }
                            for v in 0..s {
                                if alpha.related(Element(u), Element(v))
                                    && beta.related(Element(y), Element(v))
                                    && delta.related(Element(u), Element(v))
                                    && !delta.related(Element(x), Element(y))
                                {
                                    return ShiftingReport {
                                        holds: false,
                                        witness: Some((
                                            (alpha.clone(), beta.clone(), delta.clone()),
                                            [Element(x), Element(y), Element(u), Element(v)],
                                        )),
                                        triples_checked: triples,
                                    };
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    ShiftingReport {
        holds: true,
        witness: None,
        triples_checked: triples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::all_congruences;
    use crate::corpus;

    #[test]
    fn malcev_term_on_groups() {
        for alg in [corpus::z(2), corpus::z(3), corpus::z(4), corpus::z2xz2()] {
            let p = find_malcev_term(&alg, 3, 20_000).expect("groups have one");
            let s = alg.size();
            let table = term_table(&alg, &p, 3).unwrap();
            for x in 0..s {
                for y in 0..s {
                    assert_eq!(table[x + s * (x + s * y)].0, y);
                    assert_eq!(table[y + s * (x + s * x)].0, y);
                }
            }
        }
    }

    #[test]
    fn malcev_term_absent_on_lattices_and_sets() {
        assert!(find_malcev_term(&corpus::two_chain(), 4, 20_000).is_none());
        assert!(find_malcev_term(&corpus::two_element_set(), 4, 100).is_none());
    }

    #[test]
    fn day_terms_on_groups_have_k_2() {
        for alg in [corpus::z(4), corpus::s3(), corpus::d4()] {
            let seq = find_day_terms(&alg, 4, 20_000).expect("found");
            assert_eq!(seq.k(), 2);
            seq.verify(&alg).unwrap();
        }
    }

    #[test]
    fn day_terms_on_lattices_have_k_3() {
        for alg in [corpus::two_chain(), corpus::diamond()] {
            let seq = find_day_terms(&alg, 4, 20_000).expect("found");
            seq.verify(&alg).unwrap();
            assert_eq!(seq.k(), 3, "minimal chain on distributive lattices");
        }
    }

    #[test]
    fn day_terms_absent_on_set_algebra() {
        assert!(find_day_terms(&corpus::two_element_set(), 6, 10_000).is_none());
    }

    #[test]
    fn shifting_lemma_holds_on_modular_corpus() {
        for alg in [corpus::z(4), corpus::s3(), corpus::two_chain(), corpus::diamond()] {
            let lat = all_congruences(&alg, 64).unwrap();
            let rep = shifting_lemma_check(&alg, &lat);
            assert!(rep.holds, "{}", alg.name);
            assert!(rep.triples_checked > 0);
        }
    }

    #[test]
    fn shifting_lemma_holds_on_two_element_set() {
        // partitions of a two-element set form a modular (even distributive)
        // lattice, so the implication cannot fail yet
        let alg = corpus::two_element_set();
        let lat = all_congruences(&alg, 64).unwrap();
        assert!(shifting_lemma_check(&alg, &lat).holds);
    }

    #[test]
    fn shifting_lemma_fails_on_four_element_set() {
        // partitions of four points are the first non-modular partition
        // lattice, and an operation-free algebra has all of them
        let alg = FiniteAlgebra::new("set4", 4, vec![]).unwrap();
        let lat = all_congruences(&alg, 64).unwrap();
        let rep = shifting_lemma_check(&alg, &lat);
        assert!(!rep.holds);
        let (_, [x, y, _, _]) = rep.witness.unwrap();
        assert_ne!(x, y);
    }
}
