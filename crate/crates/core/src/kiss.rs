//! Square completion terms and their towers.
//!
//! A completion term is a 4-ary term `q` with `q(x,x,y,y) = y = q(x,y,x,y)`
//! that moreover respects commutators: whenever two aligned squares differ
//! only in the top vertex, the two completions land in the same commutator
//! block. Stacking `q` on itself gives a completion term for every higher
//! dimension.

use std::collections::HashMap;

use crate::algebra::{Element, FiniteAlgebra};
use crate::commutator::tc_commutator;
use crate::congruence::{all_congruences, Congruence};
use crate::cube::{self, CubeShape};
use crate::error::{Error, Result};
use crate::relation::{Budget, CubeRelation};
use crate::term::{enumerate_term_operations, term_table, TermTree};

/// All squares whose direction-0 lines lie in `alpha` and direction-1
/// lines lie in `beta`.
pub fn rect(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Result<CubeRelation> {
    if alpha.size() != alg.size() || beta.size() != alg.size() {
        return Err(Error::CarrierMismatch {
            expected: alg.size(),
            got: alpha.size().max(beta.size()),
        });
    }
    let mut out = CubeRelation::new(CubeShape::first(2), alg.size())?;
    for a in alg.elements() {
        for b in alg.elements() {
            if !alpha.related(a, b) {
                continue;
            }
            for c in alg.elements() {
                if !beta.related(a, c) {
                    continue;
                }
                for d in alg.elements() {
                    if alpha.related(c, d) && beta.related(b, d) {
                        out.insert(&[a, b, c, d])?;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// A verified 4-ary completion term together with its value table.
#[derive(Debug, Clone)]
pub struct Kiss2 {
    term: TermTree,
    table: Vec<Element>,
    size: usize,
}

impl Kiss2 {
    pub fn term(&self) -> &TermTree {
        &self.term
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn apply(&self, a: Element, b: Element, c: Element, d: Element) -> Element {
        let s = self.size;
        self.table[a.0 + s * (b.0 + s * (c.0 + s * d.0))]
    }
}

fn passes_pattern_identities(table: &[Element], size: usize) -> bool {
    let idx = |a: usize, b: usize, c: usize, d: usize| a + size * (b + size * (c + size * d));
    for x in 0..size {
        for y in 0..size {
            if table[idx(x, x, y, y)] != Element(y) || table[idx(x, y, x, y)] != Element(y) {
                return false;
            }
        }
    }
    true
}

fn respects_commutators(
    table: &[Element],
    size: usize,
    contexts: &[(CubeRelation, Congruence)],
) -> bool {
    let idx = |a: usize, b: usize, c: usize, d: usize| a + size * (b + size * (c + size * d));
    for (squares, comm) in contexts {
        let mut by_prefix: HashMap<(usize, usize, usize), Vec<usize>> = HashMap::new();
        for m in squares.members_sorted() {
            by_prefix
                .entry((m[0].0, m[1].0, m[2].0))
                .or_default()
                .push(m[3].0);
        }
        for ((a, b, c), ds) in by_prefix {
            for (i, &d1) in ds.iter().enumerate() {
                let v1 = table[idx(a, b, c, d1)];
                for &d2 in &ds[i + 1..] {
                    let v2 = table[idx(a, b, c, d2)];
                    if !comm.related(v1, v2) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Bounds for the completion-term search.
#[derive(Debug, Clone)]
pub struct KissSearchOptions {
    pub depth_cap: usize,
    pub count_cap: usize,
    pub congruence_cap: usize,
}

impl Default for KissSearchOptions {
    fn default() -> Self {
        KissSearchOptions {
            depth_cap: 4,
            count_cap: 4096,
            congruence_cap: 1 << 10,
        }
    }
}

/// Search for a completion term: a found ternary difference term is tried
/// first, then the canonical 4-ary term enumeration. A candidate must
/// satisfy the pattern identities on the whole table and respect the
/// commutator of every congruence pair.
pub fn find_kiss2(
    alg: &FiniteAlgebra,
    options: &KissSearchOptions,
    budget: &Budget,
) -> Result<Option<Kiss2>> {
    let lattice = all_congruences(alg, options.congruence_cap)?;
    let mut contexts: Vec<(CubeRelation, Congruence)> = Vec::new();
    for alpha in &lattice {
        for beta in &lattice {
            let squares = rect(alg, alpha, beta)?;
            let comm = tc_commutator(alg, &[alpha.clone(), beta.clone()], budget)?;
            contexts.push((squares, comm));
        }
    }
    let accept = |term: TermTree, table: Vec<Element>| -> Option<Kiss2> {
        if passes_pattern_identities(&table, alg.size())
            && respects_commutators(&table, alg.size(), &contexts)
        {
            Some(Kiss2 {
                term,
                table,
                size: alg.size(),
            })
        } else {
            None
        }
    };

    if let Some(p) = crate::day::find_malcev_term(alg, options.depth_cap, options.count_cap) {
        let term = p.substitute(&[TermTree::var(2), TermTree::var(0), TermTree::var(1)]);
        let table = term_table(alg, &term, 4)?;
        if let Some(found) = accept(term, table) {
            return Ok(Some(found));
        }
    }
    let enumeration = enumerate_term_operations(alg, 4, options.depth_cap, options.count_cap);
    for cand in enumeration.terms {
        if let Some(found) = accept(cand.term, cand.table) {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Completion terms for every dimension at once, built by stacking the
/// 4-ary one. Values are computed recursively from the 4-ary table, so no
/// higher-arity table is ever materialized.
#[derive(Debug, Clone)]
pub struct KissTower {
    q2: Kiss2,
}

impl KissTower {
    pub fn new(q2: Kiss2) -> KissTower {
        KissTower { q2 }
    }

    pub fn base(&self) -> &Kiss2 {
        &self.q2
    }

    pub fn size(&self) -> usize {
        self.q2.size
    }

    pub fn arity(n: usize) -> usize {
        1 << n
    }

    /// Evaluate the dimension-`n` completion term on `2^n` arguments in
    /// colexicographic vertex order.
    pub fn eval(&self, n: usize, args: &[Element]) -> Result<Element> {
        if n < 2 {
            return Err(Error::DimensionTooSmall {
                what: "completion term",
                min: 2,
                got: n,
            });
        }
        if args.len() != 1 << n {
            return Err(Error::ArityMismatch {
                op: "completion term".into(),
                expected: 1 << n,
                got: args.len(),
            });
        }
        Ok(self.eval_unchecked(n, args))
    }

    fn eval_unchecked(&self, n: usize, args: &[Element]) -> Element {
        if n == 2 {
            return self.q2.apply(args[0], args[1], args[2], args[3]);
        }
        let h = args.len() / 2;
        let first = self.eval_unchecked(n - 1, &args[..h]);
        let second = self.eval_unchecked(n - 1, &args[h..]);
        self.q2.apply(first, args[h - 1], second, args[args.len() - 1])
    }

    /// The dimension-`n` completion term as a term tree over `2^n`
    /// variables.
    pub fn term(&self, n: usize) -> Result<TermTree> {
        if n < 2 {
            return Err(Error::DimensionTooSmall {
                what: "completion term",
                min: 2,
                got: n,
            });
        }
        if n == 2 {
            return Ok(self.q2.term.clone());
        }
        let prev = self.term(n - 1)?;
        let h = 1usize << (n - 1);
        let shifted = prev.substitute(
            &(0..h).map(|i| TermTree::var(h + i)).collect::<Vec<_>>(),
        );
        Ok(self.q2.term.substitute(&[
            prev,
            TermTree::var(h - 1),
            shifted,
            TermTree::var((1 << n) - 1),
        ]))
    }

    /// Replace the top label of a cube by the completion value of all its
    /// labels.
    pub fn complete_cube(&self, labels: &[Element]) -> Result<Vec<Element>> {
        let len = labels.len();
        if !len.is_power_of_two() || len < 4 {
            return Err(Error::Precondition(format!(
                "a cube has a power-of-two label count of at least 4, got {len}"
            )));
        }
        let n = len.trailing_zeros() as usize;
        let mut out = labels.to_vec();
        out[len - 1] = self.eval(n, labels)?;
        Ok(out)
    }
}

/// Result of shifting the top label of a member.
#[derive(Debug, Clone)]
pub struct ShiftOutcome {
    pub shifted: Vec<Element>,
    pub in_relation: bool,
}

/// Replace the top label of a member by `q`, given that the almost
/// constant cube carrying the old and new top labels is itself a member.
/// Reports whether the shifted cube is still a member; the caller is
/// responsible for the relation being a higher congruence.
pub fn delta_shift(rel: &CubeRelation, labels: &[Element], q: Element) -> Result<ShiftOutcome> {
    if !rel.contains(labels)? {
        return Err(Error::HypothesisUnmet("the cube is not a member".into()));
    }
    let top = labels.len() - 1;
    let probe = cube::commutator_cube(rel.shape(), labels[top], q);
    if !rel.contains(&probe)? {
        return Err(Error::HypothesisUnmet(
            "the top pair does not lie in the commutator part of the relation".into(),
        ));
    }
    let mut shifted = labels.to_vec();
    shifted[top] = q;
    let in_relation = rel.contains(&shifted)?;
    Ok(ShiftOutcome {
        shifted,
        in_relation,
    })
}

/// One membership test of the face-plus-pivot criterion against direct
/// membership in the higher congruence.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub faces_hold: bool,
    pub pivot_holds: bool,
    pub direct: bool,
}

impl MembershipReport {
    pub fn criterion(&self) -> bool {
        self.faces_hold && self.pivot_holds
    }
}

/// Decide membership of a cube via its faces and completion value: every
/// face must lie in the higher congruence one dimension down, and the top
/// label must be commutator-related to the completion of the cube.
pub fn delta_membership(
    alg: &FiniteAlgebra,
    thetas: &[Congruence],
    labels: &[Element],
    tower: &KissTower,
    budget: &Budget,
) -> Result<MembershipReport> {
    let n = thetas.len();
    if n < 2 {
        return Err(Error::DimensionTooSmall {
            what: "membership criterion",
            min: 2,
            got: n,
        });
    }
    let shape = CubeShape::first(n);
    if labels.len() != shape.vertex_count() {
        return Err(Error::CarrierMismatch {
            expected: shape.vertex_count(),
            got: labels.len(),
        });
    }
    let mut faces_hold = true;
    'dirs: for dir in 0..n {
        let sub_thetas: Vec<Congruence> = (0..n)
            .filter(|&j| j != dir)
            .map(|j| thetas[j].clone())
            .collect();
        let lower = crate::relation::delta(alg, &shape.without(dir), &sub_thetas, budget)?;
        for side in 0..2 {
            let f = cube::face(&shape, labels, dir, side)?;
            if !lower.contains(&f)? {
                faces_hold = false;
                break 'dirs;
            }
        }
    }
    let comm = tc_commutator(alg, thetas, budget)?;
    let completion = tower.eval(n, labels)?;
    let pivot_holds = comm.related(labels[labels.len() - 1], completion);
    let direct_rel = crate::relation::delta(alg, &shape, thetas, budget)?;
    let direct = direct_rel.contains(labels)?;
    Ok(MembershipReport {
        faces_hold,
        pivot_holds,
        direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::relation::delta;

    fn full(alg: &FiniteAlgebra) -> Congruence {
        Congruence::full(alg.size())
    }

    #[test]
    fn rect_of_full_pairs_is_everything() {
        let alg = corpus::z(4);
        let r = rect(&alg, &full(&alg), &full(&alg)).unwrap();
        assert_eq!(r.len(), 256);
    }

    #[test]
    fn rect_respects_both_directions() {
        let alg = corpus::z(4);
        let alpha = Congruence::parse("0 2|1 3", 4).unwrap();
        let r = rect(&alg, &alpha, &full(&alg)).unwrap();
        assert_eq!(r.len(), 64);
        for m in r.members_sorted() {
            assert!(alpha.related(m[0], m[1]));
            assert!(alpha.related(m[2], m[3]));
        }
    }

    #[test]
    fn cyclic_group_completion_is_the_difference_term() {
        let alg = corpus::z(4);
        let q = find_kiss2(&alg, &KissSearchOptions::default(), &Budget::default())
            .unwrap()
            .expect("a group has a completion term");
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let v = q.apply(Element(a), Element(b), Element(c), Element(d));
                        assert_eq!(v.0, (c + b + 4 - a) % 4, "top vertex is ignored");
                    }
                }
            }
        }
    }

    #[test]
    fn lattice_completion_is_the_top_projection() {
        let alg = corpus::two_chain();
        let q = find_kiss2(&alg, &KissSearchOptions::default(), &Budget::default())
            .unwrap()
            .expect("the two-element lattice has a completion term");
        assert_eq!(q.term().to_string(), "x3");
    }

    #[test]
    fn operation_free_algebra_has_no_completion_term() {
        let alg = corpus::two_element_set();
        let q = find_kiss2(&alg, &KissSearchOptions::default(), &Budget::default()).unwrap();
        assert!(q.is_none());
    }

    #[test]
    fn tower_recursion_matches_manual_stacking() {
        let alg = corpus::z(4);
        let q = find_kiss2(&alg, &KissSearchOptions::default(), &Budget::default())
            .unwrap()
            .unwrap();
        let tower = KissTower::new(q.clone());
        let args: Vec<Element> = [0, 3, 1, 2, 2, 0, 1, 3].iter().map(|&v| Element(v)).collect();
        let by_hand = q.apply(
            q.apply(args[0], args[1], args[2], args[3]),
            args[3],
            q.apply(args[4], args[5], args[6], args[7]),
            args[7],
        );
        assert_eq!(tower.eval(3, &args).unwrap(), by_hand);
    }

    #[test]
    fn tower_term_table_matches_recursive_evaluation() {
        let alg = corpus::z(2);
        let q = find_kiss2(&alg, &KissSearchOptions::default(), &Budget::default())
            .unwrap()
            .unwrap();
        let tower = KissTower::new(q);
        let t3 = tower.term(3).unwrap();
        let table = term_table(&alg, &t3, 8).unwrap();
        let mut args = vec![0usize; 8];
        let mut idx = 0;
        loop {
            let elems: Vec<Element> = args.iter().map(|&a| Element(a)).collect();
            assert_eq!(table[idx], tower.eval(3, &elems).unwrap());
            idx += 1;
            let mut i = 0;
            while i < 8 {
                args[i] += 1;
                if args[i] < 2 {
                    break;
                }
                args[i] = 0;
                i += 1;
            }
            if i == 8 {
                break;
            }
        }
    }

    #[test]
    fn completion_of_square_members_stays_in_the_relation() {
        let alg = corpus::z(4);
        let q = find_kiss2(&alg, &KissSearchOptions::default(), &Budget::default())
            .unwrap()
            .unwrap();
        let tower = KissTower::new(q);
        let shape = CubeShape::first(2);
        let thetas = [full(&alg), full(&alg)];
        let d = delta(&alg, &shape, &thetas, &Budget::default()).unwrap();
        let r = rect(&alg, &thetas[0], &thetas[1]).unwrap();
        for m in r.members_sorted() {
            let completed = tower.complete_cube(&m).unwrap();
            assert!(d.contains(&completed).unwrap());
        }
    }

    #[test]
    fn shift_preserves_membership_on_a_group() {
        let alg = corpus::z(4);
        let shape = CubeShape::first(2);
        let thetas = [full(&alg), full(&alg)];
        let d = delta(&alg, &shape, &thetas, &Budget::default()).unwrap();
        for m in d.members_sorted() {
            for q in alg.elements() {
                let probe = cube::commutator_cube(&shape, m[3], q);
                if !d.contains(&probe).unwrap() {
                    continue;
                }
                let out = delta_shift(&d, &m, q).unwrap();
                assert!(out.in_relation);
            }
        }
    }

    #[test]
    fn shift_demands_its_hypotheses() {
        let alg = corpus::z(4);
        let shape = CubeShape::first(2);
        let thetas = [Congruence::parse("0 2|1 3", 4).unwrap(), full(&alg)];
        let d = delta(&alg, &shape, &thetas, &Budget::default()).unwrap();
        let outside = [Element(0), Element(1), Element(0), Element(0)];
        assert!(matches!(
            delta_shift(&d, &outside, Element(0)),
            Err(Error::HypothesisUnmet(_))
        ));
    }

    #[test]
    fn membership_criterion_agrees_with_direct_membership() {
        let alg = corpus::z(4);
        let q = find_kiss2(&alg, &KissSearchOptions::default(), &Budget::default())
            .unwrap()
            .unwrap();
        let tower = KissTower::new(q);
        let thetas = [full(&alg), full(&alg)];
        let mut labels = vec![0usize; 4];
        loop {
            let elems: Vec<Element> = labels.iter().map(|&a| Element(a)).collect();
            let rep = delta_membership(&alg, &thetas, &elems, &tower, &Budget::default()).unwrap();
            assert_eq!(rep.criterion(), rep.direct, "cube {labels:?}");
            let mut i = 0;
            while i < 4 {
                labels[i] += 1;
                if labels[i] < 4 {
                    break;
                }
                labels[i] = 0;
                i += 1;
            }
            if i == 4 {
                break;
            }
        }
    }
}
