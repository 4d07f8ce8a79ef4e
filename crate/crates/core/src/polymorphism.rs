//! Operations compatible with a cube relation, and arity-bounded slices of
//! the greatest such clone.
//!
//! An operation preserves a relation when applying it vertexwise to any
//! tuple of members yields a member. The full clone of a relation is
//! infinite in arity, so everything here works at a fixed arity bound; the
//! reports state which properties were certified at that bound.

use std::collections::HashSet;

use crate::algebra::{Element, FiniteAlgebra, OperationTable};
use crate::commutator::tc_commutator;
use crate::congruence::Congruence;
use crate::cube::CubeShape;
use crate::day::find_day_terms;
use crate::error::{Error, Result};
use crate::relation::{check_theta_inputs, delta, pack_cube, Budget, CubeRelation};
use crate::term::term_table;

/// All operation tables of one arity preserving a fixed relation, in
/// lexicographic order of their flattened tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolymorphismSet {
    arity: usize,
    size: usize,
    tables: Vec<Vec<Element>>,
}

impl PolymorphismSet {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn carrier_size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn tables(&self) -> &[Vec<Element>] {
        &self.tables
    }

    pub fn contains_table(&self, table: &[Element]) -> bool {
        self.tables.binary_search_by(|t| t.as_slice().cmp(table)).is_ok()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("arity {}\nsize {}\n", self.arity, self.size);
        for t in &self.tables {
            let row: Vec<String> = t.iter().map(|e| e.0.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Outcome of one direct preservation check.
#[derive(Debug, Clone)]
pub struct PreservationReport {
    pub holds: bool,
    /// On failure: the member tuple whose image escapes the relation, and
    /// that image.
    pub witness: Option<(Vec<Vec<Element>>, Vec<Element>)>,
}

fn cell_index(args: &[Element], size: usize) -> usize {
    args.iter().rev().fold(0, |acc, e| acc * size + e.0)
}

/// Check directly whether one table preserves the relation, scanning all
/// tuples of members. The scan has `|R|^arity` steps, so `tuple_cap`
/// bounds it; a full relation is preserved by every operation and is
/// accepted without scanning.
pub fn preserves(
    rel: &CubeRelation,
    table: &[Element],
    arity: usize,
    tuple_cap: u64,
) -> Result<PreservationReport> {
    let size = rel.carrier_size();
    let expected = size.pow(arity as u32);
    if table.len() != expected {
        return Err(Error::ArityMismatch {
            op: "polymorphism candidate".into(),
            expected,
            got: table.len(),
        });
    }
    if let Some(e) = table.iter().find(|e| e.0 >= size) {
        return Err(Error::ElementRange { element: e.0, size });
    }
    if rel.is_full() {
        return Ok(PreservationReport {
            holds: true,
            witness: None,
        });
    }
    let members = rel.members_sorted();
    let mut total: u64 = 1;
    for _ in 0..arity {
        total = total.saturating_mul(members.len() as u64);
        if total > tuple_cap {
            return Err(Error::ResourceCap {
                what: "preservation tuples",
                reached: total as usize,
                cap: tuple_cap as usize,
            });
        }
    }
    let nv = rel.shape().vertex_count();
    let mut picks = vec![0usize; arity];
    let mut args = vec![Element(0); arity];
    let mut image = vec![Element(0); nv];
    loop {
        for v in 0..nv {
            for (slot, &pick) in picks.iter().enumerate() {
                args[slot] = members[pick][v];
            }
            image[v] = table[cell_index(&args, size)];
        }
        if !rel.contains(&image)? {
            let tuple: Vec<Vec<Element>> = picks.iter().map(|&p| members[p].clone()).collect();
            return Ok(PreservationReport {
                holds: false,
                witness: Some((tuple, image)),
            });
        }
        let mut i = 0;
        while i < arity {
            picks[i] += 1;
            if picks[i] < members.len() {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
        if i == arity {
            break;
        }
    }
    Ok(PreservationReport {
        holds: true,
        witness: None,
    })
}

/// Enumerate every operation table of the given arity that preserves the
/// relation. Tables are built cell by cell in lexicographic order; each
/// vertexwise constraint is checked as soon as its last cell receives a
/// value, which prunes the search. Errors out when more than `cap` tables
/// exist or the constraint extraction would exceed the budget.
pub fn polymorphisms(
    rel: &CubeRelation,
    arity: usize,
    cap: usize,
    budget: &Budget,
) -> Result<PolymorphismSet> {
    if arity == 0 {
        return Err(Error::Precondition(
            "polymorphism enumeration needs arity at least 1".into(),
        ));
    }
    let size = rel.carrier_size();
    let cell_count = size.pow(arity as u32);
    let members = rel.members_sorted();
    let nv = rel.shape().vertex_count();

    let mut total: u64 = 1;
    for _ in 0..arity {
        total = total.saturating_mul(members.len() as u64);
        if total > budget.max_members as u64 {
            return Err(Error::ResourceCap {
                what: "constraint tuples",
                reached: total as usize,
                cap: budget.max_members,
            });
        }
    }

    // Distinct vertexwise cell patterns; many member tuples induce the
    // same one.
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut by_last: Vec<Vec<Vec<u32>>> = vec![Vec::new(); cell_count];
    if !members.is_empty() {
        let mut picks = vec![0usize; arity];
        let mut args = vec![Element(0); arity];
        loop {
            let mut pattern = Vec::with_capacity(nv);
            for v in 0..nv {
                for (slot, &pick) in picks.iter().enumerate() {
                    args[slot] = members[pick][v];
                }
                pattern.push(cell_index(&args, size) as u32);
            }
            if !seen.contains(&pattern) {
                let last = *pattern.iter().max().unwrap() as usize;
                seen.insert(pattern.clone());
                by_last[last].push(pattern);
            }
            let mut i = 0;
            while i < arity {
                picks[i] += 1;
                if picks[i] < members.len() {
                    break;
                }
                picks[i] = 0;
                i += 1;
            }
            if i == arity {
                break;
            }
        }
    }
    drop(seen);

    let mut tables: Vec<Vec<Element>> = Vec::new();
    let mut assignment = vec![0usize; cell_count];
    let mut labels = vec![Element(0); nv];
    dfs(
        rel,
        &by_last,
        &mut assignment,
        0,
        cell_count,
        size,
        cap,
        &mut labels,
        &mut tables,
    )?;
    Ok(PolymorphismSet {
        arity,
        size,
        tables,
    })
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    rel: &CubeRelation,
    by_last: &[Vec<Vec<u32>>],
    assignment: &mut [usize],
    cell: usize,
    cell_count: usize,
    size: usize,
    cap: usize,
    labels: &mut [Element],
    out: &mut Vec<Vec<Element>>,
) -> Result<()> {
    if cell == cell_count {
        if out.len() == cap {
            return Err(Error::ResourceCap {
                what: "polymorphism tables",
                reached: cap + 1,
                cap,
            });
        }
        out.push(assignment.iter().map(|&a| Element(a)).collect());
        return Ok(());
    }
    'labels: for label in 0..size {
        assignment[cell] = label;
        for pattern in &by_last[cell] {
            for (v, &c) in pattern.iter().enumerate() {
                labels[v] = Element(assignment[c as usize]);
            }
            if !rel.contains_code(pack_cube(labels)) {
                continue 'labels;
            }
        }
        dfs(
            rel, by_last, assignment, cell + 1, cell_count, size, cap, labels, out,
        )?;
    }
    Ok(())
}

/// Two algebras on one universe, compared through a shared family of
/// congruences: do they have the same higher commutators exactly when
/// they have the same top-dimension relation?
#[derive(Debug, Clone)]
pub struct SharedDeltaReport {
    pub commutators_agree: bool,
    pub deltas_agree: bool,
}

impl SharedDeltaReport {
    pub fn biconditional(&self) -> bool {
        self.commutators_agree == self.deltas_agree
    }
}

fn subsets_of_size_at_least_two(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0usize..(1 << n) {
        if mask.count_ones() >= 2 {
            out.push((0..n).filter(|i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

/// Evaluate both sides of the shared-commutator/shared-relation
/// equivalence for two algebras on the same universe. Hypotheses checked
/// here: equal universes, the first algebra's Day terms induce the same
/// tables on both (by operation name), and every input congruence is a
/// congruence of both algebras.
pub fn check_shared_delta(
    a: &FiniteAlgebra,
    b: &FiniteAlgebra,
    thetas: &[Congruence],
    options_depth: usize,
    options_count: usize,
    budget: &Budget,
) -> Result<SharedDeltaReport> {
    if a.size() != b.size() {
        return Err(Error::HypothesisUnmet(format!(
            "universes differ: {} vs {}",
            a.size(),
            b.size()
        )));
    }
    let day = find_day_terms(a, options_depth, options_count).ok_or_else(|| {
        Error::HypothesisUnmet("the first algebra has no Day terms within the caps".into())
    })?;
    for term in &day.terms {
        let on_a = term_table(a, term, 4)?;
        let on_b = term_table(b, term, 4).map_err(|_| {
            Error::HypothesisUnmet(
                "a Day term of the first algebra does not evaluate on the second".into(),
            )
        })?;
        if on_a != on_b {
            return Err(Error::HypothesisUnmet(
                "the algebras disagree on a Day term table".into(),
            ));
        }
    }
    let shape = CubeShape::first(thetas.len());
    check_theta_inputs(a, &shape, thetas)?;
    for theta in thetas {
        if !theta.is_congruence(b) {
            return Err(Error::HypothesisUnmet(
                "an input congruence is not compatible with the second algebra".into(),
            ));
        }
    }
    let n = thetas.len();
    let mut commutators_agree = true;
    for t in subsets_of_size_at_least_two(n) {
        let sub: Vec<Congruence> = t.iter().map(|&i| thetas[i].clone()).collect();
        let on_a = tc_commutator(a, &sub, budget)?;
        let on_b = tc_commutator(b, &sub, budget)?;
        if on_a != on_b {
            commutators_agree = false;
            break;
        }
    }
    let da = delta(a, &shape, thetas, budget)?;
    let db = delta(b, &shape, thetas, budget)?;
    let deltas_agree = da.codes_sorted() == db.codes_sorted();
    Ok(SharedDeltaReport {
        commutators_agree,
        deltas_agree,
    })
}

/// The arity-bounded slice of the greatest clone compatible with a
/// higher congruence, with the certified properties of that slice.
#[derive(Debug, Clone)]
pub struct CloneSliceReport {
    /// One entry per arity from 1 to the bound.
    pub sets: Vec<PolymorphismSet>,
    /// Every basic operation of arity within the bound appears; nullary
    /// operations are checked as preservation directly.
    pub basic_ops_included: bool,
    /// Day term tables preserve the relation; `None` when the scan was
    /// out of budget at arity 4.
    pub day_terms_included: Option<bool>,
    /// Every table in the slice is compatible with every input
    /// congruence.
    pub thetas_preserved: bool,
    /// The algebra whose operations are exactly the slice tables
    /// regenerates the relation byte for byte.
    pub delta_reproduced: bool,
    /// All commutators of subfamilies agree between the base algebra and
    /// the slice-generated algebra.
    pub commutators_agree: bool,
}

impl CloneSliceReport {
    pub fn all_hold(&self) -> bool {
        self.basic_ops_included
            && self.day_terms_included.unwrap_or(true)
            && self.thetas_preserved
            && self.delta_reproduced
            && self.commutators_agree
    }
}

/// Compute the polymorphism slice of the top-dimension relation of
/// `thetas` up to `arity_bound`, then certify the slice properties: basic
/// operations included, Day terms included (budget permitting), input
/// congruences preserved, relation regenerated, commutators agreeing.
pub fn greatest_clone_slice(
    alg: &FiniteAlgebra,
    thetas: &[Congruence],
    arity_bound: usize,
    table_cap: usize,
    tuple_cap: u64,
    budget: &Budget,
) -> Result<CloneSliceReport> {
    let n = thetas.len();
    let shape = CubeShape::first(n);
    check_theta_inputs(alg, &shape, thetas)?;
    let rel = delta(alg, &shape, thetas, budget)?;

    let mut sets = Vec::new();
    for arity in 1..=arity_bound {
        sets.push(polymorphisms(&rel, arity, table_cap, budget)?);
    }

    let mut basic_ops_included = true;
    for op in alg.ops() {
        if op.arity > arity_bound {
            continue;
        }
        if op.arity == 0 {
            if !preserves(&rel, &op.table, 0, tuple_cap)?.holds {
                basic_ops_included = false;
            }
            continue;
        }
        if !sets[op.arity - 1].contains_table(&op.table) {
            basic_ops_included = false;
        }
    }

    let mut day_terms_included = None;
    if let Some(day) = find_day_terms(alg, 3, 4096) {
        let mut all = true;
        let mut feasible = true;
        for term in &day.terms {
            let table = term_table(alg, term, 4)?;
            match preserves(&rel, &table, 4, tuple_cap) {
                Ok(rep) => all &= rep.holds,
                Err(Error::ResourceCap { .. }) => {
                    feasible = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if feasible {
            day_terms_included = Some(all);
        }
    }

    let mut thetas_preserved = true;
    'outer: for set in &sets {
        let arity = set.arity();
        for table in set.tables() {
            for theta in thetas {
                if !congruence_compatible(table, arity, alg.size(), theta) {
                    thetas_preserved = false;
                    break 'outer;
                }
            }
        }
    }

    let mut delta_reproduced = false;
    let mut commutators_agree = false;
    if thetas_preserved {
        let mut ops = Vec::new();
        for set in &sets {
            for (i, table) in set.tables().iter().enumerate() {
                ops.push(OperationTable::new(
                    format!("p{}_{}", set.arity(), i),
                    set.arity(),
                    table.clone(),
                ));
            }
        }
        let slice_alg = FiniteAlgebra::new("slice", alg.size(), ops)?;
        let slice_rel = delta(&slice_alg, &shape, thetas, budget)?;
        delta_reproduced = slice_rel.codes_sorted() == rel.codes_sorted();
        commutators_agree = true;
        for t in subsets_of_size_at_least_two(n) {
            let sub: Vec<Congruence> = t.iter().map(|&i| thetas[i].clone()).collect();
            let on_a = tc_commutator(alg, &sub, budget)?;
            let on_s = tc_commutator(&slice_alg, &sub, budget)?;
            if on_a != on_s {
                commutators_agree = false;
                break;
            }
        }
    }

    Ok(CloneSliceReport {
        sets,
        basic_ops_included,
        day_terms_included,
        thetas_preserved,
        delta_reproduced,
        commutators_agree,
    })
}

fn congruence_compatible(
    table: &[Element],
    arity: usize,
    size: usize,
    theta: &Congruence,
) -> bool {
    // walk pairs of cells that are coordinatewise related
    let mut left = vec![0usize; arity];
    loop {
        let mut right = left.clone();
        loop {
            if left
                .iter()
                .zip(&right)
                .all(|(&a, &b)| theta.related(Element(a), Element(b)))
            {
                let li = left.iter().rev().fold(0, |acc, &a| acc * size + a);
                let ri = right.iter().rev().fold(0, |acc, &a| acc * size + a);
                if !theta.related(table[li], table[ri]) {
                    return false;
                }
            }
            if !advance(&mut right, size) {
                break;
            }
        }
        if !advance(&mut left, size) {
            break;
        }
    }
    true
}

fn advance(args: &mut [usize], size: usize) -> bool {
    for a in args.iter_mut() {
        *a += 1;
        if *a < size {
            return true;
        }
        *a = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn full_pair(size: usize) -> [Congruence; 2] {
        [Congruence::full(size), Congruence::full(size)]
    }

    #[test]
    fn every_unary_map_preserves_the_even_weight_squares() {
        let alg = corpus::z(2);
        let thetas = full_pair(2);
        let rel = delta(&alg, &CubeShape::first(2), &thetas, &Budget::default()).unwrap();
        let set = polymorphisms(&rel, 1, 100, &Budget::default()).unwrap();
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn binary_polymorphisms_of_even_weight_squares_are_the_affine_maps() {
        let alg = corpus::z(2);
        let thetas = full_pair(2);
        let rel = delta(&alg, &CubeShape::first(2), &thetas, &Budget::default()).unwrap();
        let set = polymorphisms(&rel, 2, 100, &Budget::default()).unwrap();
        // tables a + b + c, a + b + c + 1, and the six with a coefficient
        // zeroed: all f(x,y) = ux + vy + w
        assert_eq!(set.len(), 8);
        for table in set.tables() {
            // affine means f(x,y) + f(x,0) + f(0,y) + f(0,0) = 0
            for x in 0..2usize {
                for y in 0..2usize {
                    let f = |a: usize, b: usize| table[a + 2 * b].0;
                    assert_eq!(f(x, y) ^ f(x, 0) ^ f(0, y) ^ f(0, 0), 0);
                }
            }
        }
    }

    #[test]
    fn enumeration_matches_the_direct_check() {
        let alg = corpus::z(2);
        let thetas = full_pair(2);
        let rel = delta(&alg, &CubeShape::first(2), &thetas, &Budget::default()).unwrap();
        let set = polymorphisms(&rel, 2, 100, &Budget::default()).unwrap();
        let mut count = 0;
        for t in 0..16usize {
            let table: Vec<Element> = (0..4).map(|i| Element(t >> i & 1)).collect();
            let rep = preserves(&rel, &table, 2, 1 << 20).unwrap();
            if rep.holds {
                count += 1;
                assert!(set.contains_table(&table));
            } else {
                assert!(!set.contains_table(&table));
                let (tuple, image) = rep.witness.unwrap();
                assert_eq!(tuple.len(), 2);
                assert!(!rel.contains(&image).unwrap());
            }
        }
        assert_eq!(count, set.len());
    }

    #[test]
    fn full_relation_is_preserved_without_scanning() {
        let alg = corpus::diamond();
        let thetas = full_pair(4);
        let rel = delta(&alg, &CubeShape::first(2), &thetas, &Budget::default()).unwrap();
        assert!(rel.is_full());
        let table: Vec<Element> = (0..16).map(|i| Element(i % 4)).collect();
        // tuple cap of 1 would reject any honest scan of this relation
        let rep = preserves(&rel, &table, 2, 1).unwrap();
        assert!(rep.holds);
    }

    #[test]
    fn enumeration_cap_is_an_error() {
        let alg = corpus::z(2);
        let thetas = full_pair(2);
        let rel = delta(&alg, &CubeShape::first(2), &thetas, &Budget::default()).unwrap();
        assert!(matches!(
            polymorphisms(&rel, 2, 3, &Budget::default()),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn composition_of_slice_members_stays_inside() {
        let alg = corpus::z(2);
        let thetas = full_pair(2);
        let rel = delta(&alg, &CubeShape::first(2), &thetas, &Budget::default()).unwrap();
        let set = polymorphisms(&rel, 2, 100, &Budget::default()).unwrap();
        for f in set.tables() {
            for g in set.tables() {
                for h in set.tables() {
                    // f(g(x, y), h(x, y))
                    let mut composed = Vec::with_capacity(4);
                    for y in 0..2usize {
                        for x in 0..2usize {
                            let gv = g[x + 2 * y].0;
                            let hv = h[x + 2 * y].0;
                            composed.push(f[gv + 2 * hv]);
                        }
                    }
                    assert!(set.contains_table(&composed));
                }
            }
        }
    }

    #[test]
    fn cyclic_group_slice_reproduces_its_relation() {
        let alg = corpus::z(4);
        let thetas = full_pair(4);
        let report =
            greatest_clone_slice(&alg, &thetas, 2, 4096, 1 << 26, &Budget::default()).unwrap();
        assert!(report.basic_ops_included);
        assert_eq!(report.day_terms_included, Some(true));
        assert!(report.thetas_preserved);
        assert!(report.delta_reproduced);
        assert!(report.commutators_agree);
        // unary maps x -> ux + v, binary maps ux + vy + w
        assert_eq!(report.sets[0].len(), 16);
        assert_eq!(report.sets[1].len(), 64);
    }

    #[test]
    fn shared_relation_iff_shared_commutators_on_group_extensions() {
        let alg = corpus::z(4);
        let mut ops = alg.ops().to_vec();
        ops.push(OperationTable::new(
            "neg",
            1,
            (0..4).map(|x| Element((4 - x) % 4)).collect(),
        ));
        let extended = FiniteAlgebra::new("z4neg", 4, ops).unwrap();
        let thetas = full_pair(4);
        let report = check_shared_delta(
            &alg,
            &extended,
            &thetas,
            3,
            4096,
            &Budget::default(),
        )
        .unwrap();
        assert!(report.biconditional());
        assert!(report.commutators_agree);
        assert!(report.deltas_agree);
    }

    #[test]
    fn shared_delta_rejects_mismatched_universes() {
        let a = corpus::z(4);
        let b = corpus::z(2);
        let thetas = full_pair(4);
        assert!(matches!(
            check_shared_delta(&a, &b, &thetas, 3, 4096, &Budget::default()),
            Err(Error::HypothesisUnmet(_))
        ));
    }
}
