//! Centrality of cube relations and the two commutators it defines: one
//! from the generated relation, one from the full higher congruence.
//!
//! A relation is central over a partition, in a direction, when every
//! member whose supporting lines in that direction are related also has
//! its pivot line related. The commutator of a congruence tuple is the
//! least congruence making the associated cube relation central.

use crate::algebra::{Element, FiniteAlgebra};
use crate::congruence::{cg, Congruence};
use crate::cube::{self, CubeShape};
use crate::error::{Error, Result};
use crate::relation::{byte, delta, generate_m, Budget, CubeRelation};

/// Result of one centrality test.
#[derive(Debug, Clone)]
pub struct CentralityReport {
    pub direction: usize,
    pub holds: bool,
    /// A member whose supporting lines are all related but whose pivot
    /// line is not.
    pub witness: Option<Vec<Element>>,
}

/// Test whether `rel` is central over `delta` in `direction`.
pub fn has_centrality(
    rel: &CubeRelation,
    delta: &Congruence,
    direction: usize,
) -> Result<CentralityReport> {
    if rel.carrier_size() != delta.size() {
        return Err(Error::CarrierMismatch {
            expected: rel.carrier_size(),
            got: delta.size(),
        });
    }
    if rel.shape().dim() < 2 {
        return Err(Error::DimensionTooSmall {
            what: "centrality",
            min: 2,
            got: rel.shape().dim(),
        });
    }
    let p = rel.shape().pos(direction)?;
    let nv = rel.shape().vertex_count();
    for code in rel.codes_sorted() {
        if let Some((lo, hi)) = forced_pivot(code, p, nv, delta) {
            if !delta.related(lo, hi) {
                return Ok(CentralityReport {
                    direction,
                    holds: false,
                    witness: Some(crate::relation::unpack_cube(code, nv)),
                });
            }
        }
    }
    Ok(CentralityReport {
        direction,
        holds: true,
        witness: None,
    })
}

/// If every supporting line of the member in the direction at position
/// `p` is related, the pivot pair it forces; otherwise nothing.
#[inline]
fn forced_pivot(code: u128, p: usize, nv: usize, delta: &Congruence) -> Option<(Element, Element)> {
    let half = nv / 2;
    for base in 0..half - 1 {
        let lo = Element(byte(code, cube::insert_bit(base, p, 0)));
        let hi = Element(byte(code, cube::insert_bit(base, p, 1)));
        if !delta.related(lo, hi) {
            return None;
        }
    }
    let lo = Element(byte(code, cube::insert_bit(half - 1, p, 0)));
    let hi = Element(byte(code, cube::insert_bit(half - 1, p, 1)));
    Some((lo, hi))
}

/// The least congruence over which `rel` is central in every direction:
/// repeatedly add every forced pivot pair and re-close until stable.
pub fn centrality_closure(alg: &FiniteAlgebra, rel: &CubeRelation) -> Result<Congruence> {
    if rel.carrier_size() != alg.size() {
        return Err(Error::CarrierMismatch {
            expected: alg.size(),
            got: rel.carrier_size(),
        });
    }
    if rel.shape().dim() < 2 {
        return Err(Error::DimensionTooSmall {
            what: "centrality closure",
            min: 2,
            got: rel.shape().dim(),
        });
    }
    let codes = rel.codes_sorted();
    let nv = rel.shape().vertex_count();
    let mut current = Congruence::equality(alg.size());
    loop {
        let mut forced: Vec<(Element, Element)> = Vec::new();
        for p in 0..rel.shape().dim() {
            for &code in &codes {
                if let Some((lo, hi)) = forced_pivot(code, p, nv, &current) {
                    if !current.related(lo, hi) {
                        forced.push((lo, hi));
                    }
                }
            }
        }
        if forced.is_empty() {
            return Ok(current);
        }
        forced.extend(current.pairs());
        current = cg(alg, &forced);
    }
}

fn check_commutator_args(alg: &FiniteAlgebra, thetas: &[Congruence]) -> Result<()> {
    if thetas.len() < 2 {
        return Err(Error::DimensionTooSmall {
            what: "commutator",
            min: 2,
            got: thetas.len(),
        });
    }
    for t in thetas {
        if t.size() != alg.size() {
            return Err(Error::CarrierMismatch {
                expected: alg.size(),
                got: t.size(),
            });
        }
    }
    Ok(())
}

/// The term-condition commutator of a congruence tuple: the centrality
/// closure of the generated cube relation.
pub fn tc_commutator(
    alg: &FiniteAlgebra,
    thetas: &[Congruence],
    budget: &Budget,
) -> Result<Congruence> {
    check_commutator_args(alg, thetas)?;
    let shape = CubeShape::first(thetas.len());
    let m = generate_m(alg, &shape, thetas, budget)?;
    centrality_closure(alg, &m)
}

/// The commutator computed from the full higher congruence instead of the
/// generated relation. Never smaller than the term-condition commutator.
pub fn hypercommutator(
    alg: &FiniteAlgebra,
    thetas: &[Congruence],
    budget: &Budget,
) -> Result<Congruence> {
    check_commutator_args(alg, thetas)?;
    let shape = CubeShape::first(thetas.len());
    let d = delta(alg, &shape, thetas, budget)?;
    centrality_closure(alg, &d)
}

/// Membership of a pair in the commutator, read off the higher congruence:
/// the pair belongs exactly when the cube that is `x` everywhere except
/// `y` at the top vertex is a member.
pub fn commutator_membership(
    higher: &CubeRelation,
    x: Element,
    y: Element,
) -> Result<bool> {
    let probe = cube::commutator_cube(higher.shape(), x, y);
    higher.contains(&probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::all_congruences;
    use crate::corpus;

    fn full(alg: &FiniteAlgebra) -> Congruence {
        Congruence::full(alg.size())
    }

    fn eq(alg: &FiniteAlgebra) -> Congruence {
        Congruence::equality(alg.size())
    }

    #[test]
    fn abelian_groups_have_trivial_commutator() {
        for alg in [corpus::z(2), corpus::z(3), corpus::z(4), corpus::z2xz2()] {
            let c = tc_commutator(&alg, &[full(&alg), full(&alg)], &Budget::default()).unwrap();
            assert_eq!(c, eq(&alg), "{}", alg.name);
        }
    }

    #[test]
    fn symmetric_group_commutator_is_the_alternating_congruence() {
        let alg = corpus::s3();
        let c = tc_commutator(&alg, &[full(&alg), full(&alg)], &Budget::default()).unwrap();
        assert_eq!(c.to_text(), "0 4 5|1 2 3");
        // and it collapses one step further down
        let c2 = tc_commutator(&alg, &[c.clone(), c], &Budget::default()).unwrap();
        assert_eq!(c2, eq(&alg));
    }

    #[test]
    fn dihedral_commutator_is_the_center_partition() {
        let alg = corpus::d4();
        let c = tc_commutator(&alg, &[full(&alg), full(&alg)], &Budget::default()).unwrap();
        assert_eq!(c.to_text(), "0 2|1 3|4 6|5 7");
    }

    #[test]
    fn lattice_commutator_is_the_meet() {
        for alg in [corpus::two_chain(), corpus::diamond()] {
            let cons = all_congruences(&alg, 1 << 10).unwrap();
            for a in &cons {
                for b in &cons {
                    let c = tc_commutator(&alg, &[a.clone(), b.clone()], &Budget::default())
                        .unwrap();
                    assert_eq!(c, a.meet(b), "{}: [{}] [{}]", alg.name, a.to_text(), b.to_text());
                }
            }
        }
    }

    #[test]
    fn operation_free_pairs_never_interact() {
        let alg = corpus::two_element_set();
        let c = tc_commutator(&alg, &[full(&alg), full(&alg)], &Budget::default()).unwrap();
        assert_eq!(c, eq(&alg));
    }

    #[test]
    fn ternary_commutator_of_the_symmetric_group() {
        let alg = corpus::s3();
        let f = full(&alg);
        let c = tc_commutator(&alg, &[f.clone(), f.clone(), f], &Budget::default()).unwrap();
        // iterating the binary commutator gives the same partition here
        assert_eq!(c.to_text(), "0 4 5|1 2 3");
    }

    #[test]
    fn ternary_commutator_of_an_abelian_group_vanishes() {
        let alg = corpus::z(2);
        let f = full(&alg);
        let c = hypercommutator(&alg, &[f.clone(), f.clone(), f], &Budget::default()).unwrap();
        assert_eq!(c, eq(&alg));
    }

    #[test]
    fn commutator_below_meet_and_monotone() {
        let alg = corpus::d4();
        let cons = all_congruences(&alg, 1 << 10).unwrap();
        let f = full(&alg);
        let top = tc_commutator(&alg, &[f.clone(), f], &Budget::default()).unwrap();
        for a in &cons {
            for b in &cons {
                let c = tc_commutator(&alg, &[a.clone(), b.clone()], &Budget::default()).unwrap();
                assert!(c.leq(&a.meet(b)), "below the meet");
                assert!(c.leq(&top), "monotone toward the top pair");
            }
        }
    }

    #[test]
    fn membership_matches_the_closure_blocks() {
        let alg = corpus::s3();
        let f = full(&alg);
        let shape = CubeShape::first(2);
        let d = delta(&alg, &shape, &[f.clone(), f.clone()], &Budget::default()).unwrap();
        let c = hypercommutator(&alg, &[f.clone(), f], &Budget::default()).unwrap();
        for x in alg.elements() {
            for y in alg.elements() {
                assert_eq!(
                    commutator_membership(&d, x, y).unwrap(),
                    c.related(x, y),
                    "pair ({x}, {y})"
                );
            }
        }
    }

    #[test]
    fn centrality_witness_is_reported() {
        let alg = corpus::s3();
        let f = full(&alg);
        let shape = CubeShape::first(2);
        let m = generate_m(&alg, &shape, &[f.clone(), f], &Budget::default()).unwrap();
        let rep = has_centrality(&m, &Congruence::equality(alg.size()), 0).unwrap();
        assert!(!rep.holds);
        let w = rep.witness.unwrap();
        // the witness square has its supporting line equal and pivot unequal
        assert_eq!(w[0], w[1]);
        assert_ne!(w[2], w[3]);
    }
}
