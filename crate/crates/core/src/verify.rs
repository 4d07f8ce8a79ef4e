//! Whole-claim verification sweeps.
//!
//! Each check runs one verifiable claim against a single algebra,
//! sweeping dimensions, congruence tuples, and members within the
//! configured bounds. A check has three honest outcomes: the claim held
//! everywhere it was tested, a concrete witness falsified it, or the
//! claim's hypotheses are not met on this algebra (for example, no Day
//! terms exist). Resource exhaustion is reported as an error, never as a
//! pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Element, FiniteAlgebra, OperationTable};
use crate::commutator::{centrality_closure, commutator_membership, has_centrality, tc_commutator};
use crate::congruence::{all_congruences, Congruence};
use crate::cube::{self, CubeShape};
use crate::day::{find_day_terms, DaySequence};
use crate::error::{Error, Result};
use crate::kiss::{delta_membership, delta_shift, find_kiss2, rect, KissSearchOptions, KissTower};
use crate::polymorphism::{check_shared_delta, greatest_clone_slice};
use crate::relation::{
    delta, delta_via_split, directional_compose, generate_m, promote_almost_congruence,
    transitive_closure, Budget, CubeRelation,
};

/// Result of one verification check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// The claim held on every instance swept; the string summarizes the
    /// coverage.
    Pass(String),
    /// A concrete counterexample; the string names it.
    Falsified(String),
    /// The claim's hypotheses do not hold on this algebra.
    HypothesisUnmet(String),
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Pass(_) => "pass",
            Outcome::Falsified(_) => "falsified",
            Outcome::HypothesisUnmet(_) => "hypothesis-unmet",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            Outcome::Pass(s) | Outcome::Falsified(s) | Outcome::HypothesisUnmet(s) => s,
        }
    }
}

/// Bounds and reproducibility knobs shared by all checks.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Highest cube dimension swept (checks needing dimension 3 raise it
    /// locally).
    pub max_dim: usize,
    /// Qualifying samples required in budgeted completion sweeps.
    pub sample_budget: usize,
    /// Sweeps over the full label space switch to sampling above this
    /// many cubes.
    pub exhaustive_cap: usize,
    /// Seed for every sampled sweep.
    pub seed: u64,
    /// Relation size caps.
    pub budget: Budget,
    /// Term search depth cap.
    pub term_depth: usize,
    /// Term search enumeration cap.
    pub term_count: usize,
    /// Congruence lattice cap.
    pub max_congruences: usize,
    /// Operation-closure rechecks are skipped on relations with more
    /// members than this (skips are counted in the summary).
    pub closure_check_cap: usize,
    /// Member cap for per-member rotation-path sweeps.
    pub path_sweep_cap: usize,
    /// Polymorphism enumeration cap per arity.
    pub table_cap: usize,
    /// Tuple cap for direct preservation scans.
    pub tuple_cap: u64,
    /// Arity bound for clone slices.
    pub arity_bound: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            max_dim: 2,
            sample_budget: 10_000,
            exhaustive_cap: 4096,
            seed: 1729,
            budget: Budget::default(),
            term_depth: 3,
            term_count: 4096,
            max_congruences: 1 << 10,
            closure_check_cap: 8192,
            path_sweep_cap: 4096,
            table_cap: 4096,
            tuple_cap: 1 << 26,
            arity_bound: 2,
        }
    }
}

/// Identifiers accepted by [`run_check`], in canonical order.
pub const CHECK_IDS: &[&str] = &[
    "2.2", "2.3", "2.5", "2.7", "2.8", "2.9", "2.10", "2.11", "3.2", "3.3", "3.5", "4.1", "4.2",
    "4.3", "4.4",
];

/// Run one check by id. Hypothesis failures surfaced as errors by the
/// underlying operations are folded into the hypothesis-unmet outcome.
pub fn run_check(id: &str, alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let run = match id {
        "2.2" => check_rotation_laws,
        "2.3" => check_centrality_directions,
        "2.5" => check_compose_properties,
        "2.7" => check_commutators_coincide,
        "2.8" => check_nested_inequality,
        "2.9" => check_single_pass_closure,
        "2.10" => check_promotion,
        "2.11" => check_split_recursion,
        "3.2" => check_square_completion,
        "3.3" => check_corner_bridge,
        "3.5" => check_cube_completion,
        "4.1" => check_top_shift,
        "4.2" => check_membership_criterion,
        "4.3" => check_shared_relation_pairs,
        "4.4" => check_clone_slice,
        _ => {
            return Err(Error::Precondition(format!(
                "unknown check id `{id}`; known ids: {}",
                CHECK_IDS.join(", ")
            )))
        }
    };
    match run(alg, opts) {
        Err(Error::HypothesisUnmet(reason)) => Ok(Outcome::HypothesisUnmet(reason)),
        other => other,
    }
}

fn day_terms_or_unmet(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<DaySequence> {
    find_day_terms(alg, opts.term_depth, opts.term_count).ok_or_else(|| {
        Error::HypothesisUnmet(format!(
            "no Day terms found on `{}` within depth {} / count {}",
            alg.name, opts.term_depth, opts.term_count
        ))
    })
}

fn tower_or_unmet(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<KissTower> {
    let search = KissSearchOptions {
        depth_cap: opts.term_depth.max(4),
        count_cap: opts.term_count,
        congruence_cap: opts.max_congruences,
    };
    match find_kiss2(alg, &search, &opts.budget)? {
        Some(q) => Ok(KissTower::new(q)),
        None => Err(Error::HypothesisUnmet(format!(
            "no completion term found on `{}` within the search caps",
            alg.name
        ))),
    }
}

fn lattice(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Vec<Congruence>> {
    all_congruences(alg, opts.max_congruences)
}

/// All index tuples of length `n` over `0..count`, in odometer order
/// (first slot fastest).
fn index_tuples(count: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        out.push(cur.clone());
        let mut i = 0;
        while i < n {
            cur[i] += 1;
            if cur[i] < count {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    out
}

fn pick(cons: &[Congruence], idxs: &[usize]) -> Vec<Congruence> {
    idxs.iter().map(|&i| cons[i].clone()).collect()
}

fn tuple_text(idxs: &[usize], cons: &[Congruence]) -> String {
    let parts: Vec<String> = idxs.iter().map(|&i| cons[i].to_text()).collect();
    parts.join(" ; ")
}

fn lower_deltas(
    alg: &FiniteAlgebra,
    shape: &CubeShape,
    thetas: &[Congruence],
    budget: &Budget,
) -> Result<Vec<CubeRelation>> {
    let mut out = Vec::with_capacity(shape.dim());
    for (i, &dir) in shape.dirs().iter().enumerate() {
        let rest: Vec<Congruence> = thetas
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, t)| t.clone())
            .collect();
        out.push(delta(alg, &shape.without(dir), &rest, budget)?);
    }
    Ok(out)
}

fn qualifies(
    shape: &CubeShape,
    labels: &[Element],
    lowers: &[CubeRelation],
) -> Result<bool> {
    for (i, &dir) in shape.dirs().iter().enumerate() {
        for side in 0..2 {
            let f = cube::face(shape, labels, dir, side)?;
            if !lowers[i].contains(&f)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn advance_labels(labels: &mut [usize], size: usize) -> bool {
    for l in labels.iter_mut() {
        *l += 1;
        if *l < size {
            return true;
        }
        *l = 0;
    }
    false
}

/// Rotations of members stay members and satisfy the boundary laws: the
/// chain starts at one reflection, ends at the composite of two, agrees
/// with the start on the low side of the first direction, and consecutive
/// rotations agree on the parity-determined region. Iterated rotations
/// along a path stay members and flatten the cross-section lines at bases
/// that are low somewhere before the path end.
fn check_rotation_laws(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let day = day_terms_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let k = day.k();
    let mut members_checked = 0u64;
    let mut rotations = 0u64;
    let mut paths = 0u64;
    for n in 2..=opts.max_dim.max(2) {
        let shape = CubeShape::first(n);
        for idxs in index_tuples(cons.len(), n) {
            let thetas = pick(&cons, &idxs);
            let m = generate_m(alg, &shape, &thetas, &opts.budget)?;
            let d = transitive_closure(&m, &opts.budget)?;
            for (tag, rel) in [("generated", &m), ("closed", &d)] {
                let members = rel.members_sorted();
                let scanned = members.len().min(opts.path_sweep_cap);
                for gamma in &members[..scanned] {
                    members_checked += 1;
                    for &i in shape.dirs() {
                        let ibit = 1usize << shape.pos(i)?;
                        for &j in shape.dirs() {
                            if i == j {
                                continue;
                            }
                            let jbit = 1usize << shape.pos(j)?;
                            let refl_j умny = 0;
                            let _ = refl_j умny;
                            let start = cube::refl(&shape, gamma, j, 1)?;
                            let finish =
                                cube::refl(&shape, &cube::refl(&shape, gamma, i, 0)?, j, 1)?;
                            let mut prev: Option<Vec<Element>> = None;
                            for e in 0..=k {
                                let rot = cube::shift_rotation(&day, &shape, gamma, e, i, j)?;
                                rotations += 1;
                                if !rel.contains(&rot)? {
                                    return Ok(Outcome::Falsified(format!(
                                        "rotation {e} at ({i},{j}) of {gamma:?} leaves the {tag} relation for tuple [{}]",
                                        tuple_text(&idxs, &cons)
                                    )));
                                }
                                if e == 0 && rot != start {
                                    return Ok(Outcome::Falsified(format!(
                                        "rotation 0 at ({i},{j}) of {gamma:?} differs from the high-{j} reflection"
                                    )));
                                }
                                if e == k && rot != finish {
                                    return Ok(Outcome::Falsified(format!(
                                        "rotation {k} at ({i},{j}) of {gamma:?} differs from the composed reflections"
                                    )));
                                }
                                for (b, &v) in rot.iter().enumerate() {
                                    if b & ibit == 0 && v != gamma[b | jbit] {
                                        return Ok(Outcome::Falsified(format!(
                                            "rotation {e} at ({i},{j}) of {gamma:?} moves the low-{i} side"
                                        )));
                                    }
                                }
                                if let Some(p) = &prev {
                                    let elo = e - 1;
                                    for b in 0..rot.len() {
                                        let in_region = if elo % 2 == 0 {
                                            b & jbit != 0
                                        } else {
                                            b & ibit == 0
                                        };
                                        if in_region && p[b] != rot[b] {
                                            return Ok(Outcome::Falsified(format!(
                                                "rotations {elo} and {e} at ({i},{j}) of {gamma:?} disagree on the linked region"
                                            )));
                                        }
                                    }
                                }
                                prev = Some(rot);
                            }
                        }
                    }
                    // iterated rotations along every chain-index path
                    for plen in 1..n {
                        for path_idx in index_tuples(k + 1, plen) {
                            let rotated = cube::rotate_along_path(&day, &shape, gamma, &path_idx)?;
                            paths += 1;
                            if !rel.contains(&rotated)? {
                                return Ok(Outcome::Falsified(format!(
                                    "path {path_idx:?} of {gamma:?} leaves the {tag} relation"
                                )));
                            }
                            let dir = shape.dirs()[plen];
                            let low_mask = (1usize << plen) - 1;
                            for line in cube::lines(&shape, &rotated, dir)? {
                                if line.base & low_mask != low_mask && line.low != line.high {
                                    return Ok(Outcome::Falsified(format!(
                                        "path {path_idx:?} of {gamma:?} leaves a non-constant line at base {}",
                                        line.base
                                    )));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Outcome::Pass(format!(
        "{members_checked} members, {rotations} rotations, {paths} paths"
    )))
}

/// Centrality does not depend on the direction it is tested in, and the
/// commutator value does not depend on the order of its arguments.
fn check_centrality_directions(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let _day = day_terms_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let mut instances = 0u64;
    for n in 2..=opts.max_dim.max(2) {
        let shape = CubeShape::first(n);
        let tuples = index_tuples(cons.len(), n);
        let mut values: Vec<Congruence> = Vec::with_capacity(tuples.len());
        for idxs in &tuples {
            let thetas = pick(&cons, idxs);
            let m = generate_m(alg, &shape, &thetas, &opts.budget)?;
            let d = transitive_closure(&m, &opts.budget)?;
            for rel in [&m, &d] {
                for delta_c in &cons {
                    let mut flags = Vec::with_capacity(n);
                    for &dir in shape.dirs() {
                        flags.push(has_centrality(rel, delta_c, dir)?.holds);
                    }
                    instances += 1;
                    if flags.iter().any(|&f| f != flags[0]) {
                        return Ok(Outcome::Falsified(format!(
                            "centrality of {} depends on direction ({flags:?}) for tuple [{}]",
                            delta_c.to_text(),
                            tuple_text(idxs, &cons)
                        )));
                    }
                }
            }
            values.push(centrality_closure(alg, &m)?);
        }
        // order of arguments does not change the commutator
        for (t, idxs) in tuples.iter().enumerate() {
            let mut sorted = idxs.clone();
            sorted.sort_unstable();
            let canon = tuples.iter().position(|u| *u == sorted).unwrap();
            if values[t] != values[canon] {
                return Ok(Outcome::Falsified(format!(
                    "commutator of [{}] differs from its sorted arrangement",
                    tuple_text(idxs, &cons)
                )));
            }
        }
    }
    Ok(Outcome::Pass(format!("{instances} centrality instances")))
}

/// One directional closure pass keeps every tolerance property: the
/// output contains the input, is again a tolerance, is idempotent, and
/// keeps centrality in the untouched directions.
fn check_compose_properties(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let _day = day_terms_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let mut composes = 0u64;
    let mut already_closed = 0u64;
    let mut closure_skips = 0u64;
    for n in 2..=opts.max_dim.max(2) {
        let shape = CubeShape::first(n);
        for idxs in index_tuples(cons.len(), n) {
            let thetas = pick(&cons, &idxs);
            let m = generate_m(alg, &shape, &thetas, &opts.budget)?;
            let m_codes = m.codes_sorted();
            for &dir in shape.dirs() {
                let c1 = directional_compose(&m, dir, &opts.budget)?;
                composes += 1;
                let c1_codes = c1.codes_sorted();
                let mut grew = false;
                {
                    let set: std::collections::HashSet<&u128> = c1_codes.iter().collect();
                    for code in &m_codes {
                        if !set.contains(code) {
                            return Ok(Outcome::Falsified(format!(
                                "composition in direction {dir} dropped a member for tuple [{}]",
                                tuple_text(&idxs, &cons)
                            )));
                        }
                    }
                    grew = c1_codes.len() != m_codes.len();
                }
                if !grew {
                    already_closed += 1;
                    continue;
                }
                if !c1.is_reflexive() || !c1.is_symmetric() {
                    return Ok(Outcome::Falsified(format!(
                        "composition in direction {dir} broke reflexivity or symmetry for tuple [{}]",
                        tuple_text(&idxs, &cons)
                    )));
                }
                if c1.len() <= opts.closure_check_cap {
                    if !c1.is_closed_under_ops(alg)? {
                        return Ok(Outcome::Falsified(format!(
                            "composition in direction {dir} broke operation closure for tuple [{}]",
                            tuple_text(&idxs, &cons)
                        )));
                    }
                } else {
                    closure_skips += 1;
                }
                let c2 = directional_compose(&c1, dir, &opts.budget)?;
                if c2.codes_sorted() != c1_codes {
                    return Ok(Outcome::Falsified(format!(
                        "composition in direction {dir} is not idempotent for tuple [{}]",
                        tuple_text(&idxs, &cons)
                    )));
                }
                for delta_c in &cons {
                    for &other in shape.dirs() {
                        if other == dir {
                            continue;
                        }
                        if has_centrality(&m, delta_c, other)?.holds
                            && !has_centrality(&c1, delta_c, other)?.holds
                        {
                            return Ok(Outcome::Falsified(format!(
                                "composition in direction {dir} lost centrality of {} in direction {other}",
                                delta_c.to_text()
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(Outcome::Pass(format!(
        "{composes} compositions ({already_closed} already closed, {closure_skips} oversized closure checks skipped)"
    )))
}

/// The two commutators coincide, and a pair is commutator-related exactly
/// when its almost constant cube lies in the closed relation.
fn check_commutators_coincide(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let _day = day_terms_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let mut tuples_checked = 0u64;
    for n in 2..=opts.max_dim.max(2) {
        let shape = CubeShape::first(n);
        for idxs in index_tuples(cons.len(), n) {
            let thetas = pick(&cons, &idxs);
            let m = generate_m(alg, &shape, &thetas, &opts.budget)?;
            let from_m = centrality_closure(alg, &m)?;
            let d = transitive_closure(&m, &opts.budget)?;
            let from_d = centrality_closure(alg, &d)?;
            tuples_checked += 1;
            if from_m != from_d {
                return Ok(Outcome::Falsified(format!(
                    "term-condition value {} differs from closed value {} for tuple [{}]",
                    from_m.to_text(),
                    from_d.to_text(),
                    tuple_text(&idxs, &cons)
                )));
            }
            for x in alg.elements() {
                for y in alg.elements() {
                    if commutator_membership(&d, x, y)? != from_m.related(x, y) {
                        return Ok(Outcome::Falsified(format!(
                            "membership of ({}, {}) disagrees with the commutator blocks for tuple [{}]",
                            x.0,
                            y.0,
                            tuple_text(&idxs, &cons)
                        )));
                    }
                }
            }
        }
    }
    Ok(Outcome::Pass(format!("{tuples_checked} tuples")))
}

/// Splitting off a suffix into a nested commutator can only shrink the
/// value: [t0.. , [tj..]] is below the flat commutator of the whole
/// tuple.
fn check_nested_inequality(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let _day = day_terms_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let mut comparisons = 0u64;
    let top = opts.max_dim.max(3);
    for n in 3..=top {
        for idxs in index_tuples(cons.len(), n) {
            let thetas = pick(&cons, &idxs);
            let flat = tc_commutator(alg, &thetas, &opts.budget)?;
            for j in 1..=n - 2 {
                let inner = tc_commutator(alg, &thetas[j..], &opts.budget)?;
                let mut outer_args: Vec<Congruence> = thetas[..j].to_vec();
                outer_args.push(inner);
                let nested = tc_commutator(alg, &outer_args, &opts.budget)?;
                comparisons += 1;
                if !nested.leq(&flat) {
                    return Ok(Outcome::Falsified(format!(
                        "nested value {} is not below flat value {} at split {j} for tuple [{}]",
                        nested.to_text(),
                        flat.to_text(),
                        tuple_text(&idxs, &cons)
                    )));
                }
            }
        }
    }
    Ok(Outcome::Pass(format!("{comparisons} split comparisons")))
}

/// At dimension 2, one composition pass in either direction already
/// yields the full closure, and that closure is a higher congruence.
fn check_single_pass_closure(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let _day = day_terms_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let shape = CubeShape::first(2);
    let mut passes = 0u64;
    for idxs in index_tuples(cons.len(), 2) {
        let thetas = pick(&cons, &idxs);
        let m = generate_m(alg, &shape, &thetas, &opts.budget)?;
        let closed = transitive_closure(&m, &opts.budget)?;
        for &dir in shape.dirs() {
            let single = directional_compose(&m, dir, &opts.budget)?;
            passes += 1;
            if single.codes_sorted() != closed.codes_sorted() {
                return Ok(Outcome::Falsified(format!(
                    "one pass in direction {dir} missed {} members for tuple [{}]",
                    closed.len() - single.len(),
                    tuple_text(&idxs, &cons)
                )));
            }
            if !single.is_congruence(alg)? {
                return Ok(Outcome::Falsified(format!(
                    "one pass in direction {dir} is not a higher congruence for tuple [{}]",
                    tuple_text(&idxs, &cons)
                )));
            }
        }
    }
    Ok(Outcome::Pass(format!("{passes} single passes")))
}

/// A tolerance whose faces are lower congruences and which is transitive
/// somewhere is transitive everywhere. Candidates that do not meet the
/// premises are counted, not failed.
fn check_promotion(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let _day = day_terms_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let mut confirmed = 0u64;
    let mut skipped = 0u64;
    for n in 2..=opts.max_dim.max(2) {
        let shape = CubeShape::first(n);
        for idxs in index_tuples(cons.len(), n) {
            let thetas = pick(&cons, &idxs);
            let m = generate_m(alg, &shape, &thetas, &opts.budget)?;
            let closed = transitive_closure(&m, &opts.budget)?;
            let one_pass = directional_compose(&m, shape.dirs()[0], &opts.budget)?;
            for (tag, cand) in [("closure", &closed), ("single pass", &one_pass)] {
                match promote_almost_congruence(alg, cand) {
                    Ok(true) => confirmed += 1,
                    Ok(false) => {
                        return Ok(Outcome::Falsified(format!(
                            "{tag} candidate met the premises but is not a higher congruence for tuple [{}]",
                            tuple_text(&idxs, &cons)
                        )))
                    }
                    Err(Error::HypothesisUnmet(_)) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(Outcome::Pass(format!(
        "{confirmed} promotions confirmed, {skipped} candidates out of premise"
    )))
}

/// Splitting the directions into an inner and outer stage and gluing the
/// results reproduces the directly computed relation, byte for byte, for
/// every choice of split.
fn check_split_recursion(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let _day = day_terms_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let mut compared = 0u64;
    let mut skipped = 0u64;
    for n in 2..=opts.max_dim.max(2) {
        let shape = CubeShape::first(n);
        for idxs in index_tuples(cons.len(), n) {
            let thetas = pick(&cons, &idxs);
            let direct = delta(alg, &shape, &thetas, &opts.budget)?;
            let direct_text = direct.to_text(&[]);
            for q_mask in 0usize..(1 << n) {
                let q_dirs: Vec<usize> = shape
                    .dirs()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| q_mask >> i & 1 == 1)
                    .map(|(_, &d)| d)
                    .collect();
                let q = CubeShape::new(q_dirs);
                match delta_via_split(alg, &shape, &thetas, &q, &opts.budget) {
                    Ok(split) => {
                        compared += 1;
                        if split.to_text(&[]) != direct_text {
                            return Ok(Outcome::Falsified(format!(
                                "split over {:?} differs from the direct relation for tuple [{}]",
                                q.dirs(),
                                tuple_text(&idxs, &cons)
                            )));
                        }
                    }
                    Err(Error::ResourceCap { .. }) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(Outcome::Pass(format!(
        "{compared} splits byte-identical, {skipped} over resource caps"
    )))
}

/// Completing any square of the rectangle relation lands in the closed
/// relation of the same pair.
fn check_square_completion(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let tower = tower_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let shape = CubeShape::first(2);
    let mut completions = 0u64;
    for alpha in &cons {
        for beta in &cons {
            let squares = rect(alg, alpha, beta)?;
            let closed = delta(alg, &shape, &[alpha.clone(), beta.clone()], &opts.budget)?;
            for labels in squares.members_sorted() {
                let completed = tower.complete_cube(&labels)?;
                completions += 1;
                if !closed.contains(&completed)? {
                    return Ok(Outcome::Falsified(format!(
                        "completion of {labels:?} escapes the relation of ({}, {})",
                        alpha.to_text(),
                        beta.to_text()
                    )));
                }
            }
        }
    }
    Ok(Outcome::Pass(format!("{completions} completions")))
}

/// A rectangle and a closed-relation square sharing their left corners
/// assemble, through the completion term, into another closed-relation
/// square.
fn check_corner_bridge(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let tower = tower_or_unmet(alg, opts)?;
    let q2 = tower.base();
    let cons = lattice(alg, opts)?;
    let shape = CubeShape::first(2);
    let mut assemblies = 0u64;
    for alpha in &cons {
        for beta in &cons {
            let squares = rect(alg, alpha, beta)?;
            let closed = delta(alg, &shape, &[alpha.clone(), beta.clone()], &opts.budget)?;
            let mut by_left: std::collections::BTreeMap<(usize, usize), Vec<Vec<Element>>> =
                std::collections::BTreeMap::new();
            for m in closed.members_sorted() {
                by_left.entry((m[0].0, m[2].0)).or_default().push(m);
            }
            for labels in squares.members_sorted() {
                let (x, y, u, v) = (labels[0], labels[1], labels[2], labels[3]);
                if let Some(partners) = by_left.get(&(x.0, u.0)) {
                    for other in partners {
                        let (yp, vp) = (other[1], other[3]);
                        let w = q2.apply(yp, y, vp, v);
                        assemblies += 1;
                        if !closed.contains(&[x, y, u, w])? {
                            return Ok(Outcome::Falsified(format!(
                                "assembled square ({}, {}, {}, {}) escapes the relation of ({}, {})",
                                x.0,
                                y.0,
                                u.0,
                                w.0,
                                alpha.to_text(),
                                beta.to_text()
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(Outcome::Pass(format!("{assemblies} assembled squares")))
}

/// Any cube whose faces all lie in the lower relations completes, via the
/// stacked term, into the full relation. Exhaustive below the cap,
/// seeded sampling above it.
fn check_cube_completion(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let tower = tower_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let size = alg.size();
    let mut exhaustive_cubes = 0u64;
    let mut sampled_cubes = 0u64;
    for n in 2..=opts.max_dim.max(2) {
        let shape = CubeShape::first(n);
        let nv = shape.vertex_count();
        let total = (size as u128).checked_pow(nv as u32);
        for idxs in index_tuples(cons.len(), n) {
            let thetas = pick(&cons, &idxs);
            let lowers = lower_deltas(alg, &shape, &thetas, &opts.budget)?;
            let closed = delta(alg, &shape, &thetas, &opts.budget)?;
            let exhaustive = matches!(total, Some(t) if t <= opts.exhaustive_cap as u128);
            if exhaustive {
                let mut labels = vec![0usize; nv];
                loop {
                    let elems: Vec<Element> = labels.iter().map(|&l| Element(l)).collect();
                    if qualifies(&shape, &elems, &lowers)? {
                        exhaustive_cubes += 1;
                        let completed = tower.complete_cube(&elems)?;
                        if !closed.contains(&completed)? {
                            return Ok(Outcome::Falsified(format!(
                                "completion of {labels:?} escapes the relation for tuple [{}]",
                                tuple_text(&idxs, &cons)
                            )));
                        }
                    }
                    if !advance_labels(&mut labels, size) {
                        break;
                    }
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                let mut found = 0usize;
                let mut attempts = 0u64;
                let attempt_cap = (opts.sample_budget as u64).saturating_mul(200);
                let mut elems = vec![Element(0); nv];
                while found < opts.sample_budget {
                    if attempts >= attempt_cap {
                        return Err(Error::ResourceCap {
                            what: "qualifying cube samples",
                            reached: found,
                            cap: opts.sample_budget,
                        });
                    }
                    attempts += 1;
                    for e in elems.iter_mut() {
                        *e = Element(rng.random_range(0..size));
                    }
                    if !qualifies(&shape, &elems, &lowers)? {
                        continue;
                    }
                    found += 1;
                    sampled_cubes += 1;
                    let completed = tower.complete_cube(&elems)?;
                    if !closed.contains(&completed)? {
                        return Ok(Outcome::Falsified(format!(
                            "completion of {:?} escapes the relation for tuple [{}]",
                            elems.iter().map(|e| e.0).collect::<Vec<_>>(),
                            tuple_text(&idxs, &cons)
                        )));
                    }
                }
            }
        }
    }
    Ok(Outcome::Pass(format!(
        "{exhaustive_cubes} qualifying cubes exhaustively, {sampled_cubes} sampled"
    )))
}

/// Replacing the top label of a member by anything commutator-related to
/// it stays inside the relation.
fn check_top_shift(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let _day = day_terms_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let mut shifts = 0u64;
    for n in 2..=opts.max_dim.max(2) {
        let shape = CubeShape::first(n);
        for idxs in index_tuples(cons.len(), n) {
            let thetas = pick(&cons, &idxs);
            let closed = delta(alg, &shape, &thetas, &opts.budget)?;
            for labels in closed.members_sorted() {
                let top = labels[labels.len() - 1];
                for q in alg.elements() {
                    let probe = cube::commutator_cube(&shape, top, q);
                    if !closed.contains(&probe)? {
                        continue;
                    }
                    let out = delta_shift(&closed, &labels, q)?;
                    shifts += 1;
                    if !out.in_relation {
                        return Ok(Outcome::Falsified(format!(
                            "shifting the top of {:?} to {} leaves the relation for tuple [{}]",
                            labels.iter().map(|e| e.0).collect::<Vec<_>>(),
                            q.0,
                            tuple_text(&idxs, &cons)
                        )));
                    }
                }
            }
        }
    }
    Ok(Outcome::Pass(format!("{shifts} top shifts")))
}

/// The face-plus-completion criterion decides membership exactly as
/// direct enumeration does, on every cube of the label space.
fn check_membership_criterion(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let tower = tower_or_unmet(alg, opts)?;
    let cons = lattice(alg, opts)?;
    let size = alg.size();
    let mut agreed = 0u64;
    let mut api_checks = 0u64;
    let sweep_cap: u128 = 1 << 17;
    for n in 2..=opts.max_dim.max(2) {
        let shape = CubeShape::first(n);
        let nv = shape.vertex_count();
        let total = (size as u128).checked_pow(nv as u32);
        for idxs in index_tuples(cons.len(), n) {
            let thetas = pick(&cons, &idxs);
            let lowers = lower_deltas(alg, &shape, &thetas, &opts.budget)?;
            let comm = tc_commutator(alg, &thetas, &opts.budget)?;
            let closed = delta(alg, &shape, &thetas, &opts.budget)?;
            let exhaustive = matches!(total, Some(t) if t <= sweep_cap);
            let mut verdict = |elems: &[Element]| -> Result<Option<String>> {
                let faces = qualifies(&shape, elems, &lowers)?;
                let pivot = if faces {
                    let completion = tower.eval(n, elems)?;
                    comm.related(elems[nv - 1], completion)
                } else {
                    false
                };
                let criterion = faces && pivot;
                let direct = closed.contains(elems)?;
                if criterion != direct {
                    return Ok(Some(format!(
                        "criterion {criterion} vs direct {direct} on {:?} for tuple [{}]",
                        elems.iter().map(|e| e.0).collect::<Vec<_>>(),
                        tuple_text(&idxs, &cons)
                    )));
                }
                Ok(None)
            };
            if exhaustive {
                let mut labels = vec![0usize; nv];
                loop {
                    let elems: Vec<Element> = labels.iter().map(|&l| Element(l)).collect();
                    if let Some(witness) = verdict(&elems)? {
                        return Ok(Outcome::Falsified(witness));
                    }
                    agreed += 1;
                    if !advance_labels(&mut labels, size) {
                        break;
                    }
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                let mut elems = vec![Element(0); nv];
                for _ in 0..opts.sample_budget {
                    for e in elems.iter_mut() {
                        *e = Element(rng.random_range(0..size));
                    }
                    if let Some(witness) = verdict(&elems)? {
                        return Ok(Outcome::Falsified(witness));
                    }
                    agreed += 1;
                }
            }
            if n == 2 {
                // exercise the one-shot entry point on a prefix of cubes
                let mut labels = vec![0usize; nv];
                for _ in 0..16romina.min(16) {
                    let elems: Vec<Element> = labels.iter().map(|&l| Element(l)).collect();
                    let report = delta_membership(alg, &thetas, &elems, &tower, &opts.budget)?;
                    let direct = closed.contains(&elems)?;
                    api_checks += 1;
                    if report.criterion() != direct || report.direct != direct {
                        return Ok(Outcome::Falsified(format!(
                            "one-shot membership disagrees on {:?} for tuple [{}]",
                            labels,
                            tuple_text(&idxs, &cons)
                        )));
                    }
                    if !advance_labels(&mut labels, size) {
                        break;
                    }
                }
            }
        }
    }
    Ok(Outcome::Pass(format!(
        "{agreed} cubes agreed, {api_checks} one-shot checks"
    )))
}

fn companion_algebra(alg: &FiniteAlgebra) -> Option<FiniteAlgebra> {
    match alg.name.as_str() {
        "z4" => {
            let mut ops = alg.ops().to_vec();
            ops.push(OperationTable::new(
                "neg",
                1,
                (0..4).map(|x| Element((4 - x) % 4)).collect(),
            ));
            FiniteAlgebra::new("z4x", 4, ops).ok()
        }
        "z2z2" => {
            let mut ops = alg.ops().to_vec();
            ops.push(OperationTable::new(
                "swap",
                1,
                vec![Element(0), Element(2), Element(1), Element(3)],
            ));
            FiniteAlgebra::new("z2z2x", 4, ops).ok()
        }
        _ => None,
    }
}

/// Two algebras sharing universe, Day terms, and congruences have the
/// same commutators exactly when they have the same closed relations.
/// The partner is the algebra extended by a known compatible operation
/// when one is configured, otherwise the algebra itself.
fn check_shared_relation_pairs(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let partner = companion_algebra(alg);
    let partner_ref = partner.as_ref().unwrap_or(alg);
    let cons = lattice(alg, opts)?;
    let mut pairs_checked = 0u64;
    for idxs in index_tuples(cons.len(), 2) {
        let thetas = pick(&cons, &idxs);
        let report = check_shared_delta(
            alg,
            partner_ref,
            &thetas,
            opts.term_depth,
            opts.term_count,
            &opts.budget,
        )?;
        pairs_checked += 1;
        if !report.biconditional() {
            return Ok(Outcome::Falsified(format!(
                "commutators {} relations {} for tuple [{}] against `{}`",
                if report.commutators_agree { "agree" } else { "differ" },
                if report.deltas_agree { "agree" } else { "differ" },
                tuple_text(&idxs, &cons),
                partner_ref.name
            )));
        }
    }
    let partner_note = match &partner {
        Some(p) => format!("against extension `{}`", p.name),
        None => "against itself".into(),
    };
    Ok(Outcome::Pass(format!(
        "{pairs_checked} tuples {partner_note}"
    )))
}

/// The arity-bounded polymorphism slice of the closed relation contains
/// the basic operations and Day terms, preserves the inputs, and
/// regenerates both the relation and the commutators.
fn check_clone_slice(alg: &FiniteAlgebra, opts: &VerifyOptions) -> Result<Outcome> {
    let full = Congruence::full(alg.size());
    let thetas = [full.clone(), full];
    let report = greatest_clone_slice(
        alg,
        &thetas,
        opts.arity_bound,
        opts.table_cap,
        opts.tuple_cap,
        &opts.budget,
    )?;
    let sizes: Vec<String> = report
        .sets
        .iter()
        .map(|s| format!("arity {}: {}", s.arity(), s.len()))
        .collect();
    if !report.all_hold() {
        return Ok(Outcome::Falsified(format!(
            "basic ops {} / day terms {} / inputs preserved {} / relation reproduced {} / commutators agree {}",
            report.basic_ops_included,
            match report.day_terms_included {
                Some(b) => b.to_string(),
                None => "skipped".into(),
            },
            report.thetas_preserved,
            report.delta_reproduced,
            report.commutators_agree
        )));
    }
    Ok(Outcome::Pass(format!(
        "slice sizes [{}], day terms {}",
        sizes.join(", "),
        match report.day_terms_included {
            Some(_) => "verified",
            None => "not scanned",
        }
    )))
}
