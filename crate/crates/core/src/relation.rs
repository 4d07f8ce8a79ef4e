//! Sets of labeled cubes over a finite carrier, and the closure operators
//! that build higher-dimensional congruences out of ordinary ones.
//!
//! Cubes are stored packed: one byte per vertex in a `u128`, vertex `v` at
//! bits `8v..8v+8`. Numeric order on packed codes is colexicographic order
//! on label vectors, so sorted code lists are canonical. The packing caps
//! the carrier at 256 elements and the dimension at 4.

use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

use crate::algebra::{make_derived_algebra, DerivedAlgebra, Element, FiniteAlgebra};
use crate::congruence::Congruence;
use crate::cube::{self, CubeShape};
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;
pub const MAX_CARRIER: usize = 256;

/// Packed codes already mix well positionally, so a single multiply-xor
/// round beats the default hasher by an order of magnitude in the closure
/// loops.
#[derive(Default)]
pub(crate) struct CodeHasher(u64);

impl Hasher for CodeHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x100_0000_01b3);
        }
    }
    #[inline]
    fn write_u128(&mut self, n: u128) {
        let mut z = (n as u64)
            .wrapping_add(((n >> 64) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
            .wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        self.0 = z ^ (z >> 31);
    }
}

pub(crate) type CodeSet = HashSet<u128, BuildHasherDefault<CodeHasher>>;
pub(crate) type CodeMap<V> = HashMap<u128, V, BuildHasherDefault<CodeHasher>>;

/// Size limits for relation computations.
#[derive(Debug, Clone)]
pub struct Budget {
    /// Largest member count any single relation may reach.
    pub max_members: usize,
    /// Largest carrier allowed for a derived algebra of cubes.
    pub max_derived_universe: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_members: 1 << 20,
            max_derived_universe: 4096,
        }
    }
}

pub(crate) fn pack_cube(labels: &[Element]) -> u128 {
    debug_assert!(labels.len() <= 16);
    let mut code = 0u128;
    for (v, e) in labels.iter().enumerate() {
        debug_assert!(e.0 < MAX_CARRIER);
        code |= (e.0 as u128) << (8 * v);
    }
    code
}

pub(crate) fn unpack_cube(code: u128, nv: usize) -> Vec<Element> {
    (0..nv)
        .map(|v| Element(((code >> (8 * v)) & 0xff) as usize))
        .collect()
}

#[inline]
pub(crate) fn byte(code: u128, v: usize) -> usize {
    ((code >> (8 * v)) & 0xff) as usize
}

fn refl_code(code: u128, p: usize, side: usize, nv: usize) -> u128 {
    let bit = 1usize << p;
    let mut out = 0u128;
    for b in 0..nv {
        let src = (b & !bit) | (side << p);
        out |= (byte(code, src) as u128) << (8 * b);
    }
    out
}

fn sym_code(code: u128, p: usize, nv: usize) -> u128 {
    let bit = 1usize << p;
    let mut out = 0u128;
    for b in 0..nv {
        out |= (byte(code, b ^ bit) as u128) << (8 * b);
    }
    out
}

fn face_code(code: u128, p: usize, side: usize, nv: usize) -> u128 {
    let mut out = 0u128;
    for b in 0..nv / 2 {
        let src = cube::insert_bit(b, p, side);
        out |= (byte(code, src) as u128) << (8 * b);
    }
    out
}

fn glue_code(lo: u128, hi: u128, p: usize, nv: usize) -> u128 {
    let bit = 1usize << p;
    let mut out = 0u128;
    for b in 0..nv {
        let reduced = cube::remove_bit(b, p);
        let lbl = if b & bit != 0 { byte(hi, reduced) } else { byte(lo, reduced) };
        out |= (lbl as u128) << (8 * b);
    }
    out
}

fn apply_op_code(table: &[Element], size: usize, arity: usize, args: &[u128], nv: usize) -> u128 {
    let mut out = 0u128;
    for v in 0..nv {
        let mut idx = 0usize;
        for a in (0..arity).rev() {
            idx = idx * size + byte(args[a], v);
        }
        out |= (table[idx].0 as u128) << (8 * v);
    }
    out
}

/// A set of cubes of one shape over a fixed carrier.
#[derive(Debug, Clone)]
pub struct CubeRelation {
    shape: CubeShape,
    size: usize,
    set: CodeSet,
}

impl PartialEq for CubeRelation {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.size == other.size && self.set == other.set
    }
}
impl Eq for CubeRelation {}

impl CubeRelation {
    pub fn new(shape: CubeShape, size: usize) -> Result<CubeRelation> {
        if shape.dim() > MAX_DIM {
            return Err(Error::ResourceCap {
                what: "cube dimension (packed representation)",
                reached: shape.dim(),
                cap: MAX_DIM,
            });
        }
        if size > MAX_CARRIER {
            return Err(Error::ResourceCap {
                what: "carrier size (packed representation)",
                reached: size,
                cap: MAX_CARRIER,
            });
        }
        if size == 0 {
            return Err(Error::Precondition("empty carrier".into()));
        }
        Ok(CubeRelation {
            shape,
            size,
            set: CodeSet::default(),
        })
    }

    pub fn shape(&self) -> &CubeShape {
        &self.shape
    }

    pub fn carrier_size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// True when every possible cube of this shape is a member.
    pub fn is_full(&self) -> bool {
        let total = (self.size as f64).powi(self.shape.vertex_count() as i32);
        total <= usize::MAX as f64 && self.set.len() == total as usize
    }

    fn check_labels(&self, labels: &[Element]) -> Result<()> {
        if labels.len() != self.shape.vertex_count() {
            return Err(Error::CarrierMismatch {
                expected: self.shape.vertex_count(),
                got: labels.len(),
            });
        }
        for e in labels {
            if e.0 >= self.size {
                return Err(Error::ElementRange {
                    element: e.0,
                    size: self.size,
                });
            }
        }
        Ok(())
    }

    pub fn insert(&mut self, labels: &[Element]) -> Result<bool> {
        self.check_labels(labels)?;
        Ok(self.set.insert(pack_cube(labels)))
    }

    pub(crate) fn insert_code(&mut self, code: u128) -> bool {
        self.set.insert(code)
    }

    pub fn contains(&self, labels: &[Element]) -> Result<bool> {
        self.check_labels(labels)?;
        Ok(self.set.contains(&pack_cube(labels)))
    }

    pub(crate) fn contains_code(&self, code: u128) -> bool {
        self.set.contains(&code)
    }

    pub(crate) fn iter_codes(&self) -> impl Iterator<Item = u128> + '_ {
        self.set.iter().copied()
    }

    pub fn codes_sorted(&self) -> Vec<u128> {
        let mut v: Vec<u128> = self.set.iter().copied().collect();
        v.sort_unstable();
        v
    }

    /// Members in colexicographic order of their label vectors.
    pub fn members_sorted(&self) -> Vec<Vec<Element>> {
        let nv = self.shape.vertex_count();
        self.codes_sorted()
            .into_iter()
            .map(|c| unpack_cube(c, nv))
            .collect()
    }

    /// The cubes `face(dir, side)` of all members, as a relation one
    /// dimension down.
    pub fn face_relation(&self, dir: usize, side: usize) -> Result<CubeRelation> {
        let p = self.shape.pos(dir)?;
        let nv = self.shape.vertex_count();
        let mut out = CubeRelation::new(self.shape.without(dir), self.size)?;
        for &c in &self.set {
            out.insert_code(face_code(c, p, side, nv));
        }
        Ok(out)
    }

    /// The pairs `(face(dir,0), face(dir,1))` of all members, as packed
    /// codes one dimension down.
    pub(crate) fn face_pair_codes(&self, dir: usize) -> Result<Vec<(u128, u128)>> {
        let p = self.shape.pos(dir)?;
        let nv = self.shape.vertex_count();
        let mut out: Vec<(u128, u128)> = self
            .set
            .iter()
            .map(|&c| (face_code(c, p, 0, nv), face_code(c, p, 1, nv)))
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn is_closed_under_ops(&self, alg: &FiniteAlgebra) -> Result<bool> {
        if alg.size() != self.size {
            return Err(Error::CarrierMismatch {
                expected: self.size,
                got: alg.size(),
            });
        }
        let nv = self.shape.vertex_count();
        let codes = self.codes_sorted();
        for op in alg.ops() {
            let r = op.arity;
            if r == 0 {
                let c = apply_op_code(&op.table, self.size, 0, &[], nv);
                if !self.set.contains(&c) {
                    return Ok(false);
                }
                continue;
            }
            let mut picks = vec![0usize; r];
            loop {
                let args: Vec<u128> = picks.iter().map(|&i| codes[i]).collect();
                let c = apply_op_code(&op.table, self.size, r, &args, nv);
                if !self.set.contains(&c) {
                    return Ok(false);
                }
                let mut a = 0;
                while a < r {
                    picks[a] += 1;
                    if picks[a] < codes.len() {
                        break;
                    }
                    picks[a] = 0;
                    a += 1;
                }
                if a == r {
                    break;
                }
            }
            if codes.is_empty() {
                break;
            }
        }
        Ok(true)
    }

    /// Closed under both reflections in every direction.
    pub fn is_reflexive(&self) -> bool {
        let nv = self.shape.vertex_count();
        for p in 0..self.shape.dim() {
            for side in 0..2 {
                for &c in &self.set {
                    if !self.set.contains(&refl_code(c, p, side, nv)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Closed under the face swap in every direction.
    pub fn is_symmetric(&self) -> bool {
        let nv = self.shape.vertex_count();
        for p in 0..self.shape.dim() {
            for &c in &self.set {
                if !self.set.contains(&sym_code(c, p, nv)) {
                    return false;
                }
            }
        }
        true
    }

    /// The face pairing in `dir` is transitive as a binary relation on
    /// cubes one dimension down.
    pub fn is_transitive_in(&self, dir: usize) -> Result<bool> {
        let pairs = self.face_pair_codes(dir)?;
        let pair_set: HashSet<(u128, u128)> = pairs.iter().copied().collect();
        let mut by_lo: HashMap<u128, Vec<u128>> = HashMap::new();
        for &(lo, hi) in &pairs {
            by_lo.entry(lo).or_default().push(hi);
        }
        for &(lo, mid) in &pairs {
            if let Some(his) = by_lo.get(&mid) {
                for &hi in his {
                    if !pair_set.contains(&(lo, hi)) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    pub fn is_tolerance(&self, alg: &FiniteAlgebra) -> Result<bool> {
        Ok(self.is_closed_under_ops(alg)? && self.is_reflexive() && self.is_symmetric())
    }

    pub fn is_congruence(&self, alg: &FiniteAlgebra) -> Result<bool> {
        if !self.is_tolerance(alg)? {
            return Ok(false);
        }
        for &dir in self.shape.dirs() {
            if !self.is_transitive_in(dir)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Canonical text form: header lines then one member per line,
    /// comma-separated labels in colexicographic vertex order, members
    /// sorted.
    pub fn to_text(&self, theta_names: &[String]) -> String {
        let mut out = String::new();
        out.push_str("shape");
        for d in self.shape.dirs() {
            out.push_str(&format!(" {d}"));
        }
        out.push('\n');
        out.push_str(&format!("size {}\n", self.size));
        if !theta_names.is_empty() {
            out.push_str("thetas");
            for n in theta_names {
                out.push_str(&format!(" {n}"));
            }
            out.push('\n');
        }
        for m in self.members_sorted() {
            let row: Vec<String> = m.iter().map(|e| e.0.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<(CubeRelation, Vec<String>)> {
        let mut shape: Option<CubeShape> = None;
        let mut size: Option<usize> = None;
        let mut names: Vec<String> = Vec::new();
        let mut members: Vec<(usize, Vec<Element>)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let mut fields = s.split_whitespace();
            let head = fields.next().unwrap();
            match head {
                "shape" => {
                    let dirs: Vec<usize> = fields
                        .map(|f| {
                            f.parse::<usize>().map_err(|_| Error::Parse {
                                line,
                                msg: format!("bad direction `{f}`"),
                            })
                        })
                        .collect::<Result<_>>()?;
                    shape = Some(CubeShape::new(dirs));
                }
                "size" => {
                    let f = fields.next().ok_or(Error::Parse {
                        line,
                        msg: "missing size value".into(),
                    })?;
                    size = Some(f.parse::<usize>().map_err(|_| Error::Parse {
                        line,
                        msg: format!("bad size `{f}`"),
                    })?);
                }
                "thetas" => {
                    names = fields.map(|f| f.to_string()).collect();
                }
                _ => {
                    let labels: Vec<Element> = s
                        .split(',')
                        .map(|f| {
                            f.trim().parse::<usize>().map(Element).map_err(|_| Error::Parse {
                                line,
                                msg: format!("bad label `{f}`"),
                            })
                        })
                        .collect::<Result<_>>()?;
                    members.push((line, labels));
                }
            }
        }
        let shape = shape.ok_or(Error::Parse {
            line: 0,
            msg: "missing `shape` line".into(),
        })?;
        let size = match size {
            Some(s) => s,
            None => {
                members
                    .iter()
                    .flat_map(|(_, m)| m.iter())
                    .map(|e| e.0 + 1)
                    .max()
                    .unwrap_or(1)
            }
        };
        let mut rel = CubeRelation::new(shape, size)?;
        for (line, labels) in members {
            rel.insert(&labels).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
        }
        Ok((rel, names))
    }
}

fn push_new(
    set: &mut CodeSet,
    order: &mut Vec<u128>,
    code: u128,
    cap: usize,
) -> Result<()> {
    if set.insert(code) {
        if set.len() > cap {
            return Err(Error::ResourceCap {
                what: "relation member count",
                reached: set.len(),
                cap,
            });
        }
        order.push(code);
    }
    Ok(())
}

pub(crate) fn check_theta_inputs(
    alg: &FiniteAlgebra,
    shape: &CubeShape,
    thetas: &[Congruence],
) -> Result<()> {
    if thetas.len() != shape.dim() {
        return Err(Error::Precondition(format!(
            "{} directions but {} congruences",
            shape.dim(),
            thetas.len()
        )));
    }
    for (j, t) in thetas.iter().enumerate() {
        if t.size() != alg.size() {
            return Err(Error::CarrierMismatch {
                expected: alg.size(),
                got: t.size(),
            });
        }
        if !t.is_congruence(alg) {
            return Err(Error::Precondition(format!(
                "partition for direction {} is not a congruence of {}",
                shape.dirs()[j],
                alg.name
            )));
        }
    }
    Ok(())
}

/// The smallest cube relation containing the generator cubes of the given
/// congruences (one per direction, aligned with the sorted shape) that is
/// closed under the operations, both reflections, and the face swap.
pub fn generate_m(
    alg: &FiniteAlgebra,
    shape: &CubeShape,
    thetas: &[Congruence],
    budget: &Budget,
) -> Result<CubeRelation> {
    if shape.dim() == 0 {
        return Err(Error::DimensionTooSmall {
            what: "generated cube relation",
            min: 1,
            got: 0,
        });
    }
    check_theta_inputs(alg, shape, thetas)?;
    let mut rel = CubeRelation::new(shape.clone(), alg.size())?;
    let nv = shape.vertex_count();
    let m = shape.dim();
    let cap = budget.max_members;

    let mut set = CodeSet::default();
    let mut order: Vec<u128> = Vec::new();
    for (j, theta) in thetas.iter().enumerate() {
        let dir = shape.dirs()[j];
        for x in alg.elements() {
            for y in alg.elements() {
                if theta.related(x, y) {
                    let cube = cube::cube_generator(shape, dir, x, y)?;
                    push_new(&mut set, &mut order, pack_cube(&cube), cap)?;
                }
            }
        }
    }
    for op in alg.ops() {
        if op.arity == 0 {
            let c = apply_op_code(&op.table, alg.size(), 0, &[], nv);
            push_new(&mut set, &mut order, c, cap)?;
        }
    }

    let mut head = 0usize;
    while head < order.len() {
        let x = order[head];
        head += 1;
        for p in 0..m {
            push_new(&mut set, &mut order, refl_code(x, p, 0, nv), cap)?;
            push_new(&mut set, &mut order, refl_code(x, p, 1, nv), cap)?;
            push_new(&mut set, &mut order, sym_code(x, p, nv), cap)?;
        }
        for op in alg.ops() {
            match op.arity {
                0 => {}
                1 => {
                    let c = apply_op_code(&op.table, alg.size(), 1, &[x], nv);
                    push_new(&mut set, &mut order, c, cap)?;
                }
                2 => {
                    let mut i = 0usize;
                    while i < order.len() {
                        let y = order[i];
                        i += 1;
                        let c1 = apply_op_code(&op.table, alg.size(), 2, &[x, y], nv);
                        push_new(&mut set, &mut order, c1, cap)?;
                        let c2 = apply_op_code(&op.table, alg.size(), 2, &[y, x], nv);
                        push_new(&mut set, &mut order, c2, cap)?;
                    }
                }
                r => {
                    // Tuples with `x` in one fixed slot and the rest free.
                    for slot in 0..r {
                        let mut picks = vec![0usize; r - 1];
                        loop {
                            if order.is_empty() {
                                break;
                            }
                            let mut args = Vec::with_capacity(r);
                            let mut pi = 0;
                            for a in 0..r {
                                if a == slot {
                                    args.push(x);
                                } else {
                                    args.push(order[picks[pi]]);
                                    pi += 1;
                                }
                            }
                            let c = apply_op_code(&op.table, alg.size(), r, &args, nv);
                            push_new(&mut set, &mut order, c, cap)?;
                            let mut a = 0;
                            while a < r - 1 {
                                picks[a] += 1;
                                if picks[a] < order.len() {
                                    break;
                                }
                                picks[a] = 0;
                                a += 1;
                            }
                            if a == r - 1 {
                                break;
                            }
                        }
                    }
                }
            }
        }
    }
    rel.set = set;
    Ok(rel)
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let g = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = g;
            x = g;
        }
        x
    }
    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra as usize] = rb;
        true
    }
}

/// Close a relation transitively in one direction: whenever faces chain
/// `a -> b -> c` through members, every glued cube `(a, c)` joins the
/// relation.
pub fn directional_compose(rel: &CubeRelation, dir: usize, budget: &Budget) -> Result<CubeRelation> {
    let p = rel.shape.pos(dir)?;
    let nv = rel.shape.vertex_count();
    let cap = budget.max_members;

    let mut node_of: CodeMap<u32> = CodeMap::default();
    let mut nodes: Vec<u128> = Vec::new();
    let intern = |code: u128, nodes: &mut Vec<u128>, node_of: &mut CodeMap<u32>| -> u32 {
        *node_of.entry(code).or_insert_with(|| {
            nodes.push(code);
            (nodes.len() - 1) as u32
        })
    };
    let mut edges: HashSet<(u32, u32)> = HashSet::new();
    for &c in &rel.set {
        let lo = intern(face_code(c, p, 0, nv), &mut nodes, &mut node_of);
        let hi = intern(face_code(c, p, 1, nv), &mut nodes, &mut node_of);
        edges.insert((lo, hi));
    }

    let mut out = CubeRelation::new(rel.shape.clone(), rel.size)?;
    let emit = |out: &mut CubeRelation, a: u128, b: u128| -> Result<()> {
        out.insert_code(glue_code(a, b, p, nv));
        if out.set.len() > cap {
            return Err(Error::ResourceCap {
                what: "relation member count",
                reached: out.set.len(),
                cap,
            });
        }
        Ok(())
    };

    let symmetric = edges.iter().all(|&(a, b)| edges.contains(&(b, a)));
    if symmetric {
        let mut uf = UnionFind::new(nodes.len());
        for &(a, b) in &edges {
            uf.union(a, b);
        }
        let mut groups: HashMap<u32, Vec<u32>> = HashMap::new();
        for i in 0..nodes.len() as u32 {
            groups.entry(uf.find(i)).or_default().push(i);
        }
        for group in groups.values() {
            for &a in group {
                for &b in group {
                    emit(&mut out, nodes[a as usize], nodes[b as usize])?;
                }
            }
        }
    } else {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); nodes.len()];
        for &(a, b) in &edges {
            adj[a as usize].push(b);
        }
        let mut seen = vec![false; nodes.len()];
        for start in 0..nodes.len() as u32 {
            for s in seen.iter_mut() {
                *s = false;
            }
            let mut stack: Vec<u32> = adj[start as usize].clone();
            while let Some(n) = stack.pop() {
                if seen[n as usize] {
                    continue;
                }
                seen[n as usize] = true;
                emit(&mut out, nodes[start as usize], nodes[n as usize])?;
                stack.extend_from_slice(&adj[n as usize]);
            }
        }
    }
    Ok(out)
}

/// Close transitively in every direction, cycling until stable.
pub fn transitive_closure(rel: &CubeRelation, budget: &Budget) -> Result<CubeRelation> {
    if rel.shape.dim() == 0 {
        return Ok(rel.clone());
    }
    let mut cur = rel.clone();
    loop {
        let before = cur.len();
        for &dir in rel.shape.dirs() {
            cur = directional_compose(&cur, dir, budget)?;
        }
        if cur.len() == before {
            return Ok(cur);
        }
    }
}

/// The higher-dimensional congruence of a congruence tuple: the generated
/// relation closed transitively in every direction. At dimension zero the
/// result is the whole carrier, the base case the splitting recursion
/// needs.
pub fn delta(
    alg: &FiniteAlgebra,
    shape: &CubeShape,
    thetas: &[Congruence],
    budget: &Budget,
) -> Result<CubeRelation> {
    if shape.dim() == 0 {
        let mut rel = CubeRelation::new(shape.clone(), alg.size())?;
        for a in alg.elements() {
            rel.insert(&[a])?;
        }
        return Ok(rel);
    }
    let m = generate_m(alg, shape, thetas, budget)?;
    transitive_closure(&m, budget)
}

/// With every face already a congruence one dimension down and the whole
/// relation a tolerance, transitivity in a single direction forces it in
/// all of them. Verifies the hypotheses, then reports whether the
/// conclusion holds.
pub fn promote_almost_congruence(alg: &FiniteAlgebra, rel: &CubeRelation) -> Result<bool> {
    if rel.shape.dim() < 2 {
        return Err(Error::DimensionTooSmall {
            what: "promotion",
            min: 2,
            got: rel.shape.dim(),
        });
    }
    if !rel.is_tolerance(alg)? {
        return Err(Error::HypothesisUnmet("relation is not a tolerance".into()));
    }
    for &dir in rel.shape.dirs() {
        for side in 0..2 {
            let f = rel.face_relation(dir, side)?;
            let ok = if f.shape.dim() == 0 {
                f.is_closed_under_ops(alg)?
            } else {
                f.is_congruence(alg)?
            };
            if !ok {
                return Err(Error::HypothesisUnmet(format!(
                    "face {side} in direction {dir} is not a congruence one dimension down"
                )));
            }
        }
    }
    let mut some_transitive = false;
    for &dir in rel.shape.dirs() {
        if rel.is_transitive_in(dir)? {
            some_transitive = true;
            break;
        }
    }
    if !some_transitive {
        return Err(Error::HypothesisUnmet(
            "no direction is transitive".into(),
        ));
    }
    for &dir in rel.shape.dirs() {
        if !rel.is_transitive_in(dir)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compute the higher congruence by splitting the directions: collapse the
/// directions outside `q` into a derived algebra of lower cubes, run the
/// construction over `q` there, and expand back.
pub fn delta_via_split(
    alg: &FiniteAlgebra,
    shape: &CubeShape,
    thetas: &[Congruence],
    q: &CubeShape,
    budget: &Budget,
) -> Result<CubeRelation> {
    if !q.is_subset_of(shape) {
        return Err(Error::DirectionNotInShape {
            dir: *q.dirs().iter().find(|d| !shape.contains(**d)).unwrap(),
            shape: shape.dirs().to_vec(),
        });
    }
    check_theta_inputs(alg, shape, thetas)?;
    if q.dim() == 0 {
        return delta(alg, shape, thetas, budget);
    }
    let theta_of = |dir: usize| -> &Congruence {
        let j = shape.dirs().iter().position(|&d| d == dir).unwrap();
        &thetas[j]
    };
    let rest = shape.minus(q);
    let rest_thetas: Vec<Congruence> =
        rest.dirs().iter().map(|&d| theta_of(d).clone()).collect();
    let base = delta(alg, &rest, &rest_thetas, budget)?;
    let universe = base.members_sorted();
    let derived: DerivedAlgebra = make_derived_algebra(alg, &universe, budget.max_derived_universe)?;
    let code_index: HashMap<u128, usize> = universe
        .iter()
        .enumerate()
        .map(|(i, m)| (pack_cube(m), i))
        .collect();

    let mut alphas: Vec<Congruence> = Vec::with_capacity(q.dim());
    for &i in q.dirs() {
        let sub = rest.union(&CubeShape::new(vec![i]));
        let sub_thetas: Vec<Congruence> =
            sub.dirs().iter().map(|&d| theta_of(d).clone()).collect();
        let d_i = delta(alg, &sub, &sub_thetas, budget)?;
        let pairs = d_i.face_pair_codes(i)?;
        let mut uf = UnionFind::new(universe.len());
        let mut pair_set: HashSet<(usize, usize)> = HashSet::new();
        for (lo, hi) in pairs {
            let (a, b) = match (code_index.get(&lo), code_index.get(&hi)) {
                (Some(&a), Some(&b)) => (a, b),
                _ => {
                    return Err(Error::Precondition(format!(
                        "a face in direction {i} escapes the base relation"
                    )))
                }
            };
            uf.union(a as u32, b as u32);
            pair_set.insert((a, b));
        }
        let reps: Vec<usize> = (0..universe.len())
            .map(|x| uf.find(x as u32) as usize)
            .collect();
        let alpha = Congruence::from_reps(reps);
        for a in 0..universe.len() {
            for b in 0..universe.len() {
                if alpha.related(Element(a), Element(b)) && !pair_set.contains(&(a, b)) {
                    return Err(Error::Precondition(format!(
                        "face pairing in direction {i} is not already an equivalence"
                    )));
                }
            }
        }
        if !alpha.is_congruence(&derived.algebra) {
            return Err(Error::Precondition(format!(
                "face pairing in direction {i} is not compatible with the derived algebra"
            )));
        }
        alphas.push(alpha);
    }

    let outer = delta(&derived.algebra, q, &alphas, budget)?;
    let mut out = CubeRelation::new(shape.clone(), alg.size())?;
    let q_positions: Vec<usize> = q.dirs().iter().map(|&d| shape.pos(d).unwrap()).collect();
    let rest_positions: Vec<usize> = rest.dirs().iter().map(|&d| shape.pos(d).unwrap()).collect();
    let nv = shape.vertex_count();
    let outer_nv = q.vertex_count();
    for mu in outer.iter_codes() {
        let mut cube = vec![Element(0); nv];
        for (b, slot) in cube.iter_mut().enumerate() {
            let mut oi = 0usize;
            for (j, &p) in q_positions.iter().enumerate() {
                oi |= ((b >> p) & 1) << j;
            }
            let mut ii = 0usize;
            for (j, &p) in rest_positions.iter().enumerate() {
                ii |= ((b >> p) & 1) << j;
            }
            debug_assert!(oi < outer_nv);
            *slot = universe[byte(mu, oi)][ii];
        }
        out.insert(&cube)?;
        if out.len() > budget.max_members {
            return Err(Error::ResourceCap {
                what: "relation member count",
                reached: out.len(),
                cap: budget.max_members,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::all_congruences;
    use crate::corpus;

    fn full(alg: &FiniteAlgebra) -> Congruence {
        Congruence::full(alg.size())
    }

    #[test]
    fn pack_order_is_colex_order() {
        // (0,1) < (1,1) < (0,2) in colex: last coordinate dominates.
        let a = pack_cube(&[Element(0), Element(1)]);
        let b = pack_cube(&[Element(1), Element(1)]);
        let c = pack_cube(&[Element(0), Element(2)]);
        assert!(a < b && b < c);
        assert_eq!(unpack_cube(c, 2), vec![Element(0), Element(2)]);
    }

    #[test]
    fn two_element_group_squares_have_even_weight() {
        let alg = corpus::z(2);
        let shape = CubeShape::first(2);
        let m = generate_m(&alg, &shape, &[full(&alg), full(&alg)], &Budget::default()).unwrap();
        assert_eq!(m.len(), 8);
        for cube in m.members_sorted() {
            let w: usize = cube.iter().map(|e| e.0).sum();
            assert_eq!(w % 2, 0);
        }
        let d = transitive_closure(&m, &Budget::default()).unwrap();
        assert_eq!(d, m);
    }

    #[test]
    fn cyclic_four_squares_balance() {
        let alg = corpus::z(4);
        let shape = CubeShape::first(2);
        let d = delta(&alg, &shape, &[full(&alg), full(&alg)], &Budget::default()).unwrap();
        assert_eq!(d.len(), 64);
        for cube in d.members_sorted() {
            let (a, b, c, dd) = (cube[0].0, cube[1].0, cube[2].0, cube[3].0);
            assert_eq!((a + dd) % 4, (b + c) % 4);
        }
        assert!(d.is_congruence(&alg).unwrap());
    }

    #[test]
    fn one_dimension_is_the_congruence_itself() {
        let alg = corpus::s3();
        for theta in all_congruences(&alg, 1 << 10).unwrap() {
            let d = delta(
                &alg,
                &CubeShape::first(1),
                std::slice::from_ref(&theta),
                &Budget::default(),
            )
            .unwrap();
            let mut expect = CubeRelation::new(CubeShape::first(1), alg.size()).unwrap();
            for x in alg.elements() {
                for y in alg.elements() {
                    if theta.related(x, y) {
                        expect.insert(&[x, y]).unwrap();
                    }
                }
            }
            assert_eq!(d, expect);
        }
    }

    #[test]
    fn zero_dimensions_is_the_carrier()  {
        let alg = corpus::z(3);
        let d = delta(&alg, &CubeShape::new(vec![]), &[], &Budget::default()).unwrap();
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn equality_congruence_gives_diagonal_direction() {
        let alg = corpus::z(4);
        let shape = CubeShape::first(2);
        let eq = Congruence::equality(alg.size());
        let d = delta(&alg, &shape, &[eq, full(&alg)], &Budget::default()).unwrap();
        // direction 0 is frozen: every member has a == b and c == d
        for cube in d.members_sorted() {
            assert_eq!(cube[0], cube[1]);
            assert_eq!(cube[2], cube[3]);
        }
        assert_eq!(d.len(), 16);
    }

    #[test]
    fn compose_follows_edge_direction() {
        let shape = CubeShape::first(1);
        let mut rel = CubeRelation::new(shape, 3).unwrap();
        rel.insert(&[Element(0), Element(1)]).unwrap();
        rel.insert(&[Element(1), Element(2)]).unwrap();
        let out = directional_compose(&rel, 0, &Budget::default()).unwrap();
        assert!(out.contains(&[Element(0), Element(2)]).unwrap());
        assert!(out.contains(&[Element(0), Element(1)]).unwrap());
        assert!(!out.contains(&[Element(1), Element(0)]).unwrap());
        assert!(!out.contains(&[Element(0), Element(0)]).unwrap());
    }

    #[test]
    fn compose_caps_member_count() {
        let alg = corpus::d4();
        let shape = CubeShape::first(2);
        let tight = Budget {
            max_members: 100,
            ..Budget::default()
        };
        let err = delta(&alg, &shape, &[full(&alg), full(&alg)], &tight).unwrap_err();
        assert!(matches!(err, Error::ResourceCap { .. }));
    }

    #[test]
    fn lattice_squares_need_closure() {
        let alg = corpus::two_chain();
        let shape = CubeShape::first(2);
        let m = generate_m(&alg, &shape, &[full(&alg), full(&alg)], &Budget::default()).unwrap();
        let d = transitive_closure(&m, &Budget::default()).unwrap();
        assert!(d.len() >= m.len());
        assert!(d.is_congruence(&alg).unwrap());
        assert_eq!(d.len(), 16, "join and meet generate every square");
    }

    #[test]
    fn delta_members_project_into_thetas() {
        let alg = corpus::s3();
        let cons = all_congruences(&alg, 1 << 10).unwrap();
        let shape = CubeShape::first(2);
        let mid = cons[1].clone();
        let d = delta(&alg, &shape, &[mid.clone(), full(&alg)], &Budget::default()).unwrap();
        for cube in d.members_sorted() {
            // direction-0 lines are theta_0 pairs
            assert!(mid.related(cube[0], cube[1]));
            assert!(mid.related(cube[2], cube[3]));
        }
        assert!(d.is_congruence(&alg).unwrap());
    }

    #[test]
    fn promotion_confirms_full_transitivity() {
        let alg = corpus::z(4);
        let shape = CubeShape::first(2);
        let d = delta(&alg, &shape, &[full(&alg), full(&alg)], &Budget::default()).unwrap();
        assert_eq!(promote_almost_congruence(&alg, &d).unwrap(), true);
    }

    #[test]
    fn promotion_rejects_a_non_tolerance() {
        let alg = corpus::z(2);
        let shape = CubeShape::first(2);
        let mut rel = CubeRelation::new(shape, 2).unwrap();
        rel.insert(&[Element(0), Element(1), Element(0), Element(0)]).unwrap();
        assert!(matches!(
            promote_almost_congruence(&alg, &rel),
            Err(Error::HypothesisUnmet(_))
        ));
    }

    #[test]
    fn split_computation_matches_direct() {
        for alg in [corpus::z(2), corpus::z(4), corpus::two_chain()] {
            let shape = CubeShape::first(2);
            let thetas = vec![full(&alg), full(&alg)];
            let direct = delta(&alg, &shape, &thetas, &Budget::default()).unwrap();
            for q_dirs in [vec![0], vec![1], vec![0, 1], vec![]] {
                let q = CubeShape::new(q_dirs);
                let split = delta_via_split(&alg, &shape, &thetas, &q, &Budget::default()).unwrap();
                assert_eq!(split, direct, "{} split {:?}", alg.name, q.dirs());
            }
        }
    }

    #[test]
    fn relation_text_round_trip() {
        let alg = corpus::z(2);
        let shape = CubeShape::first(2);
        let d = delta(&alg, &shape, &[full(&alg), full(&alg)], &Budget::default()).unwrap();
        let names = vec!["all".to_string(), "all".to_string()];
        let text = d.to_text(&names);
        let (back, back_names) = CubeRelation::parse(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(back_names, names);
        assert_eq!(back.to_text(&back_names), text);
    }

    #[test]
    fn parse_rejects_bad_labels() {
        let text = "shape 0 1\nsize 2\n0,1,2,0\n";
        assert!(matches!(CubeRelation::parse(text), Err(Error::Parse { line: 3, .. })));
    }
}
