//! Term trees over an algebra's signature, their induced operation tables,
//! and bounded enumeration of all term operations up to a depth.

use std::collections::HashMap;
use std::fmt;

use crate::algebra::{next_tuple, Element, FiniteAlgebra};
use crate::error::{Error, Result};

/// A term: a variable `x<i>` or an operation applied to subterms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermTree {
    Var(usize),
    App { op: String, args: Vec<TermTree> },
}

impl TermTree {
    pub fn var(i: usize) -> TermTree {
        TermTree::Var(i)
    }

    pub fn app(op: impl Into<String>, args: Vec<TermTree>) -> TermTree {
        TermTree::App {
            op: op.into(),
            args,
        }
    }

    /// 0 for a variable, 1 + max over subterms otherwise.
    pub fn depth(&self) -> usize {
        match self {
            TermTree::Var(_) => 0,
            TermTree::App { args, .. } => {
                1 + args.iter().map(TermTree::depth).max().unwrap_or(0)
            }
        }
    }

    /// Largest variable index + 1, the minimum arity this term needs.
    pub fn min_arity(&self) -> usize {
        match self {
            TermTree::Var(v) => v + 1,
            TermTree::App { args, .. } => args.iter().map(TermTree::min_arity).max().unwrap_or(0),
        }
    }

    /// Replace each variable `x<i>` by `subs[i]`.
    pub fn substitute(&self, subs: &[TermTree]) -> TermTree {
        match self {
            TermTree::Var(v) => subs[*v].clone(),
            TermTree::App { op, args } => TermTree::App {
                op: op.clone(),
                args: args.iter().map(|a| a.substitute(subs)).collect(),
            },
        }
    }

    /// Parse the prefix form produced by `Display`, e.g. `mul(x0,inv(x1))`.
    pub fn parse(text: &str) -> Result<TermTree> {
        let mut p = TermParser {
            src: text.as_bytes(),
            pos: 0,
        };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(Error::Parse {
                line: 1,
                msg: format!("trailing input after term at byte {}", p.pos),
            });
        }
        Ok(t)
    }
}

impl fmt::Display for TermTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermTree::Var(v) => write!(f, "x{v}"),
            TermTree::App { op, args } => {
                write!(f, "{op}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct TermParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl TermParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected identifier at byte {start}"),
            });
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn term(&mut self) -> Result<TermTree> {
        let name = self.ident()?;
        self.skip_ws();
        if self.pos < self.src.len() && self.src[self.pos] == b'(' {
            self.pos += 1;
            let mut args = Vec::new();
            self.skip_ws();
            if self.pos < self.src.len() && self.src[self.pos] == b')' {
                self.pos += 1;
            } else {
                loop {
                    args.push(self.term()?);
                    self.skip_ws();
                    match self.src.get(self.pos) {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => {
                            return Err(Error::Parse {
                                line: 1,
                                msg: format!("expected `,` or `)` at byte {}", self.pos),
                            })
                        }
                    }
                }
            }
            Ok(TermTree::App { op: name, args })
        } else {
            if let Some(rest) = name.strip_prefix('x') {
                if let Ok(v) = rest.parse::<usize>() {
                    return Ok(TermTree::Var(v));
                }
            }
            Err(Error::Parse {
                line: 1,
                msg: format!("`{name}` is neither a variable x<i> nor an applied operation"),
            })
        }
    }
}

/// Evaluate a term at one assignment.
pub fn eval_term(alg: &FiniteAlgebra, term: &TermTree, args: &[Element]) -> Result<Element> {
    for &Element(e) in args {
        if e >= alg.size() {
            return Err(Error::ElementRange {
                element: e,
                size: alg.size(),
            });
        }
    }
    eval_inner(alg, term, args)
}

fn eval_inner(alg: &FiniteAlgebra, term: &TermTree, args: &[Element]) -> Result<Element> {
    match term {
        TermTree::Var(v) => args.get(*v).copied().ok_or(Error::VariableRange {
            var: *v,
            provided: args.len(),
        }),
        TermTree::App { op, args: sub } => {
            let idx = alg.op_index(op)?;
            let expected = alg.ops()[idx].arity;
            if sub.len() != expected {
                return Err(Error::ArityMismatch {
                    op: op.clone(),
                    expected,
                    got: sub.len(),
                });
            }
            let mut vals = Vec::with_capacity(sub.len());
            for s in sub {
                vals.push(eval_inner(alg, s, args)?);
            }
            Ok(alg.apply(idx, &vals))
        }
    }
}

/// The full table of the operation a term induces at the given arity
/// (colex argument order, like every other table here).
pub fn term_table(alg: &FiniteAlgebra, term: &TermTree, arity: usize) -> Result<Vec<Element>> {
    if term.min_arity() > arity {
        return Err(Error::VariableRange {
            var: term.min_arity() - 1,
            provided: arity,
        });
    }
    let n = alg.size().pow(arity as u32);
    table_inner(alg, term, arity, n)
}

fn table_inner(
    alg: &FiniteAlgebra,
    term: &TermTree,
    arity: usize,
    n: usize,
) -> Result<Vec<Element>> {
    match term {
        TermTree::Var(v) => {
            let mut out = Vec::with_capacity(n);
            let mut args = vec![0usize; arity];
            loop {
                out.push(Element(args[*v]));
                if !next_tuple(&mut args, alg.size()) {
                    break;
                }
            }
            Ok(out)
        }
        TermTree::App { op, args: sub } => {
            let idx = alg.op_index(op)?;
            let expected = alg.ops()[idx].arity;
            if sub.len() != expected {
                return Err(Error::ArityMismatch {
                    op: op.clone(),
                    expected,
                    got: sub.len(),
                });
            }
            let children: Vec<Vec<Element>> = sub
                .iter()
                .map(|s| table_inner(alg, s, arity, n))
                .collect::<Result<_>>()?;
            let mut out = Vec::with_capacity(n);
            let mut point = vec![Element(0); sub.len()];
            for i in 0..n {
                for (slot, child) in point.iter_mut().zip(children.iter()) {
                    *slot = child[i];
                }
                out.push(alg.apply(idx, &point));
            }
            Ok(out)
        }
    }
}

/// Does `lhs = rhs` hold for every assignment of `arity` variables?
pub fn check_identity(
    alg: &FiniteAlgebra,
    lhs: &TermTree,
    rhs: &TermTree,
    arity: usize,
) -> Result<bool> {
    Ok(term_table(alg, lhs, arity)? == term_table(alg, rhs, arity)?)
}

/// One enumerated term operation: the first (shallowest, then earliest
/// generated) term inducing its table.
#[derive(Debug, Clone)]
pub struct TermOp {
    pub term: TermTree,
    pub table: Vec<Element>,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct TermEnumeration {
    pub arity: usize,
    pub terms: Vec<TermOp>,
    /// True when the count cap stopped the enumeration early.
    pub truncated: bool,
}

/// Enumerate distinct term operations of the given arity, breadth-first by
/// depth. Projections come first; composites follow in operation order,
/// children ordered lexicographically by their position in the output so
/// far. Deterministic for fixed caps.
pub fn enumerate_term_operations(
    alg: &FiniteAlgebra,
    arity: usize,
    depth_cap: usize,
    count_cap: usize,
) -> TermEnumeration {
    let mut terms: Vec<TermOp> = Vec::new();
    let mut seen: HashMap<Vec<Element>, usize> = HashMap::new();
    let mut truncated = false;
    let n = alg.size().pow(arity as u32);

    for v in 0..arity {
        let mut table = Vec::with_capacity(n);
        let mut args = vec![0usize; arity];
        loop {
            table.push(Element(args[v]));
            if !next_tuple(&mut args, alg.size()) {
                break;
            }
        }
        if !seen.contains_key(&table) {
            seen.insert(table.clone(), terms.len());
            terms.push(TermOp {
                term: TermTree::Var(v),
                table,
                depth: 0,
            });
        }
    }
    if terms.len() >= count_cap {
        return TermEnumeration {
            arity,
            terms,
            truncated: true,
        };
    }

    let mut level_start = 0; // first index of the previous depth level
    for depth in 1..=depth_cap {
        let level_end = terms.len();
        let mut added_any = false;
        'ops: for (op_idx, op) in alg.ops().iter().enumerate() {
            if op.arity == 0 {
                // constants only enter once, at depth 1
                if depth != 1 {
                    continue;
                }
                let c = alg.apply(op_idx, &[]);
                let table = vec![c; n];
                if !seen.contains_key(&table) {
                    seen.insert(table.clone(), terms.len());
                    terms.push(TermOp {
                        term: TermTree::app(op.name.clone(), vec![]),
                        table,
                        depth,
                    });
                    added_any = true;
                    if terms.len() >= count_cap {
                        truncated = true;
                        break 'ops;
                    }
                }
                continue;
            }
            // children drawn from everything of depth < this one, with at
            // least one child from the previous level
            let mut picks = vec![0usize; op.arity];
            let mut point = vec![Element(0); op.arity];
            loop {
                if picks.iter().any(|&p| p >= level_start) {
                    let mut table = Vec::with_capacity(n);
                    for i in 0..n {
                        for (slot, &p) in point.iter_mut().zip(picks.iter()) {
                            *slot = terms[p].table[i];
                        }
                        table.push(alg.apply(op_idx, &point));
                    }
                    if !seen.contains_key(&table) {
                        seen.insert(table.clone(), terms.len());
                        let term = TermTree::app(
                            op.name.clone(),
                            picks.iter().map(|&p| terms[p].term.clone()).collect(),
                        );
                        terms.push(TermOp { term, table, depth });
                        added_any = true;
                        if terms.len() >= count_cap {
                            truncated = true;
                            break 'ops;
                        }
                    }
                }
                if !next_pick(&mut picks, level_end) {
                    break;
                }
            }
        }
        if truncated || !added_any {
            break;
        }
        level_start = level_end;
    }
    TermEnumeration {
        arity,
        terms,
        truncated,
    }
}

/// Advance `picks` lexicographically (last coordinate fastest) below `bound`.
fn next_pick(picks: &mut [usize], bound: usize) -> bool {
    for p in picks.iter_mut().rev() {
        *p += 1;
        if *p < bound {
            return true;
        }
        *p = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn eval_on_z4_composite() {
        // mul(x0, mul(inv(x1), x2)) at (1,2,3) = 1 - 2 + 3 = 2 mod 4
        let a = corpus::z(4);
        let t = TermTree::parse("mul(x0,mul(inv(x1),x2))").unwrap();
        let v = eval_term(&a, &t, &[Element(1), Element(2), Element(3)]).unwrap();
        assert_eq!(v, Element(2));
    }

    #[test]
    fn unknown_symbol_and_arity_and_range_errors() {
        let a = corpus::z(4);
        let t = TermTree::parse("frob(x0)").unwrap();
        assert!(matches!(
            eval_term(&a, &t, &[Element(0)]),
            Err(Error::UnknownOperation(_))
        ));
        let t = TermTree::parse("mul(x0)").unwrap();
        assert!(matches!(
            eval_term(&a, &t, &[Element(0)]),
            Err(Error::ArityMismatch { .. })
        ));
        let t = TermTree::parse("x0").unwrap();
        assert!(matches!(
            eval_term(&a, &t, &[Element(7)]),
            Err(Error::ElementRange { .. })
        ));
        assert!(matches!(
            eval_term(&a, &TermTree::var(2), &[Element(1)]),
            Err(Error::VariableRange { .. })
        ));
    }

    #[test]
    fn identity_checks_on_z2() {
        let a = corpus::z(2);
        // x + x = e
        let lhs = TermTree::parse("mul(x0,x0)").unwrap();
        let rhs = TermTree::parse("e()").unwrap();
        assert!(check_identity(&a, &lhs, &rhs, 1).unwrap());
        // x + y = y is not an identity
        let lhs = TermTree::parse("mul(x0,x1)").unwrap();
        let rhs = TermTree::parse("x1").unwrap();
        assert!(!check_identity(&a, &lhs, &rhs, 2).unwrap());
    }

    #[test]
    fn enumerate_unary_z2() {
        // unary term ops of (Z2, xor, inv=id, e): identity and constant 0
        let a = corpus::z(2);
        let e = enumerate_term_operations(&a, 1, 4, 1000);
        assert!(!e.truncated);
        let tables: Vec<_> = e.terms.iter().map(|t| t.table.clone()).collect();
        assert!(tables.contains(&vec![Element(0), Element(1)]));
        assert!(tables.contains(&vec![Element(0), Element(0)]));
        assert_eq!(tables.len(), 2);
    }

    #[test]
    fn enumerate_binary_lattice_depth_one() {
        let a = corpus::two_chain();
        let e = enumerate_term_operations(&a, 2, 1, 1000);
        // projections, meet, join
        assert_eq!(e.terms.len(), 4);
        assert_eq!(e.terms[0].term.to_string(), "x0");
        assert_eq!(e.terms[1].term.to_string(), "x1");
        assert_eq!(e.terms[2].depth, 1);
    }

    #[test]
    fn enumeration_is_deterministic_and_caps_are_reported() {
        let a = corpus::z(4);
        // binary terms of the cyclic group of order 4 are a*x0 + b*x1:
        // sixteen distinct tables, so a cap of ten must truncate
        let e1 = enumerate_term_operations(&a, 2, 3, 10);
        let e2 = enumerate_term_operations(&a, 2, 3, 10);
        let t1: Vec<String> = e1.terms.iter().map(|t| t.term.to_string()).collect();
        let t2: Vec<String> = e2.terms.iter().map(|t| t.term.to_string()).collect();
        assert_eq!(t1, t2);
        assert!(e1.truncated);
        assert_eq!(e1.terms.len(), 10);
        let uncapped = enumerate_term_operations(&a, 2, 6, 1000);
        assert!(!uncapped.truncated);
        assert_eq!(uncapped.terms.len(), 16);
    }

    #[test]
    fn term_text_round_trip() {
        let t = TermTree::parse("mul(x0,mul(inv(x1),e()))").unwrap();
        assert_eq!(t.to_string(), "mul(x0,mul(inv(x1),e()))");
        assert_eq!(TermTree::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn set_algebra_enumerates_projections_only() {
        let a = corpus::two_element_set();
        let e = enumerate_term_operations(&a, 4, 6, 10_000);
        assert_eq!(e.terms.len(), 4);
        assert!(!e.truncated);
    }
}
