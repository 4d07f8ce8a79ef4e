//! Finite algebras: a carrier `{0, .., size-1}` together with finitary
//! operations given by flat tables.
//!
//! Tables are stored in colexicographic argument order: the entry for
//! arguments `(a_0, .., a_{r-1})` lives at flat index
//! `a_0 + a_1*size + a_2*size^2 + ..`, so the first argument varies fastest.
//!
//! The same order governs the plain-text algebra format:
//!
//! ```text
//! algebra z2
//! size 2
//! op mul 2 0 1 1 0
//! op inv 1 0 1
//! op e 0 0
//! ```

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Index into the carrier of a [`FiniteAlgebra`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(pub usize);

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One operation: name, arity, and its full table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationTable {
    pub name: String,
    pub arity: usize,
    /// `size^arity` entries, colexicographic argument order.
    pub table: Vec<Element>,
}

impl OperationTable {
    pub fn new(name: impl Into<String>, arity: usize, table: Vec<Element>) -> Self {
        OperationTable {
            name: name.into(),
            arity,
            table,
        }
    }

    /// Build a table by evaluating `f` on every argument tuple.
    pub fn from_fn(
        name: impl Into<String>,
        size: usize,
        arity: usize,
        mut f: impl FnMut(&[usize]) -> usize,
    ) -> Self {
        let mut table = Vec::with_capacity(size.pow(arity as u32));
        let mut args = vec![0usize; arity];
        loop {
            table.push(Element(f(&args)));
            if !next_tuple(&mut args, size) {
                break;
            }
        }
        OperationTable {
            name: name.into(),
            arity,
            table,
        }
    }
}

/// Advance `args` to the next tuple in colexicographic order
/// (first coordinate fastest). Returns false after the last tuple.
pub(crate) fn next_tuple(args: &mut [usize], size: usize) -> bool {
    for a in args.iter_mut() {
        *a += 1;
        if *a < size {
            return true;
        }
        *a = 0;
    }
    false
}

/// A finite algebra with named operations.
#[derive(Debug, Clone)]
pub struct FiniteAlgebra {
    pub name: String,
    size: usize,
    ops: Vec<OperationTable>,
    by_name: HashMap<String, usize>,
}

impl PartialEq for FiniteAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.size == other.size && self.ops == other.ops
    }
}
impl Eq for FiniteAlgebra {}

impl FiniteAlgebra {
    pub fn new(
        name: impl Into<String>,
        size: usize,
        ops: Vec<OperationTable>,
    ) -> Result<FiniteAlgebra> {
        let name = name.into();
        if size == 0 {
            return Err(Error::CarrierMismatch {
                expected: 1,
                got: 0,
            });
        }
        let mut by_name = HashMap::new();
        for (i, op) in ops.iter().enumerate() {
            let expected = size.pow(op.arity as u32);
            if op.table.len() != expected {
                return Err(Error::TableLength {
                    op: op.name.clone(),
                    expected,
                    got: op.table.len(),
                });
            }
            for &Element(e) in &op.table {
                if e >= size {
                    return Err(Error::ElementRange { element: e, size });
                }
            }
            if by_name.insert(op.name.clone(), i).is_some() {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("duplicate operation name `{}`", op.name),
                });
            }
        }
        Ok(FiniteAlgebra {
            name,
            size,
            ops,
            by_name,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ops(&self) -> &[OperationTable] {
        &self.ops
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> {
        (0..self.size).map(Element)
    }

    pub fn op_index(&self, name: &str) -> Result<usize> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownOperation(name.to_string()))
    }

    /// Apply operation `op` (by index) to the argument tuple.
    pub fn apply(&self, op: usize, args: &[Element]) -> Element {
        let table = &self.ops[op];
        debug_assert_eq!(args.len(), table.arity);
        let mut idx = 0usize;
        for &Element(a) in args.iter().rev() {
            idx = idx * self.size + a;
        }
        table.table[idx]
    }

    /// Flat table index of an argument tuple (colex order).
    pub fn flat_index(&self, args: &[Element]) -> usize {
        let mut idx = 0usize;
        for &Element(a) in args.iter().rev() {
            idx = idx * self.size + a;
        }
        idx
    }

    /// Render in the plain-text algebra format. `parse` inverts this exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("algebra {}\n", self.name));
        out.push_str(&format!("size {}\n", self.size));
        for op in &self.ops {
            out.push_str(&format!("op {} {}", op.name, op.arity));
            for &Element(e) in &op.table {
                out.push_str(&format!(" {e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the plain-text algebra format. Blank lines and `#` comments are
    /// skipped; errors cite the offending line.
    pub fn parse(text: &str) -> Result<FiniteAlgebra> {
        let mut name: Option<String> = None;
        let mut size: Option<usize> = None;
        let mut ops: Vec<OperationTable> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let keyword = fields.next().unwrap();
            match keyword {
                "algebra" => {
                    let n = fields.next().ok_or_else(|| Error::Parse {
                        line,
                        msg: "missing algebra name".into(),
                    })?;
                    name = Some(n.to_string());
                }
                "size" => {
                    let n = fields.next().ok_or_else(|| Error::Parse {
                        line,
                        msg: "missing size value".into(),
                    })?;
                    size = Some(n.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("size `{n}` is not a number"),
                    })?);
                }
                "op" => {
                    let s = size.ok_or_else(|| Error::Parse {
                        line,
                        msg: "op before size".into(),
                    })?;
                    let op_name = fields.next().ok_or_else(|| Error::Parse {
                        line,
                        msg: "missing operation name".into(),
                    })?;
                    let arity_str = fields.next().ok_or_else(|| Error::Parse {
                        line,
                        msg: format!("op {op_name}: missing arity"),
                    })?;
                    let arity: usize = arity_str.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("op {op_name}: arity `{arity_str}` is not a number"),
                    })?;
                    let mut table = Vec::new();
                    for tok in fields {
                        let v: usize = tok.parse().map_err(|_| Error::Parse {
                            line,
                            msg: format!("op {op_name}: table entry `{tok}` is not a number"),
                        })?;
                        if v >= s {
                            return Err(Error::Parse {
                                line,
                                msg: format!("op {op_name}: entry {v} out of range for size {s}"),
                            });
                        }
                        table.push(Element(v));
                    }
                    let expected = s.pow(arity as u32);
                    if table.len() != expected {
                        return Err(Error::Parse {
                            line,
                            msg: format!(
                                "op {op_name}: table has {} entries, expected {expected}",
                                table.len()
                            ),
                        });
                    }
                    ops.push(OperationTable::new(op_name, arity, table));
                }
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown keyword `{other}`"),
                    });
                }
            }
        }
        let name = name.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing `algebra` line".into(),
        })?;
        let size = size.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing `size` line".into(),
        })?;
        FiniteAlgebra::new(name, size, ops)
    }
}

/// An algebra whose carrier is a set of label vectors (cubes over some
/// shape) closed under the pointwise operations of a base algebra.
///
/// The universe is kept in canonical order: label vectors compared
/// colexicographically (last position most significant). `algebra` holds
/// materialized tables over universe indices, so every congruence and
/// relation routine works on it unchanged.
#[derive(Debug, Clone)]
pub struct DerivedAlgebra {
    pub base_name: String,
    pub universe: Vec<Vec<Element>>,
    pub algebra: FiniteAlgebra,
}

/// Compare label vectors colexicographically.
pub fn colex_cmp(a: &[Element], b: &[Element]) -> std::cmp::Ordering {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Build the algebra induced on `universe` by the pointwise operations of
/// `base`. Fails with a witness if the universe is not closed.
pub fn make_derived_algebra(
    base: &FiniteAlgebra,
    universe: &[Vec<Element>],
    cap: usize,
) -> Result<DerivedAlgebra> {
    let mut sorted: Vec<Vec<Element>> = universe.to_vec();
    sorted.sort_by(|a, b| colex_cmp(a, b));
    sorted.dedup();
    if sorted.len() > cap {
        return Err(Error::ResourceCap {
            what: "derived carrier",
            reached: sorted.len(),
            cap,
        });
    }
    if sorted.is_empty() {
        return Err(Error::CarrierMismatch {
            expected: 1,
            got: 0,
        });
    }
    let width = sorted[0].len();
    for v in &sorted {
        if v.len() != width {
            return Err(Error::CarrierMismatch {
                expected: width,
                got: v.len(),
            });
        }
    }
    let index: HashMap<&[Element], usize> = sorted
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_slice(), i))
        .collect();
    let size = sorted.len();
    let mut ops = Vec::with_capacity(base.ops().len());
    for (op_idx, op) in base.ops().iter().enumerate() {
        let mut table = Vec::with_capacity(size.pow(op.arity as u32));
        let mut args = vec![0usize; op.arity];
        let mut point = vec![Element(0); op.arity];
        loop {
            let mut result = Vec::with_capacity(width);
            for pos in 0..width {
                for (slot, &a) in point.iter_mut().zip(args.iter()) {
                    *slot = sorted[a][pos];
                }
                result.push(base.apply(op_idx, &point));
            }
            match index.get(result.as_slice()) {
                Some(&i) => table.push(Element(i)),
                None => {
                    return Err(Error::NotClosed {
                        op: op.name.clone(),
                        args: args.clone(),
                        result: 0,
                    });
                }
            }
            if !next_tuple(&mut args, size) {
                break;
            }
        }
        ops.push(OperationTable::new(op.name.clone(), op.arity, table));
    }
    let algebra = FiniteAlgebra::new(format!("{}^", base.name), size, ops)?;
    Ok(DerivedAlgebra {
        base_name: base.name.clone(),
        universe: sorted,
        algebra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> FiniteAlgebra {
        FiniteAlgebra::new(
            "z2",
            2,
            vec![
                OperationTable::from_fn("mul", 2, 2, |a| a[0] ^ a[1]),
                OperationTable::from_fn("inv", 2, 1, |a| a[0]),
                OperationTable::from_fn("e", 2, 0, |_| 0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn apply_uses_colex_table_order() {
        let a = FiniteAlgebra::new(
            "pair",
            2,
            vec![OperationTable::new(
                "f",
                2,
                vec![Element(0), Element(1), Element(0), Element(0)],
            )],
        )
        .unwrap();
        // index 1 is (a0,a1) = (1,0)
        assert_eq!(a.apply(0, &[Element(1), Element(0)]), Element(1));
        assert_eq!(a.apply(0, &[Element(0), Element(1)]), Element(0));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let a = z2();
        let text = a.to_text();
        let b = FiniteAlgebra::parse(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(text, b.to_text());
    }

    #[test]
    fn parse_reports_line_and_field() {
        let bad = "algebra x\nsize 2\nop mul 2 0 1 1\n";
        let err = FiniteAlgebra::parse(bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("mul"), "{msg}");
        assert!(msg.contains("expected 4"), "{msg}");
    }

    #[test]
    fn parse_rejects_out_of_range_entry() {
        let bad = "algebra x\nsize 2\nop inv 1 0 2\n";
        let err = FiniteAlgebra::parse(bad).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn nullary_operation_has_one_entry() {
        let a = z2();
        let e = a.op_index("e").unwrap();
        assert_eq!(a.apply(e, &[]), Element(0));
    }

    #[test]
    fn derived_algebra_not_closed_is_reported() {
        let a = z2();
        // {00, 01} is not closed under xor with itself: 01 xor 01 = 00, fine,
        // but {01, 10} is missing 11: 01 xor 10 = 11.
        let universe = vec![
            vec![Element(0), Element(1)],
            vec![Element(1), Element(0)],
        ];
        let err = make_derived_algebra(&a, &universe, 100).unwrap_err();
        assert!(matches!(err, Error::NotClosed { .. }), "{err}");
    }

    #[test]
    fn derived_algebra_orders_universe_colex() {
        let a = z2();
        let universe = vec![
            vec![Element(1), Element(1)],
            vec![Element(0), Element(0)],
            vec![Element(1), Element(0)],
            vec![Element(0), Element(1)],
        ];
        let d = make_derived_algebra(&a, &universe, 100).unwrap();
        // colex: last coordinate major -> 00, 10, 01, 11
        assert_eq!(
            d.universe,
            vec![
                vec![Element(0), Element(0)],
                vec![Element(1), Element(0)],
                vec![Element(0), Element(1)],
                vec![Element(1), Element(1)],
            ]
        );
        // xor on indices: 10 xor 01 = 11 -> index 3
        assert_eq!(d.algebra.apply(0, &[Element(1), Element(2)]), Element(3));
    }
}
