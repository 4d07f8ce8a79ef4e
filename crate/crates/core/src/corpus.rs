//! Small standard algebras used throughout the test suites and available to
//! the command line front end: cyclic groups, the Klein four-group, the two
//! smallest nonabelian groups' little siblings S3 and D4, two distributive
//! lattices, and a bare two-element set as a negative control.

use crate::algebra::{FiniteAlgebra, OperationTable};

/// Cyclic group of order `n` under addition: `mul`, `inv`, `e`.
pub fn z(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::new(
        format!("z{n}"),
        n,
        vec![
            OperationTable::from_fn("mul", n, 2, |a| (a[0] + a[1]) % n),
            OperationTable::from_fn("inv", n, 1, |a| (n - a[0]) % n),
            OperationTable::from_fn("e", n, 0, |_| 0),
        ],
    )
    .expect("valid tables")
}

/// Klein four-group: bit vectors of length 2 under xor.
pub fn z2xz2() -> FiniteAlgebra {
    FiniteAlgebra::new(
        "z2xz2",
        4,
        vec![
            OperationTable::from_fn("mul", 4, 2, |a| a[0] ^ a[1]),
            OperationTable::from_fn("inv", 4, 1, |a| a[0]),
            OperationTable::from_fn("e", 4, 0, |_| 0),
        ],
    )
    .expect("valid tables")
}

/// Symmetric group on three points.
///
/// Elements: 0 id, 1 (01), 2 (02), 3 (12), 4 (0 1 2), 5 (0 2 1);
/// `mul(a,b)` is the composite "a after b".
pub fn s3() -> FiniteAlgebra {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [1, 0, 2],
        [2, 1, 0],
        [0, 2, 1],
        [1, 2, 0],
        [2, 0, 1],
    ];
    fn index_of(p: [usize; 3]) -> usize {
        PERMS.iter().position(|q| *q == p).unwrap()
    }
    FiniteAlgebra::new(
        "s3",
        6,
        vec![
            OperationTable::from_fn("mul", 6, 2, |a| {
                let (pa, pb) = (PERMS[a[0]], PERMS[a[1]]);
                index_of([pa[pb[0]], pa[pb[1]], pa[pb[2]]])
            }),
            OperationTable::from_fn("inv", 6, 1, |a| {
                let p = PERMS[a[0]];
                let mut q = [0usize; 3];
                for i in 0..3 {
                    q[p[i]] = i;
                }
                index_of(q)
            }),
            OperationTable::from_fn("e", 6, 0, |_| 0),
        ],
    )
    .expect("valid tables")
}

/// Dihedral group of the square, order 8.
///
/// Elements 0..3 are the rotations `r^k`, 4..7 the reflections `r^k s`,
/// with the relation `s r = r^-1 s`.
pub fn d4() -> FiniteAlgebra {
    fn mul(a: usize, b: usize) -> usize {
        let (ar, af) = (a % 4, a / 4);
        let (br, bf) = (b % 4, b / 4);
        let r = if af == 0 { (ar + br) % 4 } else { (ar + 4 - br) % 4 };
        r + 4 * (af ^ bf)
    }
    FiniteAlgebra::new(
        "d4",
        8,
        vec![
            OperationTable::from_fn("mul", 8, 2, |a| mul(a[0], a[1])),
            OperationTable::from_fn("inv", 8, 1, |a| {
                (0..8).find(|&b| mul(a[0], b) == 0).unwrap()
            }),
            OperationTable::from_fn("e", 8, 0, |_| 0),
        ],
    )
    .expect("valid tables")
}

/// Two-element lattice 0 < 1.
pub fn two_chain() -> FiniteAlgebra {
    FiniteAlgebra::new(
        "lat2",
        2,
        vec![
            OperationTable::from_fn("meet", 2, 2, |a| a[0] & a[1]),
            OperationTable::from_fn("join", 2, 2, |a| a[0] | a[1]),
        ],
    )
    .expect("valid tables")
}

/// Four-element diamond: the product of two two-element lattices, on bit
/// masks 0..3 with bitwise and/or.
pub fn diamond() -> FiniteAlgebra {
    FiniteAlgebra::new(
        "diamond",
        4,
        vec![
            OperationTable::from_fn("meet", 4, 2, |a| a[0] & a[1]),
            OperationTable::from_fn("join", 4, 2, |a| a[0] | a[1]),
        ],
    )
    .expect("valid tables")
}

/// Two elements, no operations. Not modular; the negative control.
pub fn two_element_set() -> FiniteAlgebra {
    FiniteAlgebra::new("set2", 2, vec![]).expect("valid tables")
}

/// Every corpus algebra, in a fixed order.
pub fn all() -> Vec<FiniteAlgebra> {
    vec![
        z(2),
        z(3),
        z(4),
        z2xz2(),
        s3(),
        d4(),
        two_chain(),
        diamond(),
        two_element_set(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Element;

    fn is_group(a: &FiniteAlgebra) {
        let mul = a.op_index("mul").unwrap();
        let inv = a.op_index("inv").unwrap();
        let e = a.op_index("e").unwrap();
        let id = a.apply(e, &[]);
        for x in a.elements() {
            assert_eq!(a.apply(mul, &[x, id]), x);
            assert_eq!(a.apply(mul, &[id, x]), x);
            assert_eq!(a.apply(mul, &[x, a.apply(inv, &[x])]), id);
            for y in a.elements() {
                for z in a.elements() {
                    let xy_z = a.apply(mul, &[a.apply(mul, &[x, y]), z]);
                    let x_yz = a.apply(mul, &[x, a.apply(mul, &[y, z])]);
                    assert_eq!(xy_z, x_yz);
                }
            }
        }
    }

    #[test]
    fn groups_are_groups() {
        for a in [z(2), z(3), z(4), z2xz2(), s3(), d4()] {
            is_group(&a);
        }
    }

    #[test]
    fn s3_is_not_abelian() {
        let a = s3();
        let mul = a.op_index("mul").unwrap();
        let (t, u) = (Element(1), Element(2));
        assert_ne!(a.apply(mul, &[t, u]), a.apply(mul, &[u, t]));
    }

    fn is_lattice(a: &FiniteAlgebra) {
        let m = a.op_index("meet").unwrap();
        let j = a.op_index("join").unwrap();
        for x in a.elements() {
            for y in a.elements() {
                assert_eq!(a.apply(m, &[x, y]), a.apply(m, &[y, x]));
                assert_eq!(a.apply(j, &[x, y]), a.apply(j, &[y, x]));
                // absorption
                assert_eq!(a.apply(m, &[x, a.apply(j, &[x, y])]), x);
                assert_eq!(a.apply(j, &[x, a.apply(m, &[x, y])]), x);
            }
        }
    }

    #[test]
    fn lattices_are_lattices() {
        is_lattice(&two_chain());
        is_lattice(&diamond());
    }
}
