//! Labeled hypercubes: elements of `A^(2^S)` for a finite direction set `S`.
//!
//! A cube over a shape with `m` directions is a flat `Vec<Element>` of
//! length `2^m` in colexicographic vertex order: the vertex assigning bit
//! `b_j` to the `j`-th smallest direction sits at index `sum b_j << j`.
//! So for directions (i, j) a square reads `(a, b, c, d)` with `a` at
//! (0,0), `b` at (1,0), `c` at (0,1), `d` at (1,1): direction-i lines are
//! (a,b) and (c,d), direction-j lines are (a,c) and (b,d).

use crate::algebra::Element;
use crate::day::DaySequence;
use crate::error::{Error, Result};

pub type Cube = Vec<Element>;

/// A sorted set of direction indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubeShape {
    dirs: Vec<usize>,
}

impl CubeShape {
    pub fn new(mut dirs: Vec<usize>) -> CubeShape {
        dirs.sort_unstable();
        dirs.dedup();
        CubeShape { dirs }
    }

    /// The shape {0, .., n-1}.
    pub fn first(n: usize) -> CubeShape {
        CubeShape {
            dirs: (0..n).collect(),
        }
    }

    pub fn dirs(&self) -> &[usize] {
        &self.dirs
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn vertex_count(&self) -> usize {
        1 << self.dirs.len()
    }

    /// Position of a direction inside the sorted shape.
    pub fn pos(&self, dir: usize) -> Result<usize> {
        self.dirs.binary_search(&dir).map_err(|_| Error::DirectionNotInShape {
            dir,
            shape: self.dirs.clone(),
        })
    }

    pub fn contains(&self, dir: usize) -> bool {
        self.dirs.binary_search(&dir).is_ok()
    }

    pub fn without(&self, dir: usize) -> CubeShape {
        CubeShape {
            dirs: self.dirs.iter().copied().filter(|&d| d != dir).collect(),
        }
    }

    pub fn minus(&self, other: &CubeShape) -> CubeShape {
        CubeShape {
            dirs: self
                .dirs
                .iter()
                .copied()
                .filter(|d| !other.contains(*d))
                .collect(),
        }
    }

    pub fn union(&self, other: &CubeShape) -> CubeShape {
        let mut dirs = self.dirs.clone();
        dirs.extend_from_slice(&other.dirs);
        CubeShape::new(dirs)
    }

    pub fn is_subset_of(&self, other: &CubeShape) -> bool {
        self.dirs.iter().all(|d| other.contains(*d))
    }
}

/// Insert `bit` at position `pos` of `mask`, shifting higher bits left.
pub(crate) fn insert_bit(mask: usize, pos: usize, bit: usize) -> usize {
    let low = mask & ((1 << pos) - 1);
    let high = mask >> pos;
    (high << (pos + 1)) | (bit << pos) | low
}

/// Drop the bit at position `pos` of `mask`, shifting higher bits right.
pub(crate) fn remove_bit(mask: usize, pos: usize) -> usize {
    let low = mask & ((1 << pos) - 1);
    let high = mask >> (pos + 1);
    (high << pos) | low
}

/// The face of `cube` where direction `dir` is fixed to `side`.
pub fn face(shape: &CubeShape, cube: &[Element], dir: usize, side: usize) -> Result<Cube> {
    let p = shape.pos(dir)?;
    let half = shape.vertex_count() >> 1;
    let mut out = Vec::with_capacity(half);
    for b in 0..half {
        out.push(cube[insert_bit(b, p, side)]);
    }
    Ok(out)
}

/// Replace the `(1 - side)`-face in direction `dir` by a copy of the
/// `side`-face: the result reads `cube[f with dir set to side]` everywhere.
pub fn refl(shape: &CubeShape, cube: &[Element], dir: usize, side: usize) -> Result<Cube> {
    let p = shape.pos(dir)?;
    let bit = 1 << p;
    Ok((0..shape.vertex_count())
        .map(|b| cube[(b & !bit) | (side << p)])
        .collect())
}

/// Swap the two faces in direction `dir`.
pub fn sym(shape: &CubeShape, cube: &[Element], dir: usize) -> Result<Cube> {
    let p = shape.pos(dir)?;
    let bit = 1 << p;
    Ok((0..shape.vertex_count()).map(|b| cube[b ^ bit]).collect())
}

/// Reassemble a cube over `shape` from its two faces in direction `dir`.
pub fn glue_faces(
    shape: &CubeShape,
    dir: usize,
    lo: &[Element],
    hi: &[Element],
) -> Result<Cube> {
    let p = shape.pos(dir)?;
    let bit = 1 << p;
    Ok((0..shape.vertex_count())
        .map(|b| {
            let reduced = remove_bit(b, p);
            if b & bit != 0 {
                hi[reduced]
            } else {
                lo[reduced]
            }
        })
        .collect())
}

/// Split a cube over `shape` into an outer cube over `q` whose labels are
/// the inner cubes over `shape - q`. Outer index runs colex over `q`.
pub fn cut(shape: &CubeShape, q: &CubeShape, cube: &[Element]) -> Result<Vec<Cube>> {
    if !q.is_subset_of(shape) {
        return Err(Error::DirectionNotInShape {
            dir: *q.dirs().iter().find(|d| !shape.contains(**d)).unwrap(),
            shape: shape.dirs().to_vec(),
        });
    }
    let rest = shape.minus(q);
    let q_positions: Vec<usize> = q.dirs().iter().map(|&d| shape.pos(d).unwrap()).collect();
    let rest_positions: Vec<usize> = rest.dirs().iter().map(|&d| shape.pos(d).unwrap()).collect();
    let mut out = Vec::with_capacity(1 << q.dim());
    for outer in 0..(1usize << q.dim()) {
        let mut inner_cube = Vec::with_capacity(1 << rest.dim());
        for inner in 0..(1usize << rest.dim()) {
            let mut b = 0usize;
            for (j, &p) in q_positions.iter().enumerate() {
                b |= ((outer >> j) & 1) << p;
            }
            for (j, &p) in rest_positions.iter().enumerate() {
                b |= ((inner >> j) & 1) << p;
            }
            inner_cube.push(cube[b]);
        }
        out.push(inner_cube);
    }
    Ok(out)
}

/// Inverse of `cut`: assemble a cube over `shape` from an outer family of
/// inner cubes over `shape - q`, indexed colex over `q`.
pub fn glue(shape: &CubeShape, q: &CubeShape, outer: &[Cube]) -> Result<Cube> {
    if !q.is_subset_of(shape) {
        return Err(Error::DirectionNotInShape {
            dir: *q.dirs().iter().find(|d| !shape.contains(**d)).unwrap(),
            shape: shape.dirs().to_vec(),
        });
    }
    if outer.len() != 1 << q.dim() {
        return Err(Error::CarrierMismatch {
            expected: 1 << q.dim(),
            got: outer.len(),
        });
    }
    let rest = shape.minus(q);
    let q_positions: Vec<usize> = q.dirs().iter().map(|&d| shape.pos(d).unwrap()).collect();
    let rest_positions: Vec<usize> = rest.dirs().iter().map(|&d| shape.pos(d).unwrap()).collect();
    let mut cube = vec![Element(0); shape.vertex_count()];
    for (b, slot) in cube.iter_mut().enumerate() {
        let mut outer_idx = 0usize;
        for (j, &p) in q_positions.iter().enumerate() {
            outer_idx |= ((b >> p) & 1) << j;
        }
        let mut inner_idx = 0usize;
        for (j, &p) in rest_positions.iter().enumerate() {
            inner_idx |= ((b >> p) & 1) << j;
        }
        *slot = outer[outer_idx][inner_idx];
    }
    Ok(cube)
}

/// A line of a cube: the pair along `direction` over a base vertex of the
/// remaining directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Line {
    pub direction: usize,
    /// Colex vertex index over the shape minus `direction`.
    pub base: usize,
    pub low: Element,
    pub high: Element,
}

/// All lines of `cube` in `direction`, ordered by base vertex.
pub fn lines(shape: &CubeShape, cube: &[Element], direction: usize) -> Result<Vec<Line>> {
    let p = shape.pos(direction)?;
    let half = shape.vertex_count() >> 1;
    let mut out = Vec::with_capacity(half);
    for base in 0..half {
        out.push(Line {
            direction,
            base,
            low: cube[insert_bit(base, p, 0)],
            high: cube[insert_bit(base, p, 1)],
        });
    }
    Ok(out)
}

/// The lines in `direction` whose base is not the all-ones vertex.
pub fn supporting_lines(shape: &CubeShape, cube: &[Element], direction: usize) -> Result<Vec<Line>> {
    let mut all = lines(shape, cube, direction)?;
    all.pop();
    Ok(all)
}

/// The line in `direction` at the all-ones base vertex.
pub fn pivot_line(shape: &CubeShape, cube: &[Element], direction: usize) -> Result<Line> {
    let all = lines(shape, cube, direction)?;
    Ok(*all.last().expect("nonempty"))
}

/// The generator cube for direction `dir`: label `y` where `dir` is 1,
/// `x` where it is 0.
pub fn cube_generator(shape: &CubeShape, dir: usize, x: Element, y: Element) -> Result<Cube> {
    let p = shape.pos(dir)?;
    let bit = 1 << p;
    Ok((0..shape.vertex_count())
        .map(|b| if b & bit != 0 { y } else { x })
        .collect())
}

/// The cube with `y` at the all-ones vertex and `x` everywhere else.
pub fn commutator_cube(shape: &CubeShape, x: Element, y: Element) -> Cube {
    let top = shape.vertex_count() - 1;
    (0..shape.vertex_count())
        .map(|b| if b == top { y } else { x })
        .collect()
}

/// The 2x2 cross sections of `cube` in directions (i, j), ordered by base
/// vertex over the remaining directions. Each section is a colex 4-tuple
/// (i varying fastest).
pub fn cross_section_squares(
    shape: &CubeShape,
    cube: &[Element],
    i: usize,
    j: usize,
) -> Result<Vec<[Element; 4]>> {
    let pi = shape.pos(i)?;
    let pj = shape.pos(j)?;
    if i == j {
        return Err(Error::DirectionNotInShape {
            dir: j,
            shape: shape.without(i).dirs().to_vec(),
        });
    }
    let (plo, phi) = (pi.min(pj), pi.max(pj));
    let quarter = shape.vertex_count() >> 2;
    let mut out = Vec::with_capacity(quarter);
    for base in 0..quarter {
        let at = |fi: usize, fj: usize| {
            let (blo, bhi) = if pi < pj { (fi, fj) } else { (fj, fi) };
            cube[insert_bit(insert_bit(base, plo, blo), phi, bhi)]
        };
        out.push([at(0, 0), at(1, 0), at(0, 1), at(1, 1)]);
    }
    Ok(out)
}

/// The shift rotation of `cube` in directions (i, j) with chain index `e`:
/// pointwise `m_e` applied to the cube, its i-0 reflection, and their j-1
/// reflections.
pub fn shift_rotation(
    day: &DaySequence,
    shape: &CubeShape,
    cube: &[Element],
    e: usize,
    i: usize,
    j: usize,
) -> Result<Cube> {
    if e > day.k() {
        return Err(Error::Precondition(format!(
            "chain index {e} exceeds k = {}",
            day.k()
        )));
    }
    let pi = shape.pos(i)?;
    let pj = shape.pos(j)?;
    if i == j {
        return Err(Error::Precondition("rotation needs two distinct directions".into()));
    }
    let (ibit, jbit) = (1usize << pi, 1usize << pj);
    Ok((0..shape.vertex_count())
        .map(|b| {
            day.apply(
                e,
                cube[b | jbit],
                cube[b],
                cube[b & !ibit],
                cube[(b & !ibit) | jbit],
            )
        })
        .collect())
}

/// Iterated rotation along a path: step `t` applies the rotation with
/// chain index `path[t]` in the directions at positions (t, t+1) of the
/// shape. The path must be shorter than the dimension.
pub fn rotate_along_path(
    day: &DaySequence,
    shape: &CubeShape,
    cube: &[Element],
    path: &[usize],
) -> Result<Cube> {
    if path.len() >= shape.dim() {
        return Err(Error::Precondition(format!(
            "path of length {} needs dimension > {}, shape has {}",
            path.len(),
            path.len(),
            shape.dim()
        )));
    }
    let mut cur = cube.to_vec();
    for (t, &e) in path.iter().enumerate() {
        let i = shape.dirs()[t];
        let j = shape.dirs()[t + 1];
        cur = shift_rotation(day, shape, &cur, e, i, j)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(v: &[usize]) -> Vec<Element> {
        v.iter().map(|&x| Element(x)).collect()
    }

    #[test]
    fn face_refl_sym_on_a_square() {
        let s = CubeShape::first(2);
        // (a,b,c,d) = (0,1,2,3)
        let c = el(&[0, 1, 2, 3]);
        assert_eq!(face(&s, &c, 0, 0).unwrap(), el(&[0, 2]));
        assert_eq!(face(&s, &c, 0, 1).unwrap(), el(&[1, 3]));
        assert_eq!(face(&s, &c, 1, 0).unwrap(), el(&[0, 1]));
        assert_eq!(face(&s, &c, 1, 1).unwrap(), el(&[2, 3]));
        assert_eq!(refl(&s, &c, 0, 0).unwrap(), el(&[0, 0, 2, 2]));
        assert_eq!(refl(&s, &c, 1, 1).unwrap(), el(&[2, 3, 2, 3]));
        assert_eq!(sym(&s, &c, 0).unwrap(), el(&[1, 0, 3, 2]));
        assert_eq!(sym(&s, &c, 1).unwrap(), el(&[2, 3, 0, 1]));
    }

    #[test]
    fn unknown_direction_is_an_error() {
        let s = CubeShape::first(2);
        let c = el(&[0, 1, 2, 3]);
        assert!(face(&s, &c, 5, 0).is_err());
    }

    #[test]
    fn cut_then_glue_is_identity() {
        let s = CubeShape::new(vec![0, 2, 5]);
        let cube = el(&[0, 1, 2, 3, 4, 5, 6, 7]);
        for q_dirs in [vec![0], vec![2], vec![5], vec![0, 2], vec![0, 5], vec![2, 5], vec![0, 2, 5], vec![]] {
            let q = CubeShape::new(q_dirs);
            let parts = cut(&s, &q, &cube).unwrap();
            assert_eq!(glue(&s, &q, &parts).unwrap(), cube);
        }
    }

    #[test]
    fn cut_at_one_direction_matches_faces() {
        let s = CubeShape::first(3);
        let cube = el(&[0, 1, 2, 3, 4, 5, 6, 7]);
        for dir in 0..3 {
            let q = CubeShape::new(vec![dir]);
            let parts = cut(&s, &q, &cube).unwrap();
            assert_eq!(parts[0], face(&s, &cube, dir, 0).unwrap());
            assert_eq!(parts[1], face(&s, &cube, dir, 1).unwrap());
            let back = glue_faces(&s, dir, &parts[0], &parts[1]).unwrap();
            assert_eq!(back, cube);
        }
    }

    #[test]
    fn lines_pivot_and_support() {
        let s = CubeShape::first(2);
        let c = el(&[0, 1, 2, 3]);
        let ls = lines(&s, &c, 0).unwrap();
        assert_eq!(ls.len(), 2);
        assert_eq!((ls[0].low, ls[0].high), (Element(0), Element(1)));
        assert_eq!((ls[1].low, ls[1].high), (Element(2), Element(3)));
        let piv = pivot_line(&s, &c, 0).unwrap();
        assert_eq!((piv.low, piv.high), (Element(2), Element(3)));
        assert_eq!(supporting_lines(&s, &c, 0).unwrap().len(), 1);
    }

    #[test]
    fn generator_and_commutator_cubes() {
        let s = CubeShape::first(2);
        assert_eq!(
            cube_generator(&s, 0, Element(4), Element(7)).unwrap(),
            el(&[4, 7, 4, 7])
        );
        assert_eq!(
            cube_generator(&s, 1, Element(4), Element(7)).unwrap(),
            el(&[4, 4, 7, 7])
        );
        assert_eq!(commutator_cube(&s, Element(4), Element(7)), el(&[4, 4, 4, 7]));
    }

    #[test]
    fn cross_sections_of_a_cube() {
        let s = CubeShape::first(3);
        let c = el(&[0, 1, 2, 3, 4, 5, 6, 7]);
        let sq = cross_section_squares(&s, &c, 0, 1).unwrap();
        assert_eq!(sq, vec![[Element(0), Element(1), Element(2), Element(3)],
                            [Element(4), Element(5), Element(6), Element(7)]]);
        // order of (i, j) transposes each section
        let sq_t = cross_section_squares(&s, &c, 1, 0).unwrap();
        assert_eq!(sq_t[0], [Element(0), Element(2), Element(1), Element(3)]);
        let sq02 = cross_section_squares(&s, &c, 0, 2).unwrap();
        assert_eq!(sq02[0], [Element(0), Element(1), Element(4), Element(5)]);
    }
}
