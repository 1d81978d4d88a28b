//! Discrete cube {0,1}^d combinatorics: vertices, faces, morphisms,
//! configurations, corners, and the coordinate-deleting doubling maps.
//!
//! Vertex convention shared by the whole crate: bit i-1 of the index is
//! coordinate ω_i (little-endian), so the ceiling {ω_d = 1} is the top half
//! of the index range and the floor/ceiling split is a mask onbit d-1.

use crate::error::{Error, Result};
use crate::system::Point;

/// A vertex of {0,1}^d, identified with its bit pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub d: usize,
    pub bits: usize,
}

impl Vertex {
    pub fn new(d: usize, bits: usize) -> Result<Self> {
        if bits >> d != 0 {
            return Err(Error::InvalidIndex { index: bits, dim: d });
        }
        Ok(Vertex { d, bits })
    }

    /// Coordinate ω_i, 1-based.
    pub fn coord(&self, i: usize) -> usize {
        (self.bits >> (i - 1)) & 1
    }
}

/// A face of {0,1}^d: the set of vertices with prescribed values on a set of
/// coordinates. `mask` has bit i-1 set when coordinate ω_i is constrained;
/// `values` holds the prescribed bits (a subset of `mask`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    d: usize,
    mask: usize,
    values: usize,
}

/// Face filters for [`enumerate_faces`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceFilter {
    All,
    Upper,
    Lower,
    Hyperface,
    UpperHyperface,
    PureCeiling,
    Mixed,
}

impl Face {
    pub fn new(d: usize, constraints: &[(usize, usize)]) -> Result<Self> {
        let mut mask = 0usize;
        let mut values = 0usize;
        for &(pos, val) in constraints {
            if pos == 0 || pos > d {
                return Err(Error::InvalidIndex { index: pos, dim: d });
            }
            if val > 1 {
                return Err(Error::InvalidParameter(format!(
                    "coordinate value {val} is not a bit"
                )));
            }
            let bit = 1 << (pos - 1);
            if mask & bit != 0 {
                return Err(Error::InvalidParameter(format!(
                    "coordinate {pos} constrained twice"
                )));
            }
            mask |= bit;
            values |= val << (pos - 1);
        }
        Ok(Face { d, mask, values })
    }

    pub fn full_cube(d: usize) -> Self {
        Face { d, mask: 0, values: 0 }
    }

    /// The upper face whose constrained positions are the bits of `mask`.
    pub fn upper_from_mask(d: usize, mask: usize) -> Self {
        Face { d, mask, values: mask }
    }

    pub fn dim_ambient(&self) -> usize {
        self.d
    }

    pub fn codim(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn constraint_mask(&self) -> usize {
        self.mask
    }

    pub fn constraint_values(&self) -> usize {
        self.values
    }

    pub fn is_upper(&self) -> bool {
        self.values == self.mask
    }

    pub fn is_lower(&self) -> bool {
        self.values == 0
    }

    pub fn is_hyperface(&self) -> bool {
        self.codim() == 1
    }

    /// Upper and contained in {ω_d = 1}.
    pub fn is_pure_ceiling(&self) -> bool {
        self.is_upper() && self.d >= 1 && (self.mask >> (self.d - 1)) & 1 == 1
    }

    /// Upper but not pure ceiling.
    pub fn is_mixed(&self) -> bool {
        self.is_upper() && !self.is_pure_ceiling()
    }

    #[inline]
    pub fn contains_bits(&self, bits: usize) -> bool {
        bits & self.mask == self.values
    }

    pub fn contains(&self, v: Vertex) -> Result<bool> {
        if v.d != self.d {
            return Err(Error::DimensionMismatch {
                left: v.d,
                right: self.d,
            });
        }
        Ok(self.contains_bits(v.bits))
    }

    /// Intersection, None when the constraints conflict (empty set).
    pub fn intersect(&self, other: &Face) -> Option<Face> {
        debug_assert_eq!(self.d, other.d);
        let common = self.mask & other.mask;
        if self.values & common != other.values & common {
            return None;
        }
        Some(Face {
            d: self.d,
            mask: self.mask | other.mask,
            values: self.values | other.values,
        })
    }

    /// Set inclusion of faces: self ⊆ other iff other's constraints are a
    /// sub-assignment of self's.
    pub fn subset_of(&self, other: &Face) -> bool {
        debug_assert_eq!(self.d, other.d);
        other.mask & self.mask == other.mask && self.values & other.mask == other.values
    }

    pub fn vertices(&self) -> Vec<usize> {
        (0..1usize << self.d)
            .filter(|&bits| self.contains_bits(bits))
            .collect()
    }

    pub fn describe(&self) -> String {
        if self.mask == 0 {
            return format!("{{0,1}}^{}", self.d);
        }
        let parts: Vec<String> = (1..=self.d)
            .filter(|i| (self.mask >> (i - 1)) & 1 == 1)
            .map(|i| format!("w{}={}", i, (self.values >> (i - 1)) & 1))
            .collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// All faces of {0,1}^d passing the filter, ordered by (mask, values).
pub fn enumerate_faces(d: usize, filter: FaceFilter) -> Result<Vec<Face>> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut out = Vec::new();
    for mask in 0..1usize << d {
        let mut values = mask;
        loop {
            let f = Face { d, mask, values };
            let keep = match filter {
                FaceFilter::All => true,
                FaceFilter::Upper => f.is_upper(),
                FaceFilter::Lower => f.is_lower(),
                FaceFilter::Hyperface => f.is_hyperface(),
                FaceFilter::UpperHyperface => f.is_hyperface() && f.is_upper(),
                FaceFilter::PureCeiling => f.is_pure_ceiling(),
                FaceFilter::Mixed => f.is_mixed(),
            };
            if keep {
                out.push(f);
            }
            if values == 0 {
                break;
            }
            values = (values - 1) & mask;
        }
    }
    out.sort();
    Ok(out)
}

/// Total order on the 2^d upper faces: strict subsets come first, every pure
/// ceiling face precedes every mixed face, ties broken by constraint mask.
/// First entry is the top vertex {1⃗}, last is the full cube.
pub fn order_upper_faces(d: usize) -> Result<Vec<Face>> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut faces: Vec<Face> = (0..1usize << d)
        .map(|mask| Face::upper_from_mask(d, mask))
        .collect();
    let top_bit = 1usize << (d - 1);
    faces.sort_by_key(|f| {
        let pure = f.mask & top_bit != 0;
        // larger constraint sets (smaller faces) first; pure ceiling block first
        (!pure as usize, std::cmp::Reverse(f.codim()), f.mask)
    });
    Ok(faces)
}

/// One coordinate of a cube morphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphismCoord {
    Const0,
    Const1,
    /// ω_i of the source, 1-based.
    Proj(usize),
    /// 1 − ω_i of the source, 1-based.
    NegProj(usize),
}

/// A morphism of discrete cubes {0,1}^source → {0,1}^target: every target
/// coordinate is constant 0, constant 1, a source coordinate, or a negated
/// source coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeMorphism {
    source: usize,
    coords: Vec<MorphismCoord>,
}

impl CubeMorphism {
    pub fn new(source: usize, coords: Vec<MorphismCoord>) -> Result<Self> {
        for c in &coords {
            match *c {
                MorphismCoord::Proj(i) | MorphismCoord::NegProj(i)
                    if (i == 0 || i > source) => {
                        return Err(Error::InvalidIndex {
                            index: i,
                            dim: source,
                        });
                    }
                _ => {}
            }
        }
        Ok(CubeMorphism { source, coords })
    }

    pub fn identity(d: usize) -> Self {
        CubeMorphism {
            source: d,
            coords: (1..=d).map(MorphismCoord::Proj).collect(),
        }
    }

    /// The coordinate-deleting map {0,1}^(d+1) → {0,1}^d that forgets ω_i.
    pub fn delete_coordinate(i: usize, d: usize) -> Result<Self> {
        if i == 0 || i > d + 1 {
            return Err(Error::InvalidIndex { index: i, dim: d + 1 });
        }
        let coords = (1..=d)
            .map(|j| MorphismCoord::Proj(if j < i { j } else { j + 1 }))
            .collect();
        Ok(CubeMorphism {
            source: d + 1,
            coords,
        })
    }

    /// ω ↦ 1−ω on every coordinate.
    pub fn negation(d: usize) -> Self {
        CubeMorphism {
            source: d,
            coords: (1..=d).map(MorphismCoord::NegProj).collect(),
        }
    }

    pub fn source_dim(&self) -> usize {
        self.source
    }

    pub fn target_dim(&self) -> usize {
        self.coords.len()
    }

    /// Evaluate on a source vertex given as bits.
    pub fn apply_bits(&self, bits: usize) -> usize {
        let mut out = 0usize;
        for (j, c) in self.coords.iter().enumerate() {
            let bit = match *c {
                MorphismCoord::Const0 => 0,
                MorphismCoord::Const1 => 1,
                MorphismCoord::Proj(i) => (bits >> (i - 1)) & 1,
                MorphismCoord::NegProj(i) => 1 - ((bits >> (i - 1)) & 1),
            };
            out |= bit << j;
        }
        out
    }

    /// self ∘ inner, where inner maps into self's source cube.
    pub fn compose(&self, inner: &CubeMorphism) -> Result<CubeMorphism> {
        if inner.target_dim() != self.source {
            return Err(Error::DimensionMismatch {
                left: inner.target_dim(),
                right: self.source,
            });
        }
        let coords = self
            .coords
            .iter()
            .map(|c| match *c {
                MorphismCoord::Const0 => MorphismCoord::Const0,
                MorphismCoord::Const1 => MorphismCoord::Const1,
                MorphismCoord::Proj(i) => inner.coords[i - 1],
                MorphismCoord::NegProj(i) => match inner.coords[i - 1] {
                    MorphismCoord::Const0 => MorphismCoord::Const1,
                    MorphismCoord::Const1 => MorphismCoord::Const0,
                    MorphismCoord::Proj(k) => MorphismCoord::NegProj(k),
                    MorphismCoord::NegProj(k) => MorphismCoord::Proj(k),
                },
            })
            .collect();
        Ok(CubeMorphism {
            source: inner.source,
            coords,
        })
    }

    /// All morphisms {0,1}^source → {0,1}^target; (2 + 2·source)^target of them.
    pub fn enumerate(source: usize, target: usize) -> Vec<CubeMorphism> {
        let mut options = vec![MorphismCoord::Const0, MorphismCoord::Const1];
        for i in 1..=source {
            options.push(MorphismCoord::Proj(i));
            options.push(MorphismCoord::NegProj(i));
        }
        let mut out = Vec::new();
        let mut coords = vec![MorphismCoord::Const0; target];
        fn rec(
            options: &[MorphismCoord],
            coords: &mut Vec<MorphismCoord>,
            pos: usize,
            source: usize,
            out: &mut Vec<CubeMorphism>,
        ) {
            if pos == coords.len() {
                out.push(CubeMorphism {
                    source,
                    coords: coords.clone(),
                });
                return;
            }
            for &o in options {
                coords[pos] = o;
                rec(options, coords, pos + 1, source, out);
            }
        }
        rec(&options, &mut coords, 0, source, &mut out);
        out
    }
}

/// A d-configuration: one point per vertex, indexed bits-ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    d: usize,
    vals: Vec<Point>,
}

impl Configuration {
    pub fn new(d: usize, vals: Vec<Point>) -> Result<Self> {
        if vals.len() != 1 << d {
            return Err(Error::InvalidParameter(format!(
                "{} vertex values for dimension {d}",
                vals.len()
            )));
        }
        Ok(Configuration { d, vals })
    }

    pub fn constant(d: usize, x: Point) -> Self {
        Configuration {
            d,
            vals: vec![x; 1 << d],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[Point] {
        &self.vals
    }

    #[inline]
    pub fn at_bits(&self, bits: usize) -> Point {
        self.vals[bits]
    }

    pub fn at(&self, v: Vertex) -> Result<Point> {
        if v.d != self.d {
            return Err(Error::DimensionMismatch {
                left: v.d,
                right: self.d,
            });
        }
        Ok(self.vals[v.bits])
    }

    pub fn is_constant(&self) -> bool {
        self.vals.iter().all(|&v| v == self.vals[0])
    }

    /// Pullback along a morphism into this configuration's cube:
    /// result(v) = self(f(v)).
    pub fn apply_morphism(&self, f: &CubeMorphism) -> Result<Configuration> {
        if f.target_dim() != self.d {
            return Err(Error::DimensionMismatch {
                left: f.target_dim(),
                right: self.d,
            });
        }
        let r = f.source_dim();
        let vals = (0..1usize << r)
            .map(|bits| self.vals[f.apply_bits(bits)])
            .collect();
        Ok(Configuration { d: r, vals })
    }

    /// Doubling along coordinate i: pull back along the map that deletes ω_i,
    /// raising the dimension by one. i = d+1 duplicates floor and ceiling.
    pub fn double(&self, i: usize) -> Result<Configuration> {
        let f = CubeMorphism::delete_coordinate(i, self.d)?;
        self.apply_morphism(&f)
    }

    /// Split on the last coordinate into (floor, ceiling).
    pub fn split_floor_ceiling(&self) -> Result<(Configuration, Configuration)> {
        if self.d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let half = 1usize << (self.d - 1);
        Ok((
            Configuration {
                d: self.d - 1,
                vals: self.vals[..half].to_vec(),
            },
            Configuration {
                d: self.d - 1,
                vals: self.vals[half..].to_vec(),
            },
        ))
    }

    /// Inverse of [`split_floor_ceiling`].
    pub fn join_floor_ceiling(floor: &Configuration, ceiling: &Configuration) -> Result<Configuration> {
        if floor.d != ceiling.d {
            return Err(Error::DimensionMismatch {
                left: floor.d,
                right: ceiling.d,
            });
        }
        let mut vals = floor.vals.clone();
        vals.extend_from_slice(&ceiling.vals);
        Ok(Configuration {
            d: floor.d + 1,
            vals,
        })
    }

    /// Restriction to the subcube of vertices below `top_bits` (the set bits
    /// of the argument are the free coordinates), re-indexed over {0,1}^k.
    pub fn restrict_below(&self, top_bits: usize) -> Configuration {
        let free: Vec<usize> = (0..self.d).filter(|&i| (top_bits >> i) & 1 == 1).collect();
        let k = free.len();
        let vals = (0..1usize << k)
            .map(|small| {
                let mut bits = 0usize;
                for (j, &pos) in free.iter().enumerate() {
                    bits |= ((small >> j) & 1) << pos;
                }
                self.vals[bits]
            })
            .collect();
        Configuration { d: k, vals }
    }
}

/// Corner orientation for [`corner`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerKind {
    /// Every vertex x except the top vertex 1⃗, which carries y.
    Lower,
    /// x at the bottom vertex 0⃗, y everywhere else.
    Upper,
}

/// The lower or upper corner configuration on (x, y).
pub fn corner(x: Point, y: Point, d: usize, kind: CornerKind) -> Configuration {
    let n = 1usize << d;
    let vals = match kind {
        CornerKind::Lower => {
            let mut v = vec![x; n];
            v[n - 1] = y;
            v
        }
        CornerKind::Upper => {
            let mut v = vec![y; n];
            v[0] = x;
            v
        }
    };
    Configuration { d, vals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn face_counts() {
        for d in 1..=5 {
            assert_eq!(enumerate_faces(d, FaceFilter::All).unwrap().len(), 3usize.pow(d as u32));
            assert_eq!(enumerate_faces(d, FaceFilter::Upper).unwrap().len(), 1 << d);
            assert_eq!(enumerate_faces(d, FaceFilter::Hyperface).unwrap().len(), 2 * d);
            assert_eq!(enumerate_faces(d, FaceFilter::UpperHyperface).unwrap().len(), d);
            assert_eq!(
                enumerate_faces(d, FaceFilter::PureCeiling).unwrap().len(),
                1 << (d - 1)
            );
            assert_eq!(enumerate_faces(d, FaceFilter::Mixed).unwrap().len(), 1 << (d - 1));
        }
        assert!(enumerate_faces(0, FaceFilter::All).is_err());
    }

    #[test]
    fn upper_faces_d2() {
        let faces = enumerate_faces(2, FaceFilter::Upper).unwrap();
        let descs: Vec<String> = faces.iter().map(|f| f.describe()).collect();
        assert_eq!(descs, vec!["{0,1}^2", "{w1=1}", "{w2=1}", "{w1=1,w2=1}"]);
    }

    #[test]
    fn pure_ceiling_faces_d3_lie_in_ceiling() {
        let faces = enumerate_faces(3, FaceFilter::PureCeiling).unwrap();
        assert_eq!(faces.len(), 4);
        for f in faces {
            for bits in f.vertices() {
                assert_eq!((bits >> 2) & 1, 1);
            }
        }
    }

    #[test]
    fn face_membership() {
        let d = 3;
        let full = Face::full_cube(d);
        for bits in 0..8 {
            assert!(full.contains(Vertex::new(d, bits).unwrap()).unwrap());
        }
        let f = Face::new(d, &[(1, 1), (3, 1)]).unwrap();
        assert!(f.contains(Vertex::new(d, 0b101).unwrap()).unwrap());
        assert!(!f.contains(Vertex::new(d, 0b001).unwrap()).unwrap());
        assert!(f.contains(Vertex::new(2, 0b01).unwrap()).is_err());
    }

    #[test]
    fn hyperfaces_d1() {
        let faces = enumerate_faces(1, FaceFilter::Hyperface).unwrap();
        assert_eq!(faces.len(), 2);
        assert_eq!(faces[0].vertices(), vec![0]);
        assert_eq!(faces[1].vertices(), vec![1]);
    }

    #[test]
    fn morphism_apply() {
        let c = Configuration::new(1, vec![10, 20]).unwrap();
        let id = CubeMorphism::identity(1);
        assert_eq!(c.apply_morphism(&id).unwrap(), c);

        // constant-0 morphism collapses to the value at 0⃗
        let f = CubeMorphism::new(2, vec![MorphismCoord::Const0]).unwrap();
        let pulled = c.apply_morphism(&f).unwrap();
        assert_eq!(pulled.values(), &[10, 10, 10, 10]);

        // single projection {0,1}^2 → {0,1}: (a,b) pulled to (a,a,b,b)
        let f = CubeMorphism::new(2, vec![MorphismCoord::Proj(2)]).unwrap();
        let pulled = c.apply_morphism(&f).unwrap();
        assert_eq!(pulled.values(), &[10, 10, 20, 20]);
    }

    #[test]
    fn doubling_examples() {
        let c = Configuration::new(1, vec![5, 7]).unwrap();
        // duplicate along the last coordinate: (c, c)
        let dd = c.double(2).unwrap();
        assert_eq!(dd.values(), &[5, 7, 5, 7]);
        // delete coordinate 1: (a,a,b,b) in (00,10,01,11) order
        let dd = c.double(1).unwrap();
        assert_eq!(dd.values(), &[5, 5, 7, 7]);

        let k = Configuration::constant(2, 3);
        assert_eq!(k.double(1).unwrap(), Configuration::constant(3, 3));
    }

    #[test]
    fn doubling_face_preimages() {
        // preimage of upper hyperface {ω_j = 1} under delete-coordinate i
        for d in 1..=4 {
            for i in 1..=d + 1 {
                let m = CubeMorphism::delete_coordinate(i, d).unwrap();
                for j in 1..=d {
                    let face = Face::new(d, &[(j, 1)]).unwrap();
                    let expect_pos = if j < i { j } else { j + 1 };
                    for bits in 0..1usize << (d + 1) {
                        let inside = face.contains_bits(m.apply_bits(bits));
                        let expected = (bits >> (expect_pos - 1)) & 1 == 1;
                        assert_eq!(inside, expected, "d={d} i={i} j={j} bits={bits:b}");
                    }
                }
            }
        }
    }

    #[test]
    fn corners() {
        assert_eq!(corner(4, 4, 3, CornerKind::Lower), Configuration::constant(3, 4));
        assert_eq!(corner(1, 2, 2, CornerKind::Lower).values(), &[1, 1, 1, 2]);
        assert_eq!(corner(1, 2, 2, CornerKind::Upper).values(), &[1, 2, 2, 2]);
    }

    #[test]
    fn split_and_join() {
        let c = Configuration::new(2, vec![1, 2, 3, 4]).unwrap();
        let (f, cl) = c.split_floor_ceiling().unwrap();
        assert_eq!(f.values(), &[1, 2]);
        assert_eq!(cl.values(), &[3, 4]);
        assert_eq!(Configuration::join_floor_ceiling(&f, &cl).unwrap(), c);

        let k = Configuration::constant(3, 9);
        let (f, cl) = k.split_floor_ceiling().unwrap();
        assert_eq!(f, Configuration::constant(2, 9));
        assert_eq!(cl, Configuration::constant(2, 9));
    }

    #[test]
    fn upper_face_order_properties() {
        for d in 1..=5 {
            let order = order_upper_faces(d).unwrap();
            assert_eq!(order.len(), 1 << d);
            assert_eq!(order[0], Face::upper_from_mask(d, (1 << d) - 1));
            assert_eq!(*order.last().unwrap(), Face::full_cube(d));
            // a permutation of the upper faces
            let mut sorted = order.clone();
            sorted.sort();
            assert_eq!(sorted, enumerate_faces(d, FaceFilter::Upper).unwrap());
            // respects inclusion, and pure ceiling before mixed
            for i in 0..order.len() {
                for j in 0..order.len() {
                    if i < j {
                        assert!(
                            !(order[j].subset_of(&order[i]) && order[j] != order[i]),
                            "inclusion violated at d={d}: {} before {}",
                            order[i].describe(),
                            order[j].describe()
                        );
                        assert!(
                            !(order[i].is_mixed() && order[j].is_pure_ceiling()),
                            "pure ceiling after mixed at d={d}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn order_upper_faces_d2_expectations() {
        let order = order_upper_faces(2).unwrap();
        let descs: Vec<String> = order.iter().map(|f| f.describe()).collect();
        // {1⃗} first, then the other pure ceiling face {ω_2=1}, then mixed
        assert_eq!(descs[0], "{w1=1,w2=1}");
        assert_eq!(descs[1], "{w2=1}");
        assert!(order[2].is_mixed() && order[3].is_mixed());
    }

    proptest! {
        #[test]
        fn morphism_composition(seed in 0u64..5000) {
            // c ∘ (f ∘ g) computed two ways on random small data
            let mut s = seed;
            let mut next = move |m: usize| { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 33) as usize % m };
            let d = 1 + next(3);
            let r = 1 + next(3);
            let q = 1 + next(3);
            let c = Configuration::new(d, (0..1u16 << d).map(|_| next(100) as u16).collect()).unwrap();
            let fs = CubeMorphism::enumerate(r, d);
            let gs = CubeMorphism::enumerate(q, r);
            let f = &fs[next(fs.len())];
            let g = &gs[next(gs.len())];
            let lhs = c.apply_morphism(f).unwrap().apply_morphism(g).unwrap();
            let rhs = c.apply_morphism(&f.compose(g).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
