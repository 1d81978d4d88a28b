//! Host–Kra and face cube groups inside G^(2^d), generated from face
//! elements [h]_F, with the ordered-word normal form and the pure
//! ceiling / mixed decomposition.

use std::collections::HashMap;

use crate::cube::{enumerate_faces, order_upper_faces, CubeMorphism, Face, FaceFilter};
use crate::error::{Error, Result};
use crate::group::{Elem, FiniteGroup};
use crate::orbit::{close_under, KeySet, Packing, SlotMap};
use crate::report::CheckReport;

/// An element of G^(2^d): one base-group element per vertex, bits-ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TupleElement {
    d: usize,
    entries: Vec<Elem>,
}

impl TupleElement {
    pub fn new(d: usize, entries: Vec<Elem>) -> Result<Self> {
        if entries.len() != 1 << d {
            return Err(Error::InvalidParameter(format!(
                "{} entries for dimension {d}",
                entries.len()
            )));
        }
        Ok(TupleElement { d, entries })
    }

    pub fn identity(group: &FiniteGroup, d: usize) -> Self {
        TupleElement {
            d,
            entries: vec![group.identity(); 1 << d],
        }
    }

    /// The diagonal h^[d].
    pub fn diagonal(h: Elem, d: usize) -> Self {
        TupleElement {
            d,
            entries: vec![h; 1 << d],
        }
    }

    /// [h]_F: h on the face, identity elsewhere.
    pub fn face_generator(group: &FiniteGroup, h: Elem, face: &Face, d: usize) -> Result<Self> {
        if face.dim_ambient() != d {
            return Err(Error::DimensionMismatch {
                left: face.dim_ambient(),
                right: d,
            });
        }
        let entries = (0..1usize << d)
            .map(|bits| if face.contains_bits(bits) { h } else { group.identity() })
            .collect();
        Ok(TupleElement { d, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[Elem] {
        &self.entries
    }

    #[inline]
    pub fn at_bits(&self, bits: usize) -> Elem {
        self.entries[bits]
    }

    pub fn is_identity(&self, group: &FiniteGroup) -> bool {
        self.entries.iter().all(|&e| e == group.identity())
    }

    /// Vertexwise product self·other.
    pub fn mul(&self, other: &TupleElement, group: &FiniteGroup) -> Result<TupleElement> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                left: self.d,
                right: other.d,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| group.mul(a, b))
            .collect();
        Ok(TupleElement { d: self.d, entries })
    }

    pub fn inverse(&self, group: &FiniteGroup) -> TupleElement {
        TupleElement {
            d: self.d,
            entries: self.entries.iter().map(|&a| group.inv(a)).collect(),
        }
    }

    /// Pullback along the coordinate-deleting morphism: dimension rises by
    /// one, the element is painted on both sides of the deleted coordinate.
    pub fn double(&self, i: usize) -> Result<TupleElement> {
        let f = CubeMorphism::delete_coordinate(i, self.d)?;
        let entries = (0..1usize << (self.d + 1))
            .map(|bits| self.entries[f.apply_bits(bits)])
            .collect();
        Ok(TupleElement {
            d: self.d + 1,
            entries,
        })
    }

    /// Restriction to the ceiling {ω_d = 1}, re-indexed over {0,1}^(d-1).
    pub fn ceiling(&self) -> Result<TupleElement> {
        if self.d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let half = 1usize << (self.d - 1);
        Ok(TupleElement {
            d: self.d - 1,
            entries: self.entries[half..].to_vec(),
        })
    }

    /// Restriction to the floor {ω_d = 0}.
    pub fn floor(&self) -> Result<TupleElement> {
        if self.d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let half = 1usize << (self.d - 1);
        Ok(TupleElement {
            d: self.d - 1,
            entries: self.entries[..half].to_vec(),
        })
    }

    /// (floor × ceiling) join, inverse of the floor/ceiling split.
    pub fn join(floor: &TupleElement, ceiling: &TupleElement) -> Result<TupleElement> {
        if floor.d != ceiling.d {
            return Err(Error::DimensionMismatch {
                left: floor.d,
                right: ceiling.d,
            });
        }
        let mut entries = floor.entries.clone();
        entries.extend_from_slice(&ceiling.entries);
        Ok(TupleElement {
            d: floor.d + 1,
            entries,
        })
    }

    /// Right-multiply every entry by the same base element.
    pub fn mul_diagonal(&self, t: Elem, group: &FiniteGroup) -> TupleElement {
        TupleElement {
            d: self.d,
            entries: self.entries.iter().map(|&a| group.mul(a, t)).collect(),
        }
    }

    /// Entries rendered with the base group's labels.
    pub fn labelled(&self, group: &FiniteGroup) -> Vec<String> {
        self.entries.iter().map(|&e| group.label(e)).collect()
    }
}

/// Which generated tuple group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CubeGroupKind {
    HostKra,
    Face,
}

/// [g]_F for every designated base generator g and every upper hyperface F.
pub fn face_generators(group: &FiniteGroup, d: usize) -> Result<Vec<TupleElement>> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut out = Vec::new();
    for face in enumerate_faces(d, FaceFilter::UpperHyperface)? {
        for &g in group.generators() {
            out.push(TupleElement::face_generator(group, g, &face, d)?);
        }
    }
    Ok(out)
}

/// Face generators plus diagonals. Generates the Host–Kra cube group; the
/// equivalence with the all-hyperfaces presentation is checked in tests.
pub fn hk_generators(group: &FiniteGroup, d: usize) -> Result<Vec<TupleElement>> {
    let mut out = face_generators(group, d)?;
    for &g in group.generators() {
        out.push(TupleElement::diagonal(g, d));
    }
    Ok(out)
}

/// [g]_F over all hyperfaces, both orientations; the textbook generating
/// set for the Host–Kra cube group.
pub fn all_hyperface_generators(group: &FiniteGroup, d: usize) -> Result<Vec<TupleElement>> {
    let mut out = Vec::new();
    for face in enumerate_faces(d, FaceFilter::Hyperface)? {
        for &g in group.generators() {
            out.push(TupleElement::face_generator(group, g, &face, d)?);
        }
    }
    Ok(out)
}

/// A generated subgroup of G^(2^d) materialized as a packed element set.
pub struct TupleGroup {
    d: usize,
    kind: Option<CubeGroupKind>,
    packing: Packing,
    set: KeySet,
    visited: u64,
}

impl TupleGroup {
    /// Worklist closure over right-multiplication by the generators.
    pub fn generate(
        group: &FiniteGroup,
        d: usize,
        gens: &[TupleElement],
        kind: Option<CubeGroupKind>,
        budget: usize,
    ) -> Result<TupleGroup> {
        let slots = 1usize << d;
        let packing = Packing::choose(slots, group.order())?;
        let order = group.order();
        let maps: Vec<SlotMap> = gens
            .iter()
            .map(|g| {
                let mut table = vec![0u16; slots * order];
                for v in 0..slots {
                    let gv = g.at_bits(v);
                    for x in 0..order as Elem {
                        table[v * order + x as usize] = group.mul(x, gv);
                    }
                }
                SlotMap { table, values: order }
            })
            .collect();
        let start = vec![TupleElement::identity(group, d).entries];
        let res = close_under(
            packing,
            &start,
            &maps,
            &[],
            budget,
            &format!("tuple group closure (d={d})"),
        )?;
        Ok(TupleGroup {
            d,
            kind,
            packing,
            set: res.set,
            visited: res.visited,
        })
    }

    /// The face cube group F^[d].
    pub fn face_group(group: &FiniteGroup, d: usize, budget: usize) -> Result<TupleGroup> {
        let gens = face_generators(group, d)?;
        TupleGroup::generate(group, d, &gens, Some(CubeGroupKind::Face), budget)
    }

    /// The Host–Kra cube group HK^[d].
    pub fn hk_group(group: &FiniteGroup, d: usize, budget: usize) -> Result<TupleGroup> {
        let gens = hk_generators(group, d)?;
        TupleGroup::generate(group, d, &gens, Some(CubeGroupKind::HostKra), budget)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> Option<CubeGroupKind> {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.len() == 0
    }

    pub fn states_visited(&self) -> u64 {
        self.visited
    }

    pub fn contains(&self, t: &TupleElement) -> bool {
        t.d == self.d && self.set.contains(self.packing, &t.entries)
    }

    /// Elements in sorted packed order.
    pub fn elements(&self) -> Vec<TupleElement> {
        self.set
            .sorted_states(self.packing)
            .into_iter()
            .map(|entries| TupleElement { d: self.d, entries })
            .collect()
    }

    /// Set equality with another generated group of the same dimension.
    pub fn same_elements(&self, other: &TupleGroup) -> bool {
        self.d == other.d
            && self.len() == other.len()
            && self
                .elements()
                .iter()
                .all(|e| other.contains(e))
    }
}

/// Both cube groups of a fixed dimension over one base group.
pub struct CubeGroups {
    pub face: TupleGroup,
    pub hk: TupleGroup,
}

impl CubeGroups {
    pub fn generate(group: &FiniteGroup, d: usize, budget: usize) -> Result<CubeGroups> {
        Ok(CubeGroups {
            face: TupleGroup::face_group(group, d, budget)?,
            hk: TupleGroup::hk_group(group, d, budget)?,
        })
    }
}

/// Splits g ∈ HK^[d] as g = f · t^[d] with f in the face group and
/// t = g(0⃗). Membership of g is checked; membership of f is asserted.
pub fn factor_hk(
    group: &FiniteGroup,
    groups: &CubeGroups,
    g: &TupleElement,
) -> Result<(TupleElement, Elem)> {
    if !groups.hk.contains(g) {
        return Err(Error::NotMember {
            group: format!("HK^[{}]", g.dim()),
        });
    }
    let t = g.at_bits(0);
    let f = g.mul_diagonal(group.inv(t), group);
    if f.at_bits(0) != group.identity() {
        return Err(Error::InternalInvariantViolation(
            "factor has a nontrivial entry at the bottom vertex".into(),
        ));
    }
    if !groups.face.contains(&f) {
        return Err(Error::InternalInvariantViolation(
            "factored element escapes the face cube group".into(),
        ));
    }
    Ok((f, t))
}

/// A word in face letters [h]_F, multiplied left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceWord {
    pub letters: Vec<(Elem, Face)>,
}

impl FaceWord {
    pub fn evaluate(&self, group: &FiniteGroup, d: usize) -> Result<TupleElement> {
        let mut acc = TupleElement::identity(group, d);
        for &(h, face) in &self.letters {
            let letter = TupleElement::face_generator(group, h, &face, d)?;
            acc = acc.mul(&letter, group)?;
        }
        Ok(acc)
    }
}

/// Default cap on rewriting steps in [`normal_form`].
pub const REWRITE_BUDGET: usize = 1 << 20;

/// Rewrites a word of upper-face letters into the ordered product with
/// exactly one letter per upper face (identity letters allowed), preserving
/// the evaluation. Out-of-order adjacent pairs swap through the commutator
/// rule [g]_S [h]_T = [[g,h]]_(T∩S) [h]_T [g]_S, which only ever spawns
/// letters deeper in the face lattice, so rewriting terminates for a finite
/// base group; a step budget guards the loop anyway.
pub fn normal_form(group: &FiniteGroup, word: &FaceWord, d: usize, budget: usize) -> Result<FaceWord> {
    let order = order_upper_faces(d)?;
    let rank_of: HashMap<Face, usize> = order.iter().enumerate().map(|(i, &f)| (f, i)).collect();

    let mut letters: Vec<(Elem, usize)> = Vec::with_capacity(word.letters.len());
    for &(h, face) in &word.letters {
        if face.dim_ambient() != d {
            return Err(Error::DimensionMismatch {
                left: face.dim_ambient(),
                right: d,
            });
        }
        let rank = *rank_of
            .get(&face)
            .ok_or_else(|| Error::InvalidLetter(format!("{} is not an upper face", face.describe())))?;
        if h != group.identity() {
            letters.push((h, rank));
        }
    }

    let mut steps = 0usize;
    loop {
        // merge adjacent same-face letters, drop identities
        let mut merged: Vec<(Elem, usize)> = Vec::with_capacity(letters.len());
        for (h, r) in letters.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.1 == r {
                    last.0 = group.mul(last.0, h);
                    if last.0 == group.identity() {
                        merged.pop();
                    }
                    continue;
                }
            }
            if h != group.identity() {
                merged.push((h, r));
            }
        }
        letters = merged;

        // leftmost adjacent inversion
        let pos = letters.windows(2).position(|w| w[0].1 > w[1].1);
        let Some(i) = pos else { break };
        let (g, rg) = letters[i];
        let (h, rh) = letters[i + 1];
        let comm = group.commutator(g, h);
        let meet = order[rg]
            .intersect(&order[rh])
            .expect("upper faces always share the top vertex");
        let rmeet = rank_of[&meet];
        letters.splice(i..=i + 1, [(comm, rmeet), (h, rh), (g, rg)]);

        steps += 1;
        if steps > budget {
            return Err(Error::budget("normal form rewriting", steps as u64, budget as u64));
        }
    }

    // pad to one letter per face in order
    let mut by_rank = vec![group.identity(); order.len()];
    for (h, r) in letters {
        by_rank[r] = group.mul(by_rank[r], h);
    }
    Ok(FaceWord {
        letters: by_rank
            .into_iter()
            .enumerate()
            .map(|(r, h)| (h, order[r]))
            .collect(),
    })
}

/// Expresses a face-group element as a word in the upper-hyperface
/// generators by replaying a breadth-first closure with parent tracking.
pub fn face_word_for(
    group: &FiniteGroup,
    d: usize,
    target: &TupleElement,
    budget: usize,
) -> Result<FaceWord> {
    let mut letters: Vec<(Elem, Face)> = Vec::new();
    for face in enumerate_faces(d, FaceFilter::UpperHyperface)? {
        for &g in group.generators() {
            letters.push((g, face));
        }
    }
    let gens: Vec<TupleElement> = letters
        .iter()
        .map(|&(g, face)| TupleElement::face_generator(group, g, &face, d).unwrap())
        .collect();

    let id = TupleElement::identity(group, d);
    let mut parent: HashMap<Vec<Elem>, (usize, Vec<Elem>)> = HashMap::new();
    let mut queue: Vec<Vec<Elem>> = vec![id.entries().to_vec()];
    let mut found = id.entries() == target.entries();
    let mut head = 0;
    while head < queue.len() && !found {
        let cur = queue[head].clone();
        head += 1;
        let cur_t = TupleElement::new(d, cur.clone())?;
        for (i, g) in gens.iter().enumerate() {
            let next = cur_t.mul(g, group)?;
            let key = next.entries().to_vec();
            if key != id.entries() && !parent.contains_key(&key) {
                parent.insert(key.clone(), (i, cur.clone()));
                if key == target.entries() {
                    found = true;
                    break;
                }
                if queue.len() >= budget {
                    return Err(Error::budget("face word search", queue.len() as u64, budget as u64));
                }
                queue.push(key);
            }
        }
    }
    if target.entries() == id.entries() {
        return Ok(FaceWord { letters: vec![] });
    }
    if !found {
        return Err(Error::NotMember {
            group: format!("F^[{d}]"),
        });
    }
    let mut word_rev: Vec<(Elem, Face)> = Vec::new();
    let mut cur = target.entries().to_vec();
    while cur != id.entries() {
        let (i, prev) = parent.get(&cur).expect("parent chain is complete").clone();
        word_rev.push(letters[i]);
        cur = prev;
    }
    word_rev.reverse();
    Ok(FaceWord { letters: word_rev })
}

/// Splits g ∈ HK^[d] as g = (Id^[d-1] × h)·(s × s): factor off the diagonal,
/// rewrite the face part into the ordered word, split at the pure-ceiling /
/// mixed boundary, and evaluate the halves. Both shape identities and the
/// reconstruction are asserted.
pub fn pure_ceiling_mixed_decompose(
    group: &FiniteGroup,
    groups: &CubeGroups,
    g: &TupleElement,
    budget: usize,
) -> Result<(TupleElement, TupleElement)> {
    let d = g.dim();
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let (f, t) = factor_hk(group, groups, g)?;
    let word = face_word_for(group, d, &f, budget)?;
    let nf = normal_form(group, &word, d, REWRITE_BUDGET)?;

    let half = 1usize << (d - 1);
    let pure_word = FaceWord {
        letters: nf.letters[..half].to_vec(),
    };
    let mixed_word = FaceWord {
        letters: nf.letters[half..].to_vec(),
    };
    debug_assert!(pure_word.letters.iter().all(|(_, f)| f.is_pure_ceiling()));
    debug_assert!(mixed_word.letters.iter().all(|(_, f)| f.is_mixed()));

    let pure = pure_word.evaluate(group, d)?;
    let mixed = mixed_word.evaluate(group, d)?;

    let pure_floor = pure.floor()?;
    if !pure_floor.is_identity(group) {
        return Err(Error::InternalInvariantViolation(
            "pure ceiling block is not of the form Id x h".into(),
        ));
    }
    if mixed.floor()? != mixed.ceiling()? {
        return Err(Error::InternalInvariantViolation(
            "mixed block is not of the form s x s".into(),
        ));
    }
    if !groups.face.contains(&pure) {
        return Err(Error::InternalInvariantViolation(
            "pure ceiling block escapes the face cube group".into(),
        ));
    }

    let h = pure.ceiling()?;
    let s = mixed.floor()?.mul_diagonal(t, group);

    // g = (Id × h)·(s × s)
    let id_h = TupleElement::join(&TupleElement::identity(group, d - 1), &h)?;
    let s_s = TupleElement::join(&s, &s)?;
    let recon = id_h.mul(&s_s, group)?;
    if recon != *g {
        return Err(Error::InternalInvariantViolation(
            "pure ceiling / mixed reconstruction mismatch".into(),
        ));
    }
    Ok((h, s))
}

/// Checks [[g1]_F1, [g2]_F2] = [[g1,g2]]_(F1∩F2) over face pairs with a
/// nonempty intersection. Exhaustive over element pairs when the group is
/// small, otherwise `trials` sampled pairs.
pub fn verify_key_commutator(group: &FiniteGroup, d: usize, trials: usize) -> Result<CheckReport> {
    let faces = enumerate_faces(d, FaceFilter::All)?;
    let exhaustive = group.order() * group.order() <= 1 << 14;
    let mut report = CheckReport::new("key_commutator", exhaustive);

    let mut pairs: Vec<(Elem, Elem)> = Vec::new();
    if exhaustive {
        for a in group.elements() {
            for b in group.elements() {
                pairs.push((a, b));
            }
        }
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..trials {
            pairs.push((
                rng.gen_range(0..group.order()) as Elem,
                rng.gen_range(0..group.order()) as Elem,
            ));
        }
    }

    for f1 in &faces {
        for f2 in &faces {
            let Some(meet) = f1.intersect(f2) else { continue };
            for &(a, b) in &pairs {
                let t1 = TupleElement::face_generator(group, a, f1, d)?;
                let t2 = TupleElement::face_generator(group, b, f2, d)?;
                let lhs = t1
                    .mul(&t2, group)?
                    .mul(&t1.inverse(group), group)?
                    .mul(&t2.inverse(group), group)?;
                let rhs = TupleElement::face_generator(group, group.commutator(a, b), &meet, d)?;
                report.states_visited += 1;
                if lhs != rhs {
                    report.fail(format!(
                        "[[{}]_{}, [{}]_{}] differs from the meet generator",
                        group.label(a),
                        f1.describe(),
                        group.label(b),
                        f2.describe()
                    ));
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}

/// The ceiling restriction of the face group generates the Host–Kra group
/// one dimension down; checked by closure and two-sided membership.
pub fn check_face_group_ceiling_image(
    group: &FiniteGroup,
    d: usize,
    budget: usize,
) -> Result<CheckReport> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut report = CheckReport::new("face_group_ceiling_image", true);
    let image_gens: Vec<TupleElement> = face_generators(group, d)?
        .iter()
        .map(|g| g.ceiling())
        .collect::<Result<_>>()?;
    let image = TupleGroup::generate(group, d - 1, &image_gens, None, budget)?;
    let hk = TupleGroup::hk_group(group, d - 1, budget)?;
    report.states_visited = image.states_visited() + hk.states_visited();
    if !image.same_elements(&hk) {
        report.fail(format!(
            "ceiling image has {} elements, HK^[{}] has {}",
            image.len(),
            d - 1,
            hk.len()
        ));
    }
    Ok(report)
}

/// Doubling maps the face group into the face group one dimension up; checks
/// the face-generator identity and membership for every deletion index, and
/// that doubling along the last coordinate is the floor/ceiling duplication.
pub fn verify_doubling_inclusion(group: &FiniteGroup, d: usize, budget: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new("doubling_inclusion", true);
    let up = TupleGroup::face_group(group, d + 1, budget)?;
    report.states_visited = up.states_visited();

    let hyperfaces = enumerate_faces(d, FaceFilter::UpperHyperface)?;
    for face in &hyperfaces {
        for &g in group.generators() {
            let f = TupleElement::face_generator(group, g, face, d)?;
            for i in 1..=d + 1 {
                let doubled = f.double(i)?;
                // identity: doubling a face letter is the letter on the preimage face
                let morph = CubeMorphism::delete_coordinate(i, d)?;
                let preimage_entries: Vec<Elem> = (0..1usize << (d + 1))
                    .map(|bits| {
                        if face.contains_bits(morph.apply_bits(bits)) {
                            g
                        } else {
                            group.identity()
                        }
                    })
                    .collect();
                if doubled.entries() != preimage_entries.as_slice() {
                    report.fail(format!(
                        "doubling [{}]_{} along {i} is not the preimage-face letter",
                        group.label(g),
                        face.describe()
                    ));
                    return Ok(report);
                }
                report.states_visited += 1;
                if !up.contains(&doubled) {
                    report.fail(format!(
                        "D_{i}([{}]_{}) escapes the face group one dimension up",
                        group.label(g),
                        face.describe()
                    ));
                    return Ok(report);
                }
            }
            // doubling along the last coordinate duplicates floor and ceiling
            let dup = f.double(d + 1)?;
            if dup.floor()? != f || dup.ceiling()? != f {
                report.fail("doubling along the last coordinate is not f x f".to_string());
                return Ok(report);
            }
        }
    }
    Ok(report)
}

/// Exhaustive variant over every element of F^[d]; used for small groups.
pub fn verify_doubling_inclusion_exhaustive(
    group: &FiniteGroup,
    d: usize,
    budget: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("doubling_inclusion_exhaustive", true);
    let low = TupleGroup::face_group(group, d, budget)?;
    let up = TupleGroup::face_group(group, d + 1, budget)?;
    report.states_visited = low.states_visited() + up.states_visited();
    for f in low.elements() {
        for i in 1..=d + 1 {
            report.states_visited += 1;
            if !up.contains(&f.double(i)?) {
                report.fail(format!("doubling along {i} escapes for some element"));
                return Ok(report);
            }
        }
    }
    Ok(report)
}

/// The two presentations of the Host–Kra cube group (upper hyperfaces plus
/// diagonal vs. all hyperfaces) generate the same subgroup.
pub fn check_hk_presentations(group: &FiniteGroup, d: usize, budget: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new("hk_presentations", true);
    let a = TupleGroup::hk_group(group, d, budget)?;
    let gens = all_hyperface_generators(group, d)?;
    let b = TupleGroup::generate(group, d, &gens, Some(CubeGroupKind::HostKra), budget)?;
    report.states_visited = a.states_visited() + b.states_visited();
    if !a.same_elements(&b) {
        report.fail(format!(
            "presentations generate {} vs {} elements",
            a.len(),
            b.len()
        ));
    }
    Ok(report)
}

/// Every word over the face-letter alphabet (designated generators on all
/// upper faces) rewrites to a normal form with the same evaluation.
/// Exhaustive over words up to `max_len` letters, within budget.
pub fn check_normal_form_words(
    group: &FiniteGroup,
    d: usize,
    max_len: usize,
    budget: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("normal_form_words", true);
    let mut alphabet: Vec<(Elem, Face)> = Vec::new();
    for face in enumerate_faces(d, FaceFilter::Upper)? {
        for &g in group.generators() {
            alphabet.push((g, face));
        }
    }
    let a = alphabet.len();
    let mut total = 0u64;
    for len in 1..=max_len {
        total += (a as u64).pow(len as u32);
    }
    if total > budget as u64 {
        return Err(Error::budget("normal form word sweep", total, budget as u64));
    }

    let mut word = FaceWord { letters: Vec::new() };
    fn rec(
        group: &FiniteGroup,
        d: usize,
        alphabet: &[(Elem, Face)],
        word: &mut FaceWord,
        remaining: usize,
        report: &mut CheckReport,
    ) -> Result<()> {
        if !word.letters.is_empty() {
            report.states_visited += 1;
            let nf = normal_form(group, word, d, REWRITE_BUDGET)?;
            if nf.evaluate(group, d)? != word.evaluate(group, d)? {
                report.fail(format!(
                    "normal form changes the evaluation of a {}-letter word",
                    word.letters.len()
                ));
                return Ok(());
            }
            // exactly one letter per upper face, in order
            if nf.letters.len() != 1 << d {
                report.fail("normal form has the wrong letter count".to_string());
                return Ok(());
            }
        }
        if remaining == 0 || report.failed() {
            return Ok(());
        }
        for &letter in alphabet {
            word.letters.push(letter);
            rec(group, d, alphabet, word, remaining - 1, report)?;
            word.letters.pop();
            if report.failed() {
                return Ok(());
            }
        }
        Ok(())
    }
    rec(group, d, &alphabet, &mut word, max_len, &mut report)?;
    Ok(report)
}

/// factor_hk reconstructs every element of HK^[d].
pub fn check_factor_reconstruction(
    group: &FiniteGroup,
    d: usize,
    budget: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("factor_reconstruction", true);
    let groups = CubeGroups::generate(group, d, budget)?;
    report.states_visited = groups.hk.states_visited() + groups.face.states_visited();
    for g in groups.hk.elements() {
        report.states_visited += 1;
        let (f, t) = factor_hk(group, &groups, &g)?;
        let recon = f.mul(&TupleElement::diagonal(t, d), group)?;
        if recon != g {
            report.fail("diagonal factoring does not reconstruct".to_string());
            return Ok(report);
        }
    }
    Ok(report)
}

/// The pure ceiling / mixed decomposition reconstructs every element of
/// HK^[d].
pub fn check_decomposition_reconstruction(
    group: &FiniteGroup,
    d: usize,
    budget: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("pure_ceiling_mixed_decomposition", true);
    let groups = CubeGroups::generate(group, d, budget)?;
    report.states_visited = groups.hk.states_visited() + groups.face.states_visited();
    for g in groups.hk.elements() {
        report.states_visited += 1;
        let (h, s) = pure_ceiling_mixed_decompose(group, &groups, &g, budget)?;
        let id_h = TupleElement::join(&TupleElement::identity(group, d - 1), &h)?;
        let s_s = TupleElement::join(&s, &s)?;
        if id_h.mul(&s_s, group)? != g {
            report.fail("decomposition does not reconstruct".to_string());
            return Ok(report);
        }
    }
    Ok(report)
}

/// Experimental: the ordered product over upper faces with letters from the
/// matching lower-central-series terms enumerates HK^[d] without repetition.
pub fn check_ordered_product_decomposition(
    group: &FiniteGroup,
    d: usize,
    budget: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("ordered_product_decomposition", true);
    let order = order_upper_faces(d)?;
    let terms: Vec<Vec<Elem>> = order
        .iter()
        .map(|f| group.lower_central_term(f.codim().max(1)).members().to_vec())
        .collect();
    // codim 0 (the full cube) takes letters from the whole group
    let terms: Vec<Vec<Elem>> = order
        .iter()
        .zip(terms)
        .map(|(f, t)| {
            if f.codim() == 0 {
                group.elements().collect()
            } else {
                t
            }
        })
        .collect();
    let expected: usize = terms.iter().map(|t| t.len()).product();
    let hk = TupleGroup::hk_group(group, d, budget)?;
    if expected != hk.len() {
        report.fail(format!(
            "product of term sizes {expected} differs from |HK^[{d}]| = {}",
            hk.len()
        ));
        return Ok(report);
    }
    if expected > budget {
        return Err(Error::budget("ordered product enumeration", expected as u64, budget as u64));
    }

    let mut seen = std::collections::HashSet::new();
    fn rec(
        group: &FiniteGroup,
        order: &[Face],
        terms: &[Vec<Elem>],
        level: usize,
        acc: &TupleElement,
        seen: &mut std::collections::HashSet<Vec<Elem>>,
        report: &mut CheckReport,
    ) -> Result<()> {
        if level == order.len() {
            report.states_visited += 1;
            if !seen.insert(acc.entries().to_vec()) {
                report.fail("ordered product repeats an element".to_string());
            }
            return Ok(());
        }
        for &x in &terms[level] {
            if report.failed() {
                return Ok(());
            }
            let letter = TupleElement::face_generator(group, x, &order[level], acc.dim())?;
            let next = acc.mul(&letter, group)?;
            rec(group, order, terms, level + 1, &next, seen, report)?;
        }
        Ok(())
    }
    let acc = TupleElement::identity(group, d);
    rec(group, &order, &terms, 0, &acc, &mut seen, &mut report)?;
    if !report.failed() && seen.len() != hk.len() {
        report.fail(format!(
            "ordered products cover {} of {} elements",
            seen.len(),
            hk.len()
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    const B: usize = 1 << 22;

    #[test]
    fn face_generator_shapes() {
        let z2 = zoo::cyclic_group(2).unwrap();
        let d = 2;
        let full = TupleElement::face_generator(&z2, 1, &Face::full_cube(d), d).unwrap();
        assert_eq!(full, TupleElement::diagonal(1, d));
        let idg = TupleElement::face_generator(&z2, 0, &Face::new(d, &[(2, 1)]).unwrap(), d).unwrap();
        assert!(idg.is_identity(&z2));
        // F = {ω_2 = 1}: (Id, Id, h, h)
        let f = TupleElement::face_generator(&z2, 1, &Face::new(d, &[(2, 1)]).unwrap(), d).unwrap();
        assert_eq!(f.entries(), &[0, 0, 1, 1]);
    }

    #[test]
    fn generator_counts() {
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        for d in 1..=3 {
            let fg = face_generators(&s3, d).unwrap();
            assert_eq!(fg.len(), d * s3.generators().len());
        }
    }

    /// Oracle: realize G^(2^d) as an explicit product group and close the
    /// generator set with the plain subgroup closure.
    fn tuple_group_oracle(
        base: &FiniteGroup,
        d: usize,
        gens: &[TupleElement],
    ) -> usize {
        let mut product = base.clone();
        for _ in 1..1usize << d {
            product = product.direct_product(base).unwrap();
        }
        // index of a tuple in the product group
        let n = base.order();
        let index = |t: &TupleElement| -> Elem {
            let mut idx = 0usize;
            for &e in t.entries() {
                idx = idx * n + e as usize;
            }
            idx as Elem
        };
        let gen_ids: Vec<Elem> = gens.iter().map(index).collect();
        product.generate_subgroup(&gen_ids).unwrap().len()
    }

    #[test]
    fn z2_cube_group_sizes_match_oracle() {
        let z2 = zoo::cyclic_group(2).unwrap();
        let hk = TupleGroup::hk_group(&z2, 2, B).unwrap();
        let face = TupleGroup::face_group(&z2, 2, B).unwrap();
        assert_eq!(hk.len(), 8);
        assert_eq!(face.len(), 4);
        assert_eq!(
            tuple_group_oracle(&z2, 2, &hk_generators(&z2, 2).unwrap()),
            8
        );
        assert_eq!(
            tuple_group_oracle(&z2, 2, &face_generators(&z2, 2).unwrap()),
            4
        );
        // identity tuple in both
        let id = TupleElement::identity(&z2, 2);
        assert!(hk.contains(&id) && face.contains(&id));
    }

    #[test]
    fn diagonal_membership() {
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        let groups = CubeGroups::generate(&s3, 2, B).unwrap();
        for h in s3.elements() {
            let diag = TupleElement::diagonal(h, 2);
            assert!(groups.hk.contains(&diag));
            // face membership decided exactly; for S3 the diagonal of any
            // element lies in F^[2] iff it is a commutator-reachable shape
            let in_face = groups.face.contains(&diag);
            if h == s3.identity() {
                assert!(in_face);
            }
        }
        // every face element fixes the bottom vertex
        for f in groups.face.elements() {
            assert_eq!(f.at_bits(0), s3.identity());
        }
        // F ⊆ HK
        for f in groups.face.elements() {
            assert!(groups.hk.contains(&f));
        }
    }

    #[test]
    fn factor_hk_reconstructs() {
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        let groups = CubeGroups::generate(&s3, 2, B).unwrap();
        assert_eq!(groups.hk.len(), 648);
        for g in groups.hk.elements() {
            let (f, t) = factor_hk(&s3, &groups, &g).unwrap();
            let recon = f.mul(&TupleElement::diagonal(t, 2), &s3).unwrap();
            assert_eq!(recon, g);
            assert_eq!(f.at_bits(0), s3.identity());
        }
        // g already in F factors with identity diagonal
        for f in groups.face.elements().into_iter().take(20) {
            let (f2, t) = factor_hk(&s3, &groups, &f).unwrap();
            assert_eq!(t, s3.identity());
            assert_eq!(f2, f);
        }
        // non-member is rejected
        let z2 = zoo::cyclic_group(2).unwrap();
        let zg = CubeGroups::generate(&z2, 2, B).unwrap();
        let outside = TupleElement::new(2, vec![0, 1, 0, 0]).unwrap();
        assert!(!zg.hk.contains(&outside));
        assert!(matches!(
            factor_hk(&z2, &zg, &outside),
            Err(Error::NotMember { .. })
        ));
    }

    #[test]
    fn normal_form_small_words() {
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        let d = 2;
        let uppers = enumerate_faces(d, FaceFilter::Upper).unwrap();
        let g = s3.generators()[0];
        let h = s3.generators()[1 % s3.generators().len()];
        // diagonal then face letter
        let w = FaceWord {
            letters: vec![(g, Face::full_cube(d)), (h, Face::new(d, &[(1, 1)]).unwrap())],
        };
        let nf = normal_form(&s3, &w, d, REWRITE_BUDGET).unwrap();
        assert_eq!(nf.letters.len(), 4);
        assert_eq!(
            nf.evaluate(&s3, d).unwrap(),
            w.evaluate(&s3, d).unwrap()
        );
        // ordered words come back with same-face letters merged
        let w = FaceWord {
            letters: vec![(g, uppers[3]), (h, uppers[3])],
        };
        let nf = normal_form(&s3, &w, d, REWRITE_BUDGET).unwrap();
        let merged: Vec<_> = nf
            .letters
            .iter()
            .filter(|(e, _)| *e != s3.identity())
            .collect();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].0, s3.mul(g, h));
    }

    #[test]
    fn normal_form_rejects_non_upper_letters() {
        let z4 = zoo::cyclic_group(4).unwrap();
        let lower = Face::new(2, &[(1, 0)]).unwrap();
        let w = FaceWord {
            letters: vec![(1, lower)],
        };
        assert!(matches!(
            normal_form(&z4, &w, 2, REWRITE_BUDGET),
            Err(Error::InvalidLetter(_))
        ));
    }

    #[test]
    fn normal_form_abelian_collapses() {
        let z4 = zoo::cyclic_group(4).unwrap();
        let d = 2;
        let uppers = enumerate_faces(d, FaceFilter::Upper).unwrap();
        let w = FaceWord {
            letters: vec![
                (1, uppers[2]),
                (3, uppers[1]),
                (2, uppers[2]),
                (1, uppers[0]),
            ],
        };
        let nf = normal_form(&z4, &w, d, REWRITE_BUDGET).unwrap();
        assert_eq!(nf.evaluate(&z4, d).unwrap(), w.evaluate(&z4, d).unwrap());
        // per-face products: commutators vanish
        for (h, face) in &nf.letters {
            let expected = w
                .letters
                .iter()
                .filter(|(_, f)| f == face)
                .fold(0u16, |acc, (e, _)| z4.mul(acc, *e));
            assert_eq!(*h, expected);
        }
    }

    #[test]
    fn normal_form_word_sweeps() {
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        for d in 1..=3 {
            let report = check_normal_form_words(&s3, d, 4, 1 << 24).unwrap();
            assert!(report.passed(), "d={d}: {:?}", report.witnesses);
        }
    }

    #[test]
    fn key_commutator_s3() {
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        let report = verify_key_commutator(&s3, 2, 0).unwrap();
        assert!(report.passed(), "{:?}", report.witnesses);
        assert!(report.exhaustive);
    }

    #[test]
    fn ceiling_image_z4() {
        let z4 = zoo::cyclic_group(4).unwrap();
        let report = check_face_group_ceiling_image(&z4, 2, B).unwrap();
        assert!(report.passed());
        let hk1 = TupleGroup::hk_group(&z4, 1, B).unwrap();
        assert_eq!(hk1.len(), 16);
        // the ceiling of a last-coordinate face letter is the diagonal
        let f = TupleElement::face_generator(&z4, 1, &Face::new(2, &[(2, 1)]).unwrap(), 2).unwrap();
        assert_eq!(f.ceiling().unwrap(), TupleElement::diagonal(1, 1));
    }

    #[test]
    fn doubling_inclusion_z2_exhaustive() {
        let z2 = zoo::cyclic_group(2).unwrap();
        let report = verify_doubling_inclusion_exhaustive(&z2, 1, B).unwrap();
        assert!(report.passed());
        let report = verify_doubling_inclusion(&z2, 1, B).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn hk_presentations_agree() {
        for d in 1..=2 {
            let z3 = zoo::cyclic_group(3).unwrap();
            assert!(check_hk_presentations(&z3, d, B).unwrap().passed());
            let (s3, _) = zoo::symmetric_group(3).unwrap();
            assert!(check_hk_presentations(&s3, d, B).unwrap().passed());
        }
    }

    #[test]
    fn decompose_small() {
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        let groups = CubeGroups::generate(&s3, 2, B).unwrap();
        for g in groups.hk.elements() {
            let (h, s) = pure_ceiling_mixed_decompose(&s3, &groups, &g, B).unwrap();
            let id_h = TupleElement::join(&TupleElement::identity(&s3, 1), &h).unwrap();
            let s_s = TupleElement::join(&s, &s).unwrap();
            assert_eq!(id_h.mul(&s_s, &s3).unwrap(), g);
        }
    }

    #[test]
    fn ordered_product_decomposition_s3() {
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        let report = check_ordered_product_decomposition(&s3, 2, B).unwrap();
        assert!(report.passed(), "{:?}", report.witnesses);
    }
}
