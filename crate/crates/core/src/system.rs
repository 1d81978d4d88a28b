//! Finite topological dynamical systems: a finite group acting by
//! permutations on a finite point set, together with factor maps, point
//! relations, orbits, products and quotients.
//!
//! Limit-based notions are read in their exact finite semantics: a net
//! condition "x_i → x, g_i y_i → z" collapses to equalities with a single
//! witness, since convergence in a finite discrete space is eventual
//! constancy. This one reading is applied uniformly to the proximal,
//! regionally proximal and higher-order relations, and orbit closures
//! become orbits.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::group::{Elem, FiniteGroup};

/// Index of a point of the phase space.
pub type Point = u16;

const ACTION_EXHAUSTIVE_LIMIT: usize = 1 << 20;
const ACTION_SAMPLES: usize = 1 << 16;

/// A finite system (G, X): every group element acts as a permutation of the
/// points, the identity acts trivially, and the action respects the group
/// law (exhaustively checked for |G|·|X| up to 2^20, sampled above).
#[derive(Clone)]
pub struct FiniteSystem {
    group: Arc<FiniteGroup>,
    points: usize,
    action: Arc<Vec<Point>>,
    labels: Option<Arc<Vec<String>>>,
    name: String,
}

impl std::fmt::Debug for FiniteSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteSystem")
            .field("name", &self.name)
            .field("group_order", &self.group.order())
            .field("points", &self.points)
            .finish()
    }
}

impl FiniteSystem {
    /// `action` has one row per group element, row g listing g·x per point.
    pub fn new(group: Arc<FiniteGroup>, points: usize, action: Vec<Point>) -> Result<Self> {
        if points == 0 || points > u16::MAX as usize {
            return Err(Error::InvalidSystem(format!("point count {points} out of range")));
        }
        let order = group.order();
        if action.len() != order * points {
            return Err(Error::InvalidSystem(format!(
                "action table has {} entries, expected {}",
                action.len(),
                order * points
            )));
        }
        // each row is a permutation
        let mut seen = vec![false; points];
        for g in 0..order {
            seen.iter_mut().for_each(|s| *s = false);
            for x in 0..points {
                let y = action[g * points + x] as usize;
                if y >= points || seen[y] {
                    return Err(Error::InvalidSystem(format!(
                        "element {g} does not act as a permutation"
                    )));
                }
                seen[y] = true;
            }
        }
        // identity row
        let e = group.identity() as usize;
        for x in 0..points {
            if action[e * points + x] as usize != x {
                return Err(Error::InvalidSystem("identity moves a point".into()));
            }
        }
        // homomorphism: action(gh, x) = action(g, action(h, x))
        let check = |g: usize, h: usize, x: usize| -> bool {
            let gh = group.mul(g as Elem, h as Elem) as usize;
            action[gh * points + x]
                == action[g * points + action[h * points + x] as usize]
        };
        if order * points <= ACTION_EXHAUSTIVE_LIMIT {
            for g in 0..order {
                for h in 0..order {
                    for x in 0..points {
                        if !check(g, h, x) {
                            return Err(Error::InvalidSystem(format!(
                                "action law fails at g={g}, h={h}, x={x}"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut rng = StdRng::seed_from_u64(1);
            for _ in 0..ACTION_SAMPLES {
                let g = rng.gen_range(0..order);
                let h = rng.gen_range(0..order);
                let x = rng.gen_range(0..points);
                if !check(g, h, x) {
                    return Err(Error::InvalidSystem(format!(
                        "action law fails at g={g}, h={h}, x={x}"
                    )));
                }
            }
        }
        Ok(FiniteSystem {
            group,
            points,
            action: Arc::new(action),
            labels: None,
            name: "system".into(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_point_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.points {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} points",
                labels.len(),
                self.points
            )));
        }
        self.labels = Some(Arc::new(labels));
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn group_arc(&self) -> Arc<FiniteGroup> {
        Arc::clone(&self.group)
    }

    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn act(&self, g: Elem, x: Point) -> Point {
        self.action[g as usize * self.points + x as usize]
    }

    pub fn action_row(&self, g: Elem) -> &[Point] {
        &self.action[g as usize * self.points..(g as usize + 1) * self.points]
    }

    pub fn point_label(&self, x: Point) -> String {
        match &self.labels {
            Some(l) => l[x as usize].clone(),
            None => x.to_string(),
        }
    }

    pub fn point_labels(&self) -> Vec<String> {
        (0..self.points as Point).map(|x| self.point_label(x)).collect()
    }

    /// Orbit of x under the designated generators, sorted.
    pub fn orbit(&self, x: Point) -> Vec<Point> {
        let mut seen = vec![false; self.points];
        seen[x as usize] = true;
        let mut queue = vec![x];
        let mut head = 0;
        while head < queue.len() {
            let y = queue[head];
            head += 1;
            for &g in self.group.generators() {
                let z = self.act(g, y);
                if !seen[z as usize] {
                    seen[z as usize] = true;
                    queue.push(z);
                }
            }
        }
        queue.sort_unstable();
        queue
    }

    /// Single orbit ⇔ minimal in the finite setting.
    pub fn is_minimal(&self) -> bool {
        self.orbit(0).len() == self.points
    }

    /// Image subgroup sizes aside, the fixed-point set of the action:
    /// elements acting as the identity permutation.
    pub fn fix_subgroup(&self) -> crate::group::Subgroup {
        let members: Vec<Elem> = self
            .group
            .elements()
            .filter(|&g| (0..self.points as Point).all(|x| self.act(g, x) == x))
            .collect();
        self.group
            .generate_subgroup(&members)
            .expect("fixed elements are valid")
    }
}

/// Diagonal action of the same group on X^n; points are mixed-radix tuples,
/// most significant coordinate first.
pub fn product_system(sys: &FiniteSystem, n: usize, budget: usize) -> Result<FiniteSystem> {
    if n == 0 {
        return Err(Error::InvalidParameter("empty product".into()));
    }
    let size = (sys.points as u64).checked_pow(n as u32).ok_or_else(|| {
        Error::budget("product system", u64::MAX, budget as u64)
    })?;
    if size > budget as u64 || size > u16::MAX as u64 {
        return Err(Error::budget("product system", size, budget.min(u16::MAX as usize) as u64));
    }
    let size = size as usize;
    let order = sys.group.order();
    let mut action = vec![0 as Point; order * size];
    for g in 0..order as Elem {
        for idx in 0..size {
            let mut rem = idx;
            let mut out = 0usize;
            let mut scale = size / sys.points;
            let mut src_scale = size / sys.points;
            // decode digits most-significant first
            let mut digits = Vec::with_capacity(n);
            for _ in 0..n {
                digits.push(rem / src_scale);
                rem %= src_scale;
                src_scale = (src_scale / sys.points).max(1);
            }
            for &dgt in &digits {
                out += sys.act(g, dgt as Point) as usize * scale;
                scale = (scale / sys.points).max(1);
            }
            action[g as usize * size + idx] = out as Point;
        }
    }
    FiniteSystem::new(sys.group_arc(), size, action)
        .map(|s| s.with_name(format!("{}^{n}", sys.name)))
}

/// True when the diagonal action on X^n has a single orbit for every
/// n ≤ n_max.
pub fn is_transitive_of_all_orders(sys: &FiniteSystem, n_max: usize, budget: usize) -> Result<bool> {
    for n in 1..=n_max {
        let prod = product_system(sys, n, budget)?;
        if !prod.is_minimal() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A symmetric-or-not set of ordered point pairs over 0..n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    n: usize,
    pairs: BTreeSet<(Point, Point)>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation {
            n,
            pairs: BTreeSet::new(),
        }
    }

    pub fn diagonal(n: usize) -> Self {
        Relation {
            n,
            pairs: (0..n as Point).map(|x| (x, x)).collect(),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut pairs = BTreeSet::new();
        for x in 0..n as Point {
            for y in 0..n as Point {
                pairs.insert((x, y));
            }
        }
        Relation { n, pairs }
    }

    /// The equivalence whose classes are given; every within-class ordered
    /// pair is present.
    pub fn from_classes(n: usize, classes: &[Vec<Point>]) -> Self {
        let mut pairs = BTreeSet::new();
        for class in classes {
            for &x in class {
                for &y in class {
                    pairs.insert((x, y));
                }
            }
        }
        Relation { n, pairs }
    }

    pub fn points(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, x: Point, y: Point) {
        self.pairs.insert((x, y));
    }

    pub fn contains(&self, x: Point, y: Point) -> bool {
        self.pairs.contains(&(x, y))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn is_diagonal(&self) -> bool {
        *self == Relation::diagonal(self.n)
    }

    pub fn is_full(&self) -> bool {
        self.pairs.len() == self.n * self.n
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n as Point).all(|x| self.contains(x, x))
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs.iter().all(|&(x, y)| self.contains(y, x))
    }

    /// Transitive given reflexive and symmetric: the relation must equal the
    /// one induced by its own union-find classes.
    pub fn is_equivalence(&self) -> bool {
        self.equivalence_failure().is_none()
    }

    /// First reason the relation is not an equivalence, if any.
    pub fn equivalence_failure(&self) -> Option<String> {
        for x in 0..self.n as Point {
            if !self.contains(x, x) {
                return Some(format!("not reflexive at {x}"));
            }
        }
        for &(x, y) in &self.pairs {
            if !self.contains(y, x) {
                return Some(format!("not symmetric at ({x},{y})"));
            }
        }
        let classes = self.closure_classes();
        for class in &classes {
            for &x in class {
                for &y in class {
                    if !self.contains(x, y) {
                        return Some(format!("not transitive: ({x},{y}) missing"));
                    }
                }
            }
        }
        None
    }

    /// Classes of the reflexive-symmetric-transitive closure, smallest
    /// member first.
    pub fn closure_classes(&self) -> Vec<Vec<Point>> {
        let mut dsu = DisjointSets::new(self.n);
        for &(x, y) in &self.pairs {
            dsu.union(x as usize, y as usize);
        }
        dsu.classes()
            .into_iter()
            .map(|c| c.into_iter().map(|x| x as Point).collect())
            .collect()
    }

    /// Classes, requiring the relation to already be an equivalence.
    pub fn classes(&self) -> Result<Vec<Vec<Point>>> {
        match self.equivalence_failure() {
            None => Ok(self.closure_classes()),
            Some(why) => Err(Error::NotEquivalence(why)),
        }
    }

    /// (x,y) ∈ R ⇒ (gx,gy) ∈ R for every designated generator.
    pub fn is_invariant(&self, sys: &FiniteSystem) -> bool {
        self.invariance_failure(sys).is_none()
    }

    pub fn invariance_failure(&self, sys: &FiniteSystem) -> Option<(Point, Point, Elem)> {
        for &(x, y) in &self.pairs {
            for &g in sys.group().generators() {
                if !self.contains(sys.act(g, x), sys.act(g, y)) {
                    return Some((x, y, g));
                }
            }
        }
        None
    }

    /// Image under a point map into a space of `m` points.
    pub fn image(&self, map: &[Point], m: usize) -> Relation {
        let mut out = Relation::empty(m);
        for &(x, y) in &self.pairs {
            out.insert(map[x as usize], map[y as usize]);
        }
        out
    }

    pub fn is_subset_of(&self, other: &Relation) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    pub fn union_with(&mut self, other: &Relation) {
        for &(x, y) in &other.pairs {
            self.pairs.insert((x, y));
        }
    }

    /// Sorted pair list for stable output.
    pub fn sorted_pairs(&self) -> Vec<(Point, Point)> {
        self.pairs.iter().copied().collect()
    }
}

/// A surjective equivariant map between systems over the same group.
#[derive(Clone)]
pub struct FactorMap {
    source: FiniteSystem,
    target: FiniteSystem,
    map: Vec<Point>,
}

impl std::fmt::Debug for FactorMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactorMap")
            .field("source", &self.source.name())
            .field("target", &self.target.name())
            .finish()
    }
}

impl FactorMap {
    /// Checks surjectivity and equivariance exhaustively.
    pub fn new(source: FiniteSystem, target: FiniteSystem, map: Vec<Point>) -> Result<Self> {
        if map.len() != source.points() {
            return Err(Error::InvalidParameter(format!(
                "factor map has {} entries for {} points",
                map.len(),
                source.points()
            )));
        }
        let mut hit = vec![false; target.points()];
        for &y in &map {
            if (y as usize) >= target.points() {
                return Err(Error::InvalidParameter(format!("image point {y} out of range")));
            }
            hit[y as usize] = true;
        }
        if !hit.iter().all(|&h| h) {
            return Err(Error::InvalidSystem("factor map is not surjective".into()));
        }
        if source.group().order() != target.group().order() {
            return Err(Error::InvalidSystem(
                "factor maps require the same acting group".into(),
            ));
        }
        for g in 0..source.group().order() as Elem {
            for x in 0..source.points() as Point {
                if map[source.act(g, x) as usize] != target.act(g, map[x as usize]) {
                    return Err(Error::InvalidSystem(format!(
                        "equivariance fails at g={g}, x={x}"
                    )));
                }
            }
        }
        Ok(FactorMap {
            source,
            target,
            map,
        })
    }

    pub fn identity(sys: &FiniteSystem) -> Self {
        FactorMap {
            source: sys.clone(),
            target: sys.clone(),
            map: (0..sys.points() as Point).collect(),
        }
    }

    pub fn source(&self) -> &FiniteSystem {
        &self.source
    }

    pub fn target(&self) -> &FiniteSystem {
        &self.target
    }

    pub fn map(&self) -> &[Point] {
        &self.map
    }

    #[inline]
    pub fn apply(&self, x: Point) -> Point {
        self.map[x as usize]
    }

    /// π ∘ self, composing towards the smaller system.
    pub fn then(&self, next: &FactorMap) -> Result<FactorMap> {
        if next.source.points() != self.target.points() {
            return Err(Error::DimensionMismatch {
                left: self.target.points(),
                right: next.source.points(),
            });
        }
        let map = self.map.iter().map(|&y| next.map[y as usize]).collect();
        FactorMap::new(self.source.clone(), next.target.clone(), map)
    }
}

/// Proximal pairs in finite semantics: some group element identifies the two
/// points. Every element acts bijectively, so the computation must return
/// the diagonal; it is run literally, not short-circuited.
pub fn proximal_relation(sys: &FiniteSystem) -> Relation {
    let mut rel = Relation::empty(sys.points());
    for x in 0..sys.points() as Point {
        for y in 0..sys.points() as Point {
            let witness = sys
                .group()
                .elements()
                .any(|g| sys.act(g, x) == sys.act(g, y));
            if witness {
                rel.insert(x, y);
            }
        }
    }
    rel
}

/// Regionally proximal pairs in finite semantics: approximants x', y' are
/// eventually exactly x and y, so the witness condition is again gx = gy.
pub fn q_relation(sys: &FiniteSystem) -> Relation {
    proximal_relation(sys)
}

/// Smallest invariant closed equivalence containing the regionally proximal
/// relation: equivalence closure interleaved with generator saturation.
pub fn q_eq_relation(sys: &FiniteSystem) -> Relation {
    let base = q_relation(sys);
    invariant_equivalence_closure(sys, &base)
}

/// Closure of a relation to the smallest G-invariant equivalence above it.
pub fn invariant_equivalence_closure(sys: &FiniteSystem, rel: &Relation) -> Relation {
    let n = sys.points();
    let mut dsu = DisjointSets::new(n);
    let mut work: Vec<(Point, Point)> = Vec::new();
    for (x, y) in rel.iter() {
        if dsu.union(x as usize, y as usize) {
            work.push((x, y));
        }
    }
    while let Some((x, y)) = work.pop() {
        for &g in sys.group().generators() {
            let (gx, gy) = (sys.act(g, x), sys.act(g, y));
            if dsu.union(gx as usize, gy as usize) {
                work.push((gx, gy));
            }
        }
    }
    let classes: Vec<Vec<Point>> = dsu
        .classes()
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as Point).collect())
        .collect();
    Relation::from_classes(n, &classes)
}

/// Quotient by an invariant equivalence. Class labels are the smallest
/// member index; the projection is returned as a factor map.
pub fn quotient_system(sys: &FiniteSystem, rel: &Relation) -> Result<(FiniteSystem, FactorMap)> {
    if rel.points() != sys.points() {
        return Err(Error::DimensionMismatch {
            left: rel.points(),
            right: sys.points(),
        });
    }
    if let Some(why) = rel.equivalence_failure() {
        return Err(Error::NotEquivalence(why));
    }
    if let Some((x, y, g)) = rel.invariance_failure(sys) {
        return Err(Error::NotInvariant {
            x: x as usize,
            y: y as usize,
            g: g as usize,
        });
    }
    let classes = rel.closure_classes();
    let mut class_of = vec![0 as Point; sys.points()];
    for (i, class) in classes.iter().enumerate() {
        for &x in class {
            class_of[x as usize] = i as Point;
        }
    }
    let q = classes.len();
    let order = sys.group().order();
    let mut action = vec![0 as Point; order * q];
    for g in 0..order as Elem {
        for (i, class) in classes.iter().enumerate() {
            action[g as usize * q + i] = class_of[sys.act(g, class[0]) as usize];
        }
    }
    let labels = classes
        .iter()
        .map(|c| {
            let members: Vec<String> = c.iter().map(|&x| sys.point_label(x)).collect();
            format!("{{{}}}", members.join(","))
        })
        .collect();
    let target = FiniteSystem::new(sys.group_arc(), q, action)?
        .with_name(format!("{}/~", sys.name()))
        .with_point_labels(labels)?;
    let map = FactorMap::new(sys.clone(), target.clone(), class_of)?;
    Ok((target, map))
}

/// For a minimal system: when the image of G in Sym(X) is abelian and acts
/// freely, the action is simply transitive and X carries an abelian group
/// structure with base point 0; returns that group, or None.
pub fn abelian_group_structure(sys: &FiniteSystem) -> Result<Option<FiniteGroup>> {
    if !sys.is_minimal() {
        return Err(Error::NotMinimal);
    }
    let n = sys.points();
    // image permutations, deduplicated
    let mut image: Vec<&[Point]> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for g in 0..sys.group().order() as Elem {
        let row = sys.action_row(g);
        if seen.insert(row.to_vec()) {
            image.push(row);
        }
    }
    // abelian image: generator rows commute (the image is generated by them)
    let gen_rows: Vec<&[Point]> = sys
        .group()
        .generators()
        .iter()
        .map(|&g| sys.action_row(g))
        .collect();
    for a in &gen_rows {
        for b in &gen_rows {
            let ab: Vec<Point> = (0..n).map(|x| a[b[x] as usize]).collect();
            let ba: Vec<Point> = (0..n).map(|x| b[a[x] as usize]).collect();
            if ab != ba {
                return Ok(None);
            }
        }
    }
    // free: any non-identity image permutation is fixed-point-free
    for row in &image {
        let fixes = (0..n).any(|x| row[x] as usize == x);
        let is_id = (0..n).all(|x| row[x] as usize == x);
        if fixes && !is_id {
            return Ok(None);
        }
    }
    // simply transitive now: |image| == n; group law x⋆y = π_x(y) where
    // π_x is the unique image permutation with π_x(0) = x
    if image.len() != n {
        return Ok(None);
    }
    let mut perm_from: Vec<Option<Vec<Point>>> = vec![None; n];
    for row in &image {
        let x = row[0] as usize;
        if perm_from[x].is_some() {
            return Ok(None);
        }
        perm_from[x] = Some(row.to_vec());
    }
    let mut table = vec![0 as Elem; n * n];
    for x in 0..n {
        let row = perm_from[x].as_ref().unwrap();
        for y in 0..n {
            table[x * n + y] = row[y];
        }
    }
    let mut group = FiniteGroup::from_table_unchecked(n, table)?;
    group.set_labels(sys.point_labels())?;
    if !group.is_abelian() {
        return Err(Error::InternalInvariantViolation(
            "reconstructed translation group is not abelian".into(),
        ));
    }
    Ok(Some(group))
}

/// Convenience wrapper around [`abelian_group_structure`].
pub fn check_abelian_group_system(sys: &FiniteSystem) -> Result<bool> {
    Ok(abelian_group_structure(sys)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn orbits_and_minimality() {
        let one = zoo::rotation(1).unwrap();
        assert!(one.is_minimal());

        let rot = zoo::rotation(4).unwrap();
        assert!(rot.is_minimal());
        assert_eq!(rot.orbit(2), vec![0, 1, 2, 3]);

        // Z/2 acting on Z/4 by +2: two orbits of size 2
        let z2 = Arc::new(zoo::cyclic_group(2).unwrap());
        let mut action = vec![0 as Point; 2 * 4];
        for x in 0..4u16 {
            action[x as usize] = x;
            action[4 + x as usize] = (x + 2) % 4;
        }
        let sys = FiniteSystem::new(z2, 4, action).unwrap();
        assert!(!sys.is_minimal());
        assert_eq!(sys.orbit(0), vec![0, 2]);
        assert_eq!(sys.orbit(1), vec![1, 3]);
    }

    #[test]
    fn invalid_actions_rejected() {
        let z2 = Arc::new(zoo::cyclic_group(2).unwrap());
        // non-permutation row
        let bad = vec![0, 0, 0, 0];
        assert!(FiniteSystem::new(Arc::clone(&z2), 2, bad).is_err());
        // identity row moved
        let bad = vec![1, 0, 0, 1];
        assert!(FiniteSystem::new(Arc::clone(&z2), 2, bad).is_err());
        // not a homomorphism: generator acts as a 3-cycle on 3 points but
        // the group has exponent 2
        let bad = vec![0, 1, 2, 1, 2, 0];
        assert!(FiniteSystem::new(z2, 3, bad).is_err());
    }

    #[test]
    fn products_and_transitivity() {
        let rot = zoo::rotation(4).unwrap();
        assert!(is_transitive_of_all_orders(&rot, 1, 1 << 20).unwrap());
        // the diagonal preserves differences: not transitive at order two
        let prod = product_system(&rot, 2, 1 << 20).unwrap();
        assert!(!prod.is_minimal());
        assert!(!is_transitive_of_all_orders(&rot, 2, 1 << 20).unwrap());

        // full symmetric action on 4 points: pairs split diagonal/off-diagonal
        let (s4, perms) = zoo::symmetric_group(4).unwrap();
        let sys = zoo::permutation_action(Arc::new(s4), &perms).unwrap();
        assert!(sys.is_minimal());
        let prod = product_system(&sys, 2, 1 << 20).unwrap();
        assert!(!prod.is_minimal());
        let diag_orbit = prod.orbit(0);
        assert_eq!(diag_orbit.len(), 4);
        assert_eq!(prod.orbit(1).len(), 12);
    }

    #[test]
    fn proximality_collapses_to_diagonal() {
        for sys in [zoo::rotation(5).unwrap(), zoo::regular(&zoo::symmetric_group(3).unwrap().0).unwrap()] {
            let p = proximal_relation(&sys);
            assert!(p.is_diagonal());
            assert!(q_relation(&sys).is_diagonal());
            assert!(q_eq_relation(&sys).is_diagonal());
        }
        let one = zoo::rotation(1).unwrap();
        assert_eq!(proximal_relation(&one).sorted_pairs(), vec![(0, 0)]);
    }

    #[test]
    fn a5_q_is_diagonal() {
        let sys = zoo::a5_regular().unwrap();
        assert!(q_relation(&sys).is_diagonal());
    }

    #[test]
    fn quotients() {
        let rot = zoo::rotation(4).unwrap();
        let (q, pi) = quotient_system(&rot, &Relation::diagonal(4)).unwrap();
        assert_eq!(q.points(), 4);
        assert_eq!(pi.map(), &[0, 1, 2, 3]);

        let (q, _) = quotient_system(&rot, &Relation::full(4)).unwrap();
        assert_eq!(q.points(), 1);

        // center cosets of the order-8 Heisenberg group
        let sys = zoo::heisenberg_mod(2).unwrap();
        let center = sys.group().center();
        let classes: Vec<Vec<Point>> = {
            let mut dsu = DisjointSets::new(8);
            for x in 0..8u16 {
                for &z in center.members() {
                    dsu.union(x as usize, sys.group().mul(z, x) as usize);
                }
            }
            dsu.classes()
                .into_iter()
                .map(|c| c.into_iter().map(|v| v as Point).collect())
                .collect()
        };
        let rel = Relation::from_classes(8, &classes);
        let (q, pi) = quotient_system(&sys, &rel).unwrap();
        assert_eq!(q.points(), 4);
        assert!(q.is_minimal());
        let _ = pi;

        // a non-invariant equivalence is rejected
        let mut rel = Relation::diagonal(4);
        rel.insert(0, 1);
        rel.insert(1, 0);
        assert!(matches!(
            quotient_system(&rot, &rel),
            Err(Error::NotInvariant { .. })
        ));
        // a non-equivalence is rejected
        let mut rel = Relation::diagonal(4);
        rel.insert(0, 1);
        assert!(matches!(
            quotient_system(&rot, &rel),
            Err(Error::NotEquivalence(_))
        ));
    }

    #[test]
    fn abelian_group_detection() {
        let rot = zoo::rotation(6).unwrap();
        let g = abelian_group_structure(&rot).unwrap().unwrap();
        assert_eq!(g.order(), 6);
        assert!(g.is_abelian());

        let (s3, _) = zoo::symmetric_group(3).unwrap();
        let reg = zoo::regular(&s3).unwrap();
        assert!(abelian_group_structure(&reg).unwrap().is_none());

        // non-minimal input is rejected
        let z2 = Arc::new(zoo::cyclic_group(2).unwrap());
        let action = vec![0, 1, 0, 1];
        let sys = FiniteSystem::new(z2, 2, action).unwrap();
        assert!(matches!(
            abelian_group_structure(&sys),
            Err(Error::NotMinimal)
        ));
    }

    #[test]
    fn factor_map_checks() {
        let rot4 = zoo::rotation(4).unwrap();
        let id = FactorMap::identity(&rot4);
        assert_eq!(id.apply(3), 3);
        // +2 relation quotient: Z/4 → Z/2
        let rel = Relation::from_classes(4, &[vec![0, 2], vec![1, 3]]);
        let (_q, pi) = quotient_system(&rot4, &rel).unwrap();
        assert_eq!(pi.map(), &[0, 1, 0, 1]);
        // composition with identity round-trips
        let composed = pi.then(&FactorMap::identity(pi.target())).unwrap();
        assert_eq!(composed.map(), pi.map());
        // a non-equivariant map is rejected
        let bad = FactorMap::new(rot4.clone(), rot4.clone(), vec![0, 2, 1, 3]);
        assert!(bad.is_err());
    }

    #[test]
    fn relation_equivalence_checks() {
        let mut r = Relation::diagonal(3);
        assert!(r.is_equivalence());
        r.insert(0, 1);
        assert!(!r.is_equivalence());
        r.insert(1, 0);
        assert!(r.is_equivalence());
        assert_eq!(r.classes().unwrap(), vec![vec![0, 1], vec![2]]);

        // transitivity failure
        let mut r = Relation::diagonal(3);
        r.insert(0, 1);
        r.insert(1, 0);
        r.insert(1, 2);
        r.insert(2, 1);
        assert!(r.equivalence_failure().unwrap().contains("not transitive"));
    }

    #[test]
    fn relation_serde_roundtrip() {
        let r = Relation::from_classes(4, &[vec![0, 2], vec![1], vec![3]]);
        let s = serde_json::to_string(&r).unwrap();
        let back: Relation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
