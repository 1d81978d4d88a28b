//! Finite groups stored as full multiplication tables.
//!
//! Element indices are `Elem` (`u16`); groups above [`MAX_GROUP_ORDER`] are
//! rejected at construction. Tables are validated on entry: identity,
//! inverses, and associativity (exhaustive up to order 256, random triples
//! above that). Permutation-built groups skip the associativity sweep since
//! composition is associative by construction.

use std::collections::HashMap;
use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};

/// Index of a group element.
pub type Elem = u16;

/// Largest order stored as a full table. Tuple groups over the base group
/// are generated, never tabulated, so the bound applies to the base only.
pub const MAX_GROUP_ORDER: usize = 4096;

const ASSOC_EXHAUSTIVE_LIMIT: usize = 256;
const ASSOC_SAMPLES: usize = 1 << 16;

/// A finite group with a full multiplication table.
#[derive(Clone)]
pub struct FiniteGroup {
    order: usize,
    mult: Vec<Elem>,
    inv: Vec<Elem>,
    identity: Elem,
    gens: Vec<Elem>,
    labels: Option<Vec<String>>,
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteGroup")
            .field("order", &self.order)
            .field("identity", &self.identity)
            .field("gens", &self.gens)
            .finish()
    }
}

/// A subgroup given by its sorted member list and the generators it was
/// built from. Only meaningful together with the parent group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    members: Vec<Elem>,
    generators: Vec<Elem>,
}

impl Subgroup {
    pub fn members(&self) -> &[Elem] {
        &self.members
    }

    pub fn generators(&self) -> &[Elem] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }

    pub fn contains(&self, g: Elem) -> bool {
        self.members.binary_search(&g).is_ok()
    }
}

impl FiniteGroup {
    /// Builds a group from an explicit `n x n` multiplication table of
    /// element indices. Finds the identity, computes inverses, and checks
    /// associativity.
    pub fn from_mult_table(table: &[Vec<usize>]) -> Result<Self> {
        let order = table.len();
        if order == 0 {
            return Err(Error::InvalidParameter("empty multiplication table".into()));
        }
        if order > MAX_GROUP_ORDER {
            return Err(Error::GroupTooLarge {
                order,
                max: MAX_GROUP_ORDER,
            });
        }
        let mut mult = vec![0 as Elem; order * order];
        for (i, row) in table.iter().enumerate() {
            if row.len() != order {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has length {} but the table has order {order}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v >= order {
                    return Err(Error::InvalidElement {
                        index: v,
                        order,
                    });
                }
                mult[i * order + j] = v as Elem;
            }
        }
        Self::finish(order, mult, None, true)
    }

    /// Builds the permutation group generated by `gens`, permutations of
    /// `0..letters` written one-line. Returns the group together with the
    /// realized permutation of each element; element labels are cycle
    /// notation.
    pub fn from_permutations(letters: usize, gens: &[Vec<usize>]) -> Result<(Self, Vec<Vec<u16>>)> {
        if letters == 0 || letters > u16::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "letter count {letters} out of range"
            )));
        }
        for (i, p) in gens.iter().enumerate() {
            if p.len() != letters || !is_permutation(p) {
                return Err(Error::InvalidParameter(format!(
                    "generator {i} is not a permutation of 0..{letters}"
                )));
            }
        }
        let id: Vec<u16> = (0..letters as u16).collect();
        let gen_perms: Vec<Vec<u16>> = gens
            .iter()
            .map(|p| p.iter().map(|&v| v as u16).collect())
            .collect();

        // BFS closure under composition; discovery order indexes elements.
        let mut perms: Vec<Vec<u16>> = vec![id.clone()];
        let mut index: HashMap<Vec<u16>, Elem> = HashMap::new();
        index.insert(id, 0);
        let mut head = 0;
        while head < perms.len() {
            let cur = perms[head].clone();
            head += 1;
            for g in &gen_perms {
                let next: Vec<u16> = cur.iter().map(|&x| g[x as usize]).collect();
                if !index.contains_key(&next) {
                    if perms.len() >= MAX_GROUP_ORDER {
                        return Err(Error::GroupTooLarge {
                            order: perms.len() + 1,
                            max: MAX_GROUP_ORDER,
                        });
                    }
                    index.insert(next.clone(), perms.len() as Elem);
                    perms.push(next);
                }
            }
        }

        let order = perms.len();
        let mut mult = vec![0 as Elem; order * order];
        for i in 0..order {
            for j in 0..order {
                // (p_i ∘ p_j)(x) = p_i(p_j(x))
                let composed: Vec<u16> = perms[j].iter().map(|&x| perms[i][x as usize]).collect();
                mult[i * order + j] = *index.get(&composed).ok_or_else(|| {
                    Error::InternalInvariantViolation("closure missed a composite".into())
                })?;
            }
        }
        let labels = perms.iter().map(|p| cycle_notation(p)).collect();
        let mut group = Self::finish(order, mult, Some(labels), false)?;
        // Generators as discovered: indices of the given permutations.
        let mut gen_ids: Vec<Elem> = Vec::new();
        for g in &gen_perms {
            let id = *index.get(g).unwrap();
            if !gen_ids.contains(&id) && id != group.identity {
                gen_ids.push(id);
            }
        }
        if !gen_ids.is_empty() {
            group.gens = gen_ids;
        }
        Ok((group, perms))
    }

    /// Table constructor for internal builders whose tables are correct by
    /// construction; still locates identity and inverses.
    pub(crate) fn from_table_unchecked(order: usize, mult: Vec<Elem>) -> Result<Self> {
        Self::finish(order, mult, None, false)
    }

    fn finish(
        order: usize,
        mult: Vec<Elem>,
        labels: Option<Vec<String>>,
        check_assoc: bool,
    ) -> Result<Self> {
        if order > MAX_GROUP_ORDER {
            return Err(Error::GroupTooLarge {
                order,
                max: MAX_GROUP_ORDER,
            });
        }
        let at = |a: usize, b: usize| mult[a * order + b] as usize;

        let mut identity = None;
        for e in 0..order {
            if (0..order).all(|g| at(e, g) == g && at(g, e) == g) {
                identity = Some(e as Elem);
                break;
            }
        }
        let identity = identity
            .ok_or_else(|| Error::InvalidSystem("multiplication table has no identity".into()))?;

        let mut inv = vec![0 as Elem; order];
        for (g, slot) in inv.iter_mut().enumerate() {
            let mut found = None;
            for h in 0..order {
                if at(g, h) == identity as usize && at(h, g) == identity as usize {
                    found = Some(h as Elem);
                    break;
                }
            }
            *slot = found.ok_or_else(|| {
                Error::InvalidSystem(format!("element {g} has no two-sided inverse"))
            })?;
        }

        if check_assoc {
            if order <= ASSOC_EXHAUSTIVE_LIMIT {
                for a in 0..order {
                    for b in 0..order {
                        let ab = at(a, b);
                        for c in 0..order {
                            if mult[ab * order + c] != mult[a * order + at(b, c)] {
                                return Err(Error::InvalidSystem(format!(
                                    "associativity fails at ({a},{b},{c})"
                                )));
                            }
                        }
                    }
                }
            } else {
                let mut rng = StdRng::seed_from_u64(0);
                for _ in 0..ASSOC_SAMPLES {
                    let a = rng.gen_range(0..order);
                    let b = rng.gen_range(0..order);
                    let c = rng.gen_range(0..order);
                    if mult[at(a, b) * order + c] != mult[a * order + at(b, c)] {
                        return Err(Error::InvalidSystem(format!(
                            "associativity fails at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }

        let mut group = FiniteGroup {
            order,
            mult,
            inv,
            identity,
            gens: Vec::new(),
            labels,
        };
        group.gens = group.small_generating_set();
        Ok(group)
    }

    /// Greedy generating set: scan elements in index order, keep those not
    /// already generated. Deterministic; at most log2(order) elements.
    fn small_generating_set(&self) -> Vec<Elem> {
        let mut gens: Vec<Elem> = Vec::new();
        let mut generated = vec![false; self.order];
        generated[self.identity as usize] = true;
        let mut count = 1usize;
        for g in 0..self.order as Elem {
            if generated[g as usize] {
                continue;
            }
            gens.push(g);
            // close under multiplication by the new generator set
            let mut frontier: Vec<Elem> = vec![g];
            generated[g as usize] = true;
            count += 1;
            while let Some(x) = frontier.pop() {
                for &h in gens.iter().chain(std::iter::once(&g)) {
                    for y in [self.mul(x, h), self.mul(h, x)] {
                        if !generated[y as usize] {
                            generated[y as usize] = true;
                            count += 1;
                            frontier.push(y);
                        }
                    }
                }
            }
            if count == self.order {
                break;
            }
        }
        if gens.is_empty() {
            gens.push(self.identity);
        }
        gens
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> Elem {
        self.identity
    }

    /// Designated generating set used by orbit and closure computations.
    pub fn generators(&self) -> &[Elem] {
        &self.gens
    }

    pub fn set_generators(&mut self, gens: Vec<Elem>) -> Result<()> {
        for &g in &gens {
            self.check(g)?;
        }
        let sub = self.generate_subgroup(&gens)?;
        if sub.len() != self.order {
            return Err(Error::InvalidParameter(
                "proposed generators do not generate the group".into(),
            ));
        }
        self.gens = gens;
        Ok(())
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.order as Elem
    }

    fn check(&self, g: Elem) -> Result<()> {
        if (g as usize) < self.order {
            Ok(())
        } else {
            Err(Error::InvalidElement {
                index: g as usize,
                order: self.order,
            })
        }
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.mult[a as usize * self.order + b as usize]
    }

    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        self.inv[a as usize]
    }

    /// g·h·g⁻¹·h⁻¹
    pub fn commutator(&self, g: Elem, h: Elem) -> Elem {
        let gh = self.mul(g, h);
        let gi = self.inv(g);
        let hi = self.inv(h);
        self.mul(self.mul(gh, gi), hi)
    }

    pub fn conjugate(&self, g: Elem, by: Elem) -> Elem {
        self.mul(self.mul(by, g), self.inv(by))
    }

    pub fn is_abelian(&self) -> bool {
        for a in 0..self.order as Elem {
            for b in 0..a {
                if self.mul(a, b) != self.mul(b, a) {
                    return false;
                }
            }
        }
        true
    }

    pub fn element_order(&self, g: Elem) -> usize {
        let mut k = 1;
        let mut cur = g;
        while cur != self.identity {
            cur = self.mul(cur, g);
            k += 1;
        }
        k
    }

    /// Multiset of element orders, ascending. Determines finite abelian
    /// groups up to isomorphism.
    pub fn element_orders(&self) -> Vec<usize> {
        let mut orders: Vec<usize> = self.elements().map(|g| self.element_order(g)).collect();
        orders.sort_unstable();
        orders
    }

    pub fn label(&self, g: Elem) -> String {
        match &self.labels {
            Some(l) => l[g as usize].clone(),
            None => g.to_string(),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Vec<String>) -> Result<()> {
        if labels.len() != self.order {
            return Err(Error::InvalidParameter(format!(
                "{} labels for order {}",
                labels.len(),
                self.order
            )));
        }
        self.labels = Some(labels);
        Ok(())
    }

    /// Smallest subgroup containing `gens`: worklist closure under
    /// multiplication and inverses.
    pub fn generate_subgroup(&self, gens: &[Elem]) -> Result<Subgroup> {
        for &g in gens {
            self.check(g)?;
        }
        let mut member = vec![false; self.order];
        member[self.identity as usize] = true;
        let mut work: Vec<Elem> = vec![self.identity];
        for &g in gens {
            if !member[g as usize] {
                member[g as usize] = true;
                work.push(g);
            }
        }
        let mut head = 0;
        while head < work.len() {
            let x = work[head];
            head += 1;
            let xi = self.inv(x);
            if !member[xi as usize] {
                member[xi as usize] = true;
                work.push(xi);
            }
            for &g in gens {
                for y in [self.mul(x, g), self.mul(g, x)] {
                    if !member[y as usize] {
                        member[y as usize] = true;
                        work.push(y);
                    }
                }
            }
            // products of discovered members keep the set closed even when
            // gens is empty or partial
            for i in 0..head {
                let z = self.mul(x, work[i]);
                if !member[z as usize] {
                    member[z as usize] = true;
                    work.push(z);
                }
            }
        }
        let members: Vec<Elem> = (0..self.order as Elem)
            .filter(|&g| member[g as usize])
            .collect();
        Ok(Subgroup {
            members,
            generators: gens.to_vec(),
        })
    }

    /// Subgroup generated by all commutators [g, a] with g in the group and
    /// a in `of`.
    pub fn commutator_subgroup(&self, of: &Subgroup) -> Subgroup {
        let mut gens: Vec<Elem> = Vec::new();
        let mut seen = vec![false; self.order];
        for g in 0..self.order as Elem {
            for &a in of.members() {
                let c = self.commutator(g, a);
                if !seen[c as usize] {
                    seen[c as usize] = true;
                    gens.push(c);
                }
            }
        }
        self.generate_subgroup(&gens)
            .expect("commutators are valid elements")
    }

    pub fn full_subgroup(&self) -> Subgroup {
        Subgroup {
            members: (0..self.order as Elem).collect(),
            generators: self.gens.clone(),
        }
    }

    pub fn trivial_subgroup(&self) -> Subgroup {
        Subgroup {
            members: vec![self.identity],
            generators: Vec::new(),
        }
    }

    pub fn derived_subgroup(&self) -> Subgroup {
        self.commutator_subgroup(&self.full_subgroup())
    }

    /// True iff the group equals its own derived subgroup.
    pub fn is_perfect(&self) -> bool {
        self.derived_subgroup().len() == self.order
    }

    /// Lower central series G = G_1 ⊇ G_2 ⊇ … with G_{i+1} = [G, G_i].
    /// Stops after the trivial subgroup, or after one repeated term when the
    /// series stabilizes at a nontrivial subgroup (non-nilpotent case).
    pub fn lower_central_series(&self) -> Vec<Subgroup> {
        let mut series = vec![self.full_subgroup()];
        loop {
            let last = series.last().unwrap();
            if last.is_trivial() {
                break;
            }
            let next = self.commutator_subgroup(last);
            let stabilized = next.members == last.members;
            series.push(next);
            if stabilized {
                break;
            }
        }
        series
    }

    /// The i-th term of the lower central series (1-based), clamped at the
    /// stabilized tail.
    pub fn lower_central_term(&self, i: usize) -> Subgroup {
        assert!(i >= 1);
        let series = self.lower_central_series();
        let idx = (i - 1).min(series.len() - 1);
        series[idx].clone()
    }

    /// Nilpotency class: length of the lower central series to the trivial
    /// subgroup, or None when the series stabilizes before reaching it.
    pub fn nilpotency_class(&self) -> Option<usize> {
        let series = self.lower_central_series();
        if series.last().unwrap().is_trivial() {
            Some(series.len() - 1)
        } else {
            None
        }
    }

    pub fn center(&self) -> Subgroup {
        let members: Vec<Elem> = self
            .elements()
            .filter(|&g| self.elements().all(|h| self.mul(g, h) == self.mul(h, g)))
            .collect();
        Subgroup {
            generators: members.clone(),
            members,
        }
    }

    pub fn is_normal(&self, sub: &Subgroup) -> bool {
        for g in 0..self.order as Elem {
            for &n in sub.members() {
                if !sub.contains(self.conjugate(n, g)) {
                    return false;
                }
            }
        }
        true
    }

    /// Quotient by a normal subgroup. Returns the coset group and the
    /// canonical surjection. Cosets are labelled by their smallest member.
    pub fn quotient_group(&self, normal: &Subgroup) -> Result<(FiniteGroup, Vec<Elem>)> {
        for g in 0..self.order as Elem {
            for &n in normal.members() {
                let c = self.conjugate(n, g);
                if !normal.contains(c) {
                    return Err(Error::NotNormal {
                        member: n as usize,
                        by: g as usize,
                    });
                }
            }
        }
        // left cosets gN, represented by smallest member
        let mut rep_of = vec![Elem::MAX; self.order];
        let mut reps: Vec<Elem> = Vec::new();
        for g in 0..self.order as Elem {
            if rep_of[g as usize] != Elem::MAX {
                continue;
            }
            let mut coset: Vec<Elem> = normal.members().iter().map(|&n| self.mul(g, n)).collect();
            coset.sort_unstable();
            let rep = coset[0];
            for &c in &coset {
                rep_of[c as usize] = rep;
            }
            reps.push(rep);
        }
        reps.sort_unstable();
        let class_of = |g: Elem| -> Elem {
            let rep = rep_of[g as usize];
            reps.binary_search(&rep).unwrap() as Elem
        };
        let q = reps.len();
        let mut mult = vec![0 as Elem; q * q];
        for (i, &a) in reps.iter().enumerate() {
            for (j, &b) in reps.iter().enumerate() {
                mult[i * q + j] = class_of(self.mul(a, b));
            }
        }
        let mut group = FiniteGroup::from_table_unchecked(q, mult)?;
        let labels = reps.iter().map(|&r| format!("[{}]", self.label(r))).collect();
        group.set_labels(labels)?;
        let map: Vec<Elem> = (0..self.order as Elem).map(class_of).collect();
        Ok((group, map))
    }

    /// G/[G,G] with the canonical surjection. The result is abelian.
    pub fn abelianization(&self) -> (FiniteGroup, Vec<Elem>) {
        let derived = self.derived_subgroup();
        self.quotient_group(&derived)
            .expect("derived subgroup is normal")
    }

    /// Direct product, elements indexed as a·|other| + b.
    pub fn direct_product(&self, other: &FiniteGroup) -> Result<FiniteGroup> {
        let order = self.order * other.order;
        if order > MAX_GROUP_ORDER {
            return Err(Error::GroupTooLarge {
                order,
                max: MAX_GROUP_ORDER,
            });
        }
        let n2 = other.order;
        let mut mult = vec![0 as Elem; order * order];
        for a1 in 0..self.order {
            for a2 in 0..n2 {
                for b1 in 0..self.order {
                    for b2 in 0..n2 {
                        let a = a1 * n2 + a2;
                        let b = b1 * n2 + b2;
                        let p1 = self.mul(a1 as Elem, b1 as Elem) as usize;
                        let p2 = other.mul(a2 as Elem, b2 as Elem) as usize;
                        mult[a * order + b] = (p1 * n2 + p2) as Elem;
                    }
                }
            }
        }
        let mut group = FiniteGroup::from_table_unchecked(order, mult)?;
        let labels = (0..order)
            .map(|i| format!("({},{})", self.label((i / n2) as Elem), other.label((i % n2) as Elem)))
            .collect();
        group.set_labels(labels)?;
        Ok(group)
    }
}

fn is_permutation(p: &[usize]) -> bool {
    let n = p.len();
    let mut seen = vec![false; n];
    for &v in p {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

/// Cycle notation on letters 1..=n, identity printed as "()".
pub fn cycle_notation(perm: &[u16]) -> String {
    let n = perm.len();
    let mut seen = vec![false; n];
    let mut out = String::new();
    for start in 0..n {
        if seen[start] || perm[start] as usize == start {
            seen[start] = true;
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut cur = perm[start] as usize;
        while cur != start {
            seen[cur] = true;
            cycle.push(cur);
            cur = perm[cur] as usize;
        }
        out.push('(');
        out.push_str(
            &cycle
                .iter()
                .map(|&x| (x + 1).to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        out.push(')');
    }
    if out.is_empty() {
        out.push_str("()");
    }
    out
}
