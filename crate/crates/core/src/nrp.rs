//! Higher-order nilpotent regionally proximal relations NRP^[d], the
//! alternative RP^[d], their verification as invariant equivalences, the
//! canonical quotients and the abelian factor tower with structure groups.
//!
//! Membership (x, y) ∈ NRP^[d] means the lower corner on (x, y) of
//! dimension d+1 is a cube. Every cube factors as a face-group element
//! times a diagonal constant, so a cube with bottom vertex x is exactly a
//! face-orbit point of x^[d+1]; the relation is therefore computed one base
//! point at a time from the face orbit of x^[d+1], which holds memory to a
//! 1/|X| slice of the full cube set. The full-cube-set route stays
//! available as the independent cross-check.

use std::collections::HashMap;

use serde::Serialize;

use crate::cube::{corner, Configuration, CornerKind};
use crate::cube_group::face_generators;
use crate::cubespace::{config_slot_maps, dynamical_cubes, y_space};
use crate::error::{Error, Result};
use crate::group::{Elem, FiniteGroup};
use crate::orbit::{close_under, Packing, SlotMap};
use crate::report::CheckReport;
use crate::system::{
    abelian_group_structure, proximal_relation, q_relation, quotient_system, FactorMap,
    FiniteSystem, Point, Relation,
};

/// Result of one relation computation.
#[derive(Debug, Clone)]
pub struct NrpComputation {
    pub d: usize,
    pub relation: Relation,
    /// False when the input system was not minimal; the relation is then the
    /// literal corner-membership set and no equivalence claim is made.
    pub minimal: bool,
    pub states_visited: u64,
}

/// NRP^[d]: pairs whose lower (d+1)-corner is a cube. d = 0 is allowed and
/// gives the ergodicity relation (full on minimal systems); the factor
/// tower uses it as its bottom level.
pub fn nrp_relation(sys: &FiniteSystem, d: usize, budget: usize) -> Result<NrpComputation> {
    let (lower, _, visited) = corner_relations(sys, d, false, budget)?;
    Ok(NrpComputation {
        d,
        relation: lower,
        minimal: sys.is_minimal(),
        states_visited: visited,
    })
}

/// Lower-corner and optionally upper-corner relations from per-base-point
/// face orbits.
fn corner_relations(
    sys: &FiniteSystem,
    d: usize,
    with_upper: bool,
    budget: usize,
) -> Result<(Relation, Relation, u64)> {
    let dim = d + 1;
    let n = sys.points();
    let packing = Packing::choose(1 << dim, n)?;
    let gens = config_slot_maps(sys, &face_generators(sys.group(), dim)?);
    let mut lower = Relation::empty(n);
    let mut upper = Relation::empty(n);
    let mut visited = 0u64;
    for x in 0..n as Point {
        let mut watch: Vec<Vec<Point>> = (0..n as Point)
            .map(|y| corner(x, y, dim, CornerKind::Lower).values().to_vec())
            .collect();
        if with_upper {
            watch.extend(
                (0..n as Point).map(|y| corner(x, y, dim, CornerKind::Upper).values().to_vec()),
            );
        }
        let start = vec![vec![x; 1 << dim]];
        let res = close_under(
            packing,
            &start,
            &gens,
            &watch,
            budget,
            &format!("face orbit of {x}^[{dim}]"),
        )?;
        visited += res.visited;
        for y in 0..n {
            if res.watch_hits[y] {
                lower.insert(x, y as Point);
            }
            if with_upper && res.watch_hits[n + y] {
                upper.insert(x, y as Point);
            }
        }
    }
    Ok((lower, upper, visited))
}

/// Literal cross-check route: corner membership against the full cube set.
pub fn nrp_relation_via_full_cubes(
    sys: &FiniteSystem,
    d: usize,
    budget: usize,
) -> Result<NrpComputation> {
    let cubes = dynamical_cubes(sys, d + 1, budget)?;
    let n = sys.points();
    let mut relation = Relation::empty(n);
    for x in 0..n as Point {
        for y in 0..n as Point {
            if cubes.contains(&corner(x, y, d + 1, CornerKind::Lower)) {
                relation.insert(x, y);
            }
        }
    }
    Ok(NrpComputation {
        d,
        relation,
        minimal: sys.is_minimal(),
        states_visited: cubes.states_visited(),
    })
}

/// Reflexivity, symmetry, transitivity and invariance of a computed
/// relation; closedness is automatic on a finite space.
pub fn verify_equivalence(rel: &Relation, sys: &FiniteSystem) -> CheckReport {
    let mut report = CheckReport::new("equivalence", true);
    report.states_visited = rel.len() as u64;
    if let Some(why) = rel.equivalence_failure() {
        report.fail(why);
    }
    if let Some((x, y, g)) = rel.invariance_failure(sys) {
        report.fail(format!("pair ({x},{y}) leaves the relation under generator {g}"));
    }
    report.note("closedness is automatic: the space is finite and discrete");
    report
}

/// The upper-corner membership set coincides with the lower-corner one.
pub fn verify_alt_corner(sys: &FiniteSystem, d: usize, budget: usize) -> Result<CheckReport> {
    let (lower, upper, visited) = corner_relations(sys, d, true, budget)?;
    let mut report = CheckReport::new(format!("alt_corner d={d}"), true);
    report.states_visited = visited;
    for (x, y) in lower.iter() {
        if !upper.contains(x, y) {
            report.fail(format!("({x},{y}) has a lower corner cube but no upper one"));
        }
    }
    for (x, y) in upper.iter() {
        if !lower.contains(x, y) {
            report.fail(format!("({x},{y}) has an upper corner cube but no lower one"));
        }
    }
    Ok(report)
}

/// The canonical relation from the full cube set: two points are related
/// when two cubes agree everywhere except the top vertex and carry them
/// there. Serves as the independent oracle for [`nrp_relation`].
pub fn canonical_relation(sys: &FiniteSystem, d: usize, budget: usize) -> Result<Relation> {
    let cubes = dynamical_cubes(sys, d + 1, budget)?;
    let verts = 1usize << (d + 1);
    let n = sys.points();
    let mut buckets: HashMap<Vec<Point>, Vec<Point>> = HashMap::new();
    cubes.for_each_vals(|vals| {
        let bucket = buckets.entry(vals[..verts - 1].to_vec()).or_default();
        let top = vals[verts - 1];
        if !bucket.contains(&top) {
            bucket.push(top);
        }
    });
    let mut rel = Relation::empty(n);
    for tops in buckets.values() {
        for &a in tops {
            for &b in tops {
                rel.insert(a, b);
            }
        }
    }
    Ok(rel)
}

/// Asserts the per-base-point computation against the canonical bucketing.
pub fn check_canonical_vs_nrp(sys: &FiniteSystem, d: usize, budget: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("canonical_vs_nrp d={d}"), true);
    let nrp = nrp_relation(sys, d, budget)?;
    let canonical = canonical_relation(sys, d, budget)?;
    report.states_visited = nrp.states_visited;
    if nrp.relation != canonical {
        let only_nrp: Vec<_> = nrp
            .relation
            .iter()
            .filter(|&(x, y)| !canonical.contains(x, y))
            .take(4)
            .collect();
        let only_canon: Vec<_> = canonical
            .iter()
            .filter(|&(x, y)| !nrp.relation.contains(x, y))
            .take(4)
            .collect();
        report.fail(format!(
            "corner and bucket routes disagree: corner-only {only_nrp:?}, bucket-only {only_canon:?}"
        ));
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct RpComputation {
    pub d: usize,
    pub relation: Relation,
    pub states_visited: u64,
}

/// RP^[d] in finite semantics: (x, y) related when some face-group element
/// pushes the two constant configurations to a common tail. Computed by a
/// breadth-first closure over pairs of configurations under the diagonal
/// face-group action, collecting pairs with matching tails.
pub fn rp_relation(sys: &FiniteSystem, d: usize, budget: usize) -> Result<RpComputation> {
    let n = sys.points();
    let verts = 1usize << d;
    let packing = Packing::choose(2 * verts, n)?;
    // diagonal action on pairs: the same substitution on both halves
    let gens: Vec<SlotMap> = config_slot_maps(sys, &face_generators(sys.group(), d)?)
        .into_iter()
        .map(|m| {
            let mut table = m.table;
            table.extend_from_within(..);
            SlotMap {
                table,
                values: m.values,
            }
        })
        .collect();
    let mut starts = Vec::with_capacity(n * n);
    for x in 0..n as Point {
        for y in 0..n as Point {
            let mut s = vec![x; verts];
            s.extend(std::iter::repeat_n(y, verts));
            starts.push(s);
        }
    }
    let res = close_under(packing, &starts, &gens, &[], budget, &format!("RP^[{d}] pair orbit"))?;
    let mut relation = Relation::empty(n);
    res.set.for_each(res.packing, |state| {
        let (c1, c2) = state.split_at(verts);
        if c1[1..] == c2[1..] {
            relation.insert(c1[0], c2[0]);
        }
    });
    Ok(RpComputation {
        d,
        relation,
        states_visited: res.visited,
    })
}

/// RP^[d] ⊆ NRP^[d].
pub fn check_rp_subset_nrp(sys: &FiniteSystem, d: usize, budget: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("rp_subset_nrp d={d}"), true);
    let rp = rp_relation(sys, d, budget)?;
    let nrp = nrp_relation(sys, d, budget)?;
    report.states_visited = rp.states_visited + nrp.states_visited;
    for (x, y) in rp.relation.iter() {
        if !nrp.relation.contains(x, y) {
            report.fail(format!("({x},{y}) regionally proximal but corner not a cube"));
        }
    }
    Ok(report)
}

/// The inclusion chain P ⊆ Q ⊆ NRP^[1], monotonicity in d, and the
/// lower-central-series pairs (x, hx) ∈ NRP^[d] for h in G_(d+1).
pub fn elementary_chain_check(sys: &FiniteSystem, d_max: usize, budget: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new("elementary_chain", true);
    let p = proximal_relation(sys);
    let q = q_relation(sys);
    let q_eq = crate::system::q_eq_relation(sys);
    let mut nrps = Vec::new();
    for d in 1..=d_max {
        let c = nrp_relation(sys, d, budget)?;
        report.states_visited += c.states_visited;
        nrps.push(c.relation);
    }
    if !p.is_subset_of(&q) {
        report.fail("P is not contained in Q".to_string());
    }
    if !q.is_subset_of(&q_eq) {
        report.fail("Q is not contained in Q_eq".to_string());
    }
    if let Some(first) = nrps.first() {
        if !q.is_subset_of(first) {
            report.fail("Q is not contained in NRP^[1]".to_string());
        }
        if !q_eq.is_subset_of(first) {
            report.fail("Q_eq is not contained in NRP^[1]".to_string());
        }
    }
    for d in 1..d_max {
        if !nrps[d].is_subset_of(&nrps[d - 1]) {
            report.fail(format!("NRP^[{}] is not contained in NRP^[{d}]", d + 1));
        }
    }
    for (d, rel) in nrps.iter().enumerate() {
        let term = sys.group().lower_central_term(d + 2);
        for &h in term.members() {
            for x in 0..sys.points() as Point {
                if !rel.contains(x, sys.act(h, x)) {
                    report.fail(format!(
                        "(x, hx) escapes NRP^[{}] at x={x}, h={h}",
                        d + 1
                    ));
                }
            }
        }
    }
    Ok(report)
}

/// Quotient by NRP^[d]. The relation is verified as an invariant
/// equivalence first, and the quotient recomputes its own NRP^[d], which
/// must be trivial.
pub fn quotient_by_nrp(
    sys: &FiniteSystem,
    d: usize,
    budget: usize,
) -> Result<(FiniteSystem, FactorMap, NrpComputation)> {
    let comp = nrp_relation(sys, d, budget)?;
    if !comp.minimal {
        return Err(Error::NotMinimal);
    }
    let verification = verify_equivalence(&comp.relation, sys);
    if verification.failed() {
        return Err(Error::InternalInvariantViolation(format!(
            "relation failed verification on a minimal system: {:?}",
            verification.witnesses
        )));
    }
    let (quotient, map) = quotient_system(sys, &comp.relation)?;
    let on_quotient = nrp_relation(&quotient, d, budget)?;
    if !on_quotient.relation.is_diagonal() {
        return Err(Error::InternalInvariantViolation(format!(
            "quotient by NRP^[{d}] kept a nontrivial relation"
        )));
    }
    Ok((quotient, map, comp))
}

/// Maximality of the canonical factor: any factor map onto a system with
/// trivial NRP^[d] must come from the quotient, i.e. be constant on classes
/// with the induced map equivariant.
pub fn verify_maximal_factor(
    sys: &FiniteSystem,
    d: usize,
    phi: &FactorMap,
    budget: usize,
) -> Result<CheckReport> {
    let target_nrp = nrp_relation(phi.target(), d, budget)?;
    if !target_nrp.relation.is_diagonal() {
        return Err(Error::TargetNotOrderD { d });
    }
    let mut report = CheckReport::new(format!("maximal_factor d={d}"), true);
    let comp = nrp_relation(sys, d, budget)?;
    report.states_visited = comp.states_visited + target_nrp.states_visited;
    // constant on classes
    for (x, y) in comp.relation.iter() {
        if phi.apply(x) != phi.apply(y) {
            report.fail(format!(
                "factor separates the related pair ({x},{y})"
            ));
            return Ok(report);
        }
    }
    // the induced map on the quotient is equivariant by construction once
    // well-defined; verify explicitly
    let (quotient, pi) = quotient_system(sys, &comp.relation)?;
    let mut induced = vec![0 as Point; quotient.points()];
    for x in 0..sys.points() as Point {
        induced[pi.apply(x) as usize] = phi.apply(x);
    }
    for g in 0..quotient.group().order() as Elem {
        for c in 0..quotient.points() as Point {
            if induced[quotient.act(g, c) as usize] != phi.target().act(g, induced[c as usize]) {
                report.fail(format!("induced map is not equivariant at g={g}, class={c}"));
                return Ok(report);
            }
        }
    }
    Ok(report)
}

/// π×π(NRP^[d] of the source) equals NRP^[d] of the target, with witnesses
/// for either strict inclusion.
pub fn verify_lifting(pi: &FactorMap, d: usize, budget: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("lifting d={d}"), true);
    let up = nrp_relation(pi.source(), d, budget)?;
    let down = nrp_relation(pi.target(), d, budget)?;
    report.states_visited = up.states_visited + down.states_visited;
    let image = up.relation.image(pi.map(), pi.target().points());
    for (x, y) in image.iter() {
        if !down.relation.contains(x, y) {
            report.fail(format!("image pair ({x},{y}) missing downstairs"));
        }
    }
    for (x, y) in down.relation.iter() {
        if !image.contains(x, y) {
            report.fail(format!("pair ({x},{y}) downstairs does not lift"));
        }
    }
    Ok(report)
}

/// Smallest d with trivial NRP^[d], the effective nilpotent quotient of the
/// acting group, and the nilpotency data.
#[derive(Debug, Clone, Serialize)]
pub struct OrderReport {
    /// None when every checked order keeps a nontrivial relation.
    pub order: Option<usize>,
    pub d_max: usize,
    /// Class counts of NRP^[d] for each checked d, starting at d = 1.
    pub class_counts: Vec<usize>,
    /// Size of the kernel of the action inside the group.
    pub fix_size: usize,
    /// Order of G / Fix when the system order was found.
    pub effective_group_order: Option<usize>,
    /// Nilpotency class of the effective group.
    pub nilpotency_class: Option<usize>,
    pub states_visited: u64,
}

/// Finds the order of a minimal system by scanning d = 1..d_max, then
/// checks the effective action: the (d+1)-th lower central term must act
/// trivially, and the group modulo its action kernel is nilpotent of class
/// at most d.
pub fn order_of_system(sys: &FiniteSystem, d_max: usize, budget: usize) -> Result<OrderReport> {
    if !sys.is_minimal() {
        return Err(Error::NotMinimal);
    }
    let mut report = OrderReport {
        order: None,
        d_max,
        class_counts: Vec::new(),
        fix_size: sys.fix_subgroup().len(),
        effective_group_order: None,
        nilpotency_class: None,
        states_visited: 0,
    };
    for d in 1..=d_max {
        let comp = nrp_relation(sys, d, budget)?;
        report.states_visited += comp.states_visited;
        report.class_counts.push(comp.relation.classes()?.len());
        if comp.relation.is_diagonal() {
            report.order = Some(d);
            break;
        }
    }
    let Some(d) = report.order else {
        return Ok(report);
    };
    let group = sys.group();
    let fix = sys.fix_subgroup();
    let term = group.lower_central_term(d + 1);
    for &h in term.members() {
        if !fix.contains(h) {
            return Err(Error::InternalInvariantViolation(format!(
                "lower central term {d}+1 contains {h} acting nontrivially"
            )));
        }
    }
    let (effective, _) = effective_nilpotent_quotient(sys, d)?;
    report.effective_group_order = Some(effective.order());
    let class = effective.nilpotency_class();
    if class.is_none_or(|c| c > d) {
        return Err(Error::InternalInvariantViolation(format!(
            "effective group has nilpotency class {class:?} above the system order {d}"
        )));
    }
    report.nilpotency_class = class;
    Ok(report)
}

/// The same action through the group modulo its kernel: for a system of
/// order d the (d+1)-th lower central term acts trivially, so the quotient
/// group is nilpotent of class at most d and acts identically on X.
pub fn effective_nilpotent_quotient(
    sys: &FiniteSystem,
    d: usize,
) -> Result<(FiniteGroup, FiniteSystem)> {
    let group = sys.group();
    let fix = sys.fix_subgroup();
    let term = group.lower_central_term(d + 1);
    for &h in term.members() {
        if !fix.contains(h) {
            return Err(Error::InternalInvariantViolation(format!(
                "lower central term {} contains an element acting nontrivially",
                d + 1
            )));
        }
    }
    let (quotient, class_map) = group.quotient_group(&fix)?;
    let n = sys.points();
    let mut action = vec![0 as Point; quotient.order() * n];
    let mut assigned = vec![false; quotient.order()];
    for g in group.elements() {
        let c = class_map[g as usize] as usize;
        let row = sys.action_row(g);
        if assigned[c] {
            if &action[c * n..(c + 1) * n] != row {
                return Err(Error::InternalInvariantViolation(
                    "action is not constant on kernel cosets".into(),
                ));
            }
        } else {
            action[c * n..(c + 1) * n].copy_from_slice(row);
            assigned[c] = true;
        }
    }
    let system = FiniteSystem::new(std::sync::Arc::new(quotient.clone()), n, action)?
        .with_name(format!("{} (effective)", sys.name()));
    Ok((quotient, system))
}

/// One level of the factor tower.
#[derive(Debug, Clone, Serialize)]
pub struct TowerLevel {
    /// Level index j: the extension X_j → X_(j-1).
    pub level: usize,
    pub size: usize,
    pub quotient_size: usize,
    pub structure_group_order: usize,
    pub structure_group_abelian: bool,
    pub acts_freely: bool,
    pub orbits_match_fibres: bool,
    pub commutes_with_action: bool,
    /// Ascending element orders; identifies the abelian isomorphism type.
    pub element_orders: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TowerReport {
    pub order: Option<usize>,
    /// True when the order exceeded d_max and only a truncated tower of
    /// quotients is reported.
    pub truncated: bool,
    pub levels: Vec<TowerLevel>,
    /// Sizes of X = X_order, X_(order-1), …, X_1, 1.
    pub sizes: Vec<usize>,
    pub final_quotient_abelian_system: bool,
    pub states_visited: u64,
}

/// Structure group of the extension level_sys → level_sys / NRP^[j-1]:
/// classes of related pairs under "the two glued corners form a cube",
/// acting on the space by the unique related-and-equivalent partner.
struct StructureGroup {
    group: FiniteGroup,
    free: bool,
    orbits_match_fibres: bool,
    commutes: bool,
    states_visited: u64,
}

fn structure_group(level_sys: &FiniteSystem, j: usize, budget: usize) -> Result<StructureGroup> {
    let n = level_sys.points();
    let base = nrp_relation(level_sys, j - 1, budget)?;
    let mut visited = base.states_visited;
    let pairs: Vec<(Point, Point)> = base.relation.sorted_pairs();

    // equivalence on pairs: glue the two corners floor/ceiling and test the
    // (j+1)-dimensional configuration, per base point of the floor corner
    let dim = j + 1;
    let packing = Packing::choose(1 << dim, n)?;
    let gens = config_slot_maps(level_sys, &face_generators(level_sys.group(), dim)?);
    let mut related = vec![Vec::new(); pairs.len()];
    for x in 0..n as Point {
        let from_x: Vec<usize> = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.0 == x)
            .map(|(i, _)| i)
            .collect();
        if from_x.is_empty() {
            continue;
        }
        let mut watch = Vec::with_capacity(from_x.len() * pairs.len());
        for &i in &from_x {
            let floor = corner(pairs[i].0, pairs[i].1, j, CornerKind::Lower);
            for &(y, y2) in &pairs {
                let ceiling = corner(y, y2, j, CornerKind::Lower);
                let glued = Configuration::join_floor_ceiling(&floor, &ceiling)?;
                watch.push(glued.values().to_vec());
            }
        }
        let start = vec![vec![x; 1 << dim]];
        let res = close_under(packing, &start, &gens, &watch, budget, "structure group gluing")?;
        visited += res.visited;
        for (k, &i) in from_x.iter().enumerate() {
            for (q, hit) in res.watch_hits[k * pairs.len()..(k + 1) * pairs.len()]
                .iter()
                .enumerate()
            {
                if *hit {
                    related[i].push(q);
                }
            }
        }
    }

    // the literal relation must be an equivalence on pairs
    let mut dsu = crate::dsu::DisjointSets::new(pairs.len());
    for (i, qs) in related.iter().enumerate() {
        if !qs.contains(&i) {
            return Err(Error::InternalInvariantViolation(
                "pair gluing relation is not reflexive".into(),
            ));
        }
        for &q in qs {
            if !related[q].contains(&i) {
                return Err(Error::InternalInvariantViolation(
                    "pair gluing relation is not symmetric".into(),
                ));
            }
            dsu.union(i, q);
        }
    }
    let classes = dsu.classes();
    for class in &classes {
        for &a in class {
            if related[a].len() != class.len() {
                return Err(Error::InternalInvariantViolation(
                    "pair gluing relation is not transitive".into(),
                ));
            }
        }
    }

    // each class acts: z ↦ the unique w with (z,w) related and in the class
    let mut class_of_pair = vec![0usize; pairs.len()];
    for (c, class) in classes.iter().enumerate() {
        for &i in class {
            class_of_pair[i] = c;
        }
    }
    let mut maps: Vec<Vec<Point>> = Vec::with_capacity(classes.len());
    for (c, _) in classes.iter().enumerate() {
        let mut map = vec![Point::MAX; n];
        for (i, &(x, y)) in pairs.iter().enumerate() {
            if class_of_pair[i] == c {
                if map[x as usize] != Point::MAX {
                    return Err(Error::InternalInvariantViolation(format!(
                        "class {c} is multivalued at point {x}"
                    )));
                }
                map[x as usize] = y;
            }
        }
        if map.contains(&Point::MAX) {
            return Err(Error::InternalInvariantViolation(format!(
                "class {c} is undefined on part of the space"
            )));
        }
        maps.push(map);
    }

    // composition closure gives the group table
    let map_index: HashMap<Vec<Point>, usize> =
        maps.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    let k = maps.len();
    let mut table = vec![0 as Elem; k * k];
    for a in 0..k {
        for b in 0..k {
            let composed: Vec<Point> = (0..n).map(|z| maps[a][maps[b][z] as usize]).collect();
            let Some(&c) = map_index.get(&composed) else {
                return Err(Error::InternalInvariantViolation(
                    "class maps are not closed under composition".into(),
                ));
            };
            table[a * k + b] = c as Elem;
        }
    }
    let group = FiniteGroup::from_table_unchecked(k, table)?;

    let identity_map: Vec<Point> = (0..n as Point).collect();
    let free = maps
        .iter()
        .all(|m| *m == identity_map || (0..n).all(|z| m[z] as usize != z));
    let orbits_match_fibres = (0..n as Point).all(|z| {
        let orbit: std::collections::BTreeSet<Point> = maps.iter().map(|m| m[z as usize]).collect();
        let fibre: std::collections::BTreeSet<Point> = (0..n as Point)
            .filter(|&w| base.relation.contains(z, w))
            .collect();
        orbit == fibre
    });
    let commutes = maps.iter().all(|m| {
        level_sys.group().generators().iter().all(|&g| {
            (0..n as Point).all(|z| m[level_sys.act(g, z) as usize] == level_sys.act(g, m[z as usize]))
        })
    });

    Ok(StructureGroup {
        group,
        free,
        orbits_match_fibres,
        commutes,
        states_visited: visited,
    })
}

/// The tower X → X/NRP^[d-1] → … → X/NRP^[1] → point for a minimal system
/// of order at most d_max, with the structure group of every level verified
/// abelian, free, fibre-transitive and commuting with the action. Any
/// failed verification is an internal invariant violation.
pub fn factor_tower(sys: &FiniteSystem, d_max: usize, budget: usize) -> Result<TowerReport> {
    if !sys.is_minimal() {
        return Err(Error::NotMinimal);
    }
    let order = order_of_system(sys, d_max, budget)?;
    let mut report = TowerReport {
        order: order.order,
        truncated: order.order.is_none(),
        levels: Vec::new(),
        sizes: Vec::new(),
        final_quotient_abelian_system: false,
        states_visited: order.states_visited,
    };

    let top = order.order.unwrap_or(d_max);
    // level systems X_j for j = top .. 1, with projections from X
    let mut level_systems: Vec<FiniteSystem> = Vec::new();
    let mut from_sys: Vec<FactorMap> = Vec::new();
    for j in (1..=top).rev() {
        if j == top && order.order.is_some() {
            level_systems.push(sys.clone());
            from_sys.push(FactorMap::identity(sys));
        } else {
            let comp = nrp_relation(sys, j, budget)?;
            report.states_visited += comp.states_visited;
            let (q, pi) = quotient_system(sys, &comp.relation)?;
            level_systems.push(q);
            from_sys.push(pi);
        }
    }
    report.sizes = level_systems.iter().map(|s| s.points()).collect();
    report.sizes.push(1);

    // step maps X_j → X_(j-1), induced by the projections from X; their
    // composition must reproduce the direct projection to X_1
    let mut composed = from_sys[0].clone();
    for idx in 1..level_systems.len() {
        let prev = &from_sys[idx - 1];
        let next = &from_sys[idx];
        let mut step = vec![Point::MAX; prev.target().points()];
        for x in 0..sys.points() as Point {
            let (a, b) = (prev.apply(x), next.apply(x));
            if step[a as usize] != Point::MAX && step[a as usize] != b {
                return Err(Error::InternalInvariantViolation(
                    "tower projections are not compatible".into(),
                ));
            }
            step[a as usize] = b;
        }
        let step = FactorMap::new(prev.target().clone(), next.target().clone(), step)?;
        composed = composed.then(&step)?;
    }
    if composed.map() != from_sys.last().unwrap().map() {
        return Err(Error::InternalInvariantViolation(
            "composed level projections differ from the direct projection".into(),
        ));
    }

    for (idx, level_sys) in level_systems.iter().enumerate() {
        let j = top - idx;
        let sg = structure_group(level_sys, j, budget)?;
        report.states_visited += sg.states_visited;
        let quotient_size = if j >= 2 {
            let comp = nrp_relation(level_sys, j - 1, budget)?;
            comp.relation.classes()?.len()
        } else {
            1
        };
        let level = TowerLevel {
            level: j,
            size: level_sys.points(),
            quotient_size,
            structure_group_order: sg.group.order(),
            structure_group_abelian: sg.group.is_abelian(),
            acts_freely: sg.free,
            orbits_match_fibres: sg.orbits_match_fibres,
            commutes_with_action: sg.commutes,
            element_orders: sg.group.element_orders(),
        };
        if !level.structure_group_abelian
            || !level.acts_freely
            || !level.orbits_match_fibres
            || !level.commutes_with_action
        {
            return Err(Error::InternalInvariantViolation(format!(
                "structure group verification failed at level {j}: {level:?}"
            )));
        }
        report.levels.push(level);
    }

    // the bottom quotient X_1 is an abelian group system
    let bottom = level_systems.last().unwrap();
    report.final_quotient_abelian_system = abelian_group_structure(bottom)?.is_some();
    if report.order.is_some() && !report.final_quotient_abelian_system {
        return Err(Error::InternalInvariantViolation(
            "bottom tower quotient is not an abelian group system".into(),
        ));
    }
    Ok(report)
}

/// For systems transitive of all orders (in the finite world, only the
/// one-point system): the face orbit fills the whole slice, slices match,
/// and every relation is full.
pub fn weakly_mixing_checks(sys: &FiniteSystem, d_max: usize, budget: usize) -> Result<CheckReport> {
    let n_max = 1usize << d_max;
    if !crate::system::is_transitive_of_all_orders(sys, n_max, budget)? {
        return Err(Error::NotApplicable(format!(
            "system is not transitive of all orders up to {n_max}"
        )));
    }
    let mut report = CheckReport::new("weakly_mixing", true);
    let n = sys.points();
    for d in 1..=d_max {
        let verts = 1usize << d;
        for x in 0..n as Point {
            let y = y_space(sys, d, x, budget)?;
            report.states_visited += y.states_visited();
            let expected = (n as u64).pow(verts as u32 - 1);
            if y.len() as u64 != expected {
                report.fail(format!("|Y_{x}^[{d}]| = {} but the full slice has {expected}", y.len()));
                return Ok(report);
            }
            let cubes = dynamical_cubes(sys, d, budget)?;
            let slice = crate::cubespace::cubes_at(&cubes, x)?;
            if slice.len() != y.len() {
                report.fail(format!("C_{x}^[{d}] and Y_{x}^[{d}] differ"));
                return Ok(report);
            }
        }
        let comp = nrp_relation(sys, d, budget)?;
        report.states_visited += comp.states_visited;
        if !comp.relation.is_full() {
            report.fail(format!("NRP^[{d}] is not full"));
            return Ok(report);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    const B: usize = 1 << 24;

    #[test]
    fn one_point_system() {
        let sys = zoo::rotation(1).unwrap();
        let comp = nrp_relation(&sys, 1, B).unwrap();
        assert_eq!(comp.relation.sorted_pairs(), vec![(0, 0)]);
    }

    #[test]
    fn rotations_are_order_one() {
        for n in 2..=6 {
            let sys = zoo::rotation(n).unwrap();
            for d in 1..=2 {
                let comp = nrp_relation(&sys, d, B).unwrap();
                assert!(comp.relation.is_diagonal(), "rotation({n}) d={d}");
            }
        }
    }

    #[test]
    fn nrp_matches_full_cube_route() {
        // Z/2 acting on Z/4 by +2: not minimal, two orbits
        let z2 = std::sync::Arc::new(zoo::cyclic_group(2).unwrap());
        let mut action = vec![0u16; 8];
        for x in 0..4u16 {
            action[x as usize] = x;
            action[4 + x as usize] = (x + 2) % 4;
        }
        let non_minimal = crate::system::FiniteSystem::new(z2, 4, action).unwrap();
        assert!(!non_minimal.is_minimal());

        for sys in [
            zoo::rotation(5).unwrap(),
            zoo::heisenberg_mod(2).unwrap(),
            zoo::regular(&zoo::symmetric_group(3).unwrap().0).unwrap(),
            non_minimal,
        ] {
            for d in 1..=2 {
                let fast = nrp_relation(&sys, d, B).unwrap();
                let slow = nrp_relation_via_full_cubes(&sys, d, B).unwrap();
                assert_eq!(fast.relation, slow.relation, "{} d={d}", sys.name());
                assert_eq!(fast.minimal, sys.is_minimal());
            }
        }
    }

    #[test]
    fn nrp_matches_canonical_relation() {
        for sys in [
            zoo::rotation(4).unwrap(),
            zoo::heisenberg_mod(2).unwrap(),
            zoo::dihedral(3).unwrap(),
        ] {
            for d in 1..=2 {
                let report = check_canonical_vs_nrp(&sys, d, B).unwrap();
                assert!(report.passed(), "{} d={d}: {:?}", sys.name(), report.witnesses);
            }
        }
    }

    #[test]
    fn heisenberg_two_center_cosets() {
        let sys = zoo::heisenberg_mod(2).unwrap();
        let comp = nrp_relation(&sys, 1, B).unwrap();
        let classes = comp.relation.classes().unwrap();
        assert_eq!(classes.len(), 4);
        assert!(classes.iter().all(|c| c.len() == 2));
        // classes are the center cosets
        let center = sys.group().center();
        for class in &classes {
            let (a, b) = (class[0], class[1]);
            let diff = sys.group().mul(b, sys.group().inv(a));
            assert!(center.contains(diff));
        }
        let comp2 = nrp_relation(&sys, 2, B).unwrap();
        assert!(comp2.relation.is_diagonal());
    }

    #[test]
    fn s3_regular_nrp_is_derived_cosets() {
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        let sys = zoo::regular(&s3).unwrap();
        let comp = nrp_relation(&sys, 1, B).unwrap();
        let classes = comp.relation.classes().unwrap();
        assert_eq!(classes.len(), 2);
        assert!(classes.iter().all(|c| c.len() == 3));
        // never trivial at higher d either: S3 is not nilpotent
        let comp2 = nrp_relation(&sys, 2, B).unwrap();
        assert_eq!(comp2.relation, comp.relation);
    }

    #[test]
    fn equivalence_verification() {
        assert!(verify_equivalence(&Relation::diagonal(4), &zoo::rotation(4).unwrap()).passed());
        assert!(verify_equivalence(&Relation::full(4), &zoo::rotation(4).unwrap()).passed());
        for sys in [zoo::heisenberg_mod(2).unwrap(), zoo::dihedral(4).unwrap()] {
            for d in 1..=2 {
                let comp = nrp_relation(&sys, d, B).unwrap();
                let report = verify_equivalence(&comp.relation, &sys);
                assert!(report.passed(), "{} d={d}: {:?}", sys.name(), report.witnesses);
            }
        }
    }

    #[test]
    fn alt_corner_agreement() {
        for sys in [zoo::heisenberg_mod(2).unwrap(), zoo::rotation(5).unwrap()] {
            let report = verify_alt_corner(&sys, 1, B).unwrap();
            assert!(report.passed(), "{:?}", report.witnesses);
        }
    }

    #[test]
    fn rp_is_diagonal_in_finite_semantics() {
        for sys in [zoo::rotation(4).unwrap(), zoo::heisenberg_mod(2).unwrap()] {
            let rp = rp_relation(&sys, 1, B).unwrap();
            assert!(rp.relation.is_diagonal());
            assert!(check_rp_subset_nrp(&sys, 1, B).unwrap().passed());
        }
    }

    #[test]
    fn elementary_chain_small() {
        for sys in [
            zoo::heisenberg_mod(2).unwrap(),
            zoo::regular(&zoo::symmetric_group(3).unwrap().0).unwrap(),
        ] {
            let report = elementary_chain_check(&sys, 2, B).unwrap();
            assert!(report.passed(), "{}: {:?}", sys.name(), report.witnesses);
        }
    }

    #[test]
    fn quotient_collapses_relation() {
        let sys = zoo::heisenberg_mod(2).unwrap();
        let (quotient, _, _) = quotient_by_nrp(&sys, 1, B).unwrap();
        assert_eq!(quotient.points(), 4);
        let group = abelian_group_structure(&quotient).unwrap().unwrap();
        // Klein four group, not Z/4
        assert_eq!(group.element_orders(), vec![1, 2, 2, 2]);
    }

    #[test]
    fn maximal_factor_check() {
        let sys = zoo::heisenberg_mod(2).unwrap();
        // the canonical quotient itself is maximal
        let (_, pi, _) = quotient_by_nrp(&sys, 1, B).unwrap();
        let report = verify_maximal_factor(&sys, 1, &pi, B).unwrap();
        assert!(report.passed(), "{:?}", report.witnesses);
        // collapse to a point also factors through
        let (_, to_point) = quotient_system(&sys, &Relation::full(8)).unwrap();
        assert!(verify_maximal_factor(&sys, 1, &to_point, B).unwrap().passed());
        // a target with a nontrivial relation is rejected
        let id = FactorMap::identity(&sys);
        assert!(matches!(
            verify_maximal_factor(&sys, 1, &id, B),
            Err(Error::TargetNotOrderD { d: 1 })
        ));
    }

    #[test]
    fn lifting_through_center_quotient() {
        let sys = zoo::heisenberg_mod(2).unwrap();
        let (_, pi, _) = quotient_by_nrp(&sys, 1, B).unwrap();
        for d in 1..=2 {
            let report = verify_lifting(&pi, d, B).unwrap();
            assert!(report.passed(), "d={d}: {:?}", report.witnesses);
        }
        // identity map lifts trivially
        let id = FactorMap::identity(&sys);
        assert!(verify_lifting(&id, 1, B).unwrap().passed());
        // collapse to a point
        let (_, to_point) = quotient_system(&sys, &Relation::full(8)).unwrap();
        assert!(verify_lifting(&to_point, 1, B).unwrap().passed());
    }

    #[test]
    fn orders() {
        let rot = zoo::rotation(5).unwrap();
        let report = order_of_system(&rot, 3, B).unwrap();
        assert_eq!(report.order, Some(1));
        assert_eq!(report.nilpotency_class, Some(1));

        let h2 = zoo::heisenberg_mod(2).unwrap();
        let report = order_of_system(&h2, 3, B).unwrap();
        assert_eq!(report.order, Some(2));
        assert_eq!(report.class_counts, vec![4, 8]);
        assert_eq!(report.effective_group_order, Some(8));
        assert_eq!(report.nilpotency_class, Some(2));

        // S3 is not nilpotent: no order at any depth; its dimension-4 face
        // orbit legitimately overflows the default budget
        let (s3, _) = zoo::symmetric_group(3).unwrap();
        let reg = zoo::regular(&s3).unwrap();
        let report = order_of_system(&reg, 2, B).unwrap();
        assert_eq!(report.order, None);
        assert_eq!(report.class_counts, vec![2, 2]);
        assert!(matches!(
            order_of_system(&reg, 3, B),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn a5_order_never_found() {
        // perfect group: one class at every order; computed directly at d=1
        let sys = zoo::a5_regular().unwrap();
        let comp = nrp_relation(&sys, 1, 1 << 25).unwrap();
        assert!(comp.relation.is_full());
    }

    #[test]
    fn tower_heisenberg_2() {
        let sys = zoo::heisenberg_mod(2).unwrap();
        let tower = factor_tower(&sys, 3, B).unwrap();
        assert_eq!(tower.order, Some(2));
        assert_eq!(tower.sizes, vec![8, 4, 1]);
        assert_eq!(tower.levels.len(), 2);
        let k2 = &tower.levels[0];
        assert_eq!(k2.structure_group_order, 2);
        assert!(k2.structure_group_abelian && k2.acts_freely);
        let k1 = &tower.levels[1];
        assert_eq!(k1.structure_group_order, 4);
        assert_eq!(k1.element_orders, vec![1, 2, 2, 2]);
        assert!(tower.final_quotient_abelian_system);
    }

    #[test]
    fn tower_abelian_single_level() {
        let sys = zoo::rotation(6).unwrap();
        let tower = factor_tower(&sys, 2, B).unwrap();
        assert_eq!(tower.order, Some(1));
        assert_eq!(tower.levels.len(), 1);
        assert_eq!(tower.levels[0].structure_group_order, 6);
        assert_eq!(tower.levels[0].element_orders, vec![1, 2, 3, 3, 6, 6]);
    }

    #[test]
    fn weakly_mixing_gate() {
        let one = zoo::rotation(1).unwrap();
        let report = weakly_mixing_checks(&one, 2, B).unwrap();
        assert!(report.passed());
        let rot = zoo::rotation(4).unwrap();
        assert!(matches!(
            weakly_mixing_checks(&rot, 2, B),
            Err(Error::NotApplicable(_))
        ));
    }
}
