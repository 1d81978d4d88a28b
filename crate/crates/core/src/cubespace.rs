//! Dynamical cubespaces: the exact cube sets C^[d](X) as orbits of constant
//! configurations under the Host–Kra cube group, the face-orbit slices
//! Y_x^[d], and the cubespace axiom checks (cube invariance, ergodicity,
//! corner completion, uniqueness, glueing, extension).
//!
//! In the finite setting orbit closures are orbits, so every set here is
//! computed exactly. Two facts keep the slices cheap: any cube factors as a
//! face-group element times a diagonal, so a cube with bottom vertex x is a
//! face-orbit point of x^[d]; and for minimal systems one base point's
//! orbit already yields the whole cube set.

use std::collections::{HashMap, HashSet};

use crate::cube::{Configuration, CubeMorphism};
use crate::cube_group::{face_generators, hk_generators, CubeGroupKind, TupleElement};
use crate::error::{Error, Result};
use crate::orbit::{close_under, ClosureResult, KeySet, Packing, SlotMap};
use crate::report::CheckReport;
use crate::system::{FiniteSystem, Point};

/// A deduplicated set of d-configurations over one system's points.
pub struct CubeSet {
    d: usize,
    points: usize,
    packing: Packing,
    set: KeySet,
    provenance: String,
    states_visited: u64,
}

impl std::fmt::Debug for CubeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CubeSet")
            .field("d", &self.d)
            .field("len", &self.set.len())
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl CubeSet {
    fn from_closure(d: usize, points: usize, provenance: String, res: ClosureResult) -> CubeSet {
        CubeSet {
            d,
            points,
            packing: res.packing,
            set: res.set,
            provenance,
            states_visited: res.visited,
        }
    }

    /// Builds a cube set from explicit configurations.
    pub fn from_configs<'a>(
        d: usize,
        points: usize,
        configs: impl IntoIterator<Item = &'a Configuration>,
        provenance: impl Into<String>,
    ) -> Result<CubeSet> {
        let packing = Packing::choose(1 << d, points)?;
        let mut set = KeySet::empty_for(packing);
        for c in configs {
            if c.dim() != d {
                return Err(Error::DimensionMismatch {
                    left: c.dim(),
                    right: d,
                });
            }
            set.insert(packing, c.values());
        }
        Ok(CubeSet {
            d,
            points,
            packing,
            set,
            provenance: provenance.into(),
            states_visited: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.len() == 0
    }

    pub fn states_visited(&self) -> u64 {
        self.states_visited
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn contains(&self, c: &Configuration) -> bool {
        c.dim() == self.d && self.set.contains(self.packing, c.values())
    }

    pub(crate) fn contains_vals(&self, vals: &[Point]) -> bool {
        self.set.contains(self.packing, vals)
    }

    pub(crate) fn for_each_vals(&self, f: impl FnMut(&[Point])) {
        self.set.for_each(self.packing, f)
    }

    /// Configurations in sorted packed order.
    pub fn configs_sorted(&self) -> Vec<Configuration> {
        self.set
            .sorted_states(self.packing)
            .into_iter()
            .map(|vals| Configuration::new(self.d, vals).expect("stored configs are well-formed"))
            .collect()
    }

    /// One JSON array per configuration, vertex values bits-ascending,
    /// sorted lines.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for c in self.configs_sorted() {
            out.push_str(&serde_json::to_string(c.values()).expect("arrays serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_json_lines(d: usize, points: usize, text: &str) -> Result<CubeSet> {
        let mut configs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<Point> = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                col: 1,
                msg: e.to_string(),
            })?;
            configs.push(Configuration::new(d, vals)?);
        }
        CubeSet::from_configs(d, points, &configs, "parsed")
    }
}

/// Per-vertex point substitution tables for a list of tuple generators.
pub(crate) fn config_slot_maps(sys: &FiniteSystem, gens: &[TupleElement]) -> Vec<SlotMap> {
    let points = sys.points();
    gens.iter()
        .map(|g| {
            let verts = 1usize << g.dim();
            let mut table = vec![0u16; verts * points];
            for v in 0..verts {
                let row = sys.action_row(g.at_bits(v));
                table[v * points..(v + 1) * points].copy_from_slice(row);
            }
            SlotMap {
                table,
                values: points,
            }
        })
        .collect()
}

fn constant_states(points: &[Point], d: usize) -> Vec<Vec<u16>> {
    points.iter().map(|&x| vec![x; 1 << d]).collect()
}

/// The cube set C^[d](X): orbit of the constant configurations under the
/// Host–Kra cube group acting vertexwise. Seeds every base point, which is
/// the general definition; for minimal systems it coincides with the single
/// orbit of any one constant.
pub fn dynamical_cubes(sys: &FiniteSystem, d: usize, budget: usize) -> Result<CubeSet> {
    let all: Vec<Point> = (0..sys.points() as Point).collect();
    dynamical_cubes_from_base(sys, d, &all, budget)
}

/// Orbit of the constants over the given base points only.
pub fn dynamical_cubes_from_base(
    sys: &FiniteSystem,
    d: usize,
    bases: &[Point],
    budget: usize,
) -> Result<CubeSet> {
    let packing = Packing::choose(1 << d, sys.points())?;
    let starts = constant_states(bases, d);
    let gens = if d == 0 {
        Vec::new()
    } else {
        config_slot_maps(sys, &hk_generators(sys.group(), d)?)
    };
    let res = close_under(
        packing,
        &starts,
        &gens,
        &[],
        budget,
        &format!("C^[{d}] of {}", sys.name()),
    )?;
    Ok(CubeSet::from_closure(
        d,
        sys.points(),
        format!("hk-orbit d={d}"),
        res,
    ))
}

/// Orbit of an arbitrary start configuration under the chosen cube group.
pub fn orbit_of_config(
    sys: &FiniteSystem,
    start: &Configuration,
    kind: CubeGroupKind,
    budget: usize,
) -> Result<CubeSet> {
    let d = start.dim();
    let packing = Packing::choose(1 << d, sys.points())?;
    let gens = match kind {
        CubeGroupKind::Face => face_generators(sys.group(), d)?,
        CubeGroupKind::HostKra => hk_generators(sys.group(), d)?,
    };
    let res = close_under(
        packing,
        &[start.values().to_vec()],
        &config_slot_maps(sys, &gens),
        &[],
        budget,
        "configuration orbit",
    )?;
    Ok(CubeSet::from_closure(
        d,
        sys.points(),
        format!("{kind:?}-orbit"),
        res,
    ))
}

/// Y_x^[d]: the face-group orbit of the constant configuration at x.
pub fn y_space(sys: &FiniteSystem, d: usize, x: Point, budget: usize) -> Result<CubeSet> {
    if d == 0 {
        return CubeSet::from_configs(0, sys.points(), &[Configuration::constant(0, x)], "y-space d=0");
    }
    orbit_of_config(sys, &Configuration::constant(d, x), CubeGroupKind::Face, budget)
        .map(|mut c| {
            c.provenance = format!("face-orbit of {}^[{d}]", x);
            c
        })
}

/// C_x^[d]: the slice of a computed cube set at bottom vertex x.
pub fn cubes_at(cubes: &CubeSet, x: Point) -> Result<CubeSet> {
    let mut slice = Vec::new();
    cubes.for_each_vals(|vals| {
        if vals[0] == x {
            slice.push(Configuration::new(cubes.d, vals.to_vec()).unwrap());
        }
    });
    CubeSet::from_configs(cubes.d, cubes.points, &slice, format!("slice at {x}"))
}

/// Slow reference route for cross-checks: iterate S := S ∪ g·S over all
/// generator images to a fixpoint, with no frontier bookkeeping.
pub fn fixpoint_cubes(sys: &FiniteSystem, d: usize, budget: usize) -> Result<CubeSet> {
    let gens = if d == 0 {
        Vec::new()
    } else {
        hk_generators(sys.group(), d)?
    };
    let mut set: HashSet<Vec<Point>> = (0..sys.points() as Point)
        .map(|x| vec![x; 1 << d])
        .collect();
    loop {
        let mut grew = false;
        let snapshot: Vec<Vec<Point>> = set.iter().cloned().collect();
        for cfg in &snapshot {
            for g in &gens {
                let img: Vec<Point> = cfg
                    .iter()
                    .enumerate()
                    .map(|(v, &x)| sys.act(g.at_bits(v), x))
                    .collect();
                if set.insert(img) {
                    grew = true;
                    if set.len() > budget {
                        return Err(Error::budget("fixpoint cube closure", set.len() as u64, budget as u64));
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }
    let configs: Vec<Configuration> = set
        .into_iter()
        .map(|vals| Configuration::new(d, vals))
        .collect::<Result<_>>()?;
    CubeSet::from_configs(d, sys.points(), &configs, "fixpoint closure")
}

/// Sampling policy for the larger sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Force the full sweep.
    Exhaustive,
    /// Deterministic sample of the stated size.
    Sample { n: usize, seed: u64 },
    /// Exhaustive below the per-check threshold, sampled above.
    Auto,
}

const INVARIANCE_EXHAUSTIVE_LIMIT: u64 = 1 << 22;
const CORNER_EXHAUSTIVE_LIMIT: u64 = 1 << 22;
const DEFAULT_SAMPLE: usize = 1024;

/// C^[1] = X × X; for minimal systems this is ergodicity of the cubespace.
pub fn check_ergodic(sys: &FiniteSystem, budget: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new("ergodic", true);
    let c1 = dynamical_cubes(sys, 1, budget)?;
    report.states_visited = c1.states_visited();
    let n = sys.points();
    if c1.len() != n * n {
        report.fail(format!("|C^[1]| = {} but |X|^2 = {}", c1.len(), n * n));
    }
    Ok(report)
}

/// Every pullback of a cube along a morphism of discrete cubes lands in the
/// matching lower-dimensional cube set.
#[allow(clippy::needless_range_loop)] // r indexes both cube sets and dimensions
pub fn check_cube_invariance(
    sys: &FiniteSystem,
    cubes: &CubeSet,
    r_max: usize,
    sampling: Sampling,
    budget: usize,
) -> Result<CheckReport> {
    let d = cubes.dim();
    let mut lower: Vec<CubeSet> = Vec::new();
    for r in 0..=r_max.min(d.max(1)) {
        lower.push(dynamical_cubes(sys, r, budget)?);
    }

    let mut morphism_count = 0u64;
    for r in 1..=r_max.min(d.max(1)) {
        morphism_count += (2 + 2 * r as u64).pow(d as u32);
    }
    let work = morphism_count.saturating_mul(cubes.len() as u64);
    let exhaustive = match sampling {
        Sampling::Exhaustive => true,
        Sampling::Sample { .. } => false,
        Sampling::Auto => work <= INVARIANCE_EXHAUSTIVE_LIMIT,
    };

    let mut report = CheckReport::new("cube_invariance", exhaustive);
    let configs = if exhaustive {
        cubes.configs_sorted()
    } else {
        let (n, seed) = match sampling {
            Sampling::Sample { n, seed } => (n, seed),
            _ => (DEFAULT_SAMPLE, 0),
        };
        report.note(format!("sampled {n} configurations"));
        sample_configs(cubes, n, seed)
    };

    for r in 1..=r_max.min(d.max(1)) {
        for f in CubeMorphism::enumerate(r, d) {
            for c in &configs {
                report.states_visited += 1;
                let pulled = c.apply_morphism(&f)?;
                if !lower[r].contains(&pulled) {
                    report.fail(format!(
                        "pullback of {:?} along a {r}->{d} morphism leaves C^[{r}]",
                        c.values()
                    ));
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}

fn sample_configs(cubes: &CubeSet, n: usize, seed: u64) -> Vec<Configuration> {
    cubes
        .set
        .sample_states(cubes.packing, n, seed)
        .into_iter()
        .map(|vals| Configuration::new(cubes.d, vals).expect("stored configs are well-formed"))
        .collect()
}

/// Corner completion: every map on {0,1}^d minus the top vertex whose d
/// lower-hyperface restrictions are cubes extends to a full cube. The corner
/// space is swept exhaustively while |X|^(2^d - 1) stays within the
/// threshold; above it the check falls back to puncturing sampled cubes and
/// the report is marked non-exhaustive.
pub fn check_completion(
    sys: &FiniteSystem,
    d: usize,
    sampling: Sampling,
    budget: usize,
) -> Result<CheckReport> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let n = sys.points();
    let lower = dynamical_cubes(sys, d - 1, budget)?;
    let full = dynamical_cubes(sys, d, budget)?;

    // index C^[d] by the non-top vertices
    let verts = 1usize << d;
    let punct_packing = Packing::choose(verts - 1, n)?;
    let mut punctured = KeySet::empty_for(punct_packing);
    full.for_each_vals(|vals| {
        punctured.insert(punct_packing, &vals[..verts - 1]);
    });

    let corner_space = (n as u64).checked_pow(verts as u32 - 1);
    let exhaustive = match sampling {
        Sampling::Exhaustive => true,
        Sampling::Sample { .. } => false,
        Sampling::Auto => corner_space.is_some_and(|s| s <= CORNER_EXHAUSTIVE_LIMIT),
    };

    let mut report = CheckReport::new(format!("completion d={d}"), exhaustive);
    report.states_visited = lower.states_visited() + full.states_visited();

    if !exhaustive {
        // punctured actual cubes: valid corners by construction, and their
        // own cube completes them; evidence only
        let (count, seed) = match sampling {
            Sampling::Sample { n, seed } => (n, seed),
            _ => (DEFAULT_SAMPLE, 0),
        };
        report.note("corner space above threshold: punctured-cube sampling only".to_string());
        for c in sample_configs(&full, count, seed) {
            report.states_visited += 1;
            if !punctured.contains(punct_packing, &c.values()[..verts - 1]) {
                report.fail("punctured cube lost its own completion".to_string());
                return Ok(report);
            }
        }
        return Ok(report);
    }

    let space = corner_space.ok_or_else(|| {
        Error::budget(format!("corner enumeration d={d}"), u64::MAX, budget as u64)
    })?;
    if space > budget as u64 {
        return Err(Error::budget(format!("corner enumeration d={d}"), space, budget as u64));
    }

    // the d lower hyperfaces, as vertex lists of the punctured cube
    let faces: Vec<Vec<usize>> = (0..d)
        .map(|i| (0..verts).filter(|bits| (bits >> i) & 1 == 0).collect())
        .collect();

    let mut corner = vec![0 as Point; verts - 1];
    let mut face_buf = vec![0 as Point; 1 << (d - 1)];
    'outer: loop {
        report.states_visited += 1;
        // corner validity: each lower-hyperface restriction is a cube
        let mut valid = true;
        for face in &faces {
            for (k, &bits) in face.iter().enumerate() {
                face_buf[k] = corner[bits];
            }
            if !lower.contains_vals(&face_buf) {
                valid = false;
                break;
            }
        }
        if valid && !punctured.contains(punct_packing, &corner) {
            report.fail(format!("corner {corner:?} admits no completion"));
            return Ok(report);
        }
        // odometer
        for slot in corner.iter_mut() {
            *slot += 1;
            if (*slot as usize) < n {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    Ok(report)
}

/// Completion for every dimension up to d_max.
pub fn check_fibrant(
    sys: &FiniteSystem,
    d_max: usize,
    sampling: Sampling,
    budget: usize,
) -> Result<Vec<CheckReport>> {
    (1..=d_max)
        .map(|d| check_completion(sys, d, sampling, budget))
        .collect()
}

/// True iff no two distinct cubes agree on every vertex except the top.
pub fn check_uniqueness(cubes: &CubeSet) -> bool {
    uniqueness_report(cubes).passed()
}

pub fn uniqueness_report(cubes: &CubeSet) -> CheckReport {
    let mut report = CheckReport::new(format!("uniqueness d={}", cubes.dim()), true);
    let verts = 1usize << cubes.dim();
    let mut tops: HashMap<Vec<Point>, Point> = HashMap::new();
    let mut witness = None;
    cubes.for_each_vals(|vals| {
        let key = vals[..verts - 1].to_vec();
        let top = vals[verts - 1];
        match tops.get(&key) {
            Some(&other) if other != top => {
                if witness.is_none() {
                    witness = Some(format!(
                        "configs agreeing off the top vertex carry tops {other} and {top}"
                    ));
                }
            }
            _ => {
                tops.insert(key, top);
            }
        }
    });
    report.states_visited = cubes.len() as u64;
    if let Some(w) = witness {
        report.fail(w);
    }
    report
}

/// Glueing: cubes (c1, c2) and (c2, c3) concatenate to a cube (c1, c3).
/// Configurations are bucketed by their floor half to avoid the quadratic
/// pair scan.
pub fn check_glueing(cubes: &CubeSet, budget: usize) -> Result<CheckReport> {
    let d = cubes.dim();
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut report = CheckReport::new(format!("glueing d={d}"), true);
    let half = 1usize << (d - 1);
    let mut by_floor: HashMap<Vec<Point>, Vec<Vec<Point>>> = HashMap::new();
    cubes.for_each_vals(|vals| {
        by_floor
            .entry(vals[..half].to_vec())
            .or_default()
            .push(vals[half..].to_vec());
    });
    // the index reuses the cube set already in memory; the scan is linear
    // in glueable pairs, so it gets a step bound above the state budget
    let step_budget = (budget as u64).saturating_mul(16);
    let mut glued = vec![0 as Point; 2 * half];
    for (floor, ceilings) in &by_floor {
        glued[..half].copy_from_slice(floor);
        for c2 in ceilings {
            let Some(thirds) = by_floor.get(c2) else { continue };
            for c3 in thirds {
                report.states_visited += 1;
                if report.states_visited > step_budget {
                    return Err(Error::budget("glueing scan", report.states_visited, step_budget));
                }
                glued[half..].copy_from_slice(c3);
                if !cubes.contains_vals(&glued) {
                    report.fail(format!(
                        "({floor:?},{c2:?}) and ({c2:?},{c3:?}) glue outside the cube set"
                    ));
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}

/// Downward closure of a vertex set under the coordinate order.
pub fn is_downward_closed(d: usize, verts: &[usize]) -> bool {
    let set: HashSet<usize> = verts.iter().copied().collect();
    verts.iter().all(|&v| {
        v < 1 << d && {
            // removing any single 1-bit stays inside
            (0..d).all(|i| (v >> i) & 1 == 0 || set.contains(&(v & !(1 << i))))
        }
    })
}

/// Hom(V, X) for a downward-closed vertex set V: assignments whose
/// restriction to each full subcube below a vertex of V is a cube. Values
/// are returned aligned with V sorted ascending.
#[allow(clippy::too_many_arguments)] // inner backtracking helper
pub fn hom_space(
    sys: &FiniteSystem,
    d: usize,
    verts: &[usize],
    budget: usize,
) -> Result<Vec<Vec<Point>>> {
    if !is_downward_closed(d, verts) {
        return Err(Error::InvalidVertexSet(format!(
            "{verts:?} is not downward closed in dimension {d}"
        )));
    }
    let mut order: Vec<usize> = verts.to_vec();
    order.sort_unstable();
    order.dedup();
    // cube sets per subcube dimension
    let max_pop = order
        .iter()
        .map(|v| v.count_ones() as usize)
        .max()
        .unwrap_or(0);
    let mut cube_sets = Vec::new();
    for k in 0..=max_pop {
        cube_sets.push(dynamical_cubes(sys, k, budget)?);
    }
    // enumeration order: by popcount then value, so all subsets come first
    let mut enum_order = order.clone();
    enum_order.sort_by_key(|&v| (v.count_ones(), v));
    let slot_of: HashMap<usize, usize> = enum_order.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut out: Vec<Vec<Point>> = Vec::new();
    let mut assignment = vec![0 as Point; enum_order.len()];
    let mut nodes = 0u64;

    fn subcube_ok(
        v: usize,
        assignment: &[Point],
        slot_of: &HashMap<usize, usize>,
        cube_sets: &[CubeSet],
    ) -> bool {
        let k = v.count_ones() as usize;
        // gather values over subsets of v in bits-ascending order of the subcube
        let free: Vec<usize> = (0..usize::BITS as usize)
            .filter(|&i| (v >> i) & 1 == 1)
            .collect();
        let mut vals = Vec::with_capacity(1 << k);
        for small in 0..1usize << k {
            let mut bits = 0usize;
            for (j, &pos) in free.iter().enumerate() {
                bits |= ((small >> j) & 1) << pos;
            }
            vals.push(assignment[slot_of[&bits]]);
        }
        cube_sets[k].contains_vals(&vals)
    }

    fn rec(
        sys: &FiniteSystem,
        enum_order: &[usize],
        slot_of: &HashMap<usize, usize>,
        cube_sets: &[CubeSet],
        assignment: &mut Vec<Point>,
        pos: usize,
        nodes: &mut u64,
        budget: usize,
        out: &mut Vec<Vec<Point>>,
    ) -> Result<()> {
        if pos == enum_order.len() {
            out.push(assignment.clone());
            return Ok(());
        }
        for x in 0..sys.points() as Point {
            *nodes += 1;
            if *nodes > budget as u64 {
                return Err(Error::budget("hom space enumeration", *nodes, budget as u64));
            }
            assignment[pos] = x;
            if subcube_ok(enum_order[pos], assignment, slot_of, cube_sets) {
                rec(sys, enum_order, slot_of, cube_sets, assignment, pos + 1, nodes, budget, out)?;
            }
        }
        Ok(())
    }

    rec(
        sys,
        &enum_order,
        &slot_of,
        &cube_sets,
        &mut assignment,
        0,
        &mut nodes,
        budget,
        &mut out,
    )?;

    // re-align from enumeration order to sorted order
    let realign: Vec<usize> = order.iter().map(|v| slot_of[v]).collect();
    Ok(out
        .into_iter()
        .map(|a| realign.iter().map(|&i| a[i]).collect())
        .collect())
}

/// Every element of Hom(V, X) extends to a full cube.
pub fn check_extension_property(
    sys: &FiniteSystem,
    d: usize,
    verts: &[usize],
    budget: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("extension V={verts:?}"), true);
    let homs = hom_space(sys, d, verts, budget)?;
    let mut order: Vec<usize> = verts.to_vec();
    order.sort_unstable();
    order.dedup();
    let full = dynamical_cubes(sys, d, budget)?;
    let mut restrictions: HashSet<Vec<Point>> = HashSet::new();
    full.for_each_vals(|vals| {
        restrictions.insert(order.iter().map(|&v| vals[v]).collect());
    });
    report.states_visited = homs.len() as u64 + full.len() as u64;
    for alpha in &homs {
        if !restrictions.contains(alpha) {
            report.fail(format!("{alpha:?} does not extend to a cube"));
            return Ok(report);
        }
    }
    report.note(format!("{} partial configurations checked", homs.len()));
    Ok(report)
}

/// All downward-closed subsets of {0,1}^d containing the bottom vertex;
/// small d only.
pub fn downward_closed_sets(d: usize) -> Vec<Vec<usize>> {
    let verts = 1usize << d;
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << verts) {
        let set: Vec<usize> = (0..verts).filter(|&v| (mask >> v) & 1 == 1).collect();
        if is_downward_closed(d, &set) {
            out.push(set);
        }
    }
    out
}
