//! Named groups and example systems, plus the exact rational-rotation
//! orientation demonstration.
//!
//! Every builder output is transitive by construction and asserts the
//! system axioms at build time.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Elem, FiniteGroup};
use crate::system::{FiniteSystem, Point};

/// Z/n with addition.
pub fn cyclic_group(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(Error::InvalidParameter("cyclic group needs n >= 1".into()));
    }
    let mut mult = vec![0 as Elem; n * n];
    for a in 0..n {
        for b in 0..n {
            mult[a * n + b] = ((a + b) % n) as Elem;
        }
    }
    let mut g = FiniteGroup::from_table_unchecked(n, mult)?;
    g.set_labels((0..n).map(|i| i.to_string()).collect())?;
    Ok(g)
}

/// Dihedral group of order 2n: rotations r^i and reflections r^i s, with
/// s r s = r^{-1}. Element i + n·j encodes r^i s^j.
pub fn dihedral_group(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(Error::InvalidParameter("dihedral group needs n >= 1".into()));
    }
    let order = 2 * n;
    let mut mult = vec![0 as Elem; order * order];
    for i1 in 0..n {
        for j1 in 0..2 {
            for i2 in 0..n {
                for j2 in 0..2 {
                    let a = i1 + n * j1;
                    let b = i2 + n * j2;
                    let i = if j1 == 0 { (i1 + i2) % n } else { (i1 + n - i2 % n) % n };
                    let j = (j1 + j2) % 2;
                    mult[a * order + b] = (i + n * j) as Elem;
                }
            }
        }
    }
    let mut g = FiniteGroup::from_mult_table(
        &mult
            .chunks(order)
            .map(|row| row.iter().map(|&x| x as usize).collect())
            .collect::<Vec<Vec<usize>>>(),
    )?;
    let labels = (0..order)
        .map(|e| {
            let (i, j) = (e % n, e / n);
            match (i, j) {
                (0, 0) => "e".to_string(),
                (i, 0) => format!("r{i}"),
                (0, 1) => "s".to_string(),
                (i, 1) => format!("r{i}s"),
                _ => unreachable!(),
            }
        })
        .collect();
    g.set_labels(labels)?;
    Ok(g)
}

/// Unitriangular 3x3 matrices over Z/p: triples (a,b,c) with
/// (a,b,c)·(a',b',c') = (a+a', b+b', c+c'+a·b'). Nilpotency class 2 for
/// every prime p; p = 2 gives the dihedral group of order 8.
pub fn heisenberg_group(p: usize) -> Result<FiniteGroup> {
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("{p} is not prime")));
    }
    let order = p * p * p;
    let idx = |a: usize, b: usize, c: usize| a + p * b + p * p * c;
    let mut mult = vec![0 as Elem; order * order];
    for a in 0..p {
        for b in 0..p {
            for c in 0..p {
                for a2 in 0..p {
                    for b2 in 0..p {
                        for c2 in 0..p {
                            let lhs = idx(a, b, c);
                            let rhs = idx(a2, b2, c2);
                            let prod = idx((a + a2) % p, (b + b2) % p, (c + c2 + a * b2) % p);
                            mult[lhs * order + rhs] = prod as Elem;
                        }
                    }
                }
            }
        }
    }
    let mut g = FiniteGroup::from_table_unchecked(order, mult)?;
    let labels = (0..order)
        .map(|e| {
            let (a, b, c) = (e % p, (e / p) % p, e / (p * p));
            format!("({a},{b},{c})")
        })
        .collect();
    g.set_labels(labels)?;
    Ok(g)
}

fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Symmetric group on n letters via permutation closure; returns the group
/// and the realized permutation per element.
pub fn symmetric_group(n: usize) -> Result<(FiniteGroup, Vec<Vec<u16>>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one letter".into()));
    }
    let mut gens: Vec<Vec<usize>> = Vec::new();
    if n >= 2 {
        let mut t: Vec<usize> = (0..n).collect();
        t.swap(0, 1);
        gens.push(t);
        let cycle: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        gens.push(cycle);
    }
    FiniteGroup::from_permutations(n, &gens)
}

/// Alternating group on 5 letters, generated by (1 2 3 4 5) and (1 2 3).
pub fn alternating_group_5() -> Result<(FiniteGroup, Vec<Vec<u16>>)> {
    let five_cycle: Vec<usize> = vec![1, 2, 3, 4, 0];
    let three_cycle: Vec<usize> = vec![1, 2, 0, 3, 4];
    let (g, perms) = FiniteGroup::from_permutations(5, &[five_cycle, three_cycle])?;
    if g.order() != 60 {
        return Err(Error::InternalInvariantViolation(format!(
            "A5 closure produced order {}",
            g.order()
        )));
    }
    Ok((g, perms))
}

fn assert_minimal(sys: FiniteSystem) -> Result<FiniteSystem> {
    if !sys.is_minimal() {
        return Err(Error::InternalInvariantViolation(format!(
            "builder produced a non-minimal system {}",
            sys.name()
        )));
    }
    Ok(sys)
}

/// G acting on itself by left translation.
pub fn regular(group: &FiniteGroup) -> Result<FiniteSystem> {
    let n = group.order();
    let mut action = vec![0 as Point; n * n];
    for g in 0..n as Elem {
        for x in 0..n as Elem {
            action[g as usize * n + x as usize] = group.mul(g, x);
        }
    }
    let labels = (0..n as Elem).map(|x| group.label(x)).collect();
    let sys = FiniteSystem::new(Arc::new(group.clone()), n, action)?
        .with_name("regular")
        .with_point_labels(labels)?;
    assert_minimal(sys)
}

/// Rotation on Z/n: the regular system of the cyclic group.
pub fn rotation(n: usize) -> Result<FiniteSystem> {
    let g = cyclic_group(n)?;
    Ok(regular(&g)?.with_name(format!("rotation:{n}")))
}

/// The order-p^3 nilsystem: the Heisenberg group mod p acting on itself.
pub fn heisenberg_mod(p: usize) -> Result<FiniteSystem> {
    let g = heisenberg_group(p)?;
    Ok(regular(&g)?.with_name(format!("heisenberg:{p}")))
}

/// A5 acting on itself by left translation.
pub fn a5_regular() -> Result<FiniteSystem> {
    let (g, _) = alternating_group_5()?;
    Ok(regular(&g)?.with_name("a5"))
}

/// Dihedral group of order 2n acting on itself.
pub fn dihedral(n: usize) -> Result<FiniteSystem> {
    let g = dihedral_group(n)?;
    Ok(regular(&g)?.with_name(format!("dihedral:{n}")))
}

/// Left-translation action on the cosets of the subgroup generated by `h_gens`.
pub fn coset(group: &FiniteGroup, h_gens: &[Elem]) -> Result<FiniteSystem> {
    let h = group.generate_subgroup(h_gens)?;
    let n = group.order();
    // left cosets gH, labelled by smallest member
    let mut rep_of = vec![Elem::MAX; n];
    let mut reps: Vec<Elem> = Vec::new();
    for g in 0..n as Elem {
        if rep_of[g as usize] != Elem::MAX {
            continue;
        }
        let mut members: Vec<Elem> = h.members().iter().map(|&x| group.mul(g, x)).collect();
        members.sort_unstable();
        for &m in &members {
            rep_of[m as usize] = members[0];
        }
        reps.push(members[0]);
    }
    reps.sort_unstable();
    let coset_of = |g: Elem| reps.binary_search(&rep_of[g as usize]).unwrap() as Point;
    let k = reps.len();
    let mut action = vec![0 as Point; n * k];
    for g in 0..n as Elem {
        for (i, &r) in reps.iter().enumerate() {
            action[g as usize * k + i] = coset_of(group.mul(g, r));
        }
    }
    let labels = reps.iter().map(|&r| format!("{}H", group.label(r))).collect();
    let sys = FiniteSystem::new(Arc::new(group.clone()), k, action)?
        .with_name("coset")
        .with_point_labels(labels)?;
    assert_minimal(sys)
}

/// A permutation group acting on its letters.
pub fn permutation_action(group: Arc<FiniteGroup>, perms: &[Vec<u16>]) -> Result<FiniteSystem> {
    let n = group.order();
    if perms.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} permutations for group order {n}",
            perms.len()
        )));
    }
    let letters = perms[0].len();
    let mut action = vec![0 as Point; n * letters];
    for g in 0..n {
        for x in 0..letters {
            action[g * letters + x] = perms[g][x];
        }
    }
    let sys = FiniteSystem::new(group, letters, action)?.with_name("letters");
    assert_minimal(sys)
}

/// Product of systems: the direct product group acting componentwise.
pub fn product_of(systems: &[FiniteSystem]) -> Result<FiniteSystem> {
    let Some((first, rest)) = systems.split_first() else {
        return Err(Error::InvalidParameter("empty product".into()));
    };
    let mut acc = first.clone();
    for sys in rest {
        let group = acc.group().direct_product(sys.group())?;
        let (n1, n2) = (acc.points(), sys.points());
        let points = n1
            .checked_mul(n2)
            .filter(|&p| p <= u16::MAX as usize)
            .ok_or_else(|| Error::InvalidParameter("product phase space too large".into()))?;
        let (o1, o2) = (acc.group().order(), sys.group().order());
        let mut action = vec![0 as Point; o1 * o2 * points];
        for g1 in 0..o1 as Elem {
            for g2 in 0..o2 as Elem {
                let g = g1 as usize * o2 + g2 as usize;
                for x1 in 0..n1 as Point {
                    for x2 in 0..n2 as Point {
                        let x = x1 as usize * n2 + x2 as usize;
                        let y = acc.act(g1, x1) as usize * n2 + sys.act(g2, x2) as usize;
                        action[g * points + x] = y as Point;
                    }
                }
            }
        }
        let labels = (0..points)
            .map(|x| {
                format!(
                    "({},{})",
                    acc.point_label((x / n2) as Point),
                    sys.point_label((x % n2) as Point)
                )
            })
            .collect();
        acc = FiniteSystem::new(Arc::new(group), points, action)?
            .with_name(format!("{}x{}", acc.name(), sys.name()))
            .with_point_labels(labels)?;
    }
    assert_minimal(acc)
}

/// Report of the exact cyclic-order demonstration for rational rotations.
#[derive(Debug, Clone, Serialize)]
pub struct OrientationReport {
    pub modulus: usize,
    pub step: usize,
    pub n_max: usize,
    pub half_window: usize,
    pub pairs_checked: u64,
    pub all_preserved: bool,
    pub narrative: String,
}

/// Exact arithmetic on Z/q standing in for the circle at resolution 1/q:
/// for every n ≤ n_max and every pair (w, y) with w in the right half
/// window [0, ε) and y in the left half window [1−ε, 1), ε = half/q, the
/// cyclic orientation of (w + n·p, y + n·p) must match that of (w, y).
///
/// Rotation preserves differences mod q exactly, and the orientation of a
/// close pair is a function of the difference alone, so the check witnesses
/// the obstruction: producing a glued configuration of the shape
/// (w⁺, y⁻, y⁻, w⁺) would force an orientation reversal along the orbit,
/// which this sweep rules out pair by pair.
pub fn sturmian_orientation_demo(
    q: usize,
    p: usize,
    n_max: usize,
    half: usize,
) -> Result<OrientationReport> {
    if q < 4 {
        return Err(Error::InvalidParameter("modulus must be at least 4".into()));
    }
    if gcd(p % q, q) != 1 {
        return Err(Error::InvalidParameter(format!(
            "step {p} is not coprime to modulus {q}"
        )));
    }
    // windows [0, half) and [q-half, q) keep every checked pair strictly
    // inside a half circle, so orientation is always defined
    if half == 0 || 4 * half > q {
        return Err(Error::InvalidParameter(format!(
            "half window {half} must satisfy 0 < 4*half <= q"
        )));
    }
    // orientation of a pair at circular distance < q/2: positive when the
    // short arc from a to b runs counterclockwise
    let orient = |a: usize, b: usize| -> i8 {
        let fwd = (b + q - a) % q;
        debug_assert!(fwd != 0 && 2 * fwd != q);
        if 2 * fwd < q {
            1
        } else {
            -1
        }
    };
    let mut pairs_checked = 0u64;
    for w in 0..half {
        for y in (q - half)..q {
            let base = orient(w, y);
            let mut wn = w;
            let mut yn = y;
            for _ in 1..=n_max {
                wn = (wn + p) % q;
                yn = (yn + p) % q;
                pairs_checked += 1;
                if orient(wn, yn) != base {
                    return Ok(OrientationReport {
                        modulus: q,
                        step: p,
                        n_max,
                        half_window: half,
                        pairs_checked,
                        all_preserved: false,
                        narrative: format!(
                            "orientation of ({w},{y}) flipped after a rotation step"
                        ),
                    });
                }
            }
        }
    }
    Ok(OrientationReport {
        modulus: q,
        step: p,
        n_max,
        half_window: half,
        pairs_checked,
        all_preserved: true,
        narrative: format!(
            "rotation by {p}/{q} preserves the cyclic orientation of every pair \
             straddling 0 within {half}/{q}, across {n_max} steps; a glued \
             configuration swapping the two sides of 0 would need a reversal, \
             so none exists on this orbit"
        ),
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_are_minimal_systems() {
        for sys in [
            rotation(1).unwrap(),
            rotation(5).unwrap(),
            heisenberg_mod(2).unwrap(),
            dihedral(4).unwrap(),
        ] {
            assert!(sys.is_minimal());
        }
    }

    #[test]
    fn rotation_one_point() {
        let sys = rotation(1).unwrap();
        assert_eq!(sys.points(), 1);
        assert_eq!(sys.group().order(), 1);
    }

    #[test]
    fn heisenberg_shapes() {
        let sys = heisenberg_mod(2).unwrap();
        assert_eq!(sys.points(), 8);
        assert_eq!(sys.group().order(), 8);
        let sizes: Vec<usize> = sys
            .group()
            .lower_central_series()
            .iter()
            .map(|s| s.len())
            .collect();
        assert_eq!(sizes, vec![8, 2, 1]);

        let h3 = heisenberg_group(3).unwrap();
        assert_eq!(h3.order(), 27);
        assert_eq!(h3.nilpotency_class(), Some(2));
        assert!(matches!(
            heisenberg_mod(4),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn a5_is_perfect_order_60() {
        let sys = a5_regular().unwrap();
        assert_eq!(sys.points(), 60);
        assert!(sys.group().is_perfect());
        // all sixty permutations are even: no odd cycle data slipped in
        assert_eq!(sys.group().order(), 60);
    }

    #[test]
    fn coset_action() {
        let (s3, _) = symmetric_group(3).unwrap();
        // index-3 subgroup generated by a transposition
        let transposition = s3
            .elements()
            .find(|&e| s3.element_order(e) == 2)
            .unwrap();
        let sys = coset(&s3, &[transposition]).unwrap();
        assert_eq!(sys.points(), 3);
        assert!(sys.is_minimal());
    }

    #[test]
    fn products() {
        let sys = product_of(&[rotation(2).unwrap(), rotation(3).unwrap()]).unwrap();
        assert_eq!(sys.points(), 6);
        assert!(sys.is_minimal());
        assert!(sys.group().is_abelian());
    }

    #[test]
    fn dihedral_group_relations() {
        let d4 = dihedral_group(4).unwrap();
        assert_eq!(d4.order(), 8);
        assert!(!d4.is_abelian());
        // s r s = r^{-1}
        let r = 1 as Elem;
        let s = 4 as Elem;
        assert_eq!(d4.mul(d4.mul(s, r), s), d4.inv(r));
    }

    #[test]
    fn orientation_demo_small() {
        let rep = sturmian_orientation_demo(4, 1, 0, 0);
        assert!(rep.is_err());
        let rep = sturmian_orientation_demo(12, 5, 100, 2).unwrap();
        assert!(rep.all_preserved);
        // n_max = 0 checks nothing and trivially preserves
        let rep = sturmian_orientation_demo(12, 5, 0, 2).unwrap();
        assert!(rep.all_preserved);
        assert_eq!(rep.pairs_checked, 0);
        assert!(matches!(
            sturmian_orientation_demo(12, 4, 10, 2),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn orientation_demo_exhaustive_4() {
        // q = 4, p = 1: the single straddling pair, fully exhausted
        let rep = sturmian_orientation_demo(4, 1, 16, 1).unwrap();
        assert!(rep.all_preserved);
        assert_eq!(rep.pairs_checked, 16);
    }
}
