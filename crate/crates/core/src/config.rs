//! Text format for describing systems, and the builtin system names.
//!
//! A config is a line-oriented description with `#` comments:
//!
//! ```text
//! group perms (1 2) (1 2 3)     # permutation generators, 1-based letters
//! action regular                # G acting on itself
//! ```
//!
//! Group forms:
//! - `group builtin <name>` — a named group: `cyclic:N` (alias
//!   `rotation:N`), `dihedral:N`, `heisenberg:P`, `symmetric:N`, `s3`,
//!   `a5`, `klein`.
//! - `group perms <perm> <perm> ...` — the permutation group generated by
//!   the listed permutations. A permutation is one or more cycles written
//!   without separating whitespace: `(1 2)(3 4)` is one generator,
//!   `(1 2) (3 4)` is two. Letters are 1-based; `()` is the identity.
//! - `group table <n>` — followed by `n` rows of `n` whitespace-separated
//!   element indices forming the multiplication table.
//!
//! Action forms:
//! - `action regular` — left translation on the group itself.
//! - `action coset <perm> ...` — left translation on the cosets of the
//!   subgroup generated by the listed elements (permutation groups only).
//! - `action perms <points> <perm> ...` — one image permutation of
//!   `1..=points` per group generator, in order (permutation groups only);
//!   the assignment must extend to a group action, which is checked.
//!
//! Builtin system names accepted wherever a config is: `rotation:N`,
//! `heisenberg:P`, `dihedral:N`, `a5`, `s3`, `klein`, and
//! `coset:<group>:<perm>...` over a permutation-presented builtin group.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{Elem, FiniteGroup};
use crate::system::FiniteSystem;
use crate::zoo;

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

/// One permutation written as adjacent cycles, e.g. `(1 2)(3 4)`.
#[derive(Debug, Clone, PartialEq)]
struct CycleSpec {
    cycles: Vec<Vec<usize>>,
    max_letter: usize,
}

/// Splits a cycle expression into whitespace-separated permutations.
fn parse_perm_list(text: &str, line: usize, col_base: usize) -> Result<Vec<CycleSpec>> {
    let mut perms: Vec<CycleSpec> = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut current: Option<CycleSpec> = None;
    while let Some(&(i, c)) = chars.peek() {
        let col = col_base + i + 1;
        match c {
            c if c.is_whitespace() => {
                if let Some(p) = current.take() {
                    perms.push(p);
                }
                chars.next();
            }
            '(' => {
                chars.next();
                let mut cycle: Vec<usize> = Vec::new();
                let mut num = String::new();
                let mut closed = false;
                for (j, c2) in chars.by_ref() {
                    let col2 = col_base + j + 1;
                    match c2 {
                        ')' => {
                            if !num.is_empty() {
                                cycle.push(num.parse().map_err(|_| {
                                    parse_err(line, col2, format!("bad letter '{num}'"))
                                })?);
                                num.clear();
                            }
                            closed = true;
                            break;
                        }
                        c2 if c2.is_ascii_digit() => num.push(c2),
                        c2 if c2.is_whitespace() => {
                            if !num.is_empty() {
                                cycle.push(num.parse().map_err(|_| {
                                    parse_err(line, col2, format!("bad letter '{num}'"))
                                })?);
                                num.clear();
                            }
                        }
                        other => {
                            return Err(parse_err(
                                line,
                                col2,
                                format!("unexpected '{other}' inside a cycle"),
                            ))
                        }
                    }
                }
                if !closed {
                    return Err(parse_err(line, col, "unclosed cycle: missing ')'"));
                }
                if cycle.contains(&0) {
                    return Err(parse_err(line, col, "cycle letters are 1-based"));
                }
                let mut sorted = cycle.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != cycle.len() {
                    return Err(parse_err(line, col, "cycle repeats a letter"));
                }
                let max_letter = cycle.iter().copied().max().unwrap_or(0);
                match &mut current {
                    Some(p) => {
                        p.cycles.push(cycle);
                        p.max_letter = p.max_letter.max(max_letter);
                    }
                    None => {
                        current = Some(CycleSpec {
                            cycles: vec![cycle],
                            max_letter,
                        })
                    }
                }
            }
            other => {
                return Err(parse_err(
                    line,
                    col,
                    format!("unexpected '{other}', expected a cycle"),
                ))
            }
        }
    }
    if let Some(p) = current.take() {
        perms.push(p);
    }
    if perms.is_empty() {
        return Err(parse_err(line, col_base + 1, "expected at least one permutation"));
    }
    Ok(perms)
}

fn realize_perm(spec: &CycleSpec, letters: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..letters).collect();
    // cycles compose left to right
    for cycle in &spec.cycles {
        let mut step: Vec<usize> = (0..letters).collect();
        for w in 0..cycle.len() {
            let from = cycle[w] - 1;
            let to = cycle[(w + 1) % cycle.len()] - 1;
            step[from] = to;
        }
        perm = perm.iter().map(|&x| step[x]).collect();
    }
    perm
}

#[derive(Debug)]
enum GroupDecl {
    Builtin(String),
    Perms(Vec<CycleSpec>),
    Table(Vec<Vec<usize>>),
}

#[derive(Debug)]
enum ActionDecl {
    Regular,
    Coset(Vec<CycleSpec>),
    Perms { points: usize, images: Vec<CycleSpec> },
}

/// Parses a config text into a system, with line-anchored diagnostics.
pub fn parse_config(text: &str) -> Result<FiniteSystem> {
    let mut group_decl: Option<(usize, GroupDecl)> = None;
    let mut action_decl: Option<(usize, ActionDecl)> = None;
    let mut table_rows_left = 0usize;
    let mut table_rows: Vec<Vec<usize>> = Vec::new();
    let mut table_line = 0usize;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if table_rows_left > 0 {
            let row: Vec<usize> = trimmed
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| parse_err(line_no, 1, format!("bad table entry '{t}'")))
                })
                .collect::<Result<_>>()?;
            table_rows.push(row);
            table_rows_left -= 1;
            if table_rows_left == 0 {
                group_decl = Some((table_line, GroupDecl::Table(std::mem::take(&mut table_rows))));
            }
            continue;
        }
        let (head, rest) = match trimmed.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim_start()),
            None => (trimmed, ""),
        };
        let rest_col = line.len() - line.trim_start().len() + head.len() + 2;
        match head {
            "group" => {
                if group_decl.is_some() || table_rows_left > 0 {
                    return Err(parse_err(line_no, 1, "duplicate group declaration"));
                }
                let (kind, arg) = match rest.split_once(char::is_whitespace) {
                    Some((k, a)) => (k, a.trim_start()),
                    None => (rest, ""),
                };
                match kind {
                    "builtin" => {
                        if arg.is_empty() {
                            return Err(parse_err(line_no, rest_col, "missing builtin name"));
                        }
                        group_decl = Some((line_no, GroupDecl::Builtin(arg.to_string())));
                    }
                    "perms" => {
                        let perms = parse_perm_list(arg, line_no, rest_col + kind.len())?;
                        group_decl = Some((line_no, GroupDecl::Perms(perms)));
                    }
                    "table" => {
                        let n: usize = arg.trim().parse().map_err(|_| {
                            parse_err(line_no, rest_col, format!("bad table order '{arg}'"))
                        })?;
                        if n == 0 {
                            return Err(parse_err(line_no, rest_col, "table order must be positive"));
                        }
                        table_rows_left = n;
                        table_line = line_no;
                    }
                    other => {
                        return Err(parse_err(
                            line_no,
                            rest_col,
                            format!("unknown group form '{other}' (builtin|perms|table)"),
                        ))
                    }
                }
            }
            "action" => {
                if action_decl.is_some() {
                    return Err(parse_err(line_no, 1, "duplicate action declaration"));
                }
                let (kind, arg) = match rest.split_once(char::is_whitespace) {
                    Some((k, a)) => (k, a.trim_start()),
                    None => (rest, ""),
                };
                match kind {
                    "regular" => action_decl = Some((line_no, ActionDecl::Regular)),
                    "coset" => {
                        let perms = parse_perm_list(arg, line_no, rest_col + kind.len())?;
                        action_decl = Some((line_no, ActionDecl::Coset(perms)));
                    }
                    "perms" => {
                        let (count, rest2) = arg.split_once(char::is_whitespace).ok_or_else(|| {
                            parse_err(line_no, rest_col, "action perms needs a point count")
                        })?;
                        let points: usize = count.parse().map_err(|_| {
                            parse_err(line_no, rest_col, format!("bad point count '{count}'"))
                        })?;
                        let images = parse_perm_list(rest2, line_no, rest_col + kind.len())?;
                        action_decl = Some((line_no, ActionDecl::Perms { points, images }));
                    }
                    other => {
                        return Err(parse_err(
                            line_no,
                            rest_col,
                            format!("unknown action form '{other}' (regular|coset|perms)"),
                        ))
                    }
                }
            }
            other => {
                return Err(parse_err(
                    line_no,
                    1,
                    format!("unknown directive '{other}' (group|action)"),
                ))
            }
        }
    }

    if table_rows_left > 0 {
        return Err(parse_err(
            table_line,
            1,
            format!("multiplication table is missing {table_rows_left} rows"),
        ));
    }
    let Some((gline, group_decl)) = group_decl else {
        return Err(parse_err(1, 1, "missing group declaration"));
    };
    let (aline, action_decl) = match action_decl {
        Some(a) => a,
        None => (gline, ActionDecl::Regular),
    };

    build_system(group_decl, action_decl, gline, aline)
}

fn build_system(
    group_decl: GroupDecl,
    action_decl: ActionDecl,
    gline: usize,
    aline: usize,
) -> Result<FiniteSystem> {
    match group_decl {
        GroupDecl::Builtin(name) => {
            let group = builtin_group(&name)
                .map_err(|e| parse_err(gline, 1, format!("{e}")))?;
            match action_decl {
                ActionDecl::Regular => zoo::regular(&group),
                _ => Err(parse_err(
                    aline,
                    1,
                    "coset and perms actions need `group perms`",
                )),
            }
        }
        GroupDecl::Table(rows) => {
            let group = FiniteGroup::from_mult_table(&rows)
                .map_err(|e| parse_err(gline, 1, format!("{e}")))?;
            match action_decl {
                ActionDecl::Regular => zoo::regular(&group),
                _ => Err(parse_err(
                    aline,
                    1,
                    "coset and perms actions need `group perms`",
                )),
            }
        }
        GroupDecl::Perms(specs) => {
            let letters = specs.iter().map(|s| s.max_letter).max().unwrap_or(1).max(1);
            let gen_perms: Vec<Vec<usize>> =
                specs.iter().map(|s| realize_perm(s, letters)).collect();
            let (group, elem_perms) = FiniteGroup::from_permutations(letters, &gen_perms)
                .map_err(|e| parse_err(gline, 1, format!("{e}")))?;
            match action_decl {
                ActionDecl::Regular => zoo::regular(&group),
                ActionDecl::Coset(hspecs) => {
                    let h_elems = locate_elements(&elem_perms, &hspecs, letters, aline)?;
                    zoo::coset(&group, &h_elems)
                }
                ActionDecl::Perms { points, images } => {
                    if images.len() != gen_perms.len() {
                        return Err(parse_err(
                            aline,
                            1,
                            format!(
                                "{} action images for {} group generators",
                                images.len(),
                                gen_perms.len()
                            ),
                        ));
                    }
                    if images.iter().any(|s| s.max_letter > points) {
                        return Err(parse_err(aline, 1, "action letter exceeds the point count"));
                    }
                    let image_perms: Vec<Vec<usize>> =
                        images.iter().map(|s| realize_perm(s, points)).collect();
                    action_from_generator_images(&group, &gen_perms, letters, points, &image_perms)
                        .map_err(|e| match e {
                            Error::Parse { .. } => e,
                            other => parse_err(aline, 1, format!("{other}")),
                        })
                }
            }
        }
    }
}

/// Finds the group elements realizing the given letter permutations.
fn locate_elements(
    elem_perms: &[Vec<u16>],
    specs: &[CycleSpec],
    letters: usize,
    line: usize,
) -> Result<Vec<Elem>> {
    specs
        .iter()
        .map(|s| {
            if s.max_letter > letters {
                return Err(parse_err(line, 1, "subgroup letter exceeds the group's letters"));
            }
            let target: Vec<u16> = realize_perm(s, letters).iter().map(|&x| x as u16).collect();
            elem_perms
                .iter()
                .position(|p| *p == target)
                .map(|i| i as Elem)
                .ok_or_else(|| parse_err(line, 1, "permutation is not an element of the group"))
        })
        .collect()
}

/// Extends generator images to a full action by closing the graph of the
/// assignment inside Sym(letters) × Sym(points); a well-defined extension
/// exists iff the closure stays single-valued over each group element.
fn action_from_generator_images(
    group: &FiniteGroup,
    gen_perms: &[Vec<usize>],
    letters: usize,
    points: usize,
    images: &[Vec<usize>],
) -> Result<FiniteSystem> {
    type Pair = (Vec<u16>, Vec<u16>);
    let id: Pair = (
        (0..letters as u16).collect(),
        (0..points as u16).collect(),
    );
    let gens: Vec<Pair> = gen_perms
        .iter()
        .zip(images)
        .map(|(g, s)| {
            (
                g.iter().map(|&x| x as u16).collect(),
                s.iter().map(|&x| x as u16).collect(),
            )
        })
        .collect();
    let mut seen: std::collections::HashMap<Vec<u16>, Vec<u16>> = std::collections::HashMap::new();
    seen.insert(id.0.clone(), id.1.clone());
    let mut queue: Vec<Pair> = vec![id];
    let mut head = 0;
    while head < queue.len() {
        let (gp, sp) = queue[head].clone();
        head += 1;
        for (g, s) in &gens {
            let ngp: Vec<u16> = gp.iter().map(|&x| g[x as usize]).collect();
            let nsp: Vec<u16> = sp.iter().map(|&x| s[x as usize]).collect();
            match seen.get(&ngp) {
                Some(existing) if *existing != nsp => {
                    return Err(Error::InvalidSystem(
                        "generator images do not extend to an action".into(),
                    ));
                }
                Some(_) => {}
                None => {
                    seen.insert(ngp.clone(), nsp.clone());
                    queue.push((ngp, nsp));
                }
            }
        }
    }
    // read the action off the closure, per group element
    let (_, elem_perms) = FiniteGroup::from_permutations(letters, gen_perms)?;
    let mut action = vec![0u16; group.order() * points];
    for (e, perm) in elem_perms.iter().enumerate() {
        let sp = seen.get(perm).ok_or_else(|| {
            Error::InternalInvariantViolation("closure missed a group element".into())
        })?;
        action[e * points..(e + 1) * points].copy_from_slice(sp);
    }
    FiniteSystem::new(Arc::new(group.clone()), points, action)
        .map(|s| s.with_name("letters"))
}

/// A named group.
pub fn builtin_group(name: &str) -> Result<FiniteGroup> {
    let (kind, param) = match name.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (name, None),
    };
    let num = |p: Option<&str>| -> Result<usize> {
        p.and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("'{name}' needs a numeric parameter")))
    };
    match kind {
        "cyclic" | "rotation" => zoo::cyclic_group(num(param)?),
        "dihedral" => zoo::dihedral_group(num(param)?),
        "heisenberg" => zoo::heisenberg_group(num(param)?),
        "symmetric" => Ok(zoo::symmetric_group(num(param)?)?.0),
        "s3" => Ok(zoo::symmetric_group(3)?.0),
        "a5" => Ok(zoo::alternating_group_5()?.0),
        "klein" => zoo::cyclic_group(2)?.direct_product(&zoo::cyclic_group(2)?),
        _ => Err(Error::InvalidParameter(format!("unknown builtin group '{name}'"))),
    }
}

/// A named system: `rotation:N`, `heisenberg:P`, `dihedral:N`, `a5`, `s3`,
/// `klein`, or `coset:<group>:<perms>`.
pub fn builtin_system(name: &str) -> Result<FiniteSystem> {
    if let Some(rest) = name.strip_prefix("coset:") {
        // the group name may carry its own parameter: split just before the
        // first cycle
        let paren = rest.find('(').ok_or_else(|| {
            Error::InvalidParameter("coset systems are written coset:<group>:<perms>".into())
        })?;
        let gname = rest[..paren].trim_end_matches(':');
        let cycles = &rest[paren..];
        let perm_gens: Vec<Vec<usize>> = match gname {
            "s3" => {
                let (_, p) = zoo::symmetric_group(3)?;
                let _ = p;
                vec![vec![1, 0, 2], vec![1, 2, 0]]
            }
            "a5" => vec![vec![1, 2, 3, 4, 0], vec![1, 2, 0, 3, 4]],
            _ if gname.starts_with("symmetric:") => {
                let n: usize = gname["symmetric:".len()..]
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad '{gname}'")))?;
                let mut t: Vec<usize> = (0..n).collect();
                if n >= 2 {
                    t.swap(0, 1);
                }
                let cycle: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
                vec![t, cycle]
            }
            _ if gname.starts_with("rotation:") || gname.starts_with("cyclic:") => {
                let n: usize = gname.split(':').nth(1).and_then(|s| s.parse().ok()).ok_or_else(
                    || Error::InvalidParameter(format!("bad '{gname}'")),
                )?;
                vec![(0..n).map(|i| (i + 1) % n).collect()]
            }
            _ if gname.starts_with("dihedral:") => {
                let n: usize = gname["dihedral:".len()..]
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad '{gname}'")))?;
                let rot: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
                let refl: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
                vec![rot, refl]
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "coset systems need a permutation-presented group, got '{gname}'"
                )))
            }
        };
        let letters = perm_gens.iter().map(|p| p.len()).max().unwrap_or(1);
        let (group, elem_perms) = FiniteGroup::from_permutations(letters, &perm_gens)?;
        let specs = parse_perm_list(cycles, 1, 0)?;
        let h = locate_elements(&elem_perms, &specs, letters, 1)?;
        return zoo::coset(&group, &h).map(|s| s.with_name(name.to_string()));
    }
    let (kind, param) = match name.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (name, None),
    };
    let num = |p: Option<&str>| -> Result<usize> {
        p.and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("'{name}' needs a numeric parameter")))
    };
    match kind {
        "rotation" | "cyclic" => zoo::rotation(num(param)?),
        "heisenberg" => zoo::heisenberg_mod(num(param)?),
        "dihedral" => zoo::dihedral(num(param)?),
        "a5" => zoo::a5_regular(),
        "s3" => zoo::regular(&zoo::symmetric_group(3)?.0).map(|s| s.with_name("s3")),
        "klein" => {
            let g = zoo::cyclic_group(2)?.direct_product(&zoo::cyclic_group(2)?)?;
            zoo::regular(&g).map(|s| s.with_name("klein"))
        }
        _ => Err(Error::InvalidParameter(format!("unknown builtin system '{name}'"))),
    }
}

/// Accepts either a builtin name or full config text.
pub fn system_from_spec(spec: &str) -> Result<FiniteSystem> {
    if spec.contains('\n') || spec.trim_start().starts_with("group") {
        parse_config(spec)
    } else {
        builtin_system(spec.trim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        assert_eq!(builtin_system("rotation:4").unwrap().points(), 4);
        assert_eq!(builtin_system("heisenberg:2").unwrap().points(), 8);
        assert_eq!(builtin_system("a5").unwrap().points(), 60);
        assert_eq!(builtin_system("dihedral:4").unwrap().points(), 8);
        assert_eq!(builtin_system("klein").unwrap().points(), 4);
        assert!(builtin_system("nonsense").is_err());
        assert!(builtin_system("rotation:x").is_err());
    }

    #[test]
    fn coset_builtin() {
        let sys = builtin_system("coset:s3:(1 2)").unwrap();
        assert_eq!(sys.points(), 3);
        let sys = builtin_system("coset:dihedral:4:(1 2 3 4)").unwrap();
        assert_eq!(sys.points(), 2);
        assert!(builtin_system("coset:heisenberg:2:(1 2)").is_err());
    }

    #[test]
    fn regular_from_perms() {
        let sys = parse_config("group perms (1 2) (1 2 3)\naction regular\n").unwrap();
        assert_eq!(sys.points(), 6);
        assert!(sys.is_minimal());
        // default action is regular
        let sys = parse_config("# S3\ngroup perms (1 2) (1 2 3)\n").unwrap();
        assert_eq!(sys.points(), 6);
    }

    #[test]
    fn letters_action_from_images() {
        // S3 acting on its own letters: images = the generators themselves
        let sys = parse_config(
            "group perms (1 2) (1 2 3)\naction perms 3 (1 2) (1 2 3)\n",
        )
        .unwrap();
        assert_eq!(sys.points(), 3);
        assert!(sys.is_minimal());
        // a non-extending assignment is rejected: send an involution to a 3-cycle
        let err = parse_config("group perms (1 2)\naction perms 3 (1 2 3)\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn coset_action_from_config() {
        let sys = parse_config("group perms (1 2) (1 2 3)\naction coset (1 2)\n").unwrap();
        assert_eq!(sys.points(), 3);
    }

    #[test]
    fn table_group() {
        let sys = parse_config("group table 2\n0 1\n1 0\naction regular\n").unwrap();
        assert_eq!(sys.points(), 2);
        // short table
        let err = parse_config("group table 3\n0 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn one_generator_multi_cycle() {
        // (1 2)(3 4) adjacent: a single generator of order 2
        let sys = parse_config("group perms (1 2)(3 4)\n").unwrap();
        assert_eq!(sys.points(), 2);
        // separated: two generators
        let sys = parse_config("group perms (1 2) (3 4)\n").unwrap();
        assert_eq!(sys.points(), 4);
    }

    #[test]
    fn malformed_cycle_diagnostics() {
        let err = parse_config("group perms (1 2\n").unwrap_err();
        match err {
            Error::Parse { line, col, msg } => {
                assert_eq!(line, 1);
                assert!(col >= 13, "col = {col}");
                assert!(msg.contains("unclosed"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_config("group perms (1 1 2)\n").is_err());
        assert!(parse_config("gruop perms (1 2)\n").is_err());
        assert!(parse_config("").is_err());
    }

    #[test]
    fn builtin_in_config() {
        let sys = parse_config("group builtin heisenberg:3\naction regular\n").unwrap();
        assert_eq!(sys.points(), 27);
    }

    #[test]
    fn spec_dispatch() {
        assert_eq!(system_from_spec("rotation:6").unwrap().points(), 6);
        assert_eq!(
            system_from_spec("group perms (1 2 3)\naction regular")
                .unwrap()
                .points(),
            3
        );
    }
}
