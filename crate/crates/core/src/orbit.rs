//! Packed-key breadth-first closure over exponential state spaces.
//!
//! States are short vectors of `u16` (configuration vertices or tuple-group
//! entries). Each state packs into 1 byte per slot when values stay below
//! 256, 2 bytes otherwise; the packed width picks one of four key types so
//! the visited set stays dense. A single global seen-set deduplicates the
//! frontier; expansion order is FIFO and deterministic.

use std::collections::HashSet;
use std::hash::Hash;

use crate::error::{Error, Result};

/// How states of a fixed slot count pack into keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Packing {
    pub slots: usize,
    pub wide: bool,
}

impl Packing {
    pub fn choose(slots: usize, values: usize) -> Result<Packing> {
        if values > u16::MAX as usize + 1 {
            return Err(Error::InvalidParameter(format!(
                "value range {values} exceeds 16-bit packing"
            )));
        }
        let wide = values > 256;
        let p = Packing { slots, wide };
        if p.bytes() > 64 {
            return Err(Error::InvalidParameter(format!(
                "state of {slots} slots x {} bytes exceeds the 64-byte key bound",
                if wide { 2 } else { 1 }
            )));
        }
        Ok(p)
    }

    pub fn bytes(&self) -> usize {
        self.slots * if self.wide { 2 } else { 1 }
    }
}

pub(crate) trait Key: Copy + Eq + Hash + Ord {
    fn pack(vals: &[u16], wide: bool) -> Self;
    fn unpack(&self, out: &mut [u16], wide: bool);
}

macro_rules! int_key {
    ($t:ty) => {
        impl Key for $t {
            #[inline]
            fn pack(vals: &[u16], wide: bool) -> Self {
                let mut k: $t = 0;
                if wide {
                    for (i, &v) in vals.iter().enumerate() {
                        k |= (v as $t) << (16 * i);
                    }
                } else {
                    for (i, &v) in vals.iter().enumerate() {
                        k |= (v as $t) << (8 * i);
                    }
                }
                k
            }

            #[inline]
            fn unpack(&self, out: &mut [u16], wide: bool) {
                if wide {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = ((self >> (16 * i)) & 0xffff) as u16;
                    }
                } else {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = ((self >> (8 * i)) & 0xff) as u16;
                    }
                }
            }
        }
    };
}

int_key!(u64);
int_key!(u128);

macro_rules! array_key {
    ($n:literal) => {
        impl Key for [u8; $n] {
            #[inline]
            fn pack(vals: &[u16], wide: bool) -> Self {
                let mut k = [0u8; $n];
                if wide {
                    for (i, &v) in vals.iter().enumerate() {
                        k[2 * i] = (v & 0xff) as u8;
                        k[2 * i + 1] = (v >> 8) as u8;
                    }
                } else {
                    for (i, &v) in vals.iter().enumerate() {
                        k[i] = v as u8;
                    }
                }
                k
            }

            #[inline]
            fn unpack(&self, out: &mut [u16], wide: bool) {
                if wide {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = self[2 * i] as u16 | ((self[2 * i + 1] as u16) << 8);
                    }
                } else {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = self[i] as u16;
                    }
                }
            }
        }
    };
}

array_key!(32);
array_key!(64);

/// Visited set, width-dispatched.
#[derive(Debug, Clone)]
pub(crate) enum KeySet {
    K8(HashSet<u64>),
    K16(HashSet<u128>),
    K32(HashSet<[u8; 32]>),
    K64(HashSet<[u8; 64]>),
}

impl KeySet {
    pub fn len(&self) -> usize {
        match self {
            KeySet::K8(s) => s.len(),
            KeySet::K16(s) => s.len(),
            KeySet::K32(s) => s.len(),
            KeySet::K64(s) => s.len(),
        }
    }

    pub fn contains(&self, packing: Packing, vals: &[u16]) -> bool {
        match self {
            KeySet::K8(s) => s.contains(&u64::pack(vals, packing.wide)),
            KeySet::K16(s) => s.contains(&u128::pack(vals, packing.wide)),
            KeySet::K32(s) => s.contains(&<[u8; 32]>::pack(vals, packing.wide)),
            KeySet::K64(s) => s.contains(&<[u8; 64]>::pack(vals, packing.wide)),
        }
    }

    pub fn insert(&mut self, packing: Packing, vals: &[u16]) -> bool {
        match self {
            KeySet::K8(s) => s.insert(u64::pack(vals, packing.wide)),
            KeySet::K16(s) => s.insert(u128::pack(vals, packing.wide)),
            KeySet::K32(s) => s.insert(<[u8; 32]>::pack(vals, packing.wide)),
            KeySet::K64(s) => s.insert(<[u8; 64]>::pack(vals, packing.wide)),
        }
    }

    pub fn empty_for(packing: Packing) -> KeySet {
        match packing.bytes() {
            0..=8 => KeySet::K8(HashSet::new()),
            9..=16 => KeySet::K16(HashSet::new()),
            17..=32 => KeySet::K32(HashSet::new()),
            _ => KeySet::K64(HashSet::new()),
        }
    }

    /// States unpacked and sorted lexicographically by slot values,
    /// independent of the packing representation.
    pub fn sorted_states(&self, packing: Packing) -> Vec<Vec<u16>> {
        fn collect<K: Key>(set: &HashSet<K>, packing: Packing) -> Vec<Vec<u16>> {
            let mut states: Vec<Vec<u16>> = set
                .iter()
                .map(|k| {
                    let mut v = vec![0u16; packing.slots];
                    k.unpack(&mut v, packing.wide);
                    v
                })
                .collect();
            states.sort_unstable();
            states
        }
        match self {
            KeySet::K8(s) => collect(s, packing),
            KeySet::K16(s) => collect(s, packing),
            KeySet::K32(s) => collect(s, packing),
            KeySet::K64(s) => collect(s, packing),
        }
    }

    /// A deterministic sample of `n` states without materializing the whole
    /// set as vectors: keys are sorted in their native order and indices are
    /// drawn from a seeded generator.
    pub fn sample_states(&self, packing: Packing, n: usize, seed: u64) -> Vec<Vec<u16>> {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        fn pick<K: Key>(set: &HashSet<K>, packing: Packing, n: usize, seed: u64) -> Vec<Vec<u16>> {
            let mut keys: Vec<K> = set.iter().copied().collect();
            keys.sort_unstable();
            let mut out = Vec::with_capacity(n.min(keys.len()));
            let mut unpack = |k: &K| {
                let mut v = vec![0u16; packing.slots];
                k.unpack(&mut v, packing.wide);
                v
            };
            if keys.len() <= n {
                return keys.iter().map(&mut unpack).collect();
            }
            let mut rng = StdRng::seed_from_u64(seed);
            let mut taken = HashSet::new();
            while out.len() < n {
                let i = rng.gen_range(0..keys.len());
                if taken.insert(i) {
                    out.push(unpack(&keys[i]));
                }
            }
            out
        }
        match self {
            KeySet::K8(s) => pick(s, packing, n, seed),
            KeySet::K16(s) => pick(s, packing, n, seed),
            KeySet::K32(s) => pick(s, packing, n, seed),
            KeySet::K64(s) => pick(s, packing, n, seed),
        }
    }

    /// Visit every state, unpacked into a scratch buffer.
    pub fn for_each(&self, packing: Packing, mut f: impl FnMut(&[u16])) {
        let mut buf = vec![0u16; packing.slots];
        match self {
            KeySet::K8(s) => {
                for k in s {
                    k.unpack(&mut buf, packing.wide);
                    f(&buf);
                }
            }
            KeySet::K16(s) => {
                for k in s {
                    k.unpack(&mut buf, packing.wide);
                    f(&buf);
                }
            }
            KeySet::K32(s) => {
                for k in s {
                    k.unpack(&mut buf, packing.wide);
                    f(&buf);
                }
            }
            KeySet::K64(s) => {
                for k in s {
                    k.unpack(&mut buf, packing.wide);
                    f(&buf);
                }
            }
        }
    }
}

/// One closure generator: a value substitution per slot. Applying it to a
/// state maps slot v through table[v * values + state[v]].
#[derive(Debug, Clone)]
pub(crate) struct SlotMap {
    pub table: Vec<u16>,
    pub values: usize,
}

impl SlotMap {
    #[inline]
    fn apply(&self, src: &[u16], dst: &mut [u16]) {
        for (v, (&s, d)) in src.iter().zip(dst.iter_mut()).enumerate() {
            *d = self.table[v * self.values + s as usize];
        }
    }
}

#[derive(Debug)]
pub(crate) struct ClosureResult {
    pub set: KeySet,
    pub packing: Packing,
    pub visited: u64,
    pub watch_hits: Vec<bool>,
}

/// BFS closure of `starts` under the slot maps, with budget enforcement and
/// a membership watch list evaluated against the final visited set.
pub(crate) fn close_under(
    packing: Packing,
    starts: &[Vec<u16>],
    gens: &[SlotMap],
    watch: &[Vec<u16>],
    budget: usize,
    context: &str,
) -> Result<ClosureResult> {
    fn run<K: Key>(
        packing: Packing,
        starts: &[Vec<u16>],
        gens: &[SlotMap],
        watch: &[Vec<u16>],
        budget: usize,
        context: &str,
    ) -> Result<(HashSet<K>, u64, Vec<bool>)> {
        let wide = packing.wide;
        let mut seen: HashSet<K> = HashSet::new();
        let mut order: Vec<K> = Vec::new();
        for s in starts {
            debug_assert_eq!(s.len(), packing.slots);
            let k = K::pack(s, wide);
            if seen.insert(k) {
                order.push(k);
            }
        }
        if seen.len() > budget {
            return Err(Error::budget(context, seen.len() as u64, budget as u64));
        }
        let mut cur = vec![0u16; packing.slots];
        let mut nxt = vec![0u16; packing.slots];
        let mut head = 0usize;
        while head < order.len() {
            let k = order[head];
            head += 1;
            k.unpack(&mut cur, wide);
            for g in gens {
                g.apply(&cur, &mut nxt);
                let nk = K::pack(&nxt, wide);
                if seen.insert(nk) {
                    if seen.len() > budget {
                        return Err(Error::budget_detail(
                            context,
                            seen.len() as u64,
                            budget as u64,
                            format!("frontier at {head} of {}", order.len()),
                        ));
                    }
                    order.push(nk);
                }
            }
        }
        let hits = watch
            .iter()
            .map(|w| seen.contains(&K::pack(w, wide)))
            .collect();
        let visited = seen.len() as u64;
        Ok((seen, visited, hits))
    }

    match packing.bytes() {
        0..=8 => {
            let (set, visited, watch_hits) = run::<u64>(packing, starts, gens, watch, budget, context)?;
            Ok(ClosureResult {
                set: KeySet::K8(set),
                packing,
                visited,
                watch_hits,
            })
        }
        9..=16 => {
            let (set, visited, watch_hits) = run::<u128>(packing, starts, gens, watch, budget, context)?;
            Ok(ClosureResult {
                set: KeySet::K16(set),
                packing,
                visited,
                watch_hits,
            })
        }
        17..=32 => {
            let (set, visited, watch_hits) =
                run::<[u8; 32]>(packing, starts, gens, watch, budget, context)?;
            Ok(ClosureResult {
                set: KeySet::K32(set),
                packing,
                visited,
                watch_hits,
            })
        }
        33..=64 => {
            let (set, visited, watch_hits) =
                run::<[u8; 64]>(packing, starts, gens, watch, budget, context)?;
            Ok(ClosureResult {
                set: KeySet::K64(set),
                packing,
                visited,
                watch_hits,
            })
        }
        n => Err(Error::InvalidParameter(format!(
            "packed state of {n} bytes is unsupported"
        ))),
    }
}

/// Default cap on generated states per closure.
pub const DEFAULT_BUDGET: usize = 1 << 24;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn packing_widths() {
        assert!(!Packing::choose(4, 60).unwrap().wide);
        assert!(Packing::choose(4, 600).unwrap().wide);
        assert_eq!(Packing::choose(8, 60).unwrap().bytes(), 8);
        assert!(Packing::choose(64, 600).is_err());
    }

    #[test]
    fn closure_mod_add() {
        // states = (a, b) over Z/5, generator adds 1 to both slots
        let packing = Packing::choose(2, 5).unwrap();
        let table: Vec<u16> = (0..2)
            .flat_map(|_| (0..5u16).map(|x| (x + 1) % 5))
            .collect();
        let gen = SlotMap { table, values: 5 };
        let res = close_under(
            packing,
            &[vec![0, 3]],
            &[gen],
            &[vec![2, 0], vec![1, 1]],
            100,
            "test",
        )
        .unwrap();
        assert_eq!(res.visited, 5);
        assert_eq!(res.watch_hits, vec![true, false]);
    }

    #[test]
    fn budget_is_enforced() {
        let packing = Packing::choose(1, 100).unwrap();
        let table: Vec<u16> = (0..100u16).map(|x| (x + 1) % 100).collect();
        let gen = SlotMap { table, values: 100 };
        let err = close_under(packing, &[vec![0]], &[gen], &[], 10, "test").unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    proptest! {
        #[test]
        fn pack_roundtrip(vals in proptest::collection::vec(0u16..=u16::MAX, 1..8)) {
            let packing = Packing { slots: vals.len(), wide: true };
            let k = u128::pack(&vals, packing.wide);
            let mut out = vec![0u16; vals.len()];
            k.unpack(&mut out, packing.wide);
            prop_assert_eq!(&out, &vals);

            let narrow: Vec<u16> = vals.iter().map(|&v| v & 0xff).collect();
            let k = <[u8; 32]>::pack(&narrow, false);
            let mut out = vec![0u16; narrow.len()];
            k.unpack(&mut out, false);
            prop_assert_eq!(out, narrow);
        }
    }
}
