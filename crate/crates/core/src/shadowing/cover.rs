//! Set cover over pseudotrajectory indices: greedy upper bounds, exact
//! search for small instances and a packing lower bound.

/// Fixed-length bitset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn new(len: usize) -> Self {
        Bits { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn full(len: usize) -> Self {
        let mut b = Bits::new(len);
        for i in 0..len {
            b.set(i);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn and_count(&self, other: &Bits) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn intersects(&self, other: &Bits) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn remove_all(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn union_with(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn first_set(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

/// Result of a greedy cover run.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyCover {
    /// Chosen sets in pick order.
    pub chosen: Vec<usize>,
    /// Whether the chosen sets cover every element.
    pub complete: bool,
    /// Elements still uncovered.
    pub uncovered: Bits,
}

/// Greedy cover: repeatedly take the set covering the most uncovered
/// elements (lowest index on ties), stopping at `limit` sets or when no set
/// adds coverage.
pub fn greedy_cover(sets: &[Bits], universe: usize, limit: usize) -> GreedyCover {
    let mut uncovered = Bits::full(universe);
    let mut chosen = Vec::new();
    while uncovered.count() > 0 && chosen.len() < limit {
        let mut best = (0usize, usize::MAX);
        for (i, s) in sets.iter().enumerate() {
            let gain = s.and_count(&uncovered);
            if gain > best.0 {
                best = (gain, i);
            }
        }
        if best.0 == 0 {
            break;
        }
        uncovered.remove_all(&sets[best.1]);
        chosen.push(best.1);
    }
    GreedyCover { complete: uncovered.count() == 0, chosen, uncovered }
}

/// Exact minimum cover for universes of at most 64 elements, searching
/// covers of size below `below`. Returns None if no such cover exists.
pub fn exact_cover_small(sets: &[Bits], universe: usize, below: usize) -> Option<Vec<usize>> {
    assert!(universe <= 64);
    let full: u64 = if universe == 64 { u64::MAX } else { (1u64 << universe) - 1 };
    let mut masks: Vec<(u64, usize)> = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        let m = s.words.first().copied().unwrap_or(0) & full;
        if m != 0 {
            masks.push((m, i));
        }
    }
    // Drop duplicates and dominated masks, keeping the lowest index.
    masks.sort_by(|a, b| b.0.count_ones().cmp(&a.0.count_ones()).then(a.1.cmp(&b.1)));
    let mut kept: Vec<(u64, usize)> = Vec::new();
    for &(m, i) in &masks {
        if !kept.iter().any(|&(k, _)| k & m == m) {
            kept.push((m, i));
        }
    }
    let mut best: Option<Vec<usize>> = None;
    let mut limit = below;
    let mut stack = Vec::new();
    search(&kept, full, 0, &mut stack, &mut limit, &mut best);
    best
}

fn search(
    sets: &[(u64, usize)],
    full: u64,
    covered: u64,
    stack: &mut Vec<usize>,
    limit: &mut usize,
    best: &mut Option<Vec<usize>>,
) {
    if covered == full {
        if stack.len() < *limit {
            *limit = stack.len();
            let mut v = stack.clone();
            v.sort_unstable();
            *best = Some(v);
        }
        return;
    }
    if stack.len() + 1 >= *limit {
        return;
    }
    let e = (!covered & full).trailing_zeros();
    for &(m, i) in sets {
        if m >> e & 1 == 1 {
            stack.push(i);
            search(sets, full, covered | m, stack, limit, best);
            stack.pop();
        }
    }
}

/// Packing lower bound: a set of elements no two of which share a covering
/// set, chosen greedily from the hardest-to-cover elements. Returns None
/// if some element has no covering set.
pub fn packing_lower_bound(sets: &[Bits], universe: usize) -> Option<(usize, Vec<usize>)> {
    let mut covering: Vec<Bits> = (0..universe).map(|_| Bits::new(sets.len())).collect();
    for (i, s) in sets.iter().enumerate() {
        for e in s.ones() {
            covering[e].set(i);
        }
    }
    let mut order: Vec<(usize, usize)> = covering.iter().enumerate().map(|(e, c)| (c.count(), e)).collect();
    if order.iter().any(|o| o.0 == 0) {
        return None;
    }
    order.sort_unstable();
    let mut used = Bits::new(sets.len());
    let mut picked = Vec::new();
    for (_, e) in order {
        if !covering[e].intersects(&used) {
            used.union_with(&covering[e]);
            picked.push(e);
        }
    }
    picked.sort_unstable();
    Some((picked.len(), picked))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(len: usize, ones: &[usize]) -> Bits {
        let mut b = Bits::new(len);
        for &i in ones {
            b.set(i);
        }
        b
    }

    #[test]
    fn greedy_versus_exact() {
        // Classic instance where greedy takes three sets but two suffice.
        let sets = vec![bits(6, &[0, 1, 2, 3]), bits(6, &[0, 1, 4]), bits(6, &[2, 3, 5]), bits(6, &[4, 5])];
        let g = greedy_cover(&sets, 6, 10);
        assert!(g.complete);
        assert_eq!(g.chosen, vec![0, 3]);
        let sets = vec![bits(6, &[0, 1, 3, 4]), bits(6, &[0, 1, 2]), bits(6, &[3, 4, 5])];
        let g = greedy_cover(&sets, 6, 10);
        assert_eq!(g.chosen.len(), 3);
        let e = exact_cover_small(&sets, 6, 3).unwrap();
        assert_eq!(e, vec![1, 2]);
        let (lb, _) = packing_lower_bound(&sets, 6).unwrap();
        assert!(lb <= 2);
    }

    #[test]
    fn uncoverable_element() {
        let sets = vec![bits(3, &[0, 1])];
        assert!(packing_lower_bound(&sets, 3).is_none());
        assert!(!greedy_cover(&sets, 3, 5).complete);
    }
}
