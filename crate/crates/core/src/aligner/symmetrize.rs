use std::str::FromStr;

use super::LinkSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Heuristic {
    Intersection,
    Union,
    #[default]
    GrowDiagFinalAnd,
}

impl FromStr for Heuristic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "intersection" => Ok(Heuristic::Intersection),
            "union" => Ok(Heuristic::Union),
            "grow-diag-final-and" => Ok(Heuristic::GrowDiagFinalAnd),
            other => Err(format!("unknown symmetrization heuristic `{other}`")),
        }
    }
}

const NEIGHBORS: [(isize, isize); 8] = [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];

/// Combines two alignments of the same sentence pair. Both link sets must be
/// in (source, target) orientation; transpose the reverse-direction model's
/// output before calling.
pub fn symmetrize(forward: &LinkSet, backward: &LinkSet, heuristic: Heuristic) -> LinkSet {
    match heuristic {
        Heuristic::Intersection => forward.intersection(backward),
        Heuristic::Union => forward.union(backward),
        Heuristic::GrowDiagFinalAnd => grow_diag_final_and(forward, backward),
    }
}

fn grow_diag_final_and(forward: &LinkSet, backward: &LinkSet) -> LinkSet {
    let union = forward.union(backward);
    let mut alignment = forward.intersection(backward);
    let rows = union.iter().map(|(i, _)| i + 1).max().unwrap_or(0);
    let cols = union.iter().map(|(_, j)| j + 1).max().unwrap_or(0);
    let mut src_aligned = vec![false; rows];
    let mut tgt_aligned = vec![false; cols];
    for (i, j) in alignment.iter() {
        src_aligned[i] = true;
        tgt_aligned[j] = true;
    }

    // grow-diag: repeat row-major sweeps until nothing is added
    loop {
        let mut added = false;
        for i in 0..rows {
            for j in 0..cols {
                if !alignment.contains(i, j) {
                    continue;
                }
                for (di, dj) in NEIGHBORS {
                    let (Some(ni), Some(nj)) = (i.checked_add_signed(di), j.checked_add_signed(dj)) else {
                        continue;
                    };
                    if ni >= rows || nj >= cols {
                        continue;
                    }
                    if (!src_aligned[ni] || !tgt_aligned[nj]) && union.contains(ni, nj) {
                        alignment.insert(ni, nj);
                        src_aligned[ni] = true;
                        tgt_aligned[nj] = true;
                        added = true;
                    }
                }
            }
        }
        if !added {
            break;
        }
    }

    // final-and, forward direction first
    for direction in [forward, backward] {
        for (i, j) in direction.iter() {
            if !src_aligned[i] && !tgt_aligned[j] {
                alignment.insert(i, j);
                src_aligned[i] = true;
                tgt_aligned[j] = true;
            }
        }
    }
    alignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ls(s: &str) -> LinkSet {
        s.parse().unwrap()
    }

    #[test]
    fn fixed_point() {
        let a = ls("0-0 1-2 2-1");
        for h in [Heuristic::Intersection, Heuristic::Union, Heuristic::GrowDiagFinalAnd] {
            assert_eq!(symmetrize(&a, &a, h), a);
        }
    }

    #[test]
    fn disjoint_intersection_empty() {
        assert!(symmetrize(&ls("0-0"), &ls("1-1"), Heuristic::Intersection).is_empty());
    }

    #[test]
    fn grow_diag_golden_3x3() {
        // intersection {0-0}; the diagonal neighbour 1-1 grows, then 2-1 and
        // 1-2 attach to it; 2-2 is rejected because row 2 and column 2 are
        // both covered by then
        let fwd = ls("0-0 1-2 2-1");
        let bwd = ls("0-0 1-1 2-2");
        assert_eq!(symmetrize(&fwd, &bwd, Heuristic::GrowDiagFinalAnd), ls("0-0 1-1 1-2 2-1"));
    }

    #[test]
    fn final_and_adds_isolated_link() {
        // 2-2 is not adjacent to anything but both of its words are unaligned
        let fwd = ls("0-0 2-2");
        let bwd = ls("0-0");
        assert_eq!(symmetrize(&fwd, &bwd, Heuristic::GrowDiagFinalAnd), ls("0-0 2-2"));
        // final-and refuses a link whose source word is already aligned
        let fwd = ls("0-0 0-2");
        assert_eq!(symmetrize(&fwd, &bwd, Heuristic::GrowDiagFinalAnd), ls("0-0"));
    }

    proptest! {
        #[test]
        fn bounded_by_intersection_and_union(
            f in proptest::collection::btree_set((0usize..5, 0usize..5), 0..12),
            b in proptest::collection::btree_set((0usize..5, 0usize..5), 0..12),
        ) {
            let f: LinkSet = f.into_iter().collect();
            let b: LinkSet = b.into_iter().collect();
            let inter = f.intersection(&b);
            let uni = f.union(&b);
            for h in [Heuristic::Intersection, Heuristic::Union, Heuristic::GrowDiagFinalAnd] {
                let r = symmetrize(&f, &b, h);
                prop_assert!(inter.is_subset(&r));
                prop_assert!(r.is_subset(&uni));
            }
        }
    }
}
