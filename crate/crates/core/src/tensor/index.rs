//! Index bookkeeping for forms on a 7-dimensional space.
//!
//! A strictly increasing index tuple is stored as a 7-bit mask. Tables list
//! the masks of each degree in lexicographic order of their tuples and map a
//! mask back to its position.

use std::sync::OnceLock;

pub const DIM: usize = 7;

struct Tables {
    masks: [Vec<u8>; DIM + 1],
    position: [u8; 1 << DIM],
    perms: [Vec<(Vec<u8>, i8)>; DIM + 1],
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut masks: [Vec<u8>; DIM + 1] = Default::default();
        for (p, slot) in masks.iter_mut().enumerate() {
            let mut tuples: Vec<Vec<usize>> = Vec::new();
            combos(0, p, &mut Vec::new(), &mut tuples);
            *slot = tuples.iter().map(|t| t.iter().fold(0u8, |m, &i| m | 1 << i)).collect();
        }
        let mut position = [0u8; 1 << DIM];
        for list in &masks {
            for (k, &m) in list.iter().enumerate() {
                position[m as usize] = k as u8;
            }
        }
        let mut perms: [Vec<(Vec<u8>, i8)>; DIM + 1] = Default::default();
        for (p, slot) in perms.iter_mut().enumerate() {
            let mut out = Vec::new();
            permutations(&mut (0..p as u8).collect::<Vec<_>>(), 0, &mut out);
            *slot = out;
        }
        Tables { masks, position, perms }
    })
}

fn combos(start: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if left == 0 {
        out.push(cur.clone());
        return;
    }
    for i in start..=DIM - left {
        cur.push(i);
        combos(i + 1, left - 1, cur, out);
        cur.pop();
    }
}

fn permutations(items: &mut Vec<u8>, k: usize, out: &mut Vec<(Vec<u8>, i8)>) {
    if k == items.len() {
        out.push((items.clone(), perm_sign(items)));
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

fn perm_sign(p: &[u8]) -> i8 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Masks of degree `p` in canonical order.
pub fn masks(p: usize) -> &'static [u8] {
    &tables().masks[p]
}

/// Position of a mask within the canonical list of its degree.
pub fn position(mask: u8) -> usize {
    tables().position[mask as usize] as usize
}

/// All permutations of `0..p` with their signs.
pub fn permutations_of(p: usize) -> &'static [(Vec<u8>, i8)] {
    &tables().perms[p]
}

/// Ascending indices set in a mask.
pub fn indices(mask: u8) -> impl Iterator<Item = usize> {
    (0..DIM).filter(move |i| mask >> i & 1 == 1)
}

pub fn indices_vec(mask: u8) -> Vec<usize> {
    indices(mask).collect()
}

/// Mask and sorting sign of an arbitrary tuple; `None` if an index repeats.
/// Panics on indices outside `0..7`.
pub fn mask_of(idx: &[usize]) -> Option<(u8, i8)> {
    let mut mask = 0u8;
    let mut inversions = 0;
    for (k, &i) in idx.iter().enumerate() {
        assert!(i < DIM, "index {i} out of range");
        if mask >> i & 1 == 1 {
            return None;
        }
        mask |= 1 << i;
        inversions += idx[..k].iter().filter(|&&j| j > i).count();
    }
    Some((mask, if inversions % 2 == 0 { 1 } else { -1 }))
}

/// Sign of concatenating the sorted tuples of two disjoint masks.
pub fn wedge_sign(a: u8, b: u8) -> i8 {
    let mut inversions = 0;
    for j in indices(b) {
        inversions += (a >> (j + 1)).count_ones();
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

pub const FULL: u8 = (1 << DIM) - 1;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_are_binomial() {
        for p in 0..=DIM {
            assert_eq!(masks(p).len(), binom(DIM, p));
            for (k, &m) in masks(p).iter().enumerate() {
                assert_eq!(position(m), k);
                assert_eq!(m.count_ones() as usize, p);
            }
        }
    }

    #[test]
    fn lexicographic_order() {
        let first: Vec<_> = masks(3)[..3].iter().map(|&m| indices_vec(m)).collect();
        assert_eq!(first, vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]]);
        assert_eq!(indices_vec(*masks(3).last().unwrap()), vec![4, 5, 6]);
    }

    #[test]
    fn sorting_signs() {
        assert_eq!(mask_of(&[0, 1, 2]), Some((0b111, 1)));
        assert_eq!(mask_of(&[1, 0, 2]), Some((0b111, -1)));
        assert_eq!(mask_of(&[2, 0, 1]), Some((0b111, 1)));
        assert_eq!(mask_of(&[2, 2]), None);
        assert_eq!(wedge_sign(0b10, 0b01), -1);
        assert_eq!(wedge_sign(0b01, 0b10), 1);
        assert_eq!(permutations_of(4).len(), 24);
        assert_eq!(permutations_of(4).iter().map(|p| p.1 as i32).sum::<i32>(), 0);
    }
}
