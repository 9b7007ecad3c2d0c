//! Increasing multi-indices `I = (i_1 < ... < i_k)` over `{0..n}`, stored as
//! bit masks and enumerated in lexicographic order.

/// Largest supported ambient dimension. Masks are `u32` and rank tables are
/// indexed by mask, so this also bounds table sizes at 2^16 entries.
pub const MAX_DIM: usize = 16;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All k-subsets of `{0..n}` in lexicographic order of their increasing
/// index sequences.
pub fn subsets(n: usize, k: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.iter().fold(0u32, |m, &i| m | (1 << i)));
        // advance to the next combination
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] < n - k + pos {
                idx[pos] += 1;
                for j in pos + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Positions of the set bits, ascending.
pub fn members(mask: u32) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

/// Lexicographic rank of `mask` among the subsets of `{0..n}` of the same size.
pub fn rank(n: usize, mask: u32) -> usize {
    let k = mask.count_ones() as usize;
    let mut r = 0;
    let mut prev: isize = -1;
    for (i, c) in members(mask).enumerate() {
        for j in (prev + 1) as usize..c {
            r += binomial(n - 1 - j, k - 1 - i);
        }
        prev = c as isize;
    }
    r
}

/// Sign of `e_A ∧ e_B` relative to `e_{A∪B}`: `(-1)^{#{(a, b) : a > b}}`.
/// `None` when the index sets overlap (the product vanishes).
pub fn wedge_sign(a: u32, b: u32) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    for j in members(b) {
        // members of a strictly above j
        inversions += (a >> (j + 1)).count_ones();
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

/// Cached enumeration of one grade, with an inverse lookup from mask to rank.
#[derive(Debug, Clone)]
pub struct Basis {
    pub dim: usize,
    pub grade: usize,
    pub masks: Vec<u32>,
    rank_of: Vec<u32>,
}

impl Basis {
    pub fn new(dim: usize, grade: usize) -> Self {
        assert!(dim <= MAX_DIM, "ambient dimension {dim} exceeds {MAX_DIM}");
        let masks = subsets(dim, grade);
        let mut rank_of = vec![u32::MAX; 1 << dim];
        for (r, &m) in masks.iter().enumerate() {
            rank_of[m as usize] = r as u32;
        }
        Self {
            dim,
            grade,
            masks,
            rank_of,
        }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn rank(&self, mask: u32) -> usize {
        let r = self.rank_of[mask as usize];
        debug_assert!(r != u32::MAX);
        r as usize
    }
}
