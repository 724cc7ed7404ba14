//! Longest common subsequence over arbitrary token keys.

/// `t[i * (m + 1) + j]` = LCS length of `a[i..]` and `b[j..]`.
struct SuffixTable {
    cols: usize,
    cells: Vec<u32>,
}

impl SuffixTable {
    fn build<T: PartialEq>(a: &[T], b: &[T]) -> Self {
        let (n, m) = (a.len(), b.len());
        let cols = m + 1;
        let mut cells = vec![0u32; (n + 1) * cols];
        for i in (0..n).rev() {
            for j in (0..m).rev() {
                cells[i * cols + j] = if a[i] == b[j] {
                    cells[(i + 1) * cols + j + 1] + 1
                } else {
                    cells[(i + 1) * cols + j].max(cells[i * cols + j + 1])
                };
            }
        }
        SuffixTable { cols, cells }
    }

    fn at(&self, i: usize, j: usize) -> u32 {
        self.cells[i * self.cols + j]
    }
}

pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    SuffixTable::build(a, b).at(0, 0) as usize
}

/// One longest common subsequence as `(a_index, b_index)` pairs.
///
/// Among all longest alignments this returns the one whose vector of
/// `a` indices is lexicographically smallest, and for that vector the
/// smallest `b` indices.
pub fn lcs_pairs<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let table = SuffixTable::build(a, b);
    let mut remaining = table.at(0, 0);
    let mut pairs = Vec::with_capacity(remaining as usize);
    let (mut i, mut j) = (0, 0);
    while remaining > 0 {
        // For a fixed a-index the earliest b-match leaves the most room, so
        // it is the only candidate worth testing.
        let (ai, bj) = (i..a.len())
            .find_map(|ai| {
                let bj = (j..b.len()).find(|&bj| a[ai] == b[bj])?;
                (table.at(ai + 1, bj + 1) + 1 == remaining).then_some((ai, bj))
            })
            .expect("suffix table promises a completion");
        pairs.push((ai, bj));
        remaining -= 1;
        i = ai + 1;
        j = bj + 1;
    }
    pairs
}

/// A longest common subsequence whose `a` indices span the narrowest window;
/// ties go to the leftmost window, and inside the window [`lcs_pairs`] picks.
pub fn tightest_lcs_pairs<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let target = lcs_length(a, b);
    if target == 0 {
        return Vec::new();
    }
    let m = b.len();
    let mut best: Option<(usize, usize)> = None;
    let mut row = vec![0u32; m + 1];
    let mut next = vec![0u32; m + 1];
    for start in 0..a.len() {
        if !b.contains(&a[start]) {
            continue;
        }
        let limit = best.map_or(a.len(), |(s, e)| (start + (e - s)).min(a.len()));
        row.iter_mut().for_each(|c| *c = 0);
        for (end, token) in a.iter().enumerate().take(limit).skip(start) {
            next[0] = 0;
            for j in 0..m {
                next[j + 1] = if *token == b[j] {
                    row[j] + 1
                } else {
                    row[j + 1].max(next[j])
                };
            }
            std::mem::swap(&mut row, &mut next);
            if row[m] as usize == target {
                best = Some((start, end));
                break;
            }
        }
    }
    let (start, end) = best.expect("a window of the full sequence reaches the target");
    lcs_pairs(&a[start..=end], b)
        .into_iter()
        .map(|(i, j)| (i + start, j))
        .collect()
}
