//! Minimum-weight bipartite matching (Kuhn-Munkres with potentials).

/// Dense row-major cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transposed(&self) -> Self {
        let mut t = Self::filled(self.cols, self.rows, 0.0);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchResult {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
    pub unmatched_rows: Vec<usize>,
}

impl MatchResult {
    pub fn col_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|(r, _)| *r == row).map(|&(_, c)| c)
    }
}

/// Minimum total cost matching of size `min(rows, cols)`.
///
/// Rectangular inputs are solved directly on the smaller side, which gives
/// the same optimum as padding with equal-weight dummy rows or columns.
pub fn min_weight_matching(m: &CostMatrix) -> MatchResult {
    if m.rows == 0 || m.cols == 0 {
        return MatchResult { pairs: Vec::new(), total_cost: 0.0, unmatched_rows: (0..m.rows).collect() };
    }
    let mut pairs: Vec<(usize, usize)> = if m.rows <= m.cols {
        hungarian(m).into_iter().enumerate().collect()
    } else {
        hungarian(&m.transposed()).into_iter().enumerate().map(|(c, r)| (r, c)).collect()
    };
    pairs.sort_unstable();
    let total_cost = pairs.iter().map(|&(r, c)| m.get(r, c)).sum();
    let mut matched = vec![false; m.rows];
    for &(r, _) in &pairs {
        matched[r] = true;
    }
    let unmatched_rows = (0..m.rows).filter(|&r| !matched[r]).collect();
    MatchResult { pairs, total_cost, unmatched_rows }
}

/// Shortest augmenting paths with row/column potentials; needs
/// `rows <= cols`. Returns the column assigned to each row.
///
/// Within one augmentation the potential updates are deferred: `minv`
/// holds slack plus the running shift, and used columns settle their
/// share of the shift when the path is found.
fn hungarian(m: &CostMatrix) -> Vec<usize> {
    let (n, k) = (m.rows, m.cols);
    // 1-based with a virtual column 0, as in the classical formulation
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    let mut minv = vec![f64::INFINITY; k + 1];
    let mut used = vec![false; k + 1];
    let mut used_at = vec![0.0f64; k + 1];
    let mut used_list = Vec::with_capacity(k + 1);
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        used_list.clear();
        let mut shift = 0.0;
        loop {
            used[j0] = true;
            used_at[j0] = shift;
            used_list.push(j0);
            let i0 = p[j0];
            let base = shift - u[i0];
            let row = m.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] + base - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                // on equal slack a free column ends the path at once
                if minv[j] < delta || (minv[j] == delta && p[j] == 0 && p[j1] != 0) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            shift = delta;
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        for &j in &used_list {
            let d = shift - used_at[j];
            u[p[j]] += d;
            v[j] -= d;
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![usize::MAX; n];
    for j in 1..=k {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
