//! Integer row reduction used to decide whether a set of jump vectors
//! generates the whole lattice Z^d.

/// Reduces `rows` (each of length `d`) to Hermite normal form by unimodular
/// row operations and returns the nonzero rows.
///
/// The result is upper triangular with positive pivots; entries above each
/// pivot are reduced into `[0, pivot)`.
pub fn hermite_normal_form(rows: &[Vec<i64>], d: usize) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&c| c as i128).collect()).collect();
    let mut pivot_row = 0;
    for col in 0..d {
        if pivot_row >= m.len() {
            break;
        }
        // Euclid on the column until a single nonzero entry remains.
        loop {
            let mut best: Option<usize> = None;
            for (i, row) in m.iter().enumerate().skip(pivot_row) {
                if row[col] != 0 && best.map_or(true, |b| row[col].abs() < m[b][col].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            m.swap(pivot_row, b);
            let mut done = true;
            for i in (pivot_row + 1)..m.len() {
                if m[i][col] != 0 {
                    let q = m[i][col].div_euclid(m[pivot_row][col]);
                    let (head, tail) = m.split_at_mut(i);
                    let p = &head[pivot_row];
                    for (x, &y) in tail[0].iter_mut().zip(p.iter()) {
                        *x -= q * y;
                    }
                    if tail[0][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if m[pivot_row][col] == 0 {
            continue;
        }
        if m[pivot_row][col] < 0 {
            for x in m[pivot_row].iter_mut() {
                *x = -*x;
            }
        }
        let p = m[pivot_row][col];
        for i in 0..pivot_row {
            let q = m[i][col].div_euclid(p);
            if q != 0 {
                let (head, tail) = m.split_at_mut(pivot_row);
                for (x, &y) in head[i].iter_mut().zip(tail[0].iter()) {
                    *x -= q * y;
                }
            }
        }
        pivot_row += 1;
    }
    m.truncate(pivot_row);
    m.into_iter()
        .map(|r| r.into_iter().map(|c| c as i64).collect())
        .collect()
}

/// Index of the sublattice spanned by `rows` in Z^d: the product of the HNF
/// pivots when the rank is `d`, `None` when the rank is deficient.
pub fn lattice_index(rows: &[Vec<i64>], d: usize) -> Option<u64> {
    let h = hermite_normal_form(rows, d);
    if h.len() < d {
        return None;
    }
    let mut index: u64 = 1;
    for (i, row) in h.iter().enumerate() {
        index = index.saturating_mul(row[i].unsigned_abs());
    }
    Some(index)
}
