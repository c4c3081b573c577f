//! Uniform-cell spatial hash for fixed-radius neighbor queries.

use std::collections::HashMap;

pub struct CellIndex<'a> {
    dim: usize,
    cell: f64,
    points: &'a [f64],
    buckets: HashMap<u64, Vec<usize>>,
}

#[inline]
fn key_of(coords: &[i64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &c in coords {
        h = (h ^ c as u64).wrapping_mul(0x0000_0100_0000_01B3).rotate_left(17);
    }
    h
}

impl<'a> CellIndex<'a> {
    pub fn new(dim: usize, points: &'a [f64], cell: f64) -> Self {
        let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
        let n = points.len() / dim;
        let mut c = vec![0i64; dim];
        for i in 0..n {
            for a in 0..dim {
                c[a] = (points[i * dim + a] / cell).floor() as i64;
            }
            buckets.entry(key_of(&c)).or_default().push(i);
        }
        Self {
            dim,
            cell,
            points,
            buckets,
        }
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Calls `f(j, |x_j - x|²)` for every point with `|x_j - x| < radius`
    /// (or `≤ radius` when `closed`). Each point is visited at most once.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, x: &[f64], radius: f64, closed: bool, mut f: F) {
        let d = self.dim;
        let reach = (radius / self.cell).ceil() as i64;
        let base: Vec<i64> = x.iter().map(|v| (v / self.cell).floor() as i64).collect();
        let mut off = vec![-reach; d];
        let mut c = vec![0i64; d];
        let r2 = radius * radius;
        let mut seen_keys: Vec<u64> = Vec::new();
        'cells: loop {
            for a in 0..d {
                c[a] = base[a] + off[a];
            }
            let key = key_of(&c);
            // Distinct coordinates can collide on a key; visit each bucket once.
            if !seen_keys.contains(&key) {
                seen_keys.push(key);
                if let Some(bucket) = self.buckets.get(&key) {
                    for &j in bucket {
                        let p = self.point(j);
                        let mut s = 0.0;
                        for a in 0..d {
                            s += (p[a] - x[a]) * (p[a] - x[a]);
                        }
                        if s < r2 || (closed && s == r2) {
                            f(j, s);
                        }
                    }
                }
            }
            let mut a = d;
            loop {
                if a == 0 {
                    break 'cells;
                }
                a -= 1;
                if off[a] < reach {
                    off[a] += 1;
                    continue 'cells;
                }
                off[a] = -reach;
            }
        }
    }
}
