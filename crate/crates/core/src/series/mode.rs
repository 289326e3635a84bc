use serde::{Deserialize, Serialize};

/// Integer Fourier mode `k ∈ ℤⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mode(pub Vec<i32>);

impl Mode {
    pub fn zero(dim: usize) -> Self {
        Mode(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k| = |k₁| + … + |kₙ|`.
    pub fn l1(&self) -> u32 {
        self.0.iter().map(|k| k.unsigned_abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    pub fn neg(&self) -> Self {
        Mode(self.0.iter().map(|k| -k).collect())
    }

    pub fn plus(&self, other: &Self) -> Self {
        Mode(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `⟨k, v⟩`.
    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(&k, &x)| k as f64 * x).sum()
    }

    pub fn component(&self, axis: usize) -> i32 {
        self.0[axis]
    }
}

impl From<Vec<i32>> for Mode {
    fn from(v: Vec<i32>) -> Self {
        Mode(v)
    }
}

/// Every mode of dimension `dim` with `1 ≤ |k| ≤ radius`, in lexicographic order.
pub fn modes_in_ball(dim: usize, radius: u32) -> Vec<Mode> {
    let mut out = Vec::new();
    let mut cur = vec![0i32; dim];
    fill(&mut cur, 0, radius as i32, &mut out);
    out.retain(|m| !m.is_zero());
    out.sort();
    out
}

fn fill(cur: &mut Vec<i32>, axis: usize, budget: i32, out: &mut Vec<Mode>) {
    if axis == cur.len() {
        out.push(Mode(cur.clone()));
        return;
    }
    for k in -budget..=budget {
        cur[axis] = k;
        fill(cur, axis + 1, budget - k.abs(), out);
    }
    cur[axis] = 0;
}

/// Number of modes in `ℤⁿ` with `|k| = r` exactly.
pub fn shell_count(dim: usize, r: u32) -> f64 {
    if r == 0 {
        return 1.0;
    }
    // Σ_i 2^i C(n,i) C(r-1,i-1): choose i non-zero axes, signs, and a composition of r.
    let mut total = 0.0;
    for i in 1..=dim.min(r as usize) {
        total += 2f64.powi(i as i32) * binom(dim as u64, i as u64) * binom(r as u64 - 1, i as u64 - 1);
    }
    total
}

fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_counts_match_shells() {
        for dim in 1..=3 {
            for r in 1..=6u32 {
                let ball = modes_in_ball(dim, r);
                let by_shell: f64 = (1..=r).map(|s| shell_count(dim, s)).sum();
                assert_eq!(ball.len() as f64, by_shell, "dim {dim} r {r}");
            }
        }
        // two-dimensional diamond: 2r² + 2r + 1 points including the origin
        assert_eq!(modes_in_ball(2, 20).len(), 2 * 400 + 40);
    }
}
