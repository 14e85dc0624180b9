//! Shared oracles for the integration suites. Everything here is
//! deliberately independent of the library's fast paths: plain dense
//! elimination, exhaustive KKT enumeration, and a bare LCG stream.
#![allow(clippy::needless_range_loop)]

/// Deterministic pseudo-random stream on [-1, 1).
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    /// Uniform on [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (self.next_f64() + 1.0) / 2.0 * (hi - lo)
    }

}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        m.swap(k, p);
        x.swap(k, p);
        assert!(m[k][k].abs() > 1e-12, "oracle: singular matrix");
        for r in (k + 1)..n {
            let f = m[r][k] / m[k][k];
            for c in k..n {
                m[r][c] -= f * m[k][c];
            }
            x[r] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        for c in (k + 1)..n {
            let xc = x[c];
            x[k] -= m[k][c] * xc;
        }
        x[k] /= m[k][k];
    }
    x
}

/// Brute-force Euclidean projection onto `{w : Σ w ≤ d, w ≥ 0}` by
/// enumerating KKT support sets. Exact for small n.
pub fn simplex_projection_oracle(y: &[f64], d: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n <= 16, "oracle is exponential in n");
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |w: Vec<f64>| {
        let feasible = w.iter().all(|&v| v >= -1e-12)
            && w.iter().sum::<f64>() <= d + 1e-9 * d.max(1.0);
        if !feasible {
            return;
        }
        let dist: f64 = w.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
            best = Some((dist, w));
        }
    };
    let clamped: Vec<f64> = y.iter().map(|&v| v.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= d {
        consider(clamped);
    }
    for mask in 1usize..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let sum: f64 = support.iter().map(|&i| y[i]).sum();
        let tau = (sum - d) / support.len() as f64;
        if tau < -1e-12 {
            continue;
        }
        let mut w = vec![0.0; n];
        let mut ok = true;
        for &i in &support {
            w[i] = y[i] - tau;
            if w[i] < -1e-12 {
                ok = false;
                break;
            }
        }
        if ok && (0..n).all(|i| support.contains(&i) || y[i] - tau <= 1e-12) {
            consider(w);
        }
    }
    best.expect("a candidate always exists").1
}
