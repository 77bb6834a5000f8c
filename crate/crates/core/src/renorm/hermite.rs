//! Hermite polynomials with variance parameter, `e^{tx - vt²/2} = Σ_k H_k(x; v) t^k / k!`.

/// `H_k(x; v)` by the recurrence `H_{k+1} = x H_k - k v H_{k-1}`.
pub fn hermite(k: usize, x: f64, var: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if k == 0 {
        return h0;
    }
    for n in 1..k {
        let h2 = x * h1 - n as f64 * var * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `H_0(x; v), ..., H_kmax(x; v)` into `out[..=kmax]`.
pub fn hermite_all(kmax: usize, x: f64, var: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if kmax == 0 {
        return;
    }
    out[1] = x;
    for n in 1..kmax {
        out[n + 1] = x * out[n] - n as f64 * var * out[n - 1];
    }
}

/// Coefficients of `H_k(x; v)` in powers of `x` (`out[p]` multiplies `x^p`).
pub fn hermite_coeffs(k: usize, var: f64) -> Vec<f64> {
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for n in 1..k {
        let mut next = vec![0.0; n + 2];
        for (p, c) in cur.iter().enumerate() {
            next[p + 1] += c;
        }
        for (p, c) in prev.iter().enumerate() {
            next[p] -= n as f64 * var * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// `(2j-1)!! (-v)^j`, the value `H_{2j}(0; v)`.
pub fn hermite_at_zero(k: usize, var: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let j = k / 2;
    let mut df = 1.0;
    let mut t = 2 * j as i64 - 1;
    while t > 1 {
        df *= t as f64;
        t -= 2;
    }
    df * (-var).powi(j as i32)
}
