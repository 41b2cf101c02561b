//! Angular-momentum algebra: Wigner 3j symbols, Gaunt-type multipole
//! coefficients and the dipole angular factors.

fn factorial(n: i64) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3) for integer arguments (Racah formula).
pub fn wigner_3j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    if j3 < (j1 - j2).abs() || j3 > j1 + j2 {
        return 0.0;
    }
    if m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    let tri = factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3)
        / factorial(j1 + j2 + j3 + 1);
    let pre = (tri
        * factorial(j1 + m1)
        * factorial(j1 - m1)
        * factorial(j2 + m2)
        * factorial(j2 - m2)
        * factorial(j3 + m3)
        * factorial(j3 - m3))
    .sqrt();
    let kmin = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let kmax = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(j1 + j2 - j3 - k)
            * factorial(j1 - m1 - k)
            * factorial(j2 + m2 - k)
            * factorial(j3 - j2 + m1 + k)
            * factorial(j3 - j1 - m2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / den;
    }
    let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * pre * sum
}

/// c^k(l m, l' m') = ⟨l m|C^k_{m-m'}|l' m'⟩.
pub fn ck(k: usize, l: usize, m: i32, lp: usize, mp: i32) -> f64 {
    let (k, l, lp, m, mp) = (k as i64, l as i64, lp as i64, m as i64, mp as i64);
    if (l + k + lp) % 2 != 0 {
        return 0.0;
    }
    let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * (((2 * l + 1) * (2 * lp + 1)) as f64).sqrt()
        * wigner_3j(l, k, lp, 0, 0, 0)
        * wigner_3j(l, k, lp, -m, m - mp, mp)
}

/// ⟨l+1, m| cos θ |l, m⟩.
pub fn cos_up(l: usize, m: i32) -> f64 {
    let l = l as f64;
    let m = m as f64;
    let num = (l + 1.0) * (l + 1.0) - m * m;
    if num <= 0.0 {
        0.0
    } else {
        (num / ((2.0 * l + 1.0) * (2.0 * l + 3.0))).sqrt()
    }
}
