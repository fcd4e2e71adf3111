//! Small integer helpers shared by the field and coefficient layers.

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Distinct prime factors in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// `x` reduced into `0..m` for signed input.
pub fn rem(x: i64, m: u64) -> u64 {
    x.rem_euclid(m as i64) as u64
}

/// Multiplicative order of `a` modulo a prime `m`, given the factorization of `m - 1`.
pub fn order_mod(a: u64, m: u64, factors: &[u64]) -> u64 {
    let mut ord = m - 1;
    for &f in factors {
        while ord.is_multiple_of(f) && pow_mod(a, ord / f, m) == 1 {
            ord /= f;
        }
    }
    ord
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_and_factors() {
        let small: Vec<u64> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(prime_factors(7280), vec![2, 5, 7, 13]);
        assert_eq!(prime_factors(1), Vec::<u64>::new());
    }

    #[test]
    fn modular_inverse_round_trip() {
        for a in 1..73 {
            let b = inv_mod(a, 73).unwrap();
            assert_eq!(mul_mod(a, b, 73), 1);
        }
        assert_eq!(inv_mod(6, 9), None);
    }

    #[test]
    fn order_of_primitive_root() {
        let f = prime_factors(72);
        assert_eq!(order_mod(5, 73, &f), 72);
        assert_eq!(order_mod(8, 73, &f), 3);
    }
}
