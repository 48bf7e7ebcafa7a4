//! gcd/lcm, extended Euclid, two-modulus CRT and discrete-torus coverage.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

/// Returns `(g, s, t)` with `a s + b t = g = gcd(a, b)`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// `t = residue_a (mod modulus_n)`, `t = residue_b (mod modulus_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CongruenceSystem {
    residue_a: u64,
    modulus_n: u64,
    residue_b: u64,
    modulus_p: u64,
}

impl CongruenceSystem {
    /// Residues are reduced modulo their moduli.
    pub fn new(residue_a: u64, modulus_n: u64, residue_b: u64, modulus_p: u64) -> Result<Self> {
        if modulus_n == 0 || modulus_p == 0 {
            return Err(Error::Precondition("moduli must be >= 1".into()));
        }
        Ok(Self {
            residue_a: residue_a % modulus_n,
            modulus_n,
            residue_b: residue_b % modulus_p,
            modulus_p,
        })
    }

    pub fn residues(&self) -> (u64, u64) {
        (self.residue_a, self.residue_b)
    }

    pub fn moduli(&self) -> (u64, u64) {
        (self.modulus_n, self.modulus_p)
    }
}

/// Least `t >= 0` solving the system, or `None` when the residues disagree
/// modulo `gcd(n, p)`. Non-coprime moduli are supported.
pub fn crt_solve(sys: &CongruenceSystem) -> Option<u64> {
    let (a, n) = (sys.residue_a as i128, sys.modulus_n as i128);
    let (b, p) = (sys.residue_b as i128, sys.modulus_p as i128);
    let (g, s, _) = ext_gcd(n, p);
    if (b - a) % g != 0 {
        return None;
    }
    // t = a + n k with n k = b - a (mod p)  =>  k = s (b - a)/g (mod p/g)
    let p_g = p / g;
    let k = (s * ((b - a) / g)).rem_euclid(p_g);
    let l = n * p_g;
    Some((a + n * k).rem_euclid(l) as u64)
}

/// Image of the winding `t -> (t mod n, t mod p)` on the discrete torus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub n: u64,
    pub p: u64,
    pub covered: BTreeSet<(u64, u64)>,
    pub uncovered: BTreeSet<(u64, u64)>,
    pub surjective: bool,
}

impl CoverageReport {
    /// Uncovered pairs as `(channel, phase)` entries, channel 1-based: the
    /// switch never exposes `x_channel(phase)`.
    pub fn uncovered_entries(&self) -> Vec<(usize, usize)> {
        self.uncovered
            .iter()
            .map(|&(i, j)| (i as usize + 1, j as usize))
            .collect()
    }
}

/// Enumerates `t` over one full period `lcm(n, p)` of the winding.
pub fn winding_coverage(n: u64, p: u64) -> Result<CoverageReport> {
    if n == 0 || p == 0 {
        return Err(Error::Precondition("n and p must be >= 1".into()));
    }
    let covered: BTreeSet<(u64, u64)> = (0..lcm(n, p)).map(|t| (t % n, t % p)).collect();
    let uncovered: BTreeSet<(u64, u64)> = (0..n)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .filter(|pair| !covered.contains(pair))
        .collect();
    let surjective = uncovered.is_empty();
    Ok(CoverageReport {
        n,
        p,
        covered,
        uncovered,
        surjective,
    })
}

/// The periodic switch on `n` channels is lossless for `p`-periodic signals
/// iff `n` and `p` are coprime.
pub fn switch_losslessness(n: u64, p: u64) -> Result<bool> {
    if n == 0 || p == 0 {
        return Err(Error::Precondition("n and p must be >= 1".into()));
    }
    Ok(gcd(n, p) == 1)
}

/// Verdict for a sufficiently rich `m`-periodic mixer: lossless iff
/// `m >= n gcd(m, p)`. Meaningless unless richness holds.
pub fn general_losslessness(n: u64, m: u64, p: u64) -> Result<bool> {
    if n == 0 || p == 0 {
        return Err(Error::Precondition("n and p must be >= 1".into()));
    }
    if m < n {
        return Err(Error::Precondition(format!(
            "mixer period m = {m} is below the dimension n = {n}"
        )));
    }
    Ok(m >= n * gcd(m, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_gcd(a: u64, b: u64) -> u64 {
        (1..=a.min(b))
            .rev()
            .find(|d| a.is_multiple_of(*d) && b.is_multiple_of(*d))
            .unwrap()
    }

    fn scan_crt(a: u64, n: u64, b: u64, p: u64) -> Option<u64> {
        (0..lcm(n, p)).find(|t| t % n == a % n && t % p == b % p)
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(3, 5), 1);
        assert_eq!(gcd(2, 4), 2);
        for a in 1..=50 {
            for b in 1..=50 {
                assert_eq!(gcd(a, b), naive_gcd(a, b), "gcd({a},{b})");
                assert_eq!(gcd(a, b) * lcm(a, b), a * b);
            }
        }
    }

    #[test]
    fn rotor_schedule() {
        let times: Vec<u64> = (0..5)
            .map(|i| crt_solve(&CongruenceSystem::new(i, 5, 0, 4).unwrap()).unwrap())
            .collect();
        assert_eq!(times, vec![0, 16, 12, 8, 4]);
        assert_eq!(crt_solve(&CongruenceSystem::new(0, 6, 0, 9).unwrap()), Some(0));
    }

    #[test]
    fn crt_matches_exhaustive_scan() {
        for n in 1..=10 {
            for p in 1..=10 {
                for a in 0..n {
                    for b in 0..p {
                        let sys = CongruenceSystem::new(a, n, b, p).unwrap();
                        assert_eq!(crt_solve(&sys), scan_crt(a, n, b, p), "{a} mod {n}, {b} mod {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn non_coprime_conflict() {
        // t = 0 mod 2 and t = 1 mod 4 cannot both hold
        assert_eq!(crt_solve(&CongruenceSystem::new(0, 2, 1, 4).unwrap()), None);
        assert_eq!(crt_solve(&CongruenceSystem::new(1, 2, 3, 4).unwrap()), Some(3));
        assert!(CongruenceSystem::new(0, 0, 1, 4).is_err());
    }

    #[test]
    fn coverage_examples() {
        let r = winding_coverage(3, 5).unwrap();
        assert!(r.surjective);
        assert_eq!(r.covered.len(), 15);

        let r = winding_coverage(2, 4).unwrap();
        assert!(!r.surjective);
        assert!(r.uncovered.contains(&(0, 1)) && r.uncovered.contains(&(0, 3)));
        assert_eq!(r.uncovered_entries(), vec![(1, 1), (1, 3), (2, 0), (2, 2)]);

        for p in 1..=20 {
            assert!(winding_coverage(1, p).unwrap().surjective);
        }
    }

    #[test]
    fn winding_surjective_iff_coprime() {
        for n in 1..=32 {
            for p in 1..=64 {
                assert_eq!(
                    winding_coverage(n, p).unwrap().surjective,
                    gcd(n, p) == 1,
                    "n={n} p={p}"
                );
            }
        }
    }

    #[test]
    fn switch_verdicts() {
        assert!(switch_losslessness(3, 5).unwrap());
        assert!(!switch_losslessness(2, 4).unwrap());
        for n in 1..=12 {
            for p in 1..=12 {
                assert_eq!(
                    switch_losslessness(n, p).unwrap(),
                    winding_coverage(n, p).unwrap().surjective
                );
            }
        }
    }

    #[test]
    fn general_verdicts() {
        for n in 1..=6 {
            for p in 1..=12 {
                if gcd(n, p) == 1 {
                    // met with equality
                    assert!(general_losslessness(n, n, p).unwrap());
                }
            }
        }
        assert!(general_losslessness(2, 4, 6).unwrap());
        assert!(!general_losslessness(2, 4, 4).unwrap());
        assert!(matches!(
            general_losslessness(3, 2, 5),
            Err(Error::Precondition(_))
        ));
    }

    proptest! {
        #[test]
        fn crt_solution_is_minimal(n in 1u64..40, p in 1u64..40, a in 0u64..40, b in 0u64..40) {
            let sys = CongruenceSystem::new(a, n, b, p).unwrap();
            match crt_solve(&sys) {
                Some(t) => {
                    prop_assert_eq!(t % n, a % n);
                    prop_assert_eq!(t % p, b % p);
                    prop_assert!((0..t).all(|s| s % n != a % n || s % p != b % p));
                }
                None => prop_assert!((a % n) % gcd(n, p) != (b % p) % gcd(n, p)),
            }
        }

        #[test]
        fn ext_gcd_bezout(a in 1i128..10_000, b in 1i128..10_000) {
            let (g, s, t) = ext_gcd(a, b);
            prop_assert_eq!(a * s + b * t, g);
            prop_assert_eq!(g as u64, gcd(a as u64, b as u64));
        }
    }
}
