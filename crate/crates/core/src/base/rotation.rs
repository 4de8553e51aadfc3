//! Rotation numbers with exact arithmetic on the lattice `ℤ·2^{−S} + ℤ·α`.

use std::cmp::Ordering;

use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Dyadic resolution exponent of exact points.
pub const DYADIC_BITS: u32 = 32;
pub const DYADIC_ONE: i128 = 1i128 << DYADIC_BITS;

/// `(p + q·√d) / r` with `r > 0`, `q ≠ 0` and `d > 1` not a perfect square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticIrrational {
    pub p: i64,
    pub q: i64,
    pub d: i64,
    pub r: i64,
}

impl QuadraticIrrational {
    pub fn new(p: i64, q: i64, d: i64, r: i64) -> Result<Self> {
        let root = (d as f64).sqrt().round() as i64;
        if d <= 1 || root * root == d || q == 0 || r == 0 {
            return Err(LabError::Invalid(format!(
                "({p} + {q}·√{d})/{r} is not a quadratic irrational"
            )));
        }
        let (p, q, r) = if r < 0 { (-p, -q, -r) } else { (p, q, r) };
        Ok(QuadraticIrrational { p, q, d, r })
    }

    /// `(√5 − 1)/2`.
    pub fn golden() -> Self {
        QuadraticIrrational { p: -1, q: 1, d: 5, r: 2 }
    }

    /// `√2 − 1`.
    pub fn silver() -> Self {
        QuadraticIrrational { p: -1, q: 1, d: 2, r: 1 }
    }

    pub fn to_float(&self, prec: u32) -> Float {
        let mut v = Float::with_val(prec, self.d);
        v.sqrt_mut();
        v *= self.q;
        v += self.p;
        v /= self.r;
        v
    }

    /// Sign of `(u + w·√d)`.
    fn sign_of(&self, u: &Integer, w: &Integer) -> Ordering {
        let su = u.cmp0();
        let sw = w.cmp0();
        match (su, sw) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (a, b) if a == b => a,
            (a, _) => {
                let uu = Integer::from(u * u);
                let ww = Integer::from(w * w) * self.d;
                if uu > ww {
                    a
                } else {
                    a.reverse()
                }
            }
        }
    }

    /// Sign of `n·2^{−S} + k·self`.
    pub fn sign_lattice(&self, n: i128, k: i64) -> Ordering {
        if let Some(s) = self.sign_lattice_small(n, k) {
            return s;
        }
        let scale = Integer::from(DYADIC_ONE);
        let u = Integer::from(n) * self.r + Integer::from(k) * self.p * &scale;
        let w = Integer::from(k) * self.q * scale;
        self.sign_of(&u, &w)
    }

    fn sign_lattice_small(&self, n: i128, k: i64) -> Option<Ordering> {
        let k = k as i128;
        let u = n.checked_mul(self.r as i128)?.checked_add(k.checked_mul(self.p as i128)?.checked_mul(DYADIC_ONE)?)?;
        let w = k.checked_mul(self.q as i128)?.checked_mul(DYADIC_ONE)?;
        let su = u.cmp(&0);
        let sw = w.cmp(&0);
        Some(match (su, sw) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (a, b) if a == b => a,
            (a, _) => {
                let uu = u.checked_mul(u)?;
                let ww = w.checked_mul(w)?.checked_mul(self.d as i128)?;
                if uu > ww {
                    a
                } else {
                    a.reverse()
                }
            }
        })
    }

    /// Continued-fraction partial quotients `[a0; a1, a2, …]`, exact.
    pub fn partial_quotients(&self, depth: usize) -> Vec<u64> {
        // x = (P + √D)/Q with Q | D − P²
        let qq = self.q as i128;
        let rr = self.r as i128;
        let mut p = self.p as i128;
        let mut big_d = qq * qq * self.d as i128;
        let mut q = rr;
        if qq < 0 {
            // (p − √D)/r = (−p + √D)/(−r)
            p = -p;
            q = -q;
        }
        if (big_d - p * p) % q != 0 {
            p *= q.abs();
            big_d *= q * q;
            q *= q.abs();
        }
        let mut out = Vec::with_capacity(depth);
        for _ in 0..depth {
            // floor((p + √D)/q), exact
            let approx = ((p as f64 + (big_d as f64).sqrt()) / q as f64).floor() as i128;
            let mut a = approx;
            let value_minus = |a: i128| -> Ordering {
                // sign of (p − a q + √D)/q
                let u = p - a * q;
                let s = if u >= 0 || u * u < big_d {
                    Ordering::Greater
                } else if u * u == big_d {
                    Ordering::Equal
                } else {
                    Ordering::Less
                };
                if q > 0 { s } else { s.reverse() }
            };
            while value_minus(a) == Ordering::Less {
                a -= 1;
            }
            while value_minus(a + 1) != Ordering::Less {
                a += 1;
            }
            out.push(a.max(0) as u64);
            p = a * q - p;
            q = (big_d - p * p) / q;
            if q == 0 {
                break;
            }
        }
        out
    }
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = 134_217_729.0 * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// `a·b = p + e` exactly.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

/// A rotation number `α ∈ (0, 1)` with an `f64` double-word value and an optional exact tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationNumber {
    exact: Option<QuadraticIrrational>,
    hi: f64,
    lo: f64,
}

impl RotationNumber {
    pub fn quadratic(q: QuadraticIrrational) -> Result<Self> {
        let v = q.to_float(256);
        let hi = v.to_f64();
        let lo = (v - hi).to_f64();
        if !(hi > 0.0 && hi < 1.0) {
            return Err(LabError::Invalid(format!("rotation number {hi} outside (0, 1)")));
        }
        Ok(RotationNumber { exact: Some(q), hi, lo })
    }

    pub fn golden() -> Self {
        RotationNumber::quadratic(QuadraticIrrational::golden()).expect("valid")
    }

    pub fn silver() -> Self {
        RotationNumber::quadratic(QuadraticIrrational::silver()).expect("valid")
    }

    pub fn float(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(LabError::Invalid(format!("rotation number {alpha} outside (0, 1)")));
        }
        Ok(RotationNumber { exact: None, hi: alpha, lo: 0.0 })
    }

    pub fn value(&self) -> f64 {
        self.hi
    }

    pub fn exact(&self) -> Option<&QuadraticIrrational> {
        self.exact.as_ref()
    }

    /// `x + k·α` reduced to `[0, 1)`, accurate to a few ulps for any `k`.
    #[inline]
    pub fn advance(&self, x: f64, k: i64) -> f64 {
        let kf = k as f64;
        let (prod, err) = two_prod(kf, self.hi);
        let whole = prod.floor();
        let v = (prod - whole) + x + (err + kf * self.lo);
        let v = v - v.floor();
        if v >= 1.0 {
            0.0
        } else {
            v
        }
    }

    /// Sign of the lattice value `n·2^{−S} + k·α`.
    pub fn sign(&self, n: i128, k: i64) -> Ordering {
        match &self.exact {
            Some(q) => q.sign_lattice(n, k),
            None => {
                let whole = n.div_euclid(DYADIC_ONE);
                let frac = n.rem_euclid(DYADIC_ONE) as f64 / DYADIC_ONE as f64;
                let kf = k as f64;
                let (prod, err) = two_prod(kf, self.hi);
                let pf = prod.floor();
                let v = (whole as f64 + pf) + ((prod - pf) + frac + err + kf * self.lo);
                v.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
            }
        }
    }

    /// Partial quotients to the given depth (exact for quadratic irrationals).
    pub fn partial_quotients(&self, depth: usize) -> Vec<u64> {
        match &self.exact {
            Some(q) => q.partial_quotients(depth),
            None => {
                let mut out = Vec::new();
                let mut x = self.hi;
                for _ in 0..depth {
                    let a = x.floor();
                    out.push(a as u64);
                    let f = x - a;
                    if f < 1e-12 {
                        break;
                    }
                    x = 1.0 / f;
                }
                out
            }
        }
    }

    /// Convergent denominators `q_0 = 1, q_1 = a_1, …` of `α`.
    pub fn convergent_denominators(&self, depth: usize) -> Vec<u64> {
        let a = self.partial_quotients(depth + 1);
        let mut out = Vec::new();
        let (mut q_prev, mut q) = (0u64, 1u64);
        out.push(q);
        for &ai in a.iter().skip(1) {
            let next = ai.saturating_mul(q).saturating_add(q_prev);
            q_prev = q;
            q = next;
            out.push(q);
        }
        out
    }
}

/// A point `n·2^{−S} + k·α` of the rotation lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QNum {
    pub n: i128,
    pub k: i64,
}

impl QNum {
    pub const ZERO: QNum = QNum { n: 0, k: 0 };
    pub const ONE: QNum = QNum { n: DYADIC_ONE, k: 0 };

    pub fn dyadic(n: i128) -> QNum {
        QNum { n, k: 0 }
    }

    /// Nearest lattice point `n·2^{−S}` to a real number.
    pub fn from_f64(x: f64) -> QNum {
        QNum {
            n: (x * DYADIC_ONE as f64).round() as i128,
            k: 0,
        }
    }

    pub fn add(self, o: QNum) -> QNum {
        QNum { n: self.n + o.n, k: self.k + o.k }
    }

    pub fn sub(self, o: QNum) -> QNum {
        QNum { n: self.n - o.n, k: self.k - o.k }
    }

    pub fn shift(self, j: i64) -> QNum {
        QNum { n: self.n, k: self.k + j }
    }

    pub fn plus_int(self, m: i64) -> QNum {
        QNum { n: self.n + m as i128 * DYADIC_ONE, k: self.k }
    }
}

impl RotationNumber {
    pub fn cmp_q(&self, a: QNum, b: QNum) -> Ordering {
        let d = a.sub(b);
        self.sign(d.n, d.k)
    }

    /// Real value of a lattice point (not reduced).
    pub fn q_value(&self, a: QNum) -> f64 {
        let whole = a.n.div_euclid(DYADIC_ONE) as f64;
        let frac = a.n.rem_euclid(DYADIC_ONE) as f64 / DYADIC_ONE as f64;
        let kf = a.k as f64;
        whole + frac + kf * self.hi + kf * self.lo
    }

    /// Exact `⌊a⌋`.
    pub fn q_floor(&self, a: QNum) -> i64 {
        let mut f = self.q_value(a).floor() as i64;
        while self.sign(a.n - f as i128 * DYADIC_ONE, a.k) == Ordering::Less {
            f -= 1;
        }
        while self.sign(a.n - (f as i128 + 1) * DYADIC_ONE, a.k) != Ordering::Less {
            f += 1;
        }
        f
    }

    /// Representative in `[0, 1)`.
    pub fn q_reduce(&self, a: QNum) -> QNum {
        a.plus_int(-self.q_floor(a))
    }

    /// Value in `[0, 1)` of the reduced point.
    pub fn q_position(&self, a: QNum) -> f64 {
        let r = self.q_reduce(a);
        let v = self.advance((r.n as f64) / DYADIC_ONE as f64, r.k);
        if v >= 1.0 {
            0.0
        } else {
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_and_silver_quotients() {
        let g = RotationNumber::golden();
        assert_eq!(g.partial_quotients(30), [vec![0], vec![1; 29]].concat());
        let s = RotationNumber::silver();
        assert_eq!(s.partial_quotients(30), [vec![0], vec![2; 29]].concat());
        let q = RotationNumber::quadratic(QuadraticIrrational::new(0, 1, 7, 3).unwrap()).unwrap();
        let pq = q.partial_quotients(12);
        let mut x = 7f64.sqrt() / 3.0;
        for &a in pq.iter().take(8) {
            assert_eq!(a, x.floor() as u64);
            x = 1.0 / (x - x.floor());
        }
    }

    #[test]
    fn exact_sign_matches_float_away_from_zero() {
        let g = RotationNumber::golden();
        for k in [-5i64, -1, 0, 1, 3, 1000, -123456] {
            for n in [-(3 * DYADIC_ONE), -1, 0, 1, DYADIC_ONE / 3, 5 * DYADIC_ONE] {
                let v = n as f64 / DYADIC_ONE as f64 + k as f64 * g.value();
                if v.abs() > 1e-6 {
                    assert_eq!(g.sign(n, k), v.partial_cmp(&0.0).unwrap());
                }
            }
        }
        assert_eq!(g.sign(0, 0), Ordering::Equal);
    }

    #[test]
    fn huge_coefficients_use_big_integers() {
        let g = RotationNumber::golden();
        let k = 3_000_000_000_000i64;
        let x = QNum { n: 0, k };
        let f = g.q_floor(x);
        let approx = k as f64 * g.value();
        assert!((f as f64 - approx.floor()).abs() <= 1.0);
        let r = g.q_reduce(x);
        assert_eq!(g.sign(r.n, r.k), Ordering::Greater);
        assert_eq!(g.cmp_q(r, QNum::ONE), Ordering::Less);
    }

    #[test]
    fn advance_is_accurate_for_large_k() {
        let g = RotationNumber::golden();
        let exact = g.exact().unwrap().to_float(200);
        for k in [1i64, 1_000_000, 987_654_321] {
            let v = Float::with_val(200, &exact * k);
            let frac = Float::with_val(200, &v - v.clone().floor()).to_f64();
            assert!((g.advance(0.0, k) - frac).abs() < 1e-15, "k={k}");
        }
    }
}
