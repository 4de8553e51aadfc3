//! Extended-precision 2×2 products and hexadecimal float text.

use rug::float::Round;
use rug::{Assign, Float, Integer};

use crate::error::{LabError, Result};
use crate::sl2::Mat2;

/// Entries `[a, b, c, d]` held at a fixed binary precision.
#[derive(Clone, Debug, PartialEq)]
pub struct HpMat2 {
    e: [Float; 4],
}

impl HpMat2 {
    pub fn identity(prec: u32) -> HpMat2 {
        HpMat2 {
            e: [
                Float::with_val(prec, 1),
                Float::with_val(prec, 0),
                Float::with_val(prec, 0),
                Float::with_val(prec, 1),
            ],
        }
    }

    pub fn from_mat(m: &Mat2, prec: u32) -> HpMat2 {
        let [a, b, c, d] = m.entries();
        HpMat2 {
            e: [
                Float::with_val(prec, a),
                Float::with_val(prec, b),
                Float::with_val(prec, c),
                Float::with_val(prec, d),
            ],
        }
    }

    pub fn from_entries(e: [Float; 4]) -> HpMat2 {
        HpMat2 { e }
    }

    pub fn entries(&self) -> &[Float; 4] {
        &self.e
    }

    pub fn prec(&self) -> u32 {
        self.e[0].prec()
    }

    /// `self ← m·self`, one rounding per product and per sum.
    pub fn push(&mut self, m: &Mat2) {
        let [a, b, c, d] = m.entries();
        let prec = self.prec();
        let mut t0 = Float::with_val(prec, &self.e[0] * a);
        t0 += Float::with_val(prec, &self.e[2] * b);
        let mut t1 = Float::with_val(prec, &self.e[1] * a);
        t1 += Float::with_val(prec, &self.e[3] * b);
        let mut t2 = Float::with_val(prec, &self.e[0] * c);
        t2 += Float::with_val(prec, &self.e[2] * d);
        let mut t3 = Float::with_val(prec, &self.e[1] * c);
        t3 += Float::with_val(prec, &self.e[3] * d);
        self.e = [t0, t1, t2, t3];
    }

    /// `self ← other·self`.
    pub fn push_hp(&mut self, other: &HpMat2) {
        let prec = self.prec();
        let o = &other.e;
        let s = &self.e;
        let mut t0 = Float::with_val(prec, &o[0] * &s[0]);
        t0 += Float::with_val(prec, &o[1] * &s[2]);
        let mut t1 = Float::with_val(prec, &o[0] * &s[1]);
        t1 += Float::with_val(prec, &o[1] * &s[3]);
        let mut t2 = Float::with_val(prec, &o[2] * &s[0]);
        t2 += Float::with_val(prec, &o[3] * &s[2]);
        let mut t3 = Float::with_val(prec, &o[2] * &s[1]);
        t3 += Float::with_val(prec, &o[3] * &s[3]);
        self.e = [t0, t1, t2, t3];
    }

    /// Natural log of the operator norm, rounded to `f64`.
    pub fn log_norm(&self) -> f64 {
        let prec = self.prec();
        let [a, b, c, d] = &self.e;
        let p = {
            let s = Float::with_val(prec, a + d);
            let t = Float::with_val(prec, b - c);
            Float::with_val(prec, s.hypot_ref(&t))
        };
        let q = {
            let s = Float::with_val(prec, a - d);
            let t = Float::with_val(prec, b + c);
            Float::with_val(prec, s.hypot_ref(&t))
        };
        let mut sigma = Float::with_val(prec, &p + &q);
        sigma /= 2;
        if sigma.is_zero() {
            return f64::NEG_INFINITY;
        }
        sigma.ln().to_f64()
    }

    /// Natural log of the Frobenius norm, rounded up to the next `f64`.
    pub fn log_frobenius(&self) -> f64 {
        let prec = self.prec();
        let mut s = Float::with_val(prec, 0);
        for v in &self.e {
            s += Float::with_val(prec, v.square_ref());
        }
        let l: Float = Float::with_val(prec, s.ln_ref()) / 2u32;
        l.to_f64_round(Round::Up)
    }

    /// Operator-norm distance to an `f64` matrix, rounded to `f64`.
    pub fn distance_to(&self, m: &Mat2) -> f64 {
        let prec = self.prec();
        let ent = m.entries();
        let diff: Vec<f64> = self
            .e
            .iter()
            .zip(ent.iter())
            .map(|(x, y)| Float::with_val(prec, x - *y).to_f64())
            .collect();
        crate::sl2::general_norm([diff[0], diff[1], diff[2], diff[3]])
    }

    /// Angle in `[0, π)` of the expanding right-singular direction.
    pub fn expanding_angle(&self) -> f64 {
        let [a, b, c, d] = self.scaled_f64();
        crate::sl2::expanding_angle(&[a, b, c, d])
    }

    /// Angle in `[0, π)` of the image of the expanding direction.
    pub fn image_expanding_angle(&self) -> f64 {
        let [a, b, c, d] = self.scaled_f64();
        crate::sl2::expanding_angle(&[a, c, b, d])
    }

    /// Entries divided by a common power of two so the largest is of order one.
    fn scaled_f64(&self) -> [f64; 4] {
        let exp = self
            .e
            .iter()
            .filter(|v| !v.is_zero())
            .filter_map(|v| v.get_exp())
            .max()
            .unwrap_or(0);
        let mut out = [0.0; 4];
        for (o, v) in out.iter_mut().zip(self.e.iter()) {
            let mut t = v.clone();
            t >>= exp;
            *o = t.to_f64();
        }
        out
    }

    /// `M·v`.
    pub fn apply(&self, v: &[Float; 2]) -> [Float; 2] {
        let prec = self.prec();
        let e = &self.e;
        let mut x = Float::with_val(prec, &e[0] * &v[0]);
        x += Float::with_val(prec, &e[1] * &v[1]);
        let mut y = Float::with_val(prec, &e[2] * &v[0]);
        y += Float::with_val(prec, &e[3] * &v[1]);
        [x, y]
    }

    /// `Mᵀ·v`.
    pub fn apply_transpose(&self, v: &[Float; 2]) -> [Float; 2] {
        let prec = self.prec();
        let e = &self.e;
        let mut x = Float::with_val(prec, &e[0] * &v[0]);
        x += Float::with_val(prec, &e[2] * &v[1]);
        let mut y = Float::with_val(prec, &e[1] * &v[0]);
        y += Float::with_val(prec, &e[3] * &v[1]);
        [x, y]
    }

    fn column(&self, i: usize) -> [Float; 2] {
        [self.e[i].clone(), self.e[2 + i].clone()]
    }

    fn larger_column(&self) -> usize {
        let n0 = Float::with_val(self.prec(), self.e[0].hypot_ref(&self.e[2]));
        let n1 = Float::with_val(self.prec(), self.e[1].hypot_ref(&self.e[3]));
        if n1 > n0 {
            1
        } else {
            0
        }
    }

    /// Unnormalized top right-singular vector, refined by two power steps of `MᵀM`.
    pub fn top_input_direction(&self) -> [Float; 2] {
        let mut u = self.apply_transpose(&self.column(self.larger_column()));
        for _ in 0..2 {
            u = self.apply_transpose(&self.apply(&u));
            normalize_exponent(&mut u);
        }
        u
    }

    /// Unnormalized top left-singular vector (image of the expanding direction).
    pub fn top_image_direction(&self) -> [Float; 2] {
        let mut d = self.apply(&self.top_input_direction());
        normalize_exponent(&mut d);
        d
    }

    /// Nearest `f64` matrix; not renormalized.
    pub fn to_f64_entries(&self) -> [f64; 4] {
        [
            self.e[0].to_f64(),
            self.e[1].to_f64(),
            self.e[2].to_f64(),
            self.e[3].to_f64(),
        ]
    }
}

/// `x = mantissa·2^exp` exactly.
fn decompose(x: f64) -> (i64, i64) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (mant, exp) = if exp_bits == 0 { (frac, -1074) } else { (frac | (1 << 52), exp_bits - 1075) };
    (if bits >> 63 == 1 { -mant } else { mant }, exp)
}

const LN2: f64 = std::f64::consts::LN_2;

/// Rounds a natural logarithm up so it stays an upper bound after later `f64` arithmetic.
fn up(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        x
    } else {
        x + 1e-12 * (1.0 + x.abs())
    }
}

/// Product accumulator in block floating point: `value = m·2^exp` with integer entries,
/// truncated to about `prec` bits, carrying a rigorous bound `‖product − value‖_F ≤ e^err`.
#[derive(Clone, Debug)]
pub struct BlockMat2 {
    m: [Integer; 4],
    exp: i64,
    prec: u32,
    err: f64,
    t0: Integer,
    t1: Integer,
}

impl BlockMat2 {
    pub fn identity(prec: u32) -> BlockMat2 {
        BlockMat2 {
            m: [Integer::from(1), Integer::new(), Integer::new(), Integer::from(1)],
            exp: 0,
            prec,
            err: f64::NEG_INFINITY,
            t0: Integer::new(),
            t1: Integer::new(),
        }
    }

    /// Exact conversion of an extended-precision matrix.
    pub fn from_hp(h: &HpMat2, prec: u32) -> BlockMat2 {
        let parts: Vec<Option<(Integer, i32)>> = h.entries().iter().map(|v| v.to_integer_exp()).collect();
        let exp = parts.iter().flatten().filter(|(i, _)| *i != 0).map(|(_, e)| *e as i64).min().unwrap_or(0);
        let mut m: [Integer; 4] = Default::default();
        for (slot, p) in m.iter_mut().zip(parts) {
            if let Some((i, e)) = p {
                if i != 0 {
                    *slot = i << (e as i64 - exp) as u32;
                }
            }
        }
        let mut out = BlockMat2 { m, exp, prec, err: f64::NEG_INFINITY, t0: Integer::new(), t1: Integer::new() };
        out.truncate();
        out
    }

    pub fn log_error(&self) -> f64 {
        self.err
    }

    fn bits(&self) -> u32 {
        self.m.iter().map(|v| v.significant_bits()).max().unwrap_or(0)
    }

    fn truncate(&mut self) {
        let bits = self.bits();
        if bits > self.prec + 64 {
            let s = bits - self.prec;
            for v in self.m.iter_mut() {
                *v >>= s;
            }
            // Each entry loses less than 2^{exp+s}; the Frobenius error is below 2^{exp+s+1}.
            self.err = up(log_add(self.err, (self.exp + s as i64 + 1) as f64 * LN2));
            self.exp += s as i64;
        }
    }

    /// `self ← a·self`.
    pub fn push(&mut self, a: &Mat2) {
        let parts = a.entries().map(decompose);
        let base = parts.iter().filter(|(m, _)| *m != 0).map(|(_, e)| *e).min().unwrap_or(0);
        let k: Vec<Integer> = parts.iter().map(|(m, e)| if *m == 0 { Integer::new() } else { Integer::from(*m) << (*e - base) as u32 }).collect();
        for col in 0..2 {
            self.t0.assign(&self.m[col] * &k[0]);
            self.t0 += &self.m[col + 2] * &k[1];
            self.t1.assign(&self.m[col] * &k[2]);
            self.t1 += &self.m[col + 2] * &k[3];
            std::mem::swap(&mut self.m[col], &mut self.t0);
            std::mem::swap(&mut self.m[col + 2], &mut self.t1);
        }
        self.exp += base;
        if self.err > f64::NEG_INFINITY {
            self.err = up(self.err + a.frobenius().ln());
        }
        self.truncate();
    }

    /// `self ← other·self`.
    pub fn push_block(&mut self, other: &BlockMat2) {
        let o = &other.m;
        let self_frob = self.log_frobenius_upper();
        let other_frob = other.log_frobenius_upper();
        for col in 0..2 {
            self.t0.assign(&self.m[col] * &o[0]);
            self.t0 += &self.m[col + 2] * &o[1];
            self.t1.assign(&self.m[col] * &o[2]);
            self.t1 += &self.m[col + 2] * &o[3];
            std::mem::swap(&mut self.m[col], &mut self.t0);
            std::mem::swap(&mut self.m[col + 2], &mut self.t1);
        }
        self.exp += other.exp;
        // ‖OP − O'V‖ ≤ ‖O'‖·‖P − V‖ + ‖O − O'‖·(‖V‖ + ‖P − V‖).
        let e1 = other_frob + self.err;
        let e2 = other.err + log_add(self_frob, self.err);
        self.err = up(log_add(e1, e2));
        self.truncate();
    }

    /// Upper bound for `ln‖value‖_F`.
    pub fn log_frobenius_upper(&self) -> f64 {
        let shift = self.bits().saturating_sub(60);
        let mut s = 0.0;
        for v in &self.m {
            let t = Integer::from(v >> shift).to_f64().abs() + 1.0;
            s += t * t;
        }
        up(0.5 * s.ln() + (self.exp + shift as i64) as f64 * LN2)
    }

    /// Upper bound for `ln‖product‖₂`.
    pub fn log_norm_upper(&self) -> f64 {
        let shift = self.bits().saturating_sub(60);
        let e: Vec<f64> = self.m.iter().map(|v| Integer::from(v >> shift).to_f64()).collect();
        // Floor shifts move each entry by less than one unit; the Frobenius slack covers it.
        let sigma = crate::sl2::general_norm([e[0], e[1], e[2], e[3]]) + 2.0;
        let value = up(sigma.ln() + (self.exp + shift as i64) as f64 * LN2);
        up(log_add(value, self.err))
    }

    /// Exact conversion to floating entries with enough precision.
    pub fn to_hp(&self) -> HpMat2 {
        let prec = self.bits().max(64);
        let e = [0, 1, 2, 3].map(|i| {
            let mut f = Float::with_val(prec, &self.m[i]);
            f <<= self.exp as i32;
            f
        });
        HpMat2::from_entries(e)
    }
}

/// Rescales a vector by a power of two so its largest entry is of order one.
pub fn normalize_exponent(v: &mut [Float; 2]) {
    let exp = v.iter().filter(|x| !x.is_zero()).filter_map(|x| x.get_exp()).max();
    if let Some(e) = exp {
        for x in v.iter_mut() {
            *x >>= e;
        }
    }
}

/// Angle of a vector in `(−π, π]`.
pub fn angle_of(v: &[Float; 2]) -> Float {
    let prec = v[0].prec().max(v[1].prec());
    Float::with_val(prec, v[1].atan2_ref(&v[0]))
}

/// `R_φ·A` evaluated at the given precision.
pub fn rotate_left(phi: &Float, m: &Mat2, prec: u32) -> HpMat2 {
    let (sin, cos) = Float::with_val(prec, phi).sin_cos(Float::new(prec));
    let [a, b, c, d] = m.entries();
    let lin = |x: &Float, p: f64, y: &Float, q: f64| {
        let mut t = Float::with_val(prec, x * p);
        t += Float::with_val(prec, y * q);
        t
    };
    let neg_sin = Float::with_val(prec, -&sin);
    HpMat2::from_entries([
        lin(&cos, a, &neg_sin, c),
        lin(&cos, b, &neg_sin, d),
        lin(&sin, a, &cos, c),
        lin(&sin, b, &cos, d),
    ])
}

/// `2^k` for `k` possibly large, at the given precision.
pub fn pow2(prec: u32, k: i32) -> Float {
    let mut f = Float::with_val(prec, 1);
    f <<= k;
    f
}

/// Rounding bound for a product of `count` factors evaluated at `prec` bits.
///
/// Returns `ln(err)` where `err ≤ 1.01·2·count·2^{−prec}·Π‖L_j‖_F`, given `Σ ln‖L_j‖_F`.
pub fn log_rounding_bound(count: usize, prec: u32, sum_log_frobenius: f64) -> f64 {
    (1.01 * 2.0 * count.max(1) as f64).ln() - prec as f64 * std::f64::consts::LN_2 + sum_log_frobenius
}

/// Precision that keeps [`log_rounding_bound`] `2^{−margin}` below the product scale.
pub fn precision_for(count: usize, sum_log_frobenius: f64, margin_bits: u32) -> u32 {
    let bits = sum_log_frobenius / std::f64::consts::LN_2 + (2.0 * count.max(1) as f64).log2();
    64 + margin_bits + bits.max(0.0).ceil() as u32
}

/// `ln(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// C99-style hexadecimal text of an `f64`, exact.
pub fn format_hex_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0x0p+0".into() } else { "0x0p+0".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (lead, exp) = if exp_bits == 0 { (0, -1022) } else { (1, exp_bits - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exp:+}")
    }
}

/// Exact hexadecimal text of an extended-precision value: `±0x<hex integer>p<exp>`.
pub fn format_hex_float(x: &Float) -> String {
    if x.is_zero() {
        return "0x0p+0".into();
    }
    let (mant, exp) = x.to_integer_exp().expect("finite value");
    let neg = mant < 0;
    let abs = Integer::from(mant.abs_ref());
    let body = abs.to_string_radix(16);
    format!("{}0x{}p{:+}", if neg { "-" } else { "" }, body, exp)
}

/// Parsed hexadecimal float: sign, hex digits of the integer mantissa, binary exponent.
struct HexParts {
    negative: bool,
    mantissa: Integer,
    exp: i64,
}

fn parse_hex_parts(s: &str) -> Result<HexParts> {
    let bad = || LabError::Invalid(format!("malformed hexadecimal float `{s}`"));
    let t = s.trim();
    let (negative, t) = match t.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let t = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).ok_or_else(bad)?;
    let (body, exp) = t.split_once(['p', 'P']).ok_or_else(bad)?;
    let mut exp: i64 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(bad());
    }
    exp -= 4 * frac_part.len() as i64;
    let mantissa = Integer::from_str_radix(&digits, 16).map_err(|_| bad())?;
    Ok(HexParts { negative, mantissa, exp })
}

/// Parses hexadecimal text produced by [`format_hex_f64`]; fails if the value is not an exact `f64`.
pub fn parse_hex_f64(s: &str) -> Result<f64> {
    let parts = parse_hex_parts(s)?;
    let bits = parts.mantissa.significant_bits().max(1);
    let prec = bits.max(64);
    let mut f = Float::with_val(prec, &parts.mantissa);
    f <<= parts.exp as i32;
    let v = f.to_f64();
    if Float::with_val(prec, v) != f {
        return Err(LabError::Invalid(format!("`{s}` is not exactly representable as f64")));
    }
    Ok(if parts.negative { -v } else { v })
}

/// Parses hexadecimal text into an exact extended-precision value with at least `min_prec` bits.
pub fn parse_hex_float(s: &str, min_prec: u32) -> Result<Float> {
    let parts = parse_hex_parts(s)?;
    let prec = parts.mantissa.significant_bits().max(min_prec).max(2);
    let mut f = Float::with_val(prec, &parts.mantissa);
    f <<= parts.exp as i32;
    if parts.negative {
        f = -f;
    }
    Ok(f)
}

/// Number of significant bits needed to hold the value in the text exactly.
pub fn hex_significant_bits(s: &str) -> Result<u32> {
    let parts = parse_hex_parts(s)?;
    let mut m = parts.mantissa;
    if m == 0 {
        return Ok(1);
    }
    let tz = m.find_one(0).unwrap_or(0);
    m >>= tz;
    Ok(m.significant_bits())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_f64_round_trip() {
        for &x in &[
            1.0,
            -0.75,
            0.1,
            std::f64::consts::PI,
            1e-310,
            -2.5e300,
            f64::MIN_POSITIVE,
            0.0,
        ] {
            let s = format_hex_f64(x);
            assert_eq!(parse_hex_f64(&s).unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_hex_f64(1.5), "0x1.8p+0");
        assert_eq!(parse_hex_f64("0x1p-2").unwrap(), 0.25);
    }

    #[test]
    fn hex_float_round_trip() {
        let x = Float::with_val(300, 2).sqrt() * 1.5;
        let s = format_hex_float(&x);
        let y = parse_hex_float(&s, 300).unwrap();
        assert_eq!(x, y);
        assert!(hex_significant_bits(&s).unwrap() <= 300);
        assert!(hex_significant_bits(&format_hex_f64(0.1)).unwrap() <= 53);
    }

    #[test]
    fn product_matches_f64_for_small_cases() {
        let a = Mat2::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let b = crate::sl2::rotation(0.3);
        let mut h = HpMat2::identity(128);
        h.push(&b);
        h.push(&a);
        let f = crate::sl2::compose(&a, &b);
        for (x, y) in h.to_f64_entries().iter().zip(f.entries().iter()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((h.log_norm() - crate::sl2::operator_norm(&f).ln()).abs() < 1e-14);
    }

    #[test]
    fn block_product_within_its_error_bound() {
        let ms: Vec<Mat2> = (0..400)
            .map(|i| {
                let t = 5.0 * ((i as f64) * 0.37).cos();
                Mat2::new(t, -1.0, 1.0, 0.0).unwrap()
            })
            .collect();
        let mut exact = HpMat2::identity(4000);
        let mut block = BlockMat2::identity(1200);
        for m in &ms {
            exact.push(m);
            block.push(m);
        }
        let approx = block.to_hp();
        let mut diff = Float::with_val(4000, 0);
        for (a, b) in exact.entries().iter().zip(approx.entries()) {
            diff += Float::with_val(4000, a - b).square();
        }
        let log_diff = diff.ln().to_f64() / 2.0;
        assert!(log_diff <= block.log_error(), "{log_diff} > {}", block.log_error());
        assert!(block.log_error() < exact.log_norm() - 100.0);
        assert!((block.log_norm_upper() - exact.log_norm()).abs() < 1e-9);
        let mut twice = block.clone();
        twice.push_block(&BlockMat2::from_hp(&exact, 1200));
        assert!(twice.log_norm_upper().is_finite());
    }
}
