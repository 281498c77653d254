//! Arithmetic in GF(p^n), realized as F_p[s] modulo a monic irreducible
//! polynomial of degree n.
//!
//! Elements are identified by integer labels: the element with base-p digits
//! d_0..d_{n-1} (digit i being the coefficient of s^i) has label
//! Σ d_i · p^i. Label arithmetic is exact; there is no floating point
//! anywhere in this crate.

use std::fmt;

use thiserror::Error;

/// Largest supported extension degree.
pub const MAX_DEGREE: usize = 16;

/// Largest supported field size (labels stay comfortably inside u64
/// intermediate arithmetic below this bound).
pub const MAX_FIELD_SIZE: u64 = 1 << 31;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    DegreeZero,
    #[error("extension degree {0} exceeds the supported maximum of {MAX_DEGREE}")]
    DegreeTooLarge(usize),
    #[error("field size {p}^{n} exceeds the supported envelope of 2^31 elements")]
    FieldTooLarge { p: u64, n: usize },
    #[error("polynomial is not monic")]
    NonMonic,
    #[error("polynomial is reducible over F_{0}")]
    NotIrreducible(u64),
    #[error("modulus has degree {got}, expected {want}")]
    ModulusDegreeMismatch { got: usize, want: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("every element of F_{0} is a square")]
    NoNonResidue(u64),
    #[error("label {label} is out of range for a field of {size} elements")]
    LabelOutOfRange { label: u64, size: u64 },
    #[error("digit {digit} is out of range for characteristic {p}")]
    DigitOutOfRange { digit: u64, p: u64 },
    #[error("cannot parse {0:?} as a field element")]
    BadElement(String),
}

/// An element of a specific GF(p^n), stored as its integer label.
///
/// The label alone does not know its field; all arithmetic goes through the
/// owning [`FieldCtx`]. Mixing labels across contexts is prevented
/// structurally (operations are methods on the context), and schema-level
/// inputs are range-checked on entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Gfe(pub u64);

impl fmt::Display for Gfe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A field context: characteristic, degree, and the modulus polynomial.
///
/// The modulus is stored low-to-high (`modulus[i]` is the coefficient of
/// s^i) and is always monic of degree n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldCtx {
    p: u64,
    n: usize,
    size: u64,
    modulus: Vec<u64>,
}

impl FieldCtx {
    /// Builds GF(p^n) with the canonical modulus: the lexicographically
    /// smallest monic irreducible, ordering candidates by the coefficient
    /// tuple (c_{n-1}, …, c_1, c_0) ascending. For n = 1 the modulus is `s`.
    pub fn new(p: u64, n: usize) -> Result<FieldCtx, GfError> {
        check_field_params(p, n)?;
        let modulus = canonical_modulus(p, n);
        Ok(FieldCtx { p, n, size: p.pow(n as u32), modulus })
    }

    /// Builds GF(p^n) with a caller-supplied modulus, given high-to-low
    /// (leading coefficient first, n+1 coefficients). The modulus must be
    /// monic, of degree exactly n, with coefficients below p, and
    /// irreducible over F_p.
    pub fn with_modulus(p: u64, n: usize, coeffs_high_to_low: &[u64]) -> Result<FieldCtx, GfError> {
        check_field_params(p, n)?;
        if coeffs_high_to_low.len() != n + 1 {
            return Err(GfError::ModulusDegreeMismatch { got: coeffs_high_to_low.len().saturating_sub(1), want: n });
        }
        for &c in coeffs_high_to_low {
            if c >= p {
                return Err(GfError::DigitOutOfRange { digit: c, p });
            }
        }
        let modulus: Vec<u64> = coeffs_high_to_low.iter().rev().copied().collect();
        if *modulus.last().unwrap() != 1 {
            return Err(GfError::NonMonic);
        }
        // Degree-1 moduli are vacuously irreducible (n = 1 convention).
        if n > 1 && !is_irreducible(p, &modulus)? {
            return Err(GfError::NotIrreducible(p));
        }
        Ok(FieldCtx { p, n, size: p.pow(n as u32), modulus })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of elements, p^n.
    pub fn size(&self) -> u64 {
        self.size
    }

    /// Modulus coefficients, low-to-high (index i = coefficient of s^i).
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    /// Modulus coefficients, high-to-low (the order used in JSON I/O).
    pub fn modulus_high_to_low(&self) -> Vec<u64> {
        self.modulus.iter().rev().copied().collect()
    }

    /// Renders the modulus as a polynomial in s, e.g. `s^3+2s+1`.
    pub fn modulus_string(&self) -> String {
        poly_string(&self.modulus)
    }

    pub fn zero(&self) -> Gfe {
        Gfe(0)
    }

    pub fn one(&self) -> Gfe {
        Gfe(1)
    }

    /// The generator symbol s itself (label p); for n = 1 this reduces to 0.
    pub fn s(&self) -> Gfe {
        if self.n == 1 {
            Gfe(0)
        } else {
            Gfe(self.p)
        }
    }

    /// Validates a label and wraps it.
    pub fn element(&self, label: u64) -> Result<Gfe, GfError> {
        if label < self.size {
            Ok(Gfe(label))
        } else {
            Err(GfError::LabelOutOfRange { label, size: self.size })
        }
    }

    /// Embeds an F_p scalar (reduced mod p).
    pub fn scalar(&self, c: u64) -> Gfe {
        Gfe(c % self.p)
    }

    /// All elements, in label order.
    pub fn elements(&self) -> impl Iterator<Item = Gfe> {
        (0..self.size).map(Gfe)
    }

    /// All nonzero elements, in label order.
    pub fn nonzero_elements(&self) -> impl Iterator<Item = Gfe> {
        (1..self.size).map(Gfe)
    }

    /// Digits of `a`, low-to-high (index i = coefficient of s^i), length n.
    pub fn digits(&self, a: Gfe) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.n);
        let mut x = a.0;
        for _ in 0..self.n {
            v.push(x % self.p);
            x /= self.p;
        }
        v
    }

    /// Rebuilds an element from low-to-high digits (must each be < p).
    pub fn from_digits(&self, digits_low_to_high: &[u64]) -> Result<Gfe, GfError> {
        if digits_low_to_high.len() > self.n {
            return Err(GfError::LabelOutOfRange {
                label: u64::MAX,
                size: self.size,
            });
        }
        let mut label = 0u64;
        for (i, &d) in digits_low_to_high.iter().enumerate() {
            if d >= self.p {
                return Err(GfError::DigitOutOfRange { digit: d, p: self.p });
            }
            label += d * self.p.pow(i as u32);
        }
        Ok(Gfe(label))
    }

    pub fn add(&self, a: Gfe, b: Gfe) -> Gfe {
        let (p, mut x, mut y) = (self.p, a.0, b.0);
        let mut label = 0u64;
        let mut weight = 1u64;
        for _ in 0..self.n {
            label += ((x % p + y % p) % p) * weight;
            x /= p;
            y /= p;
            weight *= p;
        }
        Gfe(label)
    }

    pub fn neg(&self, a: Gfe) -> Gfe {
        let (p, mut x) = (self.p, a.0);
        let mut label = 0u64;
        let mut weight = 1u64;
        for _ in 0..self.n {
            let d = x % p;
            label += (if d == 0 { 0 } else { p - d }) * weight;
            x /= p;
            weight *= p;
        }
        Gfe(label)
    }

    pub fn sub(&self, a: Gfe, b: Gfe) -> Gfe {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Gfe, b: Gfe) -> Gfe {
        let n = self.n;
        if n == 1 {
            return Gfe((a.0 % self.p) * (b.0 % self.p) % self.p);
        }
        let da = self.digits(a);
        let db = self.digits(b);
        // Convolution; coefficients stay below n·(p-1)^2 < 2^63.
        let mut work = vec![0u64; 2 * n - 1];
        for (i, &x) in da.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in db.iter().enumerate() {
                work[i + j] += x * y;
            }
        }
        for w in work.iter_mut() {
            *w %= self.p;
        }
        self.reduce_into_label(&mut work)
    }

    /// Reduces a coefficient vector (degree may reach 2n-2) by the monic
    /// modulus and reassembles the label.
    fn reduce_into_label(&self, work: &mut [u64]) -> Gfe {
        let (p, n) = (self.p, self.n);
        for i in (n..work.len()).rev() {
            let c = work[i];
            if c == 0 {
                continue;
            }
            work[i] = 0;
            for j in 0..n {
                let m = self.modulus[j];
                if m != 0 {
                    let sub = c * m % p;
                    work[i - n + j] = (work[i - n + j] + p - sub) % p;
                }
            }
        }
        let mut label = 0u64;
        let mut weight = 1u64;
        for &w in work.iter().take(n) {
            label += w * weight;
            weight *= p;
        }
        Gfe(label)
    }

    /// Multiplicative inverse via the extended Euclidean algorithm on
    /// polynomials over F_p.
    pub fn inv(&self, a: Gfe) -> Result<Gfe, GfError> {
        if a.0 == 0 {
            return Err(GfError::DivisionByZero);
        }
        if self.n == 1 {
            return Ok(Gfe(scalar_inv(self.p, a.0 % self.p)));
        }
        // Invariants: r0 = u0·a (mod m), r1 = u1·a (mod m).
        let mut r0: Vec<u64> = self.modulus.clone();
        let mut r1: Vec<u64> = self.digits(a);
        trim(&mut r1);
        let mut u0: Vec<u64> = vec![];
        let mut u1: Vec<u64> = vec![1];
        while !r1.is_empty() {
            let (q, rem) = poly_divmod(self.p, &r0, &r1);
            let next_u = poly_sub(self.p, &u0, &poly_mul(self.p, &q, &u1));
            r0 = std::mem::replace(&mut r1, rem);
            u0 = std::mem::replace(&mut u1, next_u);
        }
        // gcd(a, m) = r0, a unit since m is irreducible and a ≠ 0.
        debug_assert_eq!(r0.len(), 1);
        let scale = scalar_inv(self.p, r0[0]);
        let mut inv = u0;
        for c in inv.iter_mut() {
            *c = *c * scale % self.p;
        }
        // Reduce mod m (deg(u0) < n already, but normalize defensively).
        let mut work = inv;
        work.resize(2 * self.n - 1, 0);
        Ok(self.reduce_into_label(&mut work))
    }

    pub fn div(&self, a: Gfe, b: Gfe) -> Result<Gfe, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// a^e by square-and-multiply; a^0 = 1 including for a = 0.
    pub fn pow(&self, a: Gfe, e: u64) -> Gfe {
        let mut base = a;
        let mut e = e;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// True iff `a` lies in the prime subfield F_p (all digits above the
    /// constant one vanish, i.e. label < p).
    pub fn in_base_field(&self, a: Gfe) -> bool {
        a.0 < self.p
    }

    /// The monic minimal polynomial of `a` over F_p, low-to-high
    /// coefficients. Found as the first linear dependence among
    /// 1, a, a², …; its degree always divides n.
    pub fn minimal_poly(&self, a: Gfe) -> Vec<u64> {
        // Powers of a as digit rows.
        let mut powers: Vec<Vec<u64>> = vec![self.digits(self.one())];
        let mut cur = self.one();
        for k in 1..=self.n {
            cur = self.mul(cur, a);
            powers.push(self.digits(cur));
            // Try to express a^k over 1..a^{k-1}: solve the n×k system.
            if let Some(coeffs) = solve_dependence(self.p, &powers[..k], &powers[k]) {
                // a^k = Σ coeffs_i a^i  →  m(s) = s^k − Σ coeffs_i s^i.
                let mut m = vec![0u64; k + 1];
                m[k] = 1;
                for (i, &c) in coeffs.iter().enumerate() {
                    m[i] = (self.p - c % self.p) % self.p;
                }
                return m;
            }
        }
        unreachable!("every element of GF(p^n) satisfies a degree ≤ n polynomial");
    }

    /// Multiplicative order of a nonzero element.
    pub fn order(&self, a: Gfe) -> Result<u64, GfError> {
        if a.0 == 0 {
            return Err(GfError::DivisionByZero);
        }
        let group = self.size - 1;
        let mut ord = group;
        for q in distinct_prime_factors(group) {
            while ord % q == 0 && self.pow(a, ord / q).0 == 1 {
                ord /= q;
            }
        }
        Ok(ord)
    }
}

fn check_field_params(p: u64, n: usize) -> Result<(), GfError> {
    if !is_prime(p) {
        return Err(GfError::NotPrime(p));
    }
    if n == 0 {
        return Err(GfError::DegreeZero);
    }
    if n > MAX_DEGREE {
        return Err(GfError::DegreeTooLarge(n));
    }
    let mut size: u64 = 1;
    for _ in 0..n {
        size = size.checked_mul(p).ok_or(GfError::FieldTooLarge { p, n })?;
        if size > MAX_FIELD_SIZE {
            return Err(GfError::FieldTooLarge { p, n });
        }
    }
    Ok(())
}

/// Deterministic primality by trial division (p ≤ 2^31 here).
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn distinct_prime_factors(mut x: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= x {
        if x % d == 0 {
            out.push(d);
            while x % d == 0 {
                x /= d;
            }
        }
        d += 1;
    }
    if x > 1 {
        out.push(x);
    }
    out
}

/// Inverse of a nonzero scalar mod p via the extended Euclidean algorithm.
fn scalar_inv(p: u64, a: u64) -> u64 {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "inverse of non-unit requested");
    t.rem_euclid(p as i128) as u64
}

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_sub(p: u64, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *o = (x + p - y % p) % p;
    }
    trim(&mut out);
    out
}

fn poly_mul(p: u64, a: &[u64], b: &[u64]) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    trim(&mut out);
    out
}

/// Division with remainder over F_p[x]; divisor must be nonzero.
fn poly_divmod(p: u64, num: &[u64], den: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let mut rem: Vec<u64> = num.to_vec();
    trim(&mut rem);
    let mut den = den.to_vec();
    trim(&mut den);
    assert!(!den.is_empty(), "polynomial division by zero");
    let dlead_inv = scalar_inv(p, *den.last().unwrap());
    if rem.len() < den.len() {
        return (vec![], rem);
    }
    let mut quot = vec![0u64; rem.len() - den.len() + 1];
    for k in (0..quot.len()).rev() {
        let idx = k + den.len() - 1;
        let coeff = rem.get(idx).copied().unwrap_or(0) * dlead_inv % p;
        if coeff == 0 {
            continue;
        }
        quot[k] = coeff;
        for (j, &d) in den.iter().enumerate() {
            let sub = coeff * d % p;
            rem[k + j] = (rem[k + j] + p - sub) % p;
        }
    }
    trim(&mut rem);
    (quot, rem)
}

/// Irreducibility of a monic polynomial over F_p by trial division: no monic
/// divisor of degree 1..⌊deg/2⌋ divides it. Degree-1 polynomials are
/// irreducible by convention.
pub fn is_irreducible(p: u64, coeffs_low_to_high: &[u64]) -> Result<bool, GfError> {
    let mut f = coeffs_low_to_high.to_vec();
    trim(&mut f);
    if f.len() < 2 {
        return Err(GfError::NonMonic);
    }
    if *f.last().unwrap() != 1 {
        return Err(GfError::NonMonic);
    }
    let deg = f.len() - 1;
    if deg == 1 {
        return Ok(true);
    }
    for d in 1..=deg / 2 {
        // Monic divisors of degree d, enumerated by their d low coefficients.
        let count = p.pow(d as u32);
        for k in 0..count {
            let mut g = Vec::with_capacity(d + 1);
            let mut x = k;
            for _ in 0..d {
                g.push(x % p);
                x /= p;
            }
            g.push(1);
            let (_, rem) = poly_divmod(p, &f, &g);
            if rem.is_empty() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The canonical modulus for GF(p^n): the monic irreducible of degree n
/// whose coefficient tuple (c_{n-1}, …, c_1, c_0) is smallest in ascending
/// lexicographic order. Returned low-to-high. For n = 1 this is `s`.
pub fn canonical_modulus(p: u64, n: usize) -> Vec<u64> {
    if n == 1 {
        return vec![0, 1];
    }
    // Tuple order (c_{n-1}, …, c_0) ascending is exactly numeric order of
    // the label Σ c_i p^i, so scan labels upward.
    let total = p.pow(n as u32);
    for label in 0..total {
        let mut coeffs = Vec::with_capacity(n + 1);
        let mut x = label;
        for _ in 0..n {
            coeffs.push(x % p);
            x /= p;
        }
        coeffs.push(1);
        if is_irreducible(p, &coeffs).expect("candidate is monic by construction") {
            return coeffs;
        }
    }
    unreachable!("irreducible polynomials exist over every finite field in every degree");
}

/// Smallest quadratic non-residue c ∈ [2, p) of F_p; every element of F_2 is
/// a square, which is reported as an error.
pub fn quadratic_nonresidue(p: u64) -> Result<u64, GfError> {
    if !is_prime(p) {
        return Err(GfError::NotPrime(p));
    }
    if p == 2 {
        return Err(GfError::NoNonResidue(2));
    }
    for c in 2..p {
        // Euler's criterion: c is a non-residue iff c^((p-1)/2) ≡ -1.
        if pow_mod(c, (p - 1) / 2, p) == p - 1 {
            return Ok(c);
        }
    }
    unreachable!("odd prime fields contain non-residues");
}

fn pow_mod(base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u128;
    let mut b = base as u128 % m as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m as u128;
        }
        b = b * b % m as u128;
        e >>= 1;
    }
    acc as u64
}

/// Solves Σ x_i · rows[i] = target over F_p, if possible. Rows and target
/// are digit vectors of equal length. Used by minimal_poly; the general
/// machinery lives in fplinalg.
fn solve_dependence(p: u64, rows: &[Vec<u64>], target: &[u64]) -> Option<Vec<u64>> {
    let k = rows.len();
    let n = target.len();
    // Augmented system: columns are the known powers, RHS is the target.
    let mut a = vec![vec![0u64; k + 1]; n];
    for (j, row) in rows.iter().enumerate() {
        for i in 0..n {
            a[i][j] = row[i];
        }
    }
    for i in 0..n {
        a[i][k] = target[i];
    }
    // Gaussian elimination.
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let Some(pr) = (r..n).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, pr);
        let inv = scalar_inv(p, a[r][c]);
        for x in a[r].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..n {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for j in 0..=k {
                    let sub = f * a[r][j] % p;
                    a[i][j] = (a[i][j] + p - sub) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == n {
            break;
        }
    }
    // Inconsistent → no dependence at this degree.
    for row in a.iter().skip(r) {
        if row[k] != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; k];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = a[row][k];
    }
    Some(x)
}

/// Renders a coefficient vector (low-to-high) as a polynomial in s.
pub fn poly_string(coeffs_low_to_high: &[u64]) -> String {
    let mut terms: Vec<String> = Vec::new();
    for (i, &c) in coeffs_low_to_high.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let t = match (i, c) {
            (0, c) => format!("{c}"),
            (1, 1) => "s".to_string(),
            (1, c) => format!("{c}s"),
            (i, 1) => format!("s^{i}"),
            (i, c) => format!("{c}s^{i}"),
        };
        terms.push(t);
    }
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join("+")
    }
}

// ---------------------------------------------------------------------------
// Element text formats. Three interchangeable notations:
//   label:       "22"
//   digit tuple: "[2,1,1]"    (high-to-low)
//   polynomial:  "2s^2+s+1"
// ---------------------------------------------------------------------------

impl FieldCtx {
    /// Digit-tuple rendering, high-to-low: label 22 in GF(27) → `[2,1,1]`.
    pub fn show_digits(&self, a: Gfe) -> String {
        let ds = self.digits(a);
        let parts: Vec<String> = ds.iter().rev().map(|d| d.to_string()).collect();
        format!("[{}]", parts.join(","))
    }

    /// Polynomial rendering: label 22 in GF(27) → `2s^2+s+1`.
    pub fn show_poly(&self, a: Gfe) -> String {
        poly_string(&self.digits(a))
    }

    /// Parses any of the three element notations.
    pub fn parse_element(&self, text: &str) -> Result<Gfe, GfError> {
        let t = text.trim();
        if t.is_empty() {
            return Err(GfError::BadElement(text.to_string()));
        }
        if t.starts_with('[') {
            return self.parse_digit_tuple(t);
        }
        if t.chars().all(|c| c.is_ascii_digit()) {
            let label: u64 = t.parse().map_err(|_| GfError::BadElement(text.to_string()))?;
            return self.element(label);
        }
        self.parse_poly(t)
    }

    fn parse_digit_tuple(&self, t: &str) -> Result<Gfe, GfError> {
        let inner = t
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| GfError::BadElement(t.to_string()))?;
        let mut digits_high_to_low = Vec::new();
        for part in inner.split([',', ';']) {
            let part = part.trim();
            let d: u64 = part.parse().map_err(|_| GfError::BadElement(t.to_string()))?;
            digits_high_to_low.push(d);
        }
        if digits_high_to_low.len() != self.n {
            return Err(GfError::BadElement(t.to_string()));
        }
        let low_to_high: Vec<u64> = digits_high_to_low.into_iter().rev().collect();
        self.from_digits(&low_to_high)
    }

    fn parse_poly(&self, t: &str) -> Result<Gfe, GfError> {
        let compact: String = t.chars().filter(|c| !c.is_whitespace()).collect();
        let mut digits = vec![0u64; self.n];
        // Tokenize on +/- while keeping the sign of each term.
        let mut rest = compact.as_str();
        let mut sign_neg = false;
        if let Some(r) = rest.strip_prefix('-') {
            sign_neg = true;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        }
        while !rest.is_empty() {
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let term = &rest[..end];
            if term.is_empty() {
                return Err(GfError::BadElement(t.to_string()));
            }
            let (coeff, power) = parse_term(term).ok_or_else(|| GfError::BadElement(t.to_string()))?;
            if power >= self.n {
                return Err(GfError::BadElement(t.to_string()));
            }
            let c = coeff % self.p;
            let c = if sign_neg { (self.p - c) % self.p } else { c };
            digits[power] = (digits[power] + c) % self.p;
            if end == rest.len() {
                break;
            }
            sign_neg = rest.as_bytes()[end] == b'-';
            rest = &rest[end + 1..];
        }
        self.from_digits(&digits)
    }
}

/// Parses one polynomial term like `2s^2`, `s`, `7`; returns (coefficient,
/// power of s).
fn parse_term(term: &str) -> Option<(u64, usize)> {
    if let Some(idx) = term.find('s') {
        let coeff_part = &term[..idx];
        let coeff: u64 = if coeff_part.is_empty() {
            1
        } else {
            coeff_part.parse().ok()?
        };
        let rest = &term[idx + 1..];
        let power: usize = if rest.is_empty() {
            1
        } else {
            rest.strip_prefix('^')?.parse().ok()?
        };
        Some((coeff, power))
    } else {
        let coeff: u64 = term.parse().ok()?;
        Some((coeff, 0))
    }
}
