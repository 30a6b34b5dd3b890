//! Prime-order subgroup parameters and the modular arithmetic the protocol runs on.
//!
//! Exponents (keys, nonces, shadows, challenges) live in `Z_q` and are carried as
//! [`Scalar`]s. Group values (public keys, commitments, masked shares) live in the
//! order-`q` subgroup of `Z_p^*` and are carried as [`GroupElement`]s.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs below this bound are tested for primality by exhaustive trial division.
const DETERMINISTIC_BOUND: u64 = 1_000_000;

/// Miller-Rabin rounds; each round has error at most 1/4, so 40 rounds bound it by 2^-80.
const MILLER_RABIN_ROUNDS: usize = 40;

const DEFAULT_SEARCH_BUDGET: usize = 200_000;

/// Named size class of a parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Profile {
    /// 512-bit `p`, 160-bit `q`.
    #[serde(rename = "full", alias = "paper-full")]
    Full,
    /// Caller-supplied (typically small) primes.
    #[serde(rename = "test")]
    Test,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Full => "full",
            Profile::Test => "test",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "paper-full" => Ok(Profile::Full),
            "test" => Ok(Profile::Test),
            other => Err(Error::InvalidParams(format!("unknown profile {other:?}"))),
        }
    }
}

/// Target bit lengths for [`generate_params`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamSize {
    pub p_bits: u64,
    pub q_bits: u64,
}

impl ParamSize {
    /// `2^511 < p < 2^512`, `2^159 < q < 2^160`.
    pub const FULL: ParamSize = ParamSize {
        p_bits: 512,
        q_bits: 160,
    };

    pub fn profile(self) -> Profile {
        if self == Self::FULL {
            Profile::Full
        } else {
            Profile::Test
        }
    }
}

/// An exponent-domain value, always reduced modulo `q`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scalar(#[serde(with = "crate::decimal")] BigUint);

impl Scalar {
    /// Wraps a value the caller has already reduced modulo `q`.
    pub(crate) fn from_reduced(value: BigUint) -> Self {
        Scalar(value)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.0)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// A value in `[1, p-1]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(#[serde(with = "crate::decimal")] BigUint);

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({})", self.0)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// The public setting shared by every party: `p`, `q`, `g` and the size class.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRecord", into = "ParamsRecord")]
pub struct GroupParams {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    profile: Profile,
}

#[derive(Serialize, Deserialize)]
struct ParamsRecord {
    #[serde(with = "crate::decimal")]
    p: BigUint,
    #[serde(with = "crate::decimal")]
    q: BigUint,
    #[serde(with = "crate::decimal")]
    g: BigUint,
    profile: Profile,
}

impl TryFrom<ParamsRecord> for GroupParams {
    type Error = Error;

    fn try_from(r: ParamsRecord) -> Result<Self> {
        GroupParams::new(r.p, r.q, r.g, r.profile)
    }
}

impl From<GroupParams> for ParamsRecord {
    fn from(params: GroupParams) -> Self {
        ParamsRecord {
            p: params.p,
            q: params.q,
            g: params.g,
            profile: params.profile,
        }
    }
}

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("p", &self.p.to_str_radix(10))
            .field("q", &self.q.to_str_radix(10))
            .field("g", &self.g.to_str_radix(10))
            .field("profile", &self.profile)
            .finish()
    }
}

impl GroupParams {
    /// Builds a parameter set, rejecting it unless every invariant holds.
    pub fn new(p: BigUint, q: BigUint, g: BigUint, profile: Profile) -> Result<Self> {
        let params = GroupParams::new_unchecked(p, q, g, profile);
        let report = validate_params(&params);
        if report.is_valid() {
            Ok(params)
        } else {
            Err(Error::InvalidParams(report.failures().join("; ")))
        }
    }

    /// Builds a parameter set without validation; pair with [`validate_params`].
    pub fn new_unchecked(p: BigUint, q: BigUint, g: BigUint, profile: Profile) -> Self {
        GroupParams { p, q, g, profile }
    }

    /// Small parameters for desk-scale work, e.g. `(47, 23, 2)`.
    pub fn small(p: u64, q: u64, g: u64) -> Result<Self> {
        GroupParams::new(p.into(), q.into(), g.into(), Profile::Test)
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.g.clone())
    }

    /// Width in bytes of the canonical element encoding, `ceil(bits(p) / 8)`.
    pub fn element_width(&self) -> usize {
        self.p.bits().div_ceil(8) as usize
    }

    /// Reduces an integer into `Z_q`.
    pub fn scalar(&self, value: impl Into<BigUint>) -> Scalar {
        Scalar(value.into() % &self.q)
    }

    /// Reduces a signed integer into `Z_q`.
    pub fn scalar_signed(&self, value: &BigInt) -> Scalar {
        Scalar(reduce_signed(value, &self.q))
    }

    /// Accepts `value` as a group element if it lies in `[1, p-1]`.
    pub fn element(&self, value: impl Into<BigUint>) -> Result<GroupElement> {
        let value = value.into();
        if value.is_zero() || value >= self.p {
            return Err(Error::InvalidElement(value));
        }
        Ok(GroupElement(value))
    }

    /// Accepts `value` only if it is an element of the order-`q` subgroup.
    pub fn subgroup_element(&self, value: impl Into<BigUint>) -> Result<GroupElement> {
        let elem = self.element(value)?;
        if elem.0.modpow(&self.q, &self.p).is_one() {
            Ok(elem)
        } else {
            Err(Error::InvalidElement(elem.0))
        }
    }

    pub fn check_scalar(&self, value: &Scalar) -> Result<()> {
        if value.0 < self.q {
            Ok(())
        } else {
            Err(Error::Malformed(format!("scalar {} is not reduced mod q", value.0)))
        }
    }

    pub fn check_element(&self, value: &GroupElement) -> Result<()> {
        self.element(value.0.clone()).map(|_| ())
    }

    /// `base^exp mod p` for an exponent in `Z_q`.
    pub fn pow(&self, base: &GroupElement, exp: &Scalar) -> GroupElement {
        GroupElement(base.0.modpow(&exp.0, &self.p))
    }

    /// `g^exp mod p`.
    pub fn g_pow(&self, exp: &Scalar) -> GroupElement {
        GroupElement(self.g.modpow(&exp.0, &self.p))
    }

    /// `g^-exp mod p`.
    pub fn g_pow_neg(&self, exp: &Scalar) -> GroupElement {
        let neg = BigInt::from_biguint(Sign::Minus, exp.0.clone());
        // g is a unit mod p, so the inverse always exists
        GroupElement(mod_exp(&self.g, &neg, &self.p).expect("generator is invertible"))
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % &self.p)
    }

    pub fn product<'a>(&self, items: impl IntoIterator<Item = &'a GroupElement>) -> GroupElement {
        items
            .into_iter()
            .fold(GroupElement(BigUint::one()), |acc, x| self.mul(&acc, x))
    }

    pub fn s_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.q)
    }

    pub fn s_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar(((&a.0 + &self.q) - &b.0) % &self.q)
    }

    pub fn s_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.q)
    }

    pub fn s_neg(&self, a: &Scalar) -> Scalar {
        Scalar((&self.q - &a.0) % &self.q)
    }

    pub fn s_sum<'a>(&self, items: impl IntoIterator<Item = &'a Scalar>) -> Scalar {
        items
            .into_iter()
            .fold(Scalar(BigUint::zero()), |acc, x| self.s_add(&acc, x))
    }

    /// Uniform scalar in `[0, q-1]`.
    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_below(&self.q))
    }

    /// Uniform scalar in `[1, q-1]`.
    pub fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_range(&BigUint::one(), &self.q))
    }

    /// Uniform element of the order-`q` subgroup other than `exclude`.
    pub fn random_subgroup_element_except<R: RngCore + ?Sized>(
        &self,
        rng: &mut R,
        exclude: &GroupElement,
    ) -> GroupElement {
        loop {
            let candidate = self.g_pow(&self.random_scalar(rng));
            if &candidate != exclude {
                return candidate;
            }
        }
    }
}

fn reduce_signed(value: &BigInt, modulus: &BigUint) -> BigUint {
    let m = BigInt::from(modulus.clone());
    value
        .mod_floor(&m)
        .to_biguint()
        .expect("mod_floor with a positive modulus is non-negative")
}

/// `base^exp mod modulus`; a negative exponent raises the inverse of `base`.
pub fn mod_exp(base: &BigUint, exp: &BigInt, modulus: &BigUint) -> Result<BigUint> {
    if modulus <= &BigUint::one() {
        return Err(Error::InvalidModulus);
    }
    let magnitude = exp.magnitude();
    if exp.is_negative() {
        let inv = mod_inv(base, modulus)?;
        Ok(inv.modpow(magnitude, modulus))
    } else {
        Ok(base.modpow(magnitude, modulus))
    }
}

/// The inverse of `a` modulo `m`, in `[1, m-1]`.
pub fn mod_inv(a: &BigUint, m: &BigUint) -> Result<BigUint> {
    if m <= &BigUint::one() {
        return Err(Error::InvalidModulus);
    }
    let reduced = a % m;
    let not_invertible = || Error::NotInvertible {
        value: a.clone(),
        modulus: m.clone(),
    };
    if reduced.is_zero() {
        return Err(not_invertible());
    }
    let egcd = BigInt::from(reduced).extended_gcd(&BigInt::from(m.clone()));
    if !egcd.gcd.is_one() {
        return Err(not_invertible());
    }
    Ok(reduce_signed(&egcd.x, m))
}

/// `seed_k^((p-1)/q) mod p`, or a retry signal if the result is 1.
pub fn derive_generator(seed_k: &BigUint, p: &BigUint, q: &BigUint) -> Result<BigUint> {
    if seed_k.is_zero() || seed_k >= p {
        return Err(Error::InvalidParams(format!(
            "generator seed {seed_k} outside [1, p-1]"
        )));
    }
    let cofactor = (p - 1u32) / q;
    let g = seed_k.modpow(&cofactor, p);
    if g <= BigUint::one() {
        return Err(Error::DegenerateGenerator(seed_k.clone()));
    }
    Ok(g)
}

/// Outcome of each invariant check performed by [`validate_params`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidityReport {
    pub checks: Vec<ParamCheck>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamCheck {
    pub name: &'static str,
    pub passed: bool,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    pub fn passed(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.passed)
    }
}

pub fn validate_params(params: &GroupParams) -> ValidityReport {
    let GroupParams { p, q, g, profile } = params;
    let mut checks = vec![
        ParamCheck {
            name: "p is prime",
            passed: is_probable_prime(p),
        },
        ParamCheck {
            name: "q is prime",
            passed: is_probable_prime(q),
        },
        ParamCheck {
            name: "q divides p-1",
            passed: !q.is_zero() && p > &BigUint::one() && ((p - 1u32) % q).is_zero(),
        },
        ParamCheck {
            name: "g > 1",
            passed: g > &BigUint::one() && g < p,
        },
        ParamCheck {
            name: "g^q = 1 mod p",
            passed: p > &BigUint::one() && g.modpow(q, p).is_one(),
        },
    ];
    if *profile == Profile::Full {
        let size = ParamSize::FULL;
        checks.push(ParamCheck {
            name: "p has full size",
            passed: strictly_between_powers(p, size.p_bits),
        });
        checks.push(ParamCheck {
            name: "q has full size",
            passed: strictly_between_powers(q, size.q_bits),
        });
    }
    ValidityReport { checks }
}

/// `2^(bits-1) < n < 2^bits`.
fn strictly_between_powers(n: &BigUint, bits: u64) -> bool {
    let lower = BigUint::one() << (bits - 1);
    n > &lower && n.bits() == bits
}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = 1000usize; // sqrt(DETERMINISTIC_BOUND)
        let mut sieve = vec![true; limit + 1];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i <= limit {
            if sieve[i] {
                (i * i..=limit).step_by(i).for_each(|j| sieve[j] = false);
            }
            i += 1;
        }
        (0..=limit).filter(|&n| sieve[n]).map(|n| n as u32).collect()
    })
}

/// Primality test: exact below one million, Miller-Rabin (error <= 2^-80) above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if n < &BigUint::from(2u32) {
        return false;
    }
    for &sp in small_primes() {
        let sp = BigUint::from(sp);
        if n == &sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    if n < &BigUint::from(DETERMINISTIC_BOUND) {
        // no factor up to 1000 = sqrt(10^6)
        return true;
    }
    miller_rabin(n, MILLER_RABIN_ROUNDS, &mut rand::thread_rng())
}

fn miller_rabin<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn random_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R, budget: usize) -> Result<BigUint> {
    let low = (BigUint::one() << (bits - 1)) + 1u32;
    let high = BigUint::one() << bits;
    for _ in 0..budget {
        let candidate = rng.gen_biguint_range(&low, &high) | BigUint::one();
        if is_probable_prime(&candidate) {
            return Ok(candidate);
        }
    }
    Err(Error::SearchExhausted(budget))
}

/// Searches for `(p, q, g)` of the requested sizes with `p = 2qr + 1`.
pub fn generate_params<R: RngCore + ?Sized>(size: ParamSize, rng: &mut R) -> Result<GroupParams> {
    generate_params_with_budget(size, rng, DEFAULT_SEARCH_BUDGET)
}

pub fn generate_params_with_budget<R: RngCore + ?Sized>(
    size: ParamSize,
    rng: &mut R,
    budget: usize,
) -> Result<GroupParams> {
    if size.q_bits < 2 || size.p_bits < size.q_bits + 2 {
        return Err(Error::InvalidParams(format!(
            "cannot fit a {}-bit q into a {}-bit p",
            size.q_bits, size.p_bits
        )));
    }
    let q = random_prime(size.q_bits, rng, budget)?;
    let two_q = &q << 1u32;
    // 2^(p_bits-1) < 2qr + 1 < 2^p_bits
    let r_low = ((BigUint::one() << (size.p_bits - 1)) / &two_q) + 1u32;
    let r_high = ((BigUint::one() << size.p_bits) - 2u32) / &two_q;
    if r_low > r_high {
        return Err(Error::InvalidParams("no room for cofactor".into()));
    }
    let r_high_excl = r_high + 1u32;
    let mut p = None;
    for _ in 0..budget {
        let r = rng.gen_biguint_range(&r_low, &r_high_excl);
        let candidate = &two_q * r + 1u32;
        if strictly_between_powers(&candidate, size.p_bits) && is_probable_prime(&candidate) {
            p = Some(candidate);
            break;
        }
    }
    let p = p.ok_or(Error::SearchExhausted(budget))?;
    let p_minus_1 = &p - 1u32;
    let two = BigUint::from(2u32);
    for _ in 0..budget {
        let seed = rng.gen_biguint_range(&two, &p_minus_1);
        match derive_generator(&seed, &p, &q) {
            Ok(g) => return GroupParams::new(p, q, g, size.profile()),
            Err(Error::DegenerateGenerator(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SearchExhausted(budget))
}

/// The Lagrange coefficient at zero, `prod_{j != i} -u_j / (u_i - u_j) mod q`.
pub fn lagrange_coeff_zero(own_id: &Scalar, ids: &[Scalar], q: &BigUint) -> Result<Scalar> {
    check_ids(ids, q)?;
    if !ids.contains(own_id) {
        return Err(Error::IdNotInSubset(own_id.0.clone()));
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for other in ids.iter().filter(|&u| u != own_id) {
        num = (num * (q - &other.0)) % q;
        den = (den * ((&own_id.0 + q - &other.0) % q)) % q;
    }
    let den_inv = mod_inv(&den, q)?;
    Ok(Scalar((num * den_inv) % q))
}

/// Rejects zero identities and duplicates (both taken modulo `q`).
pub fn check_ids(ids: &[Scalar], q: &BigUint) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        let reduced = &id.0 % q;
        if reduced.is_zero() {
            return Err(Error::ZeroId);
        }
        if !seen.insert(reduced) {
            return Err(Error::DuplicateId(id.0.clone()));
        }
    }
    Ok(())
}
