//! Polynomial secret sharing over `Z_q`.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::group_math::{check_ids, lagrange_coeff_zero, mod_inv, GroupParams, Scalar};

/// A secret polynomial held only by the trusted center. Constant term first.
///
/// Deliberately not `Serialize`: the coefficients only leave memory through the
/// center's private state file.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretPolynomial {
    coefficients: Vec<Scalar>,
}

impl std::fmt::Debug for SecretPolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SecretPolynomial(degree {})", self.degree())
    }
}

impl SecretPolynomial {
    /// Builds a polynomial from fixed coefficients, reducing each modulo `q`.
    pub fn from_coefficients(params: &GroupParams, coefficients: &[u64]) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Empty("polynomial coefficients"));
        }
        Ok(SecretPolynomial {
            coefficients: coefficients.iter().map(|&c| params.scalar(c)).collect(),
        })
    }

    pub fn from_scalars(coefficients: Vec<Scalar>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Empty("polynomial coefficients"));
        }
        Ok(SecretPolynomial { coefficients })
    }

    pub fn coefficients(&self) -> &[Scalar] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// The constant term, i.e. the shared secret.
    pub fn secret(&self) -> &Scalar {
        &self.coefficients[0]
    }

    pub fn eval(&self, x: &Scalar, q: &BigUint) -> Scalar {
        eval_poly(self, x, q)
    }
}

/// A share `(u_i, f(u_i))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Share {
    pub id: Scalar,
    pub value: Scalar,
}

/// Random polynomial of the given degree with `secret` as its constant term.
pub fn sample_polynomial<R: RngCore + ?Sized>(
    secret: Scalar,
    degree: usize,
    rng: &mut R,
    params: &GroupParams,
) -> SecretPolynomial {
    let mut coefficients = Vec::with_capacity(degree + 1);
    coefficients.push(secret);
    coefficients.extend((0..degree).map(|_| params.random_scalar(rng)));
    SecretPolynomial { coefficients }
}

/// Horner evaluation modulo `q`.
pub fn eval_poly(poly: &SecretPolynomial, x: &Scalar, q: &BigUint) -> Scalar {
    let value = poly
        .coefficients
        .iter()
        .rev()
        .fold(BigUint::zero(), |acc, c| (acc * x.value() + c.value()) % q);
    Scalar::from_reduced(value)
}

/// Interpolates the shares at zero.
pub fn reconstruct_zero(shares: &[Share], q: &BigUint) -> Result<Scalar> {
    if shares.is_empty() {
        return Err(Error::Empty("shares"));
    }
    let ids: Vec<Scalar> = shares.iter().map(|s| s.id.clone()).collect();
    let mut acc = BigUint::zero();
    for share in shares {
        let coeff = lagrange_coeff_zero(&share.id, &ids, q)?;
        acc = (acc + share.value.value() * coeff.value()) % q;
    }
    Ok(Scalar::from_reduced(acc))
}

/// Recovers every coefficient of the unique polynomial of degree `< shares.len()`
/// through the shares.
pub fn reconstruct_polynomial(shares: &[Share], q: &BigUint) -> Result<SecretPolynomial> {
    if shares.is_empty() {
        return Err(Error::Empty("shares"));
    }
    let ids: Vec<Scalar> = shares.iter().map(|s| s.id.clone()).collect();
    check_ids(&ids, q)?;
    let n = shares.len();
    let mut result = vec![BigUint::zero(); n];
    for (i, share) in shares.iter().enumerate() {
        // basis numerator prod_{j != i} (x - u_j), coefficients low to high
        let mut basis = vec![BigUint::one()];
        let mut denom = BigUint::one();
        for (j, other) in shares.iter().enumerate() {
            if i == j {
                continue;
            }
            let neg_u = (q - other.id.value() % q) % q;
            let mut next = vec![BigUint::zero(); basis.len() + 1];
            for (k, c) in basis.iter().enumerate() {
                next[k] = (&next[k] + c * &neg_u) % q;
                next[k + 1] = (&next[k + 1] + c) % q;
            }
            basis = next;
            denom = denom * ((share.id.value() + q - other.id.value() % q) % q) % q;
        }
        let scale = share.value.value() * mod_inv(&denom, q)? % q;
        for (k, c) in basis.iter().enumerate() {
            result[k] = (&result[k] + c * &scale) % q;
        }
    }
    Ok(SecretPolynomial {
        coefficients: result.into_iter().map(Scalar::from_reduced).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{seq::SliceRandom, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn demo() -> GroupParams {
        GroupParams::small(47, 23, 2).unwrap()
    }

    fn sender_poly(params: &GroupParams) -> SecretPolynomial {
        SecretPolynomial::from_coefficients(params, &[11, 3, 13, 1]).unwrap()
    }

    fn share(params: &GroupParams, id: u64, value: u64) -> Share {
        Share {
            id: params.scalar(id),
            value: params.scalar(value),
        }
    }

    #[test]
    fn sample_keeps_secret() {
        let params = demo();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let poly = sample_polynomial(params.scalar(11u32), 3, &mut rng, &params);
        assert_eq!(poly.degree(), 3);
        assert_eq!(poly.eval(&params.scalar(0u32), params.q()), params.scalar(11u32));
        let constant = sample_polynomial(params.scalar(5u32), 0, &mut rng, &params);
        assert_eq!(constant.coefficients(), &[params.scalar(5u32)]);
    }

    #[test]
    fn eval_examples() {
        let params = demo();
        let f_s = sender_poly(&params);
        assert_eq!(f_s.eval(&params.scalar(2u32), params.q()), params.scalar(8u32));
        assert_eq!(f_s.eval(&params.scalar(0u32), params.q()), params.scalar(11u32));
        let f_r = SecretPolynomial::from_coefficients(&params, &[7, 2, 4, 3]).unwrap();
        assert_eq!(f_r.eval(&params.scalar(6u32), params.q()), params.scalar(6u32));
    }

    #[test]
    fn reconstruct_examples() {
        let params = demo();
        let shares = [
            share(&params, 9, 3),
            share(&params, 11, 4),
            share(&params, 5, 16),
            share(&params, 4, 19),
        ];
        assert_eq!(reconstruct_zero(&shares, params.q()).unwrap(), params.scalar(11u32));
        let poly = reconstruct_polynomial(&shares, params.q()).unwrap();
        assert_eq!(poly, sender_poly(&params));

        let single = [share(&params, 7, 13)];
        assert_eq!(reconstruct_zero(&single, params.q()).unwrap(), params.scalar(13u32));
        assert_eq!(
            reconstruct_polynomial(&single, params.q()).unwrap().coefficients(),
            &[params.scalar(13u32)]
        );
    }

    #[test]
    fn reconstruct_rejects_duplicates() {
        let params = demo();
        let shares = [share(&params, 9, 3), share(&params, 9, 4)];
        assert!(matches!(
            reconstruct_zero(&shares, params.q()),
            Err(Error::DuplicateId(_))
        ));
        assert!(matches!(
            reconstruct_polynomial(&shares, params.q()),
            Err(Error::DuplicateId(_))
        ));
        assert_eq!(reconstruct_zero(&[], params.q()), Err(Error::Empty("shares")));
    }

    #[test]
    fn random_degree_two_roundtrip() {
        let params = demo();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..20 {
            let secret = params.random_scalar(&mut rng);
            let poly = sample_polynomial(secret, 2, &mut rng, &params);
            let shares: Vec<Share> = [3u32, 14, 20]
                .iter()
                .map(|&u| {
                    let id = params.scalar(u);
                    Share {
                        value: poly.eval(&id, params.q()),
                        id,
                    }
                })
                .collect();
            assert_eq!(reconstruct_polynomial(&shares, params.q()).unwrap(), poly);
        }
    }

    /// With 2 shares of a degree-2 polynomial over Z_23, enumerate all 23^3 polynomials
    /// and check that every candidate secret is consistent with the observed shares.
    #[test]
    fn perfect_secrecy_exhaustive() {
        let q = 23u64;
        let params = demo();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..5 {
            let poly = sample_polynomial(params.scalar(9u32), 2, &mut rng, &params);
            let observed: Vec<(u64, u64)> = [4u64, 17]
                .iter()
                .map(|&u| {
                    let v = poly.eval(&params.scalar(u), params.q());
                    (u, v.value().try_into().unwrap())
                })
                .collect();
            for candidate in 0..q {
                let consistent = (0..q).any(|a1| {
                    (0..q).any(|a2| {
                        observed
                            .iter()
                            .all(|&(u, v)| (candidate + a1 * u + a2 * u * u) % q == v)
                    })
                });
                assert!(consistent, "secret {candidate} ruled out");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn roundtrip_any_subset(seed in any::<u64>(), degree in 0usize..=5) {
                let params = demo();
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                let secret = params.random_scalar(&mut rng);
                let poly = sample_polynomial(secret.clone(), degree, &mut rng, &params);
                let mut ids: Vec<u64> = (1..23).collect();
                ids.shuffle(&mut rng);
                ids.truncate(8);
                let all: Vec<Share> = ids
                    .iter()
                    .map(|&u| {
                        let id = params.scalar(u);
                        Share { value: poly.eval(&id, params.q()), id }
                    })
                    .collect();
                let subset: Vec<Share> = all
                    .choose_multiple(&mut rng, degree + 1)
                    .cloned()
                    .collect();
                prop_assert_eq!(reconstruct_zero(&subset, params.q()).unwrap(), secret);
                prop_assert_eq!(reconstruct_polynomial(&subset, params.q()).unwrap(), poly);
            }
        }
    }
}
