//! Masked share distribution and modified shadows.
//!
//! The trusted center publishes `v_i = f(u_i) * y_i^K mod p` together with
//! `W = g^-K mod p`. Only the holder of `x_i` can strip the mask, since
//! `v_i * W^x_i = f(u_i) * g^(x_i K) * g^(-K x_i) = f(u_i)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_math::{lagrange_coeff_zero, GroupElement, GroupParams, Scalar};
use crate::shamir::Share;

/// Which side of the exchange a party belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Org {
    /// The signing organization.
    #[serde(rename = "S")]
    Sender,
    /// The verifying organization.
    #[serde(rename = "R")]
    Recipient,
}

impl fmt::Display for Org {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Org::Sender => "S",
            Org::Recipient => "R",
        })
    }
}

/// A party's public identity and key pair.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub org: Org,
    pub public_id: Scalar,
    pub secret_key: Scalar,
    pub public_key: GroupElement,
}

impl fmt::Debug for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Member")
            .field("org", &self.org)
            .field("public_id", &self.public_id)
            .field("public_key", &self.public_key)
            .finish_non_exhaustive()
    }
}

/// The part of a [`Member`] the rest of the world sees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberPublic {
    pub org: Org,
    pub public_id: Scalar,
    pub public_key: GroupElement,
}

impl Member {
    pub fn new(params: &GroupParams, org: Org, public_id: Scalar, secret_key: Scalar) -> Result<Self> {
        if public_id.is_zero() {
            return Err(Error::ZeroId);
        }
        let public_key = params.g_pow(&secret_key);
        Ok(Member {
            org,
            public_id,
            secret_key,
            public_key,
        })
    }

    pub fn random<R: rand::RngCore + ?Sized>(
        params: &GroupParams,
        org: Org,
        public_id: Scalar,
        rng: &mut R,
    ) -> Result<Self> {
        let secret_key = params.random_nonzero_scalar(rng);
        Member::new(params, org, public_id, secret_key)
    }

    /// Checks `public_key = g^secret_key` and that the identity is usable.
    pub fn validate(&self, params: &GroupParams) -> Result<()> {
        if self.public_id.is_zero() {
            return Err(Error::ZeroId);
        }
        if params.g_pow(&self.secret_key) != self.public_key {
            return Err(Error::Malformed(format!(
                "public key of member {} does not match its secret key",
                self.public_id
            )));
        }
        Ok(())
    }

    pub fn public(&self) -> MemberPublic {
        MemberPublic {
            org: self.org,
            public_id: self.public_id.clone(),
            public_key: self.public_key.clone(),
        }
    }
}

/// The public-channel payload `{member_id, v, W}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedShare {
    pub member_id: Scalar,
    pub v: GroupElement,
    #[serde(rename = "W")]
    pub w: GroupElement,
}

/// A share weighted by its Lagrange coefficient for one specific subset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModifiedShadow {
    pub member_id: Scalar,
    pub value: Scalar,
}

/// `share_value * member_pubkey^K mod p`. A zero share cannot be masked.
pub fn mask_share(
    share_value: &Scalar,
    member_pubkey: &GroupElement,
    k: &Scalar,
    params: &GroupParams,
) -> Result<GroupElement> {
    if k.is_zero() {
        return Err(Error::ZeroMaskExponent);
    }
    if share_value.is_zero() {
        return Err(Error::ZeroShare);
    }
    // f(u) < q < p embeds directly into Z_p
    let embedded = params.element(share_value.value().clone())?;
    Ok(params.mul(&embedded, &params.pow(member_pubkey, k)))
}

/// `v * W^secret_key mod p`, which must land in `[0, q-1]`.
pub fn recover_share(masked: &MaskedShare, secret_key: &Scalar, params: &GroupParams) -> Result<Scalar> {
    let unmasked = params.mul(&masked.v, &params.pow(&masked.w, secret_key));
    if unmasked.value() >= params.q() {
        return Err(Error::CorruptShare(masked.member_id.value().clone()));
    }
    Ok(params.scalar(unmasked.into_inner()))
}

/// `share.value * lagrange_coeff_zero(share.id, subset_ids) mod q`.
pub fn modified_shadow(share: &Share, subset_ids: &[Scalar], params: &GroupParams) -> Result<ModifiedShadow> {
    let coeff = lagrange_coeff_zero(&share.id, subset_ids, params.q())?;
    Ok(ModifiedShadow {
        member_id: share.id.clone(),
        value: params.s_mul(&share.value, &coeff),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shamir::{sample_polynomial, SecretPolynomial};
    use rand::{seq::SliceRandom, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn demo() -> GroupParams {
        GroupParams::small(47, 23, 2).unwrap()
    }

    fn masked(params: &GroupParams, id: u32, v: u32, w: u32) -> MaskedShare {
        MaskedShare {
            member_id: params.scalar(id),
            v: params.element(v).unwrap(),
            w: params.element(w).unwrap(),
        }
    }

    #[test]
    fn mask_examples() {
        let p = demo();
        let k = p.scalar(8u32);
        let y7 = p.element(7u32).unwrap();
        let y9 = p.element(9u32).unwrap();
        assert_eq!(
            mask_share(&p.scalar(8u32), &y7, &k, &p).unwrap(),
            p.element(34u32).unwrap()
        );
        assert_eq!(
            mask_share(&p.scalar(21u32), &y9, &k, &p).unwrap(),
            p.element(14u32).unwrap()
        );
        assert_eq!(mask_share(&p.scalar(0u32), &y7, &k, &p), Err(Error::ZeroShare));
        assert_eq!(
            mask_share(&p.scalar(5u32), &y7, &p.scalar(0u32), &p),
            Err(Error::ZeroMaskExponent)
        );
    }

    #[test]
    fn recover_examples() {
        let p = demo();
        let cases = [(2, 34, 12, 8), (9, 34, 10, 3), (11, 14, 15, 21)];
        for (id, v, x, expected) in cases {
            let got = recover_share(&masked(&p, id, v, 9), &p.scalar(x as u32), &p).unwrap();
            assert_eq!(got, p.scalar(expected as u32));
        }
    }

    #[test]
    fn recover_detects_out_of_range() {
        let p = demo();
        // 34 * 9^1 mod 47 = 24 >= q
        let err = recover_share(&masked(&p, 2, 34, 9), &p.scalar(1u32), &p);
        assert!(matches!(err, Err(Error::CorruptShare(_))));
    }

    #[test]
    fn shadow_examples() {
        let p = demo();
        let ids = |xs: &[u32]| xs.iter().map(|&u| p.scalar(u)).collect::<Vec<_>>();
        let share = Share {
            id: p.scalar(9u32),
            value: p.scalar(3u32),
        };
        let ms = modified_shadow(&share, &ids(&[9, 11, 5, 4]), &p).unwrap();
        assert_eq!(ms.value, p.scalar(5u32));

        let share = Share {
            id: p.scalar(11u32),
            value: p.scalar(21u32),
        };
        let ms = modified_shadow(&share, &ids(&[11, 8, 3, 6, 4]), &p).unwrap();
        assert_eq!(ms.value, p.scalar(19u32));

        let share = Share {
            id: p.scalar(6u32),
            value: p.scalar(13u32),
        };
        assert_eq!(modified_shadow(&share, &ids(&[6]), &p).unwrap().value, p.scalar(13u32));
        assert!(matches!(
            modified_shadow(&share, &ids(&[5, 4]), &p),
            Err(Error::IdNotInSubset(_))
        ));
    }

    #[test]
    fn shadow_sums_reach_secret() {
        let p = demo();
        let f_s = SecretPolynomial::from_coefficients(&p, &[11, 3, 13, 1]).unwrap();
        let f_r = SecretPolynomial::from_coefficients(&p, &[7, 2, 4, 3]).unwrap();
        for (poly, subset, secret) in [(&f_s, vec![9u32, 11, 5, 4], 11u32), (&f_r, vec![11, 8, 3, 6, 4], 7)] {
            let ids: Vec<Scalar> = subset.iter().map(|&u| p.scalar(u)).collect();
            let shadows: Vec<Scalar> = ids
                .iter()
                .map(|id| {
                    let share = Share {
                        id: id.clone(),
                        value: poly.eval(id, p.q()),
                    };
                    modified_shadow(&share, &ids, &p).unwrap().value
                })
                .collect();
            assert_eq!(p.s_sum(&shadows), p.scalar(secret));
        }
    }

    /// Every nonzero key and every nonzero share value over the small group.
    #[test]
    fn mask_recover_exhaustive() {
        let p = demo();
        let k = p.scalar(8u32);
        let w = p.g_pow_neg(&k);
        for x in 1u32..23 {
            let member = Member::new(&p, Org::Sender, p.scalar(1u32), p.scalar(x)).unwrap();
            for value in 1u32..23 {
                let v = mask_share(&p.scalar(value), &member.public_key, &k, &p).unwrap();
                let share = MaskedShare {
                    member_id: member.public_id.clone(),
                    v,
                    w: w.clone(),
                };
                assert_eq!(recover_share(&share, &member.secret_key, &p).unwrap(), p.scalar(value));
            }
        }
    }

    #[test]
    fn mask_recover_generated_params() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let p = crate::group_math::generate_params(
            crate::group_math::ParamSize {
                p_bits: 128,
                q_bits: 64,
            },
            &mut rng,
        )
        .unwrap();
        for _ in 0..200 {
            let member = Member::random(&p, Org::Recipient, p.scalar(3u32), &mut rng).unwrap();
            let k = p.random_nonzero_scalar(&mut rng);
            let value = p.random_nonzero_scalar(&mut rng);
            let share = MaskedShare {
                member_id: member.public_id.clone(),
                v: mask_share(&value, &member.public_key, &k, &p).unwrap(),
                w: p.g_pow_neg(&k),
            };
            assert_eq!(recover_share(&share, &member.secret_key, &p).unwrap(), value);
        }
    }

    #[test]
    fn random_subsets_shadow_sum() {
        let p = demo();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for t in 1..=5usize {
            let secret = p.random_scalar(&mut rng);
            let poly = sample_polynomial(secret.clone(), t - 1, &mut rng, &p);
            let mut ids: Vec<u32> = (1..23).collect();
            ids.shuffle(&mut rng);
            let ids: Vec<Scalar> = ids[..t].iter().map(|&u| p.scalar(u)).collect();
            let total = p.s_sum(
                &ids.iter()
                    .map(|id| {
                        let share = Share {
                            id: id.clone(),
                            value: poly.eval(id, p.q()),
                        };
                        modified_shadow(&share, &ids, &p).unwrap().value
                    })
                    .collect::<Vec<_>>(),
            );
            assert_eq!(total, secret);
        }
    }

    #[test]
    fn member_validation() {
        let p = demo();
        let m = Member::new(&p, Org::Sender, p.scalar(2u32), p.scalar(12u32)).unwrap();
        assert_eq!(m.public_key, p.element(7u32).unwrap());
        assert!(m.validate(&p).is_ok());
        let mut broken = m.clone();
        broken.public_key = p.element(8u32).unwrap();
        assert!(broken.validate(&p).is_err());
        assert_eq!(
            Member::new(&p, Org::Sender, p.scalar(0u32), p.scalar(1u32)),
            Err(Error::ZeroId)
        );
        let json = serde_json::to_string(&masked(&p, 2, 34, 9)).unwrap();
        assert_eq!(json, r#"{"member_id":"2","v":"34","W":"9"}"#);
    }
}
