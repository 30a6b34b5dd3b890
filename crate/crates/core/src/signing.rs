//! Per-signer session logic and the single-signer Schnorr reference scheme.
//!
//! Each signer `i` in the signing subset draws two nonces `K1, K2` and commits to
//!
//! ```text
//! u_i = g^-K2        (broadcast)
//! v_i = g^K1         (private to the signing subset)
//! w_i = g^K1 y_R^K2  (broadcast)
//! ```
//!
//! The products `U_S`, `V_S`, `W_S` satisfy `W_S * U_S^x_R = V_S`, which is what
//! lets the recipient organization recover `V_S` without ever seeing it.

use std::collections::BTreeMap;
use std::fmt;

use log::debug;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_math::{check_ids, GroupElement, GroupParams, Scalar};
use crate::hashing::ChallengeHash;
use crate::shamir::Share;
use crate::shares::{modified_shadow, recover_share, MaskedShare, Member, ModifiedShadow};

/// A signer's per-session nonce pair `(K1, K2)`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nonces {
    pub k1: Scalar,
    pub k2: Scalar,
}

impl fmt::Debug for Nonces {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Nonces(..)")
    }
}

impl Nonces {
    pub fn random<R: RngCore + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        Nonces {
            k1: params.random_nonzero_scalar(rng),
            k2: params.random_nonzero_scalar(rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonceCommitment {
    pub signer_id: Scalar,
    pub u: GroupElement,
    pub v: GroupElement,
    pub w: GroupElement,
}

/// Broadcast half of a commitment, `{signer_id, u, w}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentBroadcast {
    pub signer_id: Scalar,
    pub u: GroupElement,
    pub w: GroupElement,
}

/// Private half of a commitment, `{signer_id, v}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentPrivate {
    pub signer_id: Scalar,
    pub v: GroupElement,
}

impl NonceCommitment {
    pub fn broadcast(&self) -> CommitmentBroadcast {
        CommitmentBroadcast {
            signer_id: self.signer_id.clone(),
            u: self.u.clone(),
            w: self.w.clone(),
        }
    }

    pub fn private(&self) -> CommitmentPrivate {
        CommitmentPrivate {
            signer_id: self.signer_id.clone(),
            v: self.v.clone(),
        }
    }

    /// Reassembles a commitment from its two halves.
    pub fn join(public: &CommitmentBroadcast, private: &CommitmentPrivate) -> Result<Self> {
        if public.signer_id != private.signer_id {
            return Err(Error::Malformed("commitment halves from different signers".into()));
        }
        Ok(NonceCommitment {
            signer_id: public.signer_id.clone(),
            u: public.u.clone(),
            v: private.v.clone(),
            w: public.w.clone(),
        })
    }

    /// Checks the commitment against the nonces that produced it.
    pub fn is_consistent(&self, nonces: &Nonces, y_r: &GroupElement, params: &GroupParams) -> bool {
        params.mul(&self.u, &params.g_pow(&nonces.k2)).is_one()
            && self.w == params.mul(&self.v, &params.pow(y_r, &nonces.k2))
    }
}

/// `s_i` from signer `signer_id`, `{signer_id, s}` on the wire.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialSignature {
    pub signer_id: Scalar,
    pub s: Scalar,
}

/// The products `U_S`, `V_S`, `W_S` (all mod p).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Aggregates {
    pub u_s: GroupElement,
    pub v_s: GroupElement,
    pub w_s: GroupElement,
}

pub fn make_nonce_commitment(
    signer_id: Scalar,
    nonces: &Nonces,
    y_r: &GroupElement,
    params: &GroupParams,
) -> Result<NonceCommitment> {
    if nonces.k1.is_zero() || nonces.k2.is_zero() {
        return Err(Error::ZeroNonce);
    }
    let v = params.g_pow(&nonces.k1);
    Ok(NonceCommitment {
        signer_id,
        u: params.g_pow_neg(&nonces.k2),
        w: params.mul(&v, &params.pow(y_r, &nonces.k2)),
        v,
    })
}

/// Multiplies the commitments componentwise modulo `p`.
pub fn aggregate_commitments(
    commitments: &[NonceCommitment],
    expected: usize,
    params: &GroupParams,
) -> Result<Aggregates> {
    if commitments.len() != expected {
        return Err(Error::WrongCount {
            what: "commitments",
            expected,
            actual: commitments.len(),
        });
    }
    let ids: Vec<Scalar> = commitments.iter().map(|c| c.signer_id.clone()).collect();
    check_ids(&ids, params.q())?;
    let aggregates = Aggregates {
        u_s: params.product(commitments.iter().map(|c| &c.u)),
        v_s: params.product(commitments.iter().map(|c| &c.v)),
        w_s: params.product(commitments.iter().map(|c| &c.w)),
    };
    if aggregates.u_s.is_one() || aggregates.v_s.is_one() {
        debug!("commitment product collapsed to 1");
    }
    Ok(aggregates)
}

/// `R_S = h(V_S, m)`.
pub fn compute_challenge(
    v_s: &GroupElement,
    message: &[u8],
    hash: &ChallengeHash,
    params: &GroupParams,
) -> Result<Scalar> {
    hash.hash_to_scalar(v_s, message, params)
}

/// `s_i = K1 + MS_i * R_S mod q`.
pub fn partial_sign(k1: &Scalar, shadow: &ModifiedShadow, r_s: &Scalar, params: &GroupParams) -> PartialSignature {
    PartialSignature {
        signer_id: shadow.member_id.clone(),
        s: params.s_add(k1, &params.s_mul(&shadow.value, r_s)),
    }
}

/// One signer's view of a signing session.
pub struct SignerSession {
    member: Member,
    masked: MaskedShare,
    subset: Vec<Scalar>,
    nonces: Nonces,
    own: NonceCommitment,
    public_halves: BTreeMap<Scalar, CommitmentBroadcast>,
    private_halves: BTreeMap<Scalar, CommitmentPrivate>,
    aggregates: Option<Aggregates>,
    challenge: Option<Scalar>,
}

impl fmt::Debug for SignerSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignerSession")
            .field("signer", &self.member.public_id)
            .field("subset", &self.subset)
            .field("received", &self.public_halves.len())
            .finish_non_exhaustive()
    }
}

impl SignerSession {
    pub fn start(
        member: Member,
        masked: MaskedShare,
        subset: Vec<Scalar>,
        nonces: Nonces,
        y_r: &GroupElement,
        params: &GroupParams,
    ) -> Result<Self> {
        check_ids(&subset, params.q())?;
        if !subset.contains(&member.public_id) {
            return Err(Error::IdNotInSubset(member.public_id.value().clone()));
        }
        if masked.member_id != member.public_id {
            return Err(Error::Malformed("masked share belongs to another member".into()));
        }
        let own = make_nonce_commitment(member.public_id.clone(), &nonces, y_r, params)?;
        let mut session = SignerSession {
            member,
            masked,
            subset,
            nonces,
            own: own.clone(),
            public_halves: BTreeMap::new(),
            private_halves: BTreeMap::new(),
            aggregates: None,
            challenge: None,
        };
        session.receive_public(own.broadcast())?;
        session.receive_private(own.private())?;
        Ok(session)
    }

    pub fn signer_id(&self) -> &Scalar {
        &self.member.public_id
    }

    pub fn commitment(&self) -> &NonceCommitment {
        &self.own
    }

    fn check_sender(&self, id: &Scalar) -> Result<()> {
        if self.subset.contains(id) {
            Ok(())
        } else {
            Err(Error::IdNotInSubset(id.value().clone()))
        }
    }

    pub fn receive_public(&mut self, msg: CommitmentBroadcast) -> Result<()> {
        self.check_sender(&msg.signer_id)?;
        if self.public_halves.contains_key(&msg.signer_id) {
            return Err(Error::DuplicateId(msg.signer_id.value().clone()));
        }
        self.public_halves.insert(msg.signer_id.clone(), msg);
        Ok(())
    }

    pub fn receive_private(&mut self, msg: CommitmentPrivate) -> Result<()> {
        self.check_sender(&msg.signer_id)?;
        if self.private_halves.contains_key(&msg.signer_id) {
            return Err(Error::DuplicateId(msg.signer_id.value().clone()));
        }
        self.private_halves.insert(msg.signer_id.clone(), msg);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.subset
            .iter()
            .all(|id| self.public_halves.contains_key(id) && self.private_halves.contains_key(id))
    }

    /// Aggregates commitments, derives the challenge and produces this signer's partial.
    pub fn finalize(&mut self, message: &[u8], hash: &ChallengeHash, params: &GroupParams) -> Result<PartialSignature> {
        if let Some(missing) = self
            .subset
            .iter()
            .find(|id| !(self.public_halves.contains_key(*id) && self.private_halves.contains_key(*id)))
        {
            return Err(Error::Missing(format!("commitment from signer {missing}")));
        }
        let commitments = self
            .subset
            .iter()
            .map(|id| NonceCommitment::join(&self.public_halves[id], &self.private_halves[id]))
            .collect::<Result<Vec<_>>>()?;
        let aggregates = aggregate_commitments(&commitments, self.subset.len(), params)?;
        let r_s = compute_challenge(&aggregates.v_s, message, hash, params)?;
        let share = Share {
            id: self.member.public_id.clone(),
            value: recover_share(&self.masked, &self.member.secret_key, params)?,
        };
        let shadow = modified_shadow(&share, &self.subset, params)?;
        let partial = partial_sign(&self.nonces.k1, &shadow, &r_s, params);
        self.aggregates = Some(aggregates);
        self.challenge = Some(r_s);
        Ok(partial)
    }

    pub fn aggregates(&self) -> Option<&Aggregates> {
        self.aggregates.as_ref()
    }

    pub fn challenge(&self) -> Option<&Scalar> {
        self.challenge.as_ref()
    }
}

/// A single-signer Schnorr signature `(r, s)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchnorrSignature {
    pub r: Scalar,
    pub s: Scalar,
}

/// `r = h(g^k, m)`, `s = k - x r mod q`.
pub fn schnorr_sign(
    secret_key: &Scalar,
    message: &[u8],
    nonce: &Scalar,
    params: &GroupParams,
    hash: &ChallengeHash,
) -> Result<SchnorrSignature> {
    if nonce.is_zero() {
        return Err(Error::ZeroNonce);
    }
    let r = hash.hash_to_scalar(&params.g_pow(nonce), message, params)?;
    let s = params.s_sub(nonce, &params.s_mul(secret_key, &r));
    Ok(SchnorrSignature { r, s })
}

/// Accepts iff `r = h(g^s y^r, m)`.
pub fn schnorr_verify(
    public_key: &GroupElement,
    message: &[u8],
    signature: &SchnorrSignature,
    params: &GroupParams,
    hash: &ChallengeHash,
) -> bool {
    if params.check_scalar(&signature.r).is_err() || params.check_scalar(&signature.s).is_err() {
        return false;
    }
    let commitment = params.mul(&params.g_pow(&signature.s), &params.pow(public_key, &signature.r));
    match hash.hash_to_scalar(&commitment, message, params) {
        Ok(r) => r == signature.r,
        Err(_) => false,
    }
}
