//! Threshold verification by the recipient organization.
//!
//! Each verifier in `H_R` unmasks its share and sends its modified shadow to the
//! designated combiner (DC). The shadows sum to `x_R`, so the DC can compute
//! `R_R = W_S * U_S^x_R = V_S`, rederive `R_S = h(R_R, m)` and check
//! `g^S_S = R_R * y_S^R_S (mod p)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ctc::SignatureBundle;
use crate::error::{Error, Result};
use crate::group_math::{check_ids, GroupElement, GroupParams, Scalar};
use crate::hashing::ChallengeHash;
use crate::shamir::Share;
use crate::shares::{modified_shadow, recover_share, MaskedShare, Member, ModifiedShadow};

/// The DC's decision, `{valid, R_R, R_S}` on the wire.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    #[serde(rename = "R_R")]
    pub r_r: GroupElement,
    #[serde(rename = "R_S")]
    pub r_s: Scalar,
}

/// `sum MS_i mod q` over exactly `expected` distinct verifiers.
pub fn combine_shadows(shadows: &[ModifiedShadow], expected: usize, params: &GroupParams) -> Result<Scalar> {
    if shadows.len() != expected {
        return Err(Error::WrongCount {
            what: "shadows",
            expected,
            actual: shadows.len(),
        });
    }
    let ids: Vec<Scalar> = shadows.iter().map(|s| s.member_id.clone()).collect();
    check_ids(&ids, params.q())?;
    Ok(params.s_sum(shadows.iter().map(|s| &s.value)))
}

/// `R_R = W_S * U_S^shadow_sum mod p`.
pub fn recover_commitment(
    w_s: &GroupElement,
    u_s: &GroupElement,
    shadow_sum: &Scalar,
    params: &GroupParams,
) -> GroupElement {
    params.mul(w_s, &params.pow(u_s, shadow_sum))
}

/// Runs the final congruence check for a bundle given the combined shadow sum.
pub fn verify_bundle(
    bundle: &SignatureBundle,
    shadow_sum: &Scalar,
    y_s: &GroupElement,
    params: &GroupParams,
    hash: &ChallengeHash,
) -> Result<Verdict> {
    let r_r = recover_commitment(&bundle.w_s, &bundle.u_s, shadow_sum, params);
    let r_s = hash.hash_to_scalar(&r_r, &bundle.message, params)?;
    let lhs = params.g_pow(&bundle.s_s);
    let rhs = params.mul(&r_r, &params.pow(y_s, &r_s));
    let valid = bundle.check_ranges(params).is_ok() && lhs == rhs;
    Ok(Verdict { valid, r_r, r_s })
}

/// A verifier's contribution: unmask the share and weight it for the subset.
pub fn verifier_shadow(
    member: &Member,
    masked: &MaskedShare,
    subset: &[Scalar],
    params: &GroupParams,
) -> Result<ModifiedShadow> {
    if masked.member_id != member.public_id {
        return Err(Error::Malformed("masked share belongs to another member".into()));
    }
    let share = Share {
        id: member.public_id.clone(),
        value: recover_share(masked, &member.secret_key, params)?,
    };
    modified_shadow(&share, subset, params)
}

/// The designated combiner's view of a verification session.
#[derive(Debug)]
pub struct VerificationSession {
    subset: Vec<Scalar>,
    shadows: BTreeMap<Scalar, ModifiedShadow>,
    bundle: SignatureBundle,
}

impl VerificationSession {
    pub fn new(subset: Vec<Scalar>, bundle: SignatureBundle, params: &GroupParams) -> Result<Self> {
        check_ids(&subset, params.q())?;
        if subset.is_empty() {
            return Err(Error::Empty("verifier subset"));
        }
        Ok(VerificationSession {
            subset,
            shadows: BTreeMap::new(),
            bundle,
        })
    }

    pub fn bundle(&self) -> &SignatureBundle {
        &self.bundle
    }

    pub fn receive_shadow(&mut self, shadow: ModifiedShadow) -> Result<()> {
        if !self.subset.contains(&shadow.member_id) {
            return Err(Error::IdNotInSubset(shadow.member_id.value().clone()));
        }
        if self.shadows.contains_key(&shadow.member_id) {
            return Err(Error::DuplicateId(shadow.member_id.value().clone()));
        }
        self.shadows.insert(shadow.member_id.clone(), shadow);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.shadows.len() == self.subset.len()
    }

    /// Refuses to decide until every verifier in the subset has contributed.
    pub fn verdict(&self, y_s: &GroupElement, params: &GroupParams, hash: &ChallengeHash) -> Result<Verdict> {
        if let Some(missing) = self.subset.iter().find(|id| !self.shadows.contains_key(*id)) {
            return Err(Error::Missing(format!("shadow from verifier {missing}")));
        }
        let shadows: Vec<ModifiedShadow> = self.shadows.values().cloned().collect();
        let sum = combine_shadows(&shadows, self.subset.len(), params)?;
        verify_bundle(&self.bundle, &sum, y_s, params, hash)
    }
}
