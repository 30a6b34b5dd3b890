//! A complete small deployment over `p = 47, q = 23, g = 2` with fixed polynomials,
//! keys, masking exponent, nonces and a scripted challenge hash, plus a step-by-step
//! trace of every intermediate value and the values it is expected to produce.
//!
//! Sender org: 7 members, threshold 4, `f_S(x) = 11 + 3x + 13x^2 + x^3`.
//! Recipient org: 6 members, threshold 5, `f_R(x) = 7 + 2x + 4x^2 + 3x^3`.

use crate::ctc::{Ctc, OrgSpec, PolynomialSource, SignatureBundle};
use crate::error::Result;
use crate::group_math::{GroupParams, Scalar};
use crate::hashing::{ChallengeHash, ScriptEntry};
use crate::protocol::{FixedNonces, KeyRing, Scheduler, SessionConfig};
use crate::shamir::{SecretPolynomial, Share};
use crate::shares::{modified_shadow, recover_share, Member, Org};
use crate::signing::{aggregate_commitments, compute_challenge, make_nonce_commitment, partial_sign, Nonces};
use crate::verification::{combine_shadows, recover_commitment, verify_bundle};

pub const MESSAGE: &[u8] = b"worked-example";
pub const MASK_EXPONENT: u64 = 8;
pub const SENDER_COEFFICIENTS: [u64; 4] = [11, 3, 13, 1];
pub const RECIPIENT_COEFFICIENTS: [u64; 4] = [7, 2, 4, 3];

/// `(label, public id, secret key)` for each sender member.
pub const SENDER_MEMBERS: [(&str, u64, u64); 7] = [
    ("S1", 2, 12),
    ("S2", 9, 10),
    ("S3", 8, 14),
    ("S4", 11, 16),
    ("S5", 3, 3),
    ("S6", 5, 19),
    ("S7", 4, 17),
];

pub const RECIPIENT_MEMBERS: [(&str, u64, u64); 6] = [
    ("R1", 11, 15),
    ("R2", 5, 9),
    ("R3", 8, 11),
    ("R4", 3, 18),
    ("R5", 6, 6),
    ("R6", 4, 13),
];

/// Signers with their `(K1, K2)`.
pub const SIGNERS: [(&str, u64, u64, u64); 4] =
    [("S2", 9, 5, 7), ("S4", 11, 4, 3), ("S6", 5, 12, 18), ("S7", 4, 21, 11)];

pub const VERIFIERS: [(&str, u64); 5] = [("R1", 11), ("R3", 8), ("R4", 3), ("R5", 6), ("R6", 4)];

pub fn params() -> GroupParams {
    GroupParams::small(47, 23, 2).expect("fixture parameters are valid")
}

/// Scripted hash with the single entry `h(3, MESSAGE) = 8`.
pub fn hash() -> ChallengeHash {
    ChallengeHash::scripted([ScriptEntry {
        elem: 3u32.into(),
        message: String::from_utf8(MESSAGE.to_vec()).expect("ascii"),
        output: 8u32.into(),
    }])
}

fn members(p: &GroupParams, org: Org, table: &[(&str, u64, u64)]) -> Result<Vec<Member>> {
    table
        .iter()
        .map(|&(_, id, x)| Member::new(p, org, p.scalar(id), p.scalar(x)))
        .collect()
}

pub fn keyring() -> Result<KeyRing> {
    let p = params();
    let mut members_all = members(&p, Org::Sender, &SENDER_MEMBERS)?;
    members_all.extend(members(&p, Org::Recipient, &RECIPIENT_MEMBERS)?);
    Ok(KeyRing { members: members_all })
}

fn spec(p: &GroupParams, keys: &KeyRing, org: Org, threshold: usize, coefficients: &[u64]) -> Result<OrgSpec> {
    Ok(OrgSpec {
        org,
        threshold,
        roster: keys.of(org).map(Member::public).collect(),
        source: PolynomialSource::Fixed(SecretPolynomial::from_coefficients(p, coefficients)?),
    })
}

/// The center and the members' keys.
pub fn deployment() -> Result<(Ctc, KeyRing)> {
    let p = params();
    let keys = keyring()?;
    let sender = spec(&p, &keys, Org::Sender, 4, &SENDER_COEFFICIENTS)?;
    let recipient = spec(&p, &keys, Org::Recipient, 5, &RECIPIENT_COEFFICIENTS)?;
    // fixed polynomials and K leave nothing for the generator to do
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let ctc = Ctc::setup(p.clone(), &sender, &recipient, Some(p.scalar(MASK_EXPONENT)), &mut rng)?;
    Ok((ctc, keys))
}

pub fn ctc() -> Result<Ctc> {
    Ok(deployment()?.0)
}

pub fn signer_ids(p: &GroupParams) -> Vec<Scalar> {
    SIGNERS.iter().map(|&(_, id, _, _)| p.scalar(id)).collect()
}

pub fn verifier_ids(p: &GroupParams) -> Vec<Scalar> {
    VERIFIERS.iter().map(|&(_, id)| p.scalar(id)).collect()
}

pub fn nonces(p: &GroupParams) -> Vec<FixedNonces> {
    SIGNERS
        .iter()
        .map(|&(_, id, k1, k2)| FixedNonces {
            signer_id: p.scalar(id),
            nonces: Nonces {
                k1: p.scalar(k1),
                k2: p.scalar(k2),
            },
        })
        .collect()
}

/// Session config: the four signers with fixed nonces, five verifiers, R1 combines.
pub fn session_config(ctc: &Ctc) -> SessionConfig {
    let p = ctc.params();
    SessionConfig {
        hash: hash(),
        signers: signer_ids(p),
        verifiers: verifier_ids(p),
        combiner: p.scalar(11u32),
        combiner_in_subset: true,
        seed: Some(0),
        nonces: nonces(p),
        scheduler: Scheduler::Sequential,
        diagnostics: false,
    }
}

/// The bundle `{15, 34, 18, MESSAGE}`.
pub fn bundle(p: &GroupParams) -> SignatureBundle {
    SignatureBundle {
        s_s: p.scalar(15u32),
        u_s: p.element(34u32).expect("in range"),
        w_s: p.element(18u32).expect("in range"),
        message: MESSAGE.to_vec(),
    }
}

/// Expected trace, in the order [`trace`] produces it.
///
/// Two table entries are corrected: member S5's secret key is 3 (the only key with
/// `2^x = 8`), and S6's masked share is `16 * 3^8 mod 47 = 25`.
pub const EXPECTED: &[(&str, &str)] = &[
    ("y_S", "27"),
    ("y_R", "34"),
    ("W", "9"),
    ("v_S1", "34"),
    ("v_S2", "34"),
    ("v_S3", "38"),
    ("v_S4", "9"),
    ("v_S5", "6"),
    ("v_S6", "25"),
    ("v_S7", "40"),
    ("v_R1", "14"),
    ("v_R2", "25"),
    ("v_R3", "16"),
    ("v_R4", "20"),
    ("v_R5", "24"),
    ("v_R6", "32"),
    ("commit_S2", "(18, 32, 21)"),
    ("commit_S4", "(6, 16, 4)"),
    ("commit_S6", "(32, 7, 1)"),
    ("commit_S7", "(7, 12, 17)"),
    ("U_S", "34"),
    ("V_S", "3"),
    ("W_S", "18"),
    ("R_S", "8"),
    ("share_S2", "3"),
    ("share_S4", "4"),
    ("share_S6", "16"),
    ("share_S7", "19"),
    ("MS_S2", "5"),
    ("MS_S4", "21"),
    ("MS_S6", "12"),
    ("MS_S7", "19"),
    ("s_S2", "22"),
    ("s_S4", "11"),
    ("s_S6", "16"),
    ("s_S7", "12"),
    ("S_S", "15"),
    ("bundle", "(15, 34, 18)"),
    ("share_R1", "21"),
    ("share_R3", "21"),
    ("share_R4", "15"),
    ("share_R5", "6"),
    ("share_R6", "18"),
    ("MS_R1", "19"),
    ("MS_R3", "4"),
    ("MS_R4", "11"),
    ("MS_R5", "9"),
    ("MS_R6", "10"),
    ("shadow_sum", "7"),
    ("R_R", "3"),
    ("R_S'", "8"),
    ("g^S_S", "9"),
    ("R_R*y_S^R_S", "9"),
    ("verdict", "valid"),
];

/// Recomputes every intermediate value of the deployment, signing and verification.
pub fn trace() -> Result<Vec<(String, String)>> {
    let (ctc, keys) = deployment()?;
    let p = ctc.params().clone();
    let h = hash();
    let mut out: Vec<(String, String)> = Vec::new();
    let mut put = |name: &str, value: String| out.push((name.to_string(), value));

    put("y_S", ctc.sender().public_key().to_string());
    put("y_R", ctc.recipient().public_key().to_string());
    put("W", ctc.w().to_string());
    for (label, share) in SENDER_MEMBERS.iter().zip(ctc.sender().masked_shares()) {
        put(&format!("v_{}", label.0), share.v.to_string());
    }
    for (label, share) in RECIPIENT_MEMBERS.iter().zip(ctc.recipient().masked_shares()) {
        put(&format!("v_{}", label.0), share.v.to_string());
    }

    let y_r = ctc.recipient().public_key();
    let subset = signer_ids(&p);
    let mut commitments = Vec::new();
    for (fixed, &(label, ..)) in nonces(&p).iter().zip(&SIGNERS) {
        let c = make_nonce_commitment(fixed.signer_id.clone(), &fixed.nonces, y_r, &p)?;
        put(&format!("commit_{label}"), format!("({}, {}, {})", c.u, c.v, c.w));
        commitments.push(c);
    }
    let agg = aggregate_commitments(&commitments, subset.len(), &p)?;
    put("U_S", agg.u_s.to_string());
    put("V_S", agg.v_s.to_string());
    put("W_S", agg.w_s.to_string());
    let r_s = compute_challenge(&agg.v_s, MESSAGE, &h, &p)?;
    put("R_S", r_s.to_string());

    let mut shares = Vec::new();
    for &(label, id, ..) in &SIGNERS {
        let id = p.scalar(id);
        let member = keys.get(Org::Sender, &id)?;
        let value = recover_share(ctc.sender().masked_share(&id)?, &member.secret_key, &p)?;
        put(&format!("share_{label}"), value.to_string());
        shares.push(Share { id, value });
    }
    let mut shadows = Vec::new();
    for (share, &(label, ..)) in shares.iter().zip(&SIGNERS) {
        let ms = modified_shadow(share, &subset, &p)?;
        put(&format!("MS_{label}"), ms.value.to_string());
        shadows.push(ms);
    }
    let mut partials = Vec::new();
    for ((shadow, fixed), &(label, ..)) in shadows.iter().zip(nonces(&p)).zip(&SIGNERS) {
        let partial = partial_sign(&fixed.nonces.k1, shadow, &r_s, &p);
        put(&format!("s_{label}"), partial.s.to_string());
        partials.push(partial.s);
    }
    let s_s = crate::ctc::aggregate_partials(&partials, subset.len(), &p)?;
    put("S_S", s_s.to_string());
    let bundle = SignatureBundle {
        s_s,
        u_s: agg.u_s,
        w_s: agg.w_s,
        message: MESSAGE.to_vec(),
    };
    put("bundle", format!("({}, {}, {})", bundle.s_s, bundle.u_s, bundle.w_s));

    let verifiers = verifier_ids(&p);
    let mut r_shadows = Vec::new();
    let mut lines = Vec::new();
    for &(label, id) in &VERIFIERS {
        let id = p.scalar(id);
        let member = keys.get(Org::Recipient, &id)?;
        let value = recover_share(ctc.recipient().masked_share(&id)?, &member.secret_key, &p)?;
        let ms = modified_shadow(
            &Share {
                id,
                value: value.clone(),
            },
            &verifiers,
            &p,
        )?;
        put(&format!("share_{label}"), value.to_string());
        lines.push((format!("MS_{label}"), ms.value.to_string()));
        r_shadows.push(ms);
    }
    for (name, value) in lines {
        put(&name, value);
    }
    let sum = combine_shadows(&r_shadows, verifiers.len(), &p)?;
    put("shadow_sum", sum.to_string());
    put(
        "R_R",
        recover_commitment(&bundle.w_s, &bundle.u_s, &sum, &p).to_string(),
    );
    let verdict = verify_bundle(&bundle, &sum, ctc.sender().public_key(), &p, &h)?;
    put("R_S'", verdict.r_s.to_string());
    put("g^S_S", p.g_pow(&bundle.s_s).to_string());
    put(
        "R_R*y_S^R_S",
        p.mul(&verdict.r_r, &p.pow(ctc.sender().public_key(), &verdict.r_s))
            .to_string(),
    );
    put("verdict", if verdict.valid { "valid" } else { "invalid" }.to_string());
    Ok(out)
}

/// The first entry where `actual` departs from `expected`, as `(name, expected, actual)`.
pub fn first_mismatch(expected: &[(&str, &str)], actual: &[(String, String)]) -> Option<(String, String, String)> {
    for (i, (name, want)) in expected.iter().enumerate() {
        match actual.get(i) {
            Some((got_name, got)) if got_name == name && got == want => continue,
            Some((got_name, got)) if got_name == name => {
                return Some((name.to_string(), want.to_string(), got.clone()));
            }
            _ => return Some((name.to_string(), want.to_string(), "<missing>".into())),
        }
    }
    actual
        .get(expected.len())
        .map(|(name, got)| (name.clone(), "<none>".into(), got.clone()))
}
