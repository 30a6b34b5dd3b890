//! Offline replay: recomputes every derived value of a recorded session and
//! compares it with what the transcript claims.

use std::collections::BTreeSet;

use serde::Deserialize;

use super::{MessageKind, SessionKind, ShadowMessage, Transcript};
use crate::ctc::SignatureBundle;
use crate::error::{Error, Result};
use crate::group_math::{GroupElement, Scalar};
use crate::shares::{MaskedShare, ModifiedShadow};
use crate::signing::{CommitmentBroadcast, CommitmentPrivate, PartialSignature};
use crate::verification::{combine_shadows, verify_bundle, Verdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub session: SessionKind,
    pub messages: usize,
    pub bundle: Option<SignatureBundle>,
    pub verdict: Option<Verdict>,
    /// For signing sessions: whether `g^S_S = V_S * y_S^R_S` holds.
    pub signature_valid: Option<bool>,
}

fn mismatch(what: &str, recorded: impl std::fmt::Display, recomputed: impl std::fmt::Display) -> Error {
    Error::ReplayMismatch(format!("{what}: transcript has {recorded}, replay gives {recomputed}"))
}

fn collect<T: for<'de> Deserialize<'de>>(transcript: &Transcript, kind: MessageKind) -> Result<Vec<T>> {
    transcript
        .messages()
        .filter(|m| m.kind == kind)
        .map(|m| m.decode())
        .collect()
}

fn single_bundle(transcript: &Transcript) -> Result<SignatureBundle> {
    let mut bundles: Vec<SignatureBundle> = collect(transcript, MessageKind::Bundle)?;
    match bundles.len() {
        1 => Ok(bundles.remove(0)),
        0 => Err(Error::Missing("bundle record".into())),
        n => Err(Error::Malformed(format!("{n} bundle records"))),
    }
}

fn check_signers<'a>(subset: &[Scalar], ids: impl Iterator<Item = &'a Scalar>, what: &str) -> Result<()> {
    let seen: BTreeSet<&Scalar> = ids.collect();
    let expected: BTreeSet<&Scalar> = subset.iter().collect();
    if seen != expected {
        return Err(Error::ReplayMismatch(format!("{what} do not cover the session subset")));
    }
    Ok(())
}

/// Parses, chain-checks and replays a transcript.
pub fn replay_transcript(text: &str) -> Result<ReplayOutcome> {
    let transcript = Transcript::from_jsonl(text)?;
    if transcript.is_redacted() {
        return Err(Error::Malformed("a redacted transcript cannot be replayed".into()));
    }
    let header = &transcript.header;
    let params = &header.params;
    let mut outcome = ReplayOutcome {
        session: header.session,
        messages: transcript.entries.len(),
        bundle: None,
        verdict: None,
        signature_valid: None,
    };
    match header.session {
        SessionKind::Setup => {
            let shares: Vec<MaskedShare> = collect(&transcript, MessageKind::SetupShare)?;
            if let Some(bad) = shares.iter().find(|s| s.w != header.w) {
                return Err(mismatch("W", &bad.w, &header.w));
            }
        }
        SessionKind::Signing => {
            let broadcasts: Vec<CommitmentBroadcast> = collect(&transcript, MessageKind::CommitmentPublic)?;
            let privates: Vec<CommitmentPrivate> = collect(&transcript, MessageKind::CommitmentPrivate)?;
            let partials: Vec<PartialSignature> = collect(&transcript, MessageKind::PartialSignature)?;
            check_signers(
                &header.subset,
                broadcasts.iter().map(|b| &b.signer_id),
                "commitment broadcasts",
            )?;
            check_signers(
                &header.subset,
                privates.iter().map(|c| &c.signer_id),
                "private commitments",
            )?;
            check_signers(
                &header.subset,
                partials.iter().map(|s| &s.signer_id),
                "partial signatures",
            )?;
            let bundle = single_bundle(&transcript)?;

            let u_s = params.product(broadcasts.iter().map(|b| &b.u));
            let w_s = params.product(broadcasts.iter().map(|b| &b.w));
            let v_s: GroupElement = params.product(privates.iter().map(|c| &c.v));
            let s_s = params.s_sum(partials.iter().map(|p| &p.s));
            if u_s != bundle.u_s {
                return Err(mismatch("U_S", &bundle.u_s, &u_s));
            }
            if w_s != bundle.w_s {
                return Err(mismatch("W_S", &bundle.w_s, &w_s));
            }
            if s_s != bundle.s_s {
                return Err(mismatch("S_S", &bundle.s_s, &s_s));
            }
            let r_s = header.hash.hash_to_scalar(&v_s, &bundle.message, params)?;
            let rhs = params.mul(&v_s, &params.pow(&header.y_s, &r_s));
            outcome.signature_valid = Some(params.g_pow(&s_s) == rhs);
            outcome.bundle = Some(bundle);
        }
        SessionKind::Verification => {
            let bundle = single_bundle(&transcript)?;
            let shadows: Vec<ShadowMessage> = collect(&transcript, MessageKind::Shadow)?;
            let mut verdicts: Vec<Verdict> = collect(&transcript, MessageKind::Verdict)?;
            let recorded = match verdicts.len() {
                1 => verdicts.remove(0),
                n => return Err(Error::Malformed(format!("{n} verdict records"))),
            };
            check_signers(&header.subset, shadows.iter().map(|s| &s.verifier_id), "shadows")?;
            let shadows: Vec<ModifiedShadow> = shadows
                .into_iter()
                .map(|s| ModifiedShadow {
                    member_id: s.verifier_id,
                    value: s.ms,
                })
                .collect();
            let sum = combine_shadows(&shadows, header.subset.len(), params)?;
            let verdict = verify_bundle(&bundle, &sum, &header.y_s, params, &header.hash)?;
            if verdict != recorded {
                return Err(mismatch(
                    "verdict",
                    serde_json::to_string(&recorded)?,
                    serde_json::to_string(&verdict)?,
                ));
            }
            outcome.bundle = Some(bundle);
            outcome.verdict = Some(verdict);
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{distribute_setup, run_signing_session, run_verification_session};
    use crate::worked_example as fx;

    fn sessions() -> (Transcript, Transcript, Transcript) {
        let (mut ctc, keys) = fx::deployment().unwrap();
        let setup = distribute_setup(&mut ctc);
        let config = fx::session_config(&ctc);
        let signed = run_signing_session(&mut ctc, &keys, &config, fx::MESSAGE).unwrap();
        let verified = run_verification_session(&mut ctc, &keys, &config, &signed.bundle).unwrap();
        (setup, signed.transcript, verified.transcript)
    }

    #[test]
    fn honest_sessions_replay_cleanly() {
        let (setup, signing, verification) = sessions();
        assert_eq!(
            replay_transcript(&setup.to_jsonl()).unwrap().session,
            SessionKind::Setup
        );
        let out = replay_transcript(&signing.to_jsonl()).unwrap();
        assert_eq!(out.signature_valid, Some(true));
        assert_eq!(out.messages, 4 + 4 + 4 + 1);
        let out = replay_transcript(&verification.to_jsonl()).unwrap();
        assert!(out.verdict.unwrap().valid);
    }

    #[test]
    fn any_byte_edit_is_caught() {
        let (_, signing, _) = sessions();
        let text = signing.to_jsonl();
        let bytes = text.as_bytes();
        for pos in (0..bytes.len()).step_by(7) {
            if bytes[pos] == b'\n' {
                continue;
            }
            let mut edited = bytes.to_vec();
            edited[pos] = if bytes[pos] == b'1' { b'2' } else { b'1' };
            let Ok(edited) = String::from_utf8(edited) else {
                continue;
            };
            assert!(replay_transcript(&edited).is_err(), "edit at byte {pos} went unnoticed");
        }
    }

    #[test]
    fn rechained_forgery_is_caught_by_recomputation() {
        let (_, signing, _) = sessions();
        let mut forged = signing.clone();
        let last = forged.entries.last_mut().unwrap();
        last.message.payload["S_S"] = serde_json::json!("14");
        assert!(matches!(
            replay_transcript(&forged.to_jsonl()),
            Err(Error::ReplayMismatch(_))
        ));
    }

    #[test]
    fn redacted_transcripts_are_refused() {
        let (_, signing, _) = sessions();
        assert!(matches!(
            replay_transcript(&signing.public().to_jsonl()),
            Err(Error::Malformed(_))
        ));
    }
}
