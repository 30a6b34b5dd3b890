//! The common trusted center: organization setup, partial-signature aggregation and
//! the signature ledger.

use base64::Engine as _;
use log::debug;
use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_math::{check_ids, GroupElement, GroupParams, Scalar};
use crate::hashing::ChallengeHash;
use crate::shamir::{sample_polynomial, SecretPolynomial, Share};
use crate::shares::{mask_share, modified_shadow, MaskedShare, MemberPublic, Org};
use crate::signing::PartialSignature;
use crate::verification::{verify_bundle, Verdict};

const RESAMPLE_BUDGET: usize = 1_000;

/// Where an organization's polynomial comes from.
#[derive(Clone, Debug)]
pub enum PolynomialSource {
    /// Use these exact coefficients (fixtures). Degree may be below `threshold - 1`.
    Fixed(SecretPolynomial),
    /// Random polynomial with this constant term.
    Secret(Scalar),
    /// Random nonzero secret and random polynomial.
    Random,
}

/// Everything needed to set up one organization.
#[derive(Clone, Debug)]
pub struct OrgSpec {
    pub org: Org,
    pub threshold: usize,
    pub roster: Vec<MemberPublic>,
    pub source: PolynomialSource,
}

/// One organization as configured by the center.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrgSetup {
    org: Org,
    polynomial: SecretPolynomial,
    public_key: GroupElement,
    threshold: usize,
    roster: Vec<MemberPublic>,
    masked_shares: Vec<MaskedShare>,
}

impl OrgSetup {
    pub fn org(&self) -> Org {
        self.org
    }

    /// The organization's public key `y = g^f(0)`.
    pub fn public_key(&self) -> &GroupElement {
        &self.public_key
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn roster(&self) -> &[MemberPublic] {
        &self.roster
    }

    pub fn roster_ids(&self) -> Vec<Scalar> {
        self.roster.iter().map(|m| m.public_id.clone()).collect()
    }

    pub fn masked_shares(&self) -> &[MaskedShare] {
        &self.masked_shares
    }

    pub fn masked_share(&self, member_id: &Scalar) -> Result<&MaskedShare> {
        self.masked_shares
            .iter()
            .find(|s| &s.member_id == member_id)
            .ok_or_else(|| Error::UnknownMember(member_id.value().clone()))
    }

    pub fn member(&self, member_id: &Scalar) -> Result<&MemberPublic> {
        self.roster
            .iter()
            .find(|m| &m.public_id == member_id)
            .ok_or_else(|| Error::UnknownMember(member_id.value().clone()))
    }

    /// Center-private: the organization's secret polynomial.
    pub fn polynomial(&self) -> &SecretPolynomial {
        &self.polynomial
    }

    /// Center-private: the share `f(u_i)` of a roster member.
    pub fn share_of(&self, member_id: &Scalar, params: &GroupParams) -> Result<Share> {
        self.member(member_id)?;
        Ok(Share {
            id: member_id.clone(),
            value: self.polynomial.eval(member_id, params.q()),
        })
    }

    /// Checks that `subset` is a threshold-sized set of distinct roster members.
    pub fn check_subset(&self, subset: &[Scalar], what: &'static str) -> Result<()> {
        if subset.len() != self.threshold {
            return Err(Error::WrongCount {
                what,
                expected: self.threshold,
                actual: subset.len(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for id in subset {
            self.member(id)?;
            if !seen.insert(id) {
                return Err(Error::DuplicateId(id.value().clone()));
            }
        }
        Ok(())
    }

    pub fn state(&self) -> CtcStateFile {
        CtcStateFile {
            org: self.org,
            coefficients: self
                .polynomial
                .coefficients()
                .iter()
                .map(|c| c.value().clone())
                .collect(),
            threshold: self.threshold,
            roster: self.roster.clone(),
            y_org: self.public_key.clone(),
            w: self
                .masked_shares
                .first()
                .map(|s| s.w.clone())
                .expect("setup always has at least one member"),
            masked_shares: self.masked_shares.clone(),
        }
    }

    pub fn from_state(state: CtcStateFile, params: &GroupParams) -> Result<Self> {
        let coefficients = state.coefficients.into_iter().map(|c| params.scalar(c)).collect();
        let polynomial = SecretPolynomial::from_scalars(coefficients)?;
        if params.g_pow(polynomial.secret()) != state.y_org {
            return Err(Error::Malformed("y_org does not match the polynomial".into()));
        }
        validate_roster(state.org, state.threshold, &state.roster, &polynomial, params)?;
        if state.masked_shares.len() != state.roster.len()
            || state
                .roster
                .iter()
                .zip(&state.masked_shares)
                .any(|(m, s)| m.public_id != s.member_id || s.w != state.w)
        {
            return Err(Error::Malformed("masked shares do not cover the roster".into()));
        }
        Ok(OrgSetup {
            org: state.org,
            polynomial,
            public_key: state.y_org,
            threshold: state.threshold,
            roster: state.roster,
            masked_shares: state.masked_shares,
        })
    }
}

/// The center's private per-organization state file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtcStateFile {
    pub org: Org,
    #[serde(with = "crate::decimal::vec")]
    pub coefficients: Vec<BigUint>,
    pub threshold: usize,
    pub roster: Vec<MemberPublic>,
    pub y_org: GroupElement,
    #[serde(rename = "W")]
    pub w: GroupElement,
    pub masked_shares: Vec<MaskedShare>,
}

fn validate_roster(
    org: Org,
    threshold: usize,
    roster: &[MemberPublic],
    polynomial: &SecretPolynomial,
    params: &GroupParams,
) -> Result<()> {
    if roster.is_empty() {
        return Err(Error::Empty("roster"));
    }
    if threshold == 0 || threshold > roster.len() || polynomial.degree() + 1 > threshold {
        return Err(Error::InvalidThreshold {
            threshold,
            roster: roster.len(),
        });
    }
    if let Some(m) = roster.iter().find(|m| m.org != org) {
        return Err(Error::Malformed(format!(
            "member {} belongs to organization {}",
            m.public_id, m.org
        )));
    }
    let ids: Vec<Scalar> = roster.iter().map(|m| m.public_id.clone()).collect();
    check_ids(&ids, params.q())?;
    for m in roster {
        params.check_element(&m.public_key)?;
    }
    Ok(())
}

/// Sets up one organization with a given masking exponent `K`.
pub fn setup_organization<R: RngCore + ?Sized>(
    spec: &OrgSpec,
    k: &Scalar,
    params: &GroupParams,
    rng: &mut R,
) -> Result<OrgSetup> {
    if k.is_zero() {
        return Err(Error::ZeroMaskExponent);
    }
    let degree = spec.threshold.saturating_sub(1);
    let mut attempt = 0;
    let secret = match &spec.source {
        PolynomialSource::Fixed(poly) => poly.secret().clone(),
        PolynomialSource::Secret(s) => s.clone(),
        PolynomialSource::Random => params.random_nonzero_scalar(rng),
    };
    loop {
        let polynomial = match &spec.source {
            PolynomialSource::Fixed(poly) => poly.clone(),
            _ => sample_polynomial(secret.clone(), degree, rng, params),
        };
        validate_roster(spec.org, spec.threshold, &spec.roster, &polynomial, params)?;

        let shares: Vec<Scalar> = spec
            .roster
            .iter()
            .map(|m| polynomial.eval(&m.public_id, params.q()))
            .collect();
        if shares.iter().any(Scalar::is_zero) {
            attempt += 1;
            if matches!(spec.source, PolynomialSource::Fixed(_)) || attempt >= RESAMPLE_BUDGET {
                return Err(Error::ZeroShare);
            }
            debug!("resampling {} polynomial: zero share", spec.org);
            continue;
        }

        let w = params.g_pow_neg(k);
        let masked_shares = spec
            .roster
            .iter()
            .zip(&shares)
            .map(|(m, value)| {
                Ok(MaskedShare {
                    member_id: m.public_id.clone(),
                    v: mask_share(value, &m.public_key, k, params)?,
                    w: w.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(OrgSetup {
            org: spec.org,
            public_key: params.g_pow(polynomial.secret()),
            polynomial,
            threshold: spec.threshold,
            roster: spec.roster.clone(),
            masked_shares,
        });
    }
}

/// `S_S = sum s_i mod q` over exactly `expected` partials.
pub fn aggregate_partials(partials: &[Scalar], expected: usize, params: &GroupParams) -> Result<Scalar> {
    if partials.is_empty() {
        return Err(Error::Empty("partial signatures"));
    }
    if partials.len() != expected {
        return Err(Error::WrongCount {
            what: "partial signatures",
            expected,
            actual: partials.len(),
        });
    }
    Ok(params.s_sum(partials))
}

/// The transmitted signature `{S_S, U_S, W_S, m}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureBundle {
    #[serde(rename = "S_S")]
    pub s_s: Scalar,
    #[serde(rename = "U_S")]
    pub u_s: GroupElement,
    #[serde(rename = "W_S")]
    pub w_s: GroupElement,
    #[serde(rename = "m", with = "base64_bytes")]
    pub message: Vec<u8>,
}

impl SignatureBundle {
    pub fn check_ranges(&self, params: &GroupParams) -> Result<()> {
        params.check_scalar(&self.s_s)?;
        params.check_element(&self.u_s)?;
        params.check_element(&self.w_s)
    }
}

mod base64_bytes {
    use super::*;
    use serde::{de::Error as _, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Vec<u8>, D::Error> {
        let text = String::deserialize(deserializer)?;
        base64::engine::general_purpose::STANDARD
            .decode(text)
            .map_err(D::Error::custom)
    }
}

/// An append-only ledger entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRecord {
    /// Monotonic session counter.
    pub timestamp: u64,
    pub bundle: SignatureBundle,
    pub signer_subset_ids: Vec<Scalar>,
}

/// The trusted center for one deployment: both organizations plus the ledger.
///
/// The masking exponent `K` is dropped once setup finishes; only `W` survives.
#[derive(Clone, Debug)]
pub struct Ctc {
    params: GroupParams,
    sender: OrgSetup,
    recipient: OrgSetup,
    ledger: Vec<LedgerRecord>,
    next_session: u64,
}

impl Ctc {
    /// Sets up both organizations under one masking exponent. `k = None` samples it.
    pub fn setup<R: RngCore + ?Sized>(
        params: GroupParams,
        sender: &OrgSpec,
        recipient: &OrgSpec,
        k: Option<Scalar>,
        rng: &mut R,
    ) -> Result<Self> {
        if sender.org != Org::Sender || recipient.org != Org::Recipient {
            return Err(Error::Malformed("organization specs are swapped".into()));
        }
        let k = k.unwrap_or_else(|| params.random_nonzero_scalar(rng));
        let sender = setup_organization(sender, &k, &params, rng)?;
        let recipient = setup_organization(recipient, &k, &params, rng)?;
        Ok(Ctc::from_setups(params, sender, recipient))
    }

    pub fn from_setups(params: GroupParams, sender: OrgSetup, recipient: OrgSetup) -> Self {
        Ctc {
            params,
            sender,
            recipient,
            ledger: Vec::new(),
            next_session: 1,
        }
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    pub fn sender(&self) -> &OrgSetup {
        &self.sender
    }

    pub fn recipient(&self) -> &OrgSetup {
        &self.recipient
    }

    pub fn org(&self, org: Org) -> &OrgSetup {
        match org {
            Org::Sender => &self.sender,
            Org::Recipient => &self.recipient,
        }
    }

    /// The public value `W = g^-K`.
    pub fn w(&self) -> &GroupElement {
        &self.sender.masked_shares[0].w
    }

    /// The id the next session will get.
    pub fn peek_session_id(&self) -> u64 {
        self.next_session
    }

    /// Continues numbering after a restart; ids never go backwards.
    pub fn resume_sessions(&mut self, next: u64) {
        self.next_session = self.next_session.max(next);
    }

    /// Hands out the next session id.
    pub fn next_session_id(&mut self) -> u64 {
        let id = self.next_session;
        self.next_session += 1;
        id
    }

    pub fn aggregate_partials(&self, partials: &[PartialSignature]) -> Result<Scalar> {
        let values: Vec<Scalar> = partials.iter().map(|p| p.s.clone()).collect();
        aggregate_partials(&values, self.sender.threshold, &self.params)
    }

    /// Optional diagnostic: given the signers' revealed `v_i`, checks each partial
    /// against `g^s_i = v_i * g^(MS_i * R_S)`.
    pub fn diagnose_partials(
        &self,
        partials: &[PartialSignature],
        revealed_v: &[(Scalar, GroupElement)],
        message: &[u8],
        hash: &ChallengeHash,
    ) -> Result<Vec<(Scalar, bool)>> {
        let ids: Vec<Scalar> = partials.iter().map(|p| p.signer_id.clone()).collect();
        self.sender.check_subset(&ids, "signers")?;
        let v_s = self.params.product(revealed_v.iter().map(|(_, v)| v));
        let r_s = hash.hash_to_scalar(&v_s, message, &self.params)?;
        partials
            .iter()
            .map(|partial| {
                let v_i = revealed_v
                    .iter()
                    .find(|(id, _)| id == &partial.signer_id)
                    .map(|(_, v)| v)
                    .ok_or_else(|| Error::Missing(format!("v for signer {}", partial.signer_id)))?;
                let share = self.sender.share_of(&partial.signer_id, &self.params)?;
                let shadow = modified_shadow(&share, &ids, &self.params)?;
                let expected = self
                    .params
                    .mul(v_i, &self.params.g_pow(&self.params.s_mul(&shadow.value, &r_s)));
                Ok((partial.signer_id.clone(), self.params.g_pow(&partial.s) == expected))
            })
            .collect()
    }

    /// Builds the bundle and appends it to the ledger.
    pub fn emit_bundle(
        &mut self,
        s_s: Scalar,
        u_s: GroupElement,
        w_s: GroupElement,
        message: Vec<u8>,
        signer_subset_ids: Vec<Scalar>,
    ) -> Result<(SignatureBundle, LedgerRecord)> {
        let bundle = SignatureBundle { s_s, u_s, w_s, message };
        bundle.check_ranges(&self.params)?;
        let record = LedgerRecord {
            timestamp: self.ledger.len() as u64 + 1,
            bundle: bundle.clone(),
            signer_subset_ids,
        };
        self.ledger.push(record.clone());
        Ok((bundle, record))
    }

    pub fn ledger(&self) -> &[LedgerRecord] {
        &self.ledger
    }

    /// Restores previously persisted records (e.g. from a ledger file).
    pub fn restore_ledger(&mut self, records: Vec<LedgerRecord>) {
        self.ledger = records;
    }

    /// Re-runs the final verification check for a stored record.
    pub fn adjudicate(&self, timestamp: u64, shadow_sum: &Scalar, hash: &ChallengeHash) -> Result<Verdict> {
        let record = self
            .ledger
            .iter()
            .find(|r| r.timestamp == timestamp)
            .ok_or(Error::UnknownRecord(timestamp))?;
        verify_bundle(&record.bundle, shadow_sum, self.sender.public_key(), &self.params, hash)
    }
}
