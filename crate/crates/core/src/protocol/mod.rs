//! Session orchestration: parties exchange messages over a simulated channel and
//! every delivery is recorded in a hash-chained [`Transcript`].
//!
//! Broadcast commitments and bundles are public. The private half of each nonce
//! commitment, partial signatures, shadows and verdicts go to explicit recipients
//! only, and their payloads are stripped from [`Transcript::public`].

mod replay;
mod transcript;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::mpsc;

use log::{debug, warn};
use rand::{seq::SliceRandom, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub use replay::{replay_transcript, ReplayOutcome};
pub use transcript::{HeaderTag, Transcript, TranscriptEntry, TranscriptHeader, TRANSCRIPT_VERSION};

use crate::ctc::{Ctc, LedgerRecord, OrgSpec, PolynomialSource, SignatureBundle};
use crate::error::{Error, Result};
use crate::group_math::{GroupParams, Scalar};
use crate::hashing::ChallengeHash;
use crate::shares::{Member, ModifiedShadow, Org};
use crate::signing::{CommitmentBroadcast, Nonces, PartialSignature, SignerSession};
use crate::verification::{verifier_shadow, Verdict, VerificationSession};

/// A protocol participant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Ctc,
    Member(Org, Scalar),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Ctc => f.write_str("ctc"),
            Party::Member(org, id) => write!(f, "{org}:{id}"),
        }
    }
}

impl FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ctc" {
            return Ok(Party::Ctc);
        }
        let (org, id) = s
            .split_once(':')
            .ok_or_else(|| Error::Malformed(format!("bad party {s:?}")))?;
        let org = match org {
            "S" => Org::Sender,
            "R" => Org::Recipient,
            _ => return Err(Error::Malformed(format!("bad party {s:?}"))),
        };
        let id = crate::decimal::parse(id).map_err(Error::Malformed)?;
        Ok(Party::Member(org, Scalar::from_reduced(id)))
    }
}

impl Serialize for Party {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Party {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Recipients {
    All,
    Explicit(Vec<Party>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RecipientsRepr {
    Tag(String),
    List(Vec<Party>),
}

impl Serialize for Recipients {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Recipients::All => RecipientsRepr::Tag("all".into()),
            Recipients::Explicit(list) => RecipientsRepr::List(list.clone()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Recipients {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match RecipientsRepr::deserialize(deserializer)? {
            RecipientsRepr::Tag(t) if t == "all" => Ok(Recipients::All),
            RecipientsRepr::Tag(t) => Err(serde::de::Error::custom(format!("bad recipients {t:?}"))),
            RecipientsRepr::List(list) => Ok(Recipients::Explicit(list)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    SetupShare,
    CommitmentPublic,
    CommitmentPrivate,
    PartialSignature,
    Bundle,
    Shadow,
    Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMessage {
    pub kind: MessageKind,
    pub sender: Party,
    pub recipients: Recipients,
    pub payload: serde_json::Value,
}

impl ChannelMessage {
    fn new(kind: MessageKind, sender: Party, recipients: Recipients, payload: &impl Serialize) -> Self {
        ChannelMessage {
            kind,
            sender,
            recipients,
            payload: serde_json::to_value(payload).expect("payload records always serialize"),
        }
    }

    /// Whether the payload must be withheld from public transcripts.
    pub fn is_private(&self) -> bool {
        matches!(
            self.kind,
            MessageKind::CommitmentPrivate | MessageKind::PartialSignature | MessageKind::Shadow | MessageKind::Verdict
        )
    }

    pub fn decode<T: DeserializeOwned>(&self) -> Result<T> {
        Ok(serde_json::from_value(self.payload.clone())?)
    }

    fn is_for(&self, party: &Party) -> bool {
        match &self.recipients {
            Recipients::All => &self.sender != party,
            Recipients::Explicit(list) => list.contains(party),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionKind {
    Setup,
    Signing,
    Verification,
}

/// Test-mode scheduler is sequential; `Threaded` runs each party on its own thread.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheduler {
    #[default]
    Sequential,
    Threaded,
}

/// Fixed nonces for one signer, used to reproduce hand-computed sessions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedNonces {
    pub signer_id: Scalar,
    #[serde(flatten)]
    pub nonces: Nonces,
}

fn default_true() -> bool {
    true
}

/// Per-session choices: who signs, who verifies, who combines, which hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub hash: ChallengeHash,
    /// The signing subset `H_S`.
    pub signers: Vec<Scalar>,
    /// The verifying subset `H_R`.
    pub verifiers: Vec<Scalar>,
    /// Identity of the designated combiner in the recipient organization.
    pub combiner: Scalar,
    #[serde(default = "default_true")]
    pub combiner_in_subset: bool,
    /// Seed for the deterministic generator; `None` draws from OS entropy.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nonces: Vec<FixedNonces>,
    #[serde(default)]
    pub scheduler: Scheduler,
    /// Have signers reveal `v_i` to the center so it can check each partial.
    #[serde(default)]
    pub diagnostics: bool,
}

impl SessionConfig {
    /// Random threshold-sized subsets of both rosters; the first verifier combines.
    pub fn random<R: RngCore + ?Sized>(ctc: &Ctc, hash: ChallengeHash, seed: Option<u64>, rng: &mut R) -> Self {
        let pick = |org: Org, rng: &mut R| {
            let setup = ctc.org(org);
            let mut ids = setup.roster_ids();
            ids.shuffle(rng);
            ids.truncate(setup.threshold());
            ids
        };
        let signers = pick(Org::Sender, rng);
        let verifiers = pick(Org::Recipient, rng);
        SessionConfig {
            hash,
            combiner: verifiers[0].clone(),
            signers,
            verifiers,
            combiner_in_subset: true,
            seed,
            nonces: Vec::new(),
            scheduler: Scheduler::Sequential,
            diagnostics: false,
        }
    }

    fn rng(&self) -> ChaCha20Rng {
        match self.seed {
            Some(seed) => ChaCha20Rng::seed_from_u64(seed),
            None => ChaCha20Rng::from_entropy(),
        }
    }
}

/// Secret key material of every simulated member.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyRing {
    pub members: Vec<Member>,
}

impl KeyRing {
    pub fn get(&self, org: Org, id: &Scalar) -> Result<&Member> {
        self.members
            .iter()
            .find(|m| m.org == org && &m.public_id == id)
            .ok_or_else(|| Error::UnknownMember(id.value().clone()))
    }

    pub fn of(&self, org: Org) -> impl Iterator<Item = &Member> {
        self.members.iter().filter(move |m| m.org == org)
    }
}

/// Sizes of a randomly generated deployment: `t`-of-`n` signers, `k`-of-`l` verifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeploymentShape {
    pub n: usize,
    pub t: usize,
    pub l: usize,
    pub k: usize,
}

fn random_ids<R: RngCore + ?Sized>(params: &GroupParams, count: usize, rng: &mut R) -> Result<Vec<Scalar>> {
    let mut ids = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * (count + 10) {
            return Err(Error::SearchExhausted(attempts));
        }
        let id = params.random_nonzero_scalar(rng);
        if ids.insert(id.clone()) {
            out.push(id);
        }
    }
    Ok(out)
}

/// Random members, random polynomials and a random masking exponent.
pub fn deploy_random<R: RngCore + ?Sized>(
    params: &GroupParams,
    shape: DeploymentShape,
    rng: &mut R,
) -> Result<(Ctc, KeyRing)> {
    let mut keys = KeyRing::default();
    let mut specs = Vec::new();
    for (org, size, threshold) in [(Org::Sender, shape.n, shape.t), (Org::Recipient, shape.l, shape.k)] {
        let members = random_ids(params, size, rng)?
            .into_iter()
            .map(|id| Member::random(params, org, id, rng))
            .collect::<Result<Vec<_>>>()?;
        specs.push(OrgSpec {
            org,
            threshold,
            roster: members.iter().map(Member::public).collect(),
            source: PolynomialSource::Random,
        });
        keys.members.extend(members);
    }
    let ctc = Ctc::setup(params.clone(), &specs[0], &specs[1], None, rng)?;
    Ok((ctc, keys))
}

/// In-memory inboxes for the sequential scheduler.
struct Network {
    inboxes: BTreeMap<Party, VecDeque<ChannelMessage>>,
}

impl Network {
    fn new(parties: impl IntoIterator<Item = Party>) -> Self {
        Network {
            inboxes: parties.into_iter().map(|p| (p, VecDeque::new())).collect(),
        }
    }

    fn post(&mut self, message: ChannelMessage, transcript: &mut Transcript) {
        for (party, inbox) in self.inboxes.iter_mut() {
            if message.is_for(party) {
                inbox.push_back(message.clone());
            }
        }
        transcript.push(message);
    }

    fn drain(&mut self, party: &Party) -> Vec<ChannelMessage> {
        self.inboxes
            .get_mut(party)
            .map(|inbox| inbox.drain(..).collect())
            .unwrap_or_default()
    }
}

fn header(
    ctc: &Ctc,
    session_id: u64,
    session: SessionKind,
    hash: &ChallengeHash,
    subset: &[Scalar],
) -> TranscriptHeader {
    TranscriptHeader {
        record: HeaderTag::Header,
        version: TRANSCRIPT_VERSION,
        session_id,
        session,
        params: ctc.params().clone(),
        hash: hash.clone(),
        y_s: ctc.sender().public_key().clone(),
        y_r: ctc.recipient().public_key().clone(),
        w: ctc.w().clone(),
        subset: subset.to_vec(),
        redacted: false,
    }
}

/// Publishes every member's masked share, one directed message each.
pub fn distribute_setup(ctc: &mut Ctc) -> Transcript {
    let session_id = ctc.next_session_id();
    let mut transcript = Transcript::new(header(
        ctc,
        session_id,
        SessionKind::Setup,
        &ChallengeHash::Production,
        &[],
    ));
    for org in [Org::Sender, Org::Recipient] {
        for share in ctc.org(org).masked_shares() {
            let to = Party::Member(org, share.member_id.clone());
            transcript.push(ChannelMessage::new(
                MessageKind::SetupShare,
                Party::Ctc,
                Recipients::Explicit(vec![to]),
                share,
            ));
        }
    }
    transcript
}

#[derive(Clone, Debug)]
pub struct SigningOutcome {
    pub bundle: SignatureBundle,
    pub record: LedgerRecord,
    pub transcript: Transcript,
}

#[derive(Clone, Debug)]
pub struct VerificationOutcome {
    pub verdict: Verdict,
    pub transcript: Transcript,
}

fn signer_party(id: &Scalar) -> Party {
    Party::Member(Org::Sender, id.clone())
}

fn commitment_messages(session: &SignerSession, subset: &[Scalar]) -> [ChannelMessage; 2] {
    let me = signer_party(session.signer_id());
    let others: Vec<Party> = subset
        .iter()
        .filter(|id| *id != session.signer_id())
        .map(signer_party)
        .collect();
    let commitment = session.commitment();
    [
        ChannelMessage::new(
            MessageKind::CommitmentPublic,
            me.clone(),
            Recipients::All,
            &commitment.broadcast(),
        ),
        ChannelMessage::new(
            MessageKind::CommitmentPrivate,
            me,
            Recipients::Explicit(others),
            &commitment.private(),
        ),
    ]
}

fn apply_commitment(session: &mut SignerSession, message: &ChannelMessage) -> Result<()> {
    match message.kind {
        MessageKind::CommitmentPublic => session.receive_public(message.decode()?),
        MessageKind::CommitmentPrivate => session.receive_private(message.decode()?),
        _ => Ok(()),
    }
}

fn partial_message(session: &SignerSession, partial: &PartialSignature) -> ChannelMessage {
    ChannelMessage::new(
        MessageKind::PartialSignature,
        signer_party(session.signer_id()),
        Recipients::Explicit(vec![Party::Ctc]),
        partial,
    )
}

fn sign_sequential(
    sessions: &mut [SignerSession],
    subset: &[Scalar],
    network: &mut Network,
    transcript: &mut Transcript,
    message: &[u8],
    hash: &ChallengeHash,
    params: &GroupParams,
) -> Result<()> {
    for session in sessions.iter() {
        for msg in commitment_messages(session, subset) {
            network.post(msg, transcript);
        }
    }
    for session in sessions.iter_mut() {
        let party = signer_party(session.signer_id());
        for msg in network.drain(&party) {
            apply_commitment(session, &msg)?;
        }
    }
    for session in sessions.iter_mut() {
        let partial = session.finalize(message, hash, params)?;
        network.post(partial_message(session, &partial), transcript);
    }
    Ok(())
}

fn sign_threaded(
    sessions: Vec<SignerSession>,
    subset: &[Scalar],
    network: &mut Network,
    transcript: &mut Transcript,
    message: &[u8],
    hash: &ChallengeHash,
    params: &GroupParams,
) -> Result<Vec<SignerSession>> {
    let expected = 2 * subset.len().saturating_sub(1);
    std::thread::scope(|scope| {
        let (hub_tx, hub_rx) = mpsc::channel::<ChannelMessage>();
        let mut links = BTreeMap::new();
        let mut handles = Vec::new();
        for mut session in sessions {
            let (tx, rx) = mpsc::channel::<ChannelMessage>();
            links.insert(signer_party(session.signer_id()), tx);
            let hub_tx = hub_tx.clone();
            handles.push(scope.spawn(move || -> Result<SignerSession> {
                for msg in commitment_messages(&session, subset) {
                    hub_tx.send(msg).map_err(|_| Error::Missing("hub".into()))?;
                }
                for _ in 0..expected {
                    let msg = rx.recv().map_err(|_| Error::Missing("commitment".into()))?;
                    apply_commitment(&mut session, &msg)?;
                }
                let partial = session.finalize(message, hash, params)?;
                hub_tx
                    .send(partial_message(&session, &partial))
                    .map_err(|_| Error::Missing("hub".into()))?;
                Ok(session)
            }));
        }
        drop(hub_tx);
        for msg in hub_rx {
            for (party, link) in &links {
                if msg.is_for(party) {
                    let _ = link.send(msg.clone());
                }
            }
            network.post(msg, transcript);
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("signer thread panicked"))
            .collect()
    })
}

fn draw_nonces(config: &SessionConfig, params: &GroupParams, rng: &mut ChaCha20Rng) -> Vec<Nonces> {
    config
        .signers
        .iter()
        .map(|id| {
            // always draw so fixed entries do not shift the other signers' nonces
            let fresh = Nonces::random(params, rng);
            config
                .nonces
                .iter()
                .find(|f| &f.signer_id == id)
                .map(|f| f.nonces.clone())
                .unwrap_or(fresh)
        })
        .collect()
}

/// Runs one signing session end to end and appends the bundle to the center's ledger.
pub fn run_signing_session(
    ctc: &mut Ctc,
    keys: &KeyRing,
    config: &SessionConfig,
    message: &[u8],
) -> Result<SigningOutcome> {
    let params = ctc.params().clone();
    ctc.sender().check_subset(&config.signers, "signers")?;
    ctc.recipient().member(&config.combiner)?;
    let y_r = ctc.recipient().public_key().clone();

    let mut rng = config.rng();
    let nonces = draw_nonces(config, &params, &mut rng);
    let mut sessions = config
        .signers
        .iter()
        .zip(nonces)
        .map(|(id, nonces)| {
            let member = keys.get(Org::Sender, id)?.clone();
            let masked = ctc.sender().masked_share(id)?.clone();
            SignerSession::start(member, masked, config.signers.clone(), nonces, &y_r, &params)
        })
        .collect::<Result<Vec<_>>>()?;

    let session_id = ctc.next_session_id();
    let mut transcript = Transcript::new(header(
        ctc,
        session_id,
        SessionKind::Signing,
        &config.hash,
        &config.signers,
    ));
    let dc = Party::Member(Org::Recipient, config.combiner.clone());
    let mut network = Network::new(config.signers.iter().map(signer_party).chain([Party::Ctc, dc.clone()]));

    match config.scheduler {
        Scheduler::Sequential => sign_sequential(
            &mut sessions,
            &config.signers,
            &mut network,
            &mut transcript,
            message,
            &config.hash,
            &params,
        )?,
        Scheduler::Threaded => {
            sessions = sign_threaded(
                sessions,
                &config.signers,
                &mut network,
                &mut transcript,
                message,
                &config.hash,
                &params,
            )?
        }
    }

    let first = &sessions[0];
    if sessions
        .iter()
        .any(|s| s.challenge() != first.challenge() || s.aggregates() != first.aggregates())
    {
        return Err(Error::ChallengeDisagreement);
    }

    // the center sees the public broadcasts and the partials addressed to it
    let mut broadcasts = Vec::new();
    let mut partials = Vec::new();
    for msg in network.drain(&Party::Ctc) {
        match msg.kind {
            MessageKind::CommitmentPublic => broadcasts.push(msg.decode::<CommitmentBroadcast>()?),
            MessageKind::PartialSignature => partials.push(msg.decode::<PartialSignature>()?),
            _ => {}
        }
    }
    partials.sort_by(|a, b| {
        let pos = |id: &Scalar| config.signers.iter().position(|s| s == id);
        pos(&a.signer_id).cmp(&pos(&b.signer_id))
    });
    if broadcasts.len() != config.signers.len() {
        return Err(Error::Missing("commitment broadcasts at the center".into()));
    }
    if config.diagnostics {
        let revealed: Vec<_> = sessions
            .iter()
            .map(|s| (s.signer_id().clone(), s.commitment().v.clone()))
            .collect();
        for (id, ok) in ctc.diagnose_partials(&partials, &revealed, message, &config.hash)? {
            if !ok {
                warn!("partial signature from signer {id} fails its individual check");
            }
        }
    }
    let s_s = ctc.aggregate_partials(&partials)?;
    let u_s = params.product(broadcasts.iter().map(|b| &b.u));
    let w_s = params.product(broadcasts.iter().map(|b| &b.w));
    let (bundle, record) = ctc.emit_bundle(s_s, u_s, w_s, message.to_vec(), config.signers.clone())?;
    network.post(
        ChannelMessage::new(MessageKind::Bundle, Party::Ctc, Recipients::Explicit(vec![dc]), &bundle),
        &mut transcript,
    );
    debug!("signing session {session_id} emitted a bundle");
    Ok(SigningOutcome {
        bundle,
        record,
        transcript,
    })
}

#[derive(Serialize, Deserialize)]
struct ShadowMessage {
    verifier_id: Scalar,
    ms: Scalar,
}

/// Runs one verification session: every verifier sends its shadow to the combiner,
/// which decides.
pub fn run_verification_session(
    ctc: &mut Ctc,
    keys: &KeyRing,
    config: &SessionConfig,
    bundle: &SignatureBundle,
) -> Result<VerificationOutcome> {
    let params = ctc.params().clone();
    let recipient = ctc.recipient();
    recipient.check_subset(&config.verifiers, "verifiers")?;
    recipient.member(&config.combiner)?;
    if config.combiner_in_subset && !config.verifiers.contains(&config.combiner) {
        return Err(Error::IdNotInSubset(config.combiner.value().clone()));
    }
    let inputs = config
        .verifiers
        .iter()
        .map(|id| {
            Ok((
                keys.get(Org::Recipient, id)?.clone(),
                recipient.masked_share(id)?.clone(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let y_s = ctc.sender().public_key().clone();

    let session_id = ctc.next_session_id();
    let mut transcript = Transcript::new(header(
        ctc,
        session_id,
        SessionKind::Verification,
        &config.hash,
        &config.verifiers,
    ));
    let dc = Party::Member(Org::Recipient, config.combiner.clone());
    let mut network = Network::new(
        config
            .verifiers
            .iter()
            .map(|id| Party::Member(Org::Recipient, id.clone()))
            .chain([dc.clone()]),
    );
    network.post(
        ChannelMessage::new(
            MessageKind::Bundle,
            Party::Ctc,
            Recipients::Explicit(vec![dc.clone()]),
            bundle,
        ),
        &mut transcript,
    );

    let shadow_message = |shadow: ModifiedShadow| {
        ChannelMessage::new(
            MessageKind::Shadow,
            Party::Member(Org::Recipient, shadow.member_id.clone()),
            Recipients::Explicit(vec![dc.clone()]),
            &ShadowMessage {
                verifier_id: shadow.member_id,
                ms: shadow.value,
            },
        )
    };
    let subset = &config.verifiers;
    match config.scheduler {
        Scheduler::Sequential => {
            for (member, masked) in &inputs {
                let shadow = verifier_shadow(member, masked, subset, &params)?;
                network.post(shadow_message(shadow), &mut transcript);
            }
        }
        Scheduler::Threaded => {
            let (tx, rx) = mpsc::channel();
            let results: Vec<Result<()>> = std::thread::scope(|scope| {
                let handles: Vec<_> = inputs
                    .iter()
                    .map(|(member, masked)| {
                        let tx = tx.clone();
                        let params = &params;
                        scope.spawn(move || -> Result<()> {
                            let shadow = verifier_shadow(member, masked, subset, params)?;
                            tx.send(shadow).map_err(|_| Error::Missing("combiner".into()))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("verifier thread panicked"))
                    .collect()
            });
            drop(tx);
            results.into_iter().collect::<Result<Vec<_>>>()?;
            for shadow in rx {
                network.post(shadow_message(shadow), &mut transcript);
            }
        }
    }

    let mut received_bundle = None;
    let mut shadows = Vec::new();
    for msg in network.drain(&dc) {
        match msg.kind {
            MessageKind::Bundle => received_bundle = Some(msg.decode::<SignatureBundle>()?),
            MessageKind::Shadow => {
                let m: ShadowMessage = msg.decode()?;
                shadows.push(ModifiedShadow {
                    member_id: m.verifier_id,
                    value: m.ms,
                });
            }
            _ => {}
        }
    }
    let received_bundle = received_bundle.ok_or_else(|| Error::Missing("bundle at the combiner".into()))?;
    let mut session = VerificationSession::new(config.verifiers.clone(), received_bundle, &params)?;
    for shadow in shadows {
        session.receive_shadow(shadow)?;
    }
    let verdict = session.verdict(&y_s, &params, &config.hash)?;

    let mut audience: Vec<Party> = config
        .verifiers
        .iter()
        .map(|id| Party::Member(Org::Recipient, id.clone()))
        .collect();
    if !audience.contains(&dc) {
        audience.push(dc.clone());
    }
    network.post(
        ChannelMessage::new(MessageKind::Verdict, dc, Recipients::Explicit(audience), &verdict),
        &mut transcript,
    );
    Ok(VerificationOutcome { verdict, transcript })
}
