//! Attack experiments with measurable outcomes: collusion, impersonation, forgery,
//! bundle tampering and unmasking with a wrong key.
//!
//! At small `q` an adversary without the right secret succeeds with probability
//! about `1/q`, which is visible statistically; every report carries the two-sided
//! binomial interval its success count should fall into.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{seq::SliceRandom, Rng, RngCore};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::ctc::{Ctc, SignatureBundle};
use crate::error::{Error, Result};
use crate::group_math::{GroupElement, GroupParams, Scalar};
use crate::hashing::ChallengeHash;
use crate::protocol::{deploy_random, run_signing_session, DeploymentShape, KeyRing, SessionConfig};
use crate::shamir::{reconstruct_polynomial, SecretPolynomial, Share};
use crate::shares::{modified_shadow, recover_share, MaskedShare, Member, Org};
use crate::signing::{aggregate_commitments, make_nonce_commitment, partial_sign, Nonces};
use crate::verification::{combine_shadows, verifier_shadow, verify_bundle};

/// Two-sided confidence used for every reported interval.
pub const CONFIDENCE: f64 = 0.999;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub trials: u64,
    pub successes: u64,
    pub expected_rate: f64,
    /// Inclusive `[lo, hi]` range for `successes`.
    pub interval: [u64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detail: Vec<String>,
}

impl ExperimentReport {
    fn new(experiment: impl Into<String>, trials: u64, successes: u64, expected_rate: f64) -> Self {
        let (lo, hi) = binomial_interval(trials, expected_rate, CONFIDENCE);
        ExperimentReport {
            experiment: experiment.into(),
            trials,
            successes,
            expected_rate,
            interval: [lo, hi],
            detail: Vec::new(),
        }
    }

    pub fn within_interval(&self) -> bool {
        self.interval[0] <= self.successes && self.successes <= self.interval[1]
    }
}

/// Central `confidence` interval of Binomial(trials, rate).
pub fn binomial_interval(trials: u64, rate: f64, confidence: f64) -> (u64, u64) {
    if rate <= 0.0 {
        return (0, 0);
    }
    if rate >= 1.0 {
        return (trials, trials);
    }
    let dist = Binomial::new(rate, trials).expect("rate in (0,1)");
    let tail = (1.0 - confidence) / 2.0;
    let quantile = |level: f64| (0..=trials).find(|&x| dist.cdf(x) >= level).unwrap_or(trials);
    (quantile(tail), quantile(1.0 - tail))
}

/// `1/q` as a float, zero once `q` is too large to matter.
pub fn guess_rate(params: &GroupParams) -> f64 {
    params
        .q()
        .to_f64()
        .map(|q| 1.0 / q)
        .filter(|r| *r > 1e-30)
        .unwrap_or(0.0)
}

/// Rebuilds the full polynomial from `t` shares.
pub fn collusion_reconstruct(shares: &[Share], q: &BigUint) -> Result<SecretPolynomial> {
    reconstruct_polynomial(shares, q)
}

/// For each candidate secret in `[0, q)`, how many polynomials of the given degree
/// pass through every share. Enumerates all `q^(degree+1)` polynomials, so only
/// usable for tiny `q`.
pub fn consistent_secret_counts(shares: &[Share], degree: usize, params: &GroupParams) -> Result<Vec<u64>> {
    let q = params
        .q()
        .to_u64()
        .filter(|q| q.checked_pow(degree as u32 + 1).is_some_and(|n| n <= 10_000_000))
        .ok_or_else(|| Error::InvalidParams("q too large for exhaustive enumeration".into()))?;
    let points: Vec<(u64, u64)> = shares
        .iter()
        .map(|s| {
            (
                s.id.value().to_u64().unwrap_or(0) % q,
                s.value.value().to_u64().unwrap_or(0) % q,
            )
        })
        .collect();
    let mut counts = vec![0u64; q as usize];
    let mut coeffs = vec![0u64; degree + 1];
    loop {
        let fits = points
            .iter()
            .all(|&(x, y)| coeffs.iter().rev().fold(0u64, |acc, &c| (acc * x + c) % q) == y);
        if fits {
            counts[coeffs[0] as usize] += 1;
        }
        let mut i = 0;
        loop {
            if i > degree {
                return Ok(counts);
            }
            coeffs[i] += 1;
            if coeffs[i] < q {
                break;
            }
            coeffs[i] = 0;
            i += 1;
        }
    }
}

/// A randomly generated deployment to run trials against.
pub struct Testbed {
    pub ctc: Ctc,
    pub keys: KeyRing,
}

impl Testbed {
    pub fn new<R: RngCore + ?Sized>(params: &GroupParams, shape: DeploymentShape, rng: &mut R) -> Result<Self> {
        let (ctc, keys) = deploy_random(params, shape, rng)?;
        Ok(Testbed { ctc, keys })
    }

    /// Default experiment shape: 3-of-5 signers, 2-of-4 verifiers.
    pub fn small<R: RngCore + ?Sized>(params: &GroupParams, rng: &mut R) -> Result<Self> {
        Self::new(params, DeploymentShape { n: 5, t: 3, l: 4, k: 2 }, rng)
    }

    fn params(&self) -> &GroupParams {
        self.ctc.params()
    }

    fn pick(&self, org: Org, rng: &mut (impl RngCore + ?Sized)) -> Vec<Scalar> {
        let setup = self.ctc.org(org);
        let mut ids = setup.roster_ids();
        ids.shuffle(rng);
        ids.truncate(setup.threshold());
        ids
    }

    /// Verifies a bundle with a random threshold subset of honest verifiers.
    pub fn accepts<R: RngCore + ?Sized>(
        &self,
        bundle: &SignatureBundle,
        hash: &ChallengeHash,
        rng: &mut R,
    ) -> Result<bool> {
        let params = self.params();
        let subset = self.pick(Org::Recipient, rng);
        let shadows = subset
            .iter()
            .map(|id| {
                let member = self.keys.get(Org::Recipient, id)?;
                verifier_shadow(member, self.ctc.recipient().masked_share(id)?, &subset, params)
            })
            .collect::<Result<Vec<_>>>()?;
        let sum = combine_shadows(&shadows, subset.len(), params)?;
        Ok(verify_bundle(bundle, &sum, self.ctc.sender().public_key(), params, hash)?.valid)
    }

    fn member(&self, org: Org, id: &Scalar) -> Result<(&Member, &MaskedShare)> {
        Ok((self.keys.get(org, id)?, self.ctc.org(org).masked_share(id)?))
    }

    /// An honest bundle over `message` from a random signer subset.
    pub fn honest_bundle<R: RngCore + ?Sized>(
        &self,
        message: &[u8],
        hash: &ChallengeHash,
        rng: &mut R,
    ) -> Result<SignatureBundle> {
        let mut ctc = self.ctc.clone();
        let config = SessionConfig::random(&ctc, hash.clone(), Some(rng.next_u64()), rng);
        Ok(run_signing_session(&mut ctc, &self.keys, &config, message)?.bundle)
    }
}

fn random_message<R: RngCore + ?Sized>(rng: &mut R) -> Vec<u8> {
    let len = rng.gen_range(1..=32);
    (0..len).map(|_| rng.gen()).collect()
}

/// Signing where one member of the subset is played by an adversary without its
/// share. The adversary's commitments are well formed; its partial is a uniform
/// guess, or with `control` the honest value.
pub fn impersonation_experiment<R: RngCore + ?Sized>(
    bed: &Testbed,
    trials: u64,
    control: bool,
    rng: &mut R,
) -> Result<ExperimentReport> {
    let params = bed.params();
    let hash = ChallengeHash::Production;
    let y_r = bed.ctc.recipient().public_key();
    let mut successes = 0;
    for _ in 0..trials {
        let subset = bed.pick(Org::Sender, rng);
        let impostor = rng.gen_range(0..subset.len());
        let message = random_message(rng);
        let nonces: Vec<Nonces> = subset.iter().map(|_| Nonces::random(params, rng)).collect();
        let commitments = subset
            .iter()
            .zip(&nonces)
            .map(|(id, n)| make_nonce_commitment(id.clone(), n, y_r, params))
            .collect::<Result<Vec<_>>>()?;
        let agg = aggregate_commitments(&commitments, subset.len(), params)?;
        let r_s = hash.hash_to_scalar(&agg.v_s, &message, params)?;
        let mut partials = Vec::new();
        for (i, (id, n)) in subset.iter().zip(&nonces).enumerate() {
            let s = if i == impostor && !control {
                params.random_scalar(rng)
            } else {
                let (member, masked) = bed.member(Org::Sender, id)?;
                let value = recover_share(masked, &member.secret_key, params)?;
                let shadow = modified_shadow(&Share { id: id.clone(), value }, &subset, params)?;
                partial_sign(&n.k1, &shadow, &r_s, params).s
            };
            partials.push(s);
        }
        let bundle = SignatureBundle {
            s_s: params.s_sum(&partials),
            u_s: agg.u_s,
            w_s: agg.w_s,
            message,
        };
        if bed.accepts(&bundle, &hash, rng)? {
            successes += 1;
        }
    }
    let rate = if control { 1.0 } else { guess_rate(params) };
    let name = if control {
        "impersonation-control"
    } else {
        "impersonation"
    };
    Ok(ExperimentReport::new(name, trials, successes, rate))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForgeryStrategy {
    /// Fix `R_R`, hash it, then guess `S_S`.
    PickRrFirst,
    /// Fix `R_R` and `S_S`, then hope the hash lands on the one working `R_S`.
    PickBothFirst,
}

impl ForgeryStrategy {
    pub fn name(self) -> &'static str {
        match self {
            ForgeryStrategy::PickRrFirst => "pick-rr-first",
            ForgeryStrategy::PickBothFirst => "pick-both-first",
        }
    }
}

impl std::str::FromStr for ForgeryStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pick-rr-first" | "pick-R_R-first" => Ok(ForgeryStrategy::PickRrFirst),
            "pick-both-first" => Ok(ForgeryStrategy::PickBothFirst),
            _ => Err(Error::Malformed(format!("unknown strategy {s:?}"))),
        }
    }
}

/// `U_S = g^-a`, `W_S = R_R * y_R^a`, so that `W_S * U_S^x_R = R_R` without knowing `x_R`.
fn steer_commitment<R: RngCore + ?Sized>(
    r_r: &GroupElement,
    y_r: &GroupElement,
    params: &GroupParams,
    rng: &mut R,
) -> (GroupElement, GroupElement) {
    let a = params.random_nonzero_scalar(rng);
    (params.g_pow_neg(&a), params.mul(r_r, &params.pow(y_r, &a)))
}

/// Outsider forgery of `{S_S, U_S, W_S, m}` from public values only. With
/// `secret_key = Some(x_S)` the adversary holds the sender's discrete log.
pub fn forgery_experiment<R: RngCore + ?Sized>(
    bed: &Testbed,
    trials: u64,
    strategy: ForgeryStrategy,
    secret_key: Option<&Scalar>,
    rng: &mut R,
) -> Result<ExperimentReport> {
    let params = bed.params();
    let hash = ChallengeHash::Production;
    let y_s = bed.ctc.sender().public_key();
    let y_r = bed.ctc.recipient().public_key();
    let mut successes = 0;
    for _ in 0..trials {
        let message = random_message(rng);
        let (r_r, s_s) = match (strategy, secret_key) {
            (_, Some(x_s)) => {
                let r = params.random_nonzero_scalar(rng);
                let r_r = params.g_pow(&r);
                let r_s = hash.hash_to_scalar(&r_r, &message, params)?;
                let s_s = params.s_add(&r, &params.s_mul(x_s, &r_s));
                (r_r, s_s)
            }
            (ForgeryStrategy::PickRrFirst, None) => {
                let r_r = params.g_pow(&params.random_nonzero_scalar(rng));
                let _r_s = hash.hash_to_scalar(&r_r, &message, params)?;
                (r_r, params.random_scalar(rng))
            }
            (ForgeryStrategy::PickBothFirst, None) => {
                // R_R = g^S_S * y_S^-guess works iff h(R_R, m) = guess
                let s_s = params.random_scalar(rng);
                let guess = params.random_scalar(rng);
                let r_r = params.mul(&params.g_pow(&s_s), &params.pow(y_s, &params.s_neg(&guess)));
                (r_r, s_s)
            }
        };
        let (u_s, w_s) = steer_commitment(&r_r, y_r, params, rng);
        let bundle = SignatureBundle { s_s, u_s, w_s, message };
        if bed.accepts(&bundle, &hash, rng)? {
            successes += 1;
        }
    }
    let control = secret_key.is_some();
    let rate = if control { 1.0 } else { guess_rate(params) };
    let name = format!("forgery-{}{}", strategy.name(), if control { "-control" } else { "" });
    Ok(ExperimentReport::new(name, trials, successes, rate))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BundleField {
    SS,
    US,
    WS,
    Message,
}

/// Changes exactly one component of a bundle to a different valid-looking value.
pub fn tamper<R: RngCore + ?Sized>(
    bundle: &SignatureBundle,
    field: BundleField,
    params: &GroupParams,
    rng: &mut R,
) -> SignatureBundle {
    let mut out = bundle.clone();
    match field {
        BundleField::SS => loop {
            out.s_s = params.random_scalar(rng);
            if out.s_s != bundle.s_s {
                break;
            }
        },
        BundleField::US => out.u_s = params.random_subgroup_element_except(rng, &bundle.u_s),
        BundleField::WS => out.w_s = params.random_subgroup_element_except(rng, &bundle.w_s),
        BundleField::Message => {
            if out.message.is_empty() {
                out.message.push(rng.gen());
            } else {
                let i = rng.gen_range(0..out.message.len());
                out.message[i] ^= rng.gen_range(1..=255u8);
            }
        }
    }
    out
}

/// Honest bundles with one uniformly chosen component mutated.
pub fn tamper_experiment<R: RngCore + ?Sized>(bed: &Testbed, trials: u64, rng: &mut R) -> Result<ExperimentReport> {
    let params = bed.params();
    let hash = ChallengeHash::Production;
    let fields = [BundleField::SS, BundleField::US, BundleField::WS, BundleField::Message];
    let mut successes = 0;
    let mut per_field = [0u64; 4];
    for _ in 0..trials {
        let message = random_message(rng);
        let bundle = bed.honest_bundle(&message, &hash, rng)?;
        let which = rng.gen_range(0..fields.len());
        per_field[which] += 1;
        let mutated = tamper(&bundle, fields[which], params, rng);
        if bed.accepts(&mutated, &hash, rng)? {
            successes += 1;
        }
    }
    let mut report = ExperimentReport::new("tamper", trials, successes, guess_rate(params));
    report.detail.push(format!(
        "mutated S_S {}, U_S {}, W_S {}, m {}",
        per_field[0], per_field[1], per_field[2], per_field[3]
    ));
    Ok(report)
}

/// Unmasking a share with a uniformly random wrong secret key. Counts how often the
/// result equals the true share.
pub fn wrong_key_experiment<R: RngCore + ?Sized>(
    params: &GroupParams,
    trials: u64,
    rng: &mut R,
) -> Result<ExperimentReport> {
    let mut in_range = 0u64;
    let mut successes = 0;
    for _ in 0..trials {
        let member = Member::random(params, Org::Recipient, params.random_nonzero_scalar(rng), rng)?;
        let share = params.random_nonzero_scalar(rng);
        let k = params.random_nonzero_scalar(rng);
        let masked = MaskedShare {
            member_id: member.public_id.clone(),
            v: crate::shares::mask_share(&share, &member.public_key, &k, params)?,
            w: params.g_pow_neg(&k),
        };
        let wrong = loop {
            let x = params.random_nonzero_scalar(rng);
            if x != member.secret_key {
                break x;
            }
        };
        if let Ok(value) = recover_share(&masked, &wrong, params) {
            in_range += 1;
            if value == share {
                successes += 1;
            }
        }
    }
    let mut report = ExperimentReport::new("wrong-key-recovery", trials, successes, guess_rate(params));
    // equality is only an upper-bound claim, so the lower end is not a failure
    report.interval[0] = 0;
    report
        .detail
        .push(format!("{in_range} of {trials} unmasked values fell below q"));
    Ok(report)
}

/// Random deployments where the first `t` sender members pool their shares. A
/// success is an exact rebuild of the center's polynomial.
pub fn collusion_experiment<R: RngCore + ?Sized>(
    params: &GroupParams,
    shape: DeploymentShape,
    trials: u64,
    rng: &mut R,
) -> Result<ExperimentReport> {
    let mut successes = 0;
    for _ in 0..trials {
        let (ctc, keys) = deploy_random(params, shape, rng)?;
        let shares = pooled_shares(&ctc, &keys, Org::Sender, shape.t)?;
        let rebuilt = collusion_reconstruct(&shares, params.q())?;
        if rebuilt.coefficients() == ctc.sender().polynomial().coefficients() {
            successes += 1;
        }
    }
    Ok(ExperimentReport::new("collusion", trials, successes, 1.0))
}

/// The first `t` shares of an organization, as a colluding subset would pool them.
pub fn pooled_shares(ctc: &Ctc, keys: &KeyRing, org: Org, count: usize) -> Result<Vec<Share>> {
    let setup = ctc.org(org);
    setup
        .roster_ids()
        .into_iter()
        .take(count)
        .map(|id| {
            let member = keys.get(org, &id)?;
            let value = recover_share(setup.masked_share(&id)?, &member.secret_key, ctc.params())?;
            Ok(Share { id, value })
        })
        .collect()
}
