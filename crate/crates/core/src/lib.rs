//! Threshold signatures with threshold verification.
//!
//! A trusted center deals Shamir shares of two organizations' secret keys, masked so
//! that only each member can unlock its own share. Any `t` of the sender's `n`
//! members produce a Schnorr-style signature that only `k` of the recipient's `l`
//! members, pooling their shares, can verify.

pub mod analysis;
pub mod ctc;
pub mod decimal;
pub mod error;
pub mod group_math;
pub mod hashing;
pub mod protocol;
pub mod shamir;
pub mod shares;
pub mod signing;
pub mod verification;
pub mod worked_example;

pub use ctc::{Ctc, CtcStateFile, LedgerRecord, OrgSetup, OrgSpec, PolynomialSource, SignatureBundle};
pub use error::{Error, Result};
pub use group_math::{GroupElement, GroupParams, ParamSize, Profile, Scalar};
pub use hashing::ChallengeHash;
pub use num_bigint::BigUint;
pub use protocol::{
    deploy_random, distribute_setup, replay_transcript, run_signing_session, run_verification_session, DeploymentShape,
    KeyRing, SessionConfig, Transcript,
};
pub use shamir::{SecretPolynomial, Share};
pub use shares::{MaskedShare, Member, MemberPublic, ModifiedShadow, Org};
pub use signing::{Nonces, PartialSignature};
pub use verification::Verdict;
