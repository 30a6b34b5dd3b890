//! On-disk layout of a deployment directory.
//!
//! ```text
//! params.json        group parameters
//! center.json        center-private state: both polynomials, rosters, masked shares
//! keys.json          every simulated member's key pair
//! public.json        what the center publishes: public keys, W, rosters, masked shares
//! ledger.jsonl       one signature record per line
//! ```

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dualthresh::{
    Ctc, CtcStateFile, GroupElement, GroupParams, KeyRing, LedgerRecord, MaskedShare, MemberPublic, OrgSetup,
};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct CenterFile {
    sender: CtcStateFile,
    recipient: CtcStateFile,
    next_session: u64,
}

#[derive(Serialize, Deserialize)]
pub struct PublicOrg {
    pub threshold: usize,
    pub roster: Vec<MemberPublic>,
    pub masked_shares: Vec<MaskedShare>,
}

#[derive(Serialize, Deserialize)]
pub struct PublicFile {
    pub params: GroupParams,
    #[serde(rename = "y_S")]
    pub y_s: GroupElement,
    #[serde(rename = "y_R")]
    pub y_r: GroupElement,
    #[serde(rename = "W")]
    pub w: GroupElement,
    pub sender: PublicOrg,
    pub recipient: PublicOrg,
}

fn public_org(setup: &OrgSetup) -> PublicOrg {
    PublicOrg {
        threshold: setup.threshold(),
        roster: setup.roster().to_vec(),
        masked_shares: setup.masked_shares().to_vec(),
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub struct Deployment {
    pub dir: PathBuf,
    pub ctc: Ctc,
    pub keys: KeyRing,
}

impl Deployment {
    pub fn create(dir: &Path, ctc: Ctc, keys: KeyRing) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let deployment = Deployment {
            dir: dir.to_path_buf(),
            ctc,
            keys,
        };
        write_json(&dir.join("params.json"), deployment.ctc.params())?;
        write_json(&dir.join("keys.json"), &deployment.keys)?;
        write_json(&dir.join("public.json"), &deployment.public())?;
        fs::write(dir.join("ledger.jsonl"), "")?;
        deployment.save_center()?;
        Ok(deployment)
    }

    /// Loads a deployment; every file must be present and consistent.
    pub fn load(dir: &Path) -> Result<Self> {
        let params: GroupParams = read_json(&dir.join("params.json"))?;
        let center: CenterFile = read_json(&dir.join("center.json"))?;
        let keys: KeyRing = read_json(&dir.join("keys.json"))?;
        let sender = OrgSetup::from_state(center.sender, &params).context("bad sender state")?;
        let recipient = OrgSetup::from_state(center.recipient, &params).context("bad recipient state")?;
        for member in &keys.members {
            member.validate(&params).context("bad key ring")?;
        }
        let mut ctc = Ctc::from_setups(params, sender, recipient);
        ctc.resume_sessions(center.next_session);
        let ledger_path = dir.join("ledger.jsonl");
        let ledger = fs::read_to_string(&ledger_path).unwrap_or_default();
        let records = ledger
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<LedgerRecord>, _>>()
            .with_context(|| format!("cannot parse {}", ledger_path.display()))?;
        ctc.restore_ledger(records);
        Ok(Deployment {
            dir: dir.to_path_buf(),
            ctc,
            keys,
        })
    }

    pub fn public(&self) -> PublicFile {
        PublicFile {
            params: self.ctc.params().clone(),
            y_s: self.ctc.sender().public_key().clone(),
            y_r: self.ctc.recipient().public_key().clone(),
            w: self.ctc.w().clone(),
            sender: public_org(self.ctc.sender()),
            recipient: public_org(self.ctc.recipient()),
        }
    }

    pub fn save_center(&self) -> Result<()> {
        let center = CenterFile {
            sender: self.ctc.sender().state(),
            recipient: self.ctc.recipient().state(),
            next_session: self.ctc.peek_session_id(),
        };
        write_json(&self.dir.join("center.json"), &center)
    }

    pub fn append_ledger(&self, record: &LedgerRecord) -> Result<()> {
        let path = self.dir.join("ledger.jsonl");
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        writeln!(file, "{}", serde_json::to_string(record)?)?;
        Ok(())
    }
}
