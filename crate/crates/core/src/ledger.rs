//! Append-only, hash-chained task lifecycle log.
//!
//! Tasks move through `Posted -> Assigned -> Completed`, and may be
//! `Cancelled` from `Posted` or `Assigned`. Every accepted transition is a
//! record whose hash covers its index, its predecessor's hash, its payload
//! and a logical timestamp, so editing or removing any record is caught by
//! [`verify`].
//!
//! # Encoding
//!
//! All integers are big-endian. A string is `u32 length ‖ UTF-8 bytes`.
//!
//! ```text
//! payload = str task_id
//!         ‖ u8 event            (0 posted, 1 assigned, 2 completed, 3 cancelled)
//!         ‖ 0x00 | 0x01 str volunteer_id
//!         ‖ u64 epoch
//!         ‖ 0x00 | 0x01 [32] assignment_digest
//!
//! hash    = SHA-256(u64 index ‖ [32] prev_hash ‖ u32 len(payload) ‖ payload ‖ u64 timestamp)
//! ```
//!
//! The first record's `prev_hash` is 32 zero bytes. `assignment_digest` is
//! the SHA-256 of the assignment's compact JSON form.
//!
//! The binary file is
//!
//! ```text
//! "SWLEDGR1" ‖ u64 record_count ‖ [32] head_hash
//! then per record: u32 len(body) ‖ body
//! body = u64 index ‖ [32] prev_hash ‖ u32 len(payload) ‖ payload ‖ u64 timestamp ‖ [32] hash
//! ```
//!
//! `head_hash` is the last record's hash (zeros when empty). The header lets
//! [`verify_file`] notice a truncated tail.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::assignment::Assignment;

pub type Digest = [u8; 32];

pub const ZERO_DIGEST: Digest = [0; 32];
pub const MAGIC: &[u8; 8] = b"SWLEDGR1";
const HEADER_LEN: usize = 8 + 8 + 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskState {
    Posted,
    Assigned,
    Completed,
    Cancelled,
}

impl TaskState {
    fn code(self) -> u8 {
        match self {
            TaskState::Posted => 0,
            TaskState::Assigned => 1,
            TaskState::Completed => 2,
            TaskState::Cancelled => 3,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => TaskState::Posted,
            1 => TaskState::Assigned,
            2 => TaskState::Completed,
            3 => TaskState::Cancelled,
            _ => return None,
        })
    }

    /// Whether a task in `from` (absent for unknown tasks) may move to `to`.
    pub fn allows(from: Option<TaskState>, to: TaskState) -> bool {
        use TaskState::*;
        matches!(
            (from, to),
            (None, Posted) | (Some(Posted), Assigned) | (Some(Posted), Cancelled) | (Some(Assigned), Completed)
                | (Some(Assigned), Cancelled)
        )
    }
}

impl fmt::Display for TaskState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskState::Posted => "posted",
            TaskState::Assigned => "assigned",
            TaskState::Completed => "completed",
            TaskState::Cancelled => "cancelled",
        })
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("task `{0}` is already posted")]
    DuplicateTask(String),

    #[error("task `{0}` is not on the ledger")]
    UnknownTask(String),

    #[error("task `{task_id}` cannot move from {} to {to}", from.map_or("nothing".to_string(), |s| s.to_string()))]
    IllegalTransition {
        task_id: String,
        from: Option<TaskState>,
        to: TaskState,
    },

    #[error("ledger file is corrupt at record {index}: {violation}")]
    Tampered { index: u64, violation: Violation },

    #[error("not a ledger file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    pub task_id: String,
    pub event: TaskState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volunteer_id: Option<String>,
    pub epoch: u64,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_hex")]
    pub assignment_digest: Option<Digest>,
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.buf.len() < n {
            return None;
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Some(head)
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_be_bytes(b.try_into().expect("8 bytes")))
    }

    fn digest(&mut self) -> Option<Digest> {
        self.take(32).map(|b| b.try_into().expect("32 bytes"))
    }

    fn string(&mut self) -> Option<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).ok()
    }
}

impl Payload {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        put_str(&mut out, &self.task_id);
        out.push(self.event.code());
        match &self.volunteer_id {
            None => out.push(0),
            Some(v) => {
                out.push(1);
                put_str(&mut out, v);
            }
        }
        out.extend_from_slice(&self.epoch.to_be_bytes());
        match &self.assignment_digest {
            None => out.push(0),
            Some(d) => {
                out.push(1);
                out.extend_from_slice(d);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let mut r = Reader { buf: bytes };
        let task_id = r.string()?;
        let event = TaskState::from_code(r.u8()?)?;
        let volunteer_id = match r.u8()? {
            0 => None,
            1 => Some(r.string()?),
            _ => return None,
        };
        let epoch = r.u64()?;
        let assignment_digest = match r.u8()? {
            0 => None,
            1 => Some(r.digest()?),
            _ => return None,
        };
        r.buf.is_empty().then_some(Self {
            task_id,
            event,
            volunteer_id,
            epoch,
            assignment_digest,
        })
    }
}

/// Record fields with the payload kept as bytes, so damaged records can
/// still be inspected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub index: u64,
    pub prev_hash: Digest,
    pub payload: Vec<u8>,
    pub timestamp: u64,
    pub hash: Digest,
}

impl RawRecord {
    pub fn compute_hash(&self) -> Digest {
        record_hash(self.index, &self.prev_hash, &self.payload, self.timestamp)
    }

    fn body(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(84 + self.payload.len());
        b.extend_from_slice(&self.index.to_be_bytes());
        b.extend_from_slice(&self.prev_hash);
        b.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        b.extend_from_slice(&self.payload);
        b.extend_from_slice(&self.timestamp.to_be_bytes());
        b.extend_from_slice(&self.hash);
        b
    }

    fn from_body(body: &[u8]) -> Option<Self> {
        let mut r = Reader { buf: body };
        let index = r.u64()?;
        let prev_hash = r.digest()?;
        let n = r.u32()? as usize;
        let payload = r.take(n)?.to_vec();
        let timestamp = r.u64()?;
        let hash = r.digest()?;
        r.buf.is_empty().then_some(Self {
            index,
            prev_hash,
            payload,
            timestamp,
            hash,
        })
    }
}

pub fn record_hash(index: u64, prev_hash: &Digest, payload: &[u8], timestamp: u64) -> Digest {
    let mut h = Sha256::new();
    h.update(index.to_be_bytes());
    h.update(prev_hash);
    h.update((payload.len() as u32).to_be_bytes());
    h.update(payload);
    h.update(timestamp.to_be_bytes());
    h.finalize().into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub index: u64,
    #[serde(with = "hex_digest")]
    pub prev_hash: Digest,
    pub payload: Payload,
    pub timestamp: u64,
    #[serde(with = "hex_digest")]
    pub hash: Digest,
}

impl LedgerRecord {
    pub fn to_raw(&self) -> RawRecord {
        RawRecord {
            index: self.index,
            prev_hash: self.prev_hash,
            payload: self.payload.encode(),
            timestamp: self.timestamp,
            hash: self.hash,
        }
    }
}

/// SHA-256 of the assignment's compact JSON serialization.
pub fn assignment_digest(a: &Assignment) -> Digest {
    let bytes = serde_json::to_vec(a).expect("assignments serialize");
    Sha256::digest(bytes).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    HashMismatch,
    LinkBroken,
    IndexOutOfSequence,
    MalformedRecord,
    IllegalTransition,
    MissingRecord,
    HeadMismatch,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::HashMismatch => "hash mismatch",
            Violation::LinkBroken => "link broken",
            Violation::IndexOutOfSequence => "index out of sequence",
            Violation::MalformedRecord => "malformed record",
            Violation::IllegalTransition => "illegal transition",
            Violation::MissingRecord => "missing record",
            Violation::HeadMismatch => "head mismatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Ok { records: u64 },
    Tampered { first_bad_index: u64, reason: Violation },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok { .. })
    }
}

/// Check hashes, links, indices and the state machine in record order and
/// report the first problem. For each record the checks run in that order.
pub fn verify_records(records: &[RawRecord]) -> Verdict {
    let mut state: BTreeMap<String, TaskState> = BTreeMap::new();
    let mut prev = ZERO_DIGEST;
    for (k, r) in records.iter().enumerate() {
        let k = k as u64;
        let bad = |reason| Verdict::Tampered {
            first_bad_index: k,
            reason,
        };
        if r.compute_hash() != r.hash {
            return bad(Violation::HashMismatch);
        }
        if r.prev_hash != prev {
            return bad(Violation::LinkBroken);
        }
        if r.index != k {
            return bad(Violation::IndexOutOfSequence);
        }
        let Some(p) = Payload::decode(&r.payload) else {
            return bad(Violation::MalformedRecord);
        };
        if !TaskState::allows(state.get(&p.task_id).copied(), p.event) {
            return bad(Violation::IllegalTransition);
        }
        state.insert(p.task_id, p.event);
        prev = r.hash;
    }
    Verdict::Ok {
        records: records.len() as u64,
    }
}

pub fn verify(l: &Ledger) -> Verdict {
    let raw: Vec<RawRecord> = l.records.iter().map(LedgerRecord::to_raw).collect();
    verify_records(&raw)
}

/// Parsed ledger file before any verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerFile {
    pub declared_count: u64,
    pub head_hash: Digest,
    pub records: Vec<RawRecord>,
    /// Position of the first frame that could not be parsed.
    pub malformed_at: Option<u64>,
}

impl LedgerFile {
    pub fn parse(bytes: &[u8]) -> Result<Self, LedgerError> {
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(LedgerError::Format("missing SWLEDGR1 header".into()));
        }
        let mut r = Reader { buf: &bytes[8..] };
        let declared_count = r.u64().expect("header length checked");
        let head_hash = r.digest().expect("header length checked");
        let mut records = Vec::new();
        let mut malformed_at = None;
        while !r.buf.is_empty() {
            let parsed = r
                .u32()
                .and_then(|n| r.take(n as usize))
                .and_then(RawRecord::from_body);
            match parsed {
                Some(rec) => records.push(rec),
                None => {
                    malformed_at = Some(records.len() as u64);
                    break;
                }
            }
        }
        Ok(Self {
            declared_count,
            head_hash,
            records,
            malformed_at,
        })
    }

    pub fn verify(&self) -> Verdict {
        let limit = self.malformed_at.map_or(self.records.len(), |m| m as usize);
        let v = verify_records(&self.records[..limit]);
        if !v.is_ok() {
            return v;
        }
        let n = limit as u64;
        let bad = |first_bad_index, reason| Verdict::Tampered {
            first_bad_index,
            reason,
        };
        if let Some(m) = self.malformed_at {
            return bad(m, Violation::MalformedRecord);
        }
        if n < self.declared_count {
            return bad(n, Violation::MissingRecord);
        }
        if n > self.declared_count {
            return bad(self.declared_count, Violation::HeadMismatch);
        }
        let head = self.records.last().map_or(ZERO_DIGEST, |r| r.hash);
        if head != self.head_hash {
            return bad(n.saturating_sub(1), Violation::HeadMismatch);
        }
        v
    }
}

pub fn verify_file(path: impl AsRef<Path>) -> Result<Verdict, LedgerError> {
    Ok(LedgerFile::parse(&std::fs::read(path)?)?.verify())
}

/// In-memory ledger. Appends need `&mut self`, so there is one writer at a
/// time; shared references may read and verify concurrently.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    records: Vec<LedgerRecord>,
    state: BTreeMap<String, TaskState>,
    epoch: u64,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn state(&self, task_id: &str) -> Option<TaskState> {
        self.state.get(task_id).copied()
    }

    pub fn states(&self) -> &BTreeMap<String, TaskState> {
        &self.state
    }

    /// Hash of the last record, zeros when empty.
    pub fn head(&self) -> Digest {
        self.records.last().map_or(ZERO_DIGEST, |r| r.hash)
    }

    fn append(&mut self, payload: Payload) -> LedgerRecord {
        let index = self.records.len() as u64;
        let prev_hash = self.head();
        let timestamp = index + 1;
        let hash = record_hash(index, &prev_hash, &payload.encode(), timestamp);
        self.state.insert(payload.task_id.clone(), payload.event);
        let rec = LedgerRecord {
            index,
            prev_hash,
            payload,
            timestamp,
            hash,
        };
        self.records.push(rec.clone());
        rec
    }

    fn check(&self, task_id: &str, to: TaskState) -> Result<(), LedgerError> {
        let from = self.state(task_id);
        if TaskState::allows(from, to) {
            Ok(())
        } else {
            Err(LedgerError::IllegalTransition {
                task_id: task_id.to_string(),
                from,
                to,
            })
        }
    }

    pub fn post_task(&mut self, task_id: &str) -> Result<LedgerRecord, LedgerError> {
        if self.state.contains_key(task_id) {
            return Err(LedgerError::DuplicateTask(task_id.to_string()));
        }
        Ok(self.append(Payload {
            task_id: task_id.to_string(),
            event: TaskState::Posted,
            volunteer_id: None,
            epoch: self.epoch,
            assignment_digest: None,
        }))
    }

    /// Record every pair as `Assigned`, in task id order. Either all pairs
    /// are recorded or, on error, none.
    pub fn commit_assignment(&mut self, a: &Assignment) -> Result<Vec<LedgerRecord>, LedgerError> {
        let mut pairs: Vec<_> = a.pairs.iter().collect();
        pairs.sort_by(|x, y| x.task_id.cmp(&y.task_id));
        for (k, p) in pairs.iter().enumerate() {
            self.check(&p.task_id, TaskState::Assigned)?;
            if k > 0 && pairs[k - 1].task_id == p.task_id {
                return Err(LedgerError::IllegalTransition {
                    task_id: p.task_id.clone(),
                    from: Some(TaskState::Assigned),
                    to: TaskState::Assigned,
                });
            }
        }
        let digest = assignment_digest(a);
        self.epoch = a.epoch;
        Ok(pairs
            .into_iter()
            .map(|p| {
                self.append(Payload {
                    task_id: p.task_id.clone(),
                    event: TaskState::Assigned,
                    volunteer_id: Some(p.volunteer_id.clone()),
                    epoch: a.epoch,
                    assignment_digest: Some(digest),
                })
            })
            .collect())
    }

    /// Move a task to `Completed` or `Cancelled`.
    pub fn transition(&mut self, task_id: &str, event: TaskState) -> Result<LedgerRecord, LedgerError> {
        let Some(from) = self.state(task_id) else {
            return Err(LedgerError::UnknownTask(task_id.to_string()));
        };
        if !matches!(event, TaskState::Completed | TaskState::Cancelled) {
            return Err(LedgerError::IllegalTransition {
                task_id: task_id.to_string(),
                from: Some(from),
                to: event,
            });
        }
        self.check(task_id, event)?;
        let volunteer_id = self
            .records
            .iter()
            .rev()
            .find(|r| r.payload.task_id == task_id)
            .and_then(|r| r.payload.volunteer_id.clone());
        Ok(self.append(Payload {
            task_id: task_id.to_string(),
            event,
            volunteer_id,
            epoch: self.epoch,
            assignment_digest: None,
        }))
    }

    /// Task state rebuilt from the records alone.
    pub fn replay(&self) -> BTreeMap<String, TaskState> {
        self.records
            .iter()
            .map(|r| (r.payload.task_id.clone(), r.payload.event))
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.records.len() * 128);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.records.len() as u64).to_be_bytes());
        out.extend_from_slice(&self.head());
        for r in &self.records {
            let body = r.to_raw().body();
            out.extend_from_slice(&(body.len() as u32).to_be_bytes());
            out.extend_from_slice(&body);
        }
        out
    }

    /// Rebuild a ledger from file bytes, refusing anything that fails
    /// verification.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LedgerError> {
        let file = LedgerFile::parse(bytes)?;
        if let Verdict::Tampered {
            first_bad_index,
            reason,
        } = file.verify()
        {
            return Err(LedgerError::Tampered {
                index: first_bad_index,
                violation: reason,
            });
        }
        let mut l = Ledger::new();
        for raw in file.records {
            let payload = Payload::decode(&raw.payload).expect("verified payloads decode");
            l.epoch = l.epoch.max(payload.epoch);
            l.state.insert(payload.task_id.clone(), payload.event);
            l.records.push(LedgerRecord {
                index: raw.index,
                prev_hash: raw.prev_hash,
                payload,
                timestamp: raw.timestamp,
                hash: raw.hash,
            });
        }
        Ok(l)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LedgerError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LedgerError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// One JSON object per record, for inspection.
    pub fn export_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

mod hex_digest {
    use super::Digest;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Digest, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(d))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Digest, D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(&s).map_err(D::Error::custom)?;
        v.try_into().map_err(|_| D::Error::custom("expected 32 bytes"))
    }
}

mod opt_hex {
    use super::Digest;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Digest>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => super::hex_digest::serialize(d, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Digest>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::hex_digest")] Digest);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::AssignedPair;

    fn pair(v: &str, t: &str) -> AssignedPair {
        AssignedPair {
            volunteer_id: v.into(),
            task_id: t.into(),
            utility: 0.5,
        }
    }

    fn assignment(pairs: Vec<AssignedPair>) -> Assignment {
        Assignment { pairs, epoch: 1 }
    }

    #[test]
    fn genesis_and_chain() {
        let mut l = Ledger::new();
        let r0 = l.post_task("t1").unwrap();
        assert_eq!((r0.index, r0.prev_hash), (0, ZERO_DIGEST));
        assert!(matches!(l.post_task("t1"), Err(LedgerError::DuplicateTask(_))));
        let r1 = l.post_task("t2").unwrap();
        assert_eq!(r1.index, 1);
        assert_eq!(r1.prev_hash, r0.hash);
        assert!(verify(&l).is_ok());
    }

    #[test]
    fn hash_matches_documented_encoding() {
        let mut l = Ledger::new();
        let r = l.post_task("t1").unwrap();
        let mut payload = vec![0, 0, 0, 2, b't', b'1', 0, 0];
        payload.extend_from_slice(&0u64.to_be_bytes());
        payload.push(0);
        assert_eq!(r.payload.encode(), payload);
        let mut pre = Vec::new();
        pre.extend_from_slice(&0u64.to_be_bytes());
        pre.extend_from_slice(&[0; 32]);
        pre.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        pre.extend_from_slice(&payload);
        pre.extend_from_slice(&1u64.to_be_bytes());
        let expected: Digest = Sha256::digest(&pre).into();
        assert_eq!(r.hash, expected);
    }

    #[test]
    fn commit_is_ordered_and_atomic() {
        let mut l = Ledger::new();
        l.post_task("t2").unwrap();
        l.post_task("t1").unwrap();
        let a = assignment(vec![pair("v1", "t2"), pair("v2", "t1")]);
        let recs = l.commit_assignment(&a).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].payload.task_id, "t1");
        assert_eq!(recs[0].payload.assignment_digest, recs[1].payload.assignment_digest);
        assert_eq!(recs[0].payload.assignment_digest, Some(assignment_digest(&a)));

        let before = l.to_bytes();
        match l.commit_assignment(&a) {
            Err(LedgerError::IllegalTransition { task_id, .. }) => assert_eq!(task_id, "t1"),
            other => panic!("{other:?}"),
        }
        assert_eq!(l.to_bytes(), before);

        l.post_task("t3").unwrap();
        let before = l.to_bytes();
        let bad = assignment(vec![pair("v1", "t3"), pair("v2", "t9")]);
        assert!(matches!(l.commit_assignment(&bad), Err(LedgerError::IllegalTransition { .. })));
        assert_eq!(l.to_bytes(), before);
    }

    #[test]
    fn transitions() {
        let mut l = Ledger::new();
        l.post_task("t1").unwrap();
        l.post_task("t2").unwrap();
        assert!(matches!(
            l.transition("t1", TaskState::Completed),
            Err(LedgerError::IllegalTransition { .. })
        ));
        assert!(matches!(l.transition("t9", TaskState::Cancelled), Err(LedgerError::UnknownTask(_))));
        l.commit_assignment(&assignment(vec![pair("v1", "t1")])).unwrap();
        let done = l.transition("t1", TaskState::Completed).unwrap();
        assert_eq!(done.payload.volunteer_id.as_deref(), Some("v1"));
        l.transition("t2", TaskState::Cancelled).unwrap();
        assert!(l.transition("t2", TaskState::Cancelled).is_err());
        assert_eq!(l.replay(), *l.states());
        assert!(verify(&l).is_ok());
    }

    fn fixture() -> Ledger {
        let mut l = Ledger::new();
        for t in ["t1", "t2", "t3"] {
            l.post_task(t).unwrap();
        }
        l.commit_assignment(&assignment(vec![pair("v1", "t1"), pair("v1", "t2")])).unwrap();
        l
    }

    #[test]
    fn bytes_round_trip() {
        let l = fixture();
        let back = Ledger::from_bytes(&l.to_bytes()).unwrap();
        assert_eq!(back, l);
        let mut out = Vec::new();
        l.export_jsonl(&mut out).unwrap();
        let first: LedgerRecord = serde_json::from_str(std::str::from_utf8(&out).unwrap().lines().next().unwrap()).unwrap();
        assert_eq!(first, l.records()[0]);
    }

    #[test]
    fn tamper_examples() {
        let l = fixture();
        let mut raw: Vec<RawRecord> = l.records().iter().map(LedgerRecord::to_raw).collect();
        raw[2].payload[5] ^= 1;
        assert_eq!(
            verify_records(&raw),
            Verdict::Tampered {
                first_bad_index: 2,
                reason: Violation::HashMismatch
            }
        );

        let mut raw: Vec<RawRecord> = l.records().iter().map(LedgerRecord::to_raw).collect();
        raw.remove(1);
        assert_eq!(
            verify_records(&raw),
            Verdict::Tampered {
                first_bad_index: 1,
                reason: Violation::LinkBroken
            }
        );

        let mut bytes = l.to_bytes();
        let n = bytes.len();
        let tail_frame = l.records().last().unwrap().to_raw().body().len() + 4;
        bytes.truncate(n - tail_frame);
        assert_eq!(
            LedgerFile::parse(&bytes).unwrap().verify(),
            Verdict::Tampered {
                first_bad_index: 4,
                reason: Violation::MissingRecord
            }
        );
    }

    #[test]
    fn rehashed_history_with_illegal_transition_is_caught() {
        let mut raw: Vec<RawRecord> = fixture().records().iter().map(LedgerRecord::to_raw).collect();
        let mut p = Payload::decode(&raw[1].payload).unwrap();
        p.event = TaskState::Completed;
        raw[1].payload = p.encode();
        raw[1].hash = raw[1].compute_hash();
        for k in 2..raw.len() {
            raw[k].prev_hash = raw[k - 1].hash;
            raw[k].hash = raw[k].compute_hash();
        }
        assert_eq!(
            verify_records(&raw),
            Verdict::Tampered {
                first_bad_index: 1,
                reason: Violation::IllegalTransition
            }
        );
    }

    #[test]
    fn garbage_is_a_format_error() {
        assert!(matches!(Ledger::from_bytes(b"nope"), Err(LedgerError::Format(_))));
        assert!(Ledger::from_bytes(&Ledger::new().to_bytes()).unwrap().is_empty());
    }
}
