use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FederationError;

/// One payload hop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub round: usize,
    pub sender: usize,
    pub receiver: usize,
    /// Participant whose model (or, for broadcasts, the aggregator whose
    /// aggregate) the payload carries; differs from `sender` on relays.
    pub origin: usize,
    pub bytes: usize,
    pub sha256: String,
}

/// Per-participant transport totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransportTotals {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub payloads_sent: u64,
    pub payloads_received: u64,
}

impl TransportTotals {
    pub fn bytes_transmitted(&self) -> u64 {
        self.bytes_sent + self.bytes_received
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransportLedger {
    pub participants: usize,
    pub entries: Vec<LedgerEntry>,
}

pub fn payload_digest(payload: &[u8]) -> String {
    hex::encode(Sha256::digest(payload))
}

impl TransportLedger {
    pub fn new(participants: usize) -> Self {
        Self {
            participants,
            entries: Vec::new(),
        }
    }

    pub fn record(&mut self, round: usize, sender: usize, receiver: usize, origin: usize, payload: &[u8]) {
        self.entries.push(LedgerEntry {
            round,
            sender,
            receiver,
            origin,
            bytes: payload.len(),
            sha256: payload_digest(payload),
        });
    }

    pub fn totals(&self) -> Vec<TransportTotals> {
        let mut t = vec![TransportTotals::default(); self.participants];
        for e in &self.entries {
            t[e.sender].bytes_sent += e.bytes as u64;
            t[e.sender].payloads_sent += 1;
            t[e.receiver].bytes_received += e.bytes as u64;
            t[e.receiver].payloads_received += 1;
        }
        t
    }

    pub fn total_sent(&self) -> u64 {
        self.totals().iter().map(|t| t.bytes_sent).sum()
    }

    pub fn total_received(&self) -> u64 {
        self.totals().iter().map(|t| t.bytes_received).sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.entries.iter().map(|e| e.bytes as u64).sum()
    }

    pub fn payloads_in_round(&self, round: usize) -> usize {
        self.entries.iter().filter(|e| e.round == round).count()
    }

    /// Σ sent == Σ received, and each entry names valid participants.
    pub fn is_conserved(&self) -> bool {
        self.entries.iter().all(|e| e.sender < self.participants && e.receiver < self.participants)
            && self.total_sent() == self.total_received()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), FederationError> {
        let mut wr = csv::Writer::from_writer(w);
        for e in &self.entries {
            wr.serialize(e).map_err(|e| FederationError::Io(e.to_string()))?;
        }
        if self.entries.is_empty() {
            wr.write_record(["round", "sender", "receiver", "origin", "bytes", "sha256"])
                .map_err(|e| FederationError::Io(e.to_string()))?;
        }
        wr.flush().map_err(|e| FederationError::Io(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R, participants: usize) -> Result<Self, FederationError> {
        let mut rd = csv::Reader::from_reader(r);
        let entries = rd
            .deserialize()
            .collect::<Result<Vec<LedgerEntry>, _>>()
            .map_err(|e| FederationError::Io(format!("ledger: {e}")))?;
        Ok(Self { participants, entries })
    }

    /// SHA-256 of the CSV rendering; stored in reports to detect edits.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        payload_digest(&buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_and_round_trip() {
        let mut l = TransportLedger::new(3);
        l.record(1, 0, 1, 0, &[1, 2, 3]);
        l.record(1, 1, 2, 0, &[1, 2, 3]);
        l.record(2, 2, 0, 2, &[9; 10]);
        let t = l.totals();
        assert_eq!(t[0].bytes_sent, 3);
        assert_eq!(t[0].bytes_received, 10);
        assert_eq!(t[1].bytes_transmitted(), 6);
        assert!(l.is_conserved());
        assert_eq!(l.total_bytes(), 16);
        assert_eq!(l.payloads_in_round(1), 2);
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let back = TransportLedger::read_csv(buf.as_slice(), 3).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.digest(), l.digest());
    }

    #[test]
    fn empty_ledger_round_trip() {
        let l = TransportLedger::new(2);
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        assert_eq!(TransportLedger::read_csv(buf.as_slice(), 2).unwrap(), l);
    }
}
