//! Episodic memory: a time-ordered bank of past window signatures.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::edmd::SpectralSignature;
use crate::error::{Error, Result};
use crate::similarity::signature_distance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub t_prime: usize,
    pub signature: SpectralSignature,
    pub matched_count: u64,
    pub inserted_at: u64,
}

/// Best admissible past window for the current signature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub t_min: usize,
    pub d_lambda: f64,
    pub d_v: f64,
    pub combined: f64,
    /// Anchor of the recalled window, used for rescaling.
    pub recalled_anchor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchThresholds {
    pub eps_lambda: f64,
    pub eps_v: f64,
}

/// Signature store with optional fixed capacity.
///
/// Without a capacity the bank grows by one record per stored window. With a
/// capacity, each insert that overflows it evicts the records with the fewest
/// matches, oldest first.
#[derive(Debug, Clone, Default)]
pub struct MemoryBank {
    records: Vec<MemoryRecord>,
    capacity: Option<usize>,
    inserts: u64,
}

impl MemoryBank {
    pub fn new(capacity: Option<usize>) -> Self {
        Self {
            records: Vec::new(),
            capacity,
            inserts: 0,
        }
    }

    pub fn unbounded() -> Self {
        Self::new(None)
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[MemoryRecord] {
        &self.records
    }

    pub fn get(&self, t_prime: usize) -> Option<&MemoryRecord> {
        self.records
            .binary_search_by_key(&t_prime, |r| r.t_prime)
            .ok()
            .map(|i| &self.records[i])
    }

    /// Append the signature of the window ending at `t_prime`.
    pub fn store(&mut self, t_prime: usize, signature: SpectralSignature) -> Result<()> {
        self.insert(MemoryRecord {
            t_prime,
            signature,
            matched_count: 0,
            inserted_at: self.inserts,
        })
    }

    pub fn insert(&mut self, record: MemoryRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.t_prime <= last.t_prime {
                return Err(Error::OutOfOrder {
                    t_prime: record.t_prime,
                    latest: last.t_prime,
                });
            }
        }
        self.inserts = self.inserts.max(record.inserted_at) + 1;
        self.records.push(record);
        if matches!(self.capacity, Some(c) if self.records.len() > c) {
            self.evict();
        }
        Ok(())
    }

    /// Drop records until the bank fits its capacity. The victim is the record
    /// with the lowest `matched_count`, and among those the oldest `t_prime`.
    pub fn evict(&mut self) {
        let Some(capacity) = self.capacity else {
            return;
        };
        while self.records.len() > capacity {
            let victim = self
                .records
                .iter()
                .enumerate()
                .min_by_key(|(_, r)| (r.matched_count, r.t_prime))
                .map(|(i, _)| i)
                .expect("bank is non-empty");
            self.records.remove(victim);
        }
    }

    /// Closest admissible record to `sig`.
    ///
    /// Only records with `t' + Δ < t` are considered, and only those with
    /// `d_λ < ε_λ` and `d_v < ε_v` qualify. Ties in `d_λ + d_v` go to the most
    /// recent `t'`.
    pub fn find_match(
        &self,
        sig: &SpectralSignature,
        t: usize,
        delta: usize,
        thresholds: MatchThresholds,
    ) -> Result<Option<MatchResult>> {
        if sig.fallback {
            return Err(Error::FallbackSignature(sig.t));
        }
        let mut best: Option<MatchResult> = None;
        for rec in &self.records {
            if rec.t_prime + delta >= t {
                // records are ordered, nothing later is admissible
                break;
            }
            if rec.signature.fallback {
                continue;
            }
            let d = signature_distance(sig, &rec.signature)?;
            if !(d.d_lambda < thresholds.eps_lambda && d.d_v < thresholds.eps_v) {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => d.combined < b.combined || (d.combined == b.combined && rec.t_prime > b.t_min),
            };
            if better {
                best = Some(MatchResult {
                    t_min: rec.t_prime,
                    d_lambda: d.d_lambda,
                    d_v: d.d_v,
                    combined: d.combined,
                    recalled_anchor: rec.signature.anchor,
                });
            }
        }
        Ok(best)
    }

    /// Count a successful recall of `t_prime`.
    pub fn mark_matched(&mut self, t_prime: usize) {
        if let Ok(i) = self.records.binary_search_by_key(&t_prime, |r| r.t_prime) {
            self.records[i].matched_count += 1;
        }
    }

    /// One JSON object per record and line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for rec in &self.records {
            serde_json::to_writer(&mut out, &SnapshotLine::from(rec))?;
            out.write_all(b"\n").map_err(|source| Error::Io {
                path: "<bank snapshot>".into(),
                source,
            })?;
        }
        Ok(())
    }

    /// Rebuild a bank from [`write_jsonl`](Self::write_jsonl) output.
    pub fn read_jsonl<R: BufRead>(input: R, capacity: Option<usize>) -> Result<Self> {
        let mut bank = Self::new(capacity);
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: "<bank snapshot>".into(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let snap: SnapshotLine = serde_json::from_str(&line)?;
            bank.insert(snap.into_record(i as u64))?;
        }
        Ok(bank)
    }
}

/// Flat on-disk form of a [`MemoryRecord`].
#[derive(Debug, Serialize, Deserialize)]
struct SnapshotLine {
    t_prime: usize,
    eigenvalues: Vec<num_complex::Complex64>,
    modes: Vec<Vec<num_complex::Complex64>>,
    anchor: f64,
    matched_count: u64,
}

impl From<&MemoryRecord> for SnapshotLine {
    fn from(r: &MemoryRecord) -> Self {
        Self {
            t_prime: r.t_prime,
            eigenvalues: r.signature.eigenvalues.clone(),
            modes: r.signature.modes.clone(),
            anchor: r.signature.anchor,
            matched_count: r.matched_count,
        }
    }
}

impl SnapshotLine {
    fn into_record(self, inserted_at: u64) -> MemoryRecord {
        MemoryRecord {
            t_prime: self.t_prime,
            signature: SpectralSignature {
                t: self.t_prime,
                anchor: self.anchor,
                eigenvalues: self.eigenvalues,
                modes: self.modes,
                fallback: false,
            },
            matched_count: self.matched_count,
            inserted_at,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn sig(t: usize, lambda: f64, mode: f64) -> SpectralSignature {
        SpectralSignature {
            t,
            anchor: 1.0,
            eigenvalues: vec![Complex64::new(lambda, 0.0)],
            modes: vec![vec![Complex64::new(mode, 0.0)]],
            fallback: false,
        }
    }

    const LOOSE: MatchThresholds = MatchThresholds {
        eps_lambda: 1.0,
        eps_v: 1.0,
    };

    #[test]
    fn store_appends_and_orders() {
        let mut bank = MemoryBank::unbounded();
        bank.store(3, sig(3, 0.9, 1.0)).unwrap();
        assert_eq!(bank.len(), 1);
        assert!(matches!(
            bank.store(3, sig(3, 0.9, 1.0)),
            Err(Error::OutOfOrder { t_prime: 3, latest: 3 })
        ));
        assert!(bank.store(2, sig(2, 0.9, 1.0)).is_err());
        bank.store(4, sig(4, 0.9, 1.0)).unwrap();
        assert_eq!(bank.len(), 2);
    }

    #[test]
    fn capacity_evicts_oldest_unmatched() {
        let mut bank = MemoryBank::new(Some(2));
        bank.store(1, sig(1, 0.9, 1.0)).unwrap();
        bank.store(2, sig(2, 0.9, 1.0)).unwrap();
        bank.store(3, sig(3, 0.9, 1.0)).unwrap();
        let ts: Vec<usize> = bank.records().iter().map(|r| r.t_prime).collect();
        assert_eq!(ts, vec![2, 3]);
    }

    #[test]
    fn eviction_prefers_unmatched_records() {
        let mut bank = MemoryBank::new(Some(1));
        bank.capacity = None;
        bank.store(1, sig(1, 0.9, 1.0)).unwrap();
        bank.store(2, sig(2, 0.9, 1.0)).unwrap();
        for _ in 0..3 {
            bank.mark_matched(1);
        }
        bank.capacity = Some(1);
        bank.evict();
        assert_eq!(bank.records()[0].t_prime, 1);
        assert_eq!(bank.records()[0].matched_count, 3);
    }

    #[test]
    fn unbounded_bank_grows_linearly() {
        let mut bank = MemoryBank::unbounded();
        for t in 0..500 {
            bank.store(t, sig(t, 0.9, 1.0)).unwrap();
        }
        assert_eq!(bank.len(), 500);
    }

    #[test]
    fn identical_signature_matches_with_zero_distance() {
        let mut bank = MemoryBank::unbounded();
        bank.store(10, sig(10, 0.9, 2.0)).unwrap();
        let m = bank
            .find_match(&sig(50, 0.9, 2.0), 50, 5, MatchThresholds { eps_lambda: 0.05, eps_v: 0.1 })
            .unwrap()
            .unwrap();
        assert_eq!(m.t_min, 10);
        assert_eq!(m.combined, 0.0);
    }

    #[test]
    fn threshold_gate() {
        let mut bank = MemoryBank::unbounded();
        bank.store(1, sig(1, 0.5, 2.0)).unwrap();
        let found = bank
            .find_match(&sig(50, 0.9, 2.0), 50, 5, MatchThresholds { eps_lambda: 0.05, eps_v: 0.1 })
            .unwrap();
        assert!(found.is_none());
        assert!(MemoryBank::unbounded()
            .find_match(&sig(50, 0.9, 2.0), 50, 5, LOOSE)
            .unwrap()
            .is_none());
    }

    #[test]
    fn closest_admissible_wins() {
        let mut bank = MemoryBank::unbounded();
        bank.store(1, sig(1, 0.95, 2.0)).unwrap(); // combined 0.05
        bank.store(2, sig(2, 0.93, 2.0)).unwrap(); // combined 0.03
        bank.store(3, sig(3, 0.96, 2.0)).unwrap();
        let m = bank.find_match(&sig(50, 0.9, 2.0), 50, 5, LOOSE).unwrap().unwrap();
        assert_eq!(m.t_min, 2);
        assert!((m.combined - 0.03).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_most_recent() {
        let mut bank = MemoryBank::unbounded();
        bank.store(1, sig(1, 0.9, 2.0)).unwrap();
        bank.store(7, sig(7, 0.9, 2.0)).unwrap();
        let m = bank.find_match(&sig(50, 0.9, 2.0), 50, 5, LOOSE).unwrap().unwrap();
        assert_eq!(m.t_min, 7);
    }

    #[test]
    fn lookahead_gate() {
        let mut bank = MemoryBank::unbounded();
        bank.store(45, sig(45, 0.9, 2.0)).unwrap();
        // 45 + 5 is not < 50
        assert!(bank.find_match(&sig(50, 0.9, 2.0), 50, 5, LOOSE).unwrap().is_none());
        assert!(bank.find_match(&sig(51, 0.9, 2.0), 51, 5, LOOSE).unwrap().is_some());
    }

    #[test]
    fn zero_thresholds_never_match() {
        let mut bank = MemoryBank::unbounded();
        bank.store(1, sig(1, 0.9, 2.0)).unwrap();
        let zero = MatchThresholds { eps_lambda: 0.0, eps_v: 0.0 };
        assert!(bank.find_match(&sig(50, 0.9, 2.0), 50, 5, zero).unwrap().is_none());
    }

    #[test]
    fn fallback_query_is_rejected() {
        let bank = MemoryBank::unbounded();
        let mut s = sig(5, 0.9, 1.0);
        s.fallback = true;
        assert!(bank.find_match(&s, 20, 1, LOOSE).is_err());
    }

    #[test]
    fn jsonl_snapshot_round_trip() {
        let mut bank = MemoryBank::unbounded();
        bank.store(4, sig(4, 0.9, 2.0)).unwrap();
        bank.store(9, sig(9, -0.3, 1.5)).unwrap();
        bank.mark_matched(4);
        let mut buf = Vec::new();
        bank.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["t_prime"], 4);
        assert_eq!(first["eigenvalues"][0], serde_json::json!([0.9, 0.0]));
        assert_eq!(first["matched_count"], 1);

        let restored = MemoryBank::read_jsonl(buf.as_slice(), None).unwrap();
        assert_eq!(restored.len(), 2);
        assert_eq!(restored.records()[0].signature, bank.records()[0].signature);
        assert_eq!(restored.records()[0].matched_count, 1);
    }
}
