//! User-side semantic cache.
//!
//! A stored answer serves a new query when two gates pass: the query
//! embeddings are within the cosine threshold tau, and the conversation
//! context chains are congruent (equal order-sensitive digests over
//! whitespace-normalized, lowercased turns). Among several qualifying
//! entries the highest cosine wins, ties going to the most recent entry.
//! Capacity eviction drops the least-recently-hit entry. Degraded answers
//! are never cached.

use serde::{Deserialize, Serialize};
use skein_core::rng::fnv1a64;
use skein_core::{Query, Turn};
use skein_gateway::{cosine, Embedding, Gateway};
use skein_writer::CitationedAnswer;
use std::io::Read;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("tau must lie in (0, 1], got {0}")]
    BadTau(f64),
    #[error("cache capacity must be positive")]
    ZeroCapacity,
    #[error("degraded answers are not cached")]
    DegradedResponse,
    #[error("gateway error: {0}")]
    Gateway(#[from] skein_gateway::GatewayError),
    #[error("persistence error: {0}")]
    Persistence(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub query_text: String,
    pub query_embedding: Embedding,
    /// Order-sensitive digest of the normalized conversation turns.
    pub context_digest: u64,
    pub response: CitationedAnswer,
    pub created_at: u64,
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheHit {
    pub entry: CacheEntry,
    pub cosine: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub lookups: u64,
    pub hits: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        if self.lookups == 0 {
            0.0
        } else {
            self.hits as f64 / self.lookups as f64
        }
    }
}

struct Slot {
    entry: CacheEntry,
    /// Recency for least-recently-hit eviction: bumped on store and on
    /// every hit.
    last_access: u64,
}

/// Digest of a context chain: whitespace-normalized, lowercased turns
/// hashed in order with role separators.
pub fn context_digest(turns: &[Turn]) -> u64 {
    let mut bytes = Vec::new();
    for turn in turns {
        for part in [&turn.query, &turn.answer] {
            let normalized = part
                .split_whitespace()
                .map(|w| w.to_lowercase())
                .collect::<Vec<_>>()
                .join(" ");
            bytes.extend_from_slice(normalized.as_bytes());
            bytes.push(0x1F);
        }
        bytes.push(0x1E);
    }
    fnv1a64(&bytes)
}

pub struct SemanticCache {
    slots: RwLock<Vec<Slot>>,
    capacity: usize,
    default_tau: f64,
    lookups: AtomicU64,
    hits: AtomicU64,
    access_seq: AtomicU64,
}

pub const DEFAULT_TAU: f64 = 0.95;

impl SemanticCache {
    pub fn new(capacity: usize, default_tau: f64) -> Result<Self, CacheError> {
        if capacity == 0 {
            return Err(CacheError::ZeroCapacity);
        }
        if !(default_tau > 0.0 && default_tau <= 1.0) {
            return Err(CacheError::BadTau(default_tau));
        }
        Ok(Self {
            slots: RwLock::new(Vec::new()),
            capacity,
            default_tau,
            lookups: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            access_seq: AtomicU64::new(0),
        })
    }

    pub fn default_tau(&self) -> f64 {
        self.default_tau
    }

    pub fn len(&self) -> usize {
        self.slots.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Looks up a semantically equivalent entry under threshold `tau`.
    /// Counts toward the hit-rate statistics.
    pub fn lookup(
        &self,
        query: &Query,
        tau: f64,
        gateway: &Gateway,
    ) -> Result<Option<CacheHit>, CacheError> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(CacheError::BadTau(tau));
        }
        self.lookups.fetch_add(1, Ordering::SeqCst);
        let embedding = gateway.embed(&query.text)?;
        let digest = context_digest(&query.context);

        let mut slots = self.slots.write().expect("cache lock");
        let mut best: Option<(usize, f64)> = None;
        for (i, slot) in slots.iter().enumerate() {
            if slot.entry.context_digest != digest {
                continue;
            }
            let sim = match cosine(&embedding, &slot.entry.query_embedding) {
                Ok(s) => s,
                Err(_) => continue, // dimension drift across configs
            };
            if sim < tau {
                continue;
            }
            let better = match best {
                None => true,
                Some((best_i, best_sim)) => {
                    sim > best_sim
                        || (sim == best_sim
                            && slot.entry.created_at > slots[best_i].entry.created_at)
                }
            };
            if better {
                best = Some((i, sim));
            }
        }

        match best {
            Some((i, sim)) => {
                self.hits.fetch_add(1, Ordering::SeqCst);
                slots[i].entry.hits += 1;
                slots[i].last_access = self.access_seq.fetch_add(1, Ordering::SeqCst);
                Ok(Some(CacheHit {
                    entry: slots[i].entry.clone(),
                    cosine: sim,
                }))
            }
            None => Ok(None),
        }
    }

    /// Stores a finished, non-degraded answer, evicting the
    /// least-recently-hit entry at capacity.
    pub fn store(
        &self,
        query: &Query,
        response: &CitationedAnswer,
        gateway: &Gateway,
    ) -> Result<(), CacheError> {
        if response.degraded {
            return Err(CacheError::DegradedResponse);
        }
        let embedding = gateway.embed(&query.text)?;
        let entry = CacheEntry {
            query_text: query.text.clone(),
            query_embedding: embedding,
            context_digest: context_digest(&query.context),
            response: response.clone(),
            created_at: self.access_seq.fetch_add(1, Ordering::SeqCst),
            hits: 0,
        };

        let mut slots = self.slots.write().expect("cache lock");
        if slots.len() >= self.capacity {
            let victim = slots
                .iter()
                .enumerate()
                .min_by_key(|(_, s)| s.last_access)
                .map(|(i, _)| i)
                .expect("capacity > 0");
            slots.remove(victim);
        }
        let last_access = entry.created_at;
        slots.push(Slot { entry, last_access });
        Ok(())
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            lookups: self.lookups.load(Ordering::SeqCst),
            hits: self.hits.load(Ordering::SeqCst),
        }
    }

    /// Serializes the cache as length-prefixed binary records: embedding
    /// as little-endian f32s, then the UTF-8 payloads.
    pub fn save(&self, path: &Path) -> Result<(), CacheError> {
        let slots = self.slots.read().expect("cache lock");
        let stats = self.stats();
        let mut out: Vec<u8> = Vec::new();
        out.extend_from_slice(b"SKCACHE1");
        out.extend_from_slice(&(slots.len() as u32).to_le_bytes());
        out.extend_from_slice(&stats.lookups.to_le_bytes());
        out.extend_from_slice(&stats.hits.to_le_bytes());
        for slot in slots.iter() {
            let mut record: Vec<u8> = Vec::new();
            let e = &slot.entry;
            record.extend_from_slice(&(e.query_embedding.dim() as u32).to_le_bytes());
            for v in &e.query_embedding.values {
                record.extend_from_slice(&v.to_le_bytes());
            }
            record.extend_from_slice(&e.context_digest.to_le_bytes());
            record.extend_from_slice(&e.created_at.to_le_bytes());
            record.extend_from_slice(&e.hits.to_le_bytes());
            record.extend_from_slice(&slot.last_access.to_le_bytes());
            let response_json =
                serde_json::to_vec(&e.response).map_err(|e| CacheError::Persistence(e.to_string()))?;
            record.extend_from_slice(&(e.query_text.len() as u32).to_le_bytes());
            record.extend_from_slice(e.query_text.as_bytes());
            record.extend_from_slice(&(response_json.len() as u32).to_le_bytes());
            record.extend_from_slice(&response_json);

            out.extend_from_slice(&(record.len() as u32).to_le_bytes());
            out.extend_from_slice(&record);
        }
        std::fs::write(path, out).map_err(|e| CacheError::Persistence(e.to_string()))
    }

    pub fn load(path: &Path, capacity: usize, default_tau: f64) -> Result<Self, CacheError> {
        let mut file =
            std::fs::File::open(path).map_err(|e| CacheError::Persistence(e.to_string()))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)
            .map_err(|e| CacheError::Persistence(e.to_string()))?;
        let mut cursor = Cursor::new(&bytes);

        if cursor.take_bytes(8)? != b"SKCACHE1" {
            return Err(CacheError::Persistence("bad magic".into()));
        }
        let count = cursor.take_u32()? as usize;
        let lookups = cursor.take_u64()?;
        let hits = cursor.take_u64()?;

        let cache = Self::new(capacity.max(count.max(1)), default_tau)?;
        cache.lookups.store(lookups, Ordering::SeqCst);
        cache.hits.store(hits, Ordering::SeqCst);

        let mut max_access = 0u64;
        {
            let mut slots = cache.slots.write().expect("cache lock");
            for _ in 0..count {
                let record_len = cursor.take_u32()? as usize;
                let mut record = Cursor::new(cursor.take_bytes(record_len)?);
                let dim = record.take_u32()? as usize;
                let mut values = Vec::with_capacity(dim);
                for _ in 0..dim {
                    let raw: [u8; 4] = record.take_bytes(4)?.try_into().unwrap();
                    values.push(f32::from_le_bytes(raw));
                }
                let context_digest = record.take_u64()?;
                let created_at = record.take_u64()?;
                let entry_hits = record.take_u64()?;
                let last_access = record.take_u64()?;
                let qlen = record.take_u32()? as usize;
                let query_text = String::from_utf8(record.take_bytes(qlen)?.to_vec())
                    .map_err(|e| CacheError::Persistence(e.to_string()))?;
                let rlen = record.take_u32()? as usize;
                let response: CitationedAnswer = serde_json::from_slice(record.take_bytes(rlen)?)
                    .map_err(|e| CacheError::Persistence(e.to_string()))?;
                max_access = max_access.max(last_access).max(created_at);
                slots.push(Slot {
                    entry: CacheEntry {
                        query_text,
                        query_embedding: Embedding::new(values),
                        context_digest,
                        response,
                        created_at,
                        hits: entry_hits,
                    },
                    last_access,
                });
            }
        }
        cache.access_seq.store(max_access + 1, Ordering::SeqCst);
        Ok(cache)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take_bytes(&mut self, n: usize) -> Result<&'a [u8], CacheError> {
        if self.pos + n > self.bytes.len() {
            return Err(CacheError::Persistence("truncated cache file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn take_u32(&mut self) -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(self.take_bytes(4)?.try_into().unwrap()))
    }

    fn take_u64(&mut self) -> Result<u64, CacheError> {
        Ok(u64::from_le_bytes(self.take_bytes(8)?.try_into().unwrap()))
    }
}
