//! Slot-accurate simulation of one election phase: geometric draws,
//! truncation into the key range, base-3 key encoding, beep/listen
//! rounds, survivor extraction — plus an independent argmax oracle.
//!
//! The channel is a collision-prone broadcast medium: a slot only exposes
//! busy/idle, so any number of simultaneous beeps is indistinguishable
//! from one.

use std::io::Write;

use serde::Serialize;

use crate::analytics::{draw_geometric, GeoParam};
use crate::error::{Error, Result};

/// Largest supported top digit index. Keys carry 2(L+1) bits and are kept
/// in a u64 on the hot path, and 3^(L+1) must fit in u64.
pub const MAX_KEY_INDEX: u32 = 31;

/// Replace a draw that does not fit into L+1 base-3 digits by 0.
pub fn truncate_draw(g: u64, l: u32) -> u64 {
    assert!(l <= MAX_KEY_INDEX, "key index {l} exceeds {MAX_KEY_INDEX}");
    if g >= 3u64.pow(l + 1) {
        0
    } else {
        g
    }
}

/// A station's transmission key: the base-3 digits of its truncated draw
/// and their 2-bit-per-digit encoding.
///
/// `digits[k]` is the coefficient of 3^k (least significant first);
/// `bits` is the concatenation f(b_L) || ... || f(b_0) with f(0)=00,
/// f(1)=01, f(2)=10 — i.e. each digit spelled as a 2-bit binary number,
/// most significant digit first. The pair `11` never occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionKey {
    digits: Vec<u8>,
    bits: Vec<bool>,
}

impl TransmissionKey {
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Reconstruct the encoded value `sum_k digits[k] * 3^k`.
    pub fn value(&self) -> u64 {
        self.digits
            .iter()
            .enumerate()
            .map(|(k, &d)| d as u64 * 3u64.pow(k as u32))
            .sum()
    }

    /// The bit string packed into a u64, first transmitted bit highest.
    /// Keys compare like their base-3 values.
    pub fn packed(&self) -> u64 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }
}

/// Encode `g` (already truncated, `0 <= g < 3^(L+1)`) into its key.
pub fn encode_key(g: u64, l: u32) -> Result<TransmissionKey> {
    if l > MAX_KEY_INDEX {
        return Err(Error::invalid(
            "L",
            format!("key index {l} exceeds supported maximum {MAX_KEY_INDEX}"),
        ));
    }
    if g >= 3u64.pow(l + 1) {
        return Err(Error::invalid(
            "g",
            format!("{g} does not fit into {} base-3 digits", l + 1),
        ));
    }
    let mut digits = Vec::with_capacity(l as usize + 1);
    let mut v = g;
    for _ in 0..=l {
        digits.push((v % 3) as u8);
        v /= 3;
    }
    let mut bits = Vec::with_capacity(2 * (l as usize + 1));
    for &d in digits.iter().rev() {
        bits.push(d == 2); // high bit of f(d)
        bits.push(d == 1); // low bit of f(d)
    }
    Ok(TransmissionKey { digits, bits })
}

/// Pack the key of a truncated draw directly, digit b_k at bit pair 2k.
/// Equals `encode_key(g, l)?.packed()` without the allocations.
fn pack_key(g: u64, l: u32) -> u64 {
    let mut packed = 0u64;
    let mut v = g;
    for k in 0..=l {
        packed |= (v % 3) << (2 * k);
        v /= 3;
    }
    packed
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SlotRecord {
    pub slot_index: u32,
    pub beepers_count: u32,
    pub channel_busy: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Elimination {
    pub station_id: usize,
    pub slot_index: u32,
}

/// Per-slot channel activity and per-station elimination record of one
/// election run. Slot indices are 0-based in transmission order.
#[derive(Debug, Clone, Serialize)]
pub struct ElectionTrace {
    pub slots: Vec<SlotRecord>,
    pub eliminations: Vec<Elimination>,
    pub survivors: Vec<usize>,
}

impl ElectionTrace {
    /// Line-delimited CSV export: slotIndex, beepersCount, channelBusy.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "slotIndex,beepersCount,channelBusy")?;
        for s in &self.slots {
            writeln!(w, "{},{},{}", s.slot_index, s.beepers_count, s.channel_busy)?;
        }
        Ok(())
    }
}

/// Run the beep/listen loop over 2(L+1) slots for the given raw draws
/// (truncation is applied internally). Deterministic given the draws.
///
/// In each slot every still-candidate station holding bit 1 beeps; every
/// still-candidate station holding bit 0 that hears a busy channel drops
/// out and stops participating. Slots keep elapsing for everyone.
pub fn run_election(draws: &[u64], l: u32) -> Result<ElectionTrace> {
    if draws.is_empty() {
        return Err(Error::invalid("draws", "need at least one station"));
    }
    if l > MAX_KEY_INDEX {
        return Err(Error::invalid(
            "L",
            format!("key index {l} exceeds supported maximum {MAX_KEY_INDEX}"),
        ));
    }
    let n_bits = 2 * (l + 1);
    let keys: Vec<u64> = draws.iter().map(|&g| pack_key(truncate_draw(g, l), l)).collect();
    let mut candidate = vec![true; draws.len()];
    let mut slots = Vec::with_capacity(n_bits as usize);
    let mut eliminations = Vec::new();
    for slot in 0..n_bits {
        let mask = 1u64 << (n_bits - 1 - slot);
        let beepers = keys
            .iter()
            .zip(&candidate)
            .filter(|&(k, &c)| c && k & mask != 0)
            .count() as u32;
        let busy = beepers >= 1;
        if busy {
            for (id, (k, c)) in keys.iter().zip(candidate.iter_mut()).enumerate() {
                if *c && k & mask == 0 {
                    *c = false;
                    eliminations.push(Elimination {
                        station_id: id,
                        slot_index: slot,
                    });
                }
            }
        }
        slots.push(SlotRecord {
            slot_index: slot,
            beepers_count: beepers,
            channel_busy: busy,
        });
    }
    let survivors = candidate
        .iter()
        .enumerate()
        .filter_map(|(id, &c)| c.then_some(id))
        .collect();
    Ok(ElectionTrace {
        slots,
        eliminations,
        survivors,
    })
}

/// Independent correctness oracle: the survivors of the beep protocol are
/// exactly the stations whose truncated draw is maximal.
pub fn survivors_oracle(draws: &[u64], l: u32) -> Vec<usize> {
    assert!(!draws.is_empty(), "need at least one station");
    let truncated: Vec<u64> = draws.iter().map(|&g| truncate_draw(g, l)).collect();
    let max = *truncated.iter().max().unwrap();
    truncated
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| (v == max).then_some(i))
        .collect()
}

/// JSON summary of one full phase.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseSummary {
    pub n: u64,
    pub p: f64,
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(rename = "survivorCount")]
    pub survivor_count: u64,
    pub slots: u32,
}

/// Draw n geometric variates, truncate, run the election. Returns the
/// survivor count (always >= 1... except in the all-truncated corner,
/// where everyone holds the all-zero key and all n survive) and the full
/// trace.
pub fn lge_phase<R: rand::Rng + ?Sized>(
    n: u64,
    param: GeoParam,
    l: u32,
    rng: &mut R,
) -> Result<(u64, ElectionTrace)> {
    if n < 1 {
        return Err(Error::invalid("n", "need n >= 1"));
    }
    let draws: Vec<u64> = (0..n).map(|_| draw_geometric(param, rng)).collect();
    let trace = run_election(&draws, l)?;
    Ok((trace.survivors.len() as u64, trace))
}

/// Trace-free phase for high-volume Monte Carlo: same slot loop, same
/// draws-per-phase RNG consumption, no allocations kept per slot.
pub fn lge_phase_count<R: rand::Rng + ?Sized>(n: u64, param: GeoParam, l: u32, rng: &mut R) -> u64 {
    debug_assert!(n >= 1 && l <= MAX_KEY_INDEX);
    let n_bits = 2 * (l + 1);
    let mut active: Vec<u64> = (0..n)
        .map(|_| pack_key(truncate_draw(draw_geometric(param, rng), l), l))
        .collect();
    for slot in 0..n_bits {
        let mask = 1u64 << (n_bits - 1 - slot);
        if active.iter().any(|&k| k & mask != 0) {
            active.retain(|&k| k & mask != 0);
        }
    }
    active.len() as u64
}
