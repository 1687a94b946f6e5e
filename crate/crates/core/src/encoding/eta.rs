use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, NaiveDate};

use crate::codec::{Decoder, Encoder};
use crate::data_model::{EtaLabel, SuperSegmentId, TimeContext, SLOTS_PER_DAY};
use crate::error::{Error, Result};
use crate::gbdt::MISSING;

use super::cc::get_date;
use super::key::{CategoryKey, Conditioning};
use super::smoothing::smoothed_at;

/// One travel-time label with the calendar position it was observed at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaObservation {
    pub date: NaiveDate,
    pub context: TimeContext,
    pub label: EtaLabel,
}

/// Per-day `(count, sum)` of one key.
type DaySums = BTreeMap<NaiveDate, (u64, f64)>;

/// Mean travel time per super-segment and conditioning key.
///
/// Sums are kept per calendar day and always folded in date order, so a
/// lookup that leaves one day out is bit-identical to a table fitted
/// without that day.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaEncodingTable {
    keys: HashMap<(SuperSegmentId, CategoryKey), DaySums>,
    global: DaySums,
}

pub fn fit_eta_encoding(labels: &[EtaObservation]) -> Result<EtaEncodingTable> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("ETA labels"));
    }
    let mut keys: HashMap<(SuperSegmentId, CategoryKey), DaySums> = HashMap::new();
    let mut global = DaySums::new();
    for obs in labels {
        let eta = obs.label.eta;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "ETA {eta} for supersegment {} must be positive",
                obs.label.supersegment
            )));
        }
        let add = |sums: &mut DaySums| {
            let e = sums.entry(obs.date).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += eta;
        };
        add(&mut global);
        for cond in Conditioning::ALL {
            add(keys.entry((obs.label.supersegment, cond.key(&obs.context))).or_default());
        }
    }
    Ok(EtaEncodingTable { keys, global })
}

fn mean(sums: &DaySums, exclude_day: Option<NaiveDate>) -> Option<f64> {
    let (n, s) = sums
        .iter()
        .filter(|(d, _)| Some(**d) != exclude_day)
        .fold((0u64, 0.0), |(n, s), (_, (dn, ds))| (n + dn, s + ds));
    (n > 0).then(|| s / n as f64)
}

impl EtaEncodingTable {
    /// Mean ETA of `key`, falling back to the super-segment's unconditional
    /// mean and then to the global mean. MISSING only if nothing remains
    /// after excluding `exclude_day`.
    pub fn lookup(&self, supersegment: SuperSegmentId, key: CategoryKey, exclude_day: Option<NaiveDate>) -> f64 {
        let unconditional = CategoryKey::from_parts(Conditioning::Unconditional, 0, 0);
        self.keys
            .get(&(supersegment, key))
            .and_then(|s| mean(s, exclude_day))
            .or_else(|| {
                self.keys
                    .get(&(supersegment, unconditional))
                    .and_then(|s| mean(s, exclude_day))
            })
            .or_else(|| mean(&self.global, exclude_day))
            .unwrap_or(MISSING)
    }

    /// Encoding for every slot of the day, other calendar fields taken from `context`.
    pub fn te_by_slot(
        &self,
        supersegment: SuperSegmentId,
        conditioning: Conditioning,
        context: &TimeContext,
        exclude_day: Option<NaiveDate>,
    ) -> Vec<f64> {
        (0..SLOTS_PER_DAY as u16)
            .map(|s| self.lookup(supersegment, conditioning.key_at(context, s), exclude_day))
            .collect()
    }

    /// Time-window-smoothed encoding at `context.slot()`. Equal to
    /// `smoothed_te(te_by_slot(..))[slot]`.
    pub fn smoothed_lookup(
        &self,
        supersegment: SuperSegmentId,
        conditioning: Conditioning,
        context: &TimeContext,
        exclude_day: Option<NaiveDate>,
    ) -> f64 {
        smoothed_at(
            |s| self.lookup(supersegment, conditioning.key_at(context, s as u16), exclude_day),
            context.slot() as usize,
        )
    }

    fn encode_sums(enc: &mut Encoder, sums: &DaySums) {
        enc.put_len(sums.len());
        for (d, (n, s)) in sums {
            enc.put_i32(d.num_days_from_ce());
            enc.put_u64(*n);
            enc.put_f64(*s);
        }
    }

    fn decode_sums(dec: &mut Decoder<'_>) -> Result<DaySums> {
        let n = dec.get_len(20)?;
        let mut out = DaySums::new();
        for _ in 0..n {
            let d = get_date(dec)?;
            out.insert(d, (dec.get_u64()?, dec.get_f64()?));
        }
        Ok(out)
    }

    pub(crate) fn encode(&self, enc: &mut Encoder) {
        Self::encode_sums(enc, &self.global);
        let mut keys: Vec<_> = self.keys.iter().collect();
        keys.sort_unstable_by_key(|(k, _)| **k);
        enc.put_len(keys.len());
        for ((ss, key), sums) in keys {
            enc.put_u64(ss.0);
            enc.put_u8(key.conditioning.tag());
            let (a, b) = key.parts();
            enc.put_u16(a);
            enc.put_u16(b);
            Self::encode_sums(enc, sums);
        }
    }

    pub(crate) fn decode(dec: &mut Decoder<'_>) -> Result<Self> {
        let global = Self::decode_sums(dec)?;
        let n = dec.get_len(21)?;
        let mut keys = HashMap::with_capacity(n);
        for _ in 0..n {
            let ss = SuperSegmentId(dec.get_u64()?);
            let cond = Conditioning::from_tag(dec.get_u8()?)
                .ok_or_else(|| Error::Malformed("unknown conditioning tag".into()))?;
            let a = dec.get_u16()?;
            let b = dec.get_u16()?;
            keys.insert((ss, CategoryKey::from_parts(cond, a, b)), Self::decode_sums(dec)?);
        }
        Ok(Self { keys, global })
    }
}
