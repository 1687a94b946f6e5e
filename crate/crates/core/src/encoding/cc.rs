use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, NaiveDate};

use crate::codec::{Decoder, Encoder};
use crate::data_model::{CongestionClass, CongestionLabel, EdgeId, TimeContext, NUM_CLASSES};
use crate::error::{Error, Result};

use super::key::{CategoryKey, Conditioning};

/// Pseudocount of the smoothed congestion-class encoding.
pub const DEFAULT_PSEUDOCOUNT: f64 = 20.0;

/// One congestion label with the calendar position it was observed at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcObservation {
    pub date: NaiveDate,
    pub context: TimeContext,
    pub label: CongestionLabel,
}

type Counts = [u64; NUM_CLASSES];

/// Per-edge class counts for every conditioning set, smoothed toward the
/// global class fractions with a pseudocount:
///
/// `TE_c = (count_c + w * mean_c) / (count + w)`.
///
/// Per-day observations are kept so that any single calendar day can be
/// left out of both the key counts and the global fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct CcEncodingTable {
    pseudocount: f64,
    global: Counts,
    day_global: BTreeMap<NaiveDate, Counts>,
    counts: HashMap<(EdgeId, CategoryKey), Counts>,
    day_obs: HashMap<(NaiveDate, EdgeId), Vec<(TimeContext, CongestionClass)>>,
}

pub fn fit_cc_encoding(labels: &[CcObservation], pseudocount: f64) -> Result<CcEncodingTable> {
    if !(pseudocount > 0.0 && pseudocount.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "pseudocount {pseudocount} must be positive"
        )));
    }
    let mut table = CcEncodingTable {
        pseudocount,
        global: [0; NUM_CLASSES],
        day_global: BTreeMap::new(),
        counts: HashMap::new(),
        day_obs: HashMap::new(),
    };
    for obs in labels {
        let Some(class) = obs.label.class else { continue };
        let c = class.index();
        let edge = obs.label.edge;
        table.global[c] += 1;
        table.day_global.entry(obs.date).or_default()[c] += 1;
        for cond in Conditioning::ALL {
            table.counts.entry((edge, cond.key(&obs.context))).or_default()[c] += 1;
        }
        table
            .day_obs
            .entry((obs.date, edge))
            .or_default()
            .push((obs.context, class));
    }
    if table.global.iter().sum::<u64>() == 0 {
        return Err(Error::EmptyInput("congestion labels (all IGNORE or none)"));
    }
    Ok(table)
}

/// Smoothed encoding of one class; see [`CcEncodingTable::lookup`].
pub fn lookup_cc(
    table: &CcEncodingTable,
    edge: EdgeId,
    key: CategoryKey,
    class: CongestionClass,
    exclude_day: Option<NaiveDate>,
) -> f64 {
    table.lookup(edge, key, exclude_day)[class.index()]
}

impl CcEncodingTable {
    pub fn pseudocount(&self) -> f64 {
        self.pseudocount
    }

    /// Raw class counts of a key, with `exclude_day` removed.
    pub fn key_counts(&self, edge: EdgeId, key: CategoryKey, exclude_day: Option<NaiveDate>) -> Counts {
        let mut c = self.counts.get(&(edge, key)).copied().unwrap_or_default();
        if let Some(day) = exclude_day {
            if let Some(obs) = self.day_obs.get(&(day, edge)) {
                for (ctx, class) in obs {
                    if key.conditioning.key(ctx) == key {
                        c[class.index()] = c[class.index()].saturating_sub(1);
                    }
                }
            }
        }
        c
    }

    /// Global class fractions with `exclude_day` removed. Uniform when no
    /// labels remain.
    pub fn global_means(&self, exclude_day: Option<NaiveDate>) -> [f64; NUM_CLASSES] {
        let mut g = self.global;
        if let Some(day) = exclude_day.and_then(|d| self.day_global.get(&d)) {
            for (a, b) in g.iter_mut().zip(day) {
                *a = a.saturating_sub(*b);
            }
        }
        let n: u64 = g.iter().sum();
        if n == 0 {
            return [1.0 / NUM_CLASSES as f64; NUM_CLASSES];
        }
        g.map(|c| c as f64 / n as f64)
    }

    /// Smoothed encodings of all classes for `key`, indexed by class. With
    /// `exclude_day`, every observation from that date is ignored, exactly
    /// as if the table had been fitted without it.
    pub fn lookup(&self, edge: EdgeId, key: CategoryKey, exclude_day: Option<NaiveDate>) -> [f64; NUM_CLASSES] {
        let c = self.key_counts(edge, key, exclude_day);
        let means = self.global_means(exclude_day);
        let n: u64 = c.iter().sum();
        let w = self.pseudocount;
        let mut out = [0.0; NUM_CLASSES];
        for k in 0..NUM_CLASSES {
            out[k] = (c[k] as f64 + w * means[k]) / (n as f64 + w);
        }
        out
    }

    pub(crate) fn encode(&self, enc: &mut Encoder) {
        enc.put_f64(self.pseudocount);
        let put_counts = |enc: &mut Encoder, c: &Counts| c.iter().for_each(|v| enc.put_u64(*v));
        put_counts(enc, &self.global);
        enc.put_len(self.day_global.len());
        for (d, c) in &self.day_global {
            enc.put_i32(d.num_days_from_ce());
            put_counts(enc, c);
        }
        let mut keys: Vec<_> = self.counts.iter().collect();
        keys.sort_unstable_by_key(|(k, _)| **k);
        enc.put_len(keys.len());
        for ((edge, key), c) in keys {
            enc.put_u64(edge.0);
            let (a, b) = key.parts();
            enc.put_u8(key.conditioning.tag());
            enc.put_u16(a);
            enc.put_u16(b);
            put_counts(enc, c);
        }
        let mut days: Vec<_> = self.day_obs.iter().collect();
        days.sort_unstable_by_key(|(k, _)| **k);
        enc.put_len(days.len());
        for ((d, edge), obs) in days {
            enc.put_i32(d.num_days_from_ce());
            enc.put_u64(edge.0);
            enc.put_len(obs.len());
            for (ctx, class) in obs {
                enc.put_u8(ctx.month());
                enc.put_u8(ctx.day_of_week());
                enc.put_u16(ctx.slot());
                enc.put_u8(class.index() as u8);
            }
        }
    }

    pub(crate) fn decode(dec: &mut Decoder<'_>) -> Result<Self> {
        let pseudocount = dec.get_f64()?;
        let get_counts = |dec: &mut Decoder<'_>| -> Result<Counts> {
            Ok([dec.get_u64()?, dec.get_u64()?, dec.get_u64()?])
        };
        let global = get_counts(dec)?;
        let mut day_global = BTreeMap::new();
        for _ in 0..dec.get_len(28)? {
            let d = get_date(dec)?;
            day_global.insert(d, get_counts(dec)?);
        }
        let n_keys = dec.get_len(37)?;
        let mut counts = HashMap::with_capacity(n_keys);
        for _ in 0..n_keys {
            let edge = EdgeId(dec.get_u64()?);
            let cond = Conditioning::from_tag(dec.get_u8()?)
                .ok_or_else(|| Error::Malformed("unknown conditioning tag".into()))?;
            let a = dec.get_u16()?;
            let b = dec.get_u16()?;
            counts.insert((edge, CategoryKey::from_parts(cond, a, b)), get_counts(dec)?);
        }
        let n_days = dec.get_len(20)?;
        let mut day_obs = HashMap::with_capacity(n_days);
        for _ in 0..n_days {
            let d = get_date(dec)?;
            let edge = EdgeId(dec.get_u64()?);
            let n = dec.get_len(5)?;
            let mut obs = Vec::with_capacity(n);
            for _ in 0..n {
                let ctx = TimeContext::new(dec.get_u8()?, dec.get_u8()?, dec.get_u16()?)
                    .map_err(|e| Error::Malformed(e.to_string()))?;
                let class = CongestionClass::from_index(dec.get_u8()? as usize)
                    .ok_or_else(|| Error::Malformed("unknown congestion class".into()))?;
                obs.push((ctx, class));
            }
            day_obs.insert((d, edge), obs);
        }
        Ok(Self {
            pseudocount,
            global,
            day_global,
            counts,
            day_obs,
        })
    }
}

pub(crate) fn get_date(dec: &mut Decoder<'_>) -> Result<NaiveDate> {
    let days = dec.get_i32()?;
    NaiveDate::from_num_days_from_ce_opt(days)
        .ok_or_else(|| Error::Malformed(format!("day number {days} is not a date")))
}
