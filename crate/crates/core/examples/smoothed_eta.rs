// Per-slot mean travel times averaged over a cyclic nine-slot window.

use chrono::NaiveDate;
use twostage::data_model::{EtaLabel, SuperSegmentId, TimeContext, SLOTS_PER_DAY};
use twostage::encoding::{fit_eta_encoding, smoothed_te, smoothing_denominator, Conditioning, EtaObservation};

pub fn run_example() -> twostage::Result<()> {
    println!("window denominator: {}", smoothing_denominator());
    let mut impulse = vec![0.0; SLOTS_PER_DAY];
    impulse[0] = 1.0;
    let response = smoothed_te(&impulse)?;
    println!(
        "impulse at slot 0, read at slots 95 and 0..=5: {:?}",
        [95, 0, 1, 2, 3, 4, 5].map(|s| (response[s] * smoothing_denominator()).round())
    );

    let ss = SuperSegmentId(3);
    let date = NaiveDate::from_ymd_opt(2022, 3, 7).expect("valid date");
    let observations: Vec<EtaObservation> = (0..SLOTS_PER_DAY as u16)
        .map(|slot| {
            Ok(EtaObservation {
                date,
                context: TimeContext::from_date(date, slot)?,
                label: EtaLabel {
                    supersegment: ss,
                    eta: if slot == 40 { 900.0 } else { 300.0 },
                },
            })
        })
        .collect::<twostage::Result<_>>()?;
    let table = fit_eta_encoding(&observations)?;
    for slot in [38u16, 40, 44, 45] {
        let ctx = TimeContext::from_date(date, slot)?;
        let raw = table.lookup(ss, Conditioning::Slot.key(&ctx), None);
        let smooth = table.smoothed_lookup(ss, Conditioning::Slot, &ctx, None);
        println!("slot {slot}: raw {raw:.1} s, smoothed {smooth:.1} s");
    }
    Ok(())
}

fn main() -> twostage::Result<()> {
    run_example()
}
