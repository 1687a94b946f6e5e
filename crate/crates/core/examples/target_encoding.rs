// Smoothed congestion-class frequencies per edge and calendar key, with
// one day left out the way training rows see them.

use chrono::NaiveDate;
use twostage::data_model::{CongestionClass, CongestionLabel, EdgeId, TimeContext};
use twostage::encoding::{fit_cc_encoding, CcObservation, Conditioning, DEFAULT_PSEUDOCOUNT};

pub fn run_example() -> twostage::Result<()> {
    let edge = EdgeId(1);
    let start = NaiveDate::from_ymd_opt(2022, 1, 3).expect("valid date");
    let mut observations = Vec::new();
    for day in 0..14u64 {
        let date = start + chrono::Days::new(day);
        for slot in [32u16, 33, 70] {
            let class = match (slot, day % 7 >= 5) {
                (_, true) => CongestionClass::Green,
                (70, _) => CongestionClass::Red,
                _ => CongestionClass::Yellow,
            };
            observations.push(CcObservation {
                date,
                context: TimeContext::from_date(date, slot)?,
                label: CongestionLabel {
                    edge,
                    class: Some(class),
                },
            });
        }
    }
    let table = fit_cc_encoding(&observations, DEFAULT_PSEUDOCOUNT)?;

    let monday_evening = TimeContext::from_date(start, 70)?;
    for cond in [Conditioning::Unconditional, Conditioning::Slot, Conditioning::SlotWeekend] {
        let key = cond.key(&monday_evening);
        let all = table.lookup(edge, key, None);
        let held_out = table.lookup(edge, key, Some(start));
        println!(
            "{:<14} red {:.3} (without the day: {:.3})",
            format!("{cond:?}"),
            all[0],
            held_out[0]
        );
    }
    Ok(())
}

fn main() -> twostage::Result<()> {
    run_example()
}
