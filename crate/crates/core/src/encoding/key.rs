use crate::data_model::TimeContext;

/// Which calendar fields a target statistic is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Conditioning {
    Unconditional,
    Slot,
    Weekend,
    Dow,
    SlotWeekend,
    SlotDow,
}

impl Conditioning {
    pub const ALL: [Conditioning; 6] = [
        Conditioning::Unconditional,
        Conditioning::Slot,
        Conditioning::Weekend,
        Conditioning::Dow,
        Conditioning::SlotWeekend,
        Conditioning::SlotDow,
    ];

    /// Feature-name suffix, empty for the unconditional statistic.
    pub fn suffix(self) -> &'static str {
        match self {
            Conditioning::Unconditional => "",
            Conditioning::Slot => "slot",
            Conditioning::Weekend => "weekend",
            Conditioning::Dow => "dow",
            Conditioning::SlotWeekend => "slot_weekend",
            Conditioning::SlotDow => "slot_dow",
        }
    }

    pub fn uses_slot(self) -> bool {
        matches!(
            self,
            Conditioning::Slot | Conditioning::SlotWeekend | Conditioning::SlotDow
        )
    }

    pub fn key(self, context: &TimeContext) -> CategoryKey {
        self.key_at(context, context.slot())
    }

    /// Key for `context` with its slot replaced by `slot`.
    pub fn key_at(self, context: &TimeContext, slot: u16) -> CategoryKey {
        let weekend = context.is_weekend() as u16;
        let dow = context.day_of_week() as u16;
        let (a, b) = match self {
            Conditioning::Unconditional => (0, 0),
            Conditioning::Slot => (slot, 0),
            Conditioning::Weekend => (weekend, 0),
            Conditioning::Dow => (dow, 0),
            Conditioning::SlotWeekend => (slot, weekend),
            Conditioning::SlotDow => (slot, dow),
        };
        CategoryKey {
            conditioning: self,
            a,
            b,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

/// A conditioning set together with concrete category values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CategoryKey {
    pub conditioning: Conditioning,
    a: u16,
    b: u16,
}

impl CategoryKey {
    pub(crate) fn parts(&self) -> (u16, u16) {
        (self.a, self.b)
    }

    pub(crate) fn from_parts(conditioning: Conditioning, a: u16, b: u16) -> Self {
        Self { conditioning, a, b }
    }
}
