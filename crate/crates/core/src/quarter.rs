use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar quarter. The quarter number is validated on construction, so
/// a value outside `1..=4` cannot exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i32, u8)", into = "(i32, u8)")]
pub struct CalendarQuarter {
    year: i32,
    quarter: u8,
}

impl CalendarQuarter {
    pub fn new(year: i32, quarter: i64) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::MalformedQuarter { year, quarter });
        }
        Ok(Self {
            year,
            quarter: quarter as u8,
        })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn quarter(self) -> u8 {
        self.quarter
    }

    /// Quarters elapsed since year 0 Q1.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 4 + i64::from(self.quarter) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(4);
        let quarter = ordinal.rem_euclid(4) + 1;
        Self {
            year: year as i32,
            quarter: quarter as u8,
        }
    }

    pub fn succ(self) -> Self {
        self.offset(1)
    }

    pub fn pred(self) -> Self {
        self.offset(-1)
    }

    pub fn offset(self, quarters: i64) -> Self {
        Self::from_ordinal(self.ordinal() + quarters)
    }

    /// `self - earlier`, in quarters.
    pub fn diff(self, earlier: Self) -> i64 {
        self.ordinal() - earlier.ordinal()
    }
}

impl TryFrom<(i32, u8)> for CalendarQuarter {
    type Error = Error;

    fn try_from((year, quarter): (i32, u8)) -> Result<Self> {
        Self::new(year, i64::from(quarter))
    }
}

impl From<CalendarQuarter> for (i32, u8) {
    fn from(q: CalendarQuarter) -> Self {
        (q.year, q.quarter)
    }
}

impl fmt::Display for CalendarQuarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_quarter_out_of_range() {
        assert!(CalendarQuarter::new(2008, 0).is_err());
        assert!(CalendarQuarter::new(2008, 5).is_err());
        assert!(CalendarQuarter::new(2008, 4).is_ok());
    }

    #[test]
    fn succ_wraps_year() {
        let q = CalendarQuarter::new(2007, 4).unwrap();
        assert_eq!(q.succ(), CalendarQuarter::new(2008, 1).unwrap());
        assert_eq!(q.succ().pred(), q);
    }

    proptest! {
        #[test]
        fn ordinal_round_trips(year in -3000i32..3000, quarter in 1i64..=4, k in -500i64..500) {
            let q = CalendarQuarter::new(year, quarter).unwrap();
            prop_assert_eq!(CalendarQuarter::from_ordinal(q.ordinal()), q);
            prop_assert_eq!(q.offset(k).diff(q), k);
            prop_assert_eq!(q.offset(k) > q, k > 0);
        }
    }
}
