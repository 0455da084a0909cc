use chrono::{Months, NaiveDate};

use crate::model::GenParams;

/// Start date of each period. Each is stepped from the start date directly,
/// so a month-end start keeps returning to month ends where they exist.
pub fn period_dates(p: &GenParams) -> Vec<NaiveDate> {
    (0..p.n_periods)
        .map(|i| {
            p.start_date
                .checked_add_months(Months::new(i * p.periodicity.months()))
                .expect("period dates stay within the calendar")
        })
        .collect()
}

/// Spreadsheet serial day number (1900 date system, days since 1899-12-30).
pub fn serial(d: NaiveDate) -> f64 {
    let base = NaiveDate::from_ymd_opt(1899, 12, 30).expect("valid");
    (d - base).num_days() as f64
}

pub fn from_serial(v: f64) -> Option<NaiveDate> {
    let base = NaiveDate::from_ymd_opt(1899, 12, 30)?;
    base.checked_add_signed(chrono::Duration::days(v as i64))
}
