//! Inputs shared by the benchmarks.

use chrono::{DateTime, TimeZone, Utc};
use ringforge_core::assemble::{assemble_id, AssembledModel};
use ringforge_core::demo;
use ringforge_core::testkit::{random_model, rng, RandomModel, Shape};

pub fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

pub fn demo_model() -> AssembledModel {
    let (repo, ids) = demo::memory_repo();
    assemble_id(&ids.model, &repo).expect("demo assembles")
}

/// A seeded random model with `rows` formula rows over `periods` periods.
pub fn wide_model(rows: usize, periods: u32) -> RandomModel {
    let shape = Shape { formula_rows: rows, n_periods: periods, max_depth: 3, mixed_widths: true };
    random_model(&mut rng(rows as u64 * 1000 + periods as u64), &shape)
}
