//! Bundled example data.

use crate::model::ContingencyTable;

/// The 7×4 Xlstat demoCA table: age groups by self-rated attribute.
pub const DEMO_CA_COUNTS: [[f64; 4]; 7] = [
    [69.0, 49.0, 48.0, 41.0],
    [148.0, 45.0, 14.0, 22.0],
    [170.0, 65.0, 12.0, 29.0],
    [159.0, 57.0, 12.0, 28.0],
    [122.0, 26.0, 6.0, 18.0],
    [106.0, 21.0, 5.0, 23.0],
    [40.0, 7.0, 1.0, 14.0],
];

pub const DEMO_CA_ROWS: [&str; 7] = ["16-24", "25-34", "35-44", "45-54", "55-64", "65-74", "75+"];
pub const DEMO_CA_COLS: [&str; 4] = ["Bad", "Average", "Good", "VeryGood"];

/// Same content as `fixtures/demoCA.csv`.
pub const DEMO_CA_CSV: &str = include_str!("../fixtures/demoCA.csv");

pub fn demo_ca() -> ContingencyTable {
    let rows: Vec<Vec<f64>> = DEMO_CA_COUNTS.iter().map(|r| r.to_vec()).collect();
    ContingencyTable::from_rows(
        &rows,
        DEMO_CA_ROWS.iter().map(|s| s.to_string()).collect(),
        DEMO_CA_COLS.iter().map(|s| s.to_string()).collect(),
    )
    .expect("demoCA is a valid table")
}
