//! Reading a realization from JSON and writing matrices as CSV.
//!
//! Run with `cargo run --example file_formats`.

use toepricc::build_section;
use toepricc::io::{matrix_from_csv, matrix_to_csv, realization_from_json, realization_to_json};

fn main() -> toepricc::Result<()> {
    let text = include_str!("../data/worked.json");
    let r = realization_from_json(text)?;
    println!("parsed m={} s={} t={}", r.m(), r.s(), r.t());

    let section = build_section(&r, 3);
    let csv = matrix_to_csv(section.data());
    print!("T_3 as CSV:\n{csv}");
    assert_eq!(&matrix_from_csv(&csv)?, section.data());

    println!("round-tripped JSON:\n{}", realization_to_json(&r));
    Ok(())
}
