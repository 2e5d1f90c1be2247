//! Fisher information density statistics of the four baseline patterns.
//!
//! cargo run --release --example table1

use irs_crb::experiment::{table1, TABLE1_GRID_POINTS, TABLE1_TOLERANCE_DB};

fn main() -> irs_crb::Result<()> {
    let report = table1(TABLE1_GRID_POINTS)?;
    print!("{}", report.render());
    for row in &report.rows {
        println!("{:<14} worst cell off by {:.3} dB", row.pattern, row.max_deviation());
    }
    println!("within {TABLE1_TOLERANCE_DB} dB: {}", report.within(TABLE1_TOLERANCE_DB));
    Ok(())
}
