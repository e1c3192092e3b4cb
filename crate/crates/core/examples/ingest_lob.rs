// Parse a small two-level book file, then reduce it to mid-price change
// events.

use gchp::lob::{extract_mid_events, parse_lob_reader, FormatSpec, LobUpdate};

const BOOK: &str = "\
timestamp,bp1,bs1,ap1,as1,bp2,bs2,ap2,as2
0.0,10.00,5,10.02,7,9.99,3,10.03,4
0.4,10.00,6,10.02,2,9.99,1,10.03,9
1.1,10.01,4,10.02,8,10.00,2,10.03,5
1.7,10.02,4,10.01,8,10.00,2,10.03,5
2.5,10.00,4,10.01,8,9.99,2,10.02,5
3.0,9.99,1,10.01,2,9.98,1,10.02,2
";

pub fn run_example() -> gchp::Result<()> {
    let mut reader = parse_lob_reader(BOOK.as_bytes(), None, &FormatSpec::levels(2))?;
    let updates: Vec<LobUpdate> = reader.by_ref().collect();
    let report = reader.into_report();
    println!("rows {} accepted {} rejected {}", report.rows, report.accepted, report.rejected);
    for (row, reason) in &report.reasons {
        println!("  row {row}: {reason}");
    }
    report.check_ratio(0.5)?;

    let (mid, moves) = extract_mid_events(updates, 0.01, "demo")?;
    for (t, m) in mid.times().iter().zip(mid.mids()) {
        println!("t={t:<4} mid={m:.3}");
    }
    println!("moves in half ticks: {:?}", moves.half_ticks());
    Ok(())
}

fn main() -> gchp::Result<()> {
    run_example()
}
