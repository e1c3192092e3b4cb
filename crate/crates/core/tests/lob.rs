use std::io::{Read, Write};

use gchp::lob::*;
use gchp::Error;
use proptest::prelude::*;

fn upd(t: f64, bid: f64, ask: f64) -> LobUpdate {
    LobUpdate {
        timestamp: t,
        bids: vec![Level { price: bid, size: 1.0 }],
        asks: vec![Level { price: ask, size: 1.0 }],
    }
}

fn parse_str(text: &str, format: &FormatSpec) -> (Vec<LobUpdate>, ParseReport) {
    let mut reader = parse_lob_reader(text.as_bytes(), None, format).unwrap();
    let updates: Vec<LobUpdate> = reader.by_ref().collect();
    (updates, reader.into_report())
}

const TWO_LEVEL_FIXTURE: &str = "\
timestamp,bp1,bs1,ap1,as1,bp2,bs2,ap2,as2
0.5,10.00,5,10.01,7,9.99,3,10.02,4
1.25,10.00,6,10.02,2,9.98,1,10.03,9
3.0,10.01,4,10.02,8,10.00,2,10.03,5
";

#[test]
fn empty_file_is_an_empty_stream() {
    let (updates, report) = parse_str("", &FormatSpec::levels(2));
    assert!(updates.is_empty());
    assert_eq!((report.rows, report.rejected), (0, 0));
}

#[test]
fn three_row_fixture_matches_hand_read_values() {
    let (updates, report) = parse_str(TWO_LEVEL_FIXTURE, &FormatSpec::levels(2));
    assert_eq!(updates.len(), 3);
    assert_eq!(report.rejected, 0);
    let u = &updates[1];
    assert_eq!(u.timestamp, 1.25);
    assert_eq!(u.bids, vec![Level { price: 10.00, size: 6.0 }, Level { price: 9.98, size: 1.0 }]);
    assert_eq!(u.asks, vec![Level { price: 10.02, size: 2.0 }, Level { price: 10.03, size: 9.0 }]);
    assert_eq!(updates[2].best_bid(), 10.01);
}

#[test]
fn crossed_and_malformed_rows_are_counted_not_fatal() {
    let text = "\
t,bp,bs,ap,as
0,10.00,1,10.01,1
1,10.02,1,10.01,1
2,10.01,1,10.01,1
3,abc,1,10.02,1
4,10.00,1
5,10.00,1,10.02,1
";
    let (updates, report) = parse_str(text, &FormatSpec::levels(1));
    assert_eq!(updates.len(), 2);
    assert_eq!((report.rows, report.accepted, report.rejected), (6, 2, 4));
    assert!(report.reasons[0].1.contains("crossed"));
    assert!(matches!(report.check_ratio(0.01), Err(Error::RejectRatioExceeded { rejected: 4, total: 6, .. })));
    assert!(report.check_ratio(0.7).is_ok());
}

#[test]
fn reject_ratio_cap_is_inclusive() {
    // 2 bad rows in 100: 2% breaches a 1% cap but not a 2% cap
    let mut text = String::from("t,bp,bs,ap,as\n");
    for i in 0..100 {
        let ask = if i % 50 == 7 { "9.99" } else { "10.01" };
        text.push_str(&format!("{i},10.00,1,{ask},1\n"));
    }
    let (_, report) = parse_str(&text, &FormatSpec::levels(1));
    assert_eq!(report.rejected, 2);
    assert!(report.check_ratio(0.01).is_err());
    assert!(report.check_ratio(0.02).is_ok());
}

/// An endless levels file generated on the fly.
struct EndlessBook {
    row: u64,
    pending: Vec<u8>,
    pos: usize,
}

impl Read for EndlessBook {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        if self.pos == self.pending.len() {
            let bid = 100.0 + (self.row % 7) as f64 * 0.01;
            self.pending = format!("{},{bid:.2},1,{:.2},1\n", self.row, bid + 0.01).into_bytes();
            self.pos = 0;
            self.row += 1;
        }
        let n = buf.len().min(self.pending.len() - self.pos);
        buf[..n].copy_from_slice(&self.pending[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

#[test]
fn parsing_streams_without_reading_ahead() {
    let mut format = FormatSpec::levels(1);
    format.has_header = false;
    let source = EndlessBook {
        row: 0,
        pending: Vec::new(),
        pos: 0,
    };
    // an eager parser would never return from an infinite source
    let reader = parse_lob_reader(source, None, &format).unwrap();
    let first: Vec<LobUpdate> = reader.take(200_000).collect();
    assert_eq!(first.len(), 200_000);
    assert_eq!(first[199_999].timestamp, 199_999.0);
}

#[test]
fn lobster_like_pairs_message_and_book_rows() {
    let dir = tempfile::tempdir().unwrap();
    let book = dir.path().join("XYZ_orderbook_1.csv");
    let msgs = dir.path().join("XYZ_message_1.csv");
    // ask, ask size, bid, bid size; prices in 1e-4 units
    std::fs::write(&book, "1000100,5,1000000,3\n1000100,5,1000050,3\n1000200,5,1000050,3\n").unwrap();
    std::fs::write(&msgs, "34200.5,1,1,5,1000000,1\n34201.0,1,2,3,1000050,1\n34202.0,4,3,5,1000100,-1\n").unwrap();
    let reader = parse_lob_file(&book, &FormatSpec::lobster_like(1)).unwrap();
    let updates: Vec<LobUpdate> = reader.collect();
    assert_eq!(updates.len(), 3);
    assert_eq!(updates[1].timestamp, 34201.0);
    assert!((updates[1].best_bid() - 100.005).abs() < 1e-12);
    assert!((updates[2].best_ask() - 100.02).abs() < 1e-12);
}

#[test]
fn missing_file_names_the_path() {
    let err = parse_lob_file(std::path::Path::new("/nonexistent/book.csv"), &FormatSpec::levels_10())
        .err()
        .unwrap();
    assert!(err.to_string().contains("/nonexistent/book.csv"), "{err}");
}

#[test]
fn mid_extraction_examples() {
    let constant: Vec<_> = (0..100).map(|i| upd(i as f64, 10.0, 10.02)).collect();
    let (mid, moves) = extract_mid_events(constant, 0.01, "s").unwrap();
    assert_eq!((mid.len(), moves.len()), (1, 0));

    let (_, moves) = extract_mid_events(vec![upd(0.0, 10.00, 10.02), upd(1.0, 10.01, 10.02)], 0.01, "s").unwrap();
    assert_eq!(moves.len(), 1);
    assert!((moves.deltas()[0] - 0.005).abs() < 1e-12);

    // mids 10.01, 10.01, 10.015, 10.015, 10.005, 10.005
    let six = vec![
        upd(0.0, 10.00, 10.02),
        upd(1.0, 10.00, 10.02),
        upd(2.0, 10.01, 10.02),
        upd(3.0, 10.01, 10.02),
        upd(4.0, 10.00, 10.01),
        upd(5.0, 9.99, 10.02),
    ];
    let (mid, moves) = extract_mid_events(six, 0.01, "s").unwrap();
    assert_eq!(mid.times(), &[0.0, 2.0, 4.0]);
    assert_eq!(moves.half_ticks(), vec![1, -2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compression_is_idempotent_and_deltas_telescope(steps in prop::collection::vec(-3i64..=3, 1..200)) {
        let mut units = 2000i64;
        let updates: Vec<LobUpdate> = steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                units += s;
                let bid = (units - 1) as f64 * 0.005;
                upd(i as f64, bid, bid + 0.01)
            })
            .collect();
        let (mid, moves) = extract_mid_events(updates, 0.01, "s").unwrap();
        let mids = mid.mids();
        let again: Vec<LobUpdate> = mid
            .times()
            .iter()
            .zip(&mids)
            .map(|(&t, &m)| upd(t, m - 0.005, m + 0.005))
            .collect();
        let (mid2, _) = extract_mid_events(again, 0.01, "s").unwrap();
        prop_assert_eq!(mid2.times(), mid.times());
        prop_assert_eq!(mid2.half_tick_units(), mid.half_tick_units());
        let total: i64 = moves.half_ticks().iter().sum();
        let units = mid.half_tick_units();
        prop_assert_eq!(total, units[units.len() - 1] - units[0]);
    }
}

fn multi_day(days: i64, per_day: usize, cal: &SessionCalendar) -> MidSeries {
    let mut times = Vec::new();
    let mut units = Vec::new();
    let mut u = 2000i64;
    for d in 0..days {
        for k in 0..per_day {
            times.push(d as f64 * 86_400.0 + cal.open + 10.0 * k as f64);
            // a two-tick overnight jump at every day's first point
            u += if k == 0 && d > 0 { 4 } else if k % 2 == 0 { 1 } else { -2 };
            units.push(u);
        }
    }
    MidSeries::from_units("all", days as f64 * 86_400.0, 0.01, times, units).unwrap()
}

#[test]
fn session_splitting_examples() {
    let cal = SessionCalendar::new(34_200.0, 57_600.0).unwrap();

    let one = multi_day(1, 50, &cal);
    let split = split_sessions(&one, &cal).unwrap();
    assert_eq!(split.len(), 1);
    assert_eq!(split[0].half_tick_units(), one.half_tick_units());

    let five = multi_day(5, 40, &cal);
    let split = split_sessions(&five, &cal).unwrap();
    assert_eq!(split.len(), 5);
    let points: usize = split.iter().map(|s| s.len()).sum();
    assert_eq!(points, five.len());
    // per-day events exclude the overnight move opening each day
    let events: usize = split.iter().map(|s| s.events().len()).sum();
    assert_eq!(events, five.len() - 5);
    for s in &split {
        assert!(s.moves().half_ticks().iter().all(|&d| d != 4));
        assert!(s.times().iter().all(|&t| (0.0..=cal.session_length()).contains(&t)));
    }
}

#[test]
fn updates_outside_trading_hours_are_dropped() {
    let cal = SessionCalendar::new(36_000.0, 39_600.0).unwrap();
    let updates = vec![
        upd(35_000.0, 10.00, 10.02),
        upd(36_000.0, 10.00, 10.02),
        upd(36_500.0, 10.01, 10.02),
        upd(40_000.0, 10.05, 10.07),
        upd(86_400.0 + 36_100.0, 10.03, 10.04),
        upd(86_400.0 + 36_200.0, 10.03, 10.05),
    ];
    let sessions = sessions_from_updates(updates, 0.01, &cal).unwrap();
    assert_eq!(sessions.len(), 2);
    assert_eq!(sessions[0].times(), &[0.0, 500.0]);
    assert_eq!(sessions[1].times(), &[100.0, 200.0]);
    assert_eq!(sessions[1].session(), "d00001");
}

#[test]
fn canonical_event_file_round_trips() {
    let m = MidSeries::new("d00003", 600.0, 0.01, vec![0.0, 1.5, 2.25, 599.0], &[100.0, 100.005, 99.995, 100.02]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    write_event_file(&mut f, &m, &Provenance { config_hash: "abc".into(), seed: 7 }).unwrap();
    f.flush().unwrap();
    let back = read_event_file(&path).unwrap();
    assert_eq!(back, m);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# config_hash=abc") && text.contains("# seed=7"));
}

#[test]
fn malformed_event_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "# tick=0.01\ntimestamp,mid\n0,100\n1,oops\n").unwrap();
    let err = read_event_file(&path).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("bad.csv"));
}
