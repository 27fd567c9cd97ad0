use std::path::Path;

use chrono::{Duration, NaiveDate};
use proptest::prelude::*;
use qrnn_core::data::*;

fn series(closes: &[f64]) -> PriceSeries {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let entries = closes
        .iter()
        .enumerate()
        .map(|(i, &close)| PricePoint {
            date: start + Duration::days(i as i64),
            close,
        })
        .collect();
    PriceSeries::new("T", entries).unwrap().0
}

fn closes_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0f64..100.0, 12..120)
}

proptest! {
    #[test]
    fn row_and_split_counts(closes in closes_strategy(), depth in 1usize..6) {
        prop_assume!(closes.len() >= depth + 6);
        let set = prepare(&series(&closes), depth).unwrap();
        let rows = closes.len() - depth;
        prop_assert_eq!(set.total_rows(), rows);
        prop_assert_eq!(set.test.len(), rows / 5);
        prop_assert_eq!(set.train.len(), rows - rows / 5);
        prop_assert!(set.train.iter().chain(&set.test).all(|r| r.window.len() == depth));
    }

    #[test]
    fn labels_compare_raw_closes(closes in closes_strategy(), depth in 1usize..6) {
        prop_assume!(closes.len() >= depth + 6);
        let set = prepare(&series(&closes), depth).unwrap();
        for (i, row) in set.train.iter().chain(&set.test).enumerate() {
            let t = depth - 1 + i;
            prop_assert_eq!(row.label, u8::from(closes[t + 1] > closes[t]));
        }
    }

    #[test]
    fn training_rows_ignore_the_future(closes in closes_strategy(), bump in 1.0f64..1000.0, depth in 1usize..5) {
        prop_assume!(closes.len() >= depth + 6);
        let base = prepare(&series(&closes), depth).unwrap();
        // rewriting every price the training windows never see leaves them unchanged
        let seen = base.normalization.fitted_on;
        prop_assert_eq!(seen, depth - 1 + base.train.len());
        let mut changed = closes.clone();
        for c in &mut changed[seen + 1..] {
            *c += bump;
        }
        let other = prepare(&series(&changed), depth).unwrap();
        prop_assert_eq!(&base.train, &other.train);
        prop_assert_eq!(base.normalization, other.normalization);
    }

    #[test]
    fn scaled_values_stay_in_the_unit_interval(closes in closes_strategy()) {
        let set = prepare(&series(&closes), 3).unwrap();
        for row in set.train.iter().chain(&set.test) {
            prop_assert!(row.window.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn row_files_round_trip(closes in closes_strategy()) {
        let set = prepare(&series(&closes), 3).unwrap();
        let mut buf = Vec::new();
        write_rows(&mut buf, &set.test, 3, &["seed: 1".into()]).unwrap();
        let back = read_rows(&buf[..], Path::new("mem")).unwrap();
        prop_assert_eq!(back, set.test);
    }
}

#[test]
fn window_is_most_recent_first() {
    let closes: Vec<f64> = (0..20).map(|i| 10.0 + i as f64).collect();
    let set = prepare(&series(&closes), 3).unwrap();
    let first = &set.train[0];
    assert!(first.window[0] > first.window[1] && first.window[1] > first.window[2]);
    assert_eq!(
        first.chronological(),
        vec![first.window[2], first.window[1], first.window[0]]
    );
    assert_eq!(first.latest(), first.window[0]);
}

#[test]
fn header_and_ordering() {
    let csv = "Open,Date,Close\n1,2020-01-03,3\n1,2020-01-01,1\n1,2020-01-02,null\n1,2020-01-04,4\n";
    let loaded = read_prices(csv.as_bytes(), "X", Path::new("mem.csv")).unwrap();
    assert_eq!(loaded.dropped_rows, 1);
    assert!(loaded.resorted);
    assert_eq!(loaded.series.closes(), vec![1.0, 3.0, 4.0]);
}

#[test]
fn bad_input_reports_line() {
    let csv = "Date,Close\n2020-01-01,1\n2020-01-02,abc\n";
    let err = read_prices(csv.as_bytes(), "X", Path::new("p.csv"))
        .unwrap_err()
        .to_string();
    assert!(err.contains("p.csv") && err.contains('3'), "{err}");
    let err = read_prices("Day,Close\n".as_bytes(), "X", Path::new("p.csv")).unwrap_err();
    assert!(err.to_string().contains("Date"));
}

#[test]
fn constant_series_is_rejected() {
    assert!(prepare(&series(&[5.0; 30]), 3).is_err());
    assert!(prepare(&series(&[1.0, 2.0, 3.0, 4.0]), 3).is_err());
}

#[test]
fn most_recent_keeps_the_tail() {
    let s = series(&(1..11).map(|i| i as f64).collect::<Vec<_>>());
    assert_eq!(s.most_recent(4).closes(), vec![7.0, 8.0, 9.0, 10.0]);
    assert_eq!(s.most_recent(50).len(), 10);
}
