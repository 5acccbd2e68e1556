//! Indicator kernels against definitional oracles, boundary identities and
//! suffix behaviour.

mod common;

use common::{indicator_identities, indicator_oracle_gaps, max_gap, random_series};
use proptest::prelude::*;
use retrace::indicators::{
    adx, bollinger, ema, feature_matrix, macd, rsi, sma, williams_r, IndicatorParams, FEATURE_COUNT,
};
use retrace::market_data::{synthetic_series, SynthRegime};

#[test]
fn kernels_match_oracles() {
    for (name, gap) in indicator_oracle_gaps(25, 2000) {
        assert!(gap < 1e-9, "{name}: max gap {gap:e}");
    }
}

#[test]
fn boundary_identities_hold() {
    for (name, ok) in indicator_identities(20, 1500) {
        assert!(ok, "{name}");
    }
}

#[test]
fn macd_histogram_is_exact_difference() {
    let c = random_series(3, 800).closes();
    let m = macd(&c, &IndicatorParams::default()).unwrap();
    for t in 0..c.len() {
        assert_eq!(m.histogram[t], m.macd[t] - m.signal[t]);
    }
}

fn suffix_gap(full: &[Option<f64>], part: &[Option<f64>], k: usize, from: usize) -> f64 {
    (from..part.len())
        .filter_map(|t| Some((full[t + k]? - part[t]?).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn finite_window_kernels_are_shift_equivariant() {
    let s = random_series(11, 1200);
    let p = IndicatorParams::default();
    for k in [1usize, 7, 100, 513] {
        let tail = s.suffix(k);
        let (h, l, c) = (s.highs(), s.lows(), s.closes());
        let (th, tl, tc) = (tail.highs(), tail.lows(), tail.closes());
        for n in [1usize, 5, 36] {
            assert!(suffix_gap(&sma(&c, n), &sma(&tc, n), k, 0) < 1e-12);
            let full = williams_r(&h, &l, &c, n).unwrap();
            let part = williams_r(&th, &tl, &tc, n).unwrap();
            assert!(suffix_gap(&full, &part, k, 0) < 1e-9);
        }
        let (bf, bp) = (bollinger(&c, &p).unwrap(), bollinger(&tc, &p).unwrap());
        assert!(suffix_gap(&bf.upper, &bp.upper, k, 0) < 1e-12);
        assert!(suffix_gap(&bf.lower, &bp.lower, k, 0) < 1e-12);
        // values are defined exactly where a full window exists
        assert_eq!(sma(&tc, 5).iter().position(Option::is_some), Some(4));
    }
}

#[test]
fn recursive_kernels_converge_on_suffixes() {
    // seeded from the first bars, so a suffix starts differently and the
    // difference decays geometrically
    let s = random_series(12, 3000);
    let k = 400;
    let tail = s.suffix(k);
    let (h, l, c) = (s.highs(), s.lows(), s.closes());
    let (th, tl, tc) = (tail.highs(), tail.lows(), tail.closes());
    let late = 1500;
    let wrap = |v: Vec<f64>| v.into_iter().map(Some).collect::<Vec<_>>();
    for n in [5usize, 20] {
        assert!(suffix_gap(&wrap(ema(&c, n)), &wrap(ema(&tc, n)), k, late) < 1e-9);
        assert!(suffix_gap(&rsi(&c, n), &rsi(&tc, n), k, late) < 1e-9);
        let (af, ap) = (adx(&h, &l, &c, n).unwrap(), adx(&th, &tl, &tc, n).unwrap());
        assert!(suffix_gap(&af, &ap, k, late) < 1e-9);
        // early gaps are real, not rounding
        assert!(suffix_gap(&wrap(ema(&c, n)), &wrap(ema(&tc, n)), k, 0) > 1e-9);
    }
    let p = IndicatorParams::default();
    let (mf, mp) = (macd(&c, &p).unwrap(), macd(&tc, &p).unwrap());
    assert!(suffix_gap(&wrap(mf.signal), &wrap(mp.signal), k, late) < 1e-9);
}

#[test]
fn feature_matrix_columns_are_the_kernels() {
    let s = synthetic_series(5, 600, &SynthRegime::default()).unwrap();
    let p = IndicatorParams::default();
    let f = feature_matrix(&s, &p).unwrap();
    assert_eq!(f.columns().len(), FEATURE_COUNT);
    assert_eq!(
        f.columns()[..4],
        ["MACD", "MACD_signal", "MACD_hist", "SMA5"]
    );
    assert_eq!(f.columns()[27], "WR25");
    let (h, l, c) = (s.highs(), s.lows(), s.closes());
    assert_eq!(f.column(3), sma(&c, 5));
    assert_eq!(f.column(9), sma(&c, 36));
    assert_eq!(f.column(10), rsi(&c, 5));
    assert_eq!(f.column(20), adx(&h, &l, &c, 35).unwrap());
    assert_eq!(f.column(22), bollinger(&c, &p).unwrap().middle);
    assert_eq!(f.column(24), williams_r(&h, &l, &c, 5).unwrap());

    let w = f.warmup_len();
    assert_eq!(w, 69); // ADX35 needs 2 * 35 - 1 bars
    assert!(f.defined_row(w - 1).is_none());
    assert!(f.row(w - 1).iter().any(Option::is_none));
    assert!(f.defined_row(w).is_some());
    assert!((w..f.len()).all(|t| f.row(t).iter().all(Option::is_some)));
    assert_eq!(max_gap(&f.column(0), &f.column(0)), 0.0);
}

#[test]
fn feature_csv_leaves_warmup_cells_empty() {
    let s = synthetic_series(6, 120, &SynthRegime::default()).unwrap();
    let f = feature_matrix(&s, &IndicatorParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("features.csv");
    f.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 121);
    assert!(lines[0].starts_with("timestamp,MACD,MACD_signal,MACD_hist,SMA5"));
    assert_eq!(lines[1].split(',').count(), 29);
    assert!(lines[1].contains(",,"));
    assert!(!lines[120].split(',').any(str::is_empty));
}

proptest! {
    #[test]
    fn wr_and_rsi_bounded(steps in prop::collection::vec((-50i32..50, 0u8..20, 0u8..20), 2..200), n in 1usize..30) {
        let mut price = 1.0f64;
        let (mut h, mut l, mut c) = (vec![], vec![], vec![]);
        for (step, up, down) in steps {
            price = (price + step as f64 * 1e-4).max(0.01);
            c.push(price);
            h.push(price + up as f64 * 1e-4);
            l.push(price - down as f64 * 1e-4);
        }
        for v in williams_r(&h, &l, &c, n).unwrap().into_iter().flatten() {
            prop_assert!((-100.0..=0.0).contains(&v));
        }
        for v in rsi(&c, n).into_iter().flatten() {
            prop_assert!((0.0..=100.0).contains(&v));
        }
    }

    #[test]
    fn sma_of_constant_is_constant(x in 0.1f64..10.0, len in 1usize..100, n in 1usize..20) {
        let v = vec![x; len];
        for s in sma(&v, n).into_iter().flatten() {
            prop_assert!((s - x).abs() <= 1e-12 * x);
        }
    }
}
