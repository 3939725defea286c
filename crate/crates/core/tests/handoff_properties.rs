mod common;

use mecsim::handoff::{comp_ho_decide, CellMeasurement, HandoffParams, MeasurementReport};
use mecsim::mec::LoadReport;
use mecsim::sim::{run_once, RunOptions};
use mecsim::Algorithm;
use proptest::prelude::*;

use common::traces::{decisions, recorded as recorded_trace, Step};

fn report_strategy() -> impl Strategy<Value = Step> {
    (2usize..10)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(-19.5f64..-3.0, n),
                proptest::collection::vec(0.0f64..2.0, n),
                0..n,
            )
        })
        .prop_map(|(rsrq, queue, serving)| {
            let samples = rsrq
                .iter()
                .enumerate()
                .map(|(i, &q)| CellMeasurement {
                    sector: i,
                    rsrq_db: q,
                    rsrp_dbm: -90.0 + q,
                })
                .collect();
            let loads = queue
                .iter()
                .enumerate()
                .map(|(i, &q)| {
                    Some(LoadReport {
                        mec: i,
                        queue_metric: q,
                        app_metadata: Vec::new(),
                        timestamp: 0.0,
                    })
                })
                .collect();
            (MeasurementReport::new(0, serving, samples, 1.0).unwrap(), loads)
        })
}

/// Lowest id among the maxima of `key`.
fn argmax_by(report: &MeasurementReport, key: impl Fn(&CellMeasurement) -> f64) -> usize {
    let mut best = &report.samples[0];
    for s in &report.samples[1..] {
        if key(s) > key(best) {
            best = s;
        }
    }
    best.sector
}

fn open_gate(delta: f64, w_s: f64, w_q: f64) -> HandoffParams {
    HandoffParams {
        theta: 34,
        delta,
        w_s,
        w_q,
        ..HandoffParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn zero_queue_weight_picks_strongest_rsrq((report, loads) in report_strategy()) {
        let e = comp_ho_decide(&report, &loads, &open_gate(0.0, 1.0, 0.0));
        let best = argmax_by(&report, |s| s.rsrq_db);
        let expected = (best != report.serving
            && report.samples[best].rsrq_db > report.serving_sample().rsrq_db)
            .then_some(best);
        prop_assert_eq!(e.decision.map(|d| d.target), expected);
    }

    #[test]
    fn zero_signal_weight_picks_least_loaded((report, loads) in report_strategy()) {
        let e = comp_ho_decide(&report, &loads, &open_gate(0.0, 0.0, 1.0));
        let q = |s: &CellMeasurement| loads[s.sector].as_ref().unwrap().queue_metric;
        let best = argmax_by(&report, |s| -q(s));
        let expected = (best != report.serving && q(&report.samples[best]) < q(report.serving_sample()))
            .then_some(best);
        prop_assert_eq!(e.decision.map(|d| d.target), expected);
    }

    #[test]
    fn one_score_per_candidate((report, loads) in report_strategy(), w_q in 0.0f64..200.0) {
        let e = comp_ho_decide(&report, &loads, &open_gate(0.5, 1.0, w_q));
        prop_assert_eq!(e.evaluated, report.samples.len());
        prop_assert!(e.skipped.is_empty());
    }

    #[test]
    fn larger_offset_never_adds_handoffs(
        trace in proptest::collection::vec(report_strategy(), 1..40),
        a in 0.0f64..20.0,
        b in 0.0f64..20.0,
        w_q in 0.0f64..200.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let loose = decisions(&trace, &open_gate(lo, 1.0, w_q));
        let strict = decisions(&trace, &open_gate(hi, 1.0, w_q));
        for (l, s) in loose.iter().zip(&strict) {
            if s.is_some() {
                prop_assert_eq!(l, s);
            }
        }
        let count = |d: &[Option<usize>]| d.iter().filter(|x| x.is_some()).count();
        prop_assert!(count(&strict) <= count(&loose));
    }

    #[test]
    fn recorded_trace_offset_monotone(a in 0.0f64..60.0, b in 0.0f64..60.0, w_q in 0.0f64..150.0) {
        let trace = recorded_trace();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p = |delta| HandoffParams { delta, w_q, ..HandoffParams::default() };
        let count = |d: Vec<Option<usize>>| d.into_iter().filter(Option::is_some).count();
        prop_assert!(count(decisions(trace, &p(hi))) <= count(decisions(trace, &p(lo))));
    }
}

#[test]
fn recorded_trace_is_nontrivial() {
    let trace = recorded_trace();
    assert!(trace.len() > 500);
    let n = decisions(
        trace,
        &HandoffParams {
            delta: 0.0,
            ..HandoffParams::default()
        },
    )
    .into_iter()
    .filter(Option::is_some)
    .count();
    assert!(n > 0);
}

#[test]
fn weaker_but_idle_neighbour_wins() {
    let r = MeasurementReport::new(
        0,
        0,
        vec![
            CellMeasurement {
                sector: 0,
                rsrq_db: -6.0,
                rsrp_dbm: -80.0,
            },
            CellMeasurement {
                sector: 1,
                rsrq_db: -8.0,
                rsrp_dbm: -82.0,
            },
        ],
        0.0,
    )
    .unwrap();
    let load = |mec, q| {
        Some(LoadReport {
            mec,
            queue_metric: q,
            app_metadata: Vec::new(),
            timestamp: 0.0,
        })
    };
    let p = HandoffParams {
        delta: 0.5,
        w_s: 1.0,
        w_q: 100.0,
        ..HandoffParams::default()
    };
    let d = comp_ho_decide(&r, &[load(0, 0.10), load(1, 0.0)], &p)
        .decision
        .unwrap();
    assert_eq!(d.target, 1);
    assert!((d.score_source - -16.0).abs() < 1e-12);
    assert!((d.score_target - -8.0).abs() < 1e-12);
}

#[test]
fn run_scores_exactly_the_offered_candidates() {
    for seed in 1..=3 {
        let s = common::small_scenario(8, 20.0, 2.0);
        let out = run_once(&s, Algorithm::CompHo, seed, RunOptions::default()).unwrap();
        assert!(out.candidates_offered > 0);
        assert_eq!(out.candidates_scored, out.candidates_offered);
    }
}

#[test]
fn noho_never_hands_off() {
    let s = common::small_scenario(8, 20.0, 10.0);
    let out = run_once(&s, Algorithm::NoHo, 3, RunOptions::default()).unwrap();
    assert!(out.handoffs.is_empty());
}
