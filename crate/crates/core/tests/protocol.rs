use std::collections::{BTreeMap, HashSet};

use ise_core::protocol::{
    advance_span, build_session_plan, normalize_word, score_instrument, score_rtlx, score_trial,
    stroop_interference, Aggregation, InstrumentDefinition, InstrumentResponse, Item, Load,
    OrderMode, ProtocolError, SessionPlan, Span, SpanState, StroopFilter, Subscale, WordPool,
    BUILTIN_INSTRUMENTS, LISTS_PER_CONDITION,
};
use proptest::prelude::*;

/// Direct reading of the stop rule: list i has length 2 + i/2; stop at the first
/// i where lists i-1 and i are both wrong; span = length of the last correct list.
fn interpret(outcomes: &[bool]) -> (usize, Option<Option<usize>>) {
    for i in 0..outcomes.len() {
        if i >= 1 && !outcomes[i] && !outcomes[i - 1] {
            let span = (0..=i).rev().find(|&j| outcomes[j]).map(|j| 2 + j / 2);
            return (i + 1, Some(span));
        }
    }
    (outcomes.len(), None)
}

#[test]
fn span_machine_matches_interpreter_exhaustively() {
    let mut checked = 0;
    for len in 0..=12usize {
        for bits in 0u32..(1 << len) {
            let outcomes: Vec<bool> = (0..len).map(|i| bits >> i & 1 == 1).collect();
            let (consumed, verdict) = interpret(&outcomes);
            let mut state = SpanState::new();
            for (i, &c) in outcomes.iter().enumerate() {
                if i < consumed {
                    assert_eq!(state.current_length, 2 + i / 2);
                    state = advance_span(&state, c).unwrap();
                } else {
                    assert!(matches!(
                        advance_span(&state, c),
                        Err(ProtocolError::SpanFinished)
                    ));
                }
            }
            match verdict {
                None => {
                    assert!(!state.finished);
                    assert_eq!(state.span, None);
                }
                Some(span) => {
                    assert!(state.finished);
                    let want = span.map_or(Span::NoCorrectList, Span::Length);
                    assert_eq!(state.span, Some(want));
                }
            }
            let replayed = SpanState::replay(outcomes[..consumed].iter().copied()).unwrap();
            assert_eq!(replayed, state);
            checked += 1;
        }
    }
    assert_eq!(checked, (1 << 13) - 1);
}

proptest! {
    #[test]
    fn span_terminates_iff_two_consecutive_errors(outcomes in prop::collection::vec(any::<bool>(), 0..60)) {
        let has_pair = outcomes.windows(2).any(|w| !w[0] && !w[1]);
        let mut state = SpanState::new();
        for &c in &outcomes {
            if state.finished { break; }
            state = advance_span(&state, c).unwrap();
        }
        prop_assert_eq!(state.finished, has_pair);
        prop_assert!(state.current_length >= 2);
    }
}

fn check_plan(plan: &SessionPlan, n: usize) {
    assert_eq!(plan.blocks.len(), 5);
    let ids: HashSet<&str> = plan.condition_order().into_iter().collect();
    assert_eq!(ids.len(), 5);
    assert_eq!(plan.total_lists(), 80);
    for block in &plan.blocks {
        assert_eq!(block.trials.len(), LISTS_PER_CONDITION);
        let high = block.trials.iter().filter(|t| t.load == Load::High).count();
        assert_eq!(high, 8);
        for t in &block.trials {
            let want = if t.load == Load::High { n + 2 } else { n - 1 };
            assert_eq!(t.words.len(), want);
            let distinct: HashSet<String> = t.words.iter().map(|w| normalize_word(w)).collect();
            assert_eq!(distinct.len(), t.words.len());
        }
    }
    assert_eq!(plan.schedule.len(), 6);
}

#[test]
fn plans_hold_invariants_over_1000_seeds() {
    let pool = WordPool::default_pool();
    for seed in 0..1000u64 {
        let n = 2 + (seed % 7) as usize;
        let plan =
            build_session_plan("P", Span::Length(n), &pool, seed, OrderMode::Random).unwrap();
        check_plan(&plan, n);
    }
}

#[test]
fn plan_examples() {
    let pool = WordPool::default_pool();
    let plan = build_session_plan("P1", Span::Length(4), &pool, 7, OrderMode::Random).unwrap();
    for b in &plan.blocks {
        assert_eq!(b.trials.iter().filter(|t| t.words.len() == 6).count(), 8);
        assert_eq!(b.trials.iter().filter(|t| t.words.len() == 3).count(), 8);
    }
    let again = build_session_plan("P1", Span::Length(4), &pool, 7, OrderMode::Random).unwrap();
    assert_eq!(plan, again);
    let json = serde_json::to_string(&plan).unwrap();
    assert_eq!(serde_json::from_str::<SessionPlan>(&json).unwrap(), plan);

    let latin: Vec<Vec<String>> = (0..10)
        .map(|row| {
            build_session_plan(
                "P",
                Span::Length(3),
                &pool,
                1,
                OrderMode::LatinSquare { row },
            )
            .unwrap()
            .condition_order()
            .into_iter()
            .map(String::from)
            .collect()
        })
        .collect();
    // every condition appears in every position twice across the 10 rows
    for pos in 0..5 {
        let mut counts = BTreeMap::new();
        for row in &latin {
            *counts.entry(row[pos].clone()).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c == 2));
    }
}

#[test]
fn plan_errors() {
    let pool = WordPool::default_pool();
    assert!(matches!(
        build_session_plan("P", Span::NoCorrectList, &pool, 1, OrderMode::Random),
        Err(ProtocolError::NoSpan)
    ));
    assert!(matches!(
        build_session_plan("P", Span::Length(1), &pool, 1, OrderMode::Random),
        Err(ProtocolError::SpanTooSmall(1))
    ));
    let tiny = WordPool::parse("a\nb\nc\nd\n").unwrap();
    assert!(matches!(
        build_session_plan("P", Span::Length(3), &tiny, 1, OrderMode::Random),
        Err(ProtocolError::PoolTooSmall {
            needed: 5,
            available: 4
        })
    ));
    assert!(matches!(
        WordPool::parse("été\nETE\n"),
        Err(ProtocolError::DuplicateWord(_))
    ));
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

#[test]
fn trial_scoring_examples() {
    let p = words("pomme chat lune vélo sable");
    assert_eq!(score_trial(&p, &p).score, 1.0);
    assert_eq!(
        score_trial(&p, &words("pomme lune chat vélo sable")).score,
        0.6
    );
    assert_eq!(score_trial(&p, &[]).score, 0.0);
    assert_eq!(
        score_trial(&p, &words("POMME Chat lune velo SÂBLE")).score,
        1.0
    );
    let s = score_trial(&p, &words("pomme chat"));
    assert_eq!(
        s.per_position_correct,
        vec![true, true, false, false, false]
    );
}

proptest! {
    #[test]
    fn permutations_lower_the_score(perm in Just((0..7usize).collect::<Vec<_>>()).prop_shuffle()) {
        let presented = words("arbre bol cadeau dent école fraise gant");
        let recalled: Vec<String> = perm.iter().map(|&i| presented[i].clone()).collect();
        let s = score_trial(&presented, &recalled);
        prop_assert!((0.0..=1.0).contains(&s.score));
        let identity = perm.iter().enumerate().all(|(i, &p)| i == p);
        prop_assert_eq!(identity, s.score == 1.0);
        prop_assert_eq!(s.per_position_correct.len(), presented.len());
    }

    #[test]
    fn mean_scoring_ignores_item_order(values in prop::collection::vec(1.0f64..=5.0, 4), rot in 0usize..4) {
        let keys = ["a", "b", "c", "d"];
        let make = |order: Vec<&str>| InstrumentDefinition {
            id: "x".into(),
            title: "x".into(),
            items: order.iter().map(|k| Item { key: k.to_string(), prompt: String::new(), min: 1.0, max: 5.0 }).collect(),
            subscales: vec![Subscale { name: "s".into(), items: order.iter().map(|k| k.to_string()).collect(), aggregation: Aggregation::Mean, reversed: vec![] }],
        };
        let mut rotated = keys.to_vec();
        rotated.rotate_left(rot);
        let resp = InstrumentResponse {
            instrument: "x".into(),
            values: keys.iter().zip(&values).map(|(k, v)| (k.to_string(), *v)).collect(),
        };
        let a = score_instrument(&make(keys.to_vec()), &resp).unwrap()["s"];
        let b = score_instrument(&make(rotated), &resp).unwrap()["s"];
        prop_assert!((a - b).abs() < 1e-12);
    }
}

fn response(instrument: &str, pairs: &[(&str, f64)]) -> InstrumentResponse {
    InstrumentResponse {
        instrument: instrument.into(),
        values: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

#[test]
fn instrument_examples() {
    let annoyance = InstrumentDefinition::builtin("annoyance").unwrap();
    let s = score_instrument(&annoyance, &response("annoyance", &[("disturbed", 7.0)])).unwrap();
    assert_eq!(s["annoyance"], 7.0);

    let def = InstrumentDefinition {
        id: "t".into(),
        title: "t".into(),
        items: ["a", "b"]
            .iter()
            .map(|k| Item {
                key: k.to_string(),
                prompt: String::new(),
                min: 1.0,
                max: 5.0,
            })
            .collect(),
        subscales: vec![
            Subscale {
                name: "sum".into(),
                items: vec!["a".into(), "b".into()],
                aggregation: Aggregation::Sum,
                reversed: vec![],
            },
            Subscale {
                name: "rev".into(),
                items: vec!["a".into()],
                aggregation: Aggregation::Sum,
                reversed: vec!["a".into()],
            },
        ],
    };
    def.validate().unwrap();
    let s = score_instrument(&def, &response("t", &[("a", 3.0), ("b", 4.0)])).unwrap();
    assert_eq!(s["sum"], 7.0);
    let s = score_instrument(&def, &response("t", &[("a", 2.0), ("b", 4.0)])).unwrap();
    assert_eq!(s["rev"], 4.0);

    assert!(matches!(
        score_instrument(&def, &response("t", &[("a", 2.0)])),
        Err(ProtocolError::MissingItem(_))
    ));
    assert!(matches!(
        score_instrument(&def, &response("t", &[("a", 6.0), ("b", 1.0)])),
        Err(ProtocolError::ScaleViolation { .. })
    ));
    assert!(matches!(
        score_instrument(&def, &response("t", &[("a", 1.0), ("b", 1.0), ("z", 1.0)])),
        Err(ProtocolError::UnknownItem(_))
    ));
    assert!(matches!(
        score_instrument(&def, &response("u", &[("a", 1.0), ("b", 1.0)])),
        Err(ProtocolError::WrongInstrument { .. })
    ));
}

#[test]
fn instrument_definitions_validate() {
    for (id, text) in BUILTIN_INSTRUMENTS {
        let def = InstrumentDefinition::from_json(text).unwrap();
        assert_eq!(def.id, id);
    }
    assert_eq!(
        InstrumentDefinition::builtin("thayer").unwrap().items.len(),
        20
    );
    assert_eq!(
        InstrumentDefinition::builtin("levenson")
            .unwrap()
            .items
            .len(),
        24
    );
    let broken = r#"{"id":"x","title":"x","items":[{"key":"a","prompt":"","min":1,"max":5}],
        "subscales":[{"name":"s","items":["b"],"aggregation":"mean"}]}"#;
    assert!(matches!(
        InstrumentDefinition::from_json(broken),
        Err(ProtocolError::InvalidInstrument(_))
    ));
    assert!(InstrumentDefinition::from_json("{").is_err());
}

#[test]
fn rtlx_examples() {
    let five = |v: [f64; 5]| {
        response(
            "rtlx",
            &[
                ("mental", v[0]),
                ("temporal", v[1]),
                ("performance", v[2]),
                ("effort", v[3]),
                ("frustration", v[4]),
            ],
        )
    };
    assert_eq!(score_rtlx(&five([50.0; 5])).unwrap(), 50.0);
    assert_eq!(
        score_rtlx(&five([0.0, 100.0, 50.0, 50.0, 50.0])).unwrap(),
        50.0
    );
    let four = response("rtlx", &[("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0)]);
    assert!(matches!(
        score_rtlx(&four),
        Err(ProtocolError::WrongItemCount {
            expected: 5,
            found: 4
        })
    ));
    assert!(score_rtlx(&five([0.0, 101.0, 50.0, 50.0, 50.0])).is_err());
    let def = InstrumentDefinition::builtin("rtlx").unwrap();
    let r = five([10.0, 20.0, 30.0, 40.0, 50.0]);
    assert_eq!(
        score_instrument(&def, &r).unwrap()["workload"],
        score_rtlx(&r).unwrap()
    );
}

#[test]
fn stroop_examples() {
    let f = StroopFilter::default();
    assert_eq!(
        stroop_interference(&[500.0, 600.0], &[600.0, 500.0], &f).unwrap(),
        0.0
    );
    assert_eq!(
        stroop_interference(&[500.0, 520.0, 510.0], &[640.0, 700.0, 660.0], &f).unwrap(),
        150.0
    );
    assert!(matches!(
        stroop_interference(&[500.0], &[150.0, 3500.0], &f),
        Err(ProtocolError::EmptyClass("incongruent"))
    ));
}
