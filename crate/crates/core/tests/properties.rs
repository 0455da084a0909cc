use chrono::{TimeZone, Utc};
use proptest::prelude::*;

use ringforge_core::assemble::{assemble_id, dependency_graph, link, EdgeKind, FlatKind};
use ringforge_core::codegen::{layout, placements, render_r1c1, CellContent, GenerationInfo, FIRST_PERIOD_COL, SINGLE_COL};
use ringforge_core::eval::{evaluate, evaluate_model, Value};
use ringforge_core::expr::{parse, print_canonical, ArithOp, Builtin, CmpOp, Decimal, Expr, Func, RowRef};
use ringforge_core::model::{validate_element, DataInput, Element, Row, RowKind, Structure, WidthClass};
use ringforge_core::store::Repository;
use ringforge_core::testkit::{random_expr, random_model, rng, OracleValue, Shape};
use ringforge_core::Severity;

// ---- expression round trip

fn arb_decimal() -> impl Strategy<Value = Decimal> {
    (0u32..100_000, prop::option::of(1u32..1000)).prop_map(|(i, f)| {
        let text = match f {
            Some(f) => format!("{i}.{f}"),
            None => i.to_string(),
        };
        Decimal::parse(&text).unwrap()
    })
}

fn arb_ref() -> impl Strategy<Value = Expr> {
    (prop::collection::vec("[a-zA-Z][a-zA-Z0-9_]{0,5}", 1..4), 0i32..5)
        .prop_map(|(path, k)| Expr::Ref(RowRef { path, offset: -k }))
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        arb_decimal().prop_map(Expr::Number),
        any::<bool>().prop_map(Expr::Bool),
        Just(Expr::Builtin(Builtin::Period)),
        Just(Expr::Builtin(Builtin::NPeriods)),
        arb_ref(),
    ];
    let arith = prop::sample::select(vec![ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div]);
    let cmp = prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]);
    leaf.prop_recursive(5, 48, 4, move |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (arith.clone(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (cmp.clone(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::compare(op, l, r)),
            (prop::sample::select(Func::ALL.to_vec()), prop::collection::vec(inner, 1..4)).prop_map(|(func, mut args)| {
                let (lo, hi) = func.arity();
                while args.len() < lo {
                    args.push(args[0].clone());
                }
                if let Some(hi) = hi {
                    args.truncate(hi);
                }
                Expr::Call { func, args }
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn parse_print_is_identity(e in arb_expr()) {
        let text = print_canonical(&e);
        let back = parse(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(&back, &e, "{}", text);
        prop_assert_eq!(print_canonical(&back), text);
    }
}

#[test]
fn seeded_expressions_round_trip() {
    let mut r = rng(11);
    for _ in 0..10_000 {
        let e = random_expr(&mut r, 5);
        let text = print_canonical(&e);
        assert_eq!(parse(&text).unwrap(), e, "{text}");
    }
}

// ---- brute-force oracle

/// Absolute difference, or None when the two disagree on being an error.
fn diff(expected: &OracleValue, got: &Value) -> Option<f64> {
    match (expected, got) {
        (Ok(x), Value::Number(y)) => Some((x - y).abs()),
        (Err(x), Value::Error(y)) if x == y => Some(0.0),
        _ => None,
    }
}

fn small_shape(r: &mut rand::rngs::StdRng) -> Shape {
    use rand::RngExt;
    Shape { formula_rows: r.random_range(1..=3), n_periods: r.random_range(1..=4), max_depth: 3, mixed_widths: true }
}

#[test]
fn single_pass_matches_fixed_point() {
    let mut r = rng(2024);
    let info = GenerationInfo::at(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap());
    let mut errors_seen = 0;
    for case in 0..600 {
        let shape = small_shape(&mut r);
        let m = random_model(&mut r, &shape);
        assert!(m.rows.len() <= 5 && m.n_periods <= 4);
        let truth = m.brute_force();
        let a = assemble_id(&m.model, &m.repo).unwrap();
        let direct = evaluate_model(&a, "Base").unwrap();
        let ir = layout(&a, &info);
        let grid = evaluate(&ir, "Base").unwrap();
        let placed = placements(&a);
        for (i, row) in m.rows.iter().enumerate() {
            let fi = a.row_index(&m.path(i)).unwrap();
            let p = placed[fi].as_ref().unwrap();
            let periods: Vec<u32> = if row.width == WidthClass::SingleColumn { vec![0] } else { (1..=m.n_periods).collect() };
            for period in periods {
                let col = if period == 0 { SINGLE_COL } else { FIRST_PERIOD_COL + period - 1 };
                let from_grid = grid.get(&p.sheet, p.row, col);
                let from_model = direct.get(fi, period.max(1));
                if period > 0 && !m.active(i, period) {
                    assert_eq!(from_grid, Value::Blank, "case {case} {} p{period}", row.label);
                    assert_eq!(from_model, Value::Blank, "case {case} {} p{period}", row.label);
                    continue;
                }
                let want = truth[i][period.saturating_sub(1) as usize];
                if want.is_err() {
                    errors_seen += 1;
                }
                let ctx = || format!("case {case} {} p{period}: want {want:?}\n{:#?}", row.label, m.rows);
                assert_eq!(diff(&want, &from_grid), Some(0.0), "grid {from_grid:?} {}", ctx());
                assert_eq!(diff(&want, &from_model), Some(0.0), "model {from_model:?} {}", ctx());
            }
        }
    }
    assert!(errors_seen > 0, "generator never produced an error value");
}

#[test]
fn evaluation_order_respects_same_period_edges() {
    let mut r = rng(99);
    for _ in 0..300 {
        let m = random_model(&mut r, &Shape { formula_rows: 6, ..Shape::default() });
        let a = assemble_id(&m.model, &m.repo).unwrap();
        let g = dependency_graph("gen", &a.rows).unwrap();
        let mut order = g.order.clone();
        order.sort_unstable();
        assert_eq!(order, g.nodes);
        let pos = |i: usize| g.order.iter().position(|&x| x == i).unwrap();
        for e in &g.edges {
            if e.kind == EdgeKind::SamePeriod {
                assert!(pos(e.from) < pos(e.to), "{e:?}");
            }
        }
        // Brute force: every same-period reference, read off the formulas, is an edge.
        for (to, row) in a.rows.iter().enumerate() {
            if let FlatKind::Formula { expr, .. } = &row.kind {
                for rf in expr.root.refs() {
                    let kind = if rf.offset == 0 { EdgeKind::SamePeriod } else { EdgeKind::PriorPeriod };
                    assert!(g.edges.iter().any(|e| e.from == rf.target && e.to == to && e.kind == kind));
                }
            }
        }
    }
}

// ---- left-to-right consistency

#[test]
fn full_width_rows_share_one_r1c1_formula() {
    let mut r = rng(5);
    let info = GenerationInfo::at(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap());
    let mut rows_checked = 0;
    for _ in 0..150 {
        let shape = Shape { formula_rows: 6, n_periods: 6, max_depth: 3, mixed_widths: true };
        let m = random_model(&mut r, &shape);
        let a = assemble_id(&m.model, &m.repo).unwrap();
        let ir = layout(&a, &info);
        let placed = placements(&a);
        for (fi, row) in a.rows.iter().enumerate() {
            if row.width != WidthClass::FullWidth || !row.carries_value() {
                continue;
            }
            let p = placed[fi].as_ref().unwrap();
            let sheet = ir.sheet(&p.sheet).unwrap();
            let forms: Vec<String> = (0..m.n_periods)
                .map(|k| {
                    let col = FIRST_PERIOD_COL + k;
                    match &sheet.get(p.row, col).unwrap().content {
                        CellContent::Formula(e) => render_r1c1(e, p.row, col),
                        other => panic!("{other:?}"),
                    }
                })
                .collect();
            assert!(forms.windows(2).all(|w| w[0] == w[1]), "{}: {forms:?}", row.path);
            rows_checked += 1;
        }
    }
    assert!(rows_checked > 500);
}

// ---- once and once only

fn error_codes(e: &Element) -> Vec<&'static str> {
    validate_element(e).into_iter().filter(|d| d.severity == Severity::Error).map(|d| d.code.as_str()).collect()
}

/// Replaces every reference to `label` with the constant 1.
fn without_refs(e: &Expr, label: &str) -> Expr {
    match e {
        Expr::Ref(r) if r.path == [label] => Expr::Number(Decimal::from_u64(1)),
        Expr::Neg(x) => Expr::Neg(Box::new(without_refs(x, label))),
        Expr::Binary { op, lhs, rhs } => Expr::binary(*op, without_refs(lhs, label), without_refs(rhs, label)),
        Expr::Compare { op, lhs, rhs } => Expr::compare(*op, without_refs(lhs, label), without_refs(rhs, label)),
        Expr::Call { func, args } => Expr::Call { func: *func, args: args.iter().map(|a| without_refs(a, label)).collect() },
        other => other.clone(),
    }
}

#[test]
fn landing_row_mutations() {
    let mut r = rng(8);
    for _ in 0..100 {
        let m = random_model(&mut r, &Shape::default());
        let a = assemble_id(&m.model, &m.repo).unwrap();
        let comp_id = a.instances[0].component.clone();
        let comp = m.repo.element(&comp_id).unwrap().as_component().unwrap().clone();
        assert!(error_codes(&Element::Component(comp.clone())).is_empty());

        let mut removed = comp.clone();
        removed.rows.retain(|row| row.label != "X");
        for row in &mut removed.rows {
            if let RowKind::Formula { expr } = &mut row.kind {
                *expr = without_refs(expr, "X");
            }
        }
        assert_eq!(error_codes(&Element::Component(removed)), vec!["E_PORT_NOT_LANDED"]);

        let mut duplicated = comp.clone();
        duplicated.rows.push(Row { label: "X2".into(), kind: RowKind::Input { port: "x".into() }, unit: None });
        assert_eq!(error_codes(&Element::Component(duplicated)), vec!["E_DUPLICATE_LANDING"]);

        let skeleton = m.repo.element(&a.skeleton_id).unwrap().as_skeleton().unwrap().clone();
        let mut unwired = skeleton.clone();
        unwired.data_inputs.push(DataInput { name: "spare".into(), structure: Structure::Series });
        let errs = link(&unwired, &m.repo).unwrap_err();
        let codes: Vec<&str> = errs.iter().map(|d| d.code.as_str()).collect();
        assert_eq!(codes, vec!["E_INPUT_UNUSED"]);
    }
}
