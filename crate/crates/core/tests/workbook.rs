use chrono::{DateTime, NaiveDate, Utc};
use ringforge_core::assemble::{assemble_id, AssembledModel, FlatKind};
use ringforge_core::codegen::{
    instantiate_row, layout, render_a1, render_r1c1, CellContent, GenerationInfo, GridContext, Literal, Placement,
    SheetRole, WorkbookIR,
};
use ringforge_core::demo;
use ringforge_core::eval::{evaluate, evaluate_as_is, evaluate_model, run_checks, Value};
use ringforge_core::model::{Element, Row, SpecialRange, WidthClass};
use ringforge_core::store::{MemoryRepo, Repository};

fn epoch() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2024-01-01T00:00:00Z").unwrap().with_timezone(&Utc)
}

fn demo_model() -> (MemoryRepo, AssembledModel, WorkbookIR) {
    let (repo, ids) = demo::memory_repo();
    let a = assemble_id(&ids.model, &repo).unwrap();
    let ir = layout(&a, &GenerationInfo::at(epoch()));
    (repo, a, ir)
}

fn formula(ir: &WorkbookIR, sheet: &str, cell: &str) -> String {
    let col = ringforge_core::codegen::col_number(cell.trim_end_matches(|c: char| c.is_ascii_digit())).unwrap();
    let row: u32 = cell.trim_start_matches(|c: char| c.is_ascii_alphabetic()).parse().unwrap();
    match &ir.sheet(sheet).unwrap().get(row, col).unwrap().content {
        CellContent::Formula(e) => format!("={}", render_a1(e)),
        other => panic!("{sheet}!{cell} is {other:?}"),
    }
}

#[test]
fn sheet_order_and_roles() {
    let (_, _, ir) = demo_model();
    let names: Vec<(&str, SheetRole)> = ir.sheets.iter().map(|s| (s.name.as_str(), s.role)).collect();
    assert_eq!(
        names,
        [
            ("Inputs", SheetRole::Inputs),
            ("Workings", SheetRole::Calculation),
            ("Checks", SheetRole::Checks),
            ("Summary", SheetRole::Report),
            ("Revenue data", SheetRole::ChartData),
            ("Meta", SheetRole::Meta),
        ]
    );
}

#[test]
fn demo_formulas() {
    let (_, _, ir) = demo_model();
    assert_eq!(formula(&ir, "Workings", "C7"), "=C5*C6");
    assert_eq!(formula(&ir, "Workings", "D7"), "=D5*D6");
    assert_eq!(formula(&ir, "Workings", "E7"), "=E5*E6");
    assert_eq!(formula(&ir, "Workings", "C9"), "=C7");
    assert_eq!(formula(&ir, "Workings", "C10"), "=0");
    assert_eq!(formula(&ir, "Workings", "D10"), "=C11");
    assert_eq!(formula(&ir, "Workings", "E10"), "=D11");
    assert_eq!(formula(&ir, "Workings", "C11"), "=C10+C9");
    assert_eq!(formula(&ir, "Workings", "C5"), "=Inputs!C9");
    assert_eq!(formula(&ir, "Inputs", "C9"), "=INDEX(C7:C8,ActiveScenario)");
    assert_eq!(formula(&ir, "Checks", "C5"), "=Workings!C7=Workings!C5*Workings!C6");
    assert_eq!(formula(&ir, "Checks", "C6"), "=Workings!C11-Workings!C10=Workings!C7");
    assert_eq!(formula(&ir, "Checks", "B5"), "=AND(C5:E5)");
    assert_eq!(formula(&ir, "Checks", "B3"), "=AND(B5:B6)");
    assert_eq!(formula(&ir, "Summary", "C6"), "=Workings!C11");
    assert_eq!(formula(&ir, "Revenue data", "E4"), "=Workings!E7");
}

#[test]
fn opening_guard_with_closing_on_row_ten() {
    // The layout places a heading above each instance; here the rows are
    // placed by hand so that Opening sits on row 9 and Closing on row 10.
    let (_, a, _) = demo_model();
    let placement: Vec<Option<Placement>> = (0..a.rows.len())
        .map(|i| Some(Placement { sheet: "Workings".into(), row: 4 + i as u32 }))
        .collect();
    assert_eq!(a.rows[4].path, "cash.Opening");
    let active = [7, 10];
    let ctx = GridContext { rows: &a.rows, placement: &placement, active_rows: &active, n_periods: 3 };
    let cells: Vec<(u32, String)> = instantiate_row(&ctx, 4).into_iter().map(|(c, e)| (c, render_a1(&e))).collect();
    assert_eq!(cells, vec![(3, "0".into()), (4, "C9".into()), (5, "D9".into())].into_iter().map(|(c, s): (u32, &str)| (c, s.to_string())).collect::<Vec<_>>());
    let r1c1: Vec<String> = instantiate_row(&ctx, 4).iter().map(|(c, e)| render_r1c1(e, 8, *c)).collect();
    assert!(r1c1.iter().all(|s| s == &r1c1[0]), "{r1c1:?}");
}

#[test]
fn period_headers_are_dates() {
    let (_, _, ir) = demo_model();
    let w = ir.sheet("Workings").unwrap();
    let dates: Vec<_> = (3..=5)
        .map(|c| match &w.get(2, c).unwrap().content {
            CellContent::Literal(Literal::Date(d)) => *d,
            other => panic!("{other:?}"),
        })
        .collect();
    let d = |m| NaiveDate::from_ymd_opt(2009, m, 1).unwrap();
    assert_eq!(dates, vec![d(1), d(2), d(3)]);
}

#[test]
fn one_outline_group_per_instance() {
    let (_, _, ir) = demo_model();
    let w = ir.sheet("Workings").unwrap();
    let levels: Vec<(u32, u8)> = w.row_levels.iter().map(|(r, l)| (*r, *l)).collect();
    assert_eq!(levels, vec![(5, 1), (6, 1), (7, 1), (9, 1), (10, 1), (11, 1)]);
    assert!(w.get(4, 1).is_some() && w.get(8, 1).is_some());
}

#[test]
fn inputs_block_shape() {
    let (_, _, ir) = demo_model();
    let inputs = ir.sheet("Inputs").unwrap();
    let label = |r| match &inputs.get(r, 1).unwrap().content {
        CellContent::Literal(Literal::Text(t)) => t.clone(),
        other => panic!("{other:?}"),
    };
    assert_eq!(
        (7..=9).map(label).collect::<Vec<_>>(),
        ["price: Base", "price: High", "price: Active"]
    );
    let formulas: Vec<_> = inputs.cells.iter().filter(|(_, c)| c.is_formula()).map(|(k, _)| k.0).collect();
    assert!(formulas.iter().all(|&r| r == 9 || r == 13), "{formulas:?}");
}

#[test]
fn base_and_high_scenarios() {
    let (_, _, ir) = demo_model();
    let row = |vals: &ringforge_core::eval::CellValues, r: u32| -> Vec<Value> {
        (3..=5).map(|c| vals.get("Workings", r, c)).collect()
    };
    let n = |xs: [f64; 3]| xs.map(Value::Number).to_vec();
    let base = evaluate(&ir, "Base").unwrap();
    assert_eq!(row(&base, 7), n([1000.0, 1100.0, 1210.0]));
    assert_eq!(row(&base, 10), n([0.0, 1000.0, 2100.0]));
    assert_eq!(row(&base, 11), n([1000.0, 2100.0, 3310.0]));
    assert!(run_checks(&ir, &base).all_checks);
    let high = evaluate(&ir, "High").unwrap();
    assert_eq!(row(&high, 7), n([1200.0, 1320.0, 1452.0]));
    assert!(run_checks(&ir, &high).all_checks);
    assert_eq!(base.get("Meta", 0, 0), Value::Blank);
    let clean = ir.name("Clean").unwrap();
    assert_eq!(base.get("Meta", clean.row, clean.col), Value::Bool(true));
    assert!(evaluate(&ir, "Low").is_err());
}

#[test]
fn both_paths_agree_on_demo() {
    let (_, a, ir) = demo_model();
    for sc in ["Base", "High"] {
        let grid = evaluate(&ir, sc).unwrap();
        let direct = evaluate_model(&a, sc).unwrap();
        for (i, row) in [5u32, 6, 7, 9, 10, 11].iter().enumerate() {
            for p in 1..=3 {
                assert_eq!(grid.get("Workings", *row, 2 + p), direct.get(i, p));
            }
        }
        assert_eq!(direct.checks, run_checks(&ir, &grid));
    }
}

#[test]
fn broken_revenue_fails_checks_every_period() {
    let (mut repo, ids) = demo::memory_repo();
    let mut sales = repo.element(&ids.sales).unwrap().as_component().unwrap().clone();
    sales.rows[2] = Row::formula("Revenue", "@Price + @Volume");
    let new_sales = repo.insert(Element::Component(sales));
    let sk = ringforge_core::assemble::upgrade_child(&repo.element(&ids.skeleton).unwrap(), &ids.sales, &new_sales, &repo).unwrap().0;
    let sk_id = repo.insert(sk);
    let m = ringforge_core::assemble::upgrade_child(&repo.element(&ids.model).unwrap(), &ids.skeleton, &sk_id, &repo).unwrap().0;
    let m_id = repo.insert(m);
    let a = assemble_id(&m_id, &repo).unwrap();
    let ir = layout(&a, &GenerationInfo::at(epoch()));
    let vals = evaluate(&ir, "Base").unwrap();
    assert_eq!(vals.get("Workings", 7, 3), Value::Number(110.0));
    let checks = run_checks(&ir, &vals);
    assert_eq!(checks.checks[0].periods, vec![Some(false); 3]);
    assert!(!checks.all_checks);
}

#[test]
fn division_by_zero_fails_checks() {
    let (mut repo, ids) = demo::memory_repo();
    let mut sales = repo.element(&ids.sales).unwrap().as_component().unwrap().clone();
    sales.rows[2] = Row::formula("Revenue", "@Price / 0");
    let new_sales = repo.insert(Element::Component(sales));
    let sk = ringforge_core::assemble::upgrade_child(&repo.element(&ids.skeleton).unwrap(), &ids.sales, &new_sales, &repo).unwrap().0;
    let sk_id = repo.insert(sk);
    let m = ringforge_core::assemble::upgrade_child(&repo.element(&ids.model).unwrap(), &ids.skeleton, &sk_id, &repo).unwrap().0;
    let m_id = repo.insert(m);
    let a = assemble_id(&m_id, &repo).unwrap();
    let ir = layout(&a, &GenerationInfo::at(epoch()));
    let vals = evaluate(&ir, "Base").unwrap();
    assert!(matches!(vals.get("Workings", 7, 3), Value::Error(_)));
    assert!(!run_checks(&ir, &vals).all_checks);
    assert!(!evaluate_model(&a, "Base").unwrap().checks.all_checks);
}

#[test]
fn special_row_leaves_inactive_columns_empty() {
    let (mut repo, ids) = demo::memory_repo();
    let mut sk = repo.element(&ids.skeleton).unwrap().as_skeleton().unwrap().clone();
    sk.widths.insert("cash.Inflow".into(), WidthClass::Special);
    let sk_id = repo.insert(Element::Skeleton(sk));
    let mut m = repo.element(&ids.model).unwrap().as_model().unwrap().clone();
    m.skeleton = sk_id;
    m.special_widths.insert("cash.Inflow".into(), SpecialRange { start_period: 2, end_period: 3 });
    let m_id = repo.insert(Element::Model(m));
    let a = assemble_id(&m_id, &repo).unwrap();
    let ir = layout(&a, &GenerationInfo::at(epoch()));
    let w = ir.sheet("Workings").unwrap();
    assert!(w.get(9, 3).is_none());
    assert_eq!(formula(&ir, "Workings", "D9"), "=D7");
    let vals = evaluate(&ir, "Base").unwrap();
    let closing: Vec<Value> = (3..=5).map(|c| vals.get("Workings", 11, c)).collect();
    assert_eq!(closing, [0.0, 1100.0, 2310.0].map(Value::Number).to_vec());
    // The check now fails in period 1 only.
    let checks = run_checks(&ir, &vals);
    assert_eq!(checks.checks[1].periods, vec![Some(false), Some(true), Some(true)]);
    let direct = evaluate_model(&a, "Base").unwrap();
    assert_eq!(direct.checks, checks);
}

#[test]
fn untouched_and_tampered_clean_cell() {
    let (_, _, mut ir) = demo_model();
    let clean = ir.name("Clean").unwrap().clone();
    assert_eq!(evaluate_as_is(&ir).unwrap().get("Meta", clean.row, clean.col), Value::Bool(true));
    ir.sheet_mut("Workings").unwrap().cells.remove(&(7, 4));
    assert_eq!(evaluate_as_is(&ir).unwrap().get("Meta", clean.row, clean.col), Value::Bool(false));
}

#[test]
fn landing_rows_reference_active_rows_once() {
    let (_, a, ir) = demo_model();
    for (k, input) in a.data_inputs.iter().enumerate() {
        assert!(matches!(a.rows[input.landing].kind, FlatKind::Landing { input } if input == k));
    }
    let w = ir.sheet("Workings").unwrap();
    let to_inputs: Vec<u32> = w
        .cells
        .iter()
        .filter_map(|((r, _), c)| match &c.content {
            CellContent::Formula(e) if render_a1(e).starts_with("Inputs!") => Some(*r),
            _ => None,
        })
        .collect();
    assert_eq!(to_inputs, vec![5, 5, 5, 6, 6, 6]);
}
