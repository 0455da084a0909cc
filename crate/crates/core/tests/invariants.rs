use chrono::{TimeZone, Utc};
use rand::RngExt;

use ringforge_core::assemble::{assemble, assemble_id};
use ringforge_core::demo;
use ringforge_core::eval::{evaluate_model, Value};
use ringforge_core::expr::parse;
use ringforge_core::model::{
    canonicalize, classify_materiality, diff, validate_element, Row, RowKind, ScenarioValue,
};
use ringforge_core::store::{MemoryRepo, Repository};
use ringforge_core::testkit::rng;
use ringforge_core::{Element, Store};

/// Small random edits of the demo Sales component.
fn edited_sales(r: &mut rand::rngs::StdRng) -> Element {
    let mut c = Element::from_json(demo::SALES_JSON).unwrap().as_component().unwrap().clone();
    match r.random_range(0..6) {
        0 => c.doc.notes = format!("note {}", r.random_range(0..3)),
        1 => c.doc.databook_entry = format!("entry {}", r.random_range(0..3)),
        2 => c.rows[2].kind = RowKind::Formula { expr: parse(["@Price * @Volume", "@Volume * @Price", "@Price*@Volume"][r.random_range(0..3)]).unwrap() },
        3 => c.rows[1].unit = [None, Some("units".to_string()), Some("kg".to_string())][r.random_range(0..3)].clone(),
        4 => c.rows.push(Row::formula("Spare", ["1", "2"][r.random_range(0..2)])),
        _ => {}
    }
    Element::Component(c)
}

#[test]
fn diff_is_empty_exactly_when_canonical_bytes_match() {
    let mut r = rng(1);
    for _ in 0..400 {
        let a = edited_sales(&mut r);
        let b = edited_sales(&mut r);
        let d = diff(&a, &b).unwrap();
        assert_eq!(d.is_empty(), canonicalize(&a) == canonicalize(&b), "{d:?}");
        for change in &d.entries {
            assert_eq!(change.material, classify_materiality(&change.path), "{}", change.path);
        }
        assert!(diff(&a, &a).unwrap().is_empty());
    }
}

#[test]
fn validation_is_sorted_and_idempotent() {
    let mut r = rng(2);
    for _ in 0..200 {
        let mut c = Element::from_json(demo::SALES_JSON).unwrap().as_component().unwrap().clone();
        for _ in 0..r.random_range(1..4) {
            match r.random_range(0..4) {
                0 => c.rows.push(Row::input("Price", "price")),
                1 => c.rows.push(Row::formula("Bad label", "1")),
                2 => c.outputs.push("Nowhere".into()),
                _ => c.rows.reverse(),
            }
        }
        let e = Element::Component(c);
        let first = validate_element(&e);
        assert_eq!(first, validate_element(&e));
        let mut sorted = first.clone();
        sorted.sort_by(|x, y| x.location.cmp(&y.location).then(x.code.as_str().cmp(y.code.as_str())));
        let locations = |v: &[ringforge_core::Diagnostic]| v.iter().map(|d| d.location.clone()).collect::<Vec<_>>();
        assert_eq!(locations(&first), locations(&sorted));
    }
}

#[test]
fn store_round_trip_keeps_content() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::init(dir.path().join("s")).unwrap();
    let at = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let mut r = rng(3);
    for _ in 0..50 {
        let e = edited_sales(&mut r);
        let id = store.put_new(&e, "alice", at).unwrap();
        assert_eq!(canonicalize(&store.raw_element(&id).unwrap()), canonicalize(&e));
    }
}

/// Revenue is price times volume, so it is homogeneous of degree one in each
/// input and degree two in both together.
#[test]
fn scaling_inputs_scales_revenue_and_closing() {
    let (repo, ids) = demo::memory_repo();
    let base = assemble_id(&ids.model, &repo).unwrap();
    let original = repo.element(&ids.model).unwrap().as_model().unwrap().clone();
    for (inputs, factor) in [(&["price"][..], 2.0), (&["volume"][..], 2.0), (&["price", "volume"][..], 4.0)] {
        let mut model = original.clone();
        for sc in &mut model.scenarios {
            for name in inputs {
                match sc.values.get_mut(*name).unwrap() {
                    ScenarioValue::Constant(v) => *v *= 2.0,
                    ScenarioValue::Series(vs) => vs.iter_mut().for_each(|v| *v *= 2.0),
                }
            }
        }
        let scaled = assemble(&model, None, &repo).unwrap();
        for scenario in ["Base", "High"] {
            let a = evaluate_model(&base, scenario).unwrap();
            let b = evaluate_model(&scaled, scenario).unwrap();
            for path in ["sales.Revenue", "cash.Closing"] {
                let i = base.row_index(path).unwrap();
                for p in 1..=base.n_periods() {
                    let (Value::Number(x), Value::Number(y)) = (a.get(i, p), b.get(i, p)) else { panic!() };
                    assert_eq!(y, factor * x, "{inputs:?} {scenario} {path} p{p}");
                }
            }
        }
    }
}

#[test]
fn memory_repo_reports_check_state() {
    let mut repo = MemoryRepo::new();
    let id = repo.insert(Element::from_json(demo::CASH_JSON).unwrap());
    let meta = repo.meta(&id).unwrap();
    assert!(meta.check_record.is_some());
    assert_eq!(repo.element(&id).unwrap().doc().status, meta.status);
}
