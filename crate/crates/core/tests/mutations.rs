//! One minimal fixture per error code: a clean variant of the demo, and a
//! single-field mutation of it that trips exactly that code. Undoing the
//! mutation gives no diagnostics at all.

use std::collections::BTreeMap;

use ringforge_core::assemble::{assemble_id, dependency_graph};
use ringforge_core::demo;
use ringforge_core::diagnostics::{diagnose, Code};
use ringforge_core::expr::parse;
use ringforge_core::model::{
    validate_element, CheckRecord, Component, Documentation, Embed, Model, Port, Row, RowKind, ScenarioValue, Skeleton,
    SpecialRange, Structure, WidthClass, WireSource,
};
use ringforge_core::store::{MemoryRepo, Repository, VersionId};
use ringforge_core::{Element, Status};

#[derive(Clone)]
struct Demo {
    sales: Component,
    cash: Component,
    skeleton: Skeleton,
    model: Model,
    /// Extra components, inserted first; referenced by `extra:<i>` markers.
    extras: Vec<Component>,
}

/// Stand-ins for child ids, swapped for real ones at build time.
fn marker(name: &str) -> VersionId {
    VersionId::of(&Element::Component(Component {
        name: format!("marker_{name}"),
        ports: vec![],
        rows: vec![],
        embeds: vec![],
        outputs: vec![],
        doc: Documentation::default(),
    }))
}

impl Demo {
    fn load() -> Demo {
        let (repo, ids) = demo::memory_repo();
        let get = |id: &VersionId| repo.element(id).unwrap();
        let mut skeleton = get(&ids.skeleton).as_skeleton().unwrap().clone();
        skeleton.instances[0].component = marker("sales");
        skeleton.instances[1].component = marker("cash");
        let mut model = get(&ids.model).as_model().unwrap().clone();
        model.skeleton = marker("skeleton");
        Demo {
            sales: get(&ids.sales).as_component().unwrap().clone(),
            cash: get(&ids.cash).as_component().unwrap().clone(),
            skeleton,
            model,
            extras: vec![],
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Target {
    Sales,
    Cash,
    Skeleton,
    Model,
}

struct Built {
    repo: MemoryRepo,
    ids: BTreeMap<&'static str, VersionId>,
}

fn build(d: &Demo) -> Built {
    let mut repo = MemoryRepo::new();
    let mut ids: BTreeMap<&'static str, VersionId> = BTreeMap::new();
    let mut swap: Vec<(VersionId, VersionId)> = Vec::new();
    for (i, c) in d.extras.iter().enumerate() {
        let id = repo.insert(Element::Component(c.clone()));
        swap.push((marker(&format!("extra{i}")), id));
    }
    let fix = |id: &mut VersionId, swap: &[(VersionId, VersionId)]| {
        if let Some((_, real)) = swap.iter().find(|(m, _)| m == id) {
            *id = real.clone();
        }
    };
    for (name, c) in [("sales", &d.sales), ("cash", &d.cash)] {
        let mut c = c.clone();
        for e in &mut c.embeds {
            fix(&mut e.child, &swap);
        }
        let id = repo.insert(Element::Component(c));
        swap.push((marker(name), id.clone()));
        ids.insert(name, id);
    }
    let mut s = d.skeleton.clone();
    for inst in &mut s.instances {
        fix(&mut inst.component, &swap);
    }
    let sid = repo.insert(Element::Skeleton(s));
    swap.push((marker("skeleton"), sid.clone()));
    ids.insert("skeleton", sid);
    let mut m = d.model.clone();
    fix(&mut m.skeleton, &swap);
    ids.insert("model", repo.insert(Element::Model(m)));
    Built { repo, ids }
}

fn codes_of(d: &Demo, target: Target) -> Vec<&'static str> {
    let b = build(d);
    let key = match target {
        Target::Sales => "sales",
        Target::Cash => "cash",
        Target::Skeleton => "skeleton",
        Target::Model => "model",
    };
    let mut codes: Vec<&str> = diagnose(&b.ids[key], &b.repo).unwrap().iter().map(|d| d.code.as_str()).collect();
    codes.dedup();
    codes
}

fn expr(text: &str) -> RowKind {
    RowKind::Formula { expr: parse(text).unwrap() }
}

fn memo(d: &mut Demo) {
    d.sales.rows.push(Row { label: "Memo".into(), kind: RowKind::Heading, unit: None });
}

fn rate(d: &mut Demo) {
    d.sales.rows.push(Row::formula("Rate", "1"));
    d.skeleton.widths.insert("sales.Rate".into(), WidthClass::SingleColumn);
}

fn tax(d: &mut Demo) {
    d.extras.push(Component {
        name: "Tax".into(),
        ports: vec![Port { name: "base".into(), structure: Structure::Series }],
        rows: vec![Row::input("Base", "base"), Row::formula("Due", "@Base")],
        embeds: vec![],
        outputs: vec!["Due".into()],
        doc: Documentation { databook_entry: "Tax on a base.".into(), ..Documentation::default() },
    });
    d.sales.embeds.push(Embed {
        instance: "tax".into(),
        child: marker("extra0"),
        after: None,
        bindings: BTreeMap::from([("base".to_string(), "Revenue".to_string())]),
    });
}

fn special_revenue(d: &mut Demo) {
    d.skeleton.widths.insert("sales.Revenue".into(), WidthClass::Special);
    d.model.special_widths.insert("sales.Revenue".into(), SpecialRange { start_period: 1, end_period: 3 });
}

fn none(_: &mut Demo) {}

type Edit = fn(&mut Demo);

fn cases() -> Vec<(Code, Target, Edit, Edit)> {
    use Target::*;
    vec![
        (Code::BadLabel, Sales, memo, |d| d.sales.rows[3].label = "Memo 1".into()),
        (Code::DuplicateLabel, Sales, memo, |d| d.sales.rows[3].label = "Volume".into()),
        (Code::DuplicatePort, Sales, none, |d| {
            d.sales.ports.push(Port { name: "price".into(), structure: Structure::Series })
        }),
        (Code::DuplicateName, Skeleton, none, |d| d.skeleton.checks[1].name = d.skeleton.checks[0].name.clone()),
        (Code::UnknownPort, Sales, memo, |d| d.sales.rows[3].kind = RowKind::Input { port: "qty".into() }),
        (Code::PortNotLanded, Sales, none, |d| d.sales.rows[0].kind = expr("0")),
        (Code::DuplicateLanding, Sales, memo, |d| d.sales.rows[3].kind = RowKind::Input { port: "price".into() }),
        (Code::DanglingOutput, Sales, memo, |d| d.sales.outputs[0] = "Memo".into()),
        (Code::BadVersionId, Skeleton, none, |d| d.skeleton.instances[1].component = VersionId::from_raw("Cash")),
        (Code::UnresolvedRef, Cash, none, |d| d.cash.rows[2].kind = expr("@Opening + @Inflw")),
        (Code::ForwardRow, Cash, none, |d| d.cash.rows[1].kind = expr("@Closing")),
        (Code::OffsetOnSingle, Skeleton, rate, |d| d.sales.rows[2].kind = expr("@Price * @Volume * @Rate[-1]")),
        (Code::SingleRefsSeries, Skeleton, rate, |d| d.sales.rows[3].kind = expr("@Price")),
        (Code::TypeMismatch, Sales, none, |d| d.sales.rows[2].kind = expr("@Price * (@Volume > 0)")),
        (Code::CheckNotBoolean, Skeleton, none, |d| d.skeleton.checks[0].expr = parse("@sales.Revenue").unwrap()),
        (Code::KindMismatch, Model, none, |d| d.model.skeleton = marker("sales")),
        (Code::DanglingChild, Model, none, |d| d.model.skeleton = marker("nowhere")),
        (Code::UnboundPort, Sales, tax, |d| d.sales.embeds[0].bindings.clear()),
        (Code::BadBinding, Sales, tax, |d| {
            d.sales.embeds[0].bindings.insert("base".into(), "Turnover".into());
        }),
        (Code::UnwiredPort, Skeleton, none, |d| {
            d.skeleton.wiring.remove("cash.inflow");
        }),
        (Code::WireForward, Skeleton, none, |d| {
            d.skeleton.wiring.insert("cash.inflow".into(), WireSource::Output("cash.Closing".into()));
        }),
        (Code::BadWiring, Skeleton, none, |d| {
            d.skeleton.wiring.insert("cash.inflow".into(), WireSource::Output("sales.Turnover".into()));
        }),
        (Code::InputUnused, Skeleton, none, |d| {
            d.skeleton.data_inputs.push(ringforge_core::model::DataInput { name: "spare".into(), structure: Structure::Series })
        }),
        (Code::WidthMissing, Skeleton, none, |d| {
            d.skeleton.widths.remove("cash.Opening");
        }),
        (Code::StructureMismatch, Skeleton, none, |d| {
            d.skeleton.widths.insert("sales.Price".into(), WidthClass::SingleColumn);
        }),
        (Code::DanglingPath, Model, none, |d| {
            d.model.formats.insert("sales.Turnover".into(), "0".into());
        }),
        (Code::SpecialRange, Model, special_revenue, |d| {
            d.model.special_widths.get_mut("sales.Revenue").unwrap().end_period = 4
        }),
        (Code::ScenarioIncomplete, Model, none, |d| {
            d.model.scenarios[1].values.remove("volume");
        }),
        (Code::ScenarioValue, Model, none, |d| {
            d.model.scenarios[0].values.insert("volume".into(), ScenarioValue::Series(vec![100.0; 9]));
        }),
        (Code::NoScenario, Model, none, |d| d.model.scenarios.clear()),
        (Code::BadGenParams, Model, none, |d| d.model.gen_params.n_periods = 0),
        (Code::SheetName, Model, none, |d| {
            d.model.sheet_assignment.insert("cash".into(), "Inputs".into());
        }),
    ]
}

#[test]
fn every_case_trips_exactly_its_code_and_reverts_clean() {
    for (code, target, base, mutate) in cases() {
        let mut d = Demo::load();
        base(&mut d);
        assert_eq!(codes_of(&d, target), Vec::<&str>::new(), "{code:?} base is not clean");
        let clean = d.clone();
        mutate(&mut d);
        assert_eq!(codes_of(&d, target), vec![code.as_str()], "{code:?}");
        assert_eq!(codes_of(&clean, target), Vec::<&str>::new());
    }
}

#[test]
fn parse_errors_surface_when_loading_a_file() {
    let good = demo::SALES_JSON;
    let bad = good.replace("@Price * @Volume", "@Price * ");
    assert!(Element::from_json(good).is_ok());
    let err = Element::from_json(&bad).unwrap_err();
    assert_eq!(err.code(), "E_PARSE");
}

#[test]
fn status_ok_needs_a_check_record() {
    let mut sales = Demo::load().sales;
    sales.doc.status = Status::Ok;
    sales.doc.check_record = None;
    let codes: Vec<&str> =
        validate_element(&Element::Component(sales.clone())).iter().map(|d| d.code.as_str()).collect();
    assert_eq!(codes, ["E_STATUS_UNCHECKED"]);
    sales.doc.check_record = Some(CheckRecord { checked_by: "bob".into(), checked_at: chrono::DateTime::UNIX_EPOCH });
    assert!(validate_element(&Element::Component(sales)).is_empty());
}

#[test]
fn embedding_cycle() {
    // Only expressible by inserting under a chosen id.
    let mut repo = MemoryRepo::new();
    let id = VersionId::from_raw("c".repeat(64));
    let looped = Component {
        name: "Loop".into(),
        ports: vec![],
        rows: vec![Row::formula("A", "0")],
        embeds: vec![Embed { instance: "inner".into(), child: id.clone(), after: None, bindings: BTreeMap::new() }],
        outputs: vec![],
        doc: Documentation { databook_entry: "Loops.".into(), ..Documentation::default() },
    };
    repo.insert_as(id.clone(), Element::Component(looped.clone()), Status::Ok);
    let codes: Vec<&str> = diagnose(&id, &repo).unwrap().iter().map(|d| d.code.as_str()).collect();
    assert_eq!(codes, ["E_COMPONENT_CYCLE"]);

    let mut fixed = looped;
    fixed.embeds.clear();
    repo.insert_as(id.clone(), Element::Component(fixed), Status::Ok);
    assert!(diagnose(&id, &repo).unwrap().is_empty());
}

#[test]
fn a_loop_through_an_embed_reads_forward() {
    let mut d = Demo::load();
    tax(&mut d);
    assert_eq!(codes_of(&d, Target::Sales), Vec::<&str>::new());
    d.sales.embeds[0].after = Some("Price".into());
    d.sales.rows[2].kind = expr("@Price * @Volume + @tax.Due");
    assert_eq!(codes_of(&d, Target::Sales), ["E_FORWARD_ROW"]);
}

#[test]
fn same_period_cycle_in_linked_rows() {
    // Upward-only reads keep element files acyclic, so the loop is made on
    // the linked rows directly.
    let b = build(&Demo::load());
    let a = assemble_id(&b.ids["model"], &b.repo).unwrap();
    assert!(dependency_graph("demo", &a.rows).is_ok());
    let mut rows = a.rows.clone();
    let opening = a.row_index("cash.Opening").unwrap();
    let closing = a.row_index("cash.Closing").unwrap();
    rows[opening].kind = rows[closing].kind.clone();
    let err = dependency_graph("demo", &rows).unwrap_err();
    assert_eq!(err.code.as_str(), "E_CYCLE");
    assert_eq!(err.location.path, "cash.Opening");
}

#[test]
fn every_error_code_has_a_fixture() {
    let mut covered: Vec<&str> = cases().iter().map(|c| c.0.as_str()).collect();
    covered.extend(["E_PARSE", "E_STATUS_UNCHECKED", "E_COMPONENT_CYCLE", "E_CYCLE"]);
    for code in Code::ALL {
        if code.as_str().starts_with("E_") {
            assert!(covered.contains(&code.as_str()), "{} has no fixture", code.as_str());
        }
    }
}
