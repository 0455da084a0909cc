mod common;

use common::{all_checks, fixture, tsv_row, Project, FIXTURES};
use ringforge_core::emit::{read_xlsx, replace_part, sheet_part};

fn workings_part(bytes: &[u8]) -> String {
    let raw = read_xlsx(bytes).unwrap();
    sheet_part(raw.sheets.iter().position(|s| s.name == "Workings").unwrap())
}

#[test]
fn init_writes_project_and_store() {
    let p = Project::empty();
    assert!(p.path(".ringstore/objects").is_dir());
    let project: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.path("project.json")).unwrap()).unwrap();
    assert_eq!(project["author"], "alice");
    assert_eq!(p.run(&["refs"]).stdout, "");
}

#[test]
fn save_resolves_child_names_and_moves_refs() {
    let p = Project::empty();
    for f in ["sales.json", "cash.json", "skeleton.json", "model.json"] {
        let out = p.run(&["save", &format!("{FIXTURES}/{f}")]);
        assert_eq!(out.code, 0, "{f}: {}", out.stderr);
        assert_eq!(out.stdout.trim().len(), 64);
    }
    let refs = p.run(&["refs"]).stdout;
    let names: Vec<&str> = refs.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names, ["Cash", "Sales", "demo", "demo_skeleton"]);

    let mut sales = fixture("sales.json");
    sales["doc"]["notes"] = "Price times volume.".into();
    let file = p.write_json("sales2.json", &sales);
    let v1 = p.id("Sales");
    let out = p.run(&["save", &file, "--parent", "Sales", "--author", "carol"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v2 = out.stdout.trim().to_string();
    assert_ne!(v1, v2);
    assert_eq!(p.id("Sales"), v2);

    let diff = p.run(&["diff", &v1, "Sales"]);
    assert_eq!(diff.lines(), ["non-material\tdoc.notes\tRevenue is price times volume, period by period. -> Price times volume."]);
}

#[test]
fn save_refuses_invalid_element() {
    let p = Project::empty();
    let mut sales = fixture("sales.json");
    sales["rows"][1]["label"] = "Price".into();
    let file = p.write_json("bad.json", &sales);
    let out = p.run(&["save", &file]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("E_INVALID_ELEMENT") && out.stderr.contains("E_DUPLICATE_LABEL"), "{}", out.stderr);
}

#[test]
fn save_needs_an_author() {
    let p = Project::empty();
    std::fs::write(p.path("project.json"), "{}").unwrap();
    let out = p.run(&["save", &format!("{FIXTURES}/sales.json")]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("no author"));
}

#[test]
fn status_checkoff_and_log() {
    let p = Project::demo(false);
    let out = p.run(&["status", "demo"]);
    assert!(out.stdout.contains("own\t[Warning]") && out.stdout.contains("effective\t[Warning]"), "{}", out.stdout);

    assert_eq!(p.run(&["checkoff", "demo", "--by", "bob"]).code, 0);
    let out = p.run(&["status", "demo"]);
    assert!(out.stdout.contains("own\t[OK]") && out.stdout.contains("effective\t[Warning]"), "{}", out.stdout);
    for r in ["Sales", "Cash", "demo_skeleton"] {
        p.run(&["checkoff", r, "--by", "bob"]);
    }
    let out = p.run(&["status", "demo", "--format", "json"]).json();
    assert_eq!(out["effective"], "OK");
    assert_eq!(out["check_record"]["checked_by"], "bob");

    let log = p.run(&["log", "demo", "--format", "json"]).json();
    let entries = log.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries[0]["from_version"].is_null());
    assert_eq!(entries[1]["from_version"], entries[1]["to_version"]);
    let text = p.run(&["log", "demo"]).stdout;
    assert!(text.starts_with("(new) -> 6c7575c40ce4  2024-03-01T09:00:00Z  alice  [Warning]"), "{text}");
    assert_eq!(text.matches("checked off").count(), 1);
}

#[test]
fn diagnose_exit_codes() {
    let checked = Project::demo(true);
    let out = checked.run(&["diagnose", "demo", "--strict"]);
    assert_eq!((out.code, out.stdout.as_str()), (0, ""));

    let unchecked = Project::demo(false);
    let out = unchecked.run(&["diagnose", "demo"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("W_UNCHECKED"));
    assert_eq!(unchecked.run(&["diagnose", "demo", "--strict"]).code, 1);

    let mut skeleton = fixture("skeleton.json");
    skeleton["widths"].as_object_mut().unwrap().remove("sales.Revenue");
    let file = unchecked.write_json("skeleton.json", &skeleton);
    unchecked.run(&["save", &file, "--parent", "demo_skeleton"]);
    let out = unchecked.run(&["diagnose", "demo_skeleton", "--format", "json"]);
    assert_eq!(out.code, 2);
    let json = out.json();
    let codes: Vec<&str> =
        json["diagnostics"].as_array().unwrap().iter().filter_map(|d| d["code"].as_str()).collect();
    assert!(codes.contains(&"E_WIDTH_MISSING"), "{codes:?}");
}

#[test]
fn generate_writes_four_files_and_warns_when_unchecked() {
    let p = Project::demo(false);
    let out = p.run(&["generate", "demo", "--epoch", "2024-01-01T00:00:00Z"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("effective status [Warning]"));
    assert!(out.stderr.contains("warning: effective status is [Warning]"));
    for f in ["model.xlsx", "model.grid.json", "databook.md", "spec.md"] {
        assert!(p.path("out").join(f).is_file(), "{f}");
    }
    let grid = std::fs::read_to_string(p.path("out/model.grid.json")).unwrap();
    assert_eq!(grid, std::fs::read_to_string(format!("{FIXTURES}/model.grid.json")).unwrap());
}

#[test]
fn generate_uses_project_out_dir() {
    let p = Project::demo(true);
    std::fs::write(p.path("project.json"), r#"{ "author": "alice", "out_dir": "build/xl" }"#).unwrap();
    let out = p.run(&["generate", "demo"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stderr.is_empty());
    assert!(p.path("build/xl/model.xlsx").is_file());
}

#[test]
fn generate_refuses_a_broken_model() {
    let p = Project::demo(true);
    let mut model = fixture("model.json");
    model["scenarios"][1]["values"].as_object_mut().unwrap().remove("volume");
    let file = p.write_json("model.json", &model);
    assert_eq!(p.run(&["save", &file, "--parent", "demo"]).code, 0);
    let out = p.run(&["generate", "demo", "--out", "x"]);
    assert_eq!(out.code, 2);
    assert!(out.stdout.starts_with("E_SCENARIO_INCOMPLETE [demo scenarios[1].values.volume]"), "{}", out.stdout);
    assert!(!p.path("x").exists());
}

#[test]
fn generate_strict_blocks_on_warnings() {
    let p = Project::demo(false);
    assert_eq!(p.run(&["generate", "demo", "--strict"]).code, 2);
}

#[test]
fn run_prints_values_and_checks() {
    let p = Project::demo(false);
    let out = p.run(&["run", "demo", "--scenario", "Base"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.lines()[0], "row\tvalue\t2009-01-01\t2009-02-01\t2009-03-01");
    assert_eq!(tsv_row(&out.stdout, "cash.Closing"), ["1000", "2100", "3310"]);
    assert_eq!(all_checks(&out.stdout), Some(true));

    let json = p.run(&["run", "demo", "--scenario", "High", "--format", "json"]).json();
    let revenue = json["rows"].as_array().unwrap().iter().find(|r| r["row"] == "sales.Revenue").unwrap();
    assert_eq!(revenue["periods"], serde_json::json!([1200.0, 1320.0, 1452.0]));
    assert_eq!(json["checks"]["all_checks"], true);
}

#[test]
fn run_unknown_scenario_is_an_error() {
    let p = Project::demo(false);
    let out = p.run(&["run", "demo", "--scenario", "Low", "--format", "json"]);
    assert_eq!(out.code, 1);
    let err: serde_json::Value = serde_json::from_str(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "E_UNKNOWN_SCENARIO");
}

/// Replaces the Sales revenue formula and walks the upgrade up to the model.
fn break_revenue(p: &Project) {
    let old_sales = p.id("Sales");
    let old_skeleton = p.id("demo_skeleton");
    let mut sales = fixture("sales.json");
    sales["rows"][2]["kind"]["expr"] = "@Price + @Volume".into();
    let file = p.write_json("sales.json", &sales);
    assert_eq!(p.run(&["save", &file, "--parent", "Sales"]).code, 0);
    let out = p.run(&["upgrade", "demo_skeleton", "--child-old", &old_sales, "--child-new", "Sales"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let out = p.run(&["upgrade", "demo", "--child-old", &old_skeleton, "--child-new", "demo_skeleton"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
}

#[test]
fn run_exits_3_when_checks_fail() {
    let p = Project::demo(true);
    break_revenue(&p);
    let out = p.run(&["run", "demo", "--scenario", "Base"]);
    assert_eq!(out.code, 3, "{}{}", out.stdout, out.stderr);
    assert_eq!(tsv_row(&out.stdout, "sales.Revenue"), ["110", "120", "131"]);
    assert!(out.stdout.contains("revenue_is_price_times_volume\tFALSE\tFALSE\tFALSE\tFALSE"), "{}", out.stdout);
    assert_eq!(all_checks(&out.stdout), Some(false));
    let status = p.run(&["status", "demo"]).stdout;
    assert!(status.contains("own\t[Warning]"), "{status}");
}

#[test]
fn verify_clean_tampered_and_other_version() {
    let p = Project::demo(true);
    assert_eq!(p.run(&["generate", "demo", "--epoch", "2024-01-01"]).code, 0);
    let out = p.run(&["verify", "out/model.xlsx", "--against", "demo"]);
    assert_eq!((out.code, out.stdout.as_str()), (0, "clean\n"));

    let bytes = std::fs::read(p.path("out/model.xlsx")).unwrap();
    let tampered = replace_part(&bytes, &workings_part(&bytes), |s| s.replace("<f>E5*E6</f>", "<f>E5*E6+1</f>")).unwrap();
    std::fs::write(p.path("tampered.xlsx"), tampered).unwrap();
    let out = p.run(&["verify", "tampered.xlsx", "--against", "demo"]);
    assert_eq!(out.code, 4);
    assert_eq!(out.lines(), ["Workings!E7: expected =E5*E6, found =E5*E6+1", "1 cell(s) differ from regeneration"]);

    let first = p.id("demo");
    break_revenue(&p);
    let out = p.run(&["verify", "out/model.xlsx", "--against", "demo", "--format", "json"]);
    assert_eq!(out.code, 4);
    let report = out.json();
    assert_eq!(report["recorded_model"], first.as_str());
    assert_eq!(report["version_mismatch"]["code"], "E_VERSION_MISMATCH");
    let cells: Vec<&str> = report["differences"].as_array().unwrap().iter().map(|d| d["cell"].as_str().unwrap()).collect();
    assert!(cells.contains(&"Workings!C7") && cells.contains(&"Meta!C3"), "{cells:?}");
}

#[test]
fn verify_missing_file_is_io_error() {
    let p = Project::demo(true);
    let out = p.run(&["verify", "nope.xlsx", "--against", "demo"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("E_IO"));
}

#[test]
fn store_flag_and_environment_override_project() {
    let p = Project::demo(true);
    let other = tempfile::tempdir().unwrap();
    let store = other.path().join("s");
    let out = p.run(&["init", "--store", store.to_str().unwrap()]);
    assert_eq!(out.code, 0);
    assert_eq!(p.run(&["refs", "--store", store.to_str().unwrap()]).stdout, "");

    let o = std::process::Command::new(env!("CARGO_BIN_EXE_ringforge"))
        .current_dir(p.dir.path())
        .env("RINGFORGE_STORE", &store)
        .args(["status", "demo"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("E_UNKNOWN_REF"));
}

#[test]
fn missing_store_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_ringforge"))
        .current_dir(dir.path())
        .env_remove("RINGFORGE_STORE")
        .args(["status", "demo"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("E_NO_STORE"));
}

#[test]
fn ids_work_where_refs_do() {
    let p = Project::demo(true);
    let id = p.id("demo");
    let out = p.run(&["run", &id, "--scenario", "Base"]);
    assert_eq!(out.code, 0);
    assert_eq!(p.run(&["status", &id[..12]]).code, 1);
}
