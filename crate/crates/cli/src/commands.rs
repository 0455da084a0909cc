use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::json;

use ringforge_core::assemble::{assemble_id, upgrade_child};
use ringforge_core::codegen::{layout, period_dates, placements, GenerationInfo, FIRST_PERIOD_COL, SINGLE_COL};
use ringforge_core::demo;
use ringforge_core::diagnostics::{diagnose, gate_generation};
use ringforge_core::emit::{canonical_grid, databook, spec_document, verify, xlsx_bytes};
use ringforge_core::eval::{evaluate, run_checks, Value};
use ringforge_core::model::{diff, WidthClass};
use ringforge_core::store::{effective_status, AuditEntry, Repository, Store};
use ringforge_core::{Diagnostic, Element, Error, Result, Status};

use crate::args::{Command, Format};
use crate::exit;
use crate::project::Project;

pub struct Env {
    pub project: Project,
    pub store_flag: Option<PathBuf>,
    pub now: DateTime<Utc>,
    pub format: Format,
}

impl Env {
    fn store(&self) -> Result<Store> {
        Store::open(self.project.store_dir(self.store_flag.as_deref()))
    }

    fn author(&self, flag: Option<String>) -> Result<String> {
        flag.or_else(|| self.project.author.clone())
            .ok_or_else(|| Error::Format("no author: pass --author or set \"author\" in project.json".into()))
    }

    fn json(&self) -> bool {
        self.format == Format::Json
    }

    fn emit(&self, value: serde_json::Value) {
        println!("{}", serde_json::to_string_pretty(&value).expect("json values serialize"));
    }
}

fn time(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn run(env: &Env, command: Command) -> Result<i32> {
    match command {
        Command::Init { demo, author, check_by } => init(env, demo, author, check_by),
        Command::Save { file, parent, author } => save(env, &file, parent.as_deref(), author),
        Command::Checkoff { reference, by } => checkoff(env, &reference, &by),
        Command::Status { reference } => status(env, &reference),
        Command::Log { reference } => log(env, &reference),
        Command::Diff { from, to } => diff_cmd(env, &from, &to),
        Command::Diagnose { reference, strict } => diagnose_cmd(env, &reference, strict),
        Command::Generate { model, out, epoch, strict } => generate(env, &model, out.as_deref(), epoch, strict),
        Command::Run { model, scenario } => run_cmd(env, &model, &scenario),
        Command::Verify { file, against } => verify_cmd(env, &file, &against),
        Command::Upgrade { parent, child_old, child_new, author } => {
            upgrade(env, &parent, &child_old, &child_new, author)
        }
        Command::Refs => refs(env),
    }
}

fn init(env: &Env, with_demo: bool, author: Option<String>, check_by: Option<String>) -> Result<i32> {
    let mut project = env.project.clone();
    if !project.dir.join(crate::project::FILE).exists() || author.is_some() {
        if author.is_some() {
            project.author = author;
        }
        project.save()?;
    }
    let root = project.store_dir(env.store_flag.as_deref());
    let store = Store::init(&root)?;
    println!("store at {}", root.display());
    if with_demo {
        let who = project.author.clone().unwrap_or_else(|| "demo".into());
        let ids = demo::install(&store, &who, env.now, check_by.as_deref())?;
        for (name, id) in [("Sales", &ids.sales), ("Cash", &ids.cash), ("demo_skeleton", &ids.skeleton), ("demo", &ids.model)] {
            println!("{name}\t{id}");
        }
    }
    Ok(exit::OK)
}

fn save(env: &Env, file: &Path, parent: Option<&str>, author: Option<String>) -> Result<i32> {
    let store = env.store()?;
    let author = env.author(author)?;
    let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    let element = Element::from_json_resolving(&text, |name| store.resolve(name))?;
    let id = match parent {
        Some(p) => store.save_derived(&store.resolve(p)?, &element, &author, env.now)?,
        None => store.put_new(&element, &author, env.now)?,
    };
    store.set_ref(element.name(), &id)?;
    if env.json() {
        env.emit(json!({ "id": id, "ref": element.name() }));
    } else {
        println!("{id}");
    }
    Ok(exit::OK)
}

fn checkoff(env: &Env, reference: &str, by: &str) -> Result<i32> {
    let store = env.store()?;
    let id = store.check_off(&store.resolve(reference)?, by, env.now)?;
    println!("{id} {}", Status::Ok.badge());
    Ok(exit::OK)
}

fn status(env: &Env, reference: &str) -> Result<i32> {
    let store = env.store()?;
    let id = store.resolve(reference)?;
    let meta = store.meta(&id)?;
    let effective = effective_status(&store, &id)?;
    if env.json() {
        env.emit(json!({
            "id": id,
            "kind": meta.kind,
            "status": meta.status,
            "effective": effective,
            "check_record": meta.check_record,
        }));
        return Ok(exit::OK);
    }
    println!("{} {}", meta.kind, id);
    println!("own\t{}", meta.status.badge());
    println!("effective\t{}", effective.badge());
    if let Some(c) = &meta.check_record {
        println!("checked\t{} at {}", c.checked_by, time(c.checked_at));
    }
    Ok(exit::OK)
}

fn audit_text(e: &AuditEntry) -> String {
    let from = e.from_version.as_ref().map(|v| v.short().to_string()).unwrap_or_else(|| "(new)".into());
    let mut out = format!(
        "{} -> {}  {}  {}  {}\n",
        from,
        e.to_version.short(),
        time(e.timestamp),
        e.author,
        e.resulting_status.badge()
    );
    if e.from_version.as_ref() == Some(&e.to_version) && e.changes.is_empty() {
        out.push_str("    checked off\n");
    }
    for c in &e.changes.entries {
        out.push_str(&format!("    {}{}\n", if c.material { "* " } else { "  " }, c.path));
    }
    out
}

fn log(env: &Env, reference: &str) -> Result<i32> {
    let store = env.store()?;
    let audit = store.audit_log(&store.resolve(reference)?)?;
    if env.json() {
        env.emit(serde_json::to_value(&audit)?);
    } else {
        for e in &audit {
            print!("{}", audit_text(e));
        }
    }
    Ok(exit::OK)
}

fn diff_cmd(env: &Env, from: &str, to: &str) -> Result<i32> {
    let store = env.store()?;
    let a = store.raw_element(&store.resolve(from)?)?;
    let b = store.raw_element(&store.resolve(to)?)?;
    let changes = diff(&a, &b)?;
    if env.json() {
        env.emit(serde_json::to_value(&changes)?);
        return Ok(exit::OK);
    }
    let show = |s: &Option<String>| s.clone().unwrap_or_else(|| "(absent)".into());
    for c in &changes.entries {
        let tag = if c.material { "material" } else { "non-material" };
        println!("{}\t{}\t{} -> {}", tag, c.path, show(&c.old), show(&c.new));
    }
    Ok(exit::OK)
}

fn print_diagnostics(env: &Env, diags: &[Diagnostic]) {
    if env.json() {
        env.emit(json!({ "diagnostics": diags }));
    } else {
        for d in diags {
            println!("{d}");
        }
    }
}

fn diagnose_cmd(env: &Env, reference: &str, strict: bool) -> Result<i32> {
    let store = env.store()?;
    let diags = diagnose(&store.resolve(reference)?, &store)?;
    print_diagnostics(env, &diags);
    Ok(if diags.iter().any(Diagnostic::is_error) {
        exit::BLOCKED
    } else if strict && !diags.is_empty() {
        exit::FAILURE
    } else {
        exit::OK
    })
}

fn generate(env: &Env, model: &str, out: Option<&Path>, epoch: Option<DateTime<Utc>>, strict: bool) -> Result<i32> {
    let store = env.store()?;
    let id = store.resolve(model)?;
    let diags = diagnose(&id, &store)?;
    if let Err(blocking) = gate_generation(&diags, strict) {
        eprintln!("generation refused: {} blocking diagnostic(s)", blocking.len());
        print_diagnostics(env, &blocking);
        return Ok(exit::BLOCKED);
    }
    let effective = effective_status(&store, &id)?;
    if effective != Status::Ok {
        eprintln!("warning: effective status is {}; the model has unchecked changes", effective.badge());
    }
    let a = assemble_id(&id, &store).map_err(Error::Assembly)?;
    let at = epoch.unwrap_or(env.now);
    let ir = layout(&a, &GenerationInfo::at(at));
    let dir = env.project.out_dir(out);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let files: [(&str, Vec<u8>); 4] = [
        ("model.xlsx", xlsx_bytes(&ir, at)?),
        ("model.grid.json", canonical_grid(&ir)),
        ("databook.md", databook(&id, &store)?.into_bytes()),
        ("spec.md", spec_document(&id, &store)?.into_bytes()),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    if env.json() {
        env.emit(json!({ "model": id, "effective_status": effective, "files": written }));
    } else {
        println!("model {id}");
        println!("effective status {}", effective.badge());
        for p in &written {
            println!("wrote {}", p.display());
        }
    }
    Ok(exit::OK)
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Blank => String::new(),
        other => other.to_string(),
    }
}

fn run_cmd(env: &Env, model: &str, scenario: &str) -> Result<i32> {
    let store = env.store()?;
    let id = store.resolve(model)?;
    let a = assemble_id(&id, &store).map_err(Error::Assembly)?;
    let ir = layout(&a, &GenerationInfo::at(env.now));
    let vals = evaluate(&ir, scenario)?;
    let checks = run_checks(&ir, &vals);
    let placed = placements(&a);
    let dates: Vec<String> = period_dates(&a.gen_params).iter().map(|d| d.to_string()).collect();

    let mut rows = Vec::new();
    for (i, r) in a.rows.iter().enumerate() {
        let Some(p) = placed[i].as_ref().filter(|_| r.carries_value()) else { continue };
        let (single, periods) = if r.width == WidthClass::SingleColumn {
            (vals.get(&p.sheet, p.row, SINGLE_COL), vec![Value::Blank; dates.len()])
        } else {
            let ps = (0..dates.len() as u32).map(|k| vals.get(&p.sheet, p.row, FIRST_PERIOD_COL + k)).collect();
            (Value::Blank, ps)
        };
        rows.push((r.path.clone(), single, periods));
    }

    if env.json() {
        let rows: Vec<_> = rows
            .iter()
            .map(|(path, single, periods)| json!({ "row": path, "value": single, "periods": periods }))
            .collect();
        env.emit(json!({ "model": id, "scenario": scenario, "dates": dates, "rows": rows, "checks": checks }));
    } else {
        println!("row\tvalue\t{}", dates.join("\t"));
        for (path, single, periods) in &rows {
            let cells: Vec<String> = periods.iter().map(cell_text).collect();
            println!("{path}\t{}\t{}", cell_text(single), cells.join("\t"));
        }
        println!();
        println!("check\tall\t{}", dates.join("\t"));
        for c in &checks.checks {
            let cells: Vec<&str> = c
                .periods
                .iter()
                .map(|p| match p {
                    Some(true) => "TRUE",
                    Some(false) => "FALSE",
                    None => "ERROR",
                })
                .collect();
            println!("{}\t{}\t{}", c.name, if c.aggregate { "TRUE" } else { "FALSE" }, cells.join("\t"));
        }
        println!("AllChecks\t{}", if checks.all_checks { "TRUE" } else { "FALSE" });
    }
    Ok(if checks.all_checks { exit::OK } else { exit::CHECKS_FAILED })
}

fn verify_cmd(env: &Env, file: &Path, against: &str) -> Result<i32> {
    let store = env.store()?;
    let id = store.resolve(against)?;
    let bytes = fs::read(file).map_err(|e| Error::io(file, e))?;
    let report = verify(&bytes, &id, &store)?;
    let mismatch = report.version_mismatch();
    if env.json() {
        env.emit(json!({
            "clean": report.is_clean(),
            "model": report.model,
            "recorded_model": report.recorded_model,
            "version_mismatch": mismatch.as_ref().map(|e| json!({ "code": e.code(), "message": e.to_string() })),
            "differences": report.differences,
        }));
    } else {
        if let Some(e) = &mismatch {
            println!("{}: {e}", e.code());
        }
        for d in &report.differences {
            println!("{d}");
        }
        if report.is_clean() {
            println!("clean");
        } else {
            println!("{} cell(s) differ from regeneration", report.differences.len());
        }
    }
    Ok(if report.is_clean() { exit::OK } else { exit::TAMPERED })
}

fn upgrade(env: &Env, parent: &str, old: &str, new: &str, author: Option<String>) -> Result<i32> {
    let store = env.store()?;
    let author = env.author(author)?;
    let parent_id = store.resolve(parent)?;
    let element = store.raw_element(&parent_id)?;
    let (upgraded, discarded) = upgrade_child(&element, &store.resolve(old)?, &store.resolve(new)?, &store)?;
    let id = store.save_derived(&parent_id, &upgraded, &author, env.now)?;
    store.set_ref(upgraded.name(), &id)?;
    if env.json() {
        env.emit(json!({ "id": id, "discarded": discarded }));
    } else {
        for d in &discarded {
            println!("discarded\t{d}");
        }
        println!("{id}");
    }
    Ok(exit::OK)
}

fn refs(env: &Env) -> Result<i32> {
    let store = env.store()?;
    for (name, id) in store.refs()? {
        println!("{name}\t{id}");
    }
    Ok(exit::OK)
}
