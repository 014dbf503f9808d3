use std::path::Path;
use std::process::Command;

use lpcc_cli::bench::{run_bench, write_summary, BenchConfig};
use lpcc_cli::instance::{qp_instance_from, Instance};
use lpcc_cli::methods::TraceLine;
use lpcc_cli::records::read_records;
use lpcc_core::model::PointTriple;
use lpcc_core::qp::QpInstance;
use lpcc_core::Matrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lpcc"))
}

fn records(dir: &Path) -> Vec<lpcc_cli::records::RunRecord> {
    read_records(std::fs::File::open(dir.join("records.csv")).unwrap()).unwrap()
}

/// `min -½(x² - x)` on `[0, 1]`, started from the interior KKT point.
fn write_example_one(dir: &Path) {
    let qp = QpInstance::new(
        Matrix::from_vec(1, 1, vec![-1.0]).unwrap(),
        vec![0.5],
        Matrix::from_vec(2, 1, vec![1.0, -1.0]).unwrap(),
        vec![0.0, -1.0],
    )
    .unwrap();
    let mut inst = qp_instance_from("example-one", qp, 10.0).unwrap();
    // (x, s, λ) = (½, [½, ½], 0) in LPCC coordinates
    inst.file.start = Some(PointTriple::new(vec![0.5], vec![0.5, 0.5], vec![0.0, 0.0]));
    inst.write(&dir.join("example-one.json")).unwrap();
}

#[test]
fn two_by_two_sweep_writes_four_records_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchConfig::parse(
        r#"
        methods = ["pip:0.9", "fmip"]
        [budgets]
        time_limit = 20.0
        sub_time_limit = 20.0
        [[generate]]
        family = "stqp"
        n = [5]
        rho = [0.5]
        seeds = [1, 2]
        "#,
    )
    .unwrap();
    let recs = run_bench(&cfg, dir.path(), dir.path()).unwrap();
    assert_eq!(recs.len(), 4);
    // the CSV keeps 12 significant digits
    for (a, b) in records(dir.path()).iter().zip(&recs) {
        assert_eq!((&a.instance, &a.method, &a.status, &a.trace), (&b.instance, &b.method, &b.status, &b.trace));
        assert!((a.objective.unwrap() - b.objective.unwrap()).abs() <= 1e-11);
    }
    for r in &recs {
        assert!(r.objective.is_some(), "{r:?}");
        let trace = r.trace.as_ref().expect("both methods leave a trace");
        let text = std::fs::read_to_string(dir.path().join(trace)).unwrap();
        for line in text.lines() {
            let _: TraceLine = serde_json::from_str(line).unwrap();
        }
    }
    assert!(dir.path().join("instances/stqp-n5-rho0.5-s1.json").exists());
    assert!(dir.path().join("summary.tsv").exists());
}

#[test]
fn example_one_sweep_reaches_zero_with_pip_and_fmip() {
    let dir = tempfile::tempdir().unwrap();
    write_example_one(dir.path());
    std::fs::write(
        dir.path().join("bench.toml"),
        "methods = [\"pip:0.9\", \"fmip\", \"oracle\"]\ninstances = [\"example-one.json\"]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let st = bin()
        .arg("bench")
        .arg(dir.path().join("bench.toml"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let recs = records(&out);
    assert_eq!(recs.len(), 3);
    for r in &recs {
        assert!(r.objective.unwrap().abs() <= 1e-6, "{r:?}");
    }
}

#[test]
fn report_regeneration_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchConfig::parse(
        r#"
        methods = ["stationary", "pip:0.8", "fmip-w"]
        [budgets]
        time_limit = 10.0
        sub_time_limit = 10.0
        [[generate]]
        family = "qp"
        n = [3]
        m = [6]
        seeds = [4, 5]
        "#,
    )
    .unwrap();
    run_bench(&cfg, dir.path(), dir.path()).unwrap();
    let first = std::fs::read(dir.path().join("summary.tsv")).unwrap();

    let again = dir.path().join("again");
    std::fs::create_dir_all(&again).unwrap();
    write_summary(&again, &records(dir.path())).unwrap();
    assert_eq!(std::fs::read(again.join("summary.tsv")).unwrap(), first);

    let via_bin = dir.path().join("via-bin");
    std::fs::create_dir_all(&via_bin).unwrap();
    let st = bin()
        .arg("report")
        .arg(dir.path().join("records.csv"))
        .arg("--out")
        .arg(&via_bin)
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(std::fs::read(via_bin.join("summary.tsv")).unwrap(), first);
}

#[test]
fn empty_method_list_gives_a_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchConfig::parse("methods = []\n[[generate]]\nfamily = \"random\"\nn = [2]\nm = [3]\nk = [2]\nseeds = [1]\n").unwrap();
    assert!(run_bench(&cfg, dir.path(), dir.path()).unwrap().is_empty());
    let text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(text, "instance,method,status,objective,time_s,nodes,gap,trace\n");
}

#[test]
fn generated_files_solve_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("inv.json");
    let st = bin()
        .args(["generate", "invqp", "--m", "4", "--n", "2", "--seed", "7", "--perturbation", "0", "--out"])
        .arg(&file)
        .status()
        .unwrap();
    assert!(st.success());
    let inst = Instance::read(&file).unwrap();
    assert!(inst.file.start.is_some());

    let out = dir.path().join("runs");
    for method in ["oracle", "pip:0.7"] {
        let st = bin()
            .args(["solve", "--sub-time-limit", "10", "--method", method, "--instance"])
            .arg(&file)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
    }
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    // consistent inverse QPs have optimal value 0
    assert!(recs[0].objective.unwrap().abs() <= 1e-6, "{:?}", recs[0]);
    assert!(recs[1].objective.unwrap() >= recs[0].objective.unwrap() - 1e-6);

    let lp = dir.path().join("inv.lp");
    let st = bin().args(["solve", "--method", "fmip", "--export-lp"]).arg(&lp).arg("--instance").arg(&file).status().unwrap();
    assert!(st.success());
    assert!(std::fs::read_to_string(&lp).unwrap().contains("Minimize"));
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "methods = [\"pip:0.05\"]\n").unwrap();
    let st = bin().arg("bench").arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));
}
