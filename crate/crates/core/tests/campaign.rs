use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use tabu_design::campaign::{check, run_campaign, trace, Payload, Problem, RunConfig};
use tabu_design::fourbar::{run1_target, FourBar, Pairing, PrecisionPath, SynthesisObjective};
use tabu_design::hydraulic::{PlantParams, TransmissionDesign, TransmissionObjective};
use tabu_design::output::round_g9;
use tabu_design::search::Objective;

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn fourbar_config(out: &Path, budget: usize) -> RunConfig {
    let mut cfg =
        RunConfig { problem: Problem::Fourbar, trials: 3, seed: 7, out: out.to_path_buf(), ..Default::default() };
    cfg.search.insert("budget".into(), budget.into());
    cfg
}

#[test]
fn same_seed_gives_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_campaign(&fourbar_config(&a, 800)).unwrap();
    let mut cfg = fourbar_config(&b, 800);
    cfg.workers = Some(1);
    run_campaign(&cfg).unwrap();
    let (fa, fb) = (read_dir(&a), read_dir(&b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(bytes == &fb[name], "{name} differs");
    }

    let c = tmp.path().join("c");
    let mut cfg = fourbar_config(&c, 800);
    cfg.seed = 8;
    run_campaign(&cfg).unwrap();
    assert_ne!(fa["report.csv"], read_dir(&c)["report.csv"]);
}

#[test]
fn fourbar_artifacts_and_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run_campaign(&fourbar_config(tmp.path(), 600)).unwrap();
    let files = read_dir(tmp.path());
    for name in ["report.csv", "report.txt", "target.csv"] {
        assert!(files.contains_key(name), "{name}");
    }
    let target = PrecisionPath::read_csv(tmp.path().join("target.csv")).unwrap();
    assert_eq!(target.len(), 12);
    let obj = SynthesisObjective::new(run1_target(), Pairing::Cyclic);

    let mut csv = csv::Reader::from_path(tmp.path().join("report.csv")).unwrap();
    let header: Vec<String> = csv.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["trial", "a12", "a23", "a34", "a41", "a25", "alpha_deg", "obfn", "n_evals"]);
    let rows: Vec<Vec<f64>> = csv.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for (i, row) in rows.iter().enumerate() {
        let best = report.rows[i].outcome.as_ref().unwrap();
        assert_eq!(row[0] as usize, i);
        assert_eq!(&row[1..7], &best.design[..]);
        // the reported obfn is the re-evaluated design, rounded to 9 digits
        assert_eq!(round_g9(obj.evaluate(&row[1..7]).unwrap().value), row[7]);
        assert_eq!(row[8] as usize, best.evaluations);
        assert!(best.evaluations <= 600);

        assert!(files.contains_key(&format!("trial_{i}_convergence.csv")));
        let json: serde_json::Value = serde_json::from_slice(&files[&format!("trial_{i}_best.json")]).unwrap();
        assert_eq!(json["trial"], i);
        assert_eq!(json["seed"], 7 + i as u64);
        assert_eq!(json["n_evals"], best.evaluations);
        let m: FourBar = serde_json::from_value(json["design"].clone()).unwrap();
        assert_eq!(m.to_design(), best.design);
        // the best file is itself a valid payload
        let payload = Payload::parse(std::str::from_utf8(&files[&format!("trial_{i}_best.json")]).unwrap()).unwrap();
        assert_eq!(payload, Payload::Mechanism(m));
        let path = format!("trial_{i}_path.csv");
        if check(&payload).unwrap().feasible {
            let lines = std::str::from_utf8(&files[&path]).unwrap().lines().count();
            assert_eq!(lines, 361);
        } else {
            assert!(!files.contains_key(&path));
            assert!(json["note"].is_string());
        }
    }
    let table = fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    assert!(table.starts_with("RUN"));
    assert!(table.contains("best run: "));
    assert!(table.contains("median obfn: "));
}

#[test]
fn convergence_file_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    run_campaign(&fourbar_config(tmp.path(), 500)).unwrap();
    let mut r = csv::Reader::from_path(tmp.path().join("trial_0_convergence.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["eval_index", "best_obfn"]);
    let rows: Vec<(usize, f64)> = r.deserialize().map(|x| x.unwrap()).collect();
    assert!(!rows.is_empty());
    for w in rows.windows(2) {
        assert!(w[1].0 > w[0].0 && w[1].1 < w[0].1);
    }
}

#[test]
fn hydraulic_campaign_writes_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        problem: Problem::Hydraulic,
        trials: 2,
        seed: 3,
        out: tmp.path().to_path_buf(),
        ..Default::default()
    };
    cfg.search.insert("budget".into(), 40.into());
    let report = run_campaign(&cfg).unwrap();
    let obj = TransmissionObjective::default();
    for (i, row) in report.rows.iter().enumerate() {
        let best = row.outcome.as_ref().unwrap();
        assert!(best.evaluations <= 40);
        assert_eq!(best.obfn, round_g9(obj.evaluate(&best.design).unwrap().value));
        let text = fs::read_to_string(tmp.path().join(format!("trial_{i}_trajectory.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,omega_desired_rpm,omega_actual_rpm,Qp_lpm,Qrv_lpm,Ps_bar,Pm_bar,u");
        assert_eq!(lines.count(), 4001);
    }
    let header = fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    assert!(header.starts_with("trial,pump_size,motor_size,integral_gain,obfn,n_evals\n"));
}

#[test]
fn config_file_paths_resolve_against_its_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("cfg");
    fs::create_dir(&dir).unwrap();
    run1_target().write_csv(dir.join("pts.csv")).unwrap();
    fs::write(
        dir.join("run.json"),
        r#"{"problem":"fourbar","trials":1,"target":"pts.csv","out":"results","search":{"budget":50}}"#,
    )
    .unwrap();
    let cfg = RunConfig::from_file(dir.join("run.json")).unwrap();
    assert_eq!(cfg.out, dir.join("results"));
    run_campaign(&cfg).unwrap();
    assert!(dir.join("results/report.csv").exists());

    fs::write(dir.join("bad.json"), r#"{"problem":"fourbar","trails":1}"#).unwrap();
    assert!(RunConfig::from_file(dir.join("bad.json")).is_err());
}

#[test]
fn trace_refuses_infeasible_designs_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("path.csv");
    let double_rocker =
        Payload::Mechanism(FourBar { a12: 100.0, a23: 40.0, a34: 100.0, a41: 60.0, a25: 20.0, alpha_deg: 0.0 });
    assert!(!check(&double_rocker).unwrap().feasible);
    assert!(trace(&double_rocker, None, &PlantParams::default(), &out).is_err());
    assert!(!out.exists());

    let oversized =
        Payload::Transmission(TransmissionDesign { pump_size: 600.0, motor_size: 740.0, integral_gain: 50.0 });
    let r = check(&oversized).unwrap();
    assert!(!r.feasible && r.message.contains("pump_size"));
    assert!(trace(&oversized, None, &PlantParams::default(), &out).is_err());
    assert!(!out.exists());
}
