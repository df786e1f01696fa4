use std::path::Path;
use std::process::{Command, Output};

use cpmeq_sim::{read_records, write_records, BerRecord, CSV_HEADER};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpmeq-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sanity_preset_is_error_free() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sanity.csv");
    let res = sim(&["--preset", "sanity", "--out", path_str(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let recs = read_records(&out).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].bit_errors, 0);
    assert_eq!(recs[0].ber, 0.0);
    assert_eq!(recs[0].frames, 20);
    assert_eq!(recs[0].info_bits, 20 * 506);
}

#[test]
fn identical_runs_give_identical_csv_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = ["--ebn0", "4", "--channel", "tu6", "--outer", "20", "--inner", "1", "--frames", "500", "--seed", "7"];
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let mut args = common.to_vec();
        args.extend(["--threads", threads, "--out", path_str(path)]);
        let res = sim(&args);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.starts_with(CSV_HEADER));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["--preset", "fig9"][..],
        &["--no-such-flag"][..],
        &["--outer", "x"][..],
        &["--frames", "0"][..],
        &["--channel", "nowhere"][..],
        &["--channel", "tu6", "--prefix", "4"][..],
    ] {
        let res = sim(args);
        assert_eq!(res.status.code(), Some(2), "{args:?}");
        assert!(!res.stderr.is_empty());
    }
}

#[test]
fn fig5_dump_lists_inner_sweep() {
    let res = sim(&["--preset", "fig5", "--dump-config"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    for ni in 1..=4 {
        assert!(text.contains(&format!("[tu6-ni{ni}]")));
        assert!(text.contains(&format!("schedule: outer=20 inner={ni}")));
    }
    assert!(text.contains("N_P=13"));
}

#[test]
fn multi_run_presets_write_one_file_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let res = sim(&["--preset", "fig6", "--frames", "1", "--outer", "1", "--ebn0", "inf", "--out", path_str(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for ni in 1..=4 {
        let recs = read_records(&dir.path().join(format!("f-proakis-c-ni{ni}.csv"))).unwrap();
        assert_eq!(recs.len(), ni);
        assert!(recs.iter().all(|r| r.bit_errors == 0));
    }
}

#[test]
fn channel_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("two.txt");
    std::fs::write(&prof, "kind: fixed\n# two equal taps\n0 0.7071067811865476\n3 0.7071067811865476\n").unwrap();
    let spec = format!("file:{}", path_str(&prof));
    let res = sim(&["--channel", &spec, "--ebn0", "inf", "--outer", "2", "--frames", "2"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let dump = String::from_utf8(sim(&["--channel", &spec, "--dump-config"]).stdout).unwrap();
    assert!(dump.contains("N_P=2"));
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let recs = vec![
        BerRecord::new(4.25, 1, 1, 3, 506, 1, 1, 0.0),
        BerRecord::new(f64::INFINITY, 2, 3, 7, 506, 123, 5, 1.0 / 3.0),
        BerRecord::new(-1.5, 20, 1, 1000, 506, 0, 0, 12.5),
    ];
    write_records(&recs, &out).unwrap();
    let mut back = read_records(&out).unwrap();
    back.sort_by(|a, b| a.ebn0_db.total_cmp(&b.ebn0_db));
    let mut want = recs.clone();
    want.sort_by(|a, b| a.ebn0_db.total_cmp(&b.ebn0_db));
    assert_eq!(back, want);
    assert!(write_records(&[], &out).is_err());
}

#[test]
fn gnuplot_helper_reads_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    write_records(&[BerRecord::new(4.0, 1, 1, 1, 506, 0, 0, 0.0)], &out).unwrap();
    let res = sim(&["gnuplot", path_str(&out), "--outer", "1"]);
    assert!(res.status.success());
    let script = String::from_utf8(res.stdout).unwrap();
    assert!(script.contains("set logscale y"));
    assert!(script.contains(path_str(&out)));
}
