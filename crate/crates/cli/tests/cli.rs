//! End-to-end tests of the command line surface: mode dispatch, file
//! emission, byte stability, and the parallel/serial sweep identity.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn critcurve(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critcurve"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SIM_CFG: &str = "critcurve-config v1\n\
[run]\nmode = simulate\nseed = 7\n\
[grid]\nn = 1\nL = 60\nN = 256\n\
[system]\np = 2\nq = 2\neps = 0.01\n\
[time]\nt_max = 20\nh = 0.1\nsample_every = 5\n";

#[test]
fn simulate_emits_trace_and_rates_with_hash_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.cfg", SIM_CFG);
    let out = critcurve(&["simulate", "--config", &cfg, "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["run/trace.csv", "run/rates.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let first = text.lines().next().unwrap();
        assert!(
            first.starts_with("# critcurve ") && first.contains("config_sha256="),
            "{name} header: {first}"
        );
    }
    let trace = fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    let header = trace.lines().nth(2).unwrap();
    assert_eq!(
        header,
        "t,l2_ut,lq_ut,hs_ut,lp_v,l2_v,hs_v,lowfreq_energy,highfreq_energy"
    );
}

#[test]
fn zero_data_simulation_emits_zero_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.cfg",
        &SIM_CFG.replace("eps = 0.01", "eps = 0"),
    );
    let out = critcurve(&["simulate", "--config", &cfg, "--out", "z"], dir.path());
    assert!(out.status.success());
    let trace = fs::read_to_string(dir.path().join("z/trace.csv")).unwrap();
    for line in trace.lines().skip(3) {
        let fields: Vec<&str> = line.split(',').collect();
        for value in &fields[1..] {
            assert_eq!(*value, "0", "all norms must vanish: {line}");
        }
    }
}

#[test]
fn outputs_are_byte_stable_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.cfg", SIM_CFG);
    for pass in ["a", "b"] {
        let out = critcurve(&["simulate", "--config", &cfg, "--out", pass], dir.path());
        assert!(out.status.success());
    }
    for name in ["trace.csv", "rates.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn rates_mode_emits_predictions_without_fits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rates.cfg",
        "critcurve-config v1\n[grid]\nn = 1\nL = 200\nN = 2048\n[system]\np = 2\nq = 2\ns = 0.75\n",
    );
    let out = critcurve(&["rates", "--config", &cfg, "--out", "r"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rates = fs::read_to_string(dir.path().join("r/rates.csv")).unwrap();
    let mut rows = 0;
    for line in rates.lines().skip(2) {
        rows += 1;
        assert!(line.ends_with(",,,na"), "no fit columns expected: {line}");
    }
    assert_eq!(rows, 6);
    assert!(rates.contains("l2_ut,0.74"));
    assert!(rates.contains("l2_v,0.25"));
}

#[test]
fn sweep_parallel_matches_serial_and_svg_is_emitted() {
    let dir = tempfile::tempdir().unwrap();
    let body = "critcurve-config v1\n\
[grid]\nn = 1\nL = 30\nN = 128\n\
[system]\np = 2\nq = 2\neps = 0.05\n\
[time]\nt_max = 2\nh = 0.1\nsample_every = 2\n\
[sweep]\np_list = 1.5, 2.5\nq_list = 1.5, 2.5\n";
    let cfg = write_config(dir.path(), "sweep.cfg", body);
    let serial = critcurve(
        &["sweep", "--config", &cfg, "--out", "s1", "--jobs", "1"],
        dir.path(),
    );
    assert!(serial.status.success(), "{}", String::from_utf8_lossy(&serial.stderr));
    let parallel = critcurve(
        &["sweep", "--config", &cfg, "--out", "s4", "--jobs", "4", "--svg"],
        dir.path(),
    );
    assert!(parallel.status.success());
    let a = fs::read(dir.path().join("s1/sweep.csv")).unwrap();
    let b = fs::read(dir.path().join("s4/sweep.csv")).unwrap();
    assert_eq!(a, b, "parallel sweep must match serial row for row");
    let svg = fs::read_to_string(dir.path().join("s4/phase_diagram.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("</svg>"));
    assert!(!dir.path().join("s1/phase_diagram.svg").exists());
}

#[test]
fn blowup_scan_emits_the_r_table() {
    let dir = tempfile::tempdir().unwrap();
    let body = "critcurve-config v1\n\
[grid]\nn = 1\nL = 40\nN = 256\n\
[system]\np = 1.2\nq = 1.2\neps = 0.0001\n\
[time]\nt_max = 17\nh = 0.05\nsample_every = 5\n\
[blowup]\nr_list = 2, 4\n";
    let cfg = write_config(dir.path(), "scan.cfg", body);
    let out = critcurve(&["blowup-scan", "--config", &cfg, "--out", "b"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scan = fs::read_to_string(dir.path().join("b/blowup_scan.csv")).unwrap();
    assert!(scan.contains("R,I_R,J_R,rho1,rho2,lhs,rhs,ratio"));
    assert!(scan.contains("predicted_exponent="));
    let data_rows = scan.lines().filter(|l| l.starts_with('2') || l.starts_with('4')).count();
    assert_eq!(data_rows, 2);
}

#[test]
fn ineq_check_emits_ratio_rows() {
    let dir = tempfile::tempdir().unwrap();
    let body = "critcurve-config v1\n\
[run]\nseed = 11\n\
[grid]\nn = 1\nL = 3.14159\nN = 128\n\
[system]\np = 2\nq = 2\n\
[ineq]\ncount = 5\n";
    let cfg = write_config(dir.path(), "ineq.cfg", body);
    let out = critcurve(&["ineq-check", "--config", &cfg, "--out", "i"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("i/ineq.csv")).unwrap();
    // 12 presets x 5 samples plus two header lines
    assert_eq!(text.lines().count(), 2 + 12 * 5);
    assert!(text.contains("config,sample_seed,ratio"));

    // every preset must also satisfy its constraints on a 2D grid
    let body2 = body.replace("n = 1", "n = 2").replace("N = 128", "N = 32");
    let cfg2 = write_config(dir.path(), "ineq2.cfg", &body2);
    let out = critcurve(&["ineq-check", "--config", &cfg2, "--out", "i2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text2 = fs::read_to_string(dir.path().join("i2/ineq.csv")).unwrap();
    assert_eq!(text2.lines().count(), 2 + 12 * 5);
}

#[test]
fn linear_decay_mode_runs() {
    let dir = tempfile::tempdir().unwrap();
    let body = "critcurve-config v1\n\
[grid]\nn = 1\nL = 120\nN = 1024\n\
[system]\np = 2\nq = 2\n\
[time]\nt_max = 200\n\
[fit]\nt_lo = 50\nt_hi = 200\n";
    let cfg = write_config(dir.path(), "lin.cfg", body);
    let out = critcurve(&["linear-decay", "--config", &cfg, "--out", "l"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rates = fs::read_to_string(dir.path().join("l/rates.csv")).unwrap();
    assert!(rates.contains("l2_v,0.25,"));
    assert!(rates.contains("l2_ut,1.25,"));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();

    // bad exponent names the violated rule
    let bad = write_config(dir.path(), "bad.cfg", &SIM_CFG.replace("p = 2", "p = 0.9"));
    let out = critcurve(&["simulate", "--config", &bad, "--out", "x"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("min{p, q} > 1"));

    // unknown key is fail-closed with a hint
    let unknown = write_config(
        dir.path(),
        "unknown.cfg",
        &format!("{SIM_CFG}[system]\ndampingg = 1\n"),
    );
    let out = critcurve(&["simulate", "--config", &unknown, "--out", "x"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown key") && stderr.contains("nearest known key"), "{stderr}");

    // unknown mode lists the registry
    let cfg = write_config(dir.path(), "sim.cfg", SIM_CFG);
    let out = critcurve(&["paint", "--config", &cfg], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("available:"));

    // declared mode must match the requested one
    let out = critcurve(&["rates", "--config", &cfg, "--out", "x"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("declares mode"));
}
