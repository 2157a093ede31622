use std::process::{Command, Output};

fn twistlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_code(args: &[&str]) -> String {
    let o = twistlab(args);
    assert!(!o.status.success(), "{args:?} should fail");
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    err.split(':').next().unwrap().to_string()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("twistlab-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn fegroup_verify_lists_twelve_maps() {
    let o = twistlab(&["fegroup", "verify"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 13);
    assert!(lines[0].starts_with("1: (s, w) ↦ (s, w)"));
    assert!(lines[12].contains("order = 12") && !lines[12].contains("false"));
}

#[test]
fn region_pipeline_covers_box() {
    let text = stdout(&twistlab(&["region", "pipeline"]));
    for stage in ["R1: ", "R2: ", "R3: ", "final: "] {
        assert!(text.lines().any(|l| l.starts_with(stage)), "missing {stage}");
    }
    assert!(text.trim_end().ends_with("covered = true"));
    let j: serde_json::Value = serde_json::from_slice(&twistlab(&["region", "boundary", "--format", "json"]).stdout).unwrap();
    assert_eq!(j["tau_at_half"], "119/124");
    assert_eq!(j["holds"], true);
}

#[test]
fn symbols_table() {
    let text = stdout(&twistlab(&["symbols", "--d", "15,7", "--n", "11"]));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "D,N,chi_D_N,chi_N_D,eta,m_num,m_den,E,D1");
    assert_eq!(rows[1], "15.0,11.0,1.0,-1.0,-1.0,1.0,1.0,15.0,1.0");
    assert_eq!(rows.len(), 3);
}

#[test]
fn error_paths_are_single_coded_lines() {
    assert_eq!(error_code(&["bogus"]), "E_USAGE");
    assert_eq!(error_code(&["symbols", "--d", "x", "--n", "3"]), "E_USAGE");
    assert_eq!(error_code(&["suite", "c99"]), "E_USAGE");
    assert_eq!(error_code(&["symbols", "--d", "4", "--n", "3"]), "E_DOMAIN");
    assert_eq!(error_code(&["--config", "/nonexistent/twistlab.cfg", "fegroup", "verify"]), "E_IO");
    let bad = scratch("bad.cfg");
    std::fs::write(&bad, "precision_bits = 64\n").unwrap();
    assert_eq!(error_code(&["--config", bad.to_str().unwrap(), "fegroup", "verify"]), "E_CONFIG");
    std::fs::write(&bad, "field = Q(sqrt5)\n").unwrap();
    assert_eq!(error_code(&["--config", bad.to_str().unwrap(), "fegroup", "verify"]), "E_UNSUPPORTED");
    assert_eq!(error_code(&["residue", "dedekind", "--rho", "7"]), "E_CONFIG");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = scratch("det.cfg");
    std::fs::write(&cfg, "r_range = 3..400\nprobe_ladder = 100, 1000\ns_set = 0.5, 0.75\n").unwrap();
    let c = cfg.to_str().unwrap();
    for args in [
        vec!["--config", c, "exp", "determination", "--r0", "101"],
        vec!["--config", c, "residue", "probe"],
        vec!["--config", c, "residue", "report", "--x", "300"],
        vec!["--config", c, "--format", "json", "residue", "scan"],
    ] {
        let a = twistlab(&args);
        let b = twistlab(&args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        // the worker count is echoed in the header; the data rows must not change
        let workers: Vec<&str> = args.iter().copied().chain(["--workers", "3"]).collect();
        let rows = |o: &Output| stdout(o).lines().filter(|l| !l.starts_with('#') && !l.contains("provenance")).map(String::from).collect::<Vec<_>>();
        assert_eq!(rows(&twistlab(&workers)), rows(&a));
    }
}

#[test]
fn determination_flags_only_the_perturbed_prime() {
    let text = stdout(&twistlab(&["exp", "determination", "--r0", "101"]));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let det = header.iter().position(|&c| c == "detected").unwrap();
    let flag = header.iter().position(|&c| c == "flag").unwrap();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    let detected: Vec<f64> = rows.iter().filter(|r| r[det] == 1.0).map(|r| r[0]).collect();
    assert_eq!(detected, vec![101.0]);
    assert!(rows.iter().all(|r| r[flag] == 0.0));
}

#[test]
fn identity_check_and_output_file() {
    let out = scratch("identity.csv");
    let o = twistlab(&["dds", "identity-check", "--point", "2.5", "2.5", "--cutoff", "300", "--euler-bound", "3000", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().last().unwrap();
    let residual: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(residual < 1e-3, "{row}");
}

#[test]
fn plot_data_is_whitespace_columns() {
    let text = stdout(&twistlab(&["residue", "scan", "--plot-data", "--step", "0.5"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# a Rr");
    assert_eq!(lines.len(), 10);
    assert!(lines[1..].iter().all(|l| l.split(' ').count() == 2));
}

#[test]
fn suite_reports_each_criterion() {
    let o = twistlab(&["suite", "1", "c3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("PASS  1 ") && lines[1].starts_with("PASS  3 "));
}

#[test]
fn config_echo_reparses_to_the_same_config() {
    use twistlab_cli::config::ExperimentConfig;
    for text in [
        "",
        "x_ladder = 1e3, 3e3\nweight_tol = 0.0001\ntol.switching = 1e-5\n",
        "coeff_cache = /tmp/somewhere\nr_range = 101..101\nmax_coefficients = 1000\nworkers = 4\ns_set = 0.6,0.75,1\n",
    ] {
        let a = ExperimentConfig::parse(text).unwrap();
        let echo = a.to_text();
        let b = ExperimentConfig::parse(&echo).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.to_text(), echo);
    }
}
