use std::path::Path;
use std::process::{Command, Output};

fn triqmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triqmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn points_csv() {
    let o = triqmc(&["points", "--n-points", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,x,y,nu");
    assert_eq!(lines.len(), 5);
    // Centroids of the four level-one cells of the unit triangle.
    let xs: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let want = [1.0 / 3.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
    for (x, w) in xs.iter().zip(want) {
        assert!((x - w).abs() < 1e-15);
    }
}

#[test]
fn points_to_file_on_custom_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = triqmc(&[
        "points",
        "--n-points",
        "64",
        "--gen",
        "pascal",
        "--triangle",
        "1,1,3,1,2,4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(read(&out).lines().count(), 65);
}

#[test]
fn user_generator_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("gen.txt");
    std::fs::write(&g, "10\n01\n\n11\n01\n").unwrap();
    let spec = format!("file:{}", g.display());
    let o = triqmc(&["points", "--n-points", "4", "--gen", &spec]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(&g, "10\n11\n\n10\n01\n").unwrap();
    let o = triqmc(&["points", "--n-points", "4", "--gen", &spec]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quality_csv() {
    let o = triqmc(&["quality", "--m-range", "1..6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,n,mu1_min,v_min,t,bound_holds"));
    assert_eq!(lines.nth(3), Some("4,4,3,3,2,true"));
}

#[test]
fn walsh_decay_csv() {
    let o = triqmc(&["walsh-decay", "--function", "exp-sum", "--n", "2", "--parts"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("K_encoding,v_of_K,coeff,bound,ratio"));
    assert_eq!(lines.count(), 15);
    assert!(text.contains("\n10/00,1,"));
    let o = triqmc(&["walsh-decay", "--function", "poly:1,1,0", "--n", "1"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("10,1,0.1666666666666666"), "{row}");
}

#[test]
fn walsh_decay_rejects_large_levels() {
    let o = triqmc(&["walsh-decay", "--function", "constant", "--n", "11"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn walsh_decay_fails_with_a_tiny_norm() {
    let o = triqmc(&["walsh-decay", "--function", "exp-sum", "--n", "2", "--norm", "1e-6"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn converge_csv() {
    let o = triqmc(&["converge", "--function", "affine", "--m-range", "2..6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,N,qmc,exact,abs_error,bound_m2_over_2m");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("2,4,"));
    let o = triqmc(&["converge", "--m-range", "3..5", "--non-powers"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l.starts_with("3,11,")));
}

#[test]
fn verify_selected_criteria() {
    let o = triqmc(&["verify", "--criteria", "2,9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.starts_with("[PASS]")));
    let o = triqmc(&["verify", "--criteria", "12"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# defaults\ngen = pascal\nn-points = 8\nm-range = 1..3\n").unwrap();
    let c = cfg.to_str().unwrap();
    let via_config = triqmc(&["points", "--config", c]);
    assert!(via_config.status.success(), "{}", String::from_utf8_lossy(&via_config.stderr));
    let direct = triqmc(&["points", "--gen", "pascal", "--n-points", "8"]);
    assert_eq!(stdout(&via_config), stdout(&direct));
    let overridden = triqmc(&["points", "--config", c, "--n-points", "2"]);
    assert_eq!(stdout(&overridden).lines().count(), 3);
}

#[test]
fn bad_input_exits_with_usage_errors() {
    assert!(!triqmc(&["points"]).status.success());
    let o = triqmc(&["points", "--n-points", "4", "--triangle", "0,0,1,1,2,2"]);
    assert!(!o.status.success());
    let o = triqmc(&["points", "--n-points", "4", "--gen", "sobol"]);
    assert_eq!(o.status.code(), Some(2));
}
