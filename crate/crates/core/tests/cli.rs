//! End-to-end runs of the `rwglasso` binary.

use std::path::Path;
use std::process::{Command, Output};

use reweighted_glasso::SymMatrix;

fn rwglasso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwglasso")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let (prec, cov) = (dir.join("prec.txt"), dir.join("cov.txt"));
    let out = rwglasso(&[
        "generate", "--dim", "8", "--sparsity", "0.8", "--samples", "300", "--seed", "4",
        "--out-prec", p(&prec), "--out-cov", p(&cov),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (prec, cov)
}

#[test]
fn generate_solve_grid_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (prec, cov) = generate(dir.path());
    assert_eq!(SymMatrix::read_file(&prec).unwrap().dim(), 8);

    let (theta, trace) = (dir.path().join("theta.txt"), dir.path().join("trace.csv"));
    let out = rwglasso(&[
        "solve", "--cov", p(&cov), "--solver", "prox-newton", "--penalty", "mcp", "--gamma", "0.1",
        "--reweightings", "3", "--inner-iters", "4", "--out", p(&theta), "--trace", p(&trace),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(reweighted_glasso::cholesky(&SymMatrix::read_file(&theta).unwrap()).is_ok());
    let text = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,i,psi,step,sq_step_norm,active_set,wall_ms");
    assert_eq!(lines.len(), 1 + 3 * 4);
    assert!(lines[1].starts_with("0,0,"));

    // theta to stdout
    let out = rwglasso(&["solve", "--cov", p(&cov), "--solver", "gauss-seidel", "--penalty", "l1", "--gamma", "0.2"]);
    assert_eq!(code(&out), 0);
    let parsed = SymMatrix::parse_text(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(parsed.dim(), 8);

    let grid = dir.path().join("grid.csv");
    let out = rwglasso(&[
        "grid", "--cov", p(&cov), "--truth", p(&prec), "--penalty", "log-sum", "--gammas", "0.05,0.1,0.2",
        "--reweightings", "3", "--inner-iters", "5", "--out", p(&grid),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&grid).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().any(|l| l.contains(",true,")));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"inner_iters_grid": [2], "reweightings": 3, "gamma_grid": [0.1, 0.3],
            "penalties": ["l1", {"kind": "log-sum", "epsilon": 0.5}], "solver_kinds": ["prox-grad"],
            "data": {"dim": 6, "sparsity": 0.7, "n_samples": 100, "seed": 1}}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = rwglasso(&["sweep", "--config", p(&cfg), "--out", p(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("prox-grad,l1,2,6,"));
    assert!(lines[2].starts_with("prox-grad,log-sum,2,6,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cov) = generate(dir.path());

    // configuration
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"inner_iters_grid": [], "data": {"dim": 5, "sparsity": 0.5, "n_samples": 10}}"#).unwrap();
    assert_eq!(code(&rwglasso(&["sweep", "--config", p(&bad)])), 2);
    std::fs::write(&bad, r#"{"inner_iters_grid": [1], "surprise": 1}"#).unwrap();
    assert_eq!(code(&rwglasso(&["sweep", "--config", p(&bad)])), 2);
    assert_eq!(code(&rwglasso(&["solve", "--cov", p(&cov), "--gamma", "-1"])), 2);
    assert_eq!(code(&rwglasso(&["solve", "--cov", p(&cov), "--gamma", "0.1", "--penalty", "scad"])), 2);
    assert_eq!(code(&rwglasso(&["generate", "--dim", "1", "--sparsity", "0.5", "--out-prec", "a", "--out-cov", "b"])), 2);

    // data
    let degenerate = dir.path().join("degenerate.txt");
    std::fs::write(&degenerate, "2\n0 0\n0 1\n").unwrap();
    // the diagonal starting point needs a positive diagonal
    assert_eq!(code(&rwglasso(&["solve", "--cov", p(&degenerate), "--gamma", "0.1", "--no-diagonal-penalty"])), 3);
    std::fs::write(&degenerate, "2\n-1 0\n0 1\n").unwrap();
    assert_eq!(code(&rwglasso(&["solve", "--cov", p(&degenerate), "--gamma", "0.1"])), 3);
    let garbage = dir.path().join("garbage.txt");
    std::fs::write(&garbage, "2\n1 x\n0 1\n").unwrap();
    assert_eq!(code(&rwglasso(&["solve", "--cov", p(&garbage), "--gamma", "0.1"])), 3);
    assert_eq!(code(&rwglasso(&["solve", "--cov", p(&dir.path().join("missing")), "--gamma", "0.1"])), 3);

    // solver
    let out = rwglasso(&[
        "solve", "--cov", p(&cov), "--solver", "prox-grad", "--penalty", "l1", "--gamma", "0.1",
        "--initial-step", "1e6", "--max-backtracks", "0",
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}
