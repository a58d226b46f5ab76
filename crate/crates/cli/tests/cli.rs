use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use nalgebra::DMatrix;
use robscatter::lab::{contaminate_cellwise, gen_correlation, CorrelationKind, TrueModel};
use robscatter::pipeline::{two_step, PipelineConfig};
use robscatter::rng::stream;
use robscatter_cli::output::EstimateOutput;
use robscatter_cli::table::{parse_table, read_table};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_robscatter"));
    c.env_remove(robscatter_cli::THREADS_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_csv(path: &Path, x: &DMatrix<f64>, header: bool) {
    let mut s = String::new();
    if header {
        s += &(1..=x.ncols()).map(|j| format!("c{}", j)).collect::<Vec<_>>().join(",");
        s.push('\n');
    }
    for i in 0..x.nrows() {
        s += &x.row(i).iter().map(|v| format!("{}", v)).collect::<Vec<_>>().join(",");
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let s0 = gen_correlation(p, CorrelationKind::Random, seed).unwrap();
    TrueModel::new(s0).unwrap().sample(n, &mut stream(seed, &[1]))
}

fn fixture(dir: &TempDir, name: &str, x: &DMatrix<f64>) -> PathBuf {
    let path = dir.path().join(name);
    write_csv(&path, x, true);
    path
}

fn estimate_json(dir: &Path) -> EstimateOutput {
    serde_json::from_str(&fs::read_to_string(dir.join("estimate.json")).unwrap()).unwrap()
}

#[test]
fn clean_estimate() {
    let tmp = TempDir::new().unwrap();
    let input = fixture(&tmp, "clean.csv", &gaussian(100, 10, 1));
    let out = tmp.path().join("out");
    let o = run(&["estimate", input.to_str().unwrap(), "-o", out.to_str().unwrap(), "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["estimate.json", "cell_flags.csv", "cases.csv", "timing.json"] {
        assert!(out.join(f).exists(), "{}", f);
    }
    let e = estimate_json(&out);
    assert!(e.converged);
    assert_eq!((e.n, e.p), (100, 10));
    assert_eq!(e.columns[0], "c1");
    assert!(e.filter.flagged_fraction < 0.05, "{}", e.filter.flagged_fraction);
    let heavy = e.weights.iter().filter(|&&w| w > 0.5).count();
    assert!(heavy >= 75, "{}", heavy);
    for j in 0..10 {
        for k in 0..10 {
            assert_eq!(e.sigma[j][k], e.sigma[k][j]);
        }
    }
    assert!(e.distances.iter().all(|d| d.unwrap() >= 0.0));
    let cases = fs::read_to_string(out.join("cases.csv")).unwrap();
    assert_eq!(cases.lines().count(), 101);
    assert!(cases.starts_with("row,observed,retained,weight,distance\n"));
    let flags = fs::read_to_string(out.join("cell_flags.csv")).unwrap();
    assert_eq!(flags.lines().count() - 1, e.filter.flagged_cells);
}

#[test]
fn output_round_trips_exactly() {
    let tmp = TempDir::new().unwrap();
    let mut x = gaussian(80, 4, 2);
    x[(3, 1)] = f64::NAN;
    let input = tmp.path().join("in.csv");
    let mut text = String::from("a,b,c,d\n");
    for i in 0..80 {
        let row: Vec<String> = (0..4)
            .map(|j| if x[(i, j)].is_nan() { "NA".into() } else { format!("{}", x[(i, j)]) })
            .collect();
        text += &row.join(",");
        text.push('\n');
    }
    fs::write(&input, text).unwrap();
    let out = tmp.path().join("out");
    let o = run(&["estimate", input.to_str().unwrap(), "-o", out.to_str().unwrap(), "--seed", "9", "--estimator", "gse"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read_table(&input, "NA").unwrap();
    assert!(!table.data.mask().get(3, 1));
    let cfg = PipelineConfig { seed: 9, estimator: robscatter::pipeline::EstimatorKind::Gse, ..PipelineConfig::default() };
    let direct = EstimateOutput::new(&table, &cfg, &two_step(&table.data, &cfg).unwrap());
    assert_eq!(estimate_json(&out), direct);
}

#[test]
fn absurd_row_gets_zero_weight() {
    let tmp = TempDir::new().unwrap();
    let mut x = gaussian(100, 5, 3);
    x.row_mut(17).fill(1e6);
    let input = fixture(&tmp, "bad.csv", &x);
    let out = tmp.path().join("out");
    let o = run(&["estimate", input.to_str().unwrap(), "-o", out.to_str().unwrap(), "--estimator", "gre"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e = estimate_json(&out);
    assert_eq!(e.weights[17], 0.0);
    assert!(e.distances[17].unwrap() > 1e6);
}

#[test]
fn parse_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("x.csv");
    fs::write(&input, "a,b,c\n1,2,3\n4,oops,6\n").unwrap();
    let o = run(&["estimate", input.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("row 2, column 2") && msg.contains("oops"), "{}", msg);
    let o = run(&["filter", input.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["estimate", tmp.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn too_few_cases() {
    let tmp = TempDir::new().unwrap();
    let input = fixture(&tmp, "small.csv", &gaussian(20, 10, 4));
    let o = run(&["estimate", input.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("estimator requires n > 2p"), "{}", stderr(&o));

    let input = fixture(&tmp, "medium.csv", &gaussian(30, 10, 4));
    let o = run(&["estimate", input.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: n = 30 is below 5p"), "{}", stderr(&o));
}

#[test]
fn degenerate_column_exits_3() {
    let tmp = TempDir::new().unwrap();
    let mut x = gaussian(60, 3, 5);
    x.column_mut(2).fill(1.0);
    let input = fixture(&tmp, "flat.csv", &x);
    let o = run(&["estimate", input.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bad_options_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let input = fixture(&tmp, "clean.csv", &gaussian(60, 3, 6));
    let o = run(&["estimate", input.to_str().unwrap(), "--alpha-uni", "1.5", "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["estimate", input.to_str().unwrap(), "--estimator", "mcd"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_tokens() {
    let t = parse_table("1,2\n?,4\n5,\n7,8\n", "?").unwrap();
    assert_eq!(t.columns, vec!["V1", "V2"]);
    assert_eq!(t.data.n(), 4);
    assert_eq!(t.data.get(1, 0), None);
    assert_eq!(t.data.get(2, 1), None);
    assert_eq!(t.data.get(3, 1), Some(8.0));
    let t = parse_table("x,y\nNA,2\n3,4\n", "NA").unwrap();
    assert_eq!(t.columns, vec!["x", "y"]);
    assert_eq!(t.data.get(0, 0), None);
    assert!(parse_table("1,2\n3\n", "NA").is_err());
    assert!(parse_table("1,inf\n3,4\n", "NA").is_err());
    assert!(parse_table("", "NA").is_err());
}

#[test]
fn filter_command() {
    let tmp = TempDir::new().unwrap();
    let clean = gaussian(200, 10, 7);
    let input = fixture(&tmp, "clean.csv", &clean);
    let out = tmp.path().join("clean");
    let o = run(&["filter", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let flagged = fs::read_to_string(out.join("cell_flags.csv")).unwrap().lines().count() - 1;
    assert!(flagged < 60, "{}", flagged);

    let mut x = clean.clone();
    let cells = contaminate_cellwise(&mut x, 0.05, 5.0, &mut stream(7, &[2])).unwrap();
    let input = fixture(&tmp, "dirty.csv", &x);
    let out = tmp.path().join("dirty");
    let o = run(&["filter", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("cell_flags.csv")).unwrap();
    let found: Vec<(usize, usize)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse::<usize>().unwrap() - 1, f[1].parse::<usize>().unwrap() - 1)
        })
        .collect();
    let caught = cells.iter().filter(|c| found.contains(c)).count();
    assert!(caught as f64 >= 0.9 * cells.len() as f64, "{} of {}", caught, cells.len());
}

#[test]
fn filter_single_column() {
    let tmp = TempDir::new().unwrap();
    let mut x = gaussian(50, 2, 8).columns(0, 1).into_owned();
    x[(4, 0)] = 40.0;
    let input = fixture(&tmp, "one.csv", &x);
    let o = run(&["filter", input.to_str().unwrap(), "--filter", "uf", "-o", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("cell_flags.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("5,1,c1,40,uf")), "{}", text);
}

#[test]
fn external_masks() {
    let tmp = TempDir::new().unwrap();
    let mut x = gaussian(100, 4, 9);
    x[(2, 2)] = 30.0;
    let input = fixture(&tmp, "in.csv", &x);
    let mask = tmp.path().join("mask.txt");
    let mut m = vec![vec!["1"; 4]; 100];
    m[2][2] = "0";
    m[50][1] = "0";
    fs::write(&mask, m.iter().map(|r| r.join(",")).collect::<Vec<_>>().join("\n")).unwrap();
    let flags = |mode: &str| {
        let out = tmp.path().join(mode);
        let o = run(&[
            "filter",
            input.to_str().unwrap(),
            "--external-mask",
            mask.to_str().unwrap(),
            "--mask-mode",
            mode,
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(out.join("cell_flags.csv")).unwrap()
    };
    let both = flags("intersection");
    assert_eq!(both.lines().count(), 2, "{}", both);
    assert!(both.contains("3,3,c3,30,intersection"));
    let either = flags("union");
    assert!(either.contains("51,2,c2,") && either.contains(",external,"), "{}", either);
    assert!(either.contains("3,3,c3,30,uf"));

    fs::write(&mask, "1,1\n").unwrap();
    let o = run(&["filter", input.to_str().unwrap(), "--external-mask", mask.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn preset_campaign_structure() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "simulate",
        "--preset",
        "table1-p10",
        "--replicates",
        "1",
        "--estimators",
        "mle",
        "-o",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("campaign.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scenario,estimator,eps,k,mean_lrt,se,replicates,failed");
    assert_eq!(lines.len(), 1 + 1 + 2 * 10);
    assert!(lines[1].starts_with("table1-p10,mle,0,0,"));
    for (i, eps) in [(2, "0.02"), (12, "0.05")] {
        for k in 1..=10 {
            assert!(lines[i + k - 1].starts_with(&format!("table1-p10,mle,{},{},", eps, k)), "{}", lines[i + k - 1]);
        }
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["replicates"], 1);
    assert_eq!(summary["max_over_k"].as_array().unwrap().len(), 3);
}

fn run_simulation(config: &Path, out: &Path, threads: &str) -> Output {
    run(&["simulate", config.to_str().unwrap(), "--threads", threads, "-o", out.to_str().unwrap()])
}

#[test]
fn campaigns_are_byte_stable() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("c.toml");
    fs::write(
        &config,
        "p = 4\nn = 50\ncontamination = \"casewise\"\neps = [0.0, 0.1]\nk = [2, 10]\nreplicates = 3\nseed = 11\nestimators = [\"mle\", \"uf-gse\", \"ubf-gre-c\"]\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (run_id, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = tmp.path().join(run_id);
        let o = run_simulation(&config, &out, threads);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push((fs::read(out.join("campaign.csv")).unwrap(), fs::read(out.join("summary.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let out = tmp.path().join("d");
    let o = bin()
        .args(["simulate", config.to_str().unwrap(), "--seed", "12", "-o", out.to_str().unwrap()])
        .env(robscatter_cli::THREADS_ENV, "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_ne!(fs::read(out.join("campaign.csv")).unwrap(), outputs[0].0);
}

#[test]
fn config_errors_exit_4() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("c.toml");
    fs::write(&config, "p = 10\neps = [0.1, 2.0]\n").unwrap();
    let o = run_simulation(&config, tmp.path(), "1");
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("eps[1]"), "{}", stderr(&o));
    let o = run(&["simulate", "--preset", "table9"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["simulate", "--preset", "table1-p10", "--estimators", "mle,ubf-mcd"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["simulate", tmp.path().join("none.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn estimates_are_byte_stable() {
    let tmp = TempDir::new().unwrap();
    let mut x = gaussian(120, 6, 13);
    contaminate_cellwise(&mut x, 0.05, 4.0, &mut stream(13, &[2])).unwrap();
    let input = fixture(&tmp, "in.csv", &x);
    let mut seen = Vec::new();
    for (id, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = tmp.path().join(id);
        let o = run(&["estimate", input.to_str().unwrap(), "--threads", threads, "--seed", "3", "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        seen.push(
            ["estimate.json", "cell_flags.csv", "cases.csv"]
                .map(|f| fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(seen[0], seen[1]);
    assert_eq!(seen[0], seen[2]);
}

#[test]
fn five_replicate_smoke_run() {
    let tmp = TempDir::new().unwrap();
    let start = Instant::now();
    let o = run(&["simulate", "--preset", "table1-p10", "--replicates", "5", "-o", tmp.path().to_str().unwrap()]);
    let elapsed = start.elapsed();
    assert!(o.status.success(), "{}", stderr(&o));
    eprintln!("table1-p10 with 5 replicates: {:?}", elapsed);
    assert!(elapsed.as_secs_f64() < 60.0, "{:?}", elapsed);
}
