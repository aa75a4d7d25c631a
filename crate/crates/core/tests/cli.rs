use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rank_diversity::cli::{self, RunManifest, EXIT_DATA, EXIT_OK, EXIT_USAGE, MANIFEST_NAME};
use rank_diversity::diversity::{analyze_window, FitReport};
use rank_diversity::dynamics::{averaged_correlation, flight_histogram, sigma_hat};
use rank_diversity::ingest::{ingest_files, IngestOptions, TokenPolicy};
use rank_diversity::rank::{load_rank_series, overlap, top_k, TranslationMap};
use rank_diversity::zipf::{fit_all, ZipfModelFit};
use tempfile::TempDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus_3slice.tsv")
}

fn rankdiv(args: &[&str]) -> i32 {
    cli::run(std::iter::once("rankdiv").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut v = Vec::new();
    f(&mut v).unwrap();
    v
}

fn pretty(value: &impl serde::Serialize) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).unwrap();
    v.push(b'\n');
    v
}

/// Ingests the fixture with lowercasing and tag stripping into `dir/tables`.
fn ingest_fixture(dir: &Path) -> PathBuf {
    let out = dir.join("tables");
    let code = rankdiv(&[
        "ingest",
        s(&fixture()),
        "--lowercase",
        "--strip-pos-tags",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    out
}

#[test]
fn ingest_matches_library_and_counts_corrupt_lines() {
    let dir = TempDir::new().unwrap();
    let out = ingest_fixture(dir.path());
    let opts = IngestOptions {
        policy: TokenPolicy {
            strip_pos_tags: true,
            lowercase: true,
            ..TokenPolicy::default()
        },
        ..IngestOptions::default()
    };
    let (tables, stats) = ingest_files(&[fixture()], &opts).unwrap();
    assert_eq!(tables.len(), 3);
    for t in &tables {
        let on_disk = fs::read(out.join(format!("{}.tsv", t.slice))).unwrap();
        assert_eq!(on_disk, csv_bytes(|w| t.write_tsv(w)));
    }
    let logged: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("ingest_stats.json")).unwrap()).unwrap();
    assert_eq!(logged["malformed_lines"], 1);
    assert_eq!(logged["malformed_lines"], stats.malformed_lines);
    assert_eq!(logged["rejected_tokens"], 3);
}

#[test]
fn strict_ingest_of_corrupt_file_fails_without_output() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("strict");
    let code = rankdiv(&[
        "ingest",
        s(&fixture()),
        "--strict",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, EXIT_DATA);
    assert!(!out.exists());
}

#[test]
fn analysis_commands_match_library_calls() {
    let dir = TempDir::new().unwrap();
    let tables_dir = ingest_fixture(dir.path());
    let tables = load_rank_series(&tables_dir, i64::MIN..=i64::MAX).unwrap();
    let out = |name: &str| dir.path().join(name);

    // rank
    assert_eq!(
        rankdiv(&[
            "rank",
            s(&tables_dir),
            "--top",
            "5",
            "--seed",
            "1",
            "-o",
            s(&out("rank"))
        ]),
        EXIT_OK
    );
    for t in &tables {
        let on_disk = fs::read(out("rank").join(format!("{}.tsv", t.slice()))).unwrap();
        assert_eq!(on_disk, csv_bytes(|w| t.write_tsv(w)));
    }
    let top = fs::read_to_string(out("rank").join("top.csv")).unwrap();
    let first = top_k(&tables[0], 5).unwrap();
    assert!(top
        .lines()
        .nth(1)
        .unwrap()
        .ends_with(&format!(",1,{}", first[0])));

    // diversity
    assert_eq!(
        rankdiv(&[
            "diversity",
            s(&tables_dir),
            "--seed",
            "1",
            "-o",
            s(&out("div"))
        ]),
        EXIT_OK
    );
    let k_max = tables.iter().map(|t| t.len()).min().unwrap();
    let (curve, fit) = analyze_window(&tables, k_max, 0.1).unwrap();
    assert_eq!(
        fs::read(out("div").join("diversity_raw.csv")).unwrap(),
        csv_bytes(|w| curve.write_raw_csv(w))
    );
    assert_eq!(
        fs::read(out("div").join("diversity_windowed.csv")).unwrap(),
        csv_bytes(|w| curve.write_windowed_csv(&fit, w))
    );
    assert_eq!(
        fs::read(out("div").join("diversity_fit.json")).unwrap(),
        pretty(&FitReport::new(&curve, &fit))
    );

    // flights
    assert_eq!(
        rankdiv(&[
            "flights",
            s(&tables_dir),
            "--band",
            "1-10",
            "--binwidth",
            "0.05",
            "--seed",
            "1",
            "-o",
            s(&out("fl"))
        ]),
        EXIT_OK
    );
    let hist = flight_histogram(&tables, (1, 10), 0.05).unwrap();
    assert_eq!(
        fs::read(out("fl").join("flights_1-10.csv")).unwrap(),
        csv_bytes(|w| hist.write_csv(w))
    );
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out("fl").join("flights_fit.json")).unwrap()).unwrap();
    let sh = sigma_hat(&tables, usize::MAX).unwrap();
    assert_eq!(report["sigma_hat"]["value"].as_f64().unwrap(), sh.value);
    assert_eq!(report["bands"][0]["sample_count"], hist.sample_count);

    // correlation
    assert_eq!(
        rankdiv(&[
            "correlation",
            s(&tables_dir),
            "--sample-size",
            "10",
            "--tau-max",
            "0",
            "--seed",
            "5",
            "-o",
            s(&out("cor"))
        ]),
        EXIT_OK
    );
    let corr = averaged_correlation(&tables, 10, 0, 5).unwrap();
    assert_eq!(
        fs::read(out("cor").join("correlation.csv")).unwrap(),
        csv_bytes(|w| corr.write_csv(w))
    );

    // fitzipf
    assert_eq!(
        rankdiv(&[
            "fitzipf",
            s(&tables_dir),
            "--seed",
            "1",
            "-o",
            s(&out("zipf"))
        ]),
        EXIT_OK
    );
    let fits = fit_all(tables.last().unwrap(), 1..=tables.last().unwrap().len()).unwrap();
    let reports: Vec<_> = fits.iter().map(ZipfModelFit::report).collect();
    assert_eq!(
        fs::read(out("zipf").join("zipf_fits.json")).unwrap(),
        pretty(&reports)
    );
    assert!(out("zipf").join("zipf_ratio_m5.csv").exists());

    // overlap against a translated copy
    let map_path = dir.path().join("map.tsv");
    fs::write(&map_path, "the\tle\nof\tde\nand\tet\n").unwrap();
    assert_eq!(
        rankdiv(&[
            "overlap",
            s(&tables_dir),
            s(&tables_dir),
            "--map",
            s(&map_path),
            "--n",
            "10",
            "--seed",
            "1",
            "-o",
            s(&out("ov"))
        ]),
        EXIT_OK
    );
    let map = TranslationMap::load(&map_path).unwrap();
    let mut expected = String::from("slice,overlap\n");
    for t in &tables {
        let top = top_k(t, 10).unwrap();
        expected.push_str(&format!(
            "{},{}\n",
            t.slice(),
            overlap(&top, &top, &map).unwrap()
        ));
    }
    assert_eq!(
        fs::read_to_string(out("ov").join("overlap.csv")).unwrap(),
        expected
    );

    // every command left a manifest whose outputs match the files on disk
    for name in ["rank", "div", "fl", "cor", "zipf", "ov"] {
        let m = RunManifest::load(&out(name).join(MANIFEST_NAME)).unwrap();
        assert!(!m.outputs.is_empty());
        assert!(m.outputs.iter().all(|o| out(name).join(&o.path).exists()));
        let expected = if name == "ov" { 7 } else { 3 };
        assert_eq!(
            m.inputs.len(),
            expected,
            "{name}: one digest per table file"
        );
    }
}

#[test]
fn json_format_exports_parse() {
    let dir = TempDir::new().unwrap();
    let tables_dir = ingest_fixture(dir.path());
    let out = dir.path().join("div");
    assert_eq!(
        rankdiv(&[
            "diversity",
            s(&tables_dir),
            "--format",
            "json",
            "--seed",
            "1",
            "-o",
            s(&out)
        ]),
        EXIT_OK
    );
    let raw: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("diversity_raw.json")).unwrap()).unwrap();
    assert_eq!(raw[0]["k"], 1);
}

#[test]
fn missing_input_dir_fails_without_partial_files() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope");
    let out = dir.path().join("out");
    for cmd in ["rank", "diversity", "flights", "correlation", "fitzipf"] {
        assert_eq!(
            rankdiv(&[cmd, s(&missing), "--seed", "1", "-o", s(&out)]),
            EXIT_DATA,
            "{cmd}"
        );
        assert!(!out.exists(), "{cmd} left output behind");
    }
    assert_eq!(
        rankdiv(&[
            "overlap",
            s(&missing),
            s(&missing),
            "--seed",
            "1",
            "-o",
            s(&out)
        ]),
        EXIT_DATA
    );
    assert!(!out.exists());
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    let tables_dir = ingest_fixture(dir.path());
    let out = dir.path().join("out");
    let t = s(&tables_dir);
    assert_eq!(
        rankdiv(&[
            "diversity",
            t,
            "--from",
            "2001",
            "--to",
            "2001",
            "-o",
            s(&out)
        ]),
        EXIT_USAGE
    );
    assert_eq!(
        rankdiv(&["diversity", t, "--delta", "0", "-o", s(&out)]),
        EXIT_USAGE
    );
    assert_eq!(
        rankdiv(&["diversity", t, "--no-such-flag", "-o", s(&out)]),
        EXIT_USAGE
    );
    assert_eq!(
        rankdiv(&["flights", t, "--band", "9-2", "-o", s(&out)]),
        EXIT_USAGE
    );
    assert!(!out.exists());
    // writing into an input directory is refused
    assert_eq!(rankdiv(&["rank", t, "-o", t]), EXIT_USAGE);
}

#[test]
fn help_on_every_command_exits_zero() {
    let bin = env!("CARGO_BIN_EXE_rankdiv");
    let mut commands = vec![vec!["--help"], vec!["--version"]];
    for c in [
        "ingest",
        "rank",
        "diversity",
        "flights",
        "correlation",
        "simulate",
        "fitzipf",
        "overlap",
        "replay",
    ] {
        commands.push(vec![c, "--help"]);
    }
    for args in commands {
        let out = Command::new(bin).args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert!(!out.stdout.is_empty());
    }
    let bad = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_is_deterministic_and_replayable() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    for out in [&a, &b] {
        assert_eq!(
            rankdiv(&[
                "simulate",
                "--n",
                "300",
                "--t",
                "12",
                "--seed",
                "42",
                "-o",
                s(out)
            ]),
            EXIT_OK
        );
    }
    let (ta, tb) = (tree(&a), tree(&b));
    assert_eq!(ta.len(), 13);
    for ((na, fa), (nb, fb)) in ta.iter().zip(&tb) {
        assert_eq!(na, nb);
        if na != MANIFEST_NAME {
            assert_eq!(fa, fb, "{na}");
        }
    }
    assert_eq!(
        rankdiv(&["replay", s(&a.join(MANIFEST_NAME)), "--out", s(&c)]),
        EXIT_OK
    );
    let tc = tree(&c);
    assert_eq!(
        ta.iter()
            .filter(|f| f.0 != MANIFEST_NAME)
            .collect::<Vec<_>>(),
        tc.iter()
            .filter(|f| f.0 != MANIFEST_NAME)
            .collect::<Vec<_>>()
    );
    let different = dir.path().join("d");
    assert_eq!(
        rankdiv(&[
            "simulate",
            "--n",
            "300",
            "--t",
            "12",
            "--seed",
            "43",
            "-o",
            s(&different)
        ]),
        EXIT_OK
    );
    assert_ne!(
        fs::read(a.join("5.tsv")).unwrap(),
        fs::read(different.join("5.tsv")).unwrap()
    );
}

#[test]
fn missing_seed_is_recorded_and_replays() {
    let dir = TempDir::new().unwrap();
    let tables = dir.path().join("sim");
    assert_eq!(
        rankdiv(&[
            "simulate",
            "--n",
            "200",
            "--t",
            "8",
            "--seed",
            "3",
            "-o",
            s(&tables)
        ]),
        EXIT_OK
    );
    let out = dir.path().join("cor");
    assert_eq!(
        rankdiv(&[
            "correlation",
            s(&tables),
            "--sample-size",
            "20",
            "--tau-max",
            "2",
            "-o",
            s(&out)
        ]),
        EXIT_OK
    );
    let m = RunManifest::load(&out.join(MANIFEST_NAME)).unwrap();
    let pos = m
        .args
        .iter()
        .position(|a| a == "--seed")
        .expect("seed recorded in args");
    assert_eq!(m.args[pos + 1], m.seed.to_string());
    assert_eq!(m.parameters["correlation"]["common"]["seed"], m.seed);
    assert_eq!(
        rankdiv(&[
            "replay",
            s(&out.join(MANIFEST_NAME)),
            "-o",
            s(&dir.path().join("again"))
        ]),
        EXIT_OK
    );
}

#[test]
fn replay_detects_changed_inputs() {
    let dir = TempDir::new().unwrap();
    let tables = dir.path().join("sim");
    assert_eq!(
        rankdiv(&[
            "simulate",
            "--n",
            "200",
            "--t",
            "8",
            "--seed",
            "3",
            "-o",
            s(&tables)
        ]),
        EXIT_OK
    );
    let out = dir.path().join("div");
    assert_eq!(
        rankdiv(&["diversity", s(&tables), "--seed", "0", "-o", s(&out)]),
        EXIT_OK
    );
    assert_eq!(
        rankdiv(&[
            "simulate",
            "--n",
            "200",
            "--t",
            "8",
            "--seed",
            "4",
            "-o",
            s(&tables)
        ]),
        EXIT_OK
    );
    assert_eq!(
        rankdiv(&[
            "replay",
            s(&out.join(MANIFEST_NAME)),
            "-o",
            s(&dir.path().join("again"))
        ]),
        EXIT_DATA
    );
}
