use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn concise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_concise"))
        .args(args)
        .env_remove("CONCISE_WORKERS")
        .env_remove("CONCISE_BETA")
        .output()
        .expect("spawn concise")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_file(path: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

const REFS: &str = r#"{"id":"a","source":"the big red dog ran home","references":["the dog ran home","the red dog ran home"]}
{"id":"b","source":"he said that he would come","references":["he said he would come","he would come"]}
"#;

#[test]
fn version_and_help_exit_zero() {
    let out = concise(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("concise 0.1.0"), "{text}");
    assert!(text.contains("edits-jsonl v1"));
    assert_eq!(concise(&["score", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "refs.jsonl", REFS);
    let hyps = write(dir.path(), "hyp.txt", "the dog ran home\nhe would come\n");
    assert_eq!(concise(&[]).status.code(), Some(1));
    assert_eq!(concise(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(concise(&["score", "--refs", &refs]).status.code(), Some(1));
    let missing = concise(&[
        "score",
        "--refs",
        "/nonexistent/refs.jsonl",
        "--hyps",
        &hyps,
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("cannot read"));
    for bad in [
        vec!["score", "--refs", &refs, "--hyps", &hyps, "--beta", "0"],
        vec!["score", "--refs", &refs, "--hyps", &hyps, "--workers", "0"],
        vec![
            "score",
            "--refs",
            &refs,
            "--hyps",
            &hyps,
            "--merge-mode",
            "chunky",
        ],
    ] {
        let out = concise(&bad);
        assert_eq!(out.status.code(), Some(1), "{bad:?}: {}", stderr(&out));
    }
}

#[test]
fn environment_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "refs.jsonl", REFS);
    let hyps = write(dir.path(), "hyp.txt", "the dog ran home\nhe would come\n");
    let out = Command::new(env!("CARGO_BIN_EXE_concise"))
        .args(["score", "--refs", &refs, "--hyps", &hyps])
        .env("CONCISE_BETA", "1")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["beta"], 1.0);
    // the flag wins over the environment
    let out = Command::new(env!("CARGO_BIN_EXE_concise"))
        .args(["score", "--refs", &refs, "--hyps", &hyps, "--beta", "2"])
        .env("CONCISE_BETA", "1")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["beta"], 2.0);
}

#[test]
fn empty_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let empty = write(d, "empty.txt", "");
    let empty_refs = write(d, "empty.jsonl", "");
    let refs = write(d, "refs.jsonl", REFS);
    let lines = write(d, "lines.txt", "a b\nc d\n");
    let df = write(d, "df.tsv", "#N=1\na\t1\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["score", "--refs", &empty_refs, "--hyps", &lines],
        vec!["score", "--refs", &refs, "--hyps", &empty],
        vec!["agreement", "--refs", &empty_refs],
        vec![
            "datagen-roundtrip",
            "--originals",
            &empty,
            "--roundtrips",
            &empty,
        ],
        vec!["datagen-multiref", "--refs", &empty_refs],
        vec!["filter", "--input", &empty],
        vec![
            "analyze",
            "--sources",
            &empty,
            "--hyps",
            &empty,
            "--df",
            &df,
        ],
        vec!["build-df", "--input", &empty],
        vec!["edits", "--sources", &empty, "--targets", &empty],
    ];
    for args in cases {
        let out = concise(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(
            stderr(&out).starts_with("concise: data error"),
            "{}",
            stderr(&out)
        );
    }
}

#[test]
fn data_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "refs.jsonl", REFS);
    let hyps = write(dir.path(), "hyp.txt", "the dog ran home\nhe\twould come\n");
    let out = concise(&["score", "--refs", &refs, "--hyps", &hyps]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains(&format!("{hyps}:2: tab character")),
        "{}",
        stderr(&out)
    );

    let short = write(dir.path(), "short.txt", "the dog ran home\n");
    let out = concise(&["score", "--refs", &refs, "--hyps", &short]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("length mismatch"), "{}", stderr(&out));

    let sources = write(
        dir.path(),
        "src.txt",
        "the big red dog ran home\nsomething else\n",
    );
    let hyps = write(dir.path(), "hyp2.txt", "the dog ran home\nhe would come\n");
    let out = concise(&[
        "score",
        "--refs",
        &refs,
        "--hyps",
        &hyps,
        "--sources",
        &sources,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains(&format!("{sources}:2: inconsistent source")),
        "{}",
        stderr(&out)
    );
}

#[test]
fn score_reference_copy_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "refs.jsonl", REFS);
    let hyps = write(
        dir.path(),
        "hyp.txt",
        "the dog ran home\nhe said he would come\n",
    );
    let report = dir
        .path()
        .join("report.json")
        .to_string_lossy()
        .into_owned();
    let csv = dir.path().join("per.csv").to_string_lossy().into_owned();
    let out = concise(&[
        "score",
        "--refs",
        &refs,
        "--hyps",
        &hyps,
        "-o",
        &report,
        "--per-sentence",
        &csv,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json_file(&report);
    assert_eq!(v["precision"], 1.0);
    assert_eq!(v["recall"], 1.0);
    assert_eq!(v["f_beta"], 1.0);
    assert_eq!(
        (v["tp"].as_u64(), v["fp"].as_u64(), v["fn"].as_u64()),
        (Some(2), Some(0), Some(0))
    );
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap(),
        "id,reference,tp,fp,fn\na,0,1,0,0\nb,0,1,0,0\n"
    );
}

#[test]
fn score_tsv_references() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "refs.tsv", "a b c\ta c\ta b\n");
    // "a c" deletes "b" (ref 0); "a b" deletes "c" (ref 1)
    let hyps = write(dir.path(), "hyp.txt", "a b\n");
    let out = concise(&["score", "--refs", &refs, "--hyps", &hyps]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["per_sentence"][0]["reference"], 1);
    assert_eq!(v["f_beta"], 1.0);
}

#[test]
fn agreement_grid_has_a_row_per_annotator() {
    let dir = tempfile::tempdir().unwrap();
    let line = |id: &str| {
        format!(
            r#"{{"id":"{id}","source":"we will go there now","references":["we go now","we will go now","we go there now","we go now","we will go now"]}}"#
        )
    };
    let refs = write(
        dir.path(),
        "refs.jsonl",
        &format!("{}\n{}\n", line("1"), line("2")),
    );
    let out = concise(&["agreement", "--refs", &refs]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0]["annotator"], "A1");
    assert_eq!(rows[4]["held_out"], "Without A5");
    // A1 ("we go now") is matched exactly by A4 among the others
    assert_eq!(rows[0]["f_beta"], 1.0);
    // A3 deletes only "will"; best among the others is A1 (deletes "will" and
    // "there"): tp 1, fp 0, fn 1 per sentence, so F0.5 = 1.25 * 0.5 / 0.75
    assert!(close(rows[2]["f_beta"].as_f64().unwrap(), 5.0 / 6.0));

    let ragged = write(
        dir.path(),
        "ragged.jsonl",
        "{\"source\":\"a b\",\"references\":[\"a\",\"b\"]}\n{\"source\":\"a b\",\"references\":[\"a\"]}\n",
    );
    let out = concise(&["agreement", "--refs", &ragged]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("ragged annotations"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn analyze_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sources = write(
        d,
        "src.txt",
        "The cat sat on the mat .\nI made a mistake .\nReadability matters .\n",
    );
    let hyps = write(
        d,
        "hyp.txt",
        "The cat sat .\nI made a error .\nReadability matters .\n",
    );
    let df = write(d, "df.tsv", "#N=4\n.\t4\nThe\t2\ncat\t1\nsat\t2\n");
    let lex = write(d, "lex.tsv", "mistake\terror\n");
    let sim = write(d, "sim.txt", "0.5\n1\n0.75\n");
    let report = d.join("r.json").to_string_lossy().into_owned();
    let csv = d.join("r.csv").to_string_lossy().into_owned();
    let out = concise(&[
        "analyze",
        "--pretokenized",
        "--sources",
        &sources,
        "--hyps",
        &hyps,
        "--df",
        &df,
        "--lexicon",
        &lex,
        "--similarity-file",
        &sim,
        "-o",
        &report,
        "--per-sentence",
        &csv,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let ln2 = 2f64.ln();
    // (compression, fk_src, fk_hyp, idf_src, idf_hyp, synonym subs)
    // idf: "." = 0, The/sat = ln 2, cat and unseen tokens = ln 4
    let expected = [
        (4.0 / 7.0, -1.45, -2.62, 10.0 * ln2 / 7.0, ln2, 0u64),
        (1.0, 0.72, 0.72, 8.0 * ln2 / 5.0, 8.0 * ln2 / 5.0, 1),
        (1.0, 26.49, 26.49, 4.0 * ln2 / 3.0, 4.0 * ln2 / 3.0, 0),
    ];
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(
        header,
        [
            "id",
            "compression",
            "fk_src",
            "fk_hyp",
            "mean_idf_src",
            "mean_idf_hyp",
            "synonym_subs",
            "similarity"
        ]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for (i, (row, want)) in rows.iter().zip(&expected).enumerate() {
        let f = |k: usize| row[k].parse::<f64>().unwrap();
        assert_eq!(&row[0], (i + 1).to_string().as_str());
        assert!(close(f(1), want.0), "row {i} compression {}", f(1));
        assert!(close(f(2), want.1), "row {i} fk_src {}", f(2));
        assert!(close(f(3), want.2), "row {i} fk_hyp {}", f(3));
        assert!(close(f(4), want.3), "row {i} idf_src {}", f(4));
        assert!(close(f(5), want.4), "row {i} idf_hyp {}", f(5));
        assert_eq!(row[6].parse::<u64>().unwrap(), want.5);
    }

    let v = json_file(&report);
    let g = |k: &str| v[k].as_f64().unwrap_or_else(|| panic!("{k} missing: {v}"));
    assert_eq!(v["sentences"], 3);
    assert!(close(g("compression_ratio"), 12.0 / 15.0));
    let fk_src = (-1.45 + 0.72 + 26.49) / 3.0;
    let fk_hyp = (-2.62 + 0.72 + 26.49) / 3.0;
    assert!(close(g("fk_src"), fk_src));
    assert!(close(g("fk_hyp"), fk_hyp));
    assert!(close(g("fk_relative_change"), (fk_hyp - fk_src) / fk_src));
    let idf_src = (10.0 / 7.0 + 8.0 / 5.0 + 4.0 / 3.0) * ln2 / 3.0;
    let idf_hyp = (1.0 + 8.0 / 5.0 + 4.0 / 3.0) * ln2 / 3.0;
    assert!(close(g("mean_idf_src"), idf_src));
    assert!(close(g("mean_idf_hyp"), idf_hyp));
    assert!(close(g("synonym_substitutions_per_sentence"), 1.0 / 3.0));
    assert!(close(g("mean_similarity"), 0.75));
}

#[test]
fn analyze_rejects_mismatched_lengths_and_bad_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sources = write(d, "src.txt", "a b\nc d\n");
    let hyps = write(d, "hyp.txt", "a\n");
    let df = write(d, "df.tsv", "#N=2\na\t1\n");
    let out = concise(&[
        "analyze",
        "--sources",
        &sources,
        "--hyps",
        &hyps,
        "--df",
        &df,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let bad_df = write(d, "bad.tsv", "#N=2\na\t5\n");
    let out = concise(&[
        "analyze",
        "--sources",
        &sources,
        "--hyps",
        &sources,
        "--df",
        &bad_df,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains(&format!("{bad_df}:2")),
        "{}",
        stderr(&out)
    );
}

#[test]
fn datagen_roundtrip_pairs_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let originals = write(
        d,
        "orig.txt",
        "The cat sat on the mat .\nHello there .\nOne two three four\nShort one .\n",
    );
    let roundtrips = write(
        d,
        "rt.txt",
        "The cat sat .\nHello there .\nOne two three five\nShort one is here .\n",
    );
    let pairs = d.join("pairs.tsv").to_string_lossy().into_owned();
    let report = d.join("report.json").to_string_lossy().into_owned();
    let out = concise(&[
        "datagen-roundtrip",
        "--originals",
        &originals,
        "--roundtrips",
        &roundtrips,
        "-o",
        &pairs,
        "--report",
        &report,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    // line 4: the round trip is longer, so it becomes the source
    assert_eq!(
        std::fs::read_to_string(&pairs).unwrap(),
        "The cat sat on the mat .\tThe cat sat .\nShort one is here .\tShort one .\n"
    );
    let v = json_file(&report);
    assert_eq!(v["input"], 4);
    assert_eq!(v["kept"], 2);
    assert_eq!(v["dropped"]["identical"], 1);
    assert_eq!(v["dropped"]["equal_length"], 1);

    let short = write(d, "short.txt", "The cat sat .\n");
    let out = concise(&[
        "datagen-roundtrip",
        "--originals",
        &originals,
        "--roundtrips",
        &short,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    let out = concise(&[
        "datagen-roundtrip",
        "--originals",
        &originals,
        "--roundtrips",
        &roundtrips,
        "--min-compression",
        "0.9",
        "--max-compression",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn datagen_multiref_longest_to_shortest() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(
        dir.path(),
        "nist.jsonl",
        concat!(
            "{\"source\":\"x\",\"references\":[\"a b c\",\"a b c d e\",\"a b\",\"a b c d\"]}\n",
            "{\"source\":\"x\",\"references\":[\"only one\"]}\n",
        ),
    );
    let report = dir.path().join("r.json").to_string_lossy().into_owned();
    let out = concise(&["datagen-multiref", "--refs", &refs, "--report", &report]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "a b c d e\ta b\n");
    assert!(stderr(&out).contains("skipped 1"), "{}", stderr(&out));
    let v = json_file(&report);
    assert_eq!(v["dropped"]["too_few_references"], 1);
}

#[test]
fn filter_keeps_long_balanced_sentences() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "cands.txt",
        "one two three four five six .\nshort\n\"one two three four five six\n\"one two three four five six\"\n",
    );
    let out = concise(&["filter", "--input", &input, "--min-words", "6"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "one two three four five six .\n\"one two three four five six\"\n"
    );
    let r: Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(r["dropped"]["min_words"], 1);
    assert_eq!(r["dropped"]["quotes"], 1);

    let out = concise(&[
        "filter",
        "--input",
        &input,
        "--min-words",
        "6",
        "--allow-unbalanced-quotes",
    ]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

#[test]
fn build_df_table_format() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "docs.txt",
        "the cat\n\nthe dog the\nthe end\nA cat\n",
    );
    let out = concise(&["build-df", "--input", &input]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "#N=4\nA\t1\ncat\t2\ndog\t1\nend\t1\nthe\t3\n"
    );
}

#[test]
fn edits_jsonl_output() {
    let dir = tempfile::tempdir().unwrap();
    let sources = write(
        dir.path(),
        "s.txt",
        "a b c\nThe company also owned stores .\n",
    );
    let targets = write(dir.path(), "t.txt", "a x\nThe company owned stores .\n");
    let out = concise(&["edits", "--sources", &sources, "--targets", &targets]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        concat!(
            "{\"id\":\"1\",\"spans\":[{\"start\":1,\"end\":3,\"replacement\":[\"x\"]}]}\n",
            "{\"id\":\"2\",\"spans\":[{\"start\":2,\"end\":3,\"replacement\":[]}]}\n",
        )
    );
    let out = concise(&[
        "edits",
        "--merge-mode",
        "split",
        "--sources",
        &sources,
        "--targets",
        &targets,
    ]);
    let first = String::from_utf8_lossy(&out.stdout)
        .lines()
        .next()
        .unwrap()
        .to_owned();
    assert_eq!(
        first,
        "{\"id\":\"1\",\"spans\":[{\"start\":1,\"end\":2,\"replacement\":[]},{\"start\":2,\"end\":3,\"replacement\":[\"x\"]}]}"
    );
}
