use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wqo-cwlab"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("wqo-cwlab-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, text: &str) -> String {
        let p = self.0.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

#[test]
fn generate_outputs() {
    let (code, out) = run(&["generate", "16", "--format", "edgelist"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("16 50\n"));
    assert_eq!(out.lines().count(), 51);
    assert_eq!(run(&["generate", "1"]).1, "1 0\n");
    assert_eq!(run(&["generate", "16", "--subset", "5,6,8,9"]).1, "4 3\n5 6\n5 9\n8 9\n");
    assert_eq!(run(&["generate", "6", "--format", "labels"]).1, "1 2 3 4 5 6\n");
    assert!(run(&["generate", "16", "--format", "dot"]).1.contains("cluster_q4"));
    assert_eq!(run(&["generate", "4", "--subset", "7"]).0, 2);
    assert_eq!(run(&["generate", "0"]).0, 2);
}

#[test]
fn mu_outputs() {
    let s = Scratch::new("mu");
    let d4 = s.file("d4.txt", "1 2 3 4\n");
    assert_eq!(run(&["mu", &d4]).1, "{\"mode\":\"exact\",\"value\":1,\"witness\":[1,2],\"violations\":[]}\n");
    let edges = s.file("d4e.txt", &run(&["generate", "4"]).1);
    assert!(run(&["mu", &edges]).1.contains("\"value\":1"));
    let empty = s.file("empty.txt", "");
    assert!(run(&["mu", &empty]).1.contains("\"value\":0"));
    let d40 = s.file("d40.txt", &run(&["generate", "40", "--format", "labels"]).1);
    assert_eq!(run(&["mu", &d40]).0, 2);
    assert_eq!(run(&["mu", &d40, "--mode", "sampled"]).0, 2);
    let (code, out) = run(&["mu", &d40, "--mode", "sampled", "--samples", "50", "--seed", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"mode\":\"sampled\"") && out.contains("\"seed\":1"));
    let bad = s.file("bad.txt", "1 x 3\n");
    assert_eq!(run(&["mu", &bad]).0, 2);
}

#[test]
fn verify_outputs() {
    for args in [
        &["verify", "--lemma", "2", "--n", "16"][..],
        &["verify", "--lemma", "maxone", "--max", "4096"],
        &["verify", "--lemma", "4", "--c", "3", "--max", "4096"],
        &["verify", "--lemma", "3", "--n", "16", "--subset", "2,4"],
        &["verify", "--lemma", "diffq", "--max", "512", "--max-len", "32"],
        &["verify", "--lemma", "intiso", "--max", "256", "--max-len", "8"],
    ] {
        let (code, out) = run(args);
        assert_eq!(code, 0, "{args:?}");
        assert!(out.starts_with("PASS"), "{out}");
    }
    let (code, out) = run(&["verify", "--lemma", "theorem2", "--c", "1", "--samples", "100", "--seed", "4", "--json"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"violation_count\":0"));
    assert_eq!(run(&["verify", "--lemma", "theorem2"]).0, 2);
    assert_eq!(run(&["--cap", "10", "verify", "--lemma", "2", "--n", "12"]).0, 2);
    let out = bin().args(["verify", "--lemma", "2", "--n", "12"]).env("WQO_CWLAB_CAP", "8").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_outputs() {
    let s = Scratch::new("compare");
    let (a9, b13, a2, b1) = (s.file("a9", "9\n"), s.file("b13", "1 3\n"), s.file("a2", "2\n"), s.file("b1", "1\n"));
    let (code, out) = run(&["compare", "--c", "1", &a9, &b13]);
    assert_eq!(code, 0);
    assert!(out.contains("map: 9->1"), "{out}");
    assert_eq!(run(&["compare", "--c", "1", &a2, &b1]).1, "incomparable-under-leq_c\n");
    let (_, out) = run(&["compare", "--c", "1", &a2, &b1, "--fallback-oracle"]);
    assert!(out.contains("oracle: EMBEDS"), "{out}");
    let g = s.file("g", "1 2 3 8 12\n");
    let (_, out) = run(&["compare", "--c", "3", &g, &g, "--json"]);
    assert!(out.contains("\"pairs\":[[1,1],[2,2],[3,3],[8,8],[12,12]]"), "{out}");
    let long = s.file("long", "4 5 6\n");
    assert_eq!(run(&["compare", "--c", "1", &long, &long]).0, 2);
    let (code, out) = run(&["compare", "--c", "1", &long, &long, "--fallback-oracle"]);
    assert_eq!(code, 0);
    assert!(out.contains("oracle: EMBEDS"));
    let edges = s.file("edges", "2 1\n1 2\n");
    assert_eq!(run(&["compare", "--c", "1", &edges, &b1]).0, 2);
}

#[test]
fn oracle_matrix_experiment_antichain() {
    let s = Scratch::new("misc");
    let (a2, b1) = (s.file("a2", "2\n"), s.file("b1", "1\n"));
    assert_eq!(run(&["oracle-check", &a2, &b1]).1, "{\"verdict\":\"EMBEDS\",\"pairs\":[[2,1]]}\n");
    assert_eq!(run(&["oracle-check", &b1, &s.file("e", "")]).1, "{\"verdict\":\"NOT_EMBEDS\"}\n");
    let m = run(&["matrix", "--c", "2", &s.file("g", "1 2 8 16 17 40\n")]).1;
    assert!(m.starts_with("{\"c\":2,\"rows\":[{\"l_index\":0,\"cells\":[]}"), "{m}");
    let (_, out) = run(&["experiment", "--count", "1", "--host-n", "64", "--c", "3", "--seed", "5"]);
    assert!(out.contains("\"pair\":null"));
    let (code, out) = run(&["experiment", "--count", "1000", "--host-n", "512", "--c", "8", "--seed", "42"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"verified\":true"), "{out}");
    let (_, out) = run(&["antichain", "--n", "4"]);
    assert!(out.contains("\"family\":[[1,2,3],[1,2,4],[1,3,4]]"), "{out}");
    assert_eq!(run(&["antichain", "--n", "20"]).0, 2);
}
