use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "data", name].iter().collect();
    p.to_str().unwrap().to_string()
}

fn ratrw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratrw")).args(args).output().unwrap()
}

fn ratrw_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ratrw"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_topdown_example() {
    let o = ratrw(&["classify", &data("topdown_fg.trs")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("classes: TopDown\n"), "{out}");
    assert!(out.contains("BottomUp: no ("), "{out}");
}

#[test]
fn encoded_machine_through_stdin() {
    let tm = ratrw(&["encode-tm", &data("one_step.tm")]);
    assert_eq!(tm.status.code(), Some(0));
    let o = ratrw_stdin(&["classify", "-"], &tm.stdout);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("classes: Prefix\n"), "{}", stdout(&o));
}

#[test]
fn suffix_grammar_confirms_the_swap() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("swap.grammar");
    let g = g.to_str().unwrap();
    let o = ratrw(&["build", "--mode", "suffix", &data("swap_pump.trs"), "--out", g]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let yes = ratrw(&["check-pair", g, "f(a,g(a))", "f(g(a),a)"]);
    assert_eq!(stdout(&yes), "yes\n");
    let no = ratrw(&["check-pair", g, "f(g(a),a)", "a"]);
    assert_eq!(stdout(&no), "no\n");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let p = dir.path().join(format!("g{k}"));
        let o = ratrw(&["build", "--mode", "suffix", &data("swap_pump.trs"), "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        files.push(fs::read(p).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let a = ratrw(&["image", &data("topdown_fg.trs"), &data("fgg.aut"), "--mode", "topdown"]);
    let b = ratrw(&["image", &data("topdown_fg.trs"), &data("fgg.aut"), "--mode", "topdown"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn built_grammar_enumerates_like_the_hand_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("fg.grammar");
    let g = g.to_str().unwrap();
    assert_eq!(ratrw(&["build", "--mode", "topdown", &data("topdown_fg.trs"), "--out", g]).status.code(), Some(0));
    let built = ratrw(&["enum", g, "--max-size", "10"]);
    let hand = ratrw(&["enum", &data("fg_hand.grammar"), "--max-size", "10"]);
    assert!(!built.stdout.is_empty());
    assert_eq!(stdout(&built), stdout(&hand));
}

#[test]
fn reach_strategies() {
    let args = |s: &'static str| ["reach", "", "f(g(g(a)),g(g(a)))", "--strategy", s];
    let file = data("topdown_fg.trs");
    let mut all = Vec::new();
    for s in ["unrestricted", "topdown"] {
        let mut a = args(s);
        a[1] = &file;
        all.push(stdout(&ratrw(&a)));
    }
    assert_eq!(all[0], "f(g(g(a)),g(g(a)))\nh(f(g(a),g(a)))\nh(h(f(a,a)))\n");
    assert_eq!(all[0], all[1]);
}

#[test]
fn vetoes_exit_3() {
    let o = ratrw(&["build", "--mode", "topdown", &data("gfgf.trs")]);
    assert_eq!(o.status.code(), Some(3));
    let o = ratrw(&["image", &data("topdown_fg.trs"), &data("fgg.aut"), "--mode", "topdown", "--direction", "inverse"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("preimages"));
}

#[test]
fn bounded_preimages_instead() {
    let o = ratrw(&["preimages", &data("topdown_fg.trs"), "h(f(a,a))", "--max-size", "9"]);
    assert_eq!(stdout(&o), "f(g(a),g(a))\nh(f(a,a))\n");
    let o = ratrw(&["preimages", &data("topdown_fg.trs"), "h(h(f(a,a)))", "--max-size", "9"]);
    assert!(stdout(&o).lines().any(|l| l == "f(g(g(a)),g(g(a)))"));
}

#[test]
fn suffix_images_both_ways() {
    let fwd = ratrw(&["image", &data("swap_pump.trs"), &data("faa.aut"), "--mode", "suffix"]);
    assert_eq!(fwd.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("inv.aut");
    let o = ratrw(&[
        "image",
        &data("swap_pump.trs"),
        &data("faa.aut"),
        "--mode",
        "suffix",
        "--direction",
        "inverse",
        "--out",
        inv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(inv).unwrap().starts_with("alphabet:"));
}

#[test]
fn usage_and_parse_errors() {
    assert_eq!(ratrw(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ratrw(&["build", &data("topdown_fg.trs")]).status.code(), Some(1), "missing --mode");
    assert_eq!(ratrw(&["classify", "/no/such/file"]).status.code(), Some(1));
    assert_eq!(ratrw(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.trs");
    fs::write(&bad, "alphabet: f/2 a/0\nvars: x\nrule: f(x) -> a\n").unwrap();
    let o = ratrw(&["classify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    let o = ratrw(&["reach", &data("topdown_fg.trs"), "f(a"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selfcheck_single_criterion() {
    let o = ratrw(&["selfcheck", "--only", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("criterion 4: PASS"));
    let o = ratrw(&["selfcheck", "--only", "9"]);
    assert_eq!(o.status.code(), Some(3), "criterion 9 fails as documented");
}
