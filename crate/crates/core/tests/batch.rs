mod common;

use std::path::Path;
use std::process::Command;
use std::time::Duration;

use common::{kfarm_bin, process_gone, wait_until};
use kfarm::batch::{job_status, submit_detached, JobRecord, JobState, FOOTER_PREFIX};

const RANDOM_PLOT: &str = "echo stdout\n\
numbers = random_table[100]\n\
fig = plot[numbers, \"xlabel\", \"ylabel\"]\n\
export_eps[\"filename.eps\", fig]\n";

fn kfarm(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(kfarm_bin())
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn footer_ok(line: &str) -> bool {
    line.strip_prefix(FOOTER_PREFIX).is_some_and(|s| {
        let (a, b) = s.split_once('.').unwrap_or(("", ""));
        !a.is_empty() && a.bytes().all(|c| c.is_ascii_digit()) && b.len() == 3 && b.bytes().all(|c| c.is_ascii_digit())
    })
}

#[test]
fn submitted_job_outlives_the_submitter() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("santanu.m"), RANDOM_PLOT).unwrap();
    let out = kfarm(tmp.path(), &["--seed", "42", "batch", "submit", "santanu.m", "-o", "santanu.out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pid: u32 = std::fs::read_to_string(tmp.path().join("santanu.out.pid"))
        .unwrap()
        .strip_suffix('\n')
        .unwrap()
        .parse()
        .unwrap();

    let output = tmp.path().join("santanu.out");
    assert!(wait_until(Duration::from_secs(5), || {
        JobRecord::load(&output).unwrap().state == JobState::Done
    }));
    let text = std::fs::read_to_string(&output).unwrap();
    assert!(text.starts_with(RANDOM_PLOT), "{text}");
    let rest: Vec<&str> = text[RANDOM_PLOT.len()..].lines().collect();
    assert_eq!(rest.len(), 1);
    assert!(footer_ok(rest[0]), "{}", rest[0]);
    assert!(!text.contains("=>"));

    let eps = std::fs::read_to_string(tmp.path().join("filename.eps")).unwrap();
    assert!(eps.starts_with("%!PS-Adobe-3.0 EPSF-3.0"));
    assert_eq!(eps.split_whitespace().filter(|t| *t == "lineto").count(), 99);
    assert!(wait_until(Duration::from_secs(5), || process_gone(pid)));

    let status = kfarm(tmp.path(), &["batch", "status", "santanu.out"]);
    assert!(String::from_utf8_lossy(&status.stdout).starts_with("done "));
}

#[test]
fn seeded_jobs_are_deterministic_apart_from_the_footer() {
    let tmp = tempfile::tempdir().unwrap();
    let script = tmp.path().join("r.m");
    std::fs::write(&script, "numbers = random_table[4]\nnumbers\n").unwrap();
    let run = || {
        let out = kfarm(tmp.path(), &["--seed", "9", "batch", "run", "r.m"]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let lines: Vec<String> = text.lines().map(str::to_owned).collect();
        assert!(footer_ok(lines.last().unwrap()));
        lines[..lines.len() - 1].to_vec()
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.len(), 1);
    assert!(a[0].starts_with("=> {{"));
}

#[test]
fn killed_job_is_failed() {
    let tmp = tempfile::tempdir().unwrap();
    let script = tmp.path().join("slow.m");
    let mut text = String::from("echo stdout\nm = fill[250, 0, 1.5]\n");
    for _ in 0..40 {
        text.push_str("eigen[m]\n");
    }
    std::fs::write(&script, &text).unwrap();
    let output = tmp.path().join("slow.out");
    let rec = submit_detached(&kfarm_bin(), &script, &output, Some(1)).unwrap();
    assert_eq!(rec.state, JobState::Running);
    assert!(matches!(job_status(&rec), JobState::Running | JobState::Done));
    assert!(wait_until(Duration::from_secs(5), || std::fs::metadata(&output).is_ok_and(|m| m.len() > 0)));

    // Detached: the job leads its own session.
    let stat = std::fs::read_to_string(format!("/proc/{}/stat", rec.pid)).unwrap();
    let session: u32 = stat.rsplit_once(')').unwrap().1.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert_eq!(session, rec.pid);

    unsafe { libc::kill(rec.pid as i32, libc::SIGKILL) };
    assert!(wait_until(Duration::from_secs(5), || process_gone(rec.pid)));
    assert_eq!(job_status(&rec), JobState::Failed);
    assert!(!std::fs::read_to_string(&output).unwrap().contains(FOOTER_PREFIX));
}

#[test]
fn failing_statement_marks_the_job_failed() {
    let tmp = tempfile::tempdir().unwrap();
    let script = tmp.path().join("bad.m");
    std::fs::write(&script, "a = fill[2, 0, 1]\neigen_demo\nb = 1\n").unwrap();
    let output = tmp.path().join("bad.out");
    let rec = submit_detached(&kfarm_bin(), &script, &output, None).unwrap();
    assert!(wait_until(Duration::from_secs(5), || process_gone(rec.pid)));
    let mut rec = rec;
    assert_eq!(rec.refresh(), JobState::Failed);
    let text = std::fs::read_to_string(&output).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "!! 2: UNBOUND unbound identifier eigen_demo");
    assert!(footer_ok(lines[1]));
    assert_eq!(lines.len(), 2);
}

#[test]
fn unparsable_script_is_rejected_before_spawning() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.m"), "this is not a statement\n").unwrap();
    let out = kfarm(tmp.path(), &["batch", "submit", "bad.m", "-o", "bad.out"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    assert!(!tmp.path().join("bad.out.pid").exists());
}

#[test]
fn status_of_unknown_job() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kfarm(tmp.path(), &["batch", "status", "nothing.out"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(tmp.path().join("gone.out.pid"), "999999999\n").unwrap();
    let out = kfarm(tmp.path(), &["batch", "status", "gone.out"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "failed\n");
}

#[test]
fn global_assignment_is_readable_later() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("q.m"), "q = 3.5\nfill[2, q, 0]\nq\n").unwrap();
    let out = kfarm(tmp.path(), &["batch", "run", "q.m"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(&lines[..2], &["=> {{3.5, 0}, {0, 3.5}}", "=> 3.5"]);
}
