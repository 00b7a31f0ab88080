#![allow(dead_code)]

pub mod oracle;
pub mod strategies;

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

/// Path of the multi-call binary built for this test run.
pub fn kfarm_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_kfarm"))
}

/// Write an executable shell script.
pub fn write_script(path: &Path, body: &str) {
    std::fs::write(path, body).unwrap();
    std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o755)).unwrap();
}

/// Stand-in for `ssh`: logs its arguments to `$log`, refuses the host
/// `unreachable`, and otherwise runs the remote command locally.
pub fn fake_ssh(dir: &Path) -> (PathBuf, PathBuf) {
    let script = dir.join("fake-ssh");
    let log = dir.join("ssh.log");
    write_script(
        &script,
        &format!(
            "#!/bin/sh\nprintf '%s|' \"$@\" >> '{}'\necho >> '{}'\n\
             [ \"$1\" = -e ] && [ \"$2\" = none ] || exit 255\n\
             [ \"$3\" = unreachable ] && {{ echo 'ssh: connect: no route' >&2; exit 255; }}\n\
             exec sh -c \"$4\"\n",
            log.display(),
            log.display()
        ),
    );
    (script, log)
}

/// Poll `f` every 10 ms until it returns true or `limit` passes.
pub fn wait_until(limit: Duration, mut f: impl FnMut() -> bool) -> bool {
    let end = Instant::now() + limit;
    loop {
        if f() {
            return true;
        }
        if Instant::now() >= end {
            return false;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
}

/// Whether a process is gone or a zombie.
pub fn process_gone(pid: u32) -> bool {
    !kfarm::batch::pid_alive(pid)
}
