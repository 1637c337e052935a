//! Compiles a small C program against the generated header and the static
//! library. Skipped when no C compiler or static library is available.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "tunnelkit.h"

int main(void) {
    TkPotential *p = tk_potential_new(0.0, 0.0);
    if (tk_potential_push_constant(p, 2.5, tk_from_ev(1.0)) != TK_STATUS_OK) return 1;
    TkScatter s;
    if (tk_solve_exact(p, tk_from_ev(0.6), &s) != TK_STATUS_OK) return 2;
    if (fabs(s.transmittance + s.reflectance - 1.0) > 1e-12) return 3;
    if (tk_potential_push_constant(p, -1.0, 1.0) != TK_STATUS_INVALID_ARGUMENT) return 4;
    if (tk_last_error() == NULL) return 5;
    tk_potential_free(p);
    printf("%.12f\n", s.transmittance);
    return 0;
}
"#;

fn static_lib() -> Option<PathBuf> {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    let profile = exe.parent()?.parent()?;
    let lib = profile.join("libtunnelkit_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_and_runs() {
    let Some(lib) = static_lib() else {
        eprintln!("skipped: static library not built");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipped: no C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let d: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!(d > 0.0 && d < 1.0);
}
