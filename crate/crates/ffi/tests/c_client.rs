//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

const CLIENT: &str = r#"
#include <stdio.h>
#include "gprtopo.h"

int main(void) {
    double ring[9] = {0.1, 0.1, 0.1, 0.1, 1.0, 0.1, 0.1, 0.1, 0.1};
    GprtopoImage *img = NULL;
    GprtopoDiagram *d = NULL;
    if (gprtopo_image_new(3, 3, ring, &img) != GPRTOPO_STATUS_OK) return 1;
    GprtopoPersistenceOptions opts = {false, 0, GPRTOPO_REDUCTION_STANDARD, false};
    if (gprtopo_diagram_compute(img, &opts, &d) != GPRTOPO_STATUS_OK) return 2;
    size_t loops = 0;
    for (size_t i = 0; i < gprtopo_diagram_len(d); i++) {
        GprtopoPair p;
        gprtopo_diagram_get(d, i, &p);
        if (p.dim == 1) {
            printf("%g %g %g %zu\n", p.birth, p.death, p.lifetime, p.n_cycle_edges);
            loops++;
        }
    }
    if (gprtopo_image_new(2, 2, NULL, &img) != GPRTOPO_STATUS_NULL_POINTER) return 3;
    char *msg = gprtopo_last_error_message();
    printf("%s\n", msg);
    gprtopo_string_free(msg);
    gprtopo_diagram_free(d);
    gprtopo_image_free(img);
    return loops == 1 ? 0 : 4;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

fn compiler() -> Option<String> {
    let cc = env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| cc)
}

#[test]
fn header_declares_the_api() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/gprtopo.h");
    let text = fs::read_to_string(header).unwrap();
    for name in [
        "gprtopo_image_new",
        "gprtopo_image_load",
        "gprtopo_image_free",
        "gprtopo_diagram_compute",
        "gprtopo_diagram_get",
        "gprtopo_diagram_cycle",
        "gprtopo_render_shape_map",
        "gprtopo_fuse",
        "gprtopo_iou",
        "gprtopo_last_error_message",
        "GPRTOPO_STATUS_OK",
        "typedef struct GprtopoImage GprtopoImage",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = target_dir().join("libgprtopo_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let exe = dir.path().join("client");
    fs::write(&src, CLIENT).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "client exit {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("0.1 1 0.9 8"));
    assert!(lines.next().unwrap().contains("pixels is null"));
}
