use std::path::Path;
use std::process::Command;

struct Run {
    code: i32,
    comment: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    raw: String,
}

impl Run {
    fn col(&self, name: &str) -> Vec<&str> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].as_str()).collect()
    }

    fn floats(&self, name: &str) -> Vec<f64> {
        self.col(name).iter().map(|s| s.parse().unwrap()).collect()
    }
}

fn pqbundle(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_pqbundle")).args(args).output().unwrap();
    let raw = String::from_utf8(out.stdout).unwrap();
    let (comment, body) = raw.split_once('\n').unwrap_or(("", ""));
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().map(|h| h.iter().map(String::from).collect()).unwrap_or_default();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    Run {
        code: out.status.code().unwrap_or(-1),
        comment: comment.to_string(),
        header,
        rows,
        raw,
    }
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn presets_listed() {
    let r = pqbundle(&["presets"]);
    assert_eq!(r.code, 0);
    assert!(r.comment.starts_with("# config_hash="));
    assert!(r.col("name").contains(&"lagrangian_rk_in_r2k"));
    assert!(r.rows.len() >= 6);
}

#[test]
fn base_geometry_columns() {
    let r = pqbundle(&["base-geometry", "--preset", "plane_r2_in_r4"]);
    assert_eq!(r.code, 0);
    for c in ["scalar", "rperp_max", "R_01_01"] {
        assert!(r.floats(c).iter().all(|&v| v == 0.0), "{c}");
    }
    let r = pqbundle(&["base-geometry", "--preset", "helix_r1_in_r3"]);
    assert_eq!(r.code, 0);
    assert!(r.floats("A_0_01").iter().any(|v| v.abs() > 1e-3));
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "samples = 3",
        "[samples]\ncount = 0",
        "[pq]\npairs = [[1.0, -1.0]]",
        "[submanifold]\npreset = \"no_such_thing\"",
        "[submanifold]\ndim_base = 1\ndomain = [[0.0, 1.0]]\ncomponents = [[{ coeff = 1.0, factors = [\"tan\"] }], []]",
        "[[[",
    ];
    for (i, text) in cases.iter().enumerate() {
        let p = config(dir.path(), &format!("c{i}.toml"), text);
        let r = pqbundle(&["base-geometry", "--config", &p]);
        assert_eq!(r.code, 2, "{text}");
        assert!(r.raw.is_empty());
    }
    assert_eq!(pqbundle(&["base-geometry"]).code, 2);
    assert_eq!(pqbundle(&["verify", "--jobs", "0"]).code, 2);
    assert_eq!(pqbundle(&["verify", "--config", "/nonexistent.toml"]).code, 2);
    assert_eq!(pqbundle(&["frobnicate"]).code, 2);
}

#[test]
fn user_chart() {
    let dir = tempfile::tempdir().unwrap();
    // Helix written out by hand; must match the preset.
    let p = config(
        dir.path(),
        "helix.toml",
        r#"
[submanifold]
name = "my_helix"
dim_base = 1
domain = [[-3.0, 3.0]]
components = [[{ coeff = 1.0, factors = ["cos"] }], [{ coeff = 1.0, factors = ["sin"] }], [{ coeff = 1.0, factors = ["u"] }]]
"#,
    );
    let r = pqbundle(&["curvature-table", "--config", &p]);
    assert_eq!(r.code, 0);
    let sc = r.floats("scalar");
    let ss = r.floats("scalar_from_sectionals");
    for (a, b) in sc.iter().zip(&ss) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn curvature_table_values() {
    let r = pqbundle(&["curvature-table", "--preset", "curve_in_r2"]);
    assert_eq!(r.code, 0);
    assert!(r.floats("scalar").iter().all(|v| v.abs() < 1e-12));

    let r = pqbundle(&["curvature-table", "--preset", "graph_surface_r4"]);
    assert_eq!(r.code, 0);
    let (p, q, s, base) = (r.floats("p"), r.floats("q"), r.floats("scalar"), r.floats("base_scalar"));
    let fibre = r.col("fibre");
    let dp = 2.0;
    let mut zero_rows = 0;
    for i in 0..r.rows.len() {
        if fibre[i] == "zero" {
            zero_rows += 1;
            let want = base[i] + dp * (dp - 1.0) * (2.0 * p[i] + q[i]);
            assert!((s[i] - want).abs() < 1e-10, "{} vs {want}", s[i]);
        }
    }
    assert_eq!(zero_rows, 4 * 32);
}

#[test]
fn scan_pq_plane_and_impossible_budget() {
    let dir = tempfile::tempdir().unwrap();
    let p = config(dir.path(), "scan.toml", "[submanifold]\npreset = \"plane_r2_in_r4\"\n[scan]\ntarget = 10.0\n");
    let a = pqbundle(&["scan-pq", "--config", &p]);
    assert_eq!(a.code, 0);
    let sel: Vec<usize> = a.col("selected").iter().enumerate().filter(|(_, s)| **s == "true").map(|(i, _)| i).collect();
    assert_eq!(sel.len(), 1);
    let ms: f64 = a.col("min_scalar")[sel[0]].parse().unwrap();
    assert!(ms > 10.0);
    let b = pqbundle(&["scan-pq", "--config", &p]);
    assert_eq!(a.raw, b.raw);

    let p = config(
        dir.path(),
        "none.toml",
        "[submanifold]\npreset = \"plane_r2_in_r4\"\n[scan]\ntarget = 10.0\np_max = 0.0\nq_max = 0.0\n",
    );
    let r = pqbundle(&["scan-pq", "--config", &p]);
    assert_eq!(r.code, 0);
    assert!(r.col("selected").iter().all(|s| *s == "false"));

    // Codimension one has no estimate.
    assert_eq!(pqbundle(&["scan-pq", "--preset", "sphere_s2_in_r3"]).code, 2);
}

const SMALL_VERIFY: &str = "[samples]\ncount = 4\n";

#[test]
fn verify_exit_codes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p = config(dir.path(), "v.toml", SMALL_VERIFY);
    let a = pqbundle(&["verify", "--config", &p]);
    assert_eq!(a.code, 0);
    let kinds = a.col("kind");
    assert!(kinds.contains(&"adjudication"));
    assert!(a.col("quantity").contains(&"curvature_HHV"));
    let b = pqbundle(&["verify", "--config", &p, "--jobs", "2"]);
    assert_eq!(a.raw, b.raw);

    let p = config(
        dir.path(),
        "bad.toml",
        &format!("{SMALL_VERIFY}[verify]\npresets = [\"graph_surface_r4\"]\nperturb = {{ quantity = \"curvature\", factor = 1.001 }}\n"),
    );
    let r = pqbundle(&["verify", "--config", &p]);
    assert_eq!(r.code, 1);
    assert!(r.col("verdict").contains(&"fail"));
}

#[test]
fn seed_is_recorded() {
    let r = pqbundle(&["base-geometry", "--preset", "plane_r2_in_r4", "--seed", "7"]);
    assert!(r.comment.ends_with("seed=7"));
    let s = pqbundle(&["base-geometry", "--preset", "plane_r2_in_r4"]);
    assert_ne!(r.raw, s.raw);
}

#[test]
fn complex_check_table() {
    let r = pqbundle(&["complex-check", "--preset", "lagrangian_rk_in_r2k"]);
    assert_eq!(r.code, 0);
    let (p, q) = (r.floats("p"), r.floats("q"));
    let (kahler, lck, ak) = (r.col("kahler"), r.col("lck"), r.col("almost_kahler"));
    for i in 0..r.rows.len() {
        assert_eq!(lck[i], "pass");
        let zero = p[i] == 0.0 && q[i] == 0.0;
        assert_eq!(kahler[i] == "pass", zero);
        assert_eq!(ak[i] == "pass", zero);
    }
    assert_eq!(pqbundle(&["complex-check", "--preset", "graph_surface_r4"]).code, 2);
}
