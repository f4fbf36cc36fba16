use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::run::{Bundle, Verdict};
use crate::error::{Error, Result};
use crate::phase_space::{Axis, FieldKind, PhaseSpaceField};

pub const FIELD_MAGIC: &str = "# psdlim field v1";

pub const REPORT_COLUMNS: [&str; 23] = [
    "time",
    "S_VN",
    "S_Sh",
    "S_VN_A",
    "S_Sh_A",
    "S_Sh_g",
    "max_rho_A",
    "max_Q",
    "S_Wehrl",
    "D_VN",
    "D_Sh",
    "D_VN_A",
    "D_Sh_A",
    "D_Sh_g",
    "D_W",
    "gain_D_VN",
    "gain_D_Sh",
    "gain_D_VN_A",
    "gain_D_Sh_A",
    "gain_D_Sh_g",
    "gain_max_rho_A",
    "gain_max_Q",
    "gain_D_W",
];

/// 17 significant digits, platform independent.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn hash_line(hash: &str) -> String {
    format!("# config_hash: {hash}\n")
}

fn csv(hash: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = hash_line(hash);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn report_csv(bundle: &Bundle) -> String {
    let first = bundle.reports[0];
    let rows = bundle.reports.iter().map(|r| {
        let g = r.gains(&first);
        [
            r.time, r.s_vn, r.s_sh, r.s_vn_a, r.s_sh_a, r.s_sh_g, r.max_rho_a, r.max_q, r.s_wehrl,
            r.d_vn(), r.d_sh(), r.d_vn_a(), r.d_sh_a(), r.d_sh_g(), r.d_wehrl(),
            g.d_vn, g.d_sh, g.d_vn_a, g.d_sh_a, g.d_sh_g, g.max_rho_a, g.max_q, g.d_wehrl,
        ]
        .map(num)
        .to_vec()
    });
    csv(&bundle.config_hash, &REPORT_COLUMNS, rows)
}

pub fn invariants_csv(bundle: &Bundle) -> String {
    let rows = bundle.invariants.iter().map(|r| {
        [r.time, r.trace_error, r.hermiticity, r.eigenvalue_drift, r.s_vn_drift].map(num).to_vec()
    });
    csv(
        &bundle.config_hash,
        &["time", "trace_error", "hermiticity", "eigenvalue_drift", "S_VN_drift"],
        rows,
    )
}

pub fn pmd_gains_csv(bundle: &Bundle) -> String {
    let rows = bundle.pmd_gains.iter().map(|g| {
        vec![g.label.clone(), num(g.initial_max), num(g.final_max), num(g.gain())]
    });
    csv(&bundle.config_hash, &["field", "initial_max", "final_max", "gain"], rows)
}

pub fn verdict_text(bundle: &Bundle) -> String {
    let mut out = hash_line(&bundle.config_hash);
    for a in &bundle.config.assumptions {
        let _ = writeln!(out, "# assumption: {a}");
    }
    match &bundle.verdict {
        Verdict::Hold(v) => {
            let _ = writeln!(out, "verdict: all bounds hold (M = {})", v.levels);
            let g = v.max_gains;
            for (name, x) in [
                ("max_rho_A", g.max_rho_a),
                ("D_VN_A", g.d_vn_a),
                ("D_Sh_A", g.d_sh_a),
                ("max_Q", g.max_q),
                ("D_Sh", g.d_sh),
                ("D_VN", g.d_vn),
                ("D_W", g.d_wehrl),
                ("D_Sh_g (pseudo-PSD, not checked)", g.d_sh_g),
            ] {
                let _ = writeln!(out, "max_gain {name}: {}", num(x));
            }
        }
        Verdict::Violation(msg) => {
            let _ = writeln!(out, "verdict: {msg}");
        }
        Verdict::NotApplicable => {
            out.push_str("verdict: not applicable (initial state is not diagonal in |p, i>)\n");
        }
    }
    out
}

pub fn field_text(hash: &str, label: &str, time: f64, field: &PhaseSpaceField) -> String {
    let (r, p) = (field.r_axis, field.p_axis);
    let mut out = String::with_capacity(24 * field.values().len() + 256);
    let _ = writeln!(out, "{FIELD_MAGIC}");
    let _ = writeln!(out, "# kind: {}", field.kind.name());
    let _ = writeln!(out, "# label: {label}");
    let _ = writeln!(out, "# time: {}", num(time));
    let _ = writeln!(out, "# config_hash: {hash}");
    let _ = writeln!(out, "# r_axis: {} {} {}", r.len, num(r.origin), num(r.step));
    let _ = writeln!(out, "# p_axis: {} {} {}", p.len, num(p.origin), num(p.step));
    for ip in 0..p.len {
        let row: Vec<String> = field.row(ip).iter().map(|&v| num(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Writes every artifact of `bundle` into `dir`, returning the file paths.
pub fn write_bundle(bundle: &Bundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let hash = &bundle.config_hash;
    // The written config is location independent, like its hash.
    let mut canonical = bundle.config.clone();
    canonical.output.dir.clear();
    let mut files = vec![
        ("config.toml".to_string(), format!("{}{}", hash_line(hash), canonical.to_toml())),
        ("report.csv".to_string(), report_csv(bundle)),
        ("invariants.csv".to_string(), invariants_csv(bundle)),
        ("pmd_gains.csv".to_string(), pmd_gains_csv(bundle)),
        ("verdict.txt".to_string(), verdict_text(bundle)),
    ];
    for f in &bundle.fields {
        files.push((format!("{}.field", f.label), field_text(hash, &f.label, f.time, &f.field)));
    }
    for prof in &bundle.profiles {
        let rows = prof.points.iter().map(|&(x, y)| vec![num(x), num(y)]);
        files.push((format!("{}.csv", prof.label), csv(hash, &[prof.coordinate, "density"], rows)));
    }
    let mut paths = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Malformed { path: path.display().to_string(), reason: reason.into() }
}

fn parse_num(path: &Path, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| malformed(path, format!("bad number `{s}`")))
}

/// Field file contents: label, time, config hash and the field itself.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub label: String,
    pub time: f64,
    pub config_hash: String,
    pub field: PhaseSpaceField,
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(FIELD_MAGIC) {
        return Err(malformed(path, "missing field header"));
    }
    let mut meta = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| malformed(path, "truncated header"))?;
        line.strip_prefix(&format!("# {key}: "))
            .map(str::to_string)
            .ok_or_else(|| malformed(path, format!("expected `{key}` header")))
    };
    let kind = meta("kind")?;
    let kind = FieldKind::parse(&kind).ok_or_else(|| malformed(path, format!("unknown kind `{kind}`")))?;
    let label = meta("label")?;
    let time = parse_num(path, &meta("time")?)?;
    let config_hash = meta("config_hash")?;
    let mut axis = |key: &str| -> Result<Axis> {
        let s = meta(key)?;
        let parts: Vec<&str> = s.split_whitespace().collect();
        let [n, o, d] = parts.as_slice() else {
            return Err(malformed(path, format!("bad `{key}`")));
        };
        let n = n.parse().map_err(|_| malformed(path, format!("bad `{key}` length")))?;
        Ok(Axis::new(n, parse_num(path, o)?, parse_num(path, d)?))
    };
    let r_axis = axis("r_axis")?;
    let p_axis = axis("p_axis")?;
    let values = lines
        .flat_map(str::split_whitespace)
        .map(|s| parse_num(path, s))
        .collect::<Result<Vec<f64>>>()?;
    let field = PhaseSpaceField::new(kind, r_axis, p_axis, values).map_err(|e| malformed(path, e.to_string()))?;
    Ok(FieldFile { label, time, config_hash, field })
}

/// CSV written by this module: the header row and the cells, with the
/// config-hash comment stripped.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub config_hash: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    let mut config_hash = None;
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
        if let Some(h) = line.strip_prefix("# config_hash: ") {
            config_hash = Some(h.to_string());
        }
    }
    let header = lines
        .next()
        .ok_or_else(|| malformed(path, "missing header row"))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    if rows.iter().any(|r| r.len() != header.len()) {
        return Err(malformed(path, "ragged rows"));
    }
    Ok(Table { config_hash, header, rows })
}
