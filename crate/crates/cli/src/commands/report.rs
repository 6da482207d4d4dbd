use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;

use super::ReportArgs;
use crate::config::RunConfig;
use crate::manifest::{Manifest, Run, MANIFEST_FILE};

const TEXT_TABLES: [&str; 2] = ["comparison.txt", "regression.txt"];

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

fn relative(path: &Path, root: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .display()
        .to_string()
}

/// Markdown overview of every run under `root`, in path order.
pub fn render_report(root: &Path) -> anyhow::Result<String> {
    let mut files = Vec::new();
    walk(root, &mut files).with_context(|| format!("scanning {}", root.display()))?;
    files.sort();

    let mut runs = Vec::new();
    for path in &files {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if name == MANIFEST_FILE || name.ends_with(".manifest.json") {
            let text = std::fs::read_to_string(path)?;
            let m: Manifest = serde_json::from_str(&text)
                .with_context(|| format!("parsing manifest {}", path.display()))?;
            if m.command != "report" {
                runs.push((path, m));
            }
        }
    }

    let mut md = format!("# Run report for `{}`\n\n", root.display());
    md.push_str("| manifest | command | seed | started | wall time (s) | outputs |\n");
    md.push_str("|---|---|---|---|---|---|\n");
    for (path, m) in &runs {
        writeln!(
            md,
            "| {} | {} | {} | {} | {:.2} | {} |",
            relative(path, root),
            m.command,
            m.seed,
            m.started_at,
            m.wall_time_secs,
            m.outputs.len()
        )?;
    }

    for path in &files {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        let lang = if name == "summary.json" {
            "json"
        } else if TEXT_TABLES.contains(&name) {
            "text"
        } else {
            continue;
        };
        let body = std::fs::read_to_string(path)?;
        write!(
            md,
            "\n## {}\n\n```{lang}\n{}\n```\n",
            relative(path, root),
            body.trim_end()
        )?;
    }
    Ok(md)
}

pub fn report(
    args: &ReportArgs,
    cfg: &RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    if !args.dir.is_dir() {
        return Err(crate::input_error(format!(
            "{} is not a directory",
            args.dir.display()
        )));
    }
    let mut run = Run::start(name, argv, cfg);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.dir.join("report.md"));
    let md = render_report(&args.dir)?;
    std::fs::write(&out, &md).with_context(|| format!("writing {}", out.display()))?;
    run.output(&out)?;
    run.finish(&out)?;
    Ok(())
}
