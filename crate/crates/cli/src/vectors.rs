//! Raw-vector directories: one text file per embedding, values separated by
//! whitespace or commas. The id is the file's path relative to the root,
//! without extension, with `/` separators (e.g. `landmark/eiffel`).

use std::fs;
use std::path::{Path, PathBuf};

use latent_guard::Embedding;

use crate::error::CliError;

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    for entry in
        fs::read_dir(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?
    {
        let path = entry?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if hidden {
            continue;
        }
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

pub fn id_for(root: &Path, file: &Path) -> Result<String, CliError> {
    let rel = file
        .strip_prefix(root)
        .expect("file lies under root")
        .with_extension("");
    let parts: Option<Vec<&str>> = rel.components().map(|c| c.as_os_str().to_str()).collect();
    parts
        .map(|p| p.join("/"))
        .ok_or_else(|| CliError::input(format!("{}: path is not valid UTF-8", file.display())))
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>, String> {
    let values = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("`{t}` is not a finite number")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("no values".into());
    }
    Ok(values)
}

/// All embeddings under `dir`, sorted by id.
pub fn read_vector_dir(dir: &Path) -> Result<Vec<Embedding>, CliError> {
    let mut files = Vec::new();
    collect_files(dir, &mut files)?;
    if files.is_empty() {
        return Err(CliError::input(format!(
            "{}: no vector files found",
            dir.display()
        )));
    }
    let mut out = Vec::with_capacity(files.len());
    for file in &files {
        let text = fs::read_to_string(file)
            .map_err(|e| CliError::input(format!("{}: {e}", file.display())))?;
        let vec =
            parse_vector(&text).map_err(|e| CliError::input(format!("{}: {e}", file.display())))?;
        out.push(Embedding::new(id_for(dir, file)?, vec));
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// Writes `emb` under `dir` at `<id>.txt`, one value per line.
pub fn write_vector(dir: &Path, emb: &Embedding) -> Result<(), CliError> {
    let path = dir.join(format!("{}.txt", emb.id));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = String::with_capacity(emb.vec.len() * 20);
    for v in &emb.vec {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    fs::write(&path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_separators() {
        assert_eq!(
            parse_vector("1, 2.5\n-3e-1\t4").unwrap(),
            vec![1.0, 2.5, -0.3, 4.0]
        );
        assert!(parse_vector("  \n").is_err());
        assert!(parse_vector("1 nan").is_err());
        assert!(parse_vector("1 x").is_err());
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let embs = vec![
            Embedding::new("b/two", vec![0.1, -2.0, 1e-300]),
            Embedding::new("a", vec![1.0 / 3.0, 0.0, 5.0]),
        ];
        for e in &embs {
            write_vector(dir.path(), e).unwrap();
        }
        fs::write(dir.path().join(".hidden"), "x").unwrap();
        let back = read_vector_dir(dir.path()).unwrap();
        assert_eq!(back, vec![embs[1].clone(), embs[0].clone()]);
    }

    #[test]
    fn empty_directory_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(read_vector_dir(dir.path()).unwrap_err().code(), 2);
    }
}
