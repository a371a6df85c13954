use std::fs;
use std::path::Path;

use iapvq::imageio::{read_pgm, Image};
use iapvq::TrainingSet;

use crate::error::{CliError, CliResult};

pub enum Input {
    Image(Image),
    Vectors(TrainingSet),
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(CliError::io(path))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(path, bytes).map_err(CliError::io(path))
}

pub fn load_image(path: &Path) -> CliResult<Image> {
    read_pgm(&read_bytes(path)?).map_err(CliError::from_file(path))
}

/// A PGM when the file starts with `P2` or `P5`, otherwise a vector file.
pub fn load_input(path: &Path) -> CliResult<Input> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        return Ok(Input::Image(read_pgm(&bytes).map_err(CliError::from_file(path))?));
    }
    let text = String::from_utf8(bytes).map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        message: "neither a PGM image nor a UTF-8 vector file".into(),
    })?;
    parse_vectors(&text)
        .map(Input::Vectors)
        .map_err(|message| CliError::Parse {
            path: path.to_path_buf(),
            message,
        })
}

/// One vector per line, components separated by whitespace. Blank lines and
/// text after `#` are ignored.
pub fn parse_vectors(text: &str) -> Result<TrainingSet, String> {
    let mut dim = None;
    let mut data = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default();
        let mut count = 0;
        for token in line.split_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|_| format!("line {}: invalid number {token:?}", lineno + 1))?;
            if !v.is_finite() {
                return Err(format!("line {}: non-finite value {token:?}", lineno + 1));
            }
            data.push(v);
            count += 1;
        }
        if count == 0 {
            continue;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(format!("line {}: expected {d} components, found {count}", lineno + 1))
            }
            Some(_) => {}
        }
    }
    let dim = dim.ok_or("no vectors found")?;
    TrainingSet::new(dim, data).map_err(|e| e.to_string())
}

pub fn format_vectors(ts: &TrainingSet) -> String {
    let mut out = String::new();
    for v in ts.iter() {
        let line: Vec<String> = v.iter().map(f64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_files_roundtrip() {
        let ts = parse_vectors("# header\n1 2.5\n\n-3 4e2 # trailing\n").unwrap();
        assert_eq!(ts.dim(), 2);
        assert_eq!(ts.as_flat(), &[1.0, 2.5, -3.0, 400.0]);
        assert_eq!(parse_vectors(&format_vectors(&ts)).unwrap(), ts);
    }

    #[test]
    fn vector_file_errors() {
        assert!(parse_vectors("1 2\n3\n").unwrap_err().contains("line 2"));
        assert!(parse_vectors("1 x\n").unwrap_err().contains("invalid number"));
        assert!(parse_vectors("# nothing\n").is_err());
        assert!(parse_vectors("inf 1\n").is_err());
    }
}
