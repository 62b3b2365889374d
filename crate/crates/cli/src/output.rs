use std::fs;
use std::io::Write;
use std::path::Path;

use freerg_core::schema::MeasureJson;

use crate::error::CliError;

/// Writes `contents` next to `path` and renames it into place, so readers
/// never see a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(contents.as_bytes())?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A measure given inline as JSON or as a path to a JSON file.
pub fn read_measure(arg: &str) -> Result<MeasureJson, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| CliError::Input(format!("cannot read measure {arg}: {e}")))?
    };
    Ok(MeasureJson::parse(&text)?)
}

/// Full double precision, fixed layout.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("a.csv");
        write_atomic(&path, "one\n").unwrap();
        write_atomic(&path, "two\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two\n");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn measures_inline_or_from_file() {
        assert!(read_measure(r#"{"type":"semicircle"}"#).is_ok());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, r#"{"type":"arcsine","halfwidth":2}"#).unwrap();
        assert!(read_measure(path.to_str().unwrap()).is_ok());
        assert_eq!(read_measure("/no/such/file").unwrap_err().exit_code(), 2);
        assert_eq!(read_measure("{oops").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn number_format() {
        assert_eq!(num(0.5), "5.0000000000000000e-1");
        assert_eq!(num(0.0), "0.0000000000000000e0");
    }
}
