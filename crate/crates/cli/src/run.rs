//! Output directory, manifest and exit status of one invocation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use momentshape::io::to_json_string;
use momentshape::Error;
use serde::Serialize;
use serde_json::Value;

/// A failed run: a stable kind tag and a message.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn new(kind: &str, message: String) -> Failure {
        Failure {
            kind: kind.into(),
            message,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::new(e.kind(), e.to_string())
    }
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
enum Status<'a> {
    Ok,
    Failed { error: &'a Failure },
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Value,
    /// Defaults filled in while running.
    resolved: &'a BTreeMap<String, Value>,
    outputs: &'a [String],
    warnings: &'a [String],
    #[serde(flatten)]
    status: Status<'a>,
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    error: &'a Failure,
}

pub struct Run {
    command: &'static str,
    dir: PathBuf,
    config: Value,
    resolved: BTreeMap<String, Value>,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

impl Run {
    pub fn new(command: &'static str, dir: &Path, config: Value) -> Result<Run, Error> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(Run {
            command,
            dir: dir.to_path_buf(),
            config,
            resolved: BTreeMap::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn resolve(&mut self, key: &str, value: impl Into<Value>) {
        self.resolved.insert(key.into(), value.into());
    }

    pub fn warn(&mut self, w: String) {
        self.warnings.push(w);
    }

    /// Writes `name` inside the output directory.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.into());
        Ok(())
    }

    /// Writes to a path given on the command line.
    pub fn write_path(&mut self, path: &Path, contents: &str) -> Result<(), Error> {
        std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Writes `error.json` on failure, then the manifest, and maps the
    /// outcome to an exit status.
    pub fn finish(mut self, result: Result<(), Failure>) -> ExitCode {
        if let Err(f) = &result {
            let body = to_json_string(&ErrorObject { error: f }).expect("error serializes");
            print!("{body}");
            if let Err(e) = self.write("error.json", &body) {
                eprintln!("{e}");
            }
        }
        let manifest = Manifest {
            tool: "momentshape",
            version: momentshape::VERSION,
            command: self.command,
            config: &self.config,
            resolved: &self.resolved,
            outputs: &self.outputs,
            warnings: &self.warnings,
            status: match &result {
                Ok(()) => Status::Ok,
                Err(f) => Status::Failed { error: f },
            },
        };
        let name = format!("{}.manifest.json", self.command);
        let body = to_json_string(&manifest).expect("manifest serializes");
        let path = self.dir.join(&name);
        if let Err(e) = std::fs::write(&path, body) {
            return report_fatal(&Failure::new("io", format!("{}: {e}", path.display())));
        }
        match result {
            Ok(()) => ExitCode::SUCCESS,
            Err(_) => ExitCode::FAILURE,
        }
    }
}

/// Prints the error object when no output directory is usable.
pub fn report_fatal(f: &Failure) -> ExitCode {
    print!("{}", to_json_string(&ErrorObject { error: f }).expect("error serializes"));
    ExitCode::FAILURE
}
