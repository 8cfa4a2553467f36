use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Record of one run, written as `manifest.json` in the output directory.
pub struct Manifest {
    command: &'static str,
    config: Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
    error: Option<String>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            config: Value::Null,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            error: None,
        }
    }

    pub fn config(&mut self, config: Value) {
        self.config = config;
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        self.inputs.push(path.into());
    }

    pub fn fail(&mut self, message: String) {
        self.error = Some(message);
    }

    /// Creates `name` inside `dir` and registers it as an output.
    pub fn create(&mut self, dir: &Path, name: &str) -> io::Result<BufWriter<fs::File>> {
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(fs::File::create(dir.join(name))?))
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut inputs = Map::new();
        for p in &self.inputs {
            inputs.insert(p.display().to_string(), digest_or_null(p));
        }
        let mut outputs = Map::new();
        for name in &self.outputs {
            outputs.insert(name.clone(), digest_or_null(&dir.join(name)));
        }
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "seed": self.seed,
            "inputs": inputs,
            "outputs": outputs,
            "error": self.error,
        });
        let mut f = BufWriter::new(fs::File::create(dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(&mut f, &doc)?;
        writeln!(f)?;
        f.flush()
    }
}

fn digest_or_null(path: &Path) -> Value {
    match fs::read(path) {
        Ok(bytes) => {
            let hash = Sha256::digest(&bytes);
            let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
            Value::String(format!("sha256:{hex}"))
        }
        Err(_) => Value::Null,
    }
}
