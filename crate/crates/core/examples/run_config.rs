//! Drives a task from an inline TOML configuration, as the binary does.

use hypdim::cli::{run, RunConfig};

const CONFIG: &str = r#"
task = "dim"

[model]
kind = "cocycle"
coding = [[1, 1], [1, 0]]
unstable = [[[3.0, 0.5], [0.0, 3.0]], [[4.0, 0.0], [0.0, 4.0]]]
stable = [[[0.3]], [[0.2]]]

[numerics]
k_max = 4
"#;

fn main() -> hypdim::Result<()> {
    let config = RunConfig::from_toml(CONFIG)?;
    let out = std::env::temp_dir().join("hypdim_run_config");
    let outcome = run(&config, &out)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    std::process::exit(outcome.exit_code);
}
