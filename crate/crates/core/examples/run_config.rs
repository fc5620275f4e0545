//! Drive the command layer from an in-memory configuration, as the binary does from a file.
//!
//! `cargo run --example run_config`

use spinphoton::cli::commands;
use spinphoton::cli::RunConfig;

const CONFIG: &str = r#"
mode = "analytical"
output_dir = "target/example-run"

[experiment]
phi_deg = 30.0

[analytical]
r_uu_sq = 0.69
r_dd_sq = 0.37
r_du_sq = 0.06
p_up = 0.51
"#;

fn main() -> spinphoton::Result<()> {
    let cfg = RunConfig::from_toml(CONFIG)?;
    println!("config hash {}", cfg.hash());
    for path in commands::stokes(&cfg)?.into_iter().chain(commands::correlations(&cfg)?) {
        println!("wrote {}", path.display());
    }
    for path in commands::fit(&cfg, Some(&cfg.output_dir.join("stokes.csv")))? {
        println!("wrote {}", path.display());
    }
    print!("{}", std::fs::read_to_string(cfg.output_dir.join("fit_result.txt"))?);
    Ok(())
}
