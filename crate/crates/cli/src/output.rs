//! Run manifests, file writing and gnuplot scripts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bresse_core::scenario::short_digest;

pub struct Manifest {
    pub scenario: Option<PathBuf>,
    pub subcommand: &'static str,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
}

impl Manifest {
    /// Run inputs; the output directory is deliberately not part of the hash.
    fn body(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        format!(
            "scenario={}\nsubcommand={}\nseed={}\nversion={}\nconfig_hash={}\n",
            opt(self.scenario.as_ref().map(|p| p.display().to_string())),
            self.subcommand,
            opt(self.seed.map(|s| s.to_string())),
            env!("CARGO_PKG_VERSION"),
            opt(self.config_hash.clone()),
        )
    }

    pub fn hash(&self) -> String {
        short_digest(&self.body())
    }

    pub fn write(&self) -> Result<()> {
        let text = format!("{}out={}\nmanifest_hash={}\n", self.body(), self.out.display(), self.hash());
        write_file(&self.out.join("manifest.txt"), &text)
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// CSV body followed by `# key=value` comment lines and the manifest hash.
pub fn write_csv(path: &Path, body: Vec<u8>, comments: &[String], manifest: &str) -> Result<()> {
    let mut text = String::from_utf8(body).context("CSV is not UTF-8")?;
    for c in comments {
        let _ = writeln!(text, "# {c}");
    }
    let _ = writeln!(text, "# manifest={manifest}");
    write_file(path, &text)
}

pub fn trace_plot(csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 1200,500\n\
         set output 'energy.png'\n\
         set multiplot layout 1,2\n\
         set logscale y\n\
         set xlabel 't'\nset ylabel 'E(t)'\n\
         plot '{csv}' using 1:2 skip 1 with lines title 'log E vs t'\n\
         set logscale xy\n\
         set xlabel 'log t'\n\
         plot '{csv}' using ($1 > 0 ? $1 : 1/0):2 skip 1 with lines title 'log E vs log t'\n\
         unset multiplot\n"
    )
}

pub fn sweep_plot(csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 800,600\n\
         set output 'resolvent.png'\n\
         set logscale xy\n\
         set xlabel 'lambda'\nset ylabel '||(i lambda - A_h)^-1||'\n\
         plot '{csv}' using 1:2 skip 1 with linespoints title 'resolvent norm'\n"
    )
}

pub fn spectrum_plot(csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 800,600\n\
         set output 'spectrum.png'\n\
         set xlabel 'Re'\nset ylabel 'Im'\n\
         plot '{csv}' using 1:2 skip 1 with points pt 7 ps 0.4 title 'eigenvalues'\n"
    )
}

pub fn witness_plot(csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 800,600\n\
         set output 'witness.png'\n\
         set logscale xy\n\
         set xlabel 'n'\n\
         plot '{csv}' using 1:9 skip 1 with linespoints title '||V_n||', \\\n     \
         '{csv}' using 1:10 skip 1 with linespoints title '||(i lambda_n - A) V_n||'\n"
    )
}
